use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which parts of the label-consistency head are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// LC aggregation plus the pairwise regularizer.
    Full,
    /// LC aggregation only (λ forced to 0).
    NoRl,
    /// `Ẑ = Â Z` instead of `P Z`, λ forced to 0.
    NoLcNoRl,
    /// Plain GCN, no head.
    BaseOnly,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::BaseOnly,
        Variant::NoLcNoRl,
        Variant::NoRl,
        Variant::Full,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoRl => "no_rl",
            Variant::NoLcNoRl => "no_lc_no_rl",
            Variant::BaseOnly => "base_only",
        }
    }

    /// Row label used in result tables.
    pub fn display_name(self) -> &'static str {
        match self {
            Variant::Full => "LC-GCN",
            Variant::NoRl => "LC-GCN (w/o RL)",
            Variant::NoLcNoRl => "LC-GCN (w/o LC, w/o RL)",
            Variant::BaseOnly => "GCN*",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Variant::Full),
            "no_rl" => Ok(Variant::NoRl),
            "no_lc_no_rl" => Ok(Variant::NoLcNoRl),
            "base_only" => Ok(Variant::BaseOnly),
            other => Err(Error::InvalidConfig(format!(
                "unknown variant {other:?} (expected full, no_rl, no_lc_no_rl or base_only)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub lambda: f64,
    pub epochs: usize,
    pub pretrain_epochs: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub seed: u64,
    pub variant: Variant,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            weight_decay: 5e-4,
            lambda: 1.0,
            epochs: 1000,
            pretrain_epochs: 200,
            hidden: 16,
            dropout: 0.5,
            seed: 0,
            variant: Variant::Full,
        }
    }
}

/// Regularization weight used for a dataset when none is given: 2.0 for
/// Cora, 1.0 otherwise.
pub fn default_lambda(dataset_name: &str) -> f64 {
    if dataset_name.eq_ignore_ascii_case("cora") {
        2.0
    } else {
        1.0
    }
}

impl TrainConfig {
    pub fn for_dataset(name: &str) -> Self {
        Self {
            lambda: default_lambda(name),
            ..Self::default()
        }
    }

    /// λ actually applied for this variant.
    pub fn effective_lambda(&self) -> f64 {
        match self.variant {
            Variant::Full => self.lambda,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight decay must be non-negative, got {}", self.weight_decay));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be non-negative, got {}", self.lambda));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.hidden == 0 {
            return bad("hidden size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        Ok(())
    }
}
