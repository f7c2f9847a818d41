use std::process::ExitCode;

fn main() -> ExitCode {
    let result = lc_gnn_cli::parse_args(std::env::args_os().skip(1)).and_then(lc_gnn_cli::run);
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                println!("{e}");
            } else {
                eprintln!("{e}");
            }
            ExitCode::from(code as u8)
        }
    }
}
