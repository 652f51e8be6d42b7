use std::process::ExitCode;

use igatopt_cli::{execute, exit_code, parse_cli, Invocation};

fn main() -> ExitCode {
    let cfg = match parse_cli(std::env::args_os()) {
        Ok(Invocation::Run(cfg)) => cfg,
        Ok(Invocation::Print(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let stdout = std::io::stdout();
    match execute(&cfg, &mut stdout.lock()) {
        Ok(result) => {
            let c = result.final_compliance().unwrap_or(f64::NAN);
            if result.converged {
                eprintln!(
                    "converged after {} iterations, c = {c:.4}",
                    result.iterations()
                );
            } else {
                eprintln!(
                    "iteration cap reached after {} iterations, c = {c:.4}",
                    result.iterations()
                );
            }
            ExitCode::from(exit_code(&result) as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
