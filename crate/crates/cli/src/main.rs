use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use nullfrenet_cli::{load, run, sweep, Mode};

/// Null curves in 2+1 and 3+1 Minkowski space: frame extraction,
/// reconstruction, model simulation and verification.
#[derive(Parser)]
#[command(name = "nullfrenet", version)]
struct Args {
    /// Run mode; overrides the mode in the config.
    mode: Mode,
    /// Config file.
    #[arg(long, required_unless_present = "sweep", conflicts_with = "sweep")]
    config: Option<PathBuf>,
    /// Directory of config files to run in parallel.
    #[arg(long)]
    sweep: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match (&args.config, &args.sweep) {
        (Some(path), _) => match load(path, Some(args.mode)).and_then(|cfg| run(&cfg, None)) {
            Ok(files) => {
                for f in files {
                    println!("{}", f.display());
                }
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        (None, Some(dir)) => match sweep(dir, Some(args.mode)) {
            Ok(items) => {
                let mut code = 0;
                for item in items {
                    match item.result {
                        Ok(files) => {
                            println!("ok {} ({} files)", item.config.display(), files.len())
                        }
                        Err(e) => {
                            println!("failed {}: {e}", item.config.display());
                            if code == 0 {
                                code = e.exit_code();
                            }
                        }
                    }
                }
                code
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        (None, None) => unreachable!("clap requires one of --config and --sweep"),
    };
    ExitCode::from(code as u8)
}
