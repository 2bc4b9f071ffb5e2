//! Command-line front end: `verify`, `futaki`, `solve`.
//!
//! Exit codes: 0 success, 1 check failure or non-convergence, 2 configuration
//! error, 3 obstruction certificate (no solution exists), 4 Bradlow refusal.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use config::RunConfig;

const USAGE: &str = "\
usage: vortex-sphere <command> [options]

commands:
  verify    run the identity suite and write a pass/fail report
  futaki    sample the obstruction invariant and print the verdict
  solve     run the coupled Newton-Krylov solver

options:
  --config <path>   flat key-value configuration file (defaults apply if absent)
  --out <dir>       output directory (overrides config output_dir and
                    the VORTEX_SPHERE_OUT environment variable; default ./out)
  --seed <int>      replace the configured seed list with a single seed
  --sweep ell       (futaki) tabulate the invariant over ell = 0..N
";

struct Args {
    command: String,
    config_path: Option<String>,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
    sweep_ell: bool,
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    if argv.is_empty() {
        return Err("missing command".into());
    }
    let command = argv[0].clone();
    let mut args = Args {
        command,
        config_path: None,
        out_dir: None,
        seed: None,
        sweep_ell: false,
    };
    let mut it = argv[1..].iter();
    while let Some(flag) = it.next() {
        match flag.as_str() {
            "--config" => {
                args.config_path = Some(it.next().ok_or("--config needs a path")?.clone())
            }
            "--out" => {
                args.out_dir = Some(PathBuf::from(it.next().ok_or("--out needs a directory")?))
            }
            "--seed" => {
                let s = it.next().ok_or("--seed needs an integer")?;
                args.seed = Some(s.parse().map_err(|_| format!("bad seed `{s}`"))?);
            }
            "--sweep" => {
                let what = it.next().ok_or("--sweep needs an argument")?;
                if what != "ell" {
                    return Err(format!("unsupported sweep `{what}` (only `ell`)"));
                }
                args.sweep_ell = true;
            }
            other => return Err(format!("unknown option `{other}`")),
        }
    }
    Ok(args)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{e}\n\n{USAGE}");
            return ExitCode::from(commands::EXIT_CONFIG as u8);
        }
    };

    let mut run = match &args.config_path {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => match RunConfig::parse(&text) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(commands::EXIT_CONFIG as u8);
                }
            },
            Err(e) => {
                eprintln!("cannot read {path}: {e}");
                return ExitCode::from(commands::EXIT_CONFIG as u8);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        run.seeds = vec![seed];
    }

    // Output directory precedence: --out, config, environment, ./out.
    let out_dir = args
        .out_dir
        .or_else(|| run.output_dir.clone())
        .or_else(|| std::env::var_os("VORTEX_SPHERE_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("cannot create output directory {}: {e}", out_dir.display());
        return ExitCode::from(commands::EXIT_CONFIG as u8);
    }

    let config_path = args.config_path.as_deref();
    let code = match args.command.as_str() {
        "verify" => commands::cmd_verify(&run, &out_dir, config_path),
        "futaki" => commands::cmd_futaki(&run, &out_dir, config_path, args.sweep_ell),
        "solve" => commands::cmd_solve(&run, &out_dir, config_path),
        other => {
            eprintln!("unknown command `{other}`\n\n{USAGE}");
            commands::EXIT_CONFIG
        }
    };
    ExitCode::from(code as u8)
}
