use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use galerkin_swe::driver::{
    benchmark_suite, convergence_suite, fitted_rate, output_root, run, RunManifest, RunStatus, CONVERGENCE_LEVELS,
};
use galerkin_swe::SweError;

/// High-order CG/DG shallow water solver.
///
/// Exit codes: 0 success, 1 configuration or usage error, 2 solver failure,
/// 3 I/O error. Outputs go below $GSWE_OUTPUT_DIR (default ./output).
#[derive(Parser, Debug)]
#[command(name = "gswe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one case from a key=value configuration file.
    Run {
        config: PathBuf,
        /// Overrides in the form --key=value.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Run a predefined study.
    Suite {
        which: Suite,
        /// Overrides applied to every benchmark run (benchmarks only).
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Print the resolved manifest without running.
    Show {
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Suite {
    Convergence,
    Benchmarks,
}

fn exit_code(e: &SweError) -> u8 {
    match e {
        SweError::Config { .. } | SweError::InvalidArgument(_) => 1,
        SweError::Io(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command, &output_root()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn execute(cmd: Command, root: &Path) -> galerkin_swe::Result<u8> {
    match cmd {
        Command::Run { config, overrides } => {
            let m = RunManifest::load(&config, &overrides)?;
            let out = run(&m, root)?;
            println!(
                "{} t={:.6} steps={} mass_drift={:.3e} min_h={:.3e} dir={}",
                m.hash(),
                out.t,
                out.steps,
                out.mass_drift,
                out.min_h,
                out.dir.display()
            );
            if let Some(e) = out.exact_error {
                println!("l2_error={e:.6e}");
            }
            match out.status {
                RunStatus::Completed => Ok(0),
                RunStatus::Failed(msg) => {
                    eprintln!("solver failure: {msg}");
                    Ok(2)
                }
            }
        }
        Command::Show { config, overrides } => {
            let m = RunManifest::load(&config, &overrides)?;
            print!("# manifest {}\n{}", m.hash(), m.to_text());
            Ok(0)
        }
        Command::Suite { which, overrides } => match which {
            Suite::Convergence => {
                if !overrides.is_empty() {
                    return Err(SweError::InvalidArgument(
                        "the convergence suite takes no overrides".into(),
                    ));
                }
                let all = convergence_suite(root, &CONVERGENCE_LEVELS)?;
                for (method, viscous, entries) in &all {
                    let errs: Vec<String> = entries
                        .iter()
                        .map(|c| match &c.error {
                            Ok(e) => format!("{e:.3e}"),
                            Err(_) => "failed".into(),
                        })
                        .collect();
                    let rate = fitted_rate(entries)
                        .map(|f| format!("{:.3}", f.rate))
                        .unwrap_or("n/a".into());
                    println!("{method} viscous={viscous} errors=[{}] rate={rate}", errs.join(", "));
                }
                Ok(0)
            }
            Suite::Benchmarks => {
                let outs = benchmark_suite(root, &overrides)?;
                let mut failed = false;
                for o in &outs {
                    let status = match &o.status {
                        RunStatus::Completed => "completed".to_string(),
                        RunStatus::Failed(m) => {
                            failed = true;
                            format!("failed ({m})")
                        }
                    };
                    println!(
                        "{} {status} t={:.4} steps={} mass_drift={:.3e}",
                        o.dir.display(),
                        o.t,
                        o.steps,
                        o.mass_drift
                    );
                }
                Ok(if failed { 2 } else { 0 })
            }
        },
    }
}
