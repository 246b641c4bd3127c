use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kslab::cli_io::{
    cmd_check, cmd_diagnose, cmd_refine, cmd_simulate, cmd_sweep, exit_code, simulate_failed, RunConfig,
};
use kslab::error::{Error, Result};

#[derive(Parser)]
#[command(name = "kslab", version, about = "Radial parabolic-elliptic Keller-Segel lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report admissibility and derived exponents of a configuration.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// Print only the JSON document.
        #[arg(long)]
        json: bool,
    },
    /// Run one simulation and write its artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `output.dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a directory written by `simulate`.
    Diagnose {
        /// Run directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an (m, k) grid of simulations in parallel.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Grid and time step refinement studies.
    Refine {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn out_dir(cfg: &RunConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| PathBuf::from(&cfg.output.dir))
}

fn json(value: &impl serde::Serialize) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))
}

fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check { config, json: only_json } => {
            let cfg = RunConfig::load(&config)?;
            let summary = cmd_check(&cfg)?;
            if !only_json {
                print!("{}", summary.render());
            }
            println!("{}", json(&summary)?);
            Ok(0)
        }
        Command::Simulate { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out_dir(&cfg, out);
            let report = cmd_simulate(&cfg, &dir)?;
            println!(
                "verdict {:?}, t_last {}, u_max_last {:e}, steps {}, wrote {}",
                report.blowup.verdict,
                report.blowup.t_last,
                report.blowup.u_max_last,
                report.steps,
                dir.display()
            );
            Ok(if simulate_failed(&report) { 2 } else { 0 })
        }
        Command::Diagnose { out } => {
            let report = cmd_diagnose(&out)?;
            for c in &report.checks {
                println!(
                    "{} {:<22} {:>14.6e} (tolerance {})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.margin_or_ratio,
                    c.tolerance
                );
            }
            Ok(if report.all_pass { 0 } else { 3 })
        }
        Command::Sweep { config, out, threads } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out_dir(&cfg, out);
            let rows = cmd_sweep(&cfg, &dir, threads)?;
            println!("{} cells, wrote {}", rows.len(), dir.join("phase.csv").display());
            Ok(0)
        }
        Command::Refine { config, out, threads } => {
            let cfg = RunConfig::load(&config)?;
            let dir = out_dir(&cfg, out);
            for r in cmd_refine(&cfg, &dir, threads)? {
                let order = r.observed_order.map_or("-".to_string(), |o| format!("{o:.3}"));
                println!("{:<22} cells {:>6} dt {:<10e} error {:<12.4e} order {order}", r.study, r.cells, r.dt, r.error);
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("kslab: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
