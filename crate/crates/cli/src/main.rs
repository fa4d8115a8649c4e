use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mgalerkin::harness::{self, load_config, ExperimentConfig};
use mgalerkin::{Error, LadderOptions};

/// Multi-level modified Galerkin experiments for 2D periodic Navier-Stokes.
#[derive(Parser, Debug)]
#[command(name = "mgalerkin", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One ladder run with its error table against the reference.
    Run(Common),
    /// Cutoff sweep: errors.csv, eoc.json and per-run manifests.
    Converge(Common),
    /// Small-scale norms of the reference along the sweep.
    Diag(Common),
    /// Quick invariant checks.
    Selftest,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Highest ladder level K.
    #[arg(long)]
    levels: Option<usize>,
    /// Seed of a random initial state.
    #[arg(long)]
    seed: Option<u64>,
    /// Reconstruct the highest level's small scales only at the final time.
    #[arg(long)]
    postprocess_only: bool,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), Error> {
        let mut cfg = load_config(&self.config)?;
        if let Some(k) = self.levels {
            cfg.problem.levels = k;
        }
        if self.seed.is_some() {
            cfg.seed_override = self.seed;
        }
        cfg.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.as_ref().map(|d| cfg.base_dir.join(d)))
            .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
        Ok((cfg, out))
    }
}

fn run(cmd: Command) -> Result<ExitCode, Error> {
    match cmd {
        Command::Run(c) => {
            let (cfg, out) = c.load()?;
            let opts = LadderOptions {
                postprocess_only: c.postprocess_only,
            };
            let res = harness::run_to_dir(&cfg, opts, &out)?;
            for row in &res.table.rows {
                println!("k={} {} err_T={:.3e} err_sup={:.3e}", row.k, row.norm, row.err_t, row.err_sup);
            }
            report(&out);
        }
        Command::Converge(c) => {
            let (cfg, out) = c.load()?;
            let res = harness::converge_to_dir(&cfg, &out)?;
            for f in &res.eoc.fits {
                println!(
                    "k={} {} {:?}: slope {:.3} ({} points, L2 prediction {:.2})",
                    f.k, f.norm, f.metric, f.slope, f.points, f.predicted_l2_slope
                );
            }
            report(&out);
        }
        Command::Diag(c) => {
            let (cfg, out) = c.load()?;
            let d = harness::diag_to_dir(&cfg, &out)?;
            println!("slopes vs delta: {:?}", d.slopes);
            report(&out);
        }
        Command::Selftest => {
            let checks = mgalerkin::selftest::run_all();
            let mut failed = false;
            for c in &checks {
                println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed |= !c.passed;
            }
            if failed {
                eprintln!("selftest failed");
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn report(out: &Path) {
    println!("results written to {}", out.display());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
