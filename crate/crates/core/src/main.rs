use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wkhm_core::experiments::{self, ExperimentConfig, Sweep};
use wkhm_core::wkhm::Method;
use wkhm_core::{Error, Result};

/// WKHM clustering and radio-node placement experiments.
#[derive(Parser)]
#[command(name = "wkhm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML campaign config; defaults apply to anything omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    realizations: Option<usize>,
    /// Comma-separated method tags, e.g. WKHM,KM,KC.
    #[arg(long, global = true, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster formations for each configured N.
    Cluster {
        #[command(flatten)]
        common: Common,
    },
    /// Per-method UE metrics and their ECDFs.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Mean SINR over p, q or eps grids.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Sweeps to run (p, q, eps); all by default.
        #[arg(long, value_delimiter = ',')]
        sweep: Option<Vec<String>>,
    },
    /// Paired t-tests of mean throughput against WKHM.
    Ttest {
        #[command(flatten)]
        common: Common,
    },
    /// Convergence diagnostics over BPP initializations.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Number of initializations (overrides converge.runs).
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Every command in sequence.
    All {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, Option<Vec<Method>>)> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    if let Some(r) = common.realizations {
        cfg.realizations = r;
    }
    let methods = match &common.methods {
        Some(list) => Some(list.iter().map(|m| m.trim().parse()).collect::<Result<Vec<Method>>>()?),
        None => None,
    };
    cfg.validate()?;
    Ok((cfg, methods))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Cluster { common } => {
            let (mut cfg, methods) = load(&common)?;
            if let Some(m) = methods {
                cfg.cluster.methods = m;
            }
            let files = experiments::cmd_cluster(&cfg, &cfg.out)?;
            println!("wrote {} files under {}", files.len(), cfg.out.join("cluster").display());
        }
        Command::Simulate { common } => {
            let (mut cfg, methods) = load(&common)?;
            if let Some(m) = methods {
                cfg.methods = m;
            }
            for s in experiments::cmd_simulate(&cfg, &cfg.out)? {
                println!(
                    "{:<5} mean {:.3} Mbps  p5 SINR {:.2} dB  load {:.1}..{:.1}",
                    s.method, s.mean_throughput_mbps, s.p5_sinr_db, s.mean_min_load, s.mean_max_load
                );
            }
        }
        Command::Ablate { common, sweep } => {
            let (cfg, _) = load(&common)?;
            let sweeps = match sweep {
                Some(list) => list.iter().map(|s| s.trim().parse()).collect::<Result<Vec<Sweep>>>()?,
                None => Sweep::ALL.to_vec(),
            };
            for (sweep, rows) in experiments::cmd_ablate(&cfg, &sweeps, &cfg.out)? {
                for (v, s) in rows {
                    println!("{} = {v}: mean SINR {s:.3} dB", sweep.name());
                }
            }
        }
        Command::Ttest { common } => {
            let (mut cfg, methods) = load(&common)?;
            if let Some(m) = methods {
                cfg.methods = m;
            }
            for c in experiments::cmd_ttest(&cfg, &cfg.out)? {
                let p = c.test.p_value.map_or("n/a".to_string(), |p| format!("{p:.3e}"));
                println!("{}-WKHM: t = {:.3}, p = {p}, dof = {}", c.method, c.test.t_stat, c.test.dof);
            }
        }
        Command::Converge { common, runs } => {
            let (mut cfg, _) = load(&common)?;
            if let Some(r) = runs {
                if r == 0 {
                    return Err(Error::config("--runs must be at least 1"));
                }
                cfg.converge.runs = r;
            }
            let diag = experiments::cmd_converge(&cfg, &cfg.out)?;
            for c in &diag.exceedance {
                match c.crossing_index() {
                    Some(t) => println!("delta = {:.3e}: exceedance reaches 0 at t = {t}", c.delta),
                    None => println!("delta = {:.3e}: exceedance never reaches 0", c.delta),
                }
            }
        }
        Command::All { common } => {
            let (cfg, methods) = load(&common)?;
            if methods.is_some() {
                return Err(Error::config("--methods is not accepted by `all`; use a config file"));
            }
            experiments::run_all(&cfg, &cfg.out)?;
            println!("campaign written to {}", cfg.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
