use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use smoluchowski::harness::{
    emit_outputs, run_check, run_compare, run_kernel, run_pde, run_scaling, run_sim, Artifact, ExperimentConfig,
    ScalingBlock,
};
use smoluchowski::kernel::AGridSpec;
use smoluchowski::{Error, Result};

#[derive(Parser)]
#[command(name = "smoluchowski", version, about = "Coagulating Brownian particles and their kinetic limit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config. Defaults to `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Single seed; overrides the config seed list.
    #[arg(long, global = true, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Seed list, `1,2,3` or a half-open range `0..8`.
    #[arg(long, global = true, value_parser = parse_seeds)]
    seeds: Option<SeedList>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the model hypotheses.
    Check,
    /// Tabulate the effective kernel.
    Kernel {
        /// Coupling grid `min:max:points-per-decade`.
        #[arg(long)]
        a_grid: Option<AGridSpec>,
    },
    /// Simulate the particle system.
    Sim {
        /// Snapshot times `t0,t1,...`.
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
    },
    /// Solve the diffusion-coagulation system.
    Pde,
    /// Scaling exponents and conditions.
    Scaling {
        #[arg(long)]
        phi: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        dim: Option<usize>,
        /// Blow-up exponents in place of the critical ones.
        #[arg(long)]
        blowup: bool,
    },
    /// Particle system against the PDE along the eps ladder.
    Compare,
}

#[derive(Clone)]
struct SeedList(Vec<u64>);

fn parse_seeds(s: &str) -> std::result::Result<SeedList, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
        return Ok(SeedList((a..b).collect()));
    }
    s.split(',').map(|t| t.trim().parse().map_err(|e| format!("{e}"))).collect::<std::result::Result<_, _>>().map(SeedList)
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Err(Error::Config("--config is required for this subcommand".into())),
    }
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("summary serialises"));
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let g = cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut cfg = match (&cli.command, g.config.as_deref()) {
        (Command::Scaling { .. }, None) => None,
        (_, path) => Some(load(path)?),
    };
    if let Some(cfg) = cfg.as_mut() {
        if let Some(s) = g.seed {
            cfg.seeds = vec![s];
        }
        if let Some(s) = &g.seeds {
            cfg.seeds = s.0.clone();
        }
    }
    let out = g
        .out
        .or_else(|| cfg.as_ref().and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let artifacts: Vec<Artifact> = match cli.command {
        Command::Check => {
            let (report, a) = run_check(cfg.as_ref().expect("loaded"))?;
            print_json(&report);
            a
        }
        Command::Kernel { a_grid } => {
            let cfg = cfg.as_mut().expect("loaded");
            if a_grid.is_some() {
                cfg.kernel.a_grid = a_grid;
            }
            let (_, a) = run_kernel(cfg)?;
            a
        }
        Command::Sim { snapshots } => {
            let cfg = cfg.as_mut().expect("loaded");
            if let Some(s) = snapshots {
                cfg.sim.horizon = s.iter().cloned().fold(0.0, f64::max);
                cfg.sim.snapshots = s;
            }
            let (summaries, a) = run_sim(cfg)?;
            print_json(&summaries);
            a
        }
        Command::Pde => {
            let (summary, a) = run_pde(cfg.as_ref().expect("loaded"))?;
            print_json(&summary);
            a
        }
        Command::Scaling { phi, eta, dim, blowup } => {
            let base = cfg.as_ref().and_then(|c| c.scaling);
            let block = ScalingBlock {
                phi: phi.or(base.map(|b| b.phi)).ok_or_else(|| Error::Config("--phi is required".into()))?,
                eta: eta.or(base.map(|b| b.eta)).ok_or_else(|| Error::Config("--eta is required".into()))?,
                dim: dim.or(base.map(|b| b.dim)).unwrap_or(3),
                blowup: blowup || base.is_some_and(|b| b.blowup),
            };
            let (report, a) = run_scaling(&block)?;
            print_json(&report);
            a
        }
        Command::Compare => {
            let (report, a) = run_compare(cfg.as_ref().expect("loaded"))?;
            print_json(&report.verdicts);
            println!("monotone: {}", report.monotone);
            a
        }
    };
    emit_outputs(&artifacts, &out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
