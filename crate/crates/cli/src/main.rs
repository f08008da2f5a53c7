use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use online_coreset_cli::{
    run_experiment, write_sensitivity_report, Estimation, ExperimentConfig, HarnessError, Mode,
    Ordering, Problem, Sampler,
};

#[derive(Parser)]
#[command(
    name = "online-coreset",
    version,
    about = "Random-order online learning via coresets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Online (k, z)-clustering.
    Cluster(Flags),
    /// Online rank-k subspace approximation.
    Lowrank(Flags),
    /// Online least-squares regression.
    Regress(Flags),
    /// Average sensitivity of the sampling step.
    Sensitivity(Flags),
}

/// Every flag mirrors a key of the JSON config and wins over it.
#[derive(Args)]
struct Flags {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma list (`1,2,5`) or half-open range (`0..20`).
    #[arg(long, value_parser = parse_seeds)]
    seeds: Option<Seeds>,
    #[arg(long, value_enum)]
    ordering: Option<Ordering>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stage-2 coreset weights without the stage-1 mass; negative center
    /// weights are clamped instead of rescaled.
    #[arg(long)]
    paper_verbatim_weights: bool,
    #[arg(long)]
    const_n1: Option<f64>,
    #[arg(long)]
    const_n2: Option<f64>,
    #[arg(long)]
    const_m: Option<f64>,
    /// Points from a headerless CSV instead of the generator.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Record per-step wall time (makes outputs machine dependent).
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    opt_restarts: Option<usize>,
    /// Turn off loss clipping at 1.
    #[arg(long)]
    no_clip: bool,
    /// Dataset sizes for the sensitivity report.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    sampler: Option<Sampler>,
    /// Draws per selection in the sensitivity report.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_enum)]
    estimation: Option<Estimation>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Clone)]
struct Seeds(Vec<u64>);

fn parse_seeds(s: &str) -> Result<Seeds, String> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
        if a >= b {
            return Err("empty seed range".into());
        }
        return Ok(Seeds((a..b).collect()));
    }
    s.split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|e| format!("{x}: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Seeds)
}

impl Flags {
    fn resolve(self, problem: Problem) -> Result<ExperimentConfig, HarnessError> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        c.problem = problem;
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { c.$field = v; })*
            };
        }
        take!(
            n, d, k, z, epsilon, ordering, mode, out, const_n1, const_n2, const_m, separation,
            noise
        );
        take!(opt_restarts, sizes, sampler, m, estimation, trials);
        if let Some(s) = self.seeds {
            c.seeds = s.0;
        }
        if self.rank.is_some() {
            c.rank = self.rank;
        }
        if self.data.is_some() {
            c.data = self.data;
        }
        c.paper_verbatim_weights |= self.paper_verbatim_weights;
        c.timing |= self.timing;
        if self.no_clip {
            c.clip = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let (problem, flags) = match cli.command {
        Command::Cluster(f) => (Problem::Cluster, f),
        Command::Lowrank(f) => (Problem::Lowrank, f),
        Command::Regress(f) => (Problem::Regress, f),
        Command::Sensitivity(f) => (Problem::Sensitivity, f),
    };
    let config = flags.resolve(problem)?;
    if problem == Problem::Sensitivity {
        let r = write_sensitivity_report(&config)?;
        for p in &r.points {
            println!("n={} beta={} error_bar={}", p.n, p.beta, p.error_bar);
        }
        if let Some(e) = r.exponent {
            println!("exponent={e}");
        }
    } else {
        let s = run_experiment(&config)?;
        println!(
            "{} seeds, median regret {}, median inconsistency {} ({})",
            s.runs.len(),
            s.median_regret,
            s.median_inconsistency,
            s.guarantee
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
