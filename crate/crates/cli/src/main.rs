//! `spinchain`: run transfer experiments on boundary-controlled XX chains and
//! write reproducible CSV/JSON artifacts.

mod config;
mod error;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{ActuatorChoice, EvaluationChoice, Experiment, ProtocolChoice, RunConfig, ScopeChoice, Setting};
use error::CliError;
use output::{Manifest, ResolvedSummary};

#[derive(Debug, Parser)]
#[command(name = "spinchain", version, about = "Optimal-control excitation transfer in XX spin chains")]
struct Cli {
    /// Worker threads for disorder averages (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Free evolution: peak time and height, plus the receiver population.
    FreeEvolve(RunArgs),
    /// Optimize boundary pulses at a fixed operation time.
    Optimize(RunArgs),
    /// Optimize over a grid of operation times T/N.
    TimeSweep(RunArgs),
    /// Clean and disordered yield versus boundary coupling.
    AlphaSweep(RunArgs),
    /// Disorder-averaged yield of one protocol versus amplitude.
    DisorderSweep(RunArgs),
    /// Optimized and free yields versus chain length.
    LengthScaling(RunArgs),
    /// Print derived quantities and warnings without running.
    Validate {
        /// Experiment to validate for (defaults to the config's, else optimize).
        #[arg(long, value_enum)]
        experiment: Option<Experiment>,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Debug, Args, Default)]
struct RunArgs {
    /// Flat `key = value` config file or a previous manifest.json.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Boundary coupling or `auto`.
    #[arg(long)]
    alpha: Option<Setting>,
    /// Operation time, `peak` or `n`.
    #[arg(long)]
    t: Option<Setting>,
    #[arg(long, value_enum)]
    actuators: Option<ActuatorChoice>,
    #[arg(long)]
    alpha_l: Option<f64>,
    #[arg(long)]
    alpha_r: Option<f64>,
    /// zero | constant:C | random:SEED:AMP | mono:AMP:OMEGA | two-harmonic:AMP:W1:W2
    #[arg(long)]
    guess: Option<String>,
    #[arg(long)]
    mixing: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    stationarity_tol: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    coarse_dt: Option<f64>,
    /// Free-peak search window (defaults to 1.5N).
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    amplitudes: Option<Vec<f64>>,
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    disorder_scope: Option<ScopeChoice>,
    #[arg(long, value_enum)]
    evaluation: Option<EvaluationChoice>,
    #[arg(long, value_enum)]
    protocol: Option<ProtocolChoice>,
    #[arg(long, value_delimiter = ',')]
    t_over_n: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<usize>>,
    /// Output directory (defaults to $SPINCHAIN_OUTPUT_DIR or ./runs).
    #[arg(long)]
    out: Option<PathBuf>,
}

macro_rules! overlay {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $( if let Some(v) = $args.$field { $cfg.$field = v; } )*
    };
}

macro_rules! overlay_opt {
    ($cfg:ident, $args:ident, $($field:ident),*) => {
        $( if let Some(v) = $args.$field { $cfg.$field = Some(v); } )*
    };
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => config::load(path)?,
            None => RunConfig::default(),
        };
        let a = self;
        overlay!(
            c,
            a,
            n,
            alpha,
            t,
            actuators,
            mixing,
            tol,
            max_iters,
            stationarity_tol,
            coarse_dt,
            realizations,
            seed,
            disorder_scope,
            evaluation,
            t_over_n,
            alphas,
            lengths
        );
        overlay_opt!(c, a, alpha_l, alpha_r, guess, dt, t_max, amplitudes, protocol);
        if let Some(out) = a.out {
            c.output = Some(out);
        }
        Ok(c)
    }
}

fn execute(experiment: Experiment, args: RunArgs, threads: usize) -> Result<(), CliError> {
    let start = Instant::now();
    let resolved = config::resolve(args.into_config()?, experiment)?;
    let out = run::run(&resolved)?;
    let dir = output::output_dir(&resolved);
    std::fs::create_dir_all(&dir)?;
    let mut files = vec![];
    for (name, table) in &out.tables {
        output::write_table(&dir.join(name), table)?;
        files.push(name.to_string());
    }
    let manifest = Manifest {
        tool: "spinchain",
        version: env!("CARGO_PKG_VERSION"),
        experiment: experiment.name(),
        config: &resolved.config,
        config_hash: resolved.hash(),
        master_seed: resolved.config.seed,
        resolved: ResolvedSummary {
            alpha: resolved.alpha,
            t: resolved.t,
            peak_window: resolved.window,
        },
        results: out.results,
        files,
        threads,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    output::write_manifest(&dir, &manifest)?;
    println!("{}", out.summary);
    println!("wrote {}", dir.display());
    Ok(())
}

fn validate(experiment: Option<Experiment>, args: RunArgs) -> Result<(), CliError> {
    let config = args.into_config()?;
    let experiment = experiment.or(config.experiment).unwrap_or(Experiment::Optimize);
    let resolved = config::resolve(config, experiment)?;
    let (info, warnings) = run::diagnostics(&resolved);
    for line in info {
        println!("{line}");
    }
    for w in &warnings {
        println!("warning: {w}");
    }
    if warnings.is_empty() {
        println!("ok");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: invalid `threads`: must be >= 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let threads = rayon::current_num_threads();
    let result = match cli.command {
        Command::FreeEvolve(a) => execute(Experiment::FreeEvolve, a, threads),
        Command::Optimize(a) => execute(Experiment::Optimize, a, threads),
        Command::TimeSweep(a) => execute(Experiment::TimeSweep, a, threads),
        Command::AlphaSweep(a) => execute(Experiment::AlphaSweep, a, threads),
        Command::DisorderSweep(a) => execute(Experiment::DisorderSweep, a, threads),
        Command::LengthScaling(a) => execute(Experiment::LengthScaling, a, threads),
        Command::Validate { experiment, args } => validate(experiment, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
