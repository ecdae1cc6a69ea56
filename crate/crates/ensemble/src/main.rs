use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mipt_ensemble::analysis::{self, CollapseOptions, DecayRecord, FitWindow, RawRecord, StatsRecord};
use mipt_ensemble::export;
use mipt_ensemble::runner;
use mipt_ensemble::{Error, GateChoice, Result, RunConfig, RunHeader, Shard};
use mipt_scaling::collapse::linspace;

#[derive(Parser)]
#[command(name = "mipt", version, about = "Monitored-circuit ensembles and their scaling analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run (or resume) an ensemble shard and export its aggregates.
    Simulate(SimulateArgs),
    /// Merge aggregate files of one run and export the result.
    Merge(MergeArgs),
    /// Fit decay exponents from decay.csv files.
    Analyze(AnalyzeArgs),
    /// Tripartite-information crossing, collapse and bootstrap from stats.csv files.
    Collapse(CollapseArgs),
    /// Write entanglement-weighted grids from aggregate files.
    Ewg(MergeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GateArg {
    Mms,
    Haar,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of qubits (even).
    #[arg(long)]
    n: usize,
    /// Bulk measurement probability.
    #[arg(long)]
    p: f64,
    /// Circuit depth in units of N periods.
    #[arg(long, default_value_t = 1.0)]
    periods_multiplier: f64,
    #[arg(long, value_enum, default_value = "mms")]
    gate_ensemble: GateArg,
    /// Measurement probability of the final layer.
    #[arg(long, default_value_t = 0.5)]
    final_layer_prob: f64,
    /// Total realizations over all shards.
    #[arg(long)]
    circuits: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// This process's shard as `i/m`, 1-based.
    #[arg(long, default_value = "1/1")]
    shard: String,
    /// `metric[:k=K][:sym|:asym][:x=A|:x=A..B][:ewg]` items separated by `;`.
    #[arg(long)]
    observables: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    checkpoint_every: u64,
    /// Keep per-realization values (needed for bootstrap errors).
    #[arg(long)]
    keep_raw: bool,
}

#[derive(Args)]
struct MergeArgs {
    /// Aggregate files to combine.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// decay.csv files, any number of sizes.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Lower end of the fit window in d (needs --d-max).
    #[arg(long, requires = "d_max")]
    d_min: Option<f64>,
    #[arg(long, requires = "d_min")]
    d_max: Option<f64>,
    /// Fit the given number of largest-d points instead.
    #[arg(long, conflicts_with_all = ["d_min", "d_max"])]
    tail: Option<usize>,
    /// Report file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CollapseArgs {
    /// stats.csv files covering at least two sizes.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// raw.csv files for the bootstrap.
    #[arg(long, num_args = 1..)]
    raw: Vec<PathBuf>,
    #[arg(long)]
    pc_min: Option<f64>,
    #[arg(long)]
    pc_max: Option<f64>,
    #[arg(long, default_value_t = 61)]
    pc_steps: usize,
    #[arg(long, default_value_t = 0.5)]
    nu_min: f64,
    #[arg(long, default_value_t = 3.0)]
    nu_max: f64,
    #[arg(long, default_value_t = 51)]
    nu_steps: usize,
    /// Bootstrap resamples (0 disables).
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    /// Draws per (N, p) in each resample.
    #[arg(long, default_value_t = 1000)]
    subsample: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let header = RunHeader {
        n_qubits: a.n,
        p_measure: a.p,
        periods_multiplier: a.periods_multiplier,
        gate_ensemble: match a.gate_ensemble {
            GateArg::Mms => GateChoice::Mms,
            GateArg::Haar => GateChoice::Haar,
        },
        final_layer_measure_prob: a.final_layer_prob,
        master_seed: a.seed,
        circuits_total: a.circuits,
        observables: a.observables,
        keep_raw: a.keep_raw,
    };
    let config =
        RunConfig { header, shard: Shard::parse(&a.shard)?, out_dir: a.out, checkpoint_every: a.checkpoint_every };
    let acc = runner::run_shard(&config)?;
    log::info!(
        "{} realizations ({} discarded), {} SDP solves, {} unconverged",
        acc.counters.realizations,
        acc.counters.discarded_realizations,
        acc.counters.sdp_solves,
        acc.counters.unconverged_sdp
    );
    Ok(())
}

fn merge(a: MergeArgs) -> Result<()> {
    let acc = runner::merge_files(&a.inputs)?;
    runner::finish(&a.out, &acc)?;
    if !acc.is_complete() {
        log::warn!("merged aggregate covers {} of {} realizations", acc.covered_count(), acc.header.circuits_total);
    }
    runner::check_budget(&acc)
}

fn ewg(a: MergeArgs) -> Result<()> {
    let acc = runner::merge_files(&a.inputs)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let written = export::write_ewg(&a.out, &acc)?;
    if written.is_empty() {
        return Err(Error::Config("no observable was run with :ewg".into()));
    }
    Ok(())
}

fn emit(out: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    match out {
        Some(path) => export::write_json(path, value),
        None => {
            let text = serde_json::to_string_pretty(value).map_err(|e| Error::format("<stdout>", e.to_string()))?;
            println!("{text}");
            Ok(())
        }
    }
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let rows: Vec<DecayRecord> = analysis::read_many(&a.inputs)?;
    let window = match (a.d_min, a.d_max, a.tail) {
        (Some(d_min), Some(d_max), _) => FitWindow::Range { d_min, d_max },
        (_, _, Some(count)) => FitWindow::Tail { count },
        _ => FitWindow::Default,
    };
    let report = analysis::analyze(&rows, window)?;
    for v in &report.bound_violations {
        log::warn!("exponent bound violated: {} (alpha = {:.4})", v.rule, v.alpha);
    }
    emit(a.out.as_deref(), &report)
}

fn collapse(a: CollapseArgs) -> Result<()> {
    let rows: Vec<StatsRecord> = analysis::read_many(&a.inputs)?;
    let curves = analysis::tmi_curves(&rows)?;
    if curves.len() < 2 {
        return Err(Error::Config(format!("{} system sizes with TMI data, need at least 2", curves.len())));
    }
    let (lo, hi) = curves
        .iter()
        .filter_map(|c| c.p_range())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)));
    let raw_rows: Vec<RawRecord> = analysis::read_many(&a.raw)?;
    let opts = CollapseOptions {
        p_c_grid: linspace(a.pc_min.unwrap_or(lo), a.pc_max.unwrap_or(hi), a.pc_steps),
        nu_grid: linspace(a.nu_min, a.nu_max, a.nu_steps),
        bootstrap: (a.bootstrap > 0).then_some((a.bootstrap, a.subsample, a.seed)),
    };
    if opts.bootstrap.is_some() && raw_rows.is_empty() {
        return Err(Error::Config("--bootstrap needs --raw files".into()));
    }
    let report = analysis::collapse_analysis(&curves, &analysis::tmi_raw(&raw_rows), &opts);
    emit(a.out.as_deref(), &report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Merge(a) => merge(a),
        Command::Analyze(a) => analyze(a),
        Command::Collapse(a) => collapse(a),
        Command::Ewg(a) => ewg(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
