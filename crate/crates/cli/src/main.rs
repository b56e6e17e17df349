mod names;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use texlab::experiments::{
    default_violation_grid, gate_id_sweep, replay_walk, strong_monotonicity_check, sweep_csv, to_csv, walk_csv, Manifest,
    ViolationReport, WalkPlan,
};
use texlab::gateid::{closed_form_averages, detect_cnot, monte_carlo_protocol, LayerSpec};
use texlab::linalg::{haar_unitary, Rng};
use texlab::measures::lower_bound_measure;
use texlab::roof::{roof_trials, OptimizerConfig};
use texlab::Error;

#[derive(Parser, Debug)]
#[command(name = "texlab", version, about = "Resource-theory experiments: gate identification, convex roofs, monotonicity")]
struct Cli {
    /// Worker threads; 0 uses one per core.
    #[arg(long, env = "TEXLAB_THREADS", default_value_t = 0, global = true)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Randomized-input test for a CNOT layer.
    GateId(GateIdArgs),
    /// Convex-roof measure of a state.
    Roof(RoofArgs),
    /// Measure along a random walk of fixed-point channels.
    Monotonicity(WalkArgs),
    /// Strong-monotonicity check of the filter channel.
    Violation(ViolationArgs),
    /// Detection rate of the identification protocol over many bases and states.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Serialize)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent. A manifest is written to `<out>.manifest.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Layer {
    Cnot,
    Single,
}

#[derive(Args, Debug, Serialize)]
struct GateIdArgs {
    #[arg(long, value_enum, default_value_t = Layer::Cnot)]
    layer: Layer,
    /// `random`, `computational`, `THETA,PHI` (Bloch angles of |c⟩) or `failure:MU,NU2`.
    #[arg(long, default_value = "random")]
    basis: String,
    /// `c`, `c-prime`, `psi-plus`, `psi-minus`, `f1` or `bloch:x,y,z`.
    #[arg(long, default_value = "c")]
    psi: String,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, default_value_t = texlab::gateid::DEFAULT_Z_THRESHOLD)]
    z_threshold: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct OptimizerArgs {
    #[arg(long, default_value_t = 500)]
    maxiter: usize,
    #[arg(long, default_value_t = 40)]
    popsize: usize,
    /// Skip the final simplex refinement of the best member.
    #[arg(long)]
    no_polish: bool,
}

impl OptimizerArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            max_iterations: self.maxiter,
            population_size: self.popsize,
            polish: !self.no_polish,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct RoofArgs {
    /// `single`, `texture`, `orth:m`, `incoherent` or `real`.
    #[arg(long, default_value = "incoherent")]
    free_set: String,
    /// Named state (`f1`, `ket4`, `ket:i`, `mixed`, `psi-plus`, `bloch:x,y,z`) or a JSON density file.
    #[arg(long)]
    state: String,
    /// Dimension for named states that need one.
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Ensemble size; defaults to D².
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Also report the fidelity lower bound.
    #[arg(long)]
    lower_bound: bool,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct WalkArgs {
    #[arg(long = "D", default_value_t = 4)]
    d: usize,
    /// Number of free basis states.
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = texlab::channels::DEFAULT_KRAUS_RANK)]
    kraus_rank: usize,
    #[arg(long, default_value_t = 4)]
    rounds: usize,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    #[arg(long, default_value_t = 16)]
    k: usize,
    /// Replay a saved plan (channels and trial seed) instead of drawing one.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct ViolationArgs {
    #[arg(long = "D", required_unless_present = "grid", conflicts_with = "grid")]
    d: Option<usize>,
    #[arg(long, required_unless_present = "grid", conflicts_with = "grid")]
    a: Option<f64>,
    /// Named grid; `default` covers D ∈ {2, 3, 10} with a = 1 − 1/(2D) and the worked examples.
    #[arg(long, value_parser = ["default"])]
    grid: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[arg(long, default_value_t = 20)]
    bases: usize,
    #[arg(long, default_value_t = 12)]
    psi_count: usize,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    #[arg(long, default_value_t = texlab::gateid::DEFAULT_Z_THRESHOLD)]
    z_threshold: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn write_file(path: &Path, contents: &str) -> Outcome<()> {
    std::fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `contents` to `--out` (plus its manifest) or to stdout.
fn emit(common: &Common, command: &Command, contents: &str, started: Instant) -> Outcome<()> {
    match &common.out {
        None => {
            print!("{contents}");
            Ok(())
        }
        Some(path) => {
            write_file(path, contents)?;
            let config = serde_json::to_value(command).expect("serializable config");
            let manifest = Manifest::new(common.seed, config, started.elapsed().as_secs_f64());
            write_file(&sidecar(path, ".manifest.json"), &to_json(&manifest))?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn gate_id(args: &GateIdArgs) -> Outcome<String> {
    let mut rng = Rng::new(args.common.seed);
    let basis = names::basis(&args.basis, &mut rng)?;
    let psi = names::reference_qubit(&args.psi, &basis)?;
    let layer = match args.layer {
        Layer::Cnot => LayerSpec::Cnot(basis.clone()),
        Layer::Single => LayerSpec::single(haar_unitary(2, &mut rng)?)?,
    };
    let estimates = monte_carlo_protocol(&layer, &psi, args.samples, &mut rng)?;
    let detection = detect_cnot(&estimates, args.z_threshold)?;
    let closed_form = match args.layer {
        Layer::Cnot => Some(closed_form_averages(&psi, &basis)?),
        Layer::Single => None,
    };

    #[derive(Serialize)]
    struct Report<'a> {
        layer: Layer,
        basis: &'a texlab::gateid::CnotBasis,
        estimates: &'a texlab::gateid::SigmaEstimates,
        closed_form: Option<texlab::gateid::SigmaEstimates>,
        detection: &'a texlab::gateid::DetectionReport,
    }
    Ok(to_json(&Report { layer: args.layer, basis: &basis, estimates: &estimates, closed_form, detection: &detection }))
}

fn roof(args: &RoofArgs) -> Outcome<String> {
    let rho = names::density(&args.state, args.dim)?;
    let d = rho.dim();
    let free = names::free_set(&args.free_set, d)?;
    let k = args.k.unwrap_or(d * d);
    let config = args.optimizer.config().with_seed(args.common.seed);
    config.validate()?;
    let (results, summary) = roof_trials(&free, &rho, k, &config, args.common.seed, args.trials)?;
    let best = results
        .iter()
        .min_by(|a, b| a.value.value.total_cmp(&b.value.value))
        .expect("at least one trial");
    let lower_bound = if args.lower_bound {
        let mut rng = Rng::derive(args.common.seed, u64::MAX);
        Some(lower_bound_measure(&free, &rho, &OptimizerConfig::lower_bound(), &mut rng)?)
    } else {
        None
    };

    #[derive(Serialize)]
    struct Report<'a> {
        free_set: String,
        dim: usize,
        k: usize,
        trials: usize,
        best: &'a texlab::roof::RoofResult,
        summary: &'a texlab::roof::TrialSummary,
        lower_bound: Option<texlab::measures::MeasureValue>,
    }
    Ok(to_json(&Report {
        free_set: free.label(),
        dim: d,
        k,
        trials: args.trials,
        best,
        summary: &summary,
        lower_bound,
    }))
}

fn monotonicity(args: &WalkArgs) -> Outcome<(String, String)> {
    let plan = match &args.replay {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            WalkPlan::from_json(&text)?
        }
        None => WalkPlan::random(args.d, args.m, args.kraus_rank, args.rounds, &mut Rng::new(args.common.seed))?,
    };
    let records = replay_walk(&plan, args.trials, args.k, &args.optimizer.config())?;
    let body = match args.format {
        Format::Csv => walk_csv(&records),
        Format::Json => to_json(&records),
    };
    Ok((body, plan.to_json()))
}

fn violation(args: &ViolationArgs) -> Outcome<String> {
    let grid = match (args.d, args.a) {
        (Some(d), Some(a)) => vec![(d, a)],
        _ => default_violation_grid(),
    };
    let reports = grid
        .into_iter()
        .map(|(d, a)| strong_monotonicity_check(d, a))
        .collect::<texlab::Result<Vec<ViolationReport>>>()?;
    Ok(match args.format {
        Format::Json => to_json(&reports),
        Format::Csv => to_csv(&reports),
    })
}

fn sweep(args: &SweepArgs) -> Outcome<String> {
    let mut rng = Rng::new(args.common.seed);
    let report = gate_id_sweep(args.bases, args.psi_count, args.samples, args.z_threshold, &mut rng)?;
    for bin in report.cnot_bins.iter().chain(std::iter::once(&report.single)) {
        eprintln!("{:>16}  {:>3}/{:<3} detected", bin.label, bin.detected, bin.cases);
    }
    Ok(match args.format {
        Format::Csv => sweep_csv(&report),
        Format::Json => to_json(&report),
    })
}

fn run(cli: &Cli) -> Outcome<()> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    let started = Instant::now();
    let command = &cli.command;
    match command {
        Command::GateId(a) => emit(&a.common, command, &gate_id(a)?, started),
        Command::Roof(a) => emit(&a.common, command, &roof(a)?, started),
        Command::Violation(a) => emit(&a.common, command, &violation(a)?, started),
        Command::Sweep(a) => emit(&a.common, command, &sweep(a)?, started),
        Command::Monotonicity(a) => {
            let (body, plan) = monotonicity(a)?;
            emit(&a.common, command, &body, started)?;
            if let Some(path) = &a.common.out {
                write_file(&sidecar(path, ".plan.json"), &plan)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) | Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
