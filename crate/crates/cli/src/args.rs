use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use fpsearch::analytic::{
    expected_ratio_closed, solve_stop_probability, StopAngle, TargetFraction,
};
use fpsearch::harness::{Algorithm, DEFAULT_P_GRID};
use fpsearch::search::EngineMode;

use crate::error::{CliError, CliResult};
use crate::output::round12;
use crate::overlay::{resolve, resolve_seed, Overlay};
use crate::params::{execute, load_manifest, CommandParams, ProblemSpec, SimParams};

/// Batch driver for the measurement-stopped search simulator.
#[derive(Parser, Debug)]
#[command(name = "fpsearch", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the threshold calibration table (three cases x three stop
    /// probabilities), optionally as CSV
    Table1(Table1Args),
    /// Evaluate the closed-form counter ratio: forward from --g, inverse
    /// from --ratio
    Analytic(AnalyticArgs),
    /// Monte-Carlo batch of full searches on one instance
    Run(RunArgs),
    /// Monte-Carlo batches over a probability grid
    Sweep(SweepArgs),
    /// Expected-stop scaling table over N = 2^k with one marked state
    Scaling(ScalingArgs),
    /// Noise-free expected-counter runs over a probability grid
    Expectation(ExpectationArgs),
    /// Exact stop-time law of the counter process
    Oracle(OracleArgs),
    /// Re-execute a recorded manifest, reproducing its outputs byte-exactly
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
pub struct Table1Args {
    /// Also write the table as CSV to this file (relative to --out)
    #[arg(long)]
    csv: Option<String>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AnalyticArgs {
    /// Target fraction of marked states
    #[arg(long)]
    p: f64,
    /// Stop probability; prints the ratio the counters reach there
    #[arg(long, conflicts_with = "ratio")]
    g: Option<f64>,
    /// Counter ratio; prints the stop probability it corresponds to
    #[arg(long)]
    ratio: Option<f64>,
}

/// Algorithm knobs shared by the sampling commands. Every long flag can also
/// appear as a key in the --config file; flags win.
#[derive(Args, Debug, Default)]
pub struct SimFlags {
    /// Engine mode: ideal, full, or density
    #[arg(long)]
    mode: Option<String>,
    /// Algorithm: proposed or canonical
    #[arg(long)]
    algorithm: Option<String>,
    /// Rotation-count override for the canonical baseline
    #[arg(long)]
    r_override: Option<u64>,
    /// Stop threshold on the corrected counter ratio
    #[arg(long)]
    set_val: Option<f64>,
    /// Reduction factor of the cloning channel, in (0, 1/3]
    #[arg(long)]
    eta: Option<f64>,
    /// Samples required before the stop rule is consulted
    #[arg(long)]
    burn_in: Option<u64>,
    /// Per-attempt rotation cap (derived from the instance when omitted)
    #[arg(long)]
    max_iterations: Option<u64>,
    /// Restart budget after wrong measurements
    #[arg(long)]
    max_restarts: Option<u64>,
    /// Trials in the batch
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed (FPSEARCH_SEED provides the default)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 means all cores
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value configuration file with the same keys as the long flags
    #[arg(long)]
    config: Option<PathBuf>,
}

struct ResolvedSim {
    sim: SimParams,
    trials: u64,
    out: PathBuf,
    workers: Option<usize>,
    overlay: Overlay,
}

impl SimFlags {
    fn resolve(&self) -> CliResult<ResolvedSim> {
        let overlay = Overlay::load(self.config.as_deref())?;
        let mode_raw = self
            .mode
            .clone()
            .or_else(|| overlay.get_string("mode"))
            .unwrap_or_else(|| "ideal".to_string());
        let algorithm_raw = self
            .algorithm
            .clone()
            .or_else(|| overlay.get_string("algorithm"))
            .unwrap_or_else(|| "proposed".to_string());
        let r_override = match self.r_override {
            Some(r) => Some(r),
            None => overlay.get::<u64>("r-override")?,
        };
        let algorithm = parse_algorithm(&algorithm_raw, r_override)?;
        let sim = SimParams {
            mode: parse_mode(&mode_raw)?,
            algorithm,
            set_val: resolve(self.set_val, &overlay, "set-val", 1.0)?,
            eta: resolve(self.eta, &overlay, "eta", 1.0 / 3.0)?,
            burn_in: resolve(self.burn_in, &overlay, "burn-in", 25)?,
            max_iterations: match self.max_iterations {
                Some(v) => Some(v),
                None => overlay.get::<u64>("max-iterations")?,
            },
            max_restarts: resolve(self.max_restarts, &overlay, "max-restarts", 100)?,
            seed: resolve_seed(self.seed, &overlay, 1)?,
        };
        let trials = resolve(self.trials, &overlay, "trials", 1000)?;
        let out = self
            .out
            .clone()
            .or_else(|| overlay.get_string("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let workers = match self.workers {
            Some(w) => Some(w),
            None => overlay.get::<usize>("workers")?,
        };
        Ok(ResolvedSim {
            sim,
            trials,
            out,
            workers,
            overlay,
        })
    }
}

fn parse_mode(raw: &str) -> CliResult<EngineMode> {
    match raw {
        "ideal" | "2d" | "idealized_2d" => Ok(EngineMode::Idealized2d),
        "full" | "statevector" | "full_statevector" => Ok(EngineMode::FullStatevector),
        "density" | "dephased_density" => Ok(EngineMode::DephasedDensity),
        other => Err(CliError::Usage(format!(
            "unknown mode {other:?}; expected ideal, full, or density"
        ))),
    }
}

fn parse_algorithm(raw: &str, r_override: Option<u64>) -> CliResult<Algorithm> {
    match raw {
        "proposed" => {
            if r_override.is_some() {
                return Err(CliError::Usage(
                    "--r-override applies only to --algorithm canonical".into(),
                ));
            }
            Ok(Algorithm::Proposed)
        }
        "canonical" => Ok(Algorithm::Canonical { r_override }),
        other => Err(CliError::Usage(format!(
            "unknown algorithm {other:?}; expected proposed or canonical"
        ))),
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Target fraction of marked states (abstract instance)
    #[arg(long)]
    p: Option<f64>,
    /// Register size in qubits (explicit instance, N = 2^n)
    #[arg(long, conflicts_with = "p")]
    n: Option<u32>,
    /// Marked-state count for --n (defaults to 1)
    #[arg(long, requires = "n")]
    m: Option<u64>,
    #[command(flatten)]
    sim: SimFlags,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Probability grid: "default" or a comma-separated list of fractions
    #[arg(long, default_value = "default")]
    grid: String,
    #[command(flatten)]
    sim: SimFlags,
}

#[derive(Args, Debug)]
pub struct ScalingArgs {
    /// Smallest database exponent (N = 2^nmin)
    #[arg(long)]
    nmin: Option<u32>,
    /// Largest database exponent (N = 2^nmax)
    #[arg(long)]
    nmax: Option<u32>,
    /// Stop threshold on the corrected counter ratio
    #[arg(long)]
    set_val: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExpectationArgs {
    /// Probability grid: "default" or a comma-separated list of fractions
    #[arg(long, default_value = "default")]
    grid: String,
    /// Stop threshold on the corrected counter ratio
    #[arg(long)]
    set_val: Option<f64>,
    /// Reduction factor of the cloning channel
    #[arg(long)]
    eta: Option<f64>,
    /// Samples required before the stop rule is consulted (expectation runs
    /// default to 0: the noise-free counters need no warm-up)
    #[arg(long)]
    burn_in: Option<u64>,
    /// Rotation cap (derived from each fraction when omitted)
    #[arg(long)]
    max_iterations: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// Target fraction of marked states
    #[arg(long)]
    p: f64,
    /// Number of passes to enumerate exactly
    #[arg(long)]
    horizon: Option<u64>,
    /// Stop threshold on the corrected counter ratio
    #[arg(long)]
    set_val: Option<f64>,
    /// Reduction factor of the cloning channel
    #[arg(long)]
    eta: Option<f64>,
    /// Samples required before the stop rule is consulted
    #[arg(long)]
    burn_in: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Manifest to re-execute
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (defaults to the manifest's directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 means all cores
    #[arg(long)]
    workers: Option<usize>,
}

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analytic(args) => run_analytic(&args),
        Command::Table1(args) => {
            let params = CommandParams::Table1 {
                csv_filename: args.csv.clone(),
            };
            execute(&params, &args.out, &now_utc(), None)
        }
        Command::Run(args) => {
            let resolved = args.sim.resolve()?;
            let problem = resolve_problem(args.p, args.n, args.m, &resolved.overlay)?;
            let params = CommandParams::Run {
                problem,
                trials: resolved.trials,
                sim: resolved.sim,
            };
            execute(&params, &resolved.out, &now_utc(), resolved.workers)
        }
        Command::Sweep(args) => {
            let resolved = args.sim.resolve()?;
            let grid = parse_grid(&args.grid)?;
            let params = CommandParams::Sweep {
                grid,
                trials: resolved.trials,
                sim: resolved.sim,
            };
            execute(&params, &resolved.out, &now_utc(), resolved.workers)
        }
        Command::Scaling(args) => {
            let overlay = Overlay::load(args.config.as_deref())?;
            let params = CommandParams::Scaling {
                exp_min: resolve(args.nmin, &overlay, "nmin", 10)?,
                exp_max: resolve(args.nmax, &overlay, "nmax", 20)?,
                set_val: resolve(args.set_val, &overlay, "set-val", 1.0)?,
            };
            let out = args
                .out
                .or_else(|| overlay.get_string("out").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            execute(&params, &out, &now_utc(), None)
        }
        Command::Expectation(args) => {
            let overlay = Overlay::load(args.config.as_deref())?;
            let params = CommandParams::Expectation {
                grid: parse_grid(&args.grid)?,
                set_val: resolve(args.set_val, &overlay, "set-val", 1.0)?,
                eta: resolve(args.eta, &overlay, "eta", 1.0 / 3.0)?,
                burn_in: resolve(args.burn_in, &overlay, "burn-in", 0)?,
                max_iterations: match args.max_iterations {
                    Some(v) => Some(v),
                    None => overlay.get::<u64>("max-iterations")?,
                },
            };
            let out = args
                .out
                .or_else(|| overlay.get_string("out").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            execute(&params, &out, &now_utc(), None)
        }
        Command::Oracle(args) => {
            let overlay = Overlay::load(args.config.as_deref())?;
            let params = CommandParams::Oracle {
                p: args.p,
                horizon: resolve(args.horizon, &overlay, "horizon", 512)?,
                set_val: resolve(args.set_val, &overlay, "set-val", 1.0)?,
                eta: resolve(args.eta, &overlay, "eta", 1.0 / 3.0)?,
                burn_in: resolve(args.burn_in, &overlay, "burn-in", 25)?,
            };
            let out = args
                .out
                .or_else(|| overlay.get_string("out").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            execute(&params, &out, &now_utc(), None)
        }
        Command::Replay(args) => {
            let manifest = load_manifest(&args.manifest)?;
            let out = args.out.unwrap_or_else(|| {
                args.manifest
                    .parent()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            execute(&manifest.params, &out, &manifest.created_utc, args.workers)?;
            println!("replayed manifest {}", args.manifest.display());
            Ok(())
        }
    }
}

fn now_utc() -> String {
    chrono::Utc::now().to_rfc3339()
}

fn resolve_problem(
    p: Option<f64>,
    n: Option<u32>,
    m: Option<u64>,
    overlay: &Overlay,
) -> CliResult<ProblemSpec> {
    let p = match p {
        Some(v) => Some(v),
        None => overlay.get::<f64>("p")?,
    };
    let n = match n {
        Some(v) => Some(v),
        None => overlay.get::<u32>("n")?,
    };
    let m = match m {
        Some(v) => Some(v),
        None => overlay.get::<u64>("m")?,
    };
    match (p, n) {
        (Some(_), Some(_)) => Err(CliError::Usage(
            "give either --p or --n, not both".into(),
        )),
        (Some(p), None) => {
            if m.is_some() {
                return Err(CliError::Usage("--m applies only to --n instances".into()));
            }
            Ok(ProblemSpec::Fraction { p })
        }
        (None, Some(n)) => Ok(ProblemSpec::Register {
            n_qubits: n,
            marked: m.unwrap_or(1),
        }),
        (None, None) => Err(CliError::Usage(
            "an instance is required: --p FRACTION or --n QUBITS [--m COUNT]".into(),
        )),
    }
}

fn parse_grid(raw: &str) -> CliResult<Vec<f64>> {
    if raw == "default" {
        return Ok(DEFAULT_P_GRID.to_vec());
    }
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("grid entry {tok:?} is not a number")))
        })
        .collect()
}

fn run_analytic(args: &AnalyticArgs) -> CliResult<()> {
    let fraction = TargetFraction::new(args.p)?;
    let record = match (args.g, args.ratio) {
        (Some(g), None) => {
            let stop = StopAngle::from_probability(&fraction, g)?;
            let ratio = expected_ratio_closed(&fraction, &stop);
            serde_json::json!({
                "p": round12(fraction.p()),
                "theta": round12(fraction.theta()),
                "g": round12(g),
                "x": round12(stop.radians()),
                "ratio": round12(ratio),
            })
        }
        (None, Some(ratio)) => {
            let g = solve_stop_probability(&fraction, ratio)?;
            let stop = StopAngle::from_probability(&fraction, g)?;
            serde_json::json!({
                "p": round12(fraction.p()),
                "theta": round12(fraction.theta()),
                "ratio": round12(ratio),
                "x": round12(stop.radians()),
                "g": round12(g),
            })
        }
        _ => {
            return Err(CliError::Usage(
                "exactly one of --g or --ratio is required".into(),
            ))
        }
    };
    println!("{record}");
    Ok(())
}
