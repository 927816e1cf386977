//! Resolved command parameters, their executors, and the run manifest.
//!
//! Every file-producing command resolves its flags into a `CommandParams`
//! value, executes from that value alone, and records it in a manifest next
//! to the outputs. Replaying the manifest re-runs the same executor on the
//! same parameters, reproducing the outputs byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};

use fpsearch::analytic::{calibration_table, TargetFraction, CALIBRATION_G};
use fpsearch::harness::{
    exact_stop_distribution, expectation_table, monte_carlo, scaling_fit, scaling_rows, sweep,
    Algorithm, ScalingRow, SweepRow, TrialStats,
};
use fpsearch::search::{AlgorithmConfig, EngineMode, ProblemInstance};

use crate::error::{CliError, CliResult};
use crate::output::{round12, sig12, write_csv, write_json};

/// Search instance description as given on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProblemSpec {
    /// Abstract fraction of marked states.
    Fraction { p: f64 },
    /// Explicit register of n qubits with the lowest `marked` indices marked.
    Register { n_qubits: u32, marked: u64 },
}

impl ProblemSpec {
    pub fn instance(&self) -> CliResult<ProblemInstance> {
        match *self {
            ProblemSpec::Fraction { p } => Ok(ProblemInstance::from_fraction(p)?),
            ProblemSpec::Register { n_qubits, marked } => {
                let targets: Vec<u64> = (0..marked).collect();
                Ok(ProblemInstance::indexed(n_qubits, targets)?)
            }
        }
    }

}

/// Algorithm knobs shared by the sampling commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub mode: EngineMode,
    pub algorithm: Algorithm,
    pub set_val: f64,
    pub eta: f64,
    pub burn_in: u64,
    pub max_iterations: Option<u64>,
    pub max_restarts: u64,
    pub seed: u64,
}

impl SimParams {
    pub fn config(&self) -> AlgorithmConfig {
        AlgorithmConfig {
            mode: self.mode,
            set_val: self.set_val,
            eta: self.eta,
            burn_in: self.burn_in,
            max_iterations_per_attempt: self.max_iterations,
            max_restarts: self.max_restarts,
            seed: self.seed,
        }
    }
}

/// Fully resolved parameters of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum CommandParams {
    Table1 {
        csv_filename: Option<String>,
    },
    Run {
        problem: ProblemSpec,
        trials: u64,
        sim: SimParams,
    },
    Sweep {
        grid: Vec<f64>,
        trials: u64,
        sim: SimParams,
    },
    Scaling {
        exp_min: u32,
        exp_max: u32,
        set_val: f64,
    },
    Expectation {
        grid: Vec<f64>,
        set_val: f64,
        eta: f64,
        burn_in: u64,
        max_iterations: Option<u64>,
    },
    Oracle {
        p: f64,
        horizon: u64,
        set_val: f64,
        eta: f64,
        burn_in: u64,
    },
}

impl CommandParams {
    fn master_seed(&self) -> Option<u64> {
        match self {
            CommandParams::Run { sim, .. } | CommandParams::Sweep { sim, .. } => Some(sim.seed),
            _ => None,
        }
    }
}

/// Metadata written alongside every result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub created_utc: String,
    pub master_seed: Option<u64>,
    pub params: CommandParams,
    pub outputs: Vec<String>,
}

pub const MANIFEST_FILENAME: &str = "manifest.json";

/// Executes resolved parameters into `out_dir`, printing a one-line summary
/// and writing a manifest when any file was produced. `created_utc` is
/// preserved verbatim so replays are byte-identical.
pub fn execute(
    params: &CommandParams,
    out_dir: &Path,
    created_utc: &str,
    workers: Option<usize>,
) -> CliResult<()> {
    std::fs::create_dir_all(out_dir)?;
    let outputs = match params {
        CommandParams::Table1 { csv_filename } => exec_table1(csv_filename.as_deref(), out_dir)?,
        CommandParams::Run {
            problem,
            trials,
            sim,
        } => exec_run(problem, *trials, sim, out_dir, workers)?,
        CommandParams::Sweep { grid, trials, sim } => {
            exec_sweep(grid, *trials, sim, out_dir, workers)?
        }
        CommandParams::Scaling {
            exp_min,
            exp_max,
            set_val,
        } => exec_scaling(*exp_min, *exp_max, *set_val, out_dir)?,
        CommandParams::Expectation {
            grid,
            set_val,
            eta,
            burn_in,
            max_iterations,
        } => exec_expectation(grid, *set_val, *eta, *burn_in, *max_iterations, out_dir)?,
        CommandParams::Oracle {
            p,
            horizon,
            set_val,
            eta,
            burn_in,
        } => exec_oracle(*p, *horizon, *set_val, *eta, *burn_in, out_dir)?,
    };
    if !outputs.is_empty() {
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            created_utc: created_utc.to_string(),
            master_seed: params.master_seed(),
            params: params.clone(),
            outputs,
        };
        write_json(&out_dir.join(MANIFEST_FILENAME), &manifest)?;
    }
    Ok(())
}

pub fn load_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("malformed manifest {}: {e}", path.display())))
}

fn thread_pool(workers: Option<usize>) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(format!("cannot build worker pool: {e}")))
}

fn exec_table1(csv_filename: Option<&str>, out_dir: &Path) -> CliResult<Vec<String>> {
    let table = calibration_table();
    println!("threshold calibration: cumulative ratio at reference stop probabilities");
    println!(
        "{:<5} {:<18} {:<26} {:<26} {:<26}",
        "case", "p", "g=0.5", "g=0.75", "g=1.0"
    );
    for row in &table {
        let cells: Vec<String> = row
            .ratios
            .iter()
            .zip(row.reference.iter())
            .map(|(r, paper)| format!("{} ({paper:.2})", sig12(*r)))
            .collect();
        println!(
            "{:<5} {:<18} {:<26} {:<26} {:<26}",
            row.label,
            sig12(row.p),
            cells[0],
            cells[1],
            cells[2]
        );
    }
    let Some(filename) = csv_filename else {
        return Ok(Vec::new());
    };
    let rows: Vec<Vec<String>> = table
        .iter()
        .flat_map(|row| {
            CALIBRATION_G.iter().enumerate().map(|(k, g)| {
                vec![
                    row.label.to_string(),
                    sig12(row.p),
                    sig12(*g),
                    sig12(row.ratios[k]),
                    format!("{:.2}", row.reference[k]),
                ]
            })
        })
        .collect();
    write_csv(
        &out_dir.join(filename),
        &["case", "p", "g_target", "ratio_closed", "ratio_paper"],
        &rows,
    )?;
    Ok(vec![filename.to_string()])
}

/// Derived statistics are emitted at 12 significant digits, like every other
/// numeric output. Config echoes in manifests stay byte-exact instead.
fn round_stats(mut stats: TrialStats) -> TrialStats {
    for v in [
        &mut stats.success_rate,
        &mut stats.ci_low,
        &mut stats.ci_high,
        &mut stats.per_attempt_success_rate,
        &mut stats.per_attempt_ci_low,
        &mut stats.per_attempt_ci_high,
        &mut stats.mean_queries,
        &mut stats.median_queries,
        &mut stats.mean_grover_iterations,
        &mut stats.mean_restarts,
    ] {
        *v = round12(*v);
    }
    stats
}

fn exec_run(
    problem: &ProblemSpec,
    trials: u64,
    sim: &SimParams,
    out_dir: &Path,
    workers: Option<usize>,
) -> CliResult<Vec<String>> {
    let instance = problem.instance()?;
    let config = sim.config();
    let pool = thread_pool(workers)?;
    let stats: TrialStats =
        round_stats(pool.install(|| monte_carlo(&instance, &config, sim.algorithm, trials))?);
    write_json(&out_dir.join("results.json"), &stats)?;
    println!(
        "run p={} trials={} seed={} success_rate={} per_attempt={} mean_queries={} mean_restarts={} -> {}",
        sig12(instance.fraction().p()),
        trials,
        sim.seed,
        sig12(stats.success_rate),
        sig12(stats.per_attempt_success_rate),
        sig12(stats.mean_queries),
        sig12(stats.mean_restarts),
        out_dir.join("results.json").display()
    );
    Ok(vec!["results.json".to_string()])
}

fn exec_sweep(
    grid: &[f64],
    trials: u64,
    sim: &SimParams,
    out_dir: &Path,
    workers: Option<usize>,
) -> CliResult<Vec<String>> {
    let config = sim.config();
    let pool = thread_pool(workers)?;
    let rows: Vec<SweepRow> = pool.install(|| sweep(grid, &config, sim.algorithm, trials))?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                sig12(r.p),
                r.stats.trials.to_string(),
                sig12(r.stats.success_rate),
                sig12(r.stats.ci_low),
                sig12(r.stats.ci_high),
                sig12(r.stats.mean_queries),
                sig12(r.stats.mean_restarts),
            ]
        })
        .collect();
    write_csv(
        &out_dir.join("sweep.csv"),
        &[
            "p",
            "trials",
            "success_rate",
            "ci_lo",
            "ci_hi",
            "mean_queries",
            "mean_restarts",
        ],
        &csv_rows,
    )?;
    println!(
        "sweep rows={} trials={} seed={} -> {}",
        rows.len(),
        trials,
        sim.seed,
        out_dir.join("sweep.csv").display()
    );
    Ok(vec!["sweep.csv".to_string()])
}

fn exec_scaling(
    exp_min: u32,
    exp_max: u32,
    set_val: f64,
    out_dir: &Path,
) -> CliResult<Vec<String>> {
    let rows: Vec<ScalingRow> = scaling_rows(exp_min, exp_max, set_val)?;
    let fit = scaling_fit(&rows)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n_states.to_string(),
                r.r_stop.to_string(),
                r.queries_proposed.to_string(),
                r.queries_canonical.to_string(),
                sig12(r.ratio),
            ]
        })
        .collect();
    write_csv(
        &out_dir.join("scaling.csv"),
        &[
            "N",
            "r_stop",
            "queries_proposed",
            "queries_canonical",
            "ratio",
        ],
        &csv_rows,
    )?;
    println!(
        "scaling rows={} slope={} final_ratio={} -> {}",
        rows.len(),
        sig12(fit.slope),
        sig12(fit.final_ratio),
        out_dir.join("scaling.csv").display()
    );
    Ok(vec!["scaling.csv".to_string()])
}

fn exec_expectation(
    grid: &[f64],
    set_val: f64,
    eta: f64,
    burn_in: u64,
    max_iterations: Option<u64>,
    out_dir: &Path,
) -> CliResult<Vec<String>> {
    let config = AlgorithmConfig {
        mode: EngineMode::Idealized2d,
        set_val,
        eta,
        burn_in,
        max_iterations_per_attempt: max_iterations,
        max_restarts: 0,
        seed: 0,
    };
    let rows = expectation_table(grid, &config)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                sig12(r.p),
                r.r_stop.to_string(),
                sig12(r.g_at_stop),
                sig12(r.g_at_measure),
                r.oracle_queries.to_string(),
                r.capped.to_string(),
            ]
        })
        .collect();
    write_csv(
        &out_dir.join("expectation.csv"),
        &["p", "r_stop", "g_at_stop", "g_at_measure", "queries", "capped"],
        &csv_rows,
    )?;
    let min_g = rows.iter().map(|r| r.g_at_stop).fold(f64::INFINITY, f64::min);
    println!(
        "expectation rows={} set_val={} min_g_at_stop={} -> {}",
        rows.len(),
        sig12(set_val),
        sig12(min_g),
        out_dir.join("expectation.csv").display()
    );
    Ok(vec!["expectation.csv".to_string()])
}

fn exec_oracle(
    p: f64,
    horizon: u64,
    set_val: f64,
    eta: f64,
    burn_in: u64,
    out_dir: &Path,
) -> CliResult<Vec<String>> {
    let fraction = TargetFraction::new(p)?;
    let config = AlgorithmConfig {
        mode: EngineMode::Idealized2d,
        set_val,
        eta,
        burn_in,
        max_iterations_per_attempt: None,
        max_restarts: 0,
        seed: 0,
    };
    let dist = exact_stop_distribution(&fraction, &config, horizon)?;
    let csv_rows: Vec<Vec<String>> = dist
        .entries
        .iter()
        .map(|e| vec![e.r.to_string(), sig12(e.probability), sig12(e.g_at_stop)])
        .collect();
    write_csv(
        &out_dir.join("oracle.csv"),
        &["r", "prob_stop", "g_at_stop"],
        &csv_rows,
    )?;
    println!(
        "oracle p={} horizon={} success_probability={} truncated_mass={} -> {}",
        sig12(p),
        horizon,
        sig12(dist.success_probability),
        sig12(dist.truncated_mass),
        out_dir.join("oracle.csv").display()
    );
    Ok(vec!["oracle.csv".to_string()])
}
