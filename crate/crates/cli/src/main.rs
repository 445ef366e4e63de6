//! `advscc`: solve rejection games, run sweeps and train the continuous
//! learner from the command line.
//!
//! Exit codes: 0 success, 1 solver failure or failed check, 2 bad input
//! (including unknown file versions), 3 infeasible adversary (the status
//! JSON is still written).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use advscc::adversary::{
    best_response, brute_force_best_response, property_abc_transfer_check, unrestricted_response,
    BestResponse, PropertyReport,
};
use advscc::checks::{divergence_battery, BatteryReport};
use advscc::continuous::{
    train_scc, MarginRule, PitchRule, QuantileSource, SccConfig, SccModel,
};
use advscc::experiments::{default_lambda_grid, run_sweep, Family, SweepConfig, SweepReport};
use advscc::game::{solve_dual, solve_hard_ldrs, solve_soft, GameStatus, SparseDist};
use advscc::io::{
    read_json, read_points, to_json, ModelFile, RejectionFile, ResultFile, SpecFile,
    FORMAT_VERSION, TOOL_VERSION,
};
use advscc::{DivergenceKind, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "advscc", version, about = "Adversarial single-class classification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock time in the output. Off by default so repeated runs
    /// produce identical files.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct Seed {
    /// Seed for every random stream; falls back to ADVSCC_SEED.
    #[arg(long, env = "ADVSCC_SEED")]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal soft rejection function against the constrained adversary.
    Solve {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Hard low-density rejection function and its worst case.
    Hard {
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Minimal type I error for a bound on the adversary's acceptance rate.
    Dual {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides `delta_q` from the spec.
        #[arg(long)]
        delta_q: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Adversary best response to a given rejection function.
    Oracle {
        #[arg(long)]
        spec: PathBuf,
        /// Rejection file (`{"version": 1, "r": [...]}`).
        #[arg(long)]
        r: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Structured)]
        mode: Mode,
        /// Lattice denominator for brute mode.
        #[arg(long, default_value_t = 400)]
        resolution: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Monte Carlo sweep of hard and soft worst-case errors over lambda.
    Sweep {
        #[arg(long, value_enum, default_value_t = FamilyArg::Arbitrary)]
        family: FamilyArg,
        #[arg(long, default_value_t = 50)]
        n_events: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Comma-separated lambda values; defaults to 0.5, 1.0, ..., 12.5.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[command(flatten)]
        seed: Seed,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
        /// Directory for `raw.csv`, `summary.csv` and `report.json`;
        /// without it the report JSON goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
    },
    /// Train the grid-background rejector on target samples.
    SccTrain {
        /// Points as CSV (header optional) or JSON lines (`.jsonl`).
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        delta: f64,
        #[command(flatten)]
        seed: Seed,
        /// Fixed grid pitch.
        #[arg(long, conflicts_with = "select_pitch")]
        pitch: Option<f64>,
        /// Smallest pitch with at most this many singleton cells.
        #[arg(long)]
        select_pitch: Option<usize>,
        #[arg(long, default_value_t = 1)]
        min_count: usize,
        /// Draw the background size from NB(n, 1/2).
        #[arg(long)]
        negbinom: bool,
        #[arg(long, value_enum, default_value_t = MarginArg::MissingMass)]
        margin: MarginArg,
        /// Hold out this fraction of the sample for the quantiles.
        #[arg(long)]
        holdout: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Apply a trained model to points.
    SccEval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Include the per-point decisions.
        #[arg(long)]
        flags: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Randomized property batteries for divergences and transfers.
    Check {
        /// Divergence names; repeat or comma-separate.
        #[arg(long, value_delimiter = ',', default_values_t = vec!["kl2".to_string(), "sqeuclid".to_string()])]
        divergence: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Also check the transfer properties of this spec's constraint.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        seed: Seed,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Structured,
    Brute,
    Unrestricted,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Arbitrary,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum MarginArg {
    MissingMass,
    CubeRoot,
}

enum Failure {
    /// Exit 1.
    Solver(String),
    /// Exit 2.
    Input(String),
    /// Exit 3; output already written.
    Infeasible,
    /// Exit 1; output already written.
    CheckFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericalBreakdown(_)
            | Error::LpStatus(_)
            | Error::InvariantViolation(_)
            | Error::NotBracketed { .. }
            | Error::Degenerate(_) => Failure::Solver(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> CliResult {
    let text = to_json(value);
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn elapsed_ms(start: Instant, timing: bool) -> Option<f64> {
    timing.then(|| start.elapsed().as_secs_f64() * 1e3)
}

fn finish_game(mut result: ResultFile, start: Instant, output: &Output) -> CliResult {
    result.timing_ms = elapsed_ms(start, output.timing);
    emit(&result, output.out.as_deref())?;
    let value = result.z.or(result.z_i);
    eprintln!(
        "status {}, value {}",
        result.status.as_str(),
        value.map_or("none".into(), |v| v.to_string())
    );
    if result.status == GameStatus::AdversaryInfeasible {
        return Err(Failure::Infeasible);
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleFile {
    version: u64,
    tool_version: &'static str,
    mode: &'static str,
    status: GameStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<SparseDist>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    divergence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    resolution: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_ms: Option<f64>,
}

fn oracle(spec: &Path, r: &Path, mode: Mode, resolution: u32, output: &Output) -> CliResult {
    let start = Instant::now();
    let constraint = read_json::<SpecFile>(spec)?.constraint()?;
    let r = read_json::<RejectionFile>(r)?.rejection()?;
    let (name, res) = match mode {
        Mode::Structured => ("structured", best_response(&r, &constraint)),
        Mode::Brute => ("brute", brute_force_best_response(&r, &constraint, resolution)),
        Mode::Unrestricted => ("unrestricted", unrestricted_response(&r, &constraint)),
    };
    let mut file = OracleFile {
        version: FORMAT_VERSION,
        tool_version: TOOL_VERSION,
        mode: name,
        status: GameStatus::Solved,
        q: None,
        value: None,
        divergence: None,
        resolution: matches!(mode, Mode::Brute).then_some(resolution),
        timing_ms: None,
    };
    let infeasible = match res {
        Ok(BestResponse { q, value, divergence, .. }) => {
            file.q = Some(q);
            file.value = Some(value);
            file.divergence = Some(divergence);
            false
        }
        Err(Error::AdversaryInfeasible | Error::NoFeasiblePoint(_)) => {
            file.status = GameStatus::AdversaryInfeasible;
            true
        }
        Err(e) => return Err(e.into()),
    };
    file.timing_ms = elapsed_ms(start, output.timing);
    emit(&file, output.out.as_deref())?;
    eprintln!("{name} response: {}", file.value.map_or("infeasible".into(), |v| format!("rho = {v}")));
    if infeasible {
        return Err(Failure::Infeasible);
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepFile<'a> {
    version: u64,
    tool_version: &'static str,
    #[serde(flatten)]
    report: &'a SweepReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_ms: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    family: FamilyArg,
    n_events: usize,
    delta: f64,
    lambdas: Option<Vec<f64>>,
    reps: usize,
    seed: u64,
    jobs: Option<usize>,
    out: Option<&Path>,
    timing: bool,
) -> CliResult {
    let start = Instant::now();
    let config = SweepConfig {
        family: match family {
            FamilyArg::Arbitrary => Family::Arbitrary,
            FamilyArg::Gaussian => Family::Gaussian,
        },
        n_events,
        delta,
        lambda_grid: lambdas.unwrap_or_else(default_lambda_grid),
        reps,
        seed,
    };
    if jobs == Some(0) {
        return Err(Failure::Input("--jobs must be >= 1".into()));
    }
    let report = run_sweep(&config, jobs)?;
    let file = SweepFile {
        version: FORMAT_VERSION,
        tool_version: TOOL_VERSION,
        report: &report,
        timing_ms: elapsed_ms(start, timing),
    };
    match out {
        Some(dir) => {
            let write = |name: &str, text: String| {
                fs::write(dir.join(name), text)
                    .map_err(|e| Failure::Input(format!("{}: {e}", dir.join(name).display())))
            };
            fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
            write("raw.csv", report.raw_csv())?;
            write("summary.csv", report.summary_csv())?;
            write("report.json", to_json(&file))?;
        }
        None => emit(&file, None)?,
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    eprintln!(
        "{} instances, {} failures",
        report.rows.len(),
        report.failures.len()
    );
    for f in &report.failures {
        eprintln!("failed lambda {} rep {}: {}", f.lambda, f.rep, f.reason);
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalFile {
    version: u64,
    tool_version: &'static str,
    n: usize,
    rejected: usize,
    reject_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    flags: Option<Vec<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_ms: Option<f64>,
}

fn scc_eval(model: &Path, data: &Path, flags: bool, output: &Output) -> CliResult {
    let start = Instant::now();
    let model: SccModel = read_json::<ModelFile>(model)?.model;
    let points = read_points(data)?;
    let decisions = model.reject_batch(&points)?;
    let rejected = decisions.iter().filter(|&&d| d).count();
    let file = EvalFile {
        version: FORMAT_VERSION,
        tool_version: TOOL_VERSION,
        n: points.len(),
        rejected,
        reject_fraction: rejected as f64 / points.len() as f64,
        flags: flags.then_some(decisions),
        timing_ms: elapsed_ms(start, output.timing),
    };
    emit(&file, output.out.as_deref())?;
    eprintln!("rejected {rejected} of {} points ({})", file.n, file.reject_fraction);
    Ok(())
}

#[derive(Serialize)]
struct CheckFile {
    version: u64,
    tool_version: &'static str,
    seed: u64,
    passed: bool,
    batteries: Vec<BatteryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    transfer: Option<PropertyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_ms: Option<f64>,
}

fn check(divergences: &[String], trials: usize, spec: Option<&Path>, seed: u64, output: &Output) -> CliResult {
    let start = Instant::now();
    let mut batteries = Vec::new();
    for (i, name) in divergences.iter().enumerate() {
        let kind: DivergenceKind = name.parse()?;
        batteries.push(divergence_battery(&kind, trials, seed.wrapping_add(i as u64))?);
    }
    let transfer = match spec {
        Some(path) => {
            let c = read_json::<SpecFile>(path)?.constraint()?;
            Some(property_abc_transfer_check(&c, trials, seed)?)
        }
        None => None,
    };
    let passed = batteries.iter().all(BatteryReport::all_passed)
        && transfer.as_ref().is_none_or(PropertyReport::all_passed);
    let file = CheckFile {
        version: FORMAT_VERSION,
        tool_version: TOOL_VERSION,
        seed,
        passed,
        batteries,
        transfer,
        timing_ms: elapsed_ms(start, output.timing),
    };
    emit(&file, output.out.as_deref())?;
    for b in &file.batteries {
        eprintln!(
            "{}: receding {}/{t}, 2-symmetric {}/{t}, convexity {}/{t}, transfer {}/{t}",
            b.divergence,
            b.receding_pass,
            b.symmetric_pass,
            b.convexity_pass,
            b.transfer_pass,
            t = b.trials
        );
    }
    if let Some(t) = &file.transfer {
        eprintln!(
            "transfer properties: A {}/{n}, B {}/{n}, C {}/{n}",
            t.property_a_pass,
            t.property_b_pass,
            t.property_c_pass,
            n = t.trials
        );
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::CheckFailed)
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Solve { spec, output } => {
            let start = Instant::now();
            let game = read_json::<SpecFile>(&spec)?.game_spec()?;
            finish_game(ResultFile::from_soft(&solve_soft(&game)?), start, &output)
        }
        Command::Hard { spec, output } => {
            let start = Instant::now();
            let game = read_json::<SpecFile>(&spec)?.game_spec()?;
            finish_game(ResultFile::from_hard(&solve_hard_ldrs(&game)?), start, &output)
        }
        Command::Dual { spec, delta_q, output } => {
            let start = Instant::now();
            let mut file = read_json::<SpecFile>(&spec)?;
            if delta_q.is_some() {
                file.delta_q = delta_q;
            }
            let dual = file.dual_spec()?;
            finish_game(ResultFile::from_dual(&solve_dual(&dual)?), start, &output)
        }
        Command::Oracle { spec, r, mode, resolution, output } => {
            oracle(&spec, &r, mode, resolution, &output)
        }
        Command::Sweep { family, n_events, delta, lambdas, reps, seed, jobs, out, timing } => {
            sweep(family, n_events, delta, lambdas, reps, seed.seed, jobs, out.as_deref(), timing)
        }
        Command::SccTrain {
            data,
            delta,
            seed,
            pitch,
            select_pitch,
            min_count,
            negbinom,
            margin,
            holdout,
            output,
        } => {
            let start = Instant::now();
            let points = read_points(&data)?;
            let config = SccConfig {
                pitch: match (pitch, select_pitch) {
                    (Some(pitch), _) => PitchRule::Fixed { pitch },
                    (None, Some(t)) => PitchRule::Select { t },
                    (None, None) => PitchRule::Default,
                },
                min_count,
                negbinom,
                margin: match margin {
                    MarginArg::MissingMass => MarginRule::MissingMass { z: 0.0 },
                    MarginArg::CubeRoot => MarginRule::CubeRoot,
                },
                quantile_source: match holdout {
                    Some(fraction) => QuantileSource::Holdout { fraction },
                    None => QuantileSource::Training,
                },
                ..SccConfig::default()
            };
            let model = train_scc(&points, delta, &config, seed.seed)?;
            eprintln!(
                "trained on {} points: {} covered cells, pitch {}, delta- {}, t- {:?}, t+ {:?}",
                model.n,
                model.covered.len(),
                model.grid.pitch,
                model.margins.delta_minus,
                model.thresholds.t_minus,
                model.thresholds.t_plus
            );
            if output.timing {
                eprintln!("training took {:.1} ms", start.elapsed().as_secs_f64() * 1e3);
            }
            emit(&ModelFile::new(model), output.out.as_deref())
        }
        Command::SccEval { model, data, flags, output } => scc_eval(&model, &data, flags, &output),
        Command::Check { divergence, trials, spec, seed, output } => {
            check(&divergence, trials, spec.as_deref(), seed.seed, &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::CheckFailed) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Infeasible) => ExitCode::from(3),
    }
}
