//! `silab`: split-intersection selection and bias-corrected inference for
//! logistic regression, plus the Monte-Carlo harness.
//!
//! Every command writes a deterministic JSON artifact into `--out` and a
//! `timing.json` sidecar holding wall-clock and per-stage timings.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use silab_core::bcmle::{IbConfig, SimulationRandomness, DEFAULT_H, DEFAULT_K_MAX, DEFAULT_MC_RESOLUTION};
use silab_core::glm::{design_diagnostics, DesignDiagnostics, ParameterBox, DEFAULT_BOX_BOUND};
use silab_core::inference::{
    confidence_interval, hypothesis_test_at, silab_fit_timed, Alternative, IntervalResult, Side, SilabResult,
    StageTimings, TestResult,
};
use silab_core::io::read_csv_dataset;
use silab_core::lasso::{LassoOptions, DEFAULT_GRID_SIZE};
use silab_core::sila::{sila_select, DeltaSpec, InclusionMode, SilaConfig, SilaTrace};
use silab_core::simulator::{
    default_alpha_grid, default_tests, run_monte_carlo, write_estimates_csv, write_size_power_csv, MethodConfig,
    RepTiming, SimSetting,
};
use silab_core::{Dataset, Error, RandomStream};

const TOOL: &str = "silab";
const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Largest failure fraction `simulate` accepts before exiting with code 4.
const MAX_FAILURE_FRACTION: f64 = 0.02;

#[derive(Parser, Debug)]
#[command(name = "silab", version, about = "Split-intersection Lasso selection with bias-corrected MLE inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select a submodel containing the column of interest.
    Select(SelectArgs),
    /// Select, bias-correct, and report the estimate with confidence intervals.
    Fit(FitArgs),
    /// Select, bias-correct, and test hypotheses on the column of interest.
    Test(TestArgs),
    /// Run the Monte-Carlo harness on simulated data.
    Simulate(SimulateArgs),
    /// Report design regularity checks.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Name of the 0/1 response column.
    #[arg(long)]
    response: String,
    /// Name of the covariate of interest.
    #[arg(long)]
    j0: String,
    /// 1 uses the columns as given, 2 appends all pairwise products.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    interactions: u8,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SelectionArgs {
    /// Lower support-size bracket, or `auto`.
    #[arg(long, default_value = "auto")]
    delta1: DeltaSpec,
    /// Upper support-size bracket, `auto`, or `inf`.
    #[arg(long, default_value = "auto")]
    delta2: DeltaSpec,
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    grid_size: usize,
    /// `union_j0` adds j0 after intersecting; `unpenalized_j0` leaves it unpenalized.
    #[arg(long, default_value = "union_j0")]
    inclusion: InclusionMode,
}

#[derive(Args, Debug, Clone, Serialize)]
struct BiasCorrectionArgs {
    /// Simulated samples per iterative-bootstrap iteration.
    #[arg(long = "H", default_value_t = DEFAULT_H)]
    h: usize,
    /// Convergence tolerance; defaults to 1e-4 * sqrt(p).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_K_MAX)]
    k_max: usize,
    /// `common` reuses the simulated streams across iterations, `fresh` redraws them.
    #[arg(long, default_value = "common")]
    randomness: SimulationRandomness,
    /// Stop once the step is below this multiple of the Monte-Carlo standard error (0 disables).
    #[arg(long, default_value_t = DEFAULT_MC_RESOLUTION)]
    mc_resolution: f64,
    /// Coefficient box bound.
    #[arg(long, default_value_t = DEFAULT_BOX_BOUND)]
    box_bound: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
struct RunArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; defaults to the machine's parallelism.
    #[arg(long, env = "SILAB_THREADS")]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    correction: BiasCorrectionArgs,
    /// Interval levels are 1 - alpha; repeatable.
    #[arg(long, default_values_t = [0.05])]
    alpha: Vec<f64>,
    #[arg(long, default_value = "two_sided")]
    side: Side,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct TestArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    correction: BiasCorrectionArgs,
    /// Significance levels; repeatable.
    #[arg(long, default_values_t = [0.05])]
    alpha: Vec<f64>,
    /// Null values; repeatable.
    #[arg(long = "null", default_values_t = [0.0], allow_negative_numbers = true)]
    null_value: Vec<f64>,
    /// `greater`, `less` or `two_sided`; repeatable.
    #[arg(long, default_value = "two_sided")]
    alternative: Vec<Alternative>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SimulateArgs {
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 400)]
    d: usize,
    /// Number of non-zero coefficients (0 or a multiple of 5).
    #[arg(long, default_value_t = 20)]
    d0: usize,
    /// AR(1) correlation between adjacent covariates.
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    #[arg(long, default_value_t = 500)]
    replications: usize,
    /// Zero-based index of the coefficient under test.
    #[arg(long, default_value_t = 3)]
    j0: usize,
    #[command(flatten)]
    selection: SelectionArgs,
    #[command(flatten)]
    correction: BiasCorrectionArgs,
    /// Significance levels of the size/power curves; repeatable.
    #[arg(long)]
    alpha: Vec<f64>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct DiagnoseArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Also diagnose the design restricted to the selected submodel.
    #[arg(long)]
    select: bool,
    #[command(flatten)]
    selection: SelectionArgs,
    #[arg(long, default_value_t = DEFAULT_BOX_BOUND)]
    box_bound: f64,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::BracketingInfeasible(_)
            | Error::InitialMleFailed(_)
            | Error::SeparationDetected
            | Error::SingularInformation
            | Error::TooManySkippedSamples { .. } => 3,
            Error::Io(_) => 5,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 5,
        message: e.to_string(),
    }
}

#[derive(Serialize)]
struct Artifact<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    threads: usize,
    config: &'a C,
    result: R,
}

#[derive(Serialize)]
struct Timing<'a, C: Serialize, S: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    threads: usize,
    config: &'a C,
    wall_clock_s: f64,
    stages: S,
}

struct Session {
    command: &'static str,
    seed: u64,
    threads: usize,
    out: PathBuf,
    start: Instant,
}

impl Session {
    fn write_json<C: Serialize, R: Serialize>(&self, name: &str, config: &C, result: R) -> Result<(), Failure> {
        let artifact = Artifact {
            tool: TOOL,
            version: VERSION,
            command: self.command,
            seed: self.seed,
            threads: self.threads,
            config,
            result,
        };
        let bytes = silab_core::json::to_vec(&artifact).map_err(internal)?;
        write_file(&self.out.join(name), &bytes)
    }

    fn write_timing<C: Serialize, S: Serialize>(&self, config: &C, stages: S) -> Result<(), Failure> {
        let timing = Timing {
            tool: TOOL,
            version: VERSION,
            command: self.command,
            seed: self.seed,
            threads: self.threads,
            config,
            wall_clock_s: self.start.elapsed().as_secs_f64(),
            stages,
        };
        let bytes = silab_core::json::to_vec(&timing).map_err(internal)?;
        write_file(&self.out.join("timing.json"), &bytes)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| internal(format!("writing {}: {e}", path.display())))
}

fn start(command: &'static str, run: &RunArgs) -> Result<Session, Failure> {
    let threads = run
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(Failure {
            code: 2,
            message: "--threads must be at least 1".into(),
        });
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(internal)?;
    std::fs::create_dir_all(&run.out).map_err(|e| internal(format!("creating {}: {e}", run.out.display())))?;
    Ok(Session {
        command,
        seed: run.seed,
        threads,
        out: run.out.clone(),
        start: Instant::now(),
    })
}

fn load(data: &DataArgs) -> Result<(Dataset, usize), Failure> {
    let ds = read_csv_dataset(&data.input, &data.response, data.interactions).map_err(|e| e.at_stage("input"))?;
    let j0 = ds
        .label_index(&data.j0)
        .ok_or_else(|| Error::UnknownColumn(data.j0.clone()).at_stage("input"))?;
    Ok((ds, j0))
}

fn sila_config(args: &SelectionArgs, master: &RandomStream) -> SilaConfig {
    SilaConfig {
        delta1: args.delta1,
        delta2: args.delta2,
        grid_size: args.grid_size,
        inclusion_mode: args.inclusion,
        split_stream: master.derive(1),
        lasso: LassoOptions::default(),
    }
}

fn ib_config(args: &BiasCorrectionArgs, master: &RandomStream) -> IbConfig {
    IbConfig {
        h: args.h,
        epsilon: args.epsilon,
        k_max: args.k_max,
        randomness: args.randomness,
        mc_resolution: args.mc_resolution,
        ..IbConfig::new(master.derive(2))
    }
}

fn parameter_box(bound: f64) -> Result<ParameterBox, Failure> {
    Ok(ParameterBox::new(bound)?)
}

#[derive(Serialize)]
struct Selection<'a> {
    j0: usize,
    j0_label: &'a str,
    selected_indices: &'a [usize],
    selected_labels: &'a [String],
    lambda_hats: (f64, f64),
    half_support_labels: (Vec<&'a str>, Vec<&'a str>),
    trace: &'a SilaTrace,
}

fn cmd_select(args: &SelectArgs) -> Result<(), Failure> {
    let session = start("select", &args.run)?;
    let (ds, j0) = load(&args.data)?;
    let master = RandomStream::new(args.run.seed);
    let t = Instant::now();
    let (submodel, trace) = sila_select(&ds, j0, &sila_config(&args.selection, &master)).map_err(|e| e.at_stage("selection"))?;
    let selection_s = t.elapsed().as_secs_f64();
    let names = |s: &[usize]| s.iter().map(|&j| ds.labels()[j].as_str()).collect::<Vec<_>>();
    log::info!("selected {} of {} columns", submodel.len(), ds.d());
    session.write_json(
        "select.json",
        args,
        Selection {
            j0,
            j0_label: &ds.labels()[j0],
            selected_indices: submodel.indices(),
            selected_labels: &trace.selected_labels,
            lambda_hats: trace.lambda_hats,
            half_support_labels: (names(&trace.half_supports.0), names(&trace.half_supports.1)),
            trace: &trace,
        },
    )?;
    session.write_timing(args, StageTimings {
        selection_s,
        bias_correction_s: 0.0,
    })
}

fn fit_common(
    data: &DataArgs,
    selection: &SelectionArgs,
    correction: &BiasCorrectionArgs,
    seed: u64,
) -> Result<(Dataset, SilabResult, StageTimings), Failure> {
    let (ds, j0) = load(data)?;
    let master = RandomStream::new(seed);
    let bounds = parameter_box(correction.box_bound)?;
    let (result, timings) = silab_fit_timed(
        &ds,
        j0,
        &sila_config(selection, &master),
        &ib_config(correction, &master),
        &bounds,
    )?;
    if !result.trace.ib.converged {
        log::warn!("iterative bootstrap did not converge; the estimate is the last iterate");
    }
    Ok((ds, result, timings))
}

#[derive(Serialize)]
struct FitOutput<'a> {
    fit: &'a SilabResult,
    intervals: Vec<IntervalResult>,
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let session = start("fit", &args.run)?;
    let (ds, result, timings) = fit_common(&args.data, &args.selection, &args.correction, args.run.seed)?;
    let intervals = args
        .alpha
        .iter()
        .map(|&a| confidence_interval(&result, ds.n(), a, args.side))
        .collect::<Result<Vec<_>, _>>()?;
    session.write_json(
        "fit.json",
        args,
        FitOutput {
            fit: &result,
            intervals,
        },
    )?;
    session.write_timing(args, timings)
}

#[derive(Serialize)]
struct TestCase {
    null_value: f64,
    alternative: Alternative,
    alpha: f64,
    reject: bool,
    test: TestResult,
    /// The interval whose exclusion of the null value is the rejection event.
    interval: IntervalResult,
}

#[derive(Serialize)]
struct TestOutput<'a> {
    fit: &'a SilabResult,
    tests: Vec<TestCase>,
}

fn cmd_test(args: &TestArgs) -> Result<(), Failure> {
    let session = start("test", &args.run)?;
    let (ds, result, timings) = fit_common(&args.data, &args.selection, &args.correction, args.run.seed)?;
    let n = ds.n();
    let mut tests = Vec::new();
    for &null_value in &args.null_value {
        for &alternative in &args.alternative {
            for &alpha in &args.alpha {
                let interval = confidence_interval(&result, n, alpha, alternative.matching_side())?;
                let test = hypothesis_test_at(&result, n, null_value, alternative, &[alpha]);
                tests.push(TestCase {
                    null_value,
                    alternative,
                    alpha,
                    reject: test.p_value < alpha,
                    test,
                    interval,
                });
            }
        }
    }
    session.write_json("test.json", args, TestOutput { fit: &result, tests })?;
    session.write_timing(args, timings)
}

#[derive(Serialize)]
struct SimulationTimings<'a> {
    replications: &'a [RepTiming],
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let session = start("simulate", &args.run)?;
    let setting = SimSetting {
        n: args.n,
        d: args.d,
        d0: args.d0,
        rho: args.rho,
        replications: args.replications,
        master_seed: args.run.seed,
    };
    let method = MethodConfig {
        j0: args.j0,
        delta1: args.selection.delta1,
        delta2: args.selection.delta2,
        grid_size: args.selection.grid_size,
        inclusion_mode: args.selection.inclusion,
        lasso: LassoOptions::default(),
        h: args.correction.h,
        epsilon: args.correction.epsilon,
        k_max: args.correction.k_max,
        randomness: args.correction.randomness,
        mc_resolution: args.correction.mc_resolution,
        box_bound: args.correction.box_bound,
    };
    let grid = if args.alpha.is_empty() {
        default_alpha_grid()
    } else {
        args.alpha.clone()
    };
    let report = run_monte_carlo(&setting, &method, &default_tests(), &grid)?;
    session.write_json("report.json", args, &report)?;
    write_size_power_csv(&report, &session.out.join("size_power.csv"))?;
    write_estimates_csv(&report, &session.out.join("estimates.csv"))?;
    session.write_timing(args, SimulationTimings {
        replications: &report.timings,
    })?;
    let frac = report.aggregates.failure_fraction;
    if frac > MAX_FAILURE_FRACTION {
        return Err(Failure {
            code: 4,
            message: format!(
                "{} of {} replications failed ({:.1}% > {:.0}%)",
                report.failures.len(),
                setting.replications,
                100.0 * frac,
                100.0 * MAX_FAILURE_FRACTION
            ),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct Diagnosis {
    full: Option<DesignDiagnostics>,
    selected: Option<(Vec<String>, DesignDiagnostics)>,
}

fn cmd_diagnose(args: &DiagnoseArgs) -> Result<(), Failure> {
    let session = start("diagnose", &args.run)?;
    let (ds, j0) = load(&args.data)?;
    let bounds = parameter_box(args.box_bound)?;
    let full = (ds.d() < ds.n()).then(|| design_diagnostics(&ds, &bounds));
    let mut selection_s = 0.0;
    let selected = if args.select {
        let t = Instant::now();
        let master = RandomStream::new(args.run.seed);
        let (s, trace) = sila_select(&ds, j0, &sila_config(&args.selection, &master)).map_err(|e| e.at_stage("selection"))?;
        selection_s = t.elapsed().as_secs_f64();
        Some((trace.selected_labels, design_diagnostics(&ds.restrict(&s)?, &bounds)))
    } else {
        None
    };
    for d in full.iter().chain(selected.as_ref().map(|(_, d)| d)) {
        for w in d.warnings() {
            log::warn!("{}: {}", w.condition, w.description);
        }
    }
    session.write_json("diagnose.json", args, Diagnosis { full, selected })?;
    session.write_timing(args, StageTimings {
        selection_s,
        bias_correction_s: 0.0,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Select(a) => cmd_select(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Diagnose(a) => cmd_diagnose(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
