use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mmps::error::MmpsError;
use mmps::format::{model_to_json, parse_model};
use mmps::growth::{GrowthRateReport, GrowthSolution};
use mmps::model::MmpsSystem;
use mmps::railway::{build_model, default_params};
use mmps::report::{self, Tolerances};
use mmps::simulator::simulate;
use mmps::solvability::Solvability;
use mmps::stability::Verdict;

#[derive(Parser)]
#[command(name = "mmps", version, about = "Analysis of implicit max-min-plus-scaling systems")]
struct Cli {
    /// Rank and zero tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads for the growth-rate programs (1 = sequential)
    #[arg(long, global = true, value_name = "N")]
    parallel: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file; exit 0 iff valid and time-invariant
    Validate { model: PathBuf },
    /// Full pipeline report
    Analyze { model: PathBuf },
    /// Dependency certificate or a witnessing cycle
    Solvability { model: PathBuf },
    /// Solve every footprint program and group the rates
    GrowthRates { model: PathBuf },
    /// Fixed-point sets, one per growth rate
    FixedPoints {
        model: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Normalized matrices at each rate's fixed point
    Normalize {
        model: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Linear map and validity region at each rate's fixed point
    Linearize {
        model: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Spectral stability at each rate's fixed point
    Stability {
        model: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Iterate the system from an initial state
    Simulate {
        model: PathBuf,
        /// JSON array of initial states, or "fixed-point"
        #[arg(long)]
        x0: String,
        #[arg(long)]
        cycles: usize,
        /// Rate whose fixed point is used with `--x0 fixed-point`
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum, default_value_t = TrajectoryFormat::Csv)]
        format: TrajectoryFormat,
    },
    /// Generate the urban railway model
    Railway {
        #[arg(long)]
        stations: Option<usize>,
        /// Parameter override, e.g. `--param tau_r=45`
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Write the model here instead of standard output
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TrajectoryFormat {
    Csv,
    Json,
}

enum Failure {
    /// exit 1
    Negative(String),
    /// exit 2
    Usage(String),
}

impl From<MmpsError> for Failure {
    fn from(e: MmpsError) -> Self {
        match e {
            MmpsError::Parse(_) | MmpsError::InvalidArgument(_) | MmpsError::Dimension(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Negative(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Negative(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn init_logging() {
    let level = match std::env::var("MMPS_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new().filter_level(level).init();
}

fn run(cli: &Cli) -> Outcome {
    let tol = cli.tol.map_or_else(Tolerances::default, Tolerances::with_tol);
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t > 0.0) {
            return Err(Failure::Usage(format!("--tol must be positive, got {t}")));
        }
    }
    let threads = cli.parallel.unwrap_or(1);
    if threads == 0 {
        return Err(Failure::Usage("--parallel must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    pool.install(|| dispatch(&cli.command, threads > 1, &tol))
}

fn dispatch(command: &Command, parallel: bool, tol: &Tolerances) -> Outcome {
    match command {
        Command::Validate { model } => validate(&load(model)?),
        Command::Analyze { model } => {
            let system = load(model)?;
            let validation = report::validation_stage(&system);
            if !validation.passed() {
                print_json(&validation);
                report_validation(&validation);
                return Ok(false);
            }
            let analysis = report::analyze(&system, parallel, tol)?;
            print_json(&analysis);
            if let Solvability::NotSolvable { cycle } = &analysis.solvability {
                eprintln!("not solvable: dependency cycle {cycle:?}");
            }
            Ok(analysis.is_positive())
        }
        Command::Solvability { model } => {
            let result = report::solvability_stage(&load(model)?);
            print_json(&result);
            Ok(result.certificate().is_some())
        }
        Command::GrowthRates { model } => {
            let system = load(model)?;
            let (section, _) = report::growth_stage(&system, parallel)?;
            print_json(&section);
            Ok(!section.lambdas.is_empty())
        }
        Command::FixedPoints { model, lambda } => {
            let system = load(model)?;
            let mut out = Vec::new();
            for sol in selected_rates(&system, *lambda, parallel, tol)? {
                out.push(report::fixed_point_stage(&system, &sol, tol)?.0);
            }
            print_json(&out);
            Ok(!out.is_empty())
        }
        Command::Normalize { model, lambda } => {
            let system = load(model)?;
            let mut out = Vec::new();
            for sol in selected_rates(&system, *lambda, parallel, tol)? {
                out.push(report::normalization_stage(&system, &sol, tol)?.0);
            }
            print_json(&out);
            Ok(!out.is_empty() && out.iter().all(|s| s.structure_ok))
        }
        Command::Linearize { model, lambda } => {
            let system = load(model)?;
            let mut out = Vec::new();
            for sol in selected_rates(&system, *lambda, parallel, tol)? {
                let (_, ns) = report::normalization_stage(&system, &sol, tol)?;
                out.push(report::linearization_stage(&ns)?.0);
            }
            print_json(&out);
            Ok(!out.is_empty())
        }
        Command::Stability { model, lambda } => {
            let system = load(model)?;
            let mut out = Vec::new();
            for sol in selected_rates(&system, *lambda, parallel, tol)? {
                let (_, fps) = report::fixed_point_stage(&system, &sol, tol)?;
                let (_, ns) = report::normalization_stage(&system, &sol, tol)?;
                let (_, ls) = report::linearization_stage(&ns)?;
                out.push(report::stability_stage(&system, &ls, &fps, tol)?);
            }
            print_json(&out);
            Ok(!out.is_empty() && out.iter().all(|s| s.report.verdict == Verdict::Stable))
        }
        Command::Simulate {
            model,
            x0,
            cycles,
            lambda,
            format,
        } => {
            let system = load(model)?;
            let cert = match report::solvability_stage(&system) {
                Solvability::Solvable(cert) => cert,
                Solvability::NotSolvable { cycle } => {
                    return Err(Failure::Negative(format!("not solvable: dependency cycle {cycle:?}")));
                }
            };
            let start = if x0 == "fixed-point" {
                let rates = selected_rates(&system, *lambda, parallel, tol)?;
                match rates.into_iter().next() {
                    Some(sol) => sol.x_e,
                    None => return Err(Failure::Negative("the system has no growth rate".into())),
                }
            } else {
                let text = read(Path::new(x0))?;
                serde_json::from_str::<Vec<f64>>(&text)
                    .map_err(|e| Failure::Usage(format!("{x0}: expected a JSON array of numbers: {e}")))?
            };
            let traj = simulate(&system, &cert, &start, *cycles)?;
            match format {
                TrajectoryFormat::Csv => print!("{}", traj.to_csv()),
                TrajectoryFormat::Json => print_json(&traj),
            }
            Ok(true)
        }
        Command::Railway {
            stations,
            params,
            emit,
        } => {
            let mut p = default_params();
            for kv in params {
                let (key, value) = kv
                    .split_once('=')
                    .ok_or_else(|| Failure::Usage(format!("--param expects KEY=VALUE, got {kv:?}")))?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| Failure::Usage(format!("--param {key}: not a number: {value:?}")))?;
                p.set(key.trim(), value)?;
            }
            if let Some(j) = stations {
                p.stations = *j;
            }
            let system = build_model(&p).map_err(|e| Failure::Usage(e.to_string()))?;
            let text = model_to_json(&system);
            match emit {
                Some(path) => fs::write(path, text + "\n")
                    .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
                None => println!("{text}"),
            }
            Ok(true)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<MmpsSystem, Failure> {
    parse_model(&read(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", report::to_json(value));
}

fn report_validation(v: &report::ValidationSection) {
    for msg in &v.messages {
        eprintln!("invalid: {msg}");
    }
    if !v.time_invariance.holds {
        eprintln!(
            "not time-invariant: (C + D)·s − s_z = {:?}, failing rows {:?}",
            v.time_invariance.residuals, v.time_invariance.failing_rows
        );
    }
}

fn validate(system: &MmpsSystem) -> Outcome {
    let v = report::validation_stage(system);
    print_json(&v);
    report_validation(&v);
    Ok(v.passed())
}

/// The first solution of every rate, or of the one matching `lambda`.
fn selected_rates(
    system: &MmpsSystem,
    lambda: Option<f64>,
    parallel: bool,
    tol: &Tolerances,
) -> Result<Vec<GrowthSolution>, Failure> {
    let (_, rates): (_, GrowthRateReport) = report::growth_stage(system, parallel)?;
    Ok(match lambda {
        Some(l) => vec![report::select_rate(&rates, l, tol.lambda)?],
        None => rates.rates.iter().map(|g| g.solutions[0].clone()).collect(),
    })
}
