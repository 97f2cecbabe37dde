//! Command line parsing and dispatch.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use esl_core::ensembles::{CovFamilySpec, Model};
use esl_core::measure::measure_from_xi;
use esl_core::{LimitLaw, SolverOptions, WeightMeasure, XiSpec};

use crate::commands::{self, DensityMethod, TheoryRequest};
use crate::config::{check_eta_schedule, parse_eta_schedule, ExperimentInput, DEFAULT_MOMENTS, DEFAULT_THEORY_POINTS};
use crate::error::CliError;
use crate::law_select::LawSelector;

#[derive(Debug, Parser)]
#[command(name = "esl", version, about = "Spectra of random sums of rank-one matrices and their limiting laws")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the model, pool the spectra and compare with a law.
    Simulate(SimulateArgs),
    /// Density, distribution function and Stieltjes trace of a law.
    Theory {
        #[command(subcommand)]
        law: TheoryLaw,
    },
    /// Compare an eigenvalue file with a law.
    Compare(CompareArgs),
    /// Check the structural assumptions of an ensemble.
    Validate(EnsembleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EnsembleArgs {
    /// JSON file with the same keys as the flags; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<Model>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Weight law: const:<b>, bernoulli:<p>, rademacher:<s>, atoms:<v>@<p>,...
    #[arg(long)]
    pub xi: Option<XiSpec>,
    /// isotropic, sphere or diag-paired:<amp>
    #[arg(long)]
    pub cov: Option<CovFamilySpec>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Fixed-point residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Law selector, e.g. auto, semicircle, mp:b=1,c1=1, effective-medium:c=1
    #[arg(long)]
    pub law: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    /// Comma-separated decreasing eta values.
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<DensityMethod>,
    /// Highest moment order in the report.
    #[arg(long)]
    pub moments: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Eigenvalue file, one value per line; `#` lines are skipped.
    #[arg(long)]
    pub eigs: PathBuf,
    /// Law selector; ensemble-dependent selectors also need the ensemble flags.
    #[arg(long)]
    pub law: String,
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    /// Number of pooled samples in the file.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_MOMENTS)]
    pub moments: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also write report.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub lo: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub hi: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_THEORY_POINTS)]
    pub points: usize,
    /// Comma-separated decreasing eta values for the trace and inversion.
    #[arg(long)]
    pub eta: Option<String>,
    #[arg(long, value_enum, default_value_t = DensityMethod::Direct)]
    pub method: DensityMethod,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "esl-theory")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    /// Atoms <xi>@<weight>,... of the weight measure.
    #[arg(long, conflicts_with_all = ["xi", "m", "n"])]
    pub measure: Option<String>,
    /// Weight law; the measure is (m/n) xi P(dxi).
    #[arg(long, requires_all = ["m", "n"])]
    pub xi: Option<XiSpec>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
}

impl MeasureArgs {
    fn measure(&self) -> Result<WeightMeasure, CliError> {
        if let Some(text) = &self.measure {
            let atoms = text
                .split(',')
                .map(|pair| {
                    let (x, w) = pair.split_once('@').ok_or_else(|| format!("`{pair}` is not <xi>@<weight>"))?;
                    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
                    Ok((parse(x)?, parse(w)?))
                })
                .collect::<Result<Vec<_>, String>>()
                .map_err(|e| CliError::Config(vec![e]))?;
            return Ok(WeightMeasure::new(atoms)?);
        }
        match (&self.xi, self.m, self.n) {
            (Some(xi), Some(m), Some(n)) => Ok(measure_from_xi(xi, m, n)?),
            _ => Err(CliError::Config(vec!["give either --measure or --xi with --m and --n".into()])),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum TheoryLaw {
    /// Marchenko-Pastur law.
    Mp {
        #[arg(long)]
        b: f64,
        #[arg(long)]
        c1: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Standard semicircle on [-2, 2].
    Semicircle {
        #[command(flatten)]
        grid: GridArgs,
    },
    ShiftedSemicircle {
        #[arg(long, allow_negative_numbers = true)]
        c1: f64,
        #[arg(long)]
        c2: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    BlockLaplacian {
        #[arg(long)]
        c: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    EffectiveMedium {
        #[arg(long)]
        c: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Solution of z f = -1 + a f sum w / (1 + a xi f).
    FixedPoint {
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Solution of z f = -1 - 2 f^2 sum w xi / (1 - xi^2 f^2) (conjectural).
    AdjacencyGeneral {
        #[command(flatten)]
        measure: MeasureArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
}

impl EnsembleArgs {
    fn flags(&self) -> ExperimentInput {
        ExperimentInput {
            model: self.model,
            n: self.n,
            m: self.m,
            r: self.r,
            d: self.d,
            xi: self.xi.clone(),
            cov: self.cov,
            seed: self.seed,
            ..Default::default()
        }
    }

    /// Flags layered over the config file, if any.
    fn input(&self) -> Result<ExperimentInput, CliError> {
        self.layered(self.flags())
    }

    fn layered(&self, flags: ExperimentInput) -> Result<ExperimentInput, CliError> {
        match &self.config {
            Some(path) => Ok(ExperimentInput::from_json_file(path)?.overlay(flags)),
            None => Ok(flags),
        }
    }

    fn is_empty(&self) -> bool {
        self.config.is_none() && self.model.is_none()
    }
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions, CliError> {
        ExperimentInput { tol: self.tol, max_iter: self.max_iter, ..Default::default() }
            .solver_options()
            .map_err(|e| CliError::Config(vec![e]))
    }
}

fn eta_arg(text: &Option<String>) -> Result<Option<Vec<f64>>, CliError> {
    text.as_deref().map(parse_eta_schedule).transpose().map_err(|e| CliError::Config(vec![e]))
}

impl TheoryLaw {
    fn split(&self) -> Result<(LimitLaw, &GridArgs), CliError> {
        Ok(match self {
            TheoryLaw::Mp { b, c1, grid } => (LimitLaw::MarchenkoPastur { b: *b, c1: *c1 }, grid),
            TheoryLaw::Semicircle { grid } => (LimitLaw::semicircle(), grid),
            TheoryLaw::ShiftedSemicircle { c1, c2, grid } => (LimitLaw::ShiftedSemicircle { c1: *c1, c2: *c2 }, grid),
            TheoryLaw::BlockLaplacian { c, grid } => (LimitLaw::BlockLaplacian { c: *c }, grid),
            TheoryLaw::EffectiveMedium { c, grid } => (LimitLaw::EffectiveMedium { c: *c }, grid),
            TheoryLaw::FixedPoint { measure, a, grid } => {
                (LimitLaw::FixedPoint { measure: measure.measure()?, a: *a }, grid)
            }
            TheoryLaw::AdjacencyGeneral { measure, grid } => {
                (LimitLaw::AdjacencyGeneral { measure: measure.measure()? }, grid)
            }
        })
    }
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(text: String) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn warn_conjectural(law: &LimitLaw) {
    if law.is_conjectural() {
        eprintln!("warning: {law} rests on a conjectured equation; its outputs are conjectural");
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let flags = ExperimentInput {
                law: args.law.clone(),
                trials: args.trials,
                bins: args.bins,
                eta: eta_arg(&args.eta)?,
                method: args.method,
                moments: args.moments,
                tol: args.solver.tol,
                max_iter: args.solver.max_iter,
                out: args.out.clone(),
                ..args.ensemble.flags()
            };
            let cfg = args.ensemble.layered(flags)?.resolve()?;
            warn_conjectural(&cfg.law);
            let threads = commands::threads_from_env()?;
            let outcome = commands::run_experiment(&cfg, threads)?;
            emit(format!(
                "law {}  ks {:.6}  n {}  trials {}  -> {}",
                outcome.report.law,
                outcome.report.ks,
                outcome.report.n,
                outcome.report.trials,
                cfg.out.display()
            ));
            if outcome.failed_points.is_empty() {
                Ok(0)
            } else {
                for (x, e) in &outcome.failed_points {
                    eprintln!("density failed at {x}: {e}");
                }
                Err(CliError::Certification(format!("{} theory grid points failed", outcome.failed_points.len())))
            }
        }
        Command::Theory { law } => {
            let (law, grid) = law.split()?;
            let eta = eta_arg(&grid.eta)?.unwrap_or_else(|| esl_core::limits::DEFAULT_ETA_SCHEDULE.to_vec());
            check_eta_schedule(&eta).map_err(|e| CliError::Config(vec![e]))?;
            let req = TheoryRequest {
                lo: grid.lo,
                hi: grid.hi,
                points: grid.points,
                eta,
                method: grid.method,
                solver: grid.solver.options()?,
                out: grid.out.clone(),
            };
            warn_conjectural(&law);
            let outcome = commands::theory_curve(&law, &req)?;
            emit(format!("law {}  points {}  -> {}", law, outcome.grid.len(), req.out.display()));
            if outcome.failures.is_empty() {
                Ok(0)
            } else {
                for f in &outcome.failures {
                    eprintln!("{f}");
                }
                Err(CliError::Certification(format!("{} solves failed", outcome.failures.len())))
            }
        }
        Command::Compare(args) => {
            let selector: LawSelector =
                args.law.parse().map_err(|e: esl_core::EslError| CliError::Config(vec![e.to_string()]))?;
            let ensemble = if selector.needs_ensemble() || !args.ensemble.is_empty() {
                Some(args.ensemble.input()?.resolve_ensemble()?)
            } else {
                None
            };
            let law = selector.resolve(ensemble.as_ref()).map_err(|e| CliError::Config(vec![e.to_string()]))?;
            warn_conjectural(&law);
            let file = commands::read_eigen_file(&args.eigs)?;
            let report = commands::compare(&file, &law, args.trials, args.moments, &args.solver.options()?)?;
            let json = report.to_json()?;
            if let Some(dir) = &args.out {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("report.json"), format!("{json}\n"))?;
            }
            emit(json);
            Ok(0)
        }
        Command::Validate(args) => {
            let cfg = args.input()?.resolve_ensemble()?;
            let summary = commands::validate(&cfg)?;
            emit(serde_json::to_string_pretty(&summary).map_err(|e| CliError::Io(e.to_string()))?);
            if summary.passed() {
                Ok(0)
            } else {
                Err(CliError::Certification("trace identity violated".into()))
            }
        }
    }
}
