//! The four subcommands as library functions.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use esl_core::ensembles::rng::trial_seed;
use esl_core::ensembles::{self, validate_ensemble, EnsembleConfig, EnsembleDiagnostics, Model};
use esl_core::limits::{density_from_stieltjes, law_support, Atom, LawCdf};
use esl_core::metrics::{ComparisonReport, ReportMeta};
use esl_core::spectra::{default_edges, eigenvalues_symmetric, esd_histogram, EigList};
use esl_core::{Complex64, EslError, LimitLaw, SolverOptions};

use crate::config::{ExperimentConfig, DEFAULT_THEORY_POINTS};
use crate::error::CliError;
use crate::output::{fmt_real, OutputDir, Provenance, VERSION};

pub const THREADS_VAR: &str = "ESL_THREADS";

/// Worker count from `ESL_THREADS`; `None` means all cores.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(vec![format!("{THREADS_VAR} must be a positive integer, got `{s}`")])),
        },
    }
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))
}

/// `points` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityMethod {
    /// Root selection / continuation directly on the real axis.
    #[default]
    Direct,
    /// Extrapolation of `Im f(lambda + i eta) / pi` over the eta schedule.
    Inversion,
}

/// Density values on `grid`; failed points are `NaN` and listed separately.
pub fn density_curve(
    law: &LimitLaw,
    grid: &[f64],
    method: DensityMethod,
    eta: &[f64],
    opts: &SolverOptions,
) -> (Vec<f64>, Vec<(f64, EslError)>) {
    let results: Vec<Result<f64, EslError>> = grid
        .par_iter()
        .map(|&x| match method {
            DensityMethod::Direct => law.density(x, opts),
            DensityMethod::Inversion => density_from_stieltjes(law, x, eta, opts),
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut failures = Vec::new();
    for (&x, r) in grid.iter().zip(results) {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                values.push(f64::NAN);
                failures.push((x, e));
            }
        }
    }
    (values, failures)
}

fn write_density(out: &OutputDir, grid: &[f64], density: &[f64], failures: usize) -> Result<PathBuf, CliError> {
    out.write_text("theory_density.csv", |w| {
        if failures > 0 {
            writeln!(w, "# partial: {failures} grid points failed")?;
        }
        writeln!(w, "lambda,density")?;
        for (x, d) in grid.iter().zip(density) {
            writeln!(w, "{},{}", fmt_real(*x), fmt_real(*d))?;
        }
        Ok(())
    })
}

#[derive(Debug, Clone, Serialize)]
struct AtomEntry {
    lambda: f64,
    weight: f64,
}

#[derive(Debug, Clone, Serialize)]
struct AtomsFile<'a> {
    #[serde(flatten)]
    provenance: &'a Provenance,
    law: String,
    atoms: Vec<AtomEntry>,
}

fn write_atoms(out: &OutputDir, law: &LimitLaw, atoms: &[Atom]) -> Result<PathBuf, CliError> {
    let file = AtomsFile {
        provenance: out.provenance(),
        law: law.to_string(),
        atoms: atoms.iter().map(|a| AtomEntry { lambda: a.location, weight: a.weight }).collect(),
    };
    out.write_json("theory_atoms.json", &file)
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: ComparisonReport,
    pub pooled: EigList,
    pub files: Vec<PathBuf>,
    /// Theory grid points where the solver failed.
    pub failed_points: Vec<(f64, String)>,
}

/// Eigenvalues of trial `k`, drawn from its own seed substream.
pub fn trial_spectrum(ensemble: &EnsembleConfig, k: usize) -> Result<EigList, EslError> {
    let cfg = ensemble.with_seed(trial_seed(ensemble.seed, k as u64));
    let matrix = ensembles::build(&cfg)?;
    eigenvalues_symmetric(&matrix)
}

/// Runs all trials, writes the artifacts and compares the pooled spectrum
/// with the configured law.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutcome, CliError> {
    let digest = cfg.digest();
    let seed = cfg.seed();
    let out = OutputDir::create(&cfg.out, Provenance::new(digest.clone(), Some(seed)))?;
    let pool = thread_pool(threads)?;
    let spectra: Vec<EigList> = pool.install(|| {
        (0..cfg.trials).into_par_iter().map(|k| trial_spectrum(&cfg.ensemble, k)).collect::<Result<Vec<_>, _>>()
    })?;

    let mut files = Vec::new();
    for (k, eigs) in spectra.iter().enumerate() {
        files.push(out.write_text(&format!("eigs_trial{k}.txt"), |w| Ok(eigs.write_txt(&mut *w)?))?);
    }
    let pooled = EigList::pooled(&spectra);
    let edges = default_edges(&pooled, cfg.bins)?;
    let hist = esd_histogram(&pooled, &edges)?;
    files.push(out.write_text("esd.csv", |w| Ok(hist.write_csv(&mut *w)?))?);

    let grid = linspace(edges[0], edges[edges.len() - 1], DEFAULT_THEORY_POINTS);
    let (density, failures) = pool.install(|| density_curve(&cfg.law, &grid, cfg.method, &cfg.eta, &cfg.solver));
    files.push(write_density(&out, &grid, &density, failures.len())?);
    files.push(write_atoms(&out, &cfg.law, &cfg.law.atoms())?);

    let meta = ReportMeta { n: cfg.ensemble.n, trials: cfg.trials, seed, digest, version: VERSION.to_string() };
    let report = pool.install(|| ComparisonReport::build(&pooled, &cfg.law, cfg.moments, meta, &cfg.solver))?;
    files.push(out.write_json("report.json", &report)?);

    Ok(RunOutcome {
        report,
        pooled,
        files,
        failed_points: failures.into_iter().map(|(x, e)| (x, e.to_string())).collect(),
    })
}

/// Grid and solver settings of the `theory` command.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRequest {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub points: usize,
    pub eta: Vec<f64>,
    pub method: DensityMethod,
    pub solver: SolverOptions,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct TheoryOutcome {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub cdf: Vec<f64>,
    pub atoms: Vec<Atom>,
    pub files: Vec<PathBuf>,
    /// Descriptions of every failed solve.
    pub failures: Vec<String>,
}

fn theory_digest(law: &LimitLaw, req: &TheoryRequest, lo: f64, hi: f64) -> String {
    let eta: Vec<String> = req.eta.iter().map(|e| e.to_string()).collect();
    let text = format!(
        "law={law};lo={lo};hi={hi};points={};eta={};method={:?};tol={};max_iter={}",
        req.points,
        eta.join(","),
        req.method,
        req.solver.tol,
        req.solver.max_iter
    );
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Default plotting window: the support hull widened by 10% on each side.
fn default_window(law: &LimitLaw, opts: &SolverOptions) -> Result<(f64, f64), EslError> {
    let (a, b) = law_support(law, opts)?.hull().unwrap_or((-1.0, 1.0));
    let pad = if b > a { 0.1 * (b - a) } else { 1.0 };
    Ok((a - pad, b + pad))
}

/// Density, distribution function, atoms and Stieltjes trace of a law.
pub fn theory_curve(law: &LimitLaw, req: &TheoryRequest) -> Result<TheoryOutcome, CliError> {
    law.validate()?;
    let (lo, hi) = match (req.lo, req.hi) {
        (Some(lo), Some(hi)) => (lo, hi),
        (lo, hi) => {
            let (a, b) = default_window(law, &req.solver)?;
            (lo.unwrap_or(a), hi.unwrap_or(b))
        }
    };
    if !(lo < hi) || req.points < 2 {
        return Err(CliError::Config(vec![format!(
            "the grid needs lo < hi and at least two points (lo={lo}, hi={hi}, points={})",
            req.points
        )]));
    }
    let out = OutputDir::create(&req.out, Provenance::new(theory_digest(law, req, lo, hi), None))?;
    let grid = linspace(lo, hi, req.points);
    let mut failures = Vec::new();
    let mut files = Vec::new();

    let (density, failed) = density_curve(law, &grid, req.method, &req.eta, &req.solver);
    failures.extend(failed.iter().map(|(x, e)| format!("density at {x}: {e}")));
    files.push(write_density(&out, &grid, &density, failed.len())?);

    let cdf = match LawCdf::new(law, &req.solver) {
        Ok(table) => grid.iter().map(|&x| table.cdf(x)).collect(),
        Err(e) => {
            failures.push(format!("distribution function: {e}"));
            vec![f64::NAN; grid.len()]
        }
    };
    files.push(out.write_text("theory_cdf.csv", |w| {
        if cdf.iter().any(|c: &f64| c.is_nan()) {
            writeln!(w, "# partial: distribution function unavailable")?;
        }
        writeln!(w, "lambda,cdf")?;
        for (x, c) in grid.iter().zip(&cdf) {
            writeln!(w, "{},{}", fmt_real(*x), fmt_real(*c))?;
        }
        Ok(())
    })?);

    let atoms = law.atoms();
    files.push(write_atoms(&out, law, &atoms)?);

    let trace: Vec<(f64, f64, Result<esl_core::SolveReport, EslError>)> = grid
        .par_iter()
        .flat_map_iter(|&x| req.eta.iter().map(move |&e| (x, e, law.stieltjes(Complex64::new(x, e), &req.solver))))
        .collect();
    files.push(out.write_text("stieltjes_trace.csv", |w| {
        writeln!(w, "re_z,im_z,re_f,im_f,residual,iterations")?;
        for (x, e, r) in &trace {
            match r {
                Ok(rep) => writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    fmt_real(*x),
                    fmt_real(*e),
                    fmt_real(rep.f.re),
                    fmt_real(rep.f.im),
                    fmt_real(rep.residual),
                    rep.iterations
                )?,
                Err(_) => writeln!(w, "{},{},NaN,NaN,NaN,0", fmt_real(*x), fmt_real(*e))?,
            }
        }
        Ok(())
    })?);
    failures.extend(
        trace.iter().filter_map(|(x, e, r)| r.as_ref().err().map(|err| format!("stieltjes at {x}+{e}i: {err}"))),
    );

    Ok(TheoryOutcome { grid, density, cdf, atoms, files, failures })
}

/// Eigenvalue file contents plus whatever provenance its header carries.
#[derive(Debug, Clone)]
pub struct EigenFile {
    pub eigs: EigList,
    pub digest: String,
    pub seed: Option<u64>,
}

pub fn read_eigen_file(path: &Path) -> Result<EigenFile, CliError> {
    let open = || std::fs::File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())));
    let header = BufReader::new(open()?).lines().next().transpose()?.unwrap_or_default();
    let eigs = EigList::read_txt(BufReader::new(open()?))?;
    let (digest, seed) = Provenance::parse_header(&header).unwrap_or_else(|| {
        let mut h = Sha256::new();
        for v in eigs.as_slice() {
            h.update(v.to_le_bytes());
        }
        (hex::encode(h.finalize()), None)
    });
    Ok(EigenFile { eigs, digest, seed })
}

/// Compares stored eigenvalues with a law. `trials` only scales the reported
/// matrix side: `n = len / trials`.
pub fn compare(
    file: &EigenFile,
    law: &LimitLaw,
    trials: usize,
    moments: usize,
    opts: &SolverOptions,
) -> Result<ComparisonReport, CliError> {
    if trials == 0 || !file.eigs.len().is_multiple_of(trials) {
        return Err(CliError::Config(vec![format!(
            "{} eigenvalues cannot be split into {trials} trials",
            file.eigs.len()
        )]));
    }
    let meta = ReportMeta {
        n: file.eigs.len() / trials,
        trials,
        seed: file.seed.unwrap_or(0),
        digest: file.digest.clone(),
        version: VERSION.to_string(),
    };
    Ok(ComparisonReport::build(&file.eigs, law, moments, meta, opts)?)
}

/// Structural checks on one realization.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationSummary {
    /// General models: deviations of the covariance family from `I/n`.
    Covariance { model: Model, n: usize, m: usize, cov: String, diagnostics: EnsembleDiagnostics },
    /// Block models: the trace identity of the sampled matrix.
    Block { model: Model, r: usize, d: usize, active_edges: usize, trace: f64, expected_trace: f64, trace_ok: bool },
}

impl ValidationSummary {
    pub fn passed(&self) -> bool {
        match self {
            ValidationSummary::Covariance { .. } => true,
            ValidationSummary::Block { trace_ok, .. } => *trace_ok,
        }
    }
}

/// Tolerance of the trace identity, relative to `1 + |expected|`.
pub const TRACE_RTOL: f64 = 1e-10;

pub fn validate(cfg: &EnsembleConfig) -> Result<ValidationSummary, CliError> {
    cfg.validate()?;
    if !cfg.model.is_block() {
        return Ok(ValidationSummary::Covariance {
            model: cfg.model,
            n: cfg.n,
            m: cfg.m,
            cov: cfg.cov.to_string(),
            diagnostics: validate_ensemble(cfg)?,
        });
    }
    let sample = match cfg.model {
        Model::BlockL => ensembles::build_block_l(cfg)?,
        _ => ensembles::build_block_a(cfg)?,
    };
    let trace = sample.matrix.trace();
    // each Laplacian edge adds xi |v|^2 to both endpoint blocks; adjacency
    // blocks are off-diagonal
    let expected_trace = match cfg.model {
        Model::BlockL => sample.edges.iter().map(|e| 2.0 * e.xi * e.v.iter().map(|x| x * x).sum::<f64>()).sum(),
        _ => 0.0,
    };
    Ok(ValidationSummary::Block {
        model: cfg.model,
        r: cfg.r,
        d: cfg.d,
        active_edges: sample.edges.len(),
        trace,
        expected_trace,
        trace_ok: (trace - expected_trace).abs() <= TRACE_RTOL * (1.0 + expected_trace.abs()),
    })
}
