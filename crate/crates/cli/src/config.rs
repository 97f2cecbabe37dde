//! Experiment configuration: flags, JSON files and their validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use esl_core::ensembles::{CovFamilySpec, EnsembleConfig, Model};
use esl_core::limits::DEFAULT_ETA_SCHEDULE;
use esl_core::{SolverOptions, XiSpec};

use crate::commands::DensityMethod;
use crate::error::CliError;
use crate::law_select::LawSelector;

pub const DEFAULT_TRIALS: usize = 1;
pub const DEFAULT_MOMENTS: usize = 4;
pub const DEFAULT_THEORY_POINTS: usize = 500;

/// Every field is optional so that a JSON file and command-line flags can be
/// layered; [`ExperimentInput::resolve`] fills defaults and validates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentInput {
    pub model: Option<Model>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub r: Option<usize>,
    pub d: Option<usize>,
    pub xi: Option<XiSpec>,
    pub cov: Option<CovFamilySpec>,
    pub law: Option<String>,
    pub trials: Option<usize>,
    pub bins: Option<usize>,
    pub seed: Option<u64>,
    pub eta: Option<Vec<f64>>,
    /// How theory densities are evaluated; `inversion` uses `eta`.
    pub method: Option<DensityMethod>,
    pub moments: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentInput {
    pub fn from_json_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(vec![format!("{}: {e}", path.display())]))
    }

    /// Values set in `other` take precedence.
    pub fn overlay(self, other: ExperimentInput) -> ExperimentInput {
        ExperimentInput {
            model: other.model.or(self.model),
            n: other.n.or(self.n),
            m: other.m.or(self.m),
            r: other.r.or(self.r),
            d: other.d.or(self.d),
            xi: other.xi.or(self.xi),
            cov: other.cov.or(self.cov),
            law: other.law.or(self.law),
            trials: other.trials.or(self.trials),
            bins: other.bins.or(self.bins),
            seed: other.seed.or(self.seed),
            eta: other.eta.or(self.eta),
            method: other.method.or(self.method),
            moments: other.moments.or(self.moments),
            tol: other.tol.or(self.tol),
            max_iter: other.max_iter.or(self.max_iter),
            out: other.out.or(self.out),
        }
    }

    /// Only the ensemble part, for commands that need no law.
    pub fn resolve_ensemble(&self) -> Result<EnsembleConfig, CliError> {
        let mut errors = Vec::new();
        let ensemble = self.ensemble(&mut errors);
        match ensemble {
            Some(e) if errors.is_empty() => Ok(e),
            _ => Err(CliError::Config(errors)),
        }
    }

    fn ensemble(&self, errors: &mut Vec<String>) -> Option<EnsembleConfig> {
        let seed = self.seed.unwrap_or(0);
        let Some(model) = self.model else {
            errors.push("--model is required".into());
            return None;
        };
        let Some(xi) = self.xi.clone() else {
            errors.push("--xi is required".into());
            return None;
        };
        let config = if model.is_block() {
            if self.n.is_some() || self.m.is_some() {
                errors.push("block models take --r and --d, not --n or --m".into());
            }
            if self.cov.is_some() {
                errors.push("block models use sphere-uniform vectors; --cov does not apply".into());
            }
            match (self.r, self.d) {
                (Some(r), Some(d)) => match model {
                    Model::BlockL => EnsembleConfig::block_l(r, d, xi, seed),
                    _ => EnsembleConfig::block_a(r, d, xi, seed),
                },
                _ => {
                    errors.push("block models need --r and --d".into());
                    return None;
                }
            }
        } else {
            if self.r.is_some() || self.d.is_some() {
                errors.push("general models take --n and --m, not --r or --d".into());
            }
            let cov = self.cov.unwrap_or(CovFamilySpec::Isotropic);
            match (self.n, self.m) {
                (Some(n), Some(m)) => match model {
                    Model::GeneralL => EnsembleConfig::general_l(n, m, xi, cov, seed),
                    _ => EnsembleConfig::general_a(n, m, xi, cov, seed),
                },
                _ => {
                    errors.push("general models need --n and --m".into());
                    return None;
                }
            }
        };
        errors.extend(config.validation_errors().into_iter().map(|e| e.to_string()));
        Some(config)
    }

    pub fn solver_options(&self) -> Result<SolverOptions, String> {
        let mut opts = SolverOptions::default();
        if let Some(tol) = self.tol {
            opts.tol = tol;
        }
        if let Some(max_iter) = self.max_iter {
            opts.max_iter = max_iter;
        }
        opts.validate().map_err(|e| e.to_string())?;
        Ok(opts)
    }

    /// Fills defaults and reports every problem at once.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let mut errors = Vec::new();
        let ensemble = self.ensemble(&mut errors);
        let selector = match self.law.as_deref().unwrap_or("auto").parse::<LawSelector>() {
            Ok(s) => Some(s),
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        };
        let trials = self.trials.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            errors.push("--trials must be positive".into());
        }
        let bins = self.bins.unwrap_or(esl_core::spectra::DEFAULT_BINS);
        if bins == 0 {
            errors.push("--bins must be positive".into());
        }
        let moments = self.moments.unwrap_or(DEFAULT_MOMENTS);
        if moments == 0 {
            errors.push("--moments must be positive".into());
        }
        let eta = self.eta.clone().unwrap_or_else(|| DEFAULT_ETA_SCHEDULE.to_vec());
        if let Err(e) = check_eta_schedule(&eta) {
            errors.push(e);
        }
        let solver = match self.solver_options() {
            Ok(o) => o,
            Err(e) => {
                errors.push(e);
                SolverOptions::default()
            }
        };
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from("esl-out"));
        let law = match (&ensemble, &selector) {
            (Some(ens), Some(sel)) if errors.is_empty() => match sel.resolve(Some(ens)) {
                Ok(law) => Some(law),
                Err(e) => {
                    errors.push(e.to_string());
                    None
                }
            },
            _ => None,
        };
        match (ensemble, law) {
            (Some(ensemble), Some(law)) if errors.is_empty() => Ok(ExperimentConfig {
                ensemble,
                law_selector: self.law.clone().unwrap_or_else(|| "auto".into()),
                law,
                trials,
                bins,
                eta,
                method: self.method.unwrap_or_default(),
                moments,
                solver,
                out,
            }),
            _ => Err(CliError::Config(errors)),
        }
    }
}

pub fn check_eta_schedule(eta: &[f64]) -> Result<(), String> {
    if eta.len() < 2 {
        return Err("--eta needs at least two values".into());
    }
    if eta.iter().any(|e| !(*e > 0.0 && e.is_finite())) || eta.windows(2).any(|w| !(w[0] > w[1])) {
        return Err("--eta values must be positive and strictly decreasing".into());
    }
    Ok(())
}

pub fn parse_eta_schedule(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad eta value `{t}`: {e}"))).collect()
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleConfig,
    pub law_selector: String,
    pub law: esl_core::LimitLaw,
    pub trials: usize,
    pub bins: usize,
    pub eta: Vec<f64>,
    pub method: DensityMethod,
    pub moments: usize,
    pub solver: SolverOptions,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn seed(&self) -> u64 {
        self.ensemble.seed
    }

    /// SHA-256 (hex) of everything that determines the results except the
    /// seed and the output location.
    pub fn digest(&self) -> String {
        let eta: Vec<String> = self.eta.iter().map(|e| e.to_string()).collect();
        let text = format!(
            "{};law={};trials={};bins={};moments={};eta={};method={:?};tol={};max_iter={}",
            self.ensemble.canonical(),
            self.law,
            self.trials,
            self.bins,
            self.moments,
            eta.join(","),
            self.method,
            self.solver.tol,
            self.solver.max_iter
        );
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}
