//! `--law` selectors and the automatic choice of a law for a model.
//!
//! Grammar: `auto`, `semicircle`, `mp:b=<b>,c1=<c1>`,
//! `shifted-semicircle:c1=<c1>,c2=<c2>`, `block-laplacian:c=<c>`,
//! `effective-medium:c=<c>`, `fixed-point[:a=<a>]`, `adjacency-general`.
//! The last two take their weight measure from the ensemble.

use std::collections::BTreeMap;
use std::str::FromStr;

use esl_core::ensembles::{EnsembleConfig, Model};
use esl_core::measure::measure_from_xi;
use esl_core::{EslError, LimitLaw, WeightMeasure, XiSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum LawSelector {
    Auto,
    Explicit(LimitLaw),
    FixedPoint { a: Option<f64> },
    AdjacencyGeneral,
}

fn parse_params(input: &str, body: &str, keys: &[&str]) -> Result<BTreeMap<String, f64>, EslError> {
    let bad = |reason: String| EslError::Parse { input: input.to_string(), reason };
    let mut out = BTreeMap::new();
    for item in body.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| bad(format!("`{item}` is not key=value")))?;
        let k = k.trim();
        if !keys.contains(&k) {
            return Err(bad(format!("unknown parameter `{k}` (expected {})", keys.join(", "))));
        }
        let v: f64 = v.trim().parse().map_err(|e| bad(format!("`{v}` is not a real number ({e})")))?;
        if out.insert(k.to_string(), v).is_some() {
            return Err(bad(format!("parameter `{k}` given twice")));
        }
    }
    Ok(out)
}

fn required(input: &str, params: &BTreeMap<String, f64>, key: &str) -> Result<f64, EslError> {
    params
        .get(key)
        .copied()
        .ok_or_else(|| EslError::Parse { input: input.to_string(), reason: format!("missing parameter `{key}`") })
}

impl FromStr for LawSelector {
    type Err = EslError;

    fn from_str(s: &str) -> Result<Self, EslError> {
        let t = s.trim();
        let (tag, body) = t.split_once(':').unwrap_or((t, ""));
        let sel = match tag {
            "auto" if body.is_empty() => LawSelector::Auto,
            "semicircle" if body.is_empty() => LawSelector::Explicit(LimitLaw::semicircle()),
            "mp" | "marchenko-pastur" => {
                let p = parse_params(s, body, &["b", "c1"])?;
                LawSelector::Explicit(LimitLaw::MarchenkoPastur {
                    b: required(s, &p, "b")?,
                    c1: required(s, &p, "c1")?,
                })
            }
            "shifted-semicircle" => {
                let p = parse_params(s, body, &["c1", "c2"])?;
                LawSelector::Explicit(LimitLaw::ShiftedSemicircle {
                    c1: required(s, &p, "c1")?,
                    c2: required(s, &p, "c2")?,
                })
            }
            "block-laplacian" => {
                let p = parse_params(s, body, &["c"])?;
                LawSelector::Explicit(LimitLaw::BlockLaplacian { c: required(s, &p, "c")? })
            }
            "effective-medium" => {
                let p = parse_params(s, body, &["c"])?;
                LawSelector::Explicit(LimitLaw::EffectiveMedium { c: required(s, &p, "c")? })
            }
            "fixed-point" => {
                let p = parse_params(s, body, &["a"])?;
                LawSelector::FixedPoint { a: p.get("a").copied() }
            }
            "adjacency-general" if body.is_empty() => LawSelector::AdjacencyGeneral,
            _ => return Err(EslError::Parse { input: s.to_string(), reason: "unknown law selector".into() }),
        };
        if let LawSelector::Explicit(law) = &sel {
            law.validate()?;
        }
        Ok(sel)
    }
}

/// Weight measure of the ensemble's limiting equation. Block models use the
/// ratio `r / (2d)` so that a Bernoulli(p) weight gives total mass `c / 2`
/// with `c = r p / d`.
pub fn ensemble_measure(cfg: &EnsembleConfig) -> Result<WeightMeasure, EslError> {
    if cfg.model.is_block() {
        measure_from_xi(&cfg.xi, cfg.r, 2 * cfg.d)
    } else {
        measure_from_xi(&cfg.xi, cfg.m, cfg.n)
    }
}

/// The law the model's empirical spectrum converges to.
pub fn auto_law(cfg: &EnsembleConfig) -> Result<LimitLaw, EslError> {
    let measure = || ensemble_measure(cfg);
    let block_c = |p: f64| cfg.r as f64 * p / cfg.d as f64;
    let law = match (cfg.model, &cfg.xi) {
        (Model::GeneralL, _) => LimitLaw::FixedPoint { measure: measure()?, a: 1.0 },
        (Model::GeneralA, XiSpec::Bernoulli(p)) => {
            LimitLaw::EffectiveMedium { c: 2.0 * cfg.m as f64 * p / cfg.n as f64 }
        }
        (Model::GeneralA, _) => LimitLaw::AdjacencyGeneral { measure: measure()? },
        (Model::BlockL, XiSpec::Bernoulli(p)) => LimitLaw::BlockLaplacian { c: block_c(*p) },
        (Model::BlockL, _) => LimitLaw::FixedPoint { measure: measure()?, a: 2.0 },
        (Model::BlockA, XiSpec::Bernoulli(p)) => LimitLaw::EffectiveMedium { c: block_c(*p) },
        (Model::BlockA, XiSpec::Rademacher(s)) => LimitLaw::ShiftedSemicircle { c1: 0.0, c2: block_c(s * s) },
        (Model::BlockA, _) => LimitLaw::AdjacencyGeneral { measure: measure()? },
    };
    law.validate()?;
    Ok(law)
}

impl LawSelector {
    pub fn needs_ensemble(&self) -> bool {
        !matches!(self, LawSelector::Explicit(_))
    }

    pub fn resolve(&self, ensemble: Option<&EnsembleConfig>) -> Result<LimitLaw, EslError> {
        if let LawSelector::Explicit(law) = self {
            return Ok(law.clone());
        }
        let cfg = ensemble.ok_or_else(|| {
            EslError::InvalidParameter("this law selector needs the ensemble (--model, --xi and sizes)".into())
        })?;
        let law = match self {
            LawSelector::Auto => return auto_law(cfg),
            LawSelector::FixedPoint { a } => {
                let a = match (a, cfg.model) {
                    (Some(a), _) => *a,
                    (None, Model::GeneralL) => 1.0,
                    (None, Model::BlockL) => 2.0,
                    (None, _) => {
                        return Err(EslError::InvalidParameter(
                            "fixed-point needs an explicit a=<a> for adjacency models".into(),
                        ))
                    }
                };
                LimitLaw::FixedPoint { measure: ensemble_measure(cfg)?, a }
            }
            LawSelector::AdjacencyGeneral => LimitLaw::AdjacencyGeneral { measure: ensemble_measure(cfg)? },
            LawSelector::Explicit(_) => unreachable!(),
        };
        law.validate()?;
        Ok(law)
    }
}
