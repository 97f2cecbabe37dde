//! Random matrix generators: weighted sums of rank-one terms `sum xi y y^T`,
//! the symmetrized cross sums `sum xi (y x^T + x y^T)`, and the sparse block
//! Laplacian / adjacency matrices built from spring couplings between `r`
//! nodes of dimension `d`.

pub mod container;
pub mod rng;
mod sample;

use std::fmt;
use std::str::FromStr;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{EslError, Result};
use crate::measure::XiSpec;
use rng::{substream, DOMAIN_EDGE, DOMAIN_PERTURB, DOMAIN_TERM};
use sample::packed_index;
pub use sample::SymmetricMatrixSample;

/// Largest supported matrix side for dense assembly and eigensolves.
pub const MAX_DENSE_SIDE: usize = 8192;

const ROW_BLOCK: usize = 128;
const TERM_BATCH: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    GeneralL,
    GeneralA,
    BlockL,
    BlockA,
}

impl Model {
    pub fn is_block(self) -> bool {
        matches!(self, Model::BlockL | Model::BlockA)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Model::GeneralL => "general-l",
            Model::GeneralA => "general-a",
            Model::BlockL => "block-l",
            Model::BlockA => "block-a",
        })
    }
}

impl FromStr for Model {
    type Err = EslError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "general-l" | "generall" => Ok(Model::GeneralL),
            "general-a" | "generala" => Ok(Model::GeneralA),
            "block-l" | "blockl" => Ok(Model::BlockL),
            "block-a" | "blocka" => Ok(Model::BlockA),
            other => Err(EslError::Parse { input: s.to_string(), reason: format!("unknown model `{other}`") }),
        }
    }
}

/// Covariance family `Q_alpha = E y_alpha y_alpha^T` of the general models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CovFamilySpec {
    /// `Q_alpha = I/n`, Gaussian vectors.
    Isotropic,
    /// `Q_alpha = diag(1 + delta_alpha)/n` with `|delta| <= amp`. Consecutive
    /// terms carry opposite perturbations and each perturbation has zero sum,
    /// so `Tr Q_alpha = 1` and the average over terms is exactly `I/n`.
    DiagPaired(f64),
    /// Uniform on the unit sphere.
    SphereUniform,
}

impl fmt::Display for CovFamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovFamilySpec::Isotropic => f.write_str("isotropic"),
            CovFamilySpec::DiagPaired(amp) => write!(f, "diag-paired:{amp}"),
            CovFamilySpec::SphereUniform => f.write_str("sphere"),
        }
    }
}

impl FromStr for CovFamilySpec {
    type Err = EslError;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let spec =
            match t {
                "isotropic" => CovFamilySpec::Isotropic,
                "sphere" | "sphere-uniform" => CovFamilySpec::SphereUniform,
                _ => match t.split_once(':') {
                    Some(("diag-paired", amp)) => CovFamilySpec::DiagPaired(amp.trim().parse().map_err(|e| {
                        EslError::Parse { input: s.to_string(), reason: format!("bad amplitude ({e})") }
                    })?),
                    _ => {
                        return Err(EslError::Parse {
                            input: s.to_string(),
                            reason: "expected isotropic, sphere or diag-paired:<amp>".into(),
                        })
                    }
                },
            };
        spec.validate()?;
        Ok(spec)
    }
}

impl TryFrom<String> for CovFamilySpec {
    type Error = EslError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CovFamilySpec> for String {
    fn from(c: CovFamilySpec) -> String {
        c.to_string()
    }
}

impl CovFamilySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CovFamilySpec::DiagPaired(amp) if !(amp > 0.0 && amp < 1.0) => {
                Err(EslError::InvalidParameter(format!("diag-paired amplitude must lie in (0, 1), got {amp}")))
            }
            _ => Ok(()),
        }
    }
}

/// Full description of one random matrix model.
///
/// General models use `n`, `m` and `cov`; block models use `r` and `d`, with
/// `n = r*d` and `m = r(r-1)/2` (one term per unordered node pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub model: Model,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub d: usize,
    pub xi: XiSpec,
    pub cov: CovFamilySpec,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn general_l(n: usize, m: usize, xi: XiSpec, cov: CovFamilySpec, seed: u64) -> Self {
        EnsembleConfig { model: Model::GeneralL, n, m, r: 0, d: 0, xi, cov, seed }
    }

    pub fn general_a(n: usize, m: usize, xi: XiSpec, cov: CovFamilySpec, seed: u64) -> Self {
        EnsembleConfig { model: Model::GeneralA, n, m, r: 0, d: 0, xi, cov, seed }
    }

    pub fn block_l(r: usize, d: usize, xi: XiSpec, seed: u64) -> Self {
        Self::block(Model::BlockL, r, d, xi, seed)
    }

    pub fn block_a(r: usize, d: usize, xi: XiSpec, seed: u64) -> Self {
        Self::block(Model::BlockA, r, d, xi, seed)
    }

    fn block(model: Model, r: usize, d: usize, xi: XiSpec, seed: u64) -> Self {
        EnsembleConfig {
            model,
            n: r * d,
            m: r * r.saturating_sub(1) / 2,
            r,
            d,
            xi,
            cov: CovFamilySpec::SphereUniform,
            seed,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        EnsembleConfig { seed, ..self.clone() }
    }

    /// Every problem with the configuration, not just the first.
    pub fn validation_errors(&self) -> Vec<EslError> {
        let mut errs = Vec::new();
        if let Err(e) = self.xi.validate() {
            errs.push(e);
        }
        if let Err(e) = self.cov.validate() {
            errs.push(e);
        }
        if self.n == 0 {
            errs.push(EslError::InvalidParameter("matrix side n must be positive".into()));
        }
        if self.n > MAX_DENSE_SIDE {
            errs.push(EslError::InvalidParameter(format!(
                "matrix side {} exceeds the dense limit {MAX_DENSE_SIDE}",
                self.n
            )));
        }
        if self.model.is_block() {
            if self.r < 2 || self.d == 0 {
                errs.push(EslError::InvalidParameter(format!(
                    "block models need r >= 2 and d >= 1 (r={}, d={})",
                    self.r, self.d
                )));
            }
            if self.n != self.r * self.d {
                errs.push(EslError::DimensionMismatch { n: self.n, r: self.r, d: self.d });
            }
        } else {
            if self.m == 0 {
                errs.push(EslError::InvalidParameter("number of terms m must be positive".into()));
            }
            if self.model == Model::GeneralA && matches!(self.cov, CovFamilySpec::DiagPaired(_)) {
                errs.push(EslError::InvalidParameter(
                    "general-a supports only isotropic or sphere covariance families".into(),
                ));
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        match self.validation_errors().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Canonical text form, seed excluded.
    pub fn canonical(&self) -> String {
        if self.model.is_block() {
            format!("model={};r={};d={};xi={}", self.model, self.r, self.d, self.xi)
        } else {
            format!("model={};n={};m={};xi={};cov={}", self.model, self.n, self.m, self.xi, self.cov)
        }
    }

    /// SHA-256 of [`EnsembleConfig::canonical`].
    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.canonical().as_bytes()).into()
    }
}

/// One draw of the weight `xi`.
pub fn sample_xi<R: Rng + ?Sized>(xi: &XiSpec, rng: &mut R) -> f64 {
    match xi {
        XiSpec::Const(b) => *b,
        XiSpec::Bernoulli(p) => {
            if rng.gen::<f64>() < *p {
                1.0
            } else {
                0.0
            }
        }
        XiSpec::Rademacher(s) => {
            if rng.gen::<bool>() {
                *s
            } else {
                -*s
            }
        }
        XiSpec::Atoms(atoms) => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for &(v, p) in atoms {
                acc += p;
                if u < acc {
                    return v;
                }
            }
            atoms.last().map(|a| a.0).unwrap_or(0.0)
        }
    }
}

/// A covariance family realized under a seed (the diagonal perturbations of
/// [`CovFamilySpec::DiagPaired`] are drawn once per family).
#[derive(Debug, Clone)]
pub struct CovFamily {
    spec: CovFamilySpec,
    seed: u64,
    m: usize,
}

impl CovFamily {
    pub fn new(spec: CovFamilySpec, seed: u64, m: usize) -> Self {
        CovFamily { spec, seed, m }
    }

    pub fn spec(&self) -> CovFamilySpec {
        self.spec
    }

    /// `delta_alpha`, so that `n Q_alpha = diag(1 + delta_alpha)`.
    pub fn perturbation(&self, alpha: usize, n: usize) -> Vec<f64> {
        let amp = match self.spec {
            CovFamilySpec::DiagPaired(amp) => amp,
            _ => return vec![0.0; n],
        };
        let mut delta = vec![0.0; n];
        // the last term has no partner when m is odd
        if self.m % 2 == 1 && alpha + 1 == self.m {
            return delta;
        }
        let mut rng = substream(self.seed, DOMAIN_PERTURB, (alpha / 2) as u64);
        let sign = if alpha.is_multiple_of(2) { 1.0 } else { -1.0 };
        for j in 0..n / 2 {
            let u = rng.gen_range(-amp..=amp);
            delta[2 * j] = sign * u;
            delta[2 * j + 1] = -sign * u;
        }
        delta
    }

    pub fn sample_vector<R: Rng + ?Sized>(&self, alpha: usize, n: usize, rng: &mut R) -> Vec<f64> {
        debug_assert!(alpha < self.m.max(1));
        let mut y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        match self.spec {
            CovFamilySpec::Isotropic => {
                let s = 1.0 / (n as f64).sqrt();
                y.iter_mut().for_each(|v| *v *= s);
            }
            CovFamilySpec::DiagPaired(_) => {
                let delta = self.perturbation(alpha, n);
                for (v, d) in y.iter_mut().zip(&delta) {
                    *v *= ((1.0 + d) / n as f64).sqrt();
                }
            }
            CovFamilySpec::SphereUniform => {
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                y.iter_mut().for_each(|v| *v /= norm);
            }
        }
        y
    }
}

fn unit_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// One realized term `xi * (left right^T)` of a general model.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneTerm {
    pub xi: f64,
    pub y: Vec<f64>,
    /// Partner vector of the cross-sum model.
    pub x: Option<Vec<f64>>,
}

/// Adds the lower triangle of `left * right^T` (assumed symmetric) into
/// packed storage. Row blocks have a fixed size, so the floating-point
/// reduction order does not depend on the thread count.
fn accumulate_products(lower: &mut [f64], n: usize, left: MatRef<'_, f64>, right: MatRef<'_, f64>) {
    let mut blocks: Vec<(usize, usize, &mut [f64])> = Vec::new();
    let mut rest = lower;
    let mut i0 = 0;
    while i0 < n {
        let i1 = (i0 + ROW_BLOCK).min(n);
        let len = packed_index(i1 - 1, i1 - 1) + 1 - packed_index(i0, 0);
        let (head, tail) = rest.split_at_mut(len);
        blocks.push((i0, i1, head));
        rest = tail;
        i0 = i1;
    }
    blocks.into_par_iter().for_each(|(i0, i1, out)| {
        let mut tmp = Mat::<f64>::zeros(i1 - i0, i1);
        matmul(
            tmp.as_mut(),
            Accum::Replace,
            left.subrows(i0, i1 - i0),
            right.subrows(0, i1).transpose(),
            1.0,
            Par::Seq,
        );
        let base = packed_index(i0, 0);
        for i in i0..i1 {
            let row = &mut out[packed_index(i, 0) - base..=packed_index(i, i) - base];
            for (j, slot) in row.iter_mut().enumerate() {
                *slot += tmp[(i - i0, j)];
            }
        }
    });
}

fn accumulate_terms(lower: &mut [f64], n: usize, terms: &[RankOneTerm]) {
    for batch in terms.chunks(TERM_BATCH) {
        let cross = batch.iter().any(|t| t.x.is_some());
        let cols = if cross { 2 * batch.len() } else { batch.len() };
        let mut left = Mat::<f64>::zeros(n, cols);
        let mut right = Mat::<f64>::zeros(n, cols);
        for (c, t) in batch.iter().enumerate() {
            match &t.x {
                None => {
                    for i in 0..n {
                        left[(i, c)] = t.xi * t.y[i];
                        right[(i, c)] = t.y[i];
                    }
                }
                Some(x) => {
                    let c2 = batch.len() + c;
                    for i in 0..n {
                        left[(i, c)] = t.xi * x[i];
                        right[(i, c)] = t.y[i];
                        left[(i, c2)] = t.xi * t.y[i];
                        right[(i, c2)] = x[i];
                    }
                }
            }
        }
        accumulate_products(lower, n, left.as_ref(), right.as_ref());
    }
}

/// `sum_alpha xi_alpha y_alpha y_alpha^T` from explicit terms.
pub fn general_l_from_terms(n: usize, terms: &[RankOneTerm]) -> Result<SymmetricMatrixSample> {
    if terms.iter().any(|t| t.y.len() != n || t.x.is_some()) {
        return Err(EslError::InvalidParameter(format!("terms must be plain vectors of length {n}")));
    }
    let mut lower = vec![0.0; n * (n + 1) / 2];
    accumulate_terms(&mut lower, n, terms);
    SymmetricMatrixSample::from_lower(n, lower, 0, [0; 32])
}

/// `sum_alpha xi_alpha (y_alpha x_alpha^T + x_alpha y_alpha^T)` from explicit terms.
pub fn general_a_from_terms(n: usize, terms: &[RankOneTerm]) -> Result<SymmetricMatrixSample> {
    if terms.iter().any(|t| t.y.len() != n || t.x.as_ref().is_none_or(|x| x.len() != n)) {
        return Err(EslError::InvalidParameter(format!("terms must carry two vectors of length {n}")));
    }
    let mut lower = vec![0.0; n * (n + 1) / 2];
    accumulate_terms(&mut lower, n, terms);
    SymmetricMatrixSample::from_lower(n, lower, 0, [0; 32])
}

/// Draws the terms of a general model. Terms with `xi = 0` are skipped; each
/// term uses its own substream so the draw is schedule independent.
pub fn draw_terms(config: &EnsembleConfig) -> Result<Vec<RankOneTerm>> {
    config.validate()?;
    if config.model.is_block() {
        return Err(EslError::InvalidParameter("draw_terms needs a general model".into()));
    }
    Ok(draw_term_range(config, 0, config.m))
}

fn draw_term_range(config: &EnsembleConfig, start: usize, end: usize) -> Vec<RankOneTerm> {
    let family = CovFamily::new(config.cov, config.seed, config.m);
    let cross = config.model == Model::GeneralA;
    let n = config.n;
    let terms: Vec<Option<RankOneTerm>> = (start..end)
        .into_par_iter()
        .map(|alpha| {
            let mut rng = substream(config.seed, DOMAIN_TERM, alpha as u64);
            let xi = sample_xi(&config.xi, &mut rng);
            if xi == 0.0 {
                return None;
            }
            let y = family.sample_vector(alpha, n, &mut rng);
            let x = cross.then(|| family.sample_vector(alpha, n, &mut rng));
            Some(RankOneTerm { xi, y, x })
        })
        .collect();
    terms.into_iter().flatten().collect()
}

fn general_sample(config: &EnsembleConfig, model: Model) -> Result<SymmetricMatrixSample> {
    if config.model != model {
        return Err(EslError::InvalidParameter(format!("expected model {model}, got {}", config.model)));
    }
    config.validate()?;
    let n = config.n;
    let mut lower = vec![0.0; n * (n + 1) / 2];
    // draw and accumulate slices of the term range to bound memory
    let slice = TERM_BATCH * 8;
    let mut start = 0;
    while start < config.m {
        let end = (start + slice).min(config.m);
        accumulate_terms(&mut lower, n, &draw_term_range(config, start, end));
        start = end;
    }
    SymmetricMatrixSample::from_lower(n, lower, config.seed, config.digest())
}

pub fn build_general_l(config: &EnsembleConfig) -> Result<SymmetricMatrixSample> {
    general_sample(config, Model::GeneralL)
}

pub fn build_general_a(config: &EnsembleConfig) -> Result<SymmetricMatrixSample> {
    general_sample(config, Model::GeneralA)
}

/// A node pair `k < l` whose coupling `xi * v v^T` is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveEdge {
    pub k: usize,
    pub l: usize,
    pub xi: f64,
    pub v: Vec<f64>,
}

impl ActiveEdge {
    /// Block vector with `+v` in block `k` and `-v` in block `l`.
    pub fn laplacian_vector(&self, r: usize, d: usize) -> Vec<f64> {
        let mut y = vec![0.0; r * d];
        y[self.k * d..(self.k + 1) * d].copy_from_slice(&self.v);
        for (slot, v) in y[self.l * d..(self.l + 1) * d].iter_mut().zip(&self.v) {
            *slot = -v;
        }
        y
    }

    /// The pair `(X^{kl}, X^{lk})`: `v` placed in block `k`, resp. block `l`.
    pub fn adjacency_vectors(&self, r: usize, d: usize) -> (Vec<f64>, Vec<f64>) {
        let mut x_kl = vec![0.0; r * d];
        let mut x_lk = vec![0.0; r * d];
        x_kl[self.k * d..(self.k + 1) * d].copy_from_slice(&self.v);
        x_lk[self.l * d..(self.l + 1) * d].copy_from_slice(&self.v);
        (x_kl, x_lk)
    }
}

/// A block model realization with its sparse edge list.
#[derive(Debug, Clone)]
pub struct BlockSample {
    pub matrix: SymmetricMatrixSample,
    pub edges: Vec<ActiveEdge>,
    /// Number of `d x d` blocks written during assembly.
    pub block_updates: usize,
}

fn pair_index(k: usize, l: usize, r: usize) -> u64 {
    (k * r - k * (k + 1) / 2 + (l - k - 1)) as u64
}

/// Draws `xi_{kl}` for every pair `k < l` and a unit vector `v^{kl}` for the
/// active ones.
pub fn draw_edges(config: &EnsembleConfig) -> Result<Vec<ActiveEdge>> {
    config.validate()?;
    if !config.model.is_block() {
        return Err(EslError::InvalidParameter("draw_edges needs a block model".into()));
    }
    let (r, d) = (config.r, config.d);
    let edges: Vec<Option<ActiveEdge>> = (0..r)
        .into_par_iter()
        .flat_map_iter(|k| {
            (k + 1..r).map(move |l| {
                let mut rng = substream(config.seed, DOMAIN_EDGE, pair_index(k, l, r));
                let xi = sample_xi(&config.xi, &mut rng);
                (xi != 0.0).then(|| ActiveEdge { k, l, xi, v: unit_sphere(d, &mut rng) })
            })
        })
        .collect();
    Ok(edges.into_iter().flatten().collect())
}

fn add_block(lower: &mut [f64], d: usize, bi: usize, bj: usize, scale: f64, v: &[f64]) {
    debug_assert!(bj <= bi);
    for a in 0..d {
        let row = bi * d + a;
        let cols = if bi == bj { a + 1 } else { d };
        let base = packed_index(row, bj * d);
        let sv = scale * v[a];
        for b in 0..cols {
            lower[base + b] += sv * v[b];
        }
    }
}

/// Assembles the block Laplacian `sum_{k<l} xi_{kl} Y^{kl} Y^{kl T}`. Returns
/// the packed lower triangle and the number of blocks written.
pub fn block_l_from_edges(r: usize, d: usize, edges: &[ActiveEdge]) -> (Vec<f64>, usize) {
    let n = r * d;
    let mut lower = vec![0.0; n * (n + 1) / 2];
    let mut updates = 0;
    for e in edges {
        add_block(&mut lower, d, e.k, e.k, e.xi, &e.v);
        add_block(&mut lower, d, e.l, e.l, e.xi, &e.v);
        add_block(&mut lower, d, e.l, e.k, -e.xi, &e.v);
        updates += 3;
    }
    (lower, updates)
}

/// Assembles the block adjacency matrix: off-diagonal blocks
/// `xi_{kl} v^{kl} v^{kl T}`, zero diagonal blocks.
pub fn block_a_from_edges(r: usize, d: usize, edges: &[ActiveEdge]) -> (Vec<f64>, usize) {
    let n = r * d;
    let mut lower = vec![0.0; n * (n + 1) / 2];
    for e in edges {
        add_block(&mut lower, d, e.l, e.k, e.xi, &e.v);
    }
    (lower, edges.len())
}

fn block_sample(config: &EnsembleConfig, model: Model) -> Result<BlockSample> {
    if config.model != model {
        return Err(EslError::InvalidParameter(format!("expected model {model}, got {}", config.model)));
    }
    let edges = draw_edges(config)?;
    let (lower, block_updates) = match model {
        Model::BlockL => block_l_from_edges(config.r, config.d, &edges),
        _ => block_a_from_edges(config.r, config.d, &edges),
    };
    let matrix = SymmetricMatrixSample::from_lower(config.n, lower, config.seed, config.digest())?;
    Ok(BlockSample { matrix, edges, block_updates })
}

pub fn build_block_l(config: &EnsembleConfig) -> Result<BlockSample> {
    block_sample(config, Model::BlockL)
}

pub fn build_block_a(config: &EnsembleConfig) -> Result<BlockSample> {
    block_sample(config, Model::BlockA)
}

/// Builds any model, discarding the block edge list.
pub fn build(config: &EnsembleConfig) -> Result<SymmetricMatrixSample> {
    match config.model {
        Model::GeneralL => build_general_l(config),
        Model::GeneralA => build_general_a(config),
        Model::BlockL => build_block_l(config).map(|b| b.matrix),
        Model::BlockA => build_block_a(config).map(|b| b.matrix),
    }
}

/// Normalized deviations of the covariance family from the isotropic ideal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDiagnostics {
    /// `max_alpha n * ||Q_alpha||_op`
    pub sup_op: f64,
    /// `max_alpha |Tr Q_alpha - 1|`
    pub sup_trace_dev: f64,
    /// `sqrt(n) * ||mean_alpha Q_alpha - I/n||_HS`
    pub avg_hs_dev: f64,
}

/// Evaluates the covariance conditions from the analytically known `Q_alpha`.
pub fn validate_ensemble(config: &EnsembleConfig) -> Result<EnsembleDiagnostics> {
    config.validate()?;
    if config.model.is_block() {
        return Err(EslError::InvalidParameter(
            "covariance diagnostics are defined for the general models only".into(),
        ));
    }
    let (n, m) = (config.n, config.m);
    let family = CovFamily::new(config.cov, config.seed, m);
    if !matches!(config.cov, CovFamilySpec::DiagPaired(_)) {
        return Ok(EnsembleDiagnostics { sup_op: 1.0, sup_trace_dev: 0.0, avg_hs_dev: 0.0 });
    }
    let mut sup_op: f64 = 0.0;
    let mut sup_trace_dev: f64 = 0.0;
    let mut mean_delta = vec![0.0; n];
    for alpha in 0..m {
        let delta = family.perturbation(alpha, n);
        let mut trace_dev = 0.0;
        for (acc, &dl) in mean_delta.iter_mut().zip(&delta) {
            *acc += dl;
            trace_dev += dl;
            sup_op = sup_op.max(1.0 + dl);
        }
        sup_trace_dev = sup_trace_dev.max((trace_dev / n as f64).abs());
    }
    let hs = mean_delta.iter().map(|s| (s / (m as f64 * n as f64)).powi(2)).sum::<f64>().sqrt();
    Ok(EnsembleDiagnostics { sup_op, sup_trace_dev, avg_hs_dev: (n as f64).sqrt() * hs })
}
