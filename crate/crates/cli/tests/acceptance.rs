//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! nonzero if any criterion fails. Reference values are computed here from
//! closed forms, independently of the library's solvers.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use esl_cli::commands::run_experiment;
use esl_cli::ExperimentInput;
use esl_core::ensembles::{build_block_a, build_block_l, CovFamilySpec, EnsembleConfig, Model};
use esl_core::limits::{
    adjacency_general_stieltjes, block_laplacian_density, density_from_stieltjes, fixed_point_stieltjes, law_support,
    mp_density, mp_stieltjes, LawCdf, DEFAULT_ETA_SCHEDULE,
};
use esl_core::metrics::{ks_distance_to_law, law_moments};
use esl_core::spectra::eigenvalues_symmetric;
use esl_core::{Complex64, LimitLaw, SolverOptions, WeightMeasure, XiSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `|p(f)| / sum |c_k| |f|^k` for ascending coefficients.
fn backward_error(coeffs: &[Complex64], f: Complex64) -> f64 {
    let mut value = c(0.0, 0.0);
    let mut scale = 0.0;
    for (k, ck) in coeffs.iter().enumerate() {
        value += ck * f.powu(k as u32);
        scale += ck.norm() * f.norm().powi(k as i32);
    }
    value.norm() / scale
}

/// Residual of the law's defining equation, written out from its formula.
fn oracle_residual(law: &LimitLaw, z: Complex64, f: Complex64) -> f64 {
    let one = c(1.0, 0.0);
    match law {
        LimitLaw::MarchenkoPastur { b, c1 } => backward_error(&[one, z + b - c1, b * z], f),
        LimitLaw::BlockLaplacian { c: cc } => backward_error(&[one, z + 2.0 - cc, 2.0 * z], f),
        LimitLaw::ShiftedSemicircle { c1, c2 } => backward_error(&[one, z - c1, c(*c2, 0.0)], f),
        LimitLaw::EffectiveMedium { c: cc } => backward_error(&[-one, -z, c(1.0 - cc, 0.0), z], f),
        LimitLaw::FixedPoint { measure, a } => {
            let s: Complex64 = measure.atoms().iter().map(|&(x, w)| w / (1.0 + a * x * f)).sum();
            (z * f + 1.0 - a * f * s).norm()
        }
        LimitLaw::AdjacencyGeneral { measure } => {
            let s: Complex64 = measure.atoms().iter().map(|&(x, w)| w * x / (1.0 - x * x * f * f)).sum();
            (z * f + 1.0 + 2.0 * f * f * s).norm()
        }
    }
}

/// The values `xi` appearing in denominators `1 + xi f`.
fn denominators(law: &LimitLaw) -> Vec<f64> {
    match law {
        LimitLaw::MarchenkoPastur { b, .. } => vec![*b],
        LimitLaw::BlockLaplacian { .. } => vec![2.0],
        LimitLaw::ShiftedSemicircle { .. } => vec![],
        LimitLaw::EffectiveMedium { .. } => vec![1.0, -1.0],
        LimitLaw::FixedPoint { measure, a } => measure.atoms().iter().map(|&(x, _)| a * x).collect(),
        LimitLaw::AdjacencyGeneral { measure } => measure.atoms().iter().flat_map(|&(x, _)| [x, -x]).collect(),
    }
}

fn certification_laws() -> Vec<LimitLaw> {
    let m = |atoms: Vec<(f64, f64)>| WeightMeasure::new(atoms).unwrap();
    vec![
        LimitLaw::MarchenkoPastur { b: 1.0, c1: 1.0 },
        LimitLaw::MarchenkoPastur { b: 0.5, c1: 2.0 },
        LimitLaw::semicircle(),
        LimitLaw::ShiftedSemicircle { c1: 0.5, c2: 2.0 },
        LimitLaw::BlockLaplacian { c: 1.0 },
        LimitLaw::EffectiveMedium { c: 1.0 },
        LimitLaw::EffectiveMedium { c: 0.4 },
        LimitLaw::FixedPoint { measure: m(vec![(1.0, 0.5), (-0.5, -0.25), (2.0, 1.0)]), a: 1.0 },
        LimitLaw::AdjacencyGeneral { measure: m(vec![(1.0, 0.3), (0.5, 0.1)]) },
    ]
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let opts = SolverOptions::default();
    let mut worst = 0.0_f64;
    let mut problems = Vec::new();
    for law in certification_laws() {
        let xis = denominators(&law);
        for i in 0..20 {
            let lambda = -5.0 + 10.0 * i as f64 / 19.0;
            for j in 0..20 {
                let eta = 10f64.powf(-2.0 + 4.0 * j as f64 / 19.0);
                let z = c(lambda, eta);
                let rep = match law.stieltjes(z, &opts) {
                    Ok(r) => r,
                    Err(e) => {
                        problems.push(format!("{law} at {z}: {e}"));
                        continue;
                    }
                };
                let f = rep.f;
                let res = oracle_residual(&law, z, f).max(rep.residual);
                worst = worst.max(res);
                let bound = |x: f64| 1.0 / (1.0 + x * f).norm() <= (4.0 * x.abs() / eta).max(2.0) * (1.0 + 1e-9);
                if !(res <= 1e-10 && f.im > 0.0 && f.norm() <= (1.0 + 1e-12) / eta && xis.iter().all(|&x| bound(x))) {
                    problems.push(format!("{law} at {z}: f={f} residual={res:e}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = problems.is_empty() && elapsed < Duration::from_secs(1);
    let first = problems.first().map(|p| format!(" (first: {p})")).unwrap_or_default();
    outcome(
        pass,
        format!("9 laws x 400 points, worst residual {worst:.2e}, {} violations{first}, {elapsed:.2?}", problems.len()),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let opts = SolverOptions::default();
    let mut fp_mp: f64 = 0.0;
    let mut adj_em: f64 = 0.0;
    for (b, c1) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.3)] {
        let measure = WeightMeasure::point(b, c1).unwrap();
        for i in 0..20 {
            let z = c(-1.0 + 0.35 * i as f64, 0.05 + 0.1 * (i % 4) as f64);
            let a = fixed_point_stieltjes(&measure, 1.0, z, &opts).unwrap().f;
            let m = mp_stieltjes(b, c1, z).unwrap().f;
            fp_mp = fp_mp.max((a - m).norm());
        }
    }
    for cc in [0.5, 1.0, 2.0] {
        // a single atom (1, c/2) turns the adjacency equation into the cubic
        let measure = WeightMeasure::point(1.0, cc / 2.0).unwrap();
        for i in 0..20 {
            let z = c(-3.0 + 0.3 * i as f64, 0.05 + 0.1 * (i % 4) as f64);
            let a = adjacency_general_stieltjes(&measure, z, &opts).unwrap().f;
            let e = LimitLaw::EffectiveMedium { c: cc }.stieltjes(z, &opts).unwrap().f;
            adj_em = adj_em.max((a - e).norm());
        }
    }
    let mut bl_mp: f64 = 0.0;
    for i in 0..200 {
        let x = -0.5 + 8.0 * i as f64 / 199.0;
        let (l, m) = (block_laplacian_density(1.0, x).continuous(), mp_density(2.0, 1.0, x).continuous());
        bl_mp = bl_mp.max((l - m).abs() / m.abs().max(1.0));
    }
    let elapsed = start.elapsed();
    let pass = fp_mp <= 1e-10 && adj_em <= 1e-10 && bl_mp <= 4.0 * f64::EPSILON && elapsed < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "fixed-point vs MP {fp_mp:.1e}, adjacency vs EM {adj_em:.1e}, BL vs MP(2,c) {bl_mp:.1e}, {elapsed:.2?}"
        ),
    )
}

fn experiment(input: ExperimentInput, dir: &Path) -> esl_cli::commands::RunOutcome {
    let cfg = ExperimentInput { out: Some(dir.to_path_buf()), ..input }.resolve().unwrap();
    run_experiment(&cfg, None).unwrap()
}

fn criterion_3(dir: &Path) -> Outcome {
    let start = Instant::now();
    let run = experiment(
        ExperimentInput {
            model: Some(Model::GeneralL),
            n: Some(2000),
            m: Some(2000),
            xi: Some(XiSpec::Const(1.0)),
            cov: Some(CovFamilySpec::DiagPaired(0.5)),
            law: Some("mp:b=1,c1=1".into()),
            trials: Some(3),
            seed: Some(7),
            ..Default::default()
        },
        dir,
    );
    let elapsed = start.elapsed();
    // m1 = c1 and m2 = b c1 + c1^2 for MP(b, c1)
    let (m1, m2) = (1.0, 2.0);
    let theory = law_moments(&LimitLaw::MarchenkoPastur { b: 1.0, c1: 1.0 }, 2, &SolverOptions::default()).unwrap();
    let emp = &run.report.moments;
    let rel1 = (emp[0].emp - theory[1]).abs() / theory[1];
    let rel2 = (emp[1].emp - theory[2]).abs() / theory[2];
    let theory_ok = (theory[1] - m1).abs() < 1e-6 && (theory[2] - m2).abs() < 1e-6;
    let pass =
        run.report.ks <= 0.03 && rel1 <= 0.03 && rel2 <= 0.03 && theory_ok && elapsed <= Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "KS {:.4} (<= 0.03), moment errors {:.2}% / {:.2}% (<= 3%), {elapsed:.1?}",
            run.report.ks,
            100.0 * rel1,
            100.0 * rel2
        ),
    )
}

fn criterion_4(dir: &Path) -> Outcome {
    let start = Instant::now();
    let run = experiment(
        ExperimentInput {
            model: Some(Model::GeneralL),
            n: Some(1000),
            m: Some(20000),
            xi: Some(XiSpec::Rademacher((1000.0f64 / 20000.0).sqrt())),
            cov: Some(CovFamilySpec::Isotropic),
            law: Some("semicircle".into()),
            trials: Some(2),
            seed: Some(7),
            ..Default::default()
        },
        dir,
    );
    let elapsed = start.elapsed();
    let pass = run.report.ks <= 0.05 && elapsed <= Duration::from_secs(300);
    outcome(pass, format!("KS {:.4} vs ShiftedSemicircle(0,1) (<= 0.05), {elapsed:.1?}", run.report.ks))
}

fn block_laplacian_check(r: usize, d: usize, p: f64, threshold: f64, budget: Duration) -> (bool, String) {
    let start = Instant::now();
    let cfg = EnsembleConfig::block_l(r, d, XiSpec::Bernoulli(p), 7);
    let sample = build_block_l(&cfg).unwrap();
    let trace = sample.matrix.trace();
    let edges = sample.edges.len() as f64;
    let eigs = eigenvalues_symmetric(&sample.matrix).unwrap();
    drop(sample);
    let cc = r as f64 * p / d as f64;
    let ks = ks_distance_to_law(&eigs, &LimitLaw::BlockLaplacian { c: cc }, &SolverOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let trace_ok = (trace - 2.0 * edges).abs() <= 1e-10 * 2.0 * edges;
    let pass = ks <= threshold && trace_ok && elapsed <= budget;
    (pass, format!("r={r} d={d}: KS {ks:.4} (<= {threshold}), Tr {trace} vs 2*{edges}, {elapsed:.1?}"))
}

fn criterion_5() -> Outcome {
    let (reduced, reduced_msg) = block_laplacian_check(100, 25, 0.25, 0.08, Duration::from_secs(60));
    let (full, full_msg) = block_laplacian_check(200, 40, 0.2, 0.05, Duration::from_secs(600));
    outcome(reduced && full, format!("{reduced_msg}; {full_msg}"))
}

fn block_adjacency_ks(xi: XiSpec, r: usize, d: usize, law: LimitLaw) -> (f64, f64, Duration) {
    let start = Instant::now();
    let cfg = EnsembleConfig::block_a(r, d, xi, 7);
    let sample = build_block_a(&cfg).unwrap();
    let trace = sample.matrix.trace();
    let eigs = eigenvalues_symmetric(&sample.matrix).unwrap();
    drop(sample);
    let ks = ks_distance_to_law(&eigs, &law, &SolverOptions::default()).unwrap();
    (ks, trace, start.elapsed())
}

fn criterion_6() -> Outcome {
    let (ks, trace, elapsed) =
        block_adjacency_ks(XiSpec::Bernoulli(0.2), 200, 40, LimitLaw::EffectiveMedium { c: 1.0 });
    outcome(
        ks <= 0.05 && trace == 0.0,
        format!("KS {ks:.4} vs EffectiveMedium(1) (<= 0.05), Tr {trace}, {elapsed:.1?}"),
    )
}

fn criterion_7() -> Outcome {
    let s = (20.0f64 / 400.0).sqrt();
    let (ks, _, elapsed) = block_adjacency_ks(XiSpec::Rademacher(s), 400, 20, LimitLaw::semicircle());
    outcome(ks <= 0.06, format!("KS {ks:.4} vs ShiftedSemicircle(0,1) (<= 0.06), {elapsed:.1?}"))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let opts = SolverOptions::default();
    let c1 = 2.0;
    let step = LawCdf::new(&LimitLaw::MarchenkoPastur { b: 0.0, c1 }, &opts).unwrap();
    let probes = [-10.0, 0.0, 1.0, c1 - 1e-9, c1 + 1e-9, 3.0, 10.0];
    let step_ok = probes.iter().all(|&t| step.cdf(t) == if t >= c1 { 1.0 } else { 0.0 })
        && step.cdf_left(c1) == 0.0
        && step.cdf(c1) == 1.0;
    let em = LimitLaw::EffectiveMedium { c: 0.0 };
    let support = law_support(&em, &opts).unwrap();
    let atoms = em.atoms();
    let density_zero = (0..101).all(|i| em.density(-5.0 + 0.1 * i as f64, &opts).unwrap() == 0.0);
    let em_ok = support.continuous_mass() == 0.0
        && density_zero
        && atoms.len() == 1
        && atoms[0].location == 0.0
        && atoms[0].weight == 1.0;
    let elapsed = start.elapsed();
    outcome(
        step_ok && em_ok && elapsed < Duration::from_secs(1),
        format!(
            "MP(0,{c1}) unit step {step_ok}, EM(0) continuous mass {} atoms {atoms:?}, {elapsed:.2?}",
            support.continuous_mass().abs()
        ),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let opts = SolverOptions::default();
    let law = LimitLaw::MarchenkoPastur { b: 1.0, c1: 1.0 };
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let x = 0.1 + 3.8 * i as f64 / 49.0;
        let exact = ((4.0 - x) * x).sqrt() / (2.0 * PI * x);
        let got = density_from_stieltjes(&law, x, &DEFAULT_ETA_SCHEDULE, &opts).unwrap();
        worst = worst.max((got - exact).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && elapsed < Duration::from_secs(5),
        format!("max error {worst:.2e} (<= 1e-6), {elapsed:.2?}"),
    )
}

fn simulate(dir: &Path, threads: &str, args: &[&str]) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_esl"))
        .arg("simulate")
        .args(args)
        .arg("--out")
        .arg(dir)
        .env("ESL_THREADS", threads)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(dir.join("report.json")).unwrap()
}

fn criterion_10(dir: &Path) -> Outcome {
    let cases: [&[&str]; 2] = [
        &[
            "--model",
            "general-l",
            "--n",
            "150",
            "--m",
            "200",
            "--xi",
            "bernoulli:0.5",
            "--cov",
            "diag-paired:0.3",
            "--trials",
            "4",
            "--seed",
            "11",
        ],
        &["--model", "block-a", "--r", "30", "--d", "6", "--xi", "rademacher:0.4", "--trials", "3", "--seed", "5"],
    ];
    let mut identical = 0;
    for (i, args) in cases.iter().enumerate() {
        let runs: Vec<Vec<u8>> = ["1", "3", "1"]
            .iter()
            .enumerate()
            .map(|(k, t)| simulate(&dir.join(format!("case{i}_{k}")), t, args))
            .collect();
        if runs.windows(2).all(|w| w[0] == w[1]) {
            identical += 1;
        }
    }
    outcome(
        identical == cases.len(),
        format!("{identical}/{} configurations byte-identical across ESL_THREADS=1,3,1", cases.len()),
    )
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("solver certification", Box::new(criterion_1)),
        ("reduction identities", Box::new(criterion_2)),
        ("Marchenko-Pastur reproduction", Box::new(|| criterion_3(&dir.path().join("c3")))),
        ("modified-regime semicircle", Box::new(|| criterion_4(&dir.path().join("c4")))),
        ("block Laplacian", Box::new(criterion_5)),
        ("effective medium", Box::new(criterion_6)),
        ("signed block adjacency semicircle", Box::new(criterion_7)),
        ("degenerate atoms", Box::new(criterion_8)),
        ("inversion consistency", Box::new(criterion_9)),
        ("determinism", Box::new(|| criterion_10(&dir.path().join("c10")))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {:<34} {}  {}", i + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
