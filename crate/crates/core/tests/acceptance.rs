//! Acceptance suite: one line per criterion, then a single assertion over all of them.
//!
//! Runs without the libtest harness so the lines always print; exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rectpoincare_core::analysis::{
    cz_decompose, dyadic_maximal, normalized_lq, telescope, truncate_level, weak_norm_values,
};
use rectpoincare_core::conditions::{
    b_wq, condition_ratio, conjugate, m_choice, sample_disjoint_families, sobolev_exponent, ConditionTest,
    ExponentKind, ExponentParams, SamplerOptions,
};
use rectpoincare_core::expr::Expr;
use rectpoincare_core::functionals::{FunctionInput, FunctionalSpec};
use rectpoincare_core::grid::{build_grid, Domain, Grid, GridFunction, Rect};
use rectpoincare_core::report::CheckReport;
use rectpoincare_core::verify::{run_check, sweep, CheckConfig};
use rectpoincare_core::weights::{dyadic_muckenhoupt, Weight};

type Outcome = Result<String, String>;

struct Criterion {
    number: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn check(id: &str, config: &CheckConfig) -> Result<CheckReport, String> {
    run_check(id, config).map_err(|e| format!("{id}: {e}"))
}

fn detail(report: &CheckReport, key: &str) -> Result<f64, String> {
    report.details.get(key).and_then(|v| v.as_f64()).ok_or_else(|| format!("{} has no numeric `{key}`", report.id))
}

fn grid(domain: Domain, n: usize) -> Grid {
    build_grid(domain, &vec![n; domain.dim()]).unwrap()
}

fn random_density(grid: Grid, rng: &mut ChaCha8Rng, spread: f64) -> GridFunction {
    let values = (0..grid.cell_count()).map(|_| (spread * rng.gen_range(-1.0..1.0)).exp()).collect();
    GridFunction::from_values(grid, values).unwrap()
}

fn random_side(rng: &mut ChaCha8Rng) -> f64 {
    10f64.powf(rng.gen_range(-3.0..3.0))
}

/// A box with random corner and sides, or a cube product over `blocks` when given.
fn random_domain(rng: &mut ChaCha8Rng, dim: usize, blocks: Option<&[usize]>) -> Domain {
    let lower: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
    let sides: Vec<f64> = match blocks {
        None => (0..dim).map(|_| random_side(rng)).collect(),
        Some(sizes) => sizes.iter().flat_map(|&size| vec![random_side(rng); size]).collect(),
    };
    let upper: Vec<f64> = lower.iter().zip(&sides).map(|(l, s)| l + s).collect();
    match blocks {
        None => Domain::new(&lower, &upper).unwrap(),
        Some(sizes) => Domain::cube_product(&lower, &upper, sizes).unwrap(),
    }
}

/// Every descendant down to `full_depth`, then random indices on the deeper levels.
fn descendant_sample(root: &Rect, full_depth: u32, max_depth: u32, rng: &mut ChaCha8Rng) -> Vec<Rect> {
    let mut rects = root.subtree(full_depth);
    for level in full_depth + 1..=max_depth {
        let span = 1u64 << level;
        for _ in 0..64 {
            let index: Vec<u64> = (0..root.dim()).map(|_| rng.gen_range(0..span)).collect();
            rects.push(Rect::new(*root.domain(), level, &index).unwrap());
        }
        rects.push(Rect::new(*root.domain(), level, &vec![span - 1; root.dim()]).unwrap());
    }
    rects
}

fn eccentricity_invariance() -> Outcome {
    let worst = (0..1000u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dim = 1 + (seed % 3) as usize;
            let full_depth = [8, 6, 4][dim - 1];
            let root = Rect::root(random_domain(&mut rng, dim, None));
            let e = root.eccentricity();
            let mut worst: f64 = 0.0;
            for rect in descendant_sample(&root, full_depth, 8, &mut rng) {
                worst = worst.max((rect.eccentricity() - e).abs());
            }
            if dim >= 2 {
                let blocks: &[usize] = match (dim, seed % 2) {
                    (2, _) => &[1, 1],
                    (_, 0) => &[1, 2],
                    _ => &[2, 1],
                };
                let root = Rect::root(random_domain(&mut rng, dim, Some(blocks)));
                let big_e = root.block_eccentricity().expect("two-block root");
                for rect in descendant_sample(&root, full_depth, 8, &mut rng) {
                    let value = rect.block_eccentricity().expect("two-block descendant");
                    worst = worst.max((value - big_e).abs()).max((rect.eccentricity() - root.eccentricity()).abs());
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max);
    ensure(worst <= 1e-12, || format!("eccentricity moved by {worst:e}"))?;
    Ok(format!("max deviation {worst:e} over 1000 roots"))
}

fn sd_norm_one() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut configurations = 0;
    for dim in [1usize, 2] {
        let g = grid(Domain::unit(dim).unwrap(), if dim == 1 { 256 } else { 32 });
        let root = Rect::root(*g.domain());
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
        let w = Arc::new(Weight::new(random_density(g, &mut rng, 2.0)).unwrap());
        let mu = Arc::new(random_density(g, &mut rng, 3.0));
        let f = FunctionInput::from_samples(GridFunction::constant(g, 0.0));
        let families = sample_disjoint_families(&root, 500, 5, SamplerOptions::default(), 40 + dim as u64)
            .map_err(|e| e.to_string())?;
        for delta in [0.5, 1.0] {
            for p in [1.0, 2.0] {
                let spec = FunctionalSpec::Measure { delta, p, mu: mu.clone(), weight: w.clone() };
                let s = dim as f64 / delta;
                let test = ConditionTest::sdp(p, s, 1.0);
                let verdict =
                    condition_ratio(&spec, &f, Some(&w), &root, &families, &test).map_err(|e| e.to_string())?;
                ensure(verdict.max_ratio <= 1.0 + 1e-10 && !verdict.degenerate, || {
                    format!("n={dim} δ={delta} p={p}: ratio {}", verdict.max_ratio)
                })?;
                worst = worst.max(verdict.max_ratio);
                configurations += 1;
            }
        }
    }
    Ok(format!("{configurations} configurations × 500 families, max ratio {worst:.12}"))
}

fn smallness_lemma() -> Outcome {
    let domain = Domain::new(&[-1.0, -1.0], &[1.0, 1.0]).unwrap();
    let g = grid(domain, 64);
    let root = Rect::root(domain);
    let w = Arc::new(Weight::new(Expr::parse("sqrt(sqrt(x1*x1 + x2*x2))", 2).unwrap().sample(g)).unwrap());
    let mu = Arc::new(Expr::parse("2 + sin(5*x1)*cos(3*x2)", 2).unwrap().sample(g));
    let f = FunctionInput::from_samples(GridFunction::constant(g, 0.0));
    let (n, q, m, p, delta) = (2.0, 1.0, 2.0, 1.0, 1.0);
    let params = ExponentParams::new(p, 2).delta(delta).q(q).m(m);
    let p_star = sobolev_exponent(ExponentKind::Smallness, &params).map_err(|e| e.to_string())?;
    let s = n * conjugate(m) / delta;
    let depth = 6;
    let awc = dyadic_muckenhoupt(&w, q, &root, depth).map_err(|e| e.to_string())?;
    let bound = awc.powf(delta / (n * q * m));
    let families =
        sample_disjoint_families(&root, 500, depth, SamplerOptions::default(), 9).map_err(|e| e.to_string())?;
    let spec = FunctionalSpec::Measure { delta, p, mu, weight: w.clone() };
    let test = ConditionTest::sdp(p_star, s, bound);
    let verdict = condition_ratio(&spec, &f, Some(&w), &root, &families, &test).map_err(|e| e.to_string())?;
    ensure(verdict.max_ratio <= bound * (1.0 + 1e-10), || format!("ratio {} exceeds {bound}", verdict.max_ratio))?;
    Ok(format!("p* = {p_star:.4}, [w] = {awc:.4}, ratio {:.4} ≤ {bound:.4}", verdict.max_ratio))
}

fn cz_sandwich() -> Outcome {
    let mut selected = 0usize;
    let cases = [(Domain::unit(1).unwrap(), 1024), (Domain::unit(2).unwrap(), 128)];
    for (domain, n) in cases {
        let g_grid = grid(domain, n);
        let root = Rect::root(domain);
        let factor = 2f64.powi(domain.dim() as i32);
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        for _ in 0..100 {
            let spread = rng.gen_range(1.0..8.0);
            let raw = random_density(g_grid, &mut rng, spread);
            let mean = raw.values().iter().sum::<f64>() / raw.values().len() as f64;
            let g = GridFunction::from_values(g_grid, raw.values().iter().map(|v| v / mean).collect()).unwrap();
            let total = g.values().iter().sum::<f64>() / g.values().len() as f64;
            let maximal = dyadic_maximal(&g, &root).map_err(|e| e.to_string())?;
            for level in [2.0, 4.0, 8.0] {
                let cz = cz_decompose(&g, &root, level).map_err(|e| e.to_string())?;
                let mut covered = vec![false; g_grid.cell_count()];
                for (rect, &avg) in cz.family.members().iter().zip(&cz.averages) {
                    let cells = g.restrict(rect).unwrap();
                    let direct = cells.iter().sum::<f64>() / cells.len() as f64;
                    ensure((direct - avg).abs() <= 1e-12 * avg, || format!("average {avg} vs direct {direct}"))?;
                    ensure(avg > level && avg <= factor * level, || format!("average {avg} outside ({level}, {}]", factor * level))?;
                    for cell in g_grid.cell_box(rect).unwrap().cells(&g_grid) {
                        covered[cell] = true;
                    }
                }
                let union = cz.family.union_measure();
                ensure(union < root.measure() * total / level, || format!("union {union} too large at L = {level}"))?;
                for (cell, &inside) in covered.iter().enumerate() {
                    ensure(inside == (maximal.values()[cell] > level), || format!("cell {cell} disagrees at L = {level}"))?;
                }
                selected += cz.family.len();
            }
        }
    }
    ensure(selected > 0, || "no rectangle was ever selected".into())?;
    Ok(format!("200 functions × 3 levels, {selected} selected rectangles"))
}

fn explicit_poincare() -> Outcome {
    let one = check("P1", &CheckConfig::default().with_resolution(512))?;
    let two = check("P1", &CheckConfig::default().with_domain(Domain::unit(2).unwrap()).with_resolution(128))?;
    for (label, report) in [("1-D", &one), ("2-D", &two)] {
        ensure(report.ratio <= 1.02, || format!("{label} ratio {}", report.ratio))?;
    }
    let resolutions = [64.0, 128.0, 256.0, 512.0];
    let reports = sweep("P1", "resolution", &resolutions, &CheckConfig::default()).map_err(|e| e.to_string())?;
    let slack = reports.iter().map(|r| detail(r, "discretization_slack")).collect::<Result<Vec<_>, _>>()?;
    ensure(slack.windows(2).all(|w| w[1] <= w[0]), || format!("slack not monotone: {slack:?}"))?;
    Ok(format!("ratios {:.4} (1-D) and {:.4} (2-D), slack {:.2e} → {:.2e}", one.ratio, two.ratio, slack[0], slack[3]))
}

fn fractional_gain() -> Outcome {
    let config = CheckConfig::default().with_functions(["x1"]).with_param("depth", 0.0).with_param("p", 1.0);
    let deltas = [0.5, 0.9, 0.99, 0.999];
    let reports = sweep("F3", "delta", &deltas, &config.with_resolution(2048)).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (delta, report) in deltas.iter().zip(&reports) {
        let expected = (2.0 - delta) / 8.0;
        let measured = report.empirical_constant.ok_or("F3 reported no constant")?;
        let error = (measured / expected - 1.0).abs();
        ensure(error < 0.01 && (0.125..=0.1875).contains(&measured), || {
            format!("δ = {delta}: {measured} vs {expected}")
        })?;
        worst = worst.max(error);
    }
    Ok(format!("largest relative error {:.3}%", 100.0 * worst))
}

fn kolmogorov_bridge() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let len = rng.gen_range(16..2048);
        let values: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0f64..1.0).powi(3) * 10.0).collect();
        let weights: Vec<f64> = (0..len).map(|_| rng.gen_range(0.1..10.0)).collect();
        let strong = normalized_lq(&values, &weights, 1.0);
        let weak = weak_norm_values(&values, &weights, 2.0);
        worst = worst.max(strong / (2.0 * weak));
    }
    ensure(worst <= 1.0 + 1e-12, || format!("‖f‖₁ / 2‖f‖₂,∞ reached {worst}"))?;
    Ok(format!("max ‖f‖₁ / (2‖f‖₂,∞) = {worst:.4}"))
}

fn truncation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..1_000_000 {
        let (a, b): (f64, f64) = (rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3));
        let k = rng.gen_range(-12..12);
        let gap = (truncate_level(a, k) - truncate_level(b, k)).abs();
        ensure(gap <= (a - b).abs(), || format!("T_{k} expands |{a} − {b}|"))?;
    }
    for _ in 0..10_000 {
        let k_min = rng.gen_range(-10..0);
        let k_max = rng.gen_range(0..10);
        let v = rng.gen_range(0.0..2f64.powi(k_max + 1));
        ensure(telescope(v, k_min, k_max) == v, || format!("telescoping loses {v}"))?;
    }
    let t1 = check("T1", &CheckConfig::default().with_param("pairs", 1e6))?;
    ensure(t1.pass, || format!("T1: {:?}", t1.failure))?;
    let s6 = check("S6", &CheckConfig::default().with_param("order", 1.0))?;
    let route = detail(&s6, "route_over_direct")?;
    ensure(s6.pass && route <= 4.0 && route >= 0.25, || format!("S6 route factor {route}: {:?}", s6.failure))?;
    Ok(format!("10⁶ pairs contract, T1 exact, S6 route/direct = {route:.3}"))
}

fn exponent_calculus() -> Outcome {
    let e = std::f64::consts::E;
    let weighted = sobolev_exponent(ExponentKind::Weighted, &ExponentParams::new(2.0, 2).delta(1.0).q(1.0).awc(e))
        .map_err(|e| e.to_string())?;
    let classic = sobolev_exponent(ExponentKind::Classic, &ExponentParams::new(1.0, 2)).map_err(|e| e.to_string())?;
    ensure(weighted == 4.0 && classic == 2.0, || format!("p* = {weighted}, classic {classic}"))?;
    let mut worst: f64 = 0.0;
    for &(awc, q) in &[(e, 1.0), (2.0, 1.5), (10.0, 2.0), (1.001, 1.0), (500.0, 3.0)] {
        let log_root = awc.ln() / q;
        let m = 1.0 + log_root;
        let b = (1.0 + log_root) / log_root;
        worst = worst.max((m_choice(awc, q) - m).abs()).max((b_wq(awc, q) - b).abs() / b);
    }
    ensure(worst <= 1e-12, || format!("formula mismatch {worst:e}"))?;
    Ok(format!("p* = 4 and 2, M and B within {worst:e}"))
}

fn self_improvement() -> Outcome {
    let mut notes = Vec::new();
    for id in ["S1", "S2", "S4", "S5", "B5", "B6"] {
        let report = check(id, &CheckConfig::default())?;
        let constant = report.empirical_constant.unwrap_or(f64::NAN);
        let drift = detail(&report, "refinement_drift")?;
        ensure(report.pass && constant.is_finite() && drift <= 0.10, || {
            format!("{id}: constant {constant}, drift {drift}, {:?}", report.failure)
        })?;
        if id == "S5" {
            let claim = detail(&report, "claim_max_ratio")?;
            let bound = detail(&report, "claim_bound")?;
            ensure(claim <= bound * (1.0 + 1e-10), || format!("S5 claim {claim} > {bound}"))?;
        }
        notes.push(format!("{id} {constant:.3} ({:.1}%)", 100.0 * drift));
    }
    Ok(notes.join(", "))
}

fn biparameter() -> Outcome {
    let mut notes = Vec::new();
    for id in ["B1", "B2"] {
        let report = check(id, &CheckConfig::default().with_resolution(64))?;
        let constant = report.empirical_constant.unwrap_or(f64::NAN);
        let drift = detail(&report, "refinement_drift")?;
        ensure(report.pass && constant.is_finite() && drift <= 0.10, || {
            format!("{id}: constant {constant}, drift {drift}, {:?}", report.failure)
        })?;
        notes.push(format!("{id} {constant:.3}"));
        if id == "B1" {
            let agreement = detail(&report, "route_agreement")?;
            ensure(agreement <= 4.0, || format!("routes differ by {agreement}"))?;
            notes.push(format!("routes within {agreement:.3}"));
        }
    }
    Ok(notes.join(", "))
}

fn reverse_holder() -> Outcome {
    let report = check("W1", &CheckConfig::default())?;
    ensure(report.pass, || format!("W1: {:?}", report.failure))?;
    Ok(format!("worst ratio {:.4}", report.ratio))
}

fn good_lambda() -> Outcome {
    let report = check("J2", &CheckConfig::default())?;
    let slope = detail(&report, "slope")?;
    let r2 = detail(&report, "r_squared")?;
    ensure(report.pass && slope < 0.0 && r2 >= 0.9, || format!("slope {slope}, R² {r2}"))?;
    Ok(format!("slope {slope:.3}, R² {r2:.3}"))
}

const CRITERIA: &[Criterion] = &[
    Criterion { number: 1, name: "eccentricity invariance", budget: Duration::from_secs(5), run: eccentricity_invariance },
    Criterion { number: 2, name: "SD norm one", budget: Duration::from_secs(30), run: sd_norm_one },
    Criterion { number: 3, name: "smallness lemma at p*_M", budget: Duration::from_secs(60), run: smallness_lemma },
    Criterion { number: 4, name: "Calderón–Zygmund sandwich", budget: Duration::from_secs(20), run: cz_sandwich },
    Criterion { number: 5, name: "explicit (1,1)-Poincaré", budget: Duration::from_secs(60), run: explicit_poincare },
    Criterion { number: 6, name: "fractional gain", budget: Duration::from_secs(30), run: fractional_gain },
    Criterion { number: 7, name: "Kolmogorov bridge", budget: Duration::from_secs(5), run: kolmogorov_bridge },
    Criterion { number: 8, name: "truncation", budget: Duration::from_secs(30), run: truncation },
    Criterion { number: 9, name: "exponent calculus", budget: Duration::from_secs(1), run: exponent_calculus },
    Criterion { number: 10, name: "self-improvement suites", budget: Duration::from_secs(600), run: self_improvement },
    Criterion { number: 11, name: "biparameter (1,1)", budget: Duration::from_secs(120), run: biparameter },
    Criterion { number: 12, name: "reverse Hölder", budget: Duration::from_secs(30), run: reverse_holder },
    Criterion { number: 13, name: "good-λ decay", budget: Duration::from_secs(60), run: good_lambda },
];

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for criterion in CRITERIA {
        let start = Instant::now();
        let outcome = (criterion.run)();
        let elapsed = start.elapsed();
        let over_budget = elapsed > criterion.budget;
        let (verdict, text) = match (&outcome, over_budget) {
            (Ok(text), false) => ("PASS", text.clone()),
            (Ok(text), true) => ("FAIL", format!("{text}; took longer than {:?}", criterion.budget)),
            (Err(text), _) => ("FAIL", text.clone()),
        };
        println!("criterion {:>2} {verdict}  {}: {text} [{:.2} s]", criterion.number, criterion.name, elapsed.as_secs_f64());
        if verdict == "FAIL" {
            failed.push(criterion.number);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
