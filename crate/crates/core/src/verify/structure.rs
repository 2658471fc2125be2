//! Checks on weights and truncations that do not involve a test function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{normalized_lq, telescope, truncate_level};
use crate::error::Result;
use crate::report::{json_f64, CheckReport, RefinementPoint};
use crate::weights::{fujii_wilson_constant, make_weight, reverse_holder_check};

use super::selfimprove::layer_cake;
use super::{safe_ratio, Ctx};

/// Weights tested by default: powers of `|x|`, of one coordinate and of every coordinate.
pub const REVERSE_HOLDER_WEIGHTS: &[&str] =
    &["power:0.5", "power:-0.5", "power:-1", "axis-power:0.5", "axis-power:-0.5", "product-power:-0.5"];

/// Reverse Hölder inequality at the admissible exponent on every dyadic rectangle to `depth`.
pub(super) fn w1(ctx: &Ctx) -> Result<CheckReport> {
    let depth = ctx.int("depth")?;
    let shifts = ctx.int("shifts")? as usize;
    let specs: Vec<&str> = match ctx.config.weight.as_deref() {
        Some(spec) => vec![spec],
        None => REVERSE_HOLDER_WEIGHTS.to_vec(),
    };
    let mut trace = Vec::new();
    let mut worst: Option<CheckReport> = None;
    let mut constants = serde_json::Map::new();
    let mut coarse_failure = None;
    for resolution in ctx.resolutions() {
        let setup = ctx.setup(resolution)?;
        let pool = ctx.pool(&setup, depth)?;
        let mut level_worst: Option<CheckReport> = None;
        for spec in &specs {
            let w = make_weight(spec, setup.grid)?;
            let ainf = fujii_wilson_constant(&w, ctx.domain.basis(), depth, shifts, ctx.seed())?;
            constants.insert(spec.to_string(), json_f64(ainf));
            for rect in &pool {
                let report = reverse_holder_check(&w, rect, ainf)?.with_param("weight", *spec);
                if level_worst.as_ref().map_or(true, |b| report.ratio > b.ratio) {
                    level_worst = Some(report);
                }
            }
        }
        let level_worst = level_worst.expect("pool is nonempty");
        trace.push(RefinementPoint {
            resolution: setup.grid.resolution().to_vec(),
            lhs: level_worst.lhs,
            rhs: level_worst.rhs,
            value: level_worst.ratio,
        });
        if resolution < ctx.resolution && !level_worst.pass {
            coarse_failure = Some(format!("N={resolution}: ratio {}", level_worst.ratio));
        }
        worst = Some(level_worst);
    }
    let worst = worst.expect("two resolutions");
    let mut report = CheckReport::explicit("W1", worst.lhs, worst.rhs, ctx.entry.tolerance, ctx.seed());
    report.refinement = trace;
    for (key, value) in &worst.params {
        report.detail(&format!("argmax_{key}"), value.clone());
    }
    report.detail("ainf", serde_json::Value::Object(constants));
    report.detail("rectangles", specs.len() * ctx.setup(ctx.resolution)?.root.subtree(depth).len());
    if let Some(reason) = coarse_failure {
        report.fail(reason);
    }
    Ok(report)
}

/// Contraction of `T_k` on random pairs, exact telescoping, and the layer-cake bound
/// `‖g‖_p ≤ 4 (Σ_k ‖T_k g‖^p_{L^{p,∞}})^{1/p}` on random nonnegative samples.
pub(super) fn t1(ctx: &Ctx) -> Result<CheckReport> {
    let p = ctx.get("p");
    let pairs = ctx.get("pairs").max(0.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());

    let mut contraction: f64 = 0.0;
    for _ in 0..pairs {
        let k: i32 = rng.gen_range(-12..=12);
        let scale = 2f64.powi(k + 2);
        let (u, v) = (rng.gen_range(-0.25..1.0) * scale, rng.gen_range(-0.25..1.0) * scale);
        let gap = (truncate_level(u, k) - truncate_level(v, k)).abs();
        contraction = contraction.max(safe_ratio(gap, (u - v).abs()));
    }

    let n = ctx.resolution;
    let (k_min, k_max) = (-20, 10);
    let mut telescope_error: f64 = 0.0;
    let mut cake: f64 = 0.0;
    for _ in 0..100 {
        let values: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.1) { 0.0 } else { 2f64.powf(rng.gen_range(-20.0..(k_max + 1) as f64)) })
            .collect();
        for &v in &values {
            telescope_error = telescope_error.max((telescope(v, k_min, k_max) - v).abs());
        }
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        cake = cake.max(safe_ratio(normalized_lq(&values, &weights, p), layer_cake(&values, &weights, p)));
    }

    let lhs = contraction.max(cake);
    let mut report = CheckReport::explicit("T1", lhs, 1.0, ctx.entry.tolerance, ctx.seed());
    report.refinement = vec![RefinementPoint { resolution: vec![n], lhs, rhs: 1.0, value: lhs }];
    report.detail("contraction_max_ratio", json_f64(contraction));
    report.detail("layer_cake_max_ratio", json_f64(cake));
    report.detail("telescope_max_error", json_f64(telescope_error));
    report.detail("pairs", pairs);
    if telescope_error != 0.0 {
        report.fail(format!("telescoping sum misses g by {telescope_error:e}"));
    }
    Ok(report)
}
