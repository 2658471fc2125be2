//! Oscillations, weak norms and truncations.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Rect};
use crate::sum::CompensatedSum;
use crate::weights::Weight;

use super::poly::{rect_widths, ProjectionBasis};

/// How the constant (or polynomial) subtracted from `f` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Center {
    /// The Lebesgue average `f_R`.
    Mean,
    /// The projection `P_R f` onto polynomials of degree at most `m`.
    Poly(usize),
    /// The constant minimising the `δ`-oscillation; the exponent `q` is replaced by `δ`.
    OptimalDelta(f64),
}

/// Values of `f` on the cells of `rect` and the matching weights (ones if absent).
pub fn restricted(f: &GridFunction, rect: &Rect, w: Option<&Weight>) -> Result<(Vec<f64>, Vec<f64>)> {
    let values = f.restrict(rect)?;
    let weights = match w {
        Some(w) => w.density().restrict(rect)?,
        None => vec![1.0; values.len()],
    };
    Ok((values, weights))
}

/// `(Σ w|v|^q / Σ w)^{1/q}`.
pub fn normalized_lq(values: &[f64], weights: &[f64], q: f64) -> f64 {
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for (&v, &w) in values.iter().zip(weights) {
        let a = v.abs();
        let powered = if q == 1.0 {
            a
        } else if q == 2.0 {
            a * a
        } else {
            a.powf(q)
        };
        num.add(powered * w);
        den.add(w);
    }
    let mean = num.value() / den.value();
    if q == 1.0 {
        mean
    } else {
        mean.powf(1.0 / q)
    }
}

/// `((1/w(R))∫_R |f − c*|^q w)^{1/q}` for the chosen centre rule.
pub fn oscillation(f: &GridFunction, rect: &Rect, q: f64, w: Option<&Weight>, center: Center) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::InvalidParameter(format!("oscillation exponent must be positive, got {q}")));
    }
    let (values, weights) = restricted(f, rect, w)?;
    if values.is_empty() {
        return Err(Error::InvalidParameter("empty rectangle".into()));
    }
    match center {
        Center::Mean => {
            let mean = values.iter().copied().collect::<CompensatedSum>().value() / values.len() as f64;
            let residual: Vec<f64> = values.iter().map(|v| v - mean).collect();
            Ok(normalized_lq(&residual, &weights, q))
        }
        Center::Poly(m) => {
            let basis = ProjectionBasis::new(&rect_widths(f, rect)?, m)?;
            Ok(normalized_lq(&basis.residual(&values), &weights, q))
        }
        Center::OptimalDelta(delta) => {
            if !(delta > 0.0 && delta < 1.0) {
                return Err(Error::InvalidParameter(format!("δ must lie in (0,1), got {delta}")));
            }
            Ok(optimal_delta_oscillation(&values, &weights, delta).1)
        }
    }
}

fn delta_objective(values: &[f64], weights: &[f64], delta: f64, c: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for (&v, &w) in values.iter().zip(weights) {
        acc.add((v - c).abs().powf(delta) * w);
    }
    acc.value()
}

/// Minimiser `c*` and value `(Σ w|v−c*|^δ / Σ w)^{1/δ}` of the δ-oscillation.
///
/// The objective is scanned at 256 quantiles of the values; a golden-section search
/// refines the best bracket, and the data values inside the bracket are also tried
/// (between consecutive data values the objective is concave, so its minimum over a
/// bracket is attained at a data value or at the bracket ends).
pub fn optimal_delta_oscillation(values: &[f64], weights: &[f64], delta: f64) -> (f64, f64) {
    let total: f64 = weights.iter().copied().collect::<CompensatedSum>().value();
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let count = sorted.len();
    let quantiles: Vec<f64> = (0..256)
        .map(|k| sorted[((k as f64 / 255.0) * (count - 1) as f64).round() as usize])
        .collect();
    let objective = |c: f64| delta_objective(values, weights, delta, c);
    let mut best_k = 0;
    let mut best_value = f64::INFINITY;
    for (k, &c) in quantiles.iter().enumerate() {
        let v = objective(c);
        if v < best_value {
            best_value = v;
            best_k = k;
        }
    }
    let mut best_c = quantiles[best_k];
    let lo = quantiles[best_k.saturating_sub(1)];
    let hi = quantiles[(best_k + 1).min(255)];
    // Golden-section refinement inside [lo, hi].
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c1 = b - ratio * (b - a);
    let mut c2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (objective(c1), objective(c2));
    for _ in 0..80 {
        if b - a <= 1e-14 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if f1 <= f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - ratio * (b - a);
            f1 = objective(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + ratio * (b - a);
            f2 = objective(c2);
        }
    }
    for (c, v) in [(c1, f1), (c2, f2)] {
        if v < best_value {
            best_value = v;
            best_c = c;
        }
    }
    let start = sorted.partition_point(|&v| v < lo);
    let end = sorted.partition_point(|&v| v <= hi);
    let mut previous = f64::NAN;
    for &c in &sorted[start..end] {
        if c == previous {
            continue;
        }
        previous = c;
        let v = objective(c);
        if v < best_value {
            best_value = v;
            best_c = c;
        }
    }
    (best_c, (best_value / total).powf(1.0 / delta))
}

/// `sup_t t·(w{|v| > t}/w(R))^{1/p}`, evaluated exactly at the distinct values of `|v|`.
pub fn weak_norm_values(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let mut pairs: Vec<(f64, f64)> = values.iter().map(|v| v.abs()).zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total: f64 = weights.iter().copied().collect::<CompensatedSum>().value();
    let mut above = CompensatedSum::new();
    let mut best: f64 = 0.0;
    let mut i = 0;
    while i < pairs.len() {
        let t = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == t {
            above.add(pairs[i].1);
            i += 1;
        }
        // Just below t, the set {|v| > s} contains every value ≥ t.
        let fraction = (above.value() / total).min(1.0);
        best = best.max(t * fraction.powf(1.0 / p));
    }
    best
}

/// Normalised weak `L^{p,∞}` norm of `f` on `rect` with respect to `w dx / w(R)`.
pub fn weak_norm(f: &GridFunction, rect: &Rect, p: f64, w: Option<&Weight>) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!("weak norm exponent must be positive, got {p}")));
    }
    let (values, weights) = restricted(f, rect, w)?;
    Ok(weak_norm_values(&values, &weights, p))
}

/// Truncation rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// `T_k g = clamp(g − 2^k, 0, 2^k)` for nonnegative `g`.
    Level(i32),
    /// `min(|g|, m)`.
    Height(f64),
}

/// `clamp(v − 2^k, 0, 2^k)`.
#[inline]
pub fn truncate_level(v: f64, k: i32) -> f64 {
    let band = 2f64.powi(k);
    (v - band).clamp(0.0, band)
}

pub fn truncate(g: &GridFunction, mode: Truncation) -> Result<GridFunction> {
    match mode {
        Truncation::Level(k) => {
            if !g.is_nonnegative() {
                return Err(Error::InvalidParameter(
                    "level truncation needs a nonnegative function".into(),
                ));
            }
            Ok(g.map(|v| truncate_level(v, k)))
        }
        Truncation::Height(m) => Ok(g.map(|v| v.abs().min(m))),
    }
}

/// `Σ_{k=k_min}^{k_max} T_k v + min(v, 2^{k_min})`, summed from the lowest band up.
///
/// For `0 ≤ v ≤ 2^{k_max+1}` this reproduces `v` exactly: the lower tail
/// `min(v, 2^{k_min})` collects the bands below `k_min`.
pub fn telescope(v: f64, k_min: i32, k_max: i32) -> f64 {
    let mut total = v.min(2f64.powi(k_min));
    for k in k_min..=k_max {
        total += truncate_level(v, k);
    }
    total
}
