//! John–Nirenberg type estimate for `M^d_R(f − P_R f)/M^♯ f` and its good-λ corollary.

use crate::analysis::{dyadic_maximal, sharp_maximal, Center};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, Rect};
use crate::report::{json_f64, CheckReport, RefinementPoint};
use crate::sum::CompensatedSum;
use crate::weights::{fujii_wilson_constant, lebesgue_r_average, Weight};

use super::{rect_label, residual, safe_ratio, Ctx, Measured, Setup};

/// `M^d_R(f − P_R f)` and `M^♯_m f` on the cells of `rect` (in cell-box order).
fn maximal_pair(f: &GridFunction, rect: &Rect, degree: usize, depth: u32) -> Result<(Vec<f64>, Vec<f64>, Vec<usize>)> {
    let grid = *f.grid();
    let cells: Vec<usize> = grid.cell_box(rect)?.cells(&grid).collect();
    let r = residual(f, rect, Center::Poly(degree))?;
    let mut g = vec![0.0; grid.cell_count()];
    for (&cell, &v) in cells.iter().zip(&r) {
        g[cell] = v;
    }
    let md = dyadic_maximal(&GridFunction::from_values(grid, g)?, rect)?;
    let sharp = sharp_maximal(f, degree, rect, &rect.subtree(depth))?;
    let md: Vec<f64> = cells.iter().map(|&c| md.values()[c]).collect();
    let sharp: Vec<f64> = cells.iter().map(|&c| sharp.values()[c]).collect();
    Ok((md, sharp, cells))
}

/// `(1/norm · Σ_x ratio(x)^p w(x) |cell|)^{1/p}`.
fn ratio_norm(md: &[f64], sharp: &[f64], weights: &[f64], cell_volume: f64, p: f64, norm: f64) -> f64 {
    let mut acc = CompensatedSum::new();
    for ((&m, &s), &w) in md.iter().zip(sharp).zip(weights) {
        acc.add(safe_ratio(m, s).powf(p) * w * cell_volume);
    }
    (acc.value() / norm).powf(1.0 / p)
}

fn densities(w: &Weight, cells: &[usize]) -> Vec<f64> {
    cells.iter().map(|&c| w.values()[c]).collect()
}

pub(super) fn j1(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    let (p, r) = (ctx.get("p"), ctx.get("r"));
    if !(p >= 1.0 && r > 1.0) {
        return Err(Error::InvalidParameter(format!("need p ≥ 1 and r > 1, got p = {p}, r = {r}")));
    }
    let degree = ctx.int("degree")? as usize;
    let depth = ctx.int("depth")?;
    ctx.pool(setup, depth + 1)?;
    let w = setup.weight_or_unit()?;
    let ainf = fujii_wilson_constant(&w, ctx.domain.basis(), depth + 1, ctx.int("shifts")? as usize, ctx.seed())?;
    let structural = p * r / (r - 1.0);
    let mut out = Measured::default();
    out.number("weight_constant_ainf", ainf);
    let mut ainf_form: f64 = 0.0;
    for rect in setup.root.subtree(1) {
        let wr = lebesgue_r_average(&w, r, &rect)?;
        let wrect = w.measure(&rect)?;
        for (name, f) in &setup.functions {
            let (md, sharp, cells) = maximal_pair(f.values(), &rect, degree, depth)?;
            let weights = densities(&w, &cells);
            let vol = setup.grid.cell_volume();
            out.push(ratio_norm(&md, &sharp, &weights, vol, p, wr), structural, rect_label(name, &rect));
            let plain = ratio_norm(&md, &sharp, &weights, vol, p, wrect);
            ainf_form = ainf_form.max(plain / (p * ainf));
        }
    }
    out.number("ainf_form_constant", ainf_form);
    Ok(out)
}

/// `sup_λ w({M^d > λ, M^♯ ≤ γλ})/w(R)` by sweeping the interval `[M^♯/γ, M^d)` of each cell.
fn level_set_fraction(md: &[f64], sharp: &[f64], weights: &[f64], gamma: f64) -> f64 {
    let total: f64 = weights.iter().sum();
    let mut events: Vec<(f64, bool, f64)> = Vec::new();
    for ((&m, &s), &w) in md.iter().zip(sharp).zip(weights) {
        let start = s / gamma;
        if start < m {
            events.push((start, true, w));
            events.push((m, false, w));
        }
    }
    // Ends sort before starts at equal λ: the intervals are half open.
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (mut running, mut best) = (0.0f64, 0.0f64);
    for (_, is_start, w) in events {
        if is_start {
            running += w;
            best = best.max(running);
        } else {
            running -= w;
        }
    }
    best / total
}

/// Least-squares line `y = a + b x` and its coefficient of determination.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (my - slope * mx, slope, r2)
}

/// Good-λ decay: `F(γ) = max_f sup_λ w({M^d > λ, M^♯ ≤ γλ})/w(R)` on `γ_k = 2·0.8^k`,
/// fitted as `log F ≈ a − c/γ`. Passes when the slope is negative and the fit quality
/// reaches `min_quality`. With `gamma > 0` only that level-set fraction is reported.
pub(super) fn j2(ctx: &Ctx) -> Result<CheckReport> {
    let degree = ctx.int("degree")? as usize;
    let depth = ctx.int("depth")?;
    let setup = ctx.setup(ctx.resolution)?;
    ctx.pool(&setup, depth)?;
    let w = setup.weight_or_unit()?;
    let ainf = fujii_wilson_constant(&w, ctx.domain.basis(), depth, ctx.int("shifts")? as usize, ctx.seed())?;
    let mut profiles = Vec::new();
    for (_, f) in &setup.functions {
        let (md, sharp, cells) = maximal_pair(f.values(), &setup.root, degree, depth)?;
        profiles.push((md, sharp, densities(&w, &cells)));
    }
    let fraction = |gamma: f64| {
        profiles.iter().map(|(m, s, w)| level_set_fraction(m, s, w, gamma)).fold(0.0, f64::max)
    };
    let resolution = setup.grid.resolution().to_vec();

    let gamma = ctx.get("gamma");
    if gamma > 0.0 {
        let value = fraction(gamma);
        let mut report = CheckReport::explicit("J2", value, 1.0, 0.0, ctx.seed());
        report.refinement = vec![RefinementPoint { resolution, lhs: value, rhs: 1.0, value }];
        report.detail("gamma", json_f64(gamma));
        report.detail("weight_constant_ainf", json_f64(ainf));
        return Ok(report);
    }

    let count = ctx.int("gammas")?;
    let min_quality = ctx.get("min_quality");
    let gammas: Vec<f64> = (0..count).map(|k| 2.0 * 0.8f64.powi(k as i32)).collect();
    let values: Vec<f64> = gammas.iter().map(|&g| fraction(g)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        gammas.iter().zip(&values).filter(|(_, &v)| v > 0.0).map(|(g, v)| (1.0 / g, v.ln())).unzip();
    let (intercept, slope, r2) = if xs.len() >= 2 { linear_fit(&xs, &ys) } else { (f64::NAN, f64::NAN, f64::NAN) };

    let mut report = CheckReport::explicit("J2", 1.0 - r2, 1.0 - min_quality, 0.0, ctx.seed());
    report.refinement = vec![RefinementPoint { resolution, lhs: 1.0 - r2, rhs: 1.0 - min_quality, value: slope }];
    report.failure = None;
    report.pass = true;
    if xs.len() < 3 {
        report.fail(format!("only {} γ values give a nonempty level set; at least 3 are needed", xs.len()));
    }
    if !(slope < 0.0) {
        report.fail(format!("fitted slope {slope} is not negative"));
    }
    if !(r2 >= min_quality) {
        report.fail(format!("fit quality {r2:.4} is below {min_quality}"));
    }
    report.detail("slope", json_f64(slope));
    report.detail("intercept", json_f64(intercept));
    report.detail("r_squared", json_f64(r2));
    report.detail("points", xs.len());
    report.detail("gammas", gammas.iter().map(|&g| json_f64(g)).collect::<Vec<_>>());
    report.detail("fractions", values.iter().map(|&v| json_f64(v)).collect::<Vec<_>>());
    report.detail("decay_rate_times_ainf", json_f64(-slope * ainf));
    report.detail("weight_constant_ainf", json_f64(ainf));
    Ok(report)
}
