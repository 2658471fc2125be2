//! One-parameter fractional Poincaré and Sobolev inequalities.

use std::sync::Arc;

use crate::analysis::{normalized_lq, weak_norm_values, Center};
use crate::conditions::{sobolev_exponent, ExponentKind, ExponentParams};
use crate::error::{Error, Result};
use crate::functionals::{eval_functional, FullForm, FunctionalSpec, Length};
use crate::weights::{dyadic_muckenhoupt, Weight};

use super::riesz::riesz_potential_bound;
use super::{cell_weights, kolmogorov_gap, rect_label, residual, Ctx, Measured, Setup};

fn delta(ctx: &Ctx) -> Result<f64> {
    let d = ctx.get("delta");
    if d > 0.0 && d < 1.0 {
        Ok(d)
    } else {
        Err(Error::InvalidParameter(format!("δ must lie in (0, 1), got {d}")))
    }
}

fn exponent_p(ctx: &Ctx) -> Result<f64> {
    let p = ctx.get("p");
    if p >= 1.0 {
        Ok(p)
    } else {
        Err(Error::InvalidParameter(format!("p must be at least 1, got {p}")))
    }
}

fn seminorm(delta: f64, p: f64, weight: Option<Arc<Weight>>) -> FunctionalSpec {
    FunctionalSpec::FractionalFull { delta, p, weight, form: FullForm::Seminorm, eccentricity_factor: false }
}

pub(super) fn f1(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    ctx.require_cubes()?;
    let spec = seminorm(delta(ctx)?, 1.0, None);
    let mut out = Measured::default();
    for rect in ctx.pool(setup, ctx.int("depth")?)? {
        for (name, f) in &setup.functions {
            let r = residual(f.values(), &rect, Center::Mean)?;
            let lhs = normalized_lq(&r, &vec![1.0; r.len()], 1.0);
            out.push(lhs, eval_functional(&spec, f, &rect)?, rect_label(name, &rect));
        }
    }
    Ok(out)
}

/// Weak `L^{p*}` norm of `f − f_Q` against `p*·[f]_{W^{δ,p}}`, with the Kolmogorov bridge at `q = p*/2`.
pub(super) fn f2(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    ctx.require_cubes()?;
    let (delta, p) = (delta(ctx)?, exponent_p(ctx)?);
    let p_star = sobolev_exponent(ExponentKind::Classic, &ExponentParams::new(p, ctx.dim()).delta(delta))?;
    let spec = seminorm(delta, p, None);
    let mut out = Measured::default();
    out.number("p_star", p_star);
    let mut bridge: f64 = 0.0;
    for rect in ctx.pool(setup, ctx.int("depth")?)? {
        for (name, f) in &setup.functions {
            let r = residual(f.values(), &rect, Center::Mean)?;
            let ones = vec![1.0; r.len()];
            let lhs = weak_norm_values(&r, &ones, p_star);
            out.push(lhs, p_star * eval_functional(&spec, f, &rect)?, rect_label(name, &rect));
            let (strong, bound) = kolmogorov_gap(&r, &ones, p_star);
            bridge = bridge.max(super::safe_ratio(strong, bound));
        }
    }
    out.number("kolmogorov_max_ratio", bridge);
    out.verdict("kolmogorov", bridge <= 1.0 + 1e-12, || format!("Kolmogorov bridge ratio {bridge} exceeds 1"));
    Ok(out)
}

/// `⨍|f − f_Q|` (or the `L^{p*}` norm with the factor `p*`) against `(1−δ)^{1/p}[f]_{W^{δ,p}}`.
pub(super) fn f3(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    ctx.require_cubes()?;
    let (delta, p) = (delta(ctx)?, exponent_p(ctx)?);
    let sobolev = ctx.int("sobolev")? == 1;
    let p_star = if sobolev {
        Some(sobolev_exponent(ExponentKind::Classic, &ExponentParams::new(p, ctx.dim()).delta(delta))?)
    } else {
        None
    };
    let spec = seminorm(delta, p, None);
    let gain = (1.0 - delta).powf(1.0 / p);
    let mut out = Measured::default();
    if let Some(ps) = p_star {
        out.number("p_star", ps);
    }
    for rect in ctx.pool(setup, ctx.int("depth")?)? {
        for (name, f) in &setup.functions {
            let r = residual(f.values(), &rect, Center::Mean)?;
            let ones = vec![1.0; r.len()];
            let (lhs, factor) = match p_star {
                Some(ps) => (normalized_lq(&r, &ones, ps), ps),
                None => (normalized_lq(&r, &ones, 1.0), 1.0),
            };
            out.push(lhs, factor * gain * eval_functional(&spec, f, &rect)?, rect_label(name, &rect));
        }
    }
    Ok(out)
}

/// `‖f − f_Q‖_{L^{p*}(w/w(Q))}` with the fractional A₁ exponent against
/// `(1−δ)^{1/p}[w]_{A_1}^{1/p} ℓ^δ ((1/w(Q)) ∫∫ |f(x)−f(y)|^p/|x−y|^{n+δp} w(x))^{1/p}`.
pub(super) fn f4(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    ctx.require_cubes()?;
    let (delta, p) = (delta(ctx)?, exponent_p(ctx)?);
    let depth = ctx.int("depth")?;
    let w = setup.require_weight()?;
    let a1 = dyadic_muckenhoupt(&w, 1.0, &setup.root, depth)?;
    let p_star =
        sobolev_exponent(ExponentKind::FractionalA1, &ExponentParams::new(p, ctx.dim()).delta(delta).awc(a1))?;
    let spec = seminorm(delta, p, Some(w.clone()));
    let factor = (1.0 - delta).powf(1.0 / p) * a1.powf(1.0 / p);
    let mut out = Measured::default();
    out.number("weight_constant_a1", a1);
    out.number("p_star", p_star);
    for rect in ctx.pool(setup, depth)? {
        // The seminorm form divides by |Q|; rescale to w(Q).
        let rescale = (rect.measure() / w.measure(&rect)?).powf(1.0 / p);
        for (name, f) in &setup.functions {
            let r = residual(f.values(), &rect, Center::Mean)?;
            let lhs = normalized_lq(&r, &cell_weights(Some(&w), &rect, r.len())?, p_star);
            let structural = factor * rescale * eval_functional(&spec, f, &rect)?;
            out.push(lhs, structural, rect_label(name, &rect));
        }
    }
    Ok(out)
}

/// `[f]_{W^{δ,1}(Q)}` against `ℓ(Q)⨍|∇f|/(δ(1−δ))`, with the Riesz potential bound at the centre cell.
pub(super) fn f5(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    ctx.require_cubes()?;
    let delta = delta(ctx)?;
    let spec = seminorm(delta, 1.0, None);
    let gradient = FunctionalSpec::GradientM {
        order: 1,
        p: 1.0,
        weight: None,
        length: Length::Side(0),
        axes: crate::functionals::Axes::All,
    };
    let scale = 1.0 / (delta * (1.0 - delta));
    let mut out = Measured::default();
    for rect in ctx.pool(setup, ctx.int("depth")?)? {
        for (name, f) in &setup.functions {
            let lhs = eval_functional(&spec, f, &rect)?;
            out.push(lhs, scale * eval_functional(&gradient, f, &rect)?, rect_label(name, &rect));
        }
    }

    let grid = setup.grid;
    let omega: Vec<usize> = grid.full_box().cells(&grid).collect();
    let centre: Vec<usize> = grid.resolution().iter().map(|&n| n / 2).collect();
    let riesz = riesz_potential_bound(&grid, &omega, grid.linear(&centre), ctx.get("alpha"))?;
    out.number("riesz_lhs", riesz.lhs);
    out.number("riesz_rearranged_rhs", riesz.rearranged_rhs);
    out.number("riesz_printed_rhs", riesz.printed_rhs);
    out.verdict("riesz", riesz.pass, || {
        format!("Riesz potential {} exceeds the rearranged bound {}", riesz.lhs, riesz.rearranged_rhs)
    });
    Ok(out)
}

/// `‖f − f_R‖_{L^{p*_w}(w/w(R))}` against `(1/δ)[w]_{A_p}^{1/p} d^δ e^{−n/p} ((1/w(R))∫A(R,·)w)^{1/p}`.
pub(super) fn s7(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    let (delta, p) = (delta(ctx)?, exponent_p(ctx)?);
    let q = ctx.get("q");
    let depth = ctx.int("depth")?;
    let w = setup.require_weight()?;
    let aq = dyadic_muckenhoupt(&w, q, &setup.root, depth)?;
    let ap = dyadic_muckenhoupt(&w, p, &setup.root, depth)?;
    let p_star =
        sobolev_exponent(ExponentKind::Weighted, &ExponentParams::new(p, ctx.dim()).delta(delta).q(q).awc(aq))?;
    let spec = FunctionalSpec::FractionalFull {
        delta,
        p,
        weight: Some(w.clone()),
        form: FullForm::AOfX,
        eccentricity_factor: true,
    };
    let factor = ap.powf(1.0 / p) / delta;
    let mut out = Measured::default();
    out.number("weight_constant_aq", aq);
    out.number("weight_constant_ap", ap);
    out.number("p_star", p_star);
    for rect in ctx.pool(setup, depth)? {
        for (name, f) in &setup.functions {
            let r = residual(f.values(), &rect, Center::Mean)?;
            let lhs = normalized_lq(&r, &cell_weights(Some(&w), &rect, r.len())?, p_star);
            out.push(lhs, factor * eval_functional(&spec, f, &rect)?, rect_label(name, &rect));
        }
    }
    Ok(out)
}
