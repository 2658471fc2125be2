//! Inequalities on products of cubes, where each block carries its own side length.

use std::sync::Arc;

use crate::analysis::{normalized_lq, Center};
use crate::conditions::{sobolev_exponent, ExponentKind, ExponentParams};
use crate::error::{Error, Result};
use crate::functionals::{eval_functional, FunctionalSpec};
use crate::weights::{dyadic_muckenhoupt, Weight};

use super::{block_gradient, cell_weights, rect_label, residual, safe_ratio, Ctx, Measured, Setup};

fn blocks(ctx: &Ctx, expected: usize) -> Result<usize> {
    let count = ctx.domain.blocks().len();
    if count < expected {
        return Err(Error::Unsupported(format!(
            "{} needs a domain split into at least {expected} blocks, got {count}",
            ctx.entry.id
        )));
    }
    ctx.require_cubes()?;
    Ok(count)
}

fn block_fractional(block: usize, delta: f64, p: f64, weight: Option<Arc<Weight>>) -> FunctionalSpec {
    FunctionalSpec::BlockFractional { block, delta, p, weight }
}

/// `⨍|f − f_R|` against `spec` over the pool and corpus.
fn oscillation_against(ctx: &Ctx, setup: &Setup, spec: &FunctionalSpec, out: &mut Measured, prefix: &str) -> Result<()> {
    for rect in ctx.pool(setup, ctx.int("depth")?)? {
        for (name, f) in &setup.functions {
            let r = residual(f.values(), &rect, Center::Mean)?;
            let lhs = normalized_lq(&r, &vec![1.0; r.len()], 1.0);
            out.push(lhs, eval_functional(spec, f, &rect)?, format!("{prefix}{}", rect_label(name, &rect)));
        }
    }
    Ok(())
}

/// Direct route against `Σ_b ℓ_b ⨍|∇_b f|`, cross-validated with the route through the
/// fractional inequality at `δ = 1/2` followed by the block-wise gradient domination.
pub(super) fn b1(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    let count = blocks(ctx, 2)?;
    let direct = FunctionalSpec::Sum((0..count).map(|b| block_gradient(b, 1.0, None)).collect());
    let mut out = Measured::default();
    oscillation_against(ctx, setup, &direct, &mut out, "")?;
    let c_direct = out.worst_ratio("");

    let half = 0.5;
    let fractional = FunctionalSpec::Sum((0..count).map(|b| block_fractional(b, half, 1.0, None)).collect());
    let mut via = Measured::default();
    oscillation_against(ctx, setup, &fractional, &mut via, "")?;
    let c_fractional = via.worst_ratio("");
    let scale = 1.0 / (half * (1.0 - half));
    let mut c_domination: f64 = 0.0;
    for rect in ctx.pool(setup, ctx.int("depth")?)? {
        for (_, f) in &setup.functions {
            for b in 0..count {
                let a = eval_functional(&block_fractional(b, half, 1.0, None), f, &rect)?;
                let g = eval_functional(&block_gradient(b, 1.0, None), f, &rect)?;
                c_domination = c_domination.max(safe_ratio(a, scale * g));
            }
        }
    }
    let route = c_fractional * c_domination * scale;
    let agreement = (route / c_direct).max(c_direct / route);
    let factor = ctx.get("route_factor");
    out.number("fractional_route_constant", route);
    out.number("fractional_constant", c_fractional);
    out.number("domination_constant", c_domination);
    out.number("route_agreement", agreement);
    out.verdict("routes", agreement <= factor, || {
        format!("the two derivations differ by a factor {agreement:.3} (limit {factor})")
    });
    Ok(out)
}

pub(super) fn b2(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    let count = blocks(ctx, 2)?;
    let (delta, p) = (ctx.get("delta"), ctx.get("p"));
    let spec = FunctionalSpec::Sum((0..count).map(|b| block_fractional(b, delta, p, None)).collect());
    let mut out = Measured::default();
    oscillation_against(ctx, setup, &spec, &mut out, "")?;
    Ok(out)
}

/// Block functionals `a_b` paired with their factors `(1−δ_b)^{1/p_b}`.
fn gained_sum(parts: &[(usize, f64, f64)], weight: Option<Arc<Weight>>) -> Vec<(f64, FunctionalSpec)> {
    parts
        .iter()
        .map(|&(b, delta, p)| ((1.0 - delta).powf(1.0 / p), block_fractional(b, delta, p, weight.clone())))
        .collect()
}

fn gained_against(ctx: &Ctx, setup: &Setup, parts: &[(f64, FunctionalSpec)]) -> Result<Measured> {
    let mut out = Measured::default();
    for rect in ctx.pool(setup, ctx.int("depth")?)? {
        for (name, f) in &setup.functions {
            let r = residual(f.values(), &rect, Center::Mean)?;
            let lhs = normalized_lq(&r, &vec![1.0; r.len()], 1.0);
            let mut rhs = 0.0;
            for (gain, spec) in parts {
                rhs += gain * eval_functional(spec, f, &rect)?;
            }
            out.push(lhs, rhs, rect_label(name, &rect));
        }
    }
    Ok(out)
}

pub(super) fn b3(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    blocks(ctx, 2)?;
    let parts = [(0, ctx.get("delta1"), ctx.get("p1")), (1, ctx.get("delta2"), ctx.get("p2"))];
    gained_against(ctx, setup, &gained_sum(&parts, None))
}

pub(super) fn b4(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    let count = blocks(ctx, 2)?;
    let (delta, p) = (ctx.get("delta"), ctx.get("p"));
    let parts: Vec<(usize, f64, f64)> = (0..count).map(|b| (b, delta, p)).collect();
    gained_against(ctx, setup, &gained_sum(&parts, None))
}

pub(super) fn b5(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    let count = blocks(ctx, 2)?;
    let (p, q, depth) = (ctx.get("p"), ctx.get("q"), ctx.int("depth")?);
    let w = setup.require_weight()?;
    let aq = dyadic_muckenhoupt(&w, q, &setup.root, depth)?;
    let ap = dyadic_muckenhoupt(&w, p, &setup.root, depth)?;
    let p_star = sobolev_exponent(ExponentKind::Weighted, &ExponentParams::new(p, ctx.dim()).q(q).awc(aq))?;
    let spec = FunctionalSpec::Sum((0..count).map(|b| block_gradient(b, p, Some(w.clone()))).collect());
    let factor = ap.powf(1.0 / p);
    let mut out = Measured::default();
    out.number("weight_constant_aq", aq);
    out.number("weight_constant_ap", ap);
    out.number("p_star", p_star);
    out.detail("regime", if aq >= q.exp() { "nontrivial weight" } else { "flat weight, truncation" });
    for rect in ctx.pool(setup, depth)? {
        for (name, f) in &setup.functions {
            let r = residual(f.values(), &rect, Center::Mean)?;
            let lhs = normalized_lq(&r, &cell_weights(Some(&w), &rect, r.len())?, p_star);
            out.push(lhs, factor * eval_functional(&spec, f, &rect)?, rect_label(name, &rect));
        }
    }
    Ok(out)
}

pub(super) fn b6(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    let count = blocks(ctx, 2)?;
    let (delta, p, depth) = (ctx.get("delta"), ctx.get("p"), ctx.int("depth")?);
    let w = setup.require_weight()?;
    let a1 = dyadic_muckenhoupt(&w, 1.0, &setup.root, depth)?;
    let p_star =
        sobolev_exponent(ExponentKind::FractionalA1, &ExponentParams::new(p, ctx.dim()).delta(delta).awc(a1))?;
    let parts: Vec<(usize, f64, f64)> = (0..count).map(|b| (b, delta, p)).collect();
    let parts = gained_sum(&parts, Some(w.clone()));
    let factor = a1.powf(1.0 / p);
    let mut out = Measured::default();
    out.number("weight_constant_a1", a1);
    out.number("p_star", p_star);
    for rect in ctx.pool(setup, depth)? {
        for (name, f) in &setup.functions {
            let r = residual(f.values(), &rect, Center::Mean)?;
            let lhs = normalized_lq(&r, &cell_weights(Some(&w), &rect, r.len())?, p_star);
            let mut rhs = 0.0;
            for (gain, spec) in &parts {
                rhs += gain * eval_functional(spec, f, &rect)?;
            }
            out.push(lhs, factor * rhs, rect_label(name, &rect));
        }
    }
    Ok(out)
}
