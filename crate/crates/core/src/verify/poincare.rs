//! Gradient Poincaré inequalities: the (1,1) inequality with constant 1/2, the higher
//! order starting points and the weighted (p,p) corollary.

use crate::analysis::{normalized_lq, oscillation, Center};
use crate::error::{Error, Result};
use crate::functionals::eval_functional;
use crate::weights::{dyadic_muckenhoupt, muckenhoupt_ratio};

use super::{cell_weights, gradient, rect_label, residual, Ctx, Measured, Setup};

fn order(ctx: &Ctx) -> Result<usize> {
    match ctx.int("order")? {
        0 => Err(Error::InvalidParameter("derivative order must be at least 1".into())),
        m => Ok(m as usize),
    }
}

pub(super) fn p1(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    let constant = ctx.get("constant");
    let pool = ctx.pool(setup, ctx.int("depth")?)?;
    let spec = gradient(1, 1.0, None);
    let mut out = Measured::default();
    for (name, f) in &setup.functions {
        for rect in &pool {
            let lhs = oscillation(f.values(), rect, 1.0, None, Center::Mean)?;
            let rhs = constant * eval_functional(&spec, f, rect)?;
            out.push(lhs, rhs, rect_label(name, rect));
        }
    }
    let worst = out.worst_ratio("");
    out.verdict("constant", worst <= 1.0 + ctx.entry.tolerance, || {
        format!("constant {constant} is too small: the oscillation reaches {worst:.4} times constant·d(R)⨍|∇f|")
    });
    Ok(out)
}

pub(super) fn p2(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    let m = order(ctx)?;
    let pool = ctx.pool(setup, ctx.int("depth")?)?;
    let spec = gradient(m, 1.0, None);
    let mut out = Measured::default();
    for (name, f) in &setup.functions {
        for rect in &pool {
            let lhs = oscillation(f.values(), rect, 1.0, None, Center::Poly(m - 1))?;
            out.push(lhs, eval_functional(&spec, f, rect)?, rect_label(name, rect));
        }
    }
    Ok(out)
}

/// Unweighted `L^1` oscillation against `[w]_{A_p}^{1/p} d^m ‖∇^m f‖_{L^p(w/w(R))}`, plus the
/// exact per-rectangle Hölder step `⨍|∇^m f| ≤ [w]_{A_p,R}^{1/p} ‖∇^m f‖_{L^p(w/w(R))}`.
pub(super) fn p3(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    let m = order(ctx)?;
    let p = ctx.get("p");
    let depth = ctx.int("depth")?;
    let pool = ctx.pool(setup, depth)?;
    let w = setup.require_weight()?;
    let ap = dyadic_muckenhoupt(&w, p, &setup.root, depth)?;
    let spec = gradient(m, p, Some(w.clone()));
    let mut out = Measured::default();
    out.number("weight_constant_ap", ap);
    let mut holder_worst: f64 = 0.0;
    for (name, f) in &setup.functions {
        let field = f.derivative(crate::functionals::Axes::All, m)?;
        for rect in &pool {
            let lhs = oscillation(f.values(), rect, 1.0, None, Center::Poly(m - 1))?;
            let structural = ap.powf(1.0 / p) * eval_functional(&spec, f, rect)?;
            out.push(lhs, structural, rect_label(name, rect));

            let values = field.restrict(rect)?;
            let plain = normalized_lq(&values, &vec![1.0; values.len()], 1.0);
            let weighted = normalized_lq(&values, &cell_weights(Some(&w), rect, values.len())?, p);
            let local = muckenhoupt_ratio(&w, &setup.grid.cell_box(rect)?, p);
            let bound = local.powf(1.0 / p) * weighted;
            if plain > 0.0 {
                holder_worst = holder_worst.max(plain / bound);
            }
        }
    }
    out.number("holder_max_ratio", holder_worst);
    out.verdict("holder", holder_worst <= 1.0 + 1e-10, || format!("Hölder step ratio {holder_worst} exceeds 1"));
    Ok(out)
}

/// `‖f − P_R f‖_{L^p(w/w(R))}` against `[w]_{A_p}^{1/p} d^m ‖∇^m f‖_{L^p(w/w(R))}`.
pub(super) fn s3(ctx: &Ctx, setup: &Setup) -> Result<Measured> {
    let m = order(ctx)?;
    let p = ctx.get("p");
    let depth = ctx.int("depth")?;
    let pool = ctx.pool(setup, depth)?;
    let w = setup.require_weight()?;
    let ap = dyadic_muckenhoupt(&w, p, &setup.root, depth)?;
    let spec = gradient(m, p, Some(w.clone()));
    let mut out = Measured::default();
    out.number("weight_constant_ap", ap);
    for (name, f) in &setup.functions {
        for rect in &pool {
            let r = residual(f.values(), rect, Center::Poly(m - 1))?;
            let lhs = normalized_lq(&r, &cell_weights(Some(&w), rect, r.len())?, p);
            let structural = ap.powf(1.0 / p) * eval_functional(&spec, f, rect)?;
            out.push(lhs, structural, rect_label(name, rect));
        }
    }
    Ok(out)
}
