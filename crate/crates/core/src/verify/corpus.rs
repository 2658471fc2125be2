//! Default test functions, written in coordinates normalised to the domain.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{BinaryOp, Expr, UnaryOp};
use crate::grid::Domain;

/// A named test function.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusFunction {
    pub name: String,
    pub expr: Expr,
}

/// Number of seeded random trigonometric polynomials in the default corpus.
pub const RANDOM_TRIG_COUNT: usize = 2;

fn add(a: Expr, b: Expr) -> Expr {
    Expr::binary(BinaryOp::Add, a, b)
}

fn mul(a: Expr, b: Expr) -> Expr {
    Expr::binary(BinaryOp::Mul, a, b)
}

fn c(v: f64) -> Expr {
    Expr::constant(v)
}

/// `(x_i − lower_i)/side_i`, so that every axis runs over `[0,1]`.
fn unit_coordinate(domain: &Domain, axis: usize) -> Expr {
    let shifted = Expr::binary(BinaryOp::Sub, Expr::var(axis), c(domain.lower()[axis]));
    Expr::binary(BinaryOp::Div, shifted, c(domain.side(axis)))
}

fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
    terms.into_iter().reduce(add).unwrap_or_else(|| c(0.0))
}

/// Affine, quadratic, sine, Gaussian bump, tensor product (n ≥ 2) and `random`
/// seeded trigonometric polynomials.
pub fn default_corpus(domain: &Domain, seed: u64, random: usize) -> Vec<CorpusFunction> {
    let n = domain.dim();
    let t: Vec<Expr> = (0..n).map(|i| unit_coordinate(domain, i)).collect();
    let mut out = Vec::new();
    let mut push = |name: &str, expr: Expr| out.push(CorpusFunction { name: name.to_string(), expr });

    let slopes = [1.0, 0.5, -0.25, 0.125];
    push("affine", sum(t.iter().zip(slopes).map(|(ti, s)| mul(c(s), ti.clone()))));
    push(
        "quadratic",
        sum(t.iter().enumerate().map(|(i, ti)| {
            mul(c(1.0 / (i + 1) as f64), Expr::binary(BinaryOp::Pow, ti.clone(), c(2.0)))
        })),
    );
    push("sine", Expr::unary(UnaryOp::Sin, mul(c(PI), t[0].clone())));
    let centre = [0.6, 0.4, 0.55, 0.45];
    let radius2 = sum(t.iter().zip(centre).map(|(ti, m)| {
        Expr::binary(BinaryOp::Pow, Expr::binary(BinaryOp::Sub, ti.clone(), c(m)), c(2.0))
    }));
    push("bump", Expr::unary(UnaryOp::Exp, mul(c(-8.0), radius2)));
    if n >= 2 {
        let factors = t.iter().enumerate().map(|(i, ti)| {
            let op = if i % 2 == 0 { UnaryOp::Sin } else { UnaryOp::Cos };
            Expr::unary(op, mul(c(PI), ti.clone()))
        });
        push("tensor", factors.reduce(mul).expect("n ≥ 2"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..random {
        let terms = (0..3).map(|_| {
            let amplitude: f64 = rng.gen_range(-1.0..1.0);
            let phase: f64 = rng.gen_range(0.0..2.0 * PI);
            let mut frequencies: Vec<i32> = (0..n).map(|_| rng.gen_range(0..=2)).collect();
            if frequencies.iter().all(|&f| f == 0) {
                frequencies[0] = 1;
            }
            let argument = sum(
                t.iter()
                    .zip(&frequencies)
                    .filter(|(_, &f)| f != 0)
                    .map(|(ti, &f)| mul(c(PI * f as f64), ti.clone())),
            );
            mul(c(amplitude), Expr::unary(UnaryOp::Sin, add(argument, c(phase))))
        });
        push(&format!("trig-{}", k + 1), sum(terms));
    }
    out
}
