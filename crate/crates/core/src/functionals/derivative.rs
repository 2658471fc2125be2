//! Pointwise norms of higher-order derivative tensors.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{Grid, GridFunction};

/// Highest supported derivative order.
pub const MAX_ORDER: usize = 3;

/// Which coordinates a gradient differentiates along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axes {
    All,
    /// Axes of one block of a cube-product domain (0-based block index).
    Block(usize),
}

impl Axes {
    pub fn resolve(&self, grid: &Grid) -> Result<std::ops::Range<usize>> {
        match *self {
            Axes::All => Ok(0..grid.dim()),
            Axes::Block(b) => {
                let blocks = grid.domain().blocks();
                if b >= blocks.len() {
                    return Err(Error::InvalidParameter(format!(
                        "block {} requested but the domain has {} block(s)",
                        b + 1,
                        blocks.len()
                    )));
                }
                Ok(grid.domain().block_axes(b))
            }
        }
    }
}

/// How derivatives are obtained.
#[derive(Clone, Copy, Debug)]
pub enum Differentiation<'a> {
    /// Exact derivatives of an expression by tree rewriting.
    Symbolic(&'a Expr),
    /// Central differences of samples, one-sided at the grid boundary (lower accuracy).
    FiniteDifference(&'a GridFunction),
}

/// A derivative-norm field and whether it is exact at the cell centres.
#[derive(Clone, Debug)]
pub struct DerivativeField {
    pub values: GridFunction,
    pub exact: bool,
}

/// `|∇^m f|`: Euclidean norm of the tensor of all ordered order-`m` partials along `axes`.
pub fn derivative_field(source: Differentiation<'_>, grid: Grid, axes: Axes, order: usize) -> Result<DerivativeField> {
    if order > MAX_ORDER {
        return Err(Error::Unsupported(format!(
            "derivative order {order} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    let axis_range = axes.resolve(&grid)?;
    match source {
        Differentiation::Symbolic(expr) => {
            let mut partials = vec![expr.clone()];
            for _ in 0..order {
                let mut next = Vec::with_capacity(partials.len() * axis_range.len());
                for e in &partials {
                    for axis in axis_range.clone() {
                        next.push(e.derivative(axis)?);
                    }
                }
                partials = next;
            }
            let partials: Vec<Expr> = partials.into_iter().filter(|e| !is_zero(e)).collect();
            let values = GridFunction::from_fn(grid, |x| {
                partials.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt()
            });
            Ok(DerivativeField { values, exact: true })
        }
        Differentiation::FiniteDifference(samples) => {
            let mut partials = vec![samples.values().to_vec()];
            for _ in 0..order {
                let mut next = Vec::with_capacity(partials.len() * axis_range.len());
                for values in &partials {
                    for axis in axis_range.clone() {
                        next.push(central_difference(&grid, values, axis));
                    }
                }
                partials = next;
            }
            let count = grid.cell_count();
            let values = (0..count)
                .map(|c| partials.iter().map(|v| v[c] * v[c]).sum::<f64>().sqrt())
                .collect();
            Ok(DerivativeField { values: GridFunction::from_values(grid, values)?, exact: false })
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

/// First partial along `axis` by central differences (one-sided at the boundary).
pub fn central_difference(grid: &Grid, values: &[f64], axis: usize) -> Vec<f64> {
    let stride = grid.stride(axis);
    let res = grid.resolution()[axis];
    let h = grid.step(axis);
    (0..values.len())
        .map(|c| {
            let i = (c / stride) % res;
            if res == 1 {
                0.0
            } else if i == 0 {
                (values[c + stride] - values[c]) / h
            } else if i + 1 == res {
                (values[c] - values[c - stride]) / h
            } else {
                (values[c + stride] - values[c - stride]) / (2.0 * h)
            }
        })
        .collect()
}
