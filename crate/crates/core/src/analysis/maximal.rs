use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{parent_linear, Aggregate, GridFunction, Pyramid, Rect};

use super::poly::{least_squares_residual, rect_widths, ProjectionBasis};

/// Dyadic maximal function `M^d_R g(x) = max_{x ∈ J ⊆ R, J dyadic} avg_J |g|`.
///
/// Cells outside `rect` get 0. The dyadic tree stops at the deepest cell-aligned level.
pub fn dyadic_maximal(g: &GridFunction, rect: &Rect) -> Result<GridFunction> {
    let grid = *g.grid();
    let abs = g.map(f64::abs);
    let pyramid = Pyramid::build(&abs, rect, u32::MAX, Aggregate::Sum)?;
    let depth = pyramid.depth();
    let mut out = vec![0.0; grid.cell_count()];
    // Running maximum of node averages along each root-to-leaf path.
    let mut best = vec![pyramid.average(0, 0)];
    for level in 1..=depth {
        let count = pyramid.level(level).len();
        let n = rect.dim();
        let mut next = vec![0.0; count];
        for (node, slot) in next.iter_mut().enumerate() {
            let parent = parent_linear(node, level, n);
            *slot = best[parent].max(pyramid.average(level, node));
        }
        best = next;
    }
    for (leaf, &value) in best.iter().enumerate() {
        for cell in pyramid.node_cells(&grid, depth, leaf).cells(&grid) {
            out[cell] = value;
        }
    }
    GridFunction::from_values(grid, out)
}

/// All dyadic descendants of `root` down to `depth` levels (including the root).
pub fn dyadic_pool(root: &Rect, depth: u32) -> Vec<Rect> {
    root.subtree(depth)
}

/// `avg_R |f − P_R f|` with `P_R` the projection onto polynomials of degree at most `m`.
///
/// Rectangles with too few cells to separate all monomials use the minimum-norm
/// least-squares fit, whose residual is the distance to the polynomial space.
pub fn mean_residual(f: &GridFunction, rect: &Rect, m: usize, cache: Option<&ProjectionBasis>) -> Result<f64> {
    let values = f.restrict(rect)?;
    let residual = if m == 0 {
        let mean = crate::sum::sum(values.iter().copied()) / values.len() as f64;
        values.iter().map(|v| v - mean).collect()
    } else {
        match cache {
            Some(basis) => basis.residual(&values),
            None => least_squares_residual(&rect_widths(f, rect)?, m, &values)?,
        }
    };
    Ok(crate::sum::sum(residual.iter().map(|r| r.abs())) / residual.len() as f64)
}

/// Sharp maximal function `M^♯_m f(x) = max_{x ∈ R ∈ pool} avg_R |f − P_R f|` on the cells of `region`.
///
/// Cells outside `region` get 0; a cell of `region` covered by no pool member is an error.
pub fn sharp_maximal(f: &GridFunction, m: usize, region: &Rect, pool: &[Rect]) -> Result<GridFunction> {
    let grid = *f.grid();
    let mut layouts: HashMap<Vec<usize>, ProjectionBasis> = HashMap::new();
    for rect in pool {
        let widths = rect_widths(f, rect)?;
        if m > 0 && !layouts.contains_key(&widths) {
            if let Ok(basis) = ProjectionBasis::new(&widths, m) {
                layouts.insert(widths, basis);
            }
        }
    }
    let oscillations: Vec<f64> = pool
        .par_iter()
        .map(|rect| {
            let widths = rect_widths(f, rect)?;
            mean_residual(f, rect, m, layouts.get(&widths))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![f64::NEG_INFINITY; grid.cell_count()];
    for (rect, &osc) in pool.iter().zip(&oscillations) {
        for cell in grid.cell_box(rect)?.cells(&grid) {
            if osc > out[cell] {
                out[cell] = osc;
            }
        }
    }
    let region_box = grid.cell_box(region)?;
    for cell in region_box.cells(&grid) {
        if out[cell] == f64::NEG_INFINITY {
            let idx = grid.unravel(cell);
            return Err(Error::InvalidFamily(format!(
                "no pool rectangle contains cell {:?}",
                &idx[..grid.dim()]
            )));
        }
    }
    for (cell, value) in out.iter_mut().enumerate() {
        if !region_box.contains(&grid.unravel(cell)[..grid.dim()]) {
            *value = 0.0;
        }
    }
    GridFunction::from_values(grid, out)
}
