//! Weights and estimators of their Muckenhoupt-type constants.
//!
//! Every estimator takes a supremum over a finite pool of rectangles: all dyadic
//! subrectangles of the domain down to a given depth, optionally enlarged by random
//! grid-aligned rectangles. The results are therefore lower bounds of the true
//! constants, and they are exact statements about the pool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{integrate, Aggregate, Basis, CellBox, Grid, GridFunction, Pyramid, Rect, MAX_DIM};
use crate::report::CheckReport;
use crate::sum::CompensatedSum;

/// A strictly positive grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    density: GridFunction,
    total: f64,
}

impl Weight {
    pub fn new(density: GridFunction) -> Result<Self> {
        let grid = *density.grid();
        for (cell, &v) in density.values().iter().enumerate() {
            if !(v > 0.0 && v.is_finite()) {
                let idx = grid.unravel(cell);
                return Err(Error::NonPositiveWeight { cell: idx[..grid.dim()].to_vec(), value: v });
            }
        }
        let total = integrate(&density, &Rect::root(*grid.domain()), None)?;
        Ok(Self { density, total })
    }

    pub fn constant(grid: Grid, value: f64) -> Result<Self> {
        Self::new(GridFunction::constant(grid, value))
    }

    pub fn density(&self) -> &GridFunction {
        &self.density
    }

    pub fn values(&self) -> &[f64] {
        self.density.values()
    }

    pub fn grid(&self) -> &Grid {
        self.density.grid()
    }

    /// `w(root)`.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// `w(R)`.
    pub fn measure(&self, rect: &Rect) -> Result<f64> {
        integrate(&self.density, rect, None)
    }

    pub fn is_constant(&self) -> bool {
        let v = self.values();
        v.iter().all(|&x| x == v[0])
    }

    /// `c·w`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.density.map(|v| v * factor))
    }
}

/// Resolves a weight specification: a catalog id or an expression in `x1..xn`.
///
/// Catalog ids: `constant`, `power:<a>` (`|x|^a` with the Euclidean norm),
/// `axis-power:<a>` (`|x1|^a`), `product-power:<a>` (`∏|x_i|^a`).
pub fn weight_expression(spec: &str, dim: usize) -> Result<Expr> {
    let spec = spec.trim();
    let text = if spec == "constant" {
        "1".to_string()
    } else if let Some(a) = spec.strip_prefix("power:") {
        let a = parse_exponent(a, spec)?;
        let squares: Vec<String> = (1..=dim).map(|i| format!("x{i}^2")).collect();
        format!("({})^({})", squares.join(" + "), a / 2.0)
    } else if let Some(a) = spec.strip_prefix("axis-power:") {
        format!("|x1|^({})", parse_exponent(a, spec)?)
    } else if let Some(a) = spec.strip_prefix("product-power:") {
        let a = parse_exponent(a, spec)?;
        let factors: Vec<String> = (1..=dim).map(|i| format!("|x{i}|^({a})")).collect();
        factors.join("*")
    } else {
        spec.to_string()
    };
    Expr::parse(&text, dim)
}

fn parse_exponent(text: &str, spec: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("bad exponent in weight `{spec}`")))
}

/// Builds a weight from a catalog id or expression, rejecting nonpositive samples.
pub fn make_weight(spec: &str, grid: Grid) -> Result<Weight> {
    let expr = weight_expression(spec, grid.dim())?;
    Weight::new(expr.sample(grid))
}

/// Constants estimated on one rectangle pool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    /// `(p, [w]_{A_p})` pairs.
    pub ap: Vec<(f64, f64)>,
    pub ainf: f64,
    pub depth: u32,
    pub rectangles_scanned: usize,
}

/// Estimates all requested constants over the pool of `depth` dyadic levels.
pub fn weight_report(w: &Weight, ps: &[f64], depth: u32, shifts: usize, seed: u64) -> Result<WeightReport> {
    let basis = w.grid().domain().basis();
    let mut ap = Vec::new();
    for &p in ps {
        ap.push((p, muckenhoupt_constant(w, p, basis, depth, 0, seed)?));
    }
    let ainf = fujii_wilson_constant(w, basis, depth, shifts, seed)?;
    let root = Rect::root(*w.grid().domain());
    let depth = depth.min(w.grid().alignment_depth());
    let rectangles_scanned = (0..=depth).map(|d| 1usize << (d as usize * root.dim())).sum();
    Ok(WeightReport { ap, ainf, depth, rectangles_scanned })
}

/// Per-rectangle Muckenhoupt ratio `avg(w)·avg(w^{-1/(p-1)})^{p-1}` (or `avg(w)/min w` at p=1).
pub fn muckenhoupt_ratio(w: &Weight, cells: &CellBox, p: f64) -> f64 {
    let grid = w.grid();
    let values = w.values();
    let count = cells.count() as f64;
    let mut sum_w = CompensatedSum::new();
    if p == 1.0 {
        let mut min = f64::INFINITY;
        for c in cells.cells(grid) {
            sum_w.add(values[c]);
            min = min.min(values[c]);
        }
        sum_w.value() / count / min
    } else {
        let dual = -1.0 / (p - 1.0);
        let mut sum_dual = CompensatedSum::new();
        for c in cells.cells(grid) {
            sum_w.add(values[c]);
            sum_dual.add(values[c].powf(dual));
        }
        (sum_w.value() / count) * (sum_dual.value() / count).powf(p - 1.0)
    }
}

/// Largest per-node Muckenhoupt ratio of the dyadic subrectangles of `root` down to `depth`.
pub fn dyadic_muckenhoupt(w: &Weight, p: f64, root: &Rect, depth: u32) -> Result<f64> {
    let sums = Pyramid::build(w.density(), root, depth, Aggregate::Sum)?;
    let partner = if p == 1.0 {
        Pyramid::build(w.density(), root, depth, Aggregate::Min)?
    } else {
        let dual = -1.0 / (p - 1.0);
        Pyramid::build(&w.density().map(|v| v.powf(dual)), root, depth, Aggregate::Sum)?
    };
    let mut best: f64 = 0.0;
    for level in 0..=sums.depth() {
        for node in 0..sums.level(level).len() {
            let avg = sums.average(level, node);
            let value = if p == 1.0 {
                avg / partner.level(level)[node]
            } else {
                avg * partner.average(level, node).powf(p - 1.0)
            };
            best = best.max(value);
        }
    }
    Ok(best)
}

/// Random grid-aligned rectangles of the requested basis; deterministic in `seed`.
pub fn random_cell_boxes(grid: &Grid, basis: Basis, count: usize, seed: u64) -> Vec<CellBox> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.dim();
    let domain = grid.domain();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut lo = [0usize; MAX_DIM];
        let mut hi = [0usize; MAX_DIM];
        match basis {
            Basis::Rectangles => {
                for axis in 0..n {
                    let res = grid.resolution()[axis];
                    let width = rng.gen_range(1..=res);
                    lo[axis] = rng.gen_range(0..=res - width);
                    hi[axis] = lo[axis] + width;
                }
            }
            Basis::CubeProducts => {
                for block in 0..domain.blocks().len() {
                    let axes = domain.block_axes(block);
                    let res = grid.resolution()[axes.start];
                    let width = rng.gen_range(1..=res);
                    for axis in axes {
                        lo[axis] = rng.gen_range(0..=res - width);
                        hi[axis] = lo[axis] + width;
                    }
                }
            }
        }
        out.push(CellBox { dim: n, lo, hi });
    }
    out
}

/// `[w]_{A_p}` estimated over all dyadic subrectangles to `depth` plus `extra_rects` random rectangles.
pub fn muckenhoupt_constant(
    w: &Weight,
    p: f64,
    basis: Basis,
    depth: u32,
    extra_rects: usize,
    seed: u64,
) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("A_p needs p >= 1, got {p}")));
    }
    check_basis(w.grid(), basis)?;
    let root = Rect::root(*w.grid().domain());
    let mut best = dyadic_muckenhoupt(w, p, &root, depth)?;
    let extras = random_cell_boxes(w.grid(), basis, extra_rects, seed);
    let extra_best = extras
        .par_iter()
        .map(|cells| muckenhoupt_ratio(w, cells, p))
        .reduce(|| 0.0, f64::max);
    best = best.max(extra_best);
    Ok(best)
}

fn check_basis(grid: &Grid, basis: Basis) -> Result<()> {
    if basis == Basis::CubeProducts && grid.domain().basis() != Basis::CubeProducts {
        return Err(Error::InvalidParameter(
            "cube-product basis requested on a domain without a block split".into(),
        ));
    }
    Ok(())
}

/// Offsets (as fractions of the rectangle side) of the shifted dyadic grids; shift 0 is unshifted.
fn shift_fractions(shifts: usize, dim: usize, seed: u64) -> Vec<[f64; MAX_DIM]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5348_4946_5453);
    let mut out = vec![[0.0; MAX_DIM]];
    for _ in 1..shifts.max(1) {
        let mut s = [0.0; MAX_DIM];
        for v in s.iter_mut().take(dim) {
            *v = rng.gen::<f64>();
        }
        out.push(s);
    }
    out
}

/// Pointwise maximum, over the shifted dyadic grids, of the averages of `g·χ_R` on cells of `R`.
///
/// Each shifted grid is the dyadic tree of a box twice the size of `R` that contains
/// `R` at an offset; averages over its nodes are averages of `g·χ_R` over genuine
/// rectangles, so the result is a pointwise lower bound of the strong maximal function.
pub fn shifted_dyadic_maximal(values: &[f64], widths: &[usize], offsets: &[[usize; MAX_DIM]]) -> Vec<f64> {
    let n = widths.len();
    let count: usize = widths.iter().product();
    let mut best = vec![0.0f64; count];
    for offset in offsets {
        let padded_width: Vec<usize> = widths.iter().map(|w| 2 * w).collect();
        let levels = padded_width.iter().map(|w| w.trailing_zeros()).min().unwrap_or(0);
        // Sums over the padded box at the finest dyadic level, then coarser levels.
        let mut leaf_width = [1usize; MAX_DIM];
        for axis in 0..n {
            leaf_width[axis] = padded_width[axis] >> levels;
        }
        let per_axis = 1usize << levels;
        let node_count = per_axis.pow(n as u32);
        let mut sums = vec![0.0f64; node_count];
        let mut cell_node = vec![0usize; count];
        let mut idx = [0usize; MAX_DIM];
        for (lin, &v) in values.iter().enumerate() {
            let mut rest = lin;
            for axis in (0..n).rev() {
                idx[axis] = rest % widths[axis];
                rest /= widths[axis];
            }
            let mut node = 0;
            for axis in 0..n {
                node = node * per_axis + (idx[axis] + offset[axis]) / leaf_width[axis];
            }
            sums[node] += v;
            cell_node[lin] = node;
        }
        let leaf_cells: usize = leaf_width[..n].iter().product();
        let mut level_sums = vec![sums];
        for level in (0..levels).rev() {
            let finer = level_sums.last().expect("nonempty");
            let count_here = 1usize << (level as usize * n);
            let mut coarse = vec![0.0; count_here];
            for (node, slot) in coarse.iter_mut().enumerate() {
                for child in 0..1usize << n {
                    *slot += finer[crate::grid::child_linear(node, child, level, n)];
                }
            }
            level_sums.push(coarse);
        }
        level_sums.reverse();
        for (lin, &leaf) in cell_node.iter().enumerate() {
            let mut node = leaf;
            let mut m: f64 = 0.0;
            for level in (0..=levels).rev() {
                let cells_in_node = (leaf_cells << ((levels - level) as usize * n)) as f64;
                m = m.max(level_sums[level as usize][node] / cells_in_node);
                if level > 0 {
                    node = crate::grid::parent_linear(node, level, n);
                }
            }
            best[lin] = best[lin].max(m);
        }
    }
    best
}

/// Fujii–Wilson ratio `(1/w(R))∫_R M(wχ_R)` of one rectangle, `M` approximated by shifted dyadic grids.
pub fn fujii_wilson_ratio(w: &Weight, cells: &CellBox, shifts: usize, seed: u64) -> f64 {
    let grid = w.grid();
    let n = grid.dim();
    let values: Vec<f64> = cells.cells(grid).map(|c| w.values()[c]).collect();
    let widths: Vec<usize> = (0..n).map(|a| cells.width(a)).collect();
    let offsets: Vec<[usize; MAX_DIM]> = shift_fractions(shifts, n, seed)
        .iter()
        .map(|frac| {
            let mut o = [0usize; MAX_DIM];
            for axis in 0..n {
                o[axis] = ((frac[axis] * widths[axis] as f64) as usize).min(widths[axis] - 1);
            }
            o
        })
        .collect();
    let maximal = shifted_dyadic_maximal(&values, &widths, &offsets);
    let num: CompensatedSum = maximal.iter().copied().collect();
    let den: CompensatedSum = values.iter().copied().collect();
    num.value() / den.value()
}

/// `[w]_{A_∞}` (Fujii–Wilson) estimated over the dyadic subrectangles of the domain to `depth`.
pub fn fujii_wilson_constant(w: &Weight, basis: Basis, depth: u32, shifts: usize, seed: u64) -> Result<f64> {
    check_basis(w.grid(), basis)?;
    let grid = w.grid();
    let root = Rect::root(*grid.domain());
    let depth = depth.min(grid.alignment_depth());
    let pool: Vec<CellBox> = root
        .subtree(depth)
        .iter()
        .map(|r| grid.cell_box(r))
        .collect::<Result<_>>()?;
    Ok(pool
        .par_iter()
        .map(|cells| fujii_wilson_ratio(w, cells, shifts, seed))
        .reduce(|| 0.0, f64::max))
}

/// `w_r(R) = |R|·(avg_R w^r)^{1/r}`.
pub fn lebesgue_r_average(w: &Weight, r: f64, rect: &Rect) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::InvalidParameter(format!("r must exceed 1, got {r}")));
    }
    let grid = w.grid();
    let cells = grid.cell_box(rect)?;
    let powered: CompensatedSum = cells.cells(grid).map(|c| w.values()[c].powf(r)).collect();
    let avg = powered.value() / cells.count() as f64;
    Ok(rect.measure() * avg.powf(1.0 / r))
}

/// Largest admissible reverse Hölder exponent `1/(2^{n+1}·[w]_{A_∞} − 1)`.
pub fn reverse_holder_exponent(dim: usize, ainf: f64) -> f64 {
    1.0 / (2f64.powi(dim as i32 + 1) * ainf - 1.0)
}

/// Checks `avg_R w^{1+ε} ≤ 2·(avg_R w)^{1+ε}` at the admissible `ε`.
pub fn reverse_holder_check(w: &Weight, rect: &Rect, ainf: f64) -> Result<CheckReport> {
    if !(ainf >= 1.0) {
        return Err(Error::InvalidParameter(format!("[w]_A∞ must be at least 1, got {ainf}")));
    }
    let eps = reverse_holder_exponent(w.grid().dim(), ainf);
    let grid = w.grid();
    let cells = grid.cell_box(rect)?;
    let count = cells.count() as f64;
    let mut plain = CompensatedSum::new();
    let mut powered = CompensatedSum::new();
    for c in cells.cells(grid) {
        let v = w.values()[c];
        plain.add(v);
        powered.add(v.powf(1.0 + eps));
    }
    let lhs = powered.value() / count;
    let rhs = 2.0 * (plain.value() / count).powf(1.0 + eps);
    let report = CheckReport::explicit("W1", lhs, rhs, 0.0, 0)
        .with_param("epsilon", eps)
        .with_param("ainf", ainf)
        .with_param("level", rect.level())
        .with_param("index", rect.index().to_vec());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, Domain};

    #[test]
    fn parent_of_child_is_identity() {
        for n in 1..=3 {
            for level in 1..4u32 {
                for node in 0..(1usize << ((level - 1) as usize * n)) {
                    for child in 0..(1usize << n) {
                        let c = crate::grid::child_linear(node, child, level - 1, n);
                        assert_eq!(crate::grid::parent_linear(c, level, n), node);
                    }
                }
            }
        }
    }

    #[test]
    fn nonpositive_weight_names_cell() {
        let grid = build_grid(Domain::unit(1).unwrap(), &[8]).unwrap();
        let err = make_weight("-1", grid).unwrap_err();
        assert!(matches!(err, Error::NonPositiveWeight { ref cell, .. } if cell == &vec![0]));
    }
}
