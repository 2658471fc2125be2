//! Double sums `Σ_x Σ_y |f(x)−f(y)|^p / |x−y|^{d+δp}` over cell pairs of a rectangle.
//!
//! The pairs either range over all of `R × R` or over pairs that differ only in the
//! coordinates of one block. Base points are processed in fixed chunks whose
//! compensated partial sums are merged in chunk order, so results do not depend on
//! the number of worker threads.

use std::collections::HashMap;
use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Rect, MAX_DIM};
use crate::sum::CompensatedSum;
use crate::weights::Weight;

use super::derivative::central_difference;
use super::lattice::LatticeModel;

/// Default cap on the number of cell pairs per kernel sum.
pub const DEFAULT_PAIR_BUDGET: u64 = 30_000_000;

const CHUNK: usize = 128;

/// Which pairs enter the sum and how the result is normalised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelMode {
    /// `ℓ(R)^δ (⨍_R ∫_R … w(x) dy dx)^{1/p}` with `ℓ` the longest side.
    Seminorm,
    /// `d(R)^δ ((1/w(R)) ∫_R A(R,x) w(x) dx)^{1/p}` with `A(R,x) = ∫_R |f(x)−f(y)|^p/|x−y|^{n+δp} dy`.
    AOfX,
    /// Pairs differing only in block `b` of a two-block domain; `ℓ_b^δ` prefactor.
    Biparam(usize),
    /// Pairs differing only in block `i` of an m-block domain; `ℓ_i^δ` prefactor.
    Multifold(usize),
}

/// Flags for the assembled value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelOptions {
    /// Divide by `e(R)^{n/p}` (A(R,x) mode only).
    pub eccentricity_factor: bool,
    /// Add the lattice finite-part term for the excluded diagonal.
    pub diagonal_correction: bool,
    pub pair_budget: u64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self { eccentricity_factor: false, diagonal_correction: true, pair_budget: DEFAULT_PAIR_BUDGET }
    }
}

/// Geometry of the pair set: the rectangle's cells and the axes along which `y` moves.
struct PairLayout {
    widths: [usize; MAX_DIM],
    dim: usize,
    moving: Range<usize>,
    local_strides: [usize; MAX_DIM],
    kernel_strides: [usize; MAX_DIM],
    kernel: Vec<f64>,
}

impl PairLayout {
    fn new(f: &GridFunction, rect: &Rect, moving: Range<usize>, delta: f64, p: f64) -> Result<Self> {
        let grid = f.grid();
        let cells = grid.cell_box(rect)?;
        let dim = grid.dim();
        let mut widths = [1usize; MAX_DIM];
        for (axis, w) in widths.iter_mut().enumerate().take(dim) {
            *w = cells.width(axis);
        }
        let mut local_strides = [0usize; MAX_DIM];
        let mut stride = 1;
        for axis in (0..dim).rev() {
            local_strides[axis] = stride;
            stride *= widths[axis];
        }
        // Kernel table over offsets of the moving axes, including the y-cell volume.
        let d = moving.len();
        let exponent = -(d as f64) - delta * p;
        let mut kernel_strides = [0usize; MAX_DIM];
        let mut size = 1;
        for axis in moving.clone().rev() {
            kernel_strides[axis] = size;
            size *= 2 * widths[axis] - 1;
        }
        let volume: f64 = moving.clone().map(|a| grid.step(a)).product();
        let mut kernel = vec![0.0; size];
        for (slot, value) in kernel.iter_mut().enumerate() {
            let mut r2 = 0.0;
            for axis in moving.clone() {
                let offset = (slot / kernel_strides[axis]) % (2 * widths[axis] - 1);
                let delta_cells = offset as f64 - (widths[axis] - 1) as f64;
                r2 += (delta_cells * grid.step(axis)).powi(2);
            }
            *value = if r2 > 0.0 { r2.sqrt().powf(exponent) * volume } else { 0.0 };
        }
        Ok(Self { widths, dim, moving, local_strides, kernel_strides, kernel })
    }

    fn cell_count(&self) -> usize {
        self.widths[..self.dim].iter().product()
    }

    fn partners(&self) -> usize {
        self.moving.clone().map(|a| self.widths[a]).product()
    }

    /// Inner sum `Σ_y |v_x − v_y|^p K(x−y)` for the base cell with local linear index `base`.
    fn inner(&self, values: &[f64], base: usize, p: f64) -> f64 {
        let mut idx = [0usize; MAX_DIM];
        let mut rest = base;
        for axis in (0..self.dim).rev() {
            idx[axis] = rest % self.widths[axis];
            rest /= self.widths[axis];
        }
        let vx = values[base];
        let last = self.moving.end - 1;
        let outer = self.moving.start..last;
        let mut counter = [0usize; MAX_DIM];
        let mut acc = CompensatedSum::new();
        loop {
            // Local linear index and kernel index of y with the outer moving axes fixed.
            let mut y_base = base;
            let mut k_base = 0usize;
            for axis in outer.clone() {
                y_base = y_base + counter[axis] * self.local_strides[axis] - idx[axis] * self.local_strides[axis];
                k_base += (counter[axis] + self.widths[axis] - 1 - idx[axis]) * self.kernel_strides[axis];
            }
            let y0 = y_base - idx[last] * self.local_strides[last];
            let k0 = k_base + (self.widths[last] - 1 - idx[last]) * self.kernel_strides[last];
            let stride = self.local_strides[last];
            let kstride = self.kernel_strides[last];
            let mut row = 0.0;
            for j in 0..self.widths[last] {
                let diff = (vx - values[y0 + j * stride]).abs();
                let powered = if p == 1.0 {
                    diff
                } else if p == 2.0 {
                    diff * diff
                } else {
                    diff.powf(p)
                };
                row += powered * self.kernel[k0 + j * kstride];
            }
            acc.add(row);
            let mut axis = last;
            loop {
                if axis == self.moving.start {
                    return acc.value();
                }
                axis -= 1;
                counter[axis] += 1;
                if counter[axis] < self.widths[axis] {
                    break;
                }
                counter[axis] = 0;
            }
        }
    }
}

/// Per-cell kernel inner sums over `rect` (row-major local order), diagonal-corrected on request.
///
/// `moving` lists the axes along which partners move; other coordinates are shared
/// with the base cell.
pub fn inner_sums(
    f: &GridFunction,
    rect: &Rect,
    moving: Range<usize>,
    delta: f64,
    p: f64,
    options: &KernelOptions,
) -> Result<Vec<f64>> {
    validate(delta, p)?;
    let layout = PairLayout::new(f, rect, moving.clone(), delta, p)?;
    let pairs = layout.cell_count() as u64 * layout.partners() as u64;
    if pairs > options.pair_budget {
        return Err(budget_error(f, pairs, options.pair_budget, moving.len()));
    }
    let values = f.restrict(rect)?;
    let corrections = if options.diagonal_correction {
        Some(diagonal_corrections(f, rect, moving, delta, p)?)
    } else {
        None
    };
    let count = layout.cell_count();
    let sums: Vec<f64> = (0..count)
        .into_par_iter()
        .with_min_len(CHUNK)
        .map(|base| {
            let raw = layout.inner(&values, base, p);
            match &corrections {
                Some(c) => (raw + c[base]).max(0.0),
                None => raw,
            }
        })
        .collect();
    Ok(sums)
}

fn validate(delta: f64, p: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("δ must lie in (0,1), got {delta}")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be at least 1, got {p}")));
    }
    Ok(())
}

fn budget_error(f: &GridFunction, pairs: u64, budget: u64, moving: usize) -> Error {
    // Pairs scale like N^{n + moving} under uniform refinement.
    let exponent = (f.grid().dim() + moving) as u32;
    let mut resolution = *f.grid().resolution().iter().max().unwrap_or(&2);
    let mut estimate = pairs;
    while estimate > budget && resolution > 2 {
        resolution /= 2;
        estimate >>= exponent;
    }
    Error::PairBudget { pairs, budget, suggested: resolution }
}

/// `−h^s |∇_B f(x)|^p Z` per base cell, the finite-part estimate of the excluded diagonal.
fn diagonal_corrections(f: &GridFunction, rect: &Rect, moving: Range<usize>, delta: f64, p: f64) -> Result<Vec<f64>> {
    let grid = f.grid();
    let reference = moving.clone().map(|a| grid.step(a)).fold(0.0f64, f64::max);
    let relative: Vec<f64> = moving.clone().map(|a| grid.step(a) / reference).collect();
    let model = LatticeModel::new(p, delta, &relative);
    let s = p * (1.0 - delta);
    let scale = reference.powf(s);
    let gradients: Vec<Vec<f64>> = moving.clone().map(|a| central_difference(grid, f.values(), a)).collect();
    let cells: Vec<usize> = grid.cell_box(rect)?.cells(grid).collect();
    let mut directions: Vec<(f64, Vec<i32>)> = Vec::with_capacity(cells.len());
    for &cell in &cells {
        let g: Vec<f64> = gradients.iter().map(|component| component[cell]).collect();
        let norm = g.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            directions.push((norm, model.snap(&g)));
        } else {
            directions.push((0.0, Vec::new()));
        }
    }
    let mut table: HashMap<Vec<i32>, f64> = HashMap::new();
    for (norm, key) in &directions {
        if *norm > 0.0 && !table.contains_key(key) {
            table.insert(key.clone(), f64::NAN);
        }
    }
    let keys: Vec<Vec<i32>> = table.keys().cloned().collect();
    let values: Vec<f64> = keys.par_iter().map(|k| model.value(k)).collect();
    for (k, v) in keys.into_iter().zip(values) {
        table.insert(k, v);
    }
    Ok(directions
        .iter()
        .map(|(norm, key)| if *norm > 0.0 { -scale * norm.powf(p) * table[key] } else { 0.0 })
        .collect())
}

/// `Σ_x ω(x) · inner(x) · |cell|` with `ω` the weight (or 1).
fn weighted_total(f: &GridFunction, rect: &Rect, inner: &[f64], w: Option<&Weight>) -> Result<f64> {
    let volume = f.grid().cell_volume();
    let weights = match w {
        Some(w) => w.density().restrict(rect)?,
        None => vec![1.0; inner.len()],
    };
    let mut acc = CompensatedSum::new();
    for chunk in inner.chunks(CHUNK).zip(weights.chunks(CHUNK)) {
        let mut part = CompensatedSum::new();
        for (a, b) in chunk.0.iter().zip(chunk.1) {
            part.add(a * b);
        }
        acc.merge(&part);
    }
    Ok(acc.value() * volume)
}

/// Axes along which partners move for `mode`.
pub fn moving_axes(f: &GridFunction, mode: KernelMode) -> Result<Range<usize>> {
    let domain = f.grid().domain();
    match mode {
        KernelMode::Seminorm | KernelMode::AOfX => Ok(0..f.grid().dim()),
        KernelMode::Biparam(b) | KernelMode::Multifold(b) => {
            let blocks = domain.blocks().len();
            if matches!(mode, KernelMode::Biparam(_)) && blocks != 2 {
                return Err(Error::InvalidParameter(format!(
                    "biparameter sums need a two-block domain, this one has {blocks} block(s)"
                )));
            }
            if b >= blocks {
                return Err(Error::InvalidParameter(format!("block {} out of range (domain has {blocks})", b + 1)));
            }
            Ok(domain.block_axes(b))
        }
    }
}

/// Assembled fractional functional of `f` on `rect` for the given mode.
pub fn fractional_kernel_sum(
    f: &GridFunction,
    rect: &Rect,
    delta: f64,
    p: f64,
    w: Option<&Weight>,
    mode: KernelMode,
    options: &KernelOptions,
) -> Result<f64> {
    let moving = moving_axes(f, mode)?;
    let inner = inner_sums(f, rect, moving.clone(), delta, p, options)?;
    let total = weighted_total(f, rect, &inner, w)?;
    let n = rect.dim() as f64;
    let value = match mode {
        KernelMode::Seminorm => {
            let side = (0..rect.dim()).map(|a| rect.side(a)).fold(0.0f64, f64::max);
            side.powf(delta) * (total / rect.measure()).powf(1.0 / p)
        }
        KernelMode::AOfX => {
            let normaliser = match w {
                Some(w) => w.measure(rect)?,
                None => rect.measure(),
            };
            let mut v = rect.diameter().powf(delta) * (total / normaliser).powf(1.0 / p);
            if options.eccentricity_factor {
                v /= rect.eccentricity().powf(n / p);
            }
            v
        }
        KernelMode::Biparam(_) | KernelMode::Multifold(_) => {
            let normaliser = match w {
                Some(w) => w.measure(rect)?,
                None => rect.measure(),
            };
            let side = rect.side(moving.start);
            side.powf(delta) * (total / normaliser).powf(1.0 / p)
        }
    };
    Ok(value)
}

/// `A(R,x)` at every cell of `rect` (row-major local order).
pub fn a_of_x(f: &GridFunction, rect: &Rect, delta: f64, p: f64, options: &KernelOptions) -> Result<Vec<f64>> {
    inner_sums(f, rect, 0..f.grid().dim(), delta, p, options)
}
