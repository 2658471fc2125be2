//! Boxes, uniform grids, dyadic rectangles and grid-sampled functions.
//!
//! A [`Domain`] is an axis-parallel box in at most four dimensions. Boxes
//! tagged as cube products carry a partition of the axes into blocks whose
//! sides agree, so that every dyadic descendant is again a product of cubes.
//! A [`Grid`] splits the box into `N_a` equal cells per axis, with every
//! `N_a` a power of two, and samples functions at cell centres.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Largest supported number of axes.
pub const MAX_DIM: usize = 4;

/// Which family of rectangles a domain and its descendants belong to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// Arbitrary axis-parallel rectangles.
    Rectangles,
    /// Products of cubes over a fixed partition of the axes.
    CubeProducts,
}

/// An axis-parallel box, optionally split into blocks of axes with equal sides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    dim: usize,
    lower: [f64; MAX_DIM],
    upper: [f64; MAX_DIM],
    block_sizes: [usize; MAX_DIM],
    block_count: usize,
}

impl Domain {
    /// A box of general rectangle type.
    pub fn new(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let dim = lower.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidDomain(format!(
                "dimension must be between 1 and {MAX_DIM}, got {dim}"
            )));
        }
        if upper.len() != dim {
            return Err(Error::InvalidDomain(format!(
                "{} lower bounds but {} upper bounds",
                dim,
                upper.len()
            )));
        }
        let mut lo = [0.0; MAX_DIM];
        let mut hi = [0.0; MAX_DIM];
        for axis in 0..dim {
            if !(lower[axis].is_finite() && upper[axis].is_finite()) {
                return Err(Error::InvalidDomain(format!("axis {axis} has a non-finite bound")));
            }
            if upper[axis] <= lower[axis] {
                return Err(Error::InvalidDomain(format!(
                    "axis {axis}: upper bound {} does not exceed lower bound {}",
                    upper[axis], lower[axis]
                )));
            }
            lo[axis] = lower[axis];
            hi[axis] = upper[axis];
        }
        Ok(Self { dim, lower: lo, upper: hi, block_sizes: [0; MAX_DIM], block_count: 0 })
    }

    /// A product of cubes: `blocks` lists consecutive block sizes summing to the dimension.
    pub fn cube_product(lower: &[f64], upper: &[f64], blocks: &[usize]) -> Result<Self> {
        let mut domain = Self::new(lower, upper)?;
        if blocks.len() < 2 || blocks.len() > domain.dim {
            return Err(Error::InvalidDomain(format!(
                "a cube product needs between 2 and {} blocks, got {}",
                domain.dim,
                blocks.len()
            )));
        }
        if blocks.iter().any(|&b| b == 0) || blocks.iter().sum::<usize>() != domain.dim {
            return Err(Error::InvalidDomain(format!(
                "block sizes {blocks:?} must be positive and sum to {}",
                domain.dim
            )));
        }
        let mut start = 0;
        for &size in blocks {
            let side = domain.side(start);
            for axis in start..start + size {
                let s = domain.side(axis);
                if (s - side).abs() > 1e-12 * side.abs().max(s.abs()) {
                    return Err(Error::InvalidDomain(format!(
                        "axes {}..{} form one block but have unequal sides ({side} and {s})",
                        start,
                        start + size
                    )));
                }
            }
            start += size;
        }
        domain.block_sizes[..blocks.len()].copy_from_slice(blocks);
        domain.block_count = blocks.len();
        Ok(domain)
    }

    /// The unit cube `[0,1]^n`.
    pub fn unit(dim: usize) -> Result<Self> {
        Self::new(&vec![0.0; dim], &vec![1.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.dim]
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn basis(&self) -> Basis {
        if self.block_count == 0 {
            Basis::Rectangles
        } else {
            Basis::CubeProducts
        }
    }

    /// Block sizes; empty for plain rectangles.
    pub fn blocks(&self) -> &[usize] {
        &self.block_sizes[..self.block_count]
    }

    /// Axes belonging to block `block` (zero based).
    pub fn block_axes(&self, block: usize) -> std::ops::Range<usize> {
        let start: usize = self.block_sizes[..block].iter().sum();
        start..start + self.block_sizes[block]
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|a| self.side(a)).product()
    }
}

/// Derived geometric quantities of a rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub sides: Vec<f64>,
    pub diameter: f64,
    pub measure: f64,
    pub eccentricity: f64,
    /// `ℓ₂^{n₂}/ℓ₁^{n₂}` for two-block cube products; absent otherwise.
    pub block_eccentricity: Option<f64>,
}

/// A dyadic descendant of a domain, addressed by level and per-axis index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    domain: Domain,
    level: u32,
    index: [u64; MAX_DIM],
}

/// Hashable address of a dyadic rectangle inside a fixed domain.
pub type RectKey = (u32, [u64; MAX_DIM]);

impl Rect {
    pub fn root(domain: Domain) -> Self {
        Self { domain, level: 0, index: [0; MAX_DIM] }
    }

    pub fn new(domain: Domain, level: u32, index: &[u64]) -> Result<Self> {
        if index.len() != domain.dim() {
            return Err(Error::InvalidParameter(format!(
                "index has {} entries for a {}-dimensional domain",
                index.len(),
                domain.dim()
            )));
        }
        if level >= 63 {
            return Err(Error::InvalidParameter(format!("level {level} too deep")));
        }
        let mut idx = [0; MAX_DIM];
        for (axis, &i) in index.iter().enumerate() {
            if i >= 1u64 << level {
                return Err(Error::InvalidParameter(format!(
                    "index {i} on axis {axis} out of range for level {level}"
                )));
            }
            idx[axis] = i;
        }
        Ok(Self { domain, level, index: idx })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> &[u64] {
        &self.index[..self.domain.dim]
    }

    pub fn basis(&self) -> Basis {
        self.domain.basis()
    }

    pub fn key(&self) -> RectKey {
        (self.level, self.index)
    }

    /// Side length along `axis`: the root side scaled by `2^{-level}`.
    pub fn side(&self, axis: usize) -> f64 {
        self.domain.side(axis) * scale_down(self.level)
    }

    pub fn lower(&self, axis: usize) -> f64 {
        self.domain.lower[axis] + self.domain.side(axis) * (self.index[axis] as f64 * scale_down(self.level))
    }

    pub fn upper(&self, axis: usize) -> f64 {
        self.domain.lower[axis]
            + self.domain.side(axis) * ((self.index[axis] + 1) as f64 * scale_down(self.level))
    }

    pub fn measure(&self) -> f64 {
        (0..self.dim()).map(|a| self.side(a)).product()
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim()).map(|a| self.side(a).powi(2)).sum::<f64>().sqrt()
    }

    /// `|R|^{1/n} / d(R)`.
    pub fn eccentricity(&self) -> f64 {
        self.measure().powf(1.0 / self.dim() as f64) / self.diameter()
    }

    /// Side of block `block` of a cube product.
    pub fn block_side(&self, block: usize) -> f64 {
        self.side(self.domain.block_axes(block).start)
    }

    /// `ℓ₂^{n₂}/ℓ₁^{n₂}` for two-block cube products.
    pub fn block_eccentricity(&self) -> Option<f64> {
        if self.domain.block_count != 2 {
            return None;
        }
        let n2 = self.domain.block_sizes[1] as i32;
        Some(self.block_side(1).powi(n2) / self.block_side(0).powi(n2))
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            sides: (0..self.dim()).map(|a| self.side(a)).collect(),
            diameter: self.diameter(),
            measure: self.measure(),
            eccentricity: self.eccentricity(),
            block_eccentricity: self.block_eccentricity(),
        }
    }

    /// Child number `which ∈ [0, 2^n)`; bit `n-1-a` of `which` selects the upper half on axis `a`.
    pub fn child(&self, which: usize) -> Self {
        let n = self.dim();
        let mut index = [0; MAX_DIM];
        for axis in 0..n {
            index[axis] = 2 * self.index[axis] + ((which >> (n - 1 - axis)) & 1) as u64;
        }
        Self { domain: self.domain, level: self.level + 1, index }
    }

    /// The `2^n` children obtained by halving every side.
    pub fn children(&self) -> Vec<Self> {
        (0..1usize << self.dim()).map(|k| self.child(k)).collect()
    }

    pub fn parent(&self) -> Option<Self> {
        if self.level == 0 {
            return None;
        }
        let mut index = self.index;
        for i in index.iter_mut().take(self.dim()) {
            *i >>= 1;
        }
        Some(Self { domain: self.domain, level: self.level - 1, index })
    }

    /// Ancestor at `level` (which must not exceed the own level).
    pub fn ancestor(&self, level: u32) -> Self {
        debug_assert!(level <= self.level);
        let shift = self.level - level;
        let mut index = self.index;
        for i in index.iter_mut().take(self.dim()) {
            *i >>= shift;
        }
        Self { domain: self.domain, level, index }
    }

    /// True when `other` equals `self` or is one of its dyadic descendants.
    pub fn contains(&self, other: &Rect) -> bool {
        other.level >= self.level && other.ancestor(self.level).index == self.index
    }

    /// All descendants exactly `depth` levels below, in row-major order of their local index.
    pub fn descendants(&self, depth: u32) -> Vec<Self> {
        let n = self.dim();
        let per_axis = 1u64 << depth;
        let total = 1usize << (depth as usize * n);
        let mut out = Vec::with_capacity(total);
        for linear in 0..total {
            let mut index = [0; MAX_DIM];
            let mut rest = linear as u64;
            for axis in (0..n).rev() {
                index[axis] = (self.index[axis] << depth) + rest % per_axis;
                rest /= per_axis;
            }
            out.push(Self { domain: self.domain, level: self.level + depth, index });
        }
        out
    }

    /// Every descendant of level at most `depth` below, including `self`, coarse to fine.
    pub fn subtree(&self, depth: u32) -> Vec<Self> {
        (0..=depth).flat_map(|d| self.descendants(d)).collect()
    }
}

fn scale_down(level: u32) -> f64 {
    2f64.powi(-(level as i32))
}

/// A uniform tensor grid over a domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    domain: Domain,
    resolution: [usize; MAX_DIM],
    step: [f64; MAX_DIM],
    strides: [usize; MAX_DIM],
    cell_count: usize,
    cell_volume: f64,
}

/// Builds a grid with `resolution[a]` cells on axis `a`; a single entry is used for every axis.
pub fn build_grid(domain: Domain, resolution: &[usize]) -> Result<Grid> {
    let n = domain.dim();
    let res: Vec<usize> = match resolution.len() {
        1 => vec![resolution[0]; n],
        len if len == n => resolution.to_vec(),
        len => {
            return Err(Error::InvalidParameter(format!(
                "{len} resolutions given for a {n}-dimensional domain"
            )))
        }
    };
    let mut resolution = [1; MAX_DIM];
    let mut step = [0.0; MAX_DIM];
    for (axis, &value) in res.iter().enumerate() {
        if value < 2 || !value.is_power_of_two() {
            return Err(Error::Resolution { axis, value });
        }
        resolution[axis] = value;
        step[axis] = domain.side(axis) / value as f64;
    }
    for block in 0..domain.blocks().len() {
        let axes = domain.block_axes(block);
        if axes.clone().any(|a| resolution[a] != resolution[axes.start]) {
            return Err(Error::InvalidParameter(format!(
                "axes {}..{} form one cube block and need equal resolutions",
                axes.start, axes.end
            )));
        }
    }
    let mut strides = [0; MAX_DIM];
    let mut stride = 1;
    for axis in (0..n).rev() {
        strides[axis] = stride;
        stride *= resolution[axis];
    }
    let cell_volume = (0..n).map(|a| step[a]).product();
    Ok(Grid { domain, resolution, step, strides, cell_count: stride, cell_volume })
}

impl Grid {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution[..self.dim()]
    }

    pub fn step(&self, axis: usize) -> f64 {
        self.step[axis]
    }

    pub fn steps(&self) -> &[f64] {
        &self.step[..self.dim()]
    }

    pub fn cell_count(&self) -> usize {
        self.cell_count
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Coordinate of the centre of cell `i` along `axis`.
    #[inline]
    pub fn center(&self, axis: usize, i: usize) -> f64 {
        self.domain.lower[axis] + (i as f64 + 0.5) * self.step[axis]
    }

    /// Per-axis cell indices of a linear cell index.
    #[inline]
    pub fn unravel(&self, linear: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for axis in 0..self.dim() {
            out[axis] = (linear / self.strides[axis]) % self.resolution[axis];
        }
        out
    }

    #[inline]
    pub fn linear(&self, cell: &[usize]) -> usize {
        cell.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Coordinates of the centre of a cell given by its linear index.
    pub fn cell_center(&self, linear: usize) -> [f64; MAX_DIM] {
        let idx = self.unravel(linear);
        let mut x = [0.0; MAX_DIM];
        for axis in 0..self.dim() {
            x[axis] = self.center(axis, idx[axis]);
        }
        x
    }

    /// Deepest dyadic level of the domain that is still aligned with the cells.
    pub fn alignment_depth(&self) -> u32 {
        self.resolution().iter().map(|r| r.trailing_zeros()).min().unwrap_or(0)
    }

    pub fn is_aligned(&self, rect: &Rect) -> bool {
        rect.domain() == &self.domain && rect.level() <= self.alignment_depth()
    }

    /// Range of cells covered by an aligned rectangle.
    pub fn cell_box(&self, rect: &Rect) -> Result<CellBox> {
        if rect.domain() != &self.domain {
            return Err(Error::InvalidParameter("rectangle belongs to a different domain".into()));
        }
        if !self.is_aligned(rect) {
            return Err(Error::NotAligned { level: rect.level() });
        }
        let mut lo = [0; MAX_DIM];
        let mut hi = [0; MAX_DIM];
        for axis in 0..self.dim() {
            let width = self.resolution[axis] >> rect.level();
            lo[axis] = rect.index()[axis] as usize * width;
            hi[axis] = lo[axis] + width;
        }
        Ok(CellBox { dim: self.dim(), lo, hi })
    }

    /// The whole grid as a cell box.
    pub fn full_box(&self) -> CellBox {
        let mut hi = [0; MAX_DIM];
        hi[..self.dim()].copy_from_slice(self.resolution());
        CellBox { dim: self.dim(), lo: [0; MAX_DIM], hi }
    }
}

/// A half-open box of cell indices `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellBox {
    pub dim: usize,
    pub lo: [usize; MAX_DIM],
    pub hi: [usize; MAX_DIM],
}

impl CellBox {
    pub fn new(lo: &[usize], hi: &[usize]) -> Self {
        let dim = lo.len();
        let mut l = [0; MAX_DIM];
        let mut h = [0; MAX_DIM];
        l[..dim].copy_from_slice(lo);
        h[..dim].copy_from_slice(hi);
        Self { dim, lo: l, hi: h }
    }

    pub fn width(&self, axis: usize) -> usize {
        self.hi[axis] - self.lo[axis]
    }

    pub fn count(&self) -> usize {
        (0..self.dim).map(|a| self.width(a)).product()
    }

    pub fn contains(&self, cell: &[usize]) -> bool {
        (0..self.dim).all(|a| cell[a] >= self.lo[a] && cell[a] < self.hi[a])
    }

    /// Linear grid indices of the cells, in row-major order.
    pub fn cells<'a>(&self, grid: &'a Grid) -> CellIter<'a> {
        CellIter { grid, cells: *self, current: self.lo, done: self.count() == 0 }
    }
}

/// Iterator over the linear indices of the cells of a [`CellBox`].
pub struct CellIter<'a> {
    grid: &'a Grid,
    cells: CellBox,
    current: [usize; MAX_DIM],
    done: bool,
}

impl Iterator for CellIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.done {
            return None;
        }
        let out = self.grid.linear(&self.current[..self.cells.dim]);
        let mut axis = self.cells.dim;
        loop {
            if axis == 0 {
                self.done = true;
                break;
            }
            axis -= 1;
            self.current[axis] += 1;
            if self.current[axis] < self.cells.hi[axis] {
                break;
            }
            self.current[axis] = self.cells.lo[axis];
        }
        Some(out)
    }
}

/// A real function sampled at the cell centres of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::InvalidParameter(format!(
                "{} values for a grid with {} cells",
                values.len(),
                grid.cell_count()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every cell centre (in parallel).
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let n = grid.dim();
        let values = (0..grid.cell_count())
            .into_par_iter()
            .map(|lin| {
                let x = grid.cell_center(lin);
                f(&x[..n])
            })
            .collect();
        Self { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { grid, values: vec![value; grid.cell_count()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    /// Applies `op` to every value.
    pub fn map<F: Fn(f64) -> f64 + Sync>(&self, op: F) -> Self {
        Self { grid: self.grid, values: self.values.par_iter().map(|&v| op(v)).collect() }
    }

    /// Combines two functions on the same grid value by value.
    pub fn zip_map<F: Fn(f64, f64) -> f64 + Sync>(&self, other: &GridFunction, op: F) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("functions live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.par_iter().zip(&other.values).map(|(&a, &b)| op(a, b)).collect(),
        })
    }

    /// Values on the cells of `rect`, in row-major order.
    pub fn restrict(&self, rect: &Rect) -> Result<Vec<f64>> {
        let cells = self.grid.cell_box(rect)?;
        Ok(cells.cells(&self.grid).map(|c| self.values[c]).collect())
    }
}

/// `Σ_{cells ⊂ r} f·(w or 1)·cellvol`.
pub fn integrate(f: &GridFunction, rect: &Rect, weight: Option<&GridFunction>) -> Result<f64> {
    let grid = f.grid();
    let cells = grid.cell_box(rect)?;
    let mut acc = CompensatedSum::new();
    match weight {
        Some(w) => {
            if w.grid() != grid {
                return Err(Error::InvalidParameter("weight lives on a different grid".into()));
            }
            for c in cells.cells(grid) {
                acc.add(f.values[c] * w.values[c]);
            }
        }
        None => {
            for c in cells.cells(grid) {
                acc.add(f.values[c]);
            }
        }
    }
    Ok(acc.value() * grid.cell_volume())
}

/// Average of `f` over `rect`, with respect to `w dx` when a weight is given.
pub fn average(f: &GridFunction, rect: &Rect, weight: Option<&GridFunction>) -> Result<f64> {
    let grid = f.grid();
    let cells = grid.cell_box(rect)?;
    match weight {
        Some(w) => Ok(integrate(f, rect, Some(w))? / integrate(w, rect, None)?),
        None => {
            let total: CompensatedSum = cells.cells(grid).map(|c| f.values[c]).collect();
            Ok(total.value() / cells.count() as f64)
        }
    }
}

/// Pairwise disjoint dyadic descendants of a common root.
#[derive(Clone, Debug, PartialEq)]
pub struct DisjointFamily {
    root: Rect,
    members: Vec<Rect>,
    union_measure: f64,
}

impl DisjointFamily {
    /// Validates that members descend from `root` and that no member contains another.
    pub fn new(root: Rect, members: Vec<Rect>) -> Result<Self> {
        let mut keys: HashSet<RectKey> = HashSet::with_capacity(members.len());
        for m in &members {
            if m.domain() != root.domain() || !root.contains(m) {
                return Err(Error::InvalidFamily(format!(
                    "rectangle at level {} index {:?} is not a dyadic descendant of the root",
                    m.level(),
                    m.index()
                )));
            }
            if !keys.insert(m.key()) {
                return Err(Error::InvalidFamily(format!(
                    "rectangle at level {} index {:?} appears twice",
                    m.level(),
                    m.index()
                )));
            }
        }
        for m in &members {
            let mut current = *m;
            while current.level() > root.level() {
                current = current.parent().expect("level above root");
                if keys.contains(&current.key()) {
                    return Err(Error::InvalidFamily(format!(
                        "rectangle at level {} index {:?} lies inside member at level {} index {:?}",
                        m.level(),
                        m.index(),
                        current.level(),
                        current.index()
                    )));
                }
            }
        }
        let union_measure = members.iter().map(Rect::measure).sum();
        Ok(Self { root, members, union_measure })
    }

    pub fn root(&self) -> &Rect {
        &self.root
    }

    pub fn members(&self) -> &[Rect] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `|∪R_i| = Σ|R_i|`.
    pub fn union_measure(&self) -> f64 {
        self.union_measure
    }

    /// `|∪R_i| / |root|`.
    pub fn smallness(&self) -> f64 {
        self.union_measure / self.root.measure()
    }
}

/// Per-node aggregates of a grid function over the dyadic tree of a root rectangle.
///
/// Level `j` stores `2^{jn}` nodes in row-major order of the local index. Leaves sit at
/// the deepest aligned level; when the root spans unequal cell counts per axis a leaf
/// covers a block of cells.
#[derive(Clone, Debug)]
pub struct Pyramid {
    root: Rect,
    depth: u32,
    levels: Vec<Vec<f64>>,
    leaf_cells: usize,
}

/// How cell values are combined inside a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregate {
    Sum,
    Min,
    Max,
}

impl Pyramid {
    /// Builds the pyramid down to `depth` levels below `root` (capped by the grid alignment).
    pub fn build(f: &GridFunction, root: &Rect, depth: u32, aggregate: Aggregate) -> Result<Self> {
        let grid = f.grid();
        let cells = grid.cell_box(root)?;
        let depth = depth.min(grid.alignment_depth() - root.level());
        let n = grid.dim();
        let per_axis = 1usize << depth;
        let leaf_count = 1usize << (depth as usize * n);
        let mut leaf_width = [1; MAX_DIM];
        for axis in 0..n {
            leaf_width[axis] = cells.width(axis) / per_axis;
        }
        let leaf_cells: usize = leaf_width[..n].iter().product();
        let leaves = match aggregate {
            Aggregate::Sum => {
                let mut acc = vec![CompensatedSum::new(); leaf_count];
                for cell in cells.cells(grid) {
                    acc[Self::leaf_of(grid, &cells, &leaf_width, depth, cell)].add(f.values[cell]);
                }
                acc.iter().map(CompensatedSum::value).collect::<Vec<_>>()
            }
            Aggregate::Min | Aggregate::Max => {
                let init = if aggregate == Aggregate::Min { f64::INFINITY } else { f64::NEG_INFINITY };
                let mut acc = vec![init; leaf_count];
                for cell in cells.cells(grid) {
                    let leaf = Self::leaf_of(grid, &cells, &leaf_width, depth, cell);
                    let v = f.values[cell];
                    acc[leaf] = if aggregate == Aggregate::Min { acc[leaf].min(v) } else { acc[leaf].max(v) };
                }
                acc
            }
        };
        let mut levels = vec![leaves];
        for level in (0..depth).rev() {
            let finer = levels.last().expect("nonempty");
            let count = 1usize << (level as usize * n);
            let mut coarse = Vec::with_capacity(count);
            for node in 0..count {
                let mut value = match aggregate {
                    Aggregate::Sum => 0.0,
                    Aggregate::Min => f64::INFINITY,
                    Aggregate::Max => f64::NEG_INFINITY,
                };
                for child in 0..1usize << n {
                    let v = finer[child_linear(node, child, level, n)];
                    value = match aggregate {
                        Aggregate::Sum => value + v,
                        Aggregate::Min => value.min(v),
                        Aggregate::Max => value.max(v),
                    };
                }
                coarse.push(value);
            }
            levels.push(coarse);
        }
        levels.reverse();
        Ok(Self { root: *root, depth, levels, leaf_cells })
    }

    fn leaf_of(grid: &Grid, cells: &CellBox, width: &[usize; MAX_DIM], depth: u32, cell: usize) -> usize {
        let idx = grid.unravel(cell);
        let per_axis = 1usize << depth;
        let mut linear = 0;
        for axis in 0..grid.dim() {
            linear = linear * per_axis + (idx[axis] - cells.lo[axis]) / width[axis];
        }
        linear
    }

    pub fn root(&self) -> &Rect {
        &self.root
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Aggregated values of all nodes at `level` (relative to the root).
    pub fn level(&self, level: u32) -> &[f64] {
        &self.levels[level as usize]
    }

    /// Number of grid cells inside one node at `level`.
    pub fn cells_per_node(&self, level: u32) -> usize {
        self.leaf_cells << ((self.depth - level) as usize * self.root.dim())
    }

    /// Node average (for sum pyramids): aggregate divided by the node's cell count.
    pub fn average(&self, level: u32, node: usize) -> f64 {
        self.levels[level as usize][node] / self.cells_per_node(level) as f64
    }

    /// The rectangle of node `node` at relative `level`.
    pub fn rect(&self, level: u32, node: usize) -> Rect {
        let n = self.root.dim();
        let per_axis = 1u64 << level;
        let mut index = [0u64; MAX_DIM];
        let mut rest = node as u64;
        for axis in (0..n).rev() {
            index[axis] = (self.root.index()[axis] << level) + rest % per_axis;
            rest /= per_axis;
        }
        Rect::new(*self.root.domain(), self.root.level() + level, &index[..n]).expect("valid node")
    }

    /// Node position of a descendant rectangle of the root, if within depth.
    pub fn node_of(&self, rect: &Rect) -> Option<(u32, usize)> {
        if !self.root.contains(rect) || rect.level() - self.root.level() > self.depth {
            return None;
        }
        let level = rect.level() - self.root.level();
        let per_axis = 1usize << level;
        let mut linear = 0;
        for axis in 0..self.root.dim() {
            let local = (rect.index()[axis] - (self.root.index()[axis] << level)) as usize;
            linear = linear * per_axis + local;
        }
        Some((level, linear))
    }

    /// Cell box of a node.
    pub fn node_cells(&self, grid: &Grid, level: u32, node: usize) -> CellBox {
        grid.cell_box(&self.rect(level, node)).expect("aligned node")
    }
}

/// Linear index of child `child` of node `node` at `level`, both in row-major order.
#[inline]
pub fn child_linear(node: usize, child: usize, level: u32, n: usize) -> usize {
    let per_axis = 1usize << level;
    let mut rest = node;
    let mut parent_idx = [0usize; MAX_DIM];
    for axis in (0..n).rev() {
        parent_idx[axis] = rest % per_axis;
        rest /= per_axis;
    }
    let mut linear = 0;
    for axis in 0..n {
        let bit = (child >> (n - 1 - axis)) & 1;
        linear = linear * (per_axis * 2) + 2 * parent_idx[axis] + bit;
    }
    linear
}

/// Linear index of the parent (at `level - 1`) of node `node` at `level`.
#[inline]
pub fn parent_linear(node: usize, level: u32, n: usize) -> usize {
    let per_axis = 1usize << level;
    let mut rest = node;
    let mut idx = [0usize; MAX_DIM];
    for axis in (0..n).rev() {
        idx[axis] = rest % per_axis;
        rest /= per_axis;
    }
    let mut out = 0;
    for axis in 0..n {
        out = out * (per_axis / 2) + idx[axis] / 2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_and_volume() {
        let g = build_grid(Domain::unit(1).unwrap(), &[4]).unwrap();
        let centers: Vec<f64> = (0..4).map(|i| g.center(0, i)).collect();
        assert_eq!(centers, vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(g.cell_volume(), 0.25);
        assert!(build_grid(Domain::unit(1).unwrap(), &[3]).is_err());
    }

    #[test]
    fn child_linear_matches_rect_children() {
        let d = Domain::unit(2).unwrap();
        let root = Rect::root(d);
        let g = build_grid(d, &[8]).unwrap();
        let f = GridFunction::constant(g, 1.0);
        let p = Pyramid::build(&f, &root, 3, Aggregate::Sum).unwrap();
        for node in 0..16 {
            let r = p.rect(2, node);
            for (k, c) in r.children().iter().enumerate() {
                assert_eq!(p.node_of(c), Some((3, child_linear(node, k, 2, 2))));
            }
        }
    }
}
