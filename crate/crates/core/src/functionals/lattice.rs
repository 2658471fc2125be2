//! Finite parts of punctured lattice sums of homogeneous kernels.
//!
//! A midpoint double sum that skips the diagonal misses the singular part of
//! `|f(x)−f(y)|^p / |x−y|^{d+δp}` near `y = x`. For locally affine `f` with gradient `g`
//! the local model is `φ(t) = |g·t|^p |t|^{−d−δp}`, homogeneous of degree `s − d`
//! with `s = p(1−δ)`, and the punctured sum over the lattice `hĤℤ^d` differs from
//! the integral by `h^s |g|^p Z`, where `Z` is the finite part
//! `lim_R [Σ_{k≠0} φ̂(Ĥk) ψ(|Ĥk|/R) det Ĥ − ∫ φ̂ ψ(|t|/R) dt]` for the unit direction
//! `ĝ` and the cutoff `ψ(r) = exp(−r^8)`. In one dimension `Z = 2ζ(1 − s)`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Riemann zeta function for real `s ≠ 1`, by Euler–Maclaurin summation.
pub fn zeta(s: f64) -> f64 {
    const BERNOULLI: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let n = 20.0f64;
    let mut total = 0.0;
    for k in 1..20 {
        total += (k as f64).powf(-s);
    }
    total += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // Rising factorial s(s+1)…(s+2j−2) divided by (2j)!.
    let mut rising = s;
    let mut factorial = 2.0;
    let mut power = n.powf(-s - 1.0);
    for (j, b) in BERNOULLI.iter().enumerate() {
        total += b / factorial * rising * power;
        let next = 2 * j as i32 + 2;
        rising *= (s + next as f64 - 1.0) * (s + next as f64);
        factorial *= (next as f64 + 1.0) * (next as f64 + 2.0);
        power /= n * n;
    }
    total
}

/// `∫_{S^{d−1}} |u_1|^p dσ(u)`.
pub fn sphere_moment(dim: usize, p: f64) -> f64 {
    let d = dim as f64;
    2.0 * std::f64::consts::PI.powf((d - 1.0) / 2.0) * libm::tgamma((p + 1.0) / 2.0) / libm::tgamma((d + p) / 2.0)
}

/// Smoothing radius used for the numerical finite part in dimension `dim`.
fn cutoff_radius(dim: usize) -> f64 {
    match dim {
        1 | 2 => 24.0,
        3 => 10.0,
        _ => 6.0,
    }
}

/// Finite part `Z` computed by a smoothed lattice sum (any dimension).
pub fn finite_part_numeric(p: f64, delta: f64, steps: &[f64], direction: &[f64], radius: f64) -> f64 {
    let dim = steps.len();
    let s = p * (1.0 - delta);
    let exponent = -(dim as f64) - delta * p;
    let det: f64 = steps.iter().product();
    let limits: Vec<i64> = steps.iter().map(|h| (1.8 * radius / h).ceil() as i64).collect();
    let mut index: Vec<i64> = limits.iter().map(|l| -l).collect();
    let mut acc = crate::sum::CompensatedSum::new();
    'outer: loop {
        if index.iter().any(|&k| k != 0) {
            let mut r2 = 0.0;
            let mut dot = 0.0;
            for a in 0..dim {
                let t = steps[a] * index[a] as f64;
                r2 += t * t;
                dot += direction[a] * t;
            }
            let r = r2.sqrt();
            let cut = (-(r / radius).powi(8)).exp();
            if cut > 0.0 {
                acc.add(dot.abs().powf(p) * r.powf(exponent) * cut * det);
            }
        }
        for a in (0..dim).rev() {
            index[a] += 1;
            if index[a] <= limits[a] {
                continue 'outer;
            }
            index[a] = -limits[a];
        }
        break;
    }
    let integral = sphere_moment(dim, p) * radius.powf(s) * libm::tgamma(s / 8.0) / 8.0;
    acc.value() - integral
}

type CacheKey = (usize, u64, u64, Vec<u64>, Vec<i32>);

fn cache() -> &'static Mutex<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Direction snapping and memoised finite parts for one lattice and kernel.
///
/// One-dimensional lattices use the zeta closed form. Higher dimensions reduce the
/// direction by the reflection (and, for equal steps, permutation) symmetries of the
/// lattice, snap it to a fixed angular resolution, and memoise the lattice sum.
#[derive(Clone, Debug)]
pub struct LatticeModel {
    p: f64,
    delta: f64,
    steps: Vec<f64>,
}

impl LatticeModel {
    /// `steps` are the lattice steps relative to the reference step.
    pub fn new(p: f64, delta: f64, steps: &[f64]) -> Self {
        Self { p, delta, steps: steps.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.steps.len()
    }

    /// Symmetry-reduced, quantised direction (empty in one dimension).
    pub fn snap(&self, direction: &[f64]) -> Vec<i32> {
        let dim = self.dim();
        if dim == 1 {
            return Vec::new();
        }
        let mut reduced: Vec<f64> = direction.iter().map(|c| c.abs()).collect();
        if self.steps.iter().all(|h| *h == self.steps[0]) {
            reduced.sort_by(|a, b| b.total_cmp(a));
        }
        let norm = reduced.iter().map(|c| c * c).sum::<f64>().sqrt();
        let resolution = match dim {
            2 => 64.0,
            3 => 16.0,
            _ => 8.0,
        };
        reduced.iter().map(|c| (c / norm * resolution).round() as i32).collect()
    }

    /// Finite part for a snapped direction.
    pub fn value(&self, snapped: &[i32]) -> f64 {
        let dim = self.dim();
        if dim == 1 {
            return 2.0 * zeta(1.0 - self.p * (1.0 - self.delta));
        }
        let key: CacheKey = (
            dim,
            self.p.to_bits(),
            self.delta.to_bits(),
            self.steps.iter().map(|h| h.to_bits()).collect(),
            snapped.to_vec(),
        );
        if let Some(&z) = cache().lock().expect("finite-part cache").get(&key) {
            return z;
        }
        let norm = snapped.iter().map(|&q| (q as f64).powi(2)).sum::<f64>().sqrt();
        let unit: Vec<f64> = snapped.iter().map(|&q| q as f64 / norm).collect();
        let z = finite_part_numeric(self.p, self.delta, &self.steps, &unit, cutoff_radius(dim));
        cache().lock().expect("finite-part cache").insert(key, z);
        z
    }
}

/// Finite part `Z(ĝ, Ĥ)` for relative lattice steps `steps` and unit direction `direction`.
pub fn finite_part(p: f64, delta: f64, steps: &[f64], direction: &[f64]) -> f64 {
    let model = LatticeModel::new(p, delta, steps);
    model.value(&model.snap(direction))
}
