//! Discrete summability conditions `D_p(w)` and `SD_p^s(w)` on sampled families.

pub mod exponent;
pub mod sampler;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{eval_functional, FunctionInput, FunctionalSpec};
use crate::grid::{DisjointFamily, Rect, RectKey};
use crate::weights::Weight;

pub use exponent::{b_wq, conjugate, exponent_gain, m_choice, sobolev_exponent, ExponentKind, ExponentParams};
pub use sampler::{
    default_max_depth, exhaustive_families, sample_disjoint_families, SamplerOptions, DEFAULT_STOP_PROBABILITY,
};

/// Tolerance for exact discrete inequalities.
pub const EXACT_TOLERANCE: f64 = 1e-10;
/// Tolerance when the two sides use different quadratures.
pub const QUADRATURE_TOLERANCE: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConditionKind {
    Dp,
    SDp { s: f64 },
}

/// What is being tested: the exponent, the optional smallness index and the bound
/// the maximal ratio is compared against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionTest {
    pub p: f64,
    pub s: Option<f64>,
    pub bound: f64,
    pub tolerance: f64,
}

impl ConditionTest {
    pub fn dp(p: f64, bound: f64) -> Self {
        Self { p, s: None, bound, tolerance: EXACT_TOLERANCE }
    }

    pub fn sdp(p: f64, s: f64, bound: f64) -> Self {
        Self { p, s: Some(s), bound, tolerance: EXACT_TOLERANCE }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionVerdict {
    pub kind: ConditionKind,
    pub p: f64,
    pub families: usize,
    pub max_ratio: f64,
    /// Index of the maximising family in the tested pool.
    pub argmax: Option<usize>,
    /// `(level, index)` of each member of the maximising family.
    pub argmax_members: Vec<(u32, Vec<u64>)>,
    pub bound: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Set when `a(root) = 0` while some family has a positive left side.
    pub degenerate: bool,
}

/// Ratio of the left side `(Σ a(R_i)^p w(R_i)/w(R))^{1/p}` to
/// `a(R)·(|∪R_i|/|R|)^{1/s}` for one family, given precomputed values of `a` and `w`.
fn family_ratio(
    family: &DisjointFamily,
    a: &HashMap<RectKey, f64>,
    measure: &HashMap<RectKey, f64>,
    test: &ConditionTest,
) -> (f64, bool) {
    let root = family.root();
    let w_root = measure[&root.key()];
    let sum: f64 = family.members().iter().map(|r| a[&r.key()].powf(test.p) * measure[&r.key()] / w_root).sum();
    let lhs = sum.powf(1.0 / test.p);
    let mut rhs = a[&root.key()];
    if let Some(s) = test.s {
        rhs *= family.smallness().powf(1.0 / s);
    }
    if lhs == 0.0 {
        (0.0, false)
    } else if rhs == 0.0 {
        (f64::INFINITY, a[&root.key()] == 0.0)
    } else {
        (lhs / rhs, false)
    }
}

/// Largest family ratio over `families` compared with `test.bound`.
pub fn condition_ratio(
    spec: &FunctionalSpec,
    f: &FunctionInput,
    w: Option<&Weight>,
    root: &Rect,
    families: &[DisjointFamily],
    test: &ConditionTest,
) -> Result<ConditionVerdict> {
    if !(test.p >= 1.0) {
        return Err(Error::InvalidParameter(format!("condition exponent p = {} is below 1", test.p)));
    }
    if let Some(s) = test.s {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("smallness index s = {s} must be positive")));
        }
    }
    let mut rects: HashMap<RectKey, Rect> = HashMap::new();
    rects.insert(root.key(), *root);
    for family in families {
        if family.root() != root {
            return Err(Error::InvalidFamily("family rooted away from the tested rectangle".into()));
        }
        for m in family.members() {
            rects.entry(m.key()).or_insert(*m);
        }
    }
    let evaluated: Vec<(RectKey, f64, f64)> = rects
        .par_iter()
        .map(|(key, rect)| {
            let a = eval_functional(spec, f, rect)?;
            let m = match w {
                Some(w) => w.measure(rect)?,
                None => rect.measure(),
            };
            Ok((*key, a, m))
        })
        .collect::<Result<_>>()?;
    let a: HashMap<RectKey, f64> = evaluated.iter().map(|(k, a, _)| (*k, *a)).collect();
    let measure: HashMap<RectKey, f64> = evaluated.iter().map(|(k, _, m)| (*k, *m)).collect();

    let ratios: Vec<(f64, bool)> = families.par_iter().map(|fam| family_ratio(fam, &a, &measure, test)).collect();
    let mut max_ratio = 0.0;
    let mut argmax = None;
    let mut degenerate = false;
    for (i, (ratio, degen)) in ratios.iter().enumerate() {
        degenerate |= *degen;
        if argmax.is_none() || *ratio > max_ratio {
            max_ratio = *ratio;
            argmax = Some(i);
        }
    }
    let argmax_members = argmax
        .map(|i| families[i].members().iter().map(|r| (r.level(), r.index().to_vec())).collect())
        .unwrap_or_default();
    let pass = max_ratio.is_finite() && max_ratio <= test.bound * (1.0 + test.tolerance);
    Ok(ConditionVerdict {
        kind: match test.s {
            Some(s) => ConditionKind::SDp { s },
            None => ConditionKind::Dp,
        },
        p: test.p,
        families: families.len(),
        max_ratio,
        argmax,
        argmax_members,
        bound: test.bound,
        tolerance: test.tolerance,
        pass,
        degenerate,
    })
}
