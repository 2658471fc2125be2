//! Sobolev-type exponents `p*` defined by `1/p − 1/p* = gain`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which defining relation fixes the gain `1/p − 1/p*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentKind {
    /// `δ/n`.
    Classic,
    /// `(δ/n) / (q + log[w]_{A_q})`.
    Weighted,
    /// `δ/(n q M)` for a free parameter `M > 1`.
    Smallness,
    /// `(δ/n) / (1 + log[w]_{A_1})`, the fractional A₁ exponent (cubes or cube products).
    FractionalA1,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentParams {
    pub p: f64,
    pub n: usize,
    /// Smoothness order; defaults to 1.
    pub delta: Option<f64>,
    pub q: Option<f64>,
    pub m: Option<f64>,
    /// Weight constant `[w]`.
    pub awc: Option<f64>,
}

impl ExponentParams {
    pub fn new(p: f64, n: usize) -> Self {
        Self { p, n, delta: None, q: None, m: None, awc: None }
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn q(mut self, q: f64) -> Self {
        self.q = Some(q);
        self
    }

    pub fn m(mut self, m: f64) -> Self {
        self.m = Some(m);
        self
    }

    pub fn awc(mut self, awc: f64) -> Self {
        self.awc = Some(awc);
        self
    }
}

fn require(value: Option<f64>, name: &str, kind: ExponentKind) -> Result<f64> {
    value.ok_or_else(|| Error::InvalidParameter(format!("{kind:?} exponent needs `{name}`")))
}

fn check_awc(awc: f64) -> Result<f64> {
    if awc >= 1.0 && awc.is_finite() {
        Ok(awc)
    } else {
        Err(Error::InvalidParameter(format!("weight constant must be a finite value ≥ 1, got {awc}")))
    }
}

/// The gain `1/p − 1/p*` for `kind`.
pub fn exponent_gain(kind: ExponentKind, params: &ExponentParams) -> Result<f64> {
    let n = params.n as f64;
    let delta = params.delta.unwrap_or(1.0);
    if params.n == 0 || !(delta > 0.0) {
        return Err(Error::InvalidParameter("dimension and δ must be positive".into()));
    }
    let q_checked = |q: f64| {
        if q >= 1.0 && q <= params.p {
            Ok(q)
        } else {
            Err(Error::InvalidParameter(format!("need 1 ≤ q ≤ p, got q = {q}, p = {}", params.p)))
        }
    };
    Ok(match kind {
        ExponentKind::Classic => delta / n,
        ExponentKind::Weighted => {
            let q = q_checked(require(params.q, "q", kind)?)?;
            let awc = check_awc(require(params.awc, "awc", kind)?)?;
            delta / n / (q + awc.ln())
        }
        ExponentKind::Smallness => {
            let q = q_checked(require(params.q, "q", kind)?)?;
            let m = require(params.m, "m", kind)?;
            if !(m > 1.0) {
                return Err(Error::InvalidParameter(format!("M must exceed 1, got {m}")));
            }
            delta / (n * q * m)
        }
        ExponentKind::FractionalA1 => {
            let awc = check_awc(require(params.awc, "awc", kind)?)?;
            delta / n / (1.0 + awc.ln())
        }
    })
}

/// `p*` from `1/p − 1/p* = gain`; errors when `p* ≤ p` or `p*` is not finite and positive.
pub fn sobolev_exponent(kind: ExponentKind, params: &ExponentParams) -> Result<f64> {
    let p = params.p;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("p must be at least 1, got {p}")));
    }
    let gain = exponent_gain(kind, params)?;
    let reciprocal = 1.0 / p - gain;
    if !(reciprocal > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "1/p − gain = {reciprocal} is not positive: p* would be infinite or negative"
        )));
    }
    let p_star = 1.0 / reciprocal;
    if !(p_star > p) {
        return Err(Error::InvalidParameter(format!("p* = {p_star} does not exceed p = {p}")));
    }
    Ok(p_star)
}

/// `M = 1 + log([w]^{1/q})`.
pub fn m_choice(awc: f64, q: f64) -> f64 {
    1.0 + awc.ln() / q
}

/// `B_{w,q} = (1 + log [w]^{1/q}) / log [w]^{1/q}`, the conjugate exponent `M′` of `M`.
/// Infinite when `[w] = 1`.
pub fn b_wq(awc: f64, q: f64) -> f64 {
    let l = awc.ln() / q;
    if l == 0.0 {
        f64::INFINITY
    } else {
        (1.0 + l) / l
    }
}

/// Hölder conjugate `M/(M−1)`.
pub fn conjugate(m: f64) -> f64 {
    m / (m - 1.0)
}
