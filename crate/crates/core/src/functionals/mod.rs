//! Catalog of rectangle functionals `a(R)` and the engines behind them.

pub mod derivative;
pub mod kernel;
pub mod lattice;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{Basis, GridFunction, Rect};
use crate::weights::Weight;

pub use derivative::{derivative_field, Axes, DerivativeField, Differentiation, MAX_ORDER};
pub use kernel::{a_of_x, fractional_kernel_sum, inner_sums, KernelMode, KernelOptions, DEFAULT_PAIR_BUDGET};

/// Length scale in front of a gradient functional.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Length {
    Diameter,
    /// Side length along one axis.
    Side(usize),
    /// Common side length of one block of a cube-product rectangle.
    BlockSide(usize),
}

/// How the full-pair fractional functional is normalised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FullForm {
    /// `ℓ(R)^δ (⨍_R ∫_R … w(x))^{1/p}`.
    Seminorm,
    /// `d(R)^δ [e(R)^{−n/p}] ((1/w(R)) ∫_R A(R,x) w)^{1/p}`.
    AOfX,
}

/// A functional `a(R)` from the catalog.
#[derive(Clone, Debug)]
pub enum FunctionalSpec {
    /// `len^m ((1/w(R)) ∫_R |∇^m f|^p w)^{1/p}`.
    GradientM { order: usize, p: f64, weight: Option<Arc<Weight>>, length: Length, axes: Axes },
    /// `d(R)^δ (μ(R)/w(R))^{1/p}`.
    Measure { delta: f64, p: f64, mu: Arc<GridFunction>, weight: Arc<Weight> },
    FractionalFull { delta: f64, p: f64, weight: Option<Arc<Weight>>, form: FullForm, eccentricity_factor: bool },
    /// Block-`block` fractional functional of a cube-product domain (weighted when `weight` is set).
    BlockFractional { block: usize, delta: f64, p: f64, weight: Option<Arc<Weight>> },
    Sum(Vec<FunctionalSpec>),
    ConstantOne,
}

impl FunctionalSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            FunctionalSpec::GradientM { .. } => "gradient",
            FunctionalSpec::Measure { .. } => "measure",
            FunctionalSpec::FractionalFull { .. } => "fractional",
            FunctionalSpec::BlockFractional { .. } => "block-fractional",
            FunctionalSpec::Sum(_) => "sum",
            FunctionalSpec::ConstantOne => "constant",
        }
    }

    /// Basis the functional is tied to, if any.
    pub fn basis(&self) -> Option<Basis> {
        match self {
            FunctionalSpec::BlockFractional { .. } => Some(Basis::CubeProducts),
            FunctionalSpec::GradientM { axes: Axes::Block(_), .. } => Some(Basis::CubeProducts),
            FunctionalSpec::GradientM { length: Length::BlockSide(_), .. } => Some(Basis::CubeProducts),
            FunctionalSpec::Sum(parts) => parts.iter().find_map(|p| p.basis()),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let check_p = |p: f64| {
            if p >= 1.0 && p.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("functional exponent p must be at least 1, got {p}")))
            }
        };
        let check_delta = |d: f64, closed: bool| {
            if d > 0.0 && (d < 1.0 || (closed && d == 1.0)) {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("functional order δ out of range: {d}")))
            }
        };
        match self {
            FunctionalSpec::GradientM { p, .. } => check_p(*p),
            FunctionalSpec::Measure { delta, p, .. } => {
                check_p(*p)?;
                check_delta(*delta, true)
            }
            FunctionalSpec::FractionalFull { delta, p, .. } | FunctionalSpec::BlockFractional { delta, p, .. } => {
                check_p(*p)?;
                check_delta(*delta, false)
            }
            FunctionalSpec::Sum(parts) => {
                let bases: Vec<Basis> = parts.iter().filter_map(|p| p.basis()).collect();
                if bases.windows(2).any(|w| w[0] != w[1]) {
                    return Err(Error::InvalidParameter("sum parts use different bases".into()));
                }
                parts.iter().try_for_each(|p| p.validate())
            }
            FunctionalSpec::ConstantOne => Ok(()),
        }
    }
}

/// The function a functional is evaluated on: samples, an optional expression for
/// exact derivatives, and cached derivative fields.
#[derive(Debug)]
pub struct FunctionInput {
    values: GridFunction,
    expr: Option<Expr>,
    kernel: KernelOptions,
    derivatives: Mutex<HashMap<(Axes, usize), Arc<GridFunction>>>,
}

impl FunctionInput {
    pub fn from_expr(expr: Expr, grid: crate::grid::Grid) -> Self {
        let values = expr.sample(grid);
        Self { values, expr: Some(expr), kernel: KernelOptions::default(), derivatives: Mutex::new(HashMap::new()) }
    }

    pub fn from_samples(values: GridFunction) -> Self {
        Self { values, expr: None, kernel: KernelOptions::default(), derivatives: Mutex::new(HashMap::new()) }
    }

    pub fn with_kernel_options(mut self, options: KernelOptions) -> Self {
        self.kernel = options;
        self
    }

    pub fn values(&self) -> &GridFunction {
        &self.values
    }

    pub fn expr(&self) -> Option<&Expr> {
        self.expr.as_ref()
    }

    pub fn kernel_options(&self) -> &KernelOptions {
        &self.kernel
    }

    /// `|∇^m f|` along `axes`: symbolic when an expression is available and differentiable,
    /// central differences otherwise.
    pub fn derivative(&self, axes: Axes, order: usize) -> Result<Arc<GridFunction>> {
        if let Some(field) = self.derivatives.lock().expect("derivative cache").get(&(axes, order)) {
            return Ok(field.clone());
        }
        let grid = *self.values.grid();
        let field = match &self.expr {
            Some(expr) => match derivative_field(Differentiation::Symbolic(expr), grid, axes, order) {
                Ok(field) => field,
                Err(Error::Unsupported(msg)) if msg.contains("finite-difference") => {
                    derivative_field(Differentiation::FiniteDifference(&self.values), grid, axes, order)?
                }
                Err(e) => return Err(e),
            },
            None => derivative_field(Differentiation::FiniteDifference(&self.values), grid, axes, order)?,
        };
        let field = Arc::new(field.values);
        self.derivatives.lock().expect("derivative cache").insert((axes, order), field.clone());
        Ok(field)
    }
}

fn length_of(rect: &Rect, length: Length) -> Result<f64> {
    match length {
        Length::Diameter => Ok(rect.diameter()),
        Length::Side(axis) if axis < rect.dim() => Ok(rect.side(axis)),
        Length::BlockSide(block) if block < rect.domain().blocks().len() => Ok(rect.block_side(block)),
        other => Err(Error::InvalidParameter(format!("length {other:?} does not exist on this rectangle"))),
    }
}

/// `(Σ w·v^p / Σ w)^{1/p}` over the cells of `rect`.
fn weighted_mean_power(values: &GridFunction, rect: &Rect, p: f64, weight: Option<&Weight>) -> Result<f64> {
    let v = values.restrict(rect)?;
    let w = match weight {
        Some(w) => w.density().restrict(rect)?,
        None => vec![1.0; v.len()],
    };
    Ok(crate::analysis::normalized_lq(&v, &w, p))
}

/// Evaluates `a(R)` for `f` on `rect`.
pub fn eval_functional(spec: &FunctionalSpec, f: &FunctionInput, rect: &Rect) -> Result<f64> {
    spec.validate()?;
    if let Some(basis) = spec.basis() {
        if basis != rect.basis() {
            return Err(Error::InvalidParameter(format!(
                "{} functional needs the {basis:?} basis, the rectangle uses {:?}",
                spec.kind(),
                rect.basis()
            )));
        }
    }
    evaluate(spec, f, rect)
}

fn evaluate(spec: &FunctionalSpec, f: &FunctionInput, rect: &Rect) -> Result<f64> {
    match spec {
        FunctionalSpec::GradientM { order, p, weight, length, axes } => {
            let field = f.derivative(*axes, *order)?;
            let mean = weighted_mean_power(&field, rect, *p, weight.as_deref())?;
            Ok(length_of(rect, *length)?.powi(*order as i32) * mean)
        }
        FunctionalSpec::Measure { delta, p, mu, weight } => {
            let mu_r = crate::grid::integrate(mu, rect, None)?;
            let w_r = weight.measure(rect)?;
            Ok(rect.diameter().powf(*delta) * (mu_r / w_r).powf(1.0 / p))
        }
        FunctionalSpec::FractionalFull { delta, p, weight, form, eccentricity_factor } => {
            let mode = match form {
                FullForm::Seminorm => KernelMode::Seminorm,
                FullForm::AOfX => KernelMode::AOfX,
            };
            let options = KernelOptions { eccentricity_factor: *eccentricity_factor, ..*f.kernel_options() };
            fractional_kernel_sum(f.values(), rect, *delta, *p, weight.as_deref(), mode, &options)
        }
        FunctionalSpec::BlockFractional { block, delta, p, weight } => fractional_kernel_sum(
            f.values(),
            rect,
            *delta,
            *p,
            weight.as_deref(),
            KernelMode::Multifold(*block),
            f.kernel_options(),
        ),
        FunctionalSpec::Sum(parts) => {
            let mut total = 0.0;
            for part in parts {
                total += evaluate(part, f, rect)?;
            }
            Ok(total)
        }
        FunctionalSpec::ConstantOne => Ok(1.0),
    }
}
