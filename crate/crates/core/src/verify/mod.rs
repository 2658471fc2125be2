//! Named numerical checks of the quantitative statements, each producing a [`CheckReport`].
//!
//! Every check runs at two resolutions, `N/2` and `N`. Explicit-constant checks
//! judge the inequality at `N`; dimensional checks report the worst ratio over the
//! corpus and rectangle pool as the empirical constant and pass when it is finite and
//! moves by at most the catalog tolerance between the two resolutions.

mod biparam;
mod catalog;
mod corpus;
mod fractional;
mod john;
mod poincare;
pub mod riesz;
mod selfimprove;
mod structure;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde_json::Value;

use crate::analysis::poly::least_squares_residual;
use crate::analysis::poly::rect_widths;
use crate::analysis::{normalized_lq, weak_norm_values, Center};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::functionals::{Axes, FunctionInput, FunctionalSpec, KernelOptions, Length};
use crate::grid::{build_grid, Domain, Grid, GridFunction, Rect};
use crate::report::{json_f64, CheckMode, CheckReport, RefinementPoint};
use crate::weights::{make_weight, Weight};

pub use catalog::{check_ids, lookup, CatalogEntry, DomainKind, ParamSpec, CATALOG};
pub use corpus::{default_corpus, CorpusFunction, RANDOM_TRIG_COUNT};
pub use riesz::{riesz_potential_bound, RieszBound};

/// Values at or below this are treated as zero when forming ratios.
const NEGLIGIBLE: f64 = 1e-12;

/// Overrides applied on top of a catalog entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckConfig {
    pub domain: Option<Domain>,
    /// Finest resolution `N` per axis; the trace also runs at `N/2`.
    pub resolution: Option<usize>,
    /// Expressions replacing the default corpus.
    pub functions: Vec<String>,
    /// Weight catalog id or expression replacing the entry's weight.
    pub weight: Option<String>,
    /// Density of `μ` for the measure functional (defaults to `|∇f|^p w`).
    pub measure: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub pair_budget: Option<u64>,
}

impl CheckConfig {
    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_resolution(mut self, n: usize) -> Self {
        self.resolution = Some(n);
        self
    }

    pub fn with_functions<S: Into<String>>(mut self, functions: impl IntoIterator<Item = S>) -> Self {
        self.functions = functions.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_weight(mut self, weight: &str) -> Self {
        self.weight = Some(weight.to_string());
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Resolved parameters of one check run.
pub(crate) struct Ctx<'a> {
    pub entry: &'static CatalogEntry,
    pub config: &'a CheckConfig,
    params: BTreeMap<&'static str, f64>,
    pub domain: Domain,
    pub resolution: usize,
}

/// Everything a check needs at one resolution.
pub(crate) struct Setup {
    pub grid: Grid,
    pub root: Rect,
    pub functions: Vec<(String, FunctionInput)>,
    pub weight: Option<Arc<Weight>>,
}

impl Setup {
    /// The configured weight, or the constant weight 1.
    pub fn weight_or_unit(&self) -> Result<Arc<Weight>> {
        match &self.weight {
            Some(w) => Ok(w.clone()),
            None => Ok(Arc::new(Weight::constant(self.grid, 1.0)?)),
        }
    }

    pub fn require_weight(&self) -> Result<Arc<Weight>> {
        self.weight.clone().ok_or_else(|| Error::InvalidParameter("this check needs a weight".into()))
    }
}

impl<'a> Ctx<'a> {
    fn new(entry: &'static CatalogEntry, config: &'a CheckConfig) -> Result<Self> {
        let mut errors = Vec::new();
        let mut params: BTreeMap<&'static str, f64> = entry.params.iter().map(|p| (p.name, p.default)).collect();
        for (name, &value) in &config.params {
            match entry.param(name) {
                Some(spec) if value.is_finite() => {
                    params.insert(spec.name, value);
                }
                Some(_) => errors.push(format!("{}: parameter `{name}` must be finite", entry.id)),
                None => errors.push(format!(
                    "{}: unknown parameter `{name}` (valid: {})",
                    entry.id,
                    entry.params.iter().map(|p| p.name).collect::<Vec<_>>().join(", ")
                )),
            }
        }
        let resolution = config.resolution.unwrap_or(entry.resolution);
        if !resolution.is_power_of_two() || resolution < 4 {
            errors.push(format!("{}: resolution {resolution} must be a power of two of at least 4", entry.id));
        }
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        let domain = config.domain.unwrap_or_else(|| entry.domain.build());
        Ok(Self { entry, config, params, domain, resolution })
    }

    pub fn get(&self, name: &str) -> f64 {
        *self.params.get(name).unwrap_or_else(|| panic!("parameter `{name}` is not in the {} schema", self.entry.id))
    }

    /// A nonnegative integer parameter.
    pub fn int(&self, name: &str) -> Result<u32> {
        let value = self.get(name).round();
        if !(0.0..=f64::from(u32::MAX)).contains(&value) {
            return Err(Error::InvalidParameter(format!("`{name}` must be a nonnegative integer")));
        }
        Ok(value as u32)
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn resolutions(&self) -> [usize; 2] {
        [self.resolution / 2, self.resolution]
    }

    pub fn setup(&self, resolution: usize) -> Result<Setup> {
        let grid = build_grid(self.domain, &vec![resolution; self.dim()])?;
        let root = Rect::root(self.domain);
        let options = KernelOptions {
            pair_budget: self.config.pair_budget.unwrap_or(KernelOptions::default().pair_budget),
            ..KernelOptions::default()
        };
        let functions = self
            .functions()?
            .into_iter()
            .map(|f| (f.name, FunctionInput::from_expr(f.expr, grid).with_kernel_options(options)))
            .collect();
        let weight = match self.config.weight.as_deref().or(self.entry.weight) {
            Some(spec) => Some(Arc::new(make_weight(spec, grid)?)),
            None => None,
        };
        Ok(Setup { grid, root, functions, weight })
    }

    fn functions(&self) -> Result<Vec<CorpusFunction>> {
        if self.config.functions.is_empty() {
            return Ok(default_corpus(&self.domain, self.seed(), RANDOM_TRIG_COUNT));
        }
        self.config
            .functions
            .iter()
            .map(|text| Ok(CorpusFunction { name: text.clone(), expr: Expr::parse(text, self.dim())? }))
            .collect()
    }

    /// Density of `μ` from the configuration, if any.
    pub fn measure_density(&self, grid: Grid) -> Result<Option<GridFunction>> {
        match &self.config.measure {
            Some(text) => {
                let density = Expr::parse(text, self.dim())?.sample(grid);
                if !density.is_nonnegative() {
                    return Err(Error::InvalidParameter(format!("measure density `{text}` takes negative values")));
                }
                Ok(Some(density))
            }
            None => Ok(None),
        }
    }

    /// Dyadic subrectangles of the root down to `depth`, resolved at the coarse resolution.
    pub fn pool(&self, setup: &Setup, depth: u32) -> Result<Vec<Rect>> {
        let coarse = (self.resolution / 2).trailing_zeros();
        if depth > coarse {
            return Err(Error::InvalidParameter(format!(
                "depth {depth} exceeds the {coarse} dyadic levels resolved at N/2 = {}",
                self.resolution / 2
            )));
        }
        Ok(setup.root.subtree(depth))
    }

    /// Errors unless every block of the domain is a cube.
    pub fn require_cubes(&self) -> Result<()> {
        let blocks: Vec<std::ops::Range<usize>> = if self.domain.blocks().is_empty() {
            vec![0..self.dim()]
        } else {
            (0..self.domain.blocks().len()).map(|b| self.domain.block_axes(b)).collect()
        };
        for axes in blocks {
            let first = self.domain.side(axes.start);
            if axes.clone().any(|a| (self.domain.side(a) - first).abs() > 1e-12 * first) {
                return Err(Error::Unsupported(format!("{} needs cubes (or products of cubes)", self.entry.id)));
            }
        }
        Ok(())
    }
}

/// One compared pair: `lhs` against an explicit right side or a structural factor.
#[derive(Clone, Debug)]
pub(crate) struct Sample {
    pub lhs: f64,
    pub rhs: f64,
    pub label: String,
}

impl Sample {
    pub fn ratio(&self) -> f64 {
        safe_ratio(self.lhs, self.rhs)
    }
}

/// Output of a check at one resolution.
#[derive(Debug, Default)]
pub(crate) struct Measured {
    pub samples: Vec<Sample>,
    pub details: BTreeMap<String, Value>,
    pub failures: Vec<String>,
}

impl Measured {
    pub fn push(&mut self, lhs: f64, rhs: f64, label: impl Into<String>) {
        self.samples.push(Sample { lhs, rhs, label: label.into() });
    }

    pub fn detail(&mut self, key: &str, value: impl Into<Value>) {
        self.details.insert(key.to_string(), value.into());
    }

    pub fn number(&mut self, key: &str, value: f64) {
        self.details.insert(key.to_string(), json_f64(value));
    }

    /// Records a sub-verdict; a failed one fails the report.
    pub fn verdict(&mut self, key: &str, pass: bool, message: impl FnOnce() -> String) {
        self.details.insert(format!("{key}_pass"), Value::Bool(pass));
        if !pass {
            self.failures.push(message());
        }
    }

    pub fn worst(&self) -> Option<&Sample> {
        let mut best: Option<&Sample> = None;
        for s in &self.samples {
            if best.map_or(true, |b| s.ratio() > b.ratio()) {
                best = Some(s);
            }
        }
        best
    }

    /// Largest ratio over samples whose label starts with `prefix`.
    pub fn worst_ratio(&self, prefix: &str) -> f64 {
        self.samples.iter().filter(|s| s.label.starts_with(prefix)).map(Sample::ratio).fold(0.0, f64::max)
    }
}

/// `lhs/rhs` with negligible numerators mapped to 0 and positive ones over 0 to infinity.
pub(crate) fn safe_ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs.abs() <= NEGLIGIBLE {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    }
}

pub(crate) fn rect_label(name: &str, rect: &Rect) -> String {
    format!("{name} @ level {} index {:?}", rect.level(), rect.index())
}

/// `f − c` on the cells of `rect`, where `c` is the mean or the polynomial projection.
pub(crate) fn residual(f: &GridFunction, rect: &Rect, center: Center) -> Result<Vec<f64>> {
    let values = f.restrict(rect)?;
    match center {
        Center::Mean => {
            let mean = crate::sum::sum(values.iter().copied()) / values.len() as f64;
            Ok(values.iter().map(|v| v - mean).collect())
        }
        Center::Poly(m) => least_squares_residual(&rect_widths(f, rect)?, m, &values),
        Center::OptimalDelta(_) => Err(Error::Unsupported("optimal δ centre has no residual".into())),
    }
}

/// Weight density on the cells of `rect`, or ones.
pub(crate) fn cell_weights(w: Option<&Weight>, rect: &Rect, len: usize) -> Result<Vec<f64>> {
    match w {
        Some(w) => w.density().restrict(rect),
        None => Ok(vec![1.0; len]),
    }
}

/// Strong `L^q` from weak `L^{p,∞}` at `q = p/2`: `‖g‖_q ≤ 2^{2/p} ‖g‖_{p,∞}` on any probability measure.
pub(crate) fn kolmogorov_gap(values: &[f64], weights: &[f64], p: f64) -> (f64, f64) {
    let q = p / 2.0;
    let strong = normalized_lq(values, weights, q);
    let bound = (p / (p - q)).powf(1.0 / q) * weak_norm_values(values, weights, p);
    (strong, bound)
}

pub(crate) fn gradient(order: usize, p: f64, weight: Option<Arc<Weight>>) -> FunctionalSpec {
    FunctionalSpec::GradientM { order, p, weight, length: Length::Diameter, axes: Axes::All }
}

/// `ℓ_b ‖∇_b f‖` for one block.
pub(crate) fn block_gradient(block: usize, p: f64, weight: Option<Arc<Weight>>) -> FunctionalSpec {
    FunctionalSpec::GradientM { order: 1, p, weight, length: Length::BlockSide(block), axes: Axes::Block(block) }
}

type TracedFn = fn(&Ctx, &Setup) -> Result<Measured>;

enum Runner {
    Traced(TracedFn),
    Custom(fn(&Ctx) -> Result<CheckReport>),
}

fn runner(id: &str) -> Runner {
    use Runner::{Custom, Traced};
    match id {
        "P1" => Traced(poincare::p1),
        "P2" => Traced(poincare::p2),
        "P3" => Traced(poincare::p3),
        "S3" => Traced(poincare::s3),
        "F1" => Traced(fractional::f1),
        "F2" => Traced(fractional::f2),
        "F3" => Traced(fractional::f3),
        "F4" => Traced(fractional::f4),
        "F5" => Traced(fractional::f5),
        "S7" => Traced(fractional::s7),
        "S1" => Traced(selfimprove::s1),
        "S2" => Traced(selfimprove::s2),
        "S4" => Traced(selfimprove::s4),
        "S5" => Traced(selfimprove::s5),
        "S6" => Traced(selfimprove::s6),
        "D1" => Traced(selfimprove::d1),
        "J1" => Traced(john::j1),
        "J2" => Custom(john::j2),
        "B1" => Traced(biparam::b1),
        "B2" => Traced(biparam::b2),
        "B3" => Traced(biparam::b3),
        "B4" => Traced(biparam::b4),
        "B5" => Traced(biparam::b5),
        "B6" => Traced(biparam::b6),
        "W1" => Custom(structure::w1),
        "T1" => Custom(structure::t1),
        other => unreachable!("catalog id {other} has no runner"),
    }
}

/// Runs one catalog check.
pub fn run_check(id: &str, config: &CheckConfig) -> Result<CheckReport> {
    let entry = lookup(id)?;
    let ctx = Ctx::new(entry, config)?;
    let start = Instant::now();
    let mut report = match runner(entry.id) {
        Runner::Traced(measure) => traced(&ctx, measure)?,
        Runner::Custom(run) => run(&ctx)?,
    };
    for (name, value) in &ctx.params {
        report.params.entry(name.to_string()).or_insert_with(|| json_f64(*value));
    }
    report.params.insert("resolution".into(), ctx.resolution.into());
    if let Some(w) = config.weight.as_deref().or(entry.weight) {
        report.params.insert("weight".into(), w.into());
    }
    if let Some(mu) = &config.measure {
        report.params.insert("measure".into(), mu.clone().into());
    }
    if !config.functions.is_empty() {
        report.params.insert("functions".into(), config.functions.clone().into());
    }
    report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    Ok(report)
}

fn traced(ctx: &Ctx, measure: TracedFn) -> Result<CheckReport> {
    let mut trace = Vec::new();
    let mut failures = Vec::new();
    let mut last: Option<(Measured, Sample)> = None;
    let mut slack: f64 = 0.0;
    for resolution in ctx.resolutions() {
        let setup = ctx.setup(resolution)?;
        let measured = measure(ctx, &setup)?;
        let worst = measured.worst().cloned().unwrap_or(Sample { lhs: 0.0, rhs: 0.0, label: "none".into() });
        trace.push(RefinementPoint {
            resolution: setup.grid.resolution().to_vec(),
            lhs: worst.lhs,
            rhs: worst.rhs,
            value: worst.ratio(),
        });
        failures.extend(measured.failures.iter().map(|f| format!("N={resolution}: {f}")));
        if let Some((coarse, _)) = &last {
            let before: BTreeMap<&str, f64> = coarse.samples.iter().map(|s| (s.label.as_str(), s.ratio())).collect();
            for sample in &measured.samples {
                if let Some(&r) = before.get(sample.label.as_str()) {
                    slack = slack.max(safe_ratio((sample.ratio() - r).abs(), sample.ratio()));
                }
            }
        }
        last = Some((measured, worst));
    }
    let (measured, worst) = last.expect("two resolutions");
    let entry = ctx.entry;
    let mut report = match entry.mode {
        CheckMode::Explicit => {
            let mut report = CheckReport::explicit(entry.id, worst.lhs, worst.rhs, entry.tolerance, ctx.seed());
            report.detail("discretization_slack", json_f64(slack));
            report.refinement = trace;
            report
        }
        CheckMode::Dimensional => {
            CheckReport::dimensional(entry.id, worst.lhs, worst.rhs, trace, entry.tolerance, ctx.seed())
        }
    };
    report.details.extend(measured.details);
    report.detail("argmax", worst.label);
    report.detail("samples", measured.samples.len());
    for failure in failures {
        report.fail(failure);
    }
    Ok(report)
}

/// Runs `id` once per value of `parameter` with a shared seed. `resolution` sweeps the grid.
pub fn sweep(id: &str, parameter: &str, values: &[f64], config: &CheckConfig) -> Result<Vec<CheckReport>> {
    let entry = lookup(id)?;
    if parameter != "resolution" && entry.param(parameter).is_none() {
        return Err(Error::InvalidParameter(format!(
            "{id} has no parameter `{parameter}` (valid: resolution, {})",
            entry.params.iter().map(|p| p.name).collect::<Vec<_>>().join(", ")
        )));
    }
    values
        .iter()
        .map(|&value| {
            let mut config = config.clone();
            if parameter == "resolution" {
                if value.fract() != 0.0 || value < 0.0 {
                    return Err(Error::InvalidParameter(format!("resolution {value} is not an integer")));
                }
                config.resolution = Some(value as usize);
            } else {
                config.params.insert(parameter.to_string(), value);
            }
            run_check(id, &config)
        })
        .collect()
}
