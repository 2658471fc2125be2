//! Experiment files: parsing with full error collection, validation, and printing.
//!
//! The format is TOML with the sections `[domain]`, `[functions]`, `[weights]`,
//! `[[checks]]`, `[[sweeps]]` and `[run]`. Every section is optional except that at
//! least one check or sweep must be present.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use rectpoincare_core::expr::Expr;
use rectpoincare_core::grid::Domain;
use rectpoincare_core::verify::{check_ids, lookup, CheckConfig};
use rectpoincare_core::weights::weight_expression;
use toml::{Table, Value};

/// Directory used when the file and the command line name none.
pub const DEFAULT_OUTPUT_DIR: &str = "rectpoincare-out";

/// Box of the experiment; `blocks` (when nonempty) splits it into a product of cubes.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub blocks: Vec<usize>,
}

impl DomainSpec {
    pub fn build(&self) -> rectpoincare_core::Result<Domain> {
        if self.blocks.is_empty() {
            Domain::new(&self.lower, &self.upper)
        } else {
            Domain::cube_product(&self.lower, &self.upper, &self.blocks)
        }
    }
}

/// One check to run with parameter overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckSpec {
    pub id: String,
    pub params: BTreeMap<String, f64>,
}

/// One parameter sweep, written as a CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub check: String,
    pub parameter: String,
    pub values: Vec<f64>,
    pub params: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub domain: Option<DomainSpec>,
    pub resolution: Option<usize>,
    /// `(name, expression)` in file order; empty means the built-in corpus.
    pub functions: Vec<(String, String)>,
    pub weight: Option<String>,
    pub measure: Option<String>,
    pub checks: Vec<CheckSpec>,
    pub sweeps: Vec<SweepSpec>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub pair_budget: Option<u64>,
    pub jobs: Option<usize>,
    /// Keep wall times in the written records (they make reruns differ).
    pub timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: None,
            resolution: None,
            functions: Vec::new(),
            weight: None,
            measure: None,
            checks: Vec::new(),
            sweeps: Vec::new(),
            seed: 0,
            output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
            pair_budget: None,
            jobs: None,
            timings: false,
        }
    }
}

impl ExperimentConfig {
    /// The core configuration for `id` with `overrides` applied.
    pub fn check_config(&self, overrides: &BTreeMap<String, f64>) -> CheckConfig {
        CheckConfig {
            domain: self.domain.as_ref().map(|d| d.build().expect("validated when parsed")),
            resolution: self.resolution,
            functions: self.functions.iter().map(|(_, expr)| expr.clone()).collect(),
            weight: self.weight.clone(),
            measure: self.measure.clone(),
            params: overrides.clone(),
            seed: self.seed,
            pair_budget: self.pair_budget,
        }
    }
}

/// All problems found in one experiment file.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} problem(s) in the experiment file:", self.0.len())?;
        for message in &self.0 {
            writeln!(f, "  - {message}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

struct Collector(Vec<String>);

impl Collector {
    fn push(&mut self, message: impl Into<String>) {
        self.0.push(message.into());
    }

    fn unknown_keys(&mut self, table: &Table, section: &str, known: &[&str]) {
        for key in table.keys() {
            if !known.contains(&key.as_str()) {
                self.push(format!("{section}: unknown key `{key}` (expected one of: {})", known.join(", ")));
            }
        }
    }

    fn table<'a>(&mut self, value: &'a Value, section: &str) -> Option<&'a Table> {
        let table = value.as_table();
        if table.is_none() {
            self.push(format!("{section} must be a table"));
        }
        table
    }

    fn number(&mut self, value: &Value, at: &str) -> Option<f64> {
        match value {
            Value::Float(x) if x.is_finite() => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.push(format!("{at} must be a finite number, got {value}"));
                None
            }
        }
    }

    fn numbers(&mut self, value: &Value, at: &str) -> Option<Vec<f64>> {
        let Some(items) = value.as_array() else {
            self.push(format!("{at} must be an array of numbers"));
            return None;
        };
        let parsed: Vec<Option<f64>> =
            items.iter().enumerate().map(|(i, v)| self.number(v, &format!("{at}[{i}]"))).collect();
        parsed.into_iter().collect()
    }

    fn unsigned(&mut self, value: &Value, at: &str) -> Option<u64> {
        match value.as_integer() {
            Some(i) if i >= 0 => Some(i as u64),
            _ => {
                self.push(format!("{at} must be a nonnegative integer, got {value}"));
                None
            }
        }
    }

    fn string<'a>(&mut self, value: &'a Value, at: &str) -> Option<&'a str> {
        let s = value.as_str();
        if s.is_none() {
            self.push(format!("{at} must be a string, got {value}"));
        }
        s
    }
}

/// Parses and validates an experiment file, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![e.to_string()]))?;
    let mut errors = Collector(Vec::new());
    let mut config = ExperimentConfig::default();
    errors.unknown_keys(&root, "file", &["domain", "functions", "weights", "checks", "sweeps", "run"]);

    if let Some(section) = root.get("domain").and_then(|v| errors.table(v, "[domain]")) {
        parse_domain(section, &mut config, &mut errors);
    }
    if let Some(section) = root.get("functions").and_then(|v| errors.table(v, "[functions]")) {
        for (name, value) in section {
            if let Some(expr) = errors.string(value, &format!("[functions] {name}")) {
                config.functions.push((name.clone(), expr.to_string()));
            }
        }
    }
    if let Some(section) = root.get("weights").and_then(|v| errors.table(v, "[weights]")) {
        errors.unknown_keys(section, "[weights]", &["weight", "measure"]);
        config.weight = section.get("weight").and_then(|v| errors.string(v, "[weights] weight")).map(str::to_string);
        config.measure = section.get("measure").and_then(|v| errors.string(v, "[weights] measure")).map(str::to_string);
    }
    if let Some(value) = root.get("checks") {
        match value.as_array() {
            Some(items) => {
                for (i, item) in items.iter().enumerate() {
                    if let Some(table) = errors.table(item, &format!("[[checks]] #{}", i + 1)) {
                        config.checks.extend(parse_check(table, i, &mut errors));
                    }
                }
            }
            None => errors.push("checks must be written as [[checks]] entries"),
        }
    }
    if let Some(value) = root.get("sweeps") {
        match value.as_array() {
            Some(items) => {
                for (i, item) in items.iter().enumerate() {
                    if let Some(table) = errors.table(item, &format!("[[sweeps]] #{}", i + 1)) {
                        config.sweeps.extend(parse_sweep(table, i, &mut errors));
                    }
                }
            }
            None => errors.push("sweeps must be written as [[sweeps]] entries"),
        }
    }
    if let Some(section) = root.get("run").and_then(|v| errors.table(v, "[run]")) {
        parse_run(section, &mut config, &mut errors);
    }
    if config.checks.is_empty() && config.sweeps.is_empty() && errors.0.is_empty() {
        errors.push("the file lists no [[checks]] and no [[sweeps]]");
    }

    validate_expressions(&config, &mut errors);
    if errors.0.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(errors.0))
    }
}

fn parse_domain(section: &Table, config: &mut ExperimentConfig, errors: &mut Collector) {
    errors.unknown_keys(section, "[domain]", &["lower", "upper", "blocks", "resolution"]);
    let lower = section.get("lower").and_then(|v| errors.numbers(v, "[domain] lower"));
    let upper = section.get("upper").and_then(|v| errors.numbers(v, "[domain] upper"));
    let blocks = match section.get("blocks") {
        Some(v) => match v.as_array() {
            Some(items) => items
                .iter()
                .enumerate()
                .map(|(i, b)| errors.unsigned(b, &format!("[domain] blocks[{i}]")).map(|b| b as usize))
                .collect::<Option<Vec<_>>>(),
            None => {
                errors.push("[domain] blocks must be an array of block sizes");
                None
            }
        },
        None => Some(Vec::new()),
    };
    match (lower, upper, blocks) {
        (Some(lower), Some(upper), Some(blocks)) => {
            let spec = DomainSpec { lower, upper, blocks };
            match spec.build() {
                Ok(_) => config.domain = Some(spec),
                Err(e) => errors.push(format!("[domain]: {e}")),
            }
        }
        _ if section.contains_key("lower") != section.contains_key("upper") => {
            errors.push("[domain] needs both `lower` and `upper`")
        }
        _ => {}
    }
    if let Some(value) = section.get("resolution") {
        if let Some(n) = errors.unsigned(value, "[domain] resolution") {
            if n.is_power_of_two() && n >= 4 {
                config.resolution = Some(n as usize);
            } else {
                errors.push(format!("[domain] resolution {n} must be a power of two of at least 4"));
            }
        }
    }
}

fn check_id(value: Option<&Value>, at: &str, errors: &mut Collector) -> Option<&'static str> {
    let Some(value) = value else {
        errors.push(format!("{at}: missing `id`"));
        return None;
    };
    let id = errors.string(value, &format!("{at} id"))?;
    match lookup(id) {
        Ok(entry) => Some(entry.id),
        Err(_) => {
            errors.push(format!("{at}: unknown check `{id}` (valid ids: {})", check_ids().join(", ")));
            None
        }
    }
}

fn overrides(table: &Table, id: &str, skip: &[&str], at: &str, errors: &mut Collector) -> BTreeMap<String, f64> {
    let entry = lookup(id).expect("id validated");
    let mut params = BTreeMap::new();
    for (key, value) in table {
        if skip.contains(&key.as_str()) {
            continue;
        }
        if entry.param(key).is_none() {
            let valid: Vec<&str> = entry.params.iter().map(|p| p.name).collect();
            errors.push(format!("{at}: {id} has no parameter `{key}` (valid: {})", valid.join(", ")));
            continue;
        }
        if let Some(x) = errors.number(value, &format!("{at} {key}")) {
            params.insert(key.clone(), x);
        }
    }
    params
}

fn parse_check(table: &Table, index: usize, errors: &mut Collector) -> Option<CheckSpec> {
    let at = format!("[[checks]] #{}", index + 1);
    let id = check_id(table.get("id"), &at, errors)?;
    let params = overrides(table, id, &["id"], &at, errors);
    Some(CheckSpec { id: id.to_string(), params })
}

fn parse_sweep(table: &Table, index: usize, errors: &mut Collector) -> Option<SweepSpec> {
    let at = format!("[[sweeps]] #{}", index + 1);
    let id = check_id(table.get("check"), &at, errors)?;
    let entry = lookup(id).expect("id validated");
    let parameter = table.get("parameter").and_then(|v| errors.string(v, &format!("{at} parameter")));
    let values = table.get("values").and_then(|v| errors.numbers(v, &format!("{at} values")));
    let params = overrides(table, id, &["check", "parameter", "values"], &at, errors);
    let (Some(parameter), Some(values)) = (parameter, values) else {
        errors.push(format!("{at}: needs `parameter` and `values`"));
        return None;
    };
    if parameter != "resolution" && entry.param(parameter).is_none() {
        let valid: Vec<&str> = entry.params.iter().map(|p| p.name).collect();
        errors.push(format!("{at}: {id} cannot sweep `{parameter}` (valid: resolution, {})", valid.join(", ")));
        return None;
    }
    if values.is_empty() {
        errors.push(format!("{at}: `values` is empty"));
        return None;
    }
    Some(SweepSpec { check: id.to_string(), parameter: parameter.to_string(), values, params })
}

fn parse_run(section: &Table, config: &mut ExperimentConfig, errors: &mut Collector) {
    errors.unknown_keys(section, "[run]", &["seed", "output_dir", "pair_budget", "jobs", "timings"]);
    if let Some(seed) = section.get("seed").and_then(|v| errors.unsigned(v, "[run] seed")) {
        config.seed = seed;
    }
    if let Some(dir) = section.get("output_dir").and_then(|v| errors.string(v, "[run] output_dir")) {
        config.output_dir = PathBuf::from(dir);
    }
    if let Some(budget) = section.get("pair_budget").and_then(|v| errors.unsigned(v, "[run] pair_budget")) {
        config.pair_budget = Some(budget);
    }
    if let Some(jobs) = section.get("jobs").and_then(|v| errors.unsigned(v, "[run] jobs")) {
        if jobs == 0 {
            errors.push("[run] jobs must be at least 1");
        } else {
            config.jobs = Some(jobs as usize);
        }
    }
    if let Some(value) = section.get("timings") {
        match value.as_bool() {
            Some(b) => config.timings = b,
            None => errors.push(format!("[run] timings must be true or false, got {value}")),
        }
    }
}

/// Dimensions the expressions must make sense in: the configured domain, or the
/// default domain of every referenced check.
fn dimensions(config: &ExperimentConfig) -> Vec<usize> {
    if let Some(domain) = &config.domain {
        return vec![domain.lower.len()];
    }
    let mut dims: Vec<usize> = config
        .checks
        .iter()
        .map(|c| c.id.as_str())
        .chain(config.sweeps.iter().map(|s| s.check.as_str()))
        .filter_map(|id| lookup(id).ok())
        .map(|entry| entry.domain.build().dim())
        .collect();
    dims.sort_unstable();
    dims.dedup();
    dims
}

fn validate_expressions(config: &ExperimentConfig, errors: &mut Collector) {
    let dims = dimensions(config);
    let mut seen = Vec::new();
    let mut report = |at: String, result: rectpoincare_core::Result<Expr>, dim: usize| {
        if let Err(e) = result {
            let message = format!("{at}: {e} (n = {dim})");
            if !seen.contains(&message) {
                seen.push(message.clone());
                errors.push(message);
            }
        }
    };
    for &dim in &dims {
        for (name, text) in &config.functions {
            report(format!("[functions] {name} = \"{text}\""), Expr::parse(text, dim), dim);
        }
        if let Some(w) = &config.weight {
            report(format!("[weights] weight = \"{w}\""), weight_expression(w, dim), dim);
        }
        if let Some(mu) = &config.measure {
            report(format!("[weights] measure = \"{mu}\""), Expr::parse(mu, dim), dim);
        }
    }
}

fn float_array(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&x| Value::Float(x)).collect())
}

fn param_table(params: &BTreeMap<String, f64>, table: &mut Table) {
    for (key, &value) in params {
        table.insert(key.clone(), Value::Float(value));
    }
}

/// Renders `config` in the file format; parsing the result gives `config` back.
pub fn print_config(config: &ExperimentConfig) -> String {
    let mut root = Table::new();
    let mut domain = Table::new();
    if let Some(spec) = &config.domain {
        domain.insert("lower".into(), float_array(&spec.lower));
        domain.insert("upper".into(), float_array(&spec.upper));
        if !spec.blocks.is_empty() {
            domain.insert("blocks".into(), Value::Array(spec.blocks.iter().map(|&b| Value::Integer(b as i64)).collect()));
        }
    }
    if let Some(n) = config.resolution {
        domain.insert("resolution".into(), Value::Integer(n as i64));
    }
    if !domain.is_empty() {
        root.insert("domain".into(), Value::Table(domain));
    }
    if !config.functions.is_empty() {
        let functions: Table = config.functions.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        root.insert("functions".into(), Value::Table(functions));
    }
    let mut weights = Table::new();
    if let Some(w) = &config.weight {
        weights.insert("weight".into(), Value::String(w.clone()));
    }
    if let Some(mu) = &config.measure {
        weights.insert("measure".into(), Value::String(mu.clone()));
    }
    if !weights.is_empty() {
        root.insert("weights".into(), Value::Table(weights));
    }
    if !config.checks.is_empty() {
        let checks = config
            .checks
            .iter()
            .map(|check| {
                let mut table = Table::new();
                table.insert("id".into(), Value::String(check.id.clone()));
                param_table(&check.params, &mut table);
                Value::Table(table)
            })
            .collect();
        root.insert("checks".into(), Value::Array(checks));
    }
    if !config.sweeps.is_empty() {
        let sweeps = config
            .sweeps
            .iter()
            .map(|sweep| {
                let mut table = Table::new();
                table.insert("check".into(), Value::String(sweep.check.clone()));
                table.insert("parameter".into(), Value::String(sweep.parameter.clone()));
                table.insert("values".into(), float_array(&sweep.values));
                param_table(&sweep.params, &mut table);
                Value::Table(table)
            })
            .collect();
        root.insert("sweeps".into(), Value::Array(sweeps));
    }
    let mut run = Table::new();
    run.insert("seed".into(), Value::Integer(config.seed as i64));
    run.insert("output_dir".into(), Value::String(config.output_dir.to_string_lossy().into_owned()));
    if let Some(budget) = config.pair_budget {
        run.insert("pair_budget".into(), Value::Integer(budget as i64));
    }
    if let Some(jobs) = config.jobs {
        run.insert("jobs".into(), Value::Integer(jobs as i64));
    }
    run.insert("timings".into(), Value::Boolean(config.timings));
    root.insert("run".into(), Value::Table(run));
    toml::to_string(&root).expect("tables of plain values always serialize")
}
