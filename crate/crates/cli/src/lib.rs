//! Experiment runner for the `rectpoincare` checks.

pub mod config;
pub mod run;

pub use config::{parse_config, print_config, CheckSpec, ConfigErrors, DomainSpec, ExperimentConfig, SweepSpec};
pub use run::{execute, exit_status, write_artifacts, Outcome, Record, RunResult};

/// Parses a sweep range: a comma-separated list, or `start:stop:count` for evenly spaced values.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let number = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number"));
    if let Some((start, rest)) = text.split_once(':') {
        let (stop, count) = rest.split_once(':').ok_or("a range needs the form start:stop:count")?;
        let (start, stop) = (number(start)?, number(stop)?);
        let count: usize = count.trim().parse().map_err(|_| format!("`{count}` is not a count"))?;
        return match count {
            0 => Err("a range needs at least one value".into()),
            1 => Ok(vec![start]),
            _ => Ok((0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect()),
        };
    }
    let values: Vec<f64> = text.split(',').map(number).collect::<Result<_, _>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err("range values must be finite".into());
    }
    Ok(values)
}
