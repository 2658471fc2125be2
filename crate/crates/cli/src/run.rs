//! Executing an experiment and writing its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rectpoincare_core::report::CheckReport;
use rectpoincare_core::verify::{run_check, sweep};

use crate::config::{ExperimentConfig, SweepSpec};

/// File holding one JSON record per check, in configuration order.
pub const REPORTS_FILE: &str = "reports.jsonl";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    /// The check could not be executed.
    Error,
}

/// `0` when everything passed, `1` if any check could not run, otherwise `2` if any failed.
pub fn exit_status(outcomes: &[Outcome]) -> i32 {
    if outcomes.contains(&Outcome::Error) {
        1
    } else if outcomes.contains(&Outcome::Fail) {
        2
    } else {
        0
    }
}

/// A check report together with whether it ran at all.
#[derive(Clone, Debug)]
pub struct Record {
    pub report: CheckReport,
    pub outcome: Outcome,
}

impl Record {
    fn from_result(id: &str, seed: u64, result: rectpoincare_core::Result<CheckReport>) -> Self {
        match result {
            Ok(report) => {
                let outcome = if report.pass { Outcome::Pass } else { Outcome::Fail };
                Self { report, outcome }
            }
            Err(e) => Self { report: CheckReport::error(id, e.to_string(), seed), outcome: Outcome::Error },
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub spec: SweepSpec,
    pub records: Vec<Record>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub checks: Vec<Record>,
    pub sweeps: Vec<SweepTable>,
}

impl RunResult {
    pub fn outcomes(&self) -> Vec<Outcome> {
        let sweep_records = self.sweeps.iter().flat_map(|s| &s.records);
        self.checks.iter().chain(sweep_records).map(|r| r.outcome).collect()
    }

    pub fn exit_status(&self) -> i32 {
        exit_status(&self.outcomes())
    }
}

/// Runs every check and sweep; a check that errors becomes an error record.
pub fn execute(config: &ExperimentConfig) -> io::Result<RunResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0))
        .build()
        .map_err(io::Error::other)?;
    Ok(pool.install(|| {
        let checks = config
            .checks
            .par_iter()
            .map(|check| {
                let result = run_check(&check.id, &config.check_config(&check.params));
                Record::from_result(&check.id, config.seed, result)
            })
            .collect();
        let sweeps = config.sweeps.par_iter().map(|spec| run_sweep(config, spec)).collect();
        RunResult { checks, sweeps }
    }))
}

fn run_sweep(config: &ExperimentConfig, spec: &SweepSpec) -> SweepTable {
    let base = config.check_config(&spec.params);
    let records = spec
        .values
        .par_iter()
        .map(|&value| {
            let result = sweep(&spec.check, &spec.parameter, &[value], &base).map(|mut reports| reports.remove(0));
            Record::from_result(&spec.check, config.seed, result)
        })
        .collect();
    SweepTable { spec: spec.clone(), records }
}

/// One JSON line per record; wall times are dropped unless `timings` is set.
pub fn report_lines(records: &[Record], timings: bool) -> String {
    let mut out = String::new();
    for record in records {
        let mut report = record.report.clone();
        if !timings {
            report.wall_time_ms = None;
        }
        out.push_str(&serde_json::to_string(&report).expect("reports serialize"));
        out.push('\n');
    }
    out
}

fn number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.6e}")
    } else {
        x.to_string()
    }
}

/// Fixed-width table with one row per record.
pub fn summary_table(records: &[Record]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<4} {:<6} {:>13} {:>13} {:>13} {:>13}  failure", "id", "result", "lhs", "rhs", "ratio", "constant");
    for record in records {
        let r = &record.report;
        let result = match record.outcome {
            Outcome::Pass => "pass",
            Outcome::Fail => "FAIL",
            Outcome::Error => "ERROR",
        };
        let constant = r.empirical_constant.map(number).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<4} {:<6} {:>13} {:>13} {:>13} {:>13}  {}",
            r.id,
            result,
            number(r.lhs),
            number(r.rhs),
            number(r.ratio),
            constant,
            r.failure.as_deref().unwrap_or("")
        );
    }
    let outcomes: Vec<Outcome> = records.iter().map(|r| r.outcome).collect();
    let count = |o: Outcome| outcomes.iter().filter(|&&x| x == o).count();
    let _ = writeln!(out, "{} passed, {} failed, {} errors", count(Outcome::Pass), count(Outcome::Fail), count(Outcome::Error));
    out
}

fn csv_field(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        String::new()
    }
}

/// CSV with a header row: one line per swept value.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from("check,parameter,value,lhs,rhs,ratio,empirical_constant,pass\n");
    for (value, record) in table.spec.values.iter().zip(&table.records) {
        let r = &record.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            table.spec.check,
            table.spec.parameter,
            value,
            csv_field(r.lhs),
            csv_field(r.rhs),
            csv_field(r.ratio),
            r.empirical_constant.map(csv_field).unwrap_or_default(),
            r.pass
        );
    }
    out
}

pub fn sweep_file_name(spec: &SweepSpec, index: usize) -> String {
    format!("sweep_{:02}_{}_{}.csv", index + 1, spec.check, spec.parameter)
}

/// Writes the reports, the summary and one CSV per sweep into `dir`; returns the paths written.
pub fn write_artifacts(result: &RunResult, dir: &Path, timings: bool) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, contents: String| -> io::Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    put(REPORTS_FILE.into(), report_lines(&result.checks, timings))?;
    let mut summary = summary_table(&result.checks);
    for (i, table) in result.sweeps.iter().enumerate() {
        let _ = write!(summary, "\nsweep {} over {}:\n{}", table.spec.check, table.spec.parameter, summary_table(&table.records));
        put(sweep_file_name(&table.spec, i), sweep_csv(table))?;
    }
    put(SUMMARY_FILE.into(), summary)?;
    Ok(written)
}
