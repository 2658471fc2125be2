use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rectpoincare_cli::config::{ExperimentConfig, SweepSpec};
use rectpoincare_cli::run::{summary_table, sweep_csv, sweep_file_name};
use rectpoincare_cli::{execute, parse_config, parse_range, write_artifacts};
use rectpoincare_core::grid::{build_grid, Domain};
use rectpoincare_core::verify::{lookup, CATALOG};
use rectpoincare_core::weights::{make_weight, weight_report};

#[derive(Parser)]
#[command(name = "rectpoincare", version, about = "Numerical checks of weighted Poincaré–Sobolev inequalities on rectangles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every random choice (families, corpus coefficients, shifts).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Finest grid resolution per axis (power of two).
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Maximum number of cell pairs a single kernel sum may visit.
    #[arg(long, global = true)]
    pair_budget: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks and sweeps of an experiment file.
    Run { config: PathBuf },
    /// List every check with its parameters and defaults.
    ListChecks,
    /// Estimate the Muckenhoupt and Fujii–Wilson constants of a weight on the unit cube.
    Constants {
        /// Catalog id (`power:0.5`, `axis-power:-0.5`, ...) or an expression in x1..x4.
        weight: String,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        depth: u32,
        /// Comma-separated exponents p.
        #[arg(long, default_value = "1,2")]
        p: String,
        #[arg(long, default_value_t = 2)]
        shifts: usize,
    },
    /// Run one check for each value of a parameter and print a CSV table.
    Sweep {
        check: String,
        parameter: String,
        /// `a,b,c` or `start:stop:count`.
        range: String,
    },
}

fn apply_overrides(cli: &Cli, config: &mut ExperimentConfig) -> Result<()> {
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.resolution {
        if !n.is_power_of_two() || n < 4 {
            bail!("--resolution {n} must be a power of two of at least 4");
        }
        config.resolution = Some(n);
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        config.jobs = Some(jobs);
    }
    if let Some(dir) = &cli.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(budget) = cli.pair_budget {
        config.pair_budget = Some(budget);
    }
    Ok(())
}

fn run(cli: &Cli, path: &PathBuf) -> Result<i32> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut config = parse_config(&text)?;
    apply_overrides(cli, &mut config)?;
    let result = execute(&config)?;
    let written = write_artifacts(&result, &config.output_dir, config.timings)
        .with_context(|| format!("writing to {}", config.output_dir.display()))?;
    print!("{}", summary_table(&result.checks));
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(result.exit_status())
}

fn list_checks() {
    for entry in CATALOG {
        println!("{}  {}  [{:?}, {}]", entry.id, entry.title, entry.mode, entry.reference);
        println!("      {}", entry.anchor);
        for param in entry.params {
            println!("      {:<14} = {:<8} {}", param.name, param.default, param.doc);
        }
    }
}

fn constants(cli: &Cli, weight: &str, dim: usize, depth: u32, p: &str, shifts: usize) -> Result<i32> {
    let ps = parse_range(p).map_err(anyhow::Error::msg)?;
    let resolution = cli.resolution.unwrap_or(64);
    let grid = build_grid(Domain::unit(dim)?, &vec![resolution; dim])?;
    let w = make_weight(weight, grid)?;
    let report = weight_report(&w, &ps, depth, shifts, cli.seed.unwrap_or(0))?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(0)
}

fn sweep(cli: &Cli, check: &str, parameter: &str, range: &str) -> Result<i32> {
    let entry = lookup(check)?;
    let values = parse_range(range).map_err(anyhow::Error::msg)?;
    let mut config = ExperimentConfig::default();
    apply_overrides(cli, &mut config)?;
    let spec = SweepSpec { check: entry.id.into(), parameter: parameter.into(), values, params: Default::default() };
    if parameter != "resolution" && entry.param(parameter).is_none() {
        bail!("{} has no parameter `{parameter}`", entry.id);
    }
    config.sweeps.push(spec);
    let result = execute(&config)?;
    let table = &result.sweeps[0];
    print!("{}", sweep_csv(table));
    if let Some(dir) = &cli.output_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(sweep_file_name(&table.spec, 0));
        std::fs::write(&path, sweep_csv(table))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(result.exit_status())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match &cli.command {
        Command::Run { config } => run(&cli, config),
        Command::ListChecks => {
            list_checks();
            Ok(0)
        }
        Command::Constants { weight, dim, depth, p, shifts } => constants(&cli, weight, *dim, *depth, p, *shifts),
        Command::Sweep { check, parameter, range } => sweep(&cli, check, parameter, range),
    };
    match status {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
