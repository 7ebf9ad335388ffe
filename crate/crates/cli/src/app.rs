//! Command-line surface and command dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nzkl::equivalence::IdentityReport;
use nzkl::liouville::TlsModel;
use nzkl::TimeGrid;

use crate::config::{parse_config, ConfigError, Experiment, Overrides, FIG1_PRESET};
use crate::names::{CheckName, Scheme};
use crate::output::{save_reports, save_table, Table};
use crate::runner::{self, RunError, RunResult};
use crate::svg;

#[derive(Debug, Parser)]
#[command(name = "nzkl", version, about = "Memory kernels and generalized master equations for finite quantum systems")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON experiment config; the bundled fig1 preset when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "NZKL_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Override the grid step.
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Override the grid horizon.
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<f64>,
    /// Override every check tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Also render each table as an SVG plot.
    #[arg(long, global = true)]
    pub svg: bool,
    /// Override the random-system seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trajectory, kernels and the configured checks.
    Run,
    /// Kernel matrix over the configured index set.
    Kernels,
    /// Solve one master-equation scheme.
    Evolve {
        #[arg(long, value_parser = parse_name::<Scheme>)]
        scheme: Option<Scheme>,
    },
    /// Run identity checks (repeatable); the configured list when omitted.
    Verify {
        #[arg(long = "check", value_parser = parse_name::<CheckName>)]
        checks: Vec<CheckName>,
    },
    /// Solve two schemes and compare their populations.
    Compare {
        #[arg(long, value_parser = parse_name::<Scheme>)]
        a: Scheme,
        #[arg(long, value_parser = parse_name::<Scheme>)]
        b: Scheme,
    },
    /// Two-level reproduction at ε = 5/13, Δ = 12/13.
    Fig1,
}

fn parse_name<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

/// Files written and checks run by one command.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub reports: Vec<IdentityReport>,
    pub report_path: Option<PathBuf>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

struct Writer<'a> {
    dir: &'a Path,
    svg: bool,
    outcome: Outcome,
}

impl Writer<'_> {
    fn table(&mut self, stem: &str, table: &Table, title: &str) -> RunResult<()> {
        let path = self.dir.join(format!("{stem}.csv"));
        save_table(table, &path)?;
        self.outcome.files.push(path);
        if self.svg {
            let path = self.dir.join(format!("{stem}.svg"));
            std::fs::write(&path, svg::render(table, title))?;
            self.outcome.files.push(path);
        }
        Ok(())
    }

    fn reports(&mut self, reports: Vec<IdentityReport>) -> RunResult<()> {
        let path = self.dir.join("report.csv");
        save_reports(&reports, &path)?;
        self.outcome.files.push(path.clone());
        self.outcome.report_path = Some(path);
        self.outcome.reports = reports;
        Ok(())
    }
}

pub fn load_experiment(global: &GlobalArgs) -> RunResult<Experiment> {
    let text = match &global.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| ConfigError { path: String::new(), message: format!("cannot read {}: {e}", path.display()) })?,
        None => FIG1_PRESET.to_string(),
    };
    let overrides = Overrides { dt: global.dt, t_max: global.t_max, tol: global.tol, seed: global.seed };
    Ok(parse_config(&text)?.resolve(&overrides)?)
}

pub fn execute(cli: &Cli) -> RunResult<Outcome> {
    let g = &cli.global;
    std::fs::create_dir_all(&g.out)?;
    let mut w = Writer { dir: &g.out, svg: g.svg, outcome: Outcome::default() };
    match &cli.command {
        Command::Fig1 => {
            // The model is fixed; only the grid follows the overrides.
            let dt = g.dt.unwrap_or(1e-3);
            let t_max = g.t_max.unwrap_or(10.0);
            let grid = TimeGrid::with_horizon(dt, t_max).map_err(|e| ConfigError { path: "grid".into(), message: e.to_string() })?;
            let fig = runner::fig1(&TlsModel::reference(), &grid)?;
            w.table("fig1_kernels", &fig.kernels, "memory kernels K, K1, K0")?;
            w.table("fig1_dynamics", &fig.dynamics, "sigma0(t)")?;
            w.reports(fig.reports)?;
        }
        command => {
            let exp = load_experiment(g)?;
            match command {
                Command::Run => {
                    let run = runner::solve_scheme(&exp, exp.scheme)?;
                    w.table("trajectory", &runner::trajectory_table(&exp, &run)?, exp.scheme.name())?;
                    w.table("kernels", &runner::kernel_table(&exp)?, "memory kernels")?;
                    let reports = runner::run_checks(&exp, &exp.checks)?;
                    w.reports(reports)?;
                }
                Command::Kernels => {
                    w.table("kernels", &runner::kernel_table(&exp)?, "memory kernels")?;
                }
                Command::Evolve { scheme } => {
                    let scheme = scheme.unwrap_or(exp.scheme);
                    let run = runner::solve_scheme(&exp, scheme)?;
                    w.table("trajectory", &runner::trajectory_table(&exp, &run)?, scheme.name())?;
                }
                Command::Verify { checks } => {
                    let checks = if checks.is_empty() { exp.checks.clone() } else { checks.clone() };
                    if checks.is_empty() {
                        return Err(RunError::Usage(format!(
                            "no checks requested; pass --check or list `checks` in the config (one of: {})",
                            CheckName::ALL.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
                        )));
                    }
                    let reports = runner::run_checks(&exp, &checks)?;
                    w.reports(reports)?;
                }
                Command::Compare { a, b } => {
                    let (table, report) = runner::compare_schemes(&exp, *a, *b)?;
                    w.table("compare", &table, &report.name)?;
                    w.reports(vec![report])?;
                }
                Command::Fig1 => unreachable!("handled above"),
            }
        }
    }
    Ok(w.outcome)
}
