//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or configuration error,
//! 3 numerical abort.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use levyflux::harness::{self, ExperimentReport, CATALOG};
use levyflux::kinetic::{chi, dissipation};
use levyflux::output::OutDir;
use levyflux::solver::Solver;
use levyflux::{Error, Result, RunConfig};

const DEFAULT_OUTDIR: &str = "levyflux-out";

const OPERATOR_DEFAULT: &str = "[grid]\nL = 1\nN = 1024\n[model]\npreset = burgers(1,2)\nalpha = 0.5\n[solver]\nT = 1\n";

#[derive(Parser, Debug)]
#[command(name = "levyflux", version, about = "Fractional conservation-law solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (INI-style).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (falls back to io.outdir, then $LEVYFLUX_OUTDIR).
    #[arg(long, global = true)]
    outdir: Option<PathBuf>,

    /// Seed overriding experiment.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the configured problem and write trajectory, diagnostics and
    /// kinetic tables.
    Run,
    /// Run one catalog experiment (default config when --config is absent).
    Experiment { name: String },
    /// Check the discrete operator: symbol, convexity, weight table.
    OperatorCheck {
        /// Number of random fields for the convexity check.
        #[arg(long, default_value_t = 100)]
        fields: usize,
    },
    /// Repeat the run over the values in the [sweep] section.
    Sweep,
    /// Print the experiment catalog.
    List,
}

enum Outcome {
    Pass,
    ChecksFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("levyflux: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::parse(&text)
}

fn config(cli: &Cli, fallback: Option<&str>) -> Result<RunConfig> {
    let mut cfg = match (&cli.config, fallback) {
        (Some(p), _) => load(p)?,
        (None, Some(text)) => RunConfig::parse(text)?,
        (None, None) => return Err(Error::Usage("this command needs --config PATH".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    Ok(cfg)
}

fn outdir(cli: &Cli, cfg: &RunConfig) -> Result<OutDir> {
    let root = cli
        .outdir
        .clone()
        .or_else(|| cfg.outdir.clone())
        .or_else(|| std::env::var_os("LEVYFLUX_OUTDIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTDIR));
    OutDir::create(root)
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::List => {
            for (name, about) in CATALOG {
                println!("{name:<16} {about}");
            }
            Ok(Outcome::Pass)
        }
        Command::Run => run(cli),
        Command::Experiment { name } => {
            let default = harness::default_config_text(name)?;
            let cfg = config(cli, Some(&default))?;
            let report = harness::run_experiment(name, &cfg)?;
            finish(cli, &cfg, report, name)
        }
        Command::OperatorCheck { fields } => {
            let cfg = config(cli, Some(OPERATOR_DEFAULT))?;
            let report = harness::operator_check(&cfg, *fields, 0.05)?;
            let out = outdir(cli, &cfg)?;
            if let Some(w) = report.series.iter().find(|s| s.name == "weights") {
                out.series_csv("weights.csv", w)?;
            }
            finish(cli, &cfg, report, "operator_check")
        }
        Command::Sweep => sweep(cli),
    }
}

fn finish(cli: &Cli, cfg: &RunConfig, mut report: ExperimentReport, dir: &str) -> Result<Outcome> {
    let mut out = outdir(cli, cfg)?.child(dir)?;
    out.write_report(&mut report)?;
    for c in &report.checks {
        eprintln!(
            "[{}] {} lhs={:e} rhs={:e} tol={:e}",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.lhs,
            c.rhs,
            c.tol
        );
    }
    let failed = report.failures().count();
    eprintln!(
        "{}: {} of {} checks passed; report in {}",
        report.name,
        report.checks.len() - failed,
        report.checks.len(),
        out.root().display()
    );
    Ok(if failed == 0 { Outcome::Pass } else { Outcome::ChecksFailed })
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = config(cli, None)?;
    let mut out = outdir(cli, &cfg)?;
    let rho0 = cfg.initial_field();
    let solver = Solver::new(cfg.solver.clone())?;
    let traj = solver.run(&rho0)?;
    out.trajectory_csv("trajectory.csv", &traj)?;
    out.diagnostics_csv("diagnostics.csv", &traj)?;

    let vg = cfg.vgrid_for(&rho0)?;
    let last = traj.last();
    match vg.check_covers(last) {
        Ok(()) => {
            out.kinetic_field_csv("kinetic_chi.csv", &chi(last, &vg)?)?;
            out.dissipation_csv("kinetic", &dissipation(last, solver.operator(), &vg, &cfg.model)?, &vg)?;
        }
        Err(e) => eprintln!("skipping kinetic tables: {e}"),
    }

    let mut profile = empty_series("profile", &["x", "rho0", "rhoT"]);
    for i in 0..cfg.grid.n_cells() {
        profile.rows.push(vec![cfg.grid.x(i), rho0.values()[i], last.values()[i]]);
    }
    let mut diag = empty_series("diagnostics", &["t", "mass", "l1", "bv", "linf"]);
    for d in &traj.diagnostics {
        diag.rows.push(vec![d.time, d.mass, d.l1, d.bv, d.linf]);
    }
    out.series_dat(&profile)?;
    out.series_dat(&diag)?;
    out.finish_manifest()?;
    let d = traj.diagnostics.last().expect("at least one output");
    eprintln!(
        "run: {} steps to T = {}; mass {} l1 {} bv {}; files in {}",
        traj.steps,
        cfg.solver.horizon,
        d.mass,
        d.l1,
        d.bv,
        out.root().display()
    );
    Ok(Outcome::Pass)
}

fn empty_series(name: &str, cols: &[&str]) -> harness::Series {
    harness::Series {
        name: name.into(),
        columns: cols.iter().map(|c| c.to_string()).collect(),
        rows: Vec::new(),
    }
}

fn sweep(cli: &Cli) -> Result<Outcome> {
    let cfg = config(cli, None)?;
    let spec = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Usage("sweep needs a [sweep] section with param and values".into()))?;
    let mut out = outdir(cli, &cfg)?;
    let mut rows = Vec::new();
    for &value in &spec.values {
        let c = cfg.with_sweep_value(spec.param, value)?;
        let traj = Solver::new(c.solver.clone())?.run(&c.initial_field())?;
        let d = traj.diagnostics.last().expect("at least one output");
        rows.push([value, d.mass, d.l1, d.bv, d.linf, traj.steps as f64, traj.max_dt()]);
        eprintln!("sweep {} = {value}: mass {} l1 {} bv {}", spec.param.key(), d.mass, d.l1, d.bv);
    }
    out.sweep_csv("sweep.csv", &rows)?;
    let mut s = empty_series("sweep", &["value", "mass", "l1", "bv", "linf"]);
    s.rows = rows.iter().map(|r| r[..5].to_vec()).collect();
    out.series_dat(&s)?;
    out.finish_manifest()?;
    Ok(Outcome::Pass)
}
