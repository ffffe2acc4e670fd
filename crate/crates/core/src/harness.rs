//! Named experiments that run the solver and evaluate both sides of the
//! stability, comparison and continuous-dependence inequalities.
//!
//! Each experiment takes a [`RunConfig`] and returns an
//! [`ExperimentReport`]; reports are deterministic given the config and
//! seed. Inequality checks pass when `lhs ≤ rhs + tol`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fractional::{interpolation_constant, levy_difference_bound, FractionalOperator};
use crate::grid::{Boundary, Field};
use crate::kinetic::{dissipation_n, entropy_residual, measure_budget, TestBank};
use crate::physics::{Flux, ModelSpec, Source};
use crate::solver::{Solver, SolverConfig, Trajectory};

/// Experiment names with a one-line summary.
pub const CATALOG: &[(&str, &str)] = &[
    ("contraction", "L1 contraction of two solutions, exp(M1 t) envelope with a source"),
    ("comparison", "ordered data stay ordered; nonnegative data stay nonnegative"),
    ("stability", "L1 and BV bounds along a single run, mass conservation"),
    ("time_lipschitz", "Lipschitz continuity in time of t -> rho(t) in L1"),
    ("dep_nu", "continuous dependence on the viscosity coefficient nu"),
    ("dep_flux", "continuous dependence on the flux"),
    ("dep_alpha", "Lipschitz dependence on the Levy measure (alpha vs beta)"),
    ("limit_nu0", "O(nu) convergence to the inviscid conservation law, mass identity"),
    ("limit_alpha0", "alpha -> 0 convergence to the damped conservation law, mass loss"),
    ("burgers_fisher", "nonnegativity and exponential decay for Burgers-Fisher sources"),
    ("viscous_limit", "Cauchy property of vanishing-viscosity solutions in C([0,T];L1)"),
    ("kinetic_certify", "dissipation sign, measure budget and entropy-inequality residual"),
];

/// One numerical inequality `lhs ≤ rhs + tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub description: String,
    /// The statement being checked, quoted in words.
    pub anchor: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn leq(
        name: impl Into<String>,
        description: impl Into<String>,
        anchor: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tol: f64,
    ) -> Self {
        Check {
            name: name.into(),
            description: description.into(),
            anchor: anchor.into(),
            lhs,
            rhs,
            tol,
            pass: lhs <= rhs + tol,
        }
    }

    /// Margin `rhs + tol − lhs` (negative when failing).
    pub fn margin(&self) -> f64 {
        self.rhs + self.tol - self.lhs
    }
}

/// Tabular data for plotting.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    fn new(name: &str, columns: &[&str]) -> Self {
        Series {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: &[f64]) {
        self.rows.push(row.to_vec());
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub observables: Vec<(String, f64)>,
    pub series: Vec<Series>,
    /// Files written for this report (filled in by the caller that writes
    /// them).
    pub artifacts: Vec<PathBuf>,
}

impl ExperimentReport {
    fn new(name: &str) -> Self {
        ExperimentReport {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn observable(&self, name: &str) -> Option<f64> {
        self.observables.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    fn param(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.into(), value.to_string());
    }

    fn observe(&mut self, key: impl Into<String>, value: f64) {
        self.observables.push((key.into(), value));
    }

    fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// `key: value` text, one block per check.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.name);
        let _ = writeln!(s, "pass: {}", self.passed());
        let _ = writeln!(s, "checks: {}", self.checks.len());
        let _ = writeln!(s, "failed: {}", self.failures().count());
        for (k, v) in &self.params {
            let _ = writeln!(s, "param.{k}: {v}");
        }
        for (k, v) in &self.observables {
            let _ = writeln!(s, "observable.{k}: {v}");
        }
        for a in &self.artifacts {
            let _ = writeln!(s, "artifact: {}", a.display());
        }
        for c in &self.checks {
            let _ = writeln!(s);
            let _ = writeln!(s, "check: {}", c.name);
            let _ = writeln!(s, "description: {}", c.description);
            let _ = writeln!(s, "anchor: {}", c.anchor);
            let _ = writeln!(s, "lhs: {}", c.lhs);
            let _ = writeln!(s, "rhs: {}", c.rhs);
            let _ = writeln!(s, "tol: {}", c.tol);
            let _ = writeln!(s, "margin: {}", c.margin());
            let _ = writeln!(s, "pass: {}", c.pass);
        }
        s
    }
}

/// Typed access to `experiment.params` with a per-experiment whitelist.
struct Params<'a> {
    raw: &'a BTreeMap<String, Vec<String>>,
}

impl<'a> Params<'a> {
    fn new(cfg: &'a RunConfig, experiment: &str, allowed: &[&str]) -> Result<Self> {
        if let Some(bad) = cfg.experiment.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::validation(
                format!("experiment.params.{bad}"),
                format!("is not a parameter of `{experiment}` (allowed: {})", allowed.join(", ")),
            ));
        }
        Ok(Params {
            raw: &cfg.experiment.params,
        })
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw.get(key) {
            None => Ok(default.to_vec()),
            Some(vals) => vals
                .iter()
                .map(|v| {
                    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| {
                        Error::validation(format!("experiment.params.{key}"), format!("bad number `{v}`"))
                    })
                })
                .collect(),
        }
    }

    fn number(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.list(key, &[default])?;
        if v.len() != 1 {
            return Err(Error::validation(format!("experiment.params.{key}"), "expects a single value"));
        }
        Ok(v[0])
    }

    fn text(&self, key: &str, default: &str) -> Result<String> {
        match self.raw.get(key) {
            None => Ok(default.into()),
            Some(v) if v.len() == 1 => Ok(v[0].clone()),
            Some(_) => Err(Error::validation(format!("experiment.params.{key}"), "expects a single value")),
        }
    }
}

fn range_of(fields: &[&Field], boundary: Boundary) -> (f64, f64) {
    let mut lo = fields.iter().fold(f64::INFINITY, |m, f| m.min(f.min()));
    let mut hi = fields.iter().fold(f64::NEG_INFINITY, |m, f| m.max(f.max()));
    if boundary == Boundary::ZeroExtension {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    (lo, hi)
}

/// Range that solutions from data in `[lo, hi]` cannot leave before `t`.
fn invariant_range(model: &ModelSpec, lo: f64, hi: f64, t: f64) -> (f64, f64) {
    match &model.source {
        Source::None => (lo, hi),
        Source::BurgersFisher { .. } => (lo.min(0.0), hi.max(1.0)),
        _ => {
            let g = (model.m1 * t).exp().max(1.0);
            (lo * g, hi * g)
        }
    }
}

/// Caps `max_dt` of every config by the smallest stable step over the
/// invariant range of `data`, so the runs share one step sequence.
fn share_steps(configs: &mut [SolverConfig], data: &[&Field]) -> Result<f64> {
    let Some(first) = configs.first() else {
        return Err(Error::Usage("no runs to align".into()));
    };
    let (lo, hi) = range_of(data, first.grid.boundary());
    let mut dt = f64::INFINITY;
    for c in configs.iter() {
        let (a, b) = invariant_range(&c.model, lo, hi, c.horizon);
        dt = dt.min(Solver::new(c.clone())?.stable_dt_over(a, b));
    }
    for c in configs.iter_mut() {
        c.max_dt = Some(dt);
    }
    Ok(dt)
}

fn simulate(cfg: &SolverConfig, rho0: &Field) -> Result<Trajectory> {
    Solver::new(cfg.clone())?.run(rho0)
}

/// `max_t ‖a(t) − b(t)‖` restricted to `[lo, hi]`.
fn sup_distance_on(a: &Trajectory, b: &Trajectory, lo: f64, hi: f64) -> Result<f64> {
    a.snapshots
        .iter()
        .zip(&b.snapshots)
        .try_fold(0.0f64, |m, ((_, x), (_, y))| Ok(m.max(x.l1_distance_on(y, lo, hi)?)))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn describe_common(report: &mut ExperimentReport, cfg: &RunConfig) {
    let m = &cfg.model;
    report.param("grid.L", cfg.grid.length());
    report.param("grid.N", cfg.grid.n_cells());
    report.param("grid.boundary", cfg.grid.boundary());
    report.param("model.preset", &cfg.preset);
    report.param("model.source", source_name(&m.source));
    report.param("model.nu", m.nu);
    report.param("model.alpha", m.alpha);
    report.param("model.eps", m.eps);
    report.param("initial.rho0", &cfg.rho0);
    report.param("solver.T", cfg.solver.horizon);
    report.param("solver.cfl", cfg.solver.cfl);
    report.param("solver.scheme", cfg.solver.time_scheme);
    report.param("solver.flux", cfg.solver.flux_scheme);
    report.param("experiment.seed", cfg.experiment.seed);
}

fn source_name(s: &Source) -> String {
    match s {
        Source::None => "none".into(),
        Source::Linear { rate } => format!("linear({rate})"),
        Source::BurgersFisher { beta, k } => format!("logistic({beta},{k})"),
        Source::Custom { name, .. } => name.clone(),
    }
}

/// Runs the named catalog experiment.
pub fn run_experiment(name: &str, cfg: &RunConfig) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new(name);
    describe_common(&mut report, cfg);
    match name {
        "contraction" => contraction(cfg, &mut report)?,
        "comparison" => comparison(cfg, &mut report)?,
        "stability" => stability(cfg, &mut report)?,
        "time_lipschitz" => time_lipschitz(cfg, &mut report)?,
        "dep_nu" => dep_nu(cfg, &mut report)?,
        "dep_flux" => dep_flux(cfg, &mut report)?,
        "dep_alpha" => dep_alpha(cfg, &mut report)?,
        "limit_nu0" => limit_nu0(cfg, &mut report)?,
        "limit_alpha0" => limit_alpha0(cfg, &mut report)?,
        "burgers_fisher" => burgers_fisher(cfg, &mut report)?,
        "viscous_limit" => viscous_limit(cfg, &mut report)?,
        "kinetic_certify" => kinetic_certify(cfg, &mut report)?,
        other => {
            let names: Vec<&str> = CATALOG.iter().map(|(n, _)| *n).collect();
            return Err(Error::Usage(format!(
                "unknown experiment `{other}`; catalog: {}",
                names.join(", ")
            )));
        }
    }
    Ok(report)
}

/// Desk-scale configuration text for a catalog entry.
pub fn default_config_text(name: &str) -> Result<String> {
    let body = match name {
        "contraction" => {
            "[grid]\nL = 2\nN = 128\n[model]\npreset = burgers(1,2)\nnu = 0.1\nalpha = 0.5\n\
             [initial]\nrho0 = step(1,0,1)\nrho0_b = step(0.25,0.75,0.6)\n[solver]\nT = 0.5\noutput_times = uniform(10)\n"
        }
        "comparison" => {
            "[grid]\nL = 2\nN = 128\n[model]\npreset = burgers(1,2)\nnu = 0.1\nalpha = 0.5\n\
             [initial]\nrho0 = step(1,0,1)\n[solver]\nT = 0.5\noutput_times = uniform(10)\n"
        }
        "stability" | "time_lipschitz" => {
            "[grid]\nL = 2\nN = 256\n[model]\npreset = burgers(1,2)\nnu = 0.1\nalpha = 0.5\n\
             [initial]\nrho0 = step(1,0,1)\n[solver]\nT = 0.5\noutput_times = uniform(20)\n"
        }
        "dep_nu" => {
            "[grid]\nL = 4\nN = 256\n[model]\npreset = burgers(1,2)\nnu = 0.2\nalpha = 0.5\n\
             [initial]\nrho0 = hat(1,0.5)\n[solver]\nT = 0.5\noutput_times = uniform(20)\n\
             [experiment]\nparams = nu_b: 0.1\n"
        }
        "dep_flux" => {
            "[grid]\nL = 4\nN = 256\n[model]\npreset = burgers(1,2)\nnu = 0.1\nalpha = 0.5\n\
             [initial]\nrho0 = hat(1,0.5)\n[solver]\nT = 0.5\noutput_times = uniform(20)\n\
             [experiment]\nparams = flux_b: burgers(1.2,2)\n"
        }
        "dep_alpha" => {
            "[grid]\nL = 4\nN = 256\n[model]\npreset = burgers(1,2)\nnu = 0.1\nalpha = 0.5\n\
             [initial]\nrho0 = hat(1,0.5)\n[solver]\nT = 0.5\noutput_times = uniform(20)\n\
             [experiment]\nparams = gaps: 0.1 0.05 0.025\n"
        }
        "limit_nu0" => {
            "[grid]\nL = 4\nN = 512\n[model]\npreset = burgers(1,2)\nnu = 0.2\nalpha = 0.5\n\
             [initial]\nrho0 = hat(1,0.5)\n[solver]\nT = 0.5\noutput_times = uniform(20)\n"
        }
        "limit_alpha0" => {
            "[grid]\nL = 8\nN = 256\nboundary = zero_extension\n[model]\npreset = burgers(1,2)\nnu = 1\nalpha = 0.5\n\
             [initial]\nrho0 = hat(1,0.5)\n[solver]\nT = 0.5\noutput_times = uniform(20)\n\
             [experiment]\nparams = alphas: 0.4 0.2 0.1 0.05; window: 0.5\n"
        }
        "burgers_fisher" => {
            "[grid]\nL = 4\nN = 256\n[model]\npreset = burgers_fisher(1,2,1,2)\nnu = 0.1\nalpha = 0.5\n\
             [initial]\nrho0 = hat(1,0.5)\n[solver]\nT = 1\noutput_times = uniform(20)\n\
             [experiment]\nparams = decay: 1\n"
        }
        "viscous_limit" => {
            "[grid]\nL = 2\nN = 256\n[model]\npreset = burgers(1,2)\nnu = 0.1\nalpha = 0.5\n\
             [initial]\nrho0 = step(1,0,1)\n[solver]\nT = 0.5\noutput_times = uniform(20)\n\
             [experiment]\nparams = eps: 0.02 0.01 0.005\n"
        }
        "kinetic_certify" => {
            "[grid]\nL = 2\nN = 128\n[model]\npreset = burgers(1,2)\nnu = 0.1\nalpha = 0.5\n\
             [initial]\nrho0 = step(1,0,1)\n[solver]\nT = 0.5\n[vgrid]\nnv = 64\n\
             [experiment]\nparams = alphas: 0.25 0.5 0.75; refine: 64 128 256\n"
        }
        other => {
            let names: Vec<&str> = CATALOG.iter().map(|(n, _)| *n).collect();
            return Err(Error::Usage(format!(
                "unknown experiment `{other}`; catalog: {}",
                names.join(", ")
            )));
        }
    };
    Ok(merge_experiment(body, name))
}

fn merge_experiment(body: &str, name: &str) -> String {
    if body.contains("[experiment]\n") {
        body.replace("[experiment]\n", &format!("[experiment]\nname = {name}\n"))
    } else {
        format!("{body}[experiment]\nname = {name}\n")
    }
}

/// Parsed desk-scale configuration for a catalog entry.
pub fn default_config(name: &str) -> Result<RunConfig> {
    RunConfig::parse(&default_config_text(name)?)
}

const CONTRACTION: &str = "‖ρ₁(t)−ρ₂(t)‖_{L¹} ≤ exp(M₁t)‖ρ₀,₁−ρ₀,₂‖_{L¹}";

fn contraction(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    let p = Params::new(cfg, "contraction", &["perturbation"])?;
    let a = cfg.initial_field();
    let b = match &cfg.rho0_b {
        Some(profile) => profile.sample(&cfg.grid),
        None => {
            let amp = p.number("perturbation", 0.1)?;
            report.param("perturbation", amp);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.experiment.seed);
            let noise: Vec<f64> = a.values().iter().map(|&v| v + amp * rng.gen_range(-1.0..=1.0)).collect();
            Field::new(cfg.grid, noise)?
        }
    };
    if let Some(pb) = &cfg.rho0_b {
        report.param("initial.rho0_b", pb);
    }
    let mut runs = [cfg.solver.clone(), cfg.solver.clone()];
    let dt = share_steps(&mut runs, &[&a, &b])?;
    report.param("shared_max_dt", dt);
    let ta = simulate(&runs[0], &a)?;
    let tb = simulate(&runs[1], &b)?;
    let m1 = cfg.model.m1;
    let d0 = a.l1_distance(&b)?;
    // absolute slack without a source, relative slack on the exp(M1 t) envelope
    let tol_of = |bound: f64| if m1 > 0.0 { 1e-6 * bound } else { 1e-10 };
    let mut series = Series::new("contraction", &["t", "distance", "bound"]);
    for ((t, fa), (_, fb)) in ta.snapshots.iter().zip(&tb.snapshots) {
        let d = fa.l1_distance(fb)?;
        let bound = (m1 * t).exp() * d0;
        series.push(&[*t, d, bound]);
        report.push(Check::leq(
            format!("l1_contraction@t={t}"),
            "L1 distance of the two solutions against the contraction envelope",
            CONTRACTION,
            d,
            bound,
            tol_of(bound),
        ));
    }
    report.observe("initial_distance", d0);
    report.observe("final_distance", ta.last().l1_distance(tb.last())?);
    report.observe("m1", m1);
    report.series.push(series);
    Ok(())
}

fn comparison(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    let p = Params::new(cfg, "comparison", &["offset"])?;
    let upper = cfg.initial_field();
    let lower = match &cfg.rho0_b {
        Some(profile) => profile.sample(&cfg.grid),
        None => {
            let off = p.number("offset", 0.1)?;
            report.param("offset", off);
            upper.map(|v| v - off)
        }
    };
    let (lower, upper) = if lower.values().iter().zip(upper.values()).all(|(l, u)| l <= u) {
        (lower, upper)
    } else if upper.values().iter().zip(lower.values()).all(|(l, u)| l <= u) {
        (upper, lower)
    } else {
        return Err(Error::validation("initial.rho0_b", "comparison needs ordered initial data"));
    };
    let mut runs = [cfg.solver.clone(), cfg.solver.clone()];
    share_steps(&mut runs, &[&lower, &upper])?;
    let tl = simulate(&runs[0], &lower)?;
    let tu = simulate(&runs[1], &upper)?;
    let mut series = Series::new("comparison", &["t", "max_violation", "min_lower", "min_upper"]);
    let mut worst = f64::NEG_INFINITY;
    for ((t, fl), (_, fu)) in tl.snapshots.iter().zip(&tu.snapshots) {
        let v = fl
            .values()
            .iter()
            .zip(fu.values())
            .fold(f64::NEG_INFINITY, |m, (a, b)| m.max(a - b));
        worst = worst.max(v);
        series.push(&[*t, v, fl.min(), fu.min()]);
        report.push(Check::leq(
            format!("ordering@t={t}"),
            "largest cellwise excess of the lower solution over the upper one",
            "if ρ₀,₁ ≤ ρ₀,₂ then ρ₁ ≤ ρ₂",
            v,
            0.0,
            1e-12,
        ));
    }
    for (label, data, traj) in [("lower", &lower, &tl), ("upper", &upper, &tu)] {
        if data.min() >= 0.0 {
            let min = traj.snapshots.iter().fold(f64::INFINITY, |m, (_, f)| m.min(f.min()));
            report.push(Check::leq(
                format!("nonnegative_{label}"),
                "negative part of a solution with nonnegative data",
                "if the initial value is nonnegative, the solution is nonnegative as well",
                -min,
                0.0,
                1e-12,
            ));
        }
    }
    report.observe("max_ordering_violation", worst);
    report.series.push(series);
    Ok(())
}

fn stability(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    Params::new(cfg, "stability", &[])?;
    let rho0 = cfg.initial_field();
    let traj = simulate(&cfg.solver, &rho0)?;
    let n0 = rho0.norms();
    let m1 = cfg.model.m1;
    let conserving = cfg.grid.boundary() == Boundary::Periodic && cfg.model.source.is_none();
    let mass0 = rho0.mass();
    let mut series = Series::new("stability", &["t", "l1", "bv", "mass"]);
    for d in &traj.diagnostics {
        let g = (m1 * d.time).exp();
        series.push(&[d.time, d.l1, d.bv, d.mass]);
        report.push(Check::leq(
            format!("l1_bound@t={}", d.time),
            "L1 norm against exp(M1 t) times its initial value",
            "‖ρ(t)‖_{L¹} ≤ exp(M₁t)‖ρ₀‖_{L¹}",
            d.l1,
            g * n0.l1,
            1e-10,
        ));
        report.push(Check::leq(
            format!("bv_bound@t={}", d.time),
            "total variation against exp(M1 t) times its initial value",
            "‖ρ(t)‖_{BV} ≤ exp(M₁t)‖ρ₀‖_{BV}",
            d.bv,
            g * n0.bv,
            1e-10,
        ));
        if conserving {
            report.push(Check::leq(
                format!("mass@t={}", d.time),
                "relative mass drift on a periodic domain without source",
                "∫ρ(t,x)dx = ∫ρ₀(x)dx",
                (d.mass - mass0).abs() / mass0.abs().max(f64::MIN_POSITIVE),
                0.0,
                1e-10,
            ));
        }
    }
    report.observe("steps", traj.steps as f64);
    report.observe("l1_0", n0.l1);
    report.observe("bv_0", n0.bv);
    report.series.push(series);
    Ok(())
}

fn time_lipschitz(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    let p = Params::new(cfg, "time_lipschitz", &["c_slack"])?;
    let c_slack = p.number("c_slack", 1.0)?;
    let m = &cfg.model;
    let rho0 = cfg.initial_field();
    let traj = simulate(&cfg.solver, &rho0)?;
    let n0 = rho0.norms();
    let (lo, hi) = invariant_range(m, rho0.min(), rho0.max(), cfg.solver.horizon);
    let (lo, hi) = if cfg.grid.boundary() == Boundary::ZeroExtension {
        (lo.min(0.0), hi.max(0.0))
    } else {
        (lo, hi)
    };
    let growth = (m.m1 * cfg.solver.horizon).exp().max(1.0);
    let interp = n0.l1.powf(1.0 - m.alpha) * n0.bv.powf(m.alpha);
    let fprime = m.flux.max_speed(lo, hi);
    let c_alpha = interpolation_constant(m.alpha)?;
    let b_slope = m.diffusion.max_slope(lo, hi);
    let h = cfg.grid.spacing();
    let source_lip = m.source.negative_slope(lo, hi).max(m.m1.abs());
    let bound = growth
        * (fprime * n0.bv
            + m.nu * b_slope * c_alpha * interp
            + 2.0 * m.eps * n0.bv / h
            + source_lip * n0.l1);
    let tol = c_slack * (h + traj.max_dt());
    let mut series = Series::new("time_lipschitz", &["t_mid", "quotient"]);
    let mut worst = 0.0f64;
    for w in traj.snapshots.windows(2) {
        let (s, fs) = (&w[0].0, &w[0].1);
        let (t, ft) = (&w[1].0, &w[1].1);
        let q = ft.l1_distance(fs)? / (t - s);
        worst = worst.max(q);
        series.push(&[0.5 * (s + t), q]);
        report.push(Check::leq(
            format!("time_quotient@t={t}"),
            "‖ρ(t)−ρ(s)‖/|t−s| against ‖F′‖ bv₀ + ν C_α l1₀^{1−α} bv₀^α (+ ε, source terms)",
            "Lipschitz continuous in t",
            q,
            bound,
            tol,
        ));
    }
    report.param("c_slack", c_slack);
    report.observe("max_quotient", worst);
    report.observe("flux_term", fprime * n0.bv);
    report.observe("interpolation_constant", c_alpha);
    // the constant in front of l1^{1−α} bv^α that the run actually needed
    if m.nu > 0.0 && interp > 0.0 {
        report.observe("c_obs", ((worst - fprime * n0.bv) / (m.nu * interp)).max(0.0));
    }
    report.series.push(series);
    Ok(())
}

fn dep_nu(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    let p = Params::new(cfg, "dep_nu", &["nu_b", "c_slack"])?;
    let nu_b = p.number("nu_b", 0.5 * cfg.model.nu)?;
    let c_slack = p.number("c_slack", 1.0)?;
    report.param("nu_b", nu_b);
    report.param("c_slack", c_slack);
    let rho0 = cfg.initial_field();
    let mut runs = [
        cfg.solver.clone(),
        cfg.solver_for(cfg.model.clone().with_nu(nu_b)?, cfg.grid),
    ];
    share_steps(&mut runs, &[&rho0])?;
    let ta = simulate(&runs[0], &rho0)?;
    let tb = simulate(&runs[1], &rho0)?;
    let n0 = rho0.norms();
    let alpha = cfg.model.alpha;
    let t_end = cfg.solver.horizon;
    let interp = n0.l1.powf(1.0 - alpha) * n0.bv.powf(alpha);
    let dnu = (cfg.model.nu - nu_b).abs();
    let dist = ta.sup_distance(&tb)?;
    let tol = c_slack * (cfg.grid.spacing() + ta.max_dt());
    report.push(Check::leq(
        "nu_dependence",
        "sup_t ‖ρ^{ν₁}−ρ^{ν₂}‖_{L¹} against T|ν₁−ν₂| l1₀^{1−α} bv₀^α",
        "Continuous in the nonlinearities and viscosity coefficients",
        dist,
        t_end * dnu * interp,
        tol,
    ));
    let c_alpha = interpolation_constant(alpha)?;
    report.push(Check::leq(
        "nu_dependence_interpolation",
        "same distance against T|ν₁−ν₂| C_α l1₀^{1−α} bv₀^α, C_α the sharp L¹ bound of (−Δ)^{α/2} on BV",
        "Continuous in the nonlinearities and viscosity coefficients",
        dist,
        t_end * dnu * c_alpha * interp,
        tol,
    ));
    let mut series = Series::new("dep_nu", &["t", "distance"]);
    for ((t, a), (_, b)) in ta.snapshots.iter().zip(&tb.snapshots) {
        series.push(&[*t, a.l1_distance(b)?]);
    }
    report.observe("distance", dist);
    report.observe("distance_over_bound", dist / (t_end * dnu * interp));
    report.observe("interpolation_constant", c_alpha);
    report.series.push(series);
    Ok(())
}

fn dep_flux(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    let p = Params::new(cfg, "dep_flux", &["flux_b", "c_slack"])?;
    let preset_b = p.text("flux_b", "burgers(1.2,2)")?;
    let c_slack = p.number("c_slack", 1.0)?;
    report.param("flux_b", &preset_b);
    report.param("c_slack", c_slack);
    let m = &cfg.model;
    let flux_b: Flux = ModelSpec::from_preset(&preset_b, m.nu, m.alpha, m.eps)
        .map_err(|e| match e {
            Error::Configuration(msg) => Error::validation("experiment.params.flux_b", msg),
            other => other,
        })?
        .flux;
    let rho0 = cfg.initial_field();
    let mut runs = [cfg.solver.clone(), cfg.solver_for(m.clone().with_flux(flux_b.clone())?, cfg.grid)];
    share_steps(&mut runs, &[&rho0])?;
    let ta = simulate(&runs[0], &rho0)?;
    let tb = simulate(&runs[1], &rho0)?;
    let (lo, hi) = range_of(&[&rho0], cfg.grid.boundary());
    let (lo, hi) = invariant_range(m, lo, hi, cfg.solver.horizon);
    let samples = 2001;
    let dspeed = (0..samples)
        .map(|k| lo + (hi - lo) * k as f64 / (samples - 1) as f64)
        .fold(0.0f64, |acc, u| acc.max((m.flux.speed(u) - flux_b.speed(u)).abs()));
    let n0 = rho0.norms();
    let t_end = cfg.solver.horizon;
    let dist = ta.sup_distance(&tb)?;
    report.push(Check::leq(
        "flux_dependence",
        "sup_t ‖ρ¹−ρ²‖_{L¹} against T bv₀ ‖F′₁−F′₂‖_∞ over the range of the data",
        "Continuous in the nonlinearities and viscosity coefficients",
        dist,
        t_end * n0.bv * dspeed,
        c_slack * (cfg.grid.spacing() + ta.max_dt()),
    ));
    let mut series = Series::new("dep_flux", &["t", "distance"]);
    for ((t, a), (_, b)) in ta.snapshots.iter().zip(&tb.snapshots) {
        series.push(&[*t, a.l1_distance(b)?]);
    }
    report.observe("distance", dist);
    report.observe("speed_gap", dspeed);
    report.series.push(series);
    Ok(())
}

fn dep_alpha(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    let p = Params::new(cfg, "dep_alpha", &["center", "gaps", "c_slack"])?;
    let center = p.number("center", cfg.model.alpha)?;
    let gaps = p.list("gaps", &[0.1, 0.05, 0.025])?;
    let c_slack = p.number("c_slack", 1.0)?;
    report.param("center", center);
    report.param("gaps", format!("{gaps:?}"));
    report.param("c_slack", c_slack);
    let rho0 = cfg.initial_field();
    let n0 = rho0.norms();
    let t_end = cfg.solver.horizon;
    let m = &cfg.model;
    let (lo, hi) = range_of(&[&rho0], cfg.grid.boundary());
    let b_slope = m.diffusion.max_slope(lo, hi);
    let mut series = Series::new("dep_alpha", &["gap", "distance", "bound", "ratio"]);
    for &gap in &gaps {
        let (a, b) = (center - 0.5 * gap, center + 0.5 * gap);
        let mut runs = [
            cfg.solver_for(m.clone().with_alpha(a)?, cfg.grid),
            cfg.solver_for(m.clone().with_alpha(b)?, cfg.grid),
        ];
        share_steps(&mut runs, &[&rho0])?;
        let ta = simulate(&runs[0], &rho0)?;
        let tb = simulate(&runs[1], &rho0)?;
        let dist = ta.sup_distance(&tb)?;
        let r1 = if n0.bv > 0.0 { 2.0 * n0.l1 / n0.bv } else { 1.0 };
        let bound = t_end * m.nu * b_slope * levy_difference_bound(a, b, n0.l1, n0.bv, r1, f64::INFINITY)?;
        let ratio = dist / gap;
        series.push(&[gap, dist, bound, ratio]);
        report.push(Check::leq(
            format!("alpha_dependence@gap={gap}"),
            "sup_t ‖ρ_α−ρ_β‖_{L¹} against T ν ∫‖ρ₀(·+z)−ρ₀‖_{L¹} d|μ_α−μ_β|",
            "Lipschitz continuous in Lévy measure",
            dist,
            bound,
            c_slack * (cfg.grid.spacing() + ta.max_dt()),
        ));
        report.push(Check::leq(
            format!("ratio_finite@gap={gap}"),
            "the difference quotient distance/|α−β| is finite",
            "Lipschitz continuous in Lévy measure",
            if ratio.is_finite() { 0.0 } else { 1.0 },
            0.0,
            0.0,
        ));
        report.observe(format!("ratio@gap={gap}"), ratio);
        // limsup quotient normalized by T l1^{1−λ} bv^λ (1 + |log(l1/bv)|)
        let scale = t_end
            * n0.l1.powf(1.0 - center)
            * n0.bv.powf(center)
            * (1.0 + (n0.l1 / n0.bv).ln().abs());
        report.observe(format!("normalized_ratio@gap={gap}"), ratio / scale);
    }
    report.series.push(series);
    Ok(())
}

fn limit_nu0(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    let p = Params::new(cfg, "limit_nu0", &["nus", "slope_min", "slope_max"])?;
    let nu0 = cfg.model.nu;
    let nus = p.list("nus", &[nu0, 0.5 * nu0, 0.25 * nu0])?;
    let (smin, smax) = (p.number("slope_min", 0.8)?, p.number("slope_max", 1.2)?);
    if nus.len() < 2 || nus.iter().any(|&v| v <= 0.0) {
        return Err(Error::validation("experiment.params.nus", "needs at least two positive values"));
    }
    report.param("nus", format!("{nus:?}"));
    let rho0 = cfg.initial_field();
    let mut runs: Vec<SolverConfig> = std::iter::once(0.0)
        .chain(nus.iter().copied())
        .map(|nu| Ok(cfg.solver_for(cfg.model.clone().with_nu(nu)?, cfg.grid)))
        .collect::<Result<_>>()?;
    share_steps(&mut runs, &[&rho0])?;
    let trajs: Vec<Trajectory> = runs.iter().map(|c| simulate(c, &rho0)).collect::<Result<_>>()?;
    let reference = &trajs[0];
    let mut dist = Vec::new();
    let mut series = Series::new("limit_nu0", &["nu", "distance"]);
    for (nu, tr) in nus.iter().zip(&trajs[1..]) {
        let d = tr.sup_distance(reference)?;
        series.push(&[*nu, d]);
        report.observe(format!("distance@nu={nu}"), d);
        dist.push(d);
    }
    let slope = if dist.iter().all(|&d| d > 0.0) {
        loglog_slope(&nus, &dist)
    } else {
        f64::NAN
    };
    report.observe("slope", slope);
    let anchor = "‖ρ^ν_α−ρ‖_{C([0,T];L¹)} = O(ν), as ν → 0";
    report.push(Check::leq("slope_min", "fitted slope of distance against ν, lower limit", anchor, smin, slope, 0.0));
    report.push(Check::leq("slope_max", "fitted slope of distance against ν, upper limit", anchor, slope, smax, 0.0));
    if cfg.grid.boundary() == Boundary::Periodic && cfg.model.source.is_none() {
        let mass0 = rho0.mass();
        for (nu, tr) in std::iter::once(&0.0).chain(&nus).zip(&trajs) {
            let drift = tr
                .diagnostics
                .iter()
                .fold(0.0f64, |m, d| m.max((d.mass - mass0).abs()))
                / mass0.abs().max(f64::MIN_POSITIVE);
            report.push(Check::leq(
                format!("mass@nu={nu}"),
                "largest relative mass drift along the run",
                "∫ρ(t,x)dx = ∫ρ₀(x)dx",
                drift,
                0.0,
                1e-10,
            ));
        }
    }
    report.series.push(series);
    Ok(())
}

fn limit_alpha0(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    let p = Params::new(cfg, "limit_alpha0", &["alphas", "window", "c_slack"])?;
    if cfg.grid.boundary() != Boundary::ZeroExtension {
        return Err(Error::validation(
            "grid.boundary",
            "limit_alpha0 needs zero_extension: on a periodic grid (−Δ)^{α/2} annihilates constants",
        ));
    }
    let alphas = p.list("alphas", &[0.4, 0.2, 0.1, 0.05])?;
    let window = p.number("window", 0.5)?;
    let c_slack = p.number("c_slack", 1.0)?;
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::validation("experiment.params.window", "must lie in (0,1]"));
    }
    report.param("alphas", format!("{alphas:?}"));
    report.param("window", window);
    let nu = cfg.model.nu;
    let l = cfg.grid.length();
    let (wlo, whi) = (0.5 * l * (1.0 - window), 0.5 * l * (1.0 + window));
    let rho0 = cfg.initial_field();
    let damped = cfg
        .model
        .clone()
        .with_nu(0.0)?
        .with_natural_source(Source::Linear { rate: -nu })?;
    let mut runs = vec![cfg.solver_for(damped, cfg.grid)];
    for &a in &alphas {
        runs.push(cfg.solver_for(cfg.model.clone().with_alpha(a)?, cfg.grid));
    }
    share_steps(&mut runs, &[&rho0])?;
    let trajs: Vec<Trajectory> = runs.iter().map(|c| simulate(c, &rho0)).collect::<Result<_>>()?;
    let target = &trajs[0];

    let mut series = Series::new("limit_alpha0", &["alpha", "window_distance", "final_mass"]);
    let mut dist = Vec::new();
    for (&a, tr) in alphas.iter().zip(&trajs[1..]) {
        let d = sup_distance_on(tr, target, wlo, whi)?;
        series.push(&[a, d, tr.last().mass()]);
        report.observe(format!("window_distance@alpha={a}"), d);
        report.observe(format!("mass_ratio@alpha={a}"), tr.last().mass() / rho0.mass());
        dist.push(d);
    }
    let mut order: Vec<usize> = (0..alphas.len()).collect();
    order.sort_by(|&i, &j| alphas[j].total_cmp(&alphas[i]));
    for w in order.windows(2) {
        let (i, j) = (w[0], w[1]);
        report.push(Check::leq(
            format!("converges@alpha={}", alphas[j]),
            format!("window L1 distance to the damped solution shrinks from α = {} to α = {}", alphas[i], alphas[j]),
            "converges in C([0,T];L¹_loc) to the damped conservation law",
            dist[j],
            dist[i],
            0.0,
        ));
    }

    // ∫ρ^ν dx + ν∫₀ᵗ∫ρ^ν = ∫ρ₀ on the damped run
    let mass0 = rho0.mass();
    let mut integral = 0.0;
    let mut worst = 0.0f64;
    let mut mass_series = Series::new("limit_alpha0_mass", &["t", "mass", "identity_residual"]);
    let snaps = &target.snapshots;
    for k in 0..snaps.len() {
        if k > 0 {
            integral += 0.5 * (snaps[k].0 - snaps[k - 1].0) * (snaps[k].1.mass() + snaps[k - 1].1.mass());
        }
        let residual = snaps[k].1.mass() + nu * integral - mass0;
        worst = worst.max(residual.abs());
        mass_series.push(&[snaps[k].0, snaps[k].1.mass(), residual]);
    }
    report.push(Check::leq(
        "damped_mass_identity",
        "largest |∫ρ^ν(t) + ν∫₀ᵗ∫ρ^ν − ∫ρ₀| on the damped run (trapezoid in time)",
        "∫ρ^ν dx + ν∫₀ᵗ∫ρ^ν = ∫ρ₀",
        worst,
        0.0,
        c_slack * (cfg.grid.spacing() + target.max_dt()) * mass0.abs(),
    ));
    report.observe("damped_mass_loss", mass0 - target.last().mass());
    report.observe("damped_mass_loss_fraction", 1.0 - target.last().mass() / mass0);
    report.series.push(series);
    report.series.push(mass_series);
    Ok(())
}

fn burgers_fisher(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    let p = Params::new(cfg, "burgers_fisher", &["decay"])?;
    let rate = p.number("decay", 1.0)?;
    if rate <= 0.0 {
        return Err(Error::validation("experiment.params.decay", "must be positive (A = −decay·ρ)"));
    }
    report.param("decay", rate);
    let rho0 = cfg.initial_field();
    if rho0.min() < 0.0 {
        return Err(Error::validation("initial.rho0", "burgers_fisher needs nonnegative data"));
    }
    let traj = simulate(&cfg.solver, &rho0)?;
    let min = traj.snapshots.iter().fold(f64::INFINITY, |m, (_, f)| m.min(f.min()));
    report.push(Check::leq(
        "nonnegative",
        "negative part of the solution with the configured source",
        "if the initial value is nonnegative, the solution is nonnegative as well",
        -min,
        0.0,
        1e-12,
    ));

    let decay_model = cfg.model.clone().with_natural_source(Source::Linear { rate: -rate })?;
    let dtraj = simulate(&cfg.solver_for(decay_model, cfg.grid), &rho0)?;
    let dt = dtraj.max_dt();
    let l10 = dtraj.diagnostics[0].l1;
    let mut series = Series::new("burgers_fisher_decay", &["t", "l1_ratio", "envelope"]);
    for d in &dtraj.diagnostics {
        let ratio = d.l1 / l10;
        let env = (-rate * d.time).exp();
        series.push(&[d.time, ratio, env]);
        report.push(Check::leq(
            format!("decay@t={}", d.time),
            "l1(t)/l1(0) against exp(M₁t)(1 + 5 dt) with A = M₁ρ, M₁ < 0",
            "{0} is the unique global attractor",
            ratio,
            env * (1.0 + 5.0 * dt),
            0.0,
        ));
        let dmin = dtraj.snapshots.iter().find(|(t, _)| *t == d.time).map(|(_, f)| f.min()).unwrap_or(0.0);
        report.push(Check::leq(
            format!("decay_nonnegative@t={}", d.time),
            "negative part of the damped solution",
            "if the initial value is nonnegative, the solution is nonnegative as well",
            -dmin,
            0.0,
            1e-12,
        ));
    }
    report.observe("min_value", min);
    report.observe("final_l1_ratio", dtraj.diagnostics.last().map(|d| d.l1 / l10).unwrap_or(f64::NAN));
    report.series.push(series);
    Ok(())
}

fn viscous_limit(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    let p = Params::new(cfg, "viscous_limit", &["eps"])?;
    let mut eps = p.list("eps", &[0.02, 0.01, 0.005])?;
    if eps.len() < 2 || eps.iter().any(|&e| e <= 0.0) {
        return Err(Error::validation("experiment.params.eps", "needs at least two positive values"));
    }
    eps.sort_by(|a, b| b.total_cmp(a));
    report.param("eps", format!("{eps:?}"));
    let rho0 = cfg.initial_field();
    let mut series = Series::new("viscous_limit", &["eps", "cauchy_distance"]);
    let mut dist = Vec::new();
    for &e in &eps {
        let mut runs = [
            cfg.solver_for(cfg.model.clone().with_eps(e)?, cfg.grid),
            cfg.solver_for(cfg.model.clone().with_eps(0.5 * e)?, cfg.grid),
        ];
        share_steps(&mut runs, &[&rho0])?;
        let d = simulate(&runs[0], &rho0)?.sup_distance(&simulate(&runs[1], &rho0)?)?;
        series.push(&[e, d]);
        report.observe(format!("cauchy@eps={e}"), d);
        dist.push(d);
    }
    for k in 1..eps.len() {
        report.push(Check::leq(
            format!("cauchy_decreases@eps={}", eps[k]),
            format!("‖ρ_ε−ρ_ε/2‖ in C([0,T];L¹) at ε = {} against its value at ε = {}", eps[k], eps[k - 1]),
            "ρ_ε → ρ in C([0,T];L¹)",
            dist[k],
            dist[k - 1],
            0.0,
        ));
    }
    if dist.len() >= 2 && dist.iter().all(|&d| d > 0.0) {
        report.observe("rate", loglog_slope(&eps, &dist));
    }
    report.series.push(series);
    Ok(())
}

fn kinetic_certify(cfg: &RunConfig, report: &mut ExperimentReport) -> Result<()> {
    let p = Params::new(
        cfg,
        "kinetic_certify",
        &["alphas", "refine", "snapshots", "levels", "budget_factor", "edge_fraction", "c_residual", "slope_min", "c_slack"],
    )?;
    let alphas = p.list("alphas", &[cfg.model.alpha])?;
    let refine: Vec<usize> = p.list("refine", &[])?.into_iter().map(|v| v as usize).collect();
    let budget_factor = p.number("budget_factor", 1.05)?;
    let edge_fraction = p.number("edge_fraction", 0.01)?;
    let c_residual = p.number("c_residual", 1.0)?;
    let slope_min = p.number("slope_min", 0.5)?;
    let c_slack = p.number("c_slack", 1.0)?;
    let n_levels = p.number("levels", 13.0)? as usize;
    let snapshots_param = p.list("snapshots", &[])?;
    report.param("alphas", format!("{alphas:?}"));
    report.param("refine", format!("{refine:?}"));
    report.param("budget_factor", budget_factor);
    report.param("edge_fraction", edge_fraction);
    report.param("c_residual", c_residual);

    // dense outputs: one snapshot per cell unless configured
    let dense = |c: &SolverConfig| -> SolverConfig {
        let count = snapshots_param.first().map(|&v| v as usize).unwrap_or(c.grid.n_cells());
        c.clone().with_uniform_outputs(count)
    };
    let rho0 = cfg.initial_field();
    let vg = cfg.vgrid_for(&rho0)?;
    report.param("vgrid", format!("[{}, {}] x {}", vg.v_min(), vg.v_max(), vg.n_v()));

    for &a in &alphas {
        let model = cfg.model.clone().with_alpha(a)?;
        let sc = dense(&cfg.solver_for(model.clone(), cfg.grid));
        let solver = Solver::new(sc)?;
        let traj = solver.run(&rho0)?;
        let mut min_n = f64::INFINITY;
        for (_, f) in &traj.snapshots {
            vg.check_covers(f)?;
            let n = dissipation_n(f, solver.operator(), &vg, &model)?;
            min_n = n.iter().fold(min_n, |m, &x| m.min(x));
        }
        report.push(Check::leq(
            format!("n_nonnegative@alpha={a}"),
            "negative part of the nonlocal dissipation n over all (snapshot, x, v)",
            "n is a nonnegative measure",
            -min_n,
            0.0,
            1e-12,
        ));
    }

    let sc = dense(&cfg.solver);
    let solver = Solver::new(sc)?;
    let traj = solver.run(&rho0)?;
    let budget = measure_budget(&traj, solver.operator(), &vg, &cfg.model)?;
    report.push(Check::leq(
        "budget_total",
        "max_v M(v) against sup_t ‖ρ(t)‖_{L¹}, M(v) = ∫∫(m + ν n) dx dt",
        "∫∫ m(t,x,v) dx dt ∈ L^∞_0(ℝ)",
        budget.max_total(),
        budget_factor * budget.sup_l1,
        0.0,
    ));
    report.push(Check::leq(
        "budget_edges",
        "M at the v-grid edges relative to max_v M",
        "∫∫ m(t,x,v) dx dt vanishes as |v| → ∞",
        budget.edge_ratio(),
        edge_fraction,
        0.0,
    ));
    let tol = c_slack * (cfg.grid.spacing() + traj.max_dt() + vg.dv()) * budget.sup_l1;
    report.push(Check::leq(
        "budget_one_sided",
        "max_v [M(v) − min(∫(ρ₀−v)⁺−(ρ_T−v)⁺, ∫(ρ₀−v)⁻−(ρ_T−v)⁻)]",
        "the defect measure is controlled by the entropies (ρ−v)^±",
        budget.one_sided_excess(),
        0.0,
        tol,
    ));
    report.observe("budget_max", budget.max_total());
    report.observe("sup_l1", budget.sup_l1);
    report.observe("edge_ratio", budget.edge_ratio());
    report.observe("tail_violation", budget.tail_violation(rho0.min(), rho0.max()));
    let half_excess = budget
        .m_total
        .iter()
        .zip(budget.half_plus_bound.iter().zip(&budget.half_minus_bound))
        .fold(f64::NEG_INFINITY, |e, (m, (p, q))| e.max(m - p.min(*q)));
    report.observe("half_bound_excess", half_excess);
    let mut bseries = Series::new("kinetic_budget", &["v", "M", "plus_bound", "minus_bound"]);
    for k in 0..budget.v.len() {
        bseries.push(&[budget.v[k], budget.m_total[k], budget.plus_bound[k], budget.minus_bound[k]]);
    }
    report.series.push(bseries);

    let (lo, hi) = (rho0.min(), rho0.max());
    let pad = 0.25 * (hi - lo).max(1e-3);
    let levels = TestBank::levels_between(lo - pad, hi + pad, n_levels);
    let residual_at = |grid_cells: usize| -> Result<(f64, f64)> {
        let grid = cfg.grid.with_cells(grid_cells)?;
        let data = cfg.rho0.sample(&grid);
        let sc = dense(&cfg.solver_for(cfg.model.clone(), grid));
        let solver = Solver::new(sc)?;
        let traj = solver.run(&data)?;
        let bank = TestBank::standard(&grid, levels.clone());
        let r = entropy_residual(&traj, &cfg.model, solver.operator(), &bank)?;
        Ok((grid.spacing(), r.min()))
    };
    let cells = if refine.is_empty() { vec![cfg.grid.n_cells()] } else { refine.clone() };
    let mut hs = Vec::new();
    let mut deficits = Vec::new();
    let mut rseries = Series::new("entropy_residual", &["N", "h", "min_residual"]);
    for &n in &cells {
        let (h, min) = residual_at(n)?;
        rseries.push(&[n as f64, h, min]);
        report.push(Check::leq(
            format!("entropy_residual@N={n}"),
            "−min over (ψ, v) of the discrete entropy inequality, against C h",
            "entropy solution: the Kružkov inequality holds in D′",
            -min,
            c_residual * h,
            0.0,
        ));
        report.observe(format!("min_residual@N={n}"), min);
        hs.push(h);
        deficits.push((-min).max(0.0));
    }
    if cells.len() >= 2 {
        // an exact inequality (no deficit anywhere) leaves nothing to fit
        let slope = if deficits.iter().all(|&d| d > 0.0) {
            loglog_slope(&hs, &deficits)
        } else if deficits.iter().all(|&d| d == 0.0) {
            f64::INFINITY
        } else {
            f64::NAN
        };
        report.observe("residual_slope", slope);
        report.push(Check::leq(
            "entropy_residual_slope",
            "fitted slope of the entropy deficit against h",
            "entropy solution: the Kružkov inequality holds in D′",
            slope_min,
            slope,
            0.0,
        ));
    }
    report.series.push(rseries);
    Ok(())
}

/// Operator diagnostics for `cfg`: spectral consistency of the mode-1
/// symbol (periodic grids), discrete convexity of three entropies on random
/// fields, and the weight table.
pub fn operator_check(cfg: &RunConfig, fields: usize, symbol_tol: f64) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::new("operator_check");
    describe_common(&mut report, cfg);
    let grid = cfg.grid;
    let alpha = cfg.model.alpha;
    let op = match cfg.solver.radius {
        Some(r) => FractionalOperator::build(grid, alpha, r)?,
        None => FractionalOperator::build_default(grid, alpha)?,
    };
    report.observe("coefficient", op.coeff());
    report.observe("radius", op.radius());
    report.observe("tail_mass", op.tail_mass());
    report.observe("diagonal_mass", op.diagonal_mass());

    if grid.boundary() == Boundary::Periodic {
        let xi = 2.0 * std::f64::consts::PI / grid.length();
        let exact = xi.powf(alpha);
        let rel = (op.symbol(1)? - exact).abs() / exact;
        report.observe("symbol_mode1", op.symbol(1)?);
        report.push(Check::leq(
            "symbol_mode1",
            "relative error of the discrete mode-1 symbol against (2π/L)^α",
            "(−Δ)^{α/2} has Fourier multiplier |ξ|^α",
            rel,
            symbol_tol,
            0.0,
        ));
    }

    type Entropy = (&'static str, fn(f64) -> f64, fn(f64) -> f64);
    let entropies: [Entropy; 3] = [
        ("square", |v| v * v, |v| 2.0 * v),
        ("smooth_abs", |v| (v * v + 1e-2).sqrt(), |v| v / (v * v + 1e-2).sqrt()),
        ("exp", f64::exp, f64::exp),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.experiment.seed);
    let mut worst = [f64::INFINITY; 3];
    for _ in 0..fields {
        let values: Vec<f64> = (0..grid.n_cells()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let f = Field::new(grid, values)?;
        let lf = op.apply(&f)?;
        for (k, (_, eta, deta)) in entropies.iter().enumerate() {
            let l_eta = op.apply_exterior(&f.map(eta), eta(0.0))?;
            for i in 0..f.len() {
                let d = deta(f.values()[i]) * lf.values()[i] - l_eta.values()[i];
                worst[k] = worst[k].min(d);
            }
        }
    }
    for (k, (name, _, _)) in entropies.iter().enumerate() {
        report.observe(format!("min_convexity_defect_{name}"), worst[k]);
        report.push(Check::leq(
            format!("convexity_{name}"),
            format!("−min_i [η′(f_i)(Lf)_i − (L η(f))_i] over {fields} random fields"),
            "η′(ρ)(−Δ)^{α/2}ρ ≥ (−Δ)^{α/2}η(ρ) for convex η",
            -worst[k],
            0.0,
            1e-12,
        ));
    }

    let h = grid.spacing();
    let mut weights = Series::new("weights", &["j", "distance", "weight"]);
    for (j, w) in op.weights().iter().enumerate() {
        weights.push(&[(j + 1) as f64, (j + 1) as f64 * h, *w]);
    }
    report.series.push(weights);
    report.param("fields", fields);
    report.param("symbol_tol", symbol_tol);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_catalog_entry_has_a_default() {
        for (name, _) in CATALOG {
            let cfg = default_config(name).unwrap();
            assert_eq!(cfg.experiment.name.as_deref(), Some(*name));
            assert!(cfg.grid.n_cells() <= 512);
            assert!(cfg.solver.horizon <= 1.0);
        }
        assert!(matches!(default_config("nope"), Err(Error::Usage(_))));
    }

    #[test]
    fn unknown_experiment_lists_catalog() {
        let cfg = default_config("stability").unwrap();
        let err = run_experiment("nope", &cfg).unwrap_err();
        assert!(err.to_string().contains("kinetic_certify"));
    }

    #[test]
    fn unknown_parameter_rejected() {
        let text = default_config_text("stability").unwrap() + "params = bogus: 1\n";
        let cfg = RunConfig::parse(&text).unwrap();
        assert!(matches!(run_experiment("stability", &cfg), Err(Error::Validation { .. })));
    }

    #[test]
    fn identical_data_contract_exactly() {
        let text = default_config_text("contraction")
            .unwrap()
            .replace("rho0_b = step(0.25,0.75,0.6)", "rho0_b = step(1,0,1)")
            .replace("N = 128", "N = 32");
        let r = run_experiment("contraction", &RunConfig::parse(&text).unwrap()).unwrap();
        assert!(r.passed());
        assert!(r.checks.iter().all(|c| c.lhs == 0.0));
    }

    #[test]
    fn comparison_with_offset_keeps_order() {
        let text = default_config_text("comparison").unwrap().replace("N = 128", "N = 64");
        let r = run_experiment("comparison", &RunConfig::parse(&text).unwrap()).unwrap();
        assert!(r.passed(), "{}", r.to_text());
        // brute-force cellwise scan agrees with the reported maximum
        assert!(r.observable("max_ordering_violation").unwrap() <= 1e-12);
    }

    #[test]
    fn reports_are_deterministic() {
        let text = default_config_text("contraction")
            .unwrap()
            .replace("rho0_b = step(0.25,0.75,0.6)\n", "")
            .replace("N = 128", "N = 32")
            + "seed = 11\n";
        let cfg = RunConfig::parse(&text).unwrap();
        let a = run_experiment("contraction", &cfg).unwrap();
        let b = run_experiment("contraction", &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.passed(), "{}", a.to_text());
        let mut other = cfg.clone();
        other.experiment.seed = 12;
        let c = run_experiment("contraction", &other).unwrap();
        assert_ne!(a.observable("initial_distance"), c.observable("initial_distance"));
    }

    #[test]
    fn report_text_has_check_blocks() {
        let mut r = ExperimentReport::new("x");
        r.push(Check::leq("a", "d", "anchor", 1.0, 2.0, 0.0));
        r.push(Check::leq("b", "d", "anchor", 3.0, 2.0, 0.5));
        let text = r.to_text();
        assert!(text.contains("check: a\n"));
        assert!(text.contains("pass: false"));
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
        assert_eq!(r.check("b").unwrap().margin(), -0.5);
    }

    #[test]
    fn loglog_slope_recovers_power() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn limit_alpha0_needs_zero_extension() {
        let text = default_config_text("limit_alpha0").unwrap().replace("boundary = zero_extension\n", "");
        let cfg = RunConfig::parse(&text).unwrap();
        assert!(matches!(run_experiment("limit_alpha0", &cfg), Err(Error::Validation { .. })));
    }
}
