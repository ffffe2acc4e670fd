//! Explicit monotone finite-volume time stepping for
//! `∂ₜρ + ∂ₓF(ρ) + ν L B(ρ) − ε ∂ₓₓρ = A(ρ)`.
//!
//! One forward-Euler stage reads
//!
//! ```text
//!   ρᵢ⁺ = ρᵢ − dt/h (F̂ᵢ₊½ − F̂ᵢ₋½) − dt ν (L B(ρ))ᵢ + dt ε (ρᵢ₊₁ − 2ρᵢ + ρᵢ₋₁)/h² + dt A(ρᵢ)
//! ```
//!
//! and is nondecreasing in every input under the step restriction of
//! [`Solver::stable_dt`]. SSP-RK2 is a convex combination of two such stages.
//! Under zero extension the ghost cells hold 0.

use std::fmt;

use crate::error::{Error, Result};
use crate::fractional::FractionalOperator;
use crate::grid::{Boundary, Field, Grid1D};
use crate::physics::{flux_unchecked, FluxScheme, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeScheme {
    ForwardEuler,
    SspRk2,
}

impl TimeScheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euler" | "forward_euler" => Some(TimeScheme::ForwardEuler),
            "ssp_rk2" | "rk2" | "heun" => Some(TimeScheme::SspRk2),
            _ => None,
        }
    }
}

impl fmt::Display for TimeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeScheme::ForwardEuler => "euler",
            TimeScheme::SspRk2 => "ssp_rk2",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub model: ModelSpec,
    pub grid: Grid1D,
    /// Final time `T`.
    pub horizon: f64,
    pub cfl: f64,
    /// Sorted, unique times in `[0, T]`; empty means `{0, T}`.
    pub output_times: Vec<f64>,
    pub time_scheme: TimeScheme,
    pub flux_scheme: FluxScheme,
    /// Optional cap on the step, so runs that are compared share one `dt`.
    pub max_dt: Option<f64>,
    /// Truncation radius of the fractional operator; `None` for the default.
    pub radius: Option<f64>,
}

impl SolverConfig {
    /// Config with CFL 0.5, SSP-RK2, Engquist–Osher and outputs `{0, T}`.
    pub fn new(model: ModelSpec, grid: Grid1D, horizon: f64) -> Self {
        SolverConfig {
            model,
            grid,
            horizon,
            cfl: 0.5,
            output_times: Vec::new(),
            time_scheme: TimeScheme::SspRk2,
            flux_scheme: FluxScheme::EngquistOsher,
            max_dt: None,
            radius: None,
        }
    }

    /// `count + 1` equally spaced output times `0, T/count, …, T`.
    pub fn with_uniform_outputs(mut self, count: usize) -> Self {
        let count = count.max(1);
        self.output_times = (0..=count).map(|k| self.horizon * k as f64 / count as f64).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::validation("solver.T", "must be positive and finite"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::validation("solver.cfl", "must lie in (0,1]"));
        }
        if let Some(m) = self.max_dt {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::validation("solver.max_dt", "must be positive"));
            }
        }
        let t = &self.output_times;
        if t.iter().any(|&s| !(0.0..=self.horizon).contains(&s)) {
            return Err(Error::validation("solver.output_times", "must lie in [0, T]"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("solver.output_times", "must be sorted and unique"));
        }
        self.model.validate()
    }

    /// Output times with the empty list replaced by `{0, T}`.
    pub fn effective_outputs(&self) -> Vec<f64> {
        if self.output_times.is_empty() {
            vec![0.0, self.horizon]
        } else {
            self.output_times.clone()
        }
    }
}

/// Per-output-time diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub time: f64,
    /// `h Σ ρ`.
    pub mass: f64,
    pub l1: f64,
    pub bv: f64,
    pub linf: f64,
    /// Last step taken before this time (the upcoming step at `t = 0`).
    pub dt_used: f64,
    /// Dissipation rate of the quadratic entropy,
    /// `h Σ [ε (D_h ρ)² + ν ρ (L B(ρ))]`.
    pub entropy_dissipation_sample: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, Field)>,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    pub fn initial(&self) -> &Field {
        &self.snapshots[0].1
    }

    pub fn last(&self) -> &Field {
        &self.snapshots[self.snapshots.len() - 1].1
    }

    /// Largest `dt` used along the run.
    pub fn max_dt(&self) -> f64 {
        self.diagnostics.iter().fold(0.0, |m, d| m.max(d.dt_used))
    }

    /// `max_t ‖ρ(t) − σ(t)‖_{L¹}` over shared snapshots.
    pub fn sup_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.snapshots.len() != other.snapshots.len() {
            return Err(Error::Usage("trajectories have different output times".into()));
        }
        self.snapshots
            .iter()
            .zip(&other.snapshots)
            .try_fold(0.0f64, |m, ((_, a), (_, b))| Ok(m.max(a.l1_distance(b)?)))
    }
}

/// A solver bound to one configuration, holding its fractional operator.
#[derive(Clone, Debug)]
pub struct Solver {
    config: SolverConfig,
    op: FractionalOperator,
}

struct Scratch {
    transformed: Vec<f64>,
    nonlocal: Vec<f64>,
    stage: Vec<f64>,
    rate: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            transformed: vec![0.0; n],
            nonlocal: vec![0.0; n],
            stage: vec![0.0; n],
            rate: vec![0.0; n],
        }
    }
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let radius = config
            .radius
            .unwrap_or_else(|| FractionalOperator::default_radius(&config.grid));
        let op = FractionalOperator::build(config.grid, config.model.alpha, radius)?;
        Ok(Solver { config, op })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn operator(&self) -> &FractionalOperator {
        &self.op
    }

    fn check_field(&self, f: &Field) -> Result<()> {
        if *f.grid() != self.config.grid {
            return Err(Error::Usage("field and solver live on different grids".into()));
        }
        Ok(())
    }

    /// Step restriction `cfl / (max|f|/h + 2ε/h² + ν ‖b‖ S + M2_eff)` over the
    /// range of `f`, with `S` the operator's diagonal mass and `M2_eff` the
    /// largest negative slope of `A`. Capped by `max_dt` and `T`; not capped by
    /// the next output time.
    pub fn stable_dt(&self, f: &Field) -> Result<f64> {
        self.check_field(f)?;
        Ok(self.stable_dt_values(f.values()))
    }

    fn stable_dt_values(&self, v: &[f64]) -> f64 {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        self.stable_dt_over(lo, hi)
    }

    /// The step restriction of [`Solver::stable_dt`] for any state with
    /// values in `[lo, hi]`.
    pub fn stable_dt_over(&self, mut lo: f64, mut hi: f64) -> f64 {
        let m = &self.config.model;
        let h = self.config.grid.spacing();
        if self.config.grid.boundary() == Boundary::ZeroExtension {
            lo = lo.min(0.0);
            hi = hi.max(0.0);
        }
        let nonlocal = if m.nu > 0.0 {
            m.nu * m.diffusion.max_slope(lo, hi) * self.op.diagonal_mass()
        } else {
            0.0
        };
        let rate = m.flux.max_speed(lo, hi) / h + 2.0 * m.eps / (h * h) + nonlocal + m.source.negative_slope(lo, hi);
        let mut dt = if rate > 0.0 {
            self.config.cfl / rate
        } else {
            self.config.horizon
        };
        if let Some(cap) = self.config.max_dt {
            dt = dt.min(cap);
        }
        dt.min(self.config.horizon)
    }

    /// Right-hand side `R(ρ)` of the semi-discrete scheme.
    fn rate_into(&self, rho: &[f64], out: &mut [f64], transformed: &mut [f64], nonlocal: &mut [f64]) {
        let m = &self.config.model;
        let n = rho.len();
        let h = self.config.grid.spacing();
        let periodic = self.config.grid.boundary() == Boundary::Periodic;
        let left_of = |i: usize| -> f64 {
            if i > 0 {
                rho[i - 1]
            } else if periodic {
                rho[n - 1]
            } else {
                0.0
            }
        };
        let right_of = |i: usize| -> f64 {
            if i + 1 < n {
                rho[i + 1]
            } else if periodic {
                rho[0]
            } else {
                0.0
            }
        };

        let scheme = self.config.flux_scheme;
        let mut flux_left = flux_unchecked(&m.flux, left_of(0), rho[0], scheme);
        for i in 0..n {
            let flux_right = flux_unchecked(&m.flux, rho[i], right_of(i), scheme);
            let mut r = -(flux_right - flux_left) / h;
            if m.eps > 0.0 {
                r += m.eps * (right_of(i) - 2.0 * rho[i] + left_of(i)) / (h * h);
            }
            r += m.source.eval(rho[i]);
            out[i] = r;
            flux_left = flux_right;
        }

        if m.nu > 0.0 {
            let input: &[f64] = if m.diffusion.is_identity() {
                rho
            } else {
                for (t, &r) in transformed.iter_mut().zip(rho) {
                    *t = m.diffusion.eval(r);
                }
                transformed
            };
            self.op.apply_into(input, 0.0, nonlocal);
            for (o, l) in out.iter_mut().zip(nonlocal.iter()) {
                *o -= m.nu * l;
            }
        }
    }

    fn advance(&self, rho: &mut [f64], dt: f64, step: usize, s: &mut Scratch) -> Result<()> {
        self.rate_into(rho, &mut s.rate, &mut s.transformed, &mut s.nonlocal);
        match self.config.time_scheme {
            TimeScheme::ForwardEuler => {
                for (r, k) in rho.iter_mut().zip(&s.rate) {
                    *r += dt * k;
                }
            }
            TimeScheme::SspRk2 => {
                for ((st, r), k) in s.stage.iter_mut().zip(rho.iter()).zip(&s.rate) {
                    *st = r + dt * k;
                }
                let stage = std::mem::take(&mut s.stage);
                self.rate_into(&stage, &mut s.rate, &mut s.transformed, &mut s.nonlocal);
                for ((r, st), k) in rho.iter_mut().zip(&stage).zip(&s.rate) {
                    *r = 0.5 * *r + 0.5 * (st + dt * k);
                }
                s.stage = stage;
            }
        }
        if let Some(cell) = rho.iter().position(|v| !v.is_finite()) {
            return Err(Error::Instability { step, cell });
        }
        Ok(())
    }

    /// One step of size `dt` from `state`. `step` is reported in the
    /// instability error if the update is not finite.
    pub fn step(&self, state: &Field, dt: f64, step: usize) -> Result<Field> {
        self.check_field(state)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain(format!("step size must be positive, got {dt}")));
        }
        let mut rho = state.values().to_vec();
        let mut scratch = Scratch::new(rho.len());
        self.advance(&mut rho, dt, step, &mut scratch)?;
        Ok(Field::from_vec_unchecked(self.config.grid, rho))
    }

    /// Quadratic-entropy dissipation rate `h Σ [ε (D_h ρ)² + ν ρ (L B(ρ))]`.
    pub fn entropy_dissipation(&self, f: &Field) -> Result<f64> {
        self.check_field(f)?;
        let m = &self.config.model;
        let h = self.config.grid.spacing();
        let v = f.values();
        let n = v.len();
        let periodic = self.config.grid.boundary() == Boundary::Periodic;
        let at = |i: isize| -> f64 {
            if periodic {
                v[i.rem_euclid(n as isize) as usize]
            } else if (0..n as isize).contains(&i) {
                v[i as usize]
            } else {
                0.0
            }
        };
        let mut total = 0.0;
        if m.eps > 0.0 {
            for i in 0..n as isize {
                let d = (at(i + 1) - at(i - 1)) / (2.0 * h);
                total += m.eps * d * d;
            }
        }
        if m.nu > 0.0 {
            let lb = self.op.apply(&f.map(|u| m.diffusion.eval(u)))?;
            total += m.nu * v.iter().zip(lb.values()).map(|(a, b)| a * b).sum::<f64>();
        }
        Ok(h * total)
    }

    fn diagnostics(&self, time: f64, f: &Field, dt_used: f64) -> Result<DiagnosticsRow> {
        let norms = f.norms();
        Ok(DiagnosticsRow {
            time,
            mass: f.mass(),
            l1: norms.l1,
            bv: norms.bv,
            linf: norms.linf,
            dt_used,
            entropy_dissipation_sample: self.entropy_dissipation(f)?,
        })
    }

    /// Marches `rho0` to `T`, recording a snapshot and a diagnostics row at
    /// every output time.
    pub fn run(&self, rho0: &Field) -> Result<Trajectory> {
        self.check_field(rho0)?;
        let horizon = self.config.horizon;
        let outputs = self.config.effective_outputs();
        let snap = 1e-12 * horizon;
        let underflow = 1e-14 * horizon;

        let mut rho = rho0.values().to_vec();
        let mut scratch = Scratch::new(rho.len());
        let mut t = 0.0;
        let mut steps = 0;
        let mut last_dt = self.stable_dt_values(&rho);
        let mut snapshots = Vec::with_capacity(outputs.len());
        let mut diagnostics = Vec::with_capacity(outputs.len());

        for &target in &outputs {
            while target - t > snap {
                let remaining = target - t;
                let dt = self.stable_dt_values(&rho);
                if dt < underflow {
                    return Err(Error::Stiffness { time: t, dt });
                }
                let (dt, landing) = if dt >= remaining { (remaining, true) } else { (dt, false) };
                steps += 1;
                self.advance(&mut rho, dt, steps, &mut scratch)?;
                t = if landing { target } else { t + dt };
                last_dt = dt;
            }
            let field = Field::from_vec_unchecked(self.config.grid, rho.clone());
            diagnostics.push(self.diagnostics(target, &field, last_dt)?);
            snapshots.push((target, field));
        }
        Ok(Trajectory {
            snapshots,
            diagnostics,
            steps,
        })
    }
}
