//! Kinetic function `χ_ρ(v)`, the dissipation measures `m` and `n`, the
//! per-level measure budget, and the weak entropy-inequality residual.
//!
//! Arrays over the `(x, v)` grid are stored row-major: entry `(i, c)` sits at
//! `i * n_v + c`.

use crate::error::{Error, Result};
use crate::fractional::FractionalOperator;
use crate::grid::{Boundary, Field, Grid1D};
use crate::physics::ModelSpec;
use crate::solver::Trajectory;

/// `sgn` with `sgn(0) = 0`.
pub fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Uniform partition of `[v_min, v_max]` into `n_v` cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VGrid {
    v_min: f64,
    v_max: f64,
    n_v: usize,
}

impl VGrid {
    pub fn new(v_min: f64, v_max: f64, n_v: usize) -> Result<Self> {
        if !(v_min.is_finite() && v_max.is_finite() && v_min < v_max) {
            return Err(Error::validation("vgrid.vmin", format!("must be below vgrid.vmax (got {v_min}, {v_max})")));
        }
        if n_v == 0 {
            return Err(Error::validation("vgrid.nv", "must be positive"));
        }
        Ok(VGrid { v_min, v_max, n_v })
    }

    /// `[min(ρ₀, 0) − 1, max(ρ₀, 0) + 1]` with 64 cells.
    pub fn default_for(f: &Field) -> Self {
        VGrid {
            v_min: f.min().min(0.0) - 1.0,
            v_max: f.max().max(0.0) + 1.0,
            n_v: 64,
        }
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn dv(&self) -> f64 {
        (self.v_max - self.v_min) / self.n_v as f64
    }

    pub fn center(&self, c: usize) -> f64 {
        self.v_min + (c as f64 + 0.5) * self.dv()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_v).map(|c| self.center(c)).collect()
    }

    fn edge(&self, c: usize) -> f64 {
        if c == self.n_v {
            self.v_max
        } else {
            self.v_min + c as f64 * self.dv()
        }
    }

    /// Index of the cell containing `v` (the top edge belongs to the last
    /// cell).
    pub fn cell_of(&self, v: f64) -> usize {
        (((v - self.v_min) / self.dv()).floor().max(0.0) as usize).min(self.n_v - 1)
    }

    /// Fails with a range error naming the first cell whose value, or 0,
    /// falls outside the grid.
    pub fn check_covers(&self, f: &Field) -> Result<()> {
        if self.v_min > 0.0 || self.v_max < 0.0 {
            return Err(Error::domain(format!(
                "v-grid [{}, {}] must contain 0",
                self.v_min, self.v_max
            )));
        }
        match f.values().iter().position(|&r| r < self.v_min || r > self.v_max) {
            Some(cell) => Err(Error::Range {
                cell,
                value: f.values()[cell],
                lo: self.v_min,
                hi: self.v_max,
            }),
            None => Ok(()),
        }
    }
}

/// `u(i, c)` = signed fraction of v-cell `c` covered by `(0, ρ_i)` or
/// `(ρ_i, 0)`.
#[derive(Clone, Debug)]
pub struct KineticField {
    pub grid: Grid1D,
    pub vgrid: VGrid,
    pub u: Vec<f64>,
}

impl KineticField {
    pub fn at(&self, i: usize, c: usize) -> f64 {
        self.u[i * self.vgrid.n_v() + c]
    }
}

/// Dissipation densities on the `(x, v)` grid.
#[derive(Clone, Debug)]
pub struct DissipationField {
    pub n_vals: Vec<f64>,
    pub m_vals: Vec<f64>,
}

/// Kinetic function `χ_ρ(v) = 1_{(0,ρ)}(v) − 1_{(ρ,0)}(v)`, cell-averaged.
pub fn chi(f: &Field, vg: &VGrid) -> Result<KineticField> {
    vg.check_covers(f)?;
    let nv = vg.n_v();
    let dv = vg.dv();
    let mut u = vec![0.0; f.len() * nv];
    for (i, &r) in f.values().iter().enumerate() {
        let (lo, hi, s) = if r >= 0.0 { (0.0, r, 1.0) } else { (r, 0.0, -1.0) };
        if lo == hi {
            continue;
        }
        let (first, last) = (vg.cell_of(lo), vg.cell_of(hi));
        for c in first..=last {
            let overlap = hi.min(vg.edge(c + 1)) - lo.max(vg.edge(c));
            if overlap > 0.0 {
                u[i * nv + c] = s * (overlap / dv).min(1.0);
            }
        }
    }
    Ok(KineticField {
        grid: *f.grid(),
        vgrid: *vg,
        u,
    })
}

/// `i ↦ dv Σ_c S′(v_c) u(i, c)`, which approximates `S(ρ_i) − S(0)`.
pub fn moment(kf: &KineticField, s_prime: impl Fn(f64) -> f64) -> Field {
    let nv = kf.vgrid.n_v();
    let dv = kf.vgrid.dv();
    let weights: Vec<f64> = kf.vgrid.centers().into_iter().map(s_prime).collect();
    let values = kf
        .u
        .chunks(nv)
        .map(|row| dv * row.iter().zip(&weights).map(|(u, w)| u * w).sum::<f64>())
        .collect();
    Field::from_vec_unchecked(kf.grid, values)
}

/// `n(i, v) = ½ (sgn(ρ_i − v) (L B(ρ))_i − (L |B(ρ) − B(v)|)_i)` at the
/// v-cell centers.
///
/// Evaluated in kernel form, `½ Σ w (|g_nb| − sgn(ρ_i − v) g_nb)` with
/// `g = B(ρ) − B(v)`, so every term is nonnegative. Outside a zero-extension
/// domain `ρ = 0`, so `g = −B(v)` there.
pub fn dissipation_n(f: &Field, op: &FractionalOperator, vg: &VGrid, model: &ModelSpec) -> Result<Vec<f64>> {
    vg.check_covers(f)?;
    if op.grid() != f.grid() {
        return Err(Error::Usage("field and operator live on different grids".into()));
    }
    let n = f.len();
    let nv = vg.n_v();
    let b_rho: Vec<f64> = f.values().iter().map(|&r| model.diffusion.eval(r)).collect();
    let mut out = vec![0.0; n * nv];
    let mut g = vec![0.0; n];
    let mut sign = vec![0.0; n];
    let mut col = vec![0.0; n];
    for c in 0..nv {
        let v = vg.center(c);
        let bv = model.diffusion.eval(v);
        for i in 0..n {
            g[i] = b_rho[i] - bv;
            sign[i] = sgn(f.values()[i] - v);
        }
        op.defect_into(&g, -bv, &sign, &mut col);
        for i in 0..n {
            out[i * nv + c] = col[i];
        }
    }
    Ok(out)
}

/// Parabolic dissipation `m(i, ·)`: `ε ((ρ_{i+1} − ρ_{i−1}) / 2h)² / dv`
/// deposited in the v-cell containing `ρ_i`.
pub fn dissipation_m(f: &Field, eps: f64, vg: &VGrid) -> Result<Vec<f64>> {
    vg.check_covers(f)?;
    let n = f.len();
    let nv = vg.n_v();
    let mut out = vec![0.0; n * nv];
    if eps == 0.0 {
        return Ok(out);
    }
    let grad = centered_gradient(f);
    for (i, (&r, d)) in f.values().iter().zip(grad).enumerate() {
        out[i * nv + vg.cell_of(r)] = eps * d * d / vg.dv();
    }
    Ok(out)
}

/// Both densities for one snapshot.
pub fn dissipation(f: &Field, op: &FractionalOperator, vg: &VGrid, model: &ModelSpec) -> Result<DissipationField> {
    Ok(DissipationField {
        n_vals: dissipation_n(f, op, vg, model)?,
        m_vals: dissipation_m(f, model.eps, vg)?,
    })
}

fn centered_gradient(f: &Field) -> Vec<f64> {
    let v = f.values();
    let n = v.len();
    let h = f.grid().spacing();
    let periodic = f.grid().boundary() == Boundary::Periodic;
    (0..n)
        .map(|i| {
            let right = if i + 1 < n { v[i + 1] } else if periodic { v[0] } else { 0.0 };
            let left = if i > 0 { v[i - 1] } else if periodic { v[n - 1] } else { 0.0 };
            (right - left) / (2.0 * h)
        })
        .collect()
}

/// Trapezoid weights for the given sample times.
fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let k = times.len();
    let mut w = vec![0.0; k];
    for j in 1..k {
        let dt = times[j] - times[j - 1];
        w[j - 1] += 0.5 * dt;
        w[j] += 0.5 * dt;
    }
    w
}

/// Total dissipation per level, `M(v) = ∫₀ᵀ h Σ_i (m + ν n)(t, i, v) dt`,
/// next to the bounds it must respect.
#[derive(Clone, Debug)]
pub struct BudgetReport {
    pub v: Vec<f64>,
    pub m_total: Vec<f64>,
    /// `sup_t ‖ρ(t)‖_{L¹}`.
    pub sup_l1: f64,
    /// `∫ [(ρ₀ − v)₊ − (ρ(T) − v)₊] dx`.
    pub plus_bound: Vec<f64>,
    /// `∫ [(ρ₀ − v)₋ − (ρ(T) − v)₋] dx`.
    pub minus_bound: Vec<f64>,
    /// `½ ∫ |(ρ₀ − v)₊ − (ρ(T) − v)₊| dx`, the bound with a factor ½.
    pub half_plus_bound: Vec<f64>,
    /// `½ ∫ |(ρ₀ − v)₋ − (ρ(T) − v)₋| dx`.
    pub half_minus_bound: Vec<f64>,
}

impl BudgetReport {
    pub fn max_total(&self) -> f64 {
        self.m_total.iter().fold(0.0, |m, &x| m.max(x))
    }

    /// `max(M(v_first), M(v_last)) / max_v M(v)` (0 when `M ≡ 0`).
    pub fn edge_ratio(&self) -> f64 {
        let max = self.max_total();
        if max == 0.0 {
            return 0.0;
        }
        self.m_total[0].max(self.m_total[self.m_total.len() - 1]) / max
    }

    /// Largest excess of `M(v)` over the one-sided bounds.
    pub fn one_sided_excess(&self) -> f64 {
        self.m_total
            .iter()
            .zip(self.plus_bound.iter().zip(&self.minus_bound))
            .fold(f64::NEG_INFINITY, |e, (m, (p, q))| e.max(m - p.min(*q)))
    }

    /// Tail monotonicity: `M` nonincreasing above `max ρ₀` and nondecreasing
    /// below `min ρ₀`. Returns the largest violation.
    pub fn tail_violation(&self, rho0_min: f64, rho0_max: f64) -> f64 {
        let mut worst = 0.0f64;
        for j in 1..self.v.len() {
            let rise = self.m_total[j] - self.m_total[j - 1];
            if self.v[j - 1] > rho0_max {
                worst = worst.max(rise);
            }
            if self.v[j] < rho0_min {
                worst = worst.max(-rise);
            }
        }
        worst
    }
}

/// Integrates `m + ν n` over `x` and (trapezoid) over the snapshot times.
pub fn measure_budget(
    traj: &Trajectory,
    op: &FractionalOperator,
    vg: &VGrid,
    model: &ModelSpec,
) -> Result<BudgetReport> {
    let nv = vg.n_v();
    let h = op.grid().spacing();
    let times = traj.times();
    let weights = trapezoid_weights(&times);
    let mut total = vec![0.0; nv];
    for ((_, f), w) in traj.snapshots.iter().zip(&weights) {
        if *w == 0.0 {
            continue;
        }
        let nd = if model.nu > 0.0 {
            dissipation_n(f, op, vg, model)?
        } else {
            vec![0.0; f.len() * nv]
        };
        let md = dissipation_m(f, model.eps, vg)?;
        for row in 0..f.len() {
            for (c, t) in total.iter_mut().enumerate() {
                let k = row * nv + c;
                *t += w * h * (md[k] + model.nu * nd[k]);
            }
        }
    }

    let rho0 = traj.initial();
    let rho_t = traj.last();
    let v = vg.centers();
    let sum = |g: &dyn Fn(f64, f64) -> f64| -> f64 {
        h * rho0.values().iter().zip(rho_t.values()).map(|(&a, &b)| g(a, b)).sum::<f64>()
    };
    let pos = |x: f64| x.max(0.0);
    let neg = |x: f64| (-x).max(0.0);
    let mut plus = Vec::with_capacity(nv);
    let mut minus = Vec::with_capacity(nv);
    let mut half_plus = Vec::with_capacity(nv);
    let mut half_minus = Vec::with_capacity(nv);
    for &vc in &v {
        plus.push(sum(&|a, b| pos(a - vc) - pos(b - vc)));
        minus.push(sum(&|a, b| neg(a - vc) - neg(b - vc)));
        half_plus.push(0.5 * sum(&|a, b| (pos(a - vc) - pos(b - vc)).abs()));
        half_minus.push(0.5 * sum(&|a, b| (neg(a - vc) - neg(b - vc)).abs()));
    }
    let sup_l1 = traj.diagnostics.iter().fold(0.0f64, |m, d| m.max(d.l1));
    Ok(BudgetReport {
        v,
        m_total: total,
        sup_l1,
        plus_bound: plus,
        minus_bound: minus,
        half_plus_bound: half_plus,
        half_minus_bound: half_minus,
    })
}

/// Spatial bump `φ(x) = (1 − s²)⁴`, `s = (x − center)/width`, for `|s| < 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
}

impl Bump {
    fn offset(&self, x: f64, grid: &Grid1D) -> f64 {
        let mut d = x - self.center;
        if grid.boundary() == Boundary::Periodic {
            let l = grid.length();
            d -= l * (d / l).round();
        }
        d / self.width
    }

    /// `(φ, φ′, φ″)` at `x`.
    fn eval(&self, x: f64, grid: &Grid1D) -> (f64, f64, f64) {
        let s = self.offset(x, grid);
        if s.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - s * s;
        let w = self.width;
        (
            q.powi(4),
            -8.0 * s * q.powi(3) / w,
            (-8.0 * q.powi(3) + 48.0 * s * s * q * q) / (w * w),
        )
    }
}

/// Test functions `ψ(t, x) = τ(t) φ(x)` with `τ = (1 − t/T)³`, and the
/// levels `v` at which the entropy inequality is probed.
#[derive(Clone, Debug)]
pub struct TestBank {
    pub bumps: Vec<Bump>,
    pub levels: Vec<f64>,
}

impl TestBank {
    /// Five narrow bumps across the domain and one wide bump, probed at
    /// `levels`.
    pub fn standard(grid: &Grid1D, levels: Vec<f64>) -> Self {
        let l = grid.length();
        let mut bumps: Vec<Bump> = [0.2, 0.35, 0.5, 0.65, 0.8]
            .iter()
            .map(|&c| Bump {
                center: c * l,
                width: l / 8.0,
            })
            .collect();
        bumps.push(Bump {
            center: 0.5 * l,
            width: l / 3.0,
        });
        TestBank { bumps, levels }
    }

    /// `count` levels evenly spread over `[lo, hi]`.
    pub fn levels_between(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        let count = count.max(2);
        (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
    }
}

/// Residual of the weak entropy inequality for every `(ψ, v)` pair.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    /// `values[b][k]` for bump `b` and level `k`.
    pub values: Vec<Vec<f64>>,
    pub levels: Vec<f64>,
    pub h: f64,
}

impl ResidualReport {
    pub fn min(&self) -> f64 {
        self.values.iter().flatten().fold(f64::INFINITY, |m, &x| m.min(x))
    }

    /// `max(0, −min)`.
    pub fn deficit(&self) -> f64 {
        (-self.min()).max(0.0)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.min() >= -tol
    }
}

/// Discrete left side of the Kružkov entropy inequality, to be `≥ 0`:
///
/// ```text
///   ∫∫ |ρ−v| ψₜ + Q ψₓ + ε |ρ−v| ψₓₓ + sgn(ρ−v) A(ρ) ψ
///    + ν (|B(ρ)−B(v)| L_r[ψ] + sgn(ρ−v) L^r[B(ρ)] ψ)  dx dt  + ∫ |ρ₀−v| ψ(0) dx
/// ```
///
/// with `Q = sgn(ρ−v)(F(ρ) − F(v))`, `L_r` the near part (second-order
/// form) and `L^r` the far part (difference form) of the split operator.
/// Space integrals are midpoint sums, the time integral is the trapezoid
/// rule over the snapshots.
pub fn entropy_residual(
    traj: &Trajectory,
    model: &ModelSpec,
    op: &FractionalOperator,
    bank: &TestBank,
) -> Result<ResidualReport> {
    let grid = *op.grid();
    let n = grid.n_cells();
    let h = grid.spacing();
    let times = traj.times();
    let horizon = *times.last().ok_or_else(|| Error::Usage("empty trajectory".into()))?;
    if horizon <= 0.0 {
        return Err(Error::Usage("trajectory must span a positive time".into()));
    }
    let weights = trapezoid_weights(&times);

    // φ, φ′, φ″ and L_r[φ] per bump
    let mut profiles = Vec::with_capacity(bank.bumps.len());
    for bump in &bank.bumps {
        let (mut p, mut d1, mut d2) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            (p[i], d1[i], d2[i]) = bump.eval(grid.x(i), &grid);
        }
        let near = op.apply_split(&Field::from_vec_unchecked(grid, p.clone()))?.near;
        profiles.push((p, d1, d2, near.into_values()));
    }

    let mut values = vec![vec![0.0; bank.levels.len()]; bank.bumps.len()];
    for ((t, f), w) in traj.snapshots.iter().zip(&weights) {
        if *w == 0.0 {
            continue;
        }
        if f.grid() != &grid {
            return Err(Error::Usage("trajectory and operator live on different grids".into()));
        }
        let s = 1.0 - t / horizon;
        let tau = s * s * s;
        let dtau = -3.0 * s * s / horizon;
        let rho = f.values();
        let b_rho: Vec<f64> = rho.iter().map(|&r| model.diffusion.eval(r)).collect();
        let far = if model.nu > 0.0 {
            op.apply_split(&Field::from_vec_unchecked(grid, b_rho.clone()))?.far.into_values()
        } else {
            vec![0.0; n]
        };
        for (k, &v) in bank.levels.iter().enumerate() {
            let fv = model.flux.eval(v);
            let bv = model.diffusion.eval(v);
            for (b, (p, d1, d2, near)) in profiles.iter().enumerate() {
                let mut acc = 0.0;
                for i in 0..n {
                    let sg = sgn(rho[i] - v);
                    let eta = (rho[i] - v).abs();
                    let q = sg * (model.flux.eval(rho[i]) - fv);
                    let mut term = eta * dtau * p[i] + q * tau * d1[i] + sg * model.source.eval(rho[i]) * tau * p[i];
                    if model.eps > 0.0 {
                        term += model.eps * eta * tau * d2[i];
                    }
                    if model.nu > 0.0 {
                        term += model.nu * ((b_rho[i] - bv).abs() * tau * near[i] + sg * far[i] * tau * p[i]);
                    }
                    acc += term;
                }
                values[b][k] += w * h * acc;
            }
        }
    }

    let rho0 = traj.initial().values();
    for (b, (p, ..)) in profiles.iter().enumerate() {
        for (k, &v) in bank.levels.iter().enumerate() {
            values[b][k] += h * rho0.iter().zip(p).map(|(r, phi)| (r - v).abs() * phi).sum::<f64>();
        }
    }
    Ok(ResidualReport {
        values,
        levels: bank.levels.clone(),
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{Diffusion, Flux};
    use crate::solver::{Solver, SolverConfig};
    use proptest::prelude::*;

    fn grid(n: usize, b: Boundary) -> Grid1D {
        Grid1D::new(1.0, n, b).unwrap()
    }

    #[test]
    fn chi_indicators() {
        let g = grid(4, Boundary::Periodic);
        let vg = VGrid::new(-2.0, 2.0, 8).unwrap();
        let f = Field::new(g, vec![2.0, -1.0, 0.0, 0.25]).unwrap();
        let k = chi(&f, &vg).unwrap();
        let row = |i: usize| (0..8).map(|c| k.at(i, c)).collect::<Vec<_>>();
        assert_eq!(row(0), vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(row(1), vec![0.0, 0.0, -1.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(row(2), vec![0.0; 8]);
        assert_eq!(row(3), vec![0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn chi_range_error_names_cell() {
        let g = grid(4, Boundary::Periodic);
        let vg = VGrid::new(-1.0, 1.0, 8).unwrap();
        let f = Field::new(g, vec![0.0, 0.5, 1.5, 0.0]).unwrap();
        assert!(matches!(chi(&f, &vg), Err(Error::Range { cell: 2, .. })));
        let away = VGrid::new(1.0, 3.0, 8).unwrap();
        assert!(chi(&Field::constant(g, 2.0), &away).is_err());
    }

    #[test]
    fn moments() {
        let g = grid(4, Boundary::Periodic);
        let vg = VGrid::new(-3.0, 3.0, 60).unwrap();
        let f = Field::new(g, vec![2.0, -1.3, 0.0, 0.77]).unwrap();
        let k = chi(&f, &vg).unwrap();
        let m1 = moment(&k, |_| 1.0);
        for (a, b) in m1.values().iter().zip(f.values()) {
            assert!((a - b).abs() <= vg.dv());
        }
        let m2 = moment(&k, |v| 2.0 * v);
        assert!((m2.values()[0] - 4.0).abs() <= 2.0 * vg.dv());
        assert_eq!(m2.values()[2], 0.0);
    }

    fn burgers(nu: f64, alpha: f64, eps: f64) -> ModelSpec {
        ModelSpec::from_preset("burgers(0.5,2)", nu, alpha, eps).unwrap()
    }

    #[test]
    fn n_vanishes_for_constants_and_saturated_levels() {
        let g = grid(32, Boundary::Periodic);
        let m = burgers(1.0, 0.5, 0.0);
        let op = FractionalOperator::build_default(g, 0.5).unwrap();
        let vg = VGrid::new(-2.0, 2.0, 16).unwrap();
        let n = dissipation_n(&Field::constant(g, 0.3), &op, &vg, &m).unwrap();
        assert!(n.iter().all(|&x| x == 0.0));
        let f = Field::from_fn(g, |x| 0.5 * (6.0 * x).sin()).unwrap();
        let n = dissipation_n(&f, &op, &vg, &m).unwrap();
        for i in 0..32 {
            for c in [0, 1, 14, 15] {
                assert!(n[i * 16 + c].abs() < 1e-12);
            }
        }
    }

    /// `½ (sgn(ρ−v) Lρ − L|ρ−v|)` from two operator applications.
    fn n_direct(f: &Field, op: &FractionalOperator, v: f64, b: &Diffusion) -> Vec<f64> {
        let bf = f.map(|r| b.eval(r));
        let lb = op.apply(&bf).unwrap();
        let bv = b.eval(v);
        let labs = op.apply_exterior(&bf.map(|x| (x - bv).abs()), bv.abs()).unwrap();
        (0..f.len())
            .map(|i| 0.5 * (sgn(f.values()[i] - v) * lb.values()[i] - labs.values()[i]))
            .collect()
    }

    #[test]
    fn n_matches_operator_form_and_is_positive_at_a_jump() {
        for boundary in [Boundary::Periodic, Boundary::ZeroExtension] {
            let g = grid(32, boundary);
            let m = burgers(1.0, 0.5, 0.0);
            let op = FractionalOperator::build_default(g, 0.5).unwrap();
            let f = Field::from_fn(g, |x| if x < 0.5 { 1.0 } else { 0.2 }).unwrap();
            let vg = VGrid::new(-1.0, 2.0, 12).unwrap();
            let n = dissipation_n(&f, &op, &vg, &m).unwrap();
            for c in 0..12 {
                let direct = n_direct(&f, &op, vg.center(c), &m.diffusion);
                for i in 0..32 {
                    assert!((n[i * 12 + c] - direct[i]).abs() < 1e-10);
                }
            }
            // v = 0.625 lies strictly between the two states
            let c = vg.cell_of(0.6);
            assert!((vg.center(c) - 0.625).abs() < 1e-12);
            assert!(n[15 * 12 + c] > 0.0 && n[16 * 12 + c] > 0.0);
        }
    }

    #[test]
    fn m_deposits_gradient_energy() {
        let g = grid(64, Boundary::Periodic);
        let vg = VGrid::new(-2.0, 2.0, 40).unwrap();
        assert!(dissipation_m(&Field::constant(g, 0.5), 0.1, &vg).unwrap().iter().all(|&x| x == 0.0));
        let zg = grid(64, Boundary::ZeroExtension);
        let ramp = Field::from_fn(zg, |x| 1.5 * x - 0.5).unwrap();
        assert!(dissipation_m(&ramp, 0.0, &vg).unwrap().iter().all(|&x| x == 0.0));
        let m = dissipation_m(&ramp, 0.1, &vg).unwrap();
        for i in 1..63 {
            let row: f64 = m[i * 40..(i + 1) * 40].iter().sum::<f64>() * vg.dv();
            assert!((row - 0.1 * 1.5 * 1.5).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_data_has_empty_budget() {
        let g = grid(32, Boundary::Periodic);
        let m = burgers(0.5, 0.5, 0.01);
        let s = Solver::new(SolverConfig::new(m.clone(), g, 0.2).with_uniform_outputs(8)).unwrap();
        let traj = s.run(&Field::zeros(g)).unwrap();
        let vg = VGrid::new(-1.0, 1.0, 10).unwrap();
        let b = measure_budget(&traj, s.operator(), &vg, &m).unwrap();
        assert!(b.m_total.iter().all(|&x| x == 0.0));
        assert_eq!(b.edge_ratio(), 0.0);
    }

    #[test]
    fn constant_trajectory_has_zero_residual() {
        let g = grid(32, Boundary::Periodic);
        let m = burgers(0.5, 0.5, 0.01);
        let s = Solver::new(SolverConfig::new(m.clone(), g, 0.2).with_uniform_outputs(8)).unwrap();
        let traj = s.run(&Field::constant(g, 0.4)).unwrap();
        let bank = TestBank::standard(&g, vec![0.4]);
        let r = entropy_residual(&traj, &m, s.operator(), &bank).unwrap();
        assert!(r.values.iter().flatten().all(|x| x.abs() < 1e-10));
    }

    /// Above the solution range the residual is the weak form of the
    /// conservation law tested against `ψ`, so it is small but not signed.
    #[test]
    fn residual_reduces_to_weak_form_above_range() {
        let g = grid(128, Boundary::Periodic);
        let m = burgers(0.3, 0.5, 0.005);
        let s = Solver::new(SolverConfig::new(m.clone(), g, 0.2).with_uniform_outputs(64)).unwrap();
        let rho0 = Field::from_fn(g, |x| 0.5 + 0.3 * (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        let traj = s.run(&rho0).unwrap();
        let bank = TestBank::standard(&g, vec![5.0]);
        let r = entropy_residual(&traj, &m, s.operator(), &bank).unwrap();
        for row in &r.values {
            assert!(row[0].abs() < 10.0 * g.spacing(), "{row:?}");
        }
    }

    #[test]
    fn weak_form_oracle() {
        // For v above the range, |ρ−v| = v−ρ and the residual is minus the
        // weak form plus v times the weak form of a constant; check against
        // a direct quadrature of  ∫∫ ρ ψₜ + F(ρ) ψₓ − ν ρ L ψ + ε ρ ψₓₓ.
        let g = grid(64, Boundary::Periodic);
        let m = burgers(0.3, 0.5, 0.005);
        let s = Solver::new(SolverConfig::new(m.clone(), g, 0.1).with_uniform_outputs(16)).unwrap();
        let rho0 = Field::from_fn(g, |x| 0.5 + 0.3 * (2.0 * std::f64::consts::PI * x).cos()).unwrap();
        let traj = s.run(&rho0).unwrap();
        let v = 3.0;
        let bump = Bump { center: 0.5, width: 0.25 };
        let bank = TestBank { bumps: vec![bump], levels: vec![v] };
        let r = entropy_residual(&traj, &m, s.operator(), &bank).unwrap();

        let h = g.spacing();
        let phi: Vec<(f64, f64, f64)> = (0..64).map(|i| bump.eval(g.x(i), &g)).collect();
        let phi_field = Field::new(g, phi.iter().map(|p| p.0).collect()).unwrap();
        let l_phi = s.operator().apply(&phi_field).unwrap();
        let weights = trapezoid_weights(&traj.times());
        let mut weak = 0.0;
        for ((t, f), w) in traj.snapshots.iter().zip(&weights) {
            let sfac = 1.0 - t / 0.1;
            let (tau, dtau) = (sfac.powi(3), -3.0 * sfac * sfac / 0.1);
            let mut acc = 0.0;
            for (i, &(p, d1, d2)) in phi.iter().enumerate() {
                let r = f.values()[i];
                // weak form of ρₜ + F(ρ)ₓ + ν Lρ − ε ρₓₓ = 0 against −ψ
                acc += (v - r) * dtau * p - (m.flux.eval(r) - m.flux.eval(v)) * tau * d1
                    + m.eps * (v - r) * tau * d2
                    + m.nu * r * tau * l_phi.values()[i];
            }
            weak += w * h * acc;
        }
        weak += h * rho0.values().iter().zip(&phi).map(|(r, p)| (v - r) * p.0).sum::<f64>();
        assert!((r.values[0][0] - weak).abs() < 1e-9, "{} vs {weak}", r.values[0][0]);
    }

    #[test]
    fn levels_helper() {
        assert_eq!(TestBank::levels_between(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn vgrid_validation() {
        assert!(VGrid::new(1.0, 1.0, 4).is_err());
        assert!(VGrid::new(0.0, 1.0, 0).is_err());
        let f = Field::from_fn(grid(8, Boundary::Periodic), |x| 3.0 * x - 0.5).unwrap();
        let d = VGrid::default_for(&f);
        assert!(d.v_min() < f.min() && d.v_max() > f.max() && d.n_v() == 64);
        assert_eq!(d.cell_of(d.v_max()), 63);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn n_is_nonnegative(
            values in prop::collection::vec(-1.5f64..1.5, 24),
            alpha_pick in 0usize..3,
            cubic in any::<bool>(),
            periodic in any::<bool>(),
        ) {
            let alpha = [0.25, 0.5, 0.75][alpha_pick];
            let g = grid(24, if periodic { Boundary::Periodic } else { Boundary::ZeroExtension });
            let mut m = burgers(1.0, alpha, 0.0);
            if cubic {
                m = m.with_diffusion(Diffusion::Cubic).unwrap();
            }
            let op = FractionalOperator::build_default(g, alpha).unwrap();
            let f = Field::new(g, values).unwrap();
            let vg = VGrid::new(-2.0, 2.0, 20).unwrap();
            let n = dissipation_n(&f, &op, &vg, &m).unwrap();
            prop_assert!(n.iter().all(|&x| x >= -1e-12));
        }

        #[test]
        fn kinetic_sign_structure(values in prop::collection::vec(-1.9f64..1.9, 16)) {
            let g = grid(16, Boundary::Periodic);
            let vg = VGrid::new(-2.0, 2.0, 33).unwrap();
            let f = Field::new(g, values).unwrap();
            let k = chi(&f, &vg).unwrap();
            for i in 0..16 {
                for c in 0..33 {
                    let u = k.at(i, c);
                    prop_assert!(u.abs() <= 1.0);
                    // the cell straddling 0 carries both signs of v
                    prop_assert!(u * sgn(vg.center(c)) >= 0.0 || vg.center(c).abs() < vg.dv());
                }
            }
            let m = moment(&k, |_| 1.0);
            for (a, b) in m.values().iter().zip(f.values()) {
                prop_assert!((a - b).abs() <= vg.dv());
            }
        }
    }

    #[test]
    fn flux_used_in_residual_is_the_model_flux() {
        // a linear flux with speed 0 leaves only time and initial terms
        let g = grid(32, Boundary::Periodic);
        let m = ModelSpec::new(Flux::Power { a: 0.0, iota: 1 }, 0.0, 0.5, 0.0).unwrap();
        let s = Solver::new(SolverConfig::new(m.clone(), g, 0.5).with_uniform_outputs(50)).unwrap();
        let rho0 = Field::from_fn(g, |x| (6.0 * x).sin()).unwrap();
        let traj = s.run(&rho0).unwrap();
        let bank = TestBank::standard(&g, vec![-0.2, 0.0, 0.3]);
        let r = entropy_residual(&traj, &m, s.operator(), &bank).unwrap();
        // ∫ τ′ dt + τ(0) = 0 exactly for a frozen field; trapezoid error only
        assert!(r.values.iter().flatten().all(|x| x.abs() < 1e-3));
    }
}
