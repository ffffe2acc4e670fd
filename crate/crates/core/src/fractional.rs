//! Discrete fractional Laplacian `(−Δ)^{α/2}` for `α ∈ (0, 1)` in one
//! dimension.
//!
//! The singular integral
//!
//! ```text
//!   L φ(x) = c(α) P.V. ∫ (φ(x) − φ(x + z)) / |z|^{1+α} dz
//! ```
//!
//! is discretized by integrating the kernel exactly over the cell windows
//! `((j − ½)h, (j + ½)h)`, `j ≥ 1`, using the antiderivative `−z^{−α}/α`.
//! The central window is dropped.
//!
//! Boundary treatment:
//!
//! * **Periodic**: every periodic image of the kernel is folded onto the `N`
//!   residues, giving a circulant stencil `c_k`. The first images are summed
//!   directly and the rest is closed with an Euler–Maclaurin tail, so the
//!   stencil carries the whole-line kernel acting on the periodic extension.
//!   The truncation radius only decides which `W_j` are listed and what
//!   `tail_mass` reports.
//! * **Zero extension**: neighbors outside the domain take a constant exterior
//!   value (0 for [`FractionalOperator::apply`]). Kernel mass beyond the last
//!   in-domain neighbor, including the part beyond the truncation radius,
//!   acts against that exterior value.
//!
//! All weights are nonnegative, so for every convex `η` the discrete
//! convexity inequality `η′(f_i)(Lf)_i ≥ (L η(f))_i` holds cell by cell.

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Field, Grid1D};
use crate::quad;

/// Periodic images summed explicitly before the Euler–Maclaurin closure.
const EXPLICIT_IMAGES: usize = 16;

/// Largest window count accepted by [`FractionalOperator::build`].
const MAX_WINDOWS: usize = 50_000_000;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    Ok(())
}

/// Normalizing constant `c(1, α) = α 2^{α−1} π^{−1/2} Γ((1+α)/2) / Γ((2−α)/2)`.
///
/// Γ comes from the Lanczos approximation in `statrs` (g = 10.9,
/// 11 coefficients), accurate to about 1e-15 relative on `(½, 1)`.
pub fn coefficient(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha * 2f64.powf(alpha - 1.0) / std::f64::consts::PI.sqrt()
        * gamma(0.5 * (1.0 + alpha))
        / gamma(0.5 * (2.0 - alpha)))
}

/// Constant `C_α` with `∫ c(α)|z|^{−1−α} min(bv|z|, 2 l1) dz = C_α l1^{1−α} bv^α`.
///
/// Since `‖ρ(·+z) − ρ‖_{L¹} ≤ min(bv|z|, 2 l1)`, this bounds `‖Lρ‖_{L¹}`.
pub fn interpolation_constant(alpha: f64) -> Result<f64> {
    let c = coefficient(alpha)?;
    Ok(2f64.powf(2.0 - alpha) * c / (alpha * (1.0 - alpha)))
}

/// Fourier multiplier `|ξ|^α` of the continuous operator.
pub fn continuous_symbol(alpha: f64, xi: f64) -> f64 {
    xi.abs().powf(alpha)
}

/// `lo^p − hi^p` for `0 < lo < hi` without cancellation when `hi ≈ lo`.
fn pow_gap(lo: f64, hi: f64, p: f64) -> f64 {
    -lo.powf(p) * (p * ((hi - lo) / lo).ln_1p()).exp_m1()
}

/// `Σ_{m≥0} (x_m − ½)^{−α} − (x_m + ½)^{−α}` with `x_m = a + m n`.
fn image_sum(a: f64, n: f64, alpha: f64) -> f64 {
    let mut sum = 0.0;
    for m in 0..EXPLICIT_IMAGES {
        let x = a + m as f64 * n;
        sum += pow_gap(x - 0.5, x + 0.5, -alpha);
    }
    // Euler–Maclaurin remainder for m ≥ M:
    // ∫_M^∞ g + g(M)/2 − g′(M)/12 + g‴(M)/720.
    let x = a + EXPLICIT_IMAGES as f64 * n;
    let (lo, hi) = (x - 0.5, x + 0.5);
    let integral = pow_gap(lo, hi, 1.0 - alpha) / (-(1.0 - alpha) * n);
    let g = pow_gap(lo, hi, -alpha);
    let d1 = -alpha * pow_gap(lo, hi, -alpha - 1.0) * n;
    let d3 = -alpha * (alpha + 1.0) * (alpha + 2.0) * pow_gap(lo, hi, -alpha - 3.0) * n.powi(3);
    sum + integral + 0.5 * g - d1 / 12.0 + d3 / 720.0
}

/// Near and far parts of the split operator.
#[derive(Clone, Debug)]
pub struct SplitParts {
    /// Windows inside the split radius, second-order form
    /// `f(x+z) − f(x) − f′(x) z`.
    pub near: Field,
    /// Windows outside the split radius, difference form `f(x+z) − f(x)`.
    pub far: Field,
}

/// Precomputed quadrature of the fractional Laplacian on one grid.
#[derive(Clone, Debug)]
pub struct FractionalOperator {
    grid: Grid1D,
    alpha: f64,
    coeff: f64,
    /// `(coeff/α) h^{−α}`; window masses are this times a gap of powers.
    scale: f64,
    radius: f64,
    weights: Vec<f64>,
    tail_mass: f64,
    split_radius: f64,
    /// Folded circulant stencil `c_0..c_{N−1}` (`c_0 = 0`), periodic only.
    stencil: Vec<f64>,
}

impl FractionalOperator {
    /// Default truncation radius: `L/2` on periodic grids, `8L` under zero
    /// extension.
    pub fn default_radius(grid: &Grid1D) -> f64 {
        match grid.boundary() {
            Boundary::Periodic => 0.5 * grid.length(),
            Boundary::ZeroExtension => 8.0 * grid.length(),
        }
    }

    pub fn build_default(grid: Grid1D, alpha: f64) -> Result<Self> {
        Self::build(grid, alpha, Self::default_radius(&grid))
    }

    /// Builds the window weights `W_1..W_J` with `J = ⌈R/h − ½⌉`. The radius
    /// is snapped to the window edge `(J + ½)h`, so the listed weights plus
    /// `tail_mass` account for the whole kernel outside the central window.
    pub fn build(grid: Grid1D, alpha: f64, radius: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let h = grid.spacing();
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::domain(format!("truncation radius must be positive, got {radius}")));
        }
        if grid.boundary() == Boundary::Periodic && radius < 0.5 * grid.length() * (1.0 - 1e-12) {
            return Err(Error::domain(format!(
                "truncation radius {radius} is below L/2 = {} on a periodic grid",
                0.5 * grid.length()
            )));
        }
        let windows = (radius / h - 0.5 - 1e-9).ceil().max(0.0);
        if windows > MAX_WINDOWS as f64 {
            return Err(Error::domain(format!("truncation radius {radius} needs too many windows")));
        }
        let windows = windows as usize;
        let coeff = coefficient(alpha)?;
        let scale = coeff / alpha * h.powf(-alpha);
        let weights = (1..=windows)
            .map(|j| scale * pow_gap(j as f64 - 0.5, j as f64 + 0.5, -alpha))
            .collect();
        let snapped = (windows as f64 + 0.5) * h;
        let tail_mass = 2.0 * scale * (windows as f64 + 0.5).powf(-alpha);

        let n = grid.n_cells();
        let stencil = match grid.boundary() {
            Boundary::Periodic => {
                let nf = n as f64;
                let mut c = vec![0.0; n];
                for (k, ck) in c.iter_mut().enumerate().skip(1) {
                    *ck = scale * (image_sum(k as f64, nf, alpha) + image_sum((n - k) as f64, nf, alpha));
                }
                c
            }
            Boundary::ZeroExtension => Vec::new(),
        };

        let mut op = FractionalOperator {
            grid,
            alpha,
            coeff,
            scale,
            radius: snapped,
            weights,
            tail_mass,
            split_radius: 0.0,
            stencil,
        };
        op.split_radius = op.default_split_radius();
        Ok(op)
    }

    /// Largest admissible split radius (exclusive).
    fn split_upper(&self) -> f64 {
        match self.grid.boundary() {
            Boundary::Periodic => self.radius.min(0.5 * self.grid.length()),
            Boundary::ZeroExtension => self.radius,
        }
    }

    fn default_split_radius(&self) -> f64 {
        let h = self.grid.spacing();
        let upper = self.split_upper();
        if 4.0 * h < upper {
            4.0 * h
        } else {
            0.5 * (h + upper)
        }
    }

    /// Replaces the split radius `r`, which must lie in `(h, R)` (and below
    /// `L/2` on periodic grids).
    pub fn with_split_radius(mut self, r: f64) -> Result<Self> {
        let h = self.grid.spacing();
        if !(r > h && r < self.split_upper()) {
            return Err(Error::domain(format!(
                "split radius {r} must lie in ({h}, {})",
                self.split_upper()
            )));
        }
        self.split_radius = r;
        Ok(self)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    /// Window weights `W_1..W_J`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Kernel mass beyond the (snapped) truncation radius, both sides.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Truncation radius snapped to the outer edge of the last window.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn split_radius(&self) -> f64 {
        self.split_radius
    }

    /// Folded circulant stencil `c_k`, `k = 0..N` with `c_0 = 0`. Empty under
    /// zero extension.
    pub fn stencil(&self) -> &[f64] {
        &self.stencil
    }

    /// Coefficient of `f_i` in `(Lf)_i`. Under zero extension this is the
    /// full kernel mass outside the central window, `2 c (h/2)^{−α} / α`;
    /// periodic grids drop the images that land back on cell `i`.
    pub fn diagonal_mass(&self) -> f64 {
        match self.grid.boundary() {
            Boundary::Periodic => self.stencil.iter().sum(),
            Boundary::ZeroExtension => 2.0 * self.scale * 0.5f64.powf(-self.alpha),
        }
    }

    /// Kernel mass beyond `d` in-domain windows on one side (zero extension).
    fn outer_mass(&self, d: usize) -> f64 {
        self.scale * (d as f64 + 0.5).powf(-self.alpha)
    }

    fn check_grid(&self, f: &Field) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::Usage("field and operator live on different grids".into()));
        }
        Ok(())
    }

    /// `(Lf)_i` with zero exterior values.
    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.apply_exterior(f, 0.0)
    }

    /// `(Lf)_i` where cells outside the domain hold the constant `outside`.
    /// Periodic grids ignore `outside`.
    pub fn apply_exterior(&self, f: &Field, outside: f64) -> Result<Field> {
        self.check_grid(f)?;
        let mut out = vec![0.0; f.len()];
        self.apply_into(f.values(), outside, &mut out);
        Ok(Field::from_vec_unchecked(self.grid, out))
    }

    /// Slice form of [`apply_exterior`](Self::apply_exterior) for hot loops.
    pub(crate) fn apply_into(&self, f: &[f64], outside: f64, out: &mut [f64]) {
        let n = f.len();
        match self.grid.boundary() {
            Boundary::Periodic => {
                let c = &self.stencil;
                for i in 0..n {
                    let fi = f[i];
                    let mut acc = 0.0;
                    for k in 1..n - i {
                        acc += c[k] * (fi - f[i + k]);
                    }
                    for k in n - i..n {
                        acc += c[k] * (fi - f[i + k - n]);
                    }
                    out[i] = acc;
                }
            }
            Boundary::ZeroExtension => {
                let w = &self.weights;
                let jmax = w.len();
                for i in 0..n {
                    let fi = f[i];
                    let right = jmax.min(n - 1 - i);
                    let left = jmax.min(i);
                    let mut acc = 0.0;
                    for j in 1..=right {
                        acc += w[j - 1] * (fi - f[i + j]);
                    }
                    for j in 1..=left {
                        acc += w[j - 1] * (fi - f[i - j]);
                    }
                    acc += (self.outer_mass(right) + self.outer_mass(left)) * (fi - outside);
                    out[i] = acc;
                }
            }
        }
    }

    /// `out_i = ½ Σ_z w(z) (|g(x_i+z)| − s_i g(x_i+z))` with `g` equal to
    /// `outside` beyond the domain. When `s_i g_i = |g_i|` this equals
    /// `½ (s_i (Lg)_i − (L|g|)_i)`, written as a sum of nonnegative terms.
    pub(crate) fn defect_into(&self, g: &[f64], outside: f64, sign: &[f64], out: &mut [f64]) {
        let n = g.len();
        let term = |s: f64, x: f64| x.abs() - s * x;
        match self.grid.boundary() {
            Boundary::Periodic => {
                let c = &self.stencil;
                for i in 0..n {
                    let s = sign[i];
                    let mut acc = 0.0;
                    for k in 1..n - i {
                        acc += c[k] * term(s, g[i + k]);
                    }
                    for k in n - i..n {
                        acc += c[k] * term(s, g[i + k - n]);
                    }
                    out[i] = 0.5 * acc;
                }
            }
            Boundary::ZeroExtension => {
                let w = &self.weights;
                let jmax = w.len();
                for i in 0..n {
                    let s = sign[i];
                    let right = jmax.min(n - 1 - i);
                    let left = jmax.min(i);
                    let mut acc = 0.0;
                    for j in 1..=right {
                        acc += w[j - 1] * term(s, g[i + j]);
                    }
                    for j in 1..=left {
                        acc += w[j - 1] * term(s, g[i - j]);
                    }
                    acc += (self.outer_mass(right) + self.outer_mass(left)) * term(s, outside);
                    out[i] = 0.5 * acc;
                }
            }
        }
    }

    /// Near/far decomposition with zero exterior values.
    pub fn apply_split(&self, f: &Field) -> Result<SplitParts> {
        self.apply_split_exterior(f, 0.0)
    }

    /// Splits `−Lf` into the windows inside the split radius (second-order
    /// form with centered `f′`) and those outside (difference form), so
    /// that `near + far = −Lf`.
    pub fn apply_split_exterior(&self, f: &Field, outside: f64) -> Result<SplitParts> {
        self.check_grid(f)?;
        let h = self.grid.spacing();
        let r = self.split_radius;
        if !(r > h && r < self.split_upper()) {
            return Err(Error::domain(format!(
                "split radius {r} must lie in ({h}, {})",
                self.split_upper()
            )));
        }
        let near_windows = ((r / h - 0.5 + 1e-9).floor().max(0.0) as usize).min(self.weights.len());
        let v = f.values();
        let n = v.len();
        let periodic = self.grid.boundary() == Boundary::Periodic;
        let at = |i: isize| -> f64 {
            if periodic {
                v[i.rem_euclid(n as isize) as usize]
            } else if (0..n as isize).contains(&i) {
                v[i as usize]
            } else {
                outside
            }
        };

        let mut near = vec![0.0; n];
        for (i, out) in near.iter_mut().enumerate() {
            let ii = i as isize;
            let fi = v[i];
            let d = (at(ii + 1) - at(ii - 1)) / (2.0 * h);
            let mut acc = 0.0;
            for j in 1..=near_windows {
                let z = j as f64 * h;
                let ji = j as isize;
                acc += self.weights[j - 1] * ((at(ii + ji) - fi - d * z) + (at(ii - ji) - fi + d * z));
            }
            *out = acc;
        }

        let mut far = vec![0.0; n];
        if periodic {
            let mut c = self.stencil.clone();
            for j in 1..=near_windows {
                c[j % n] -= self.weights[j - 1];
                c[(n - j % n) % n] -= self.weights[j - 1];
            }
            for ck in c.iter_mut() {
                *ck = ck.max(0.0);
            }
            for (i, out) in far.iter_mut().enumerate() {
                let fi = v[i];
                let mut acc = 0.0;
                for (k, ck) in c.iter().enumerate().skip(1) {
                    acc += ck * (v[(i + k) % n] - fi);
                }
                *out = acc;
            }
        } else {
            let w = &self.weights;
            let jmax = w.len();
            for (i, out) in far.iter_mut().enumerate() {
                let fi = v[i];
                let right = jmax.min(n - 1 - i);
                let left = jmax.min(i);
                let mut acc = 0.0;
                for j in near_windows + 1..=right {
                    acc += w[j - 1] * (v[i + j] - fi);
                }
                for j in near_windows + 1..=left {
                    acc += w[j - 1] * (v[i - j] - fi);
                }
                let outer = self.outer_mass(right.max(near_windows)) + self.outer_mass(left.max(near_windows));
                acc += outer * (outside - fi);
                *out = acc;
            }
        }
        Ok(SplitParts {
            near: Field::from_vec_unchecked(self.grid, near),
            far: Field::from_vec_unchecked(self.grid, far),
        })
    }

    /// Discrete symbol `s(k) = Σ_j c_j (1 − cos(2π k j / N))` of the periodic
    /// operator: `L e^{2πikx/L} = s(k) e^{2πikx/L}`.
    pub fn symbol(&self, k: usize) -> Result<f64> {
        if self.grid.boundary() != Boundary::Periodic {
            return Err(Error::Usage("the discrete symbol needs a periodic grid".into()));
        }
        let n = self.grid.n_cells();
        let theta = 2.0 * std::f64::consts::PI * (k % n) as f64 / n as f64;
        Ok(self
            .stencil
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, c)| c * (1.0 - (theta * j as f64).cos()))
            .sum())
    }
}

/// Bound on `∫ ‖ρ₀(·+z) − ρ₀‖_{L¹} d|μ_α − μ_β|(z)` from
/// `‖ρ₀(·+z) − ρ₀‖_{L¹} ≤ min(bv|z|, 2 l1)`: the kernel difference is
/// integrated against `bv·z` on `(0, r1)` and `2 l1` on `(r1, R)`, then
/// doubled for `z < 0`. `R` may be `f64::INFINITY`.
pub fn levy_difference_bound(alpha: f64, beta: f64, l1: f64, bv: f64, r1: f64, r_max: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_alpha(beta)?;
    if !(l1 >= 0.0 && l1.is_finite() && bv >= 0.0 && bv.is_finite()) {
        return Err(Error::domain(format!("l1 = {l1} and bv = {bv} must be finite and nonnegative")));
    }
    if !(r1 > 0.0 && r1.is_finite() && r_max > r1) {
        return Err(Error::domain(format!("need 0 < r1 < R, got r1 = {r1}, R = {r_max}")));
    }
    if alpha == beta {
        return Ok(0.0);
    }
    let (ca, cb) = (coefficient(alpha)?, coefficient(beta)?);
    // densities cross where c_α z^{−α} = c_β z^{−β}
    let crossing = (cb / ca).powf(1.0 / (beta - alpha));
    let (gmin, gmax) = (alpha.min(beta), alpha.max(beta));
    let ln_r1 = r1.ln();
    const REL: f64 = 1e-12;

    // (0, r1): z = r1 w^q with q(1 − γmax) = 1 removes the singularity.
    let inner = if bv == 0.0 {
        0.0
    } else {
        let q = 1.0 / (1.0 - gmax);
        let term = |c: f64, g: f64, ln_w: f64| c * ((1.0 - g) * ln_r1 + (q * (1.0 - g) - 1.0) * ln_w).exp();
        let f = |w: f64| {
            let lw = w.ln();
            q * (term(ca, alpha, lw) - term(cb, beta, lw)).abs()
        };
        let mut cuts = vec![0.0, 1.0];
        if crossing > 0.0 && crossing < r1 {
            cuts.insert(1, (crossing / r1).powf(1.0 / q));
        }
        bv * cuts.windows(2).map(|s| quad::integrate(f, s[0], s[1], 0.0, REL)).sum::<f64>()
    };

    // (r1, R): z = r1 u^{−p} with p γmin = 1 maps (r1, ∞) to (0, 1].
    let outer = if l1 == 0.0 {
        0.0
    } else {
        let p = 1.0 / gmin;
        let term = |c: f64, g: f64, ln_u: f64| c * (-g * ln_r1 + (p * g - 1.0) * ln_u).exp();
        let f = |u: f64| {
            let lu = u.ln();
            p * (term(ca, alpha, lu) - term(cb, beta, lu)).abs()
        };
        let u_lo = if r_max.is_finite() { (r_max / r1).powf(-1.0 / p) } else { 0.0 };
        let mut cuts = vec![u_lo, 1.0];
        if crossing > r1 && crossing < r_max {
            cuts.insert(1, (crossing / r1).powf(-1.0 / p));
        }
        2.0 * l1 * cuts.windows(2).map(|s| quad::integrate(f, s[0], s[1], 0.0, REL)).sum::<f64>()
    };
    Ok(2.0 * (inner + outer))
}
