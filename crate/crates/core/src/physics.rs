//! Flux laws, diffusion nonlinearities, sources, and the monotone numerical
//! fluxes of the convective term.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::preset::parse_call;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Probe points used to spot-check structural bounds.
const PROBE_RADIUS: f64 = 2.0;
const PROBE_COUNT: usize = 401;

fn probes() -> impl Iterator<Item = f64> {
    (0..PROBE_COUNT).map(|i| -PROBE_RADIUS + 2.0 * PROBE_RADIUS * i as f64 / (PROBE_COUNT - 1) as f64)
}

/// Samples inside `[lo, hi]` used when bounding a derivative over a range.
fn range_samples(lo: f64, hi: f64, extra: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=16).map(|i| lo + (hi - lo) * i as f64 / 16.0).collect();
    pts.extend(extra.iter().copied().filter(|&c| c > lo && c < hi));
    pts
}

/// Convective flux `F`.
#[derive(Clone)]
pub enum Flux {
    /// `F(ρ) = a ρ^ι`.
    Power { a: f64, iota: u32 },
    /// User-supplied `F` with derivative `f`. `critical` lists every point
    /// where `f` changes sign; between them `F` must be monotone.
    Custom {
        name: String,
        flux: ScalarFn,
        speed: ScalarFn,
        critical: Vec<f64>,
    },
}

impl Flux {
    pub fn custom(
        name: impl Into<String>,
        flux: impl Fn(f64) -> f64 + Send + Sync + 'static,
        speed: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mut critical: Vec<f64>,
    ) -> Self {
        critical.sort_by(f64::total_cmp);
        Flux::Custom {
            name: name.into(),
            flux: Arc::new(flux),
            speed: Arc::new(speed),
            critical,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Flux::Power { a, iota } => a * u.powi(*iota as i32),
            Flux::Custom { flux, .. } => flux(u),
        }
    }

    /// `f = F′`.
    pub fn speed(&self, u: f64) -> f64 {
        match self {
            Flux::Power { a, iota } => match iota {
                0 => 0.0,
                1 => *a,
                _ => a * *iota as f64 * u.powi(*iota as i32 - 1),
            },
            Flux::Custom { speed, .. } => speed(u),
        }
    }

    /// Sorted points where `f` may change sign.
    pub fn critical_points(&self) -> Vec<f64> {
        match self {
            Flux::Power { iota, .. } if *iota >= 2 => vec![0.0],
            Flux::Power { .. } => Vec::new(),
            Flux::Custom { critical, .. } => critical.clone(),
        }
    }

    /// `max |f|` over `[lo, hi]`, from the endpoints, the critical points and
    /// a uniform sample.
    pub fn max_speed(&self, lo: f64, hi: f64) -> f64 {
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        match self {
            Flux::Power { a, iota } => {
                let m = lo.abs().max(hi.abs());
                match iota {
                    0 => 0.0,
                    _ => a.abs() * *iota as f64 * m.powi(*iota as i32 - 1),
                }
            }
            Flux::Custom { critical, .. } => range_samples(lo, hi, critical)
                .into_iter()
                .fold(0.0, |m, u| m.max(self.speed(u).abs())),
        }
    }

    /// `F⁺(u) = ∫_0^u max(f, 0)`, exact for a piecewise-monotone `F`.
    fn positive_part(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let (lo, hi) = (u.min(0.0), u.max(0.0));
        let mut cuts = vec![lo];
        cuts.extend(self.critical_points().into_iter().filter(|&c| c > lo && c < hi));
        cuts.push(hi);
        let total: f64 = cuts
            .windows(2)
            .map(|w| (self.eval(w[1]) - self.eval(w[0])).max(0.0))
            .sum();
        if u > 0.0 {
            total
        } else {
            -total
        }
    }

    fn label(&self) -> String {
        match self {
            Flux::Power { a, iota } => format!("{a}*rho^{iota}"),
            Flux::Custom { name, .. } => name.clone(),
        }
    }
}

impl fmt::Debug for Flux {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Flux({})", self.label())
    }
}

/// Nonlinearity `B` inside the fractional term.
#[derive(Clone)]
pub enum Diffusion {
    Identity,
    /// `B(ρ) = ρ³/3`.
    Cubic,
    Custom {
        name: String,
        map: ScalarFn,
        slope: ScalarFn,
    },
}

impl Diffusion {
    pub fn custom(
        name: impl Into<String>,
        map: impl Fn(f64) -> f64 + Send + Sync + 'static,
        slope: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Diffusion::Custom {
            name: name.into(),
            map: Arc::new(map),
            slope: Arc::new(slope),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(Diffusion::Identity),
            "cubic" => Ok(Diffusion::Cubic),
            other => Err(Error::Configuration(format!(
                "unknown diffusion `{other}` (expected identity or cubic)"
            ))),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Diffusion::Identity => u,
            Diffusion::Cubic => u * u * u / 3.0,
            Diffusion::Custom { map, .. } => map(u),
        }
    }

    /// `b = B′`.
    pub fn slope(&self, u: f64) -> f64 {
        match self {
            Diffusion::Identity => 1.0,
            Diffusion::Cubic => u * u,
            Diffusion::Custom { slope, .. } => slope(u),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Diffusion::Identity)
    }

    /// `max b` over `[lo, hi]`.
    pub fn max_slope(&self, lo: f64, hi: f64) -> f64 {
        match self {
            Diffusion::Identity => 1.0,
            Diffusion::Cubic => lo.abs().max(hi.abs()).powi(2),
            Diffusion::Custom { .. } => range_samples(lo, hi, &[0.0])
                .into_iter()
                .fold(0.0, |m, u| m.max(self.slope(u))),
        }
    }
}

impl fmt::Debug for Diffusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diffusion::Identity => write!(f, "identity"),
            Diffusion::Cubic => write!(f, "cubic"),
            Diffusion::Custom { name, .. } => write!(f, "{name}"),
        }
    }
}

/// Source term `A`.
#[derive(Clone)]
pub enum Source {
    None,
    /// `A(ρ) = m ρ`.
    Linear { rate: f64 },
    /// `A(ρ) = β ρ (1 − ρ^k)` for `ρ ≥ 0`, `0` otherwise.
    BurgersFisher { beta: f64, k: u32 },
    Custom {
        name: String,
        map: ScalarFn,
    },
}

impl Source {
    pub fn custom(name: impl Into<String>, map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Source::Custom {
            name: name.into(),
            map: Arc::new(map),
        }
    }

    /// Parses `none`, `linear(m)` or `logistic(beta,k)`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, args) = parse_call(text)?;
        match (name.as_str(), args.as_slice()) {
            ("none", []) => Ok(Source::None),
            ("linear", [m]) => Ok(Source::Linear { rate: *m }),
            ("logistic", [beta, k]) => Ok(Source::BurgersFisher {
                beta: *beta,
                k: positive_integer("k", *k)?,
            }),
            _ => Err(Error::Configuration(format!(
                "unknown source `{text}` (expected none, linear(m) or logistic(beta,k))"
            ))),
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Source::None => 0.0,
            Source::Linear { rate } => rate * u,
            Source::BurgersFisher { beta, k } => {
                if u >= 0.0 {
                    beta * u * (1.0 - u.powi(*k as i32))
                } else {
                    0.0
                }
            }
            Source::Custom { map, .. } => map(u),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Source::None)
    }

    /// `A′` by central difference (one-sided at the kink of the
    /// Burgers–Fisher source).
    fn slope(&self, u: f64) -> f64 {
        match self {
            Source::None => 0.0,
            Source::Linear { rate } => *rate,
            Source::BurgersFisher { beta, k } => {
                if u > 0.0 {
                    beta * (1.0 - (*k as f64 + 1.0) * u.powi(*k as i32))
                } else {
                    0.0
                }
            }
            Source::Custom { .. } => {
                let d = 1e-6 * (1.0 + u.abs());
                (self.eval(u + d) - self.eval(u - d)) / (2.0 * d)
            }
        }
    }

    /// `max(0, −min A′)` over `[lo, hi]`: the stiffness of the source.
    pub fn negative_slope(&self, lo: f64, hi: f64) -> f64 {
        let min = match self {
            Source::None => 0.0,
            Source::Linear { rate } => *rate,
            Source::BurgersFisher { beta, k } => {
                let top = hi.max(0.0);
                (beta * (1.0 - (*k as f64 + 1.0) * top.powi(*k as i32))).min(0.0)
            }
            Source::Custom { .. } => range_samples(lo, hi, &[0.0])
                .into_iter()
                .fold(0.0, |m: f64, u| m.min(self.slope(u))),
        };
        (-min).max(0.0)
    }
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::None => write!(f, "none"),
            Source::Linear { rate } => write!(f, "linear({rate})"),
            Source::BurgersFisher { beta, k } => write!(f, "logistic({beta},{k})"),
            Source::Custom { name, .. } => write!(f, "{name}"),
        }
    }
}

/// Monotone two-point fluxes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxScheme {
    EngquistOsher,
    LocalLaxFriedrichs,
}

impl FluxScheme {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eo" | "engquist_osher" | "engquist-osher" => Some(FluxScheme::EngquistOsher),
            "llf" | "rusanov" | "local_lax_friedrichs" => Some(FluxScheme::LocalLaxFriedrichs),
            _ => None,
        }
    }
}

impl fmt::Display for FluxScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FluxScheme::EngquistOsher => "eo",
            FluxScheme::LocalLaxFriedrichs => "llf",
        })
    }
}

/// Complete model `∂ₜρ + ∂ₓF(ρ) + ν L B(ρ) − ε ∂ₓₓρ = A(ρ)` with the
/// one-sided source bounds `M1`, `M2`.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub flux: Flux,
    pub diffusion: Diffusion,
    pub source: Source,
    /// Upper bound on `A′`.
    pub m1: f64,
    /// Bound on `−A′` for `ρ ≤ 0`.
    pub m2: f64,
    pub nu: f64,
    pub alpha: f64,
    pub eps: f64,
}

fn positive_integer(name: &str, x: f64) -> Result<u32> {
    if x >= 1.0 && x.fract() == 0.0 && x <= 64.0 {
        Ok(x as u32)
    } else {
        Err(Error::Configuration(format!("{name} must be a positive integer, got {x}")))
    }
}

impl ModelSpec {
    /// Homogeneous model with `B` the identity.
    pub fn new(flux: Flux, nu: f64, alpha: f64, eps: f64) -> Result<Self> {
        let spec = ModelSpec {
            flux,
            diffusion: Diffusion::Identity,
            source: Source::None,
            m1: 0.0,
            m2: 0.0,
            nu,
            alpha,
            eps,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Replaces the source together with its bounds `M1`, `M2`.
    pub fn with_source(mut self, source: Source, m1: f64, m2: f64) -> Result<Self> {
        self.source = source;
        self.m1 = m1;
        self.m2 = m2;
        self.validate()?;
        Ok(self)
    }

    /// Replaces the source, using its natural bounds (see [`natural_bounds`]).
    pub fn with_natural_source(self, source: Source) -> Result<Self> {
        let (m1, m2) = natural_bounds(&source).ok_or_else(|| {
            Error::Configuration("custom sources need explicit bounds M1, M2".into())
        })?;
        self.with_source(source, m1, m2)
    }

    pub fn with_diffusion(mut self, diffusion: Diffusion) -> Result<Self> {
        self.diffusion = diffusion;
        self.validate()?;
        Ok(self)
    }

    pub fn with_flux(mut self, flux: Flux) -> Result<Self> {
        self.flux = flux;
        self.validate()?;
        Ok(self)
    }

    pub fn with_nu(mut self, nu: f64) -> Result<Self> {
        self.nu = nu;
        self.validate()?;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps(mut self, eps: f64) -> Result<Self> {
        self.eps = eps;
        self.validate()?;
        Ok(self)
    }

    /// Builds a model from a preset: `burgers(a,iota)`, `linear(a)` or
    /// `burgers_fisher(a,iota,beta,k)`.
    pub fn from_preset(text: &str, nu: f64, alpha: f64, eps: f64) -> Result<Self> {
        let (name, args) = parse_call(text)?;
        match (name.as_str(), args.as_slice()) {
            ("burgers", [a, iota]) => ModelSpec::new(
                Flux::Power {
                    a: *a,
                    iota: positive_integer("iota", *iota)?,
                },
                nu,
                alpha,
                eps,
            ),
            ("linear", [a]) => ModelSpec::new(Flux::Power { a: *a, iota: 1 }, nu, alpha, eps),
            ("burgers_fisher", [a, iota, beta, k]) => {
                burgers_fisher_spec(*a, positive_integer("iota", *iota)?, *beta, positive_integer("k", *k)?, nu, alpha)
                    .and_then(|s| s.with_eps(eps))
            }
            _ => Err(Error::Configuration(format!(
                "unknown model preset `{text}` (expected burgers(a,iota), linear(a) or burgers_fisher(a,iota,beta,k))"
            ))),
        }
    }

    /// Checks the structural hypotheses on parameters and by sampling.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::validation("model.alpha", "must lie in (0,1)"));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(Error::validation("model.nu", "must be finite and nonnegative"));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::validation("model.eps", "must be finite and nonnegative"));
        }
        if !(self.m1.is_finite() && self.m2 >= 0.0 && self.m2.is_finite()) {
            return Err(Error::Configuration(format!(
                "source bounds need finite M1 and M2 ≥ 0, got M1 = {}, M2 = {}",
                self.m1, self.m2
            )));
        }
        if self.diffusion.eval(0.0) != 0.0 {
            return Err(Error::Configuration("diffusion nonlinearity must satisfy B(0) = 0".into()));
        }
        if self.source.eval(0.0) != 0.0 {
            return Err(Error::Configuration("source must satisfy A(0) = 0".into()));
        }
        for v in probes() {
            let b = self.diffusion.slope(v);
            if b.is_nan() || b < 0.0 {
                return Err(Error::Configuration(format!("B′({v}) = {b} is negative")));
            }
            let a = self.source.slope(v);
            let slack = 1e-6 * (1.0 + self.m1.abs().max(self.m2));
            if !a.is_finite() || a > self.m1 + slack || (v <= 0.0 && a < -self.m2 - slack) {
                return Err(Error::Configuration(format!(
                    "A′({v}) = {a} violates the bounds M1 = {}, M2 = {}",
                    self.m1, self.m2
                )));
            }
        }
        Ok(())
    }
}

/// Tightest `(M1, M2)` for the built-in sources: `M1 = sup A′`,
/// `M2 = max(0, −inf_{v≤0} A′)`.
pub fn natural_bounds(source: &Source) -> Option<(f64, f64)> {
    match source {
        Source::None => Some((0.0, 0.0)),
        Source::Linear { rate } => Some((*rate, (-rate).max(0.0))),
        Source::BurgersFisher { beta, .. } => Some((*beta, 0.0)),
        Source::Custom { .. } => None,
    }
}

/// Fractional Burgers–Fisher model: `F = a ρ^ι`, `B` the identity,
/// `A(ρ) = β ρ (1 − ρ^k)` for `ρ ≥ 0` and `0` otherwise, `M1 = β`, `M2 = 0`.
/// Nonnegativity of solutions needs `k` even, so odd `k` is rejected.
pub fn burgers_fisher_spec(a: f64, iota: u32, beta: f64, k: u32, nu: f64, alpha: f64) -> Result<ModelSpec> {
    if iota == 0 {
        return Err(Error::Configuration("iota must be a positive integer".into()));
    }
    if k == 0 || k % 2 == 1 {
        return Err(Error::Configuration(format!("burgers_fisher needs an even exponent k, got {k}")));
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::Configuration(format!("beta must be nonnegative, got {beta}")));
    }
    ModelSpec::new(Flux::Power { a, iota }, nu, alpha, 0.0)?.with_source(Source::BurgersFisher { beta, k }, beta, 0.0)
}

/// Two-point flux without input checks, for the solver's inner loop.
pub(crate) fn flux_unchecked(flux: &Flux, a: f64, b: f64, scheme: FluxScheme) -> f64 {
    match scheme {
        FluxScheme::EngquistOsher => flux.positive_part(a) + flux.eval(b) - flux.positive_part(b),
        FluxScheme::LocalLaxFriedrichs => {
            let lambda = flux.max_speed(a, b);
            0.5 * (flux.eval(a) + flux.eval(b)) - 0.5 * lambda * (b - a)
        }
    }
}

/// Monotone numerical flux `F̂(a, b)` at an interface with left state `a` and
/// right state `b`.
pub fn numerical_flux(a: f64, b: f64, spec: &ModelSpec, scheme: FluxScheme) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!("non-finite flux arguments ({a}, {b})")));
    }
    Ok(flux_unchecked(&spec.flux, a, b, scheme))
}

/// Growth envelope `exp(M1 t)` of the L¹ distance between two solutions.
pub fn source_step_bound(spec: &ModelSpec, t: f64) -> f64 {
    (spec.m1 * t).exp()
}
