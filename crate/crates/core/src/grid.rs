//! Uniform 1-D grids, cell fields and the discrete norms used by every
//! stability estimate (L¹, total variation, sup).
//!
//! Cells are indexed `0..N` with centers `x_i = (i + 1/2) h`. Two boundary
//! modes are supported: periodic wrap-around, and zero extension, where the
//! field is taken to vanish outside `[0, L)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::preset::parse_call;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    ZeroExtension,
}

impl Boundary {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" => Some(Boundary::Periodic),
            "zero" | "zero_extension" | "zeroextension" => Some(Boundary::ZeroExtension),
            _ => None,
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::ZeroExtension => f.write_str("zero"),
        }
    }
}

/// Uniform mesh of `n_cells` cells on `[0, length)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    length: f64,
    n_cells: usize,
    spacing: f64,
    boundary: Boundary,
}

impl Grid1D {
    pub const MIN_CELLS: usize = 4;

    pub fn new(length: f64, n_cells: usize, boundary: Boundary) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::validation("grid.L", "must be a positive finite length"));
        }
        if n_cells < Self::MIN_CELLS {
            return Err(Error::validation(
                "grid.N",
                format!("must be at least {} (got {n_cells})", Self::MIN_CELLS),
            ));
        }
        Ok(Grid1D {
            length,
            n_cells,
            spacing: length / n_cells as f64,
            boundary,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Center of cell `i`.
    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |i| self.x(i))
    }

    /// Same mesh with a different cell count.
    pub fn with_cells(&self, n_cells: usize) -> Result<Self> {
        Grid1D::new(self.length, n_cells, self.boundary)
    }
}

/// The three norms every estimate is stated in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l1: f64,
    pub bv: f64,
    pub linf: f64,
}

/// Cell values of the unknown at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid1D,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::Usage(format!(
                "field has {} values but grid has {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite field value in cell {i}")));
        }
        Ok(Field { grid, values })
    }

    /// Internal constructor for values already known to be finite and sized.
    pub(crate) fn from_vec_unchecked(grid: Grid1D, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_cells());
        Field { grid, values }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Field {
            grid,
            values: vec![0.0; grid.n_cells()],
        }
    }

    pub fn constant(grid: Grid1D, c: f64) -> Self {
        Field {
            grid,
            values: vec![c; grid.n_cells()],
        }
    }

    /// Point-samples `f` at the cell centers.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Field::new(grid, grid.centers().map(f).collect())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `h · Σ values`.
    pub fn mass(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn norms(&self) -> Norms {
        let h = self.grid.spacing();
        let v = &self.values;
        let l1 = h * order_free_sum(v.iter().map(|x| x.abs()).collect());
        let linf = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut jumps: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        match self.grid.boundary() {
            Boundary::Periodic => jumps.push((v[0] - v[v.len() - 1]).abs()),
            Boundary::ZeroExtension => {
                jumps.push(v[0].abs());
                jumps.push(v[v.len() - 1].abs());
            }
        }
        Norms {
            l1,
            bv: order_free_sum(jumps),
            linf,
        }
    }

    /// Translation `g_i = f_{i + cells}`: rotation on periodic grids,
    /// zero padding under zero extension.
    pub fn shift(&self, cells: isize) -> Field {
        let n = self.values.len() as isize;
        let values = (0..n)
            .map(|i| {
                let j = i + cells;
                match self.grid.boundary() {
                    Boundary::Periodic => self.values[j.rem_euclid(n) as usize],
                    Boundary::ZeroExtension => {
                        if (0..n).contains(&j) {
                            self.values[j as usize]
                        } else {
                            0.0
                        }
                    }
                }
            })
            .collect();
        Field {
            grid: self.grid,
            values,
        }
    }

    fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Usage("fields live on different grids".into()));
        }
        Ok(())
    }

    /// Cellwise `self - other`.
    pub fn difference(&self, other: &Field) -> Result<Field> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Field::from_vec_unchecked(self.grid, values))
    }

    /// `‖self − other‖_{L¹}`.
    pub fn l1_distance(&self, other: &Field) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self.grid.spacing()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// L¹ distance restricted to cells whose centers lie in `[lo, hi]`.
    pub fn l1_distance_on(&self, other: &Field, lo: f64, hi: f64) -> Result<f64> {
        self.check_same_grid(other)?;
        let h = self.grid.spacing();
        Ok(h * self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .filter(|(i, _)| {
                let x = self.grid.x(*i);
                x >= lo && x <= hi
            })
            .map(|(_, (a, b))| (a - b).abs())
            .sum::<f64>())
    }

    /// Applies `f` cellwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_vec_unchecked(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// Sums nonnegative terms in ascending order, so the result depends only on
/// the multiset of terms (periodic shifts leave L¹ and BV bit-identical).
fn order_free_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Named initial-data profiles.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `a` for `x < x0`, `b` for `x ≥ x0`.
    Step { a: f64, b: f64, x0: f64 },
    /// `peak · max(0, 1 − |x − L/2| / width)`.
    Hat { peak: f64, width: f64 },
    /// `amp · exp(−(x − L/2)² / (2σ²))`.
    Gaussian { amp: f64, sigma: f64 },
    /// `cos(2π k x / L)`.
    Cosine { k: f64 },
}

impl Profile {
    /// Parses `step(a,b,x0)`, `hat(peak,width)`, `gaussian(amp,sigma)` or
    /// `cosine(k)`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, args) = parse_call(text)?;
        let want = |n: usize| -> Result<()> {
            if args.len() != n {
                return Err(Error::Configuration(format!(
                    "profile `{name}` takes {n} argument(s), got {}",
                    args.len()
                )));
            }
            Ok(())
        };
        let profile = match name.as_str() {
            "step" => {
                want(3)?;
                Profile::Step {
                    a: args[0],
                    b: args[1],
                    x0: args[2],
                }
            }
            "hat" => {
                want(2)?;
                if args[1] <= 0.0 {
                    return Err(Error::Configuration("hat width must be positive".into()));
                }
                Profile::Hat {
                    peak: args[0],
                    width: args[1],
                }
            }
            "gaussian" => {
                want(2)?;
                if args[1] <= 0.0 {
                    return Err(Error::Configuration("gaussian sigma must be positive".into()));
                }
                Profile::Gaussian {
                    amp: args[0],
                    sigma: args[1],
                }
            }
            "cosine" => {
                want(1)?;
                Profile::Cosine { k: args[0] }
            }
            other => {
                return Err(Error::Configuration(format!(
                    "unknown initial profile `{other}` (expected step, hat, gaussian or cosine)"
                )))
            }
        };
        Ok(profile)
    }

    pub fn eval(&self, x: f64, length: f64) -> f64 {
        let center = 0.5 * length;
        match *self {
            Profile::Step { a, b, x0 } => {
                if x < x0 {
                    a
                } else {
                    b
                }
            }
            Profile::Hat { peak, width } => peak * (1.0 - (x - center).abs() / width).max(0.0),
            Profile::Gaussian { amp, sigma } => {
                let d = x - center;
                amp * (-d * d / (2.0 * sigma * sigma)).exp()
            }
            Profile::Cosine { k } => (2.0 * std::f64::consts::PI * k * x / length).cos(),
        }
    }

    pub fn sample(&self, grid: &Grid1D) -> Field {
        let values = grid.centers().map(|x| self.eval(x, grid.length())).collect();
        Field::from_vec_unchecked(*grid, values)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Step { a, b, x0 } => write!(f, "step({a},{b},{x0})"),
            Profile::Hat { peak, width } => write!(f, "hat({peak},{width})"),
            Profile::Gaussian { amp, sigma } => write!(f, "gaussian({amp},{sigma})"),
            Profile::Cosine { k } => write!(f, "cosine({k})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn periodic(n: usize) -> Grid1D {
        Grid1D::new(1.0, n, Boundary::Periodic).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = Grid1D::new(3.0, 7, Boundary::Periodic).unwrap();
        assert!((g.spacing() * 7.0 - 3.0).abs() <= f64::EPSILON * 3.0);
        assert!(Grid1D::new(1.0, 3, Boundary::Periodic).is_err());
        assert!(Grid1D::new(-1.0, 8, Boundary::Periodic).is_err());
    }

    #[test]
    fn constant_field_norms() {
        let g = Grid1D::new(2.5, 16, Boundary::Periodic).unwrap();
        let n = Field::constant(g, -1.5).norms();
        assert!((n.l1 - 1.5 * 2.5).abs() < 1e-14);
        assert_eq!(n.bv, 0.0);
        assert_eq!(n.linf, 1.5);
    }

    #[test]
    fn half_indicator_has_two_unit_jumps() {
        let g = periodic(32);
        let f = Field::from_fn(g, |x| if x < 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(f.norms().bv, 2.0);
    }

    #[test]
    fn zero_extension_counts_boundary_jumps() {
        let g = Grid1D::new(1.0, 8, Boundary::ZeroExtension).unwrap();
        let n = Field::constant(g, 2.0).norms();
        assert_eq!(n.bv, 4.0);
    }

    #[test]
    fn hat_bv_is_twice_sampled_peak() {
        let g = Grid1D::new(4.0, 1024, Boundary::Periodic).unwrap();
        let f = Profile::Hat { peak: 0.7, width: 1.0 }.sample(&g);
        // oracle: direct summation of the sampled increments
        let v = f.values();
        let mut tv = 0.0;
        for i in 0..v.len() {
            tv += (v[(i + 1) % v.len()] - v[i]).abs();
        }
        let norms = f.norms();
        assert!((norms.bv - tv).abs() < 1e-12);
        assert!((norms.bv - 2.0 * norms.linf).abs() < 1e-12);
        // the sampled peak misses the apex by at most one half cell of slope
        assert!((norms.linf - 0.7).abs() <= 0.7 * g.spacing());
    }

    #[test]
    fn shift_identities() {
        let g = periodic(10);
        let f = Field::from_fn(g, |x| (7.0 * x).sin()).unwrap();
        assert_eq!(f.shift(0), f);
        assert_eq!(f.shift(10), f);
        assert_eq!(f.shift(-3).shift(3), f);
        let z = Field::new(
            Grid1D::new(1.0, 4, Boundary::ZeroExtension).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0],
        )
        .unwrap();
        assert_eq!(z.shift(1).values(), &[2.0, 3.0, 4.0, 0.0]);
        assert_eq!(z.shift(-2).values(), &[0.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn profile_parsing() {
        assert_eq!(
            Profile::parse("step(1, 0, 2)").unwrap(),
            Profile::Step { a: 1.0, b: 0.0, x0: 2.0 }
        );
        assert!(Profile::parse("hat(1)").is_err());
        assert!(Profile::parse("triangle(1,2)").is_err());
        assert!(Profile::parse("gaussian(1,-1)").is_err());
        let p = Profile::parse("cosine(2)").unwrap();
        assert_eq!(Profile::parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn zero_field_norms_vanish() {
        let n = Field::zeros(periodic(8)).norms();
        assert_eq!((n.l1, n.bv, n.linf), (0.0, 0.0, 0.0));
    }

    fn field_strategy(boundary: Boundary) -> impl Strategy<Value = Field> {
        (4usize..48).prop_flat_map(move |n| {
            proptest::collection::vec(-5.0f64..5.0, n).prop_map(move |v| {
                Field::new(Grid1D::new(1.3, v.len(), boundary).unwrap(), v).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn shift_translation_bounded_by_variation(f in field_strategy(Boundary::Periodic)) {
            let h = f.grid().spacing();
            let d = f.shift(1).l1_distance(&f).unwrap();
            // oracle: direct evaluation of h Σ |f_{i+1} − f_i|
            let v = f.values();
            let direct: f64 = (0..v.len()).map(|i| (v[(i + 1) % v.len()] - v[i]).abs()).sum::<f64>() * h;
            prop_assert!((d - direct).abs() <= 1e-12 * (1.0 + direct));
            prop_assert!(d <= h * f.norms().bv + 1e-12);
        }

        #[test]
        fn shift_bound_zero_extension(f in field_strategy(Boundary::ZeroExtension)) {
            let h = f.grid().spacing();
            let d = f.shift(1).l1_distance(&f).unwrap();
            prop_assert!(d <= h * f.norms().bv + 1e-12);
        }

        #[test]
        fn periodic_shift_preserves_bv_and_l1(f in field_strategy(Boundary::Periodic), k in -60isize..60) {
            let (a, b) = (f.norms(), f.shift(k).norms());
            prop_assert_eq!(a.bv, b.bv);
            prop_assert_eq!(a.l1, b.l1);
        }

        #[test]
        fn l1_triangle_inequality(
            (f, g) in (4usize..40).prop_flat_map(|n| (
                proptest::collection::vec(-3.0f64..3.0, n),
                proptest::collection::vec(-3.0f64..3.0, n),
            )).prop_map(|(a, b)| {
                let grid = Grid1D::new(2.0, a.len(), Boundary::Periodic).unwrap();
                (Field::new(grid, a).unwrap(), Field::new(grid, b).unwrap())
            })
        ) {
            let lhs = (f.norms().l1 - g.norms().l1).abs();
            let rhs = f.difference(&g).unwrap().norms().l1;
            prop_assert!(lhs <= rhs * (1.0 + 1e-13 * f.len() as f64) + 1e-300);
            prop_assert!(f.norms().l1 >= 0.0 && f.norms().bv >= 0.0 && f.norms().linf >= 0.0);
        }
    }
}
