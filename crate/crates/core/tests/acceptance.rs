//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL ...` line to stderr (uncaptured).

use std::io::Write;
use std::time::{Duration, Instant};

use levyflux::fractional::{coefficient, continuous_symbol};
use levyflux::harness::{default_config_text, operator_check, run_experiment, ExperimentReport};
use levyflux::{Boundary, FractionalOperator, Grid1D, RunConfig};

/// Arbitrary-precision evaluations (mpmath, 30 digits) of
/// `α 2^{α−1} Γ((1+α)/2) / (√π Γ((2−α)/2))`.
#[allow(clippy::excessive_precision)]
const MPMATH_COEFF: [(f64, f64); 9] = [
    (0.1, 0.047_372_166_018_939_411_079_583_093_138_8),
    (0.2, 0.090_313_982_871_455_613_452_406_498_401_4),
    (0.3, 0.129_693_189_042_861_453_889_850_541_211),
    (0.4, 0.166_005_158_633_505_126_370_250_511_904),
    (0.5, 0.199_471_140_200_716_338_969_973_029_967),
    (0.6, 0.230_096_381_681_632_104_648_051_729_597),
    (0.7, 0.257_704_651_230_778_391_034_378_580_8),
    (0.8, 0.281_958_452_999_990_379_073_566_493_099),
    (0.9, 0.302_370_486_343_053_456_327_392_412_712),
];

fn report_line(n: u32, pass: bool, text: &str) {
    let status = if pass { "PASS" } else { "FAIL" };
    // direct handle: bypasses the test harness capture
    let _ = writeln!(std::io::stderr(), "criterion {n:>2}: {status} {text}");
}

fn config(name: &str, edit: impl Fn(String) -> String) -> RunConfig {
    RunConfig::parse(&edit(default_config_text(name).unwrap())).unwrap()
}

fn experiment(name: &str, edit: impl Fn(String) -> String) -> ExperimentReport {
    run_experiment(name, &config(name, edit)).unwrap()
}

/// All checks whose name starts with `prefix`, asserting at least one.
fn checks_with<'a>(r: &'a ExperimentReport, prefix: &str) -> Vec<&'a levyflux::harness::Check> {
    let v: Vec<_> = r.checks.iter().filter(|c| c.name.starts_with(prefix)).collect();
    assert!(!v.is_empty(), "no `{prefix}` checks in {}", r.name);
    v
}

fn worst_margin(checks: &[&levyflux::harness::Check]) -> f64 {
    checks.iter().map(|c| c.margin()).fold(f64::INFINITY, f64::min)
}

fn failures(r: &ExperimentReport, prefix: &str) -> String {
    r.checks
        .iter()
        .filter(|c| c.name.starts_with(prefix) && !c.pass)
        .map(|c| format!("{}: lhs {} rhs {} tol {}", c.name, c.lhs, c.rhs, c.tol))
        .collect::<Vec<_>>()
        .join("; ")
}

#[test]
fn criterion_01_coefficient_exactness() {
    let start = Instant::now();
    let closed = 2f64.powf(-1.5) / std::f64::consts::PI.sqrt();
    let rel_half = (coefficient(0.5).unwrap() - closed).abs() / closed;
    let worst = MPMATH_COEFF
        .iter()
        .map(|&(a, exact)| (coefficient(a).unwrap() - exact).abs() / exact)
        .fold(0.0f64, f64::max);
    let elapsed = start.elapsed();
    let pass = rel_half <= 1e-12 && worst <= 1e-10 && elapsed < Duration::from_secs(1);
    report_line(
        1,
        pass,
        &format!("coefficient: rel err at 0.5 {rel_half:.2e}, worst vs mpmath {worst:.2e}, {elapsed:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_spectral_consistency() {
    let start = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for alpha in [0.25, 0.5, 0.75] {
        let exact = continuous_symbol(alpha, 2.0 * std::f64::consts::PI);
        let err = |n: usize| {
            let op = FractionalOperator::build_default(Grid1D::new(1.0, n, Boundary::Periodic).unwrap(), alpha).unwrap();
            (op.symbol(1).unwrap() - exact).abs() / exact
        };
        let (e512, e1024) = (err(512), err(1024));
        let order = (e512 / e1024).log2();
        pass &= e1024 <= 0.05 && order >= 1.0 - alpha;
        details.push(format!("α={alpha}: err {e1024:.2e}, order {order:.2}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    report_line(2, pass, &format!("mode-1 symbol: {}, {elapsed:?}", details.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_03_discrete_convexity() {
    let start = Instant::now();
    let mut pass = true;
    let mut worst = f64::INFINITY;
    for boundary in ["periodic", "zero_extension"] {
        let text = format!(
            "[grid]\nL = 1\nN = 256\nboundary = {boundary}\n[model]\npreset = burgers(1,2)\nalpha = 0.5\n\
             [solver]\nT = 1\n[experiment]\nseed = 2024\n"
        );
        let r = operator_check(&RunConfig::parse(&text).unwrap(), 100, 0.05).unwrap();
        let convex = checks_with(&r, "convexity_");
        pass &= convex.iter().all(|c| c.pass);
        worst = worst.min(convex.iter().map(|c| -c.lhs).fold(f64::INFINITY, f64::min));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    report_line(
        3,
        pass,
        &format!("min η′(f)Lf − Lη(f) over 100 fields × 3 entropies × 2 boundaries = {worst:.3e}, {elapsed:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_04_mass_conservation() {
    let r = experiment("stability", |t| t);
    assert_eq!(r.params["grid.N"], "256");
    let mass = checks_with(&r, "mass@");
    let pass = mass.iter().all(|c| c.pass);
    let drift = mass.iter().map(|c| c.lhs).fold(0.0f64, f64::max);
    report_line(4, pass, &format!("periodic Burgers N=256 T=0.5: max relative mass drift {drift:.2e}"));
    assert!(pass, "{}", failures(&r, "mass@"));
}

#[test]
fn criterion_05_contraction_and_comparison() {
    let plain = experiment("contraction", |t| t);
    let logistic = experiment("contraction", |t| t.replace("burgers(1,2)", "burgers_fisher(1,2,1,2)"));
    assert_eq!(logistic.observable("m1"), Some(1.0));
    let order_plain = experiment("comparison", |t| t);
    let order_logistic = experiment("comparison", |t| t.replace("burgers(1,2)", "burgers_fisher(1,2,1,2)"));
    let c1 = checks_with(&plain, "l1_contraction");
    let c2 = checks_with(&logistic, "l1_contraction");
    let o1 = checks_with(&order_plain, "ordering");
    let o2 = checks_with(&order_logistic, "ordering");
    let pass = [&c1, &c2, &o1, &o2].iter().all(|v| v.iter().all(|c| c.pass));
    report_line(
        5,
        pass,
        &format!(
            "margins: contraction {:.2e}, exp(βt) envelope {:.2e}, ordering {:.2e} / {:.2e}",
            worst_margin(&c1),
            worst_margin(&c2),
            worst_margin(&o1),
            worst_margin(&o2)
        ),
    );
    assert!(
        pass,
        "{} {} {} {}",
        failures(&plain, ""),
        failures(&logistic, ""),
        failures(&order_plain, ""),
        failures(&order_logistic, "")
    );
}

#[test]
fn criterion_06_bv_and_l1_stability() {
    let r = experiment("stability", |t| t);
    let l1 = checks_with(&r, "l1_bound");
    let bv = checks_with(&r, "bv_bound");
    let pass = l1.iter().chain(&bv).all(|c| c.pass && c.tol == 1e-10);
    report_line(
        6,
        pass,
        &format!("{} output times: margins l1 {:.2e}, bv {:.2e}", l1.len(), worst_margin(&l1), worst_margin(&bv)),
    );
    assert!(pass, "{}", failures(&r, ""));
}

#[test]
fn criterion_07_dissipation_nonnegative() {
    let r = experiment("kinetic_certify", |t| t.replace("; refine: 64 128 256", ""));
    let n = checks_with(&r, "n_nonnegative@alpha=");
    assert_eq!(n.len(), 3);
    let pass = n.iter().all(|c| c.pass);
    let min = n.iter().map(|c| -c.lhs).fold(f64::INFINITY, f64::min);
    report_line(7, pass, &format!("min n over snapshots × cells × levels, α ∈ {{0.25,0.5,0.75}}: {min:.3e}"));
    assert!(pass, "{}", failures(&r, "n_nonnegative"));
}

#[test]
fn criterion_08_measure_budget() {
    let r = experiment("kinetic_certify", |t| t.replace("alphas: 0.25 0.5 0.75; refine: 64 128 256", "alphas: 0.5"));
    assert_eq!(r.params["grid.N"], "128");
    let total = r.check("budget_total").unwrap();
    let edges = r.check("budget_edges").unwrap();
    assert_eq!(edges.rhs, 0.01);
    let pass = total.pass && edges.pass;
    report_line(
        8,
        pass,
        &format!(
            "max M(v) = {:.4} ≤ 1.05·sup l1 = {:.4}; edge ratio {:.2e}",
            total.lhs, total.rhs, edges.lhs
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_entropy_residual() {
    let start = Instant::now();
    let r = experiment("kinetic_certify", |t| t.replace("alphas: 0.25 0.5 0.75; ", ""));
    let per_n = checks_with(&r, "entropy_residual@N=");
    assert_eq!(per_n.len(), 3);
    let slope = r.check("entropy_residual_slope").unwrap();
    let elapsed = start.elapsed();
    let pass = per_n.iter().all(|c| c.pass) && slope.pass && elapsed < Duration::from_secs(120);
    let mins: Vec<String> = per_n.iter().map(|c| format!("{:.2e}", -c.lhs)).collect();
    report_line(
        9,
        pass,
        &format!("min residual at N=64,128,256: {}; deficit slope {:.3}; {elapsed:?}", mins.join(", "), slope.rhs),
    );
    assert!(pass, "{}", failures(&r, "entropy"));
}

#[test]
fn criterion_10_nu_dependence_and_limit() {
    let dep = experiment("dep_nu", |t| t);
    let lim = experiment("limit_nu0", |t| t);
    let bound = dep.check("nu_dependence").unwrap();
    let (lo, hi) = (lim.check("slope_min").unwrap(), lim.check("slope_max").unwrap());
    assert_eq!((lo.lhs, hi.rhs), (0.8, 1.2));
    let pass = bound.pass && lo.pass && hi.pass;
    report_line(
        10,
        pass,
        &format!(
            "distance {:.4e} ≤ T|Δν| l1^(1−α) bv^α = {:.4e} + slack {:.2e}; ν-slope {:.3}",
            bound.lhs,
            bound.rhs,
            bound.tol,
            lim.observable("slope").unwrap()
        ),
    );
    assert!(pass, "{} {}", failures(&dep, "nu_dependence"), failures(&lim, "slope"));
}

#[test]
fn criterion_11_alpha_dependence() {
    let r = experiment("dep_alpha", |t| t.replace("gaps:", "center: 0.5; gaps:"));
    let main = r.check("alpha_dependence@gap=0.1").unwrap();
    let finite = checks_with(&r, "ratio_finite@");
    assert_eq!(finite.len(), 3);
    let ratios: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|g| r.observable(&format!("ratio@gap={g}")).unwrap())
        .collect();
    let pass = main.pass && finite.iter().all(|c| c.pass) && ratios.iter().all(|q| q.is_finite());
    report_line(
        11,
        pass,
        &format!(
            "α=0.45 vs 0.55: distance {:.4e} ≤ T·bound {:.4e} + slack {:.2e}; ratios {:?}",
            main.lhs, main.rhs, main.tol, ratios
        ),
    );
    assert!(pass, "{}", failures(&r, ""));
}

#[test]
fn criterion_12_burgers_fisher() {
    let r = experiment("burgers_fisher", |t| t);
    let nonneg = r.check("nonnegative").unwrap();
    let decay = checks_with(&r, "decay@");
    let pass = nonneg.pass && decay.iter().all(|c| c.pass);
    report_line(
        12,
        pass,
        &format!(
            "min value {:.2e}; decay margin {:.2e}; l1(T)/l1(0) = {:.5}",
            r.observable("min_value").unwrap(),
            worst_margin(&decay),
            r.observable("final_l1_ratio").unwrap()
        ),
    );
    assert!(pass, "{}", failures(&r, ""));
}

#[test]
fn criterion_13_viscous_limit() {
    let r = experiment("viscous_limit", |t| t);
    assert_eq!(r.params["grid.N"], "256");
    let mono = checks_with(&r, "cauchy_decreases");
    assert_eq!(mono.len(), 2);
    let pass = mono.iter().all(|c| c.pass);
    let d: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|e| r.observable(&format!("cauchy@eps={e}")).unwrap())
        .collect();
    let d: Vec<String> = d.iter().map(|x| format!("{x:.4e}")).collect();
    report_line(13, pass, &format!("‖ρ_ε − ρ_ε/2‖ at ε = 0.02, 0.01, 0.005: {}", d.join(", ")));
    assert!(pass, "{}", failures(&r, ""));
}
