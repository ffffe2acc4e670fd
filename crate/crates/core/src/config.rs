//! Strict INI-style run configuration.
//!
//! ```text
//! # comment
//! [grid]
//! L = 2
//! N = 128
//! boundary = periodic
//!
//! [model]
//! preset = burgers(1,2)
//! nu = 0.1
//! alpha = 0.5
//!
//! [solver]
//! T = 0.5
//! output_times = uniform(10)
//! ```
//!
//! Sections: `grid`, `model`, `initial`, `solver`, `vgrid`, `experiment`,
//! `sweep`, `io`. Unknown sections or keys, duplicate keys and malformed
//! lines are errors. Values are validated before anything runs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::{Boundary, Field, Grid1D, Profile};
use crate::kinetic::VGrid;
use crate::physics::{Diffusion, FluxScheme, ModelSpec, Source};
use crate::solver::{SolverConfig, TimeScheme};

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["L", "N", "boundary"]),
    ("model", &["preset", "nu", "alpha", "eps", "source", "diffusion"]),
    ("initial", &["rho0", "rho0_b"]),
    ("solver", &["T", "cfl", "scheme", "flux", "output_times", "max_dt", "radius"]),
    ("vgrid", &["vmin", "vmax", "nv"]),
    ("experiment", &["name", "params", "seed"]),
    ("sweep", &["param", "values"]),
    ("io", &["outdir"]),
];

/// Output times written in a config: an explicit list or `uniform(n)`.
#[derive(Clone, Debug, PartialEq)]
pub enum OutputSpec {
    List(Vec<f64>),
    Uniform(usize),
}

/// Optional overrides of the velocity grid; missing entries come from
/// [`VGrid::default_for`] applied to the initial datum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VGridSpec {
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
    pub n_v: Option<usize>,
}

impl VGridSpec {
    pub fn resolve(&self, rho0: &Field) -> Result<VGrid> {
        let d = VGrid::default_for(rho0);
        let vg = VGrid::new(
            self.v_min.unwrap_or(d.v_min()),
            self.v_max.unwrap_or(d.v_max()),
            self.n_v.unwrap_or(d.n_v()),
        )?;
        vg.check_covers(rho0)?;
        Ok(vg)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentSection {
    pub name: Option<String>,
    /// `key: v1 v2; key: v` parsed into whitespace-separated tokens.
    pub params: BTreeMap<String, Vec<String>>,
    pub seed: u64,
}

/// Parameters a sweep may vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Nu,
    Alpha,
    Eps,
    Cells,
}

impl SweepParam {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "model.nu" => Some(SweepParam::Nu),
            "model.alpha" => Some(SweepParam::Alpha),
            "model.eps" => Some(SweepParam::Eps),
            "grid.N" => Some(SweepParam::Cells),
            _ => None,
        }
    }

    pub fn key(&self) -> &'static str {
        match self {
            SweepParam::Nu => "model.nu",
            SweepParam::Alpha => "model.alpha",
            SweepParam::Eps => "model.eps",
            SweepParam::Cells => "grid.N",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

/// A fully validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub grid: Grid1D,
    pub preset: String,
    pub model: ModelSpec,
    pub rho0: Profile,
    pub rho0_b: Option<Profile>,
    pub outputs: OutputSpec,
    /// Solver settings with `output_times` already resolved.
    pub solver: SolverConfig,
    pub vgrid: VGridSpec,
    pub experiment: ExperimentSection,
    pub sweep: Option<SweepSpec>,
    pub outdir: Option<PathBuf>,
}

struct Entry {
    value: String,
    line: usize,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

fn tokenize(text: &str) -> Result<Sections> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(format!("malformed section header `{line}`")))?
                .trim();
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                return Err(parse_err(format!("unknown section [{name}]")));
            }
            if sections.contains_key(name) {
                return Err(parse_err(format!("duplicate section [{name}]")));
            }
            sections.insert(name.to_string(), BTreeMap::new());
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let section = current
            .as_deref()
            .ok_or_else(|| parse_err(format!("key `{key}` appears before any [section]")))?;
        let allowed = SECTIONS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(parse_err(format!(
                "unknown key `{section}.{key}` (allowed: {})",
                allowed.join(", ")
            )));
        }
        if value.is_empty() {
            return Err(parse_err(format!("empty value for `{section}.{key}`")));
        }
        let keys = sections.get_mut(section).expect("section registered");
        if let Some(prev) = keys.get(key) {
            return Err(parse_err(format!(
                "duplicate key `{section}.{key}` (first set on line {})",
                prev.line
            )));
        }
        keys.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: line_no,
            },
        );
    }
    Ok(sections)
}

struct Reader<'a> {
    sections: &'a Sections,
}

impl Reader<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn string(&self, section: &str, key: &str) -> Option<String> {
        self.raw(section, key).map(|e| e.value.clone())
    }

    fn required(&self, section: &str, key: &str) -> Result<String> {
        self.string(section, key)
            .ok_or_else(|| Error::validation(format!("{section}.{key}"), "is required"))
    }

    fn number(&self, section: &str, key: &str) -> Result<Option<f64>> {
        let Some(e) = self.raw(section, key) else {
            return Ok(None);
        };
        match e.value.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(Error::Parse {
                line: e.line,
                message: format!("`{section}.{key}` expects a finite number, got `{}`", e.value),
            }),
        }
    }

    fn integer(&self, section: &str, key: &str) -> Result<Option<u64>> {
        let Some(e) = self.raw(section, key) else {
            return Ok(None);
        };
        e.value.parse::<u64>().map(Some).map_err(|_| Error::Parse {
            line: e.line,
            message: format!("`{section}.{key}` expects a nonnegative integer, got `{}`", e.value),
        })
    }
}

fn parse_outputs(text: &str) -> Result<OutputSpec> {
    let bad = || Error::validation("solver.output_times", format!("cannot parse `{text}`"));
    let t = text.trim();
    if let Some(inner) = t.strip_prefix("uniform(").and_then(|r| r.strip_suffix(')')) {
        let n: usize = inner.trim().parse().map_err(|_| bad())?;
        if n == 0 {
            return Err(Error::validation("solver.output_times", "uniform(n) needs n ≥ 1"));
        }
        return Ok(OutputSpec::Uniform(n));
    }
    t.split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad))
        .collect::<Result<Vec<_>>>()
        .map(OutputSpec::List)
}

fn parse_params(text: &str, line: usize) -> Result<BTreeMap<String, Vec<String>>> {
    let mut out = BTreeMap::new();
    for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item.split_once(':').ok_or_else(|| Error::Parse {
            line,
            message: format!("experiment parameter `{item}` must read `key: value`"),
        })?;
        let k = k.trim().to_string();
        let values: Vec<String> = v.split_whitespace().map(str::to_string).collect();
        if values.is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("experiment parameter `{k}` has no value"),
            });
        }
        if out.insert(k.clone(), values).is_some() {
            return Err(Error::Parse {
                line,
                message: format!("duplicate experiment parameter `{k}`"),
            });
        }
    }
    Ok(out)
}

fn reclassify(key: &str, err: Error) -> Error {
    match err {
        Error::Configuration(message) => Error::validation(key, message),
        other => other,
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let sections = tokenize(text)?;
        let r = Reader { sections: &sections };

        let length = r.number("grid", "L")?.ok_or_else(|| Error::validation("grid.L", "is required"))?;
        let n_cells = r.integer("grid", "N")?.ok_or_else(|| Error::validation("grid.N", "is required"))?;
        let boundary = match r.string("grid", "boundary") {
            None => Boundary::Periodic,
            Some(s) => Boundary::parse(&s).ok_or_else(|| {
                Error::validation("grid.boundary", format!("must be periodic or zero_extension, got `{s}`"))
            })?,
        };
        let grid = Grid1D::new(length, n_cells as usize, boundary)?;

        let preset = r.required("model", "preset")?;
        let alpha = r.number("model", "alpha")?.ok_or_else(|| Error::validation("model.alpha", "is required"))?;
        let nu = r.number("model", "nu")?.unwrap_or(1.0);
        let eps = r.number("model", "eps")?.unwrap_or(0.0);
        let mut model = ModelSpec::from_preset(&preset, nu, alpha, eps).map_err(|e| reclassify("model.preset", e))?;
        if let Some(s) = r.string("model", "source") {
            let source = Source::parse(&s).map_err(|e| reclassify("model.source", e))?;
            model = model.with_natural_source(source).map_err(|e| reclassify("model.source", e))?;
        }
        if let Some(d) = r.string("model", "diffusion") {
            let diffusion = Diffusion::parse(&d).map_err(|e| reclassify("model.diffusion", e))?;
            model = model.with_diffusion(diffusion)?;
        }

        let rho0 = match r.string("initial", "rho0") {
            Some(s) => Profile::parse(&s).map_err(|e| reclassify("initial.rho0", e))?,
            None => Profile::Step {
                a: 1.0,
                b: 0.0,
                x0: 0.5 * length,
            },
        };
        let rho0_b = r
            .string("initial", "rho0_b")
            .map(|s| Profile::parse(&s).map_err(|e| reclassify("initial.rho0_b", e)))
            .transpose()?;

        let horizon = r.number("solver", "T")?.ok_or_else(|| Error::validation("solver.T", "is required"))?;
        let outputs = match r.string("solver", "output_times") {
            Some(s) => parse_outputs(&s)?,
            None => OutputSpec::Uniform(10),
        };
        let mut solver = SolverConfig::new(model.clone(), grid, horizon);
        if let Some(cfl) = r.number("solver", "cfl")? {
            solver.cfl = cfl;
        }
        if let Some(s) = r.string("solver", "scheme") {
            solver.time_scheme = TimeScheme::parse(&s)
                .ok_or_else(|| Error::validation("solver.scheme", format!("must be euler or ssp_rk2, got `{s}`")))?;
        }
        if let Some(s) = r.string("solver", "flux") {
            solver.flux_scheme = FluxScheme::parse(&s)
                .ok_or_else(|| Error::validation("solver.flux", format!("must be eo or llf, got `{s}`")))?;
        }
        solver.max_dt = r.number("solver", "max_dt")?;
        solver.radius = r.number("solver", "radius")?;
        solver = match &outputs {
            OutputSpec::Uniform(n) => solver.with_uniform_outputs(*n),
            OutputSpec::List(times) => {
                solver.output_times = times.clone();
                solver
            }
        };
        solver.validate()?;

        let vgrid = VGridSpec {
            v_min: r.number("vgrid", "vmin")?,
            v_max: r.number("vgrid", "vmax")?,
            n_v: r.integer("vgrid", "nv")?.map(|n| n as usize),
        };
        if vgrid.n_v == Some(0) {
            return Err(Error::validation("vgrid.nv", "must be positive"));
        }
        let probe = rho0.sample(&grid);
        vgrid.resolve(&probe).map_err(|e| match e {
            Error::Range { cell, value, lo, hi } => Error::validation(
                "vgrid",
                format!("[{lo}, {hi}] does not cover initial value {value} in cell {cell}"),
            ),
            Error::Domain(m) => Error::validation("vgrid", m),
            other => other,
        })?;

        let params = match r.raw("experiment", "params") {
            Some(e) => parse_params(&e.value, e.line)?,
            None => BTreeMap::new(),
        };
        let experiment = ExperimentSection {
            name: r.string("experiment", "name"),
            params,
            seed: r.integer("experiment", "seed")?.unwrap_or(0),
        };

        let sweep = match (r.string("sweep", "param"), r.string("sweep", "values")) {
            (None, None) => None,
            (Some(p), Some(v)) => {
                let param = SweepParam::parse(&p).ok_or_else(|| {
                    Error::validation("sweep.param", format!("must be model.nu, model.alpha, model.eps or grid.N, got `{p}`"))
                })?;
                let values = v
                    .split([',', ' '])
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| Error::validation("sweep.values", format!("bad number `{s}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(SweepSpec { param, values })
            }
            (Some(_), None) => return Err(Error::validation("sweep.values", "is required with sweep.param")),
            (None, Some(_)) => return Err(Error::validation("sweep.param", "is required with sweep.values")),
        };

        Ok(RunConfig {
            grid,
            preset,
            model,
            rho0,
            rho0_b,
            outputs,
            solver,
            vgrid,
            experiment,
            sweep,
            outdir: r.string("io", "outdir").map(PathBuf::from),
        })
    }

    pub fn initial_field(&self) -> Field {
        self.rho0.sample(&self.grid)
    }

    /// Solver settings for another model and grid, keeping time stepping,
    /// horizon and the configured output pattern.
    pub fn solver_for(&self, model: ModelSpec, grid: Grid1D) -> SolverConfig {
        let mut s = self.solver.clone();
        s.model = model;
        s.grid = grid;
        s
    }

    /// Copy with one sweep parameter replaced, revalidated.
    pub fn with_sweep_value(&self, param: SweepParam, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        match param {
            SweepParam::Nu => cfg.model = cfg.model.with_nu(value)?,
            SweepParam::Alpha => cfg.model = cfg.model.with_alpha(value)?,
            SweepParam::Eps => cfg.model = cfg.model.with_eps(value)?,
            SweepParam::Cells => {
                if !(value >= 0.0 && value.fract() == 0.0) {
                    return Err(Error::validation("grid.N", format!("must be an integer, got {value}")));
                }
                cfg.grid = cfg.grid.with_cells(value as usize)?;
            }
        }
        cfg.solver.model = cfg.model.clone();
        cfg.solver.grid = cfg.grid;
        cfg.solver.validate()?;
        Ok(cfg)
    }

    pub fn vgrid_for(&self, rho0: &Field) -> Result<VGrid> {
        self.vgrid.resolve(rho0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[grid]\nL = 2\nN = 64\n[model]\npreset = burgers(1,2)\nalpha = 0.5\n[solver]\nT = 0.5\n";

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.grid.n_cells(), 64);
        assert_eq!(cfg.grid.boundary(), Boundary::Periodic);
        assert_eq!(cfg.model.nu, 1.0);
        assert_eq!(cfg.model.eps, 0.0);
        assert_eq!(cfg.outputs, OutputSpec::Uniform(10));
        assert_eq!(cfg.solver.output_times.len(), 11);
        assert_eq!(cfg.vgrid, VGridSpec::default());
        assert!(cfg.outdir.is_none());
        assert!(cfg.sweep.is_none());
        let vg = cfg.vgrid_for(&cfg.initial_field()).unwrap();
        assert!(vg.v_min() <= 0.0 && vg.v_max() >= 1.0);
    }

    #[test]
    fn alpha_out_of_range_names_key() {
        let text = MINIMAL.replace("alpha = 0.5", "alpha = 1.2");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("model.alpha must lie in (0,1)"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn duplicate_key_reports_line() {
        let text = format!("{MINIMAL}T = 1\n");
        match RunConfig::parse(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 9);
                assert!(message.contains("duplicate"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_and_section_rejected() {
        let text = MINIMAL.replace("alpha = 0.5", "alpha = 0.5\nalpah = 0.4");
        assert!(matches!(RunConfig::parse(&text), Err(Error::Parse { line: 7, .. })));
        let text = format!("{MINIMAL}[extra]\n");
        assert!(matches!(RunConfig::parse(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn small_grid_rejected() {
        let text = MINIMAL.replace("N = 64", "N = 2");
        let err = RunConfig::parse(&text).unwrap_err();
        assert!(matches!(err, Error::Validation { ref key, .. } if key == "grid.N"));
    }

    #[test]
    fn explicit_outputs_and_sections() {
        let text = format!(
            "{MINIMAL}output_times = 0, 0.25, 0.5\nmax_dt = 0.001\n[initial]\nrho0 = hat(1,0.5)\nrho0_b = hat(0.5,0.5)\n\
             [vgrid]\nnv = 32\n[experiment]\nname = contraction\nparams = gaps: 0.1 0.05; window: 0.5\nseed = 7\n\
             [sweep]\nparam = model.nu\nvalues = 0.1 0.05\n[io]\noutdir = out\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.solver.output_times, vec![0.0, 0.25, 0.5]);
        assert_eq!(cfg.solver.max_dt, Some(0.001));
        assert_eq!(cfg.rho0_b, Some(Profile::Hat { peak: 0.5, width: 0.5 }));
        assert_eq!(cfg.vgrid.n_v, Some(32));
        assert_eq!(cfg.experiment.seed, 7);
        assert_eq!(cfg.experiment.params["gaps"], vec!["0.1", "0.05"]);
        assert_eq!(cfg.experiment.params["window"], vec!["0.5"]);
        assert_eq!(cfg.sweep.as_ref().unwrap().param, SweepParam::Nu);
        assert_eq!(cfg.outdir, Some(PathBuf::from("out")));
    }

    #[test]
    fn bad_values_rejected() {
        for (from, to) in [
            ("T = 0.5", "T = -1"),
            ("T = 0.5", "T = abc"),
            ("preset = burgers(1,2)", "preset = nope(1)"),
            ("N = 64", "N = 64\nboundary = torus"),
        ] {
            let text = MINIMAL.replace(from, to);
            let err = RunConfig::parse(&text).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{from} -> {to}: {err}");
        }
        let text = format!("{MINIMAL}[vgrid]\nvmin = 0.5\n");
        assert!(RunConfig::parse(&text).is_err());
        let text = format!("{MINIMAL}output_times = 0, 0.7\n");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn sweep_value_applies() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        let c2 = cfg.with_sweep_value(SweepParam::Cells, 128.0).unwrap();
        assert_eq!(c2.solver.grid.n_cells(), 128);
        let c3 = cfg.with_sweep_value(SweepParam::Alpha, 0.3).unwrap();
        assert_eq!(c3.solver.model.alpha, 0.3);
        assert!(cfg.with_sweep_value(SweepParam::Alpha, 1.5).is_err());
    }
}
