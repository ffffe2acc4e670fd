//! File emission: CSV tables with fixed headers, gnuplot-ready `.dat`
//! columns and a plain-text plot manifest. Every path is resolved inside
//! one output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Component, Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::{ExperimentReport, Series};
use crate::kinetic::{DissipationField, KineticField, VGrid};
use crate::solver::Trajectory;

pub const TRAJECTORY_HEADER: [&str; 4] = ["time", "cell_index", "x", "rho"];
pub const DIAGNOSTICS_HEADER: [&str; 7] = ["time", "mass", "l1", "bv", "linf", "dt_used", "entropy_dissipation_sample"];
pub const KINETIC_HEADER: [&str; 3] = ["i", "v", "value"];
pub const CHECKS_HEADER: [&str; 5] = ["name", "lhs", "rhs", "tol", "pass"];
pub const WEIGHTS_HEADER: [&str; 3] = ["j", "distance", "weight"];
pub const SWEEP_HEADER: [&str; 7] = ["value", "mass", "l1", "bv", "linf", "steps", "max_dt"];

/// Output directory; files can only be created below it.
#[derive(Clone, Debug)]
pub struct OutDir {
    root: PathBuf,
    manifest: Vec<String>,
}

impl OutDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(OutDir {
            root,
            manifest: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path of `name` under the root; rejects absolute paths and `..`.
    pub fn path(&self, name: &str) -> Result<PathBuf> {
        let rel = Path::new(name);
        if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            return Err(Error::Usage(format!("output name `{name}` must stay inside the output directory")));
        }
        Ok(self.root.join(rel))
    }

    /// Sub-directory for one experiment.
    pub fn child(&self, name: &str) -> Result<OutDir> {
        OutDir::create(self.path(name)?)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.path(name)?;
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    fn write_csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<PathBuf> {
        let path = self.path(name)?;
        let to_io = |e: csv::Error| Error::io(&path, std::io::Error::other(e));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(header).map_err(to_io)?;
        for row in rows {
            w.write_record(&row).map_err(to_io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(&path, std::io::Error::other(e.to_string())))?;
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn trajectory_csv(&self, name: &str, traj: &Trajectory) -> Result<PathBuf> {
        let rows = traj.snapshots.iter().flat_map(|(t, f)| {
            let g = *f.grid();
            f.values()
                .iter()
                .enumerate()
                .map(move |(i, r)| vec![t.to_string(), i.to_string(), g.x(i).to_string(), r.to_string()])
        });
        self.write_csv(name, &TRAJECTORY_HEADER, rows)
    }

    pub fn diagnostics_csv(&self, name: &str, traj: &Trajectory) -> Result<PathBuf> {
        let rows = traj.diagnostics.iter().map(|d| {
            [d.time, d.mass, d.l1, d.bv, d.linf, d.dt_used, d.entropy_dissipation_sample]
                .iter()
                .map(f64::to_string)
                .collect()
        });
        self.write_csv(name, &DIAGNOSTICS_HEADER, rows)
    }

    /// `(i, v, value)` triples of a row-major `N × n_v` table.
    pub fn kinetic_csv(&self, name: &str, values: &[f64], vg: &VGrid) -> Result<PathBuf> {
        let nv = vg.n_v();
        let rows = values
            .iter()
            .enumerate()
            .map(|(k, val)| vec![(k / nv).to_string(), vg.center(k % nv).to_string(), val.to_string()]);
        self.write_csv(name, &KINETIC_HEADER, rows)
    }

    pub fn kinetic_field_csv(&self, name: &str, kf: &KineticField) -> Result<PathBuf> {
        self.kinetic_csv(name, &kf.u, &kf.vgrid)
    }

    /// Writes `<stem>_n.csv` and `<stem>_m.csv`.
    pub fn dissipation_csv(&self, stem: &str, d: &DissipationField, vg: &VGrid) -> Result<[PathBuf; 2]> {
        Ok([
            self.kinetic_csv(&format!("{stem}_n.csv"), &d.n_vals, vg)?,
            self.kinetic_csv(&format!("{stem}_m.csv"), &d.m_vals, vg)?,
        ])
    }

    pub fn checks_csv(&self, name: &str, report: &ExperimentReport) -> Result<PathBuf> {
        let rows = report.checks.iter().map(|c| {
            vec![
                c.name.clone(),
                c.lhs.to_string(),
                c.rhs.to_string(),
                c.tol.to_string(),
                c.pass.to_string(),
            ]
        });
        self.write_csv(name, &CHECKS_HEADER, rows)
    }

    /// Series as CSV, with its own column names as the header.
    pub fn series_csv(&self, name: &str, s: &Series) -> Result<PathBuf> {
        let header: Vec<&str> = s.columns.iter().map(String::as_str).collect();
        let rows = s.rows.iter().map(|r| r.iter().map(f64::to_string).collect());
        self.write_csv(name, &header, rows)
    }

    pub fn sweep_csv(&self, name: &str, rows: &[[f64; 7]]) -> Result<PathBuf> {
        self.write_csv(name, &SWEEP_HEADER, rows.iter().map(|r| r.iter().map(f64::to_string).collect()))
    }

    /// Whitespace-separated columns with a `#` header line, and a manifest
    /// entry plotting every column against the first.
    pub fn series_dat(&mut self, s: &Series) -> Result<PathBuf> {
        let name = format!("{}.dat", s.name);
        let mut text = format!("# {}\n", s.columns.join(" "));
        for row in &s.rows {
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            let _ = writeln!(text, "{}", line.join(" "));
        }
        let path = self.write(&name, &text)?;
        let ys: Vec<String> = (2..=s.columns.len())
            .map(|k| format!("{}:{} ({})", 1, k, s.columns[k - 1]))
            .collect();
        self.manifest
            .push(format!("{name}: x = {}; y = {}", s.columns[0], ys.join(", ")));
        Ok(path)
    }

    /// Writes `plots.txt` listing every `.dat` file emitted so far.
    pub fn finish_manifest(&self) -> Result<Option<PathBuf>> {
        if self.manifest.is_empty() {
            return Ok(None);
        }
        let mut text = String::from("# gnuplot data files: columns are 1-based, first column is the abscissa\n");
        for line in &self.manifest {
            let _ = writeln!(text, "{line}");
        }
        self.write("plots.txt", &text).map(Some)
    }

    /// Report text, checks CSV, `.dat` series and manifest; fills
    /// `report.artifacts`.
    pub fn write_report(&mut self, report: &mut ExperimentReport) -> Result<()> {
        let mut artifacts = Vec::new();
        artifacts.push(self.checks_csv("checks.csv", report)?);
        for s in &report.series {
            artifacts.push(self.series_dat(s)?);
        }
        if let Some(m) = self.finish_manifest()? {
            artifacts.push(m);
        }
        let report_path = self.path("report.txt")?;
        artifacts.push(report_path);
        report.artifacts = artifacts;
        self.write("report.txt", &report.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Check;

    #[test]
    fn rejects_escaping_names() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path()).unwrap();
        assert!(out.path("../x.csv").is_err());
        assert!(out.path("/etc/x").is_err());
        assert!(out.path("a/b.csv").is_ok());
    }

    #[test]
    fn checks_csv_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutDir::create(dir.path()).unwrap();
        let mut r = ExperimentReport::default();
        r.checks.push(Check::leq("a@t=0.5", "d", "x", 1.0, 2.0, 0.0));
        let p = out.checks_csv("checks.csv", &r).unwrap();
        let text = fs::read_to_string(p).unwrap();
        assert_eq!(text, "name,lhs,rhs,tol,pass\na@t=0.5,1,2,0,true\n");
    }

    #[test]
    fn dat_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutDir::create(dir.path()).unwrap();
        let s = Series {
            name: "s".into(),
            columns: vec!["t".into(), "y".into()],
            rows: vec![vec![0.0, 1.5], vec![1.0, 2.0]],
        };
        out.series_dat(&s).unwrap();
        let m = out.finish_manifest().unwrap().unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("s.dat")).unwrap(), "# t y\n0 1.5\n1 2\n");
        assert!(fs::read_to_string(m).unwrap().contains("s.dat: x = t; y = 1:2 (y)"));
    }
}
