//! CSV and JSON writers with provenance headers.
//!
//! Floats in CSV use 17 significant digits; JSON uses the shortest
//! representation that parses back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::continuation::curve::BifurcationCurve;
use crate::continuation::cycles::LimitCycle;
use crate::equilibria::{Equilibrium, FoldCurve};
use crate::error::{Error, Result};
use crate::pde::{Snapshot, WaveReport};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance attached to every output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub version: String,
    pub config_sha256: String,
    pub theta_policy: String,
}

impl Header {
    pub fn new(config_sha256: impl Into<String>, theta_policy: impl Into<String>) -> Self {
        Self {
            version: VERSION.to_string(),
            config_sha256: config_sha256.into(),
            theta_policy: theta_policy.into(),
        }
    }

    /// `#`-prefixed comment lines for CSV files.
    pub fn csv_lines(&self) -> String {
        format!(
            "# kkwave {}\n# config_sha256 {}\n# theta_policy {}\n",
            self.version, self.config_sha256, self.theta_policy
        )
    }
}

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Strip header comments and parse a CSV body into its column names and rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let cols: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Config("CSV has no column row".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    if let Some(r) = rows.iter().find(|r| r.len() != cols.len()) {
        return Err(Error::Config(format!("CSV row has {} fields, expected {}", r.len(), cols.len())));
    }
    Ok((cols, rows))
}

pub fn equilibria_csv(h: &Header, eqs: &[Equilibrium]) -> String {
    let mut s = h.csv_lines();
    s.push_str("v_c,kind,l1_re,l1_im,l2_re,l2_im,b,c,ve1,residual\n");
    for e in eqs {
        let kind = serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(e.v_c),
            kind,
            fmt_f64(e.eigenvalues[0].re),
            fmt_f64(e.eigenvalues[0].im),
            fmt_f64(e.eigenvalues[1].re),
            fmt_f64(e.eigenvalues[1].im),
            fmt_f64(e.b),
            fmt_f64(e.c),
            fmt_f64(e.ve1),
            fmt_f64(e.residual),
        );
    }
    s
}

pub fn fold_csv(h: &Header, fold: &FoldCurve) -> String {
    let mut s = h.csv_lines();
    s.push_str("q_g,v_g,v_c,branch,residual,theta0,is_bt\n");
    for p in &fold.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(p.q_g),
            fmt_f64(p.v_g),
            fmt_f64(p.v_c),
            p.branch.label(),
            fmt_f64(p.residual),
            fmt_f64(p.theta0),
            p.is_bt
        );
    }
    s
}

/// One row per point: `q_g, v_g`, the sorted auxiliary keys, then `label`
/// (empty for unlabeled points).
pub fn curve_csv(h: &Header, c: &BifurcationCurve) -> String {
    let mut s = h.csv_lines();
    for (k, v) in &c.meta {
        let _ = writeln!(s, "# {k} {v}");
    }
    for f in &c.failures {
        let _ = writeln!(s, "# failure {}", f.replace('\n', " "));
    }
    let keys = c.aux_keys();
    s.push_str("q_g,v_g");
    for k in &keys {
        s.push(',');
        s.push_str(k);
    }
    s.push_str(",label\n");
    for (i, p) in c.points.iter().enumerate() {
        s.push_str(&fmt_f64(p.q_g));
        s.push(',');
        s.push_str(&fmt_f64(p.v_g));
        for k in &keys {
            s.push(',');
            if let Some(v) = p.aux.get(k) {
                s.push_str(&fmt_f64(*v));
            }
        }
        s.push(',');
        if let Some(l) = c.label_at(i) {
            s.push_str(l.as_str());
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct Tagged<'a, T: Serialize> {
    header: &'a Header,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON of `body` with a `header` field in front.
pub fn to_json<T: Serialize>(h: &Header, body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Tagged { header: h, body })?;
    s.push('\n');
    Ok(s)
}

/// Cycle mesh export `{header, params, period, mesh, ...}`.
pub fn cycle_json(h: &Header, c: &LimitCycle) -> Result<String> {
    if !(c.floquet_multiplier.is_finite() && c.closure.is_finite()) {
        return Err(Error::Precondition("only converged cycles can be exported".into()));
    }
    to_json(h, c)
}

/// Parse a cycle from its JSON export (the header is ignored).
pub fn read_cycle(text: &str) -> Result<LimitCycle> {
    let c: LimitCycle = serde_json::from_str(text)?;
    c.params.validate()?;
    if c.mesh.len() < 2 || !(c.period > 0.0) {
        return Err(Error::Config("cycle JSON needs a positive period and at least two mesh points".into()));
    }
    if c.mesh.windows(2).any(|w| !(w[1].z > w[0].z)) {
        return Err(Error::Config("cycle mesh must be strictly increasing in z".into()));
    }
    Ok(c)
}

pub fn snapshot_csv(h: &Header, length: f64, snap: &Snapshot) -> String {
    let mut s = h.csv_lines();
    let _ = writeln!(s, "# t_h {}", fmt_f64(snap.t));
    s.push_str("x,rho,V\n");
    let dx = length / snap.rho.len() as f64;
    for (j, (r, v)) in snap.rho.iter().zip(&snap.v).enumerate() {
        let _ = writeln!(s, "{},{},{}", fmt_f64(j as f64 * dx), fmt_f64(*r), fmt_f64(*v));
    }
    s
}

pub fn report_json(h: &Header, r: &WaveReport) -> Result<String> {
    to_json(h, r)
}

/// Entry of a run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub kind: String,
    /// Max norm of the defining equations, where meaningful.
    pub residual: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Manifest {
    pub artifacts: Vec<Artifact>,
    pub failures: Vec<String>,
}

/// Directory writer that records every file it creates.
pub struct OutputDir {
    root: PathBuf,
    pub manifest: Manifest,
}

impl OutputDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            manifest: Manifest::default(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, kind: &str, contents: &str, residual: Option<f64>, points: Option<usize>) -> Result<PathBuf> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.manifest.artifacts.push(Artifact {
            path: name.to_string(),
            kind: kind.to_string(),
            residual,
            points,
        });
        Ok(path)
    }

    pub fn fail(&mut self, what: impl Into<String>) {
        self.manifest.failures.push(what.into());
    }

    /// Write `manifest.json` and return its path.
    pub fn finish(self, h: &Header) -> Result<PathBuf> {
        let path = self.root.join("manifest.json");
        fs::write(&path, to_json(h, &self.manifest)?)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::curve::{CurveKind, CurvePoint, LabelKind};

    fn header() -> Header {
        Header::new("abc", "fixed(1.6e-1)")
    }

    #[test]
    fn floats_round_trip_through_17_digits() {
        for x in [0.1, 1.0 / 3.0, 262.6123026867913, -3.72e-6, 1e-300] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn curve_csv_has_label_column() {
        let mut c = BifurcationCurve::new(CurveKind::HopfCurve);
        c.push(CurvePoint::new(0.1, 0.2).with("ell1", -1.0));
        let i = c.push(CurvePoint::new(0.2, 0.3));
        c.label(i, LabelKind::GH);
        let text = curve_csv(&header(), &c);
        assert!(text.starts_with("# kkwave "));
        let (cols, rows) = parse_csv(&text).unwrap();
        assert_eq!(cols, vec!["q_g", "v_g", "ell1", "label"]);
        assert_eq!(rows[0][3], "");
        assert_eq!(rows[1][2], "");
        assert_eq!(rows[1][3], "GH");
    }

    #[test]
    fn json_carries_header() {
        let m = Manifest::default();
        let v: serde_json::Value = serde_json::from_str(&to_json(&header(), &m).unwrap()).unwrap();
        assert_eq!(v["header"]["config_sha256"], "abc");
        assert!(v["artifacts"].is_array());
    }
}
