//! Output files. Every file starts with the config hash: a `#` comment
//! line in CSV, a `config_hash` field in JSON.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use nullfrenet_core::curve::NullFrame;
use nullfrenet_core::minkowski::{Dim, FourVector};
use nullfrenet_core::reconstruct::CurveState;

use crate::error::CliError;

/// Round-trip float formatting: 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        CsvTable { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, hash: &str) -> String {
        let mut out = String::new();
        writeln!(out, "# config_hash: {hash}").unwrap();
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_float(*v)).collect();
            writeln!(out, "{}", cells.join(",")).unwrap();
        }
        out
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn render_json<T: Serialize>(hash: &str, body: &T) -> String {
    let mut s = serde_json::to_string_pretty(&Stamped { config_hash: hash, body }).expect("report serializes");
    s.push('\n');
    s
}

/// Writes files into one output directory and remembers what it wrote.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: PathBuf, hash: &str) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
        Ok(OutputDir { dir, hash: hash.to_string(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    fn write(&mut self, name: &str, text: String) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| CliError::Io { path: path.clone(), source })?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable) -> Result<(), CliError> {
        let text = table.render(&self.hash);
        self.write(name, text)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CliError> {
        let text = render_json(&self.hash, body);
        self.write(name, text)
    }

    pub fn into_files(self) -> Vec<PathBuf> {
        self.written
    }
}

/// `prefix0, prefix1, ...` for the components of a vector.
pub fn vector_columns(prefix: &str, dim: Dim) -> Vec<String> {
    (0..dim.n()).map(|i| format!("{prefix}{i}")).collect()
}

/// Columns of the trajectory file.
pub fn trajectory_columns(dim: Dim) -> Vec<String> {
    let mut c = vec!["sigma".to_string()];
    for p in ["x", "ep", "em", "e1_"] {
        c.extend(vector_columns(p, dim));
    }
    if dim == Dim::Four {
        c.extend(vector_columns("e2_", dim));
    }
    c.extend(["kappa1", "kappa2", "gram_residual"].map(String::from));
    c
}

fn extend(row: &mut Vec<f64>, v: &FourVector) {
    row.extend_from_slice(v.components());
}

pub fn trajectory_row(sigma: f64, x: &FourVector, frame: &NullFrame, kappa: (f64, f64), residual: f64) -> Vec<f64> {
    let mut row = vec![sigma];
    extend(&mut row, x);
    extend(&mut row, &frame.e_plus);
    extend(&mut row, &frame.e_minus);
    extend(&mut row, &frame.e1);
    if let Some(e2) = &frame.e2 {
        extend(&mut row, e2);
    }
    row.extend([kappa.0, kappa.1, residual]);
    row
}

pub fn state_row(s: &CurveState, kappa: (f64, f64)) -> Vec<f64> {
    trajectory_row(s.sigma, &s.x, &s.frame, kappa, s.frame.gram_residual())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn csv_has_hash_header() {
        let mut t = CsvTable::new(["a", "b"]);
        t.push(vec![1.0, 2.5]);
        let s = t.render("abc");
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "# config_hash: abc");
        assert_eq!(lines[1], "a,b");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn json_is_stamped() {
        #[derive(Serialize)]
        struct R {
            ok: bool,
        }
        let v: serde_json::Value = serde_json::from_str(&render_json("h", &R { ok: true })).unwrap();
        assert_eq!(v["config_hash"], "h");
        assert_eq!(v["ok"], true);
    }

    #[test]
    fn trajectory_layout_matches_rows() {
        for dim in [Dim::Three, Dim::Four] {
            let s = CurveState::standard(dim);
            assert_eq!(trajectory_columns(dim).len(), state_row(&s, (0.0, 0.0)).len());
        }
    }
}
