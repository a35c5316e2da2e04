//! JSON model files.
//!
//! ```json
//! {
//!   "format_version": "1.0",
//!   "n": 1, "m": 1, "p": 1,
//!   "kind_x": ["t"], "kind_y": ["t"], "kind_z": ["t"],
//!   "A": [[1]], "B": [[0]], "C": [[1]], "D": [[0]],
//!   "state_names": ["x1"]
//! }
//! ```
//!
//! Entries of `A` may be `"eps"`, entries of `B` may be `"top"`. Floats are
//! written in shortest round-trip form, so a file reproduces the system bit for bit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MmpsError, Result};
use crate::model::{Kind, MmpsSystem};
use crate::tropical::{ExtReal, TropMatrix};

pub const FORMAT_VERSION: &str = "1.0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: String,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub kind_x: Vec<Kind>,
    pub kind_y: Vec<Kind>,
    pub kind_z: Vec<Kind>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<ExtReal>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<ExtReal>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_names: Option<Vec<String>>,
}

impl ModelFile {
    pub fn from_system(system: &MmpsSystem) -> ModelFile {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        ModelFile {
            format_version: FORMAT_VERSION.to_string(),
            n: system.n(),
            m: system.m(),
            p: system.p(),
            kind_x: system.kind_x.clone(),
            kind_y: system.kind_y.clone(),
            kind_z: system.kind_z.clone(),
            a: system.a.to_rows(),
            b: system.b.to_rows(),
            c: rows(&system.c),
            d: rows(&system.d),
            state_names: system.state_names.clone(),
        }
    }

    /// Structural conversion; semantic checks are left to [`MmpsSystem::validate`].
    pub fn to_system(&self) -> Result<MmpsSystem> {
        if self.format_version != FORMAT_VERSION {
            return Err(MmpsError::Parse(format!(
                "unsupported format_version {:?} (expected {FORMAT_VERSION:?})",
                self.format_version
            )));
        }
        let (n, m, p) = (self.n, self.m, self.p);
        check_shape("A", &self.a, n, m)?;
        check_shape("B", &self.b, m, p)?;
        check_shape("C", &self.c, p, n)?;
        check_shape("D", &self.d, p, n)?;
        for (i, row) in self.a.iter().enumerate() {
            if let Some(j) = row.iter().position(|v| *v == ExtReal::Top) {
                return Err(MmpsError::Parse(format!("illegal sentinel \"top\" in A[{i}][{j}]")));
            }
        }
        for (i, row) in self.b.iter().enumerate() {
            if let Some(j) = row.iter().position(|v| *v == ExtReal::Eps) {
                return Err(MmpsError::Parse(format!("illegal sentinel \"eps\" in B[{i}][{j}]")));
            }
        }
        let dense = |rows: &[Vec<f64>]| DMatrix::from_fn(p, n, |r, c| rows[r][c]);
        let system = MmpsSystem::new(
            TropMatrix::from_rows(self.a.clone())?,
            TropMatrix::from_rows(self.b.clone())?,
            dense(&self.c),
            dense(&self.d),
            self.kind_x.clone(),
            self.kind_y.clone(),
            self.kind_z.clone(),
        )?;
        match &self.state_names {
            Some(names) => system.with_state_names(names.clone()),
            None => Ok(system),
        }
    }
}

fn check_shape<T>(name: &str, rows: &[Vec<T>], r: usize, c: usize) -> Result<()> {
    if rows.len() != r {
        return Err(MmpsError::Parse(format!("{name} has {} rows, expected {r}", rows.len())));
    }
    if let Some(i) = rows.iter().position(|row| row.len() != c) {
        return Err(MmpsError::Parse(format!(
            "{name} row {i} has {} entries, expected {c}",
            rows[i].len()
        )));
    }
    Ok(())
}

/// Parses a model file; JSON errors carry their line and column.
pub fn parse_model(text: &str) -> Result<MmpsSystem> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| {
        MmpsError::Parse(format!("{e}"))
    })?;
    file.to_system()
}

pub fn model_to_json(system: &MmpsSystem) -> String {
    serde_json::to_string_pretty(&ModelFile::from_system(system)).expect("model serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::railway::{build_model, default_params};

    #[test]
    fn railway_round_trip() {
        let sys = build_model(&default_params()).unwrap();
        let text = model_to_json(&sys);
        assert_eq!(parse_model(&text).unwrap(), sys);
    }

    #[test]
    fn awkward_floats_round_trip() {
        let mut sys = build_model(&default_params()).unwrap();
        sys.c[(2, 3)] = 0.1 + 0.2;
        sys.d[(4, 0)] = -1.0 / 3.0;
        sys.b.set(0, 0, ExtReal::Fin(1e-300));
        let back = parse_model(&model_to_json(&sys)).unwrap();
        assert_eq!(back.c[(2, 3)].to_bits(), sys.c[(2, 3)].to_bits());
        assert_eq!(back, sys);
    }

    #[test]
    fn sentinel_placement_is_enforced() {
        let text = r#"{"format_version":"1.0","n":1,"m":1,"p":1,
            "kind_x":["t"],"kind_y":["t"],"kind_z":["t"],
            "A":[["top"]],"B":[[0]],"C":[[1]],"D":[[0]]}"#;
        let err = parse_model(text).unwrap_err().to_string();
        assert!(err.contains("illegal sentinel"), "{err}");
        let text = text.replace(r#"[["top"]]"#, "[[0]]").replace(r#""B":[[0]]"#, r#""B":[["eps"]]"#);
        assert!(parse_model(&text).unwrap_err().to_string().contains("illegal sentinel"));
    }

    #[test]
    fn syntax_errors_report_location() {
        let err = parse_model("{\n  \"n\": ,\n}").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
