//! Normalization around a fixed point.
//!
//! Substituting `x(k) = x̃(k) + kλ·s + x_e` turns the system into one with growth
//! rate 0 and fixed point 0. Its max-plus matrix `Ã` is nonpositive and its
//! min-plus matrix `B̃` nonnegative, each row with at least one zero.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{MmpsError, Result};
use crate::growth::{FootprintPair, Footprints, GrowthSolution};
use crate::model::MmpsSystem;
use crate::tropical::{ExtReal, TropMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSystem {
    pub a_tilde: TropMatrix,
    pub b_tilde: TropMatrix,
    /// the source system; `C`, `D` and the kinds carry over unchanged
    pub source: MmpsSystem,
    pub lambda: f64,
    pub solution: GrowthSolution,
}

pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

/// Entrywise `Ã_ij = A_ij − s_i·λ − x_i + y_j` and `B̃_jl = B_jl + λ·d_l + w_l − y_j`
/// with `d = D·s`; `ε` and `⊤` entries are kept.
///
/// Fails when a sign invariant is broken by more than `1e-6` relative to the data
/// scale, i.e. when `sol` does not satisfy its growth-rate program.
pub fn normalize(system: &MmpsSystem, sol: &GrowthSolution) -> Result<NormalizedSystem> {
    let (n, m, p) = (system.n(), system.m(), system.p());
    if sol.x_e.len() != n || sol.y_e.len() != m || sol.w_e.len() != p {
        return Err(MmpsError::Dimension("growth solution does not fit the system".into()));
    }
    let s = system.shift();
    let d = &system.d * &s;
    let lambda = sol.lambda;

    let mut a_tilde = system.a.clone();
    for i in 0..n {
        for (j, a) in system.a.finite_in_row(i) {
            let v = a - s[i] * lambda - sol.x_e[i] + sol.y_e[j];
            a_tilde.set(i, j, ExtReal::Fin(v));
        }
    }
    let mut b_tilde = system.b.clone();
    for j in 0..m {
        for (l, b) in system.b.finite_in_row(j) {
            let v = b + lambda * d[l] + sol.w_e[l] - sol.y_e[j];
            b_tilde.set(j, l, ExtReal::Fin(v));
        }
    }
    let ns = NormalizedSystem {
        a_tilde,
        b_tilde,
        source: system.clone(),
        lambda,
        solution: sol.clone(),
    };
    let scale = sol
        .x_e
        .iter()
        .chain(&sol.y_e)
        .chain(&sol.w_e)
        .fold(lambda.abs().max(1.0), |m, v| m.max(v.abs()));
    let report = verify_structure(&ns, 1e-6 * scale);
    if let Some(&(i, j, v)) = report.a_positive.first() {
        return Err(MmpsError::Contract(format!("normalized A[{i}][{j}] = {v} > 0")));
    }
    if let Some(&(j, l, v)) = report.b_negative.first() {
        return Err(MmpsError::Contract(format!("normalized B[{j}][{l}] = {v} < 0")));
    }
    Ok(ns)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub a_positive: Vec<(usize, usize, f64)>,
    pub b_negative: Vec<(usize, usize, f64)>,
    pub a_rows_without_zero: Vec<usize>,
    pub b_rows_without_zero: Vec<usize>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.a_positive.is_empty()
            && self.b_negative.is_empty()
            && self.a_rows_without_zero.is_empty()
            && self.b_rows_without_zero.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        let a = self.a_positive.iter().map(|(i, j, v)| format!("A~[{i}][{j}] = {v} is positive"));
        let b = self.b_negative.iter().map(|(j, l, v)| format!("B~[{j}][{l}] = {v} is negative"));
        let ar = self.a_rows_without_zero.iter().map(|i| format!("no zero in row {i} of A~"));
        let br = self.b_rows_without_zero.iter().map(|j| format!("no zero in row {j} of B~"));
        a.chain(b).chain(ar).chain(br).collect()
    }
}

pub fn verify_structure(ns: &NormalizedSystem, tol: f64) -> StructureReport {
    let mut report = StructureReport {
        a_positive: Vec::new(),
        b_negative: Vec::new(),
        a_rows_without_zero: Vec::new(),
        b_rows_without_zero: Vec::new(),
    };
    for i in 0..ns.a_tilde.nrows() {
        let mut has_zero = false;
        for (j, v) in ns.a_tilde.finite_in_row(i) {
            if v > tol {
                report.a_positive.push((i, j, v));
            }
            has_zero |= v.abs() <= tol;
        }
        if !has_zero {
            report.a_rows_without_zero.push(i);
        }
    }
    for j in 0..ns.b_tilde.nrows() {
        let mut has_zero = false;
        for (l, v) in ns.b_tilde.finite_in_row(j) {
            if v < -tol {
                report.b_negative.push((j, l, v));
            }
            has_zero |= v.abs() <= tol;
        }
        if !has_zero {
            report.b_rows_without_zero.push(j);
        }
    }
    report
}

/// Footprints read off the zero pattern. Rows with several zeros yield one
/// footprint per choice (the fixed point sits where several regions meet).
pub fn extract_footprint(ns: &NormalizedSystem, tol: f64) -> Vec<FootprintPair> {
    let zeros = |m: &TropMatrix, r: usize| -> Vec<usize> {
        m.finite_in_row(r)
            .filter(|(_, v)| v.abs() <= tol)
            .map(|(c, _)| c)
            .collect()
    };
    let n = ns.a_tilde.nrows();
    let choices = (0..n)
        .map(|i| zeros(&ns.a_tilde, i))
        .chain((0..ns.b_tilde.nrows()).map(|j| zeros(&ns.b_tilde, j)))
        .collect();
    Footprints::from_choices(choices, n).collect()
}

impl NormalizedSystem {
    /// The normalized dynamics `x̃(k) = Ã ⊗ (B̃ ⊗' (C·x̃(k−1) + D·x̃(k)))` as a system.
    pub fn to_system(&self) -> MmpsSystem {
        MmpsSystem {
            a: self.a_tilde.clone(),
            b: self.b_tilde.clone(),
            state_names: self.source.state_names.clone(),
            ..self.source.clone()
        }
    }

    /// `x(k) = x̃ + kλ·s + x_e`.
    pub fn denormalize_state(&self, x_tilde: &[f64], k: i64) -> Result<Vec<f64>> {
        self.check_len(x_tilde)?;
        let s = self.source.shift();
        Ok(x_tilde
            .iter()
            .zip(&self.solution.x_e)
            .zip(s.iter())
            .map(|((xt, xe), si)| xt + k as f64 * self.lambda * si + xe)
            .collect())
    }

    /// Inverse of [`NormalizedSystem::denormalize_state`].
    pub fn normalize_state(&self, x: &[f64], k: i64) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let s = self.source.shift();
        Ok(x.iter()
            .zip(&self.solution.x_e)
            .zip(s.iter())
            .map(|((x, xe), si)| x - k as f64 * self.lambda * si - xe)
            .collect())
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.source.n() {
            return Err(MmpsError::Dimension(format!(
                "state of length {} for n = {}",
                v.len(),
                self.source.n()
            )));
        }
        Ok(())
    }

    pub fn x_e(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.solution.x_e)
    }
}
