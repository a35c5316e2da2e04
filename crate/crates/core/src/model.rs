//! Implicit ABCD canonical systems `x(k) = A ⊗ (B ⊗' (C·x(k-1) + D·x(k)))`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MmpsError, Result};
use crate::tropical::{ensure_finite, ExtReal, TropMatrix};

/// Whether a signal carries event times (grows with the cycle rate) or a bounded quantity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "t")]
    Temporal,
    #[serde(rename = "q")]
    Quantity,
}

impl Kind {
    pub fn indicator(self) -> f64 {
        match self {
            Kind::Temporal => 1.0,
            Kind::Quantity => 0.0,
        }
    }
}

/// Implicit autonomous max-min-plus-scaling system in ABCD canonical form.
///
/// `x ∈ ℝⁿ`, the intermediate `y ∈ ℝᵐ` and the inner `z ∈ ℝᵖ` each carry a
/// per-entry [`Kind`]. States of either kind may be interleaved freely.
#[derive(Debug, Clone, PartialEq)]
pub struct MmpsSystem {
    pub a: TropMatrix,
    pub b: TropMatrix,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub kind_x: Vec<Kind>,
    pub kind_y: Vec<Kind>,
    pub kind_z: Vec<Kind>,
    pub state_names: Option<Vec<String>>,
}

/// One semantic problem found by [`MmpsSystem::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    IrregularA { row: usize },
    IrregularB { row: usize },
    NonFiniteC { row: usize, col: usize },
    NonFiniteD { row: usize, col: usize },
    KindMismatchA { row: usize, col: usize },
    KindMismatchB { row: usize, col: usize },
    NoTemporalState,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IrregularA { row } => write!(f, "row {row} of A not regular"),
            Violation::IrregularB { row } => write!(f, "row {row} of B not regular"),
            Violation::NonFiniteC { row, col } => write!(f, "C[{row}][{col}] is not finite"),
            Violation::NonFiniteD { row, col } => write!(f, "D[{row}][{col}] is not finite"),
            Violation::KindMismatchA { row, col } => {
                write!(f, "A[{row}][{col}] joins states of different kinds")
            }
            Violation::KindMismatchB { row, col } => {
                write!(f, "B[{row}][{col}] joins signals of different kinds")
            }
            Violation::NoTemporalState => write!(f, "no temporal state"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Result of the `(C + D)·s = s_z` check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeInvariance {
    pub holds: bool,
    /// `[(C + D)·s]_l − [s_z]_l` per inner row
    pub residuals: Vec<f64>,
    /// inner rows whose residual exceeds the tolerance
    pub failing_rows: Vec<usize>,
}

pub const DEFAULT_TIME_INVARIANCE_TOL: f64 = 1e-9;

impl MmpsSystem {
    /// Checks dimensions only; semantic checks live in [`MmpsSystem::validate`].
    pub fn new(
        a: TropMatrix,
        b: TropMatrix,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        kind_x: Vec<Kind>,
        kind_y: Vec<Kind>,
        kind_z: Vec<Kind>,
    ) -> Result<Self> {
        let (n, m, p) = (a.nrows(), a.ncols(), b.ncols());
        let dims_ok = b.nrows() == m
            && c.shape() == (p, n)
            && d.shape() == (p, n)
            && kind_x.len() == n
            && kind_y.len() == m
            && kind_z.len() == p;
        if !dims_ok || n == 0 {
            return Err(MmpsError::Dimension(format!(
                "A {}x{}, B {}x{}, C {:?}, D {:?}, kinds {}/{}/{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.shape(),
                d.shape(),
                kind_x.len(),
                kind_y.len(),
                kind_z.len()
            )));
        }
        Ok(MmpsSystem {
            a,
            b,
            c,
            d,
            kind_x,
            kind_y,
            kind_z,
            state_names: None,
        })
    }

    pub fn with_state_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n() {
            return Err(MmpsError::Dimension(format!(
                "{} names for {} states",
                names.len(),
                self.n()
            )));
        }
        self.state_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.a.ncols()
    }

    pub fn p(&self) -> usize {
        self.b.ncols()
    }

    /// `n + m + p`, the length of the extended vector `(x, y, w)`.
    pub fn extended_dim(&self) -> usize {
        self.n() + self.m() + self.p()
    }

    pub fn names(&self) -> Vec<String> {
        self.state_names
            .clone()
            .unwrap_or_else(|| (1..=self.n()).map(|i| format!("x{i}")).collect())
    }

    /// Temporal indicator `s` of the state.
    pub fn shift(&self) -> DVector<f64> {
        indicator(&self.kind_x)
    }

    pub fn shift_y(&self) -> DVector<f64> {
        indicator(&self.kind_y)
    }

    pub fn shift_z(&self) -> DVector<f64> {
        indicator(&self.kind_z)
    }

    /// `s` extended to `(x, y, w)`: the direction along which fixed points are shift-invariant.
    pub fn extended_shift(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.extended_dim());
        let parts = [self.shift(), self.shift_y(), self.shift_z()];
        let mut off = 0;
        for part in parts {
            v.rows_mut(off, part.len()).copy_from(&part);
            off += part.len();
        }
        v
    }

    pub fn temporal_count(&self) -> usize {
        self.kind_x.iter().filter(|k| **k == Kind::Temporal).count()
    }

    /// `C + D`.
    pub fn c_plus_d(&self) -> DMatrix<f64> {
        &self.c + &self.d
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for i in 0..self.n() {
            if !self.a.row(i).iter().any(|v| v.is_finite()) {
                violations.push(Violation::IrregularA { row: i });
            }
        }
        for j in 0..self.m() {
            if !self.b.row(j).iter().any(|v| v.is_finite()) {
                violations.push(Violation::IrregularB { row: j });
            }
        }
        for l in 0..self.p() {
            for i in 0..self.n() {
                if !self.c[(l, i)].is_finite() {
                    violations.push(Violation::NonFiniteC { row: l, col: i });
                }
                if !self.d[(l, i)].is_finite() {
                    violations.push(Violation::NonFiniteD { row: l, col: i });
                }
            }
        }
        for i in 0..self.n() {
            for (j, _) in self.a.finite_in_row(i) {
                if self.kind_x[i] != self.kind_y[j] {
                    violations.push(Violation::KindMismatchA { row: i, col: j });
                }
            }
        }
        for j in 0..self.m() {
            for (l, _) in self.b.finite_in_row(j) {
                if self.kind_y[j] != self.kind_z[l] {
                    violations.push(Violation::KindMismatchB { row: j, col: l });
                }
            }
        }
        if self.temporal_count() == 0 {
            violations.push(Violation::NoTemporalState);
        }
        ValidationReport { violations }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        match report.violations.first() {
            None => Ok(()),
            Some(v) => Err(MmpsError::InvalidSystem(format!(
                "{v} ({} violation(s))",
                report.violations.len()
            ))),
        }
    }

    /// Verifies `(C + D)·s = s_z` componentwise within `tol`.
    ///
    /// Under a block layout of temporal-then-quantity signals this is the usual
    /// row-sum condition: temporal inner rows sum to one over temporal states and
    /// quantity inner rows sum to zero.
    pub fn check_time_invariance(&self, tol: f64) -> TimeInvariance {
        let lhs = self.c_plus_d() * self.shift();
        let residuals: Vec<f64> = (lhs - self.shift_z()).iter().copied().collect();
        let failing_rows: Vec<usize> = residuals
            .iter()
            .enumerate()
            .filter(|(_, r)| !(r.abs() <= tol))
            .map(|(l, _)| l)
            .collect();
        TimeInvariance {
            holds: failing_rows.is_empty(),
            residuals,
            failing_rows,
        }
    }

    /// The inner signal `z = C·x_prev + D·x_cur`.
    pub fn inner(&self, x_prev: &[f64], x_cur: &[f64]) -> Result<DVector<f64>> {
        let n = self.n();
        if x_prev.len() != n || x_cur.len() != n {
            return Err(MmpsError::Dimension(format!(
                "state vectors of length {} and {} for n = {n}",
                x_prev.len(),
                x_cur.len()
            )));
        }
        ensure_finite(x_prev, "x_prev")?;
        ensure_finite(x_cur, "x_cur")?;
        let xp = DVector::from_column_slice(x_prev);
        let xc = DVector::from_column_slice(x_cur);
        Ok(&self.c * xp + &self.d * xc)
    }

    /// One evaluation of the right-hand side `A ⊗ (B ⊗' (C·x_prev + D·x_cur))`.
    pub fn evaluate_rhs(&self, x_prev: &[f64], x_cur: &[f64]) -> Result<Vec<f64>> {
        let z: Vec<ExtReal> = self.inner(x_prev, x_cur)?.iter().map(|&v| v.into()).collect();
        let y = self.b.minplus_apply(&z)?;
        let x = self.a.maxplus_apply(&y)?;
        x.into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.finite().ok_or_else(|| {
                    MmpsError::InvalidSystem(format!("state {i} evaluated to {v}; system not regular"))
                })
            })
            .collect()
    }
}

fn indicator(kinds: &[Kind]) -> DVector<f64> {
    DVector::from_iterator(kinds.len(), kinds.iter().map(|k| k.indicator()))
}
