//! Fixed-point sets for a growth rate: an affine family cut by a polytope.
//!
//! The unknown is the extended vector `v = (x, y, w)`. Selected entries of a
//! footprint give equalities, the other finite entries give inequalities, and
//! `w = (C + D)·x` closes the system. The solution set is
//! `v_p + Σ σ_i·ŝ_i` with `σ` restricted by the inequalities.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{MmpsError, Result};
use crate::growth::FootprintPair;
use crate::linalg::{lu_solve, solve_affine};
use crate::lp::{LinearProgram, LpStatus};
use crate::model::MmpsSystem;

/// Which system entry produced an inequality row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IneqSource {
    /// `'A'` or `'B'`
    pub matrix: char,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointConstraints {
    pub h_eq: DMatrix<f64>,
    pub h_eq_rhs: DVector<f64>,
    pub h_ineq: DMatrix<f64>,
    pub h_ineq_rhs: DVector<f64>,
    pub ineq_sources: Vec<IneqSource>,
    pub lambda: f64,
    pub footprint: FootprintPair,
    pub n: usize,
    pub m: usize,
    pub p: usize,
}

/// Builds `H_eq·v = h_eq`, `H_ineq·v ≤ h_ineq` for footprint `fp` at rate `lambda`.
///
/// Equality rows come in the order: selected `A` entries (one per state), selected
/// `B` entries (one per row of `B`), then `w = (C + D)·x`. Inequality rows list the
/// unselected finite entries of `A` row by row, then those of `B`.
pub fn build_constraints(
    system: &MmpsSystem,
    fp: &FootprintPair,
    lambda: f64,
) -> Result<FixedPointConstraints> {
    fp.check(system)?;
    if !lambda.is_finite() {
        return Err(MmpsError::NonFinite(format!("growth rate {lambda}")));
    }
    let (n, m, p) = (system.n(), system.m(), system.p());
    let dim = n + m + p;
    let s = system.shift();
    let d = &system.d * &s;
    let cd = system.c_plus_d();
    let (xi, yi, wi) = (|i: usize| i, |j: usize| n + j, |l: usize| n + m + l);

    let mut h_eq = DMatrix::zeros(dim, dim);
    let mut h_eq_rhs = DVector::zeros(dim);
    let mut ineq_rows: Vec<(Vec<f64>, f64, IneqSource)> = Vec::new();

    for i in 0..n {
        for (j, a) in system.a.finite_in_row(i) {
            let mut row = vec![0.0; dim];
            row[xi(i)] = -1.0;
            row[yi(j)] += 1.0;
            let rhs = -a + s[i] * lambda;
            if fp.a_sel[i] == j {
                h_eq.row_mut(i).copy_from_slice(&row);
                h_eq_rhs[i] = rhs;
            } else {
                ineq_rows.push((row, rhs, IneqSource { matrix: 'A', row: i, col: j }));
            }
        }
    }
    for j in 0..m {
        for (l, b) in system.b.finite_in_row(j) {
            let mut row = vec![0.0; dim];
            row[yi(j)] = 1.0;
            row[wi(l)] -= 1.0;
            let rhs = b + d[l] * lambda;
            if fp.b_sel[j] == l {
                h_eq.row_mut(n + j).copy_from_slice(&row);
                h_eq_rhs[n + j] = rhs;
            } else {
                ineq_rows.push((row, rhs, IneqSource { matrix: 'B', row: j, col: l }));
            }
        }
    }
    for l in 0..p {
        let r = n + m + l;
        h_eq[(r, wi(l))] = 1.0;
        for q in 0..n {
            h_eq[(r, xi(q))] -= cd[(l, q)];
        }
    }

    let h_ineq = DMatrix::from_fn(ineq_rows.len(), dim, |r, c| ineq_rows[r].0[c]);
    let h_ineq_rhs = DVector::from_iterator(ineq_rows.len(), ineq_rows.iter().map(|r| r.1));
    Ok(FixedPointConstraints {
        h_eq,
        h_eq_rhs,
        h_ineq,
        h_ineq_rhs,
        ineq_sources: ineq_rows.into_iter().map(|r| r.2).collect(),
        lambda,
        footprint: fp.clone(),
        n,
        m,
        p,
    })
}

/// A closed interval whose ends may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const FREE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Encodes infinite ends as the strings `"-inf"` / `"inf"`.
pub fn serialize_bound<S: Serializer>(v: f64, ser: S) -> std::result::Result<S::Ok, S::Error> {
    if v == f64::INFINITY {
        ser.serialize_str("inf")
    } else if v == f64::NEG_INFINITY {
        ser.serialize_str("-inf")
    } else {
        ser.serialize_f64(v)
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        struct Bound(f64);
        impl Serialize for Bound {
            fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
                serialize_bound(self.0, ser)
            }
        }
        let mut seq = ser.serialize_seq(Some(2))?;
        seq.serialize_element(&Bound(self.lo))?;
        seq.serialize_element(&Bound(self.hi))?;
        seq.end()
    }
}

/// `{v_particular + Σ σ_i·directions[i] : P·σ ≤ q}` with `P = H_ineq·[directions]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSet {
    pub v_particular: DVector<f64>,
    /// `directions[0]` is the shift direction `(s, s_y, s_z)`
    pub directions: Vec<DVector<f64>>,
    pub rank_heq: usize,
    pub constraints: FixedPointConstraints,
}

impl FixedPointSet {
    pub fn n(&self) -> usize {
        self.constraints.n
    }

    pub fn lambda(&self) -> f64 {
        self.constraints.lambda
    }

    pub fn x_particular(&self) -> DVector<f64> {
        self.v_particular.rows(0, self.n()).into_owned()
    }

    pub fn x_directions(&self) -> Vec<DVector<f64>> {
        self.directions
            .iter()
            .map(|d| d.rows(0, self.n()).into_owned())
            .collect()
    }

    pub fn direction_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_columns(&self.directions)
    }

    /// `(P, q)` of the σ-polytope `P·σ ≤ q`.
    pub fn sigma_polytope(&self) -> (DMatrix<f64>, DVector<f64>) {
        let c = &self.constraints;
        let pm = &c.h_ineq * self.direction_matrix();
        let q = &c.h_ineq_rhs - &c.h_ineq * &self.v_particular;
        (pm, q)
    }

    /// The extended point for coefficients `sigma`.
    pub fn point(&self, sigma: &[f64]) -> Result<DVector<f64>> {
        if sigma.len() != self.directions.len() {
            return Err(MmpsError::Dimension(format!(
                "{} coefficients for {} directions",
                sigma.len(),
                self.directions.len()
            )));
        }
        Ok(self
            .directions
            .iter()
            .zip(sigma)
            .fold(self.v_particular.clone(), |acc, (d, s)| acc + d * *s))
    }

    /// Re-expresses the same set in the basis `x = x_origin + Σ τ_i·x_dirs[i]`.
    ///
    /// `x_origin` must lie in the affine hull and `x_dirs` must span the same
    /// space as the current x-directions; both are checked to `tol`.
    pub fn rebase(&self, x_origin: &[f64], x_dirs: &[Vec<f64>], tol: f64) -> Result<FixedPointSet> {
        let n = self.n();
        let k = self.directions.len();
        if x_origin.len() != n || x_dirs.len() != k || x_dirs.iter().any(|d| d.len() != n) {
            return Err(MmpsError::Dimension(format!(
                "rebase needs a length-{n} origin and {k} directions of length {n}"
            )));
        }
        let xd = DMatrix::from_columns(&self.x_directions());
        let coords = |target: DVector<f64>| -> Result<DVector<f64>> {
            let c = least_squares(&xd, &target)?;
            let resid = (&xd * &c - &target).amax();
            let scale = target.amax().max(1.0);
            if resid > tol * scale {
                return Err(MmpsError::InvalidArgument(format!(
                    "vector is not in the span of the fixed-point directions (residual {resid:e})"
                )));
            }
            Ok(c)
        };
        let sigma0 = coords(DVector::from_column_slice(x_origin) - self.x_particular())?;
        let dm = self.direction_matrix();
        let v_particular = &self.v_particular + &dm * sigma0;
        let directions = x_dirs
            .iter()
            .map(|d| coords(DVector::from_column_slice(d)).map(|c| &dm * c))
            .collect::<Result<Vec<_>>>()?;
        Ok(FixedPointSet {
            v_particular,
            directions,
            rank_heq: self.rank_heq,
            constraints: self.constraints.clone(),
        })
    }
}

fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let ata = a.transpose() * a;
    let atb = DMatrix::from_column_slice(a.ncols(), 1, (a.transpose() * b).as_slice());
    Ok(lu_solve(&ata, &atb, 1e-12)?.column(0).into_owned())
}

pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Gaussian elimination of the equalities and a normalized null-space basis.
///
/// The first direction is the shift direction `(s, s_y, s_z)`; the rest are
/// Gram–Schmidt orthogonalized against it and each other, then scaled so the
/// largest-magnitude entry is `+1`.
pub fn solve_fixed_point_set(
    fc: &FixedPointConstraints,
    system: &MmpsSystem,
    tol: f64,
) -> Result<FixedPointSet> {
    let sol = solve_affine(&fc.h_eq, &fc.h_eq_rhs, tol)?;
    let shift = system.extended_shift();
    if shift.len() != fc.h_eq.ncols() {
        return Err(MmpsError::Dimension("constraints built for another system".into()));
    }
    let shift_resid = (&fc.h_eq * &shift).amax();
    if shift_resid > 1e-9 {
        return Err(MmpsError::InvalidSystem(format!(
            "shift direction violates the equalities (residual {shift_resid:e}); check time invariance"
        )));
    }

    let mut basis: Vec<DVector<f64>> = vec![shift];
    for v in &sol.null_basis {
        let mut u = v.clone();
        for b in &basis {
            u -= b * (b.dot(&u) / b.dot(b));
        }
        if u.amax() > tol.max(1e-12) * v.amax().max(1.0) * 1e3 {
            basis.push(scale_to_unit_peak(u));
        }
    }
    let expected = fc.h_eq.ncols() - sol.rank;
    if basis.len() != expected {
        return Err(MmpsError::Contract(format!(
            "{} directions for a null space of dimension {expected}",
            basis.len()
        )));
    }
    Ok(FixedPointSet {
        v_particular: sol.particular,
        directions: basis,
        rank_heq: sol.rank,
        constraints: fc.clone(),
    })
}

fn scale_to_unit_peak(v: DVector<f64>) -> DVector<f64> {
    let peak = v.iter().fold(0.0_f64, |m, x| if x.abs() > m.abs() { *x } else { m });
    let mut v = v / peak;
    v.iter_mut().for_each(|x| {
        if *x == 0.0 {
            *x = 0.0; // drop negative zeros
        }
    });
    v
}

/// Per-axis bounds of the σ-polytope, two LPs per axis. Axes whose column of `P`
/// vanishes (always the shift axis) are unbounded without solving.
pub fn sigma_bounds(fps: &FixedPointSet) -> Result<Vec<Interval>> {
    let (pm, q) = fps.sigma_polytope();
    let k = fps.directions.len();
    let polytope = |objective: Vec<f64>| {
        let mut lp = LinearProgram::new(k).minimize(objective);
        for r in 0..pm.nrows() {
            lp.add_le(pm.row(r).iter().copied().collect(), q[r]);
        }
        lp
    };
    let mut bounds = Vec::with_capacity(k);
    for axis in 0..k {
        if pm.column(axis).amax() == 0.0 {
            bounds.push(Interval::FREE);
            continue;
        }
        let mut ends = [0.0; 2];
        for (slot, sign) in [(0usize, 1.0), (1, -1.0)] {
            let mut c = vec![0.0; k];
            c[axis] = sign;
            let out = polytope(c).solve()?;
            ends[slot] = match out.status {
                LpStatus::Optimal => out.solution[axis],
                LpStatus::Unbounded => -sign * f64::INFINITY,
                LpStatus::Infeasible => {
                    return Err(MmpsError::Contract(
                        "empty fixed-point polytope for this footprint".into(),
                    ))
                }
            };
        }
        bounds.push(Interval {
            lo: ends[0],
            hi: ends[1],
        });
    }
    Ok(bounds)
}

/// Whether `x` equals `x_particular + Σ σ_i·x_dir_i` for some σ in the polytope,
/// each side allowed a slack of `tol` (scaled by the magnitude of `x`).
pub fn membership(fps: &FixedPointSet, x: &[f64], tol: f64) -> Result<bool> {
    let n = fps.n();
    if x.len() != n {
        return Err(MmpsError::Dimension(format!("candidate of length {} for n = {n}", x.len())));
    }
    let k = fps.directions.len();
    let xd = DMatrix::from_columns(&fps.x_directions());
    let target = DVector::from_column_slice(x) - fps.x_particular();
    let slack = tol * x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let (pm, q) = fps.sigma_polytope();
    let mut lp = LinearProgram::new(k);
    for i in 0..n {
        let row: Vec<f64> = xd.row(i).iter().copied().collect();
        lp.add_le(row.clone(), target[i] + slack);
        lp.add_ge(row, target[i] - slack);
    }
    for r in 0..pm.nrows() {
        lp.add_le(pm.row(r).iter().copied().collect(), q[r] + slack);
    }
    Ok(lp.solve()?.status != LpStatus::Infeasible)
}
