//! Linear dynamics on the region of a footprint.
//!
//! In normalized coordinates, while the footprint's selections stay active the
//! system reads `x̃(k) = G_A·G_B·(C·x̃(k−1) + D·x̃(k))`, which solves to
//! `x̃(k) = M·x̃(k−1)` with `M = (I − M1)⁻¹·M2`, `M1 = G_A·G_B·D`, `M2 = G_A·G_B·C`.
//! The region `Ω = {x̃ : H·x̃ ≤ h}` is where those selections stay active.

use nalgebra::{DMatrix, DVector};

use crate::error::{MmpsError, Result};
use crate::fixed_points::IneqSource;
use crate::growth::FootprintPair;
use crate::linalg::lu_solve;
use crate::model::MmpsSystem;
use crate::normalization::NormalizedSystem;
use crate::solvability::{analyze, Solvability};
use crate::tropical::{kron_ones, vec_rowmajor, KronSide};

pub const MIN_PIVOT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    pub m: DMatrix<f64>,
    pub m1: DMatrix<f64>,
    pub m2: DMatrix<f64>,
    pub footprint: FootprintPair,
}

/// `M = (I − M1)⁻¹·M2` for footprint `fp`.
///
/// Requires an evaluation-order certificate; with one, `I − M1` is a permuted
/// unit lower triangular matrix and the solve cannot be singular.
pub fn linearize(system: &MmpsSystem, fp: &FootprintPair) -> Result<Linearization> {
    fp.check(system)?;
    if let Solvability::NotSolvable { cycle } = analyze(system) {
        return Err(MmpsError::Contract(format!(
            "linearization needs a solvable system; dependency cycle {cycle:?}"
        )));
    }
    let n = system.n();
    let select = |src: &DMatrix<f64>| {
        DMatrix::from_fn(n, n, |i, q| src[(fp.inner_of_state(i), q)])
    };
    let m1 = select(&system.d);
    let m2 = select(&system.c);
    let lhs = DMatrix::identity(n, n) - &m1;
    let m = lu_solve(&lhs, &m2, MIN_PIVOT).map_err(|e| {
        MmpsError::Contract(format!("I - M1 is singular despite a certificate: {e}"))
    })?;
    Ok(Linearization {
        m,
        m1,
        m2,
        footprint: fp.clone(),
    })
}

/// `Ω = {x̃ : H·x̃ ≤ h}`, one row per finite but unselected entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub h: DMatrix<f64>,
    pub h_rhs: DVector<f64>,
    pub sources: Vec<IneqSource>,
}

impl Region {
    pub fn rows(&self) -> usize {
        self.h.nrows()
    }

    /// Largest violation `max_r (H·x − h)_r`, or `-inf` with no rows.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let hx = &self.h * DVector::from_column_slice(x);
        (0..self.rows())
            .map(|r| hx[r] - self.h_rhs[r])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    /// Same polyhedron expressed around another fixed point of the same set:
    /// `h' = h + H·(x_from − x_to)`.
    pub fn shifted(&self, x_from: &[f64], x_to: &[f64]) -> Result<Region> {
        if x_from.len() != self.h.ncols() || x_to.len() != self.h.ncols() {
            return Err(MmpsError::Dimension("fixed points do not fit the region".into()));
        }
        let diff = DVector::from_column_slice(x_from) - DVector::from_column_slice(x_to);
        Ok(Region {
            h: self.h.clone(),
            h_rhs: &self.h_rhs + &self.h * diff,
            sources: self.sources.clone(),
        })
    }
}

/// Builds `H = [U; −L]`, `h = [vec(B̃); −vec(Ã)]` and keeps only rows of finite,
/// unselected entries (rows of `B` first, then rows of `A`, each row-major).
pub fn region(system: &MmpsSystem, ns: &NormalizedSystem, lin: &Linearization) -> Result<Region> {
    let (n, m, p) = (system.n(), system.m(), system.p());
    if ns.a_tilde.nrows() != n || ns.b_tilde.ncols() != p || lin.m.nrows() != n {
        return Err(MmpsError::Dimension("normalized system does not fit".into()));
    }
    let fp = &lin.footprint;
    let g_a = fp.g_a_real(m);
    let g_b = fp.g_b_real(p);
    let k = &system.c + &system.d * &lin.m;

    let u = (kron_ones(&g_b, p, KronSide::Right)? - kron_ones(&DMatrix::identity(p, p), m, KronSide::Left)?) * &k;
    let l = (kron_ones(&g_a, m, KronSide::Right)? - kron_ones(&DMatrix::identity(m, m), n, KronSide::Left)?)
        * &g_b
        * &k;
    let vb = vec_rowmajor(&ns.b_tilde);
    let va = vec_rowmajor(&ns.a_tilde);

    let mut rows: Vec<(DVector<f64>, f64, IneqSource)> = Vec::new();
    for (r, bound) in vb.iter().enumerate() {
        let (j, col) = (r / p, r % p);
        if let Some(b) = bound.finite() {
            if fp.b_sel[j] != col {
                rows.push((u.row(r).transpose(), b, IneqSource { matrix: 'B', row: j, col }));
            }
        }
    }
    for (r, bound) in va.iter().enumerate() {
        let (i, col) = (r / m, r % m);
        if let Some(a) = bound.finite() {
            if fp.a_sel[i] != col {
                rows.push((-l.row(r).transpose(), -a, IneqSource { matrix: 'A', row: i, col }));
            }
        }
    }
    Ok(Region {
        h: DMatrix::from_fn(rows.len(), n, |r, c| rows[r].0[c]),
        h_rhs: DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1)),
        sources: rows.into_iter().map(|r| r.2).collect(),
    })
}

/// A linearization together with its region and the fixed point it is centred on.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedSystem {
    pub lin: Linearization,
    pub region: Region,
    pub lambda: f64,
    pub base_fixed_point: Vec<f64>,
}

/// Linearizes around the fixed point of `ns` with the footprint that produced it.
pub fn linearize_normalized(ns: &NormalizedSystem) -> Result<LinearizedSystem> {
    let lin = linearize(&ns.source, &ns.solution.footprint)?;
    let region = region(&ns.source, ns, &lin)?;
    Ok(LinearizedSystem {
        lin,
        region,
        lambda: ns.lambda,
        base_fixed_point: ns.solution.x_e.clone(),
    })
}

/// Max-abs difference between the normalized MMPS step at `(x̃, M·x̃)` and `M·x̃`.
///
/// Refuses points outside the region by more than `tol`.
pub fn piecewise_step_check(
    ns: &NormalizedSystem,
    lsys: &LinearizedSystem,
    x_tilde: &[f64],
    tol: f64,
) -> Result<f64> {
    let n = ns.source.n();
    if x_tilde.len() != n {
        return Err(MmpsError::Dimension(format!("state of length {} for n = {n}", x_tilde.len())));
    }
    let violation = lsys.region.max_violation(x_tilde);
    if violation > tol {
        return Err(MmpsError::Contract(format!(
            "point lies outside the region (violation {violation:e})"
        )));
    }
    let linear = &lsys.lin.m * DVector::from_column_slice(x_tilde);
    let mmps = ns.to_system().evaluate_rhs(x_tilde, linear.as_slice())?;
    Ok(mmps
        .iter()
        .zip(linear.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
