//! Dense Gaussian elimination: rank, affine solution sets, LU solves.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{MmpsError, Result};

/// Reduced row echelon form of a matrix, computed with partial pivoting.
#[derive(Debug, Clone)]
pub struct Rref {
    pub reduced: DMatrix<f64>,
    /// pivot column of each nonzero row, in row order
    pub pivots: Vec<usize>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

fn scale_of(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

/// Gauss–Jordan elimination. Entries below `tol · max(1, max|a|)` count as zero.
pub fn rref(a: &DMatrix<f64>, tol: f64) -> Rref {
    rref_on_columns(a, a.ncols(), tol * scale_of(a))
}

/// Elimination that searches pivots only in the first `search_cols` columns but applies
/// every row operation to the whole matrix (used for augmented systems).
fn rref_on_columns(a: &DMatrix<f64>, search_cols: usize, eps: f64) -> Rref {
    let mut m = a.clone();
    let (rows, cols) = m.shape();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..search_cols {
        if r == rows {
            break;
        }
        let (best, val) = (r..rows)
            .map(|i| (i, m[(i, c)].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= eps {
            for i in r..rows {
                m[(i, c)] = 0.0;
            }
            continue;
        }
        m.swap_rows(r, best);
        let p = m[(r, c)];
        for j in c..cols {
            m[(r, j)] /= p;
        }
        for i in 0..rows {
            if i != r {
                let factor = m[(i, c)];
                if factor != 0.0 {
                    for j in c..cols {
                        m[(i, j)] -= factor * m[(r, j)];
                    }
                    m[(i, c)] = 0.0;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    Rref { reduced: m, pivots }
}

pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    rref(a, tol).rank()
}

/// Solution set `{particular + Σ σ_i · null_i}` of `A v = b`.
#[derive(Debug, Clone)]
pub struct AffineSolution {
    pub particular: DVector<f64>,
    pub null_basis: Vec<DVector<f64>>,
    pub rank: usize,
}

/// Solves `A v = b` by elimination on the augmented matrix; free variables are set to zero
/// in the particular solution.
pub fn solve_affine(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> Result<AffineSolution> {
    if a.nrows() != b.len() {
        return Err(MmpsError::Dimension(format!(
            "{} rows but {} right-hand sides",
            a.nrows(),
            b.len()
        )));
    }
    let n = a.ncols();
    let mut aug = DMatrix::zeros(a.nrows(), n + 1);
    aug.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
    aug.set_column(n, b);
    let red = rref_on_columns(&aug, n, tol * scale_of(a));
    let full = &red.reduced;

    let rank = red.rank();
    let scale = scale_of(a).max(b.amax()).max(1.0);
    let residual = (rank..a.nrows())
        .map(|i| full[(i, n)].abs())
        .fold(0.0, f64::max);
    if residual > tol * scale * 1e3 {
        return Err(MmpsError::Inconsistent { residual });
    }

    let mut particular = DVector::zeros(n);
    for (row, &c) in red.pivots.iter().enumerate() {
        particular[c] = full[(row, n)];
    }
    let is_pivot: Vec<bool> = (0..n).map(|c| red.pivots.contains(&c)).collect();
    let null_basis = (0..n)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = DVector::zeros(n);
            v[free] = 1.0;
            for (row, &pc) in red.pivots.iter().enumerate() {
                v[pc] = -full[(row, free)];
            }
            v
        })
        .collect();
    Ok(AffineSolution {
        particular,
        null_basis,
        rank,
    })
}

/// Solves `A X = B` for square `A` by LU with partial pivoting.
///
/// Fails with [`MmpsError::Singular`] when a pivot magnitude drops to `min_pivot` or below.
pub fn lu_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, min_pivot: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return Err(MmpsError::Dimension(format!(
            "lu_solve on {}x{} with {} right-hand rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    for c in 0..n {
        let best = (c..n)
            .max_by(|&i, &j| lu[(i, c)].abs().total_cmp(&lu[(j, c)].abs()))
            .expect("non-empty");
        let pivot = lu[(best, c)];
        if pivot.abs() <= min_pivot {
            return Err(MmpsError::Singular { column: c, pivot });
        }
        lu.swap_rows(c, best);
        x.swap_rows(c, best);
        for i in c + 1..n {
            let f = lu[(i, c)] / pivot;
            if f != 0.0 {
                for j in c..n {
                    lu[(i, j)] -= f * lu[(c, j)];
                }
                for j in 0..x.ncols() {
                    x[(i, j)] -= f * x[(c, j)];
                }
            }
        }
    }
    for c in (0..n).rev() {
        for j in 0..x.ncols() {
            let mut s = x[(c, j)];
            for k in c + 1..n {
                s -= lu[(c, k)] * x[(k, j)];
            }
            x[(c, j)] = s / lu[(c, c)];
        }
    }
    Ok(x)
}

/// Rank over the complex numbers, absolute pivot tolerance `tol`.
pub fn complex_rank(a: &DMatrix<Complex64>, tol: f64) -> usize {
    let mut m = a.clone();
    let (rows, cols) = m.shape();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let best = (r..rows)
            .max_by(|&i, &j| m[(i, c)].norm().total_cmp(&m[(j, c)].norm()))
            .expect("non-empty");
        if m[(best, c)].norm() <= tol {
            continue;
        }
        m.swap_rows(r, best);
        let p = m[(r, c)];
        for i in r + 1..rows {
            let f = m[(i, c)] / p;
            for j in c..cols {
                let v = m[(r, j)];
                m[(i, j)] -= f * v;
            }
        }
        r += 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_simple_matrices() {
        assert_eq!(rank(&DMatrix::identity(3, 3), 1e-9), 3);
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 1.0, 0.0, 1.0]);
        assert_eq!(rank(&m, 1e-9), 2);
        assert_eq!(rank(&DMatrix::zeros(2, 4), 1e-9), 0);
    }

    #[test]
    fn affine_solution_spans_solution_set() {
        // x + y + z = 3, x - y = 0
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 1.0, -1.0, 0.0]);
        let b = DVector::from_vec(vec![3.0, 0.0]);
        let sol = solve_affine(&a, &b, 1e-9).unwrap();
        assert_eq!(sol.rank, 2);
        assert_eq!(sol.null_basis.len(), 1);
        assert!((&a * &sol.particular - &b).amax() < 1e-12);
        for v in &sol.null_basis {
            assert!((&a * v).amax() < 1e-12);
        }
    }

    #[test]
    fn inconsistent_system_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(
            solve_affine(&a, &b, 1e-9),
            Err(MmpsError::Inconsistent { .. })
        ));
    }

    #[test]
    fn lu_solves_and_detects_singularity() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 1.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[4.0, 3.0]);
        let x = lu_solve(&a, &b, 1e-12).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14 && (x[(1, 0)] - 2.0).abs() < 1e-14);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(
            lu_solve(&s, &b, 1e-12),
            Err(MmpsError::Singular { .. })
        ));
    }

    #[test]
    fn complex_rank_of_rotation_shift() {
        let i = Complex64::new(0.0, 1.0);
        let one = Complex64::new(1.0, 0.0);
        let z = Complex64::new(0.0, 0.0);
        // [[0,-1],[1,0]] - iI has rank 1
        let m = DMatrix::from_row_slice(2, 2, &[-i, -one, one, -i]);
        assert_eq!(complex_rank(&m, 1e-10), 1);
        let full = DMatrix::from_row_slice(2, 2, &[one, z, z, one]);
        assert_eq!(complex_rank(&full, 1e-10), 2);
    }
}
