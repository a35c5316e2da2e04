//! Intra-cycle dependency structure and the evaluation-order certificate.
//!
//! A system is solvable by successive substitution when its 0/1 dependency
//! matrix `S = S_A·S_B·S_D` is permutation-similar to a strictly lower
//! triangular matrix, i.e. when the dependency digraph is acyclic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::model::MmpsSystem;

/// Dense 0/1 matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoolMatrix {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BoolMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BoolMatrix {
            rows,
            cols,
            data: vec![false; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let data = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        BoolMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        BoolMatrix::from_fn(r, c, |i, j| rows[i][j] != 0)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.cols + j] = v;
    }

    /// Boolean product: entry `(i, j)` is set iff some `k` has both `self[i,k]` and `other[k,j]`.
    pub fn bool_mul(&self, other: &BoolMatrix) -> BoolMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        BoolMatrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).any(|k| self.get(i, k) && other.get(k, j))
        })
    }

    pub fn is_zero(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) as u8).collect())
            .collect()
    }
}

/// Finiteness / nonzero patterns of `A`, `B` and `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureMatrices {
    pub s_a: BoolMatrix,
    pub s_b: BoolMatrix,
    pub s_d: BoolMatrix,
}

pub fn structure_matrices(system: &MmpsSystem) -> StructureMatrices {
    StructureMatrices {
        s_a: BoolMatrix::from_fn(system.n(), system.m(), |i, j| system.a.get(i, j).is_finite()),
        s_b: BoolMatrix::from_fn(system.m(), system.p(), |j, l| system.b.get(j, l).is_finite()),
        s_d: BoolMatrix::from_fn(system.p(), system.n(), |l, i| system.d[(l, i)] != 0.0),
    }
}

/// `S = S_A·S_B·S_D` thresholded to 0/1: `S[i][q]` is set when state `i` reads
/// state `q` of the same cycle.
pub fn dependency_matrix(sm: &StructureMatrices) -> BoolMatrix {
    sm.s_a.bool_mul(&sm.s_b).bool_mul(&sm.s_d)
}

/// Evaluation order making `T·S·T⁻¹` strictly lower triangular.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolvabilityCertificate {
    /// `order[i]` is the state evaluated `i`-th
    pub order: Vec<usize>,
    /// permutation matrix with `T[i][order[i]] = 1`
    pub t: BoolMatrix,
    pub s: BoolMatrix,
}

impl SolvabilityCertificate {
    /// `T·S·T⁻¹`, i.e. `S` with rows and columns reordered by `order`.
    pub fn permuted(&self) -> BoolMatrix {
        let o = &self.order;
        BoolMatrix::from_fn(o.len(), o.len(), |i, j| self.s.get(o[i], o[j]))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Solvability {
    Solvable(SolvabilityCertificate),
    /// Not solvable by the strict-lower-triangular criterion. `cycle` lists states
    /// `c0 -> c1 -> ... -> c0` where each arrow means "is read by".
    NotSolvable { cycle: Vec<usize> },
}

impl Solvability {
    pub fn certificate(&self) -> Option<&SolvabilityCertificate> {
        match self {
            Solvability::Solvable(c) => Some(c),
            Solvability::NotSolvable { .. } => None,
        }
    }
}

/// Kahn's topological sort on the arcs `q → i` for `S[i][q] = 1`, breaking ties by
/// the smallest state index.
pub fn find_certificate(s: &BoolMatrix) -> Solvability {
    let n = s.nrows();
    assert_eq!(n, s.ncols(), "dependency matrix must be square");
    let mut indegree: Vec<usize> = (0..n).map(|i| (0..n).filter(|&q| s.get(i, q)).count()).collect();
    let mut ready: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(q)) = ready.pop() {
        order.push(q);
        for i in 0..n {
            if s.get(i, q) {
                indegree[i] -= 1;
                if indegree[i] == 0 {
                    ready.push(Reverse(i));
                }
            }
        }
    }
    if order.len() < n {
        let remaining: Vec<bool> = (0..n).map(|i| indegree[i] > 0).collect();
        return Solvability::NotSolvable {
            cycle: find_cycle(s, &remaining),
        };
    }
    let t = BoolMatrix::from_fn(n, n, |i, j| order[i] == j);
    Solvability::Solvable(SolvabilityCertificate {
        order,
        t,
        s: s.clone(),
    })
}

/// Every node left after Kahn's algorithm has a predecessor that is also left, so
/// walking predecessors must revisit a node.
fn find_cycle(s: &BoolMatrix, remaining: &[bool]) -> Vec<usize> {
    let n = s.nrows();
    let start = remaining.iter().position(|&r| r).expect("a remaining node");
    let mut seen_at = vec![usize::MAX; n];
    let mut walk = Vec::new();
    let mut cur = start;
    while seen_at[cur] == usize::MAX {
        seen_at[cur] = walk.len();
        walk.push(cur);
        cur = (0..n)
            .find(|&q| remaining[q] && s.get(cur, q))
            .expect("remaining node has a remaining predecessor");
    }
    // walk holds successive predecessors; reverse into dependency direction
    let mut cycle: Vec<usize> = walk[seen_at[cur]..].to_vec();
    cycle.reverse();
    let lowest = (0..cycle.len()).min_by_key(|&k| cycle[k]).expect("non-empty");
    cycle.rotate_left(lowest);
    let first = cycle[0];
    cycle.push(first);
    cycle
}

/// Solvability of a system: structure matrices, dependency matrix, certificate.
pub fn analyze(system: &MmpsSystem) -> Solvability {
    find_certificate(&dependency_matrix(&structure_matrices(system)))
}

pub fn is_strictly_lower(m: &BoolMatrix) -> bool {
    (0..m.nrows()).all(|i| (i..m.ncols()).all(|j| !m.get(i, j)))
}
