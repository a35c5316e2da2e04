//! Dense two-phase primal simplex for small linear programs with free variables.
//!
//! Every variable is free; internally each one is split into the difference of
//! two nonnegative columns. Pricing is Dantzig's rule until the objective stops
//! improving for `5·(rows + cols)` pivots, after which Bland's rule takes over
//! for the rest of the solve.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{MmpsError, Result};
use crate::linalg::lu_solve;

/// `min cᵀv` subject to `A_eq·v = b_eq` and `A_le·v ≤ b_le`, `v` free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub eq_rows: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub le_rows: Vec<Vec<f64>>,
    pub le_rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
        }
    }

    pub fn minimize(mut self, c: Vec<f64>) -> Self {
        self.objective = c;
        self
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) {
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
    }

    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) {
        self.add_le(row.into_iter().map(|v| -v).collect(), -rhs);
    }

    fn check(&self) -> Result<()> {
        let n = self.num_vars;
        if self.objective.len() != n
            || self.eq_rows.iter().chain(&self.le_rows).any(|r| r.len() != n)
            || self.eq_rows.len() != self.eq_rhs.len()
            || self.le_rows.len() != self.le_rhs.len()
        {
            return Err(MmpsError::Dimension("linear program rows disagree".into()));
        }
        let all = self
            .objective
            .iter()
            .chain(self.eq_rows.iter().flatten())
            .chain(self.le_rows.iter().flatten())
            .chain(&self.eq_rhs)
            .chain(&self.le_rhs);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(MmpsError::NonFinite("linear program data".into()));
        }
        Ok(())
    }

    /// Largest equality residual and inequality excess at `v`.
    pub fn residual(&self, v: &[f64]) -> f64 {
        let dot = |r: &Vec<f64>| r.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let eq = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|(r, b)| (dot(r) - b).abs());
        let le = self
            .le_rows
            .iter()
            .zip(&self.le_rhs)
            .map(|(r, b)| (dot(r) - b).max(0.0));
        eq.chain(le).fold(0.0, f64::max)
    }

    pub fn objective_at(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn solve(&self) -> Result<LpOutcome> {
        solve_lp(self, &LpOptions::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// optimal point (empty unless `Optimal`)
    pub solution: Vec<f64>,
    pub objective: Option<f64>,
    /// feasible direction with negative objective slope (only for `Unbounded`)
    pub ray: Option<Vec<f64>>,
    /// sum of artificial variables at the end of phase 1
    pub phase1_objective: f64,
    pub iterations: usize,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    obj: Vec<f64>,
    bland: bool,
    iterations: usize,
}

enum PhaseEnd {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.ncols]
    }

    fn set_cost(&mut self, cost: &[f64]) {
        let mut obj = cost.to_vec();
        obj.push(0.0);
        for (r, row) in self.rows.iter().enumerate() {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(row) {
                    *o -= cb * v;
                }
            }
        }
        self.obj = obj;
    }

    fn value(&self) -> f64 {
        -self.obj[self.ncols]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[e] = 0.0;
            }
        }
        let f = self.obj[e];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            self.obj[e] = 0.0;
        }
        self.basis[r] = e;
        self.iterations += 1;
    }

    fn run(&mut self, allowed: &[bool], opts: &LpOptions) -> Result<PhaseEnd> {
        let stall_limit = 5 * (self.rows.len() + self.ncols);
        let max_iter = 50 * (self.rows.len() + self.ncols) + 1000;
        let mut best = self.value();
        let mut stall = 0;
        let start = self.iterations;
        loop {
            if self.iterations - start > max_iter {
                return Err(MmpsError::NoConvergence(format!(
                    "simplex exceeded {max_iter} pivots"
                )));
            }
            let candidates = (0..self.ncols).filter(|&j| allowed[j] && self.obj[j] < -opts.opt_tol);
            let entering = if self.bland {
                candidates.min()
            } else {
                candidates.min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]))
            };
            let Some(e) = entering else {
                return Ok(PhaseEnd::Optimal);
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][e];
                if a <= opts.pivot_tol {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                        let better = if tie {
                            if self.bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                a > self.rows[lr][e]
                            }
                        } else {
                            ratio < lratio
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((r, _)) = leave else {
                return Ok(PhaseEnd::Unbounded(e));
            };
            self.pivot(r, e);

            let v = self.value();
            if v < best - 1e-12 * (1.0 + best.abs()) {
                best = v;
                stall = 0;
            } else {
                stall += 1;
                if stall > stall_limit && !self.bland {
                    log::debug!("simplex switching to Bland's rule after {stall} stalled pivots");
                    self.bland = true;
                }
            }
        }
    }
}

/// Two-phase primal simplex.
pub fn solve_lp(lp: &LinearProgram, opts: &LpOptions) -> Result<LpOutcome> {
    lp.check()?;
    let nv = lp.num_vars;
    let n_le = lp.le_rows.len();
    let m = lp.eq_rows.len() + n_le;
    let n_struct = 2 * nv + n_le;

    // standard form rows with b >= 0
    let mut std_rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut slack_basic: Vec<Option<usize>> = Vec::with_capacity(m);
    let all_rows = lp
        .eq_rows
        .iter()
        .zip(&lp.eq_rhs)
        .map(|(r, b)| (r, *b, None))
        .chain(
            lp.le_rows
                .iter()
                .zip(&lp.le_rhs)
                .enumerate()
                .map(|(k, (r, b))| (r, *b, Some(2 * nv + k))),
        );
    for (row, b, slack) in all_rows {
        let mut out = vec![0.0; n_struct];
        for (j, &a) in row.iter().enumerate() {
            out[2 * j] = a;
            out[2 * j + 1] = -a;
        }
        if let Some(s) = slack {
            out[s] = 1.0;
        }
        let flip = b < 0.0;
        if flip {
            out.iter_mut().for_each(|v| *v = -*v);
        }
        slack_basic.push(slack.filter(|_| !flip));
        std_rows.push(out);
        rhs.push(b.abs());
    }

    let art_rows: Vec<usize> = (0..m).filter(|&r| slack_basic[r].is_none()).collect();
    let ncols = n_struct + art_rows.len();
    let mut basis = vec![0; m];
    let mut rows = Vec::with_capacity(m);
    for r in 0..m {
        let mut row = std_rows[r].clone();
        row.resize(ncols + 1, 0.0);
        row[ncols] = rhs[r];
        match slack_basic[r] {
            Some(s) => basis[r] = s,
            None => {
                let a = n_struct + art_rows.iter().position(|&x| x == r).expect("artificial row");
                row[a] = 1.0;
                basis[r] = a;
            }
        }
        rows.push(row);
    }
    let mut tab = Tableau {
        rows,
        basis,
        ncols,
        obj: Vec::new(),
        bland: false,
        iterations: 0,
    };
    let is_art = |j: usize| j >= n_struct;

    // phase 1
    let mut cost1 = vec![0.0; ncols];
    cost1[n_struct..].iter_mut().for_each(|c| *c = 1.0);
    tab.set_cost(&cost1);
    let everything = vec![true; ncols];
    tab.run(&everything, opts)?;
    let phase1 = tab.value().max(0.0);
    let scale = rhs.iter().fold(1.0_f64, |a, b| a.max(*b));
    if phase1 > opts.feas_tol * scale {
        return Ok(LpOutcome {
            status: LpStatus::Infeasible,
            solution: Vec::new(),
            objective: None,
            ray: None,
            phase1_objective: phase1,
            iterations: tab.iterations,
        });
    }

    // drive remaining artificials out of the basis; rows where that is impossible are redundant
    let mut r = 0;
    while r < tab.rows.len() {
        if is_art(tab.basis[r]) {
            let best = (0..n_struct)
                .filter(|&j| tab.rows[r][j].abs() > opts.pivot_tol)
                .max_by(|&a, &b| tab.rows[r][a].abs().total_cmp(&tab.rows[r][b].abs()));
            match best {
                Some(j) => tab.pivot(r, j),
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // phase 2
    let mut cost2 = vec![0.0; ncols];
    for (j, &c) in lp.objective.iter().enumerate() {
        cost2[2 * j] = c;
        cost2[2 * j + 1] = -c;
    }
    tab.set_cost(&cost2);
    let allowed: Vec<bool> = (0..ncols).map(|j| !is_art(j)).collect();
    let end = tab.run(&allowed, opts)?;

    let to_original = |full: &[f64]| -> Vec<f64> {
        (0..nv).map(|j| full[2 * j] - full[2 * j + 1]).collect()
    };

    match end {
        PhaseEnd::Unbounded(e) => {
            let mut dir = vec![0.0; ncols];
            dir[e] = 1.0;
            for (r, &b) in tab.basis.iter().enumerate() {
                dir[b] -= tab.rows[r][e];
            }
            Ok(LpOutcome {
                status: LpStatus::Unbounded,
                solution: Vec::new(),
                objective: None,
                ray: Some(to_original(&dir)),
                phase1_objective: phase1,
                iterations: tab.iterations,
            })
        }
        PhaseEnd::Optimal => {
            let full = refine_basic_solution(&tab, &std_rows, &rhs, n_struct);
            let solution = to_original(&full);
            let objective = lp.objective_at(&solution);
            Ok(LpOutcome {
                status: LpStatus::Optimal,
                solution,
                objective: Some(objective),
                ray: None,
                phase1_objective: phase1,
                iterations: tab.iterations,
            })
        }
    }
}

/// Recomputes the basic variables from the original columns, which removes the
/// round-off accumulated by the tableau updates.
fn refine_basic_solution(tab: &Tableau, std_rows: &[Vec<f64>], rhs: &[f64], n_struct: usize) -> Vec<f64> {
    let mut from_tableau = vec![0.0; n_struct];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n_struct {
            from_tableau[b] = tab.rhs(r);
        }
    }
    let k = tab.basis.len();
    if k == 0 || tab.basis.iter().any(|&b| b >= n_struct) {
        return from_tableau;
    }
    // pick k independent original rows: the tableau rows were derived from all of them,
    // so solve the (possibly overdetermined) system by normal equations on the basis columns
    let m = std_rows.len();
    let bmat = DMatrix::from_fn(m, k, |i, c| std_rows[i][tab.basis[c]]);
    let b = DVector::from_column_slice(rhs);
    let normal = bmat.transpose() * &bmat;
    let target = DMatrix::from_column_slice(k, 1, (bmat.transpose() * b).as_slice());
    match lu_solve(&normal, &target, 1e-12) {
        Ok(xb) => {
            let mut full = vec![0.0; n_struct];
            for (c, &bcol) in tab.basis.iter().enumerate() {
                full[bcol] = xb[(c, 0)];
            }
            let residual = (0..m)
                .map(|i| {
                    let lhs: f64 = (0..n_struct).map(|j| std_rows[i][j] * full[j]).sum();
                    (lhs - rhs[i]).abs()
                })
                .fold(0.0, f64::max);
            let old = (0..m)
                .map(|i| {
                    let lhs: f64 = (0..n_struct).map(|j| std_rows[i][j] * from_tableau[j]).sum();
                    (lhs - rhs[i]).abs()
                })
                .fold(0.0, f64::max);
            if residual <= old {
                full
            } else {
                from_tableau
            }
        }
        Err(_) => from_tableau,
    }
}
