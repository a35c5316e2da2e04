//! Growth rates by footprint enumeration.
//!
//! A footprint pair picks one finite entry per row of `A` and of `B`: the
//! arguments that attain the max and the min at a fixed point. Each pair gives
//! a linear program in `(λ, x, y)` whose feasible points are fixed points with
//! that selection; minimizing `λ` yields a candidate growth rate.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{MmpsError, Result};
use crate::lp::{LinearProgram, LpStatus};
use crate::model::{MmpsSystem, DEFAULT_TIME_INVARIANCE_TOL};
use crate::solvability::BoolMatrix;

/// One selected column per row of `A` (`a_sel`) and of `B` (`b_sel`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FootprintPair {
    pub a_sel: Vec<usize>,
    pub b_sel: Vec<usize>,
}

impl FootprintPair {
    pub fn g_a(&self, m: usize) -> BoolMatrix {
        BoolMatrix::from_fn(self.a_sel.len(), m, |i, j| self.a_sel[i] == j)
    }

    pub fn g_b(&self, p: usize) -> BoolMatrix {
        BoolMatrix::from_fn(self.b_sel.len(), p, |j, l| self.b_sel[j] == l)
    }

    pub fn g_a_real(&self, m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.a_sel.len(), m, |i, j| (self.a_sel[i] == j) as u8 as f64)
    }

    pub fn g_b_real(&self, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.b_sel.len(), p, |j, l| (self.b_sel[j] == l) as u8 as f64)
    }

    /// Inner index selected for state `i` through `G_A·G_B`.
    pub fn inner_of_state(&self, i: usize) -> usize {
        self.b_sel[self.a_sel[i]]
    }

    pub fn check(&self, system: &MmpsSystem) -> Result<()> {
        if self.a_sel.len() != system.n() || self.b_sel.len() != system.m() {
            return Err(MmpsError::Dimension(format!(
                "footprint with {}/{} rows for n = {}, m = {}",
                self.a_sel.len(),
                self.b_sel.len(),
                system.n(),
                system.m()
            )));
        }
        for (i, &j) in self.a_sel.iter().enumerate() {
            if j >= system.m() || !system.a.get(i, j).is_finite() {
                return Err(MmpsError::InvalidArgument(format!(
                    "footprint selects non-finite A[{i}][{j}]"
                )));
            }
        }
        for (j, &l) in self.b_sel.iter().enumerate() {
            if l >= system.p() || !system.b.get(j, l).is_finite() {
                return Err(MmpsError::InvalidArgument(format!(
                    "footprint selects non-finite B[{j}][{l}]"
                )));
            }
        }
        Ok(())
    }
}

/// Number of footprint pairs: the product of finite entries per row of `A` and `B`.
/// Saturates at `u128::MAX`.
pub fn footprint_count(system: &MmpsSystem) -> u128 {
    row_choices(system)
        .iter()
        .fold(1u128, |acc, c| acc.saturating_mul(c.len() as u128))
}

fn row_choices(system: &MmpsSystem) -> Vec<Vec<usize>> {
    let a = (0..system.n()).map(|i| system.a.finite_in_row(i).map(|(j, _)| j).collect());
    let b = (0..system.m()).map(|j| system.b.finite_in_row(j).map(|(l, _)| l).collect());
    a.chain(b).collect()
}

/// Lazy lexicographic enumeration of footprint pairs (last row of `B` varies fastest).
pub struct Footprints {
    choices: Vec<Vec<usize>>,
    n: usize,
    digits: Vec<usize>,
    done: bool,
}

impl Iterator for Footprints {
    type Item = FootprintPair;

    fn next(&mut self) -> Option<FootprintPair> {
        if self.done {
            return None;
        }
        let sel: Vec<usize> = self
            .digits
            .iter()
            .zip(&self.choices)
            .map(|(&d, c)| c[d])
            .collect();
        // advance the mixed-radix counter
        let mut k = self.digits.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.digits[k] += 1;
            if self.digits[k] < self.choices[k].len() {
                break;
            }
            self.digits[k] = 0;
        }
        Some(FootprintPair {
            a_sel: sel[..self.n].to_vec(),
            b_sel: sel[self.n..].to_vec(),
        })
    }
}

pub fn enumerate_footprints(system: &MmpsSystem) -> Footprints {
    Footprints::from_choices(row_choices(system), system.n())
}

impl Footprints {
    /// Every selection of one entry per list; the first `n` lists are rows of `A`.
    pub fn from_choices(choices: Vec<Vec<usize>>, n: usize) -> Footprints {
        let done = choices.iter().any(Vec::is_empty);
        Footprints {
            digits: vec![0; choices.len()],
            n,
            choices,
            done,
        }
    }
}

/// Variable layout of the growth-rate program: `λ`, then `x`, then `y`.
#[derive(Debug, Clone, Copy)]
pub struct LppLayout {
    pub n: usize,
    pub m: usize,
}

impl LppLayout {
    pub fn lambda(&self) -> usize {
        0
    }
    pub fn x(&self, i: usize) -> usize {
        1 + i
    }
    pub fn y(&self, j: usize) -> usize {
        1 + self.n + j
    }
    pub fn len(&self) -> usize {
        1 + self.n + self.m
    }
}

/// Builds the growth-rate program of a footprint, with `w = (C + D)·x` substituted.
///
/// For every finite `A[i][j]`: `−s_i·λ − x_i + y_j (= | ≤) −A[i][j]`, equality when
/// selected. For every finite `B[j][l]`: `y_j − d_l·λ − [(C + D)·x]_l (= | ≤) B[j][l]`
/// with `d = D·s`. The first temporal state is pinned to zero, since the feasible
/// set is invariant under shifts along `s`.
pub fn build_lpp(system: &MmpsSystem, fp: &FootprintPair) -> Result<LinearProgram> {
    fp.check(system)?;
    let (n, m) = (system.n(), system.m());
    let lay = LppLayout { n, m };
    let s = system.shift();
    let d = &system.d * &s;
    let cd = system.c_plus_d();
    let mut objective = vec![0.0; lay.len()];
    objective[lay.lambda()] = 1.0;
    let mut lp = LinearProgram::new(lay.len()).minimize(objective);

    for i in 0..n {
        for (j, a) in system.a.finite_in_row(i) {
            let mut row = vec![0.0; lay.len()];
            row[lay.lambda()] = -s[i];
            row[lay.x(i)] = -1.0;
            row[lay.y(j)] += 1.0;
            if fp.a_sel[i] == j {
                lp.add_eq(row, -a);
            } else {
                lp.add_le(row, -a);
            }
        }
    }
    for j in 0..m {
        for (l, b) in system.b.finite_in_row(j) {
            let mut row = vec![0.0; lay.len()];
            row[lay.y(j)] = 1.0;
            row[lay.lambda()] = -d[l];
            for q in 0..n {
                row[lay.x(q)] -= cd[(l, q)];
            }
            if fp.b_sel[j] == l {
                lp.add_eq(row, b);
            } else {
                lp.add_le(row, b);
            }
        }
    }
    let anchor = system
        .kind_x
        .iter()
        .position(|k| *k == crate::model::Kind::Temporal)
        .ok_or_else(|| MmpsError::InvalidSystem("no temporal state".into()))?;
    let mut row = vec![0.0; lay.len()];
    row[lay.x(anchor)] = 1.0;
    lp.add_eq(row, 0.0);
    Ok(lp)
}

/// A growth rate with one representative fixed point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSolution {
    pub lambda: f64,
    pub x_e: Vec<f64>,
    pub y_e: Vec<f64>,
    pub w_e: Vec<f64>,
    pub footprint: FootprintPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LppCounts {
    pub total_lpps: u128,
    pub feasible: u128,
    pub infeasible: u128,
    pub unbounded: u128,
}

/// Solutions sharing one growth rate (within the deduplication tolerance).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateGroup {
    pub lambda: f64,
    pub solutions: Vec<GrowthSolution>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRateReport {
    pub rates: Vec<RateGroup>,
    pub counts: LppCounts,
}

impl GrowthRateReport {
    pub fn lambdas(&self) -> Vec<f64> {
        self.rates.iter().map(|g| g.lambda).collect()
    }

    /// The group whose rate is within `tol` of `lambda`.
    pub fn group(&self, lambda: f64, tol: f64) -> Option<&RateGroup> {
        self.rates.iter().find(|g| (g.lambda - lambda).abs() <= tol)
    }
}

pub const LAMBDA_DEDUP_TOL: f64 = 1e-6;

enum LppResult {
    Feasible(GrowthSolution),
    Infeasible,
    Unbounded,
}

fn solve_one(system: &MmpsSystem, fp: FootprintPair) -> Result<LppResult> {
    let lp = build_lpp(system, &fp)?;
    let out = lp.solve()?;
    Ok(match out.status {
        LpStatus::Infeasible => LppResult::Infeasible,
        LpStatus::Unbounded => LppResult::Unbounded,
        LpStatus::Optimal => {
            let lay = LppLayout {
                n: system.n(),
                m: system.m(),
            };
            let v = &out.solution;
            let x_e: Vec<f64> = (0..system.n()).map(|i| v[lay.x(i)]).collect();
            let y_e: Vec<f64> = (0..system.m()).map(|j| v[lay.y(j)]).collect();
            let w_e = system.c_plus_d() * DVector::from_column_slice(&x_e);
            LppResult::Feasible(GrowthSolution {
                lambda: v[lay.lambda()],
                x_e,
                y_e,
                w_e: w_e.iter().copied().collect(),
                footprint: fp,
            })
        }
    })
}

/// Solves the program of every footprint pair and groups the optima by rate.
///
/// The result does not depend on `parallel`; outcomes are merged in enumeration order.
pub fn solve_all(system: &MmpsSystem, parallel: bool) -> Result<GrowthRateReport> {
    system.ensure_valid()?;
    let ti = system.check_time_invariance(DEFAULT_TIME_INVARIANCE_TOL);
    if !ti.holds {
        return Err(MmpsError::InvalidSystem(format!(
            "not time-invariant in inner rows {:?}",
            ti.failing_rows
        )));
    }
    let results = run_all(system, parallel)?;

    let mut counts = LppCounts::default();
    let mut rates: Vec<RateGroup> = Vec::new();
    for r in results {
        counts.total_lpps += 1;
        match r {
            LppResult::Infeasible => counts.infeasible += 1,
            LppResult::Unbounded => counts.unbounded += 1,
            LppResult::Feasible(sol) => {
                counts.feasible += 1;
                match rates
                    .iter_mut()
                    .find(|g| (g.lambda - sol.lambda).abs() <= LAMBDA_DEDUP_TOL)
                {
                    Some(g) => g.solutions.push(sol),
                    None => rates.push(RateGroup {
                        lambda: sol.lambda,
                        solutions: vec![sol],
                    }),
                }
            }
        }
    }
    rates.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    log::info!(
        "{} programs: {} feasible, {} infeasible, {} unbounded",
        counts.total_lpps,
        counts.feasible,
        counts.infeasible,
        counts.unbounded
    );
    Ok(GrowthRateReport { rates, counts })
}

#[cfg(feature = "parallel")]
fn run_all(system: &MmpsSystem, parallel: bool) -> Result<Vec<LppResult>> {
    use rayon::prelude::*;
    if parallel {
        let fps: Vec<FootprintPair> = enumerate_footprints(system).collect();
        return fps.into_par_iter().map(|fp| solve_one(system, fp)).collect();
    }
    enumerate_footprints(system)
        .map(|fp| solve_one(system, fp))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_all(system: &MmpsSystem, _parallel: bool) -> Result<Vec<LppResult>> {
    enumerate_footprints(system)
        .map(|fp| solve_one(system, fp))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::explicit_offsets;
    use crate::model::Kind;
    use crate::tropical::{diag_tropical, ExtReal, Flavor, TropMatrix, EPS};

    #[test]
    fn single_choice_gives_one_pair() {
        let sys = explicit_offsets(&[1.0, 1.0]);
        assert_eq!(footprint_count(&sys), 1);
        let all: Vec<_> = enumerate_footprints(&sys).collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].a_sel, vec![0, 1]);
    }

    #[test]
    fn product_rule_for_counts() {
        let f = ExtReal::Fin;
        let a = TropMatrix::from_rows(vec![vec![f(0.0), f(1.0), f(2.0)]]).unwrap();
        let b = TropMatrix::from_rows(vec![
            vec![f(0.0), f(1.0)],
            vec![f(0.0), ExtReal::Top],
            vec![ExtReal::Top, f(0.0)],
        ])
        .unwrap();
        let sys = MmpsSystem::new(
            a,
            b,
            DMatrix::from_element(2, 1, 1.0),
            DMatrix::zeros(2, 1),
            vec![Kind::Temporal],
            vec![Kind::Temporal; 3],
            vec![Kind::Temporal; 2],
        )
        .unwrap();
        assert_eq!(footprint_count(&sys), 6);
        let all: Vec<_> = enumerate_footprints(&sys).collect();
        assert_eq!(all.len(), 6);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all, "enumeration is lexicographic");
    }

    #[test]
    fn identity_dynamics_have_rate_one() {
        let sys = explicit_offsets(&[1.0, 1.0]);
        let lp = build_lpp(&sys, &enumerate_footprints(&sys).next().unwrap()).unwrap();
        // d = 0: B rows never involve lambda
        for (row, _) in lp.eq_rows.iter().zip(&lp.eq_rhs).skip(2) {
            assert_eq!(row[0], 0.0);
        }
        let report = solve_all(&sys, false).unwrap();
        assert_eq!(report.lambdas().len(), 1);
        assert!((report.rates[0].lambda - 1.0).abs() < 1e-9);
        assert_eq!(report.counts.feasible, 1);
    }

    #[test]
    fn contradictory_rates_are_infeasible() {
        let sys = explicit_offsets(&[1.0, 2.0]);
        let report = solve_all(&sys, false).unwrap();
        assert_eq!(report.counts.total_lpps, 1);
        assert_eq!(report.counts.infeasible, 1);
        assert!(report.rates.is_empty());
    }

    #[test]
    fn self_reading_state_leaves_lambda_free() {
        let sys = MmpsSystem::new(
            TropMatrix::from_rows(vec![vec![ExtReal::Fin(0.0)]]).unwrap(),
            TropMatrix::from_rows(vec![vec![ExtReal::Fin(0.0)]]).unwrap(),
            DMatrix::zeros(1, 1),
            DMatrix::identity(1, 1),
            vec![Kind::Temporal],
            vec![Kind::Temporal],
            vec![Kind::Temporal],
        )
        .unwrap();
        let report = solve_all(&sys, false).unwrap();
        assert_eq!(report.counts.unbounded, 1);
    }

    #[test]
    fn bad_footprint_is_rejected() {
        let mut sys = explicit_offsets(&[0.0, 0.0]);
        sys.a = diag_tropical(&[0.0, 0.0], Flavor::Max).unwrap();
        let fp = FootprintPair {
            a_sel: vec![1, 1],
            b_sel: vec![0, 1],
        };
        assert!(sys.a.get(0, 1) == EPS);
        assert!(build_lpp(&sys, &fp).is_err());
    }
}
