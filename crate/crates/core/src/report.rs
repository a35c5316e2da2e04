//! Serializable stage reports and the full analysis pipeline.
//!
//! Each `*_stage` function is what one CLI subcommand prints; [`analyze`] only
//! chains them.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{MmpsError, Result};
use crate::fixed_points::{
    build_constraints, membership, sigma_bounds, solve_fixed_point_set, FixedPointSet, IneqSource, Interval,
};
use crate::growth::{solve_all, FootprintPair, GrowthRateReport, GrowthSolution, LppCounts};
use crate::linearization::{linearize_normalized, LinearizedSystem};
use crate::model::{MmpsSystem, TimeInvariance, Violation, DEFAULT_TIME_INVARIANCE_TOL};
use crate::normalization::{normalize, verify_structure, NormalizedSystem, StructureReport};
use crate::solvability::{analyze as analyze_solvability, Solvability};
use crate::stability::{classify_linearized, corollary_check, CorollaryCheck, StabilityReport, Verdict};
use crate::tropical::TropMatrix;

/// Numerical tolerances shared by the stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// rank decisions in Gaussian elimination
    pub rank: f64,
    /// zero detection in normalized matrices
    pub zero: f64,
    /// distance from 1 for unit eigenvalues
    pub unit: f64,
    /// matching a requested growth rate
    pub lambda: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-9,
            zero: 1e-8,
            unit: 1e-8,
            lambda: 1e-6,
        }
    }
}

impl Tolerances {
    /// One tolerance for rank and zero decisions, as set by `--tol`.
    pub fn with_tol(tol: f64) -> Self {
        Tolerances {
            rank: tol,
            zero: tol,
            ..Tolerances::default()
        }
    }
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vector(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSection {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub messages: Vec<String>,
    pub time_invariance: TimeInvariance,
}

impl ValidationSection {
    pub fn passed(&self) -> bool {
        self.valid && self.time_invariance.holds
    }
}

pub fn validation_stage(system: &MmpsSystem) -> ValidationSection {
    let report = system.validate();
    ValidationSection {
        n: system.n(),
        m: system.m(),
        p: system.p(),
        valid: report.is_valid(),
        messages: report.violations.iter().map(|v| v.to_string()).collect(),
        violations: report.violations,
        time_invariance: system.check_time_invariance(DEFAULT_TIME_INVARIANCE_TOL),
    }
}

pub fn solvability_stage(system: &MmpsSystem) -> Solvability {
    analyze_solvability(system)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthSection {
    pub lambdas: Vec<f64>,
    pub counts: LppCounts,
    pub solutions: Vec<GrowthSolution>,
}

pub fn growth_stage(system: &MmpsSystem, parallel: bool) -> Result<(GrowthSection, GrowthRateReport)> {
    let report = solve_all(system, parallel)?;
    let section = GrowthSection {
        lambdas: report.lambdas(),
        counts: report.counts,
        solutions: report.rates.iter().flat_map(|g| g.solutions.clone()).collect(),
    };
    Ok((section, report))
}

/// The representative solution for a requested rate: the first footprint of its group.
pub fn select_rate(report: &GrowthRateReport, lambda: f64, tol: f64) -> Result<GrowthSolution> {
    report
        .group(lambda, tol)
        .map(|g| g.solutions[0].clone())
        .ok_or_else(|| {
            MmpsError::InvalidArgument(format!(
                "no growth rate within {tol:e} of {lambda}; available: {:?}",
                report.lambdas()
            ))
        })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointSection {
    pub lambda: f64,
    pub footprint: FootprintPair,
    pub rank_heq: usize,
    pub dimension: usize,
    pub x_particular: Vec<f64>,
    pub x_directions: Vec<Vec<f64>>,
    pub v_particular: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    pub sigma_bounds: Vec<Interval>,
    pub h_ineq: Vec<Vec<f64>>,
    pub h_ineq_rhs: Vec<f64>,
    pub ineq_sources: Vec<IneqSource>,
    /// whether the LP's own fixed point lies in the set
    pub representative_member: bool,
}

pub fn fixed_point_stage(
    system: &MmpsSystem,
    sol: &GrowthSolution,
    tol: &Tolerances,
) -> Result<(FixedPointSection, FixedPointSet)> {
    let fc = build_constraints(system, &sol.footprint, sol.lambda)?;
    let fps = solve_fixed_point_set(&fc, system, tol.rank)?;
    let bounds = sigma_bounds(&fps)?;
    let section = FixedPointSection {
        lambda: sol.lambda,
        footprint: sol.footprint.clone(),
        rank_heq: fps.rank_heq,
        dimension: fps.directions.len(),
        x_particular: vector(&fps.x_particular()),
        x_directions: fps.x_directions().iter().map(vector).collect(),
        v_particular: vector(&fps.v_particular),
        directions: fps.directions.iter().map(vector).collect(),
        sigma_bounds: bounds,
        h_ineq: matrix_rows(&fc.h_ineq),
        h_ineq_rhs: vector(&fc.h_ineq_rhs),
        ineq_sources: fc.ineq_sources.clone(),
        representative_member: membership(&fps, &sol.x_e, 1e-6)?,
    };
    Ok((section, fps))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizationSection {
    pub lambda: f64,
    pub x_e: Vec<f64>,
    pub a_tilde: TropMatrix,
    pub b_tilde: TropMatrix,
    pub structure: StructureReport,
    pub structure_ok: bool,
}

pub fn normalization_stage(
    system: &MmpsSystem,
    sol: &GrowthSolution,
    tol: &Tolerances,
) -> Result<(NormalizationSection, NormalizedSystem)> {
    let ns = normalize(system, sol)?;
    let structure = verify_structure(&ns, tol.zero);
    let section = NormalizationSection {
        lambda: ns.lambda,
        x_e: sol.x_e.clone(),
        a_tilde: ns.a_tilde.clone(),
        b_tilde: ns.b_tilde.clone(),
        structure_ok: structure.passed(),
        structure,
    };
    Ok((section, ns))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearizationSection {
    pub lambda: f64,
    pub footprint: FootprintPair,
    pub base_fixed_point: Vec<f64>,
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    #[serde(rename = "M1")]
    pub m1: Vec<Vec<f64>>,
    #[serde(rename = "M2")]
    pub m2: Vec<Vec<f64>>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    pub h_rhs: Vec<f64>,
    pub region_sources: Vec<IneqSource>,
}

pub fn linearization_stage(ns: &NormalizedSystem) -> Result<(LinearizationSection, LinearizedSystem)> {
    let ls = linearize_normalized(ns)?;
    let section = LinearizationSection {
        lambda: ls.lambda,
        footprint: ls.lin.footprint.clone(),
        base_fixed_point: ls.base_fixed_point.clone(),
        m: matrix_rows(&ls.lin.m),
        m1: matrix_rows(&ls.lin.m1),
        m2: matrix_rows(&ls.lin.m2),
        h: matrix_rows(&ls.region.h),
        h_rhs: vector(&ls.region.h_rhs),
        region_sources: ls.region.sources.clone(),
    };
    Ok((section, ls))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilitySection {
    pub report: StabilityReport,
    pub corollary: CorollaryCheck,
}

pub fn stability_stage(
    system: &MmpsSystem,
    ls: &LinearizedSystem,
    fps: &FixedPointSet,
    tol: &Tolerances,
) -> Result<StabilitySection> {
    let report = classify_linearized(ls, &system.shift(), tol.unit)?;
    let corollary = corollary_check(&report, fps);
    Ok(StabilitySection { report, corollary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateAnalysis {
    pub lambda: f64,
    /// every footprint whose program reached this rate
    pub footprints: Vec<FootprintPair>,
    pub fixed_points: FixedPointSection,
    pub normalization: NormalizationSection,
    pub linearization: LinearizationSection,
    pub stability: StabilitySection,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub tolerances: Tolerances,
    pub validation: ValidationSection,
    pub solvability: Solvability,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthSection>,
    pub rates: Vec<RateAnalysis>,
}

impl AnalysisReport {
    /// False when the system is not solvable, has no growth rate, or any rate is unstable.
    pub fn is_positive(&self) -> bool {
        matches!(self.solvability, Solvability::Solvable(_))
            && !self.rates.is_empty()
            && self
                .rates
                .iter()
                .all(|r| r.stability.report.verdict == Verdict::Stable)
    }
}

/// Validation, solvability, growth rates, then per rate: fixed points,
/// normalization, linearization and stability.
pub fn analyze(system: &MmpsSystem, parallel: bool, tol: &Tolerances) -> Result<AnalysisReport> {
    let validation = validation_stage(system);
    if !validation.passed() {
        let why = validation
            .messages
            .first()
            .cloned()
            .unwrap_or_else(|| format!("not time-invariant in rows {:?}", validation.time_invariance.failing_rows));
        return Err(MmpsError::InvalidSystem(why));
    }
    let solvability = solvability_stage(system);
    let mut report = AnalysisReport {
        tolerances: *tol,
        validation,
        solvability,
        growth: None,
        rates: Vec::new(),
    };
    if report.solvability.certificate().is_none() {
        return Ok(report);
    }
    let (growth, rates) = growth_stage(system, parallel)?;
    report.growth = Some(growth);
    for group in &rates.rates {
        let sol = &group.solutions[0];
        let (fixed_points, fps) = fixed_point_stage(system, sol, tol)?;
        let (normalization, ns) = normalization_stage(system, sol, tol)?;
        let (linearization, ls) = linearization_stage(&ns)?;
        let stability = stability_stage(system, &ls, &fps, tol)?;
        report.rates.push(RateAnalysis {
            lambda: group.lambda,
            footprints: group.solutions.iter().map(|s| s.footprint.clone()).collect(),
            fixed_points,
            normalization,
            linearization,
            stability,
        });
    }
    Ok(report)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}
