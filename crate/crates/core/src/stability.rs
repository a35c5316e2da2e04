//! Spectral stability of a linearized system.
//!
//! The verdict is local: it describes `x̃(k) = M·x̃(k−1)` and therefore the MMPS
//! system only while trajectories stay inside the linearization region.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{MmpsError, Result};
use crate::fixed_points::FixedPointSet;
use crate::growth::FootprintPair;
use crate::linalg::complex_rank;
use crate::linearization::LinearizedSystem;

pub const DEFAULT_EIG_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SWEEPS: usize = 10_000;
pub const DEFAULT_UNIT_TOL: f64 = 1e-8;
pub const DEFAULT_RANK_TOL: f64 = 1e-8;
/// Eigenvalues closer than this are treated as one repeated eigenvalue.
pub const CLUSTER_TOL: f64 = 1e-6;

fn serialize_complex<S: Serializer>(z: &Complex64, ser: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(ser)
}

fn serialize_complex_vec<S: Serializer>(v: &[Complex64], ser: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(ser)
}

/// A repeated eigenvalue on (or near) the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitCluster {
    #[serde(serialize_with = "serialize_complex")]
    pub value: Complex64,
    pub algebraic: usize,
    pub geometric: usize,
}

impl UnitCluster {
    pub fn semisimple(&self) -> bool {
        self.algebraic == self.geometric
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// sorted by decreasing modulus, then real part, then imaginary part
    #[serde(serialize_with = "serialize_complex_vec")]
    pub eigenvalues: Vec<Complex64>,
    pub unit_clusters: Vec<UnitCluster>,
}

impl Spectrum {
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Eigenvalues from the real Schur form, with unit-circle clusters annotated.
pub fn eigenvalues(m: &DMatrix<f64>, tol: f64, max_sweeps: usize, unit_tol: f64) -> Result<Spectrum> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(MmpsError::Dimension(format!("eigenvalues of a {:?} matrix", m.shape())));
    }
    crate::tropical::ensure_finite(m.as_slice(), "matrix")?;
    let schur = Schur::try_new(m.clone(), tol, max_sweeps).ok_or_else(|| {
        MmpsError::NoConvergence(format!("Schur iteration did not converge in {max_sweeps} sweeps"))
    })?;
    let mut eigs: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });

    let mut unit_clusters: Vec<UnitCluster> = Vec::new();
    let mut used = vec![false; eigs.len()];
    for k in 0..eigs.len() {
        if used[k] || (eigs[k].norm() - 1.0).abs() > unit_tol.max(CLUSTER_TOL) {
            continue;
        }
        let members: Vec<usize> = (k..eigs.len())
            .filter(|&q| !used[q] && (eigs[q] - eigs[k]).norm() <= CLUSTER_TOL)
            .collect();
        members.iter().for_each(|&q| used[q] = true);
        let value = members.iter().map(|&q| eigs[q]).sum::<Complex64>() / members.len() as f64;
        unit_clusters.push(UnitCluster {
            value,
            algebraic: members.len(),
            geometric: geometric_multiplicity(m, value, DEFAULT_RANK_TOL),
        });
    }
    Ok(Spectrum {
        eigenvalues: eigs,
        unit_clusters,
    })
}

/// `n − rank(M − μI)` over the complex numbers.
pub fn geometric_multiplicity(m: &DMatrix<f64>, mu: Complex64, tol: f64) -> usize {
    let n = m.nrows();
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(m[(i, j)], 0.0) - if i == j { mu } else { Complex64::new(0.0, 0.0) }
    });
    n - complex_rank(&shifted, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    /// eigenvalues with `|μ − 1| ≤ unit_tol`
    pub unit_eigen_count: usize,
    pub spectral_radius: f64,
    pub spectrum: Spectrum,
    /// `M·s = s` when the shift direction was supplied
    pub shift_eigenvector: Option<bool>,
    pub scope: &'static str,
    pub footprint: Option<FootprintPair>,
    pub lambda: Option<f64>,
}

pub const SCOPE: &str = "local, region-restricted";

/// Stable iff every `|μ| ≤ 1 + unit_tol` and every eigenvalue on the unit circle
/// is semisimple.
pub fn classify(m: &DMatrix<f64>, unit_tol: f64, shift: Option<&DVector<f64>>) -> Result<StabilityReport> {
    let spectrum = eigenvalues(m, DEFAULT_EIG_TOL, DEFAULT_MAX_SWEEPS, unit_tol)?;
    let mut reasons = Vec::new();
    for z in spectrum.eigenvalues.iter().filter(|z| z.norm() > 1.0 + unit_tol) {
        reasons.push(format!("eigenvalue {} has modulus {} > 1", fmt_complex(*z), z.norm()));
    }
    for c in spectrum.unit_clusters.iter().filter(|c| !c.semisimple()) {
        reasons.push(format!(
            "unit-modulus eigenvalue {} is defective (algebraic {}, geometric {})",
            fmt_complex(c.value),
            c.algebraic,
            c.geometric
        ));
    }
    let unit_eigen_count = spectrum
        .eigenvalues
        .iter()
        .filter(|z| (*z - Complex64::new(1.0, 0.0)).norm() <= unit_tol)
        .count();
    let shift_eigenvector = shift.map(|s| {
        let ok = s.len() == m.ncols() && (m * s - s).amax() <= 1e-9 * s.amax().max(1.0);
        if ok && unit_eigen_count == 0 {
            log::warn!("M·s = s holds but no eigenvalue was found at 1");
        }
        ok
    });
    if shift_eigenvector == Some(false) {
        log::warn!("M·s differs from s; the system may not be time-invariant");
    }
    let verdict = if reasons.is_empty() {
        Verdict::Stable
    } else {
        Verdict::Unstable
    };
    Ok(StabilityReport {
        verdict,
        reasons,
        unit_eigen_count,
        spectral_radius: spectrum.spectral_radius(),
        spectrum,
        shift_eigenvector,
        scope: SCOPE,
        footprint: None,
        lambda: None,
    })
}

/// [`classify`] applied to a linearized system, recording its footprint and rate.
pub fn classify_linearized(
    lsys: &LinearizedSystem,
    shift: &DVector<f64>,
    unit_tol: f64,
) -> Result<StabilityReport> {
    let mut report = classify(&lsys.lin.m, unit_tol, Some(shift))?;
    report.footprint = Some(lsys.lin.footprint.clone());
    report.lambda = Some(lsys.lambda);
    Ok(report)
}

fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryCheck {
    pub passed: bool,
    pub unit_eigen_count: usize,
    pub rank_deficiency: usize,
    /// set when the two inputs belong to different footprints or rates
    pub input_error: Option<String>,
}

/// The number of unit eigenvalues must equal the rank deficiency of `H_eq`.
pub fn corollary_check(report: &StabilityReport, fps: &FixedPointSet) -> CorollaryCheck {
    let c = &fps.constraints;
    let rank_deficiency = c.h_eq.ncols() - fps.rank_heq;
    let mut input_error = None;
    if let Some(fp) = &report.footprint {
        if *fp != c.footprint {
            input_error = Some("stability report and fixed-point set use different footprints".into());
        }
    }
    if let Some(lambda) = report.lambda {
        if (lambda - c.lambda).abs() > 1e-6 {
            input_error = Some(format!(
                "stability report at rate {lambda} but fixed-point set at rate {}",
                c.lambda
            ));
        }
    }
    CorollaryCheck {
        passed: input_error.is_none() && report.unit_eigen_count == rank_deficiency,
        unit_eigen_count: report.unit_eigen_count,
        rank_deficiency,
        input_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a - Complex64::new(re, im)).norm() < 1e-12
    }

    #[test]
    fn identity_and_rotation() {
        let s = eigenvalues(&DMatrix::identity(2, 2), 1e-10, 100, 1e-8).unwrap();
        assert!(s.eigenvalues.iter().all(|z| close(*z, 1.0, 0.0)));
        assert_eq!(s.unit_clusters.len(), 1);
        assert_eq!(s.unit_clusters[0].geometric, 2);
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let s = eigenvalues(&rot, 1e-10, 100, 1e-8).unwrap();
        assert!(close(s.eigenvalues[0], 0.0, 1.0));
        assert!(close(s.eigenvalues[1], 0.0, -1.0));
    }

    #[test]
    fn jordan_block_is_defective() {
        let j = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert_eq!(geometric_multiplicity(&j, Complex64::new(1.0, 0.0), 1e-8), 1);
        let r = classify(&j, 1e-8, None).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable);
        assert!(r.reasons[0].contains("defective"));
    }

    #[test]
    fn scaling_by_two_is_unstable() {
        let r = classify(&(DMatrix::identity(3, 3) * 2.0), 1e-8, None).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable);
        assert_eq!(r.reasons.len(), 3);
        assert_eq!(r.unit_eigen_count, 0);
    }

    #[test]
    fn trace_and_determinant_identities() {
        let m = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, -0.1, 0.3, 0.1, 0.7, -0.4, 0.9, 0.2]);
        let s = eigenvalues(&m, 1e-10, 1000, 1e-8).unwrap();
        let sum: Complex64 = s.eigenvalues.iter().sum();
        let prod: Complex64 = s.eigenvalues.iter().product();
        assert!((sum.re - m.trace()).abs() < 1e-10 && sum.im.abs() < 1e-10);
        assert!((prod.re - m.determinant()).abs() < 1e-10 && prod.im.abs() < 1e-10);
    }
}
