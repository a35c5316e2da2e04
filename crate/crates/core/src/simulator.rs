//! Trajectories by successive substitution in certificate order.

use serde::Serialize;

use crate::error::{MmpsError, Result};
use crate::model::{Kind, MmpsSystem};
use crate::solvability::{dependency_matrix, structure_matrices, SolvabilityCertificate};
use crate::tropical::{ensure_finite, hilbert_norm};

/// Checks that `cert` was issued for `system`.
pub fn check_certificate(system: &MmpsSystem, cert: &SolvabilityCertificate) -> Result<()> {
    let n = system.n();
    let mut seen = vec![false; n];
    let is_perm = cert.order.len() == n
        && cert.order.iter().all(|&i| i < n && !std::mem::replace(&mut seen[i], true));
    if !is_perm || cert.s != dependency_matrix(&structure_matrices(system)) {
        return Err(MmpsError::InvalidArgument(
            "certificate does not belong to this system".into(),
        ));
    }
    Ok(())
}

/// One cycle: `x(k)` from `x(k−1)`, states evaluated in certificate order.
pub fn step(system: &MmpsSystem, cert: &SolvabilityCertificate, x_prev: &[f64]) -> Result<Vec<f64>> {
    check_certificate(system, cert)?;
    step_unchecked(system, cert, x_prev)
}

fn step_unchecked(system: &MmpsSystem, cert: &SolvabilityCertificate, x_prev: &[f64]) -> Result<Vec<f64>> {
    let (n, p) = (system.n(), system.p());
    if x_prev.len() != n {
        return Err(MmpsError::Dimension(format!("state of length {} for n = {n}", x_prev.len())));
    }
    ensure_finite(x_prev, "x_prev")?;
    let mut x = vec![0.0; n];
    let mut done = vec![false; n];
    let mut z: Vec<Option<f64>> = vec![None; p];

    for &i in &cert.order {
        let mut best = f64::NEG_INFINITY;
        for (j, a) in system.a.finite_in_row(i) {
            let mut inner = f64::INFINITY;
            for (l, b) in system.b.finite_in_row(j) {
                let zl = match z[l] {
                    Some(v) => v,
                    None => {
                        let mut v = 0.0;
                        for q in 0..n {
                            v += system.c[(l, q)] * x_prev[q];
                            let dq = system.d[(l, q)];
                            if dq != 0.0 {
                                if !done[q] {
                                    return Err(MmpsError::Contract(format!(
                                        "state {i} reads state {q} before it is computed"
                                    )));
                                }
                                v += dq * x[q];
                            }
                        }
                        z[l] = Some(v);
                        v
                    }
                };
                inner = inner.min(b + zl);
            }
            best = best.max(a + inner);
        }
        x[i] = best;
        done[i] = true;
    }
    Ok(x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub state_names: Vec<String>,
    /// `states[k]` is `x(k)`, `k = 0..=K`
    pub states: Vec<Vec<f64>>,
    /// `residuals[k-1]` is `max |x(k) − rhs(x(k−1), x(k))|`
    pub residuals: Vec<f64>,
}

impl Trajectory {
    pub fn cycles(&self) -> usize {
        self.states.len() - 1
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// CSV with a header row of state names and one row per cycle.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k");
        for name in &self.state_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (k, x) in self.states.iter().enumerate() {
            out.push_str(&k.to_string());
            for v in x {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// `K` cycles from `x0`, recording the implicit-equation residual of each step.
pub fn simulate(
    system: &MmpsSystem,
    cert: &SolvabilityCertificate,
    x0: &[f64],
    cycles: usize,
) -> Result<Trajectory> {
    check_certificate(system, cert)?;
    if cycles == 0 {
        return Err(MmpsError::InvalidArgument("need at least one cycle".into()));
    }
    ensure_finite(x0, "x0")?;
    let mut states = vec![x0.to_vec()];
    let mut residuals = Vec::with_capacity(cycles);
    for k in 1..=cycles {
        let prev = &states[k - 1];
        let x = step_unchecked(system, cert, prev)?;
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(MmpsError::NonFinite(format!("state {i} at cycle {k}")));
        }
        let rhs = system.evaluate_rhs(prev, &x)?;
        residuals.push(rhs.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        states.push(x);
    }
    Ok(Trajectory {
        state_names: system.names(),
        states,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthEstimate {
    /// mean per-cycle increment of each state over the tail
    pub rates: Vec<f64>,
    /// mean of the temporal rates
    pub temporal_rate: Option<f64>,
    /// all temporal rates agree and all quantity rates vanish, within `1e-6`
    pub consistent: bool,
}

pub const RATE_TOL: f64 = 1e-6;

/// Per-state growth over the last `tail_fraction` of the trajectory.
pub fn empirical_growth(traj: &Trajectory, kinds: &[Kind], tail_fraction: f64) -> Result<GrowthEstimate> {
    let k = traj.cycles();
    if k < 4 {
        return Err(MmpsError::InvalidArgument(format!("need at least 4 cycles, got {k}")));
    }
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(MmpsError::InvalidArgument(format!("tail fraction {tail_fraction}")));
    }
    let n = traj.states[0].len();
    if kinds.len() != n {
        return Err(MmpsError::Dimension(format!("{} kinds for {n} states", kinds.len())));
    }
    let tail = ((k as f64 * tail_fraction).ceil() as usize).clamp(1, k);
    let start = k - tail;
    let rates: Vec<f64> = (0..n)
        .map(|i| (traj.states[k][i] - traj.states[start][i]) / tail as f64)
        .collect();
    let temporal: Vec<f64> = (0..n)
        .filter(|&i| kinds[i] == Kind::Temporal)
        .map(|i| rates[i])
        .collect();
    let temporal_rate = (!temporal.is_empty()).then(|| temporal.iter().sum::<f64>() / temporal.len() as f64);
    let consistent = temporal_rate.is_none_or(|r| temporal.iter().all(|v| (v - r).abs() <= RATE_TOL))
        && (0..n)
            .filter(|&i| kinds[i] == Kind::Quantity)
            .all(|i| rates[i].abs() <= RATE_TOL);
    Ok(GrowthEstimate {
        rates,
        temporal_rate,
        consistent,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BufferProbe {
    /// Hilbert projective norm of the temporal sub-vector per cycle
    pub hilbert: Vec<f64>,
    pub running_max: Vec<f64>,
    /// `max_k` of the Hilbert norms
    pub bound: f64,
    /// largest absolute quantity state per cycle (empty without quantity states)
    pub quantity_abs_max: Vec<f64>,
}

/// Bounded-buffer diagnostics: projective norm for temporal states, plain
/// magnitude for quantity states.
pub fn buffer_stability_probe(
    system: &MmpsSystem,
    cert: &SolvabilityCertificate,
    x0: &[f64],
    cycles: usize,
) -> Result<BufferProbe> {
    let traj = simulate(system, cert, x0, cycles)?;
    let temporal: Vec<usize> = (0..system.n())
        .filter(|&i| system.kind_x[i] == Kind::Temporal)
        .collect();
    let quantity: Vec<usize> = (0..system.n())
        .filter(|&i| system.kind_x[i] == Kind::Quantity)
        .collect();
    let mut hilbert = Vec::with_capacity(traj.states.len());
    let mut running_max = Vec::with_capacity(traj.states.len());
    let mut quantity_abs_max = Vec::new();
    let mut top = f64::NEG_INFINITY;
    for x in &traj.states {
        let xt: Vec<f64> = temporal.iter().map(|&i| x[i]).collect();
        let h = hilbert_norm(&xt)?;
        top = top.max(h);
        hilbert.push(h);
        running_max.push(top);
        if !quantity.is_empty() {
            quantity_abs_max.push(quantity.iter().map(|&i| x[i].abs()).fold(0.0, f64::max));
        }
    }
    Ok(BufferProbe {
        hilbert,
        running_max,
        bound: top,
        quantity_abs_max,
    })
}
