//! Shared generators for the integration tests.
#![allow(dead_code)]

use mmps::model::{Kind, MmpsSystem};
use mmps::solvability::{analyze, SolvabilityCertificate};
use mmps::tropical::{ExtReal, TropMatrix};
use nalgebra::DMatrix;
use rand::Rng;

fn kinds<R: Rng>(rng: &mut R, len: usize, must_have: &[Kind]) -> Vec<Kind> {
    loop {
        let k: Vec<Kind> = (0..len)
            .map(|_| if rng.gen_bool(0.6) { Kind::Temporal } else { Kind::Quantity })
            .collect();
        if must_have.iter().all(|m| k.contains(m)) {
            return k;
        }
    }
}

fn distinct(k: &[Kind]) -> Vec<Kind> {
    let mut out = Vec::new();
    for v in k {
        if !out.contains(v) {
            out.push(*v);
        }
    }
    out
}

/// A random system that passes validation and has a solvability certificate.
pub fn random_solvable<R: Rng>(rng: &mut R, n: usize, implicit: bool) -> (MmpsSystem, SolvabilityCertificate) {
    loop {
        let sys = random_system_with(rng, n, implicit);
        if !sys.validate().is_valid() {
            continue;
        }
        if let Some(cert) = analyze(&sys).certificate() {
            let cert = cert.clone();
            return (sys, cert);
        }
    }
}

/// Sparse tropical matrix linking rows to kind-compatible columns, at least one
/// finite entry per row.
fn linked<R: Rng>(rng: &mut R, rows: &[Kind], cols: &[Kind], fill: ExtReal) -> TropMatrix {
    let mut m = TropMatrix::filled(rows.len(), cols.len(), fill);
    for (i, ki) in rows.iter().enumerate() {
        let ok: Vec<usize> = (0..cols.len()).filter(|&j| cols[j] == *ki).collect();
        let forced = ok[rng.gen_range(0..ok.len())];
        for &j in &ok {
            if j == forced || rng.gen_bool(0.35) {
                m.set(i, j, ExtReal::Fin((rng.gen_range(-20..=20) as f64) / 4.0));
            }
        }
    }
    m
}

/// A valid, time-invariant system with `n` states; it may or may not be solvable.
pub fn random_system<R: Rng>(rng: &mut R, n: usize) -> MmpsSystem {
    random_system_with(rng, n, true)
}

/// As [`random_system`]; without `implicit` the matrix `D` is zero.
pub fn random_system_with<R: Rng>(rng: &mut R, n: usize, implicit: bool) -> MmpsSystem {
    let kind_x = kinds(rng, n, &[Kind::Temporal]);
    let m = rng.gen_range(1..=n + 1);
    let kind_y = kinds(rng, m.max(distinct(&kind_x).len()), &distinct(&kind_x));
    let p = rng.gen_range(1..=n + 1);
    let kind_z = kinds(rng, p.max(distinct(&kind_y).len()), &distinct(&kind_y));
    let a = linked(rng, &kind_x, &kind_y, ExtReal::Eps);
    let b = linked(rng, &kind_y, &kind_z, ExtReal::Top);
    let p = kind_z.len();
    let coef = |rng: &mut R, prob: f64| {
        if rng.gen_bool(prob) {
            (rng.gen_range(-4..=4) as f64) / 2.0
        } else {
            0.0
        }
    };
    let mut c = DMatrix::from_fn(p, n, |_, _| coef(rng, 0.4));
    let d = DMatrix::from_fn(p, n, |_, _| if implicit { coef(rng, 0.2) } else { 0.0 });
    let temporal: Vec<usize> = (0..n).filter(|&i| kind_x[i] == Kind::Temporal).collect();
    for l in 0..p {
        let target = kind_z[l].indicator();
        let sum: f64 = temporal.iter().map(|&i| c[(l, i)] + d[(l, i)]).sum();
        let t = temporal[rng.gen_range(0..temporal.len())];
        c[(l, t)] += target - sum;
    }
    MmpsSystem::new(a, b, c, d, kind_x, kind_y, kind_z).expect("consistent shapes")
}

/// `x_i(k) = x_i(k−1) + offsets[i]`, all temporal.
pub fn explicit_offsets(offsets: &[f64]) -> MmpsSystem {
    let n = offsets.len();
    let mut a = TropMatrix::filled(n, n, ExtReal::Eps);
    let mut b = TropMatrix::filled(n, n, ExtReal::Top);
    for i in 0..n {
        a.set(i, i, ExtReal::Fin(offsets[i]));
        b.set(i, i, ExtReal::Fin(0.0));
    }
    let t = vec![Kind::Temporal; n];
    MmpsSystem::new(a, b, DMatrix::identity(n, n), DMatrix::zeros(n, n), t.clone(), t.clone(), t)
        .expect("consistent shapes")
}

/// `x1(k) = x1(k−1) + 1`, `x2(k) = 2·x2(k−1) − x1(k−1) + 1`: the gap doubles.
pub fn diverging_gap() -> MmpsSystem {
    let mut sys = explicit_offsets(&[1.0, 1.0]);
    sys.c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 2.0]);
    sys
}

/// `x(k) = x(k)`: the state reads itself within the cycle.
pub fn self_loop() -> MmpsSystem {
    let mut sys = explicit_offsets(&[0.0]);
    sys.c[(0, 0)] = 0.0;
    sys.d[(0, 0)] = 1.0;
    sys
}
