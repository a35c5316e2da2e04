mod common;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use mmps::format::{model_to_json, parse_model};
use mmps::growth::solve_all;
use mmps::linearization::{linearize_normalized, piecewise_step_check};
use mmps::model::{Kind, MmpsSystem};
use mmps::normalization::normalize;
use mmps::simulator::{simulate, step};
use mmps::tropical::ExtReal;

/// Relabels the states: new state `i` is old state `perm[i]`.
fn permute_states(sys: &MmpsSystem, perm: &[usize]) -> MmpsSystem {
    let n = sys.n();
    let mut out = sys.clone();
    for (i, &old) in perm.iter().enumerate() {
        for j in 0..sys.m() {
            out.a.set(i, j, sys.a.get(old, j));
        }
        out.kind_x[i] = sys.kind_x[old];
        for l in 0..sys.p() {
            out.c[(l, i)] = sys.c[(l, old)];
            out.d[(l, i)] = sys.d[(l, old)];
        }
    }
    assert_eq!(out.n(), n);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn growth_solutions_are_fixed_points(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (sys, _) = common::random_solvable(&mut rng, n, true);
        let s = sys.shift();
        for sol in solve_all(&sys, false).unwrap().rates.iter().flat_map(|g| &g.solutions) {
            let next: Vec<f64> = sol.x_e.iter().zip(s.iter()).map(|(x, si)| x + sol.lambda * si).collect();
            let rhs = sys.evaluate_rhs(&sol.x_e, &next).unwrap();
            for (a, b) in rhs.iter().zip(&next) {
                prop_assert!((a - b).abs() <= 1e-7 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn explicit_step_is_the_right_hand_side(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (sys, cert) = common::random_solvable(&mut rng, n, false);
        let prev: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let junk: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
        prop_assert_eq!(step(&sys, &cert, &prev).unwrap(), sys.evaluate_rhs(&prev, &junk).unwrap());
    }

    #[test]
    fn simulation_is_shift_equivariant(seed in any::<u64>(), n in 1usize..=6, h in -1e3f64..1e3) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (sys, cert) = common::random_solvable(&mut rng, n, true);
        let s = sys.shift();
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let moved: Vec<f64> = x0.iter().zip(s.iter()).map(|(x, si)| x + h * si).collect();
        let a = simulate(&sys, &cert, &x0, 20).unwrap();
        let b = simulate(&sys, &cert, &moved, 20).unwrap();
        prop_assert!(a.max_residual() <= 1e-9 * (1.0 + a.states.last().unwrap().iter().fold(0.0f64, |m, v| m.max(v.abs()))));
        for (xa, xb) in a.states.iter().zip(&b.states) {
            for i in 0..n {
                let scale = 1.0 + xa[i].abs() + h.abs();
                prop_assert!((xb[i] - xa[i] - h * s[i]).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn growth_rates_ignore_state_order(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (sys, _) = common::random_solvable(&mut rng, n, true);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let relabeled = permute_states(&sys, &perm);
        let a = solve_all(&sys, false).unwrap().lambdas();
        let b = solve_all(&relabeled, false).unwrap().lambdas();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-6);
        }
    }

    #[test]
    fn linear_map_agrees_near_the_fixed_point(seed in any::<u64>(), n in 1usize..=5) {
        let mut rng = StdRng::seed_from_u64(seed);
        let (sys, _) = common::random_solvable(&mut rng, n, true);
        let growth = solve_all(&sys, false).unwrap();
        let Some(group) = growth.rates.first() else { return Ok(()); };
        let ns = normalize(&sys, &group.solutions[0]).unwrap();
        let lsys = linearize_normalized(&ns).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0) * 1e-3).collect();
            if lsys.region.max_violation(&x) < -1e-9 {
                prop_assert!(piecewise_step_check(&ns, &lsys, &x, 1e-9).unwrap() <= 1e-8);
            }
        }
    }

    #[test]
    fn model_files_round_trip(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut sys = common::random_system(&mut rng, n);
        for l in 0..sys.p() {
            for i in 0..n {
                sys.c[(l, i)] += rng.gen_range(-1.0..1.0) * 1e-7;
            }
        }
        let back = parse_model(&model_to_json(&sys)).unwrap();
        prop_assert_eq!(&back, &sys);
        let eps = sys.a.entries().iter().filter(|v| **v == ExtReal::Eps).count();
        prop_assert_eq!(back.a.entries().iter().filter(|v| **v == ExtReal::Eps).count(), eps);
    }
}

#[test]
fn generated_systems_have_a_temporal_state() {
    let mut rng = StdRng::seed_from_u64(1);
    for n in 1..=6 {
        let sys = common::random_system(&mut rng, n);
        assert!(sys.kind_x.contains(&Kind::Temporal));
        assert!(sys.check_time_invariance(1e-12).holds);
    }
}
