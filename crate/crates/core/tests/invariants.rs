// Copyright 2026 The qdiv Authors
// SPDX-License-Identifier: Apache-2.0

//! Cross-module properties of trajectories, propagators and backflow.

use proptest::prelude::*;
use qdiv_core::certify::{self, AuInstance};
use qdiv_core::infoflow::{self, HuntConfig, StatePair};
use qdiv_core::linalg::{kron, trace_norm};
use qdiv_core::models::{CompositionModel, Dynamics, ManiscalcoModel, MixingProfile, PauliModel, RateFn};
use qdiv_core::propagation::{self, ClassifyTolerances, TimeGrid, Verdict};
use qdiv_core::superop;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn eternal() -> PauliModel {
    PauliModel::new(RateFn::Constant(1.0), RateFn::Constant(1.0), RateFn::neg_tanh())
}

fn commutator_defect(m: &ManiscalcoModel, times: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for &s in times {
        for &t in times {
            let (a, b) = (m.map(s).unwrap(), m.map(t).unwrap());
            worst = worst.max(a.compose(&b).max_diff(&b.compose(&a)));
        }
    }
    worst
}

#[test]
fn maniscalco_commutes_iff_rates_proportional() {
    let times: Vec<f64> = (0..12).map(|k| 0.25 * k as f64).collect();
    let proportional = ManiscalcoModel {
        omega: RateFn::Constant(1.0),
        gamma_plus: RateFn::Tanh { amp: 1.0 },
        gamma_minus: RateFn::Tanh { amp: 0.4 },
        gamma3: RateFn::Constant(0.3),
    };
    assert!(commutator_defect(&proportional, &times) < 1e-8);

    let skewed = ManiscalcoModel {
        omega: RateFn::Constant(1.0),
        gamma_plus: RateFn::Constant(1.0),
        gamma_minus: RateFn::Tanh { amp: 1.0 },
        gamma3: RateFn::Constant(0.3),
    };
    assert!(commutator_defect(&skewed, &times) > 1e-4);
}

#[test]
fn kernel_ok_propagators_are_tp_on_their_domain() {
    let model = PauliModel::new(RateFn::Constant(0.5), RateFn::BlowUp { amp: 1.0, at: 1.0 }, RateFn::Constant(0.2));
    let grid = TimeGrid::uniform(2.0, 100).unwrap();
    let traj = propagation::assemble(&model, &grid).unwrap();
    for (s, t) in [(10, 40), (49, 50), (50, 51), (50, 100), (75, 99)] {
        let p = propagation::propagator(&traj, s, t, qdiv_core::tol::RANK).unwrap();
        assert!(p.kernel_ok);
        assert!(p.tp_defect_on_domain() < 1e-8, "({s}, {t}): {}", p.tp_defect_on_domain());
    }
}

#[test]
fn cp_divisible_scenarios_show_no_backflow() {
    let grid = TimeGrid::uniform(3.0, 150).unwrap();
    let cfg = HuntConfig { n_pairs: 200, ancilla_dim: 2, biased: true, seed: 3, ..HuntConfig::default() };
    let models: Vec<Box<dyn Dynamics>> = vec![
        Box::new(PauliModel::new(RateFn::Constant(0.3), RateFn::Tanh { amp: 1.0 }, RateFn::Sin { amp: 0.0, freq: 1.0 })),
        Box::new(ManiscalcoModel::constant(1.0, 0.7, 0.2, 0.1)),
        Box::new(CompositionModel::new(MixingProfile::Smooth { t_star: 1.5 })),
    ];
    for m in &models {
        let traj = propagation::assemble(m.as_ref(), &grid).unwrap();
        let report = propagation::classify(&traj, &ClassifyTolerances::default());
        assert_eq!(report.verdict, Verdict::CpDivisible);
        let hunt = infoflow::hunt_backflow(&traj, &cfg).unwrap();
        assert!(hunt.max_sigma <= 1e-7, "max sigma {}", hunt.max_sigma);
        let profile = propagation::image_profile(&traj, qdiv_core::tol::RANK).unwrap();
        assert!(profile.dims().iter().all(|d| [1, 2, 4].contains(d)));
    }
}

#[test]
fn cp_violation_is_seen_with_an_ancilla() {
    let grid = TimeGrid::uniform(2.0, 200).unwrap();
    let traj = propagation::integrate(&eternal(), &grid).unwrap();
    let report = propagation::classify(&traj, &ClassifyTolerances::default());
    let bad = report.first_non_cp().expect("non-CP interval");

    let plain = infoflow::hunt_backflow(&traj, &HuntConfig { n_pairs: 200, ..HuntConfig::default() }).unwrap();
    assert!(plain.max_sigma <= 1e-7);

    let cfg = HuntConfig { n_pairs: 1000, ancilla_dim: 2, biased: true, ..HuntConfig::default() };
    let hunt = infoflow::hunt_backflow(&traj, &cfg).unwrap();
    assert!(hunt.backflow_found(), "max sigma {}", hunt.max_sigma);
    // Every interval of this scenario is non-CP, so "near" is any grid time
    // at or after the first violating one.
    assert!(hunt.argmax.unwrap().t >= bad.s);
}

#[test]
fn au_is_feasible_for_channel_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let s = superop::random_channel(&mut rng);
        let (a, b) = (infoflow::random_density(2, &mut rng), infoflow::random_density(2, &mut rng));
        let inst = AuInstance::new(a, b, s.apply(&a), s.apply(&b)).unwrap();
        let v = certify::alberti_uhlmann(&inst);
        assert!(v.feasible && v.margin >= -1e-9, "margin {}", v.margin);
        assert_eq!(certify::alberti_uhlmann(&inst.swapped()).feasible, v.feasible);
    }
}

#[test]
fn random_subspaces_never_admit_cptp_projectors() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let sub = certify::random_subspace(&mut rng).unwrap();
        let report = certify::projector_report(&sub);
        assert!(!report.cptp.cptp_feasible);
        if report.ptp.ptp_feasible {
            let c = report.ptp.checks.unwrap();
            assert!(c.idempotent_defect < 1e-10 && c.tp && c.positive && !c.cp);
        }
    }
}

fn density(raw: &[f64], n: usize) -> qdiv_core::ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(raw.iter().map(|x| x.to_bits()).fold(0, |a, b| a ^ b.rotate_left(7)));
    infoflow::random_density(n, &mut rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn post_processing_never_increases_distinguishability(
        seed in any::<u64>(), p1 in 0.05f64..0.95, g3 in -1.0f64..1.0,
    ) {
        let grid = TimeGrid::uniform(1.0, 20).unwrap();
        let model = PauliModel::constant(0.4, 0.2, g3.abs());
        let traj = propagation::analytic(&model, &grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = superop::random_channel(&mut rng);
        let post = traj.post_compose(&s);
        let pair = infoflow::sample_pair(seed, 0, 2).with_p1(p1);
        let before = infoflow::norm_curve(&traj, &pair);
        let after = infoflow::norm_curve(&post, &pair);
        for (a, b) in after.iter().zip(&before) {
            prop_assert!(*a <= *b + 1e-9);
        }
    }

    #[test]
    fn swapping_the_pair_keeps_the_norm(seed in any::<u64>(), p1 in 0.0f64..1.0, k in 0usize..21) {
        let grid = TimeGrid::uniform(2.0, 20).unwrap();
        let traj = propagation::analytic(&eternal(), &grid).unwrap();
        let pair = infoflow::sample_pair(seed, 1, 1).with_p1(p1);
        let t = grid.points()[k];
        let a = infoflow::biased_norm(&traj, &pair, t).unwrap();
        let b = infoflow::biased_norm(&traj, &pair.swapped(), t).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn fixed_ancilla_state_keeps_the_evidence(raw in prop::collection::vec(-1.0f64..1.0, 3), p1 in 0.1f64..0.9) {
        let grid = TimeGrid::uniform(3.0, 60).unwrap();
        let model = PauliModel::new(RateFn::Constant(0.2), RateFn::Constant(0.2), RateFn::Sin { amp: -1.0, freq: 1.0 });
        let traj = propagation::analytic(&model, &grid).unwrap();
        let (r1, r2, tau) = (density(&raw, 2), density(&raw[1..], 2), density(&raw[2..], 2));
        let small = StatePair::new(r1, r2, p1, 1).unwrap();
        let big = StatePair::new(kron(&tau, &r1).unwrap(), kron(&tau, &r2).unwrap(), p1, 2).unwrap();
        let ranks = traj.ranks(qdiv_core::tol::RANK);
        let s1 = infoflow::derivative_on_grid(grid.points(), &infoflow::norm_curve(&traj, &small), &ranks);
        let s2 = infoflow::derivative_on_grid(grid.points(), &infoflow::norm_curve(&traj, &big), &ranks);
        for (a, b) in s1.iter().zip(&s2) {
            if *a > 1e-7 {
                prop_assert!(*b >= *a - 1e-9);
            }
        }
    }

    #[test]
    fn trace_norm_is_subadditive_on_images(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = superop::random_channel(&mut rng);
        let (a, b) = (infoflow::random_density(2, &mut rng), infoflow::random_density(2, &mut rng));
        let d = a - b;
        prop_assert!(trace_norm(&s.apply(&d)).unwrap() <= trace_norm(&d).unwrap() + 1e-9);
    }
}
