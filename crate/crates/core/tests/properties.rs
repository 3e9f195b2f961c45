use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use twostate_core::hilbert::{two_state_inner, HilbertSpace, Operator};
use twostate_core::liouville::{
    closed_form_spin, integrate, weak_moments, BurstEnvironment, BurstSpec, InteractionSpec,
};
use twostate_core::sampling::{random_hermitian, random_ket, random_operator, random_orthonormal_basis};
use twostate_core::spinbath::{self, SpinBathParams};
use twostate_core::twostate::{
    effective_density, prob_pre_only, prob_pre_post, prob_pre_post_density_form, prob_summed_over_finals, ProjectorSet,
    TwoState,
};
use twostate_core::{Modulus, C64};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_generic(r: &mut ChaCha8Rng, dim: usize) -> TwoState {
    let space = HilbertSpace::new(vec![dim]).unwrap();
    let h = random_hermitian(r, space.clone());
    let a = random_ket(r, space.clone());
    let b = random_ket(r, space);
    TwoState::from_conditions(&a, &b, &h, 0.0, 1.0, 0.4).unwrap()
}

fn random_projectors(r: &mut ChaCha8Rng, dim: usize) -> ProjectorSet {
    let basis = random_orthonormal_basis(r, HilbertSpace::new(vec![dim]).unwrap());
    ProjectorSet::from_basis(&basis).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inner_product_is_hermitian_form(seed in any::<u64>(), dim in 2usize..5) {
        let mut r = rng(seed);
        let space = HilbertSpace::new(vec![dim]).unwrap();
        let x = random_operator(&mut r, space.clone());
        let y = random_operator(&mut r, space);
        let xy = two_state_inner(&x, &y).unwrap();
        let yx = two_state_inner(&y, &x).unwrap();
        prop_assert!((xy - yx.conj()).modulus() < 1e-12);
        prop_assert!(two_state_inner(&x, &x).unwrap().re >= 0.0);
    }

    #[test]
    fn probability_rules_agree(seed in any::<u64>(), dim in 2usize..5) {
        let mut r = rng(seed);
        let ts = random_generic(&mut r, dim);
        let ps = random_projectors(&mut r, dim);
        let a = prob_pre_post(&ts, &ps).unwrap();
        let b = prob_pre_post_density_form(&ts, &ps).unwrap();
        let c = prob_pre_only(&ts, &ps).unwrap();
        for dist in [&a, &b, &c] {
            prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(dist.iter().all(|p| *p >= 0.0));
        }
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_spin_invariants(
        seed in any::<u64>(),
        lw_re in -2.0f64..2.0, lw_im in -2.0f64..2.0,
        d_re in -2.0f64..2.0, d_im in -2.0f64..2.0,
        lambda in 0.0f64..0.5, big_t in 0.1f64..3.0,
    ) {
        let mut r = rng(seed);
        let rs0 = TwoState::new(random_operator(&mut r, HilbertSpace::qubit()), 0.0, big_t, 0.0).unwrap();
        let (lw, d) = (C64::new(lw_re, lw_im), C64::new(d_re, d_im));
        for k in 0..=8 {
            let t = big_t * k as f64 / 8.0;
            let s = closed_form_spin(&rs0, lw, d, lambda, big_t, t).unwrap();
            prop_assert!((s.entry(0, 0) - rs0.entry(0, 0)).modulus() < 1e-12);
            prop_assert!((s.entry(1, 1) - rs0.entry(1, 1)).modulus() < 1e-12);
        }
        // with a real weak value the end point recoheres exactly
        let end = closed_form_spin(&rs0, C64::new(lw_re, 0.0), d, lambda, big_t, big_t).unwrap();
        prop_assert!((end.entry(0, 1).modulus() - rs0.entry(0, 1).modulus()).abs() < 1e-12);
        prop_assert!((end.entry(1, 0).modulus() - rs0.entry(1, 0).modulus()).abs() < 1e-12);
    }

    #[test]
    fn spin_bath_closed_form_equals_joint_space(seed in any::<u64>(), n in 1usize..6, frac in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let p = SpinBathParams::random(&mut r, n, 1.3, true);
        let t = frac * p.t_final;
        let exact = spinbath::exact_reduced_two_state(&p, t).unwrap();
        let brute = spinbath::brute_force_reduced(&p, t).unwrap();
        let scale = exact.operator().matrix().max_abs().max(1.0);
        prop_assert!(exact.operator().max_abs_diff(brute.operator()) < 1e-11 * scale);
    }

    #[test]
    fn spin_bath_boundaries_are_generic(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let p = SpinBathParams::random(&mut r, n, 1.0, true);
        for t in [0.0, p.t_final] {
            let sv = spinbath::exact_reduced_two_state(&p, t).unwrap().schmidt_spectrum();
            prop_assert!(sv[1] < 1e-9 * sv[0]);
        }
    }

    #[test]
    fn env_post_distribution_basis_independent(seed in any::<u64>(), n in 1usize..5, frac in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let p = SpinBathParams::random(&mut r, n, 1.0, false);
        let t = frac * p.t_final;
        let family = spinbath::env_postselected_two_states(&p, t).unwrap();
        let ps = random_projectors(&mut r, 2);
        let reference = prob_summed_over_finals(&family, &ps).unwrap();
        // ϱ(s2) = ⟨s2|↑⟩ ϱ(↑) + ⟨s2|↓⟩ ϱ(↓)
        let basis = random_orthonormal_basis(&mut r, HilbertSpace::qubit());
        let rotated: Vec<TwoState> = basis
            .iter()
            .filter_map(|s2| {
                let [up, down] = [s2.amps()[0].conj(), s2.amps()[1].conj()];
                let op = family[0].operator().scale(up).add(&family[1].operator().scale(down)).unwrap();
                TwoState::new(op, 0.0, p.t_final, t).ok()
            })
            .collect();
        let other = prob_summed_over_finals(&rotated, &ps).unwrap();
        for (x, y) in reference.iter().zip(&other) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        let joint = spinbath::brute_force_prob_env_post(&p, t, &ps).unwrap();
        for (x, y) in reference.iter().zip(&joint) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn effective_density_pure_at_post_selection(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let p = SpinBathParams::random(&mut r, n, 1.0, false);
        let family = spinbath::env_postselected_two_states(&p, p.t_final).unwrap();
        let ps = random_projectors(&mut r, 2);
        let ed = effective_density(&family, &ps).unwrap();
        prop_assert!(ed.a_independence() < 1e-10);
    }

    #[test]
    fn product_burst_has_no_cross_moments(seed in any::<u64>(), n in 2usize..8) {
        let mut r = rng(seed);
        let q = HilbertSpace::qubit();
        let spec = InteractionSpec::burst(BurstSpec {
            lambda: 0.01,
            tau: 1.0,
            sigma: Operator::sigma_z(),
            l_ops: (0..n).map(|_| random_hermitian(&mut r, q.clone())).collect(),
            env: BurstEnvironment::Product {
                pre: (0..n).map(|_| random_ket(&mut r, q.clone())).collect(),
                post: (0..n).map(|_| random_ket(&mut r, q.clone())).collect(),
            },
        }).unwrap();
        let m = weak_moments(&spec).unwrap();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    prop_assert!(m.delta[(i, j)].modulus() < 1e-13 * (1.0 + m.l_w[i].modulus() * m.l_w[j].modulus()));
                }
            }
        }
    }
}

#[test]
fn integrator_keeps_diagonals() {
    let mut r = rng(42);
    let q = HilbertSpace::qubit();
    let e1 = random_ket(&mut r, q.clone());
    let e2 = random_ket(&mut r, q.clone());
    let spec = InteractionSpec::continuous(twostate_core::liouville::ContinuousSpec {
        lambda: 0.1,
        t_final: 1.0,
        q_ops: vec![Operator::sigma_z()],
        l_ops: vec![Operator::sigma_z()],
        env: twostate_core::liouville::FreeEnvironment::static_conditions(e1, e2).unwrap(),
        h_s: None,
    })
    .unwrap();
    let rs0 = TwoState::new(random_operator(&mut r, q), 0.0, 1.0, 0.0).unwrap();
    let traj = integrate(&rs0, &spec, 500).unwrap();
    for s in &traj.states {
        assert!((s.entry(0, 0) - rs0.entry(0, 0)).modulus() < 1e-12);
        assert!((s.entry(1, 1) - rs0.entry(1, 1)).modulus() < 1e-12);
    }
}
