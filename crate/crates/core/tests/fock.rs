use proptest::prelude::*;
use shgcat_core::fock::{
    blocked_dimension, choose_cutoffs, coherent_amplitudes, embed_product_state, poisson_cutoff, sector_basis,
    BlockedState, HarmonicOrder, ModeAmplitudes, SectorBasis,
};
use shgcat_core::observables::reduce_mode_a;
use shgcat_core::{Error, C64};

#[test]
fn cutoffs_for_reference_scenario() {
    let c = choose_cutoffs(10.0, 0.0, 1e-10, HarmonicOrder::Second).unwrap();
    assert_eq!((c.n_max_a, c.n_max_b, c.n_max), (36, 0, 36));
    let c = choose_cutoffs(10.0, 1.0, 1e-10, HarmonicOrder::Second).unwrap();
    assert_eq!((c.n_max_a, c.n_max_b, c.n_max), (36, 13, 62));
    let c = choose_cutoffs(10.0, 4.0, 1e-10, HarmonicOrder::Third).unwrap();
    assert_eq!((c.n_max_a, c.n_max_b, c.n_max), (36, 23, 105));
    assert_eq!(poisson_cutoff(10.0, 1e-6), 28);
    assert_eq!(poisson_cutoff(0.0, 1e-10), 0);
}

#[test]
fn cutoffs_reject_bad_epsilon() {
    for eps in [0.0, 1.0, -1e-3, f64::NAN] {
        assert!(matches!(
            choose_cutoffs(10.0, 0.0, eps, HarmonicOrder::Second),
            Err(Error::InvalidEpsilon(_))
        ));
    }
}

#[test]
fn sector_counts_add_up() {
    for order in [HarmonicOrder::Second, HarmonicOrder::Third] {
        let k = order.k();
        for n_max in [0, 1, 5, 36, 62] {
            let from_sectors: usize = (0..=n_max).map(|n| SectorBasis::new(n, order).len()).sum();
            let from_pairs = (0..=n_max).map(|na| (n_max - na) / k + 1).sum::<usize>();
            assert_eq!(from_sectors, from_pairs);
            assert_eq!(blocked_dimension(n_max, order), from_sectors);
            assert_eq!(BlockedState::zeros(order, n_max).dimension(), from_sectors);
        }
    }
    assert!(sector_basis(4, 4).is_err());
    let pairs = sector_basis(7, 3).unwrap();
    assert_eq!(pairs.pairs(), &[(7, 0), (4, 1), (1, 2)]);
}

#[test]
fn truncated_coherent_norm_matches_cutoff_budget() {
    for (mean, eps) in [(10.0, 1e-10), (1.0, 5e-11), (4.0, 1e-8), (25.0, 1e-12)] {
        let n = poisson_cutoff(mean, eps);
        let norm = coherent_amplitudes(C64::new(mean.sqrt(), 0.0), n).norm_sqr();
        assert!(1.0 - norm < eps);
        let shorter = coherent_amplitudes(C64::new(mean.sqrt(), 0.0), n - 1).norm_sqr();
        assert!(1.0 - shorter >= eps);
    }
}

#[test]
fn embed_then_reduce_round_trip() {
    let a = coherent_amplitudes(C64::new(2.0, -1.1), 30);
    let b = coherent_amplitudes(C64::new(0.7, 0.4), 12);
    for order in [HarmonicOrder::Second, HarmonicOrder::Third] {
        let state = embed_product_state(&a, &b, order);
        let rho = reduce_mode_a(&state);
        let scale = b.norm_sqr();
        for n in 0..=a.n_max() {
            for m in 0..=a.n_max() {
                let want = a.values[n] * a.values[m].conj() * scale;
                assert!((rho.get(n, m) - want).norm() <= 1e-12);
            }
        }
        for (n, m) in [(a.n_max() + 1, 0), (a.n_max() + 4, 3)] {
            assert_eq!(rho.get(n, m), C64::new(0.0, 0.0));
        }
        assert!((rho.purity() - scale * scale).abs() <= 1e-12);
    }
}

#[test]
fn blocked_amplitudes_follow_product_structure() {
    let a = ModeAmplitudes::fock(3, 5);
    let b = ModeAmplitudes::fock(2, 3);
    let state = embed_product_state(&a, &b, HarmonicOrder::Second);
    assert_eq!(state.n_max(), 5 + 2 * 3);
    assert_eq!(state.amplitude(3, 2), C64::new(1.0, 0.0));
    assert_eq!(state.entries().filter(|(_, v)| v.norm() > 0.0).count(), 1);
}

fn recurrence_error(alpha: C64, n_max: usize) -> f64 {
    let c = coherent_amplitudes(alpha, n_max).values;
    let mut worst = 0.0f64;
    for n in 1..=n_max {
        let want = c[n - 1] * alpha / (n as f64).sqrt();
        let scale = c[n].norm().max(want.norm());
        if scale > 1e-280 {
            worst = worst.max((c[n] - want).norm() / scale);
        }
    }
    worst
}

proptest! {
    #[test]
    fn coherent_recurrence_holds(re in -6.0f64..6.0, im in -6.0f64..6.0, n_max in 0usize..80) {
        prop_assert!(recurrence_error(C64::new(re, im), n_max) <= 1e-14);
    }

    #[test]
    fn coherent_vacuum_amplitude_is_exact(re in -5.0f64..5.0, im in -5.0f64..5.0) {
        let alpha = C64::new(re, im);
        let c = coherent_amplitudes(alpha, 120).values;
        let want = (-0.5 * alpha.norm_sqr()).exp();
        prop_assert!((c[0] - want).norm() <= 1e-13 * want);
        let norm: f64 = c.iter().map(|x| x.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn cutoff_grows_as_epsilon_shrinks(mean in 0.01f64..40.0, e1 in -12.0f64..-2.0, e2 in -12.0f64..-2.0) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(poisson_cutoff(mean, 10f64.powf(lo)) >= poisson_cutoff(mean, 10f64.powf(hi)));
    }

    #[test]
    fn cutoff_grows_with_mean(m1 in 0.01f64..40.0, m2 in 0.01f64..40.0) {
        let (lo, hi) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
        prop_assert!(poisson_cutoff(lo, 1e-10) <= poisson_cutoff(hi, 1e-10));
    }

    #[test]
    fn product_state_reduces_to_pure_state(re in -3.0f64..3.0, im in -3.0f64..3.0, b in 0.0f64..1.5) {
        let alpha = C64::new(re, im);
        let cut = choose_cutoffs(alpha.norm_sqr(), b * b, 1e-10, HarmonicOrder::Second).unwrap();
        let state = embed_product_state(
            &coherent_amplitudes(alpha, cut.n_max_a),
            &coherent_amplitudes(C64::new(b, 0.0), cut.n_max_b),
            HarmonicOrder::Second,
        );
        prop_assert!(state.norm_deficit >= 0.0 && state.norm_deficit < 1e-10);
        let rho = reduce_mode_a(&state);
        prop_assert!(rho.purity() >= 1.0 - 10.0 * 1e-10);
    }
}
