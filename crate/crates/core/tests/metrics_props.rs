mod common;

use nfvom::estimator::Scheme;
use nfvom::linalg::CVector;
use nfvom::metrics::{achievable_rate, beam_gain, evaluate, mrt, nmse, rate_from_gain};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rate_is_monotone(g1 in 0.0f64..10.0, dg in 0.0f64..10.0, snr in 0.01f64..100.0, t_p in 0usize..200, dt in 0usize..200) {
        let t = 400;
        prop_assert!(rate_from_gain(g1 + dg, snr, t_p, t) >= rate_from_gain(g1, snr, t_p, t));
        prop_assert!(rate_from_gain(g1, snr, t_p + dt, t) <= rate_from_gain(g1, snr, t_p, t));
        prop_assert!(rate_from_gain(g1, snr, t_p, t) >= 0.0);
    }

    #[test]
    fn nmse_is_unitarily_invariant(seed in 0u64..100_000, n in 2usize..32) {
        let h = common::cvec(n, seed);
        let h_hat = &h + common::cvec(n, seed + 1) * common::c(0.3);
        let q = common::orthonormal(n, n, seed + 2);
        let a = nmse(&h, &h_hat).unwrap();
        let b = nmse(&(&q * &h), &(&q * &h_hat)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn perfect_csi_dominates_every_estimate(seed in 0u64..100_000, n in 2usize..64, noise in 0.0f64..3.0, t_p in 0usize..400) {
        let h = common::cvec(n, seed);
        let h_hat = &h + common::cvec(n, seed + 1) * common::c(noise);
        let w = mrt(&h_hat).unwrap();
        let g = beam_gain(&h, &w);
        prop_assert!(g <= h.norm_squared() * (1.0 + 1e-12));
        let best = achievable_rate(&h, &mrt(&h).unwrap(), 1.0, 0.1, t_p, 400).unwrap();
        let other = achievable_rate(&h, &w, 1.0, 0.1, t_p, 400).unwrap();
        prop_assert!(other <= best + 1e-12);
        let m = evaluate(Scheme::Omp, &h, &h_hat, 10.0, t_p, 400).unwrap();
        let p = evaluate(Scheme::PerfectCsi, &h, &h, 10.0, t_p, 400).unwrap();
        prop_assert!(m.rate <= p.rate + 1e-12);
        prop_assert!(m.nmse >= 0.0 && m.rate >= 0.0);
        prop_assert_eq!(p.nmse, 0.0);
    }
}

#[test]
fn zero_estimate_scores_zero_rate() {
    let h = common::cvec(8, 3);
    let m = evaluate(Scheme::Omp, &h, &CVector::zeros(8), 10.0, 8, 400).unwrap();
    assert_eq!(m.nmse, 1.0);
    assert_eq!(m.rate, 0.0);
    assert!(evaluate(Scheme::Omp, &h, &h, 10.0, 401, 400).is_err());
}
