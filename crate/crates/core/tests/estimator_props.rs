mod common;

use nfvom::estimator::{
    build_polar_codebook, estimate_joint, estimate_omp, estimate_vom_only, first_order_residual, make_pilots,
    observe_pilots, CodebookConfig, PilotKind, RidgeConfig,
};
use nfvom::linalg::{hcat, CMatrix, CVector};
use nfvom::metrics::nmse;
use proptest::prelude::*;

fn small_codebook(n: usize) -> nfvom::estimator::PolarCodebook {
    build_polar_codebook(
        &common::ula(n),
        &CodebookConfig {
            g_angles: 32,
            g_rings: 3,
            r_min: 4.0,
            r_max: 64.0,
        },
    )
    .unwrap()
}

#[test]
fn codebook_gram_matches_pairwise_products() {
    let g = common::ula(64);
    let cb = build_polar_codebook(&g, &CodebookConfig::default()).unwrap();
    assert_eq!(cb.atoms.ncols(), 128 * 8);
    let gram = cb.atoms.ad_mul(&cb.atoms);
    let mut coherence: f64 = 0.0;
    for i in (0..cb.atoms.ncols()).step_by(7) {
        for j in (0..cb.atoms.ncols()).step_by(5) {
            let direct: num_complex::Complex64 =
                (0..64).map(|n| cb.atoms[(n, i)].conj() * cb.atoms[(n, j)]).sum();
            assert!((gram[(i, j)] - direct).norm() < 1e-12);
        }
    }
    for i in 0..gram.nrows() {
        for j in 0..i {
            coherence = coherence.max(gram[(i, j)].norm());
        }
    }
    assert!(coherence < 1.0, "{coherence}");
}

#[test]
fn single_atom_omp_is_exact() {
    let cb = small_codebook(32);
    let z = make_pilots(32, 12, 1.0, PilotKind::Gaussian, 3).unwrap();
    let h = cb.atoms.column(40).into_owned() * num_complex::Complex64::new(0.02, -0.01);
    let y = observe_pilots(&z, &h, 0.0, 0).unwrap();
    let e = estimate_omp(&y, &z, &cb, 5).unwrap();
    assert_eq!(e.support, vec![40]);
    assert!(nmse(&h, &e.h_hat).unwrap() < 1e-10);
}

#[test]
fn three_planted_atoms_match_exhaustive_support_search() {
    let g = common::ula(32);
    let full = build_polar_codebook(
        &g,
        &CodebookConfig {
            g_angles: 10,
            g_rings: 3,
            r_min: 4.0,
            r_max: 64.0,
        },
    )
    .unwrap();
    assert_eq!(full.atoms.ncols(), 30);
    let z = make_pilots(32, 32, 1.0, PilotKind::Gaussian, 9).unwrap();
    let planted = [2usize, 14, 27];
    let coef = [0.9, -0.7, 0.5];
    let mut h = CVector::zeros(32);
    for (p, c) in planted.iter().zip(coef) {
        h += full.atoms.column(*p) * num_complex::Complex64::new(c, 0.3 * c);
    }
    let y = observe_pilots(&z, &h, 0.0, 0).unwrap();
    let measured = z.z.ad_mul(&full.atoms);
    let mut best = (f64::INFINITY, [0usize; 3]);
    for a in 0..30 {
        for b in a + 1..30 {
            for c in b + 1..30 {
                let sub = measured.select_columns([a, b, c].iter());
                let x = nfvom::linalg::lstsq(&sub, &y).unwrap();
                let r = (&sub * x - &y).norm();
                if r < best.0 {
                    best = (r, [a, b, c]);
                }
            }
        }
    }
    assert_eq!(best.1, planted);
    let e = estimate_omp(&y, &z, &full, 3).unwrap();
    let mut s = e.support.clone();
    s.sort();
    assert_eq!(s, planted.to_vec());
    assert!(nmse(&h, &e.h_hat).unwrap() < 1e-10);
}

#[test]
fn vom_only_first_pick_follows_normalized_correlation() {
    let g = common::ula(32);
    let cb = small_codebook(32);
    let a = g.steering_matrix(&common::random_points(3, 23)).unwrap();
    let z = make_pilots(32, 16, 1.0, PilotKind::Gaussian, 7).unwrap();
    let y = common::cvec(16, 8);
    let e = estimate_vom_only(&y, &z, &a, &cb, 1, &RidgeConfig::NoiseAware, 1e-3).unwrap();
    // residual after removing the static measurement span, via dense least squares
    let sa = z.z.ad_mul(&a);
    let r = &y - &sa * nfvom::linalg::lstsq(&sa, &y).unwrap();
    let m = z.z.ad_mul(&cb.atoms);
    let score = |k: usize| m.column(k).dotc(&r).norm() / m.column(k).norm();
    let best = (0..m.ncols()).max_by(|&i, &j| score(i).total_cmp(&score(j)).then(j.cmp(&i))).unwrap();
    assert_eq!(e.support, vec![best]);
}

#[test]
fn planted_dynamic_atom_is_recovered() {
    let g = common::ula(32);
    let cb = small_codebook(32);
    let a = g.steering_matrix(&common::random_points(3, 21)).unwrap();
    let z = make_pilots(32, 32, 1.0, PilotKind::Orthogonal, 4).unwrap();
    let alpha = common::cvec(3, 1);
    let fixed = RidgeConfig::Fixed { mu_s: 0.0, mu_d: 0.0 };
    let sa = z.z.ad_mul(&a);
    let (q, _) = nfvom::linalg::thin_qr_dropping(&sa, 1e-10);
    let m = z.z.ad_mul(&cb.atoms);
    // an atom almost inside the static span cannot be told apart by any residual test
    let identifiable: Vec<usize> = (0..m.ncols())
        .filter(|&k| {
            let v = m.column(k).into_owned();
            (&v - &q * q.ad_mul(&v)).norm() > 0.9 * v.norm()
        })
        .collect();
    assert!(identifiable.len() * 10 >= m.ncols() * 8, "{}", identifiable.len());
    for k in identifiable {
        let h = &a * &alpha + cb.atoms.column(k) * num_complex::Complex64::new(0.01, 0.02);
        let y = observe_pilots(&z, &h, 0.0, 0).unwrap();
        let e = estimate_vom_only(&y, &z, &a, &cb, 1, &fixed, 0.0).unwrap();
        assert_eq!(e.support, vec![k]);
        assert!(nmse(&h, &e.h_hat).unwrap() < 1e-10);
    }
}

#[test]
fn static_channel_gives_small_dynamic_coefficients() {
    let g = common::ula(32);
    let cb = small_codebook(32);
    let pts = common::random_points(3, 22);
    let a = g.steering_matrix(&pts).unwrap();
    let z = make_pilots(32, 24, 1.0, PilotKind::Gaussian, 5).unwrap();
    let h = &a * common::cvec(3, 2);
    let sigma2 = h.norm_squared() / 32.0 / 100.0;
    let y = observe_pilots(&z, &h, sigma2, 6).unwrap();
    let e = estimate_vom_only(&y, &z, &a, &cb, 3, &RidgeConfig::NoiseAware, sigma2).unwrap();
    // least-squares noise level on a unit-norm atom measured with unit-power pilots
    let floor = (sigma2 * 32.0 / 24.0).sqrt();
    for x in e.xi.iter() {
        assert!(x.norm() < 10.0 * floor, "{} vs {floor}", x.norm());
    }
}

fn rel(a: &CVector, b: &CVector) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn joint_ridge_matches_independent_oracles() {
    for seed in 0..100 {
        let inst = common::ridge_instance(seed);
        for cfg in [RidgeConfig::TraceScaled { factor: 1e-2 }, RidgeConfig::NoiseAware] {
            let e = estimate_joint(&inst.y, &inst.z, &inst.a, &inst.u, &cfg, inst.sigma2).unwrap();
            let phi = inst.z.z.ad_mul(&hcat(&inst.a, &inst.u));
            let reg = common::penalty_vector(&e);
            let sol = common::stacked_solution(&e);
            let dense = common::ridge_dense(&phi, &inst.y, &reg);
            let gd = common::ridge_gradient_descent(&phi, &inst.y, &reg, 100_000);
            assert!(rel(&sol, &dense) < 1e-8, "seed {seed}: dense {}", rel(&sol, &dense));
            assert!(rel(&sol, &gd) < 1e-8, "seed {seed}: gd {}", rel(&sol, &gd));
            assert!(e.foc_residual < 1e-9);
        }
    }
}

#[test]
fn interpolation_case_is_exact() {
    let g = common::ula(16);
    let a = g.steering_matrix(&common::random_points(2, 5)).unwrap();
    let u = common::orthonormal(16, 1, 5);
    let z = make_pilots(16, 3, 1.0, PilotKind::Gaussian, 5).unwrap();
    let h = &a * common::cvec(2, 6) + &u * common::c(0.3);
    let y = observe_pilots(&z, &h, 0.0, 0).unwrap();
    let e = estimate_joint(&y, &z, &a, &u, &RidgeConfig::Fixed { mu_s: 0.0, mu_d: 0.0 }, 0.0).unwrap();
    assert!(nmse(&h, &e.h_hat).unwrap() < 1e-12);
    let zero = estimate_joint(&CVector::zeros(3), &z, &a, &u, &RidgeConfig::NoiseAware, 1e-3).unwrap();
    assert_eq!(zero.h_hat.norm(), 0.0);
    let omp = estimate_omp(&CVector::zeros(3), &z, &small_codebook(16), 4).unwrap();
    assert!(omp.support.is_empty() && omp.h_hat.norm() == 0.0);
}

fn instance(seed: u64, t_p: usize) -> (nfvom::estimator::PilotMatrix, CMatrix, CMatrix, CVector) {
    let g = common::ula(16);
    let a = g.steering_matrix(&common::random_points(2, seed)).unwrap();
    let u = common::orthonormal(16, 1, seed);
    let z = make_pilots(16, t_p, 1.0, PilotKind::Gaussian, seed).unwrap();
    let y = common::cvec(t_p, seed) * common::c(0.01);
    (z, a, u, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ridge_first_order_condition(seed in 0u64..100_000, t_p in 3usize..24, ls in -6.0f64..0.0, ld in -6.0f64..0.0) {
        let (z, a, u, y) = instance(seed, t_p);
        let cfg = RidgeConfig::Fixed { mu_s: 10f64.powf(ls) * 1e-4, mu_d: 10f64.powf(ld) };
        let e = estimate_joint(&y, &z, &a, &u, &cfg, 0.0).unwrap();
        prop_assert!(e.foc_residual < 1e-9, "{}", e.foc_residual);
        let phi = z.z.ad_mul(&hcat(&a, &u));
        let sol: Vec<_> = e.alpha.iter().chain(e.xi.iter()).cloned().collect();
        let sol = CVector::from_vec(sol);
        let reg = [e.mu.0, e.mu.0, e.mu.1];
        prop_assert!(first_order_residual(&phi, &y, &sol, &reg) < 1e-9);
        prop_assert!((e.recompose(&a, &u) - &e.h_hat).norm() <= 1e-14 * e.h_hat.norm().max(1e-300));
    }

    #[test]
    fn ridge_norm_shrinks_with_penalty(seed in 0u64..100_000, t_p in 3usize..24) {
        let (z, a, u, y) = instance(seed, t_p);
        let mut last = f64::INFINITY;
        for mu in [0.0, 1e-3, 1e-1, 10.0] {
            let e = estimate_joint(&y, &z, &a, &u, &RidgeConfig::Fixed { mu_s: mu, mu_d: mu }, 0.0).unwrap();
            let n = (e.alpha.norm_squared() + e.xi.norm_squared()).sqrt();
            prop_assert!(n <= last * (1.0 + 1e-9));
            last = n;
        }
        let e = estimate_joint(&y, &z, &a, &u, &RidgeConfig::Fixed { mu_s: 1e12, mu_d: 1e12 }, 0.0).unwrap();
        prop_assert!((e.alpha.norm_squared() + e.xi.norm_squared()).sqrt() < 1e-9 * last.max(1.0));
    }

    #[test]
    fn static_only_paths_agree(seed in 0u64..100_000, t_p in 3usize..24) {
        let (z, a, _, y) = instance(seed, t_p);
        let cb = small_codebook(16);
        let none = CMatrix::zeros(16, 0);
        for cfg in [RidgeConfig::NoiseAware, RidgeConfig::TraceScaled { factor: 1e-2 }, RidgeConfig::Fixed { mu_s: 1e-3, mu_d: 2.0 }] {
            let j = estimate_joint(&y, &z, &a, &none, &cfg, 1e-6).unwrap();
            let v = estimate_vom_only(&y, &z, &a, &cb, 0, &cfg, 1e-6).unwrap();
            prop_assert_eq!(&j.h_hat, &v.h_hat);
            prop_assert_eq!(&j.alpha, &v.alpha);
        }
    }

    #[test]
    fn omp_residual_strictly_decreases(seed in 0u64..100_000, t_p in 4usize..32, k in 1usize..10) {
        let cb = small_codebook(16);
        let z = make_pilots(16, t_p, 1.0, PilotKind::Gaussian, seed).unwrap();
        let y = common::cvec(t_p, seed);
        let e = estimate_omp(&y, &z, &cb, k).unwrap();
        prop_assert!(e.support.len() <= k.min(t_p));
        let mut last = y.norm();
        for r in &e.residual_norms {
            prop_assert!(*r < last + 1e-12 * y.norm());
            last = *r;
        }
    }
}
