mod common;

use nfvom::geometry::Point2D;
use nfvom::linalg::{lstsq, numerical_rank, relative_asymmetry, CMatrix};
use nfvom::scene::{
    draw_coefficients, realize_channel, synthesize_downlink, synthesize_sensing, CoefficientModel, GainDistribution,
    Interaction, PathComponent, PathKind, Role, SceneConfig, SensingTargetCluster,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn scene_with_targets(seed: u64, n_static: usize) -> nfvom::scene::Scene {
    let pts = common::random_points(n_static, seed);
    let objs: Vec<(f64, f64, f64)> = pts.iter().map(|p| (p.x, p.y, 0.5)).collect();
    let mut s = common::scene_of(&objs);
    s.targets.push(SensingTargetCluster {
        center: Point2D::new(-1.5, 5.0),
        radius: 1.5,
        num_points: 4,
        mean_scatter_gain: 0.3,
    });
    s
}

#[test]
fn beta_second_moment_matches_free_space_law() {
    let g = common::ula(8);
    let s = Point2D::new(2.0, 9.0);
    let u = Point2D::new(0.0, 20.0);
    let pts = [Interaction {
        point: s,
        kind: PathKind::T1,
        role: Role::Both,
        mean_gain: 0.4,
    }];
    for dist in [GainDistribution::ComplexGaussian, GainDistribution::RandomPhase] {
        let model = CoefficientModel {
            distribution: dist,
            shared_reflectivity: true,
        };
        let draws = 100_000u64;
        let mean: f64 = (0..draws)
            .map(|b| draw_coefficients(&pts, u, &g, b, &model).unwrap()[0].comm_coefficient.norm_sqr())
            .sum::<f64>()
            / draws as f64;
        let amp = g.wavelength() / (4.0 * std::f64::consts::PI);
        let expect = 0.4 * amp * amp / s.distance(u).powi(2);
        assert!((mean - expect).abs() < 0.03 * expect, "{dist:?}: {mean} vs {expect}");
    }
}

#[test]
fn two_component_superposition() {
    let g = common::ula(32);
    let a = PathComponent {
        interaction_point: Point2D::new(1.0, 7.0),
        comm_coefficient: Complex64::new(0.3, -0.2),
        roundtrip_coefficient: Complex64::new(0.1, 0.5),
        kind: PathKind::T1,
    };
    let b = PathComponent {
        interaction_point: Point2D::new(-3.0, 11.0),
        comm_coefficient: Complex64::new(-1.1, 0.4),
        roundtrip_coefficient: Complex64::new(0.7, 0.0),
        kind: PathKind::ST,
    };
    let h = synthesize_downlink(&[a, b], &g).unwrap();
    let sum = synthesize_downlink(&[a], &g).unwrap() + synthesize_downlink(&[b], &g).unwrap();
    assert!((h - sum).norm() <= 1e-14 * 1e-2);
}

#[test]
fn sensing_matrix_is_sum_of_rank_one_terms() {
    let g = common::ula(32);
    let pts = common::random_points(6, 4);
    let comps: Vec<PathComponent> = pts
        .iter()
        .enumerate()
        .map(|(i, p)| PathComponent {
            interaction_point: *p,
            comm_coefficient: Complex64::new(0.0, 0.0),
            roundtrip_coefficient: Complex64::new(1.0 + i as f64, -0.5 * i as f64),
            kind: PathKind::T1,
        })
        .collect();
    let h = synthesize_sensing(&comps, &g).unwrap();
    let mut oracle = CMatrix::zeros(32, 32);
    for c in &comps {
        let v = g.steering_vector(c.interaction_point).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                oracle[(i, j)] += c.roundtrip_coefficient * v[i] * v[j];
            }
        }
    }
    assert!((&h - &oracle).norm() <= 1e-13 * oracle.norm());
    assert!(numerical_rank(&h, 1e-9) <= comps.len());
}

#[test]
fn default_scene_parameters() {
    let layout = SceneConfig::default();
    assert_eq!(layout.random_type1[0].region.x_min, -7.0);
    assert_eq!(layout.random_type1[0].region.y_max, 15.0);
    assert_eq!(layout.targets[0].center, Point2D::new(-1.5, 5.0));
    assert_eq!(layout.targets[0].radius, 1.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn realization_invariants(seed in 0u64..10_000, block in 0u64..1_000, n_static in 0usize..10, ux in -4.0f64..4.0, uy in 16.0f64..24.0) {
        let g = common::ula(32);
        let s = scene_with_targets(seed, n_static);
        let u = Point2D::new(ux, uy);
        let model = CoefficientModel::default();
        let r = realize_channel(&s, &g, u, block, &model).unwrap();

        prop_assert!(relative_asymmetry(&r.sensing) < 1e-12);
        let distinct = r.components.len();
        prop_assert!(numerical_rank(&r.sensing, 1e-9) <= distinct);

        let pts: Vec<Point2D> = r.components.iter().map(|c| c.interaction_point).collect();
        let a = g.steering_matrix(&pts).unwrap();
        let coef = lstsq(&a, &r.h);
        if let Ok(coef) = coef {
            let resid = (&a * coef - &r.h).norm();
            prop_assert!(resid <= 1e-10 * r.h.norm().max(1e-300));
        }

        let again = realize_channel(&s, &g, u, block, &model).unwrap();
        prop_assert_eq!(&again.h, &r.h);
        prop_assert_eq!(&again.sensing, &r.sensing);
    }

    #[test]
    fn downlink_is_linear_in_coefficients(seed in 0u64..10_000, re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let g = common::ula(16);
        let s = scene_with_targets(seed, 5);
        let r = realize_channel(&s, &g, Point2D::new(0.0, 20.0), seed, &CoefficientModel::default()).unwrap();
        let c = Complex64::new(re, im);
        let scaled: Vec<PathComponent> = r
            .components
            .iter()
            .map(|p| PathComponent { comm_coefficient: p.comm_coefficient * c, ..*p })
            .collect();
        let h2 = synthesize_downlink(&scaled, &g).unwrap();
        prop_assert!((h2 - &r.h * c).norm() <= 1e-13 * r.h.norm() * c.norm().max(1.0));
    }
}
