#![allow(dead_code)]

use nfvom::geometry::{make_ula, ArrayGeometry, Point2D};
use nfvom::linalg::{thin_qr_dropping, CMatrix, CVector};
use nfvom::rng::{complex_gaussian_matrix, complex_gaussian_vector, rng_from};
use nfvom::scene::{Rect, Scene, Type1Object};
use num_complex::Complex64;
use rand::Rng;

pub fn ula(n: usize) -> ArrayGeometry {
    make_ula(n, 2.4e9, None, 3.0e8).unwrap()
}

pub fn roi() -> Rect {
    Rect {
        x_min: -4.0,
        x_max: 4.0,
        y_min: 16.0,
        y_max: 24.0,
    }
}

pub fn scene_of(objs: &[(f64, f64, f64)]) -> Scene {
    Scene {
        type1: objs
            .iter()
            .map(|&(x, y, g)| Type1Object {
                location: Point2D::new(x, y),
                mean_interaction_gain: g,
            })
            .collect(),
        type2: vec![],
        targets: vec![],
        roi: roi(),
    }
}

pub fn cmat(rows: usize, cols: usize, seed: u64) -> CMatrix {
    complex_gaussian_matrix(&mut rng_from(seed, &[99]), rows, cols, 1.0)
}

pub fn cvec(len: usize, seed: u64) -> CVector {
    complex_gaussian_vector(&mut rng_from(seed, &[98]), len, 1.0)
}

pub fn orthonormal(rows: usize, cols: usize, seed: u64) -> CMatrix {
    thin_qr_dropping(&cmat(rows, cols, seed), 1e-10).0
}

/// Random points in the box used for static objects.
pub fn random_points(count: usize, seed: u64) -> Vec<Point2D> {
    let mut rng = rng_from(seed, &[97]);
    (0..count)
        .map(|_| Point2D::new(rng.random_range(-7.0..7.0), rng.random_range(5.0..15.0)))
        .collect()
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `(Φ^H Φ + diag(reg))^{-1} Φ^H y` by explicit dense inversion.
pub fn ridge_dense(phi: &CMatrix, y: &CVector, reg: &[f64]) -> CVector {
    let mut h = phi.ad_mul(phi);
    for (i, r) in reg.iter().enumerate() {
        h[(i, i)] += Complex64::new(*r, 0.0);
    }
    h.try_inverse().expect("regularized normal matrix invertible") * phi.ad_mul(y)
}

/// Jacobi-preconditioned gradient descent on `||Φz - y||^2 + sum reg_i |z_i|^2`
/// with the optimal fixed step for the scaled Hessian.
pub fn ridge_gradient_descent(phi: &CMatrix, y: &CVector, reg: &[f64], steps: usize) -> CVector {
    let n = phi.ncols();
    let mut h = phi.ad_mul(phi);
    for (i, r) in reg.iter().enumerate() {
        h[(i, i)] += Complex64::new(*r, 0.0);
    }
    let b = phi.ad_mul(y);
    let d: Vec<f64> = (0..n).map(|i| 1.0 / h[(i, i)].re.sqrt()).collect();
    let scaled = CMatrix::from_fn(n, n, |i, j| h[(i, j)] * d[i] * d[j]);
    let eig = scaled.symmetric_eigen().eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(l, u), &e| (l.min(e), u.max(e)));
    let step = 2.0 / (lo + hi);
    let mut z = CVector::zeros(n);
    for _ in 0..steps {
        let g = &h * &z - &b;
        for i in 0..n {
            z[i] -= g[i] * (step * d[i] * d[i]);
        }
    }
    z
}

/// Small joint-ridge instance: N=16, two static steering columns, one
/// orthonormal dynamic direction, noisy pilot observations.
pub struct RidgeInstance {
    pub z: nfvom::estimator::PilotMatrix,
    pub a: CMatrix,
    pub u: CMatrix,
    pub y: CVector,
    pub sigma2: f64,
}

pub fn ridge_instance(seed: u64) -> RidgeInstance {
    use nfvom::estimator::{make_pilots, observe_pilots, PilotKind};
    let g = ula(16);
    let mut rng = rng_from(seed, &[96]);
    let t_p = rng.random_range(4..24);
    let a = g.steering_matrix(&random_points(2, seed)).unwrap();
    let u = orthonormal(16, 1, seed);
    let z = make_pilots(16, t_p, 1.0, PilotKind::Gaussian, seed).unwrap();
    let h = &a * cvec(2, seed) + &u * cvec(1, seed + 7) * c(a.column(0).norm());
    let sigma2 = h.norm_squared() / 16.0 / 3.0;
    let y = observe_pilots(&z, &h, sigma2, seed).unwrap();
    RidgeInstance { z, a, u, y, sigma2 }
}

pub fn stacked_solution(e: &nfvom::estimator::ChannelEstimate) -> CVector {
    CVector::from_iterator(e.alpha.len() + e.xi.len(), e.alpha.iter().chain(e.xi.iter()).cloned())
}

pub fn penalty_vector(e: &nfvom::estimator::ChannelEstimate) -> Vec<f64> {
    let mut reg = vec![e.mu.0; e.alpha.len()];
    reg.extend(std::iter::repeat_n(e.mu.1, e.xi.len()));
    reg
}
