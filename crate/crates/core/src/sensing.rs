//! Monostatic echo simulation, static clutter suppression and dynamic
//! subspace extraction.

use log::warn;

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, Point2D};
use crate::linalg::{economy_svd, thin_qr_dropping, CMatrix};
use crate::rng::{complex_gaussian_matrix, rng_from, Stream};
use crate::vom::Vom;

/// Columns of a sensing steering matrix closer than this (relative to its
/// Frobenius norm) to the span of earlier columns are dropped.
pub const QR_DROP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EchoObservation {
    pub e: CMatrix,
    pub noise_variance: f64,
}

#[derive(Debug, Clone)]
pub struct ClutterProjector {
    /// Orthonormal columns spanning the predicted static echo subspace.
    pub basis: CMatrix,
    /// Library indices of the columns that survived the rank check.
    pub source_indices: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct DynamicSubspace {
    pub basis: CMatrix,
    /// All singular values of the clutter-suppressed echo, non-increasing.
    pub singular_values: Vec<f64>,
    pub rho: usize,
    pub eta: f64,
    pub rho_max: usize,
}

impl DynamicSubspace {
    /// Share of the total energy held by the first `rho` singular values.
    pub fn captured_energy(&self) -> f64 {
        let total: f64 = self.singular_values.iter().map(|s| s * s).sum();
        if total == 0.0 {
            return 1.0;
        }
        self.singular_values[..self.rho].iter().map(|s| s * s).sum::<f64>() / total
    }
}

/// `E = H Z + N` with `N` i.i.d. `CN(0, sigma_s2)` drawn from `seed`.
pub fn simulate_echo(h: &CMatrix, z: &CMatrix, sigma_s2: f64, seed: u64) -> Result<EchoObservation> {
    if h.ncols() != z.nrows() || h.nrows() != h.ncols() {
        return Err(Error::dims("echo pilot rows", h.ncols(), z.nrows()));
    }
    if !(sigma_s2 >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise variance must be non-negative, got {sigma_s2}")));
    }
    let mut e = h * z;
    if sigma_s2 > 0.0 {
        let mut rng = rng_from(seed, &[Stream::EchoNoise as u64]);
        e += complex_gaussian_matrix(&mut rng, e.nrows(), e.ncols(), sigma_s2);
    }
    Ok(EchoObservation {
        e,
        noise_variance: sigma_s2,
    })
}

/// Orthonormal basis for the steering vectors of `points`; dependent
/// columns are dropped with a warning.
pub fn clutter_projector_from_points(points: &[Point2D], indices: &[usize], geom: &ArrayGeometry) -> Result<ClutterProjector> {
    if points.is_empty() {
        return Err(Error::EmptySensingEntry);
    }
    let a = geom.steering_matrix(points)?;
    let (basis, kept) = thin_qr_dropping(&a, QR_DROP_TOL);
    if kept.len() < points.len() {
        warn!(
            "clutter basis: dropped {} of {} rank-deficient columns",
            points.len() - kept.len(),
            points.len()
        );
    }
    Ok(ClutterProjector {
        basis,
        source_indices: kept.iter().map(|&k| indices[k]).collect(),
    })
}

pub fn build_clutter_projector(vom: &Vom, geom: &ArrayGeometry) -> Result<ClutterProjector> {
    clutter_projector_from_points(&vom.sensing_points(), &vom.sens_entry.indices, geom)
}

/// `E - U (U^H E)`.
pub fn suppress_clutter(proj: &ClutterProjector, obs: &EchoObservation) -> Result<CMatrix> {
    project_out(&proj.basis, &obs.e)
}

pub(crate) fn project_out(u: &CMatrix, e: &CMatrix) -> Result<CMatrix> {
    if u.ncols() == 0 {
        return Ok(e.clone());
    }
    if u.nrows() != e.nrows() {
        return Err(Error::dims("clutter projector rows", u.nrows(), e.nrows()));
    }
    let coeff = u.adjoint() * e;
    Ok(e - u * coeff)
}

/// Leading left singular vectors of `e_tilde` holding a fraction `eta` of
/// its energy, capped at `rho_max`.
pub fn extract_dynamic_subspace(e_tilde: &CMatrix, eta: f64, rho_max: usize) -> Result<DynamicSubspace> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidArgument(format!("eta must lie in (0, 1], got {eta}")));
    }
    if rho_max == 0 {
        return Err(Error::InvalidArgument("rho_max must be at least 1".into()));
    }
    let n = e_tilde.nrows();
    let scale = e_tilde.norm();
    if scale == 0.0 {
        return Ok(DynamicSubspace {
            basis: CMatrix::zeros(n, 0),
            singular_values: vec![0.0; n.min(e_tilde.ncols())],
            rho: 0,
            eta,
            rho_max,
        });
    }
    // unit Frobenius norm keeps the iteration well away from underflow
    let (u, sv) = economy_svd(&(e_tilde / num_complex::Complex64::new(scale, 0.0)));
    let singular_values: Vec<f64> = sv.iter().map(|s| s * scale).collect();
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let mut acc = 0.0;
    let mut k = sv.len();
    for (i, s) in sv.iter().enumerate() {
        acc += s * s;
        if acc / total >= eta {
            k = i + 1;
            break;
        }
    }
    let rho = k.min(rho_max);
    Ok(DynamicSubspace {
        basis: u.columns(0, rho).into_owned(),
        singular_values,
        rho,
        eta,
        rho_max,
    })
}
