//! Estimation error, MRT beamforming and achievable rate.

use crate::error::{Error, Result};
use crate::estimator::Scheme;
use crate::linalg::CVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    pub scheme: Scheme,
    pub t_p: usize,
    pub nmse: f64,
    pub rate: f64,
    /// `|h^H w|^2`.
    pub beam_gain: f64,
}

/// `||h - h_hat||^2 / ||h||^2`.
pub fn nmse(h_true: &CVector, h_hat: &CVector) -> Result<f64> {
    if h_true.len() != h_hat.len() {
        return Err(Error::dims("nmse", h_true.len(), h_hat.len()));
    }
    let e = h_true.norm_squared();
    if e == 0.0 {
        return Err(Error::ZeroVector("true channel"));
    }
    Ok((h_true - h_hat).norm_squared() / e)
}

/// Unit-norm beam along the estimate.
pub fn mrt(h_hat: &CVector) -> Result<CVector> {
    let n = h_hat.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector("channel estimate"));
    }
    Ok(h_hat.unscale(n))
}

pub fn beam_gain(h_true: &CVector, w: &CVector) -> f64 {
    h_true.dotc(w).norm_sqr()
}

/// `(1 - T_p/T) log2(1 + P |h^H w|^2 / sigma2)`.
pub fn achievable_rate(h_true: &CVector, w: &CVector, power: f64, sigma2: f64, t_p: usize, t: usize) -> Result<f64> {
    if t_p > t {
        return Err(Error::InvalidArgument(format!("pilot length {t_p} exceeds block length {t}")));
    }
    if !(sigma2 > 0.0) || !(power >= 0.0) {
        return Err(Error::InvalidArgument("need sigma2 > 0 and P >= 0".into()));
    }
    Ok(rate_from_gain(beam_gain(h_true, w), power / sigma2, t_p, t))
}

pub fn rate_from_gain(gain: f64, snr: f64, t_p: usize, t: usize) -> f64 {
    (1.0 - t_p as f64 / t as f64) * (snr * gain).ln_1p() / std::f64::consts::LN_2
}

/// Metrics of one estimate. A zero estimate has no beam direction and is
/// scored with zero beam gain.
pub fn evaluate(
    scheme: Scheme,
    h_true: &CVector,
    h_hat: &CVector,
    snr: f64,
    t_p: usize,
    t: usize,
) -> Result<TrialMetrics> {
    let e = nmse(h_true, h_hat)?;
    let gain = match mrt(h_hat) {
        Ok(w) => beam_gain(h_true, &w),
        Err(_) => 0.0,
    };
    if t_p > t {
        return Err(Error::InvalidArgument(format!("pilot length {t_p} exceeds block length {t}")));
    }
    Ok(TrialMetrics {
        scheme,
        t_p,
        nmse: e,
        rate: rate_from_gain(gain, snr, t_p, t),
        beam_gain: gain,
    })
}
