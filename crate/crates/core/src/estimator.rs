//! Pilot transmission, feedback and the three downlink channel estimators:
//! the joint map-plus-sensing ridge estimator, the map-only benchmark and
//! polar-codebook OMP.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, Point2D};
use crate::linalg::{hcat, lstsq, regularized_lstsq, thin_qr_dropping, CMatrix, CVector, ONE};
use crate::rng::{complex_gaussian_matrix, complex_gaussian_vector, rng_from, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Proposed,
    VomOnly,
    Omp,
    PerfectCsi,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::VomOnly, Scheme::Omp, Scheme::PerfectCsi];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::VomOnly => "vom_only",
            Scheme::Omp => "omp",
            Scheme::PerfectCsi => "perfect_csi",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|x| x.as_str() == s)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PilotKind {
    #[default]
    Gaussian,
    /// Randomly phased DFT rows, needs `T_p >= N`.
    Orthogonal,
}

#[derive(Debug, Clone)]
pub struct PilotMatrix {
    pub z: CMatrix,
    pub per_symbol_power: f64,
}

impl PilotMatrix {
    pub fn t_p(&self) -> usize {
        self.z.ncols()
    }
}

/// `N x T_p` pilots whose columns all have squared norm `power`.
pub fn make_pilots(n: usize, t_p: usize, power: f64, kind: PilotKind, seed: u64) -> Result<PilotMatrix> {
    if t_p == 0 || n == 0 {
        return Err(Error::InvalidArgument("pilot matrix needs N >= 1 and T_p >= 1".into()));
    }
    if !(power > 0.0) {
        return Err(Error::InvalidArgument(format!("pilot power must be positive, got {power}")));
    }
    let mut rng = rng_from(seed, &[Stream::Pilots as u64]);
    let z = match kind {
        PilotKind::Gaussian => {
            let mut z = complex_gaussian_matrix(&mut rng, n, t_p, 1.0);
            for mut col in z.column_iter_mut() {
                let s = power.sqrt() / col.norm();
                col.scale_mut(s);
            }
            z
        }
        PilotKind::Orthogonal => {
            if t_p < n {
                return Err(Error::InvalidArgument(format!(
                    "orthogonal pilots need T_p >= N (T_p = {t_p}, N = {n})"
                )));
            }
            let phases: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
            let amp = (power / n as f64).sqrt();
            CMatrix::from_fn(n, t_p, |r, c| {
                let arg = -std::f64::consts::TAU * ((r * c) % t_p) as f64 / t_p as f64 + phases[r];
                Complex64::from_polar(amp, arg)
            })
        }
    };
    Ok(PilotMatrix {
        z,
        per_symbol_power: power,
    })
}

/// `y = Z^H h + n`, `n ~ CN(0, sigma2 I)`.
pub fn observe_pilots(z: &PilotMatrix, h: &CVector, sigma2: f64, seed: u64) -> Result<CVector> {
    if z.z.nrows() != h.len() {
        return Err(Error::dims("pilot observation", z.z.nrows(), h.len()));
    }
    let mut y = z.z.ad_mul(h);
    if sigma2 > 0.0 {
        let mut rng = rng_from(seed, &[Stream::PilotNoise as u64]);
        y += complex_gaussian_vector(&mut rng, y.len(), sigma2);
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    #[default]
    Ideal,
    ScalarQuantized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeedbackConfig {
    pub mode: FeedbackMode,
    /// Total feedback budget `B` in bits, split evenly over the `2 T_p` real components.
    pub bits_total: usize,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        FeedbackConfig {
            mode: FeedbackMode::Ideal,
            bits_total: 0,
        }
    }
}

/// Returns the fed-back observation `y_hat`.
///
/// The scalar quantizer is a uniform mid-rise quantizer on each real and
/// imaginary part over `[-3 rms, 3 rms]`, where `rms` is sent unquantized.
pub fn feedback(y: &CVector, cfg: &FeedbackConfig) -> Result<CVector> {
    match cfg.mode {
        FeedbackMode::Ideal => Ok(y.clone()),
        FeedbackMode::ScalarQuantized => {
            let comps = 2 * y.len();
            let bits = cfg.bits_total.checked_div(comps).unwrap_or(0);
            if bits == 0 {
                return Err(Error::InvalidArgument(format!(
                    "{} feedback bits cannot cover {comps} real components",
                    cfg.bits_total
                )));
            }
            let rms = (y.norm_squared() / comps as f64).sqrt();
            if rms == 0.0 {
                return Ok(CVector::zeros(y.len()));
            }
            let levels = 2f64.powi(bits.min(52) as i32);
            let range = 3.0 * rms;
            let step = 2.0 * range / levels;
            let q = |x: f64| {
                let idx = ((x + range) / step).floor().clamp(0.0, levels - 1.0);
                (idx + 0.5) * step - range
            };
            Ok(y.map(|z| Complex64::new(q(z.re), q(z.im))))
        }
    }
}

/// Ridge penalties per block.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", deny_unknown_fields)]
pub enum RidgeConfig {
    /// Explicit penalties.
    Fixed { mu_s: f64, mu_d: f64 },
    /// `factor * trace(Phi^H Phi) / (J + rho)` for both blocks.
    TraceScaled { factor: f64 },
    /// Per block, `sigma2 * n * (mean column energy of the block) / (signal energy estimate)`,
    /// where the signal energy is `||y||^2 - T_p sigma2` floored at `1e-3 ||y||^2`.
    #[default]
    NoiseAware,
}


impl RidgeConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RidgeConfig::Fixed { mu_s, mu_d } => mu_s >= 0.0 && mu_d >= 0.0 && mu_s.is_finite() && mu_d.is_finite(),
            RidgeConfig::TraceScaled { factor } => factor >= 0.0 && factor.is_finite(),
            RidgeConfig::NoiseAware => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid ridge configuration {self:?}")))
        }
    }

    /// Resolves `(mu_s, mu_d)` for a measurement matrix whose first
    /// `n_static` columns form the static block.
    pub fn penalties(&self, phi: &CMatrix, n_static: usize, y: &CVector, sigma2: f64) -> (f64, f64) {
        let n = phi.ncols();
        let energy = |range: std::ops::Range<usize>| -> f64 {
            if range.is_empty() {
                return 0.0;
            }
            let len = range.len() as f64;
            range.map(|j| phi.column(j).norm_squared()).sum::<f64>() / len
        };
        match *self {
            RidgeConfig::Fixed { mu_s, mu_d } => (mu_s, mu_d),
            RidgeConfig::TraceScaled { factor } => {
                if n == 0 {
                    return (0.0, 0.0);
                }
                let mu = factor * phi.norm_squared() / n as f64;
                (mu, mu)
            }
            RidgeConfig::NoiseAware => {
                if sigma2 <= 0.0 {
                    return (0.0, 0.0);
                }
                let yy = y.norm_squared();
                let signal = (yy - y.len() as f64 * sigma2).max(1e-3 * yy);
                if signal <= 0.0 {
                    return (0.0, 0.0);
                }
                let w = sigma2 * n as f64 / signal;
                (w * energy(0..n_static), w * energy(n_static..n))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h_hat: CVector,
    pub alpha: CVector,
    pub xi: CVector,
    pub scheme: Scheme,
    /// Relative first-order-condition residual of the ridge solve (0 when not applicable).
    pub foc_residual: f64,
    /// Codebook columns used by the codebook-based schemes.
    pub support: Vec<usize>,
    /// OMP residual norm after each iteration.
    pub residual_norms: Vec<f64>,
    pub mu: (f64, f64),
}

impl ChannelEstimate {
    /// `A_sta alpha + U xi`.
    pub fn recompose(&self, a_sta: &CMatrix, u: &CMatrix) -> CVector {
        let mut h = a_sta * &self.alpha;
        if u.ncols() > 0 {
            h += u * &self.xi;
        }
        h
    }
}

/// Relative residual of `Phi^H (Phi z - y) + D z = 0`.
pub fn first_order_residual(phi: &CMatrix, y: &CVector, z: &CVector, reg: &[f64]) -> f64 {
    let mut g = phi.ad_mul(&(phi * z - y));
    for (i, r) in reg.iter().enumerate() {
        g[i] += z[i] * *r;
    }
    let scale = phi.norm_squared() * z.norm() + phi.ad_mul(y).norm() + reg.iter().cloned().fold(0.0, f64::max) * z.norm();
    if scale == 0.0 {
        g.norm()
    } else {
        g.norm() / scale
    }
}

struct RidgeSolution {
    alpha: CVector,
    xi: CVector,
    foc: f64,
    mu: (f64, f64),
}

fn ridge_solve(
    y: &CVector,
    z: &PilotMatrix,
    a_sta: &CMatrix,
    dynamic: &CMatrix,
    cfg: &RidgeConfig,
    sigma2: f64,
) -> Result<RidgeSolution> {
    let n = z.z.nrows();
    if a_sta.nrows() != n || dynamic.nrows() != n {
        return Err(Error::dims("estimator basis rows", n, a_sta.nrows().max(dynamic.nrows())));
    }
    if y.len() != z.t_p() {
        return Err(Error::dims("pilot observation length", z.t_p(), y.len()));
    }
    cfg.validate()?;
    let basis = hcat(a_sta, dynamic);
    let phi = z.z.ad_mul(&basis);
    let js = a_sta.ncols();
    let (mu_s, mu_d) = cfg.penalties(&phi, js, y, sigma2);
    let reg: Vec<f64> = (0..basis.ncols()).map(|i| if i < js { mu_s } else { mu_d }).collect();
    let sol = regularized_lstsq(&phi, y, &reg)?;
    let foc = first_order_residual(&phi, y, &sol, &reg);
    Ok(RidgeSolution {
        alpha: sol.rows(0, js).into_owned(),
        xi: sol.rows(js, basis.ncols() - js).into_owned(),
        foc,
        mu: (mu_s, mu_d),
    })
}

/// Joint ridge estimate over the static map basis `A_sta` and the sensed
/// dynamic basis `U_dyn` (which may have zero columns).
pub fn estimate_joint(
    y_hat: &CVector,
    z: &PilotMatrix,
    a_sta: &CMatrix,
    u_dyn: &CMatrix,
    cfg: &RidgeConfig,
    sigma2: f64,
) -> Result<ChannelEstimate> {
    let s = ridge_solve(y_hat, z, a_sta, u_dyn, cfg, sigma2)?;
    let est = ChannelEstimate {
        h_hat: CVector::zeros(z.z.nrows()),
        alpha: s.alpha,
        xi: s.xi,
        scheme: Scheme::Proposed,
        foc_residual: s.foc,
        support: Vec::new(),
        residual_norms: Vec::new(),
        mu: s.mu,
    };
    let h_hat = est.recompose(a_sta, u_dyn);
    Ok(ChannelEstimate { h_hat, ..est })
}

#[derive(Debug, Clone)]
pub struct PolarCodebook {
    /// Unit-norm columns.
    pub atoms: CMatrix,
    /// `(sin angle, distance)` per atom.
    pub grid: Vec<(f64, f64)>,
    pub points: Vec<Point2D>,
    pub g_angles: usize,
    pub g_rings: usize,
    pub r_min: f64,
    pub r_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodebookConfig {
    pub g_angles: usize,
    pub g_rings: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        CodebookConfig {
            g_angles: 128,
            g_rings: 8,
            r_min: 4.0,
            r_max: 64.0,
        }
    }
}

/// Polar-domain dictionary around the array reference point. Angles are
/// cell midpoints of a uniform grid in `sin(angle)` over `[-1, 1]`
/// (broadside is the +y axis); distances are uniform in `1/r` over
/// `[1/r_max, 1/r_min]`, or the midpoint of that range for a single ring.
pub fn build_polar_codebook(geom: &ArrayGeometry, cfg: &CodebookConfig) -> Result<PolarCodebook> {
    let CodebookConfig {
        g_angles,
        g_rings,
        r_min,
        r_max,
    } = *cfg;
    if !(r_min > 0.0 && r_max > r_min) {
        return Err(Error::InvalidArgument(format!("need 0 < r_min < r_max, got {r_min}, {r_max}")));
    }
    if g_angles == 0 || g_rings == 0 {
        return Err(Error::InvalidArgument("codebook needs at least one angle and one ring".into()));
    }
    let (lo, hi) = (1.0 / r_max, 1.0 / r_min);
    let inv_r: Vec<f64> = if g_rings == 1 {
        vec![0.5 * (lo + hi)]
    } else {
        (0..g_rings).map(|i| lo + (hi - lo) * i as f64 / (g_rings - 1) as f64).collect()
    };
    let q0 = geom.reference();
    let mut grid = Vec::with_capacity(g_angles * g_rings);
    let mut points = Vec::with_capacity(g_angles * g_rings);
    let mut cols = Vec::with_capacity(g_angles * g_rings);
    for &ir in &inv_r {
        let r = 1.0 / ir;
        for a in 0..g_angles {
            let s = -1.0 + (2 * a + 1) as f64 / g_angles as f64;
            let c = (1.0 - s * s).max(0.0).sqrt();
            let p = q0 + Point2D::new(r * s, r * c);
            let v = geom.steering_vector(p)?;
            cols.push(v.unscale(v.norm()));
            grid.push((s, r));
            points.push(p);
        }
    }
    Ok(PolarCodebook {
        atoms: CMatrix::from_columns(&cols),
        grid,
        points,
        g_angles,
        g_rings,
        r_min,
        r_max,
    })
}

fn column_norms(m: &CMatrix) -> Vec<f64> {
    m.column_iter().map(|c| c.norm()).collect()
}

fn best_atom(measured: &CMatrix, norms: &[f64], r: &CVector, taken: &[bool]) -> Option<usize> {
    let corr = measured.ad_mul(r);
    let mut best = None;
    let mut best_v = -1.0;
    for g in 0..measured.ncols() {
        if taken[g] || norms[g] == 0.0 {
            continue;
        }
        let v = corr[g].norm() / norms[g];
        if v > best_v {
            best_v = v;
            best = Some(g);
        }
    }
    best
}

/// Map-only benchmark: static basis from the map plus `n_dyn_atoms`
/// codebook atoms picked greedily on the part of `y_hat` that the static
/// measurement subspace cannot explain, then a joint ridge fit.
pub fn estimate_vom_only(
    y_hat: &CVector,
    z: &PilotMatrix,
    a_sta: &CMatrix,
    codebook: &PolarCodebook,
    n_dyn_atoms: usize,
    cfg: &RidgeConfig,
    sigma2: f64,
) -> Result<ChannelEstimate> {
    let mut picks = Vec::new();
    if n_dyn_atoms > 0 {
        if codebook.atoms.ncols() == 0 {
            return Err(Error::InvalidArgument("empty codebook with dynamic atoms requested".into()));
        }
        let (mut basis, _) = thin_qr_dropping(&z.z.ad_mul(a_sta), 1e-10);
        let mut r = y_hat - &basis * basis.ad_mul(y_hat);
        let measured = z.z.ad_mul(&codebook.atoms);
        let norms = column_norms(&measured);
        let mut taken = vec![false; measured.ncols()];
        while picks.len() < n_dyn_atoms {
            let Some(g) = best_atom(&measured, &norms, &r, &taken) else {
                break;
            };
            taken[g] = true;
            let mut v: CVector = measured.column(g).into_owned();
            for _ in 0..2 {
                if basis.ncols() > 0 {
                    v -= &basis * basis.ad_mul(&v);
                }
            }
            let nv = v.norm();
            if nv <= 1e-10 * norms[g] {
                continue;
            }
            v.unscale_mut(nv);
            let c = v.dotc(&r);
            r.axpy(-c, &v, ONE);
            basis = hcat(&basis, &CMatrix::from_columns(&[v]));
            picks.push(g);
        }
    }
    let dynamic = if picks.is_empty() {
        CMatrix::zeros(z.z.nrows(), 0)
    } else {
        codebook.atoms.select_columns(picks.iter())
    };
    let s = ridge_solve(y_hat, z, a_sta, &dynamic, cfg, sigma2)?;
    let est = ChannelEstimate {
        h_hat: CVector::zeros(z.z.nrows()),
        alpha: s.alpha,
        xi: s.xi,
        scheme: Scheme::VomOnly,
        foc_residual: s.foc,
        support: picks,
        residual_norms: Vec::new(),
        mu: s.mu,
    };
    let h_hat = est.recompose(a_sta, &dynamic);
    Ok(ChannelEstimate { h_hat, ..est })
}

/// Orthogonal matching pursuit over `Z^H A_cb`, stopping after `sparsity`
/// atoms (at most `T_p`) or once the residual drops below `1e-8 ||y_hat||`.
pub fn estimate_omp(
    y_hat: &CVector,
    z: &PilotMatrix,
    codebook: &PolarCodebook,
    sparsity: usize,
) -> Result<ChannelEstimate> {
    if sparsity == 0 {
        return Err(Error::InvalidArgument("OMP sparsity must be at least 1".into()));
    }
    if y_hat.len() != z.t_p() {
        return Err(Error::dims("pilot observation length", z.t_p(), y_hat.len()));
    }
    let n = z.z.nrows();
    let measured = z.z.ad_mul(&codebook.atoms);
    let norms = column_norms(&measured);
    let ny = y_hat.norm();
    let mut taken = vec![false; measured.ncols()];
    let mut support: Vec<usize> = Vec::new();
    let mut coef = CVector::zeros(0);
    let mut r = y_hat.clone();
    let mut history = Vec::new();
    let max_iter = sparsity.min(y_hat.len());
    while support.len() < max_iter {
        if r.norm() <= 1e-8 * ny || ny == 0.0 {
            break;
        }
        let Some(g) = best_atom(&measured, &norms, &r, &taken) else {
            break;
        };
        taken[g] = true;
        let mut trial = support.clone();
        trial.push(g);
        let sub = measured.select_columns(trial.iter());
        let Ok(x) = lstsq(&sub, y_hat) else {
            continue;
        };
        support = trial;
        r = y_hat - &sub * &x;
        coef = x;
        history.push(r.norm());
    }
    let h_hat = if support.is_empty() {
        CVector::zeros(n)
    } else {
        codebook.atoms.select_columns(support.iter()) * &coef
    };
    Ok(ChannelEstimate {
        h_hat,
        alpha: CVector::zeros(0),
        xi: coef,
        scheme: Scheme::Omp,
        foc_residual: 0.0,
        support,
        residual_norms: history,
        mu: (0.0, 0.0),
    })
}
