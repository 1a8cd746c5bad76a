//! Seeded Monte Carlo experiments over coherence blocks and pilot lengths.

pub mod config;
pub mod results;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{
    build_polar_codebook, estimate_joint, estimate_omp, estimate_vom_only, feedback, make_pilots, observe_pilots,
    PolarCodebook, Scheme,
};
use crate::geometry::{ArrayGeometry, Point2D};
use crate::linalg::{CMatrix, CVector};
use crate::metrics::{evaluate, TrialMetrics};
use crate::rng::{derive_seed, rng_from, Stream};
use crate::scene::{realize_channel, Scene};
use crate::sensing::{build_clutter_projector, extract_dynamic_subspace, simulate_echo, suppress_clutter, ClutterProjector};
use crate::vom::{build_vom, Vom};

pub use config::ExperimentConfig;
pub use results::{ResultRow, ResultsTable, CSV_HEADER};

/// Name of the optional worker-count override.
pub const WORKERS_ENV: &str = "NFVOM_WORKERS";

/// A clutter-suppressed echo below this fraction of the raw echo norm is
/// treated as exactly zero (no dynamic component).
pub const ZERO_RESIDUAL_TOL: f64 = 1e-12;

/// Noise levels derived from the configured SNRs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub mean_channel_energy: f64,
    pub mean_sensing_energy: f64,
    /// Pilot observation noise variance.
    pub pilot_noise: f64,
    /// Echo noise variance per antenna and symbol.
    pub echo_noise: f64,
    /// `P / sigma^2` used in the rate.
    pub data_snr: f64,
    pub draws: usize,
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Everything a block needs, built once per experiment.
#[derive(Debug, Clone)]
pub struct ExperimentContext {
    pub cfg: ExperimentConfig,
    pub geom: ArrayGeometry,
    pub scene: Scene,
    pub vom: Vom,
    pub codebook: PolarCodebook,
    pub projector: ClutterProjector,
    pub calibration: Calibration,
}

impl ExperimentContext {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let geom = cfg.array.build()?;
        let scene = cfg.scene.resolve()?;
        scene.warn_near_field(&geom);
        let vom = build_vom(&scene, &geom, &cfg.vom, &cfg.coefficients)?;
        Self::with_vom(cfg, geom, scene, vom)
    }

    pub fn with_vom(cfg: &ExperimentConfig, geom: ArrayGeometry, scene: Scene, vom: Vom) -> Result<Self> {
        vom.validate()?;
        let codebook = build_polar_codebook(&geom, &cfg.codebook)?;
        let projector = build_clutter_projector(&vom, &geom)?;
        let calibration = calibrate(cfg, &geom, &scene)?;
        info!(
            "calibrated noise: pilot {:.3e}, echo {:.3e}, data snr {:.3e}",
            calibration.pilot_noise, calibration.echo_noise, calibration.data_snr
        );
        Ok(ExperimentContext {
            cfg: cfg.clone(),
            geom,
            scene,
            vom,
            codebook,
            projector,
            calibration,
        })
    }

    pub fn ue_location(&self, block: u64) -> Point2D {
        ue_location(&self.cfg, &self.scene, block)
    }
}

fn ue_location(cfg: &ExperimentConfig, scene: &Scene, block: u64) -> Point2D {
    match cfg.ue.placement {
        config::UePlacement::Fixed => cfg.ue.location,
        config::UePlacement::UniformRoi => {
            let mut rng = rng_from(cfg.master_seed, &[block, Stream::Scene as u64]);
            let r = scene.roi;
            Point2D::new(
                r.x_min + (r.x_max - r.x_min) * rng.random::<f64>(),
                r.y_min + (r.y_max - r.y_min) * rng.random::<f64>(),
            )
        }
    }
}

/// Seed of the channel realization in `block`; shared by every pilot length.
pub fn channel_seed(master: u64, block: u64) -> u64 {
    derive_seed(master, &[block])
}

/// Seed of the pilots and noise in `block` at pilot length `t_p`.
pub fn trial_seed(master: u64, block: u64, t_p: usize) -> u64 {
    derive_seed(master, &[block, t_p as u64])
}

/// Mean channel energies over calibration draws and the implied noise levels.
///
/// With power-normalized pilots, `E|z^H h|^2 = P ||h||^2 / N` and
/// `E|(H Z)_{n,t}|^2 = P ||H||_F^2 / N^2`.
pub fn calibrate(cfg: &ExperimentConfig, geom: &ArrayGeometry, scene: &Scene) -> Result<Calibration> {
    let draws = cfg.snr.calibration_draws;
    let energies = (0..draws)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.master_seed, &[Stream::Calibration as u64, i as u64]);
            let u = ue_location(cfg, scene, u64::MAX - i as u64);
            let r = realize_channel(scene, geom, u, seed, &cfg.coefficients)?;
            Ok((r.h.norm_squared(), r.sensing.norm_squared()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let eh = energies.iter().map(|e| e.0).sum::<f64>() / draws as f64;
    let es = energies.iter().map(|e| e.1).sum::<f64>() / draws as f64;
    if eh == 0.0 {
        return Err(Error::ZeroVector("mean downlink channel"));
    }
    let n = geom.len() as f64;
    let p = cfg.snr.pilot_power;
    Ok(Calibration {
        mean_channel_energy: eh,
        mean_sensing_energy: es,
        pilot_noise: p * eh / n / db(cfg.snr.pilot_db),
        echo_noise: p * es / (n * n) / db(cfg.snr.echo_db),
        data_snr: db(cfg.snr.data_db) / eh,
        draws,
    })
}

/// Outcome of one block at one pilot length.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome {
    pub block: u64,
    pub t_p: usize,
    pub ue: Point2D,
    /// Dimension of the extracted dynamic subspace.
    pub rho: usize,
    /// `||E_tilde||_F^2 / ||E||_F^2`.
    pub residual_energy: f64,
    /// Worst first-order-condition residual over the ridge solves.
    pub foc_residual: f64,
    /// Hash of the channel, echo and observations shared by all schemes.
    pub digest: u64,
    pub metrics: Vec<TrialMetrics>,
}

fn hash_matrix<H: Hasher>(m: &CMatrix, state: &mut H) {
    m.shape().hash(state);
    for z in m.iter() {
        z.re.to_bits().hash(state);
        z.im.to_bits().hash(state);
    }
}

fn hash_vector<H: Hasher>(v: &CVector, state: &mut H) {
    v.len().hash(state);
    for z in v.iter() {
        z.re.to_bits().hash(state);
        z.im.to_bits().hash(state);
    }
}

/// Runs every configured scheme on one realization: channel draw, echo,
/// clutter suppression, subspace extraction, pilots, feedback, estimation.
pub fn run_block(ctx: &ExperimentContext, block: u64, t_p: usize) -> Result<BlockOutcome> {
    let cfg = &ctx.cfg;
    let n = ctx.geom.len();
    let u = ctx.ue_location(block);
    let chan = realize_channel(&ctx.scene, &ctx.geom, u, channel_seed(cfg.master_seed, block), &cfg.coefficients)?;
    let seed = trial_seed(cfg.master_seed, block, t_p);
    let cal = &ctx.calibration;

    let z = make_pilots(n, t_p, cfg.snr.pilot_power, cfg.pilots.kind, seed)?;
    let echo = simulate_echo(&chan.sensing, &z.z, cal.echo_noise, seed)?;
    let e_tilde = suppress_clutter(&ctx.projector, &echo)?;
    let e_norm = echo.e.norm();
    let residual_energy = if e_norm == 0.0 { 0.0 } else { (e_tilde.norm() / e_norm).powi(2) };
    let dynamic = if e_tilde.norm() <= ZERO_RESIDUAL_TOL * e_norm {
        extract_dynamic_subspace(&CMatrix::zeros(n, t_p), cfg.subspace.eta, cfg.subspace.rho_max)?
    } else {
        extract_dynamic_subspace(&e_tilde, cfg.subspace.eta, cfg.subspace.rho_max)?
    };

    let y = observe_pilots(&z, &chan.h, cal.pilot_noise, seed)?;
    let y_hat = feedback(&y, &cfg.feedback)?;

    let mut hasher = DefaultHasher::new();
    hash_vector(&chan.h, &mut hasher);
    hash_matrix(&echo.e, &mut hasher);
    hash_vector(&y, &mut hasher);
    hash_vector(&y_hat, &mut hasher);
    let digest = hasher.finish();

    let a_sta = ctx.geom.steering_matrix(&ctx.vom.lookup(u)?)?;
    let mut foc: f64 = 0.0;
    let mut metrics = Vec::with_capacity(cfg.schemes.len());
    for &scheme in &cfg.schemes {
        let h_hat = match scheme {
            Scheme::Proposed => {
                let e = estimate_joint(&y_hat, &z, &a_sta, &dynamic.basis, &cfg.ridge, cal.pilot_noise)?;
                foc = foc.max(e.foc_residual);
                e.h_hat
            }
            Scheme::VomOnly => {
                let e = estimate_vom_only(
                    &y_hat,
                    &z,
                    &a_sta,
                    &ctx.codebook,
                    cfg.vom_only.n_dyn_atoms,
                    &cfg.ridge,
                    cal.pilot_noise,
                )?;
                foc = foc.max(e.foc_residual);
                e.h_hat
            }
            Scheme::Omp => estimate_omp(&y_hat, &z, &ctx.codebook, cfg.omp.sparsity)?.h_hat,
            Scheme::PerfectCsi => chan.h.clone(),
        };
        metrics.push(evaluate(scheme, &chan.h, &h_hat, cal.data_snr, t_p, cfg.block_length)?);
    }
    Ok(BlockOutcome {
        block,
        t_p,
        ue: u,
        rho: dynamic.rho,
        residual_energy,
        foc_residual: foc,
        digest,
        metrics,
    })
}

/// Worker count from the environment override, if set and valid.
pub fn workers_from_env() -> Option<usize> {
    let v = std::env::var(WORKERS_ENV).ok()?;
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            warn!("ignoring {WORKERS_ENV}={v:?}: expected a positive integer");
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub table: ResultsTable,
    /// Ordered by `(T_p position in the config, block)`.
    pub outcomes: Vec<BlockOutcome>,
}

impl SweepOutput {
    pub fn mean_rho(&self, t_p: usize) -> f64 {
        let v: Vec<f64> = self.outcomes.iter().filter(|o| o.t_p == t_p).map(|o| o.rho as f64).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    /// Per-trial metrics as CSV: `scheme,t_p,block,nmse,rate,beam_gain,rho`.
    pub fn trials_csv(&self) -> String {
        let mut s = String::from("scheme,t_p,block,nmse,rate,beam_gain,rho\n");
        for o in &self.outcomes {
            for m in &o.metrics {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    m.scheme, m.t_p, o.block, m.nmse, m.rate, m.beam_gain, o.rho
                ));
            }
        }
        s
    }
}

/// Runs `trials` blocks starting at `first_block` for each pilot length.
pub fn run_blocks(ctx: &ExperimentContext, pilot_lengths: &[usize], first_block: u64, trials: usize) -> Result<SweepOutput> {
    let work: Vec<(usize, u64)> = pilot_lengths
        .iter()
        .flat_map(|&t| (0..trials as u64).map(move |b| (t, first_block + b)))
        .collect();
    let job = || {
        work.par_iter()
            .map(|&(t, b)| run_block(ctx, b, t))
            .collect::<Result<Vec<BlockOutcome>>>()
    };
    let outcomes = match workers_from_env() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
            .install(job)?,
        None => job()?,
    };
    let all: Vec<TrialMetrics> = outcomes.iter().flat_map(|o| o.metrics.iter().copied()).collect();
    Ok(SweepOutput {
        table: ResultsTable::aggregate(&all),
        outcomes,
    })
}

/// Full sweep over the configured pilot lengths.
pub fn run_sweep(ctx: &ExperimentContext) -> Result<SweepOutput> {
    run_blocks(ctx, &ctx.cfg.pilot_lengths, 0, ctx.cfg.trials)
}

#[derive(Serialize)]
struct BuildInfo {
    package: &'static str,
    version: &'static str,
    git_commit: String,
    profile: &'static str,
}

#[derive(Serialize)]
struct Notes {
    vom_lookup: &'static str,
    pilot_snr: &'static str,
    echo_snr: &'static str,
    data_snr: &'static str,
}

#[derive(Serialize)]
struct Metadata<'a> {
    build: BuildInfo,
    calibration: Calibration,
    notes: Notes,
    mean_rho: Vec<(usize, f64)>,
    config: &'a ExperimentConfig,
}

fn git_commit() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Metadata document: build identifiers, calibration, definitions and the
/// resolved configuration.
pub fn metadata_toml(ctx: &ExperimentContext, out: &SweepOutput) -> Result<String> {
    let meta = Metadata {
        build: BuildInfo {
            package: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            git_commit: git_commit(),
            profile: if cfg!(debug_assertions) { "debug" } else { "release" },
        },
        calibration: ctx.calibration,
        notes: Notes {
            vom_lookup: "nearest grid point",
            pilot_snr: "P E[||h||^2] / (N sigma^2) per observation symbol",
            echo_snr: "P E[||H||_F^2] / (N^2 sigma_s^2) per antenna and symbol",
            data_snr: "P E[||h||^2] / sigma^2",
        },
        mean_rho: ctx.cfg.pilot_lengths.iter().map(|&t| (t, out.mean_rho(t))).collect(),
        config: &ctx.cfg,
    };
    toml::to_string(&meta).map_err(|e| Error::Config(format!("metadata encoding failed: {e}")))
}

/// Writes `results.csv`, `metadata.toml` and `trials.csv` into `dir`.
pub fn emit_results(ctx: &ExperimentContext, out: &SweepOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv = dir.join("results.csv");
    out.table.write_csv(&csv)?;
    let meta = dir.join("metadata.toml");
    std::fs::write(&meta, metadata_toml(ctx, out)?).map_err(|e| Error::io(&meta, e))?;
    let trials = dir.join("trials.csv");
    std::fs::write(&trials, out.trials_csv()).map_err(|e| Error::io(&trials, e))?;
    Ok(vec![csv, meta, trials])
}
