//! Geometric scene description and per-block channel synthesis.
//!
//! Static environment objects come in two flavours: compact point scatterers
//! (Type-1) and finite smooth reflectors modelled as wall segments (Type-2).
//! Dynamic sensing targets are discs that are resampled into a handful of
//! point scatterers once per coherence block.

use log::warn;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, Point2D};
use crate::linalg::{CMatrix, CVector};
use crate::rng::{complex_gaussian, rng_from, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Type1Object {
    pub location: Point2D,
    /// `E[|reflection factor|^2]`.
    pub mean_interaction_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Type2Object {
    pub endpoint_a: Point2D,
    pub endpoint_b: Point2D,
    pub mean_reflection_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingTargetCluster {
    pub center: Point2D,
    pub radius: f64,
    pub num_points: usize,
    pub mean_scatter_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, p: Point2D) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn corners(&self) -> [Point2D; 4] {
        [
            Point2D::new(self.x_min, self.y_min),
            Point2D::new(self.x_max, self.y_min),
            Point2D::new(self.x_min, self.y_max),
            Point2D::new(self.x_max, self.y_max),
        ]
    }

    fn validate(&self, what: &str) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(Error::InvalidArgument(format!("{what}: malformed rectangle {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub type1: Vec<Type1Object>,
    pub type2: Vec<Type2Object>,
    pub targets: Vec<SensingTargetCluster>,
    /// Region from which UE locations are drawn and over which the map is gridded.
    pub roi: Rect,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        self.roi.validate("scene roi")?;
        for (i, o) in self.type1.iter().enumerate() {
            if !o.location.is_finite() || !(o.mean_interaction_gain > 0.0) || !o.mean_interaction_gain.is_finite() {
                return Err(Error::InvalidArgument(format!("type-1 object {i} is malformed: {o:?}")));
            }
        }
        for (i, w) in self.type2.iter().enumerate() {
            let g = w.mean_reflection_gain;
            if w.endpoint_a.distance(w.endpoint_b) == 0.0 || !(g > 0.0 && g <= 1.0) {
                return Err(Error::InvalidArgument(format!("type-2 object {i} is malformed: {w:?}")));
            }
        }
        for (i, t) in self.targets.iter().enumerate() {
            if !(t.radius >= 0.0) || t.num_points == 0 || !(t.mean_scatter_gain >= 0.0) || !t.center.is_finite() {
                return Err(Error::InvalidArgument(format!("sensing target {i} is malformed: {t:?}")));
            }
        }
        Ok(())
    }

    pub fn has_static_objects(&self) -> bool {
        !self.type1.is_empty() || !self.type2.is_empty()
    }

    /// Same scene without its dynamic targets.
    pub fn static_only(&self) -> Scene {
        Scene {
            targets: Vec::new(),
            ..self.clone()
        }
    }

    /// Logs a warning for every generated interaction point that falls
    /// outside the radiative near field of `geom`. Returns the number of
    /// offending points.
    pub fn warn_near_field(&self, geom: &ArrayGeometry) -> usize {
        let mut pts: Vec<Point2D> = self.type1.iter().map(|o| o.location).collect();
        pts.extend(self.targets.iter().map(|t| t.center));
        pts.extend(self.roi.corners());
        let report = geom.validate_roi(&pts);
        let mut bad: Vec<Point2D> = report.violations.iter().map(|v| v.point).collect();
        bad.dedup();
        for p in &bad {
            warn!(
                "interaction point {p} lies outside the radiative near field ({:.3} m, {:.3} m)",
                report.r_lower, report.r_upper
            );
        }
        bad.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathKind {
    T1,
    T2,
    ST,
}

impl PathKind {
    pub fn is_static(self) -> bool {
        !matches!(self, PathKind::ST)
    }
}

/// Which channel an interaction point feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Comm,
    Sensing,
    Both,
}

impl Role {
    pub fn comm(self) -> bool {
        matches!(self, Role::Comm | Role::Both)
    }

    pub fn sensing(self) -> bool {
        matches!(self, Role::Sensing | Role::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interaction {
    pub point: Point2D,
    pub kind: PathKind,
    pub role: Role,
    pub mean_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathComponent {
    pub interaction_point: Point2D,
    /// `beta(s, u)`; zero for sensing-only components.
    pub comm_coefficient: Complex64,
    /// Round-trip coefficient; zero for communication-only components.
    pub roundtrip_coefficient: Complex64,
    pub kind: PathKind,
}

#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h: CVector,
    pub sensing: CMatrix,
    pub components: Vec<PathComponent>,
    pub block_seed: u64,
}

/// Distribution of the per-block reflection factor `g` with `E|g|^2` equal
/// to the object's mean gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainDistribution {
    #[default]
    ComplexGaussian,
    /// Constant modulus `sqrt(mean gain)` with uniform phase.
    RandomPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoefficientModel {
    pub distribution: GainDistribution,
    /// Reuse one reflection factor for the communication and the round-trip
    /// coefficient of a point; otherwise both are drawn independently.
    pub shared_reflectivity: bool,
}

impl Default for CoefficientModel {
    fn default() -> Self {
        CoefficientModel {
            distribution: GainDistribution::ComplexGaussian,
            shared_reflectivity: true,
        }
    }
}

impl CoefficientModel {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, mean_gain: f64) -> Complex64 {
        match self.distribution {
            GainDistribution::ComplexGaussian => complex_gaussian(rng, mean_gain),
            GainDistribution::RandomPhase => {
                let phase = rng.random::<f64>() * std::f64::consts::TAU;
                Complex64::from_polar(mean_gain.sqrt(), phase)
            }
        }
    }

    /// Closed-form `E|g|^2`, available for every built-in distribution.
    pub fn second_moment(&self, mean_gain: f64) -> Option<f64> {
        Some(mean_gain)
    }
}

/// Specular reflection point of the path `src -> wall -> dst`.
///
/// Mirror-image construction: reflect `src` across the supporting line and
/// intersect the segment `src' -> dst` with the wall. `None` when the two
/// endpoints lie on opposite sides (or on the line), or when the hit falls
/// outside the finite segment.
pub fn specular_point(wall: &Type2Object, src: Point2D, dst: Point2D) -> Result<Option<Point2D>> {
    let a = wall.endpoint_a;
    let along = wall.endpoint_b - a;
    let len = along.norm();
    if len == 0.0 || !len.is_finite() {
        return Err(Error::InvalidArgument("degenerate wall with zero length".into()));
    }
    let dir = along * (1.0 / len);
    let normal = Point2D::new(-dir.y, dir.x);
    let ds = (src - a).dot(normal);
    let dd = (dst - a).dot(normal);
    if ds * dd <= 0.0 {
        return Ok(None);
    }
    let image = src - normal * (2.0 * ds);
    let t = ds / (ds + dd);
    let hit = image + (dst - image) * t;
    let tau = (hit - a).dot(dir);
    let slack = 1e-12 * len;
    if tau < -slack || tau > len + slack {
        return Ok(None);
    }
    Ok(Some(hit))
}

/// Uniform samples in the target disc; fixed for a given block seed.
pub fn sample_cluster(cluster: &SensingTargetCluster, block_seed: u64, cluster_index: usize) -> Vec<Point2D> {
    let mut rng = rng_from(block_seed, &[Stream::Scene as u64, cluster_index as u64]);
    (0..cluster.num_points)
        .map(|_| {
            let r = cluster.radius * rng.random::<f64>().sqrt();
            let phi = rng.random::<f64>() * std::f64::consts::TAU;
            cluster.center + Point2D::new(r * phi.cos(), r * phi.sin())
        })
        .collect()
}

/// Static interaction points (Type-1 and Type-2) seen from the array for a UE at `u`.
pub fn static_interactions(scene: &Scene, geom: &ArrayGeometry, u: Point2D) -> Result<Vec<Interaction>> {
    let q0 = geom.reference();
    let mut out = Vec::new();
    for o in &scene.type1 {
        out.push(Interaction {
            point: o.location,
            kind: PathKind::T1,
            role: Role::Both,
            mean_gain: o.mean_interaction_gain,
        });
    }
    for w in &scene.type2 {
        if let Some(s) = specular_point(w, q0, u)? {
            out.push(Interaction {
                point: s,
                kind: PathKind::T2,
                role: Role::Comm,
                mean_gain: w.mean_reflection_gain,
            });
        }
        if let Some(s) = specular_point(w, q0, q0)? {
            out.push(Interaction {
                point: s,
                kind: PathKind::T2,
                role: Role::Sensing,
                mean_gain: w.mean_reflection_gain,
            });
        }
    }
    Ok(out)
}

/// All primary interaction points for a UE at `u` in the block `block_seed`.
pub fn enumerate_interactions(
    scene: &Scene,
    geom: &ArrayGeometry,
    u: Point2D,
    block_seed: u64,
) -> Result<Vec<Interaction>> {
    let mut out = static_interactions(scene, geom, u)?;
    for (ci, cluster) in scene.targets.iter().enumerate() {
        for p in sample_cluster(cluster, block_seed, ci) {
            out.push(Interaction {
                point: p,
                kind: PathKind::ST,
                role: Role::Both,
                mean_gain: cluster.mean_scatter_gain,
            });
        }
    }
    Ok(out)
}

/// Draws `beta(s,u) = g (lambda/4pi) exp(-j k |s-u|) / |s-u|` and the
/// round-trip coefficient for every interaction.
pub fn draw_coefficients(
    points: &[Interaction],
    u: Point2D,
    geom: &ArrayGeometry,
    block_seed: u64,
    model: &CoefficientModel,
) -> Result<Vec<PathComponent>> {
    let mut rng = rng_from(block_seed, &[Stream::Channel as u64]);
    let k = geom.wavenumber();
    let amp = geom.amplitude_factor();
    let mut out = Vec::with_capacity(points.len());
    for it in points {
        let g = model.draw(&mut rng, it.mean_gain);
        let g_rt = model.draw(&mut rng, it.mean_gain);
        let comm = if it.role.comm() {
            let d = it.point.distance(u);
            if d <= 1e-12 * geom.wavelength() {
                return Err(Error::CoincidentPoint {
                    x: u.x,
                    y: u.y,
                    what: "an interaction point",
                });
            }
            g * Complex64::from_polar(amp / d, -k * d)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let roundtrip = if it.role.sensing() {
            if model.shared_reflectivity {
                g
            } else {
                g_rt
            }
        } else {
            Complex64::new(0.0, 0.0)
        };
        out.push(PathComponent {
            interaction_point: it.point,
            comm_coefficient: comm,
            roundtrip_coefficient: roundtrip,
            kind: it.kind,
        });
    }
    Ok(out)
}

/// `h = sum_s beta(s,u) theta(s)`.
pub fn synthesize_downlink(components: &[PathComponent], geom: &ArrayGeometry) -> Result<CVector> {
    let mut h = CVector::zeros(geom.len());
    for c in components {
        if c.comm_coefficient != Complex64::new(0.0, 0.0) {
            let v = geom.steering_vector(c.interaction_point)?;
            h.axpy(c.comm_coefficient, &v, Complex64::new(1.0, 0.0));
        }
    }
    Ok(h)
}

/// `H = sum_s gamma(s) theta(s) theta(s)^T` (plain transpose).
pub fn synthesize_sensing(components: &[PathComponent], geom: &ArrayGeometry) -> Result<CMatrix> {
    let n = geom.len();
    let mut h = CMatrix::zeros(n, n);
    for c in components {
        if c.roundtrip_coefficient != Complex64::new(0.0, 0.0) {
            let v = geom.steering_vector(c.interaction_point)?;
            h.ger(c.roundtrip_coefficient, &v, &v, Complex64::new(1.0, 0.0));
        }
    }
    Ok(h)
}

/// Full channel realization for one coherence block.
pub fn realize_channel(
    scene: &Scene,
    geom: &ArrayGeometry,
    u: Point2D,
    block_seed: u64,
    model: &CoefficientModel,
) -> Result<ChannelRealization> {
    let points = enumerate_interactions(scene, geom, u, block_seed)?;
    let components = draw_coefficients(&points, u, geom, block_seed, model)?;
    let h = synthesize_downlink(&components, geom)?;
    let sensing = synthesize_sensing(&components, geom)?;
    Ok(ChannelRealization {
        h,
        sensing,
        components,
        block_seed,
    })
}

/// Recipe for a randomly placed population of Type-1 objects.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomType1 {
    pub count: usize,
    pub region: Rect,
    /// Mean gains are log-uniform between these two levels (dB).
    pub gain_db_min: f64,
    pub gain_db_max: f64,
    pub seed: u64,
}

impl RandomType1 {
    pub fn generate(&self) -> Result<Vec<Type1Object>> {
        self.region.validate("random type-1 region")?;
        if !(self.gain_db_min <= self.gain_db_max) {
            return Err(Error::InvalidArgument("gain_db_min must not exceed gain_db_max".into()));
        }
        let mut rng = rng_from(self.seed, &[Stream::Scene as u64]);
        let r = self.region;
        Ok((0..self.count)
            .map(|_| {
                let x = r.x_min + (r.x_max - r.x_min) * rng.random::<f64>();
                let y = r.y_min + (r.y_max - r.y_min) * rng.random::<f64>();
                let db = self.gain_db_min + (self.gain_db_max - self.gain_db_min) * rng.random::<f64>();
                Type1Object {
                    location: Point2D::new(x, y),
                    mean_interaction_gain: 10f64.powf(db / 10.0),
                }
            })
            .collect())
    }
}

/// Serializable scene description: explicit objects plus an optional random
/// population of Type-1 objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneConfig {
    pub roi: Rect,
    pub random_type1: Vec<RandomType1>,
    pub type1: Vec<Type1Object>,
    pub type2: Vec<Type2Object>,
    pub targets: Vec<SensingTargetCluster>,
}

impl Default for SceneConfig {
    /// Static objects scattered over [-7, 7] x [5, 15] m and one dynamic
    /// cluster centred at (-1.5, 5) m with radius 1.5 m.
    fn default() -> Self {
        SceneConfig {
            roi: Rect {
                x_min: -4.0,
                x_max: 4.0,
                y_min: 16.0,
                y_max: 24.0,
            },
            random_type1: vec![RandomType1 {
                count: 12,
                region: Rect {
                    x_min: -7.0,
                    x_max: 7.0,
                    y_min: 5.0,
                    y_max: 15.0,
                },
                gain_db_min: -40.0,
                gain_db_max: 0.0,
                seed: 1,
            }],
            type1: Vec::new(),
            type2: Vec::new(),
            targets: vec![SensingTargetCluster {
                center: Point2D::new(-1.5, 5.0),
                radius: 1.5,
                num_points: 3,
                mean_scatter_gain: 0.05,
            }],
        }
    }
}

impl SceneConfig {
    pub fn resolve(&self) -> Result<Scene> {
        let mut type1 = Vec::new();
        for r in &self.random_type1 {
            type1.extend(r.generate()?);
        }
        type1.extend(self.type1.iter().copied());
        let scene = Scene {
            type1,
            type2: self.type2.clone(),
            targets: self.targets.clone(),
            roi: self.roi,
        };
        scene.validate()?;
        Ok(scene)
    }
}
