//! Virtual object map: a library of static interaction points plus, for each
//! sampled UE location, the indices of the dominant library points, and one
//! entry for the array itself used to suppress static echo clutter.

use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, Point2D};
use crate::rng::{rng_from, Stream};
use crate::scene::{static_interactions, CoefficientModel, Interaction, Rect, Scene};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VirtualObjectLibrary {
    pub locations: Vec<Point2D>,
}

impl VirtualObjectLibrary {
    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VomCommEntry {
    pub grid_location: Point2D,
    /// 0-based library indices, strongest first.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VomSensEntry {
    pub indices: Vec<usize>,
}

/// How the long-term expectations are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Expectation {
    Analytic,
    MonteCarlo { trials: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VomConfig {
    pub j: usize,
    pub k: usize,
    pub grid_spacing: f64,
    pub cluster_radius: f64,
    pub expectation: Expectation,
    pub seed: u64,
}

impl Default for VomConfig {
    fn default() -> Self {
        VomConfig {
            j: 5,
            k: 20,
            grid_spacing: 1.0,
            cluster_radius: 0.5,
            expectation: Expectation::Analytic,
            seed: 0,
        }
    }
}

impl VomConfig {
    pub fn validate(&self) -> Result<()> {
        if self.j == 0 || self.k == 0 {
            return Err(Error::InvalidArgument("J and K must be at least 1".into()));
        }
        if !(self.grid_spacing > 0.0) || !(self.cluster_radius > 0.0) {
            return Err(Error::InvalidArgument("grid spacing and cluster radius must be positive".into()));
        }
        if let Expectation::MonteCarlo { trials: 0 } = self.expectation {
            return Err(Error::InvalidArgument("Monte Carlo expectation needs at least one draw".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VomBuildMetadata {
    pub seed: u64,
    /// 0 for closed-form expectations.
    pub mc_trials: usize,
    pub cluster_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vom {
    pub library: VirtualObjectLibrary,
    pub comm_entries: Vec<VomCommEntry>,
    pub sens_entry: VomSensEntry,
    pub grid_spacing: f64,
    pub roi: Rect,
    pub j: usize,
    pub k: usize,
    pub metadata: VomBuildMetadata,
}

/// Static interaction points seen from the array over a set of UE samples.
/// Type-1 locations and wall monostatic points appear once, wall specular
/// points once per sample.
pub fn collect_virtual_points(scene: &Scene, geom: &ArrayGeometry, ue_samples: &[Point2D]) -> Result<Vec<Point2D>> {
    if ue_samples.is_empty() {
        return Err(Error::InvalidArgument("at least one UE sample is required".into()));
    }
    let mut fixed = Vec::new();
    let mut moving = Vec::new();
    for (i, u) in ue_samples.iter().enumerate() {
        for it in static_interactions(scene, geom, *u)? {
            if it.role.sensing() {
                if i == 0 {
                    fixed.push(it.point);
                }
            } else {
                moving.push(it.point);
            }
        }
    }
    fixed.extend(moving);
    Ok(fixed)
}

/// Greedy leader clustering in scan order. A point joins the first cluster
/// whose leader lies within `radius`; library locations are centroids.
pub fn cluster_points(points: &[Point2D], radius: f64) -> Result<VirtualObjectLibrary> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("cluster radius must be positive, got {radius}")));
    }
    let mut leaders: Vec<Point2D> = Vec::new();
    let mut sums: Vec<(Point2D, usize)> = Vec::new();
    for &p in points {
        match leaders.iter().position(|l| l.distance(p) <= radius) {
            Some(c) => {
                sums[c].0 = sums[c].0 + p;
                sums[c].1 += 1;
            }
            None => {
                leaders.push(p);
                sums.push((p, 1));
            }
        }
    }
    Ok(VirtualObjectLibrary {
        locations: sums.into_iter().map(|(s, n)| s * (1.0 / n as f64)).collect(),
    })
}

/// Options shared by the two ranking metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    pub expectation: Expectation,
    pub model: CoefficientModel,
    /// Interactions within this distance of `s` are credited to `s`.
    pub association_radius: f64,
    pub seed: u64,
}

impl MetricOptions {
    pub fn from_config(cfg: &VomConfig, model: CoefficientModel) -> Self {
        MetricOptions {
            expectation: cfg.expectation,
            model,
            association_radius: cfg.cluster_radius,
            seed: cfg.seed,
        }
    }
}

fn second_moment(it: &Interaction, s: Point2D, salt: Point2D, opts: &MetricOptions) -> f64 {
    match (opts.expectation, opts.model.second_moment(it.mean_gain)) {
        (Expectation::Analytic, Some(m)) => m,
        (Expectation::Analytic, None) => mc_moment(it, s, salt, opts, 1000),
        (Expectation::MonteCarlo { trials }, _) => mc_moment(it, s, salt, opts, trials),
    }
}

fn mc_moment(it: &Interaction, s: Point2D, salt: Point2D, opts: &MetricOptions, trials: usize) -> f64 {
    let path = [
        Stream::VomBuild as u64,
        s.x.to_bits(),
        s.y.to_bits(),
        salt.x.to_bits(),
        salt.y.to_bits(),
        it.point.x.to_bits(),
        it.point.y.to_bits(),
    ];
    let mut rng = rng_from(opts.seed, &path);
    let total: f64 = (0..trials.max(1)).map(|_| opts.model.draw(&mut rng, it.mean_gain).norm_sqr()).sum();
    total / trials.max(1) as f64
}

fn associated<'a>(s: Point2D, its: &'a [Interaction], radius: f64) -> impl Iterator<Item = &'a Interaction> + 'a {
    its.iter().filter(move |it| it.point.distance(s) <= radius)
}

/// `E[|beta(s,u)|^2] * |theta(s)|^2`, crediting `s` with the static
/// communication interactions of `u` that lie within the association radius.
pub fn comm_metric(s: Point2D, u: Point2D, scene: &Scene, geom: &ArrayGeometry, opts: &MetricOptions) -> Result<f64> {
    let its: Vec<Interaction> = static_interactions(scene, geom, u)?.into_iter().filter(|i| i.role.comm()).collect();
    comm_metric_from(s, u, &its, geom, opts, geom.steering_vector(s)?.norm_squared())
}

fn comm_metric_from(
    s: Point2D,
    u: Point2D,
    its: &[Interaction],
    geom: &ArrayGeometry,
    opts: &MetricOptions,
    theta_sq: f64,
) -> Result<f64> {
    let d = s.distance(u);
    if d <= 1e-12 * geom.wavelength() {
        return Err(Error::CoincidentPoint {
            x: u.x,
            y: u.y,
            what: "a virtual object",
        });
    }
    let g: f64 = associated(s, its, opts.association_radius).map(|it| second_moment(it, s, u, opts)).sum();
    let amp = geom.amplitude_factor() / d;
    Ok(g * amp * amp * theta_sq)
}

/// `E[|gamma(s)|^2] * |theta(s)|^4` over the static sensing interactions.
pub fn sens_metric(s: Point2D, scene: &Scene, geom: &ArrayGeometry, opts: &MetricOptions) -> Result<f64> {
    let its = sensing_interactions(scene, geom)?;
    let theta_sq = geom.steering_vector(s)?.norm_squared();
    Ok(sens_metric_from(s, &its, geom, opts, theta_sq))
}

fn sens_metric_from(s: Point2D, its: &[Interaction], geom: &ArrayGeometry, opts: &MetricOptions, theta_sq: f64) -> f64 {
    let q0 = geom.reference();
    let g: f64 = associated(s, its, opts.association_radius).map(|it| second_moment(it, s, q0, opts)).sum();
    g * theta_sq * theta_sq
}

fn sensing_interactions(scene: &Scene, geom: &ArrayGeometry) -> Result<Vec<Interaction>> {
    Ok(static_interactions(scene, geom, geom.reference())?
        .into_iter()
        .filter(|i| i.role.sensing())
        .collect())
}

/// Indices of the `count` largest metrics, ties broken by ascending index.
pub fn top_indices(metrics: &[f64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..metrics.len()).collect();
    idx.sort_by(|&a, &b| metrics[b].total_cmp(&metrics[a]).then(a.cmp(&b)));
    idx.truncate(count);
    idx
}

/// Grid over the ROI, x-major, so scan order is lexicographic.
pub fn roi_grid(roi: &Rect, spacing: f64) -> Vec<Point2D> {
    let nx = ((roi.x_max - roi.x_min) / spacing + 1e-9).floor() as usize + 1;
    let ny = ((roi.y_max - roi.y_min) / spacing + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            out.push(Point2D::new(roi.x_min + i as f64 * spacing, roi.y_min + j as f64 * spacing));
        }
    }
    out
}

pub fn build_vom(scene: &Scene, geom: &ArrayGeometry, cfg: &VomConfig, model: &CoefficientModel) -> Result<Vom> {
    cfg.validate()?;
    let grid = roi_grid(&scene.roi, cfg.grid_spacing);
    let points = collect_virtual_points(scene, geom, &grid)?;
    let library = cluster_points(&points, cfg.cluster_radius)?;
    let l = library.len();
    if l == 0 {
        return Err(Error::EmptyLibrary);
    }
    if cfg.j > l {
        warn!("J = {} exceeds the library size {l}; clamping", cfg.j);
    }
    if cfg.k > l {
        warn!("K = {} exceeds the library size {l}; clamping", cfg.k);
    }
    let opts = MetricOptions::from_config(cfg, *model);
    let theta_sq = library
        .locations
        .iter()
        .map(|s| geom.steering_vector(*s).map(|v| v.norm_squared()))
        .collect::<Result<Vec<f64>>>()?;

    let comm_entries = grid
        .par_iter()
        .map(|&u| {
            let its: Vec<Interaction> = static_interactions(scene, geom, u)?.into_iter().filter(|i| i.role.comm()).collect();
            let m = library
                .locations
                .iter()
                .zip(&theta_sq)
                .map(|(s, t)| comm_metric_from(*s, u, &its, geom, &opts, *t))
                .collect::<Result<Vec<f64>>>()?;
            Ok(VomCommEntry {
                grid_location: u,
                indices: top_indices(&m, cfg.j),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let sens_its = sensing_interactions(scene, geom)?;
    let rho: Vec<f64> = library
        .locations
        .iter()
        .zip(&theta_sq)
        .map(|(s, t)| sens_metric_from(*s, &sens_its, geom, &opts, *t))
        .collect();

    Ok(Vom {
        library,
        comm_entries,
        sens_entry: VomSensEntry {
            indices: top_indices(&rho, cfg.k),
        },
        grid_spacing: cfg.grid_spacing,
        roi: scene.roi,
        j: cfg.j,
        k: cfg.k,
        metadata: VomBuildMetadata {
            seed: cfg.seed,
            mc_trials: match cfg.expectation {
                Expectation::Analytic => 0,
                Expectation::MonteCarlo { trials } => trials,
            },
            cluster_radius: cfg.cluster_radius,
        },
    })
}

pub const VOM_FORMAT_TAG: &str = "nfvom-map 1";

impl Vom {
    /// Index of the grid entry nearest to `u`; ties go to the
    /// lexicographically smallest grid point.
    pub fn nearest_entry(&self, u: Point2D) -> Result<usize> {
        if !u.is_finite() || !self.roi.contains(u) {
            return Err(Error::OutsideRoi { x: u.x, y: u.y });
        }
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (i, e) in self.comm_entries.iter().enumerate() {
            let d = e.grid_location.distance(u);
            if d < best_d {
                best_d = d;
                best = Some(i);
            }
        }
        best.ok_or(Error::EmptyLibrary)
    }

    /// Library points of the dominant static objects for a UE at `u`.
    pub fn lookup(&self, u: Point2D) -> Result<Vec<Point2D>> {
        let e = &self.comm_entries[self.nearest_entry(u)?];
        Ok(e.indices.iter().map(|&i| self.library.locations[i]).collect())
    }

    pub fn sensing_points(&self) -> Vec<Point2D> {
        self.sens_entry.indices.iter().map(|&i| self.library.locations[i]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.library.len();
        let check = |idx: &[usize], want: usize, what: &'static str| -> Result<()> {
            let mut seen = vec![false; l];
            for &i in idx {
                if i >= l || seen[i] {
                    return Err(Error::InvalidArgument(format!("{what}: bad or repeated index {i}")));
                }
                seen[i] = true;
            }
            if idx.len() != want.min(l) {
                return Err(Error::dims(what, want.min(l), idx.len()));
            }
            Ok(())
        };
        for e in &self.comm_entries {
            check(&e.indices, self.j, "communication entry")?;
        }
        check(&self.sens_entry.indices, self.k, "sensing entry")
    }

    /// Text form. Line layout:
    ///
    /// ```text
    /// nfvom-map 1
    /// grid_spacing <m>
    /// j <J>
    /// k <K>
    /// l <L>
    /// seed <u64>
    /// mc_trials <n>
    /// cluster_radius <m>
    /// roi <x_min> <x_max> <y_min> <y_max>
    /// library            (L lines follow: <index> <x> <y>)
    /// comm <count>       (count lines follow: <grid x> <grid y> <indices...>)
    /// sens <indices...>
    /// ```
    ///
    /// Indices are 0-based; floats use the shortest representation that
    /// parses back to the same bits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let r = &self.roi;
        let _ = writeln!(s, "{VOM_FORMAT_TAG}");
        let _ = writeln!(s, "grid_spacing {}", self.grid_spacing);
        let _ = writeln!(s, "j {}", self.j);
        let _ = writeln!(s, "k {}", self.k);
        let _ = writeln!(s, "l {}", self.library.len());
        let _ = writeln!(s, "seed {}", self.metadata.seed);
        let _ = writeln!(s, "mc_trials {}", self.metadata.mc_trials);
        let _ = writeln!(s, "cluster_radius {}", self.metadata.cluster_radius);
        let _ = writeln!(s, "roi {} {} {} {}", r.x_min, r.x_max, r.y_min, r.y_max);
        let _ = writeln!(s, "library");
        for (i, p) in self.library.locations.iter().enumerate() {
            let _ = writeln!(s, "{i} {} {}", p.x, p.y);
        }
        let _ = writeln!(s, "comm {}", self.comm_entries.len());
        for e in &self.comm_entries {
            let _ = write!(s, "{} {}", e.grid_location.x, e.grid_location.y);
            for i in &e.indices {
                let _ = write!(s, " {i}");
            }
            s.push('\n');
        }
        s.push_str("sens");
        for i in &self.sens_entry.indices {
            let _ = write!(s, " {i}");
        }
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Vom> {
        let mut p = LineParser::new(text);
        let tag = p.next_line()?;
        if tag.trim() != VOM_FORMAT_TAG {
            return Err(p.err(format!("expected '{VOM_FORMAT_TAG}'")));
        }
        let grid_spacing: f64 = p.keyed("grid_spacing")?;
        let j: usize = p.keyed("j")?;
        let k: usize = p.keyed("k")?;
        let l: usize = p.keyed("l")?;
        let seed: u64 = p.keyed("seed")?;
        let mc_trials: usize = p.keyed("mc_trials")?;
        let cluster_radius: f64 = p.keyed("cluster_radius")?;
        let roi_vals: Vec<f64> = p.keyed_list("roi")?;
        if roi_vals.len() != 4 {
            return Err(p.err("roi needs four values".into()));
        }
        let roi = Rect {
            x_min: roi_vals[0],
            x_max: roi_vals[1],
            y_min: roi_vals[2],
            y_max: roi_vals[3],
        };
        p.keyed_list::<f64>("library")?;
        let mut locations = Vec::with_capacity(l);
        for i in 0..l {
            let vals: Vec<f64> = p.values()?;
            if vals.len() != 3 || vals[0] != i as f64 {
                return Err(p.err(format!("expected library row {i}")));
            }
            locations.push(Point2D::new(vals[1], vals[2]));
        }
        let count: usize = p.keyed("comm")?;
        let mut comm_entries = Vec::with_capacity(count);
        for _ in 0..count {
            let line = p.next_line()?;
            let mut it = line.split_whitespace();
            let x = p.parse_tok(it.next())?;
            let y = p.parse_tok(it.next())?;
            let indices = it.map(|t| p.parse_tok(Some(t))).collect::<Result<Vec<usize>>>()?;
            comm_entries.push(VomCommEntry {
                grid_location: Point2D::new(x, y),
                indices,
            });
        }
        let sens: Vec<usize> = p.keyed_list("sens")?;
        let vom = Vom {
            library: VirtualObjectLibrary { locations },
            comm_entries,
            sens_entry: VomSensEntry { indices: sens },
            grid_spacing,
            roi,
            j,
            k,
            metadata: VomBuildMetadata {
                seed,
                mc_trials,
                cluster_radius,
            },
        };
        vom.validate()?;
        Ok(vom)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Vom> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vom::from_text(&text)
    }
}

struct LineParser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> LineParser<'a> {
    fn new(text: &'a str) -> Self {
        LineParser {
            lines: text.lines().enumerate(),
            line_no: 0,
        }
    }

    fn err(&self, msg: String) -> Error {
        Error::Parse { line: self.line_no, msg }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        loop {
            match self.lines.next() {
                Some((i, l)) => {
                    self.line_no = i + 1;
                    if !l.trim().is_empty() {
                        return Ok(l);
                    }
                }
                None => return Err(self.err("unexpected end of input".into())),
            }
        }
    }

    fn parse_tok<T: std::str::FromStr>(&self, tok: Option<&str>) -> Result<T> {
        let tok = tok.ok_or_else(|| self.err("missing value".into()))?;
        tok.parse().map_err(|_| self.err(format!("cannot parse '{tok}'")))
    }

    fn values<T: std::str::FromStr>(&mut self) -> Result<Vec<T>> {
        let line = self.next_line()?;
        line.split_whitespace().map(|t| self.parse_tok(Some(t))).collect()
    }

    fn keyed_list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let line = self.next_line()?;
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(self.err(format!("expected '{key}'")));
        }
        it.map(|t| self.parse_tok(Some(t))).collect()
    }

    fn keyed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let mut v = self.keyed_list::<String>(key)?;
        if v.len() != 1 {
            return Err(self.err(format!("'{key}' takes exactly one value")));
        }
        self.parse_tok(v.pop().as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_ula;
    use crate::scene::{Type1Object, Type2Object};

    fn geom() -> ArrayGeometry {
        make_ula(64, 2.4e9, None, 3.0e8).unwrap()
    }

    fn roi() -> Rect {
        Rect {
            x_min: -4.0,
            x_max: 4.0,
            y_min: 16.0,
            y_max: 24.0,
        }
    }

    fn scene_of(objs: &[(f64, f64, f64)]) -> Scene {
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

    fn opts() -> MetricOptions {
        MetricOptions::from_config(&VomConfig::default(), CoefficientModel::default())
    }

    #[test]
    fn type1_points_are_location_invariant() {
        let s = scene_of(&[(1.0, 6.0, 1.0), (-2.0, 9.0, 1.0), (3.0, 12.0, 1.0)]);
        let pts = collect_virtual_points(&s, &geom(), &[Point2D::new(0.0, 20.0), Point2D::new(2.0, 18.0)]).unwrap();
        assert_eq!(pts, s.type1.iter().map(|o| o.location).collect::<Vec<_>>());
        let empty = scene_of(&[]);
        assert!(collect_virtual_points(&empty, &geom(), &[Point2D::new(0.0, 20.0)]).unwrap().is_empty());
        assert!(collect_virtual_points(&s, &geom(), &[]).is_err());
    }

    #[test]
    fn wall_gives_one_specular_point_per_sample() {
        let mut s = scene_of(&[]);
        s.type2.push(Type2Object {
            endpoint_a: Point2D::new(7.0, 0.0),
            endpoint_b: Point2D::new(7.0, 30.0),
            mean_reflection_gain: 0.5,
        });
        let samples = [Point2D::new(0.0, 20.0), Point2D::new(0.0, 16.0)];
        let pts = collect_virtual_points(&s, &geom(), &samples).unwrap();
        // monostatic foot, then one specular point per sample
        assert_eq!(pts.len(), 3);
        assert!((pts[1].y - 10.0).abs() < 1e-9);
        assert!((pts[2].y - 8.0).abs() < 1e-9);
    }

    #[test]
    fn clustering_isolated_and_collapsed() {
        let pts = [Point2D::new(0.0, 0.0), Point2D::new(5.0, 0.0), Point2D::new(0.0, 5.0)];
        assert_eq!(cluster_points(&pts, 1.0).unwrap().locations, pts.to_vec());
        let pts = [Point2D::new(0.0, 0.0), Point2D::new(0.3, 0.0), Point2D::new(0.0, 0.3)];
        let lib = cluster_points(&pts, 1.0).unwrap();
        assert_eq!(lib.len(), 1);
        assert!((lib.locations[0].x - 0.1).abs() < 1e-15 && (lib.locations[0].y - 0.1).abs() < 1e-15);
        assert!(cluster_points(&pts, 0.0).is_err());
    }

    #[test]
    fn analytic_comm_metric_closed_form() {
        let g = geom();
        let s = scene_of(&[(1.0, 8.0, 0.3)]);
        let sp = Point2D::new(1.0, 8.0);
        let u = Point2D::new(0.0, 20.0);
        let m = comm_metric(sp, u, &s, &g, &opts()).unwrap();
        let d = sp.distance(u);
        let amp = g.wavelength() / (4.0 * std::f64::consts::PI);
        let expect = 0.3 * amp * amp / (d * d) * g.steering_vector(sp).unwrap().norm_squared();
        assert!((m - expect).abs() <= 1e-14 * expect);
        let zero = scene_of(&[(1.0, 8.0, 0.0)]);
        assert_eq!(comm_metric(sp, u, &zero, &g, &opts()).unwrap(), 0.0);
        assert!(comm_metric(u, u, &s, &g, &opts()).is_err());
    }

    #[test]
    fn monte_carlo_metrics_match_closed_form() {
        let g = geom();
        let s = scene_of(&[(1.0, 8.0, 0.3)]);
        let sp = Point2D::new(1.0, 8.0);
        let u = Point2D::new(0.0, 20.0);
        let mut mc = opts();
        mc.expectation = Expectation::MonteCarlo { trials: 100_000 };
        let a = comm_metric(sp, u, &s, &g, &opts()).unwrap();
        let b = comm_metric(sp, u, &s, &g, &mc).unwrap();
        assert!((a - b).abs() < 0.03 * a, "{a} {b}");
        let a = sens_metric(sp, &s, &g, &opts()).unwrap();
        let b = sens_metric(sp, &s, &g, &mc).unwrap();
        assert!((a - b).abs() < 0.03 * a, "{a} {b}");
    }

    #[test]
    fn nearer_object_has_larger_metrics() {
        let g = geom();
        let u = Point2D::new(0.0, 20.0);
        // both 10 m from u; `a` is closer to the array
        let a = Point2D::new(0.0, 10.0);
        let b = Point2D::new(8.0, 14.0);
        assert!((a.distance(u) - b.distance(u)).abs() < 1e-12);
        let s = scene_of(&[(a.x, a.y, 1.0), (b.x, b.y, 1.0)]);
        assert!(g.steering_vector(a).unwrap().norm() > g.steering_vector(b).unwrap().norm());
        assert!(comm_metric(a, u, &s, &g, &opts()).unwrap() > comm_metric(b, u, &s, &g, &opts()).unwrap());
        assert!(sens_metric(a, &s, &g, &opts()).unwrap() > sens_metric(b, &s, &g, &opts()).unwrap());
    }

    #[test]
    fn single_object_map() {
        let s = scene_of(&[(1.0, 8.0, 1.0)]);
        let cfg = VomConfig {
            j: 1,
            k: 20,
            ..VomConfig::default()
        };
        let vom = build_vom(&s, &geom(), &cfg, &CoefficientModel::default()).unwrap();
        assert_eq!(vom.library.len(), 1);
        assert_eq!(vom.comm_entries.len(), 81);
        assert!(vom.comm_entries.iter().all(|e| e.indices == vec![0]));
        assert_eq!(vom.sens_entry.indices, vec![0]);
    }

    #[test]
    fn three_objects_match_sort_oracle() {
        let g = geom();
        let s = scene_of(&[(1.0, 8.0, 0.2), (-3.0, 12.0, 1.0), (5.0, 6.0, 0.5)]);
        let cfg = VomConfig {
            j: 2,
            ..VomConfig::default()
        };
        let vom = build_vom(&s, &g, &cfg, &CoefficientModel::default()).unwrap();
        for e in &vom.comm_entries {
            let mut m: Vec<(f64, usize)> = vom
                .library
                .locations
                .iter()
                .enumerate()
                .map(|(i, p)| (comm_metric(*p, e.grid_location, &s, &g, &opts()).unwrap(), i))
                .collect();
            m.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            assert_eq!(e.indices, vec![m[0].1, m[1].1]);
        }
    }

    #[test]
    fn empty_scene_has_no_library() {
        let s = scene_of(&[]);
        assert!(matches!(
            build_vom(&s, &geom(), &VomConfig::default(), &CoefficientModel::default()),
            Err(Error::EmptyLibrary)
        ));
    }

    #[test]
    fn lookup_nearest_and_errors() {
        let s = scene_of(&[(1.0, 8.0, 0.2), (-3.0, 12.0, 1.0), (5.0, 6.0, 0.5)]);
        let vom = build_vom(&s, &geom(), &VomConfig::default(), &CoefficientModel::default()).unwrap();
        let i = vom.nearest_entry(Point2D::new(0.0, 20.0)).unwrap();
        assert_eq!(vom.comm_entries[i].grid_location, Point2D::new(0.0, 20.0));
        let i = vom.nearest_entry(Point2D::new(0.3, 20.0)).unwrap();
        assert_eq!(vom.comm_entries[i].grid_location, Point2D::new(0.0, 20.0));
        let i = vom.nearest_entry(Point2D::new(0.5, 20.0)).unwrap();
        assert_eq!(vom.comm_entries[i].grid_location, Point2D::new(0.0, 20.0));
        assert!(matches!(vom.lookup(Point2D::new(0.0, 30.0)), Err(Error::OutsideRoi { .. })));
    }

    #[test]
    fn text_round_trip() {
        let s = scene_of(&[(1.1, 8.3, 0.2), (-3.0, 12.7, 1.0), (5.0, 6.0, 0.5)]);
        let vom = build_vom(&s, &geom(), &VomConfig::default(), &CoefficientModel::default()).unwrap();
        let back = Vom::from_text(&vom.to_text()).unwrap();
        assert_eq!(back, vom);
        assert!(Vom::from_text("garbage").is_err());
    }
}
