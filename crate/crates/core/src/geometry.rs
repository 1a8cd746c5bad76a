//! Array geometry, spherical-wave steering vectors and the radiative
//! near-field region test.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};

/// Default propagation speed in m/s.
pub const SPEED_OF_LIGHT: f64 = 2.998e8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const ORIGIN: Point2D = Point2D { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2D) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2D) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2D {
    type Output = Point2D;
    fn add(self, o: Point2D) -> Point2D {
        Point2D::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2D {
    type Output = Point2D;
    fn sub(self, o: Point2D) -> Point2D {
        Point2D::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2D {
    type Output = Point2D;
    fn mul(self, s: f64) -> Point2D {
        Point2D::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for Point2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Antenna element layout of a co-located transmit/receive array.
///
/// The reference point is the element centroid and the aperture is the
/// largest pairwise element distance; both are derived once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    elements: Vec<Point2D>,
    carrier_freq: f64,
    wavelength: f64,
    reference: Point2D,
    aperture: f64,
}

impl ArrayGeometry {
    pub fn new(elements: Vec<Point2D>, carrier_freq: f64, speed_of_light: f64) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidArgument("array needs at least one element".into()));
        }
        if !(carrier_freq > 0.0) || !(speed_of_light > 0.0) {
            return Err(Error::InvalidArgument(
                "carrier frequency and propagation speed must be positive".into(),
            ));
        }
        if elements.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("element positions must be finite".into()));
        }
        let n = elements.len() as f64;
        let sum = elements.iter().fold(Point2D::ORIGIN, |acc, &p| acc + p);
        let reference = sum * (1.0 / n);
        let mut aperture: f64 = 0.0;
        for (i, a) in elements.iter().enumerate() {
            for b in &elements[i + 1..] {
                aperture = aperture.max(a.distance(*b));
            }
        }
        Ok(ArrayGeometry {
            elements,
            carrier_freq,
            wavelength: speed_of_light / carrier_freq,
            reference,
            aperture,
        })
    }

    pub fn elements(&self) -> &[Point2D] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Array reference point `q_0`.
    pub fn reference(&self) -> Point2D {
        self.reference
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    /// Free-space amplitude factor `lambda / (4 pi)`.
    pub fn amplitude_factor(&self) -> f64 {
        self.wavelength / (4.0 * PI)
    }

    /// Near-field array response towards `p`:
    /// `(lambda/4pi) * exp(-j k d_n) / d_n` with `d_n = ||q_n - p||`.
    pub fn steering_vector(&self, p: Point2D) -> Result<CVector> {
        let k = self.wavenumber();
        let amp = self.amplitude_factor();
        let mut out = CVector::zeros(self.elements.len());
        for (n, q) in self.elements.iter().enumerate() {
            let d = q.distance(p);
            if d <= 1e-12 * self.wavelength {
                return Err(Error::CoincidentPoint {
                    x: p.x,
                    y: p.y,
                    what: "an array element",
                });
            }
            out[n] = Complex64::from_polar(amp / d, -k * d);
        }
        Ok(out)
    }

    /// Steering vectors of several points stacked as columns.
    pub fn steering_matrix(&self, points: &[Point2D]) -> Result<CMatrix> {
        let cols = points
            .iter()
            .map(|&p| self.steering_vector(p))
            .collect::<Result<Vec<_>>>()?;
        if cols.is_empty() {
            return Ok(CMatrix::zeros(self.len(), 0));
        }
        Ok(CMatrix::from_columns(&cols))
    }

    /// Fresnel and Rayleigh distances `((D^4 / 8 lambda)^(1/3), 2 D^2 / lambda)`.
    pub fn near_field_bounds(&self) -> Result<(f64, f64)> {
        let d = self.aperture;
        if d <= 0.0 {
            return Err(Error::ZeroAperture);
        }
        let lower = (d.powi(4) / (8.0 * self.wavelength)).cbrt();
        let upper = 2.0 * d * d / self.wavelength;
        Ok((lower, upper))
    }

    /// Checks `r_lower < ||q_n - u|| < r_upper` for every element and point.
    pub fn validate_roi(&self, roi_points: &[Point2D]) -> RoiReport {
        let (lower, upper) = self.near_field_bounds().unwrap_or((f64::INFINITY, f64::NEG_INFINITY));
        let mut violations = Vec::new();
        for &u in roi_points {
            for (n, q) in self.elements.iter().enumerate() {
                let d = q.distance(u);
                let side = if !(d > lower) {
                    Some(BoundSide::InsideFresnel)
                } else if !(d < upper) {
                    Some(BoundSide::BeyondRayleigh)
                } else {
                    None
                };
                if let Some(side) = side {
                    violations.push(RoiViolation {
                        point: u,
                        element: n,
                        distance: d,
                        side,
                    });
                }
            }
        }
        RoiReport {
            r_lower: lower,
            r_upper: upper,
            violations,
        }
    }
}

/// Uniform linear array on the x-axis centred on the origin.
///
/// `spacing = None` selects half-wavelength spacing.
pub fn make_ula(
    n: usize,
    carrier_freq: f64,
    spacing: Option<f64>,
    speed_of_light: f64,
) -> Result<ArrayGeometry> {
    if n == 0 {
        return Err(Error::InvalidArgument("ULA needs at least one element".into()));
    }
    if !(carrier_freq > 0.0) || !(speed_of_light > 0.0) {
        return Err(Error::InvalidArgument(
            "carrier frequency and propagation speed must be positive".into(),
        ));
    }
    let spacing = spacing.unwrap_or(0.5 * speed_of_light / carrier_freq);
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidArgument(format!("ULA spacing must be positive, got {spacing}")));
    }
    let centre = (n as f64 - 1.0) / 2.0;
    let elements = (0..n)
        .map(|i| Point2D::new((i as f64 - centre) * spacing, 0.0))
        .collect();
    ArrayGeometry::new(elements, carrier_freq, speed_of_light)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    InsideFresnel,
    BeyondRayleigh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiViolation {
    pub point: Point2D,
    pub element: usize,
    pub distance: f64,
    pub side: BoundSide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiReport {
    pub r_lower: f64,
    pub r_upper: f64,
    pub violations: Vec<RoiViolation>,
}

impl RoiReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}
