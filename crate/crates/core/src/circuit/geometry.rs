//! Planar primitives for drawn traces: points, segments and rings, and the
//! pairwise contact tests between them. All lengths are millimetres.

use std::f64::consts::TAU;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two points closer than this are the same electrical junction; it is also
/// the tangency tolerance.
pub const MERGE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Segment { p0: Point, p1: Point },
    Ring { center: Point, radius: f64 },
}

/// A drawn trace with uniform resistance per unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conductor {
    pub geometry: Geometry,
    /// Ohm per mm.
    pub linear_resistivity: f64,
}

impl Conductor {
    pub fn segment(p0: Point, p1: Point, linear_resistivity: f64) -> Result<Self> {
        if !(p0.dist(p1) > 0.0) {
            return Err(Error::InvalidGeometry("segment has zero length".into()));
        }
        Self::checked(Geometry::Segment { p0, p1 }, linear_resistivity)
    }

    pub fn ring(center: Point, radius: f64, linear_resistivity: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "ring radius {radius} must be positive"
            )));
        }
        Self::checked(Geometry::Ring { center, radius }, linear_resistivity)
    }

    fn checked(geometry: Geometry, linear_resistivity: f64) -> Result<Self> {
        if !(linear_resistivity > 0.0) || !linear_resistivity.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "linear resistivity {linear_resistivity} must be positive"
            )));
        }
        Ok(Self {
            geometry,
            linear_resistivity,
        })
    }

    /// Total trace length, mm.
    pub fn length(&self) -> f64 {
        match self.geometry {
            Geometry::Segment { p0, p1 } => p0.dist(p1),
            Geometry::Ring { radius, .. } => TAU * radius,
        }
    }

    pub fn is_segment(&self) -> bool {
        matches!(self.geometry, Geometry::Segment { .. })
    }
}

/// Result of intersecting two segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentContact {
    None,
    Point(Point),
    /// Collinear overlap between the two given points.
    Overlap(Point, Point),
}

/// Distance from `p` to the infinite line through `a` and `b`.
fn line_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    (d.cross(p - a)).abs() / d.norm()
}

pub fn collinear(a0: Point, a1: Point, b0: Point, b1: Point, tol: f64) -> bool {
    line_distance(b0, a0, a1) <= tol && line_distance(b1, a0, a1) <= tol
}

pub fn segment_segment(a0: Point, a1: Point, b0: Point, b1: Point, tol: f64) -> SegmentContact {
    let da = a1 - a0;
    let db = b1 - b0;
    let la = da.norm();
    let lb = db.norm();
    if collinear(a0, a1, b0, b1, tol) {
        // Project b onto a's parameterisation (arc length along a).
        let u = da * (1.0 / la);
        let s0 = (b0 - a0).dot(u);
        let s1 = (b1 - a0).dot(u);
        let (lo, hi) = (s0.min(s1).max(0.0), s0.max(s1).min(la));
        if hi < lo - tol {
            return SegmentContact::None;
        }
        if hi - lo <= tol {
            let s = 0.5 * (lo + hi);
            return SegmentContact::Point(a0 + u * s);
        }
        return SegmentContact::Overlap(a0 + u * lo, a0 + u * hi);
    }
    let denom = da.cross(db);
    if denom.abs() <= f64::EPSILON * la * lb {
        // Parallel, not collinear.
        return SegmentContact::None;
    }
    let w = b0 - a0;
    let t = w.cross(db) / denom;
    let s = w.cross(da) / denom;
    let (ta, tb) = (tol / la, tol / lb);
    if t < -ta || t > 1.0 + ta || s < -tb || s > 1.0 + tb {
        return SegmentContact::None;
    }
    SegmentContact::Point(a0 + da * t.clamp(0.0, 1.0))
}

/// Contacts between a segment and a ring. A line within `tol` of tangency
/// yields a single contact at the foot of the perpendicular.
pub fn segment_ring(p0: Point, p1: Point, center: Point, radius: f64, tol: f64) -> Vec<Point> {
    let d = p1 - p0;
    let len = d.norm();
    let u = d * (1.0 / len);
    // Foot of the perpendicular from the center, as arc length from p0.
    let foot = (center - p0).dot(u);
    let foot_pt = p0 + u * foot;
    let dist = center.dist(foot_pt);
    let within = |s: f64| s >= -tol && s <= len + tol;
    if (dist - radius).abs() <= tol {
        return if within(foot) {
            vec![p0 + u * foot.clamp(0.0, len)]
        } else {
            Vec::new()
        };
    }
    if dist > radius {
        return Vec::new();
    }
    let half = (radius * radius - dist * dist).sqrt();
    [foot - half, foot + half]
        .into_iter()
        .filter(|&s| within(s))
        .map(|s| p0 + u * s.clamp(0.0, len))
        .collect()
}

/// Contacts between two rings: zero, one (tangency within `tol`) or two
/// points. Coincident rings have a continuum of contacts and report none.
pub fn ring_ring(c1: Point, r1: f64, c2: Point, r2: f64, tol: f64) -> Vec<Point> {
    let d = c1.dist(c2);
    if d <= tol {
        return Vec::new();
    }
    if d > r1 + r2 + tol || d < (r1 - r2).abs() - tol {
        return Vec::new();
    }
    let u = (c2 - c1) * (1.0 / d);
    let a = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let h2 = r1 * r1 - a * a;
    let base = c1 + u * a;
    if h2 <= 0.0 || h2.sqrt() <= tol {
        return vec![base];
    }
    let h = h2.sqrt();
    let n = Point::new(-u.y, u.x);
    vec![base + n * h, base - n * h]
}

/// Closest point on a conductor to `target`. For a ring centered on the
/// target every point is equidistant; the topmost point is used.
pub fn nearest_point(geometry: &Geometry, target: Point) -> Point {
    match *geometry {
        Geometry::Segment { p0, p1 } => {
            let d = p1 - p0;
            let t = ((target - p0).dot(d) / d.dot(d)).clamp(0.0, 1.0);
            p0 + d * t
        }
        Geometry::Ring { center, radius } => {
            let v = target - center;
            let n = v.norm();
            if n <= MERGE_TOL {
                center + Point::new(0.0, radius)
            } else {
                center + v * (radius / n)
            }
        }
    }
}

/// Angle of `p` around `center` in `[0, 2π)`.
pub fn ring_angle(center: Point, p: Point) -> f64 {
    let a = (p.y - center.y).atan2(p.x - center.x);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}
