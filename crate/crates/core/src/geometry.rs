//! Polyline arc-length parametrization and conversion between Cartesian (xy)
//! and curvilinear normal-tangential (nt) coordinates along a lane centerline.
//!
//! Sign convention: `n` is positive when the query point lies to the LEFT of
//! the local direction of travel. Longitudinal `l` is arc length from the
//! start of the polyline, clamped to `[0, total]` on projection; points
//! projecting beyond either end keep the clamped `l` but measure `n` against
//! the extended terminal segment so slightly overrunning trajectories still
//! convert.

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Segments shorter than this are treated as degenerate.
pub const MIN_SEGMENT_LEN: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("polyline needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite coordinate at point index {0}")]
    NonFinite(usize),
    #[error("coincident consecutive points at index {0} (segment below {MIN_SEGMENT_LEN} m)")]
    CoincidentPoints(usize),
    #[error("degenerate polyline: resample spacing below {MIN_SEGMENT_LEN} m")]
    Degenerate,
    #[error("resample requires p >= 2, got {0}")]
    BadResampleCount(usize),
}

/// A 2D point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: Point2) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Curvilinear coordinate along an anchor: signed lateral offset `n` and
/// longitudinal arc-length distance `l`, both in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NtCoord {
    pub n: f64,
    pub l: f64,
}

impl NtCoord {
    pub fn new(n: f64, l: f64) -> Self {
        Self { n, l }
    }
}

/// Position plus heading, yaw normalized into (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Point2,
    pub yaw: f64,
}

impl Pose {
    pub fn new(position: Point2, yaw: f64) -> Self {
        Self {
            position,
            yaw: wrap_angle(yaw),
        }
    }
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut w = a.rem_euclid(two_pi);
    if w > std::f64::consts::PI {
        w -= two_pi;
    }
    w
}

/// Jacobian of `(n, l)` with respect to the query point `(x, y)`.
#[derive(Debug, Clone, Copy)]
pub struct NtJacobian {
    pub dn_dx: f64,
    pub dn_dy: f64,
    pub dl_dx: f64,
    pub dl_dy: f64,
}

/// Jacobian of `(x, y)` with respect to `(n, l)`.
#[derive(Debug, Clone, Copy)]
pub struct XyJacobian {
    pub dx_dn: f64,
    pub dx_dl: f64,
    pub dy_dn: f64,
    pub dy_dl: f64,
}

/// An ordered lane centerline with cached cumulative arc length.
///
/// Invariants: at least two points, all finite, consecutive points separated
/// by more than [`MIN_SEGMENT_LEN`].
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point2>,
    cumulative_arclen: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<Point2>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints(points.len()));
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(GeometryError::NonFinite(i));
            }
        }
        let mut cumulative_arclen = Vec::with_capacity(points.len());
        cumulative_arclen.push(0.0);
        let mut acc = 0.0;
        for i in 0..points.len() - 1 {
            let seg = points[i].dist(points[i + 1]);
            if seg <= MIN_SEGMENT_LEN {
                return Err(GeometryError::CoincidentPoints(i));
            }
            acc += seg;
            cumulative_arclen.push(acc);
        }
        Ok(Self {
            points,
            cumulative_arclen,
        })
    }

    /// Build from `(x, y)` pairs.
    pub fn from_xy(pairs: &[[f64; 2]]) -> Result<Self, GeometryError> {
        Self::new(pairs.iter().map(|p| Point2::new(p[0], p[1])).collect())
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn cumulative_arclen(&self) -> &[f64] {
        &self.cumulative_arclen
    }

    pub fn total_len(&self) -> f64 {
        *self.cumulative_arclen.last().unwrap()
    }

    pub fn num_segments(&self) -> usize {
        self.points.len() - 1
    }

    fn segment_len(&self, i: usize) -> f64 {
        self.cumulative_arclen[i + 1] - self.cumulative_arclen[i]
    }

    /// Unit direction of segment `i`.
    fn segment_dir(&self, i: usize) -> (f64, f64) {
        let a = self.points[i];
        let b = self.points[i + 1];
        let len = self.segment_len(i);
        ((b.x - a.x) / len, (b.y - a.y) / len)
    }

    /// Index of the segment containing arc length `l`; at interior vertices
    /// this is the following segment. Out-of-range `l` maps to the terminal
    /// segments (used for extrapolation).
    fn segment_at(&self, l: f64) -> usize {
        let idx = self.cumulative_arclen.partition_point(|&c| c <= l);
        idx.saturating_sub(1).min(self.num_segments() - 1)
    }

    /// Concatenate centerlines in order, dropping a leading point of each
    /// follow-up piece when it coincides with the current endpoint.
    pub fn concat<'a>(pieces: impl IntoIterator<Item = &'a Polyline>) -> Result<Self, GeometryError> {
        let mut points: Vec<Point2> = Vec::new();
        for piece in pieces {
            for &p in piece.points() {
                if let Some(&last) = points.last() {
                    if last.dist(p) <= MIN_SEGMENT_LEN {
                        continue;
                    }
                }
                points.push(p);
            }
        }
        Self::new(points)
    }

    /// Resample to exactly `p` points equally spaced in the arc-length
    /// parameter of this polyline, endpoints preserved.
    pub fn resample(&self, p: usize) -> Result<Self, GeometryError> {
        if p < 2 {
            return Err(GeometryError::BadResampleCount(p));
        }
        let total = self.total_len();
        let spacing = total / (p as f64 - 1.0);
        if spacing <= MIN_SEGMENT_LEN {
            return Err(GeometryError::Degenerate);
        }
        let mut pts = Vec::with_capacity(p);
        pts.push(self.points[0]);
        for j in 1..p - 1 {
            let l = total * (j as f64) / (p as f64 - 1.0);
            pts.push(self.point_at(l));
        }
        pts.push(*self.points.last().unwrap());
        Self::new(pts)
    }

    /// Point at arc length `l`; out-of-range `l` extrapolates along the
    /// terminal segment direction.
    pub fn point_at(&self, l: f64) -> Point2 {
        let i = self.segment_at(l);
        let a = self.points[i];
        let (dx, dy) = self.segment_dir(i);
        let t = l - self.cumulative_arclen[i];
        Point2::new(a.x + t * dx, a.y + t * dy)
    }

    /// Direction angle of the segment containing arc length `l`; at interior
    /// vertices, the angle of the following segment.
    pub fn yaw_at(&self, l: f64) -> f64 {
        let (dx, dy) = self.segment_dir(self.segment_at(l));
        dy.atan2(dx)
    }

    /// Unsigned distance from `q` to the closest point on the polyline.
    pub fn distance_to(&self, q: Point2) -> f64 {
        self.closest(q).dist
    }

    fn closest(&self, q: Point2) -> ClosestHit {
        let mut best = ClosestHit {
            dist: f64::INFINITY,
            seg: 0,
            t: 0.0,
            t_raw: 0.0,
        };
        let mut best_d2 = f64::INFINITY;
        for i in 0..self.num_segments() {
            let a = self.points[i];
            let len = self.segment_len(i);
            let (dx, dy) = self.segment_dir(i);
            let t_raw = (q.x - a.x) * dx + (q.y - a.y) * dy;
            let t = t_raw.clamp(0.0, len);
            let cx = a.x + t * dx;
            let cy = a.y + t * dy;
            let d2 = (q.x - cx).powi(2) + (q.y - cy).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best = ClosestHit {
                    dist: d2.sqrt(),
                    seg: i,
                    t,
                    t_raw,
                };
            }
        }
        best
    }

    /// Project `q` into curvilinear coordinates along this polyline.
    pub fn project_xy_to_nt(&self, q: Point2) -> NtCoord {
        self.project_with_jacobian(q).0
    }

    /// Projection plus the local Jacobian d(n,l)/d(x,y), needed when
    /// gradients must flow through the conversion. The map is piecewise
    /// smooth; at vertex-closest points `l` is locally constant.
    pub fn project_with_jacobian(&self, q: Point2) -> (NtCoord, NtJacobian) {
        let hit = self.closest(q);
        let i = hit.seg;
        let a = self.points[i];
        let len = self.segment_len(i);
        let (dx, dy) = self.segment_dir(i);
        let cross = dx * (q.y - a.y) - dy * (q.x - a.x);

        let before_start = i == 0 && hit.t_raw < 0.0;
        let beyond_end = i == self.num_segments() - 1 && hit.t_raw > len;
        if before_start || beyond_end {
            // Clamped l, n against the extended terminal segment.
            let l = if before_start { 0.0 } else { self.total_len() };
            return (
                NtCoord::new(cross, l),
                NtJacobian {
                    dn_dx: -dy,
                    dn_dy: dx,
                    dl_dx: 0.0,
                    dl_dy: 0.0,
                },
            );
        }

        let at_vertex = (hit.t <= 0.0 && i > 0) || (hit.t >= len && i < self.num_segments() - 1);
        if at_vertex {
            let v = if hit.t <= 0.0 { a } else { self.points[i + 1] };
            let (vx, vy) = (q.x - v.x, q.y - v.y);
            let dist = hit.dist;
            let sign = if cross < 0.0 { -1.0 } else { 1.0 };
            let l = self.cumulative_arclen[i] + hit.t;
            let (dn_dx, dn_dy) = if dist > 0.0 {
                (sign * vx / dist, sign * vy / dist)
            } else {
                (0.0, 0.0)
            };
            return (
                NtCoord::new(sign * dist, l),
                NtJacobian {
                    dn_dx,
                    dn_dy,
                    dl_dx: 0.0,
                    dl_dy: 0.0,
                },
            );
        }

        let l = self.cumulative_arclen[i] + hit.t;
        (
            NtCoord::new(cross, l),
            NtJacobian {
                dn_dx: -dy,
                dn_dy: dx,
                dl_dx: dx,
                dl_dy: dy,
            },
        )
    }

    /// Inverse transform: point at arc length `l`, offset `n` along the left
    /// normal of the local tangent. `l` outside the polyline extent is
    /// extrapolated along the terminal segment direction.
    pub fn nt_to_xy(&self, c: NtCoord) -> Point2 {
        self.nt_to_xy_with_jacobian(c).0
    }

    /// Inverse transform plus the Jacobian d(x,y)/d(n,l).
    pub fn nt_to_xy_with_jacobian(&self, c: NtCoord) -> (Point2, XyJacobian) {
        let i = self.segment_at(c.l);
        let a = self.points[i];
        let (dx, dy) = self.segment_dir(i);
        let t = c.l - self.cumulative_arclen[i];
        // left normal of (dx, dy) is (-dy, dx)
        let p = Point2::new(a.x + t * dx - c.n * dy, a.y + t * dy + c.n * dx);
        (
            p,
            XyJacobian {
                dx_dn: -dy,
                dx_dl: dx,
                dy_dn: dx,
                dy_dl: dy,
            },
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct ClosestHit {
    dist: f64,
    seg: usize,
    t: f64,
    t_raw: f64,
}

impl Serialize for Polyline {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.points.iter().map(|p| [p.x, p.y]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Polyline {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        Polyline::from_xy(&pairs).map_err(|e| D::Error::custom(format!("invalid polyline: {e}")))
    }
}
