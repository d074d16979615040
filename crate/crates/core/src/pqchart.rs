//! P-Q feasible regions.
//!
//! The region is the DOE rectangle `[p_lo, p_hi] × [q_lo, q_hi]` intersected
//! with an optional power-factor bowtie `|Q| ≤ |P|·tan(acos(pf))` and an
//! optional converter-capacity disc `P² + Q² ≤ S²`. The bowtie is not convex,
//! but its restriction to each closed quadrant is a half-plane, so the region
//! is built as up to four convex pieces, each clipped with Sutherland-Hodgman.
//! The disc is replaced by an inscribed regular polygon, which never claims
//! more feasibility than the true disc.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envelope::Envelope;

pub const DEFAULT_DISC_VERTICES: usize = 64;

/// Tolerance for half-plane membership during clipping and for point queries.
pub const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PqConstraints {
    pub pf_limit: Option<f64>,
    pub s_max: Option<f64>,
    pub disc_vertices: usize,
}

impl Default for PqConstraints {
    fn default() -> Self {
        PqConstraints {
            pf_limit: None,
            s_max: None,
            disc_vertices: DEFAULT_DISC_VERTICES,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PqError {
    #[error("power factor limit must lie in (0, 1], got {0}")]
    PowerFactor(f64),
    #[error("converter capacity must be positive, got {0}")]
    Capacity(f64),
    #[error("disc approximation needs at least 3 vertices, got {0}")]
    DiscVertices(usize),
}

impl PqConstraints {
    pub fn new(pf_limit: Option<f64>, s_max: Option<f64>) -> Result<Self, PqError> {
        let c = PqConstraints {
            pf_limit,
            s_max,
            ..Default::default()
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), PqError> {
        if let Some(pf) = self.pf_limit {
            if !(pf > 0.0 && pf <= 1.0) {
                return Err(PqError::PowerFactor(pf));
            }
        }
        if let Some(s) = self.s_max {
            if !(s > 0.0 && s.is_finite()) {
                return Err(PqError::Capacity(s));
            }
        }
        if self.disc_vertices < 3 {
            return Err(PqError::DiscVertices(self.disc_vertices));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrant {
    /// P ≥ 0, Q ≥ 0
    I,
    /// P ≤ 0, Q ≥ 0
    II,
    /// P ≤ 0, Q ≤ 0
    III,
    /// P ≥ 0, Q ≤ 0
    IV,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::I, Quadrant::II, Quadrant::III, Quadrant::IV];

    fn signs(self) -> (f64, f64) {
        match self {
            Quadrant::I => (1.0, 1.0),
            Quadrant::II => (-1.0, 1.0),
            Quadrant::III => (-1.0, -1.0),
            Quadrant::IV => (1.0, -1.0),
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

pub type Point = [f64; 2];

/// `a·p + b·q ≤ c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    fn excess(&self, [p, q]: Point) -> f64 {
        self.a * p + self.b * q - self.c
    }

    pub fn contains(&self, point: Point, tol: f64) -> bool {
        self.excess(point) <= tol
    }
}

/// Clips a convex polygon (possibly degenerate) against one half-plane.
pub fn clip(polygon: &[Point], plane: &HalfPlane) -> Vec<Point> {
    let mut out = Vec::with_capacity(polygon.len() + 1);
    let Some(&last) = polygon.last() else {
        return out;
    };
    let mut prev = last;
    let mut prev_d = plane.excess(prev);
    for &cur in polygon {
        let d = plane.excess(cur);
        let (prev_in, cur_in) = (prev_d <= GEOMETRY_TOL, d <= GEOMETRY_TOL);
        if cur_in {
            if !prev_in {
                out.push(crossing(prev, prev_d, cur, d));
            }
            out.push(cur);
        } else if prev_in {
            out.push(crossing(prev, prev_d, cur, d));
        }
        prev = cur;
        prev_d = d;
    }
    dedup(out)
}

fn crossing(a: Point, da: f64, b: Point, db: f64) -> Point {
    let t = da / (da - db);
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn dedup(points: Vec<Point>) -> Vec<Point> {
    let close = |a: &Point, b: &Point| (a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12;
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().is_none_or(|l| !close(l, &p)) {
            out.push(p);
        }
    }
    while out.len() > 1 && close(&out[0], out.last().expect("non-empty")) {
        out.pop();
    }
    out
}

/// Signed shoelace area; positive for counterclockwise vertex order.
pub fn signed_area(polygon: &[Point]) -> f64 {
    let n = polygon.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for k in 0..n {
        let [x0, y0] = polygon[k];
        let [x1, y1] = polygon[(k + 1) % n];
        twice += x0 * y1 - x1 * y0;
    }
    twice / 2.0
}

/// Edges of the inscribed regular polygon approximating `P² + Q² ≤ s_max²`,
/// with vertices at angles `2πk / n`.
pub fn disc_half_planes(s_max: f64, n: usize) -> Vec<HalfPlane> {
    let apothem = s_max * (PI / n as f64).cos();
    (0..n)
        .map(|k| {
            let mid = (2.0 * k as f64 + 1.0) * PI / n as f64;
            HalfPlane {
                a: mid.cos(),
                b: mid.sin(),
                c: apothem,
            }
        })
        .collect()
}

/// Half-plane form of `|Q| ≤ |P|·tan(acos(pf))` within `quadrant`.
pub fn pf_half_plane(pf: f64, quadrant: Quadrant) -> HalfPlane {
    let tan = (1.0 - pf * pf).max(0.0).sqrt() / pf;
    let (sp, sq) = quadrant.signs();
    HalfPlane {
        a: -sp * tan,
        b: sq,
        c: 0.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub quadrant: Quadrant,
    /// Counterclockwise; may have fewer than three vertices when the piece is
    /// a segment or a point.
    pub vertices: Vec<Point>,
}

impl Piece {
    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    pub fn contains(&self, [p, q]: Point, tol: f64) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => (v[0][0] - p).hypot(v[0][1] - q) <= tol,
            _ if self.area() <= tol * tol => (0..v.len())
                .any(|k| segment_distance(v[k], v[(k + 1) % v.len()], [p, q]) <= tol),
            n => (0..n).all(|k| {
                let [x0, y0] = v[k];
                let [x1, y1] = v[(k + 1) % n];
                let (ex, ey) = (x1 - x0, y1 - y0);
                let cross = ex * (q - y0) - ey * (p - x0);
                cross >= -tol * ex.hypot(ey)
            }),
        }
    }
}

fn segment_distance(a: Point, b: Point, x: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((x[0] - a[0]) * dx + (x[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    (a[0] + t * dx - x[0]).hypot(a[1] + t * dy - x[1])
}

/// Union of per-quadrant convex pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PqRegion {
    pub pieces: Vec<Piece>,
    /// No feasible point at all. A region consisting only of a segment has
    /// zero area but is not empty.
    pub empty: bool,
}

impl PqRegion {
    pub fn empty() -> Self {
        PqRegion {
            pieces: Vec::new(),
            empty: true,
        }
    }

    pub fn area(&self) -> f64 {
        self.pieces.iter().map(Piece::area).sum()
    }

    pub fn contains(&self, p: f64, q: f64) -> bool {
        self.pieces.iter().any(|piece| piece.contains([p, q], GEOMETRY_TOL))
    }

    pub fn piece(&self, quadrant: Quadrant) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.quadrant == quadrant)
    }
}

/// Builds the P-Q region for one (bus, time) cell.
pub fn build_region(p_env: &Envelope, q_env: &Envelope, c: &PqConstraints) -> Result<PqRegion, PqError> {
    c.validate()?;
    let (Some((p_lo, p_hi)), Some((q_lo, q_hi))) = (p_env.bounds(), q_env.bounds()) else {
        return Ok(PqRegion::empty());
    };
    let disc = c.s_max.map(|s| disc_half_planes(s, c.disc_vertices));
    let mut pieces = Vec::new();
    for quadrant in Quadrant::ALL {
        let (sp, sq) = quadrant.signs();
        let (p0, p1) = if sp > 0.0 { (p_lo.max(0.0), p_hi) } else { (p_lo, p_hi.min(0.0)) };
        let (q0, q1) = if sq > 0.0 { (q_lo.max(0.0), q_hi) } else { (q_lo, q_hi.min(0.0)) };
        if p0 > p1 || q0 > q1 {
            continue;
        }
        let mut polygon = dedup(vec![[p0, q0], [p1, q0], [p1, q1], [p0, q1]]);
        if let Some(pf) = c.pf_limit {
            polygon = clip(&polygon, &pf_half_plane(pf, quadrant));
        }
        for plane in disc.iter().flatten() {
            if polygon.is_empty() {
                break;
            }
            polygon = clip(&polygon, plane);
        }
        if !polygon.is_empty() {
            pieces.push(Piece {
                quadrant,
                vertices: polygon,
            });
        }
    }
    let empty = pieces.is_empty();
    Ok(PqRegion { pieces, empty })
}

/// Free-function form of [`PqRegion::contains`].
pub fn contains(region: &PqRegion, p: f64, q: f64) -> bool {
    region.contains(p, q)
}

/// Free-function form of [`PqRegion::area`].
pub fn area(region: &PqRegion) -> f64 {
    region.area()
}
