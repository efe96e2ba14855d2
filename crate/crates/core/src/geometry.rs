//! Planar polygon tables: arclength parametrization, inter-side angles,
//! visibility and parallelism predicates.
//!
//! A table is a closed, non self-intersecting polygon with positively
//! (counterclockwise) oriented boundary. Consecutive edges must lie on
//! distinct supporting lines. The boundary parametrization ζ maps arclength
//! `s ∈ [0, |∂P|]` to the plane, with `s̃_1 = 0 < s̃_2 < … < s̃_{n+1} = |∂P|`
//! the vertex parameters.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::TOL_GEOM;

/// A point (or vector) in the Euclidean plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// 2D cross product (signed parallelogram area).
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn normalize(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    /// Rotation by +90 degrees. For a counterclockwise boundary this turns an
    /// edge direction into the inward normal.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    /// Rotation by an arbitrary angle (radians, counterclockwise).
    pub fn rotate(self, angle: f64) -> Point {
        let (sin, cos) = angle.sin_cos();
        Point::new(cos * self.x - sin * self.y, sin * self.x + cos * self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl std::ops::Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("edge {0} is degenerate or collinear with its predecessor")]
    DegenerateEdge(usize),
    #[error("edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("polygon has no orientation (zero signed area)")]
    WrongOrientation,
    #[error("arclength {0} outside [0, {1}]")]
    OutOfRange(f64, f64),
    #[error("need two distinct edges")]
    SameEdge,
}

/// Location of an arclength parameter on the boundary.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryPoint {
    pub point: Point,
    /// Edge whose closed span contains `s`; at a vertex parameter the
    /// following edge.
    pub edge: usize,
    /// Set when `s` is within `TOL_GEOM` of a vertex parameter.
    pub vertex: Option<usize>,
}

/// An ordered pair of edges together with the counterclockwise rotation
/// angle `δ(L_i, L_j) ∈ (0, 2π]` between their oriented supporting lines.
/// Antiparallel sides have `δ = π`; parallel equally-oriented sides get the
/// conventional value `2π`, which never occurs between sides seeing each
/// other.
#[derive(Clone, Copy, Debug)]
pub struct EdgePair {
    pub i: usize,
    pub j: usize,
    pub delta: f64,
}

/// Classification of a point against the closed polygon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// A positively oriented polygon with its arclength tables.
///
/// Immutable after construction; safe to share across threads.
#[derive(Clone, Debug)]
pub struct Polygon {
    vertices: Vec<Point>,
    edge_dirs: Vec<Point>,
    edge_lengths: Vec<f64>,
    cum_arclength: Vec<f64>,
    reversed: bool,
}

impl Polygon {
    /// Validates and builds a polygon from a vertex list.
    ///
    /// Input with negative orientation is reversed to counterclockwise and
    /// flagged via [`Polygon::was_reversed`]. Self-intersections and
    /// collinear consecutive edges are rejected.
    pub fn new(points: Vec<Point>) -> Result<Self, GeometryError> {
        if points.len() < 3 {
            return Err(GeometryError::TooFewVertices(points.len()));
        }
        let scale: f64 = points
            .iter()
            .map(|p| p.norm())
            .fold(1.0_f64, |a, b| a.max(b));

        // Orientation-independent checks first: degenerate edges, collinear
        // consecutive edges, pairwise edge disjointness.
        let n = points.len();
        let mut dirs = Vec::with_capacity(n);
        for i in 0..n {
            let d = points[(i + 1) % n] - points[i];
            let len = d.norm();
            if len < TOL_GEOM * scale {
                return Err(GeometryError::DegenerateEdge(i));
            }
            dirs.push(d * (1.0 / len));
        }
        for i in 0..n {
            let prev = dirs[(i + n - 1) % n];
            if prev.cross(dirs[i]).abs() < TOL_GEOM {
                return Err(GeometryError::DegenerateEdge(i));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    continue;
                }
                let (a, b) = (points[i], points[(i + 1) % n]);
                let (c, d) = (points[j], points[(j + 1) % n]);
                if segments_intersect(a, b, c, d, TOL_GEOM * scale) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }

        let mut signed_area = 0.0;
        for (i, v) in points.iter().enumerate() {
            let w = points[(i + 1) % points.len()];
            signed_area += v.cross(w);
        }
        if signed_area.abs() < TOL_GEOM * scale * scale {
            return Err(GeometryError::WrongOrientation);
        }
        let mut vertices = points;
        let reversed = signed_area < 0.0;
        if reversed {
            vertices.reverse();
        }

        let mut edge_dirs = Vec::with_capacity(n);
        let mut edge_lengths = Vec::with_capacity(n);
        for i in 0..n {
            let d = vertices[(i + 1) % n] - vertices[i];
            let len = d.norm();
            edge_dirs.push(d * (1.0 / len));
            edge_lengths.push(len);
        }

        let mut cum_arclength = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        cum_arclength.push(0.0);
        for len in &edge_lengths {
            acc += len;
            cum_arclength.push(acc);
        }

        Ok(Self {
            vertices,
            edge_dirs,
            edge_lengths,
            cum_arclength,
            reversed,
        })
    }

    /// Regular d-gon with the given side length, counterclockwise, first edge
    /// at the bottom so that reduced coordinates `s ∈ (0,1)` per side line up
    /// with the arclength parametrization.
    pub fn regular(d: usize, side: f64) -> Self {
        assert!(d >= 3, "regular polygon needs d >= 3");
        assert!(side > 0.0, "side length must be positive");
        let circumradius = side / (2.0 * (std::f64::consts::PI / d as f64).sin());
        let start = -std::f64::consts::FRAC_PI_2 - std::f64::consts::PI / d as f64;
        let vertices = (0..d)
            .map(|k| {
                let phi = start + 2.0 * std::f64::consts::PI * k as f64 / d as f64;
                Point::new(circumradius * phi.cos(), circumradius * phi.sin())
            })
            .collect();
        Self::new(vertices).expect("regular polygon is always valid")
    }

    pub fn num_sides(&self) -> usize {
        self.vertices.len()
    }

    pub fn perimeter(&self) -> f64 {
        *self.cum_arclength.last().unwrap()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i % self.vertices.len()]
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        self.edge_lengths[i]
    }

    /// Unit direction of edge `i` (from vertex `i` to vertex `i+1`).
    pub fn edge_dir(&self, i: usize) -> Point {
        self.edge_dirs[i]
    }

    /// Inward unit normal of edge `i`.
    pub fn inward_normal(&self, i: usize) -> Point {
        self.edge_dirs[i].perp()
    }

    /// Vertex arclength parameters `s̃_1 = 0 < … < s̃_{n+1} = |∂P|`.
    pub fn cum_arclength(&self) -> &[f64] {
        &self.cum_arclength
    }

    pub fn was_reversed(&self) -> bool {
        self.reversed
    }

    /// Max distance between two boundary points.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0_f64;
        for (i, v) in self.vertices.iter().enumerate() {
            for w in &self.vertices[i + 1..] {
                best = best.max(v.dist(*w));
            }
        }
        best
    }

    /// The boundary parametrization ζ(s).
    pub fn point_at(&self, s: f64) -> Result<BoundaryPoint, GeometryError> {
        let total = self.perimeter();
        if !(0.0..=total).contains(&s) {
            return Err(GeometryError::OutOfRange(s, total));
        }
        let n = self.vertices.len();
        // Vertex parameters include s = 0 and s = |∂P| (the same vertex).
        for (i, &sv) in self.cum_arclength.iter().enumerate() {
            if (s - sv).abs() <= TOL_GEOM {
                let v = i % n;
                return Ok(BoundaryPoint {
                    point: self.vertices[v],
                    edge: v,
                    vertex: Some(v),
                });
            }
        }
        let edge = match self
            .cum_arclength
            .binary_search_by(|probe| probe.partial_cmp(&s).unwrap())
        {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let local = s - self.cum_arclength[edge];
        Ok(BoundaryPoint {
            point: self.vertices[edge] + self.edge_dirs[edge] * local,
            edge,
            vertex: None,
        })
    }

    /// Edge containing arclength `s`, ignoring vertex proximity.
    pub fn edge_of(&self, s: f64) -> usize {
        match self
            .cum_arclength
            .binary_search_by(|probe| probe.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.vertices.len() - 1),
            Err(i) => (i - 1).min(self.vertices.len() - 1),
        }
    }

    /// Arclength of the point at parameter `local` along edge `i`.
    pub fn arclength_of(&self, edge: usize, local: f64) -> f64 {
        self.cum_arclength[edge] + local
    }

    /// The counterclockwise rotation angle `δ(L_i, L_j) ∈ (0, 2π]` taking the
    /// oriented supporting line of side `i` to that of side `j`.
    pub fn delta_angle(&self, i: usize, j: usize) -> Result<f64, GeometryError> {
        if i == j {
            return Err(GeometryError::SameEdge);
        }
        let a = self.edge_dirs[i];
        let b = self.edge_dirs[j];
        let mut delta = a.cross(b).atan2(a.dot(b));
        if delta <= TOL_GEOM {
            delta += 2.0 * std::f64::consts::PI;
        }
        Ok(delta)
    }

    /// All ordered pairs `(i, j)` with `i ≠ j` and their angles.
    pub fn edge_pairs(&self) -> Vec<EdgePair> {
        let n = self.vertices.len();
        let mut pairs = Vec::with_capacity(n * (n - 1));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pairs.push(EdgePair {
                        i,
                        j,
                        delta: self.delta_angle(i, j).unwrap(),
                    });
                }
            }
        }
        pairs
    }

    /// Classifies a point against the closed polygon.
    pub fn locate(&self, p: Point) -> Location {
        let n = self.vertices.len();
        let tol = TOL_GEOM.max(1e-14 * self.perimeter());
        for i in 0..n {
            if self.dist_to_edge(i, p) <= tol {
                return Location::Boundary;
            }
        }
        // Even-odd crossing count with a horizontal ray.
        let mut inside = false;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        if inside {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    fn dist_to_edge(&self, i: usize, p: Point) -> f64 {
        let a = self.vertices[i];
        let d = self.edge_dirs[i];
        let t = (p - a).dot(d).clamp(0.0, self.edge_lengths[i]);
        (a + d * t).dist(p)
    }

    /// Whether the open segment `(p, q)` stays inside the closed polygon.
    /// Both endpoints may lie on the boundary.
    pub fn segment_inside(&self, p: Point, q: Point) -> bool {
        let n = self.vertices.len();
        let dir = q - p;
        let len = dir.norm();
        if len < TOL_GEOM {
            return true;
        }
        // Split the segment at every boundary crossing, then test the
        // midpoint of each piece.
        let mut cuts = vec![0.0, 1.0];
        for i in 0..n {
            let a = self.vertices[i];
            let e = self.vertices[(i + 1) % n] - a;
            let denom = dir.cross(e);
            if denom.abs() < TOL_GEOM {
                continue;
            }
            let t = (a - p).cross(e) / denom;
            let u = (a - p).cross(dir) / denom;
            if t > 0.0 && t < 1.0 && (-TOL_GEOM..=1.0 + TOL_GEOM).contains(&u) {
                cuts.push(t);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in cuts.windows(2) {
            if w[1] - w[0] < TOL_GEOM {
                continue;
            }
            let mid = p + dir * (0.5 * (w[0] + w[1]));
            if self.locate(mid) == Location::Outside {
                return false;
            }
        }
        true
    }

    /// Whether sides `i` and `j` see each other: some open segment between
    /// their interiors stays inside the polygon. Decided by coarse-to-fine
    /// sampling of endpoint pairs (resolution up to 64×64 per pair).
    pub fn sides_see_each_other(&self, i: usize, j: usize) -> Result<bool, GeometryError> {
        if i == j {
            return Err(GeometryError::SameEdge);
        }
        for depth in [4usize, 8, 16, 64] {
            for a in 0..depth {
                let u = (a as f64 + 0.5) / depth as f64;
                let p = self.vertices[i] + self.edge_dirs[i] * (u * self.edge_lengths[i]);
                for b in 0..depth {
                    let v = (b as f64 + 0.5) / depth as f64;
                    let q = self.vertices[j] + self.edge_dirs[j] * (v * self.edge_lengths[j]);
                    if self.segment_inside(p, q) {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }

    /// List of unordered side pairs that see each other.
    pub fn seeing_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.vertices.len();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.sides_see_each_other(i, j).unwrap() {
                    pairs.push((i, j));
                }
            }
        }
        pairs
    }

    /// Whether some straight segment joins two parallel sides orthogonally
    /// through the interior, i.e. the billiard map has a period-two orbit.
    pub fn has_parallel_facing(&self) -> bool {
        let n = self.vertices.len();
        let par_tol = 1e-9;
        for i in 0..n {
            for j in (i + 1)..n {
                let di = self.edge_dirs[i];
                let dj = self.edge_dirs[j];
                if di.cross(dj).abs() > par_tol || di.dot(dj) > 0.0 {
                    continue;
                }
                // Antiparallel pair: overlap of projections onto side i.
                let base = self.vertices[i];
                let t0 = (self.vertices[j] - base).dot(di);
                let t1 = (self.vertices[(j + 1) % n] - base).dot(di);
                let (lo, hi) = (t0.min(t1).max(0.0), t0.max(t1).min(self.edge_lengths[i]));
                if hi - lo < 1e-9 {
                    continue;
                }
                let gap = (self.vertices[j] - base).dot(self.inward_normal(i));
                if gap <= 1e-9 {
                    continue;
                }
                for k in 0..16 {
                    let t = lo + (hi - lo) * (k as f64 + 0.5) / 16.0;
                    let p = base + di * t;
                    let q = p + self.inward_normal(i) * gap;
                    if self.segment_inside(p, q) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Proper intersection test for two closed segments, used by polygon
/// validation. Touching within `tol` counts as intersecting for non-adjacent
/// edges.
fn segments_intersect(a: Point, b: Point, c: Point, d: Point, tol: f64) -> bool {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    let qp = c - a;
    if denom.abs() < tol * tol {
        // Parallel: intersect only if collinear and overlapping.
        if qp.cross(r).abs() > tol * r.norm() {
            return false;
        }
        let rr = r.dot(r);
        let t0 = qp.dot(r) / rr;
        let t1 = (d - a).dot(r) / rr;
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        return lo < 1.0 - tol && hi > tol;
    }
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    let eps = tol / r.norm().max(s.norm());
    (-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u)
}

/// Serializable description of a table: either an explicit vertex list or a
/// regular polygon `{"regular": d, "side": 1.0}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolygonSpec {
    Regular {
        regular: usize,
        #[serde(default = "default_side")]
        side: f64,
    },
    Points(Vec<[f64; 2]>),
}

fn default_side() -> f64 {
    1.0
}

impl PolygonSpec {
    pub fn build(&self) -> Result<Polygon, GeometryError> {
        match self {
            PolygonSpec::Regular { regular, side } => Ok(Polygon::regular(*regular, *side)),
            PolygonSpec::Points(pts) => {
                Polygon::new(pts.iter().map(|p| Point::new(p[0], p[1])).collect())
            }
        }
    }
}

/// The unit square `(0,0),(1,0),(1,1),(0,1)`.
pub fn unit_square() -> Polygon {
    Polygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, 1.0),
        Point::new(0.0, 1.0),
    ])
    .unwrap()
}

/// Equilateral triangle with unit side on the x-axis.
pub fn equilateral_triangle() -> Polygon {
    Polygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(0.5, 3f64.sqrt() / 2.0),
    ])
    .unwrap()
}

/// Axis-aligned rectangle with long side 1 and short side `h ∈ (0, 1]`,
/// long sides first in the edge order.
pub fn rectangle(h: f64) -> Polygon {
    assert!(h > 0.0 && h <= 1.0, "short side must be in (0, 1]");
    Polygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(1.0, h),
        Point::new(0.0, h),
    ])
    .unwrap()
}

/// A non-convex star with `spikes` tips; inner radius controls how deep the
/// notches cut. Sides flanking a notch do not see each other.
pub fn star_polygon(spikes: usize, r_outer: f64, r_inner: f64) -> Polygon {
    assert!(spikes >= 3);
    let mut pts = Vec::with_capacity(2 * spikes);
    for k in 0..2 * spikes {
        let r = if k % 2 == 0 { r_outer } else { r_inner };
        let phi = std::f64::consts::PI * k as f64 / spikes as f64;
        pts.push(Point::new(r * phi.cos(), r * phi.sin()));
    }
    Polygon::new(pts).unwrap()
}
