//! The slap map: the billiard with the degenerate law f ≡ 0, reduced to a
//! boundary self-map. Every trajectory leaves its side along the inward
//! normal, so the map is piecewise affine, with expansion `1/|cos φ|` across
//! a side pair whose supporting lines meet at angle φ.
//!
//! The vertex-connection search looks for chains of orthogonal projections
//! joining two vertices inside the polygon. Reversing such a chain turns it
//! into a slap orbit launched from a vertex (each projection segment is
//! perpendicular to the line it lands on), so the search runs forward slap
//! orbits from every vertex along the inward normals of its adjacent sides
//! and watches for vertex hits. Hits within `1e-9` are declared; candidates
//! can be re-certified exactly, either by rational replay of the orbit
//! (polygons given by dyadic-rational vertices) or through the exact
//! reduced slap map in Q(β) for regular d-gons.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::algebra::AlgebraicNumber;
use crate::billiard::{first_hit, StepError};
use crate::geometry::{Point, Polygon};
use crate::regular::exact_slap_iterate;
use crate::TOL_GEOM;

/// Declared-hit tolerance of the floating vertex-connection search.
pub const TOL_CONN: f64 = 1e-9;
/// Near-miss distance that triggers exact re-checking in certified mode.
pub const TOL_NEAR: f64 = 1e-6;

/// Why a slap orbit stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlapEnd {
    Completed,
    HitVertex(usize),
    /// Orbit started at a vertex whose adjacent-side normals leave the
    /// polygon (acute corner): the vertex is a fixed point of the slap map.
    FixedAtAcuteVertex,
}

/// A slap orbit: boundary arclengths and the edges they lie on.
#[derive(Clone, Debug)]
pub struct SlapOrbit {
    pub points: Vec<f64>,
    pub edges: Vec<usize>,
    pub termination: SlapEnd,
}

/// One slap step: the foot of the inward-normal ray from ζ(s).
pub fn slap_step(poly: &Polygon, s: f64) -> Result<f64, StepError> {
    slap_step_full(poly, s).map(|(s1, _)| s1)
}

/// Slap step with the arrival edge.
pub fn slap_step_full(poly: &Polygon, s: f64) -> Result<(f64, usize), StepError> {
    if !(0.0..=poly.perimeter()).contains(&s) {
        return Err(StepError::OutOfRange(s));
    }
    let edge = poly.edge_of(s);
    let local = s - poly.cum_arclength()[edge];
    if local < TOL_GEOM || local > poly.edge_length(edge) - TOL_GEOM {
        return Err(StepError::HitVertex);
    }
    let o = poly.vertex(edge) + poly.edge_dir(edge) * local;
    let hit = first_hit(poly, o, poly.inward_normal(edge), 1e-12 * poly.perimeter())
        .ok_or(StepError::HitVertex)?;
    if hit.local < TOL_GEOM || hit.local > poly.edge_length(hit.edge) - TOL_GEOM {
        return Err(StepError::HitVertex);
    }
    Ok((poly.cum_arclength()[hit.edge] + hit.local, hit.edge))
}

/// Iterates the slap map for up to `n` steps.
pub fn slap_orbit(poly: &Polygon, s0: f64, n: usize) -> SlapOrbit {
    let mut points = vec![s0];
    let mut edges = vec![poly.edge_of(s0)];
    let mut termination = SlapEnd::Completed;
    let mut s = s0;
    for k in 0..n {
        match slap_step_full(poly, s) {
            Ok((s1, edge)) => {
                s = s1;
                points.push(s1);
                edges.push(edge);
            }
            Err(_) => {
                termination = SlapEnd::HitVertex(k);
                break;
            }
        }
    }
    SlapOrbit {
        points,
        edges,
        termination,
    }
}

/// Minimum expansion rate of the slap map, `min 1/|cos φ|` over the angles φ
/// between supporting lines of sides that see each other (φ = 0 for
/// parallel pairs). Equals 1 exactly when some seeing pair is parallel.
pub fn slap_expansion(poly: &Polygon) -> f64 {
    let mut best = f64::INFINITY;
    for (i, j) in poly.seeing_pairs() {
        let cos_phi = poly.edge_dir(i).dot(poly.edge_dir(j)).abs();
        best = best.min(1.0 / cos_phi.min(1.0));
    }
    best
}

/// One orthogonal vertex connection: a chain of projections onto the listed
/// edges' supporting lines, starting at vertex `from` and ending at vertex
/// `to`, of order `itinerary.len()`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct VertexConnection {
    pub from: usize,
    pub to: usize,
    pub itinerary: Vec<usize>,
}

impl VertexConnection {
    pub fn order(&self) -> usize {
        self.itinerary.len()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexConnectionReport {
    pub searched_order: usize,
    pub found: Vec<VertexConnection>,
    /// Orbit points that approached a vertex within `TOL_NEAR` without a
    /// declared hit; nonzero values call for certified re-checking.
    pub near_misses: usize,
}

/// Interior slap orbit launched from a vertex along the inward normal of an
/// adjacent edge. `None` when the normal ray exits the polygon (acute
/// corner) — the reversal of such a launch cannot be a projection chain.
fn vertex_launch(poly: &Polygon, vertex: usize, edge: usize) -> Option<(Point, Point)> {
    let v = poly.vertex(vertex);
    let dir = poly.inward_normal(edge);
    let probe = v + dir * (1e-7 * poly.perimeter());
    match poly.locate(probe) {
        crate::geometry::Location::Outside => None,
        _ => Some((v, dir)),
    }
}

/// Forward search for orthogonal vertex connections up to order `m`.
///
/// Reversed projection chains are slap orbits from vertices, so one
/// deterministic orbit per (vertex, adjacent edge) pair suffices; branching
/// is confined to the launch.
pub fn find_vertex_connections(poly: &Polygon, m: usize) -> VertexConnectionReport {
    let n = poly.num_sides();
    let mut found = Vec::new();
    let mut near_misses = 0usize;
    for v in 0..n {
        // Supporting lines through vertex v: its two adjacent edges.
        for launch_edge in [v, (v + n - 1) % n] {
            let Some((mut point, mut dir)) = vertex_launch(poly, v, launch_edge) else {
                continue;
            };
            let mut visited_edges = vec![launch_edge];
            for step in 1..=m {
                let Some(hit) = first_hit(poly, point, dir, 1e-12 * poly.perimeter()) else {
                    break;
                };
                let e_len = poly.edge_length(hit.edge);
                let end_dist = hit.local.min(e_len - hit.local);
                let landing = point + dir * hit.t;
                if end_dist < TOL_CONN {
                    let to_vertex = if hit.local < e_len - hit.local {
                        hit.edge
                    } else {
                        (hit.edge + 1) % n
                    };
                    // Reverse the slap orbit into a projection chain.
                    let mut itinerary = visited_edges.clone();
                    itinerary.reverse();
                    let conn = VertexConnection {
                        from: to_vertex,
                        to: v,
                        itinerary,
                    };
                    if step > 0 {
                        found.push(conn);
                    }
                    break;
                }
                if end_dist < TOL_NEAR {
                    near_misses += 1;
                }
                let _ = step;
                visited_edges.push(hit.edge);
                point = landing;
                dir = poly.inward_normal(hit.edge);
            }
        }
    }
    VertexConnectionReport {
        searched_order: m,
        found,
        near_misses,
    }
}

/// How to re-verify the floating search exactly.
#[derive(Clone, Copy, Debug)]
pub enum CertificateMode {
    /// Replay candidate orbits in exact rational arithmetic on the literal
    /// (dyadic-rational) vertex coordinates. Sound for tables whose
    /// vertices are exact in double precision, e.g. the unit square.
    RationalReplay,
    /// Certify through the exact reduced slap map of the regular d-gon in
    /// Q(β): vertex launches land at 1/(2β) or 1 - 1/(2β) in reduced
    /// coordinates and iterate by s ↦ -(1/β)(s - 1/2) + ε(s).
    RegularExact(usize),
}

#[derive(Clone, Debug)]
pub struct CertifiedReport {
    pub report: VertexConnectionReport,
    pub mode: String,
    /// Every declared connection was re-verified exactly.
    pub all_confirmed: bool,
    /// Exact proof that no connection of order ≤ m exists (only attainable
    /// in `RegularExact` mode when nothing was found).
    pub none_certified: bool,
}

/// Runs the floating search and re-verifies it in the requested exact mode.
pub fn certify_connections(poly: &Polygon, m: usize, mode: CertificateMode) -> CertifiedReport {
    let report = find_vertex_connections(poly, m);
    match mode {
        CertificateMode::RationalReplay => {
            let all_confirmed = report
                .found
                .iter()
                .all(|c| rational_replay_confirms(poly, c));
            CertifiedReport {
                report,
                mode: "rational-replay".to_string(),
                all_confirmed,
                none_certified: false,
            }
        }
        CertificateMode::RegularExact(d) => {
            let (exists, order) = regular_connection_exact(d, m);
            let consistent = if report.found.is_empty() {
                !exists
            } else {
                exists && report.found.iter().any(|c| Some(c.order()) == order)
            };
            CertifiedReport {
                report,
                mode: format!("regular-exact({d})"),
                all_confirmed: consistent && exists,
                none_certified: consistent && !exists,
            }
        }
    }
}

/// Exact decision for the regular d-gon: does a vertex-launched slap orbit
/// hit a vertex within `m` steps? Returns the earliest order when it does.
///
/// Even d: the reduced slap map is s ↦ 1-s, and a vertex launch lands on a
/// vertex immediately (order 1). Odd d: launches land at 1/(2β) or
/// 1 - 1/(2β); by the involution symmetry the two orbits mirror each other,
/// and a vertex hit means an iterate equals 0 or 1 exactly. Interior angles
/// are obtuse for d ≥ 5, so the launches are admissible; the equilateral
/// triangle has acute corners and no admissible launch at all.
pub fn regular_connection_exact(d: usize, m: usize) -> (bool, Option<usize>) {
    if d == 3 {
        return (false, None);
    }
    if d % 2 == 0 {
        return (true, Some(1));
    }
    let field = crate::algebra::CosField::new(d);
    let beta = AlgebraicNumber::beta(&field);
    let two = AlgebraicNumber::from_int(&field, 2);
    let one = AlgebraicNumber::from_int(&field, 1);
    let inv_2beta = one.div(&two.mul(&beta).unwrap()).unwrap();
    let starts = [inv_2beta.clone(), one.sub(&inv_2beta).unwrap()];
    let zero_r = BigRational::zero();
    let one_r = BigRational::one();
    for start in starts {
        if m == 0 {
            continue;
        }
        let orbit = exact_slap_iterate(&field, start, m - 1)
            .expect("sign certification terminates for nonzero differences");
        for (j, p) in orbit.points.iter().enumerate() {
            if p.eq_rational(&zero_r) || p.eq_rational(&one_r) {
                return (true, Some(j + 1));
            }
        }
    }
    (false, None)
}

/// Exact rational replay of the slap orbit behind a declared connection.
/// All coordinates stay in Q (f64 inputs are dyadic rationals), so hits are
/// decided exactly; capped at 12 steps to bound coefficient growth.
fn rational_replay_confirms(poly: &Polygon, conn: &VertexConnection) -> bool {
    if conn.order() > 12 {
        return false;
    }
    let n = poly.num_sides();
    let verts: Vec<(BigRational, BigRational)> = poly
        .vertices()
        .iter()
        .map(|p| {
            (
                BigRational::from_float(p.x).unwrap(),
                BigRational::from_float(p.y).unwrap(),
            )
        })
        .collect();
    // Forward slap orbit: launch edge is the last itinerary entry, start
    // vertex is `to`.
    let launch_edge = *conn.itinerary.last().unwrap();
    let mut cur = verts[conn.to].clone();
    let mut cur_edge = launch_edge;
    for step in 0..conn.order() {
        let (next, edge, at_vertex) = match rational_slap_step(&verts, n, &cur, cur_edge) {
            Some(v) => v,
            None => return false,
        };
        let is_last = step + 1 == conn.order();
        if is_last {
            return at_vertex == Some(conn.from);
        }
        if at_vertex.is_some() {
            return false;
        }
        cur = next;
        cur_edge = edge;
    }
    false
}

type RatPoint = (BigRational, BigRational);

/// One exact slap step from a point on `edge`: cast the inward-normal ray
/// and return the hit, its edge, and the vertex index when the hit is an
/// exact endpoint.
fn rational_slap_step(
    verts: &[RatPoint],
    n: usize,
    p: &RatPoint,
    edge: usize,
) -> Option<(RatPoint, usize, Option<usize>)> {
    let sub = |a: &RatPoint, b: &RatPoint| (&a.0 - &b.0, &a.1 - &b.1);
    let cross = |a: &RatPoint, b: &RatPoint| &a.0 * &b.1 - &a.1 * &b.0;
    let e = sub(&verts[(edge + 1) % n], &verts[edge]);
    // Inward normal for a counterclockwise boundary: rotate the edge vector
    // by +90 degrees (no normalization needed for exact ray casting).
    let dir: RatPoint = (-e.1.clone(), e.0.clone());

    let mut best: Option<(BigRational, usize, BigRational)> = None; // (t, edge, u)
    for j in 0..n {
        let a = &verts[j];
        let b = &verts[(j + 1) % n];
        let ej = sub(b, a);
        let denom = cross(&dir, &ej);
        let ap = sub(a, p);
        if denom.is_zero() {
            // Collinear overlap: hit the nearest forward endpoint.
            if cross(&ap, &dir).is_zero() {
                let d2 = &dir.0 * &dir.0 + &dir.1 * &dir.1;
                for (end, u_val) in [(a, BigRational::zero()), (b, BigRational::one())] {
                    let t = (&(&end.0 - &p.0) * &dir.0 + &(&end.1 - &p.1) * &dir.1) / &d2;
                    if t.is_positive() && best.as_ref().map_or(true, |(bt, _, _)| &t < bt) {
                        best = Some((t, j, u_val.clone()));
                    }
                }
            }
            continue;
        }
        let t = cross(&ap, &ej) / &denom;
        let u = cross(&ap, &dir) / &denom;
        if t.is_positive() && !u.is_negative() && u <= BigRational::one() {
            if best.as_ref().map_or(true, |(bt, _, _)| &t < bt) {
                best = Some((t, j, u));
            }
        }
    }
    let (t, j, u) = best?;
    let hit = (&p.0 + &dir.0 * &t, &p.1 + &dir.1 * &t);
    let at_vertex = if u.is_zero() {
        Some(j)
    } else if u.is_one() {
        Some((j + 1) % n)
    } else {
        None
    };
    Some((hit, j, at_vertex))
}

/// Points of the slap singular set: arclengths whose inward-normal ray hits
/// a vertex (the feet of perpendiculars from vertices to side interiors).
pub fn slap_singular_points(poly: &Polygon) -> Vec<f64> {
    let n = poly.num_sides();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if j == i || j == (i + 1) % n {
                continue;
            }
            let rel = poly.vertex(j) - poly.vertex(i);
            let along = rel.dot(poly.edge_dir(i));
            if along <= TOL_GEOM || along >= poly.edge_length(i) - TOL_GEOM {
                continue;
            }
            let foot = poly.vertex(i) + poly.edge_dir(i) * along;
            if !poly.segment_inside(foot, poly.vertex(j)) {
                continue;
            }
            // The vertex must be the first hit of the normal ray.
            if let Some(hit) = first_hit(poly, foot, poly.inward_normal(i), 1e-12) {
                if (foot + poly.inward_normal(i) * hit.t).dist(poly.vertex(j)) < 1e-9 {
                    out.push(poly.cum_arclength()[i] + along);
                }
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::billiard::{step, PhasePoint};
    use crate::geometry::{equilateral_triangle, unit_square};
    use crate::reflection::ReflectionLaw;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn square_normal_bounce() {
        let p = unit_square();
        let s1 = slap_step(&p, 0.3).unwrap();
        // (0.3, 0) projects to (0.3, 1): arclength 2 + 0.7.
        assert!((s1 - 2.7).abs() < 1e-12);
    }

    #[test]
    fn pentagon_midpoint_hits_opposite_vertex() {
        // For odd d the side midpoint's normal ray ends at the opposite
        // vertex: the midpoints are exactly the slap singular set.
        let p = Polygon::regular(5, 1.0);
        assert_eq!(slap_step(&p, 0.5), Err(StepError::HitVertex));
    }

    #[test]
    fn pentagon_step_is_normal_ray() {
        let p = Polygon::regular(5, 1.0);
        let s = 0.31;
        let (s1, edge) = slap_step_full(&p, s).unwrap();
        let from = p.point_at(s).unwrap().point;
        let to = p.point_at(s1).unwrap().point;
        let dir = to - from;
        // The ray is normal to the source edge and the landing lies on the
        // reported edge.
        assert!(dir.normalize().dot(p.edge_dir(0)).abs() < 1e-12);
        assert!((to - p.vertex(edge)).cross(p.edge_dir(edge)).abs() < 1e-9);
    }

    #[test]
    fn slap_agrees_with_billiard_at_theta_zero() {
        let slap_law = ReflectionLaw::slap();
        for poly in [unit_square(), Polygon::regular(5, 1.0), equilateral_triangle()] {
            let mut state = 0.37_f64;
            let mut checked = 0;
            while checked < 300 {
                state = (state * 9301.0 + 49297.0) % 233280.0;
                let s = state / 233280.0 * poly.perimeter();
                let a = slap_step(&poly, s);
                let b = step(&poly, &slap_law, PhasePoint::new(s, 0.0));
                match (a, b) {
                    (Ok(sa), Ok(xb)) => {
                        assert!((sa - xb.s).abs() < 1e-9);
                        assert_eq!(xb.theta, 0.0);
                        checked += 1;
                    }
                    (Err(_), Err(_)) => {}
                    (ra, rb) => panic!("disagree at s = {s}: {ra:?} vs {rb:?}"),
                }
            }
        }
    }

    #[test]
    fn slap_branch_slope_matches_pair_angle() {
        let p = Polygon::regular(5, 1.0);
        let h = 1e-7;
        for s in [0.2, 0.37, 0.8, 1.3, 2.6] {
            let (s1, edge_to) = slap_step_full(&p, s).unwrap();
            let edge_from = p.edge_of(s);
            let plus = slap_step(&p, s + h).unwrap();
            let minus = slap_step(&p, s - h).unwrap();
            let slope = (plus - minus) / (2.0 * h);
            let cos_phi = p.edge_dir(edge_from).dot(p.edge_dir(edge_to)).abs();
            assert!((slope.abs() - 1.0 / cos_phi).abs() < 1e-6, "s = {s}, slope {slope}");
            let _ = s1;
        }
    }

    #[test]
    fn expansion_rates() {
        assert!((slap_expansion(&unit_square()) - 1.0).abs() < 1e-12);
        assert!((slap_expansion(&equilateral_triangle()) - 2.0).abs() < 1e-9);
        let pentagon = Polygon::regular(5, 1.0);
        assert!((slap_expansion(&pentagon) - 1.0 / (PI / 5.0).cos()).abs() < 1e-9);
    }

    #[test]
    fn square_has_order_one_connections() {
        let p = unit_square();
        let report = find_vertex_connections(&p, 5);
        assert!(!report.found.is_empty());
        assert!(report.found.iter().any(|c| c.order() == 1));
        let cert = certify_connections(&p, 5, CertificateMode::RationalReplay);
        assert!(cert.all_confirmed);
    }

    #[test]
    fn triangle_has_no_admissible_launches() {
        // Acute corners: vertex normals leave the table, and condition (d)
        // excludes the trivial fixed points.
        let report = find_vertex_connections(&equilateral_triangle(), 10);
        assert!(report.found.is_empty());
        let (exists, _) = regular_connection_exact(3, 10);
        assert!(!exists);
    }

    #[test]
    fn pentagon_reports_none_certified() {
        let p = Polygon::regular(5, 1.0);
        let report = find_vertex_connections(&p, 30);
        assert!(report.found.is_empty(), "found: {:?}", report.found);
        let cert = certify_connections(&p, 30, CertificateMode::RegularExact(5));
        assert!(cert.none_certified);
    }

    #[test]
    fn heptagon_reports_none_certified() {
        let p = Polygon::regular(7, 1.0);
        let cert = certify_connections(&p, 20, CertificateMode::RegularExact(7));
        assert!(cert.report.found.is_empty());
        assert!(cert.none_certified);
    }

    #[test]
    fn even_gons_connect_immediately() {
        for d in [4usize, 6, 8] {
            let p = Polygon::regular(d, 1.0);
            let report = find_vertex_connections(&p, 3);
            assert!(
                report.found.iter().any(|c| c.order() == 1),
                "d = {d}: {:?}",
                report.found
            );
            let (exists, order) = regular_connection_exact(d, 3);
            assert!(exists && order == Some(1));
        }
    }

    #[test]
    fn exact_and_float_reduced_launches_agree() {
        // The pentagon vertex launch lands at 1 - 1/(2β) in reduced
        // coordinates; compare with the geometric orbit.
        let d = 5;
        let p = Polygon::regular(d, 1.0);
        let v = p.vertex(1);
        let dir = p.inward_normal(0);
        let hit = first_hit(&p, v, dir, 1e-12).unwrap();
        let beta = (PI / d as f64).cos();
        let expected = 1.0 - 1.0 / (2.0 * beta);
        let local_frac = hit.local / p.edge_length(hit.edge);
        // Reduced coordinate of the landing (sides have unit length).
        assert!(
            (local_frac - expected).abs() < 1e-9 || (local_frac - (1.0 - expected)).abs() < 1e-9,
            "landing at {local_frac}, expected {expected} up to mirror"
        );
    }

    #[test]
    fn square_has_no_slap_singular_points() {
        // No vertex projects into the interior of a side: the slap map of
        // the square is globally smooth.
        assert!(slap_singular_points(&unit_square()).is_empty());
    }

    #[test]
    fn pentagon_singular_points_are_midpoints() {
        let p = Polygon::regular(5, 1.0);
        let pts = slap_singular_points(&p);
        assert_eq!(pts.len(), 5);
        for (i, s) in pts.iter().enumerate() {
            assert!((s - (i as f64 + 0.5)).abs() < 1e-9, "s = {s}");
        }
    }
}
