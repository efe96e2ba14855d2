//! The billiard map `Φ_f = R_f ∘ Φ̄`: free flight to the boundary followed by
//! the reflection law applied to the specular angle.
//!
//! Phase points are `(s, θ)` with `s` the boundary arclength and `θ` the
//! outgoing angle from the inward normal, so the outgoing direction forms the
//! angle `π/2 - θ` with the boundary tangent ζ'(s). Along an orbit the
//! derivative of the n-step map is upper triangular,
//!
//! ```text
//! DΦ_f^n = (-1)^n [ α_n  γ_n ]        α_n = (cos θ_0 / cos θ̄_n) Λ_{n-1}
//!                 [  0   β_n ]        β_n = Π f'(θ̄_i),  Λ_k = Π ρ(θ̄_i)
//! ```
//!
//! with `ρ(θ) = cos(f(θ))/cos θ ≥ 1`. The cocycle is accumulated with the
//! one-step recursion implied by the chain rule, and a log-sum is kept in
//! parallel so Lyapunov estimates never form the raw product.
//!
//! Corner hits and tangential rays terminate orbits: a hit within `TOL_GEOM`
//! of a vertex is classified as singular (conservative convention).

use rand::Rng;
use thiserror::Error;

use crate::geometry::{Point, Polygon};
use crate::reflection::ReflectionLaw;
use crate::TOL_GEOM;

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

/// A collision: arclength `s ∈ (0,|∂P|)` strictly inside an edge, outgoing
/// angle `|θ| < π/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub s: f64,
    pub theta: f64,
}

impl PhasePoint {
    pub fn new(s: f64, theta: f64) -> Self {
        Self { s, theta }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("trajectory hits a vertex")]
    HitVertex,
    #[error("trajectory tangent to a side")]
    TangentRay,
    #[error("arclength {0} is outside the boundary range")]
    OutOfRange(f64),
}

/// One free flight: departure and arrival data before the reflection law is
/// applied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlightResult {
    pub s1: f64,
    /// Specular (pre-reflection-law) angle at the arrival side.
    pub theta_bar1: f64,
    /// Flight length.
    pub t: f64,
    pub edge_from: usize,
    pub edge_to: usize,
}

/// Why an orbit stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitEnd {
    Completed,
    HitVertex(usize),
    TangentRay(usize),
}

/// Entries of `DΦ_f^n` along an orbit, plus numerically stable log forms.
#[derive(Clone, Copy, Debug)]
pub struct Cocycle {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Λ_{n-1}(s_1, θ_1) = Π_{i=1}^{n-1} ρ(θ̄_i) ≥ 1.
    pub lambda: f64,
    /// (-1)^n factor in front of the triangular matrix.
    pub sign: f64,
    pub log_alpha: f64,
    pub log_lambda: f64,
}

/// An orbit segment: points `(s_i, θ_i)` for `i = 0..=k`, specular angles
/// `θ̄_i` for `i = 1..=k`, flight lengths `t(x_i)` for `i = 0..k`.
#[derive(Clone, Debug)]
pub struct Orbit {
    pub points: Vec<PhasePoint>,
    pub theta_bars: Vec<f64>,
    pub flights: Vec<f64>,
    pub edges: Vec<usize>,
    pub termination: OrbitEnd,
    /// `cocycles[k]` holds the entries of `DΦ_f^{k+1}`; present when
    /// requested.
    pub cocycles: Option<Vec<Cocycle>>,
}

impl Orbit {
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }
}

/// Raw first hit of a ray against the boundary.
#[derive(Clone, Copy, Debug)]
pub(crate) struct RayHit {
    pub(crate) t: f64,
    pub(crate) edge: usize,
    /// Distance along the edge from its start vertex.
    pub(crate) local: f64,
}

/// Earliest boundary hit of the ray `o + t v`, `t > t_min`. Collinear
/// overlaps with an edge resolve to the nearest forward endpoint.
pub(crate) fn first_hit(poly: &Polygon, o: Point, v: Point, t_min: f64) -> Option<RayHit> {
    let n = poly.num_sides();
    let mut best: Option<RayHit> = None;
    for j in 0..n {
        let a = poly.vertex(j);
        let e_dir = poly.edge_dir(j);
        let e_len = poly.edge_length(j);
        let denom = v.cross(e_dir);
        if denom.abs() < 1e-14 {
            // Parallel; a collinear ray can still run along the edge.
            if (a - o).cross(v).abs() < TOL_GEOM {
                for endpoint_t in [(a - o).dot(v), (a + e_dir * e_len - o).dot(v)] {
                    if endpoint_t > t_min
                        && best.map_or(true, |b| endpoint_t < b.t)
                        && (o + v * endpoint_t).dist(a + e_dir * (o + v * endpoint_t - a).dot(e_dir))
                            < 1e-9
                    {
                        let local = (o + v * endpoint_t - a).dot(e_dir);
                        if (-TOL_GEOM..=e_len + TOL_GEOM).contains(&local) {
                            best = Some(RayHit {
                                t: endpoint_t,
                                edge: j,
                                local: local.clamp(0.0, e_len),
                            });
                        }
                    }
                }
            }
            continue;
        }
        let t = (a - o).cross(e_dir) / denom;
        let u = (a - o).cross(v) / denom;
        let local = u * e_len;
        if t > t_min && (-TOL_GEOM..=e_len + TOL_GEOM).contains(&local) {
            if best.map_or(true, |b| t < b.t) {
                best = Some(RayHit {
                    t,
                    edge: j,
                    local: local.clamp(0.0, e_len),
                });
            }
        }
    }
    best
}

/// Outgoing direction of the phase point: at angle `π/2 - θ` from the edge
/// tangent, i.e. `d̂ sin θ + n̂ cos θ`.
fn outgoing_dir(poly: &Polygon, edge: usize, theta: f64) -> Point {
    let d = poly.edge_dir(edge);
    let n = poly.inward_normal(edge);
    d * theta.sin() + n * theta.cos()
}

/// Specular angle predicted by the side-pair angle: `θ̄_1 = π - δ(L_0,L_1) - θ`,
/// reduced to (-π/2, π/2).
pub fn theta_bar_from_delta(delta: f64, theta: f64) -> f64 {
    let mut v = std::f64::consts::PI - delta - theta;
    while v <= -std::f64::consts::PI {
        v += 2.0 * std::f64::consts::PI;
    }
    while v > std::f64::consts::PI {
        v -= 2.0 * std::f64::consts::PI;
    }
    v
}

/// First boundary hit of the ray leaving `x`, with the specular angle at the
/// arrival side. Vertex hits (within `TOL_GEOM`) and tangential rays are
/// singular.
pub fn flight(poly: &Polygon, x: PhasePoint) -> Result<FlightResult, StepError> {
    if !(0.0..=poly.perimeter()).contains(&x.s) {
        return Err(StepError::OutOfRange(x.s));
    }
    if x.theta.abs() >= HALF_PI - TOL_GEOM {
        return Err(StepError::TangentRay);
    }
    let edge_from = poly.edge_of(x.s);
    let local0 = x.s - poly.cum_arclength()[edge_from];
    if local0 < TOL_GEOM || local0 > poly.edge_length(edge_from) - TOL_GEOM {
        return Err(StepError::HitVertex);
    }
    let o = poly.vertex(edge_from) + poly.edge_dir(edge_from) * local0;
    let v = outgoing_dir(poly, edge_from, x.theta);
    let hit = first_hit(poly, o, v, 1e-12 * poly.perimeter()).ok_or(StepError::HitVertex)?;
    let e_len = poly.edge_length(hit.edge);
    if hit.local < TOL_GEOM || hit.local > e_len - TOL_GEOM {
        return Err(StepError::HitVertex);
    }

    let d1 = poly.edge_dir(hit.edge);
    let n1 = poly.inward_normal(hit.edge);
    // Specular reflection of v at the arrival side.
    let v_bar = d1 * v.dot(d1) - n1 * v.dot(n1);
    let theta_bar1 = d1.dot(v_bar).atan2(n1.dot(v_bar));
    debug_assert!({
        let delta = poly.delta_angle(edge_from, hit.edge).unwrap_or(0.0);
        hit.edge == edge_from
            || (theta_bar_from_delta(delta, x.theta) - theta_bar1).abs() < 1e-9
    });

    Ok(FlightResult {
        s1: poly.cum_arclength()[hit.edge] + hit.local,
        theta_bar1,
        t: hit.t,
        edge_from,
        edge_to: hit.edge,
    })
}

/// One application of the billiard map: `(s_1, f(θ̄_1))`.
pub fn step(
    poly: &Polygon,
    law: &ReflectionLaw,
    x: PhasePoint,
) -> Result<PhasePoint, StepError> {
    let fl = flight(poly, x)?;
    Ok(PhasePoint::new(fl.s1, law.eval(fl.theta_bar1)))
}

/// Expansion factor `ρ(θ̄) = cos(f(θ̄)) / cos(θ̄) ≥ 1`.
pub fn rho(law: &ReflectionLaw, theta_bar: f64) -> f64 {
    law.eval(theta_bar).cos() / theta_bar.cos()
}

/// Iterates the billiard map for up to `n` steps, optionally accumulating the
/// derivative cocycle.
pub fn iterate(
    poly: &Polygon,
    law: &ReflectionLaw,
    x0: PhasePoint,
    n: usize,
    record_cocycle: bool,
) -> Orbit {
    let mut points = Vec::with_capacity(n + 1);
    let mut theta_bars = Vec::with_capacity(n);
    let mut flights = Vec::with_capacity(n);
    let mut edges = Vec::with_capacity(n + 1);
    let mut cocycles = record_cocycle.then(|| Vec::with_capacity(n));
    points.push(x0);
    edges.push(poly.edge_of(x0.s));

    let mut x = x0;
    let mut termination = OrbitEnd::Completed;

    // Cocycle accumulators for DΦ^k.
    let mut alpha = 1.0_f64;
    let mut beta = 1.0_f64;
    let mut gamma = 0.0_f64;
    let mut lambda = 1.0_f64;
    let mut log_lambda = 0.0_f64;
    let mut prev_theta_bar: Option<f64> = None;

    for k in 0..n {
        let fl = match flight(poly, x) {
            Ok(fl) => fl,
            Err(StepError::TangentRay) => {
                termination = OrbitEnd::TangentRay(k);
                break;
            }
            Err(_) => {
                termination = OrbitEnd::HitVertex(k);
                break;
            }
        };
        let theta1 = law.eval(fl.theta_bar1);

        if record_cocycle {
            // One-step factor DΦ(x_k) applied on the left of DΦ^k.
            if let Some(tb) = prev_theta_bar {
                let r = rho(law, tb);
                lambda *= r;
                log_lambda += r.ln();
            }
            let a = x.theta.cos() / fl.theta_bar1.cos();
            let b = fl.t / fl.theta_bar1.cos();
            gamma = a * gamma + b * beta;
            alpha *= a;
            beta *= law.deriv(fl.theta_bar1);
            let log_alpha =
                points[0].theta.cos().ln() - fl.theta_bar1.cos().ln() + log_lambda;
            cocycles.as_mut().unwrap().push(Cocycle {
                alpha,
                beta,
                gamma,
                lambda,
                sign: if (k + 1) % 2 == 0 { 1.0 } else { -1.0 },
                log_alpha,
                log_lambda,
            });
        }
        prev_theta_bar = Some(fl.theta_bar1);

        x = PhasePoint::new(fl.s1, theta1);
        points.push(x);
        theta_bars.push(fl.theta_bar1);
        flights.push(fl.t);
        edges.push(fl.edge_to);
    }

    Orbit {
        points,
        theta_bars,
        flights,
        edges,
        termination,
        cocycles,
    }
}

/// Jacobian of the one-step map, `J = |cos θ_0 / cos θ̄_1| · |f'(θ̄_1)|`.
pub fn jacobian(
    poly: &Polygon,
    law: &ReflectionLaw,
    x: PhasePoint,
) -> Result<f64, StepError> {
    let fl = flight(poly, x)?;
    Ok((x.theta.cos() / fl.theta_bar1.cos()).abs() * law.deriv(fl.theta_bar1).abs())
}

/// Uniform random phase point in `M`.
pub fn random_phase_point<R: Rng + ?Sized>(poly: &Polygon, rng: &mut R) -> PhasePoint {
    PhasePoint::new(
        rng.gen_range(0.0..poly.perimeter()),
        rng.gen_range(-HALF_PI..HALF_PI),
    )
}

/// Random phase point whose orbit stays regular for `n` steps.
pub fn random_regular_point<R: Rng + ?Sized>(
    poly: &Polygon,
    law: &ReflectionLaw,
    n: usize,
    rng: &mut R,
) -> PhasePoint {
    loop {
        let x = random_phase_point(poly, rng);
        let orbit = iterate(poly, law, x, n, false);
        if orbit.termination == OrbitEnd::Completed {
            return x;
        }
    }
}

/// One analytic branch of the singular set S₁⁺: collisions on edge `k` whose
/// flight ends at vertex `j`. The branch is the graph of
/// `θ = arctan((s̄ - s)/l)` over a closed arclength interval, `l` the distance
/// from the vertex to the supporting line and `s̄` its abscissa in the edge
/// frame; the graph is strictly decreasing.
#[derive(Clone, Debug)]
pub struct SingularCurve {
    pub edge: usize,
    pub vertex: usize,
    /// Closed domain [s_lo, s_hi] in global arclength.
    pub s_lo: f64,
    pub s_hi: f64,
    /// Abscissa of the vertex in the edge frame (global arclength units).
    pub s_bar: f64,
    /// Distance from the vertex to the supporting line of the edge.
    pub dist: f64,
}

impl SingularCurve {
    pub fn theta(&self, s: f64) -> f64 {
        ((self.s_bar - s) / self.dist).atan()
    }

    /// dθ/ds = -l / (l² + (s̄-s)²) < 0.
    pub fn theta_deriv(&self, s: f64) -> f64 {
        -self.dist / (self.dist * self.dist + (self.s_bar - s) * (self.s_bar - s))
    }

    pub fn sample(&self, resolution: usize) -> Vec<PhasePoint> {
        (0..resolution)
            .map(|i| {
                let s = self.s_lo
                    + (self.s_hi - self.s_lo) * i as f64 / (resolution - 1) as f64;
                PhasePoint::new(s, self.theta(s))
            })
            .collect()
    }
}

/// Whether the open segment from ζ(s) to vertex `j` is a direct flight (the
/// vertex is the first boundary hit).
fn vertex_directly_visible(poly: &Polygon, s: f64, j: usize) -> bool {
    let edge = poly.edge_of(s);
    let local = s - poly.cum_arclength()[edge];
    let o = poly.vertex(edge) + poly.edge_dir(edge) * local;
    let target = poly.vertex(j);
    let d = target - o;
    let dist = d.norm();
    if dist < TOL_GEOM {
        return false;
    }
    let v = d * (1.0 / dist);
    // The ray must leave into the table.
    if poly.inward_normal(edge).dot(v) <= TOL_GEOM {
        return false;
    }
    match first_hit(poly, o, v, 1e-12 * poly.perimeter()) {
        Some(hit) => (hit.t - dist).abs() < 1e-9 * poly.perimeter().max(1.0),
        None => false,
    }
}

/// All branches of S₁⁺: for every edge and every vertex not an endpoint of
/// that edge, the maximal visibility intervals, with endpoints refined by
/// bisection.
pub fn singular_set_s1(poly: &Polygon) -> Vec<SingularCurve> {
    const SCAN: usize = 512;
    let n = poly.num_sides();
    let mut curves = Vec::new();
    for k in 0..n {
        let s_start = poly.cum_arclength()[k];
        let len = poly.edge_length(k);
        for j in 0..n {
            if j == k || j == (k + 1) % n {
                continue;
            }
            let rel = poly.vertex(j) - poly.vertex(k);
            let dist = rel.dot(poly.inward_normal(k));
            if dist <= TOL_GEOM {
                // Vertex on or behind the supporting line: no interior flight.
                continue;
            }
            let s_bar = s_start + rel.dot(poly.edge_dir(k));

            // Scan the edge for visibility runs.
            let probe = |frac: f64| -> bool {
                vertex_directly_visible(poly, s_start + frac * len, j)
            };
            let mut runs: Vec<(f64, f64)> = Vec::new();
            let mut run_start: Option<f64> = None;
            let fracs: Vec<f64> = (0..=SCAN)
                .map(|i| (i as f64 / SCAN as f64).clamp(1e-9, 1.0 - 1e-9))
                .collect();
            for (idx, &fr) in fracs.iter().enumerate() {
                let vis = probe(fr);
                match (vis, run_start) {
                    (true, None) => run_start = Some(fr),
                    (false, Some(start)) => {
                        runs.push((start, fracs[idx - 1]));
                        run_start = None;
                    }
                    _ => {}
                }
            }
            if let Some(start) = run_start {
                runs.push((start, *fracs.last().unwrap()));
            }

            for (mut lo, mut hi) in runs {
                // Refine both endpoints by bisection against the neighbouring
                // invisible samples (or the edge ends).
                let mut out_lo = (lo - 1.0 / SCAN as f64).max(0.0);
                if !probe(out_lo) {
                    for _ in 0..50 {
                        let mid = 0.5 * (out_lo + lo);
                        if probe(mid) {
                            lo = mid;
                        } else {
                            out_lo = mid;
                        }
                    }
                } else {
                    lo = 0.0;
                }
                let mut out_hi = (hi + 1.0 / SCAN as f64).min(1.0);
                if !probe(out_hi) {
                    for _ in 0..50 {
                        let mid = 0.5 * (hi + out_hi);
                        if probe(mid) {
                            hi = mid;
                        } else {
                            out_hi = mid;
                        }
                    }
                } else {
                    hi = 1.0;
                }
                if (hi - lo) * len < 1e-9 {
                    continue;
                }
                curves.push(SingularCurve {
                    edge: k,
                    vertex: j,
                    s_lo: s_start + lo * len,
                    s_hi: s_start + hi * len,
                    s_bar,
                    dist,
                });
            }
        }
    }
    curves
}

/// A branch of S₁⁻ = F(S₁⁺) with F(s,θ) = (s, f(-θ)); strictly increasing
/// when f' > 0, strictly decreasing when f' < 0.
#[derive(Clone, Debug)]
pub struct MappedCurve {
    pub base: SingularCurve,
}

impl MappedCurve {
    pub fn theta(&self, law: &ReflectionLaw, s: f64) -> f64 {
        law.eval(-self.base.theta(s))
    }
}

pub fn singular_set_s1_minus(poly: &Polygon) -> Vec<MappedCurve> {
    singular_set_s1(poly)
        .into_iter()
        .map(|base| MappedCurve { base })
        .collect()
}

/// A sampled component of a pullback of S₁⁺.
#[derive(Clone, Debug)]
pub struct SampledCurve {
    /// Number of inverse-branch applications (0 for S₁⁺ itself).
    pub depth: usize,
    /// Index of the ancestor S₁⁺ branch.
    pub source: usize,
    pub points: Vec<PhasePoint>,
}

/// Preimage of a phase point under the billiard map, if it exists: invert
/// the reflection law, reflect, and cast the ray backwards.
pub fn preimage(poly: &Polygon, law: &ReflectionLaw, y: PhasePoint) -> Option<PhasePoint> {
    let theta_bar = law.invert(y.theta)?;
    let edge = poly.edge_of(y.s);
    let local = y.s - poly.cum_arclength()[edge];
    if local < TOL_GEOM || local > poly.edge_length(edge) - TOL_GEOM {
        return None;
    }
    let d = poly.edge_dir(edge);
    let nrm = poly.inward_normal(edge);
    // Incoming velocity whose specular reflection leaves at angle θ̄.
    let v_in = d * theta_bar.sin() - nrm * theta_bar.cos();
    let o = poly.vertex(edge) + d * local;
    let hit = first_hit(poly, o, -v_in, 1e-12 * poly.perimeter())?;
    let e_len = poly.edge_length(hit.edge);
    if hit.local < TOL_GEOM || hit.local > e_len - TOL_GEOM {
        return None;
    }
    let d0 = poly.edge_dir(hit.edge);
    let n0 = poly.inward_normal(hit.edge);
    let cos_part = n0.dot(v_in);
    if cos_part <= TOL_GEOM {
        return None;
    }
    let theta0 = d0.dot(v_in).atan2(cos_part);
    Some(PhasePoint::new(
        poly.cum_arclength()[hit.edge] + hit.local,
        theta0,
    ))
}

/// Polyline approximation of `S_m⁺ = S₁⁺ ∪ Φ⁻¹(S₁⁺) ∪ … ∪ Φ⁻(m-1)(S₁⁺)`:
/// every S₁⁺ branch is densely sampled and pulled back through the inverse
/// branches, splitting components where the preimage jumps edges or ceases
/// to exist.
pub fn pullback_singular(
    poly: &Polygon,
    law: &ReflectionLaw,
    m: usize,
    resolution: usize,
) -> Vec<SampledCurve> {
    assert!(m >= 1);
    let base = singular_set_s1(poly);
    let mut out: Vec<SampledCurve> = base
        .iter()
        .enumerate()
        .map(|(i, c)| SampledCurve {
            depth: 0,
            source: i,
            points: c.sample(resolution),
        })
        .collect();

    let mut frontier: Vec<SampledCurve> = out.clone();
    for depth in 1..m {
        let mut next: Vec<SampledCurve> = Vec::new();
        for curve in &frontier {
            let gap = 16.0 * curve_spacing(&curve.points).max(1e-6);
            let mut piece: Vec<PhasePoint> = Vec::new();
            let flush = |piece: &mut Vec<PhasePoint>, next: &mut Vec<SampledCurve>| {
                if piece.len() >= 2 {
                    next.push(SampledCurve {
                        depth,
                        source: curve.source,
                        points: std::mem::take(piece),
                    });
                } else {
                    piece.clear();
                }
            };
            for &pt in &curve.points {
                match preimage(poly, law, pt) {
                    Some(pre) => {
                        if let Some(&last) = piece.last() {
                            let jump = ((pre.s - last.s).powi(2)
                                + (pre.theta - last.theta).powi(2))
                            .sqrt();
                            if jump > gap {
                                flush(&mut piece, &mut next);
                            }
                        }
                        piece.push(pre);
                    }
                    None => flush(&mut piece, &mut next),
                }
            }
            flush(&mut piece, &mut next);
        }
        out.extend(next.iter().cloned());
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    out
}

fn curve_spacing(points: &[PhasePoint]) -> f64 {
    points
        .windows(2)
        .map(|w| ((w[1].s - w[0].s).powi(2) + (w[1].theta - w[0].theta).powi(2)).sqrt())
        .fold(0.0, f64::max)
}

/// Estimate of `p(S_m⁺)`: the maximum number of smooth components of the
/// sampled arrangement passing through one point. A disjoint arrangement
/// reports 2 (a short horizontal segment is cut into at most two pieces);
/// every additional component through a common point raises it by one.
#[derive(Clone, Copy, Debug)]
pub struct BranchCount {
    pub p: usize,
    pub resolution: usize,
    pub clusters: usize,
}

pub fn p_of_s(
    poly: &Polygon,
    law: &ReflectionLaw,
    m: usize,
    resolution: usize,
) -> BranchCount {
    let curves = pullback_singular(poly, law, m, resolution);
    let tol = curves
        .iter()
        .map(|c| curve_spacing(&c.points))
        .fold(1e-9_f64, f64::max)
        * 2.0;

    // Collect contact points between distinct components.
    let mut contacts: Vec<(f64, f64)> = Vec::new();
    for i in 0..curves.len() {
        for j in (i + 1)..curves.len() {
            min_distance_contacts(&curves[i].points, &curves[j].points, tol, &mut contacts);
        }
    }

    // Greedy clustering.
    let mut clusters: Vec<(f64, f64)> = Vec::new();
    for &c in &contacts {
        if !clusters
            .iter()
            .any(|&k| ((k.0 - c.0).powi(2) + (k.1 - c.1).powi(2)).sqrt() < 4.0 * tol)
        {
            clusters.push(c);
        }
    }

    let mut p = if curves.is_empty() { 0 } else { 2 };
    for &(cs, ct) in &clusters {
        let mut through = 0;
        for c in &curves {
            let touches = c
                .points
                .windows(2)
                .any(|w| point_segment_dist(cs, ct, w[0], w[1]) < 2.0 * tol);
            if touches {
                through += 1;
            }
        }
        p = p.max(through);
    }
    BranchCount {
        p,
        resolution,
        clusters: clusters.len(),
    }
}

/// Doubles the sampling resolution until the estimate stabilizes twice.
pub fn p_of_s_stable(
    poly: &Polygon,
    law: &ReflectionLaw,
    m: usize,
    initial_resolution: usize,
) -> BranchCount {
    let mut res = initial_resolution.max(64);
    let mut last = p_of_s(poly, law, m, res);
    let mut stable = 0;
    for _ in 0..6 {
        res *= 2;
        let next = p_of_s(poly, law, m, res);
        if next.p == last.p {
            stable += 1;
            if stable >= 2 {
                return next;
            }
        } else {
            stable = 0;
        }
        last = next;
    }
    last
}

fn point_segment_dist(px: f64, py: f64, a: PhasePoint, b: PhasePoint) -> f64 {
    let (dx, dy) = (b.s - a.s, b.theta - a.theta);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - a.s) * dx + (py - a.theta) * dy) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.s + t * dx, a.theta + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

fn min_distance_contacts(
    a: &[PhasePoint],
    b: &[PhasePoint],
    tol: f64,
    out: &mut Vec<(f64, f64)>,
) {
    for w in a.windows(2) {
        for q in b.windows(2) {
            // Cheap bounding check first.
            let amin = w[0].s.min(w[1].s) - tol;
            let amax = w[0].s.max(w[1].s) + tol;
            let bmin = q[0].s.min(q[1].s);
            let bmax = q[0].s.max(q[1].s);
            if bmax < amin || bmin > amax {
                continue;
            }
            for p in q {
                if point_segment_dist(p.s, p.theta, w[0], w[1]) < tol {
                    out.push((p.s, p.theta));
                }
            }
        }
    }
}
