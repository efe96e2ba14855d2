//! Reduced dynamics of regular d-gons with unit sides.
//!
//! Identifying all sides maps the phase space d-fold onto the reduced phase
//! space `M̃ = (0,1) × (-π/2, π/2)`, and the billiard map factors through it.
//! With `θ_k = π/2 - kπ/d`, the branch curves
//!
//! ```text
//! γ_k(θ) = sin(θ_{k-1} - θ) cos(θ_k) / (sin(θ_{k-1} - θ_k) cos θ)
//! ```
//!
//! partition M̃ into strips `A_k = {γ_{k+1}(θ) < s < γ_k(θ)}` on which the
//! k-branch of the reduced map is
//! `(s, θ) ↦ ((γ_k(θ) - s)/(γ_k(θ) - γ_{k+1}(θ)), f(2θ_k - θ))`.
//!
//! For the slap law the reduced map is one-dimensional: `s ↦ 1 - s` for even
//! d, and `s ↦ -(1/β)(s - 1/2) + ε(s)` with `β = cos(π/d)` and `ε(s) = 1`
//! iff `s ≥ 1/2` for odd d. The odd-d orbit of the side midpoint is computed
//! exactly in Q(β), with branch choices certified by exact comparisons; the
//! formula is followed literally at the boundary value `s = 1/2 ↦ 1`, where
//! the geometric map would instead terminate at a vertex.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::algebra::{AlgebraError, AlgebraicNumber, CosField};
use crate::reflection::ReflectionLaw;
use crate::TOL_GEOM;

const PI: f64 = std::f64::consts::PI;
const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegularError {
    #[error("point lies on a branch boundary")]
    OnBranchBoundary,
    #[error("point outside the reduced phase space: s = {0}, theta = {1}")]
    OutsidePhaseSpace(f64, f64),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// A point of the reduced phase space `M̃ = (0,1) × (-π/2, π/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedPoint {
    pub s: f64,
    pub theta: f64,
}

impl ReducedPoint {
    pub fn new(s: f64, theta: f64) -> Self {
        Self { s, theta }
    }
}

/// Branch data of the reduced billiard map of a regular d-gon.
#[derive(Clone, Debug)]
pub struct BranchTable {
    d: usize,
    theta_k: Vec<f64>,
}

impl BranchTable {
    pub fn new(d: usize) -> Self {
        assert!(d >= 3);
        let theta_k = (0..=d).map(|k| HALF_PI - k as f64 * PI / d as f64).collect();
        Self { d, theta_k }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// θ_k = π/2 - kπ/d, strictly decreasing, θ_0 = π/2, θ_d = -π/2.
    pub fn theta_k(&self, k: usize) -> f64 {
        self.theta_k[k]
    }

    /// Branch curve γ_k for k = 1..=d; γ_1 ≡ 1 and γ_d ≡ 0.
    pub fn gamma(&self, k: usize, theta: f64) -> f64 {
        assert!((1..=self.d).contains(&k));
        let prev = self.theta_k[k - 1];
        let cur = self.theta_k[k];
        (prev - theta).sin() * cur.cos() / ((prev - cur).sin() * theta.cos())
    }

    /// The strip index k with γ_{k+1}(θ) < s < γ_k(θ), or an error within
    /// `TOL_GEOM` of a boundary. Strips whose curves have left [0,1] at this
    /// θ are empty and skipped.
    pub fn branch_of(&self, x: ReducedPoint) -> Result<usize, RegularError> {
        if !(0.0 < x.s && x.s < 1.0) || x.theta.abs() >= HALF_PI {
            return Err(RegularError::OutsidePhaseSpace(x.s, x.theta));
        }
        let mut containing = None;
        for k in 1..self.d {
            let up = self.gamma(k, x.theta);
            let low = self.gamma(k + 1, x.theta);
            if (x.s - up).abs() <= TOL_GEOM || (x.s - low).abs() <= TOL_GEOM {
                return Err(RegularError::OnBranchBoundary);
            }
            if low < x.s && x.s < up {
                containing = Some(k);
                break;
            }
        }
        containing.ok_or(RegularError::OnBranchBoundary)
    }
}

/// One application of the reduced billiard map, returning the image and the
/// branch index.
pub fn reduced_step(
    d: usize,
    law: &ReflectionLaw,
    x: ReducedPoint,
) -> Result<(ReducedPoint, usize), RegularError> {
    let table = BranchTable::new(d);
    let k = table.branch_of(x)?;
    let up = table.gamma(k, x.theta);
    let low = table.gamma(k + 1, x.theta);
    let s1 = (up - x.s) / (up - low);
    let theta1 = law.eval(2.0 * table.theta_k(k) - x.theta);
    Ok((ReducedPoint::new(s1, theta1), k))
}

/// Reduced slap map, following the formula literally: for even d, `1 - s`;
/// for odd d, `-(1/β)(s - 1/2) + ε(s)`. Values within `TOL_GEOM` of 0 or 1
/// are corner hits of the geometric map; the formula value is still
/// returned so the caller can continue in formula mode.
pub fn reduced_slap(d: usize, s: f64) -> f64 {
    assert!(d >= 3);
    if d % 2 == 0 {
        1.0 - s
    } else {
        let beta = (PI / d as f64).cos();
        let eps = if s >= 0.5 { 1.0 } else { 0.0 };
        -(s - 0.5) / beta + eps
    }
}

/// Whether a reduced slap value is a corner hit (the geometric map is
/// undefined there).
pub fn is_corner(s: f64) -> bool {
    s <= TOL_GEOM || s >= 1.0 - TOL_GEOM
}

/// Floating iteration of the reduced slap map in formula mode, recording
/// corner hits.
pub fn reduced_slap_orbit(d: usize, s0: f64, n: usize) -> (Vec<f64>, Vec<usize>) {
    let mut orbit = vec![s0];
    let mut corners = Vec::new();
    let mut s = s0;
    for j in 1..=n {
        s = reduced_slap(d, s);
        if is_corner(s) {
            corners.push(j);
        }
        orbit.push(s);
    }
    (orbit, corners)
}

/// Exact orbit of the reduced slap map of an odd d-gon in Q(β): points
/// φ_0^j(start), branch signs δ_j = 2ε_j - 1, with each branch choice
/// certified by an exact comparison against 1/2.
#[derive(Clone, Debug)]
pub struct ExactSlapOrbit {
    pub field: Arc<CosField>,
    pub points: Vec<AlgebraicNumber>,
    pub deltas: Vec<i8>,
}

impl ExactSlapOrbit {
    /// Indices j ≥ 1 whose point is exactly 0 or 1 (a vertex of the polygon
    /// in reduced coordinates).
    pub fn corner_hits(&self) -> Vec<usize> {
        let zero = BigRational::from_integer(BigInt::from(0));
        let one = BigRational::one();
        self.points
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, p)| p.eq_rational(&zero) || p.eq_rational(&one))
            .map(|(j, _)| j)
            .collect()
    }
}

/// Iterates the exact odd-d reduced slap map from an arbitrary exact start.
pub fn exact_slap_iterate(
    field: &Arc<CosField>,
    start: AlgebraicNumber,
    n: usize,
) -> Result<ExactSlapOrbit, RegularError> {
    let d = field.d();
    assert!(d % 2 == 1 && d >= 3, "exact reduced slap needs odd d");
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    let inv_beta = AlgebraicNumber::beta(field).inverse()?;
    let one = AlgebraicNumber::from_int(field, 1);

    let mut points = Vec::with_capacity(n + 1);
    let mut deltas = Vec::with_capacity(n);
    points.push(start);
    for _ in 0..n {
        let cur = points.last().unwrap();
        let eps_one = cur.cmp_rational(&half)? != std::cmp::Ordering::Less;
        deltas.push(if eps_one { 1 } else { -1 });
        // φ_0(x) = -(x - 1/2)/β + ε.
        let shifted = cur.sub(&AlgebraicNumber::from_rational(field, half.clone()))?;
        let mut next = shifted.neg().mul(&inv_beta)?;
        if eps_one {
            next = next.add(&one)?;
        }
        points.push(next);
    }
    Ok(ExactSlapOrbit {
        field: Arc::clone(field),
        points,
        deltas,
    })
}

/// Exact orbit of the side midpoint s = 1/2 for odd d ≥ 5. The first step
/// lands on the boundary value 1 (a vertex); the formula convention
/// ε(1) = 1 keeps iterating past it.
pub fn orbit_of_half(d: usize, n: usize) -> Result<ExactSlapOrbit, RegularError> {
    assert!(d % 2 == 1 && d >= 5, "pre-periodicity orbits need odd d >= 5");
    let field = CosField::new(d);
    let half = AlgebraicNumber::from_rational(
        &field,
        BigRational::new(BigInt::from(1), BigInt::from(2)),
    );
    exact_slap_iterate(&field, half, n)
}

/// Conservative enclosure of σ_∞(θ) = 1 - cot(π/d) Σ_{n≥0} tan(f^n(θ)):
/// the series is truncated when |tan(f^n θ)| < 1e-16 and the geometric tail
/// bound λ·tan(|f^n θ|)/(1-λ) is added, using tan(cx) ≤ c·tan(x).
pub fn trapping_sigma(d: usize, law: &ReflectionLaw, theta: f64) -> (f64, f64) {
    assert!(d % 2 == 0 && d >= 6, "trapping region applies to even d >= 6");
    let cot = 1.0 / (PI / d as f64).tan();
    let lambda = law.lambda();
    let mut partial = 0.0;
    let mut t = theta;
    let mut tail;
    let mut guard = 0;
    loop {
        let tan_t = t.tan();
        tail = lambda * t.abs().tan() / (1.0 - lambda) * t.signum();
        if tan_t.abs() < 1e-16 || guard > 400 {
            break;
        }
        partial += tan_t;
        t = law.eval(t);
        guard += 1;
    }
    let sum_a = partial;
    let sum_b = partial + tail;
    let (lo_sum, hi_sum) = (sum_a.min(sum_b), sum_a.max(sum_b));
    (1.0 - cot * hi_sum, 1.0 - cot * lo_sum)
}

/// Certified membership of the trapping region
/// `B = {σ_∞(θ) - 1 < s < σ_∞(θ)}`; membership is only claimed when it holds
/// for every value in the σ_∞ enclosure.
pub fn trapping_region_contains(d: usize, law: &ReflectionLaw, x: ReducedPoint) -> bool {
    let (lo, hi) = trapping_sigma(d, law, x.theta);
    hi - 1.0 < x.s && x.s < lo
}

/// Continuous extension of the (q-1)-branch of the reduced map for d = 2q:
/// `(s, θ) ↦ (cot(π/2q) tan(g) - s cos θ sec(g), f(g))` with g = π/q - θ.
pub fn reduced_step_extension_q_minus_1(
    d: usize,
    law: &ReflectionLaw,
    x: ReducedPoint,
) -> ReducedPoint {
    assert!(d % 2 == 0 && d >= 6);
    let q = d / 2;
    let g = PI / q as f64 - x.theta;
    let s1 = (PI / (2 * q) as f64).tan().recip() * g.tan() - x.s * x.theta.cos() / g.cos();
    ReducedPoint::new(s1, law.eval(g))
}

/// Hypotheses of the even-d trapping statement, each checked separately:
/// oddness, f' > 0, λ(f) ≤ 1/2, and the sublinearity
/// f(δ·2π/d) ≤ δ·f(2π/d) on a δ-grid.
#[derive(Clone, Copy, Debug)]
pub struct EvenTrapHypotheses {
    pub d: usize,
    pub odd: bool,
    pub deriv_positive: bool,
    pub lambda_le_half: bool,
    pub sublinear_on_grid: bool,
}

impl EvenTrapHypotheses {
    pub fn all(&self) -> bool {
        self.odd && self.deriv_positive && self.lambda_le_half && self.sublinear_on_grid
    }
}

pub fn check_even_trap_hypotheses(d: usize, law: &ReflectionLaw) -> EvenTrapHypotheses {
    assert!(d % 2 == 0 && d >= 6);
    let a = 2.0 * PI / d as f64;
    let grid = 2001;
    let odd = law.is_odd()
        && (0..grid).all(|i| {
            let t = -HALF_PI + (i as f64 + 0.5) / grid as f64 * PI;
            (law.eval(-t) + law.eval(t)).abs() < 1e-12
        });
    let deriv_positive = law.strictly_increasing();
    let lambda_le_half = law.lambda() <= 0.5;
    let sublinear_on_grid = (0..=grid).all(|i| {
        let delta = i as f64 / grid as f64;
        law.eval(delta * a) <= delta * law.eval(a) + 1e-12
    });
    EvenTrapHypotheses {
        d,
        odd,
        deriv_positive,
        lambda_le_half,
        sublinear_on_grid,
    }
}

/// Both sides of the key inclusion inequality for the even-d trapping
/// argument: with θ̂ = π/q - f(π/q),
/// `cot(π/2q) Σ_{n≥0} tan(f^{n+1}(θ̂)) < 1 + tan(θ̂) sin(π/q) + cos(π/q)`.
/// The left side is over-estimated by the same tail bound as σ_∞.
#[derive(Clone, Copy, Debug)]
pub struct IneqBReport {
    pub lhs_hi: f64,
    pub rhs: f64,
    pub holds: bool,
    /// The second extension iterate of (1, 0) lies in the trapping region
    /// (conservative membership).
    pub image_in_region: bool,
}

pub fn check_ineq_b(d: usize, law: &ReflectionLaw) -> IneqBReport {
    assert!(d % 2 == 0 && d >= 6);
    let q = d / 2;
    let theta_hat = PI / q as f64 - law.eval(PI / q as f64);
    let cot = (PI / (2 * q) as f64).tan().recip();
    let lambda = law.lambda();
    let mut sum = 0.0;
    let mut t = law.eval(theta_hat);
    let mut guard = 0;
    while t.abs().tan() >= 1e-16 && guard < 400 {
        sum += t.tan();
        t = law.eval(t);
        guard += 1;
    }
    let lhs_hi = cot * (sum + lambda * t.abs().tan() / (1.0 - lambda));
    let rhs = 1.0 + theta_hat.tan() * (PI / q as f64).sin() + (PI / q as f64).cos();

    let x1 = reduced_step_extension_q_minus_1(d, law, ReducedPoint::new(1.0, 0.0));
    let x2 = reduced_step_extension_q_minus_1(d, law, x1);
    let image_in_region = trapping_region_contains(d, law, x2);

    IneqBReport {
        lhs_hi,
        rhs,
        holds: lhs_hi < rhs,
        image_in_region,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn branch_strips_partition_the_phase_space() {
        // γ_1 ≡ 1, γ_d ≡ 0, and away from the curves each (s, θ) lies in
        // exactly one strip.
        for d in [3usize, 5, 8] {
            let t = BranchTable::new(d);
            for i in 0..40 {
                let theta = -1.5 + 3.0 * i as f64 / 39.0;
                assert!((t.gamma(1, theta) - 1.0).abs() < 1e-12);
                assert!(t.gamma(d, theta).abs() < 1e-12);
                for j in 1..100 {
                    let s = j as f64 / 100.0;
                    let hits = (1..d)
                        .filter(|&k| t.gamma(k + 1, theta) < s && s < t.gamma(k, theta))
                        .count();
                    let on_boundary =
                        (2..d).any(|k| (t.gamma(k, theta) - s).abs() < 1e-9);
                    assert!(
                        hits == 1 || on_boundary,
                        "d={d} theta={theta} s={s}: {hits} strips"
                    );
                }
            }
        }
    }

    #[test]
    fn even_d_midpoint_is_period_two() {
        let law = ReflectionLaw::linear(0.5).unwrap();
        let (img, k) = reduced_step(6, &law, ReducedPoint::new(0.5, 0.0)).unwrap();
        assert_eq!(k, 3);
        assert!((img.s - 0.5).abs() < 1e-12);
        assert_eq!(img.theta, 0.0);
    }

    #[test]
    fn odd_law_commutes_with_involution() {
        let law = ReflectionLaw::linear(0.4).unwrap();
        let mut state = 0.123_f64;
        for d in [3usize, 5, 7, 8] {
            let mut checked = 0;
            while checked < 500 {
                state = (state * 9301.0 + 49297.0) % 233280.0;
                let s = state / 233280.0;
                state = (state * 9301.0 + 49297.0) % 233280.0;
                let theta = (state / 233280.0 - 0.5) * 3.0;
                let x = ReducedPoint::new(s, theta);
                let tx = ReducedPoint::new(1.0 - s, -theta);
                let (a, _) = match reduced_step(d, &law, x) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                let (b, _) = match reduced_step(d, &law, tx) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                assert!((b.s - (1.0 - a.s)).abs() < 1e-9, "d = {d}");
                assert!((b.theta + a.theta).abs() < 1e-12, "d = {d}");
                checked += 1;
            }
        }
    }

    #[test]
    fn reduced_slap_values() {
        // Even d: reflection through the midpoint.
        assert!((reduced_slap(4, 0.3) - 0.7).abs() < 1e-15);
        assert!((reduced_slap(6, 0.9) - 0.1).abs() < 1e-15);
        // d = 3: β = 1/2, φ_0(1/4) = 1/2.
        assert!((reduced_slap(3, 0.25) - 0.5).abs() < 1e-12);
        // Boundary convention: ε(1/2) = 1 gives φ_0(1/2) = 1 for odd d.
        assert!((reduced_slap(5, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn odd_slap_slope_is_minus_inverse_beta() {
        // Piecewise linear: the difference quotient over a same-branch
        // stencil is exact up to rounding.
        for d in [5usize, 7, 9] {
            let beta = (PI / d as f64).cos();
            let h = 1e-3;
            for s in [0.1, 0.3, 0.6, 0.8] {
                let slope = (reduced_slap(d, s + h) - reduced_slap(d, s - h)) / (2.0 * h);
                assert!((slope + 1.0 / beta).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn exact_orbit_matches_float_iteration() {
        // Coefficient vectors grow with the expanding Galois conjugates
        // (≈ 1/cos(3π/7) per step for d = 7), so evaluate the exact points
        // on a 256-bit enclosure of β; the remaining gap is the float
        // orbit's own drift, ≈ λ-expansion × machine epsilon.
        for d in [5usize, 7] {
            let orbit = orbit_of_half(d, 20).unwrap();
            let (float_orbit, _) = reduced_slap_orbit(d, 0.5, 20);
            for (j, (exact, float)) in orbit.points.iter().zip(float_orbit.iter()).enumerate() {
                let val = exact.enclosure(256).to_f64();
                assert!((val - float).abs() < 1e-8, "d = {d}, j = {j}");
            }
            // The first two points are dyadic and exact in both routes.
            assert!(orbit.points[0].enclosure(256).to_f64() == 0.5);
            assert!(orbit.points[1].enclosure(256).to_f64() == 1.0);
        }
    }

    #[test]
    fn exact_orbit_tail_identity() {
        // φ_0^n(1/2) = 1/2 + P_n(1/2, β) / (2 β^{n-1}) with the recorded
        // branch signs.
        use crate::algebra::tail_polynomial;
        let d = 7;
        let orbit = orbit_of_half(d, 12).unwrap();
        let field = &orbit.field;
        let beta = AlgebraicNumber::beta(field);
        let half = AlgebraicNumber::from_rational(
            field,
            BigRational::new(BigInt::from(1), BigInt::from(2)),
        );
        for n in 1..=12usize {
            let p_n = tail_polynomial(n, &orbit.deltas);
            let p_at_beta = AlgebraicNumber::from_int_poly(field, &p_n);
            let mut pow = AlgebraicNumber::from_int(field, 1);
            for _ in 0..n - 1 {
                pow = pow.mul(&beta).unwrap();
            }
            let two = AlgebraicNumber::from_int(field, 2);
            let rhs = half
                .add(&p_at_beta.div(&two.mul(&pow).unwrap()).unwrap())
                .unwrap();
            assert!(orbit.points[n].eq_exact(&rhs), "n = {n}");
        }
    }

    #[test]
    fn first_steps_of_half_orbit() {
        let orbit = orbit_of_half(5, 3).unwrap();
        assert!(orbit.points[1].eq_rational(&BigRational::one()));
        assert_eq!(orbit.deltas[0], 1);
        // φ_0(1) = 1 - 1/(2β) ≈ 0.381966 for d = 5.
        assert!((orbit.points[2].to_f64() - 0.381_966_011_250_105).abs() < 1e-12);
        assert_eq!(orbit.corner_hits(), vec![1]);
    }

    #[test]
    fn pairwise_distinct_points_for_small_orders() {
        for d in [5usize, 7, 9] {
            let orbit = orbit_of_half(d, 12).unwrap();
            for n in 1..=12usize {
                for k in 0..n {
                    assert!(
                        !orbit.points[n].eq_exact(&orbit.points[k]),
                        "d = {d}: point {n} equals point {k}"
                    );
                }
            }
        }
    }

    #[test]
    fn trapping_region_at_zero_angle_is_everything() {
        let law = ReflectionLaw::linear(0.4).unwrap();
        let (lo, hi) = trapping_sigma(6, &law, 0.0);
        assert!((lo - 1.0).abs() < 1e-15 && (hi - 1.0).abs() < 1e-15);
        assert!(trapping_region_contains(6, &law, ReducedPoint::new(0.5, 0.0)));
        assert!(trapping_region_contains(6, &law, ReducedPoint::new(0.99, 0.0)));
    }

    #[test]
    fn trapping_region_forward_invariant_sampled() {
        let d = 6;
        let law = ReflectionLaw::linear(0.4).unwrap();
        let mut state = 0.7_f64;
        let mut inside = 0;
        while inside < 2000 {
            state = (state * 9301.0 + 49297.0) % 233280.0;
            let s = state / 233280.0;
            state = (state * 9301.0 + 49297.0) % 233280.0;
            let theta = (state / 233280.0 - 0.5) * 1.2;
            let x = ReducedPoint::new(s, theta);
            if !trapping_region_contains(d, &law, x) {
                continue;
            }
            inside += 1;
            if let Ok((img, _)) = reduced_step(d, &law, x) {
                assert!(
                    trapping_region_contains(d, &law, img),
                    "escaped at s={s} theta={theta} -> s={} theta={}",
                    img.s,
                    img.theta
                );
            }
        }
    }

    #[test]
    fn even_trap_hypotheses_for_linear_laws() {
        let ok = check_even_trap_hypotheses(6, &ReflectionLaw::linear(0.5).unwrap());
        assert!(ok.all());
        let too_strong = check_even_trap_hypotheses(6, &ReflectionLaw::linear(0.6).unwrap());
        assert!(!too_strong.lambda_le_half && !too_strong.all());
        // σ sin θ is concave on [0, π/2]: f(δa) ≥ δ f(a), so the stated
        // sublinearity fails.
        let sine = check_even_trap_hypotheses(6, &ReflectionLaw::sine(0.5).unwrap());
        assert!(!sine.sublinear_on_grid);
    }

    #[test]
    fn extension_fixes_the_corner() {
        // φ_{f,q-1}(1, 0) = (1, f(π/q)).
        let d = 6;
        let law = ReflectionLaw::linear(0.4).unwrap();
        let x1 = reduced_step_extension_q_minus_1(d, &law, ReducedPoint::new(1.0, 0.0));
        assert!((x1.s - 1.0).abs() < 1e-12);
        assert!((x1.theta - law.eval(PI / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn ineq_b_holds_for_d6_sigma04() {
        let report = check_ineq_b(6, &ReflectionLaw::linear(0.4).unwrap());
        assert!(report.holds, "lhs {} rhs {}", report.lhs_hi, report.rhs);
        assert!(report.image_in_region);
    }

    #[test]
    fn zero_is_not_in_half_orbit_prefix() {
        let orbit = orbit_of_half(5, 8).unwrap();
        let zero = BigRational::zero();
        for p in &orbit.points[2..] {
            assert!(!p.eq_rational(&zero));
        }
    }
}
