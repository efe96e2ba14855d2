//! Exact non-vanishing certificates for the polynomials arising from reduced
//! slap-map orbits of the side midpoint.
//!
//! An equality `φ_0^n(1/2) = φ_0^k(1/2)` of orbit points would force
//! `Q(β) = 0` for
//!
//! ```text
//! Q(x) = P_n(1/2, x) - x^{n-k} P_k(1/2, x),
//! P_r(1/2, x) = Σ_{j<r} (-1)^{r-j-1} δ_j x^j,      δ_j ∈ {-1, +1},
//! ```
//!
//! a polynomial with coefficients in {-2,…,2} and unit constant term. Since
//! Ψ̃_{2d} is the minimal polynomial of β with leading coefficient
//! 2^{φ(2d)/2} ≥ 4 and unit constant term, Gauss' lemma makes Q(β) = 0
//! impossible; this module verifies `Q(β) ≠ 0` exactly and records the
//! structural obstructions.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::field::{AlgebraError, AlgebraicNumber, CosField};
use super::poly::IntPoly;

/// Outcome of one non-vanishing check, with both evaluation routes.
#[derive(Clone, Debug)]
pub struct QCertificate {
    pub n: usize,
    pub k: usize,
    pub q: IntPoly,
    /// Exact reduction of Q(β) modulo Ψ̃_{2d}.
    pub reduced: AlgebraicNumber,
    /// Q(β) ≠ 0, decided exactly on the reduced representative.
    pub nonzero: bool,
    /// |Q(0)| = 1.
    pub constant_term_unit: bool,
    /// The leading coefficient of Ψ̃_{2d} does not divide that of Q, so
    /// Q cannot be a multiple of the minimal polynomial.
    pub leading_obstruction: bool,
    /// Sign of Q(β) via the exact route: interval evaluation of the reduced
    /// representative. 0 only for the zero element.
    pub exact_sign: i8,
    /// Sign of Q(β) by direct interval evaluation of Q itself at a 512-bit
    /// enclosure of β. 0 when undecided at that precision.
    pub numeric_sign_512: i8,
}

/// Builds `P_r(1/2, x)` from the branch signs δ_0, …, δ_{r-1}.
pub fn tail_polynomial(r: usize, deltas: &[i8]) -> IntPoly {
    assert!(deltas.len() >= r);
    let coeffs: Vec<BigInt> = (0..r)
        .map(|j| {
            let sign = if (r - j - 1) % 2 == 0 { 1 } else { -1 };
            BigInt::from(sign * deltas[j] as i64)
        })
        .collect();
    IntPoly::new(coeffs)
}

/// Builds Q(x) = P_n - x^{n-k} P_k for 0 ≤ k < n.
pub fn q_polynomial(n: usize, k: usize, deltas: &[i8]) -> IntPoly {
    assert!(k < n);
    assert!(deltas.len() >= n);
    let mut coeffs = vec![BigInt::zero(); n];
    for j in 0..n {
        let sign = if (n - j - 1) % 2 == 0 { 1 } else { -1 };
        coeffs[j] += BigInt::from(sign * deltas[j] as i64);
    }
    for j in 0..k {
        let sign = if (k - j - 1) % 2 == 0 { 1 } else { -1 };
        coeffs[n - k + j] -= BigInt::from(sign * deltas[j] as i64);
    }
    IntPoly::new(coeffs)
}

/// Certifies `Q(β) ≠ 0` by exact reduction modulo Ψ̃_{2d}, with a dual
/// 512-bit direct evaluation for cross-checking, and records the structural
/// obstructions used in the impossibility argument.
pub fn certify_q_nonzero(
    field: &Arc<CosField>,
    n: usize,
    k: usize,
    deltas: &[i8],
) -> Result<QCertificate, AlgebraError> {
    let q = q_polynomial(n, k, deltas);
    certify_poly_nonzero(field, n, k, q)
}

/// Same certificate for an arbitrary integer polynomial (used to exercise the
/// degenerate Q ≡ 0 path).
pub fn certify_poly_nonzero(
    field: &Arc<CosField>,
    n: usize,
    k: usize,
    q: IntPoly,
) -> Result<QCertificate, AlgebraError> {
    let reduced = AlgebraicNumber::from_int_poly(field, &q);
    let nonzero = !reduced.is_zero();
    let exact_sign = reduced.certified_sign()?;
    let numeric_sign_512 = q
        .eval_interval(&field.beta_interval(512))
        .sign()
        .unwrap_or(0);
    let constant_term_unit = q.constant_term().abs() == BigInt::one();
    let psi_lead = field.modulus().leading();
    let q_lead = q.leading();
    let leading_obstruction = if q.is_zero() {
        false
    } else {
        (&q_lead % &psi_lead) != BigInt::zero()
    };
    Ok(QCertificate {
        n,
        k,
        q,
        reduced,
        nonzero,
        constant_term_unit,
        leading_obstruction,
        exact_sign,
        numeric_sign_512,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_constant_term_is_unit() {
        // Q(0) = ±δ_0 regardless of the sign pattern.
        let deltas = [1i8, -1, 1, 1, -1, 1, -1, -1];
        for n in 2..=8usize {
            for k in 0..n {
                let q = q_polynomial(n, k, &deltas);
                assert!(q.constant_term().abs().is_one(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn q_coefficients_bounded_by_two() {
        let deltas = [1i8, 1, -1, 1, -1, -1, 1, 1, -1, 1];
        for n in 2..=10usize {
            for k in 0..n {
                for c in q_polynomial(n, k, &deltas).coeffs() {
                    assert!(c.abs() <= BigInt::from(2));
                }
            }
        }
    }

    #[test]
    fn zero_polynomial_is_flagged() {
        let field = CosField::new(5);
        let cert = certify_poly_nonzero(&field, 2, 1, IntPoly::zero()).unwrap();
        assert!(!cert.nonzero);
        assert_eq!(cert.exact_sign, 0);
        assert!(!cert.leading_obstruction);
    }

    #[test]
    fn dual_evaluation_signs_agree_d5() {
        let field = CosField::new(5);
        let deltas = [1i8, 1, -1, 1, -1, 1];
        let cert = certify_q_nonzero(&field, 2, 1, &deltas).unwrap();
        assert!(cert.nonzero);
        assert_ne!(cert.exact_sign, 0);
        assert_eq!(cert.exact_sign, cert.numeric_sign_512);
        assert!(cert.constant_term_unit);
        assert!(cert.leading_obstruction);
    }

    #[test]
    fn psi_multiple_is_zero_in_field() {
        // Ψ̃_{2d}(β) = 0 exactly.
        let field = CosField::new(7);
        let cert = certify_poly_nonzero(&field, 1, 0, field.modulus().clone()).unwrap();
        assert!(!cert.nonzero);
        assert_eq!(cert.exact_sign, 0);
        assert_eq!(cert.numeric_sign_512, 0);
    }
}
