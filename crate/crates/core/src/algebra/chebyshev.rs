//! Chebyshev polynomials of the first kind and the integer-rescaled minimal
//! polynomials Ψ̃_n of cos(2π/n).
//!
//! The recursion `T_{n+1} = 2x T_n - T_{n-1}` gives `T_n(cos θ) = cos(nθ)`.
//! The Ψ̃_n are obtained from the Chebyshev differences
//!
//! ```text
//! n = 2s+1:  T_{s+1}(x) - T_s(x)     = Π_{d|n} Ψ̃_d(x)
//! n = 2s:    T_{s+1}(x) - T_{s-1}(x) = Π_{d|n} Ψ̃_d(x)
//! ```
//!
//! by exact division over Z[x], bottom-up over divisors. For n > 2 the degree
//! is φ(n)/2; for n ≥ 5 the leading coefficient is 2^{φ(n)/2} and the
//! constant term is ±1.

use std::collections::HashMap;

use super::poly::{divisors, IntPoly};

/// T_n, computed by the two-term recursion.
pub fn chebyshev_t(n: usize) -> IntPoly {
    let mut prev = IntPoly::one();
    if n == 0 {
        return prev;
    }
    let mut cur = IntPoly::x();
    let two_x = IntPoly::from_i64(&[0, 2]);
    for _ in 1..n {
        let next = two_x.mul(&cur).sub(&prev);
        prev = cur;
        cur = next;
    }
    cur
}

/// Left-hand side of the product identity for Ψ̃: the Chebyshev difference
/// whose roots are exactly the cos(2πk/n).
pub fn chebyshev_difference(n: u64) -> IntPoly {
    assert!(n >= 1);
    if n % 2 == 1 {
        let s = (n / 2) as usize;
        chebyshev_t(s + 1).sub(&chebyshev_t(s))
    } else {
        let s = (n / 2) as usize;
        chebyshev_t(s + 1).sub(&chebyshev_t(s - 1))
    }
}

/// Ψ̃_n: integer-rescaled minimal polynomial of cos(2π/n), by recursive exact
/// division of the Chebyshev difference by all proper-divisor factors.
pub fn psi_tilde(n: u64) -> IntPoly {
    let mut memo = HashMap::new();
    psi_tilde_memo(n, &mut memo)
}

fn psi_tilde_memo(n: u64, memo: &mut HashMap<u64, IntPoly>) -> IntPoly {
    if let Some(p) = memo.get(&n) {
        return p.clone();
    }
    let result = if n == 1 {
        IntPoly::from_i64(&[-1, 1])
    } else {
        let mut denom = IntPoly::one();
        for d in divisors(n) {
            if d < n {
                denom = denom.mul(&psi_tilde_memo(d, memo));
            }
        }
        chebyshev_difference(n)
            .div_exact(&denom)
            .expect("Chebyshev difference division over Z[x] is exact")
    };
    memo.insert(n, result.clone());
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::poly::euler_phi;
    use num_bigint::BigInt;
    use num_traits::One;

    #[test]
    fn chebyshev_base_cases_and_recursion() {
        assert_eq!(chebyshev_t(0), IntPoly::one());
        assert_eq!(chebyshev_t(1), IntPoly::x());
        assert_eq!(chebyshev_t(2), IntPoly::from_i64(&[-1, 0, 2]));
        assert_eq!(chebyshev_t(3), IntPoly::from_i64(&[0, -3, 0, 4]));
    }

    #[test]
    fn chebyshev_cos_identity() {
        // T_5(cos(π/7)) = cos(5π/7).
        let t5 = chebyshev_t(5);
        let x = (std::f64::consts::PI / 7.0).cos();
        assert!((t5.eval_f64(x) - (5.0 * std::f64::consts::PI / 7.0).cos()).abs() < 1e-12);
        for n in 0..12 {
            let t = chebyshev_t(n);
            for k in 1..5 {
                let theta = 0.37 * k as f64;
                assert!((t.eval_f64(theta.cos()) - (n as f64 * theta).cos()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn psi_tilde_small_values() {
        assert_eq!(psi_tilde(1), IntPoly::from_i64(&[-1, 1]));
        assert_eq!(psi_tilde(2), IntPoly::from_i64(&[2, 2]));
        assert_eq!(psi_tilde(3), IntPoly::from_i64(&[1, 2]));
        assert_eq!(psi_tilde(4), IntPoly::from_i64(&[0, 2]));
        assert_eq!(psi_tilde(5), IntPoly::from_i64(&[-1, 2, 4]));
        assert_eq!(psi_tilde(6), IntPoly::from_i64(&[-1, 2]));
    }

    #[test]
    fn psi_tilde_roots() {
        for n in 3..=40u64 {
            let p = psi_tilde(n);
            let beta = (2.0 * std::f64::consts::PI / n as f64).cos();
            assert!(
                p.eval_f64(beta).abs() < 1e-9 * p.leading().to_string().len() as f64 * 1e3,
                "Ψ̃_{n} does not vanish at cos(2π/{n})"
            );
        }
    }

    #[test]
    fn degree_is_half_phi() {
        for n in 3..=40u64 {
            assert_eq!(psi_tilde(n).degree() as u64, euler_phi(n) / 2, "n = {n}");
        }
    }

    #[test]
    fn unit_constant_and_power_of_two_leading() {
        // The leading coefficient is 2^{φ(n)/2} for every n ≥ 5. The unit
        // constant term holds whenever 4 ∤ n (the case the orbit certificates
        // rely on, n = 2d with d odd); for n = 4m with m a prime power the
        // constant term is ±p instead.
        for n in 5..=40u64 {
            let p = psi_tilde(n);
            let expected = BigInt::from(2).pow((euler_phi(n) / 2) as u32);
            assert_eq!(p.leading(), expected, "n = {n}");
            if n % 4 != 0 {
                assert!(p.constant_term().magnitude().is_one(), "n = {n}");
            }
        }
        assert_eq!(psi_tilde(8).constant_term(), BigInt::from(-2));
        assert_eq!(psi_tilde(12).constant_term(), BigInt::from(-3));
        assert_eq!(psi_tilde(20).constant_term(), BigInt::from(5));
        assert_eq!(psi_tilde(24).constant_term(), BigInt::from(1));
    }

    #[test]
    fn product_identity_exact() {
        for n in 1..=40u64 {
            let mut prod = IntPoly::one();
            for d in crate::algebra::poly::divisors(n) {
                prod = prod.mul(&psi_tilde(d));
            }
            assert_eq!(prod, chebyshev_difference(n), "n = {n}");
        }
    }
}
