//! Integer-exact polynomial algebra: Chebyshev polynomials, the minimal
//! polynomials Ψ̃_n of cos(2π/n), Euler's totient, and certified arithmetic
//! in Q(β) for β = cos(π/d).
//!
//! Big-integer coefficients are mandatory here: the Chebyshev coefficients
//! grow like 2^n and the certificates depend on exact divisibility.

mod certify;
mod chebyshev;
mod field;
mod poly;

pub use certify::{certify_poly_nonzero, certify_q_nonzero, q_polynomial, tail_polynomial, QCertificate};
pub use chebyshev::{chebyshev_difference, chebyshev_t, psi_tilde};
pub use field::{AlgebraError, AlgebraicNumber, CosField};
pub use poly::{divisors, euler_phi, IntPoly, RatInterval};
