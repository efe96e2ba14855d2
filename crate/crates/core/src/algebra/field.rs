//! Exact arithmetic in Q[β], β = cos(π/d), modulo the minimal polynomial
//! Ψ̃_{2d}. Comparisons against rationals are certified by interval
//! refinement around the real root β, with precision doubling from 64 up to
//! 4096 bits. Equality is decided exactly on the reduced representative, so
//! the refinement loop terminates on every nonzero element.

use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::chebyshev::psi_tilde;
use super::poly::{euler_phi, IntPoly, RatInterval};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("division by the zero element")]
    DivisionByZeroElement,
    #[error("sign could not be certified at {0} bits")]
    UndecidableSign(u32),
    #[error("operands belong to different fields (2d = {0} vs {1})")]
    MixedModuli(usize, usize),
}

/// The number field Q(β) with β = cos(π/d), represented as Q[x]/Ψ̃_{2d}(x).
#[derive(Debug)]
pub struct CosField {
    d: usize,
    modulus: IntPoly,
    degree: usize,
    /// Best isolating interval for β found so far; refined on demand and
    /// shared by all comparisons.
    cache: Mutex<RatInterval>,
}

impl CosField {
    /// Field for β = cos(π/d).
    pub fn new(d: usize) -> Arc<Self> {
        assert!(d >= 2);
        let modulus = psi_tilde(2 * d as u64);
        let degree = (euler_phi(2 * d as u64) / 2) as usize;
        let seed = isolate_root(&modulus, (std::f64::consts::PI / d as f64).cos());
        Arc::new(Self {
            d,
            modulus,
            degree,
            cache: Mutex::new(seed),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn two_d(&self) -> usize {
        2 * self.d
    }

    pub fn modulus(&self) -> &IntPoly {
        &self.modulus
    }

    /// Extension degree [Q(β) : Q] = φ(2d)/2.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Isolating interval of β with width at most 2^-bits.
    pub fn beta_interval(&self, bits: u32) -> RatInterval {
        let mut cached = self.cache.lock().unwrap();
        let target = BigRational::new(BigInt::one(), BigInt::from(2).pow(bits));
        while cached.width() > target {
            if cached.lo == cached.hi {
                break;
            }
            let mid = cached.midpoint();
            let at_mid = self.modulus.eval_rational(&mid);
            if at_mid.is_zero() {
                *cached = RatInterval::point(mid);
                break;
            }
            let at_lo = self.modulus.eval_rational(&cached.lo);
            if (at_lo.is_negative()) == (at_mid.is_negative()) {
                *cached = RatInterval::new(mid, cached.hi.clone());
            } else {
                *cached = RatInterval::new(cached.lo.clone(), mid);
            }
        }
        cached.clone()
    }
}

/// Seeds an isolating interval for the root of `modulus` nearest to `approx`
/// and certifies uniqueness by the interval Newton contraction test.
fn isolate_root(modulus: &IntPoly, approx: f64) -> RatInterval {
    let deriv = modulus.derivative();
    let mut eps = 1e-6;
    while eps > 1e-15 {
        let lo = BigRational::from_float(approx - eps).unwrap();
        let hi = BigRational::from_float(approx + eps).unwrap();
        let iv = RatInterval::new(lo.clone(), hi.clone());
        let at_lo = modulus.eval_rational(&lo);
        let at_hi = modulus.eval_rational(&hi);
        if at_lo.is_zero() || at_hi.is_zero() {
            eps *= 0.7;
            continue;
        }
        if at_lo.is_negative() == at_hi.is_negative() {
            eps *= 0.5;
            continue;
        }
        // Interval Newton: N(I) = m - f(m)/f'(I) must contract into I.
        let dv = deriv.eval_interval(&iv);
        if dv.contains_zero() {
            eps *= 0.5;
            continue;
        }
        let m = iv.midpoint();
        let fm = modulus.eval_rational(&m);
        let quot_lo = &fm / &dv.lo;
        let quot_hi = &fm / &dv.hi;
        let newton = RatInterval::new(
            &m - quot_lo.clone().max(quot_hi.clone()),
            &m - quot_lo.min(quot_hi),
        );
        if newton.is_subset_of(&iv) {
            return iv;
        }
        eps *= 0.5;
    }
    panic!("failed to isolate cos root of {modulus}");
}

/// An element of Q(β), reduced modulo Ψ̃_{2d}.
#[derive(Clone, Debug)]
pub struct AlgebraicNumber {
    field: Arc<CosField>,
    /// Rational coefficients, ascending, length < field degree (or empty for
    /// zero). No trailing zeros.
    rep: Vec<BigRational>,
}

impl AlgebraicNumber {
    pub fn zero(field: &Arc<CosField>) -> Self {
        Self {
            field: Arc::clone(field),
            rep: Vec::new(),
        }
    }

    pub fn from_rational(field: &Arc<CosField>, q: BigRational) -> Self {
        let mut out = Self::zero(field);
        if !q.is_zero() {
            out.rep.push(q);
        }
        out
    }

    pub fn from_int(field: &Arc<CosField>, n: i64) -> Self {
        Self::from_rational(field, BigRational::from_integer(BigInt::from(n)))
    }

    /// The generator β itself.
    pub fn beta(field: &Arc<CosField>) -> Self {
        let mut rep = vec![BigRational::zero(), BigRational::one()];
        reduce(&mut rep, field);
        Self {
            field: Arc::clone(field),
            rep,
        }
    }

    /// Image of an integer polynomial evaluated at β.
    pub fn from_int_poly(field: &Arc<CosField>, p: &IntPoly) -> Self {
        let mut rep: Vec<BigRational> = p
            .coeffs()
            .iter()
            .map(|c| BigRational::from_integer(c.clone()))
            .collect();
        reduce(&mut rep, field);
        Self {
            field: Arc::clone(field),
            rep,
        }
    }

    pub fn field(&self) -> &Arc<CosField> {
        &self.field
    }

    pub fn rep(&self) -> &[BigRational] {
        &self.rep
    }

    pub fn is_zero(&self) -> bool {
        self.rep.is_empty()
    }

    /// Exact equality of reduced representatives.
    pub fn eq_exact(&self, other: &AlgebraicNumber) -> bool {
        self.rep == other.rep
    }

    /// Whether the element is the rational `q`.
    pub fn eq_rational(&self, q: &BigRational) -> bool {
        if q.is_zero() {
            return self.is_zero();
        }
        self.rep.len() == 1 && &self.rep[0] == q
    }

    fn check_field(&self, other: &AlgebraicNumber) -> Result<(), AlgebraError> {
        if Arc::ptr_eq(&self.field, &other.field) || self.field.d == other.field.d {
            Ok(())
        } else {
            Err(AlgebraError::MixedModuli(
                self.field.two_d(),
                other.field.two_d(),
            ))
        }
    }

    pub fn add(&self, other: &AlgebraicNumber) -> Result<AlgebraicNumber, AlgebraError> {
        self.check_field(other)?;
        let n = self.rep.len().max(other.rep.len());
        let mut rep: Vec<BigRational> = (0..n)
            .map(|k| self.coeff(k) + other.coeff(k))
            .collect();
        trim(&mut rep);
        Ok(AlgebraicNumber {
            field: Arc::clone(&self.field),
            rep,
        })
    }

    pub fn sub(&self, other: &AlgebraicNumber) -> Result<AlgebraicNumber, AlgebraError> {
        self.check_field(other)?;
        let n = self.rep.len().max(other.rep.len());
        let mut rep: Vec<BigRational> = (0..n)
            .map(|k| self.coeff(k) - other.coeff(k))
            .collect();
        trim(&mut rep);
        Ok(AlgebraicNumber {
            field: Arc::clone(&self.field),
            rep,
        })
    }

    pub fn neg(&self) -> AlgebraicNumber {
        AlgebraicNumber {
            field: Arc::clone(&self.field),
            rep: self.rep.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, other: &AlgebraicNumber) -> Result<AlgebraicNumber, AlgebraError> {
        self.check_field(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(&self.field));
        }
        let mut rep = vec![BigRational::zero(); self.rep.len() + other.rep.len() - 1];
        for (i, a) in self.rep.iter().enumerate() {
            for (j, b) in other.rep.iter().enumerate() {
                rep[i + j] += a * b;
            }
        }
        reduce(&mut rep, &self.field);
        Ok(AlgebraicNumber {
            field: Arc::clone(&self.field),
            rep,
        })
    }

    pub fn scale(&self, q: &BigRational) -> AlgebraicNumber {
        if q.is_zero() {
            return Self::zero(&self.field);
        }
        AlgebraicNumber {
            field: Arc::clone(&self.field),
            rep: self.rep.iter().map(|c| c * q).collect(),
        }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm in Q[x];
    /// the modulus is irreducible, so every nonzero element is invertible.
    pub fn inverse(&self) -> Result<AlgebraicNumber, AlgebraError> {
        if self.is_zero() {
            return Err(AlgebraError::DivisionByZeroElement);
        }
        let modulus: Vec<BigRational> = self
            .field
            .modulus
            .coeffs()
            .iter()
            .map(|c| BigRational::from_integer(c.clone()))
            .collect();
        let (g, u) = ext_gcd_bezout(&self.rep, &modulus);
        // g is a nonzero constant.
        debug_assert_eq!(g.len(), 1);
        let ginv = BigRational::one() / g[0].clone();
        let mut rep: Vec<BigRational> = u.iter().map(|c| c * &ginv).collect();
        reduce(&mut rep, &self.field);
        Ok(AlgebraicNumber {
            field: Arc::clone(&self.field),
            rep,
        })
    }

    pub fn div(&self, other: &AlgebraicNumber) -> Result<AlgebraicNumber, AlgebraError> {
        self.check_field(other)?;
        self.mul(&other.inverse()?)
    }

    fn coeff(&self, k: usize) -> BigRational {
        self.rep.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Certified enclosure of the real value at precision 2^-bits on β.
    pub fn enclosure(&self, bits: u32) -> RatInterval {
        let beta = self.field.beta_interval(bits);
        let mut acc = RatInterval::point(BigRational::zero());
        for c in self.rep.iter().rev() {
            acc = acc.mul(&beta).add(&RatInterval::point(c.clone()));
        }
        acc
    }

    pub fn to_f64(&self) -> f64 {
        self.enclosure(64).to_f64()
    }

    /// Certified comparison against a rational, by exact equality test and
    /// interval refinement with precision doubling 64 → 4096 bits.
    pub fn cmp_rational(&self, q: &BigRational) -> Result<std::cmp::Ordering, AlgebraError> {
        if self.eq_rational(q) {
            return Ok(std::cmp::Ordering::Equal);
        }
        let diff = self.sub(&AlgebraicNumber::from_rational(&self.field, q.clone()))?;
        match diff.certified_sign()? {
            1 => Ok(std::cmp::Ordering::Greater),
            _ => Ok(std::cmp::Ordering::Less),
        }
    }

    /// Certified sign of a nonzero element (0 for the zero element).
    pub fn certified_sign(&self) -> Result<i8, AlgebraError> {
        if self.is_zero() {
            return Ok(0);
        }
        let mut bits = 64;
        while bits <= 4096 {
            if let Some(sign) = self.enclosure(bits).sign() {
                return Ok(sign);
            }
            bits *= 2;
        }
        Err(AlgebraError::UndecidableSign(4096))
    }
}

fn trim(rep: &mut Vec<BigRational>) {
    while rep.last().is_some_and(|c| c.is_zero()) {
        rep.pop();
    }
}

/// In-place reduction modulo Ψ̃_{2d} (rational long division by the integer
/// modulus).
fn reduce(rep: &mut Vec<BigRational>, field: &Arc<CosField>) {
    let m = &field.modulus;
    let mdeg = m.degree();
    let mlead = BigRational::from_integer(m.leading());
    while rep.len() > mdeg {
        let top = rep.pop().unwrap();
        if top.is_zero() {
            continue;
        }
        let q = top / mlead.clone();
        let k = rep.len() - mdeg;
        for (i, c) in m.coeffs().iter().take(mdeg).enumerate() {
            let delta = &q * &BigRational::from_integer(c.clone());
            rep[k + i] -= delta;
        }
    }
    trim(rep);
}

fn qp_degree(p: &[BigRational]) -> usize {
    p.len().saturating_sub(1)
}

fn qp_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut rem = a.to_vec();
    trim(&mut rem);
    let bl = b.last().unwrap().clone();
    let bdeg = qp_degree(b);
    if rem.len() < b.len() {
        return (Vec::new(), rem);
    }
    let mut quot = vec![BigRational::zero(); rem.len() - bdeg];
    while rem.len() >= b.len() && !rem.is_empty() {
        let k = rem.len() - b.len();
        let q = rem.last().unwrap() / &bl;
        quot[k] = q.clone();
        for (i, c) in b.iter().enumerate() {
            let delta = &q * c;
            rem[k + i] -= delta;
        }
        trim(&mut rem);
        if rem.len() <= bdeg {
            break;
        }
    }
    trim(&mut quot);
    (quot, rem)
}

/// Returns (g, u) with u·a ≡ g (mod b) and g = gcd(a, b), a nonzero constant
/// when b is irreducible and a ≢ 0.
fn ext_gcd_bezout(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r0 = b.to_vec();
    let mut r1 = a.to_vec();
    let mut u0: Vec<BigRational> = Vec::new();
    let mut u1 = vec![BigRational::one()];
    while !r1.is_empty() {
        let (q, r) = qp_divmod(&r0, &r1);
        let qu1 = qp_mul(&q, &u1);
        let u_next = qp_sub(&u0, &qu1);
        r0 = r1;
        r1 = r;
        u0 = u1;
        u1 = u_next;
    }
    (r0, u0)
}

fn qp_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn qp_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let get = |p: &[BigRational], k: usize| p.get(k).cloned().unwrap_or_else(BigRational::zero);
    let mut out: Vec<BigRational> = (0..n).map(|k| get(a, k) - get(b, k)).collect();
    trim(&mut out);
    out
}
