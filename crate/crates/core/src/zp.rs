//! Arithmetic in Z_p, the circle norm ‖x‖_p and the additive character e_p.
//!
//! Norms are kept as integer numerators over the denominator `p` (squared norms
//! over `p²`), so every comparison made by the lemma checkers is exact.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used on the floating-point side of the cosine facts.
pub const COS_SLACK: f64 = 1e-12;

/// Deterministic Miller–Rabin, exact for every `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &q in &SMALL {
        if n == q {
            return true;
        }
        if n.is_multiple_of(q) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &SMALL {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[inline]
pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// A prime modulus, checked at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct PrimeModulus(u64);

impl PrimeModulus {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(Self(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// Reduces an arbitrary integer into `[0, p)`.
    pub fn residue(self, value: i128) -> Residue {
        let v = value.rem_euclid(self.0 as i128) as u64;
        Residue { value: v, modulus: self }
    }

    pub fn residue_u64(self, value: u64) -> Residue {
        Residue {
            value: value % self.0,
            modulus: self,
        }
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        let s = a as u128 + b as u128;
        (s % self.0 as u128) as u64
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            self.0 - (b - a)
        }
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.0)
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    /// Numerator of ‖x‖_p over denominator `p`, i.e. `min(x, p - x)`.
    #[inline]
    pub fn circle_numerator(self, x: u64) -> u64 {
        let x = x % self.0;
        x.min(self.0 - x)
    }
}

impl TryFrom<u64> for PrimeModulus {
    type Error = Error;

    fn try_from(p: u64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<PrimeModulus> for u64 {
    fn from(p: PrimeModulus) -> u64 {
        p.0
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element of Z_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Residue {
    value: u64,
    modulus: PrimeModulus,
}

impl Residue {
    #[inline]
    pub fn value(self) -> u64 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> PrimeModulus {
        self.modulus
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    pub fn norm(self) -> CircleNorm {
        norm_p(self)
    }

    fn check(self, other: Residue) {
        assert_eq!(
            self.modulus, other.modulus,
            "residue arithmetic across different moduli"
        );
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Add for Residue {
    type Output = Residue;
    fn add(self, rhs: Residue) -> Residue {
        self.check(rhs);
        Residue {
            value: self.modulus.add(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Sub for Residue {
    type Output = Residue;
    fn sub(self, rhs: Residue) -> Residue {
        self.check(rhs);
        Residue {
            value: self.modulus.sub(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Mul for Residue {
    type Output = Residue;
    fn mul(self, rhs: Residue) -> Residue {
        self.check(rhs);
        Residue {
            value: self.modulus.mul(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Neg for Residue {
    type Output = Residue;
    fn neg(self) -> Residue {
        Residue {
            value: self.modulus.neg(self.value),
            modulus: self.modulus,
        }
    }
}

/// ‖x‖_p stored as `numerator / p` with `numerator <= p / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CircleNorm {
    numerator: u64,
    modulus: u64,
}

impl CircleNorm {
    pub fn numerator(self) -> u64 {
        self.numerator
    }

    pub fn denominator(self) -> u64 {
        self.modulus
    }

    /// Numerator of ‖x‖_p² over `p²`.
    pub fn squared_numerator(self) -> u128 {
        let a = self.numerator as u128;
        a * a
    }

    pub fn to_ratio(self) -> Ratio<u64> {
        Ratio::new(self.numerator, self.modulus)
    }

    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / self.modulus as f64
    }
}

/// ‖x‖_p = min(x, p − x) / p.
pub fn norm_p(x: Residue) -> CircleNorm {
    CircleNorm {
        numerator: x.modulus.circle_numerator(x.value),
        modulus: x.modulus.get(),
    }
}

/// e_p(x) = exp(2πi x / p) as `(re, im)`.
pub fn e_p(x: Residue) -> (f64, f64) {
    let angle = std::f64::consts::TAU * (x.value as f64 / x.modulus.get() as f64);
    (angle.cos(), angle.sin())
}

/// ‖y‖_Z for an exact rational `y`.
pub fn dist_to_integer(y: &BigRational) -> BigRational {
    let floor = y.floor();
    let frac = y - &floor;
    let other = BigRational::from_integer(BigInt::from(1)) - &frac;
    if frac <= other {
        frac
    } else {
        other
    }
}

/// ‖y₁+⋯+y_k‖_Z² ≤ k·Σ‖y_i‖_Z², evaluated exactly.
pub fn fact_real_sum_norm(ys: &[BigRational]) -> bool {
    if ys.is_empty() {
        return true;
    }
    let total: BigRational = ys.iter().fold(BigRational::zero(), |acc, y| acc + y);
    let lhs = {
        let d = dist_to_integer(&total);
        &d * &d
    };
    let sq_sum = ys.iter().fold(BigRational::zero(), |acc, y| {
        let d = dist_to_integer(y);
        acc + &d * &d
    });
    let rhs = BigRational::from_integer(BigInt::from(ys.len())) * sq_sum;
    debug_assert!(!lhs.is_negative());
    lhs <= rhs
}

/// 1 − 20‖y‖_Z² ≤ cos(2πy) ≤ 1 − 2‖y‖_Z², with [`COS_SLACK`] on the cosine.
pub fn fact_cosine_sandwich(y: f64) -> bool {
    let frac = y - y.floor();
    let d = frac.min(1.0 - frac);
    let c = (std::f64::consts::TAU * y).cos();
    1.0 - 20.0 * d * d <= c + COS_SLACK && c <= 1.0 - 2.0 * d * d + COS_SLACK
}

/// ‖x₁+⋯+x_k‖_p² ≤ k·Σ‖x_i‖_p², compared as integer numerators over `p²`.
pub fn fact_residue_sum_norm(xs: &[Residue]) -> bool {
    let Some(first) = xs.first() else {
        return true;
    };
    let p = first.modulus();
    let total = xs.iter().skip(1).fold(*first, |acc, &x| acc + x);
    let lhs = norm_p(total).squared_numerator();
    let rhs: u128 = xs.iter().map(|&x| norm_p(x).squared_numerator()).sum();
    debug_assert!(xs.iter().all(|x| x.modulus() == p));
    lhs <= xs.len() as u128 * rhs
}

/// Re(e_p(x)) ≤ 1 − 2‖x‖_p². The right side is formed exactly as
/// `(p² − 2a²) / p²` before conversion.
pub fn fact_character_real_part(x: Residue) -> bool {
    let p = x.modulus().get() as u128;
    let a2 = norm_p(x).squared_numerator();
    // 2a² ≤ p²/2, so the numerator stays positive
    let rhs = (p * p - 2 * a2) as f64 / (p * p) as f64;
    e_p(x).0 <= rhs + COS_SLACK
}

/// Membership vector of the sumset A + B in Z_p.
pub fn sumset(p: PrimeModulus, a: &[bool], b: &[bool]) -> Vec<bool> {
    let n = p.get() as usize;
    assert_eq!(a.len(), n);
    assert_eq!(b.len(), n);
    let bs: Vec<usize> = (0..n).filter(|&i| b[i]).collect();
    let mut out = vec![false; n];
    for (x, _) in a.iter().enumerate().filter(|(_, &m)| m) {
        for &y in &bs {
            let s = x + y;
            out[if s >= n { s - n } else { s }] = true;
        }
    }
    out
}

/// Membership vector of kA = A + ⋯ + A (k copies); `0A = {0}`.
pub fn k_fold_sumset(p: PrimeModulus, a: &[bool], k: usize) -> Vec<bool> {
    let n = p.get() as usize;
    let mut acc = vec![false; n];
    acc[0] = true;
    for _ in 0..k {
        acc = sumset(p, &acc, a);
    }
    acc
}

/// Sumset of two subsets of Z_p encoded as bitmasks, for `p <= 63`.
#[inline]
pub fn sumset_mask(p: u32, x: u64, a: u64) -> u64 {
    debug_assert!(p <= 63);
    let full = (1u64 << p) - 1;
    let mut out = 0u64;
    let mut rest = a;
    while rest != 0 {
        let s = rest.trailing_zeros();
        rest &= rest - 1;
        out |= if s == 0 {
            x
        } else {
            ((x << s) | (x >> (p - s))) & full
        };
    }
    out
}

/// |kA| ≥ 1 + k(|A| − 1) whenever kA ≠ Z_p, for a bitmask `a` with `p <= 63`.
pub fn fact_cauchy_davenport_mask(p: u32, a: u64, k: u32) -> bool {
    let full = (1u64 << p) - 1;
    let size = a.count_ones() as i64;
    let mut acc = 1u64;
    for _ in 0..k {
        acc = sumset_mask(p, acc, a);
    }
    acc == full || acc.count_ones() as i64 > k as i64 * (size - 1)
}

/// Same statement for a general subset given as a membership vector.
pub fn fact_cauchy_davenport(p: PrimeModulus, a: &[bool], k: usize) -> bool {
    let size = a.iter().filter(|&&m| m).count() as i64;
    let ka = k_fold_sumset(p, a, k);
    let ka_size = ka.iter().filter(|&&m| m).count();
    ka_size == p.get() as usize || ka_size as i64 > k as i64 * (size - 1)
}
