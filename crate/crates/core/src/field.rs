//! Prime-field arithmetic over moduli below 2^127.
//!
//! Elements are stored as `u128` residues. The 127-bit bound keeps a sum of two
//! residues inside `u128`, which lets the generic multiplication path use
//! plain double-and-add. The Mersenne prime 2^127 - 1 (the default) gets a
//! dedicated folding reduction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2^127 - 1.
pub const MERSENNE_127: u128 = (1u128 << 127) - 1;

const MASK64: u128 = u64::MAX as u128;

/// A residue in `[0, p)`. Arithmetic goes through the owning [`FieldModulus`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct FieldElement(u128);

impl FieldElement {
    pub const ZERO: Self = FieldElement(0);
    pub const ONE: Self = FieldElement(1);

    pub fn value(self) -> u128 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The order of the prime field. Verified prime on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldModulus {
    p: u128,
}

impl Default for FieldModulus {
    fn default() -> Self {
        FieldModulus { p: MERSENNE_127 }
    }
}

impl FieldModulus {
    pub fn new(p: u128) -> Result<Self> {
        if p <= 2 || p > MERSENNE_127 {
            return Err(Error::ModulusOutOfRange(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(FieldModulus { p })
    }

    pub fn p(&self) -> u128 {
        self.p
    }

    /// Reduces an arbitrary integer into the field.
    pub fn element(&self, v: u128) -> FieldElement {
        FieldElement(v % self.p)
    }

    /// Embeds a signed integer, mapping negatives to the upper half.
    pub fn from_signed(&self, v: i128) -> FieldElement {
        let r = v.rem_euclid(self.p as i128);
        FieldElement(r as u128)
    }

    /// Interprets an element as a signed integer in `(-p/2, p/2]`.
    pub fn to_signed(&self, e: FieldElement) -> i128 {
        if e.0 > self.p / 2 {
            -((self.p - e.0) as i128)
        } else {
            e.0 as i128
        }
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let s = a.0 + b.0;
        FieldElement(if s >= self.p { s - self.p } else { s })
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 >= b.0 {
            FieldElement(a.0 - b.0)
        } else {
            FieldElement(a.0 + (self.p - b.0))
        }
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if a.0 == 0 {
            a
        } else {
            FieldElement(self.p - a.0)
        }
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(mul_mod(a.0, b.0, self.p))
    }

    pub fn pow(&self, a: FieldElement, e: u128) -> FieldElement {
        FieldElement(pow_mod(a.0, e, self.p))
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inverse(&self, a: FieldElement) -> Result<FieldElement> {
        if a.0 == 0 {
            return Err(Error::ZeroInverse);
        }
        let p = self.p as i128;
        let (mut t, mut new_t) = (0i128, 1i128);
        let (mut r, mut new_r) = (p, a.0 as i128);
        while new_r != 0 {
            let q = r / new_r;
            (t, new_t) = (new_t, t - q * new_t);
            (r, new_r) = (new_r, r - q * new_r);
        }
        debug_assert_eq!(r, 1, "modulus is prime so gcd is 1");
        Ok(FieldElement(t.rem_euclid(p) as u128))
    }
}

/// Free-function form of [`FieldModulus::inverse`].
pub fn field_inverse(a: FieldElement, modulus: &FieldModulus) -> Result<FieldElement> {
    modulus.inverse(a)
}

fn widening_mul(a: u128, b: u128) -> (u128, u128) {
    let (a1, a0) = (a >> 64, a & MASK64);
    let (b1, b0) = (b >> 64, b & MASK64);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let (mid, mid_carry) = p01.overflowing_add(p10);
    let (lo, carry) = p00.overflowing_add(mid << 64);
    let hi = p11 + (mid >> 64) + ((mid_carry as u128) << 64) + carry as u128;
    (hi, lo)
}

/// `a * b mod n` for `a, b < n <= 2^127 - 1`.
pub(crate) fn mul_mod(a: u128, b: u128, n: u128) -> u128 {
    debug_assert!(a < n && b < n);
    if n == MERSENNE_127 {
        let (hi, lo) = widening_mul(a, b);
        let s = ((hi << 1) | (lo >> 127)) + (lo & MERSENNE_127);
        let r = (s & MERSENNE_127) + (s >> 127);
        return if r >= n { r - n } else { r };
    }
    if n <= MASK64 {
        return (a * b) % n;
    }
    let mut acc = 0u128;
    let bits = 128 - b.leading_zeros();
    for i in (0..bits).rev() {
        acc <<= 1;
        if acc >= n {
            acc -= n;
        }
        if (b >> i) & 1 == 1 {
            acc += a;
            if acc >= n {
                acc -= n;
            }
        }
    }
    acc
}

pub(crate) fn pow_mod(base: u128, mut e: u128, n: u128) -> u128 {
    let mut result = 1 % n;
    let mut b = base % n;
    while e > 0 {
        if e & 1 == 1 {
            result = mul_mod(result, b, n);
        }
        b = mul_mod(b, b, n);
        e >>= 1;
    }
    result
}

const SMALL_PRIMES: [u128; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

// Miller-Rabin with the first 12 prime bases is exact below this bound.
const MR_DETERMINISTIC_BOUND: u128 = 3_317_044_064_679_887_385_961_981;

/// Deterministic primality test for `n < 2^127`.
///
/// Miller-Rabin over the first twelve prime bases, which is exact below
/// 3.3e24; above that a strong Lucas test is added (Baillie-PSW).
pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    if n > MERSENNE_127 {
        return false;
    }
    for &sp in &SMALL_PRIMES {
        if n == sp {
            return true;
        }
        if n.is_multiple_of(sp) {
            return false;
        }
    }
    let mut d = n - 1;
    let s = d.trailing_zeros();
    d >>= s;
    'bases: for &a in &SMALL_PRIMES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    if n < MR_DETERMINISTIC_BOUND {
        return true;
    }
    is_strong_lucas_prp(n)
}

fn jacobi(a: i128, n: u128) -> i32 {
    let mut a = a.rem_euclid(n as i128) as u128;
    let mut n = n;
    let mut result = 1;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

fn half_mod(x: u128, n: u128) -> u128 {
    if x & 1 == 1 {
        (x + n) >> 1
    } else {
        x >> 1
    }
}

fn add_mod(a: u128, b: u128, n: u128) -> u128 {
    let s = a + b;
    if s >= n {
        s - n
    } else {
        s
    }
}

fn sub_mod(a: u128, b: u128, n: u128) -> u128 {
    if a >= b {
        a - b
    } else {
        a + (n - b)
    }
}

// Strong Lucas probable-prime test with Selfridge's parameters (P = 1).
fn is_strong_lucas_prp(n: u128) -> bool {
    let root = n.isqrt();
    if root * root == n {
        return false;
    }
    let mut d_param: i128 = 5;
    loop {
        match jacobi(d_param, n) {
            -1 => break,
            0 if d_param.unsigned_abs() != n => return false,
            _ => {}
        }
        d_param = if d_param > 0 { -(d_param + 2) } else { -d_param + 2 };
    }
    let q_param = (1 - d_param) / 4;
    let dm = d_param.rem_euclid(n as i128) as u128;
    let qm = q_param.rem_euclid(n as i128) as u128;

    let mut k = n + 1;
    let s = k.trailing_zeros();
    k >>= s;

    let (mut u, mut v, mut qk) = (1u128, 1u128, qm);
    let bits = 128 - k.leading_zeros();
    for i in (0..bits - 1).rev() {
        u = mul_mod(u, v, n);
        v = sub_mod(mul_mod(v, v, n), add_mod(qk, qk, n), n);
        qk = mul_mod(qk, qk, n);
        if (k >> i) & 1 == 1 {
            let nu = half_mod(add_mod(u, v, n), n);
            let nv = half_mod(add_mod(mul_mod(dm, u, n), v, n), n);
            u = nu;
            v = nv;
            qk = mul_mod(qk, qm, n);
        }
    }
    if u == 0 || v == 0 {
        return true;
    }
    for _ in 1..s {
        v = sub_mod(mul_mod(v, v, n), add_mod(qk, qk, n), n);
        qk = mul_mod(qk, qk, n);
        if v == 0 {
            return true;
        }
    }
    false
}
