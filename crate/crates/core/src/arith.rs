//! Exact rationals and the ring `Q(s)` with `s⁴ = -1`.
//!
//! `s` is an abstract primitive eighth root of unity. It stands for `√i`, and
//! `s²` stands for `i`. Nothing here is ever evaluated numerically.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Arbitrary-precision fraction, always in lowest terms with positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Self {
        Rational(BigRational::new(num.into(), den.into()))
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    pub fn to_f64(&self) -> Option<f64> {
        self.0.to_f64()
    }

    pub fn pow(&self, e: i32) -> Self {
        Rational(num_traits::Pow::pow(&self.0, e))
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("not a rational: {s:?}"));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Rational::new(n, d))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! rational_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
    };
}

rational_binop!(Add, add, +);
rational_binop!(Sub, sub, -);
rational_binop!(Mul, mul, *);
rational_binop!(Div, div, /);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

/// `n!` as a rational.
pub fn factorial(n: u32) -> Rational {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    Rational::from(acc)
}

/// Element `c0 + c1·s + c2·s² + c3·s³` of `Q(s)`, `s⁴ = -1`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Cyc8 {
    c: [Rational; 4],
}

impl Cyc8 {
    pub fn new(c0: Rational, c1: Rational, c2: Rational, c3: Rational) -> Self {
        Cyc8 {
            c: [c0, c1, c2, c3],
        }
    }

    pub fn zero() -> Self {
        Cyc8::default()
    }

    pub fn one() -> Self {
        Cyc8::from(Rational::one())
    }

    /// The generator `s` (`√i`).
    pub fn s() -> Self {
        sqrt_i_pow(1)
    }

    /// `s² = i`.
    pub fn i() -> Self {
        sqrt_i_pow(2)
    }

    pub fn from_int(n: i64) -> Self {
        Cyc8::from(Rational::from(n))
    }

    pub fn coeffs(&self) -> &[Rational; 4] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(Rational::is_zero)
    }

    pub fn is_rational(&self) -> bool {
        self.c[1..].iter().all(Rational::is_zero)
    }

    pub fn scale(&self, r: &Rational) -> Cyc8 {
        if r.is_zero() {
            return Cyc8::zero();
        }
        Cyc8 {
            c: [
                &self.c[0] * r,
                &self.c[1] * r,
                &self.c[2] * r,
                &self.c[3] * r,
            ],
        }
    }

    /// Image under the automorphism `s ↦ s^k`, `k` odd.
    pub fn galois(&self, k: i64) -> Cyc8 {
        let mut out = Cyc8::zero();
        for (j, cj) in self.c.iter().enumerate() {
            if cj.is_zero() {
                continue;
            }
            out += &sqrt_i_pow(j as i64 * k).scale(cj);
        }
        out
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Cyc8> {
        if self.is_zero() {
            return None;
        }
        if self.is_rational() {
            return Some(Cyc8::from(self.c[0].recip()));
        }
        // product of the three non-trivial conjugates; x·that is the norm
        let others = &(&self.galois(3) * &self.galois(5)) * &self.galois(7);
        let norm =
            rational_part(&(self * &others)).expect("norm of a cyclotomic element is rational");
        Some(others.scale(&norm.recip()))
    }

    pub fn pow(&self, e: u32) -> Cyc8 {
        let mut acc = Cyc8::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }
}

impl From<Rational> for Cyc8 {
    fn from(r: Rational) -> Self {
        Cyc8 {
            c: [r, Rational::zero(), Rational::zero(), Rational::zero()],
        }
    }
}

impl fmt::Display for Cyc8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            return write!(f, "{}", self.c[0]);
        }
        let mut first = true;
        for (j, cj) in self.c.iter().enumerate() {
            if cj.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match j {
                0 => write!(f, "{cj}")?,
                1 => write!(f, "({cj})s")?,
                _ => write!(f, "({cj})s^{j}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Cyc8 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}, {}, {}]",
            self.c[0], self.c[1], self.c[2], self.c[3]
        )
    }
}

impl Serialize for Cyc8 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.c.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cyc8 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let c = <[Rational; 4]>::deserialize(d)?;
        Ok(Cyc8 { c })
    }
}

impl Add<&Cyc8> for &Cyc8 {
    type Output = Cyc8;
    fn add(self, rhs: &Cyc8) -> Cyc8 {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Cyc8> for &Cyc8 {
    type Output = Cyc8;
    fn sub(self, rhs: &Cyc8) -> Cyc8 {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl AddAssign<&Cyc8> for Cyc8 {
    fn add_assign(&mut self, rhs: &Cyc8) {
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            if !b.is_zero() {
                *a += b;
            }
        }
    }
}

impl SubAssign<&Cyc8> for Cyc8 {
    fn sub_assign(&mut self, rhs: &Cyc8) {
        for (a, b) in self.c.iter_mut().zip(&rhs.c) {
            if !b.is_zero() {
                *a -= b;
            }
        }
    }
}

impl Neg for &Cyc8 {
    type Output = Cyc8;
    fn neg(self) -> Cyc8 {
        Cyc8 {
            c: [-&self.c[0], -&self.c[1], -&self.c[2], -&self.c[3]],
        }
    }
}

impl Neg for Cyc8 {
    type Output = Cyc8;
    fn neg(self) -> Cyc8 {
        -&self
    }
}

/// Product with reduction by `s⁴ = -1`.
pub fn cyc8_mul(a: &Cyc8, b: &Cyc8) -> Cyc8 {
    let mut out = Cyc8::zero();
    cyc8_mul_acc(&mut out, a, b);
    out
}

/// `acc += a·b` without materializing the product.
pub(crate) fn cyc8_mul_acc(acc: &mut Cyc8, a: &Cyc8, b: &Cyc8) {
    for (i, ai) in a.c.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.c.iter().enumerate() {
            if bj.is_zero() {
                continue;
            }
            let p = ai * bj;
            let k = i + j;
            if k < 4 {
                acc.c[k] += &p;
            } else {
                acc.c[k - 4] -= &p;
            }
        }
    }
}

impl Mul<&Cyc8> for &Cyc8 {
    type Output = Cyc8;
    fn mul(self, rhs: &Cyc8) -> Cyc8 {
        cyc8_mul(self, rhs)
    }
}

impl Mul<Cyc8> for Cyc8 {
    type Output = Cyc8;
    fn mul(self, rhs: Cyc8) -> Cyc8 {
        cyc8_mul(&self, &rhs)
    }
}

/// `s^m` reduced modulo `s⁸ = 1`; negative `m` allowed.
pub fn sqrt_i_pow(m: i64) -> Cyc8 {
    let m = m.rem_euclid(8) as usize;
    let mut c = [
        Rational::zero(),
        Rational::zero(),
        Rational::zero(),
        Rational::zero(),
    ];
    if m < 4 {
        c[m] = Rational::one();
    } else {
        c[m - 4] = -Rational::one();
    }
    Cyc8 { c }
}

/// `i^m`.
pub fn i_pow(m: i64) -> Cyc8 {
    sqrt_i_pow(2 * m)
}

/// The rational component, failing if any irrational component survives.
pub fn rational_part(a: &Cyc8) -> Result<Rational> {
    if a.is_rational() {
        Ok(a.c[0].clone())
    } else {
        Err(Error::NotRational(format!("{a}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn rational_lowest_terms_and_format() {
        assert_eq!(r(6, -8).to_string(), "-3/4");
        assert_eq!(Rational::from(5).to_string(), "5/1");
        assert_eq!("-3/4".parse::<Rational>().unwrap(), r(-3, 4));
        assert_eq!("7".parse::<Rational>().unwrap(), r(7, 1));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
    }

    #[test]
    fn ring_laws_for_s() {
        let s = Cyc8::s();
        assert_eq!(&s * &s, Cyc8::i());
        assert_eq!(&Cyc8::i() * &Cyc8::i(), Cyc8::from_int(-1));
        let one = Cyc8::one();
        let lhs = &(&one + &s) * &(&one - &s);
        assert_eq!(lhs, &one - &Cyc8::i());
    }

    #[test]
    fn sqrt_i_powers() {
        assert_eq!(sqrt_i_pow(0), Cyc8::one());
        assert_eq!(sqrt_i_pow(4), Cyc8::from_int(-1));
        assert_eq!(sqrt_i_pow(8), Cyc8::one());
        assert_eq!(sqrt_i_pow(-1), &sqrt_i_pow(4) * &sqrt_i_pow(3));
        // ξ = H - 2E on the blown-up plane: (ξ²+3) + (ξ-H)² = 0 + (-4)
        assert_eq!(sqrt_i_pow(-4), Cyc8::from_int(-1));
    }

    #[test]
    fn rational_part_extraction() {
        assert_eq!(rational_part(&Cyc8::from(r(5, 3))).unwrap(), r(5, 3));
        assert!(matches!(
            rational_part(&Cyc8::i()),
            Err(Error::NotRational(_))
        ));
        let p = &Cyc8::s() * &sqrt_i_pow(7);
        assert_eq!(rational_part(&p).unwrap(), Rational::one());
    }

    #[test]
    fn inverse() {
        let x = Cyc8::new(r(1, 2), r(-3, 1), r(0, 1), r(2, 5));
        let inv = x.inv().unwrap();
        assert_eq!(&x * &inv, Cyc8::one());
        assert!(Cyc8::zero().inv().is_none());
        assert_eq!(Cyc8::s().inv().unwrap(), sqrt_i_pow(-1));
    }

    #[test]
    fn serde_shapes() {
        let x = Cyc8::new(r(1, 2), r(-3, 1), r(0, 1), r(2, 5));
        let js = serde_json::to_string(&x).unwrap();
        assert_eq!(js, r#"["1/2","-3/1","0/1","2/5"]"#);
        let back: Cyc8 = serde_json::from_str(&js).unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn factorials() {
        assert_eq!(factorial(0), Rational::one());
        assert_eq!(factorial(5), Rational::from(120));
    }
}
