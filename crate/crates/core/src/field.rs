//! Exact scalars: rationals and prime-field residues.
//!
//! Rationals keep an `i64` fast path and spill into [`BigRational`] only when a
//! result no longer fits. Both variants are kept in lowest terms with a
//! positive denominator, so structural equality is value equality.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible prime modulus.
pub const MAX_MODULUS: u64 = (1u64 << 63) - 1;

/// The scalar field every matrix of a computation lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSpec {
    Rational,
    Prime { modulus: u64 },
}

impl FieldSpec {
    pub fn prime(modulus: u64) -> Result<Self> {
        if modulus > MAX_MODULUS || !is_prime(modulus) {
            return Err(Error::invalid(format!("{modulus} is not a prime below 2^63")));
        }
        Ok(FieldSpec::Prime { modulus })
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            FieldSpec::Rational => 0,
            FieldSpec::Prime { modulus } => *modulus,
        }
    }

    pub fn zero(&self) -> FieldElement {
        self.from_i64(0)
    }

    pub fn one(&self) -> FieldElement {
        self.from_i64(1)
    }

    pub fn from_i64(&self, v: i64) -> FieldElement {
        match *self {
            FieldSpec::Rational => FieldElement::Q(Rational::from_int(v)),
            FieldSpec::Prime { modulus } => FieldElement::Fp {
                value: (v as i128).rem_euclid(modulus as i128) as u64,
                modulus,
            },
        }
    }

    pub fn from_bigint(&self, v: &BigInt) -> FieldElement {
        match *self {
            FieldSpec::Rational => FieldElement::Q(Rational::from_big(BigRational::from_integer(v.clone()))),
            FieldSpec::Prime { modulus } => {
                let r = v.mod_floor(&BigInt::from(modulus));
                FieldElement::Fp { value: r.to_u64().unwrap(), modulus }
            }
        }
    }

    /// Maps a rational into this field. Fails when the denominator vanishes mod p.
    pub fn from_rational(&self, q: &Rational) -> Result<FieldElement> {
        match *self {
            FieldSpec::Rational => Ok(FieldElement::Q(q.clone())),
            FieldSpec::Prime { modulus } => {
                let (num, den) = q.to_big_parts();
                let m = BigInt::from(modulus);
                let d = den.mod_floor(&m);
                if d.is_zero() {
                    return Err(Error::invalid(format!("denominator of {q} vanishes mod {modulus}")));
                }
                let n = num.mod_floor(&m).to_u64().unwrap();
                let d = d.to_u64().unwrap();
                let inv = mod_pow(d, modulus - 2, modulus);
                Ok(FieldElement::Fp { value: mul_mod(n, inv, modulus), modulus })
            }
        }
    }

    /// Parses a canonical string (`-3/4`, `17`) into this field.
    pub fn parse(&self, s: &str) -> Result<FieldElement> {
        let q: Rational = s.parse()?;
        self.from_rational(&q)
    }

    /// `Q` or `GF<p>`.
    pub fn tag(&self) -> String {
        match self {
            FieldSpec::Rational => "Q".to_string(),
            FieldSpec::Prime { modulus } => format!("GF{modulus}"),
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        if tag == "Q" {
            return Ok(FieldSpec::Rational);
        }
        let p = tag
            .strip_prefix("GF")
            .and_then(|p| p.parse::<u64>().ok())
            .ok_or_else(|| Error::parse(format!("unknown field tag `{tag}`")))?;
        FieldSpec::prime(p)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// Deterministic Miller-Rabin, exact for all `n < 2^64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = mod_pow(a, d, n);
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

pub(crate) fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
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

/// Arbitrary-precision rational with a machine-word fast path.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Rational {
    /// numerator, denominator (> 0), coprime
    Small(i64, i64),
    Big(Box<BigRational>),
}

impl Rational {
    pub fn from_int(v: i64) -> Self {
        Rational::Small(v, 1)
    }

    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("zero denominator"));
        }
        Ok(Self::from_i128(num as i128, den as i128))
    }

    fn from_i128(mut n: i128, mut d: i128) -> Self {
        debug_assert!(d != 0);
        if d < 0 {
            n = -n;
            d = -d;
        }
        let g = n.gcd(&d);
        if g > 1 {
            n /= g;
            d /= g;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Rational::Small(n, d),
            _ => Rational::Big(Box::new(BigRational::new_raw(BigInt::from(n), BigInt::from(d)))),
        }
    }

    pub fn from_big(q: BigRational) -> Self {
        // BigRational::new reduces; new_raw callers must pass reduced values
        match (q.numer().to_i64(), q.denom().to_i64()) {
            (Some(n), Some(d)) => Rational::Small(n, d),
            _ => Rational::Big(Box::new(q)),
        }
    }

    pub fn to_big(&self) -> BigRational {
        match self {
            Rational::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Rational::Big(b) => (**b).clone(),
        }
    }

    fn to_big_parts(&self) -> (BigInt, BigInt) {
        match self {
            Rational::Small(n, d) => (BigInt::from(*n), BigInt::from(*d)),
            Rational::Big(b) => (b.numer().clone(), b.denom().clone()),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Rational::Small(0, _))
    }

    pub fn is_integer(&self) -> bool {
        match self {
            Rational::Small(_, d) => *d == 1,
            Rational::Big(b) => b.is_integer(),
        }
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        Some(match self {
            Rational::Small(n, d) => Self::from_i128(*d as i128, *n as i128),
            Rational::Big(b) => Self::from_big(b.recip()),
        })
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Rational::Small(n, d) => *n as f64 / *d as f64,
            Rational::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn pow(&self, exp: i64) -> Option<Self> {
        let base = if exp < 0 { self.recip()? } else { self.clone() };
        let mut e = exp.unsigned_abs();
        let mut acc = Rational::from_int(1);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &b;
            }
            b = &b * &b;
            e >>= 1;
        }
        Some(acc)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rational::Small(n, 1) => write!(f, "{n}"),
            Rational::Small(n, d) => write!(f, "{n}/{d}"),
            Rational::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Rational::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
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
        let s = s.trim();
        let bad = || Error::parse(format!("invalid scalar `{s}`"));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Rational::from_big(BigRational::new(n, d)))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl<'a> Add for &'a Rational {
    type Output = Rational;

    fn add(self, rhs: &'a Rational) -> Rational {
        match (self, rhs) {
            (Rational::Small(a, 1), Rational::Small(c, 1)) => match a.checked_add(*c) {
                Some(s) => Rational::Small(s, 1),
                None => Rational::from_i128(*a as i128 + *c as i128, 1),
            },
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                match (a.checked_mul(d), c.checked_mul(b)) {
                    (Some(x), Some(y)) => Rational::from_i128(x + y, b * d),
                    _ => Rational::from_big(self.to_big() + rhs.to_big()),
                }
            }
            _ => Rational::from_big(self.to_big() + rhs.to_big()),
        }
    }
}

impl<'a> Sub for &'a Rational {
    type Output = Rational;

    fn sub(self, rhs: &'a Rational) -> Rational {
        self + &(-rhs)
    }
}

impl<'a> Mul for &'a Rational {
    type Output = Rational;

    fn mul(self, rhs: &'a Rational) -> Rational {
        match (self, rhs) {
            (Rational::Small(a, 1), Rational::Small(c, 1)) => match a.checked_mul(*c) {
                Some(p) => Rational::Small(p, 1),
                None => Rational::from_i128(*a as i128 * *c as i128, 1),
            },
            (Rational::Small(a, b), Rational::Small(c, d)) => {
                Rational::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128)
            }
            _ => Rational::from_big(self.to_big() * rhs.to_big()),
        }
    }
}

impl Neg for &Rational {
    type Output = Rational;

    fn neg(self) -> Rational {
        match self {
            Rational::Small(n, d) => match n.checked_neg() {
                Some(n) => Rational::Small(n, *d),
                None => Rational::from_big(-self.to_big()),
            },
            Rational::Big(b) => Rational::from_big(-(**b).clone()),
        }
    }
}

/// A scalar tagged with its field.
///
/// Binary operators panic when the operands come from different fields;
/// matrix-level operations check field agreement first and report
/// [`Error::FieldMismatch`] instead.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum FieldElement {
    Q(Rational),
    Fp { value: u64, modulus: u64 },
}

impl FieldElement {
    pub fn field(&self) -> FieldSpec {
        match self {
            FieldElement::Q(_) => FieldSpec::Rational,
            FieldElement::Fp { modulus, .. } => FieldSpec::Prime { modulus: *modulus },
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldElement::Q(q) => q.is_zero(),
            FieldElement::Fp { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            FieldElement::Q(q) => *q == Rational::Small(1, 1),
            FieldElement::Fp { value, .. } => *value == 1,
        }
    }

    pub fn inv(&self) -> Option<FieldElement> {
        match self {
            FieldElement::Q(q) => q.recip().map(FieldElement::Q),
            FieldElement::Fp { value, modulus } => {
                if *value == 0 {
                    None
                } else {
                    Some(FieldElement::Fp { value: mod_pow(*value, modulus - 2, *modulus), modulus: *modulus })
                }
            }
        }
    }

    /// Integer power; negative exponents need an invertible base.
    pub fn pow(&self, exp: i64) -> Option<FieldElement> {
        match self {
            FieldElement::Q(q) => q.pow(exp).map(FieldElement::Q),
            FieldElement::Fp { modulus, .. } => {
                let base = if exp < 0 { self.inv()? } else { self.clone() };
                let FieldElement::Fp { value, .. } = base else { unreachable!() };
                Some(FieldElement::Fp { value: mod_pow(value, exp.unsigned_abs(), *modulus), modulus: *modulus })
            }
        }
    }

    pub fn div(&self, rhs: &FieldElement) -> Option<FieldElement> {
        rhs.inv().map(|r| self * &r)
    }

    /// Reduces into another field (identity when the field already matches).
    pub fn to_field(&self, field: FieldSpec) -> Result<FieldElement> {
        if self.field() == field {
            return Ok(self.clone());
        }
        match self {
            FieldElement::Q(q) => field.from_rational(q),
            FieldElement::Fp { .. } => Err(Error::FieldMismatch { left: self.field(), right: field }),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            FieldElement::Q(q) => q.to_f64(),
            FieldElement::Fp { value, .. } => *value as f64,
        }
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            FieldElement::Q(q) => Some(q),
            FieldElement::Fp { .. } => None,
        }
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElement::Q(q) => write!(f, "{q}"),
            FieldElement::Fp { value, .. } => write!(f, "{value}"),
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn field_panic(a: &FieldElement, b: &FieldElement) -> ! {
    panic!("field mismatch: {} vs {}", a.field(), b.field())
}

impl<'a> Add for &'a FieldElement {
    type Output = FieldElement;

    fn add(self, rhs: &'a FieldElement) -> FieldElement {
        match (self, rhs) {
            (FieldElement::Q(a), FieldElement::Q(b)) => FieldElement::Q(a + b),
            (FieldElement::Fp { value: a, modulus: p }, FieldElement::Fp { value: b, modulus: q }) if p == q => {
                let s = *a as u128 + *b as u128;
                FieldElement::Fp { value: (s % *p as u128) as u64, modulus: *p }
            }
            _ => field_panic(self, rhs),
        }
    }
}

impl<'a> Sub for &'a FieldElement {
    type Output = FieldElement;

    fn sub(self, rhs: &'a FieldElement) -> FieldElement {
        self + &(-rhs)
    }
}

impl<'a> Mul for &'a FieldElement {
    type Output = FieldElement;

    fn mul(self, rhs: &'a FieldElement) -> FieldElement {
        match (self, rhs) {
            (FieldElement::Q(a), FieldElement::Q(b)) => FieldElement::Q(a * b),
            (FieldElement::Fp { value: a, modulus: p }, FieldElement::Fp { value: b, modulus: q }) if p == q => {
                FieldElement::Fp { value: mul_mod(*a, *b, *p), modulus: *p }
            }
            _ => field_panic(self, rhs),
        }
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;

    fn neg(self) -> FieldElement {
        match self {
            FieldElement::Q(a) => FieldElement::Q(-a),
            FieldElement::Fp { value, modulus } => {
                FieldElement::Fp { value: if *value == 0 { 0 } else { modulus - value }, modulus: *modulus }
            }
        }
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        &self + &rhs
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        &self - &rhs
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        &self * &rhs
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

impl Rational {
    pub fn signum(&self) -> i32 {
        match self {
            Rational::Small(n, _) => n.signum() as i32,
            Rational::Big(b) => {
                if b.is_positive() {
                    1
                } else if b.is_negative() {
                    -1
                } else {
                    0
                }
            }
        }
    }

    pub fn one() -> Self {
        Rational::Small(1, 1)
    }

    pub fn is_one(&self) -> bool {
        self.is_integer() && *self == Rational::one()
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::from_int(v)
    }
}

impl From<BigInt> for Rational {
    fn from(v: BigInt) -> Self {
        Rational::from_big(BigRational::from_integer(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn primality() {
        assert!(is_prime(2));
        assert!(is_prime(2_147_483_647));
        assert!(is_prime(2_305_843_009_213_693_951));
        assert!(!is_prime(1));
        assert!(!is_prime(561));
        assert!(!is_prime(3_215_031_751));
        assert!(FieldSpec::prime(15).is_err());
    }

    #[test]
    fn rational_canonical_form() {
        let q = Rational::new(6, -8).unwrap();
        assert_eq!(q.to_string(), "-3/4");
        assert_eq!("-3/4".parse::<Rational>().unwrap(), q);
        assert_eq!("17".parse::<Rational>().unwrap().to_string(), "17");
        assert!("1/0".parse::<Rational>().is_err());
    }

    #[test]
    fn overflow_spills_to_big() {
        let a = Rational::from_int(i64::MAX);
        let b = &a * &a;
        assert!(matches!(b, Rational::Big(_)));
        let back = &b * &Rational::new(1, i64::MAX).unwrap();
        assert_eq!(back, a);
        assert!(matches!(back, Rational::Small(..)));
    }

    #[test]
    fn prime_field_ops() {
        let f = FieldSpec::prime(7).unwrap();
        let a = f.from_i64(-1);
        assert_eq!(a.to_string(), "6");
        assert_eq!((&a * &a).to_string(), "1");
        assert_eq!(f.parse("1/2").unwrap().to_string(), "4");
        assert!(f.parse("3/7").is_err());
        assert_eq!(f.from_i64(3).pow(-1).unwrap().to_string(), "5");
    }

    proptest! {
        #[test]
        fn rational_round_trip(n in any::<i64>(), d in 1i64..i64::MAX) {
            let q = Rational::new(n, d).unwrap();
            let back: Rational = q.to_string().parse().unwrap();
            prop_assert_eq!(back, q);
        }

        #[test]
        fn rational_field_axioms(a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000) {
            let x = Rational::new(a, b).unwrap();
            let y = Rational::new(c, d).unwrap();
            let big = Rational::from_big(&x.to_big() * &y.to_big());
            prop_assert_eq!(&x * &y, big);
            prop_assert_eq!(&(&x + &y) - &y, x.clone());
            if let Some(inv) = y.recip() {
                prop_assert!((&y * &inv).is_one());
            }
        }
    }
}
