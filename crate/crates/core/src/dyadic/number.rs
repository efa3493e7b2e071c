use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact dyadic rational `num / 2^exp`.
///
/// Canonical form: `exp ≥ 0`, and `num` is odd unless `exp = 0`; zero is
/// `0 / 2^0`. Equality and hashing are therefore value equality.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Dyadic {
    num: BigInt,
    exp: u64,
}

impl Dyadic {
    pub fn new(num: impl Into<BigInt>, exp: i64) -> Self {
        let num = num.into();
        if num.is_zero() {
            return Self::zero();
        }
        if exp <= 0 {
            return Self { num: num << (-exp) as u64, exp: 0 };
        }
        let tz = num.trailing_zeros().unwrap_or(0).min(exp as u64);
        Self { num: num >> tz, exp: exp as u64 - tz }
    }

    pub fn zero() -> Self {
        Self { num: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Self { num: BigInt::from(n), exp: 0 }
    }

    /// `2^k` for any integer `k`.
    pub fn pow2(k: i64) -> Self {
        Self::new(1, -k)
    }

    /// Exact value of a finite double.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::invalid(format!("{x} is not a finite number")));
        }
        if x == 0.0 {
            return Ok(Self::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), raw_exp - 1075) };
        Ok(Self::new(BigInt::from(mant) * sign, -e))
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    /// Exponent of the power-of-two denominator.
    pub fn den_pow2(&self) -> u64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self { num: self.num.abs(), exp: self.exp }
    }

    /// `self · 2^k`.
    pub fn mul_pow2(&self, k: i64) -> Self {
        Self::new(self.num.clone(), self.exp as i64 - k)
    }

    pub fn mul_int(&self, n: i64) -> Self {
        Self::new(&self.num * n, self.exp as i64)
    }

    /// Integer value, if this is an integer.
    pub fn to_integer(&self) -> Option<BigInt> {
        (self.exp == 0).then(|| self.num.clone())
    }

    pub fn to_f64(&self) -> f64 {
        let bits = self.num.bits() as i64;
        // keep the leading 64 bits so huge numerators do not overflow
        let shift = (bits - 64).max(0);
        let head = (&self.num >> shift as u64).to_f64().unwrap_or(f64::NAN);
        let mut e = shift - self.exp as i64;
        let mut v = head;
        while e > 0 {
            let s = e.min(1000);
            v *= 2f64.powi(s as i32);
            e -= s;
        }
        while e < 0 {
            let s = (-e).min(1000);
            v *= 2f64.powi(-(s as i32));
            e += s;
        }
        v
    }

    /// `(num_a · 2^{e−exp_a}, num_b · 2^{e−exp_b})` over a common denominator.
    fn aligned(&self, other: &Self) -> (BigInt, BigInt, u64) {
        let e = self.exp.max(other.exp);
        (&self.num << (e - self.exp), &other.num << (e - other.exp), e)
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl From<i64> for Dyadic {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic::new(a + b, e as i64)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(rhs);
        Dyadic::new(a - b, e as i64)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &rhs.num, (self.exp + rhs.exp) as i64)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -&self.num, exp: self.exp }
    }
}

macro_rules! by_value {
    ($tr:ident, $f:ident) => {
        impl $tr for Dyadic {
            type Output = Dyadic;
            fn $f(self, rhs: Dyadic) -> Dyadic {
                (&self).$f(&rhs)
            }
        }
    };
}
by_value!(Add, add);
by_value!(Sub, sub);
by_value!(Mul, mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl std::iter::Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Self {
        iter.fold(Dyadic::zero(), |a, b| &a + &b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Dyadic {
    type Err = Error;

    /// Accepts `n`, `n/2^k` and `n/d` with `d` a power of two.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Format(format!("not a dyadic rational: {s:?}"));
        let s = s.trim();
        let Some((n, d)) = s.split_once('/') else {
            return Ok(Self::new(s.parse::<BigInt>().map_err(|_| bad())?, 0));
        };
        let num: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d = d.trim();
        let exp = if let Some(k) = d.strip_prefix("2^") {
            k.parse::<i64>().map_err(|_| bad())?
        } else {
            let den: BigInt = d.parse().map_err(|_| bad())?;
            if den <= BigInt::zero() || (&den & (&den - BigInt::one())) != BigInt::zero() {
                return Err(bad());
            }
            den.bits() as i64 - 1
        };
        Ok(Self::new(num, exp))
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
