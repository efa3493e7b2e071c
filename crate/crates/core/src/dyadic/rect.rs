use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::number::Dyadic;
use crate::error::{Error, Result};

/// Big integers as decimal strings, so JSON artifacts stay readable.
mod decimal {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// `[(i−1)2^{−m1}, i·2^{−m1}) × [(j−1)2^{−m2}, j·2^{−m2})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicRect {
    #[serde(with = "decimal")]
    pub i: BigInt,
    #[serde(with = "decimal")]
    pub j: BigInt,
    pub m1: u32,
    pub m2: u32,
}

impl DyadicRect {
    pub fn new(i: impl Into<BigInt>, j: impl Into<BigInt>, m1: u32, m2: u32) -> Self {
        Self { i: i.into(), j: j.into(), m1, m2 }
    }

    pub fn unit() -> Self {
        Self::new(1, 1, 0, 0)
    }

    pub fn square(i: impl Into<BigInt>, j: impl Into<BigInt>, m: u32) -> Self {
        Self::new(i, j, m, m)
    }

    pub fn is_square(&self) -> bool {
        self.m1 == self.m2
    }

    /// `|R| = 2^{−m1−m2}`.
    pub fn measure(&self) -> Dyadic {
        Dyadic::pow2(-(self.m1 as i64 + self.m2 as i64))
    }

    /// `len(R) = 2^{−len_exp}` (the longer side).
    pub fn len_exp(&self) -> u32 {
        self.m1.min(self.m2)
    }

    /// `wd(R) = 2^{−wd_exp}` (the shorter side).
    pub fn wd_exp(&self) -> u32 {
        self.m1.max(self.m2)
    }

    /// Squared diameter `4^{−m1} + 4^{−m2}`.
    pub fn diam_sq(&self) -> Dyadic {
        &Dyadic::pow2(-2 * self.m1 as i64) + &Dyadic::pow2(-2 * self.m2 as i64)
    }

    /// 0-based cell indices, if the rectangle lies in `[0, 1)²`.
    pub fn unit_indices(&self) -> Option<(BigUint, BigUint)> {
        let ix = to_index(&self.i, self.m1)?;
        let iy = to_index(&self.j, self.m2)?;
        Some((ix, iy))
    }

    pub fn in_unit_square(&self) -> bool {
        self.unit_indices().is_some()
    }

    pub fn contains(&self, other: &DyadicRect) -> bool {
        interval_contains(&self.i, self.m1, &other.i, other.m1) && interval_contains(&self.j, self.m2, &other.j, other.m2)
    }

    pub fn intersects(&self, other: &DyadicRect) -> bool {
        (interval_contains(&self.i, self.m1, &other.i, other.m1) || interval_contains(&other.i, other.m1, &self.i, self.m1))
            && (interval_contains(&self.j, self.m2, &other.j, other.m2)
                || interval_contains(&other.j, other.m2, &self.j, self.m2))
    }

    pub fn contains_point(&self, p: &DyadicPoint) -> bool {
        cell_of(&p.x, self.m1) == self.i && cell_of(&p.y, self.m2) == self.j
    }

    /// The dyadic rectangle with exponents `(a1, a2)` containing `self`
    /// (`a1 ≤ m1`, `a2 ≤ m2`).
    pub fn ancestor(&self, a1: u32, a2: u32) -> DyadicRect {
        assert!(a1 <= self.m1 && a2 <= self.m2);
        DyadicRect {
            i: ancestor_index(&self.i, self.m1 - a1),
            j: ancestor_index(&self.j, self.m2 - a2),
            m1: a1,
            m2: a2,
        }
    }

    /// The rectangle with exponents `(e1, e2)` that contains `p`.
    pub fn containing(p: &DyadicPoint, e1: u32, e2: u32) -> DyadicRect {
        DyadicRect { i: cell_of(&p.x, e1), j: cell_of(&p.y, e2), m1: e1, m2: e2 }
    }

    /// Lower-left corner.
    pub fn corner(&self) -> DyadicPoint {
        DyadicPoint {
            x: Dyadic::new(&self.i - 1, self.m1 as i64),
            y: Dyadic::new(&self.j - 1, self.m2 as i64),
        }
    }
}

impl fmt::Display for DyadicRect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[({}−1)/2^{}, {}/2^{}) × [({}−1)/2^{}, {}/2^{})", self.i, self.m1, self.i, self.m1, self.j, self.m2, self.j, self.m2)
    }
}

fn to_index(i: &BigInt, m: u32) -> Option<BigUint> {
    let idx: BigInt = i - 1;
    if idx.sign() == Sign::Minus {
        return None;
    }
    let idx = idx.to_biguint()?;
    (idx < (BigUint::one() << m)).then_some(idx)
}

/// 1-based index of the ancestor `shift` levels up.
fn ancestor_index(i: &BigInt, shift: u32) -> BigInt {
    let idx: BigInt = i - 1;
    // arithmetic shift floors for negative indices too
    (idx >> shift) + 1
}

fn interval_contains(i: &BigInt, m: u32, k: &BigInt, n: u32) -> bool {
    n >= m && ancestor_index(k, n - m) == *i
}

/// 1-based index `i` with `(i−1)2^{−m} ≤ x < i·2^{−m}`.
fn cell_of(x: &Dyadic, m: u32) -> BigInt {
    let scaled = x.mul_pow2(m as i64);
    let num = scaled.numerator();
    let floor = num >> scaled.den_pow2();
    floor + 1
}

/// Point of the plane with dyadic coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicPoint {
    pub x: Dyadic,
    pub y: Dyadic,
}

impl DyadicPoint {
    pub fn new(x: Dyadic, y: Dyadic) -> Self {
        Self { x, y }
    }

    pub fn from_f64(x: f64, y: f64) -> Result<Self> {
        Ok(Self { x: Dyadic::from_f64(x)?, y: Dyadic::from_f64(y)? })
    }

    pub fn in_unit_square(&self) -> bool {
        let (zero, one) = (Dyadic::zero(), Dyadic::one());
        self.x >= zero && self.x < one && self.y >= zero && self.y < one
    }
}

/// Strictly increasing positive integers `ν_1 < ν_2 < …` (a finite prefix).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct RareSequence {
    terms: Vec<u32>,
}

impl RareSequence {
    pub fn new(terms: Vec<u32>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("rare sequence needs at least one term"));
        }
        if terms[0] == 0 || terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("rare sequence must be strictly increasing positive integers"));
        }
        Ok(Self { terms })
    }

    /// `{1, …, n}`.
    pub fn all(n: u32) -> Self {
        Self { terms: (1..=n).collect() }
    }

    /// `{2, 4, …, 2n}`.
    pub fn evens(n: u32) -> Self {
        Self { terms: (1..=n).map(|k| 2 * k).collect() }
    }

    pub fn terms(&self) -> &[u32] {
        &self.terms
    }

    pub fn contains(&self, e: u32) -> bool {
        self.terms.binary_search(&e).is_ok()
    }

    /// `γ_Δ`: largest consecutive gap over the prefix (0 for a single term).
    pub fn gamma(&self) -> u32 {
        self.terms.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// Smallest term `≥ e`.
    pub fn round_up(&self, e: u32) -> Option<u32> {
        let k = self.terms.partition_point(|&t| t < e);
        self.terms.get(k).copied()
    }

    pub fn last(&self) -> u32 {
        *self.terms.last().expect("nonempty")
    }
}

impl TryFrom<Vec<u32>> for RareSequence {
    type Error = Error;
    fn try_from(terms: Vec<u32>) -> Result<Self> {
        Self::new(terms)
    }
}

impl From<RareSequence> for Vec<u32> {
    fn from(d: RareSequence) -> Self {
        d.terms
    }
}

impl fmt::Display for RareSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(u32::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// A family of dyadic rectangles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "members")]
pub enum RectBasis {
    AllDyadic,
    /// Both exponents in the sequence.
    Rare(RareSequence),
    Squares,
    Explicit(Vec<DyadicRect>),
}

impl RectBasis {
    /// Whether rectangles with exponents `(m1, m2)` can belong to the basis.
    pub fn allows(&self, m1: u32, m2: u32) -> bool {
        match self {
            RectBasis::AllDyadic => true,
            RectBasis::Rare(d) => d.contains(m1) && d.contains(m2),
            RectBasis::Squares => m1 == m2,
            RectBasis::Explicit(list) => list.iter().any(|r| r.m1 == m1 && r.m2 == m2),
        }
    }

    pub fn contains(&self, r: &DyadicRect) -> bool {
        match self {
            RectBasis::Explicit(list) => list.contains(r),
            _ => self.allows(r.m1, r.m2),
        }
    }

    /// Members containing `p` with both exponents at most `s`.
    pub fn containing(&self, p: &DyadicPoint, s: u32) -> Vec<DyadicRect> {
        match self {
            RectBasis::Explicit(list) => {
                list.iter().filter(|r| r.m1 <= s && r.m2 <= s && r.contains_point(p)).cloned().collect()
            }
            _ => (0..=s)
                .flat_map(|m1| (0..=s).map(move |m2| (m1, m2)))
                .filter(|&(m1, m2)| self.allows(m1, m2))
                .map(|(m1, m2)| DyadicRect::containing(p, m1, m2))
                .collect(),
        }
    }
}

impl fmt::Display for RectBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RectBasis::AllDyadic => f.write_str("all_dyadic"),
            RectBasis::Rare(d) => write!(f, "rare{d}"),
            RectBasis::Squares => f.write_str("squares"),
            RectBasis::Explicit(l) => write!(f, "explicit({} rectangles)", l.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let r = DyadicRect::new(3, 5, 2, 3);
        assert_eq!(r.measure(), Dyadic::pow2(-5));
        assert_eq!((r.len_exp(), r.wd_exp()), (2, 3));
        assert!(!r.is_square());
        assert_eq!(r.ancestor(1, 1), DyadicRect::new(2, 2, 1, 1));
        assert!(r.ancestor(0, 2).contains(&r));
        assert!(!r.contains(&r.ancestor(1, 3)));
        let p = DyadicPoint::from_f64(0.6, 0.55).unwrap();
        assert!(r.contains_point(&p));
        assert_eq!(DyadicRect::containing(&p, 2, 3), r);
        assert_eq!(r.corner(), DyadicPoint::from_f64(0.5, 0.5).unwrap());
        assert!(r.in_unit_square());
        assert!(!DyadicRect::new(0, 1, 1, 1).in_unit_square());
        assert_eq!(DyadicRect::new(0, 1, 2, 0).ancestor(1, 0).i, BigInt::from(0));
    }

    #[test]
    fn rare_sequences() {
        let d = RareSequence::new(vec![1, 2, 3, 50]).unwrap();
        assert_eq!(d.gamma(), 47);
        assert_eq!(d.round_up(4), Some(50));
        assert_eq!(d.round_up(51), None);
        assert_eq!(RareSequence::evens(5).gamma(), 2);
        assert!(RareSequence::new(vec![2, 2]).is_err());
        assert!(RareSequence::new(vec![0, 1]).is_err());
        let basis = RectBasis::Rare(RareSequence::evens(4));
        assert!(basis.allows(2, 8) && !basis.allows(3, 4));
        let p = DyadicPoint::from_f64(0.3, 0.7).unwrap();
        assert_eq!(basis.containing(&p, 8).len(), 16);
        assert_eq!(RectBasis::Squares.containing(&p, 8).len(), 9);
    }
}
