use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// A point of the circle ℝ/2πℤ, stored reduced to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub fn new(x: f64) -> Self {
        Angle(reduce(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Representative in `(−π, π]`.
    pub fn signed(self) -> f64 {
        if self.0 > PI {
            self.0 - TAU
        } else {
            self.0
        }
    }

    pub fn distance(self, other: Angle) -> f64 {
        distance(self.0, other.0)
    }
}

impl From<f64> for Angle {
    fn from(x: f64) -> Self {
        Angle::new(x)
    }
}

/// Reduce to `[0, 2π)`. `rem_euclid` can round up to exactly 2π for tiny
/// negative inputs, which we fold back to 0.
pub fn reduce(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Representative of `x` in `[−π, π)`.
pub fn reduce_signed(x: f64) -> f64 {
    // already reduced: return as is, so tiny angles keep their precision
    if (-PI..PI).contains(&x) {
        return x;
    }
    let r = reduce(x + PI) - PI;
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

/// Arc distance on the circle, in `[0, π]`.
pub fn distance(x: f64, y: f64) -> f64 {
    let d = reduce(x - y);
    d.min(TAU - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tiny_signed_angles_survive() {
        for x in [-1e-17, 3e-300, -2.5e-22] {
            assert_eq!(reduce_signed(x), x);
        }
        assert!((reduce_signed(TAU - 1.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn signed_representative() {
        assert_eq!(Angle::new(3.0 * PI / 2.0).signed(), -PI / 2.0);
        assert_eq!(Angle::new(PI).signed(), PI);
        assert_eq!(Angle::new(-1e-300).value(), 0.0);
    }

    proptest! {
        #[test]
        fn reduction_is_idempotent(x in -1e6f64..1e6) {
            let r = reduce(x);
            prop_assert!((0.0..TAU).contains(&r));
            prop_assert_eq!(reduce(r), r);
        }

        #[test]
        fn distance_is_symmetric_and_bounded(x in -50.0f64..50.0, y in -50.0f64..50.0) {
            let d = distance(x, y);
            prop_assert!((0.0..=PI).contains(&d));
            prop_assert!((d - distance(y, x)).abs() < 1e-12);
        }
    }
}
