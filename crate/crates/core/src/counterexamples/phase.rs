//! Phases `n·x mod 2π` for tooth counts far beyond 2^53, where the naive
//! product loses every significant digit.

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

/// `1/(2π)` as a double-double.
const INV_TAU_HI: f64 = 0.15915494309189535;
const INV_TAU_LO: f64 = -9.839338337591243e-18;

/// The angle `2π·num/den`, kept exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalAngle {
    pub num: u128,
    pub den: u128,
}

impl RationalAngle {
    pub fn new(num: u128, den: u128) -> Self {
        assert!(den > 0, "denominator must be positive");
        Self { num: num % den, den }
    }

    /// Approximate value in `[0, 2π)`.
    pub fn value(self) -> f64 {
        std::f64::consts::TAU * ratio(self.num, self.den)
    }

    /// `(n·θ mod 2π)/2π` in `[0, 1)`, exact up to the final rounding.
    pub fn turns_times(self, n: u128) -> f64 {
        ratio(mul_mod(n % self.den, self.num, self.den), self.den)
    }
}

fn ratio(a: u128, b: u128) -> f64 {
    if b < (1 << 53) {
        a as f64 / b as f64
    } else {
        // keep 64 significant bits of the quotient
        let shift = (128 - b.leading_zeros()).saturating_sub(64);
        let (a2, b2) = (a >> shift, b >> shift);
        if b2 == 0 {
            0.0
        } else {
            (a2 as f64 / b2 as f64).min(1.0 - f64::EPSILON / 2.0)
        }
    }
}

fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    match a.checked_mul(b) {
        Some(p) => p % m,
        None => (BigUint::from(a) * BigUint::from(b) % BigUint::from(m)).to_u128().expect("below modulus"),
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

fn fract(x: f64) -> f64 {
    x - x.floor()
}

/// `(n·x mod 2π)/2π` in `[0, 1)` for an exact double `x`; the error is about
/// `2^-106·n` turns, so it stays below 1e-12 for every `n < 2^64`.
pub fn phase_fraction(n: u128, x: f64) -> f64 {
    // t = x/2π as a double-double
    let (p, e) = two_prod(x, INV_TAU_HI);
    let (t_hi, t_lo) = two_sum(p, e + x * INV_TAU_LO);
    let mut acc = 0.0;
    let mut rest = n;
    let mut scale = 1.0f64;
    // peel n into 26-bit limbs so each limb·t_hi product splits exactly
    while rest > 0 {
        let limb = (rest & ((1 << 26) - 1)) as f64;
        rest >>= 26;
        if limb != 0.0 {
            let m = limb * scale; // exact power-of-two multiple
            let (ph, pl) = two_prod(m, t_hi);
            let (qh, ql) = two_prod(m, t_lo);
            // fractional parts of doubles are exact; only the final sums round
            acc += fract(ph) + fract(pl) + fract(qh) + fract(ql);
            acc = fract(acc);
        }
        scale *= 67108864.0; // 2^26
    }
    if acc >= 1.0 {
        0.0
    } else {
        acc
    }
}
