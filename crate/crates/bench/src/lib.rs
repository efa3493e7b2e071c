//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use tangentscope_core::dyadic::{sample_rects, DyadicRect, RareSequence};
use tangentscope_core::{ArcSet, GridFunction};

/// Indicator of `[0, π)` sampled on `n` cells.
pub fn step(n: usize) -> GridFunction {
    GridFunction::indicator(&ArcSet::arc(0.0, PI), n).expect("n > 0")
}

/// A smooth signal with a few harmonics, signed.
pub fn wave(n: usize) -> GridFunction {
    GridFunction::from_fn(n, |t| (3.0 * t).sin() + 0.25 * (17.0 * t).cos()).expect("n > 0")
}

/// Seeded rectangles whose exponents round up into `delta`.
pub fn cover_rects(delta: &RareSequence, count: usize) -> Vec<DyadicRect> {
    sample_rects(0, delta.last(), count, 7)
}
