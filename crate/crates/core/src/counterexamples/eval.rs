use std::f64::consts::{PI, TAU};

use crate::circle::angle::reduce;
use crate::error::Result;
use crate::kernels::{kernel_integral, Kernel, Radius};
use crate::operators::tail_mass;

/// Absolute error allowed when dropping far pieces.
pub const PRUNE_TOL: f64 = 1e-9;

/// `Σ w·∫_a^b φ_r(y − t) dt` over pieces `(a, b, w)` sorted by `a ∈ [0, 2π)`.
///
/// For nonnegative kernels, pieces farther than `D` from `y` are dropped, with
/// `D` chosen so that `max|w|·(mass of φ_r outside [−D, D]) ≤ tol`; the result
/// is then within `tol` of the full sum. Signed kernels always use the full sum.
pub fn pruned_convolution(k: &dyn Kernel, r: Radius, pieces: &[(f64, f64, f64)], y: f64, tol: f64) -> Result<f64> {
    let piece = |p: &(f64, f64, f64)| -> Result<f64> { Ok(p.2 * kernel_integral(k, r, y - p.1, y - p.0)?) };
    let d = if k.is_nonnegative() { window(k, r, pieces, tol)? } else { PI };
    let max_len = pieces.iter().map(|p| p.1 - p.0).fold(0.0, f64::max);
    if d >= PI || 2.0 * d + max_len >= TAU {
        return pieces.iter().map(piece).sum();
    }
    let y = reduce(y);
    let mut total = 0.0;
    for m in [-1.0, 0.0, 1.0] {
        // pieces whose shifted copy can meet [y − d, y + d]
        let lo = y - d - max_len - m * TAU;
        let hi = y + d - m * TAU;
        let i0 = pieces.partition_point(|p| p.0 < lo);
        let i1 = pieces.partition_point(|p| p.0 <= hi);
        for p in &pieces[i0..i1.max(i0)] {
            total += piece(p)?;
        }
    }
    Ok(total)
}

fn window(k: &dyn Kernel, r: Radius, pieces: &[(f64, f64, f64)], tol: f64) -> Result<f64> {
    let w_max = pieces.iter().map(|p| p.2.abs()).fold(0.0, f64::max);
    if w_max == 0.0 {
        return Ok(0.0);
    }
    let mut d = 64.0 * k.peak_width(r);
    while d < PI {
        if w_max * tail_mass(k, r, d)? <= tol {
            return Ok(d);
        }
        d *= 2.0;
    }
    Ok(PI)
}
