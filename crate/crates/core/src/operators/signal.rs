use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::circle::angle::{distance, reduce};
use crate::circle::arcs::ArcSet;
use crate::circle::grid::GridFunction;
use crate::circle::measure::SignedMeasure;
use crate::circle::quadrature::QuadOptions;
use crate::error::Result;
use crate::kernels::{kernel_integral, kernel_quadrature, Kernel, Radius};

/// Something whose convolution `Φ_r(y, ·)` can be evaluated at any point `y`.
pub trait CircleSignal: Sync {
    /// `Φ_r(y, f) = ∫_𝕋 φ_r(y − t) f(t) dt`.
    fn convolve_at(&self, k: &dyn Kernel, r: Radius, y: f64) -> Result<f64>;

    /// Pointwise value (step reading for sampled data).
    fn value_at(&self, x: f64) -> f64;
}

/// `∫_{t∈[a,b]} φ_r(y − t) dt` for an interval of the signal's domain.
fn mass_against(k: &dyn Kernel, r: Radius, y: f64, a: f64, b: f64) -> Result<f64> {
    kernel_integral(k, r, y - b, y - a)
}

/// Kernel mass over one grid cell when no closed form exists: adaptive
/// quadrature near the peak, two-point midpoint sampling elsewhere.
fn cell_mass_numeric(k: &dyn Kernel, r: Radius, lo: f64, hi: f64) -> Result<f64> {
    let w = k.peak_width(r);
    let mid = 0.5 * (lo + hi);
    let near = distance(mid, 0.0) <= 32.0 * w + (hi - lo);
    if near {
        kernel_quadrature(k, r, lo, hi, QuadOptions::tol(1e-14, 1e-10))
    } else {
        let q = 0.25 * (hi - lo);
        Ok(0.5 * (hi - lo) * (k.eval(r, mid - q)? + k.eval(r, mid + q)?))
    }
}

impl CircleSignal for GridFunction {
    fn convolve_at(&self, k: &dyn Kernel, r: Radius, y: f64) -> Result<f64> {
        let n = self.n();
        let h = self.step();
        let v = self.samples();
        let closed = k.partial_integral(r, 0.0, 0.0).is_some();
        let mut total = 0.0;
        if closed {
            // group equal neighbouring samples into runs and integrate each run once
            let mut j = 0;
            while j < n {
                let mut e = j + 1;
                while e < n && v[e] == v[j] {
                    e += 1;
                }
                if v[j] != 0.0 {
                    let a = (j as f64 - 0.5) * h;
                    let b = (e as f64 - 0.5) * h;
                    total += v[j] * mass_against(k, r, y, a, b)?;
                }
                j = e;
            }
        } else {
            for (j, &fj) in v.iter().enumerate() {
                if fj != 0.0 {
                    let c = y - j as f64 * h;
                    total += fj * cell_mass_numeric(k, r, c - 0.5 * h, c + 0.5 * h)?;
                }
            }
        }
        Ok(total)
    }

    fn value_at(&self, x: f64) -> f64 {
        GridFunction::value_at(self, x)
    }
}

impl CircleSignal for ArcSet {
    fn convolve_at(&self, k: &dyn Kernel, r: Radius, y: f64) -> Result<f64> {
        let mut total = 0.0;
        for &(a, b) in self.arcs() {
            total += mass_against(k, r, y, a, b)?;
        }
        Ok(total)
    }

    fn value_at(&self, x: f64) -> f64 {
        if self.contains(x) {
            1.0
        } else {
            0.0
        }
    }
}

/// `Σ wᵢ·1_{[aᵢ, bᵢ)}` for disjoint arcs; the natural home of step functions
/// whose pieces are far finer than any grid.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedArcs {
    /// `(start, end, weight)` with `start < end ≤ start + 2π`, sorted by start.
    pub pieces: Vec<(f64, f64, f64)>,
}

impl WeightedArcs {
    pub fn new(mut pieces: Vec<(f64, f64, f64)>) -> Self {
        pieces.retain(|p| p.1 > p.0 && p.2 != 0.0);
        for p in &mut pieces {
            let s = reduce(p.0);
            p.1 = s + (p.1 - p.0);
            p.0 = s;
        }
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { pieces }
    }

    pub fn l1_norm(&self) -> f64 {
        self.pieces.iter().map(|p| (p.1 - p.0) * p.2.abs()).sum()
    }

    /// Cell averages on an `N`-grid (centred cells); preserves integrals.
    pub fn to_grid(&self, n: usize) -> Result<GridFunction> {
        let h = TAU / n as f64;
        let mut v = vec![0.0; n];
        for &(a, b, w) in &self.pieces {
            let first = (a / h + 0.5).floor() as i64;
            let last = (b / h + 0.5).floor() as i64;
            for j in first..=last {
                let lo = ((j as f64 - 0.5) * h).max(a);
                let hi = ((j as f64 + 0.5) * h).min(b);
                if hi > lo {
                    v[j.rem_euclid(n as i64) as usize] += w * (hi - lo) / h;
                }
            }
        }
        GridFunction::new(v)
    }
}

impl CircleSignal for WeightedArcs {
    fn convolve_at(&self, k: &dyn Kernel, r: Radius, y: f64) -> Result<f64> {
        let mut total = 0.0;
        for &(a, b, w) in &self.pieces {
            total += w * mass_against(k, r, y, a, b)?;
        }
        Ok(total)
    }

    fn value_at(&self, x: f64) -> f64 {
        let x = reduce(x);
        self.pieces
            .iter()
            .find(|p| (p.0 <= x && x < p.1) || (p.0 <= x + TAU && x + TAU < p.1))
            .map_or(0.0, |p| p.2)
    }
}

/// `Φ_r(x, dμ) = Σ mass·φ_r(x − pos) + Φ_r(x, density)`.
pub fn convolve_measure_point(k: &dyn Kernel, r: Radius, mu: &SignedMeasure, x: f64) -> Result<f64> {
    let mut total = 0.0;
    for (pos, m) in &mu.atoms {
        total += m * k.eval(r, x - pos.value())?;
    }
    if let Some(d) = &mu.density {
        total += d.convolve_at(k, r, x)?;
    }
    Ok(total)
}

/// Mass of a nonnegative kernel outside `[−d, d]`; used to bound pruned tails.
pub fn tail_mass(k: &dyn Kernel, r: Radius, d: f64) -> Result<f64> {
    if d >= PI {
        return Ok(0.0);
    }
    Ok(1.0 - kernel_integral(k, r, -d, d)?)
}
