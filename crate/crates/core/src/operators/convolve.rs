use serde::{Deserialize, Serialize};

use crate::circle::grid::GridFunction;
use crate::error::Result;
use crate::kernels::{Kernel, Radius};

/// Hard cap on the kernel oversampling factor.
pub const MAX_OVERSAMPLING: usize = 1 << 12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Convolution {
    pub values: GridFunction,
    /// Kernel oversampling factor per grid cell (1 = plain grid sum).
    pub oversampling: usize,
    pub warnings: Vec<String>,
}

/// Oversampling needed so the kernel peak spans ≥ 8 fine steps once it is
/// narrower than 4 grid steps.
pub fn oversampling_factor(k: &dyn Kernel, r: Radius, n: usize) -> (usize, Option<String>) {
    let h = std::f64::consts::TAU / n as f64;
    let w = k.peak_width(r);
    if w >= 4.0 * h {
        return (1, None);
    }
    let want = (8.0 * h / w).ceil();
    if want > MAX_OVERSAMPLING as f64 {
        let msg = format!(
            "kernel peak width {w:e} needs oversampling {want:e} on N = {n}; capped at {MAX_OVERSAMPLING}"
        );
        return (MAX_OVERSAMPLING, Some(msg));
    }
    ((want as usize).next_power_of_two(), None)
}

/// Circular convolution `(2π/N) Σ_j φ_r(x_i − t_j) f(t_j)`, with the kernel
/// averaged over M sub-points per cell when its peak is sub-cell.
pub fn convolve(k: &dyn Kernel, r: Radius, f: &GridFunction) -> Result<Convolution> {
    let n = f.n();
    let h = f.step();
    let (m, warn) = oversampling_factor(k, r, n);
    let mut w = vec![0.0; n];
    for (d, wd) in w.iter_mut().enumerate() {
        let centre = if 2 * d <= n { d as f64 * h } else { (d as f64 - n as f64) * h };
        if m == 1 {
            *wd = h * k.eval(r, centre)?;
        } else {
            let fine = h / m as f64;
            let mut s = 0.0;
            for j in 0..m {
                s += k.eval(r, centre - 0.5 * h + (j as f64 + 0.5) * fine)?;
            }
            *wd = fine * s;
        }
    }
    let v = f.samples();
    let out: Vec<f64> = (0..n)
        .map(|i| {
            let mut s = 0.0;
            // j ≤ i: weight index i − j; j > i: i − j + n
            for j in 0..=i {
                s += w[i - j] * v[j];
            }
            for j in i + 1..n {
                s += w[i + n - j] * v[j];
            }
            s
        })
        .collect();
    Ok(Convolution { values: GridFunction::new(out)?, oversampling: m, warnings: warn.into_iter().collect() })
}
