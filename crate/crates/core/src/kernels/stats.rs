use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::{kernel_integral, Kernel, Radius};
use crate::circle::grid::GridFunction;
use crate::error::{Error, Result};

fn signed_theta(k: usize, n: usize) -> f64 {
    if 2 * k <= n {
        TAU * k as f64 / n as f64
    } else {
        -TAU * (n - k) as f64 / n as f64
    }
}

fn samples(k: &dyn Kernel, r: Radius, n: usize) -> Result<GridFunction> {
    let v = (0..n).map(|j| k.eval(r, signed_theta(j, n))).collect::<Result<Vec<_>>>()?;
    GridFunction::new(v)
}

fn check_grid(n: usize) -> Result<()> {
    if n >= 4 && n.is_multiple_of(2) {
        Ok(())
    } else {
        Err(Error::invalid(format!("grid size must be even and ≥ 4, got {n}")))
    }
}

/// Suffix-max sweep from ±π inward over `|φ_r|`, mirror points merged.
fn majorant_of(s: &GridFunction) -> GridFunction {
    let n = s.n();
    let v = s.samples();
    let half = n / 2;
    let mut m = vec![0.0; half + 1];
    let mut run = 0.0f64;
    for d in (0..=half).rev() {
        run = run.max(v[d].abs()).max(v[(n - d) % n].abs());
        m[d] = run;
    }
    GridFunction::new((0..n).map(|k| m[k.min(n - k)]).collect()).expect("n ≥ 4")
}

/// `φ*_r(x) = sup_{|x| ≤ |t| ≤ π} |φ_r(t)|` on the grid.
pub fn majorant(k: &dyn Kernel, r: Radius, n: usize) -> Result<GridFunction> {
    check_grid(n)?;
    Ok(majorant_of(&samples(k, r, n)?))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelStats {
    pub r: Radius,
    pub n: usize,
    pub sup_norm: f64,
    pub l1_norm: f64,
    pub samples: GridFunction,
    pub majorant: GridFunction,
    /// `max |x·φ*_r(x)|` over the grid, `x ∈ (−π, π]`.
    pub phi_star: f64,
    pub majorant_l1: f64,
}

impl KernelStats {
    /// Grid `L^q` norm of the kernel samples.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        self.samples.lp_norm(q)
    }
}

pub fn kernel_stats(k: &dyn Kernel, r: Radius, n: usize) -> Result<KernelStats> {
    check_grid(n)?;
    let s = samples(k, r, n)?;
    let maj = majorant_of(&s);
    let grid_sup = s.lp_norm(f64::INFINITY)?;
    let sup_norm = k.sup_norm(r).unwrap_or(grid_sup).max(grid_sup);
    let phi_star = maj
        .samples()
        .iter()
        .enumerate()
        .map(|(j, m)| signed_theta(j, n).abs() * m)
        .fold(0.0, f64::max);
    Ok(KernelStats {
        r,
        n,
        sup_norm,
        l1_norm: s.lp_norm(1.0)?,
        majorant_l1: maj.integrate(),
        samples: s,
        majorant: maj,
        phi_star,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AxiomTolerance {
    /// Allowed `|∫φ_r − 1|` over the tail.
    pub mass: f64,
    /// Bound the majorant L¹ norms must stay under.
    pub majorant_l1: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomsReport {
    pub radii: Vec<Radius>,
    /// `|∫φ_r − 1|` per radius.
    pub mass_deviation: Vec<f64>,
    /// Max of `mass_deviation` over the final third of the sequence.
    pub tail_mass_deviation: f64,
    pub mass_ok: bool,
    pub offsets: Vec<f64>,
    /// `majorant_at_offsets[i][j]`: φ*_{r_i} at `offsets[j]`.
    pub majorant_at_offsets: Vec<Vec<f64>>,
    /// Majorant at each offset is nonincreasing over the tail and strictly smaller at its end.
    pub decay_ok: bool,
    pub majorant_l1: Vec<f64>,
    pub max_majorant_l1: f64,
    pub majorant_l1_ok: bool,
}

impl AxiomsReport {
    pub fn all_ok(&self) -> bool {
        self.mass_ok && self.decay_ok && self.majorant_l1_ok
    }
}

fn tail_start(len: usize) -> usize {
    len - len.div_ceil(3)
}

/// Finite-sequence check of the approximate-identity axioms.
pub fn axioms_check(k: &dyn Kernel, radii: &[Radius], n: usize, tol: AxiomTolerance) -> Result<AxiomsReport> {
    check_grid(n)?;
    if !n.is_multiple_of(16) {
        return Err(Error::invalid("axiom check needs N divisible by 16 to hit π/8 exactly"));
    }
    if radii.is_empty() || radii.windows(2).any(|w| w[1].eps() >= w[0].eps()) {
        return Err(Error::invalid("radius sequence must be nonempty and increasing toward 1"));
    }
    let offsets = vec![PI / 8.0, PI / 4.0, PI / 2.0];
    let idx = [n / 16, n / 8, n / 4];
    let mut mass_deviation = Vec::new();
    let mut at = Vec::new();
    let mut l1 = Vec::new();
    for &r in radii {
        mass_deviation.push((kernel_integral(k, r, -PI, PI)? - 1.0).abs());
        let maj = majorant(k, r, n)?;
        at.push(idx.iter().map(|&i| maj.samples()[i]).collect::<Vec<_>>());
        l1.push(maj.integrate());
    }
    let t0 = tail_start(radii.len());
    let tail_mass_deviation = mass_deviation[t0..].iter().copied().fold(0.0, f64::max);
    let decay_ok = (0..offsets.len()).all(|j| {
        let col: Vec<f64> = at[t0..].iter().map(|row| row[j]).collect();
        let monotone = col.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        monotone && col.len() >= 2 && col[col.len() - 1] < col[0] * (1.0 - 1e-9)
    });
    let max_majorant_l1 = l1.iter().copied().fold(0.0, f64::max);
    Ok(AxiomsReport {
        radii: radii.to_vec(),
        tail_mass_deviation,
        mass_ok: tail_mass_deviation <= tol.mass,
        mass_deviation,
        offsets,
        majorant_at_offsets: at,
        decay_ok,
        majorant_l1: l1,
        max_majorant_l1,
        majorant_l1_ok: max_majorant_l1 <= tol.majorant_l1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub nonnegative: bool,
    /// Nonincreasing on `[0, π]` and nondecreasing on `[−π, 0]`.
    pub monotone: bool,
}

impl RegularityReport {
    pub fn regular(self) -> bool {
        self.nonnegative && self.monotone
    }
}

pub fn regularity_check(k: &dyn Kernel, r: Radius, n: usize) -> Result<RegularityReport> {
    check_grid(n)?;
    let s = samples(k, r, n)?;
    let v = s.samples();
    let half = n / 2;
    let nonnegative = v.iter().all(|&x| x >= 0.0);
    let right = (0..half).all(|d| v[d + 1] <= v[d]);
    // left side: θ = −d·h is index n − d (index 0 for d = 0)
    let left = (0..half).all(|d| v[(n - d - 1) % n] <= v[(n - d) % n]);
    Ok(RegularityReport { nonnegative, monotone: right && left })
}
