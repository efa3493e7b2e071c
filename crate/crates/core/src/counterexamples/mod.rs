//! Finite-depth divergence constructions: comb sets, the Littlewood set,
//! the alternating set, the L¹-divergent function and Blaschke products.
//!
//! The existential sequences of the underlying proofs are replaced by fixed,
//! deterministic schedules: δ's are powers of two, radii are found by halving
//! `1 − r`, and every search stops at a floor on `1 − r`.

mod alternating;
mod blaschke;
mod comb;
mod eval;
mod l1div;
mod littlewood;
mod phase;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Diagnostic, DiagnosticCode, Error, Result};
use crate::kernels::{dyadic_sequence, Kernel, Radius};
use crate::regions::{default_deltas, pi_infty, pi_star, ApproachCurve};

pub use alternating::{alternating_set, AlternatingBuild, AlternatingStage, AlternatingWitness};
pub use blaschke::{
    blaschke_bounds_check, blaschke_product, factor_sups, finite_blaschke, BlaschkeBuild, BlaschkeSpec, BlaschkeStage,
    BlaschkeWitness, BoundsCheck,
};
pub use comb::{comb_set, CombPhase, CombSpec};
pub use eval::{pruned_convolution, PRUNE_TOL};
pub use l1div::{l1_divergent_function, L1DivBuild, L1DivStage, L1DivWitness};
pub use littlewood::{littlewood_set, LittlewoodBuild, LittlewoodStage, LittlewoodWitness};
pub use phase::{phase_fraction, RationalAngle};

/// Floor on `1 − r` for the searches that test a Π-type condition; reaching
/// it means the condition is (numerically) unattainable.
pub const EPS_FLOOR: f64 = 9.094947017729282e-13; // 2^-40

/// Floor for searches driven purely by structural requirements (tooth
/// counts, moduli of continuity) once the Π-condition is already met.
pub const STRUCTURAL_EPS_FLOOR: f64 = 7.52316384526264e-37; // 2^-120

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildOptions {
    /// Number of witness sample points `x`.
    pub samples: usize,
    /// Seed for the sample points.
    pub seed: u64,
    /// Floor on `1 − r` for condition-driven scans.
    pub eps_floor: f64,
}

impl BuildOptions {
    pub fn with_samples(samples: usize) -> Self {
        Self { samples, ..Self::default() }
    }
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { samples: 128, seed: 0x5eed, eps_floor: EPS_FLOOR }
    }
}

/// Seeded sample points in `[0, 2π)`, sorted.
pub fn sample_points(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
    xs.sort_by(f64::total_cmp);
    xs
}

/// Halve `1 − r` starting from `start` until `accept` holds; `None` when the
/// floor is passed first.
fn scan_eps(start: f64, floor: f64, mut accept: impl FnMut(Radius) -> Result<bool>) -> Result<Option<Radius>> {
    let mut e = start;
    while e >= floor {
        let r = Radius::from_eps(e)?;
        if accept(r)? {
            return Ok(Some(r));
        }
        e *= 0.5;
    }
    Ok(None)
}

/// Deep radius sequence used for the Π-type preconditions.
fn precondition_radii() -> Vec<Radius> {
    dyadic_sequence(1, 60)
}

pub(crate) fn pi_star_estimate(k: &dyn Kernel, curve: &ApproachCurve) -> Result<f64> {
    Ok(pi_star(k, curve, &default_deltas(10), &precondition_radii())?.estimate)
}

pub(crate) fn pi_infty_estimate(k: &dyn Kernel, curve: &ApproachCurve) -> Result<f64> {
    Ok(pi_infty(k, curve, &default_deltas(10), &precondition_radii())?.estimate)
}

fn refuse(code: DiagnosticCode, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(code, msg)
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 {
        return Err(Error::invalid("depth K must be ≥ 1"));
    }
    Ok(())
}

/// The kernel must be nonnegative on the `n`-grid at `r`.
fn check_nonnegative(k: &dyn Kernel, r: Radius, n: usize, stage: usize) -> Result<()> {
    if k.is_nonnegative() {
        return Ok(());
    }
    let h = std::f64::consts::TAU / n as f64;
    for j in 0..n {
        let v = k.eval(r, j as f64 * h)?;
        if v < 0.0 {
            return Err(Error::refused(
                refuse(DiagnosticCode::ConditionFailed, "kernel takes negative values on the grid")
                    .at_stage(stage)
                    .with("r", r.r())
                    .with("theta", j as f64 * h)
                    .with("value", v),
            ));
        }
    }
    Ok(())
}

/// Fraction of entries satisfying the predicate.
pub fn fraction(values: impl IntoIterator<Item = bool>) -> f64 {
    let (mut hit, mut all) = (0usize, 0usize);
    for v in values {
        all += 1;
        hit += v as usize;
    }
    if all == 0 {
        0.0
    } else {
        hit as f64 / all as f64
    }
}
