use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::eval::{pruned_convolution, PRUNE_TOL};
use super::{
    check_depth, check_nonnegative, pi_star_estimate, refuse, sample_points, scan_eps, BuildOptions, CombPhase,
    CombSpec, STRUCTURAL_EPS_FLOOR,
};
use crate::circle::ArcSet;
use crate::counterexamples::comb_set;
use crate::error::{DiagnosticCode, Error, Result};
use crate::kernels::{kernel_integral, Kernel, Radius};
use crate::regions::{sup_norm, ApproachCurve};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LittlewoodStage {
    pub k: usize,
    pub delta: f64,
    pub u: Radius,
    pub v: Radius,
    pub lambda_u: f64,
    pub lambda_v: f64,
    /// `∫_{−δλ(u)}^{δλ(u)} φ_u`.
    pub mass: f64,
    /// Required lower bound `Π̂*·(1 − 2^{−k})`.
    pub mass_target: f64,
    pub comb: CombSpec,
    /// `∥φ_{v}∥_∞ · 10π Σ_{j>k} δ_j`, the sup-norm surrogate for the
    /// absolute-continuity requirement (which wants it below `2^{−k}`).
    pub continuity_surrogate: f64,
    pub continuity_surrogate_holds: bool,
    pub measure_after: f64,
}

/// One sample point at one stage: `λ(r′) = 2πj₀/n_k − x`, so that
/// `x + λ(r′)` is the centre of a comb tooth.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LittlewoodWitness {
    pub stage: usize,
    pub x: f64,
    pub j0: u64,
    pub r_prime: Radius,
    /// The Blaschke-style second radius does not exist for this comb spacing;
    /// kept for a uniform witness layout.
    pub r_second: Option<Radius>,
    /// `Φ_{r′}(x + λ(r′), 1_E)`.
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LittlewoodBuild {
    pub pi_star: f64,
    pub stages: Vec<LittlewoodStage>,
    pub set: ArcSet,
    pub samples: Vec<f64>,
    pub witnesses: Vec<LittlewoodWitness>,
}

impl LittlewoodBuild {
    /// Per sample: `max − min` of the witness values across stages.
    pub fn oscillations(&self) -> Vec<f64> {
        self.samples
            .iter()
            .map(|&x| {
                let vals = self.witnesses.iter().filter(|w| w.x == x).map(|w| w.value);
                let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                if hi >= lo {
                    hi - lo
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// δ_k = 2^{−k−6}.
fn stage_delta(k: usize) -> f64 {
    2f64.powi(-(k as i32) - 6)
}

/// Index `j₀` with `2πj₀/n − x ∈ [2π/n, 4π/n]`, and that offset.
pub(crate) fn tooth_ahead(x: f64, n: u64) -> (u64, f64) {
    let nf = n as f64;
    let mut j0 = (x * nf / TAU).floor() as i64 + 2;
    let offset = |j: i64| TAU * j as f64 / nf - x;
    while offset(j0) > 4.0 * PI / nf {
        j0 -= 1;
    }
    while offset(j0) < 2.0 * PI / nf {
        j0 += 1;
    }
    let off = offset(j0);
    (j0.rem_euclid(n as i64) as u64, off)
}

/// Set `E` whose `λ`-curve averages oscillate by about `2Π* − 1`.
pub fn littlewood_set(
    k: &dyn Kernel,
    curve: &ApproachCurve,
    depth: usize,
    grid: usize,
    opts: BuildOptions,
) -> Result<LittlewoodBuild> {
    check_depth(depth)?;
    let pi_star = pi_star_estimate(k, curve)?;
    if !(pi_star > 0.5) {
        return Err(Error::refused(
            refuse(DiagnosticCode::ConditionFailed, "Π* estimate does not exceed 1/2 for this kernel and curve")
                .with("pi_star", pi_star)
                .with("curve", curve.to_string()),
        ));
    }
    let mut stages: Vec<LittlewoodStage> = Vec::with_capacity(depth);
    let mut set = ArcSet::empty();
    for stage in 1..=depth {
        let delta = stage_delta(stage);
        let target = pi_star * (1.0 - 2f64.powi(-(stage as i32)));
        let start = match stages.last() {
            Some(prev) => (prev.v.eps() * 0.5).min(2f64.powi(-(stage as i32))),
            None => 0.5,
        };
        let mut mass = 0.0;
        let u = scan_eps(start, opts.eps_floor, |r| {
            let l = curve.eval(r)?;
            if l >= PI {
                return Ok(false);
            }
            let h = (delta * l).min(PI);
            mass = kernel_integral(k, r, -h, h)?;
            Ok(mass > target)
        })?
        .ok_or_else(|| {
            Error::refused(
                refuse(DiagnosticCode::RadiusFloor, "mass condition not reached before the floor on 1 − r")
                    .at_stage(stage)
                    .with("target", target)
                    .with("eps_floor", opts.eps_floor)
                    .with("pi_star", pi_star),
            )
        })?;
        check_nonnegative(k, u, grid, stage)?;
        let lambda_u = curve.eval(u)?;
        let v = scan_eps(u.eps() * 0.5, STRUCTURAL_EPS_FLOOR, |r| Ok(3.0 * curve.eval(r)? <= lambda_u))?.ok_or_else(
            || Error::refused(refuse(DiagnosticCode::RadiusFloor, "no v with 3λ(v) ≤ λ(u)").at_stage(stage)),
        )?;
        let lambda_v = curve.eval(v)?;
        let n = (5.0 * PI / lambda_u).floor() as u64;
        let comb = CombSpec { n, delta: 5.0 * delta, phase: CombPhase::EvenCenters };
        let teeth = comb_set(comb)?;
        set = if stage == 1 {
            teeth
        } else if stage % 2 == 0 {
            set.difference(&teeth)
        } else {
            set.union(&teeth)
        };
        let tail_deltas = 2f64.powi(-(stage as i32) - 6);
        let continuity_surrogate = sup_norm(k, v, grid)? * 10.0 * PI * tail_deltas;
        stages.push(LittlewoodStage {
            k: stage,
            delta,
            u,
            v,
            lambda_u,
            lambda_v,
            mass,
            mass_target: target,
            comb,
            continuity_surrogate,
            continuity_surrogate_holds: continuity_surrogate < 2f64.powi(-(stage as i32)),
            measure_after: set.measure(),
        });
    }

    let samples = sample_points(opts.samples, opts.seed);
    let pieces: Vec<(f64, f64, f64)> = set.arcs().iter().map(|&(a, b)| (a, b, 1.0)).collect();
    let mut witnesses = Vec::with_capacity(samples.len() * depth);
    for st in &stages {
        for &x in &samples {
            let (j0, target) = tooth_ahead(x, st.comb.n);
            let e = curve.solve_eps(target, st.v.eps(), st.u.eps())?;
            let r_prime = Radius::from_eps(e)?;
            let y = TAU * j0 as f64 / st.comb.n as f64;
            let value = pruned_convolution(k, r_prime, &pieces, y, PRUNE_TOL)?;
            witnesses.push(LittlewoodWitness { stage: st.k, x, j0, r_prime, r_second: None, value });
        }
    }
    Ok(LittlewoodBuild { pi_star, stages, set, samples, witnesses })
}
