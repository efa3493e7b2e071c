use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::eval::{pruned_convolution, PRUNE_TOL};
use super::{
    check_depth, check_nonnegative, comb_set, pi_infty_estimate, refuse, sample_points, scan_eps, BuildOptions,
    CombPhase, CombSpec,
};
use crate::circle::ArcSet;
use crate::error::{DiagnosticCode, Error, Result};
use crate::kernels::{kernel_integral, Kernel, Radius};
use crate::regions::{sup_norm, ApproachCurve};

/// Below this the Π_∞ estimate is treated as zero: the finite-depth bound
/// `Π_∞/8 − 16δ` cannot be positive for any admissible δ ≤ 1/4 anyway
/// once Π_∞ < 128·δ, and the rows of a vanishing Π_∞ scale like δ.
pub const PI_INFTY_MIN: f64 = 1.0 / 64.0;

/// Largest tooth count materialized as explicit arcs.
pub const MAX_TEETH: u64 = 1 << 24;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlternatingStage {
    pub k: usize,
    pub delta: f64,
    pub r: Radius,
    pub lambda: f64,
    pub sup_norm: f64,
    /// `∫_{−δλ(r)}^{δλ(r)} φ_r`, required above `Π̂_∞/2`.
    pub mass: f64,
    /// Shortest maximal run or gap of the previous set (∞ at stage 1).
    pub min_adjacent: Option<f64>,
    /// `φ_r(|J|/4)` at the shortest adjacent interval, required below `Π̂_∞/(16π)`.
    pub kernel_at_quarter: Option<f64>,
    pub comb: CombSpec,
    pub measure_after: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlternatingWitness {
    pub stage: usize,
    pub x: f64,
    /// Oscillation of `Φ_{r_k}(θ, 1_E)` over sampled `θ ∈ (x − λ(r_k), x + λ(r_k))`.
    pub oscillation: f64,
    /// `Π̂_∞/8 − 16δ_k`.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlternatingBuild {
    pub pi_infty: f64,
    pub stages: Vec<AlternatingStage>,
    pub set: ArcSet,
    pub samples: Vec<f64>,
    pub witnesses: Vec<AlternatingWitness>,
}

fn shortest_adjacent(set: &ArcSet) -> Option<f64> {
    if set.is_empty() {
        return None;
    }
    set.runs().iter().chain(set.gaps().iter()).map(|&(a, b)| b - a).reduce(f64::min)
}

/// Points of `(x − λ, x + λ)` where the oscillation is probed: every multiple
/// of `π/n` inside (tooth and gap centres) plus a uniform sweep.
fn probe_points(x: f64, lambda: f64, n: u64) -> Vec<f64> {
    let step = PI / n as f64;
    let mut pts: Vec<f64> = Vec::new();
    let m_lo = ((x - lambda) / step).floor() as i64;
    let m_hi = ((x + lambda) / step).ceil() as i64;
    for m in m_lo..=m_hi {
        let t = m as f64 * step;
        if t > x - lambda && t < x + lambda {
            pts.push(t);
        }
    }
    const SWEEP: usize = 17;
    for i in 0..SWEEP {
        pts.push(x - lambda + 2.0 * lambda * (i as f64 + 0.5) / SWEEP as f64);
    }
    pts
}

/// `E_K = U_1 △ … △ U_K` with odd-centred combs, whose averages oscillate by
/// about `Π_∞/8` inside every region `λ(r_k, x)`.
pub fn alternating_set(
    k: &dyn Kernel,
    curve: &ApproachCurve,
    depth: usize,
    grid: usize,
    opts: BuildOptions,
) -> Result<AlternatingBuild> {
    check_depth(depth)?;
    let pi_infty = pi_infty_estimate(k, curve)?;
    if !(pi_infty >= PI_INFTY_MIN) {
        return Err(Error::refused(
            refuse(DiagnosticCode::ConditionFailed, "Π_∞ estimate is (numerically) zero for this kernel and curve")
                .with("pi_infty", pi_infty)
                .with("threshold", PI_INFTY_MIN)
                .with("curve", curve.to_string()),
        ));
    }
    let mut stages: Vec<AlternatingStage> = Vec::with_capacity(depth);
    let mut set = ArcSet::empty();
    for stage in 1..=depth {
        // δ_k: a power of two below δ_{k−1} and below Π_∞/(2^{k+5}∥φ_{r_j}∥_∞) for all j < k
        let mut delta: f64 = 0.25;
        if let Some(prev) = stages.last() {
            let sup_prev = stages.iter().map(|s| s.sup_norm).fold(0.0, f64::max);
            let cap = pi_infty / (2f64.powi(stage as i32 + 5) * sup_prev);
            while delta >= prev.delta || delta > cap {
                delta *= 0.5;
            }
        }
        let min_adjacent = shortest_adjacent(&set);
        let start = match stages.last() {
            Some(prev) => (prev.r.eps() * 0.5).min(2f64.powi(-(stage as i32))),
            None => 0.5,
        };
        let (mut mass, mut quarter) = (0.0, None);
        let r = scan_eps(start, opts.eps_floor, |r| {
            let l = curve.eval(r)?;
            if l >= PI {
                return Ok(false);
            }
            let h = (delta * l).min(PI);
            mass = kernel_integral(k, r, -h, h)?;
            if mass <= pi_infty / 2.0 {
                return Ok(false);
            }
            quarter = match min_adjacent {
                Some(j) => Some(k.eval(r, j / 4.0)?),
                None => None,
            };
            Ok(quarter.is_none_or(|q| q < pi_infty / (16.0 * PI)))
        })?
        .ok_or_else(|| {
            Error::refused(
                refuse(DiagnosticCode::RadiusFloor, "mass and decay conditions not reached before the floor on 1 − r")
                    .at_stage(stage)
                    .with("delta", delta)
                    .with("eps_floor", opts.eps_floor)
                    .with("pi_infty", pi_infty),
            )
        })?;
        check_nonnegative(k, r, grid, stage)?;
        let lambda = curve.eval(r)?;
        let n = (PI / lambda).floor() as u64;
        if n > MAX_TEETH {
            return Err(Error::refused(
                refuse(DiagnosticCode::Budget, "comb has too many teeth to materialize")
                    .at_stage(stage)
                    .with("teeth", n)
                    .with("max_teeth", MAX_TEETH),
            ));
        }
        let comb = CombSpec { n, delta, phase: CombPhase::OddCenters };
        set = set.symmetric_difference(&comb_set(comb)?);
        stages.push(AlternatingStage {
            k: stage,
            delta,
            r,
            lambda,
            sup_norm: sup_norm(k, r, grid)?,
            mass,
            min_adjacent,
            kernel_at_quarter: quarter,
            comb,
            measure_after: set.measure(),
        });
    }

    let samples = sample_points(opts.samples, opts.seed);
    let pieces: Vec<(f64, f64, f64)> = set.arcs().iter().map(|&(a, b)| (a, b, 1.0)).collect();
    let mut witnesses = Vec::with_capacity(samples.len() * depth);
    for st in &stages {
        for &x in &samples {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for t in probe_points(x, st.lambda, st.comb.n) {
                let v = pruned_convolution(k, st.r, &pieces, t.rem_euclid(TAU), PRUNE_TOL)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            witnesses.push(AlternatingWitness {
                stage: st.k,
                x,
                oscillation: hi - lo,
                bound: pi_infty / 8.0 - 16.0 * st.delta,
            });
        }
    }
    Ok(AlternatingBuild { pi_infty, stages, set, samples, witnesses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counterexamples::fraction;
    use crate::kernels::Poisson;

    fn sqrt_curve() -> ApproachCurve {
        ApproachCurve::power(1.0, 0.5)
    }

    #[test]
    fn single_stage_is_the_comb() {
        let b = alternating_set(&Poisson, &sqrt_curve(), 1, 1 << 10, BuildOptions::with_samples(4)).unwrap();
        let st = &b.stages[0];
        let u = comb_set(st.comb).unwrap();
        assert_eq!(b.set, u);
        assert_eq!(st.comb.n, (PI / st.lambda).floor() as u64);
        assert!(st.mass > b.pi_infty / 2.0);
    }

    #[test]
    fn two_stages_meet_the_oscillation_bound() {
        let b = alternating_set(&Poisson, &sqrt_curve(), 2, 1 << 10, BuildOptions::with_samples(64)).unwrap();
        let (s1, s2) = (&b.stages[0], &b.stages[1]);
        // symmetric-difference step changes the set by at most |U_2| = 2πδ_2
        let e1 = comb_set(s1.comb).unwrap();
        let moved = e1.symmetric_difference(&b.set).measure();
        assert!(moved <= TAU * s2.delta + 1e-12);
        assert!(s2.delta <= b.pi_infty / (2f64.powi(7) * s1.sup_norm));
        assert!(s2.kernel_at_quarter.unwrap() < b.pi_infty / (16.0 * PI));
        for st in &b.stages {
            let w: Vec<_> = b.witnesses.iter().filter(|w| w.stage == st.k).collect();
            assert!(fraction(w.iter().map(|w| w.oscillation >= w.bound)) >= 0.9);
        }
        // the stage-2 bound is meaningful (positive)
        assert!(b.pi_infty / 8.0 - 16.0 * s2.delta > 0.1);
    }

    #[test]
    fn third_stage_hits_the_floor() {
        let err = alternating_set(&Poisson, &sqrt_curve(), 3, 1 << 10, BuildOptions::with_samples(4)).unwrap_err();
        let d = err.diagnostic().expect("diagnostic");
        assert_eq!(d.code, DiagnosticCode::RadiusFloor);
        assert_eq!(d.stage, Some(3));
    }

    #[test]
    fn nontangential_is_refused() {
        let err = alternating_set(&Poisson, &ApproachCurve::nontangential(1.0), 2, 1 << 10, BuildOptions::default())
            .unwrap_err();
        assert_eq!(err.diagnostic().unwrap().code, DiagnosticCode::ConditionFailed);
    }
}
