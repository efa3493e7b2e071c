use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::alternating::MAX_TEETH;
use super::eval::{pruned_convolution, PRUNE_TOL};
use super::{check_depth, refuse, sample_points, scan_eps, BuildOptions};
use crate::circle::GridFunction;
use crate::error::{DiagnosticCode, Error, Result};
use crate::kernels::{dyadic_sequence, Kernel, Radius};
use crate::operators::WeightedArcs;
use crate::regions::{pi_plain, sup_norm, ApproachCurve, Trend};

/// Sub-pieces per half-tooth when sampling the sign of a signed kernel.
const SIGN_PIECES: usize = 16;
/// Points used to measure the near-peak set inside `(x_r − δ, x_r + δ)`.
const PEAK_PROBES: usize = 512;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L1DivStage {
    pub k: usize,
    pub r: Radius,
    pub lambda: f64,
    pub sup_norm: f64,
    /// Teeth count `[4π/λ(r)]`.
    pub n: u64,
    /// Location of the peak of `|φ_r|`.
    pub peak: f64,
    /// Tooth half-width `δ_r < λ(r)/4`.
    pub half_width: f64,
    /// `|Δ_r| = 2δ_r·n`.
    pub support: f64,
    /// `λ(r)·∥φ_r∥_∞`.
    pub growth: f64,
    /// `2^{k+3}(1 + k + max_{j<k} 1/|Δ_{r_j}|)`.
    pub growth_required: f64,
    /// `3∥φ_r∥_∞/(8n) ≥ 3λ(r)∥φ_r∥_∞/(32π)`: what the tooth estimate yields.
    pub witness_bound: f64,
    /// `(3/16)·λ(r)·∥φ_r∥_∞` as printed in the source argument; larger than
    /// the estimate supports by a factor 2π, reported for comparison only.
    pub stated_bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L1DivWitness {
    pub stage: usize,
    pub x: f64,
    /// Shift with `|θ| < λ(r_k)` placing `x − θ` on the tooth nearest below `x`.
    pub theta: f64,
    pub admissible: bool,
    /// `Φ_{r_k}(x − θ, f_{r_k})`.
    pub stage_value: f64,
    /// `Φ_{r_k}(x − θ, f)` for the full sum.
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L1DivBuild {
    pub stages: Vec<L1DivStage>,
    /// `f_{r_k}` per stage (unit L¹ norm), before the `2^{−k}` weights.
    pub parts: Vec<WeightedArcs>,
    /// Cell averages of `f = Σ 2^{−k} f_{r_k}`.
    pub grid: GridFunction,
    pub samples: Vec<f64>,
    pub witnesses: Vec<L1DivWitness>,
}

impl L1DivBuild {
    /// `∥f∥₁` from the exact pieces.
    pub fn l1_norm(&self) -> f64 {
        self.parts.iter().enumerate().map(|(i, p)| 2f64.powi(-(i as i32) - 1) * p.l1_norm()).sum()
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn peak_location(k: &dyn Kernel, r: Radius, sup: f64, grid: usize) -> Result<f64> {
    if (k.eval(r, 0.0)?.abs() - sup).abs() <= 1e-12 * sup {
        return Ok(0.0);
    }
    let h = TAU / grid as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for j in 0..grid {
        let t = j as f64 * h;
        let v = k.eval(r, t)?.abs();
        if v > best.1 {
            best = (t, v);
        }
    }
    Ok(best.0)
}

/// Largest `δ = (λ/4)·2^{−m}`, `m ≥ 1`, such that `|φ_r| > sup/2` on more
/// than `3/4` of the probes in `(x_r − δ, x_r + δ)`.
fn peak_half_width(k: &dyn Kernel, r: Radius, peak: f64, sup: f64, lambda: f64) -> Result<f64> {
    let mut d = lambda / 8.0;
    for _ in 0..400 {
        let mut hits = 0;
        for i in 0..PEAK_PROBES {
            let t = peak - d + 2.0 * d * (i as f64 + 0.5) / PEAK_PROBES as f64;
            if k.eval(r, t)?.abs() > 0.5 * sup {
                hits += 1;
            }
        }
        if 4 * hits > 3 * PEAK_PROBES {
            return Ok(d);
        }
        d *= 0.5;
    }
    Err(Error::invalid("kernel peak is narrower than any probed width"))
}

/// Sign pattern of `sgn φ_r(2πk₀/n + x_r − x)` across one tooth, as
/// `(offset_lo, offset_hi, sign)` relative to the tooth centre.
fn sign_pattern(k: &dyn Kernel, r: Radius, peak: f64, half: f64, n: u64) -> Result<Vec<(f64, f64, f64)>> {
    if k.is_nonnegative() {
        return Ok(vec![(-half, half, 1.0)]);
    }
    let cell = TAU / n as f64;
    let mut out: Vec<(f64, f64, f64)> = Vec::new();
    for (lo, shift) in [(-half, cell), (0.0, 0.0)] {
        // left half belongs to the previous cell, so k₀ is one less
        for i in 0..SIGN_PIECES {
            let a = lo + half * i as f64 / SIGN_PIECES as f64;
            let b = lo + half * (i + 1) as f64 / SIGN_PIECES as f64;
            let s = sgn(k.eval(r, peak - shift - 0.5 * (a + b))?);
            match out.last_mut() {
                Some(last) if last.2 == s && last.1 == a => last.1 = b,
                _ => out.push((a, b, s)),
            }
        }
    }
    out.retain(|p| p.2 != 0.0);
    Ok(out)
}

/// `f = Σ_{k≤K} 2^{−k} f_{r_k}` whose averages `Φ_{r_k}(x − θ, f)` blow up
/// inside the regions `|θ| < λ(r_k)` while `∥f∥₁ = Σ 2^{−k}`.
pub fn l1_divergent_function(
    k: &dyn Kernel,
    curve: &ApproachCurve,
    depth: usize,
    grid: usize,
    opts: BuildOptions,
) -> Result<(GridFunction, L1DivBuild)> {
    check_depth(depth)?;
    let plain = pi_plain(k, curve, &dyadic_sequence(1, 20), grid)?;
    if plain.trend != Trend::Increasing {
        return Err(Error::refused(
            refuse(DiagnosticCode::ConditionFailed, "λ(r)·∥φ_r∥_∞ does not diverge for this kernel and curve")
                .with("trend", plain.trend)
                .with("tail_max", plain.tail_max)
                .with("curve", curve.to_string()),
        ));
    }
    let mut stages: Vec<L1DivStage> = Vec::with_capacity(depth);
    let mut parts = Vec::with_capacity(depth);
    for stage in 1..=depth {
        let worst = stages.iter().map(|s| 1.0 / s.support).fold(0.0, f64::max);
        let required = 2f64.powi(stage as i32 + 3) * (1.0 + stage as f64 + worst);
        let start = match stages.last() {
            Some(prev) => (prev.r.eps() * 0.5).min(2f64.powi(-(stage as i32))),
            None => 0.5,
        };
        let r = scan_eps(start, opts.eps_floor, |r| {
            let l = curve.eval(r)?;
            Ok(l < PI && l * sup_norm(k, r, grid)? >= required)
        })?
        .ok_or_else(|| {
            Error::refused(
                refuse(DiagnosticCode::RadiusFloor, "growth condition not reached before the floor on 1 − r")
                    .at_stage(stage)
                    .with("required", required)
                    .with("eps_floor", opts.eps_floor),
            )
        })?;
        let lambda = curve.eval(r)?;
        let sup = sup_norm(k, r, grid)?;
        let n = (4.0 * PI / lambda).floor() as u64;
        if n > MAX_TEETH {
            return Err(Error::refused(
                refuse(DiagnosticCode::Budget, "too many teeth to materialize").at_stage(stage).with("teeth", n),
            ));
        }
        let peak = peak_location(k, r, sup, grid)?;
        let half = peak_half_width(k, r, peak, sup, lambda)?;
        let support = 2.0 * half * n as f64;
        let pattern = sign_pattern(k, r, peak, half, n)?;
        let mut pieces = Vec::with_capacity(n as usize * pattern.len());
        for j in 0..n {
            let c = TAU * j as f64 / n as f64;
            for &(a, b, s) in &pattern {
                pieces.push((c + a, c + b, s / support));
            }
        }
        parts.push(WeightedArcs::new(pieces));
        stages.push(L1DivStage {
            k: stage,
            r,
            lambda,
            sup_norm: sup,
            n,
            peak,
            half_width: half,
            support,
            growth: lambda * sup,
            growth_required: required,
            witness_bound: 3.0 * sup / (8.0 * n as f64),
            stated_bound: 3.0 * lambda * sup / 16.0,
        });
    }

    let mut values = vec![0.0; grid];
    for (i, p) in parts.iter().enumerate() {
        let w = 2f64.powi(-(i as i32) - 1);
        for (v, g) in values.iter_mut().zip(p.to_grid(grid)?.samples()) {
            *v += w * g;
        }
    }
    let f = GridFunction::new(values)?;

    let samples = sample_points(opts.samples, opts.seed);
    let mut witnesses = Vec::with_capacity(samples.len() * depth);
    for st in &stages {
        for &x in &samples {
            let k0 = (x * st.n as f64 / TAU).floor();
            let theta = x - st.peak - TAU * k0 / st.n as f64;
            let y = x - theta;
            let mut value = 0.0;
            let mut stage_value = 0.0;
            for (i, p) in parts.iter().enumerate() {
                let v = pruned_convolution(k, st.r, &p.pieces, y, PRUNE_TOL)?;
                if i + 1 == st.k {
                    stage_value = v;
                }
                value += 2f64.powi(-(i as i32) - 1) * v;
            }
            witnesses.push(L1DivWitness {
                stage: st.k,
                x,
                theta,
                admissible: theta.abs() < st.lambda,
                stage_value,
                value,
            });
        }
    }
    let build = L1DivBuild { stages, parts, grid: f.clone(), samples, witnesses };
    Ok((f, build))
}
