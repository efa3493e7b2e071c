use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::littlewood::tooth_ahead;
use super::phase::{phase_fraction, RationalAngle};
use super::{check_depth, check_nonnegative, pi_star_estimate, refuse, sample_points, scan_eps, BuildOptions};
use super::STRUCTURAL_EPS_FLOOR;
use crate::circle::quadrature::{integrate_with_breaks, QuadOptions};
use crate::circle::ComplexGridFunction;
use crate::error::{DiagnosticCode, Error, Result};
use crate::kernels::{kernel_integral, Kernel, Radius};
use crate::regions::ApproachCurve;

/// Required Π* estimate (the construction needs Π* = 1).
pub const PI_STAR_MIN: f64 = 0.95;

/// `ρ^n = e^{−√δ}` for the factor `b(n, δ, ·)`.
fn rho_pow(delta: f64) -> f64 {
    (-delta.sqrt()).exp()
}

/// `(w − q)/(q w − 1)`.
fn factor_at(w: Complex64, q: f64) -> Complex64 {
    (w - q) / (w * q - 1.0)
}

fn unit(turns: f64) -> Complex64 {
    Complex64::from_polar(1.0, TAU * turns)
}

fn check_factor(n: u128, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("Blaschke factor needs n ≥ 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("Blaschke factor needs δ ∈ (0, 1), got {delta}")));
    }
    Ok(())
}

/// `b(n, δ, e^{ix}) = (z^n − ρ^n)/(ρ^n z^n − 1)`, `ρ = e^{−√δ/n}`.
pub fn finite_blaschke(n: u64, delta: f64, x: f64) -> Result<Complex64> {
    check_factor(n as u128, delta)?;
    Ok(factor_at(unit(phase_fraction(n as u128, x)), rho_pow(delta)))
}

/// Product of factors `b(n_k, δ_k, ·)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeSpec {
    pub factors: Vec<(u128, f64)>,
}

impl BlaschkeSpec {
    pub fn new(factors: Vec<(u128, f64)>) -> Result<Self> {
        for &(n, d) in &factors {
            check_factor(n, d)?;
        }
        Ok(Self { factors })
    }

    fn prefix(&self, len: usize) -> &[(u128, f64)] {
        &self.factors[..len.min(self.factors.len())]
    }

    /// Boundary value at the exact angle `θ`, using the first `len` factors.
    pub fn boundary_at(&self, theta: RationalAngle, len: usize) -> Complex64 {
        self.prefix(len)
            .iter()
            .map(|&(n, d)| factor_at(unit(theta.turns_times(n)), rho_pow(d)))
            .product()
    }

    /// Boundary value at a double angle.
    pub fn boundary(&self, x: f64) -> Complex64 {
        self.factors.iter().map(|&(n, d)| factor_at(unit(phase_fraction(n, x)), rho_pow(d))).product()
    }

    /// `B(r e^{iθ})` inside the disc.
    pub fn interior_at(&self, r: Radius, theta: RationalAngle) -> Complex64 {
        let log_r = (-r.eps()).ln_1p();
        self.factors
            .iter()
            .map(|&(n, d)| {
                let w = unit(theta.turns_times(n)) * (n as f64 * log_r).exp();
                factor_at(w, rho_pow(d))
            })
            .product()
    }

    /// `sup |B'|` bound `Σ n(1+ρ^n)/(1−ρ^n)` over the first `len` factors
    /// (each term is the exact sup of `|b'|` on the circle).
    pub fn lipschitz(&self, len: usize) -> f64 {
        self.prefix(len)
            .iter()
            .map(|&(n, d)| {
                let q = rho_pow(d);
                n as f64 * (1.0 + q) / -(-d.sqrt()).exp_m1()
            })
            .sum()
    }
}

/// Exact suprema, over the phase `α = n x mod 2π`, of `|b + 1|` on
/// `U(n, comb_width)` (i.e. `|α| < π·comb_width`) and of `|b − 1|` off
/// `U(n, δ^{1/4})`; neither depends on `n`.
pub fn factor_sups(delta: f64, comb_width: f64) -> (f64, f64) {
    let q = rho_pow(delta);
    let den = |a: f64| ((1.0 - q).powi(2) + 4.0 * q * (a / 2.0).sin().powi(2)).sqrt();
    let a_in = PI * comb_width.min(1.0);
    let plus = 2.0 * (a_in / 2.0).sin() * (1.0 + q) / den(a_in);
    let outer = delta.powf(0.25);
    let minus = if outer >= 1.0 {
        0.0
    } else {
        let a_out = PI * outer;
        2.0 * (a_out / 2.0).cos() * (1.0 - q) / den(a_out)
    };
    (plus, minus)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsCheck {
    /// Grid max of `|b + 1|` on `U(n, δ)`.
    pub max_on_comb: f64,
    /// Grid max of `|b − 1|` off `U(n, δ^{1/4})`.
    pub max_off_comb: f64,
    /// The corresponding exact suprema.
    pub sup_on_comb: f64,
    pub sup_off_comb: f64,
    pub unimodularity_drift: f64,
}

/// Grid maxima of `|b ± 1|` on and off the comb, at `x_i = 2πi/N`.
pub fn blaschke_bounds_check(n: u64, delta: f64, grid: usize) -> Result<BoundsCheck> {
    check_factor(n as u128, delta)?;
    let outer = delta.powf(0.25);
    if !(outer < 0.5) {
        return Err(Error::invalid("bounds check needs δ^{1/4} < 1/2"));
    }
    let q = rho_pow(delta);
    let (mut on, mut off, mut drift) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..grid {
        let turns = RationalAngle::new(i as u128, grid as u128).turns_times(n as u128);
        let signed = if turns > 0.5 { turns - 1.0 } else { turns };
        let b = factor_at(unit(turns), q);
        drift = drift.max((b.norm() - 1.0).abs());
        let a = 2.0 * signed.abs(); // |α|/π
        if a < delta {
            on = on.max((b + 1.0).norm());
        }
        if a >= outer {
            off = off.max((b - 1.0).norm());
        }
    }
    let (sup_on_comb, sup_off_comb) = factor_sups(delta, delta);
    Ok(BoundsCheck { max_on_comb: on, max_off_comb: off, sup_on_comb, sup_off_comb, unimodularity_drift: drift })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlaschkeStage {
    pub k: usize,
    pub delta: f64,
    pub u: Radius,
    pub v: Radius,
    pub lambda_u: f64,
    pub lambda_v: f64,
    pub n: u128,
    /// `∫_{−δλ(u)}^{δλ(u)} φ_u`, required above `1 − 2^{−k}`.
    pub mass: f64,
    /// `sup |b_k + 1|` on `U(n_k, 6δ_k)`, required below `2^{−k}`.
    pub comb_sup: f64,
    /// `sup |b_k − 1|` off `U(n_k, δ_k^{1/4})`, required below `2^{−k}`.
    pub off_comb_sup: f64,
    /// Certified `ω(2π/n_k, B_{k−1}) ≤ (2π/n_k)·Lip(B_{k−1})`, required below `2^{−k}`.
    pub modulus_bound: f64,
    /// Sampled `max |B_{k−1}(x) − B_{k−1}(x′)|` over `|x − x′| < 2π/n_k`.
    pub modulus_sampled: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlaschkeWitness {
    pub stage: usize,
    pub x: f64,
    pub j0: u64,
    /// `λ(r′) = 2πj₀/n_k − x`.
    pub r_prime: Radius,
    /// `λ(r″) = λ(r′) + π/n_k`.
    pub r_second: Radius,
    pub value_prime: Complex64,
    pub value_second: Complex64,
    pub oscillation: f64,
    /// `max(0.5, 1 − 16·2^{−k})`.
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlaschkeBuild {
    pub pi_star: f64,
    pub spec: BlaschkeSpec,
    pub stages: Vec<BlaschkeStage>,
    pub samples: Vec<f64>,
    pub witnesses: Vec<BlaschkeWitness>,
}

/// Largest `δ = 2^{−m}`, `m ≥ k + 6`, below `prev` whose factor meets both
/// `2^{−k}` phase bounds.
fn stage_delta(stage: usize, prev: Option<f64>) -> f64 {
    let goal = 2f64.powi(-(stage as i32));
    let mut d = 2f64.powi(-(stage as i32) - 6);
    loop {
        let (plus, minus) = factor_sups(d, 6.0 * d);
        if plus < goal && minus < goal && prev.is_none_or(|p| d < p) {
            return d;
        }
        d *= 0.5;
    }
}

/// `Φ_r(θ, B)`: the interior value for the Poisson family, quadrature otherwise.
fn average(k: &dyn Kernel, spec: &BlaschkeSpec, r: Radius, theta: RationalAngle) -> Result<Complex64> {
    if k.is_harmonic_extension() {
        return Ok(spec.interior_at(r, theta));
    }
    let y = theta.value();
    let w = k.peak_width(r).min(1.0);
    let mut breaks = vec![0.0];
    let mut s = w;
    while s < PI {
        breaks.push(-s);
        breaks.push(s);
        s *= 8.0;
    }
    let opts = QuadOptions::tol(1e-10, 1e-8);
    let part = |pick: fn(Complex64) -> f64| -> Result<f64> {
        let mut failure = None;
        let v = integrate_with_breaks(
            |t| match k.eval(r, t) {
                Ok(phi) => phi * pick(spec.boundary((y - t).rem_euclid(TAU))),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            -PI,
            PI,
            &breaks,
            opts,
        )?;
        failure.map_or(Ok(v), Err)
    };
    Ok(Complex64::new(part(|z| z.re)?, part(|z| z.im)?))
}

fn sampled_modulus(spec: &BlaschkeSpec, len: usize, n: u128, seed: u64) -> f64 {
    if len == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let den = 4 * n;
    (0..64)
        .map(|_| {
            let a = rng.gen_range(0..den);
            let x = RationalAngle::new(a, den);
            let x2 = RationalAngle::new(a + 3, den);
            (spec.boundary_at(x, len) - spec.boundary_at(x2, len)).norm()
        })
        .fold(0.0, f64::max)
}

/// Blaschke product `B_K = Π b(n_k, δ_k, ·)` whose averages along
/// `x + λ(r)` fail to converge at every sampled `x`. Returns the boundary
/// values on the `N`-grid.
pub fn blaschke_product(
    k: &dyn Kernel,
    curve: &ApproachCurve,
    depth: usize,
    grid: usize,
    opts: BuildOptions,
) -> Result<(ComplexGridFunction, BlaschkeBuild)> {
    check_depth(depth)?;
    let pi_star = pi_star_estimate(k, curve)?;
    if !(pi_star >= PI_STAR_MIN) {
        return Err(Error::refused(
            refuse(DiagnosticCode::ConditionFailed, "Π* estimate is below the required 0.95")
                .with("pi_star", pi_star)
                .with("threshold", PI_STAR_MIN)
                .with("curve", curve.to_string()),
        ));
    }
    let mut spec = BlaschkeSpec::default();
    let mut stages: Vec<BlaschkeStage> = Vec::with_capacity(depth);
    for stage in 1..=depth {
        let goal = 2f64.powi(-(stage as i32));
        let delta = stage_delta(stage, stages.last().map(|s| s.delta));
        let start = match stages.last() {
            Some(prev) => (prev.v.eps() * 0.5).min(goal),
            None => 0.5,
        };
        let mass_at = |r: Radius| -> Result<Option<f64>> {
            let l = curve.eval(r)?;
            if l >= PI {
                return Ok(None);
            }
            let h = (delta * l).min(PI);
            let m = kernel_integral(k, r, -h, h)?;
            Ok((m > 1.0 - goal).then_some(m))
        };
        // the start may already sit below the floor after deep earlier stages,
        // so the mass scan gets the same halving budget relative to its start
        let mass_floor = (start * 2.0 * opts.eps_floor).clamp(STRUCTURAL_EPS_FLOOR, opts.eps_floor);
        let first = scan_eps(start, mass_floor, |r| Ok(mass_at(r)?.is_some()))?.ok_or_else(|| {
            Error::refused(
                refuse(DiagnosticCode::RadiusFloor, "mass condition not reached before the floor on 1 − r")
                    .at_stage(stage)
                    .with("target", 1.0 - goal)
                    .with("eps_floor", mass_floor)
                    .with("pi_star", pi_star),
            )
        })?;
        // deepen until the tooth count beats the modulus of continuity of B_{k−1}
        let lip = spec.lipschitz(stage - 1);
        let prev_n = stages.last().map_or(0, |s| s.n);
        let teeth = |r: Radius| -> Result<u128> { Ok((6.0 * PI / curve.eval(r)?).floor() as u128) };
        let u = scan_eps(first.eps(), STRUCTURAL_EPS_FLOOR, |r| {
            let n = teeth(r)?;
            Ok(n > prev_n && TAU / n as f64 * lip < goal && mass_at(r)?.is_some())
        })?
        .ok_or_else(|| {
            Error::refused(
                refuse(DiagnosticCode::RadiusFloor, "tooth count cannot outrun the previous factors' oscillation")
                    .at_stage(stage)
                    .with("lipschitz", lip)
                    .with("eps_floor", STRUCTURAL_EPS_FLOOR),
            )
        })?;
        check_nonnegative(k, u, grid, stage)?;
        let mass = mass_at(u)?.expect("accepted radius");
        let lambda_u = curve.eval(u)?;
        let n = teeth(u)?;
        if n > u64::MAX as u128 {
            return Err(Error::refused(
                refuse(DiagnosticCode::ResolutionCap, "tooth count exceeds 64 bits").at_stage(stage),
            ));
        }
        let v = scan_eps(u.eps() * 0.5, STRUCTURAL_EPS_FLOOR, |r| Ok(3.0 * curve.eval(r)? <= lambda_u))?
            .ok_or_else(|| Error::refused(refuse(DiagnosticCode::RadiusFloor, "no v with 3λ(v) ≤ λ(u)").at_stage(stage)))?;
        let (comb_sup, off_comb_sup) = factor_sups(delta, 6.0 * delta);
        let modulus_sampled = sampled_modulus(&spec, stage - 1, n, opts.seed ^ stage as u64);
        stages.push(BlaschkeStage {
            k: stage,
            delta,
            u,
            v,
            lambda_u,
            lambda_v: curve.eval(v)?,
            n,
            mass,
            comb_sup,
            off_comb_sup,
            modulus_bound: TAU / n as f64 * lip,
            modulus_sampled,
        });
        spec.factors.push((n, delta));
    }

    let values = (0..grid).map(|i| spec.boundary_at(RationalAngle::new(i as u128, grid as u128), depth)).collect();
    let boundary = ComplexGridFunction::new(values)?;

    let samples = sample_points(opts.samples, opts.seed);
    let mut witnesses = Vec::with_capacity(samples.len() * depth);
    for st in &stages {
        let n = st.n as u64;
        for &x in &samples {
            let (j0, target) = tooth_ahead(x, n);
            let target = target.clamp(st.lambda_v, st.lambda_u);
            let r_prime = Radius::from_eps(curve.solve_eps(target, st.v.eps(), st.u.eps())?)?;
            let second = (target + PI / n as f64).clamp(st.lambda_v, st.lambda_u);
            let r_second = Radius::from_eps(curve.solve_eps(second, st.v.eps(), st.u.eps())?)?;
            let value_prime = average(k, &spec, r_prime, RationalAngle::new(j0 as u128, st.n))?;
            let value_second = average(k, &spec, r_second, RationalAngle::new(2 * j0 as u128 + 1, 2 * st.n))?;
            witnesses.push(BlaschkeWitness {
                stage: st.k,
                x,
                j0,
                r_prime,
                r_second,
                value_prime,
                value_second,
                oscillation: (value_prime - value_second).norm(),
                bound: 0.5f64.max(1.0 - 16.0 * 2f64.powi(-(st.k as i32))),
            });
        }
    }
    Ok((boundary, BlaschkeBuild { pi_star, spec, stages, samples, witnesses }))
}
