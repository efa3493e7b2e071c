use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::convolve::convolve;
use crate::circle::grid::GridFunction;
use crate::error::{Error, Result};
use crate::kernels::{Kernel, Radius};
use crate::regions::ApproachCurve;

/// Exact running sums of nonnegative doubles as integers in units of
/// `2^scale`; window sums are rounded once, so any exact method agrees bitwise.
enum ExactPrefix {
    Small(Vec<i128>),
    Big(Vec<BigInt>),
}

struct Exact {
    prefix: ExactPrefix,
    scale: i32,
}

/// `x = m·2^e` with integer `m < 2^53`.
fn decompose(x: f64) -> (u64, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}

fn scale_pow2(x: f64, e: i32) -> f64 {
    // split so intermediate powers stay representable
    let mut x = x;
    let mut e = e;
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e)
}

fn small_to_f64(s: u128, scale: i32) -> f64 {
    let bits = 128 - s.leading_zeros();
    if bits <= 64 {
        return scale_pow2(s as u64 as f64, scale);
    }
    let shift = bits - 64;
    let top = (s >> shift) as u64;
    let m = if s & ((1u128 << shift) - 1) == 0 { top } else { top | 1 };
    scale_pow2(m as f64, scale + shift as i32)
}

/// Correctly rounded `s·2^scale` (s ≥ 0): keep 64 leading bits plus a sticky
/// bit so the single u64 → f64 rounding is the only one.
fn big_to_f64(s: &BigInt, scale: i32) -> f64 {
    let bits = s.bits();
    if bits <= 64 {
        return scale_pow2(s.to_u64().expect("fits") as f64, scale);
    }
    let shift = bits - 64;
    let top = (s >> shift).to_u64().expect("64 bits");
    let sticky = (s.clone() - (BigInt::from(top) << shift)).is_zero();
    let m = if sticky { top } else { top | 1 };
    scale_pow2(m as f64, scale + shift as i32)
}

impl Exact {
    fn new(vals: &[f64]) -> Self {
        let parts: Vec<(u64, i32)> = vals.iter().map(|v| decompose(v.abs())).collect();
        let lo = parts.iter().filter(|p| p.0 != 0).map(|p| p.1).min().unwrap_or(0);
        let hi = parts.iter().filter(|p| p.0 != 0).map(|p| p.1).max().unwrap_or(0);
        let n_bits = 64 - (vals.len() as u64).leading_zeros() as i32 + 1;
        // total ≤ 2·N·2^{53 + hi − lo}; leave room for the wrap multiplicity
        if 53 + (hi - lo) + n_bits + 2 < 126 {
            let mut p = Vec::with_capacity(vals.len() + 1);
            let mut acc: i128 = 0;
            p.push(0);
            for &(m, e) in &parts {
                if m != 0 {
                    acc += (m as i128) << (e - lo);
                }
                p.push(acc);
            }
            Exact { prefix: ExactPrefix::Small(p), scale: lo }
        } else {
            let mut p = Vec::with_capacity(vals.len() + 1);
            let mut acc = BigInt::zero();
            p.push(acc.clone());
            for &(m, e) in &parts {
                if m != 0 {
                    acc += BigInt::from(m) << ((e - lo) as usize);
                }
                p.push(acc.clone());
            }
            Exact { prefix: ExactPrefix::Big(p), scale: lo }
        }
    }

    fn n(&self) -> usize {
        match &self.prefix {
            ExactPrefix::Small(p) => p.len() - 1,
            ExactPrefix::Big(p) => p.len() - 1,
        }
    }

    /// Correctly rounded `Σ_{j=a}^{b} |f_{j mod N}|` for integers `a ≤ b`.
    fn window(&self, a: i64, b: i64) -> f64 {
        let n = self.n() as i64;
        let upto = |m: i64| -> (i64, usize) { (m.div_euclid(n), m.rem_euclid(n) as usize) };
        let (qa, ra) = upto(a);
        let (qb, rb) = upto(b + 1);
        match &self.prefix {
            ExactPrefix::Small(p) => {
                let total = p[p.len() - 1];
                let s = (qb - qa) as i128 * total + p[rb] - p[ra];
                small_to_f64(s as u128, self.scale)
            }
            ExactPrefix::Big(p) => {
                let total = &p[p.len() - 1];
                let s = BigInt::from(qb - qa) * total + &p[rb] - &p[ra];
                big_to_f64(&s, self.scale)
            }
        }
    }
}

/// `Mf(x_i) = max_k (1/(2k+1)) Σ_{|j−i|≤k} |f_j|`, `k = 0..=N/2`
/// (window half-widths `(k + ½)·2π/N`).
pub fn hl_maximal(f: &GridFunction) -> GridFunction {
    let n = f.n();
    let ex = Exact::new(f.samples());
    let out = (0..n as i64)
        .map(|i| {
            let mut best = 0.0f64;
            for k in 0..=(n as i64 / 2) {
                let avg = ex.window(i - k, i + k) / (2 * k + 1) as f64;
                if avg > best {
                    best = avg;
                }
            }
            best
        })
        .collect();
    GridFunction::new(out).expect("same length as input")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaximalReport {
    pub values: GridFunction,
    /// `(t, |{x : value(x) > t}|)`, t increasing.
    pub level_set_measures: Vec<(f64, f64)>,
    pub best_constant: Option<f64>,
    pub warnings: Vec<String>,
}

impl MaximalReport {
    pub fn new(values: GridFunction, t_grid: &[f64]) -> Self {
        let level_set_measures = level_sets(&values, t_grid);
        Self { values, level_set_measures, best_constant: None, warnings: Vec::new() }
    }
}

fn level_sets(values: &GridFunction, t_grid: &[f64]) -> Vec<(f64, f64)> {
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    let h = values.step();
    ts.iter()
        .map(|&t| (t, h * values.samples().iter().filter(|&&v| v > t).count() as f64))
        .collect()
}

/// Geometric t-grid spanning the positive values of `g`.
pub fn default_t_grid(g: &GridFunction, points: usize) -> Vec<f64> {
    let max = g.samples().iter().copied().fold(0.0, f64::max);
    let min = g.samples().iter().copied().filter(|&v| v > 0.0).fold(max, f64::min);
    if !(max > 0.0) {
        return vec![0.0];
    }
    let lo = (min * 0.5).max(max * 1e-6);
    (0..points)
        .map(|i| lo * (max / lo).powf(i as f64 / (points.max(2) - 1) as f64))
        .collect()
}

/// `sup_{r ∈ radii, |x − y| < λ(r)} |Φ_r(y, f)|` over grid points y.
pub fn lambda_maximal(k: &dyn Kernel, curve: &ApproachCurve, f: &GridFunction, radii: &[Radius]) -> Result<MaximalReport> {
    let n = f.n();
    let h = f.step();
    let mut best = vec![0.0f64; n];
    let mut warnings = Vec::new();
    for &r in radii {
        let conv = convolve(k, r, f)?;
        warnings.extend(conv.warnings);
        let abs: Vec<f64> = conv.values.samples().iter().map(|v| v.abs()).collect();
        let lam = curve.eval(r)?;
        // grid offsets d with d·h < λ
        let reach = ((lam / h).ceil() as i64 - 1).max(0) as usize;
        let win = window_max(&abs, reach);
        for (b, w) in best.iter_mut().zip(win) {
            if w > *b {
                *b = w;
            }
        }
    }
    let values = GridFunction::new(best)?;
    let t = default_t_grid(&values, 32);
    let mut rep = MaximalReport::new(values, &t);
    rep.warnings = warnings;
    Ok(rep)
}

/// Circular sliding maximum over `[i − reach, i + reach]` (monotone deque).
fn window_max(v: &[f64], reach: usize) -> Vec<f64> {
    let n = v.len();
    if 2 * reach + 1 >= n {
        let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return vec![m; n];
    }
    let width = 2 * reach + 1;
    let at = |m: usize| v[(m + n - reach) % n]; // extended index m ↦ i − reach + …
    let mut out = vec![0.0; n];
    let mut dq: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for m in 0..n + width - 1 {
        while let Some(&b) = dq.back() {
            if at(b) <= at(m) {
                dq.pop_back();
            } else {
                break;
            }
        }
        dq.push_back(m);
        if let Some(&f) = dq.front() {
            if f + width <= m {
                dq.pop_front();
            }
        }
        if m + 1 >= width {
            out[m + 1 - width] = at(*dq.front().expect("nonempty"));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WeakType {
    pub constant: f64,
    pub witness_t: f64,
}

/// Least `C` with `|{value > t}| ≤ C t^{−p} ∥f∥_p^p` over the t-grid.
pub fn weak_type_check(report: &mut MaximalReport, f: &GridFunction, p: f64, t_grid: &[f64]) -> Result<WeakType> {
    if t_grid.is_empty() {
        return Err(Error::invalid("t-grid is empty"));
    }
    let norm = f.lp_norm(p)?.powf(p);
    if !(norm > 0.0) {
        return Err(Error::invalid("weak-type check needs ∥f∥_p > 0"));
    }
    let levels = level_sets(&report.values, t_grid);
    let mut best = WeakType { constant: 0.0, witness_t: levels[0].0 };
    for &(t, m) in &levels {
        let c = m * t.powf(p) / norm;
        if c > best.constant {
            best = WeakType { constant: c, witness_t: t };
        }
    }
    report.level_set_measures = levels;
    report.best_constant = Some(best.constant);
    Ok(best)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Domination {
    pub max_ratio: f64,
    pub argmax: usize,
    pub ratios: GridFunction,
}

/// `max_x Φ*_λ f(x) / (M|f|^p(x))^{1/p}` with `0/0 = 0`.
pub fn pointwise_domination_check(
    k: &dyn Kernel,
    curve: &ApproachCurve,
    f: &GridFunction,
    p: f64,
    radii: &[Radius],
) -> Result<Domination> {
    if p < 1.0 {
        return Err(Error::invalid(format!("exponent p must be ≥ 1, got {p}")));
    }
    let lam = lambda_maximal(k, curve, f, radii)?;
    let m = hl_maximal(&f.map(|v| v.abs().powf(p)));
    let ratios: Vec<f64> = lam
        .values
        .samples()
        .iter()
        .zip(m.samples())
        .map(|(&a, &b)| {
            let d = b.powf(1.0 / p);
            if d == 0.0 {
                if a == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                a / d
            }
        })
        .collect();
    let (argmax, max_ratio) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    Ok(Domination { max_ratio, argmax, ratios: GridFunction::new(ratios)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::arcs::ArcSet;
    use crate::circle::measure::SignedMeasure;
    use crate::kernels::{dyadic_sequence, Poisson};
    use crate::operators::convolve_measure_point;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    /// Independent oracle: windows grown term by term in exact rationals.
    fn brute_hl(f: &GridFunction) -> Vec<f64> {
        let n = f.n() as i64;
        let exact: Vec<BigRational> =
            f.samples().iter().map(|v| BigRational::from_float(v.abs()).unwrap()).collect();
        (0..n)
            .map(|i| {
                let mut best = 0.0f64;
                let mut s = exact[i as usize].clone();
                for k in 0..=n / 2 {
                    if k > 0 {
                        s += &exact[(i - k).rem_euclid(n) as usize];
                        s += &exact[(i + k).rem_euclid(n) as usize];
                    }
                    let avg = s.to_f64().unwrap() / (2 * k + 1) as f64;
                    best = best.max(avg);
                }
                best
            })
            .collect()
    }

    #[test]
    fn hl_examples() {
        let c = GridFunction::constant(64, -2.5).unwrap();
        assert!(hl_maximal(&c).samples().iter().all(|&v| v == 2.5));
        // indicator of [−a, a]; at distance d the best window reaches back to −a
        let n = 1024;
        let h = TAU / n as f64;
        let a = 40.0 * h;
        let f = GridFunction::indicator(&ArcSet::from_arcs([(-a - 0.5 * h, a + 0.5 * h)]), n).unwrap();
        let m = hl_maximal(&f);
        for i in [100usize, 200, 400] {
            let d = i as f64 * h;
            let expect = a / (d + a);
            assert!((m.samples()[i] - expect).abs() < 2.0 * h / (d + a), "i = {i}");
        }
        assert!(m.samples().iter().zip(f.samples()).all(|(mv, fv)| *mv >= fv.abs()));
    }

    #[test]
    fn hl_handles_wide_exponent_ranges() {
        let mut v = vec![1e-300; 32];
        v[3] = 1e300;
        v[7] = 3.0;
        let f = GridFunction::new(v).unwrap();
        let fast = hl_maximal(&f);
        assert_eq!(fast.samples(), &brute_hl(&f)[..]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn hl_matches_brute_force_bitwise(v in prop::collection::vec(-1.0f64..1.0, 256)) {
            let f = GridFunction::new(v).unwrap();
            let fast = hl_maximal(&f);
            let slow = brute_hl(&f);
            for (a, b) in fast.samples().iter().zip(&slow) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }

    #[test]
    fn lambda_maximal_examples() {
        let n = 1 << 12;
        // the bump is atom-like only while 1 − r spans many cells
        let radii = dyadic_sequence(1, 6);
        let c = ApproachCurve::nontangential(1.0);
        let one = GridFunction::constant(n, 1.0).unwrap();
        let rep = lambda_maximal(&Poisson, &c, &one, &radii).unwrap();
        assert!(rep.values.samples().iter().all(|v| (v - 1.0).abs() < 1e-5));
        assert!(rep.level_set_measures.windows(2).all(|w| w[1].1 <= w[0].1));

        // narrow unit-mass bump at 0 behaves like an atom
        let mut bump = vec![0.0; n];
        bump[0] = n as f64 / TAU;
        let bump = GridFunction::new(bump).unwrap();
        let rep = lambda_maximal(&Poisson, &c, &bump, &radii).unwrap();
        let atom = SignedMeasure::atom(0.0, 1.0);
        let peak = radii
            .iter()
            .map(|&r| convolve_measure_point(&Poisson, r, &atom, 0.0).unwrap())
            .fold(0.0, f64::max);
        let v = rep.values.samples();
        assert!((v[0] / peak - 1.0).abs() < 0.05, "{} vs {peak}", v[0]);
        assert!(v[0] > v[64] && v[64] > v[1024]);

        // larger curve and larger radius set never decrease values
        let wide = lambda_maximal(&Poisson, &ApproachCurve::nontangential(3.0), &bump, &radii).unwrap();
        assert!(wide.values.samples().iter().zip(v).all(|(a, b)| a >= b));
        let fewer = lambda_maximal(&Poisson, &c, &bump, &radii[..6]).unwrap();
        assert!(fewer.values.samples().iter().zip(v).all(|(a, b)| a <= b));
    }

    #[test]
    fn window_max_matches_naive() {
        let v: Vec<f64> = (0..37).map(|i| ((i * 7919) % 37) as f64).collect();
        for reach in [0, 1, 5, 17, 18, 40] {
            let fast = window_max(&v, reach);
            for i in 0..37i64 {
                let naive = (i - reach as i64..=i + reach as i64)
                    .map(|j| v[j.rem_euclid(37) as usize])
                    .fold(f64::NEG_INFINITY, f64::max);
                assert_eq!(fast[i as usize], naive);
            }
        }
    }

    #[test]
    fn weak_type_examples() {
        let n = 256;
        let zero = GridFunction::constant(n, 0.0).unwrap();
        let f = GridFunction::indicator(&ArcSet::arc(0.0, 1.0), n).unwrap();
        let mut rep = MaximalReport::new(zero, &[0.5]);
        assert_eq!(weak_type_check(&mut rep, &f, 1.0, &[0.5, 1.0]).unwrap().constant, 0.0);
        let mut rep = MaximalReport::new(f.clone(), &[0.5]);
        let w = weak_type_check(&mut rep, &f, 1.0, &[0.5]).unwrap();
        assert!((w.constant - 0.5).abs() < 1e-12);
        assert!(weak_type_check(&mut rep, &f, 1.0, &[]).is_err());
    }

    #[test]
    fn domination_examples() {
        let n = 1 << 10;
        let radii = dyadic_sequence(1, 12);
        let c = ApproachCurve::nontangential(1.0);
        let one = GridFunction::constant(n, 1.0).unwrap();
        let d = pointwise_domination_check(&Poisson, &c, &one, 1.0, &radii).unwrap();
        assert!((d.max_ratio - 1.0).abs() < 1e-5);
        let step = GridFunction::indicator(&ArcSet::arc(0.0, PI), n).unwrap();
        let d1 = pointwise_domination_check(&Poisson, &c, &step, 1.0, &radii).unwrap();
        assert!(d1.max_ratio <= 10.0);
        let d2 = pointwise_domination_check(&Poisson, &ApproachCurve::nontangential(2.0), &step, 1.0, &radii).unwrap();
        assert!(d2.max_ratio <= 4.0 * d1.max_ratio);
    }
}
