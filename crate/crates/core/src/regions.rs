//! Approach curves `λ(r)` and finite-sequence estimators for the region
//! functionals built from them.

use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{kernel_integral, kernel_stats, lq_norm, Kernel, Radius};

/// Approach region half-width `λ(r)`, evaluated through `ε = 1 − r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ApproachCurve {
    /// `c(1 − r)`
    Nontangential { c: f64 },
    /// `c(1 − r)(log 1/(1 − r))^p`
    LogTangential { c: f64, p: f64 },
    /// `c(1 − r)^α`
    Power { c: f64, alpha: f64 },
    /// Tabulated `(ε, λ)` pairs, log–log interpolated between nodes.
    Table { source: Option<PathBuf>, points: Vec<(f64, f64)> },
}

impl ApproachCurve {
    pub fn nontangential(c: f64) -> Self {
        ApproachCurve::Nontangential { c }
    }

    pub fn log_tangential(c: f64, p: f64) -> Self {
        ApproachCurve::LogTangential { c, p }
    }

    pub fn power(c: f64, alpha: f64) -> Self {
        ApproachCurve::Power { c, alpha }
    }

    /// Curve through the given radii with prescribed values.
    pub fn table(points: impl IntoIterator<Item = (Radius, f64)>) -> Result<Self> {
        Self::from_points(None, points.into_iter().map(|(r, l)| (r.eps(), l)).collect())
    }

    fn from_points(source: Option<PathBuf>, mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() || points.iter().any(|&(e, l)| !(e > 0.0 && e < 1.0 && l > 0.0)) {
            return Err(Error::invalid("curve table needs points with 0 < 1 − r < 1 and λ > 0"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(ApproachCurve::Table { source, points })
    }

    pub fn load_table(path: &Path) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(File::open(path)?);
        let h = rd.headers()?.clone();
        if h.len() != 2 || h[0].trim() != "r" || h[1].trim() != "lambda" {
            return Err(Error::Format(format!("curve table needs header r,lambda; got {h:?}")));
        }
        let mut pts = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("{s:?}: {e}")));
            let r = Radius::new(parse(&rec[0])?)?;
            pts.push((r.eps(), parse(&rec[1])?));
        }
        Self::from_points(Some(path.to_path_buf()), pts)
    }

    pub fn eval(&self, r: Radius) -> Result<f64> {
        let e = r.eps();
        Ok(match *self {
            ApproachCurve::Nontangential { c } => c * e,
            ApproachCurve::LogTangential { c, p } => c * e * (-e.ln()).powf(p),
            ApproachCurve::Power { c, alpha } => c * e.powf(alpha),
            ApproachCurve::Table { ref points, .. } => {
                let i = points.partition_point(|&(pe, _)| pe < e);
                if i < points.len() && (points[i].0 - e).abs() <= 1e-12 * e {
                    points[i].1
                } else if i > 0 && i < points.len() && (points[i - 1].0 - e).abs() <= 1e-12 * e {
                    points[i - 1].1
                } else if i == 0 || i == points.len() {
                    return Err(Error::invalid(format!("r = {} lies outside the tabulated curve", r.r())));
                } else {
                    let (e0, l0) = points[i - 1];
                    let (e1, l1) = points[i];
                    let w = (e.ln() - e0.ln()) / (e1.ln() - e0.ln());
                    (l0.ln() + w * (l1.ln() - l0.ln())).exp()
                }
            }
        })
    }

    /// Solve `λ(r) = target` for `1 − r` in `[eps_lo, eps_hi]` by bisection on
    /// `log ε`; the curve must be increasing in ε there.
    pub fn solve_eps(&self, target: f64, eps_lo: f64, eps_hi: f64) -> Result<f64> {
        let at = |e: f64| Radius::from_eps(e).and_then(|r| self.eval(r));
        let (mut lo, mut hi) = (eps_lo.ln(), eps_hi.ln());
        if !(at(eps_lo)? <= target && target <= at(eps_hi)?) {
            return Err(Error::invalid(format!("λ = {target:e} is not attained for 1 − r in [{eps_lo:e}, {eps_hi:e}]")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if at(mid.exp())? < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 {
                break;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }
}

fn parse_params(body: &str) -> Result<Vec<(String, f64)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("curve parameter {kv:?} is not key=value")))?;
            let v: f64 = v.trim().parse().map_err(|e| Error::invalid(format!("curve parameter {kv:?}: {e}")))?;
            Ok((k.trim().to_owned(), v))
        })
        .collect()
}

impl FromStr for ApproachCurve {
    type Err = Error;

    /// `nontangential:c=1`, `log_tangential:c=1,p=2`, `power:c=1,alpha=0.5`,
    /// `table:<path>` (CSV with header `r,lambda`).
    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        if kind == "table" {
            return Self::load_table(Path::new(body));
        }
        let params = parse_params(body)?;
        let get = |name: &str, default: Option<f64>| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| k == name)
                .map(|p| p.1)
                .or(default)
                .ok_or_else(|| Error::invalid(format!("curve {kind} needs parameter {name}")))
        };
        let allowed: &[&str] = match kind {
            "nontangential" => &["c"],
            "log_tangential" => &["c", "p"],
            "power" => &["c", "alpha"],
            _ => return Err(Error::invalid(format!("unknown curve kind {kind:?}"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::invalid(format!("curve {kind} has no parameter {k:?}")));
        }
        let c = get("c", Some(1.0))?;
        if !(c > 0.0) {
            return Err(Error::invalid("curve constant c must be positive"));
        }
        Ok(match kind {
            "nontangential" => Self::nontangential(c),
            "log_tangential" => Self::log_tangential(c, get("p", None)?),
            _ => Self::power(c, get("alpha", None)?),
        })
    }
}

impl fmt::Display for ApproachCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproachCurve::Nontangential { c } => write!(f, "nontangential:c={c}"),
            ApproachCurve::LogTangential { c, p } => write!(f, "log_tangential:c={c},p={p}"),
            ApproachCurve::Power { c, alpha } => write!(f, "power:c={c},alpha={alpha}"),
            ApproachCurve::Table { source: Some(p), .. } => write!(f, "table:{}", p.display()),
            ApproachCurve::Table { points, .. } => write!(f, "table:<{} points>", points.len()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Plateau,
    Oscillating,
}

/// Relative spread of the tail below which it counts as a plateau.
pub const PLATEAU_SPREAD: f64 = 0.10;

/// Finite stand-in for limsup/liminf: statistics over the final third of the sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LimsupEstimate {
    pub radii: Vec<Radius>,
    pub samples: Vec<f64>,
    pub tail_max: f64,
    pub tail_min: f64,
    /// Max over all samples (the `sup_{0<r<1}` surrogate).
    pub sup: f64,
    pub trend: Trend,
}

impl LimsupEstimate {
    pub fn new(radii: Vec<Radius>, samples: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || radii.len() != samples.len() {
            return Err(Error::invalid("estimate needs one sample per radius and at least one radius"));
        }
        let start = tail_start(samples.len());
        let tail = &samples[start..];
        let tail_max = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tail_min = tail.iter().copied().fold(f64::INFINITY, f64::min);
        let sup = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let trend = classify(tail);
        Ok(Self { radii, samples, tail_max, tail_min, sup, trend })
    }
}

/// First index of the final third (at least two points when available).
pub fn tail_start(len: usize) -> usize {
    len - len.div_ceil(3).max(2).min(len)
}

fn classify(tail: &[f64]) -> Trend {
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = hi.abs().max(lo.abs());
    if hi - lo <= PLATEAU_SPREAD * scale || scale == 0.0 {
        return Trend::Plateau;
    }
    let slack = 1e-12 * scale;
    if tail.windows(2).all(|w| w[1] >= w[0] - slack) {
        Trend::Increasing
    } else if tail.windows(2).all(|w| w[1] <= w[0] + slack) {
        Trend::Decreasing
    } else {
        Trend::Oscillating
    }
}

/// `∥φ_r∥_∞`: exact when the family knows it, otherwise the grid maximum.
pub fn sup_norm(k: &dyn Kernel, r: Radius, n: usize) -> Result<f64> {
    match k.sup_norm(r) {
        Some(s) => Ok(s),
        None => Ok(kernel_stats(k, r, n)?.sup_norm),
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("exponent p must be ≥ 1, got {p}")))
    }
}

/// Samples `λ(r)·∥φ_r∥_∞`.
pub fn pi_plain(k: &dyn Kernel, curve: &ApproachCurve, radii: &[Radius], n: usize) -> Result<LimsupEstimate> {
    let samples = radii
        .iter()
        .map(|&r| Ok(curve.eval(r)? * sup_norm(k, r, n)?))
        .collect::<Result<Vec<_>>>()?;
    LimsupEstimate::new(radii.to_vec(), samples)
}

/// Samples `λ(r)·∥φ_r∥_∞·φ_*(r)^{p−1}`; `sup` is the sup-mode value, the tail
/// statistics the limsup-mode value.
pub fn pi_p(k: &dyn Kernel, curve: &ApproachCurve, p: f64, radii: &[Radius], n: usize) -> Result<LimsupEstimate> {
    check_p(p)?;
    if p == 1.0 {
        return pi_plain(k, curve, radii, n);
    }
    let samples = radii
        .iter()
        .map(|&r| {
            let st = kernel_stats(k, r, n)?;
            Ok(curve.eval(r)? * st.sup_norm * st.phi_star.powf(p - 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    LimsupEstimate::new(radii.to_vec(), samples)
}

/// Central-window mass table over `(δ, r)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PiTable {
    pub deltas: Vec<f64>,
    pub radii: Vec<Radius>,
    /// `cells[j][k] = ∫_{−δ_j λ(r_k)}^{δ_j λ(r_k)} φ_{r_k}`
    pub cells: Vec<Vec<f64>>,
    pub rows: Vec<LimsupEstimate>,
    /// Row statistic at the smallest δ (tail max for Π_∞, tail min for Π*).
    pub estimate: f64,
}

/// Default δ-sequence `2^{−j}`, `j = 1..=j_max`.
pub fn default_deltas(j_max: u32) -> Vec<f64> {
    (1..=j_max).map(|j| 2f64.powi(-(j as i32))).collect()
}

fn window_table(k: &dyn Kernel, curve: &ApproachCurve, deltas: &[f64], radii: &[Radius]) -> Result<(Vec<Vec<f64>>, Vec<LimsupEstimate>)> {
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::invalid("δ-sequence must be positive and decreasing"));
    }
    let lambdas = radii.iter().map(|&r| curve.eval(r)).collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::with_capacity(deltas.len());
    let mut rows = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let row = radii
            .iter()
            .zip(&lambdas)
            .map(|(&r, &l)| {
                let h = (d * l).min(PI);
                kernel_integral(k, r, -h, h)
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(LimsupEstimate::new(radii.to_vec(), row.clone())?);
        cells.push(row);
    }
    Ok((cells, rows))
}

pub fn pi_infty(k: &dyn Kernel, curve: &ApproachCurve, deltas: &[f64], radii: &[Radius]) -> Result<PiTable> {
    let (cells, rows) = window_table(k, curve, deltas, radii)?;
    let estimate = rows.last().expect("nonempty").tail_max;
    Ok(PiTable { deltas: deltas.to_vec(), radii: radii.to_vec(), cells, rows, estimate })
}

pub fn pi_star(k: &dyn Kernel, curve: &ApproachCurve, deltas: &[f64], radii: &[Radius]) -> Result<PiTable> {
    let (cells, rows) = window_table(k, curve, deltas, radii)?;
    let estimate = rows.last().expect("nonempty").tail_min;
    Ok(PiTable { deltas: deltas.to_vec(), radii: radii.to_vec(), cells, rows, estimate })
}

/// Samples `λ(r)·∥φ_r∥_q^p`, `q = p/(p−1)` (`∞` for `p = 1`).
pub fn carlsson_bound(k: &dyn Kernel, curve: &ApproachCurve, p: f64, radii: &[Radius], n: usize) -> Result<LimsupEstimate> {
    check_p(p)?;
    if p == 1.0 {
        return pi_plain(k, curve, radii, n);
    }
    let q = p / (p - 1.0);
    let samples = radii
        .iter()
        .map(|&r| Ok(curve.eval(r)? * lq_norm(k, r, q)?.powf(p)))
        .collect::<Result<Vec<_>>>()?;
    LimsupEstimate::new(radii.to_vec(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{decimal_sequence, dyadic_sequence, FracPoisson, Poisson};
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    #[test]
    fn curve_parsing() {
        assert_eq!("nontangential:c=1".parse::<ApproachCurve>().unwrap(), ApproachCurve::nontangential(1.0));
        assert_eq!(
            "log_tangential:c=2,p=1.5".parse::<ApproachCurve>().unwrap(),
            ApproachCurve::log_tangential(2.0, 1.5)
        );
        assert_eq!("power:alpha=0.5".parse::<ApproachCurve>().unwrap(), ApproachCurve::power(1.0, 0.5));
        assert!("power:c=1".parse::<ApproachCurve>().is_err());
        assert!("nontangential:c=1,q=3".parse::<ApproachCurve>().is_err());
        assert!("spiral:c=1".parse::<ApproachCurve>().is_err());
        let c = ApproachCurve::power(1.0, 0.5);
        assert_eq!(c.to_string().parse::<ApproachCurve>().unwrap(), c);
    }

    #[test]
    fn curves_vanish_at_the_boundary() {
        for c in [
            ApproachCurve::nontangential(3.0),
            ApproachCurve::log_tangential(1.0, 2.0),
            ApproachCurve::power(1.0, 0.25),
        ] {
            let vals: Vec<f64> = dyadic_sequence(5, 60).iter().map(|&r| c.eval(r).unwrap()).collect();
            assert!(vals.iter().all(|&v| v > 0.0));
            assert!(vals.windows(2).all(|w| w[1] < w[0]));
            assert!(*vals.last().unwrap() < 1e-4);
        }
    }

    #[test]
    fn table_curve_and_inversion() {
        let pts: Vec<(Radius, f64)> = dyadic_sequence(1, 10).into_iter().map(|r| (r, r.eps().sqrt())).collect();
        let t = ApproachCurve::table(pts).unwrap();
        let r = Radius::from_eps(3e-3).unwrap();
        assert!((t.eval(r).unwrap() - 3e-3f64.sqrt()).abs() < 1e-12);
        assert!(t.eval(Radius::dyadic(20)).is_err());
        let c = ApproachCurve::log_tangential(1.0, 1.0);
        let target = c.eval(Radius::from_eps(1e-7).unwrap()).unwrap();
        let e = c.solve_eps(target, 1e-12, 1e-2).unwrap();
        assert!((e / 1e-7 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn plain_functional() {
        let radii = dyadic_sequence(1, 20);
        let est = pi_plain(&Poisson, &ApproachCurve::nontangential(1.0), &radii, 1 << 12).unwrap();
        // oracle: (1 + r)/(2π) evaluated at r = 1 − 1e−6
        let oracle = (2.0 - 1e-6) / TAU;
        assert!((est.tail_max - oracle).abs() < 1e-3);
        assert_eq!(est.trend, Trend::Plateau);
        let est = pi_plain(&Poisson, &ApproachCurve::power(1.0, 0.5), &radii, 1 << 12).unwrap();
        assert_eq!(est.trend, Trend::Increasing);
        assert!(est.tail_max > 10.0);
        // λ chosen so that λ·sup = 1
        let pts = radii.iter().map(|&r| (r, 1.0 / Poisson.sup_norm(r).unwrap()));
        let est = pi_plain(&Poisson, &ApproachCurve::table(pts).unwrap(), &radii, 1 << 12).unwrap();
        assert!(est.samples.iter().all(|&s| (s - 1.0).abs() < 1e-12));
    }

    #[test]
    fn p_functional() {
        let radii = dyadic_sequence(1, 12);
        let a = pi_p(&Poisson, &ApproachCurve::power(1.0, 0.5), 1.0, &radii, 1 << 12).unwrap();
        let b = pi_plain(&Poisson, &ApproachCurve::power(1.0, 0.5), &radii, 1 << 12).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!(pi_p(&Poisson, &ApproachCurve::nontangential(1.0), 0.5, &radii, 64).is_err());

        let k = FracPoisson::new();
        let radii = decimal_sequence(2, 8);
        let n = 1 << 12;
        let admitted = pi_p(&k, &ApproachCurve::log_tangential(1.0, 2.0), 2.0, &radii, n).unwrap();
        assert!(admitted.tail_max <= 50.0);
        let sharper = pi_p(&k, &ApproachCurve::log_tangential(1.0, 3.0), 2.0, &radii, n).unwrap();
        assert_eq!(sharper.trend, Trend::Increasing);
        assert!(sharper.tail_max > admitted.tail_max);
    }

    #[test]
    fn window_functionals() {
        let deltas = default_deltas(10);
        let shallow = dyadic_sequence(1, 20);
        let t = pi_infty(&Poisson, &ApproachCurve::nontangential(1.0), &deltas, &shallow).unwrap();
        assert!(t.estimate <= 0.05);
        let s = pi_star(&Poisson, &ApproachCurve::nontangential(1.0), &deltas, &shallow).unwrap();
        assert!(s.estimate <= 0.05);
        // Π* = 1 for λ = (1−r)^{1/2}, but the window δλ covers the peak only
        // once √ε ≪ δ; δ = 2⁻¹⁰ needs ε well below 2⁻⁴⁰.
        let deep = dyadic_sequence(1, 60);
        let s = pi_star(&Poisson, &ApproachCurve::power(1.0, 0.5), &deltas, &deep).unwrap();
        assert!(s.estimate >= 0.95, "{}", s.estimate);
        let t = pi_infty(&Poisson, &ApproachCurve::power(1.0, 0.5), &deltas, &deep).unwrap();
        assert!(t.estimate >= 0.95);
        for (a, b) in s.rows.iter().zip(&t.rows) {
            assert!(a.tail_min <= b.tail_max);
        }
        // bounded λ·sup: cells are at most 2δ·λ·sup
        let c = ApproachCurve::nontangential(1.0);
        let t = pi_infty(&Poisson, &c, &deltas, &shallow).unwrap();
        for (j, row) in t.cells.iter().enumerate() {
            for (k, &r) in shallow.iter().enumerate() {
                let bound = 2.0 * deltas[j] * c.eval(r).unwrap() * Poisson.sup_norm(r).unwrap();
                assert!(row[k] <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn carlsson() {
        let radii = dyadic_sequence(1, 16);
        let a = carlsson_bound(&Poisson, &ApproachCurve::nontangential(1.0), 1.0, &radii, 1 << 12).unwrap();
        let b = pi_plain(&Poisson, &ApproachCurve::nontangential(1.0), &radii, 1 << 12).unwrap();
        assert_eq!(a.samples, b.samples);
        let rho = radii.iter().map(|&r| (r, lq_norm(&Poisson, r, 2.0).unwrap().powi(-2)));
        let c = carlsson_bound(&Poisson, &ApproachCurve::table(rho).unwrap(), 2.0, &radii, 1 << 12).unwrap();
        assert!(c.samples.iter().all(|&s| (s - 1.0).abs() < 1e-9));
        // oracle: ∥P_r/2π∥₂² = (1 + r²)/(2π(1 − r²))
        for &r in &radii {
            let exact = (1.0 + r.r() * r.r()) / (TAU * r.eps() * (2.0 - r.eps()));
            let got = lq_norm(&Poisson, r, 2.0).unwrap().powi(2);
            assert!((got / exact - 1.0).abs() < 1e-8);
        }
        let g = carlsson_bound(&Poisson, &ApproachCurve::power(1.0, 0.5), 2.0, &radii, 1 << 12).unwrap();
        assert_eq!(g.trend, Trend::Increasing);
    }

    #[test]
    fn trends() {
        assert_eq!(classify(&[1.0, 1.05, 1.02]), Trend::Plateau);
        assert_eq!(classify(&[1.0, 2.0, 3.0]), Trend::Increasing);
        assert_eq!(classify(&[3.0, 2.0, 1.0]), Trend::Decreasing);
        assert_eq!(classify(&[1.0, 3.0, 1.0]), Trend::Oscillating);
        assert_eq!(tail_start(20), 13);
        assert_eq!(tail_start(4), 2);
    }

    proptest! {
        #[test]
        fn functionals_are_monotone_in_lambda(c1 in 0.1f64..2.0, extra in 0.0f64..2.0) {
            let radii = dyadic_sequence(1, 14);
            let small = ApproachCurve::nontangential(c1);
            let big = ApproachCurve::nontangential(c1 + extra);
            let deltas = default_deltas(4);
            let a = pi_plain(&Poisson, &small, &radii, 256).unwrap();
            let b = pi_plain(&Poisson, &big, &radii, 256).unwrap();
            prop_assert!(a.samples.iter().zip(&b.samples).all(|(x, y)| x <= y));
            let a = pi_infty(&Poisson, &small, &deltas, &radii).unwrap();
            let b = pi_infty(&Poisson, &big, &deltas, &radii).unwrap();
            for (ra, rb) in a.cells.iter().zip(&b.cells) {
                prop_assert!(ra.iter().zip(rb).all(|(x, y)| *x <= *y + 1e-15));
            }
        }
    }

    #[test]
    fn exponent_ordering() {
        // samples at p₂ ≤ samples at p₁ · (C_φ)^{p₂ − p₁} with C_φ the majorant L¹
        let radii = dyadic_sequence(1, 10);
        let n = 1 << 14;
        let c = ApproachCurve::nontangential(1.0);
        let p1 = pi_p(&Poisson, &c, 1.5, &radii, n).unwrap();
        let p2 = pi_p(&Poisson, &c, 3.0, &radii, n).unwrap();
        for (i, &r) in radii.iter().enumerate() {
            let cphi = kernel_stats(&Poisson, r, n).unwrap().majorant_l1;
            assert!(p2.samples[i] <= p1.samples[i] * (cphi + 1e-9).powf(1.5));
        }
    }
}
