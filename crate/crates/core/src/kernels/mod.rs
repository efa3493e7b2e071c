//! Approximate-identity kernel families `r ↦ φ_r`, all normalized so that
//! `∫_𝕋 φ_r = 1`, and the grid statistics derived from them.

mod families;
mod radius;
mod stats;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use families::{fejer_radius, fejer_value, poisson_mass, Custom, Fejer, FracPoisson, Poisson, Tabulated};
pub use radius::{decimal_sequence, dyadic_sequence, Radius};
pub use stats::{
    AxiomTolerance,
    axioms_check, kernel_stats, majorant, regularity_check, AxiomsReport, KernelStats, RegularityReport,
};

use crate::circle::quadrature::{integrate_with_breaks, QuadOptions};
use crate::error::{Error, Result};

pub trait Kernel: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn params(&self) -> BTreeMap<String, f64> {
        BTreeMap::new()
    }

    /// `φ_r(t)`; 2π-periodic in `t`.
    fn eval(&self, r: Radius, t: f64) -> Result<f64>;

    /// Closed-form `∫_a^b φ_r`, `a ≤ b`, when the family has one.
    fn partial_integral(&self, _r: Radius, _a: f64, _b: f64) -> Option<f64> {
        None
    }

    /// Length scale of the central peak; drives quadrature breakpoints and
    /// grid refinement.
    fn peak_width(&self, r: Radius) -> f64 {
        r.eps()
    }

    /// `∥φ_r∥_∞` when known exactly.
    fn sup_norm(&self, _r: Radius) -> Option<f64> {
        None
    }

    /// True when `Φ_r(y, g)` equals the harmonic extension `g(r e^{iy})`
    /// (the Poisson family), so analytic data can be evaluated in closed form.
    fn is_harmonic_extension(&self) -> bool {
        false
    }

    /// True when the family is nonnegative, which licenses tail pruning.
    fn is_nonnegative(&self) -> bool {
        false
    }
}

pub type KernelRef = Arc<dyn Kernel>;

fn peak_breaks(k: &dyn Kernel, r: Radius, a: f64, b: f64) -> Vec<f64> {
    let w = k.peak_width(r).min(1.0);
    let mut out = Vec::new();
    let m_lo = (a / TAU).floor() as i64;
    let m_hi = (b / TAU).ceil() as i64;
    for m in m_lo..=m_hi {
        let c = m as f64 * TAU;
        out.push(c);
        let mut s = w;
        while s < PI {
            out.push(c - s);
            out.push(c + s);
            s *= 8.0;
        }
    }
    out
}

/// `∫_a^b φ_r`: closed form when available, adaptive quadrature otherwise.
pub fn kernel_integral(k: &dyn Kernel, r: Radius, a: f64, b: f64) -> Result<f64> {
    if a > b {
        return kernel_integral(k, r, b, a).map(|v| -v);
    }
    if let Some(v) = k.partial_integral(r, a, b) {
        return Ok(v);
    }
    kernel_quadrature(k, r, a, b, QuadOptions::tol(1e-13, 1e-11))
}

/// Adaptive quadrature of `φ_r` over `[a, b]`, ignoring any closed form.
pub fn kernel_quadrature(k: &dyn Kernel, r: Radius, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    let breaks = peak_breaks(k, r, a, b);
    let mut failure = None;
    let v = integrate_with_breaks(
        |t| match k.eval(r, t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        &breaks,
        opts,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `∥φ_r∥_q` by adaptive quadrature (`q = ∞` uses the exact sup when known,
/// else a dense scan).
pub fn lq_norm(k: &dyn Kernel, r: Radius, q: f64) -> Result<f64> {
    crate::circle::grid::check_exponent(q)?;
    if q.is_infinite() {
        if let Some(s) = k.sup_norm(r) {
            return Ok(s);
        }
        let n = 1 << 16;
        let mut m = k.eval(r, 0.0)?.abs();
        for j in 0..n {
            m = m.max(k.eval(r, -PI + TAU * j as f64 / n as f64)?.abs());
        }
        return Ok(m);
    }
    let breaks = peak_breaks(k, r, -PI, PI);
    let mut failure = None;
    let v = integrate_with_breaks(
        |t| match k.eval(r, t) {
            Ok(v) => v.abs().powf(q),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        -PI,
        PI,
        &breaks,
        QuadOptions::tol(0.0, 1e-10),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(v.powf(1.0 / q))
}

/// Kernel selection as written on the command line / in run configs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum KernelSpec {
    Poisson,
    FracPoisson,
    Fejer,
    Table(PathBuf),
}

impl KernelSpec {
    pub fn build(&self) -> Result<KernelRef> {
        Ok(match self {
            KernelSpec::Poisson => Arc::new(Poisson),
            KernelSpec::FracPoisson => Arc::new(FracPoisson::new()),
            KernelSpec::Fejer => Arc::new(Fejer),
            KernelSpec::Table(p) => Arc::new(Tabulated::load(p)?),
        })
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "poisson" => Ok(KernelSpec::Poisson),
            "frac_poisson" => Ok(KernelSpec::FracPoisson),
            "fejer" => Ok(KernelSpec::Fejer),
            other => match other.strip_prefix("table:") {
                Some(p) if !p.is_empty() => Ok(KernelSpec::Table(PathBuf::from(p))),
                _ => Err(Error::invalid(format!(
                    "unknown kernel {other:?} (expected poisson, frac_poisson, fejer or table:<manifest>)"
                ))),
            },
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Poisson => f.write_str("poisson"),
            KernelSpec::FracPoisson => f.write_str("frac_poisson"),
            KernelSpec::Fejer => f.write_str("fejer"),
            KernelSpec::Table(p) => write!(f, "table:{}", p.display()),
        }
    }
}

impl TryFrom<String> for KernelSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<KernelSpec> for String {
    fn from(k: KernelSpec) -> String {
        k.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_round_trip() {
        for s in ["poisson", "frac_poisson", "fejer", "table:dir/m.csv"] {
            let k: KernelSpec = s.parse().unwrap();
            assert_eq!(k.to_string(), s);
        }
        assert!("gauss".parse::<KernelSpec>().is_err());
        assert!("table:".parse::<KernelSpec>().is_err());
    }
}
