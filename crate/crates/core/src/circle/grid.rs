use std::f64::consts::TAU;
use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::angle::reduce;
use super::arcs::{fmt_f64, parse_f64, ArcSet};
use crate::error::{Error, Result};

/// Samples of a periodic function at `θ_k = 2πk/N`.
///
/// Wherever a step-function reading is needed, sample k is the value on the
/// centred cell `[θ_k − h/2, θ_k + h/2)`, `h = 2π/N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampled<T> {
    samples: Vec<T>,
}

pub type GridFunction = Sampled<f64>;
pub type ComplexGridFunction = Sampled<Complex64>;

impl<T: Copy> Sampled<T> {
    pub fn new(samples: Vec<T>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid(format!("grid needs N ≥ 2 samples, got {}", samples.len())));
        }
        Ok(Self { samples })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(f64) -> T) -> Result<Self> {
        let h = TAU / n as f64;
        Self::new((0..n).map(|k| f(k as f64 * h)).collect())
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn step(&self) -> f64 {
        TAU / self.samples.len() as f64
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.step()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    /// Index of the cell containing `x`.
    pub fn cell_of(&self, x: f64) -> usize {
        let n = self.samples.len();
        ((reduce(x) / self.step()).round() as usize) % n
    }

    /// Step-function value at an arbitrary point.
    pub fn value_at(&self, x: f64) -> T {
        self.samples[self.cell_of(x)]
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Sampled<U> {
        Sampled { samples: self.samples.iter().map(|&v| f(v)).collect() }
    }
}

/// Norm exponent: a real `p ≥ 1` or `∞`.
pub fn check_exponent(p: f64) -> Result<()> {
    if p >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("norm exponent must be ≥ 1 (or ∞), got {p}")))
    }
}

impl GridFunction {
    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn indicator(set: &ArcSet, n: usize) -> Result<Self> {
        Self::from_fn(n, |t| if set.contains(t) { 1.0 } else { 0.0 })
    }

    /// Midpoint rule `(2π/N)·Σ samples`.
    pub fn integrate(&self) -> f64 {
        self.step() * self.samples.iter().sum::<f64>()
    }

    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        if p.is_infinite() {
            return Ok(self.samples.iter().fold(0.0, |m, v| m.max(v.abs())));
        }
        let s: f64 = self.samples.iter().map(|v| v.abs().powf(p)).sum();
        Ok((self.step() * s).powf(1.0 / p))
    }

    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    /// Exact integral of the step reading of `self` over `[a, b]`, `a ≤ b`.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        debug_assert!(a <= b);
        let h = self.step();
        let n = self.samples.len() as i64;
        // cell j covers [(j − ½)h, (j + ½)h)
        let first = (a / h + 0.5).floor() as i64;
        let last = (b / h + 0.5).floor() as i64;
        let mut total = 0.0;
        for j in first..=last {
            let lo = ((j as f64 - 0.5) * h).max(a);
            let hi = ((j as f64 + 0.5) * h).min(b);
            if hi > lo {
                total += (hi - lo) * self.samples[j.rem_euclid(n) as usize];
            }
        }
        total
    }

    /// `(1/2h) ∫_{x−h}^{x+h} |f(t) − f(x)| dt` for the step reading of `f`.
    pub fn lebesgue_defect(&self, x: f64, h: f64) -> Result<f64> {
        if !(h > 0.0 && h <= std::f64::consts::PI) {
            return Err(Error::invalid(format!("window half-width must lie in (0, π], got {h}")));
        }
        let fx = self.value_at(x);
        let dev = self.map(|v| (v - fx).abs());
        let x = reduce(x);
        Ok(dev.integral_between(x - h, x + h) / (2.0 * h))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["theta", "value"])?;
        for (k, v) in self.samples.iter().enumerate() {
            wr.write_record([fmt_f64(self.theta(k)), fmt_f64(*v)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let rows = read_rows(r, &["theta", "value"])?;
        check_thetas(&rows)?;
        Self::new(rows.iter().map(|r| r[1]).collect())
    }
}

impl ComplexGridFunction {
    /// Largest `| |z| − 1 |` over the samples.
    pub fn unimodularity_drift(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, z| m.max((z.norm() - 1.0).abs()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["theta", "re", "im"])?;
        for (k, z) in self.samples.iter().enumerate() {
            wr.write_record([fmt_f64(self.theta(k)), fmt_f64(z.re), fmt_f64(z.im)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let rows = read_rows(r, &["theta", "re", "im"])?;
        check_thetas(&rows)?;
        Self::new(rows.iter().map(|r| Complex64::new(r[1], r[2])).collect())
    }
}

fn read_rows<R: Read>(r: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::Reader::from_reader(r);
    let got = rd.headers()?.clone();
    if got.iter().map(str::trim).ne(header.iter().copied()) {
        return Err(Error::Format(format!("expected header {}, got {:?}", header.join(","), got)));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        rows.push(rec.iter().map(parse_f64).collect::<Result<Vec<_>>>()?);
    }
    Ok(rows)
}

fn check_thetas(rows: &[Vec<f64>]) -> Result<()> {
    let n = rows.len();
    let h = TAU / n.max(1) as f64;
    for (k, r) in rows.iter().enumerate() {
        if (r[0] - k as f64 * h).abs() > 1e-9 * (1.0 + r[0].abs()) {
            return Err(Error::Format(format!("row {k}: theta {} is not 2πk/N for N = {n}", r[0])));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn integrals() {
        let one = GridFunction::constant(37, 1.0).unwrap();
        assert!((one.integrate() - TAU).abs() < 1e-12);
        let half = GridFunction::indicator(&ArcSet::arc(0.0, PI), 1 << 10).unwrap();
        assert_eq!(half.integrate(), PI);
        let c = GridFunction::from_fn(1024, f64::cos).unwrap();
        assert!(c.integrate().abs() < 1e-12);
        assert!(GridFunction::new(vec![1.0]).is_err());
    }

    #[test]
    fn norms() {
        let one = GridFunction::constant(64, 1.0).unwrap();
        assert!((one.lp_norm(2.0).unwrap() - TAU.sqrt()).abs() < 1e-12);
        let arc = GridFunction::indicator(&ArcSet::arc(0.0, TAU / 8.0), 64).unwrap();
        assert!((arc.lp_norm(1.0).unwrap() - TAU / 8.0).abs() < 1e-12);
        let c = GridFunction::constant(8, -3.5).unwrap();
        assert_eq!(c.lp_norm(f64::INFINITY).unwrap(), 3.5);
        assert!(c.lp_norm(0.5).is_err());
    }

    #[test]
    fn lebesgue_defect_examples() {
        let n = 1 << 14;
        let c = GridFunction::constant(n, 2.0).unwrap();
        assert_eq!(c.lebesgue_defect(1.0, 0.3).unwrap(), 0.0);
        let f = GridFunction::indicator(&ArcSet::arc(0.0, PI), n).unwrap();
        assert_eq!(f.lebesgue_defect(PI / 2.0, 0.1).unwrap(), 0.0);
        // oracle: direct grid sum of |f(θ_k) − f(0)| over θ_k in the window
        let h = 0.1;
        let hits: Vec<usize> =
            (0..n).filter(|&k| super::super::angle::distance(f.theta(k), 0.0) <= h).collect();
        let oracle = hits.iter().map(|&k| (f.samples()[k] - 1.0).abs()).sum::<f64>() / hits.len() as f64;
        let d = f.lebesgue_defect(0.0, h).unwrap();
        assert!((d - oracle).abs() < 2.0 / hits.len() as f64);
        assert!((d - 0.5).abs() < 1e-3);
        assert!(f.lebesgue_defect(0.0, 4.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let f = GridFunction::from_fn(16, |t| t.sin() * 3.0).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        assert_eq!(GridFunction::read_csv(&buf[..]).unwrap(), f);
        let z = ComplexGridFunction::from_fn(8, |t| Complex64::from_polar(1.0, t)).unwrap();
        let mut buf = Vec::new();
        z.write_csv(&mut buf).unwrap();
        assert_eq!(ComplexGridFunction::read_csv(&buf[..]).unwrap(), z);
        assert!(z.unimodularity_drift() < 1e-15);
        assert!(GridFunction::read_csv("theta,v\n0,1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn scaled_norms_increase_with_p(vals in prop::collection::vec(-1.0f64..1.0, 4..64)) {
            let f = GridFunction::new(vals).unwrap();
            let mut prev = 0.0;
            for p in [1.0, 1.5, 2.0, 3.0, 7.0, f64::INFINITY] {
                let scaled = f.lp_norm(p).unwrap() / TAU.powf(1.0 / p);
                prop_assert!(scaled >= prev * (1.0 - 1e-12));
                prev = scaled;
            }
        }

        #[test]
        fn aligned_steps_integrate_exactly(k in 1usize..64, j in 0usize..64) {
            let n = 256;
            let h = TAU / n as f64;
            // arc from cell boundary to cell boundary, read on the centred cells
            let set = ArcSet::arc((j as f64 - 0.5) * h + 1e-9, k as f64 * h);
            let f = GridFunction::indicator(&set, n).unwrap();
            prop_assert!((f.integrate() - k as f64 * h).abs() < 1e-12);
        }
    }
}
