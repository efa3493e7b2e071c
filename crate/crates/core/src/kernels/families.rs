use std::collections::{BTreeMap, HashMap};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use super::{Kernel, Radius};
use crate::circle::angle::reduce_signed;
use crate::circle::grid::GridFunction;
use crate::circle::quadrature::{integrate_with_breaks, QuadOptions};
use crate::error::{Error, Result};

/// Unnormalized Poisson kernel `(1 − r²)/(1 − 2r cos t + r²)` written in ε so
/// that it stays accurate for ε far below machine epsilon.
fn poisson_raw(eps: f64, t: f64) -> f64 {
    let r = 1.0 - eps;
    let s = (0.5 * t).sin();
    eps * (2.0 - eps) / (eps * eps + 4.0 * r * s * s)
}

/// `atan(u) − atan(v)` without cancellation when both are large and close.
fn atan_diff(u: f64, v: f64) -> f64 {
    let p = u * v;
    if p > -1.0 && p.is_finite() {
        ((u - v) / (1.0 + p)).atan()
    } else {
        u.atan() - v.atan()
    }
}

/// Normalized Poisson mass of `[a, b] ⊂ [−π, π]`.
fn poisson_piece(eps: f64, a: f64, b: f64) -> f64 {
    let amp = (2.0 - eps) / eps;
    atan_diff(amp * (0.5 * b).tan(), amp * (0.5 * a).tan()) / PI
}

/// `∫_a^b P_r/(2π)` for any `a ≤ b`, via the antiderivative
/// `(1/π) atan(((1+r)/(1−r)) tan(t/2))` glued across the branch cuts at ±π.
pub fn poisson_mass(eps: f64, a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    let len = b - a;
    let whole = (len / TAU).floor();
    let rest = len - whole * TAU;
    let a0 = reduce_signed(a);
    let b0 = a0 + rest;
    let part = if b0 <= PI {
        poisson_piece(eps, a0, b0)
    } else {
        poisson_piece(eps, a0, PI) + poisson_piece(eps, -PI, b0 - TAU)
    };
    whole + part
}

/// Normalized Poisson kernel `P_r/(2π)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Poisson;

impl Kernel for Poisson {
    fn name(&self) -> String {
        "poisson".into()
    }

    fn eval(&self, r: Radius, t: f64) -> Result<f64> {
        Ok(poisson_raw(r.eps(), t) / TAU)
    }

    fn partial_integral(&self, r: Radius, a: f64, b: f64) -> Option<f64> {
        Some(poisson_mass(r.eps(), a, b))
    }

    fn sup_norm(&self, r: Radius) -> Option<f64> {
        Some((2.0 - r.eps()) / (TAU * r.eps()))
    }

    fn is_harmonic_extension(&self) -> bool {
        true
    }

    fn is_nonnegative(&self) -> bool {
        true
    }
}

/// `√P_r / c(r)` with `c(r) = ∫_𝕋 √P_r` computed once per radius.
pub struct FracPoisson {
    cache: Mutex<HashMap<u64, f64>>,
}

impl fmt::Debug for FracPoisson {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FracPoisson")
    }
}

impl Default for FracPoisson {
    fn default() -> Self {
        Self::new()
    }
}

impl FracPoisson {
    pub fn new() -> Self {
        Self { cache: Mutex::new(HashMap::new()) }
    }

    /// `c(r) = ∫_𝕋 [P_r(t)]^{1/2} dt`.
    pub fn normalizer(&self, r: Radius) -> Result<f64> {
        let key = r.eps().to_bits();
        if let Some(&c) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(c);
        }
        let eps = r.eps();
        let mut breaks = vec![0.0];
        let mut s = eps;
        while s < PI {
            breaks.push(s);
            s *= 4.0;
        }
        // even integrand: integrate over [0, π] and double
        let half = integrate_with_breaks(
            |t| poisson_raw(eps, t).sqrt(),
            0.0,
            PI,
            &breaks,
            QuadOptions::tol(0.0, 1e-12),
        )?;
        let c = 2.0 * half;
        self.cache.lock().expect("cache poisoned").insert(key, c);
        Ok(c)
    }
}

impl Kernel for FracPoisson {
    fn name(&self) -> String {
        "frac_poisson".into()
    }

    fn eval(&self, r: Radius, t: f64) -> Result<f64> {
        Ok(poisson_raw(r.eps(), t).sqrt() / self.normalizer(r)?)
    }

    fn sup_norm(&self, r: Radius) -> Option<f64> {
        let c = self.normalizer(r).ok()?;
        Some(((2.0 - r.eps()) / r.eps()).sqrt() / c)
    }

    fn is_nonnegative(&self) -> bool {
        true
    }
}

/// Radius attached to the n-th Fejér mean: `r_n = 1 − 1/(n+1)`.
pub fn fejer_radius(n: u64) -> Result<Radius> {
    Radius::from_eps(1.0 / (n as f64 + 1.0))
}

fn fejer_order(r: Radius) -> u64 {
    ((1.0 / r.eps()).round() as u64).saturating_sub(1)
}

/// `K_n(t) = (1/(2π(n+1))) (sin((n+1)t/2) / sin(t/2))²`.
pub fn fejer_value(n: u64, t: f64) -> f64 {
    let m = n as f64 + 1.0;
    let u = 0.5 * reduce_signed(t);
    let s = u.sin();
    let ratio = if s.abs() < 1e-9 {
        // sin(mu)/sin(u) → m (1 − (m² − 1) u²/6)
        m * (1.0 - (m * m - 1.0) * u * u / 6.0)
    } else {
        (m * u).sin() / s
    };
    ratio * ratio / (TAU * m)
}

/// Continuous antiderivative `(1/2π)[t + 2 Σ_{k≤n} (1 − k/(n+1)) sin(kt)/k]`.
fn fejer_antiderivative(n: u64, t: f64) -> f64 {
    let m = n as f64 + 1.0;
    let (s1, c1) = t.sin_cos();
    let (mut s, mut c) = (s1, c1);
    let mut acc = 0.0;
    for k in 1..=n {
        let kf = k as f64;
        acc += (1.0 - kf / m) * s / kf;
        let next_s = s * c1 + c * s1;
        c = c * c1 - s * s1;
        s = next_s;
        if k % 64 == 0 {
            // re-anchor the rotation to keep drift negligible
            let (ss, cc) = ((kf + 1.0) * t).sin_cos();
            s = ss;
            c = cc;
        }
    }
    (t + 2.0 * acc) / TAU
}

/// Fejér kernel, indexed through `r_n = 1 − 1/(n+1)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Fejer;

impl Fejer {
    pub fn order(r: Radius) -> u64 {
        fejer_order(r)
    }
}

impl Kernel for Fejer {
    fn name(&self) -> String {
        "fejer".into()
    }

    fn eval(&self, r: Radius, t: f64) -> Result<f64> {
        Ok(fejer_value(fejer_order(r), t))
    }

    fn partial_integral(&self, r: Radius, a: f64, b: f64) -> Option<f64> {
        let n = fejer_order(r);
        // shift so that a lies in [−π, π): keeps the trig arguments small
        let shift = a - reduce_signed(a);
        Some(fejer_antiderivative(n, b - shift) - fejer_antiderivative(n, a - shift))
    }

    fn peak_width(&self, r: Radius) -> f64 {
        TAU / (fejer_order(r) as f64 + 1.0)
    }

    fn sup_norm(&self, r: Radius) -> Option<f64> {
        Some((fejer_order(r) as f64 + 1.0) / TAU)
    }

    fn is_nonnegative(&self) -> bool {
        true
    }
}

/// Kernel given by sampled grids, one per radius, listed in a manifest CSV
/// with header `r,path` (paths relative to the manifest).
#[derive(Clone, Debug)]
pub struct Tabulated {
    source: PathBuf,
    tables: Vec<(f64, GridFunction)>,
}

impl Tabulated {
    pub fn load(manifest: &Path) -> Result<Self> {
        let dir = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut rd = csv::Reader::from_reader(File::open(manifest)?);
        let h = rd.headers()?.clone();
        if h.len() != 2 || h[0].trim() != "r" || h[1].trim() != "path" {
            return Err(Error::Format(format!("kernel manifest needs header r,path; got {h:?}")));
        }
        let mut tables = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let r: f64 = rec[0].trim().parse().map_err(|e| Error::Format(format!("bad r: {e}")))?;
            let eps = Radius::new(r)?.eps();
            let grid = GridFunction::read_csv(File::open(dir.join(rec[1].trim()))?)?;
            tables.push((eps, grid));
        }
        Self::from_tables(manifest.to_path_buf(), tables)
    }

    pub fn from_tables(source: PathBuf, mut tables: Vec<(f64, GridFunction)>) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::invalid("tabulated kernel has no tables"));
        }
        tables.sort_by(|a, b| b.0.total_cmp(&a.0));
        Ok(Self { source, tables })
    }

    pub fn radii(&self) -> Vec<Radius> {
        self.tables.iter().filter_map(|(e, _)| Radius::from_eps(*e).ok()).collect()
    }

    fn table(&self, r: Radius) -> Result<&GridFunction> {
        self.tables
            .iter()
            .find(|(e, _)| (e - r.eps()).abs() <= 1e-9 * e)
            .map(|(_, g)| g)
            .ok_or_else(|| Error::invalid(format!("radius r = {} is not tabulated in {}", r.r(), self.source.display())))
    }
}

impl Kernel for Tabulated {
    fn name(&self) -> String {
        format!("table:{}", self.source.display())
    }

    fn eval(&self, r: Radius, t: f64) -> Result<f64> {
        Ok(self.table(r)?.value_at(t))
    }

    fn peak_width(&self, r: Radius) -> f64 {
        self.table(r).map(|g| g.step()).unwrap_or(r.eps())
    }
}

type KernelFn = dyn Fn(Radius, f64) -> f64 + Send + Sync;

/// Kernel from a closure; used for non-examples and experiments.
#[derive(Clone)]
pub struct Custom {
    name: String,
    params: BTreeMap<String, f64>,
    f: Arc<KernelFn>,
}

impl fmt::Debug for Custom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Custom({})", self.name)
    }
}

impl Custom {
    pub fn new(name: impl Into<String>, f: impl Fn(Radius, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), params: BTreeMap::new(), f: Arc::new(f) }
    }

    pub fn with_param(mut self, key: &str, v: f64) -> Self {
        self.params.insert(key.into(), v);
        self
    }

    /// `φ_r ≡ 1/(2π)`: integrates to 1 but never concentrates.
    pub fn constant() -> Self {
        Self::new("constant", |_, _| 1.0 / TAU)
    }

    /// `−P_r/(2π)`.
    pub fn negated_poisson() -> Self {
        Self::new("negated_poisson", |r, t| -poisson_raw(r.eps(), t) / TAU)
    }
}

impl Kernel for Custom {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn params(&self) -> BTreeMap<String, f64> {
        self.params.clone()
    }

    fn eval(&self, r: Radius, t: f64) -> Result<f64> {
        Ok((self.f)(r, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{kernel_integral, kernel_quadrature};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Complete elliptic integral via the arithmetic–geometric mean, giving an
    /// independent closed form `c(r) = 2π √(ε/(2−ε)) / AGM(1, ε/(2−ε))`.
    fn normalizer_by_agm(eps: f64) -> f64 {
        let kp = eps / (2.0 - eps);
        let (mut a, mut g) = (1.0f64, kp);
        for _ in 0..64 {
            let (na, ng) = (0.5 * (a + g), (a * g).sqrt());
            a = na;
            g = ng;
        }
        TAU * kp.sqrt() / a
    }

    #[test]
    fn poisson_values() {
        let r = Radius::new(0.5).unwrap();
        assert!((Poisson.eval(r, 0.0).unwrap() - 3.0 / TAU).abs() < 1e-15);
        assert!((Poisson.eval(r, PI).unwrap() - 1.0 / (6.0 * PI)).abs() < 1e-15);
        for k in [1, 5, 20, 60, 100] {
            let r = Radius::dyadic(k);
            let total = kernel_integral(&Poisson, r, -PI, PI).unwrap();
            assert!((total - 1.0).abs() < 1e-9, "k = {k}: {total}");
        }
    }

    #[test]
    fn poisson_closed_form_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let r = Radius::from_eps(10f64.powf(rng.gen_range(-6.0..-0.1))).unwrap();
            let a = rng.gen_range(-10.0..10.0);
            let b = a + rng.gen_range(0.0..8.0);
            let closed = poisson_mass(r.eps(), a, b);
            let quad = kernel_quadrature(&Poisson, r, a, b, QuadOptions::tol(1e-14, 1e-12)).unwrap();
            assert!((closed - quad).abs() < 1e-8, "r = {:?} [{a}, {b}]: {closed} vs {quad}", r);
        }
    }

    #[test]
    fn poisson_tail_mass_has_relative_accuracy() {
        // far from the peak the mass is ≈ (ε/2π)·(cot(a/2) − cot(b/2))
        let eps = 1e-20;
        let (a, b) = (1.0f64, 1.1f64);
        let approx = eps / TAU * (1.0 / (0.5 * a).tan() - 1.0 / (0.5 * b).tan());
        let got = poisson_mass(eps, a, b);
        assert!(((got - approx) / approx).abs() < 1e-9);
    }

    #[test]
    fn frac_poisson_normalization() {
        let k = FracPoisson::new();
        for eps in [0.5, 1e-2, 1e-5, 1e-9] {
            let r = Radius::from_eps(eps).unwrap();
            let c = k.normalizer(r).unwrap();
            let oracle = normalizer_by_agm(eps);
            assert!(((c - oracle) / oracle).abs() < 1e-9, "eps {eps}: {c} vs {oracle}");
            let total = kernel_integral(&k, r, -PI, PI).unwrap();
            assert!((total - 1.0).abs() < 1e-8);
        }
        // r → 0: √P_0 ≡ 1 so the kernel approaches 1/(2π)
        let near_zero = Radius::new(1e-9).unwrap();
        assert!((k.eval(near_zero, 2.0).unwrap() - 1.0 / TAU).abs() < 1e-8);
        let r = Radius::new(0.99).unwrap();
        let ratio = k.normalizer(r).unwrap() / (r.eps().sqrt() * r.log_inv_eps());
        assert!((0.1..=10.0).contains(&ratio));
    }

    #[test]
    fn fejer_values() {
        for t in [0.0, 0.3, 2.0, PI] {
            assert!((fejer_value(0, t) - 1.0 / TAU).abs() < 1e-15);
        }
        assert!((fejer_value(9, 0.0) - 10.0 / TAU).abs() < 1e-13);
        assert!((fejer_value(9, 1e-12) - 10.0 / TAU).abs() < 1e-12);
        for n in [1u64, 8, 100, 4096] {
            let r = fejer_radius(n).unwrap();
            assert_eq!(Fejer::order(r), n);
            let total = Fejer.partial_integral(r, -PI, PI).unwrap();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn fejer_closed_form_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.gen_range(1..300);
            let r = fejer_radius(n).unwrap();
            let a = rng.gen_range(-7.0..7.0);
            let b = a + rng.gen_range(0.0..5.0);
            let closed = Fejer.partial_integral(r, a, b).unwrap();
            let quad = kernel_quadrature(&Fejer, r, a, b, QuadOptions::tol(1e-14, 1e-12)).unwrap();
            assert!((closed - quad).abs() < 1e-8, "n = {n} [{a}, {b}]");
        }
    }

    #[test]
    fn tabulated_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = Radius::new(0.9).unwrap();
        let g = GridFunction::from_fn(512, |t| Poisson.eval(r, t).unwrap()).unwrap();
        g.write_csv(File::create(dir.path().join("p09.csv")).unwrap()).unwrap();
        std::fs::write(dir.path().join("m.csv"), "r,path\n0.9,p09.csv\n").unwrap();
        let k = Tabulated::load(&dir.path().join("m.csv")).unwrap();
        assert_eq!(k.eval(r, g.theta(3)).unwrap(), g.samples()[3]);
        assert!(k.eval(Radius::new(0.5).unwrap(), 0.0).is_err());
    }

    proptest! {
        #[test]
        fn kernels_are_periodic_and_even(t in -PI..PI, e in 1e-6f64..0.9) {
            let r = Radius::from_eps(e).unwrap();
            let p = Poisson.eval(r, t).unwrap();
            prop_assert!(p > 0.0);
            prop_assert!((p - Poisson.eval(r, t + TAU).unwrap()).abs() <= 1e-9 * p);
            prop_assert!((p - Poisson.eval(r, -t).unwrap()).abs() <= 1e-12 * p);
            let f = fejer_value(17, t);
            prop_assert!((f - fejer_value(17, t + 3.0 * TAU)).abs() < 1e-12);
        }
    }
}
