use super::signal::CircleSignal;
use crate::error::{Error, Result};
use crate::kernels::{fejer_radius, Fejer, Kernel, Radius};
use crate::regions::ApproachCurve;

/// `max − min` of `Φ_r(x + λ(r), f)` over the radius window, per sample `x`.
pub fn curve_oscillation(
    k: &dyn Kernel,
    curve: &ApproachCurve,
    f: &dyn CircleSignal,
    xs: &[f64],
    radii: &[Radius],
) -> Result<Vec<f64>> {
    if radii.is_empty() {
        return Err(Error::invalid("radius window is empty"));
    }
    let lambdas = radii.iter().map(|&r| curve.eval(r)).collect::<Result<Vec<_>>>()?;
    xs.iter()
        .map(|&x| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (&r, &l) in radii.iter().zip(&lambdas) {
                let v = f.convolve_at(k, r, x + l)?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            Ok(hi - lo)
        })
        .collect()
}

/// `|σ_n(x + c/n, f) − f(x)|` for each n.
pub fn fejer_shift_check(f: &dyn CircleSignal, x: f64, orders: &[u64], c: f64) -> Result<Vec<f64>> {
    let fx = f.value_at(x);
    orders
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::invalid("Fejér order must be ≥ 1 here (shift c/n)"));
            }
            let r = fejer_radius(n)?;
            Ok((f.convolve_at(&Fejer, r, x + c / n as f64)? - fx).abs())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::arcs::ArcSet;
    use crate::circle::grid::GridFunction;
    use crate::kernels::Poisson;
    use std::f64::consts::PI;

    #[test]
    fn oscillation_examples() {
        let one = GridFunction::constant(1 << 10, 1.0).unwrap();
        let radii: Vec<Radius> = (0..=20).map(|i| Radius::from_eps(1e-2 * 10f64.powf(-i as f64 / 10.0)).unwrap()).collect();
        let c = ApproachCurve::nontangential(1.0);
        let xs = [0.0, 1.0, 4.0];
        let o = curve_oscillation(&Poisson, &c, &one, &xs, &radii).unwrap();
        assert!(o.iter().all(|&v| v <= 1e-4));
        let half = ArcSet::arc(0.0, PI);
        let o = curve_oscillation(&Poisson, &c, &half, &[PI / 2.0, 1.0], &radii).unwrap();
        assert!(o.iter().all(|&v| v <= 0.05));
    }

    #[test]
    fn fejer_shift_examples() {
        let one = GridFunction::constant(256, 1.0).unwrap();
        let e = fejer_shift_check(&one, 0.3, &[1, 10, 100], 1.0).unwrap();
        assert!(e.iter().all(|&v| v < 1e-10));
        // one harmonic: σ_n cos = (n/(n+1)) cos; the step reading of cos on
        // N = 2^14 cells perturbs it by O(h²)
        let n_grid = 1 << 14;
        let cos = GridFunction::from_fn(n_grid, f64::cos).unwrap();
        let x = cos.theta(1000);
        let orders = [1u64, 4, 16, 64];
        let e = fejer_shift_check(&cos, x, &orders, 0.0).unwrap();
        for (&n, err) in orders.iter().zip(e) {
            let oracle = x.cos().abs() / (n as f64 + 1.0);
            assert!((err - oracle).abs() < 1e-8, "n = {n}: {err} vs {oracle}");
        }
        let step = ArcSet::arc(0.0, PI);
        let e = fejer_shift_check(&step, PI / 2.0, &[4096], 1.0).unwrap();
        assert!(e[0] <= 0.05);
    }
}
