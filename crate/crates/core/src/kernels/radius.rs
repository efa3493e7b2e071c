use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A radius `r ∈ (0, 1)` stored through `ε = 1 − r`, so radii far closer to 1
/// than `f64` can express directly (ε = 2⁻¹⁰⁰, say) stay distinct.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Radius {
    eps: f64,
}

impl Radius {
    pub fn from_eps(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps < 1.0 {
            Ok(Self { eps })
        } else {
            Err(Error::invalid(format!("radius must lie in (0, 1); got 1 − r = {eps}")))
        }
    }

    pub fn new(r: f64) -> Result<Self> {
        if r > 0.0 && r < 1.0 {
            Self::from_eps(1.0 - r)
        } else {
            Err(Error::invalid(format!("radius must lie in (0, 1), got {r}")))
        }
    }

    /// `r = 1 − 2⁻ᵏ`.
    pub fn dyadic(k: u32) -> Self {
        Self { eps: 2f64.powi(-(k as i32)) }
    }

    pub fn eps(self) -> f64 {
        self.eps
    }

    pub fn r(self) -> f64 {
        1.0 - self.eps
    }

    /// `log(1/(1 − r))`.
    pub fn log_inv_eps(self) -> f64 {
        -self.eps.ln()
    }
}

/// Increasing radii `1 − 2⁻ᵏ`, `k = k_min..=k_max`.
pub fn dyadic_sequence(k_min: u32, k_max: u32) -> Vec<Radius> {
    (k_min..=k_max).map(Radius::dyadic).collect()
}

/// Increasing radii `1 − 10⁻ᵏ`.
pub fn decimal_sequence(k_min: i32, k_max: i32) -> Vec<Radius> {
    (k_min..=k_max).map(|k| Radius { eps: 10f64.powi(-k) }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction() {
        assert!(Radius::new(1.0).is_err());
        assert!(Radius::new(0.0).is_err());
        assert_eq!(Radius::new(0.75).unwrap().eps(), 0.25);
        let deep = Radius::dyadic(100);
        assert!(deep.eps() > 0.0 && deep.r() == 1.0);
        let s = dyadic_sequence(1, 12);
        assert!(s.windows(2).all(|w| w[0].eps() > w[1].eps()));
    }
}
