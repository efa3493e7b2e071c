use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circle::ArcSet;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombPhase {
    /// Teeth centred at `2πj/n`.
    EvenCenters,
    /// Teeth centred at `(2j+1)π/n`.
    OddCenters,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombSpec {
    pub n: u64,
    pub delta: f64,
    pub phase: CombPhase,
}

/// `n` teeth of length `2πδ/n` each, total measure `2πδ`.
pub fn comb_set(spec: CombSpec) -> Result<ArcSet> {
    let CombSpec { n, delta, phase } = spec;
    if n == 0 {
        return Err(Error::invalid("comb needs n ≥ 1 teeth"));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::invalid(format!("comb width δ must lie in (0, 1/2), got {delta}")));
    }
    let offset = match phase {
        CombPhase::EvenCenters => 0.0,
        CombPhase::OddCenters => 1.0,
    };
    let nf = n as f64;
    Ok(ArcSet::from_arcs((0..n).map(|j| {
        let c = 2.0 * j as f64 + offset;
        (PI * (c - delta) / nf, PI * (c + delta) / nf)
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    #[test]
    fn single_tooth() {
        let s = comb_set(CombSpec { n: 1, delta: 0.25, phase: CombPhase::EvenCenters }).unwrap();
        assert!((s.measure() - PI / 2.0).abs() < 1e-15);
        assert!(s.contains(0.0) && s.contains(-PI / 4.0 + 1e-9) && !s.contains(PI / 4.0 + 1e-9));
        assert_eq!(s.len(), 2); // split at 0
        assert_eq!(s.runs().len(), 1);
    }

    #[test]
    fn rejects_bad_width() {
        for d in [0.0, 0.5, 0.7, -0.1] {
            assert!(comb_set(CombSpec { n: 3, delta: d, phase: CombPhase::OddCenters }).is_err());
        }
        assert!(comb_set(CombSpec { n: 0, delta: 0.1, phase: CombPhase::OddCenters }).is_err());
    }

    proptest! {
        #[test]
        fn teeth_and_measure(n in 1u64..500, delta in 1e-6f64..0.4999, odd in any::<bool>()) {
            let phase = if odd { CombPhase::OddCenters } else { CombPhase::EvenCenters };
            let s = comb_set(CombSpec { n, delta, phase }).unwrap();
            prop_assert_eq!(s.runs().len() as u64, n);
            prop_assert!((s.measure() - TAU * delta).abs() <= 1e-12);
            for &(a, b) in &s.runs() {
                let len = if b >= a { b - a } else { b + TAU - a };
                prop_assert!((len - TAU * delta / n as f64).abs() <= 1e-12);
            }
        }

        #[test]
        fn phases_are_rotations(n in 1u64..200, delta in 1e-4f64..0.49) {
            let even = comb_set(CombSpec { n, delta, phase: CombPhase::EvenCenters }).unwrap();
            let odd = comb_set(CombSpec { n, delta, phase: CombPhase::OddCenters }).unwrap();
            let moved = even.rotate(PI / n as f64);
            prop_assert!(moved.symmetric_difference(&odd).measure() <= 1e-12);
        }
    }
}
