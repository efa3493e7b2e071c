use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::number::Dyadic;
use super::quadtree::{DyadicStep2D, NodeId, QuadStore};
use super::rect::DyadicRect;
use crate::error::{Error, Result};

/// Largest staircase order handled (grids up to `2^20 × 2^20` cells).
pub const MAX_ORDER: u32 = 20;

/// Position of a `2^{−n}` cell relative to the staircase set `E(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CellKind {
    /// Corner cell of a quadrant (`F_ij(n)`), with the sign of `u` there.
    Corner(i8),
    /// In `E(n)` but not a corner.
    Staircase,
    Outside,
}

/// Staircase in one quadrant, in local cell coordinates `a, b < 2^{n−1}`:
/// `⋃_k [0, 2^{n−1−k}) × [0, 2^k)` (in cells).
fn in_staircase(n: u32, a: u64, b: u64) -> bool {
    (0..n).any(|k| a < 1u64 << (n - 1 - k) && b < 1u64 << k)
}

pub(crate) fn cell_kind(n: u32, a: u64, b: u64) -> CellKind {
    let half = 1u64 << (n - 1);
    let (i, j) = (a / half, b / half);
    let (la, lb) = (a % half, b % half);
    if la == 0 && lb == 0 {
        CellKind::Corner(if i == j { 1 } else { -1 })
    } else if in_staircase(n, la, lb) {
        CellKind::Staircase
    } else {
        CellKind::Outside
    }
}

/// Uniform kind of the square `(level, x, y)` of the `2^n` grid, if any.
pub(crate) fn region_kind(n: u32, level: u32, x: u64, y: u64) -> Option<CellKind> {
    if level == 0 {
        return (n == 0).then_some(CellKind::Staircase);
    }
    let w = 1u64 << (n - level);
    let (a0, b0) = (x * w, y * w);
    if w == 1 {
        return Some(cell_kind(n, a0, b0));
    }
    let half = 1u64 << (n - 1);
    let (la, lb) = (a0 % half, b0 % half);
    let contains_corner = la == 0 && lb == 0;
    // the staircase is a down-set in each quadrant
    let all_in = in_staircase(n, la + w - 1, lb + w - 1);
    let none_in = !in_staircase(n, la, lb);
    match (contains_corner, all_in, none_in) {
        (false, true, _) => Some(CellKind::Staircase),
        (false, _, true) => Some(CellKind::Outside),
        _ => None,
    }
}

pub(crate) fn check_order(n: u32) -> Result<()> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::invalid(format!("staircase order must lie in 1..={MAX_ORDER}, got {n}")));
    }
    Ok(())
}

/// Node built from a cell-kind map on the `2^n` grid; `map` gives the node of
/// a single cell, repeated over every cell of a uniform region.
pub(crate) fn build_from_kinds(
    store: &mut QuadStore,
    n: u32,
    map: &mut dyn FnMut(&mut QuadStore, CellKind) -> NodeId,
) -> Result<NodeId> {
    store.build(n, &mut |st, level, x, y| {
        region_kind(n, level, x, y).map(|k| {
            let cell = map(st, k);
            st.uniform(cell, n - level)
        })
    })
}

/// The `4n` representation rectangles of `E(n)` (in unit-square
/// coordinates), quadrant by quadrant.
pub fn representation_rects(n: u32) -> Vec<DyadicRect> {
    let mut out = Vec::with_capacity(4 * n as usize);
    for j in 0..2i64 {
        for i in 0..2i64 {
            for k in 0..n {
                let (m1, m2) = (k + 1, n - k);
                out.push(DyadicRect::new(
                    BigInt::from(i) * (BigInt::from(1) << k) + 1,
                    BigInt::from(j) * (BigInt::from(1) << (n - k - 1)) + 1,
                    m1,
                    m2,
                ));
            }
        }
    }
    out
}

/// `β` for order `n`: the amplitude `(n+1)2^{n−2}` of `u(·, n)`.
pub fn u_amplitude(n: u32) -> Dyadic {
    Dyadic::new(n as i64 + 1, 2 - n as i64)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EfSummary {
    pub n: u32,
    pub e_measure: Dyadic,
    pub f_measure: Dyadic,
    pub e_width_exp: u32,
    pub representation: Vec<DyadicRect>,
}

/// `E(n)`, `F(n)` as indicators at resolution `n`, plus the representation
/// rectangles of `E(n)`.
pub struct EfSets {
    pub n: u32,
    pub e: DyadicStep2D,
    pub f: DyadicStep2D,
    pub representation: Vec<DyadicRect>,
}

impl EfSets {
    pub fn summary(&self) -> EfSummary {
        EfSummary {
            n: self.n,
            e_measure: self.e.total(),
            f_measure: self.f.total(),
            e_width_exp: self.e.support_width_exp(),
            representation: self.representation.clone(),
        }
    }
}

pub fn build_e_f(n: u32) -> Result<EfSets> {
    check_order(n)?;
    let mut st = QuadStore::new();
    let e = build_from_kinds(&mut st, n, &mut |st, k| st.constant((k != CellKind::Outside) as i64))?;
    let f = build_from_kinds(&mut st, n, &mut |st, k| st.constant(matches!(k, CellKind::Corner(_)) as i64))?;
    Ok(EfSets { n, e: st.finish(e, n)?, f: st.finish(f, n)?, representation: representation_rects(n) })
}

/// `u(·, n)` on the unit square.
pub fn u_function(n: u32) -> Result<DyadicStep2D> {
    check_order(n)?;
    let mut st = QuadStore::new();
    let amp = u_amplitude(n);
    let u = build_from_kinds(&mut st, n, &mut |st, k| match k {
        CellKind::Corner(s) => st.leaf(amp.mul_int(s as i64)),
        _ => st.constant(0),
    })?;
    st.finish(u, n)
}

/// `v`: `+1` on the lower-left and upper-right quarters, `−1` on the others.
pub fn v_function() -> DyadicStep2D {
    let mut st = QuadStore::new();
    let v = v_node(&mut st, &Dyadic::one());
    st.finish(v, 1).expect("depth 1")
}

pub(crate) fn v_node(st: &mut QuadStore, scale: &Dyadic) -> NodeId {
    let (p, m) = (st.leaf(scale.clone()), st.leaf(-scale));
    st.split([p, m, m, p])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Oracle straight from the definition: `E_ij(n)` as a union of the
    /// rectangles `[i/2, i/2 + 2^{−k−1}) × [j/2, j/2 + 2^{−(n−k)})`.
    fn in_e_direct(n: u32, a: u64, b: u64) -> bool {
        // cell lower-left corner in units of 2^{−n}
        let half = 1u64 << (n - 1);
        let (i, j) = (a / half, b / half);
        (0..n).any(|k| {
            let x_hi = i * half + (1u64 << (n - k - 1));
            let y_hi = j * half + (1u64 << k);
            a >= i * half && a < x_hi && b >= j * half && b < y_hi
        })
    }

    #[test]
    fn measures_widths_and_corners() {
        for n in 1..=7u32 {
            let s = build_e_f(n).unwrap();
            // |E(n)| = (n+1)/2^n, |F(n)| = 4^{1−n}, wd(E(n)) = 2^{−n}
            assert_eq!(s.e.total(), Dyadic::new(n as i64 + 1, n as i64));
            assert_eq!(s.f.total(), Dyadic::pow2(2 - 2 * n as i64));
            if n > 1 {
                assert_eq!(s.e.support_width_exp(), n);
            }
            let cells = 1u64 << n;
            for a in 0..cells {
                for b in 0..cells {
                    let p = DyadicRect::new(a as i64 + 1, b as i64 + 1, n, n).corner();
                    assert_eq!(s.e.value_at(&p) == Dyadic::one(), in_e_direct(n, a, b), "n={n} cell ({a},{b})");
                }
            }
            // representation rectangles lie in E and each averages (n+1)/2 of |u|
            let u = u_function(n).unwrap();
            assert!(u.marginals_vanish());
            assert_eq!(u.l1_norm(), s.e.total());
            for r in &s.representation {
                assert_eq!(s.e.average(r).unwrap(), Dyadic::one());
                assert_eq!(u.average(r).unwrap().abs(), Dyadic::new(n as i64 + 1, 1));
            }
        }
    }

    #[test]
    fn v_quarters() {
        let v = v_function();
        assert!(v.marginals_vanish());
        assert_eq!(v.l1_norm(), Dyadic::one());
        assert_eq!(v.average(&DyadicRect::square(1, 1, 1)).unwrap(), Dyadic::one());
        assert_eq!(v.average(&DyadicRect::square(2, 1, 1)).unwrap(), Dyadic::from_int(-1));
    }
}
