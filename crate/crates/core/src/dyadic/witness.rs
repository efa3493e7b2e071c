use std::collections::HashMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::number::Dyadic;
use super::quadtree::{DyadicStep2D, Node, NodeId, QuadStore};
use super::rect::DyadicRect;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// A representation rectangle of a staircase copy `E_ω(n)`.
    Staircase,
    /// A quarter of a leftover square.
    Quarter,
}

/// Witness layout inside one self-similar square: rectangles whose averages
/// certify the lower bound, and sub-cells that carry the next pattern.
#[derive(Clone, Debug)]
pub(crate) struct WitnessPattern {
    pub rects: Vec<(DyadicRect, WitnessKind)>,
    pub child_level: u32,
    pub children: Vec<(u64, u64)>,
    pub next: Option<usize>,
}

impl WitnessPattern {
    /// Whether the rectangles and child cells cover the square (exactly, as
    /// sets).
    pub fn covers_square(&self) -> bool {
        let mut st = QuadStore::new();
        let mut acc = st.constant(0);
        for (r, _) in &self.rects {
            let ind = st.rect_indicator(r).expect("local rectangles lie in the unit square");
            acc = st.add(acc, ind);
        }
        for &(x, y) in &self.children {
            let cell = DyadicRect::square(x as i64 + 1, y as i64 + 1, self.child_level);
            let ind = st.rect_indicator(&cell).expect("cells lie in the unit square");
            acc = st.add(acc, ind);
        }
        let covered = st.map_leaves(acc, &mut |v| if v.is_zero() { Dyadic::zero() } else { Dyadic::one() });
        covered == st.constant(1)
    }
}

/// Smallest `|average|` of one witness rectangle over every square carrying
/// its pattern.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessClass {
    /// 1-based pattern level (`1` = the outermost square).
    pub level: usize,
    pub kind: WitnessKind,
    /// Rectangle in the coordinates of its pattern square.
    pub rect: DyadicRect,
    /// `k` with `wd(R) = 2^{−k}` in `[0, 1)²` coordinates.
    pub width_exp: u32,
    pub min_abs_average: Dyadic,
    /// Distinct function nodes the class was evaluated on.
    pub distinct_squares: usize,
}

/// Evaluate every witness rectangle of every pattern reachable from
/// `starts` (nodes carrying pattern `first`), sharing work across identical
/// subtrees. `level_exp[p]` is the side exponent of pattern `p`'s squares.
pub(crate) fn evaluate(
    f: &DyadicStep2D,
    patterns: &[WitnessPattern],
    starts: &[NodeId],
    first: usize,
    level_exp: &[u32],
) -> Vec<WitnessClass> {
    let mut mins: HashMap<(usize, usize), (Dyadic, usize)> = HashMap::new();
    let mut seen: std::collections::HashSet<(NodeId, usize)> = std::collections::HashSet::new();
    let mut stack: Vec<(NodeId, usize)> = starts.iter().map(|&n| (n, first)).collect();
    while let Some((node, p)) = stack.pop() {
        if !seen.insert((node, p)) {
            continue;
        }
        let pat = &patterns[p];
        for (ri, (r, _)) in pat.rects.iter().enumerate() {
            let (ix, iy) = r.unit_indices().expect("local rectangle");
            let avg = f.integral_local(node, r.m1, &ix, r.m2, &iy).mul_pow2((r.m1 + r.m2) as i64).abs();
            let e = mins.entry((p, ri)).or_insert((avg.clone(), 0));
            e.0 = e.0.clone().min(avg);
            e.1 += 1;
        }
        if let Some(next) = pat.next {
            for &(x, y) in &pat.children {
                let child = descend_from(f, node, pat.child_level, x, y);
                stack.push((child, next));
            }
        }
    }
    let mut out = Vec::new();
    for (p, pat) in patterns.iter().enumerate() {
        for (ri, (r, kind)) in pat.rects.iter().enumerate() {
            if let Some((m, count)) = mins.get(&(p, ri)) {
                out.push(WitnessClass {
                    level: p + 1,
                    kind: *kind,
                    rect: r.clone(),
                    width_exp: level_exp[p] + r.wd_exp(),
                    min_abs_average: m.clone(),
                    distinct_squares: *count,
                });
            }
        }
    }
    out
}

fn descend_from(f: &DyadicStep2D, node: NodeId, level: u32, x: u64, y: u64) -> NodeId {
    let (ix, iy) = (BigUint::from(x), BigUint::from(y));
    let mut n = node;
    for d in 0..level {
        if let Node::Leaf(_) = f.node(n) {
            break;
        }
        let b = (level - 1 - d) as u64;
        let q = ix.bit(b) as usize + 2 * iy.bit(b) as usize;
        n = f.child(n, q);
    }
    n
}
