use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::number::Dyadic;
use super::quadtree::{DyadicStep2D, Node, NodeId, QuadStore};
use super::rect::{DyadicPoint, DyadicRect, RectBasis};
use super::sets::{build_from_kinds, check_order, representation_rects, u_amplitude, v_node, CellKind};
use super::witness::{evaluate, WitnessClass, WitnessKind, WitnessPattern};
use crate::error::{Diagnostic, DiagnosticCode, Error, Result};

/// Default cap on the resolution exponent of a construction.
pub const DEFAULT_RESOLUTION_CAP: u32 = 512;

fn check_square(q: &DyadicRect) -> Result<(BigUint, BigUint)> {
    if !q.is_square() {
        return Err(Error::invalid(format!("{q} is not a square")));
    }
    q.unit_indices().ok_or_else(|| Error::invalid(format!("{q} is not inside the unit square")))
}

/// Replace every `E`-free cell of the `depth`-level pattern `e` by `inner`
/// (cells of `E` become 0).
fn substitute(st: &mut QuadStore, e: NodeId, depth: u32, inner: NodeId) -> NodeId {
    let mut memo = HashMap::new();
    subst_rec(st, e, depth, inner, &mut memo)
}

fn subst_rec(st: &mut QuadStore, e: NodeId, r: u32, inner: NodeId, memo: &mut HashMap<(NodeId, u32), NodeId>) -> NodeId {
    if let Some(&v) = memo.get(&(e, r)) {
        return v;
    }
    let out = match st.node(e).clone() {
        Node::Leaf(v) if v.is_zero() => st.uniform(inner, r),
        Node::Leaf(_) => st.constant(0),
        Node::Split(c) => {
            let c = c.map(|k| subst_rec(st, k, r - 1, inner, memo));
            st.split(c)
        }
    };
    memo.insert((e, r), out);
    out
}

#[derive(Clone, Debug)]
pub struct L0Level {
    /// `k` in `Ω_k`.
    pub k: usize,
    /// Squares of `Ω_k` have side `2^{−side_exp}`.
    pub side_exp: u32,
    pub count: BigUint,
    /// `G_k = ⋃_{ω ∈ Ω_k} ω`.
    pub cover: DyadicStep2D,
    /// `⋃_{ω ∈ Ω_k} E_ω`.
    pub copies: DyadicStep2D,
}

/// Square family of the covering lemma: levels `Ω_1, …, Ω_m` whose copies of
/// `E` are removed, and the leftover family `Ω_{m+1}` tiling what remains.
#[derive(Clone, Debug)]
pub struct L0Family {
    pub m: usize,
    pub q: DyadicRect,
    pub e_measure: Dyadic,
    pub e_width_exp: u32,
    pub levels: Vec<L0Level>,
    pub leftover_side_exp: u32,
    pub leftover_count: BigUint,
    /// `Q ∖ ⋃_{ω ∈ Ω} E_ω`.
    pub leftover: DyadicStep2D,
}

fn check_indicator(e: &DyadicStep2D) -> Result<()> {
    let ok = (0..e.node_count() as NodeId).all(|k| match e.node(k) {
        Node::Leaf(v) => v.is_zero() || *v == Dyadic::one(),
        Node::Split(_) => true,
    });
    if !ok {
        return Err(Error::invalid("E must be an indicator (values 0 and 1)"));
    }
    Ok(())
}

pub fn lemma_l0_family(e: &DyadicStep2D, m: usize, q: &DyadicRect) -> Result<L0Family> {
    check_indicator(e)?;
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let (ix, iy) = check_square(q)?;
    let e_measure = e.total();
    if e_measure == Dyadic::one() {
        return Err(Error::invalid("E must be a proper subset of the unit square"));
    }
    let w = e.data_depth();
    let resolution = q.m1 + w * m as u32;
    let mut st = QuadStore::new();
    let e_node = st.import(e);
    let one = st.constant(1);
    let chain = |st: &mut QuadStore, levels: usize, leaf: NodeId| {
        (0..levels).fold(leaf, |inner, _| substitute(st, e_node, w, inner))
    };
    let count_of = |g: &DyadicStep2D, side_exp: u32| -> BigUint {
        let c = g.total().mul_pow2(2 * side_exp as i64);
        c.to_integer().and_then(|v| v.to_biguint()).expect("a union of whole squares")
    };
    let mut levels = Vec::with_capacity(m);
    for k in 1..=m {
        let g = chain(&mut st, k - 1, one);
        let g = st.place(g, q.m1, &ix, &iy);
        let c = chain(&mut st, k - 1, e_node);
        let c = st.place(c, q.m1, &ix, &iy);
        let side_exp = q.m1 + w * (k as u32 - 1);
        let cover = st.finish(g, resolution)?;
        levels.push(L0Level { k, side_exp, count: count_of(&cover, side_exp), cover, copies: st.finish(c, resolution)? });
    }
    let left = chain(&mut st, m, one);
    let left = st.place(left, q.m1, &ix, &iy);
    let leftover = st.finish(left, resolution)?;
    let leftover_side_exp = q.m1 + w * m as u32;
    Ok(L0Family {
        m,
        q: q.clone(),
        e_measure,
        e_width_exp: w,
        levels,
        leftover_count: count_of(&leftover, leftover_side_exp),
        leftover_side_exp,
        leftover,
    })
}

/// The covering lemma's conclusions, recomputed from the family's sets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L0Audit {
    /// No point lies in two copies from different levels.
    pub copies_disjoint_across_levels: bool,
    /// Within each level, `|⋃ E_ω| = #Ω_k·|E|·|ω|` (no overlaps).
    pub copies_disjoint_within_levels: bool,
    /// Each level's copies lie in its cover, which lies in `Q`.
    pub nested: bool,
    pub min_width_exp: u32,
    pub expected_min_width_exp: u32,
    pub leftover_measure: Dyadic,
    pub expected_leftover_measure: Dyadic,
}

impl L0Audit {
    pub fn holds(&self) -> bool {
        self.copies_disjoint_across_levels
            && self.copies_disjoint_within_levels
            && self.nested
            && self.min_width_exp == self.expected_min_width_exp
            && self.leftover_measure == self.expected_leftover_measure
    }
}

/// Re-derive the three conclusions with plain set arithmetic.
pub fn audit_l0(fam: &L0Family) -> L0Audit {
    let mut st = QuadStore::new();
    let mut sum = st.constant(0);
    let mut within = true;
    let mut nested = true;
    let q_ind = st.rect_indicator(&fam.q).expect("Q inside the unit square");
    for lvl in &fam.levels {
        let c = st.import(&lvl.copies);
        let g = st.import(&lvl.cover);
        sum = st.add(sum, c);
        let copy_mass = Dyadic::new(BigInt::from(lvl.count.clone()), 0) * fam.e_measure.clone();
        within &= lvl.copies.total() == copy_mass.mul_pow2(-2 * lvl.side_exp as i64);
        // c ≤ g ≤ Q pointwise: g − c and Q − g are indicators
        let neg_c = st.scale(c, &Dyadic::from_int(-1));
        let g_minus_c = st.add(g, neg_c);
        let neg_g = st.scale(g, &Dyadic::from_int(-1));
        let q_minus_g = st.add(q_ind, neg_g);
        nested &= is_nonnegative(&st, g_minus_c) && is_nonnegative(&st, q_minus_g);
    }
    let union = st.finish(sum, fam.leftover.resolution()).expect("same resolution");
    let across = union.sup_abs() <= Dyadic::one();
    let q_measure = fam.q.measure();
    let leftover_measure = &q_measure - &union.total();
    let keep = &Dyadic::one() - &fam.e_measure;
    let expected = (0..fam.m).fold(q_measure, |acc, _| &acc * &keep);
    // the finest squares overall are the leftover family's
    let min_width_exp = fam.levels.iter().map(|l| l.side_exp).chain([fam.leftover_side_exp]).max().unwrap_or(0);
    L0Audit {
        copies_disjoint_across_levels: across,
        copies_disjoint_within_levels: within,
        nested,
        min_width_exp,
        expected_min_width_exp: fam.q.m1 + fam.e_width_exp * fam.m as u32,
        leftover_measure,
        expected_leftover_measure: expected,
    }
}

fn is_nonnegative(st: &QuadStore, root: NodeId) -> bool {
    let mut stack = vec![root];
    let mut seen = std::collections::HashSet::new();
    while let Some(n) = stack.pop() {
        if !seen.insert(n) {
            continue;
        }
        match st.node(n) {
            Node::Leaf(v) => {
                if v.is_negative() {
                    return false;
                }
            }
            Node::Split(c) => stack.extend(c.iter().copied()),
        }
    }
    true
}

/// `α(L) = n(2^n + 1)` with `n = 2L`, if it fits in 64 bits.
pub fn alpha(big_l: u64) -> Option<u64> {
    let n = big_l.checked_mul(2)?;
    let p = 1u64.checked_shl(u32::try_from(n).ok()?).filter(|_| n < 64)?;
    n.checked_mul(p.checked_add(1)?)
}

/// `β(L) = (n+1)2^{n−2}` with `n = 2L`.
pub fn beta(big_l: u64) -> Option<Dyadic> {
    let n = big_l.checked_mul(2)?;
    (n < 1 << 20).then(|| u_amplitude(n as u32))
}

/// `m(L) = ⌊2^n(ln(n+1) + (n−2) ln 2)/(n+1)⌋ + 1`.
pub fn l4_repetitions(big_l: u32) -> usize {
    let n = 2.0 * big_l as f64;
    let x = n.exp2() * ((n + 1.0).ln() + (n - 2.0) * std::f64::consts::LN_2) / (n + 1.0);
    x.floor() as usize + 1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L4Params {
    pub big_l: u32,
    pub n: u32,
    pub alpha: u64,
    pub beta: Dyadic,
    pub m: usize,
}

/// Block of the divergence construction on a dyadic square `Q`: zero
/// marginals, small support, and averages `≥ L` on a rectangle through
/// every point of `Q`.
#[derive(Clone, Debug)]
pub struct L4Build {
    pub params: L4Params,
    pub q: DyadicRect,
    pub f: DyadicStep2D,
    patterns: Vec<WitnessPattern>,
}

pub fn l4_params(big_l: u32) -> Result<L4Params> {
    if big_l < 2 {
        return Err(Error::invalid("L must be an integer ≥ 2"));
    }
    let n = 2 * big_l;
    let alpha = alpha(big_l as u64);
    let (Some(alpha), Some(beta), true) = (alpha, beta(big_l as u64), n <= super::sets::MAX_ORDER) else {
        return Err(Error::refused(
            Diagnostic::new(DiagnosticCode::ResolutionCap, "α(L) = n(2^n+1) is beyond any resolution budget")
                .with("L", big_l),
        ));
    };
    let m = l4_repetitions(big_l);
    Ok(L4Params { big_l, n, alpha, beta, m })
}

pub fn lemma_l4_function(big_l: u32, q: &DyadicRect, cap: u32) -> Result<L4Build> {
    let params = l4_params(big_l)?;
    let (ix, iy) = check_square(q)?;
    let need = q.m1 as u64 + params.alpha;
    if need > cap as u64 {
        return Err(Error::refused(
            Diagnostic::new(DiagnosticCode::ResolutionCap, "resolution budget log2(1/wd Q) + α(L) exceeds the cap")
                .with("L", big_l)
                .with("alpha", params.alpha)
                .with("needed", need)
                .with("cap", cap),
        ));
    }
    let (n, m) = (params.n, params.m);
    check_order(n)?;
    // leftover measure (1 − |E(n)|)^m must fall below 1/β
    let keep = Dyadic::new((1i64 << n) - n as i64 - 1, n as i64);
    let left = (0..m).fold(Dyadic::one(), |acc, _| &acc * &keep);
    if !(m < 1usize << n && &left * &params.beta < Dyadic::one()) {
        return Err(Error::invalid(format!("repetition count m = {m} does not shrink the leftover below 1/β")));
    }
    let mut st = QuadStore::new();
    let beta = params.beta.clone();
    let mut pattern = v_node(&mut st, &beta);
    for _ in 0..m {
        let inner = pattern;
        pattern = build_from_kinds(&mut st, n, &mut |st, k| match k {
            CellKind::Corner(s) => st.leaf(beta.mul_int(s as i64)),
            CellKind::Staircase => st.constant(0),
            CellKind::Outside => inner,
        })?;
    }
    let root = st.place(pattern, q.m1, &ix, &iy);
    let f = st.finish(root, need as u32)?;
    Ok(L4Build { patterns: l4_patterns(n, m), params, q: q.clone(), f })
}

/// Witness layout of the block: levels `1..=m` carry staircase copies whose
/// outside cells hold the next level; level `m+1` is a leftover square.
pub(crate) fn l4_patterns(n: u32, m: usize) -> Vec<WitnessPattern> {
    let side = 1u64 << n;
    let outside: Vec<(u64, u64)> = (0..side)
        .flat_map(|y| (0..side).map(move |x| (x, y)))
        .filter(|&(x, y)| super::sets::cell_kind(n, x, y) == CellKind::Outside)
        .collect();
    let staircase: Vec<(DyadicRect, WitnessKind)> =
        representation_rects(n).into_iter().map(|r| (r, WitnessKind::Staircase)).collect();
    let mut pats: Vec<WitnessPattern> = (0..m)
        .map(|j| WitnessPattern { rects: staircase.clone(), child_level: n, children: outside.clone(), next: Some(j + 1) })
        .collect();
    pats.push(WitnessPattern {
        rects: (1..=2).flat_map(|j| (1..=2).map(move |i| (DyadicRect::square(i, j, 1), WitnessKind::Quarter))).collect(),
        child_level: 0,
        children: Vec::new(),
        next: None,
    });
    pats
}

/// The block's conclusions as exact assertions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct L4Audit {
    pub params: L4Params,
    /// `supp f ⊂ Q`.
    pub support_in_q: bool,
    pub sup_norm: Dyadic,
    pub support_measure: Dyadic,
    /// `β·|supp f|`, to be compared with `2|Q|` (the bound `2|Q|/β` is not
    /// dyadic in general).
    pub beta_times_support: Dyadic,
    pub twice_q: Dyadic,
    pub support_width_exp: u32,
    /// `log2(1/wd Q) + α`.
    pub width_bound_exp: u64,
    pub marginals_vanish: bool,
    pub exterior_rects: usize,
    pub exterior_nonzero: usize,
    /// Witness rectangles together with the recursion cells tile every
    /// pattern square, so each resolution cell lies in some witness.
    pub witnesses_cover: bool,
    pub witness_classes: Vec<WitnessClass>,
    pub min_witness_average: Dyadic,
    pub max_witness_width_exp: u32,
}

impl L4Audit {
    pub fn support_ok(&self) -> bool {
        self.support_in_q && self.beta_times_support <= self.twice_q
    }

    pub fn sup_ok(&self) -> bool {
        self.sup_norm <= self.params.beta
    }

    pub fn width_ok(&self) -> bool {
        self.support_width_exp as u64 <= self.width_bound_exp
    }

    pub fn exterior_ok(&self) -> bool {
        self.marginals_vanish && self.exterior_nonzero == 0
    }

    pub fn witnesses_ok(&self) -> bool {
        self.witnesses_cover
            && self.min_witness_average >= Dyadic::from_int(self.params.big_l as i64)
            && self.max_witness_width_exp as u64 <= self.width_bound_exp
    }

    pub fn holds(&self) -> bool {
        self.support_ok() && self.sup_ok() && self.width_ok() && self.exterior_ok() && self.witnesses_ok()
    }
}

impl L4Build {
    pub(crate) fn patterns(&self) -> &[WitnessPattern] {
        &self.patterns
    }

    /// Side exponents of the pattern squares when the block sits on a square
    /// of side `2^{−base}`.
    pub(crate) fn level_exps(&self, base: u32) -> Vec<u32> {
        (0..=self.params.m).map(|j| base + self.params.n * j as u32).collect()
    }

    pub fn witness_classes(&self) -> Vec<WitnessClass> {
        let (ix, iy) = self.q.unit_indices().expect("checked at construction");
        let (node, _) = self.f.descend(self.q.m1, &ix, &iy);
        evaluate(&self.f, &self.patterns, &[node], 0, &self.level_exps(self.q.m1))
    }

    pub fn audit(&self, exterior_samples: usize, seed: u64) -> Result<L4Audit> {
        let f = &self.f;
        let (ix, iy) = self.q.unit_indices().expect("checked at construction");
        let support_measure = f.support_measure();
        let rects = exterior_rects(&self.q, f.resolution(), exterior_samples, seed);
        let exterior_nonzero = rects.iter().filter(|r| !f.integral(r).is_zero()).count();
        let classes = self.witness_classes();
        let min_witness_average =
            classes.iter().map(|c| c.min_abs_average.clone()).min().unwrap_or_else(Dyadic::zero);
        let max_witness_width_exp = classes.iter().map(|c| c.width_exp).max().unwrap_or(0);
        Ok(L4Audit {
            params: self.params.clone(),
            support_in_q: f.l1_norm_on(self.q.m1, &ix, &iy) == f.l1_norm(),
            sup_norm: f.sup_abs(),
            beta_times_support: &support_measure * &self.params.beta,
            twice_q: self.q.measure().mul_int(2),
            support_measure,
            support_width_exp: f.support_width_exp(),
            width_bound_exp: self.q.m1 as u64 + self.params.alpha,
            marginals_vanish: marginal_zero_check(f, &self.q)?,
            exterior_rects: rects.len(),
            exterior_nonzero,
            witnesses_cover: self.patterns.iter().all(WitnessPattern::covers_square),
            witness_classes: classes,
            min_witness_average,
            max_witness_width_exp,
        })
    }
}

/// Every row and column integral of `f` (supported in `Q`) vanishes.
pub fn marginal_zero_check(f: &DyadicStep2D, q: &DyadicRect) -> Result<bool> {
    let (ix, iy) = check_square(q)?;
    if f.l1_norm_on(q.m1, &ix, &iy) != f.l1_norm() {
        return Err(Error::invalid("f is not supported in Q"));
    }
    Ok(f.marginals_vanish())
}

fn random_bits(rng: &mut ChaCha8Rng, bits: u32) -> BigUint {
    let words = (bits as usize).div_ceil(32);
    let digits: Vec<u32> = (0..words).map(|_| rng.gen()).collect();
    BigUint::from_slice(&digits) & ((BigUint::one() << bits) - BigUint::one())
}

/// Seeded dyadic rectangles in the unit square with both exponents drawn
/// uniformly from `lo..=hi` and a uniform position at that scale.
pub fn sample_rects(lo: u32, hi: u32, count: usize, seed: u64) -> Vec<DyadicRect> {
    assert!(lo <= hi, "empty exponent range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = |rng: &mut ChaCha8Rng| -> (BigInt, u32) {
        let m = rng.gen_range(lo..=hi);
        (BigInt::from(random_bits(rng, m)) + 1, m)
    };
    (0..count)
        .map(|_| {
            let (i, m1) = idx(&mut rng);
            let (j, m2) = idx(&mut rng);
            DyadicRect { i, j, m1, m2 }
        })
        .collect()
}

/// Seeded dyadic rectangles whose interior is not inside `Q` but which meet
/// `Q`: one axis covers `Q`'s side, the other is arbitrary at any scale up to
/// `s`. Empty when `Q` is the unit square (every dyadic rectangle meeting it
/// lies inside it).
pub fn exterior_rects(q: &DyadicRect, s: u32, count: usize, seed: u64) -> Vec<DyadicRect> {
    if q.m1 == 0 && q.m2 == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let axis = |rng: &mut ChaCha8Rng, i: &BigInt, m: u32, cover: bool| -> (BigInt, u32) {
        let e = if cover { rng.gen_range(0..=m) } else { rng.gen_range(0..=s) };
        if e <= m {
            let idx: BigInt = i - 1;
            ((idx >> (m - e)) + 1, e)
        } else {
            let base: BigInt = (i - 1) << (e - m);
            (base + BigInt::from(random_bits(rng, e - m)) + 1, e)
        }
    };
    while out.len() < count {
        let cover_x = rng.gen_bool(0.5);
        let (i, m1) = axis(&mut rng, &q.i, q.m1, cover_x);
        let (j, m2) = axis(&mut rng, &q.j, q.m2, !cover_x);
        let r = DyadicRect { i, j, m1, m2 };
        if !q.contains(&r) {
            out.push(r);
        }
    }
    out
}

/// `max |(1/|R|)∫_R f − f(x)|` over basis rectangles `R ∋ x` with
/// `len(R) ≤ len_max` (and both exponents within the resolution).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub value: Dyadic,
    pub rect: Option<DyadicRect>,
    pub rectangles: usize,
}

pub fn delta_estimate(f: &DyadicStep2D, x: &DyadicPoint, basis: &RectBasis, len_max: &Dyadic) -> Result<DeltaEstimate> {
    if !x.in_unit_square() {
        return Err(Error::invalid("x must lie in the unit square"));
    }
    let s = f.resolution();
    if *len_max < Dyadic::pow2(-(s as i64)) {
        return Err(Error::invalid("len_max is below the resolution cell"));
    }
    let fx = f.value_at(x);
    let mut best = DeltaEstimate { value: Dyadic::zero(), rect: None, rectangles: 0 };
    for r in basis.containing(x, s) {
        if Dyadic::pow2(-(r.len_exp() as i64)) > *len_max {
            continue;
        }
        best.rectangles += 1;
        let dev = (&f.average(&r)? - &fx).abs();
        if best.rect.is_none() || dev > best.value {
            best.value = dev;
            best.rect = Some(r);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::sets::build_e_f;

    fn left_half() -> DyadicStep2D {
        DyadicStep2D::from_cells(1, [(1, 1, Dyadic::one()), (1, 2, Dyadic::one())]).unwrap()
    }

    #[test]
    fn l0_small_cases() {
        // m = 1: Ω = {Q}, leftover |Q|(1 − |E|)
        let q = DyadicRect::square(2, 1, 1);
        let fam = lemma_l0_family(&left_half(), 1, &q).unwrap();
        assert_eq!(fam.levels.len(), 1);
        assert_eq!(fam.levels[0].count, BigUint::from(1u32));
        assert_eq!(fam.leftover.total(), Dyadic::new(1, 3));
        assert!(audit_l0(&fam).holds());
        // left half, m = 2, unit square: (1 − 1/2)² = 1/4
        let fam = lemma_l0_family(&left_half(), 2, &DyadicRect::unit()).unwrap();
        let audit = audit_l0(&fam);
        assert_eq!(audit.leftover_measure, Dyadic::new(1, 2));
        assert!(audit.holds());
        assert!(lemma_l0_family(&DyadicStep2D::constant(0, Dyadic::one()), 2, &DyadicRect::unit()).is_err());
    }

    #[test]
    fn l0_staircase_three_levels() {
        let e = build_e_f(2).unwrap().e;
        let q = DyadicRect::square(3, 2, 2);
        let fam = lemma_l0_family(&e, 3, &q).unwrap();
        let audit = audit_l0(&fam);
        // |E(2)| = 3/4: leftover |Q|/64, finest squares 2^{−2−2·3}
        assert_eq!(audit.leftover_measure, Dyadic::new(1, 4 + 6));
        assert_eq!(audit.min_width_exp, 8);
        assert!(audit.holds(), "{audit:?}");
        // counts: 1, 4·(1/4)... each square spawns 4 free cells of the 4×4 grid
        let counts: Vec<u64> = fam.levels.iter().map(|l| l.count.iter_u64_digits().next().unwrap_or(0)).collect();
        assert_eq!(counts, vec![1, 4, 16]);
        assert_eq!(fam.leftover_count, BigUint::from(64u32));
    }

    #[test]
    fn l4_constants() {
        assert_eq!(alpha(2), Some(68));
        assert_eq!(alpha(3), Some(390));
        assert_eq!(beta(2), Some(Dyadic::from_int(20)));
        assert_eq!(beta(3), Some(Dyadic::from_int(112)));
        assert_eq!(l4_repetitions(2), 10);
        assert_eq!(l4_repetitions(3), 44);
        assert!(alpha(40).is_none());
        let err = lemma_l4_function(4, &DyadicRect::unit(), DEFAULT_RESOLUTION_CAP).unwrap_err();
        assert!(matches!(err, Error::Refused(ref d) if d.code == DiagnosticCode::ResolutionCap));
        assert!(lemma_l4_function(1, &DyadicRect::unit(), DEFAULT_RESOLUTION_CAP).is_err());
    }

    #[test]
    fn l4_block_at_two() {
        let q = DyadicRect::square(2, 3, 2);
        let b = lemma_l4_function(2, &q, DEFAULT_RESOLUTION_CAP).unwrap();
        let a = b.audit(100, 7).unwrap();
        assert_eq!(a.sup_norm, Dyadic::from_int(20));
        assert!(a.support_ok() && a.sup_ok() && a.width_ok() && a.exterior_ok(), "{a:?}");
        assert!(a.witnesses_ok(), "min witness {}", a.min_witness_average);
        // both witness branches: staircase rectangles at (n+1)/2, quarters at β = 20 ≥ 2^n
        assert_eq!(a.min_witness_average, Dyadic::new(5, 1));
        let quarters = a.witness_classes.iter().filter(|c| c.kind == WitnessKind::Quarter);
        assert!(quarters.clone().count() > 0 && quarters.clone().all(|c| c.min_abs_average >= Dyadic::from_int(16)));
        assert_eq!(a.exterior_rects, 100);
    }

    /// Pointwise value of the block straight from its definition: walk the
    /// nested `2^n` grids; corners of each quadrant carry `±β`, the rest of
    /// the staircase `E(n)` (a union of rectangles) is zero, and the leftover
    /// squares carry `β·v`.
    fn block_value_direct(n: u32, m: usize, beta: i64, mut x: f64, mut y: f64) -> i64 {
        let g = (1u64 << n) as f64;
        let half = 1u64 << (n - 1);
        for _ in 0..m {
            let (a, b) = ((x * g).floor() as u64, (y * g).floor() as u64);
            let (i, j) = (a / half, b / half);
            if a % half == 0 && b % half == 0 {
                return if i == j { beta } else { -beta };
            }
            let in_e = (0..n).any(|k| a - i * half < 1u64 << (n - k - 1) && b - j * half < 1u64 << k);
            if in_e {
                return 0;
            }
            x = x * g - a as f64;
            y = y * g - b as f64;
        }
        if (x < 0.5) == (y < 0.5) { beta } else { -beta }
    }

    #[test]
    fn l4_block_matches_direct_definition() {
        let b = lemma_l4_function(2, &DyadicRect::unit(), DEFAULT_RESOLUTION_CAP).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut nonzero = 0;
        for _ in 0..4000 {
            // points on a 2^-48 grid, exactly representable
            let (x, y) = (rng.gen_range(0..1u64 << 48) as f64 / 2f64.powi(48), rng.gen_range(0..1u64 << 48) as f64 / 2f64.powi(48));
            // bias half the samples deep into the nested outside cells
            let (x, y) = if rng.gen_bool(0.5) { (x * 2f64.powi(-16) + 15.0 / 16.0, y * 2f64.powi(-16) + 15.0 / 16.0) } else { (x, y) };
            let want = block_value_direct(4, 10, 20, x, y);
            let got = b.f.value_at(&DyadicPoint::from_f64(x, y).unwrap());
            assert_eq!(got, Dyadic::from_int(want), "at ({x}, {y})");
            nonzero += (want != 0) as usize;
        }
        assert!(nonzero > 0);
    }

    #[test]
    fn l4_block_at_three() {
        let b = lemma_l4_function(3, &DyadicRect::unit(), DEFAULT_RESOLUTION_CAP).unwrap();
        assert_eq!(b.f.resolution(), 390);
        let a = b.audit(20, 1).unwrap();
        assert_eq!(a.exterior_rects, 0);
        assert!(a.holds(), "{a:?}");
        assert_eq!(a.min_witness_average, Dyadic::new(7, 1));
    }

    #[test]
    fn marginal_checks() {
        let v = super::super::sets::v_function();
        assert!(marginal_zero_check(&v, &DyadicRect::unit()).unwrap());
        let one = DyadicStep2D::from_cells(3, [(2, 5, Dyadic::one())]).unwrap();
        assert!(!marginal_zero_check(&one, &DyadicRect::unit()).unwrap());
        assert!(marginal_zero_check(&one, &DyadicRect::square(1, 1, 1)).is_err());
    }

    #[test]
    fn delta_of_constants_and_blocks() {
        let c = DyadicStep2D::constant(6, Dyadic::new(3, 2));
        let x = DyadicPoint::from_f64(0.3, 0.7).unwrap();
        for basis in [RectBasis::AllDyadic, RectBasis::Squares] {
            let d = delta_estimate(&c, &x, &basis, &Dyadic::one()).unwrap();
            assert!(d.value.is_zero() && d.rectangles > 0);
        }
    }
}
