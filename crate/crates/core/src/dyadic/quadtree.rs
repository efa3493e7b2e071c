use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};

use super::number::Dyadic;
use super::rect::{DyadicPoint, DyadicRect};
use crate::error::{Error, Result};

pub(crate) type NodeId = u32;

/// Quadtree node over a square; children are indexed `qx + 2·qy`
/// (`qx = 1` for the right half, `qy = 1` for the upper half).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Node {
    Leaf(Dyadic),
    Split([NodeId; 4]),
}

fn bit(i: &BigUint, k: u32) -> usize {
    i.bit(k as u64) as usize
}

/// Hash-consed workbench for building exact step functions as DAGs.
/// Structurally equal subtrees share one id, and a split of four equal
/// leaves collapses to that leaf, so every function has one canonical form.
#[derive(Default)]
pub struct QuadStore {
    nodes: Vec<Node>,
    index: HashMap<Node, NodeId>,
    avg: Vec<Dyadic>,
    depth: Vec<u32>,
    add_memo: HashMap<(NodeId, NodeId), NodeId>,
}

impl QuadStore {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, n: Node) -> NodeId {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let (avg, depth) = match &n {
            Node::Leaf(v) => (v.clone(), 0),
            Node::Split(c) => {
                let s: Dyadic = c.iter().map(|&k| self.avg[k as usize].clone()).sum();
                (s.mul_pow2(-2), 1 + c.iter().map(|&k| self.depth[k as usize]).max().unwrap_or(0))
            }
        };
        let id = self.nodes.len() as NodeId;
        self.nodes.push(n.clone());
        self.avg.push(avg);
        self.depth.push(depth);
        self.index.insert(n, id);
        id
    }

    pub(crate) fn leaf(&mut self, v: Dyadic) -> NodeId {
        self.intern(Node::Leaf(v))
    }

    pub(crate) fn constant(&mut self, v: i64) -> NodeId {
        self.leaf(Dyadic::from_int(v))
    }

    pub(crate) fn split(&mut self, c: [NodeId; 4]) -> NodeId {
        if c.iter().all(|&k| k == c[0]) && matches!(self.nodes[c[0] as usize], Node::Leaf(_)) {
            return c[0];
        }
        self.intern(Node::Split(c))
    }

    pub(crate) fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    pub(crate) fn avg(&self, id: NodeId) -> &Dyadic {
        &self.avg[id as usize]
    }

    pub(crate) fn depth(&self, id: NodeId) -> u32 {
        self.depth[id as usize]
    }

    fn children(&self, id: NodeId) -> [NodeId; 4] {
        match self.node(id) {
            Node::Leaf(_) => [id; 4],
            Node::Split(c) => *c,
        }
    }

    pub(crate) fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let key = (a.min(b), a.max(b));
        if let Some(&r) = self.add_memo.get(&key) {
            return r;
        }
        let r = match (self.node(a).clone(), self.node(b).clone()) {
            (Node::Leaf(x), Node::Leaf(y)) => self.leaf(&x + &y),
            (Node::Leaf(x), _) if x.is_zero() => b,
            (_, Node::Leaf(y)) if y.is_zero() => a,
            _ => {
                let (ca, cb) = (self.children(a), self.children(b));
                let c = [0, 1, 2, 3].map(|q| self.add(ca[q], cb[q]));
                self.split(c)
            }
        };
        self.add_memo.insert(key, r);
        r
    }

    pub(crate) fn map_leaves(&mut self, a: NodeId, f: &mut dyn FnMut(&Dyadic) -> Dyadic) -> NodeId {
        let mut memo = HashMap::new();
        self.map_rec(a, f, &mut memo)
    }

    fn map_rec(
        &mut self,
        a: NodeId,
        f: &mut dyn FnMut(&Dyadic) -> Dyadic,
        memo: &mut HashMap<NodeId, NodeId>,
    ) -> NodeId {
        if let Some(&r) = memo.get(&a) {
            return r;
        }
        let r = match self.node(a).clone() {
            Node::Leaf(v) => {
                let w = f(&v);
                self.leaf(w)
            }
            Node::Split(c) => {
                let c = c.map(|k| self.map_rec(k, f, memo));
                self.split(c)
            }
        };
        memo.insert(a, r);
        r
    }

    pub(crate) fn scale(&mut self, a: NodeId, c: &Dyadic) -> NodeId {
        self.map_leaves(a, &mut |v| v * c)
    }

    /// Top-down construction over a `2^depth` grid: `classify(level, x, y)`
    /// returns the node for the square `(level, x, y)` when it is uniform,
    /// `None` to subdivide. Every cell at `depth` must be classified.
    pub(crate) fn build(
        &mut self,
        depth: u32,
        classify: &mut dyn FnMut(&mut QuadStore, u32, u64, u64) -> Option<NodeId>,
    ) -> Result<NodeId> {
        self.build_rec(depth, 0, 0, 0, classify)
    }

    fn build_rec(
        &mut self,
        depth: u32,
        level: u32,
        x: u64,
        y: u64,
        classify: &mut dyn FnMut(&mut QuadStore, u32, u64, u64) -> Option<NodeId>,
    ) -> Result<NodeId> {
        if let Some(n) = classify(self, level, x, y) {
            return Ok(n);
        }
        if level >= depth {
            return Err(Error::invalid(format!("cell ({x}, {y}) at level {level} left unclassified")));
        }
        let mut c = [0; 4];
        for (q, slot) in c.iter_mut().enumerate() {
            let (qx, qy) = ((q & 1) as u64, (q >> 1) as u64);
            *slot = self.build_rec(depth, level + 1, 2 * x + qx, 2 * y + qy, classify)?;
        }
        Ok(self.split(c))
    }

    /// `node` placed on the dyadic square `(level, ix, iy)`, zero elsewhere.
    pub(crate) fn place(&mut self, node: NodeId, level: u32, ix: &BigUint, iy: &BigUint) -> NodeId {
        let zero = self.constant(0);
        let mut cur = node;
        for b in 0..level {
            let mut c = [zero; 4];
            c[bit(ix, b) + 2 * bit(iy, b)] = cur;
            cur = self.split(c);
        }
        cur
    }

    /// `node` repeated on every square of level `levels`.
    pub(crate) fn uniform(&mut self, node: NodeId, levels: u32) -> NodeId {
        (0..levels).fold(node, |cur, _| self.split([cur; 4]))
    }

    /// Indicator of a rectangle inside `[0, 1)²`.
    pub(crate) fn rect_indicator(&mut self, r: &DyadicRect) -> Result<NodeId> {
        let (ix, iy) = r.unit_indices().ok_or_else(|| Error::invalid(format!("{r} is not inside the unit square")))?;
        Ok(self.rect_rec(r.m1, &ix, r.m2, &iy))
    }

    fn rect_rec(&mut self, lx: u32, ix: &BigUint, ly: u32, iy: &BigUint) -> NodeId {
        if lx == 0 && ly == 0 {
            return self.constant(1);
        }
        let zero = self.constant(0);
        let mut c = [zero; 4];
        if lx > 0 && ly > 0 {
            c[bit(ix, lx - 1) + 2 * bit(iy, ly - 1)] = self.rect_rec(lx - 1, ix, ly - 1, iy);
        } else if lx == 0 {
            let sub = self.rect_rec(0, ix, ly - 1, iy);
            let qy = bit(iy, ly - 1);
            c[2 * qy] = sub;
            c[1 + 2 * qy] = sub;
        } else {
            let sub = self.rect_rec(lx - 1, ix, 0, iy);
            let qx = bit(ix, lx - 1);
            c[qx] = sub;
            c[qx + 2] = sub;
        }
        self.split(c)
    }

    pub(crate) fn import(&mut self, f: &DyadicStep2D) -> NodeId {
        let mut ids = Vec::with_capacity(f.nodes.len());
        for n in &f.nodes {
            let id = match n {
                Node::Leaf(v) => self.leaf(v.clone()),
                Node::Split(c) => {
                    let c = c.map(|k| ids[k as usize]);
                    self.split(c)
                }
            };
            ids.push(id);
        }
        *ids.last().expect("nonempty function")
    }

    /// Compact copy of the function rooted at `root`, declared at resolution
    /// `2^{−resolution}`.
    pub(crate) fn finish(&self, root: NodeId, resolution: u32) -> Result<DyadicStep2D> {
        if self.depth(root) > resolution {
            return Err(Error::invalid(format!(
                "function varies at depth {} beyond the declared resolution {resolution}",
                self.depth(root)
            )));
        }
        let mut remap: HashMap<NodeId, NodeId> = HashMap::new();
        let mut out = DyadicStep2D::empty(resolution);
        // iterative post-order so deep trees do not recurse
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if remap.contains_key(&id) {
                continue;
            }
            match self.node(id) {
                Node::Leaf(v) => {
                    remap.insert(id, out.push(Node::Leaf(v.clone()), v.clone(), 0));
                }
                Node::Split(c) if expanded => {
                    let c2 = c.map(|k| remap[&k]);
                    remap.insert(id, out.push(Node::Split(c2), self.avg(id).clone(), self.depth(id)));
                }
                Node::Split(c) => {
                    stack.push((id, true));
                    for &k in c.iter().rev() {
                        if !remap.contains_key(&k) {
                            stack.push((k, false));
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Exact step function on `[0, 1)²` (zero outside), piecewise constant on the
/// `2^{−s}` dyadic grid. Stored as a canonical quadtree DAG, so functions
/// with astronomically many cells stay small when they are self-similar.
#[derive(Clone, Debug)]
pub struct DyadicStep2D {
    resolution: u32,
    /// Children precede parents; the root is last.
    nodes: Vec<Node>,
    avg: Vec<Dyadic>,
    depth: Vec<u32>,
    profiles: OnceLock<Profiles>,
}

impl DyadicStep2D {
    fn empty(resolution: u32) -> Self {
        Self { resolution, nodes: Vec::new(), avg: Vec::new(), depth: Vec::new(), profiles: OnceLock::new() }
    }

    fn push(&mut self, n: Node, avg: Dyadic, depth: u32) -> NodeId {
        self.nodes.push(n);
        self.avg.push(avg);
        self.depth.push(depth);
        (self.nodes.len() - 1) as NodeId
    }

    pub fn constant(resolution: u32, v: Dyadic) -> Self {
        let mut f = Self::empty(resolution);
        f.push(Node::Leaf(v.clone()), v, 0);
        f
    }

    /// From explicit cells `(i, j, value)` at resolution `s` (1-based indices,
    /// value 0 elsewhere). Later duplicates overwrite earlier ones.
    pub fn from_cells(s: u32, cells: impl IntoIterator<Item = (u64, u64, Dyadic)>) -> Result<Self> {
        if s > 63 {
            return Err(Error::invalid("explicit cells are limited to resolution 63"));
        }
        let mut map: HashMap<(u64, u64), Dyadic> = HashMap::new();
        for (i, j, v) in cells {
            if i == 0 || j == 0 || i > 1u64 << s || j > 1u64 << s {
                return Err(Error::invalid(format!("cell ({i}, {j}) outside the 2^{s} grid")));
            }
            map.insert((i - 1, j - 1), v);
        }
        let mut cells: Vec<((u64, u64), Dyadic)> = map.into_iter().collect();
        let mut store = QuadStore::new();
        let root = cells_rec(&mut store, s, 0, &mut cells);
        store.finish(root, s)
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub(crate) fn root(&self) -> NodeId {
        (self.nodes.len() - 1) as NodeId
    }

    pub(crate) fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id as usize]
    }

    /// Number of distinct DAG nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Depth of the finest variation (`0` for a constant).
    pub fn data_depth(&self) -> u32 {
        self.depth[self.root() as usize]
    }

    /// `∫_{[0,1)²} f`.
    pub fn total(&self) -> Dyadic {
        self.avg[self.root() as usize].clone()
    }

    pub fn sup_abs(&self) -> Dyadic {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(v) => Some(v.abs()),
                Node::Split(_) => None,
            })
            .fold(Dyadic::zero(), Dyadic::max)
    }

    fn fold_bottom_up(&self, leaf: impl Fn(&Dyadic) -> Dyadic) -> Vec<Dyadic> {
        let mut out: Vec<Dyadic> = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let v = match n {
                Node::Leaf(v) => leaf(v),
                Node::Split(c) => c.iter().map(|&k| out[k as usize].clone()).sum::<Dyadic>().mul_pow2(-2),
            };
            out.push(v);
        }
        out
    }

    pub fn l1_norm(&self) -> Dyadic {
        self.fold_bottom_up(Dyadic::abs).pop().expect("nonempty")
    }

    /// `∥f∥₁` restricted to the square `(level, ix, iy)` of `[0, 1)²`.
    pub fn l1_norm_on(&self, level: u32, ix: &BigUint, iy: &BigUint) -> Dyadic {
        let abs = self.fold_bottom_up(Dyadic::abs);
        let (node, reached) = self.descend(level, ix, iy);
        abs[node as usize].mul_pow2(-2 * reached as i64)
    }

    /// `|{f ≠ 0}|`.
    pub fn support_measure(&self) -> Dyadic {
        self.fold_bottom_up(|v| if v.is_zero() { Dyadic::zero() } else { Dyadic::one() }).pop().expect("nonempty")
    }

    /// Indicator of `{f ≠ 0}`.
    pub fn support(&self) -> DyadicStep2D {
        let mut store = QuadStore::new();
        let root = store.import(self);
        let s = store.map_leaves(root, &mut |v| if v.is_zero() { Dyadic::zero() } else { Dyadic::one() });
        store.finish(s, self.resolution).expect("support is no finer than the function")
    }

    /// `k` with `wd(supp f) = 2^{−k}`: the minimal level on which the support
    /// is a union of dyadic squares.
    pub fn support_width_exp(&self) -> u32 {
        self.support().data_depth()
    }

    /// Node covering the square `(level, ix, iy)`, and the level actually
    /// reached (smaller when a leaf covers it).
    pub(crate) fn descend(&self, level: u32, ix: &BigUint, iy: &BigUint) -> (NodeId, u32) {
        let mut node = self.root();
        for d in 0..level {
            match self.node(node) {
                Node::Leaf(_) => return (node, d),
                Node::Split(c) => {
                    let b = level - 1 - d;
                    node = c[bit(ix, b) + 2 * bit(iy, b)];
                }
            }
        }
        (node, level)
    }

    pub(crate) fn child(&self, node: NodeId, q: usize) -> NodeId {
        match self.node(node) {
            Node::Leaf(_) => node,
            Node::Split(c) => c[q],
        }
    }

    pub fn value_at(&self, p: &DyadicPoint) -> Dyadic {
        if !p.in_unit_square() {
            return Dyadic::zero();
        }
        let mut node = self.root();
        let mut k = 1u64;
        loop {
            match self.node(node) {
                Node::Leaf(v) => return v.clone(),
                Node::Split(c) => {
                    node = c[binary_digit(&p.x, k) + 2 * binary_digit(&p.y, k)];
                    k += 1;
                }
            }
        }
    }

    /// `∫_R f`, for any dyadic rectangle (zero off the unit square).
    pub fn integral(&self, r: &DyadicRect) -> Dyadic {
        match r.unit_indices() {
            None => Dyadic::zero(),
            Some((ix, iy)) => self.integral_local(self.root(), r.m1, &ix, r.m2, &iy),
        }
    }

    /// `(1/|R|)∫_R f`; rejects rectangles finer than the resolution.
    pub fn average(&self, r: &DyadicRect) -> Result<Dyadic> {
        if r.m1 > self.resolution || r.m2 > self.resolution {
            return Err(Error::invalid(format!(
                "rectangle exponents ({}, {}) exceed the resolution {}",
                r.m1, r.m2, self.resolution
            )));
        }
        Ok(self.integral(r).mul_pow2((r.m1 + r.m2) as i64))
    }

    /// Integral of `node` (as a function on its own unit square) over the
    /// rectangle with levels `(lx, ly)` and indices `(ix, iy)` in that square.
    pub(crate) fn integral_local(&self, node: NodeId, lx: u32, ix: &BigUint, ly: u32, iy: &BigUint) -> Dyadic {
        let (mut node, mut lx, mut ly) = (node, lx, ly);
        let mut steps = 0i64;
        let v = loop {
            if lx == 0 && ly == 0 {
                break self.avg[node as usize].clone();
            }
            match self.node(node) {
                Node::Leaf(c) => break c.mul_pow2(-((lx + ly) as i64)),
                Node::Split(c) => {
                    if lx == 0 {
                        let p = self.profiles();
                        break p.line.integral(p.rows[node as usize], ly, iy);
                    }
                    if ly == 0 {
                        let p = self.profiles();
                        break p.line.integral(p.cols[node as usize], lx, ix);
                    }
                    node = c[bit(ix, lx - 1) + 2 * bit(iy, ly - 1)];
                    lx -= 1;
                    ly -= 1;
                    steps += 1;
                }
            }
        };
        v.mul_pow2(-2 * steps)
    }

    fn profiles(&self) -> &Profiles {
        self.profiles.get_or_init(|| Profiles::build(&self.nodes))
    }

    /// Every row integral `∫ f(x₁, t) dt` and column integral vanishes.
    pub fn marginals_vanish(&self) -> bool {
        self.node_marginals_vanish(self.root())
    }

    pub(crate) fn node_marginals_vanish(&self, node: NodeId) -> bool {
        let p = self.profiles();
        p.line.is_zero(p.rows[node as usize]) && p.line.is_zero(p.cols[node as usize])
    }

    /// Distinct nodes at `level` (leaves reached earlier are reported as is).
    pub(crate) fn nodes_at_level(&self, level: u32) -> Vec<NodeId> {
        let mut cur = vec![self.root()];
        for _ in 0..level {
            let mut next: Vec<NodeId> = cur
                .iter()
                .flat_map(|&n| match self.node(n) {
                    Node::Leaf(_) => vec![n],
                    Node::Split(c) => c.to_vec(),
                })
                .collect();
            next.sort_unstable();
            next.dedup();
            cur = next;
        }
        cur
    }

    /// Node table: header `s=<resolution>`, then `id,num,den_pow2,c00,c10,c01,c11`
    /// with empty value columns for splits and empty child columns for leaves.
    /// Children are indexed `x-half + 2·y-half`; the root is the last row.
    pub fn write_node_csv(&self, w: impl Write) -> Result<()> {
        let mut w = std::io::BufWriter::new(w);
        writeln!(w, "s={}", self.resolution)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["id", "num", "den_pow2", "c00", "c10", "c01", "c11"])?;
        for (id, n) in self.nodes.iter().enumerate() {
            let mut row = vec![id.to_string()];
            match n {
                Node::Leaf(v) => {
                    row.push(v.numerator().to_string());
                    row.push(v.den_pow2().to_string());
                    row.extend(std::iter::repeat_n(String::new(), 4));
                }
                Node::Split(c) => {
                    row.push(String::new());
                    row.push(String::new());
                    row.extend(c.iter().map(|k| k.to_string()));
                }
            }
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn read_node_csv(r: impl BufRead) -> Result<Self> {
        let mut r = r;
        let mut header = String::new();
        r.read_line(&mut header)?;
        let s: u32 = header
            .trim()
            .strip_prefix("s=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("expected `s=<resolution>`, got {header:?}")))?;
        let mut store = QuadStore::new();
        let mut ids: Vec<NodeId> = Vec::new();
        let mut csv = csv::Reader::from_reader(r);
        for (row_no, rec) in csv.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Format(format!("node row {row_no}: {what}"));
            if rec.len() != 7 || rec[0].parse::<usize>().ok() != Some(row_no) {
                return Err(bad("expected 7 columns with consecutive ids"));
            }
            let id = if !rec[1].is_empty() {
                let num: BigInt = rec[1].parse().map_err(|_| bad("numerator"))?;
                let den: i64 = rec[2].parse().map_err(|_| bad("den_pow2"))?;
                store.leaf(Dyadic::new(num, den))
            } else {
                let mut c = [0; 4];
                for (q, slot) in c.iter_mut().enumerate() {
                    let k: usize = rec[3 + q].parse().map_err(|_| bad("child id"))?;
                    *slot = *ids.get(k).ok_or_else(|| bad("child must precede its parent"))?;
                }
                store.split(c)
            };
            ids.push(id);
        }
        let root = *ids.last().ok_or_else(|| Error::Format("empty node table".into()))?;
        store.finish(root, s)
    }
}

fn cells_rec(store: &mut QuadStore, s: u32, level: u32, cells: &mut [((u64, u64), Dyadic)]) -> NodeId {
    if cells.is_empty() {
        return store.constant(0);
    }
    if level == s {
        return store.leaf(cells[0].1.clone());
    }
    let b = s - 1 - level;
    let quad = |c: &((u64, u64), Dyadic)| ((c.0 .0 >> b) & 1) + 2 * ((c.0 .1 >> b) & 1);
    cells.sort_by_key(quad);
    let mut c = [0; 4];
    let mut start = 0;
    for (q, slot) in c.iter_mut().enumerate() {
        let end = start + cells[start..].iter().take_while(|c| quad(c) == q as u64).count();
        *slot = cells_rec(store, s, level + 1, &mut cells[start..end]);
        start = end;
    }
    store.split(c)
}

/// `k`-th binary digit after the point of `x ∈ [0, 1)`.
fn binary_digit(x: &Dyadic, k: u64) -> usize {
    if k > x.den_pow2() {
        return 0;
    }
    ((x.numerator() >> (x.den_pow2() - k)) & BigInt::from(1u8) == BigInt::from(1u8)) as usize
}

type LineId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Line {
    Leaf(Dyadic),
    Split(LineId, LineId),
}

/// One-dimensional counterpart of [`QuadStore`], for marginal profiles.
#[derive(Clone, Debug, Default)]
struct LineStore {
    nodes: Vec<Line>,
    index: HashMap<Line, LineId>,
    avg: Vec<Dyadic>,
    memo: HashMap<(LineId, LineId), LineId>,
}

impl LineStore {
    fn intern(&mut self, n: Line) -> LineId {
        if let Some(&id) = self.index.get(&n) {
            return id;
        }
        let avg = match &n {
            Line::Leaf(v) => v.clone(),
            Line::Split(a, b) => (&self.avg[*a as usize] + &self.avg[*b as usize]).mul_pow2(-1),
        };
        let id = self.nodes.len() as LineId;
        self.nodes.push(n.clone());
        self.avg.push(avg);
        self.index.insert(n, id);
        id
    }

    fn split(&mut self, a: LineId, b: LineId) -> LineId {
        if a == b && matches!(self.nodes[a as usize], Line::Leaf(_)) {
            return a;
        }
        self.intern(Line::Split(a, b))
    }

    fn halves(&self, a: LineId) -> (LineId, LineId) {
        match self.nodes[a as usize] {
            Line::Leaf(_) => (a, a),
            Line::Split(l, h) => (l, h),
        }
    }

    /// `(a + b)/2`.
    fn mean(&mut self, a: LineId, b: LineId) -> LineId {
        let key = (a.min(b), a.max(b));
        if let Some(&r) = self.memo.get(&key) {
            return r;
        }
        let r = match (&self.nodes[a as usize], &self.nodes[b as usize]) {
            (Line::Leaf(x), Line::Leaf(y)) => {
                let v = (x + y).mul_pow2(-1);
                self.intern(Line::Leaf(v))
            }
            _ => {
                let ((al, ah), (bl, bh)) = (self.halves(a), self.halves(b));
                let lo = self.mean(al, bl);
                let hi = self.mean(ah, bh);
                self.split(lo, hi)
            }
        };
        self.memo.insert(key, r);
        r
    }

    fn is_zero(&self, a: LineId) -> bool {
        matches!(&self.nodes[a as usize], Line::Leaf(v) if v.is_zero())
    }

    fn integral(&self, a: LineId, level: u32, i: &BigUint) -> Dyadic {
        let (mut a, mut l) = (a, level);
        while l > 0 {
            match self.nodes[a as usize] {
                Line::Leaf(_) => break,
                Line::Split(lo, hi) => {
                    a = if bit(i, l - 1) == 0 { lo } else { hi };
                    l -= 1;
                }
            }
        }
        // the remaining `l` levels sit inside a leaf (or `l = 0`)
        self.avg[a as usize].mul_pow2(-(level as i64))
    }
}

/// Row profiles `y ↦ ∫ f(x, y) dx` and column profiles `x ↦ ∫ f(x, y) dy`
/// of every node, in node-local coordinates.
#[derive(Clone, Debug)]
struct Profiles {
    line: LineStore,
    rows: Vec<LineId>,
    cols: Vec<LineId>,
}

impl Profiles {
    fn build(nodes: &[Node]) -> Self {
        let mut line = LineStore::default();
        let (mut rows, mut cols) = (Vec::with_capacity(nodes.len()), Vec::with_capacity(nodes.len()));
        for n in nodes {
            match n {
                Node::Leaf(v) => {
                    let id = line.intern(Line::Leaf(v.clone()));
                    rows.push(id);
                    cols.push(id);
                }
                Node::Split(c) => {
                    let r = |q: NodeId| rows[q as usize];
                    let (lo, hi) = ((r(c[0]), r(c[1])), (r(c[2]), r(c[3])));
                    let lo = line.mean(lo.0, lo.1);
                    let hi = line.mean(hi.0, hi.1);
                    let row = line.split(lo, hi);
                    let k = |q: NodeId| cols[q as usize];
                    let (left, right) = ((k(c[0]), k(c[2])), (k(c[1]), k(c[3])));
                    let left = line.mean(left.0, left.1);
                    let right = line.mean(right.0, right.1);
                    let col = line.split(left, right);
                    rows.push(row);
                    cols.push(col);
                }
            }
        }
        Self { line, rows, cols }
    }
}
