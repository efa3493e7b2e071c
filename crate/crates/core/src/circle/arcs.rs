use std::f64::consts::TAU;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::angle::reduce;
use crate::error::{Error, Result};

/// Finite union of half-open arcs `[a, b)` with `0 ≤ a < b ≤ 2π`,
/// kept sorted, disjoint and with touching arcs merged.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArcSet {
    arcs: Vec<(f64, f64)>,
}

impl ArcSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn full() -> Self {
        Self { arcs: vec![(0.0, TAU)] }
    }

    /// Arc starting at `start` with the given length; wraps through 2π if needed.
    pub fn arc(start: f64, length: f64) -> Self {
        Self::from_arcs([(start, start + length)])
    }

    /// Build from `(start, end)` pairs read as the arc swept counterclockwise
    /// from `start` to `end` (so `end − start` is the length; pairs may wrap).
    pub fn from_arcs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut raw = Vec::new();
        for (a, b) in pairs {
            let len = b - a;
            if !(len > 0.0) {
                continue;
            }
            if len >= TAU {
                return Self::full();
            }
            let s = reduce(a);
            let e = s + len;
            if e <= TAU {
                raw.push((s, e));
            } else {
                raw.push((s, TAU));
                raw.push((0.0, e - TAU));
            }
        }
        Self::normalize(raw)
    }

    fn normalize(mut raw: Vec<(f64, f64)>) -> Self {
        raw.retain(|&(a, b)| b > a);
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { arcs: out }
    }

    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.arcs.iter().map(|(a, b)| b - a).sum::<f64>().min(TAU)
    }

    pub fn contains(&self, x: f64) -> bool {
        let x = reduce(x);
        // first arc whose start is > x; the candidate is the one before it
        let idx = self.arcs.partition_point(|&(a, _)| a <= x);
        idx > 0 && x < self.arcs[idx - 1].1
    }

    pub fn union(&self, other: &ArcSet) -> ArcSet {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &ArcSet) -> ArcSet {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &ArcSet) -> ArcSet {
        self.combine(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &ArcSet) -> ArcSet {
        self.combine(other, |a, b| a != b)
    }

    pub fn complement(&self) -> ArcSet {
        ArcSet::full().difference(self)
    }

    /// Sweep over the merged endpoint lists, keeping the pieces where `op` holds.
    fn combine(&self, other: &ArcSet, op: impl Fn(bool, bool) -> bool) -> ArcSet {
        let mut cuts: Vec<f64> = Vec::with_capacity(2 * (self.len() + other.len()) + 2);
        cuts.push(0.0);
        cuts.push(TAU);
        for &(a, b) in self.arcs.iter().chain(other.arcs.iter()) {
            cuts.push(a);
            cuts.push(b);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let (mut i, mut j) = (0usize, 0usize);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            while i < self.arcs.len() && self.arcs[i].1 <= lo {
                i += 1;
            }
            while j < other.arcs.len() && other.arcs[j].1 <= lo {
                j += 1;
            }
            let in_a = i < self.arcs.len() && self.arcs[i].0 <= lo;
            let in_b = j < other.arcs.len() && other.arcs[j].0 <= lo;
            if op(in_a, in_b) {
                match out.last_mut() {
                    Some(last) if last.1 == lo => last.1 = hi,
                    _ => out.push((lo, hi)),
                }
            }
        }
        ArcSet { arcs: out }
    }

    /// Translate by `shift` (mod 2π).
    pub fn rotate(&self, shift: f64) -> ArcSet {
        ArcSet::from_arcs(self.arcs.iter().map(|&(a, b)| (a + shift, b + shift)))
    }

    /// Maximal arcs of the complement as `(start, end)` with `end` possibly
    /// beyond 2π for the gap that wraps.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        if self.arcs.is_empty() {
            return vec![(0.0, TAU)];
        }
        let mut out = Vec::with_capacity(self.arcs.len());
        for w in self.arcs.windows(2) {
            out.push((w[0].1, w[1].0));
        }
        let first = self.arcs[0].0;
        let last = self.arcs[self.arcs.len() - 1].1;
        if first > 0.0 || last < TAU {
            out.push((last, first + TAU));
        }
        out
    }

    /// Maximal runs of the set itself, with the run through 0 glued together.
    pub fn runs(&self) -> Vec<(f64, f64)> {
        let n = self.arcs.len();
        if n >= 2 && self.arcs[0].0 == 0.0 && self.arcs[n - 1].1 == TAU {
            let mut out: Vec<(f64, f64)> = self.arcs[1..n - 1].to_vec();
            out.push((self.arcs[n - 1].0, self.arcs[0].1 + TAU));
            out
        } else {
            self.arcs.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["start", "end"])?;
        for &(a, b) in &self.arcs {
            wr.write_record([fmt_f64(a), fmt_f64(b)])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<ArcSet> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "start" || &headers[1] != "end" {
            return Err(Error::Format(format!("expected header start,end; got {headers:?}")));
        }
        let mut pairs = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let a = parse_f64(&rec[0])?;
            let b = parse_f64(&rec[1])?;
            pairs.push((a, b));
        }
        Ok(ArcSet::from_arcs(pairs))
    }
}

pub(crate) fn fmt_f64(x: f64) -> String {
    // `{:?}` is the shortest round-trip representation.
    format!("{x:?}")
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
}
