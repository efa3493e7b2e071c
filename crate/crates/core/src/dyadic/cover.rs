use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::number::Dyadic;
use super::quadtree::QuadStore;
use super::rect::{DyadicRect, RareSequence, RectBasis};
use crate::error::{Diagnostic, DiagnosticCode, Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tx2Cover {
    pub rect: DyadicRect,
    /// The `Δ`-rectangle through the lower-left cell of `rect`.
    pub refined: DyadicRect,
    /// `|refined| / |rect|`.
    pub ratio: Dyadic,
    /// `4^{−γ_Δ}`.
    pub bound: Dyadic,
}

impl Tx2Cover {
    pub fn holds(&self) -> bool {
        self.ratio >= self.bound && self.rect.contains(&self.refined)
    }
}

/// Round both exponents of `rect` up into `Δ`.
pub fn tx2_cover(rect: &DyadicRect, delta: &RareSequence) -> Result<Tx2Cover> {
    let gamma = delta.gamma().max(1);
    let round = |m: u32| -> Result<u32> {
        let e = delta.round_up(m).ok_or_else(|| {
            Error::refused(
                Diagnostic::new(DiagnosticCode::SequenceTooShort, "exponent lies beyond the stored prefix of Δ")
                    .with("exponent", m)
                    .with("last", delta.last()),
            )
        })?;
        if e - m > gamma {
            return Err(Error::refused(
                Diagnostic::new(DiagnosticCode::SequenceTooShort, "exponent lies below the prefix by more than γ_Δ")
                    .with("exponent", m)
                    .with("first", delta.terms()[0])
                    .with("gamma", gamma),
            ));
        }
        Ok(e)
    };
    let (e1, e2) = (round(rect.m1)?, round(rect.m2)?);
    let refined = DyadicRect::containing(&rect.corner(), e1, e2);
    Ok(Tx2Cover {
        ratio: Dyadic::pow2(-((e1 - rect.m1 + e2 - rect.m2) as i64)),
        bound: Dyadic::pow2(-2 * gamma as i64),
        rect: rect.clone(),
        refined,
    })
}

/// Witness of quasi-coverability for one rectangle: `R ⊆ ⋃ R_k ⊆ R′`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiCertificate {
    pub ambient: DyadicRect,
    pub pieces: Vec<DyadicRect>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SearchBounds {
    pub ambient_candidates: usize,
    pub scales_tried: usize,
    pub search_resolution: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum QuasiCoverOutcome {
    Found(QuasiCertificate),
    /// Nothing within the search bounds; this is not a proof that no
    /// certificate exists.
    NotFoundWithinBounds(SearchBounds),
}

fn log2_floor(c: &Dyadic) -> i64 {
    // c = num/2^k with num > 0
    c.numerator().bits() as i64 - 1 - c.den_pow2() as i64
}

/// Search for a certificate that `rect` is quasi-covered by `pieces_basis`
/// inside an ambient rectangle of `ambient_basis`, with constant `c`.
///
/// Ambient candidates are the dyadic ancestors of `rect` whose diameter is
/// within `c` of `rect`'s, nearest first; pieces are one grid of
/// `pieces_basis` rectangles inside the ambient one, coarsest scale first.
pub fn quasi_cover_check(
    rect: &DyadicRect,
    pieces_basis: &RectBasis,
    ambient_basis: &RectBasis,
    c: &Dyadic,
    search_resolution: u32,
) -> Result<QuasiCoverOutcome> {
    if *c < Dyadic::one() {
        return Err(Error::invalid("c must be at least 1"));
    }
    if !rect.in_unit_square() {
        return Err(Error::invalid(format!("{rect} is not inside the unit square")));
    }
    if rect.m1 > search_resolution || rect.m2 > search_resolution {
        return Err(Error::invalid("rectangle is finer than the search resolution"));
    }
    let c_sq = c * c;
    let log_c = log2_floor(c);
    let diam_cap = &c_sq * &rect.diam_sq();
    let mut ambients: Vec<DyadicRect> = (0..=rect.m1)
        .flat_map(|a1| (0..=rect.m2).map(move |a2| (a1, a2)))
        .map(|(a1, a2)| rect.ancestor(a1, a2))
        .filter(|a| a.diam_sq() <= diam_cap && ambient_basis.contains(a))
        .collect();
    ambients.sort_by_key(|a| (rect.m1 - a.m1 + rect.m2 - a.m2, rect.m1 - a.m1));
    let mut scales_tried = 0;
    for amb in &ambients {
        let mut scales: Vec<(u32, u32)> = (amb.m1..=search_resolution)
            .flat_map(|e1| (amb.m2..=search_resolution).map(move |e2| (e1, e2)))
            // |R′| ≤ c|R_k|
            .filter(|&(e1, e2)| (e1 + e2 - amb.m1 - amb.m2) as i64 <= log_c)
            .filter(|&(e1, e2)| pieces_basis.allows(e1, e2))
            .collect();
        scales.sort_by_key(|&(e1, e2)| (e1 + e2, e1));
        for (e1, e2) in scales {
            scales_tried += 1;
            let pieces = grid_cover(rect, e1, e2);
            if pieces.iter().any(|p| !pieces_basis.contains(p)) {
                continue;
            }
            let cert = QuasiCertificate { ambient: amb.clone(), pieces };
            if validate_certificate(rect, &cert, pieces_basis, ambient_basis, c).is_ok() {
                return Ok(QuasiCoverOutcome::Found(cert));
            }
        }
    }
    Ok(QuasiCoverOutcome::NotFoundWithinBounds(SearchBounds {
        ambient_candidates: ambients.len(),
        scales_tried,
        search_resolution,
    }))
}

/// The `(e1, e2)` grid rectangles meeting `rect`.
fn grid_cover(rect: &DyadicRect, e1: u32, e2: u32) -> Vec<DyadicRect> {
    let span = |i: &BigInt, m: u32, e: u32| -> (BigInt, u64) {
        if e <= m {
            (((i - 1) >> (m - e)) + 1, 1)
        } else {
            (((i - 1) << (e - m)) + 1, 1u64 << (e - m).min(63))
        }
    };
    let (x0, nx) = span(&rect.i, rect.m1, e1);
    let (y0, ny) = span(&rect.j, rect.m2, e2);
    let mut out = Vec::new();
    for dy in 0..ny {
        for dx in 0..nx {
            out.push(DyadicRect { i: &x0 + dx, j: &y0 + dy, m1: e1, m2: e2 });
            if out.len() > 1 << 16 {
                return out;
            }
        }
    }
    out
}

/// Check a certificate from scratch: membership, `R ⊆ R̃ ⊆ R′`,
/// `diam R′ ≤ c·diam R`, `|R′| ≤ c|R_k|`, `Σ|R_k| ≤ c|R̃|`, `|R̃| ≤ c|R|`.
/// Returns the first violated condition.
pub fn validate_certificate(
    rect: &DyadicRect,
    cert: &QuasiCertificate,
    pieces_basis: &RectBasis,
    ambient_basis: &RectBasis,
    c: &Dyadic,
) -> std::result::Result<(), String> {
    if cert.pieces.is_empty() {
        return Err("no pieces".into());
    }
    if !ambient_basis.contains(&cert.ambient) {
        return Err(format!("ambient {} is not in the ambient basis", cert.ambient));
    }
    if let Some(p) = cert.pieces.iter().find(|p| !pieces_basis.contains(p)) {
        return Err(format!("piece {p} is not in the covering basis"));
    }
    if let Some(p) = cert.pieces.iter().find(|p| !cert.ambient.contains(p)) {
        return Err(format!("piece {p} is not inside the ambient rectangle"));
    }
    let mut st = QuadStore::new();
    let mut sum = st.constant(0);
    for p in &cert.pieces {
        let ind = st.rect_indicator(p).map_err(|e| e.to_string())?;
        sum = st.add(sum, ind);
    }
    let union = st.map_leaves(sum, &mut |v| if v.is_zero() { Dyadic::zero() } else { Dyadic::one() });
    let depth = cert.pieces.iter().map(|p| p.m1.max(p.m2)).chain([rect.m1, rect.m2]).max().unwrap_or(0);
    let union = st.finish(union, depth).map_err(|e| e.to_string())?;
    if union.integral(rect) != rect.measure() {
        return Err("the pieces do not cover the rectangle".into());
    }
    if cert.ambient.diam_sq() > &(c * c) * &rect.diam_sq() {
        return Err("diam R′ > c·diam R".into());
    }
    let amb = cert.ambient.measure();
    if let Some(p) = cert.pieces.iter().find(|p| amb > c * &p.measure()) {
        return Err(format!("|R′| > c|{p}|"));
    }
    let covered = union.total();
    let total: Dyadic = cert.pieces.iter().map(DyadicRect::measure).sum();
    if total > c * &covered {
        return Err("Σ|R_k| > c|R̃|".into());
    }
    if covered > c * &rect.measure() {
        return Err("|R̃| > c|R|".into());
    }
    Ok(())
}

/// Fraction of rectangle shapes (one representative per exponent pair up to
/// `s`) of `rect_basis` that admit a certificate. Evidence only: a finite
/// sweep says nothing about finer scales.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuasiSweep {
    pub shapes: usize,
    pub covered: usize,
    pub uncovered: Vec<(u32, u32)>,
}

pub fn quasi_cover_sweep(
    rect_basis: &RectBasis,
    pieces_basis: &RectBasis,
    ambient_basis: &RectBasis,
    c: &Dyadic,
    s: u32,
    search_resolution: u32,
) -> Result<QuasiSweep> {
    let mut out = QuasiSweep { shapes: 0, covered: 0, uncovered: Vec::new() };
    for m1 in 0..=s {
        for m2 in 0..=s {
            if !rect_basis.allows(m1, m2) {
                continue;
            }
            out.shapes += 1;
            let r = DyadicRect::new(1, 1, m1, m2);
            match quasi_cover_check(&r, pieces_basis, ambient_basis, c, search_resolution)? {
                QuasiCoverOutcome::Found(_) => out.covered += 1,
                QuasiCoverOutcome::NotFoundWithinBounds(_) => out.uncovered.push((m1, m2)),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tx2_examples() {
        let all = RareSequence::all(20);
        let r = DyadicRect::new(3, 7, 3, 5);
        let t = tx2_cover(&r, &all).unwrap();
        assert_eq!(t.refined, r);
        assert_eq!(t.ratio, Dyadic::one());
        let t = tx2_cover(&r, &RareSequence::evens(10)).unwrap();
        assert_eq!((t.refined.m1, t.refined.m2), (4, 6));
        assert_eq!(t.ratio, Dyadic::pow2(-2));
        assert!(t.holds());
        assert!(tx2_cover(&DyadicRect::new(1, 1, 30, 2), &RareSequence::evens(10)).is_err());
    }

    #[test]
    fn hand_built_certificates() {
        let r = DyadicRect::new(2, 3, 3, 5);
        let evens = RectBasis::Rare(RareSequence::evens(10));
        let pieces: Vec<DyadicRect> = (0..2)
            .flat_map(|dy| (0..2).map(move |dx| DyadicRect::new(3 + dx, 5 + dy, 4, 6)))
            .collect();
        let cert = QuasiCertificate { ambient: r.clone(), pieces: pieces.clone() };
        assert!(validate_certificate(&r, &cert, &evens, &RectBasis::AllDyadic, &Dyadic::from_int(4)).is_ok());
        // dropping a piece leaves part of R uncovered
        let short = QuasiCertificate { ambient: r.clone(), pieces: pieces[..3].to_vec() };
        assert!(validate_certificate(&r, &short, &evens, &RectBasis::AllDyadic, &Dyadic::from_int(4)).is_err());
        // |R′| ≤ c|R_k| fails for c = 2
        assert!(validate_certificate(&r, &cert, &evens, &RectBasis::AllDyadic, &Dyadic::from_int(2)).is_err());
    }

    #[test]
    fn search_examples() {
        let one = Dyadic::one();
        let r = DyadicRect::new(3, 6, 4, 3);
        let QuasiCoverOutcome::Found(cert) =
            quasi_cover_check(&r, &RectBasis::AllDyadic, &RectBasis::AllDyadic, &one, 10).unwrap()
        else {
            panic!("self-cover must be found")
        };
        assert_eq!(cert, QuasiCertificate { ambient: r.clone(), pieces: vec![r.clone()] });

        let r = DyadicRect::new(2, 3, 3, 5);
        let evens = RectBasis::Rare(RareSequence::evens(10));
        let four = Dyadic::from_int(4);
        let QuasiCoverOutcome::Found(cert) = quasi_cover_check(&r, &evens, &RectBasis::AllDyadic, &four, 12).unwrap()
        else {
            panic!("even cover must be found")
        };
        assert!(cert.pieces.iter().all(|p| (p.m1, p.m2) == (4, 6)));
        assert_eq!(cert.pieces.len(), 4);
        assert!(validate_certificate(&r, &cert, &evens, &RectBasis::AllDyadic, &four).is_ok());

        let thin = DyadicRect::new(1, 1, 1, 12);
        let out = quasi_cover_check(&thin, &RectBasis::Squares, &RectBasis::AllDyadic, &Dyadic::from_int(2), 16).unwrap();
        assert!(matches!(out, QuasiCoverOutcome::NotFoundWithinBounds(_)));
    }

    #[test]
    fn tx2_ratio_sweep() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let delta = RareSequence::new(vec![1, 2, 5, 6, 9, 12, 13, 20]).unwrap();
        for _ in 0..500 {
            let (m1, m2) = (rng.gen_range(0..=20), rng.gen_range(0..=20));
            let r = DyadicRect::new(rng.gen_range(1..=1i64 << m1), rng.gen_range(1..=1i64 << m2), m1, m2);
            let t = tx2_cover(&r, &delta).unwrap();
            assert!(t.holds(), "{r}");
            assert!(delta.contains(t.refined.m1) && delta.contains(t.refined.m2));
        }
    }
}
