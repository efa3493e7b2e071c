use num_bigint::{BigInt, BigUint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lemmas::{l4_params, lemma_l4_function, L4Build};
use super::number::Dyadic;
use super::quadtree::{DyadicStep2D, QuadStore};
use super::rect::{DyadicPoint, DyadicRect, RareSequence};
use super::witness::{evaluate, WitnessClass};
use crate::error::{Diagnostic, DiagnosticCode, Error, Result};

/// One stage of the global construction: blocks of height `big_l` on every
/// square of side `2^{−level}`, sitting strictly inside the gap after `ν_p`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SaksStage {
    pub k: usize,
    pub big_l: u32,
    pub level: u32,
    pub alpha: u64,
    pub beta: Dyadic,
    /// Index (1-based) of the term `ν_p` opening the gap.
    pub gap_index: usize,
    pub gap: (u32, u32),
}

/// Greedy stage schedule: smallest admissible height, earliest usable gap.
pub fn saks_schedule(delta: &RareSequence, stages: usize, cap: u32) -> Result<Vec<SaksStage>> {
    if stages == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let terms = delta.terms();
    let mut out: Vec<SaksStage> = Vec::with_capacity(stages);
    for k in 1..=stages {
        // L_k > 2^{k−1}(β(L_{k−1}) + k − 1)
        let big_l = match out.last() {
            None => 2u32,
            Some(prev) => {
                let bound = (&prev.beta + &Dyadic::from_int(k as i64 - 1)).mul_pow2(k as i64 - 1);
                let floor = bound.to_integer().unwrap_or_else(|| bound.numerator() >> bound.den_pow2());
                let next: BigInt = floor + 1;
                u32::try_from(&next).map_err(|_| {
                    Error::refused(
                        Diagnostic::new(DiagnosticCode::ResolutionCap, "stage height does not fit any resolution budget")
                            .at_stage(k),
                    )
                })?
            }
        };
        let params = l4_params(big_l).map_err(|e| stage_refusal(e, k, big_l))?;
        let alpha = params.alpha;
        let after = out.last().map(|s| s.level as u64 + s.alpha + 1).unwrap_or(0);
        let start = out.last().map(|s| s.gap_index).unwrap_or(0);
        let mut widest: Option<(u32, u32)> = None;
        let mut found = None;
        for p in start..terms.len().saturating_sub(1) {
            let (lo, hi) = (terms[p], terms[p + 1]);
            let level = (lo as u64 + 1).max(after);
            if widest.is_none_or(|(a, b)| hi - lo > b - a) {
                widest = Some((lo, hi));
            }
            if level + alpha < hi as u64 {
                found = Some((p, level));
                break;
            }
        }
        let Some((p, level)) = found else {
            let (lo, hi) = widest.unwrap_or((delta.last(), delta.last()));
            return Err(Error::refused(
                Diagnostic::new(DiagnosticCode::SequenceTooShort, "no gap of the prefix fits ν_p < l < l + α(L) < ν_{p+1}")
                    .at_stage(k)
                    .with("L", big_l)
                    .with("alpha", alpha)
                    .with("needed_gap", alpha + 2)
                    .with("widest_gap", [lo, hi])
                    .with("earliest_level", after),
            ));
        };
        if level + alpha > cap as u64 {
            return Err(Error::refused(
                Diagnostic::new(DiagnosticCode::ResolutionCap, "stage resolution l + α(L) exceeds the cap")
                    .at_stage(k)
                    .with("L", big_l)
                    .with("needed", level + alpha)
                    .with("cap", cap),
            ));
        }
        out.push(SaksStage {
            k,
            big_l,
            level: level as u32,
            alpha,
            beta: params.beta,
            gap_index: p + 1,
            gap: (terms[p], terms[p + 1]),
        });
    }
    Ok(out)
}

fn stage_refusal(e: Error, k: usize, big_l: u32) -> Error {
    match e {
        Error::Refused(d) => Error::refused(d.at_stage(k).with("L", big_l)),
        other => other,
    }
}

/// `F = Σ_k F_k/2^k` with each `F_k` a grid of blocks, plus its stages.
#[derive(Clone, Debug)]
pub struct SaksFunction {
    pub delta: RareSequence,
    pub stages: Vec<SaksStage>,
    pub f: DyadicStep2D,
    /// `F_k` (unscaled), one per stage.
    pub parts: Vec<DyadicStep2D>,
    blocks: Vec<L4Build>,
}

pub fn saks_function(delta: &RareSequence, stages: usize, cap: u32) -> Result<SaksFunction> {
    let schedule = saks_schedule(delta, stages, cap)?;
    let last = schedule.last().expect("at least one stage");
    let terms_in_cap = delta.terms().iter().copied().filter(|&t| t <= cap).max().unwrap_or(0);
    let resolution = (last.level + last.alpha as u32).max(terms_in_cap);
    let mut st = QuadStore::new();
    let mut sum = st.constant(0);
    let mut parts = Vec::with_capacity(schedule.len());
    let mut blocks = Vec::with_capacity(schedule.len());
    for s in &schedule {
        let block = lemma_l4_function(s.big_l, &DyadicRect::unit(), cap)?;
        let b = st.import(&block.f);
        let part = st.uniform(b, s.level);
        parts.push(st.finish(part, s.level + s.alpha as u32)?);
        let scaled = st.scale(part, &Dyadic::pow2(-(s.k as i64)));
        sum = st.add(sum, scaled);
        blocks.push(block);
    }
    Ok(SaksFunction { delta: delta.clone(), stages: schedule, f: st.finish(sum, resolution)?, parts, blocks })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SaksStageAudit {
    pub k: usize,
    pub sup_norm: Dyadic,
    pub beta: Dyadic,
    /// Every block's rows and columns integrate to zero, hence every dyadic
    /// rectangle with `len ≥ 2^{−l_k}` integrates `F_k` to zero.
    pub block_marginals_vanish: bool,
    pub coarse_rects: usize,
    pub coarse_nonzero: usize,
    /// `|average of F|` over the witness rectangles of this stage.
    pub witness_classes: Vec<WitnessClass>,
    pub min_witness_average: Dyadic,
    /// `L_k/2`.
    pub witness_threshold: Dyadic,
}

impl SaksStageAudit {
    pub fn holds(&self) -> bool {
        self.sup_norm <= self.beta
            && self.block_marginals_vanish
            && self.coarse_nonzero == 0
            && self.min_witness_average > self.witness_threshold
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizationCheck {
    pub point: DyadicPoint,
    pub rect: DyadicRect,
    pub average: Dyadic,
    pub truncated_sum: Dyadic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SaksAudit {
    pub stages: Vec<SaksStageAudit>,
    pub l1_norm: Dyadic,
    pub witnesses_cover: bool,
    pub stabilization_checked: usize,
    pub stabilization_failures: Vec<StabilizationCheck>,
}

impl SaksAudit {
    pub fn holds(&self) -> bool {
        self.stages.iter().all(SaksStageAudit::holds)
            && self.l1_norm <= Dyadic::from_int(2)
            && self.witnesses_cover
            && self.stabilization_failures.is_empty()
    }
}

fn random_point(rng: &mut ChaCha8Rng, s: u32) -> DyadicPoint {
    let mut coord = || {
        let words = (s as usize).div_ceil(32).max(1);
        let digits: Vec<u32> = (0..words).map(|_| rng.gen()).collect();
        let v = BigUint::from_slice(&digits) >> (32 * words as u32 - s);
        Dyadic::new(BigInt::from(v), s as i64)
    };
    let x = coord();
    DyadicPoint::new(x, coord())
}

impl SaksFunction {
    /// `Σ_{l_j < e} F_j(x)/2^j`: the value every `Δ`-rectangle through `x`
    /// with `len = 2^{−e}` must average to.
    pub fn truncated_sum(&self, x: &DyadicPoint, e: u32) -> Dyadic {
        self.stages
            .iter()
            .zip(&self.parts)
            .filter(|(s, _)| s.level < e)
            .map(|(s, p)| p.value_at(x).mul_pow2(-(s.k as i64)))
            .sum()
    }

    pub fn audit(&self, samples: usize, seed: u64) -> Result<SaksAudit> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stages = Vec::with_capacity(self.stages.len());
        let mut witnesses_cover = true;
        for ((s, part), block) in self.stages.iter().zip(&self.parts).zip(&self.blocks) {
            let block_nodes = part.nodes_at_level(s.level);
            let block_marginals_vanish = block_nodes.iter().all(|&n| part.node_marginals_vanish(n));
            // dyadic rectangles with len ≥ 2^{−l_k}: one exponent at most l_k
            let coarse: Vec<DyadicRect> = (0..samples)
                .map(|_| {
                    let a = rng.gen_range(0..=s.level);
                    let b = rng.gen_range(0..=part.resolution());
                    let (m1, m2) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
                    let p = random_point(&mut rng, part.resolution());
                    DyadicRect::containing(&p, m1, m2)
                })
                .collect();
            let coarse_nonzero = coarse.iter().filter(|r| !part.integral(r).is_zero()).count();
            witnesses_cover &= block.patterns().iter().all(|p| p.covers_square());
            let starts = self.f.nodes_at_level(s.level);
            let classes = evaluate(&self.f, block.patterns(), &starts, 0, &block.level_exps(s.level));
            let min_witness_average =
                classes.iter().map(|c| c.min_abs_average.clone()).min().unwrap_or_else(Dyadic::zero);
            stages.push(SaksStageAudit {
                k: s.k,
                sup_norm: part.sup_abs(),
                beta: s.beta.clone(),
                block_marginals_vanish,
                coarse_rects: coarse.len(),
                coarse_nonzero,
                witness_classes: classes,
                min_witness_average,
                witness_threshold: Dyadic::new(s.big_l as i64, 1),
            });
        }
        let s = self.f.resolution();
        let terms: Vec<u32> = self.delta.terms().iter().copied().filter(|&t| t <= s).collect();
        let mut checked = 0;
        let mut failures = Vec::new();
        for _ in 0..samples {
            let x = random_point(&mut rng, s);
            for &m1 in &terms {
                for &m2 in &terms {
                    let r = DyadicRect::containing(&x, m1, m2);
                    let average = self.f.average(&r)?;
                    let truncated_sum = self.truncated_sum(&x, r.len_exp());
                    checked += 1;
                    if average != truncated_sum {
                        failures.push(StabilizationCheck { point: x.clone(), rect: r, average, truncated_sum });
                    }
                }
            }
        }
        Ok(SaksAudit {
            stages,
            l1_norm: self.f.l1_norm(),
            witnesses_cover,
            stabilization_checked: checked,
            stabilization_failures: failures,
        })
    }
}
