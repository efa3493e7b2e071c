//! Exact dyadic rectangles, step functions on `[0, 1)²` and the block
//! constructions built from them.
//!
//! Functions are hash-consed quadtrees, so self-similar constructions whose
//! cell count is astronomically large stay small and every integral is exact.

mod cover;
mod lemmas;
mod number;
mod quadtree;
mod rect;
mod saks;
mod sets;
mod witness;

pub use cover::{
    quasi_cover_check, quasi_cover_sweep, tx2_cover, validate_certificate, QuasiCertificate, QuasiCoverOutcome,
    QuasiSweep, SearchBounds, Tx2Cover,
};
pub use lemmas::{
    alpha, audit_l0, beta, delta_estimate, exterior_rects, l4_params, l4_repetitions, lemma_l0_family,
    lemma_l4_function, marginal_zero_check, sample_rects, DeltaEstimate, L0Audit, L0Family, L0Level, L4Audit, L4Build, L4Params,
    DEFAULT_RESOLUTION_CAP,
};
pub use number::Dyadic;
pub use quadtree::DyadicStep2D;
pub use rect::{DyadicPoint, DyadicRect, RareSequence, RectBasis};
pub use saks::{
    saks_function, saks_schedule, SaksAudit, SaksFunction, SaksStage, SaksStageAudit, StabilizationCheck,
};
pub use sets::{build_e_f, representation_rects, u_amplitude, u_function, v_function, EfSets, EfSummary, MAX_ORDER};
pub use witness::{WitnessClass, WitnessKind};
