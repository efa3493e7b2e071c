use std::io::BufReader;

use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use tangentscope_core::dyadic::{
    lemma_l4_function, sample_rects, saks_function, tx2_cover, Dyadic, DyadicRect, DyadicStep2D, RareSequence,
};
use tangentscope_core::{ArcSet, DiagnosticCode, Error, GridFunction};

fn rational(d: &Dyadic) -> BigRational {
    BigRational::new(d.numerator().clone(), num_bigint::BigInt::one() << d.den_pow2())
}

#[test]
fn grid_and_arc_files_round_trip() {
    let f = GridFunction::from_fn(257, |t| t.sin() - 0.1 * t).unwrap();
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    assert_eq!(GridFunction::read_csv(&buf[..]).unwrap().samples(), f.samples());

    let e = ArcSet::from_arcs([(0.25, 0.5), (1.0, 3.0), (6.0, 6.2)]);
    let mut buf = Vec::new();
    e.write_csv(&mut buf).unwrap();
    let back = ArcSet::read_csv(&buf[..]).unwrap();
    assert_eq!(back.len(), 3);
    assert_eq!(back.measure(), e.measure());
}

#[test]
fn l4_block_survives_the_node_table() {
    let q = DyadicRect::square(1, 2, 1);
    let block = lemma_l4_function(2, &q, 512).unwrap();
    let mut buf = Vec::new();
    block.f.write_node_csv(&mut buf).unwrap();
    let back = DyadicStep2D::read_node_csv(BufReader::new(&buf[..])).unwrap();
    assert_eq!(back.resolution(), block.f.resolution());
    assert_eq!(back.l1_norm(), block.f.l1_norm());
    assert!(back.marginals_vanish());
    // the block has mean zero on its square and vanishes outside it
    assert!(back.integral(&q).is_zero());
    assert!(back.integral(&DyadicRect::square(2, 2, 1)).is_zero());
    assert!(back.integral(&DyadicRect::square(1, 1, 1)).is_zero());
}

#[test]
fn rectangle_and_sequence_json() {
    let r = DyadicRect::new(num_bigint::BigInt::one() << 70u32, 3, 80, 2);
    let s = serde_json::to_string(&r).unwrap();
    assert!(s.contains("\"1180591620717411303424\""), "{s}");
    assert_eq!(serde_json::from_str::<DyadicRect>(&s).unwrap(), r);

    let d = RareSequence::evens(5);
    assert_eq!(serde_json::to_string(&d).unwrap(), "[2,4,6,8,10]");
    assert!(serde_json::from_str::<RareSequence>("[3,2]").is_err());
}

#[test]
fn refusals_carry_a_code() {
    let q = DyadicRect::square(1, 1, 0);
    match lemma_l4_function(3, &q, 100) {
        Err(Error::Refused(d)) => assert_eq!(d.code, DiagnosticCode::ResolutionCap),
        other => panic!("expected a refusal, got {:?}", other.map(|b| b.params)),
    }
    match saks_function(&RareSequence::new(vec![1, 2, 3, 100]).unwrap(), 2, 512) {
        Err(Error::Refused(d)) => assert_eq!(d.stage, Some(2)),
        other => panic!("expected a refusal, got ok = {}", other.is_ok()),
    }
}

#[test]
fn one_stage_saks_function_is_exact() {
    let delta = RareSequence::new(vec![1, 2, 3, 100]).unwrap();
    let s = saks_function(&delta, 1, 512).unwrap();
    let parts = s.parts.iter().fold(BigRational::zero(), |acc, p| acc + rational(&p.l1_norm()));
    // one stage, scaled by 1/2
    assert_eq!(rational(&s.f.l1_norm()) * BigRational::from_integer(2.into()), parts);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rounding_up_keeps_a_fixed_fraction(seed in any::<u64>()) {
        let delta = RareSequence::evens(12);
        for r in sample_rects(1, 24, 8, seed) {
            let c = tx2_cover(&r, &delta).unwrap();
            prop_assert!(c.holds());
            prop_assert!(r.contains(&c.refined));
            prop_assert!(delta.contains(c.refined.m1) && delta.contains(c.refined.m2));
        }
    }

    #[test]
    fn sampled_rects_lie_in_the_unit_square(lo in 0u32..40, span in 0u32..40, seed in any::<u64>()) {
        let unit = DyadicRect::square(1, 1, 0);
        for r in sample_rects(lo, lo + span, 4, seed) {
            prop_assert!((lo..=lo + span).contains(&r.m1));
            prop_assert!(unit.contains(&r));
        }
    }
}
