//! Randomized property tests across the library surface.

use ncsim_core::coding::{rank_oracle, CodedMessage, SubspaceBuffer};
use ncsim_core::galois::{FieldContext, FieldElement};
use ncsim_core::radio::{reception_probability, ChannelParams};
use proptest::prelude::*;

proptest! {
    #[test]
    fn addition_is_self_inverse(q in prop::sample::select(vec![1u8, 4, 8, 16]), v in any::<u16>()) {
        let ctx = FieldContext::new(q).unwrap();
        let mask = (ctx.size() - 1) as u16;
        let a = ctx.element(v & mask).unwrap();
        prop_assert_eq!(ctx.add(a, a), FieldElement::ZERO);
        prop_assert_eq!(ctx.add(a, FieldElement::ZERO), a);
    }

    #[test]
    fn q16_multiplication_by_nonzero_is_injective(a in 1u16..=u16::MAX, x in any::<u16>(), y in any::<u16>()) {
        let ctx = FieldContext::new(16).unwrap();
        let a = ctx.element(a).unwrap();
        let (x, y) = (ctx.element(x).unwrap(), ctx.element(y).unwrap());
        if x != y {
            prop_assert_ne!(ctx.mul(a, x), ctx.mul(a, y));
        }
    }

    #[test]
    fn reception_probability_is_monotone(
        power in 1e-9f64..1e3,
        noise in 1e-16f64..1e-10,
        z_db in 0f64..60.0,
        eta in 1f64..4.0,
        d1 in 0.1f64..1e4,
        factor in 1.0f64..10.0,
        power_boost in 1.0f64..100.0,
    ) {
        let params = ChannelParams::new(power, noise, z_db, eta).unwrap();
        let d2 = d1 * factor;
        let p1 = reception_probability(&params, d1);
        let p2 = reception_probability(&params, d2);
        prop_assert!((0.0..=1.0).contains(&p1));
        prop_assert!(p2 <= p1, "farther is never easier: {p2} > {p1}");

        let stronger = ChannelParams::new(power * power_boost, noise, z_db, eta).unwrap();
        prop_assert!(reception_probability(&stronger, d1) >= p1);
    }

    #[test]
    fn serialization_roundtrips(
        q in prop::sample::select(vec![1u8, 4, 8, 16]),
        n in 1usize..12,
        r in 1usize..6,
        seed in any::<u64>(),
    ) {
        use rand::{rngs::StdRng, SeedableRng};
        let ctx = FieldContext::new(q).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let msg = CodedMessage {
            coefficients: (0..n).map(|_| ctx.sample(&mut rng)).collect(),
            payload: (0..r).map(|_| ctx.sample(&mut rng)).collect(),
        };
        let bytes = msg.to_bytes(q);
        prop_assert_eq!(bytes.len(), CodedMessage::packed_len(q, n, r));
        let back = CodedMessage::from_bytes(&bytes, q, n, r).unwrap();
        prop_assert_eq!(back, msg);
    }

    #[test]
    fn buffer_dimension_tracks_rank_and_never_decreases(
        q in prop::sample::select(vec![1u8, 4, 8]),
        n in 2usize..7,
        rows in proptest::collection::vec(proptest::collection::vec(any::<u16>(), 2..7), 1..14),
    ) {
        let ctx = FieldContext::new(q).unwrap();
        let mask = (ctx.size() - 1) as u16;
        let mut buffer = SubspaceBuffer::empty(n, 1).unwrap();
        let mut raw: Vec<Vec<FieldElement>> = Vec::new();
        let mut last_dim = 0;
        for row in rows {
            let coefficients: Vec<FieldElement> = (0..n)
                .map(|k| ctx.element(row.get(k).copied().unwrap_or(0) & mask).unwrap())
                .collect();
            let msg = CodedMessage {
                coefficients: coefficients.clone(),
                payload: vec![FieldElement::ONE],
            };
            raw.push(coefficients);
            let innovative = buffer.insert(&ctx, &msg).unwrap();
            prop_assert_eq!(innovative, buffer.dim() == last_dim + 1);
            prop_assert!(buffer.dim() >= last_dim);
            prop_assert!(buffer.dim() <= n);
            prop_assert_eq!(buffer.dim(), rank_oracle(&ctx, &raw));
            last_dim = buffer.dim();
        }
    }

    #[test]
    fn encode_stays_in_span(seed in any::<u64>(), extra in 0usize..4) {
        use rand::{rngs::StdRng, SeedableRng};
        let ctx = FieldContext::new(8).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let n = 5;
        let mut buffer = SubspaceBuffer::empty(n, 2).unwrap();
        for _ in 0..=extra {
            let msg = CodedMessage {
                coefficients: (0..n).map(|_| ctx.sample(&mut rng)).collect(),
                payload: (0..2).map(|_| ctx.sample(&mut rng)).collect(),
            };
            let _ = buffer.insert(&ctx, &msg).unwrap();
        }
        prop_assume!(buffer.dim() > 0);
        let encoded = buffer.encode(&ctx, &mut rng).unwrap();
        prop_assert!(encoded.coefficients.iter().any(|c| !c.is_zero()));
        let mut rows = buffer.coefficient_matrix();
        let rank = rank_oracle(&ctx, &rows);
        rows.push(encoded.coefficients);
        prop_assert_eq!(rank_oracle(&ctx, &rows), rank);
    }
}
