//! Bracelet enumeration against brute force over every cut state, plus
//! orbit-invariance properties of the canonical form.

use std::collections::BTreeSet;

use kappa_core::bracelets::{
    canonical_form, canonicalize, count_bracelets, enumerate_bracelets, shard_range, Bracelet,
    BraceletError,
};
use kappa_core::spin::{column_legal_bits, Boundary, Model, ALL_MODELS};
use proptest::prelude::*;

fn rotate(bits: u64, m: usize, k: usize) -> u64 {
    let k = k % m;
    if k == 0 {
        return bits;
    }
    let mask = (1u64 << m) - 1;
    ((bits >> k) | (bits << (m - k))) & mask
}

fn reflect(bits: u64, m: usize) -> u64 {
    let mut out = 0u64;
    for i in 0..m {
        out = (out << 1) | ((bits >> i) & 1);
    }
    out
}

#[test]
fn enumeration_matches_brute_force() {
    for model in ALL_MODELS {
        for m in 2..=16usize {
            let brute: BTreeSet<u64> = (0..(1u64 << m))
                .filter(|&b| column_legal_bits(model, b, m, Boundary::Cyclic))
                .map(|b| canonical_form(b, m))
                .collect();
            let streamed: Vec<u64> = enumerate_bracelets(model, m).map(|b| b.bits).collect();
            assert!(
                streamed.windows(2).all(|w| w[0] < w[1]),
                "{model} m={m}: stream not strictly increasing"
            );
            let streamed_set: BTreeSet<u64> = streamed.iter().copied().collect();
            assert_eq!(streamed_set, brute, "{model} m={m}");
            assert_eq!(count_bracelets(model, m), brute.len() as u64, "{model} m={m} count");
        }
    }
}

#[test]
fn known_bracelet_counts() {
    // The memory model allows every cut state, so its counts are the plain
    // binary bracelet numbers.
    let binary = [3u64, 4, 6, 8, 13, 18, 30, 46, 78, 126, 224, 380, 687, 1224, 2250];
    for (k, &want) in binary.iter().enumerate() {
        assert_eq!(count_bracelets(Model::Rwim, k + 2), want, "rwim m={}", k + 2);
    }
    // Hard squares at m=4: three orbits (0000, 0001, 0101). Worth pinning
    // because it is easy to miscount by treating 0101 and 1010 as distinct.
    assert_eq!(count_bracelets(Model::HardSquares, 4), 3);
    assert_eq!(count_bracelets(Model::HardSquares, 6), 5);
    assert_eq!(count_bracelets(Model::HardSquares, 12), 26);
    assert_eq!(count_bracelets(Model::Nak, 12), 26);
}

#[test]
fn canonicalize_rejects_illegal_states() {
    // 0011 has adjacent occupied cells: illegal for both exclusion models,
    // legal for the memory model.
    match canonicalize(Model::HardSquares, 0b0011, 4) {
        Err(BraceletError::IllegalState(s)) => assert_eq!(s, "0011"),
        other => panic!("expected IllegalState, got {other:?}"),
    }
    assert!(canonicalize(Model::Nak, 0b0011, 4).is_err());
    let b = canonicalize(Model::Rwim, 0b0011, 4).unwrap();
    assert_eq!(b.bits, canonical_form(0b0011, 4));
}

#[test]
fn shard_ranges_partition_the_index_space() {
    for model in ALL_MODELS {
        let m = 10usize;
        let total = count_bracelets(model, m);
        for shard_count in [1u64, 2, 3, 7] {
            let mut covered = 0u64;
            let mut next_start = 0u64;
            for idx in 0..shard_count {
                let spec = shard_range(model, m, shard_count, idx).unwrap();
                assert_eq!(spec.start, next_start, "{model} {shard_count} shards, shard {idx}");
                assert!(spec.end >= spec.start);
                covered += spec.len();
                next_start = spec.end;
            }
            assert_eq!(covered, total, "{model} {shard_count} shards");
            assert_eq!(next_start, total);
        }
        match shard_range(model, m, 4, 4) {
            Err(BraceletError::IndexOutOfRange { index: 4, count: 4 }) => {}
            other => panic!("expected IndexOutOfRange, got {other:?}"),
        }
    }
}

proptest! {
    #[test]
    fn canonical_form_is_orbit_invariant(
        m in 2usize..=16,
        raw in 0u64..u64::MAX,
        k in 0usize..16,
        flip in any::<bool>(),
    ) {
        let bits = raw & ((1u64 << m) - 1);
        let mut moved = rotate(bits, m, k % m);
        if flip {
            moved = reflect(moved, m);
        }
        prop_assert_eq!(canonical_form(moved, m), canonical_form(bits, m));
        // The canonical form is itself in the orbit and minimal in it.
        let canon = canonical_form(bits, m);
        prop_assert!(canon <= bits);
        prop_assert_eq!(canonical_form(canon, m), canon);
    }

    #[test]
    fn bracelet_strings_round_trip(m in 2usize..=16, raw in 0u64..u64::MAX) {
        let bits = canonical_form(raw & ((1u64 << m) - 1), m);
        let b = Bracelet { bits, m };
        prop_assert_eq!(Bracelet::from_string(&b.string()), Some(b));
    }
}
