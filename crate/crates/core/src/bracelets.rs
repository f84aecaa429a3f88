//! Bracelet enumeration: legal cyclic cut states modulo rotation and
//! reflection, streamed in increasing representative order and split into
//! deterministic index shards.
//!
//! Bit packing matches the rest of the crate: spin 0 is the MSB of the `m`
//! low bits, so integer order on packed states is lexicographic order on
//! their strings. A bracelet's representative is the smallest packed value
//! over all rotations of the state and of its reversal.
//!
//! Generation walks the classic necklace tree (extend a prenecklace a spin
//! at a time, tracking the period; a completed string is a necklace iff the
//! period divides m), pruning occupied-occupied branches for models with a
//! vertical constraint, and keeps a necklace only when no rotation of its
//! reversal is smaller — which leaves exactly one representative per
//! bracelet orbit. No list is ever materialized; the live state is one
//! stack of prefixes.

use crate::spin::{column_legal_bits, Boundary, Direction, Model};

#[derive(Debug, thiserror::Error)]
pub enum BraceletError {
    #[error("state {0} is not a legal cyclic cut for the model")]
    IllegalState(String),
    #[error("shard index {index} out of range for {count} shards")]
    IndexOutOfRange { index: u64, count: u64 },
}

/// One orbit representative: the `m` low bits of `bits`, spin 0 at the MSB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bracelet {
    pub bits: u64,
    pub m: usize,
}

impl Bracelet {
    /// Render as a `0`/`1` string, spin 0 leftmost.
    pub fn string(&self) -> String {
        crate::exact::state_string(self.bits, self.m)
    }

    /// Parse a `0`/`1` string (any length 2..=63) back into a bracelet; the
    /// input must already be a canonical representative.
    pub fn from_string(s: &str) -> Option<Bracelet> {
        let m = s.len();
        if !(2..=63).contains(&m) {
            return None;
        }
        let mut bits = 0u64;
        for ch in s.chars() {
            bits = (bits << 1)
                | match ch {
                    '0' => 0,
                    '1' => 1,
                    _ => return None,
                };
        }
        if canonical_form(bits, m) != bits {
            return None;
        }
        Some(Bracelet { bits, m })
    }
}

impl std::fmt::Display for Bracelet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.string())
    }
}

#[inline]
fn rotate_left(bits: u64, r: usize, m: usize) -> u64 {
    if r == 0 {
        return bits;
    }
    let mask = (1u64 << m) - 1;
    ((bits << r) | (bits >> (m - r))) & mask
}

#[inline]
fn reverse(bits: u64, m: usize) -> u64 {
    bits.reverse_bits() >> (64 - m)
}

fn min_rotation(bits: u64, m: usize) -> u64 {
    let mut best = bits;
    for r in 1..m {
        let rot = rotate_left(bits, r, m);
        if rot < best {
            best = rot;
        }
    }
    best
}

/// Smallest packed value over the full dihedral orbit.
pub fn canonical_form(bits: u64, m: usize) -> u64 {
    assert!((2..=63).contains(&m), "bracelet length out of range");
    min_rotation(bits, m).min(min_rotation(reverse(bits, m), m))
}

/// Canonicalize a legal cyclic cut state.
pub fn canonicalize(model: Model, bits: u64, m: usize) -> Result<Bracelet, BraceletError> {
    if !column_legal_bits(model, bits, m, Boundary::Cyclic) {
        return Err(BraceletError::IllegalState(crate::exact::state_string(bits, m)));
    }
    Ok(Bracelet { bits: canonical_form(bits, m), m })
}

/// A pending prefix in the necklace tree: `len` spins assigned (spin 0 in
/// the high bit of `bits`), current period `period`.
struct Frame {
    len: u32,
    period: u32,
    bits: u64,
}

/// Streaming enumeration of the legal bracelets of length `m`, strictly
/// increasing. Memory is O(m) frames regardless of how many bracelets the
/// stream yields.
pub struct BraceletIter {
    m: usize,
    constrained: bool,
    stack: Vec<Frame>,
}

pub fn enumerate_bracelets(model: Model, m: usize) -> BraceletIter {
    assert!((2..=63).contains(&m), "bracelet length out of range");
    BraceletIter {
        m,
        constrained: model.forbids(Direction::Vertical),
        // Occupied branch below the vacant one so vacant pops first.
        stack: vec![
            Frame { len: 1, period: 1, bits: 1 },
            Frame { len: 1, period: 1, bits: 0 },
        ],
    }
}

impl Iterator for BraceletIter {
    type Item = Bracelet;

    fn next(&mut self) -> Option<Bracelet> {
        let m = self.m as u32;
        while let Some(Frame { len, period, bits }) = self.stack.pop() {
            if len == m {
                if m % period != 0 {
                    continue; // periodic prefix of a longer word, not a necklace
                }
                if self.constrained && bits & 1 == 1 && (bits >> (m - 1)) & 1 == 1 {
                    continue; // occupied pair across the seam
                }
                // Keep the necklace only if its reversal offers nothing
                // smaller; otherwise this orbit is emitted elsewhere.
                if min_rotation(reverse(bits, self.m), self.m) < bits {
                    continue;
                }
                return Some(Bracelet { bits, m: self.m });
            }

            let last = bits & 1;
            // Copy branch: repeat the spin one period back, preserving the
            // period. With spin i at bit len-i, that spin sits at period-1.
            let copied = (bits >> (period - 1)) & 1;
            // Raise branch: place an occupied spin, resetting the period to
            // the new length. Only valid where the copy would place vacant.
            if copied == 0 && !(self.constrained && last == 1) {
                self.stack.push(Frame {
                    len: len + 1,
                    period: len + 1,
                    bits: (bits << 1) | 1,
                });
            }
            if !(self.constrained && copied == 1 && last == 1) {
                self.stack.push(Frame {
                    len: len + 1,
                    period,
                    bits: (bits << 1) | copied,
                });
            }
        }
        None
    }
}

pub fn count_bracelets(model: Model, m: usize) -> u64 {
    enumerate_bracelets(model, m).count() as u64
}

/// A contiguous slice of the enumeration order, reproducible from
/// `(model, m, shard_count, shard_index)` alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShardSpec {
    pub m: usize,
    pub shard_count: u64,
    pub shard_index: u64,
    /// First enumeration index of the shard.
    pub start: u64,
    /// One past the last enumeration index.
    pub end: u64,
}

impl ShardSpec {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Split the enumeration into `shard_count` nearly equal contiguous ranges
/// (sizes differ by at most one).
pub fn shard_range(
    model: Model,
    m: usize,
    shard_count: u64,
    shard_index: u64,
) -> Result<ShardSpec, BraceletError> {
    if shard_count == 0 || shard_index >= shard_count {
        return Err(BraceletError::IndexOutOfRange { index: shard_index, count: shard_count });
    }
    let total = count_bracelets(model, m) as u128;
    let start = (total * shard_index as u128 / shard_count as u128) as u64;
    let end = (total * (shard_index as u128 + 1) / shard_count as u128) as u64;
    Ok(ShardSpec { m, shard_count, shard_index, start, end })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::ALL_MODELS;
    use std::collections::BTreeSet;

    #[test]
    fn canonicalize_examples() {
        // 1000 -> 0001
        let b = canonicalize(Model::HardSquares, 0b1000, 4).unwrap();
        assert_eq!(b.string(), "0001");
        // 0101 is already minimal
        let b = canonicalize(Model::HardSquares, 0b0101, 4).unwrap();
        assert_eq!(b.string(), "0101");
        // a state and its reflection agree
        let a = canonicalize(Model::HardSquares, 0b100100, 6).unwrap();
        let r = canonicalize(Model::HardSquares, reverse(0b100100, 6), 6).unwrap();
        assert_eq!(a, r);
        // illegal input is refused
        assert!(matches!(
            canonicalize(Model::HardSquares, 0b0011, 4),
            Err(BraceletError::IllegalState(_))
        ));
    }

    #[test]
    fn canonicalize_is_idempotent_and_orbit_constant() {
        for m in 2..=9usize {
            for bits in 0..(1u64 << m) {
                if !column_legal_bits(Model::Rwim, bits, m, Boundary::Cyclic) {
                    continue;
                }
                let c = canonical_form(bits, m);
                assert_eq!(canonical_form(c, m), c, "idempotent at {bits:#b} m={m}");
                for r in 0..m {
                    assert_eq!(canonical_form(rotate_left(bits, r, m), m), c);
                    assert_eq!(canonical_form(rotate_left(reverse(bits, m), r, m), m), c);
                }
            }
        }
    }

    #[test]
    fn known_counts() {
        // The two-occupied classes that would make HardSquares m=4 have a
        // fourth orbit are cyclically illegal; only three orbits exist.
        assert_eq!(count_bracelets(Model::HardSquares, 4), 3);
        assert_eq!(count_bracelets(Model::HardSquares, 6), 5);
        assert_eq!(count_bracelets(Model::Nak, 6), 5);
        assert_eq!(count_bracelets(Model::Rwim, 4), 6);
        assert_eq!(count_bracelets(Model::Rwim, 6), 13);
    }

    #[test]
    fn hard_squares_m6_representatives() {
        let got: Vec<String> = enumerate_bracelets(Model::HardSquares, 6)
            .map(|b| b.string())
            .collect();
        assert_eq!(got, vec!["000000", "000001", "000101", "001001", "010101"]);
    }

    fn brute_force(model: Model, m: usize) -> BTreeSet<u64> {
        (0..(1u64 << m))
            .filter(|&s| column_legal_bits(model, s, m, Boundary::Cyclic))
            .map(|s| canonical_form(s, m))
            .collect()
    }

    #[test]
    fn stream_matches_brute_force() {
        for model in ALL_MODELS {
            for m in 2..=11usize {
                let want: Vec<u64> = brute_force(model, m).into_iter().collect();
                let got: Vec<u64> = enumerate_bracelets(model, m).map(|b| b.bits).collect();
                assert_eq!(got, want, "{model} m={m}");
                assert!(got.windows(2).all(|p| p[0] < p[1]), "strictly increasing");
            }
        }
    }

    #[test]
    fn round_trip_strings() {
        for b in enumerate_bracelets(Model::Rwim, 7) {
            assert_eq!(Bracelet::from_string(&b.string()), Some(b));
        }
        // Non-canonical and malformed strings are rejected.
        assert_eq!(Bracelet::from_string("1000"), None);
        assert_eq!(Bracelet::from_string("01x1"), None);
        assert_eq!(Bracelet::from_string("1"), None);
    }

    #[test]
    fn shards_partition_the_stream() {
        let total = count_bracelets(Model::Rwim, 9);
        for shard_count in [1u64, 2, 3, 5, 7, total, total + 3] {
            let mut next_start = 0;
            let mut sizes = Vec::new();
            for i in 0..shard_count {
                let s = shard_range(Model::Rwim, 9, shard_count, i).unwrap();
                assert_eq!(s.start, next_start, "contiguous");
                next_start = s.end;
                sizes.push(s.len());
            }
            assert_eq!(next_start, total, "covers everything");
            let lo = sizes.iter().min().unwrap();
            let hi = sizes.iter().max().unwrap();
            assert!(hi - lo <= 1, "sizes differ by at most one");
        }
        assert!(matches!(
            shard_range(Model::Rwim, 9, 4, 4),
            Err(BraceletError::IndexOutOfRange { index: 4, count: 4 })
        ));
    }

    #[test]
    fn single_shard_is_full_range() {
        let s = shard_range(Model::HardSquares, 6, 1, 0).unwrap();
        assert_eq!((s.start, s.end), (0, 5));
        for i in 0..5 {
            let s = shard_range(Model::HardSquares, 6, 5, i).unwrap();
            assert_eq!(s.len(), 1);
        }
    }
}
