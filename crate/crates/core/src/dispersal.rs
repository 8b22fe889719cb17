//! Threshold information dispersal: split a value into `n` coded blocks so
//! that any `tau` of them reconstruct it and fewer than `tau` leave every
//! candidate value possible.
//!
//! The scheme is Shamir-style polynomial sharing per payload byte over
//! GF(257), with the block index as evaluation point. Coefficients come from
//! a keyed deterministic stream seeded by the label and the parameters, so
//! identical inputs always produce identical blocks and whole executions can
//! be replayed bit for bit.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::gf;
use crate::ids::{Label, ObjectIndex, Value};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Codec parameters: total block count `n` and reconstruction threshold `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CodecParams {
    pub n: u8,
    pub tau: u8,
}

impl CodecParams {
    pub fn new(n: u8, tau: u8) -> Result<Self, CodecError> {
        if n == 0 || n > crate::ids::ObjectSet::MAX_OBJECTS {
            return Err(CodecError::InvalidParams { n, tau });
        }
        if tau < 1 || tau > n {
            return Err(CodecError::InvalidParams { n, tau });
        }
        Ok(CodecParams { n, tau })
    }
}

/// One coded share of a value: the label of the write it belongs to, the
/// index of the object it was generated for, and one field element per
/// payload byte.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Block {
    pub label: Label,
    pub index: ObjectIndex,
    pub share: Arc<[u16]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecError {
    InvalidParams { n: u8, tau: u8 },
    /// Fewer blocks than the reconstruction threshold.
    InsufficientBlocks { got: usize, needed: u8 },
    /// The supplied blocks carry more than one label.
    MixedLabels,
    /// Two blocks share an index.
    DuplicateIndex(ObjectIndex),
    /// Share lengths disagree, or a reconstructed element is not a byte.
    MalformedShares,
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::InvalidParams { n, tau } => {
                write!(f, "invalid codec parameters n={n} tau={tau}")
            }
            CodecError::InsufficientBlocks { got, needed } => {
                write!(f, "{got} blocks cannot reconstruct, {needed} required")
            }
            CodecError::MixedLabels => write!(f, "blocks carry different labels"),
            CodecError::DuplicateIndex(k) => write!(f, "duplicate block index {k}"),
            CodecError::MalformedShares => write!(f, "share payloads are malformed"),
        }
    }
}

impl core::error::Error for CodecError {}

/// The dispersal codec. `key` salts the coefficient stream so distinct
/// executions can use unrelated share values while staying reproducible.
#[derive(Debug, Clone, Copy)]
pub struct Codec {
    params: CodecParams,
    key: u64,
}

impl Codec {
    pub fn new(params: CodecParams, key: u64) -> Self {
        Codec { params, key }
    }

    pub fn params(&self) -> CodecParams {
        self.params
    }

    /// Split `value` into `n` blocks with indices `1..=n`, all carrying
    /// `label`. Deterministic in `(value, label, params, key)`.
    pub fn split(&self, value: &Value, label: Label) -> Vec<Block> {
        let CodecParams { n, tau } = self.params;
        let mut stream = CoefficientStream::new(self.key, label, self.params);
        // Degree tau-1 polynomial per byte: constant term is the byte, the
        // remaining tau-1 coefficients come from the stream.
        let mut polys: Vec<Vec<u16>> = Vec::with_capacity(value.len());
        for &byte in value.bytes() {
            let mut coeffs = Vec::with_capacity(tau as usize);
            coeffs.push(byte as u16);
            for _ in 1..tau {
                coeffs.push(stream.next_element());
            }
            polys.push(coeffs);
        }
        (1..=n)
            .map(|k| {
                let share: Vec<u16> =
                    polys.iter().map(|coeffs| gf::eval_poly(coeffs, k as u16)).collect();
                Block { label, index: ObjectIndex(k), share: share.into() }
            })
            .collect()
    }

    /// Recover the value from at least `tau` blocks of one label. Exactly
    /// the first `tau` blocks in ascending index order are used.
    pub fn combine(&self, blocks: &[Block]) -> Result<Value, CodecError> {
        let tau = self.params.tau;
        if blocks.len() < tau as usize {
            return Err(CodecError::InsufficientBlocks { got: blocks.len(), needed: tau });
        }
        let label = blocks[0].label;
        if blocks.iter().any(|b| b.label != label) {
            return Err(CodecError::MixedLabels);
        }
        let mut sorted: Vec<&Block> = blocks.iter().collect();
        sorted.sort_by_key(|b| b.index);
        for pair in sorted.windows(2) {
            if pair[0].index == pair[1].index {
                return Err(CodecError::DuplicateIndex(pair[0].index));
            }
        }
        let chosen = &sorted[..tau as usize];
        let len = chosen[0].share.len();
        if chosen.iter().any(|b| b.share.len() != len) {
            return Err(CodecError::MalformedShares);
        }
        let mut payload = Vec::with_capacity(len);
        let mut points: Vec<(u16, u16)> = Vec::with_capacity(tau as usize);
        for pos in 0..len {
            points.clear();
            points.extend(chosen.iter().map(|b| (b.index.0 as u16, b.share[pos])));
            let elem = gf::interpolate_at_zero(&points);
            if elem > 0xFF {
                return Err(CodecError::MalformedShares);
            }
            payload.push(elem as u8);
        }
        Value::new(payload).map_err(|_| CodecError::MalformedShares)
    }
}

/// Deterministic coefficient source: splitmix64 over a seed absorbed from
/// the key, the label, and the parameters.
struct CoefficientStream {
    state: u64,
}

impl CoefficientStream {
    fn new(key: u64, label: Label, params: CodecParams) -> Self {
        let mut state = key ^ 0x9E37_79B9_7F4A_7C15;
        for word in [
            label.writer.0 as u64,
            label.seq as u64,
            params.n as u64,
            params.tau as u64,
        ] {
            state = splitmix(state ^ word.wrapping_mul(0xD134_2543_DE82_EF95));
        }
        CoefficientStream { state }
    }

    fn next_element(&mut self) -> u16 {
        self.state = splitmix(self.state);
        (self.state % gf::P as u64) as u16
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::WriterId;
    use alloc::vec;

    fn label() -> Label {
        Label::new(WriterId(1), 1)
    }

    fn codec(n: u8, tau: u8) -> Codec {
        Codec::new(CodecParams::new(n, tau).unwrap(), 7)
    }

    // Test-local modular arithmetic, kept independent of the gf module so
    // reconstruction is checked through a second route.
    mod oracle {
        pub const P: u32 = 257;

        pub fn inv(a: u32) -> u32 {
            assert!(a % P != 0);
            (1..P).find(|&b| (a * b) % P == 1).unwrap()
        }

        /// Solve a square linear system over GF(257) by Gaussian
        /// elimination. Returns None if singular.
        pub fn solve(mut m: alloc::vec::Vec<alloc::vec::Vec<u32>>) -> Option<alloc::vec::Vec<u32>> {
            let rows = m.len();
            for col in 0..rows {
                let pivot = (col..rows).find(|&r| m[r][col] % P != 0)?;
                m.swap(col, pivot);
                let piv_inv = inv(m[col][col] % P);
                for x in m[col].iter_mut() {
                    *x = (*x * piv_inv) % P;
                }
                for r in 0..rows {
                    if r != col && m[r][col] % P != 0 {
                        let factor = m[r][col] % P;
                        for c in 0..=rows {
                            let sub = (factor * m[col][c]) % P;
                            m[r][c] = (m[r][c] + P * P - sub) % P;
                        }
                    }
                }
            }
            Some((0..rows).map(|r| m[r][rows] % P).collect())
        }

        /// Fit the degree <= points.len()-1 polynomial through the points
        /// and return its value at zero.
        pub fn fit_at_zero(points: &[(u32, u32)]) -> u32 {
            let k = points.len();
            let m: alloc::vec::Vec<alloc::vec::Vec<u32>> = points
                .iter()
                .map(|&(x, y)| {
                    let mut row: alloc::vec::Vec<u32> =
                        (0..k).map(|p| super::gf::pow(x as u16, p as u32) as u32).collect();
                    row.push(y);
                    row
                })
                .collect();
            solve(m).expect("distinct evaluation points")[0]
        }
    }

    #[test]
    fn degenerate_single_block() {
        let c = codec(1, 1);
        let v = Value::new(vec![0x2A]).unwrap();
        let blocks = c.split(&v, label());
        assert_eq!(blocks.len(), 1);
        assert_eq!(c.combine(&blocks).unwrap(), v);
    }

    #[test]
    fn every_threshold_subset_reconstructs_n5_tau3() {
        let c = codec(5, 3);
        let v = Value::new(vec![0x01, 0x02]).unwrap();
        let blocks = c.split(&v, label());
        assert_eq!(blocks.len(), 5);
        for a in 0..5 {
            for b in a + 1..5 {
                for d in b + 1..5 {
                    let subset =
                        [blocks[a].clone(), blocks[b].clone(), blocks[d].clone()];
                    assert_eq!(c.combine(&subset).unwrap(), v);
                    // Independent route: fit the polynomial per byte.
                    for pos in 0..2 {
                        let points: alloc::vec::Vec<(u32, u32)> = subset
                            .iter()
                            .map(|blk| (blk.index.0 as u32, blk.share[pos] as u32))
                            .collect();
                        assert_eq!(oracle::fit_at_zero(&points), v.bytes()[pos] as u32);
                    }
                }
            }
        }
        // Spot-check the spec's two named subsets agree.
        let first = c.combine(&blocks[0..3]).unwrap();
        let last = c.combine(&blocks[2..5]).unwrap();
        assert_eq!(first, last);
        assert_eq!(first, v);
    }

    #[test]
    fn any_two_of_four_reconstruct() {
        let c = codec(4, 2);
        let v = Value::new(vec![0xFF]).unwrap();
        let blocks = c.split(&v, label());
        for a in 0..4 {
            for b in a + 1..4 {
                assert_eq!(c.combine(&[blocks[a].clone(), blocks[b].clone()]).unwrap(), v);
            }
        }
    }

    #[test]
    fn below_threshold_fails() {
        let c = codec(5, 3);
        let v = Value::new(vec![9, 8, 7]).unwrap();
        let blocks = c.split(&v, label());
        let err = c.combine(&blocks[0..2]).unwrap_err();
        assert_eq!(err, CodecError::InsufficientBlocks { got: 2, needed: 3 });
    }

    #[test]
    fn mixed_labels_and_duplicates_rejected() {
        let c = codec(3, 2);
        let v = Value::new(vec![5]).unwrap();
        let blocks = c.split(&v, label());
        let other = c.split(&v, Label::new(WriterId(1), 2));
        assert_eq!(
            c.combine(&[blocks[0].clone(), other[1].clone()]).unwrap_err(),
            CodecError::MixedLabels
        );
        assert_eq!(
            c.combine(&[blocks[0].clone(), blocks[0].clone()]).unwrap_err(),
            CodecError::DuplicateIndex(ObjectIndex(1))
        );
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(CodecParams::new(3, 4).is_err());
        assert!(CodecParams::new(3, 0).is_err());
        assert!(CodecParams::new(0, 0).is_err());
    }

    #[test]
    fn split_is_deterministic() {
        let c = codec(6, 4);
        let v = Value::new(vec![1, 2, 3, 4]).unwrap();
        assert_eq!(c.split(&v, label()), c.split(&v, label()));
        // A different key yields a different sharing of the same value.
        let c2 = Codec::new(c.params(), 8);
        assert_ne!(c.split(&v, label()), c2.split(&v, label()));
        assert_eq!(c2.combine(&c2.split(&v, label())).unwrap(), v);
    }

    #[test]
    fn partial_knowledge_is_consistent_with_every_byte() {
        // For any tau-1 shares of a 1-byte value, every candidate byte
        // admits a coefficient vector matching those shares: solve the
        // linear system per candidate and count solutions.
        let c = codec(5, 3);
        let secret = Value::new(vec![0x5C]).unwrap();
        let blocks = c.split(&secret, label());
        let partial = &blocks[1..3]; // two shares, tau-1 = 2
        let mut consistent = 0u32;
        for candidate in 0u32..=255 {
            // System: sum_i a_i x^i = y - candidate for each share.
            let m: alloc::vec::Vec<alloc::vec::Vec<u32>> = partial
                .iter()
                .map(|b| {
                    let x = b.index.0 as u32;
                    let rhs = (b.share[0] as u32 + oracle::P - candidate) % oracle::P;
                    vec![x % oracle::P, (x * x) % oracle::P, rhs]
                })
                .collect();
            if oracle::solve(m).is_some() {
                consistent += 1;
            }
        }
        assert_eq!(consistent, 256);
    }
}
