//! Model configuration and the protocol-level pieces of the high-level
//! write/read emulation: read outcome accumulation across a reader's
//! lifetime and the label-selection rule of the two-round read.
//!
//! The message-by-message execution of the protocols is driven by the
//! deterministic scheduler in [`crate::sim`]; everything here is pure.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::dispersal::{Block, Codec, CodecParams};
use crate::ids::{Label, ObjectIndex, ReaderId, Value};
use crate::trace::ReadOpId;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// How high-level reads are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ReadMode {
    /// One round trip: ask for blocks, recover from whatever arrives.
    #[default]
    Fast,
    /// Two rounds: discover the freshest label held by `n - f` objects,
    /// then fetch blocks for that label only.
    NonFast,
}

/// Whether read requests carry capability tokens, and how they are scoped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Signing {
    #[default]
    None,
    /// One token per read operation, valid for any value.
    Generic,
    /// Tokens scoped to the specific label being fetched (two-round only).
    Specific,
}

/// The model variant under simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ModelConfig {
    pub n: u8,
    pub f: u8,
    pub tau: u8,
    pub t: u8,
    #[cfg_attr(feature = "serde", serde(default))]
    pub read_mode: ReadMode,
    #[cfg_attr(feature = "serde", serde(default))]
    pub signing: Signing,
    #[cfg_attr(feature = "serde", serde(default))]
    pub total_order: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigError {
    ObjectCount(u8),
    FaultBudget { n: u8, f: u8 },
    Threshold { f: u8, tau: u8, n: u8 },
    EvidenceThreshold { t: u8, n: u8 },
    SpecificSigningNeedsTwoRounds,
    TotalOrderNeedsFastReads,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::ObjectCount(n) => write!(f, "object count n={n} out of range"),
            ConfigError::FaultBudget { n, f: ff } => {
                write!(f, "fault budget f={ff} must satisfy 0 <= f < n={n}")
            }
            ConfigError::Threshold { f: ff, tau, n } => {
                write!(f, "block threshold tau={tau} must satisfy f={ff} < tau <= n={n}")
            }
            ConfigError::EvidenceThreshold { t, n } => {
                write!(f, "evidence threshold t={t} must satisfy 1 <= t <= n={n}")
            }
            ConfigError::SpecificSigningNeedsTwoRounds => {
                write!(f, "specific tokens require the two-round read mode")
            }
            ConfigError::TotalOrderNeedsFastReads => {
                write!(f, "total order is modelled with fast reads only")
            }
        }
    }
}

impl core::error::Error for ConfigError {}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n < 1 || self.n > crate::ids::ObjectSet::MAX_OBJECTS {
            return Err(ConfigError::ObjectCount(self.n));
        }
        if self.f >= self.n {
            return Err(ConfigError::FaultBudget { n: self.n, f: self.f });
        }
        if self.tau <= self.f || self.tau > self.n {
            return Err(ConfigError::Threshold { f: self.f, tau: self.tau, n: self.n });
        }
        if self.t < 1 || self.t > self.n {
            return Err(ConfigError::EvidenceThreshold { t: self.t, n: self.n });
        }
        if self.signing == Signing::Specific && self.read_mode != ReadMode::NonFast {
            return Err(ConfigError::SpecificSigningNeedsTwoRounds);
        }
        if self.total_order && self.read_mode != ReadMode::Fast {
            return Err(ConfigError::TotalOrderNeedsFastReads);
        }
        Ok(())
    }

    pub fn codec_params(&self) -> CodecParams {
        CodecParams::new(self.n, self.tau).expect("validated config")
    }

    /// Size of an available quorum: responses a client can always wait for.
    pub fn quorum(&self) -> u8 {
        self.n - self.f
    }
}

/// What one high-level read operation yielded.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ReadOutcome {
    pub reader: ReaderId,
    pub op: ReadOpId,
    /// Blocks received within this operation.
    pub blocks_received: Vec<Block>,
    /// Value recovered from blocks accumulated across the reader's
    /// lifetime, newest qualifying label first.
    pub recovered: Option<(Label, Value)>,
    /// Whether the operation completed (enough responses arrived).
    pub complete: bool,
}

/// Blocks a reader has accumulated so far, across operations. A value can
/// become recoverable only after several reads each contributed blocks.
/// Stored as a small sorted vector; per-reader label counts stay tiny.
#[derive(Debug, Clone, Default)]
pub struct ReaderAccumulator {
    per_label: Vec<(Label, Vec<Block>)>,
}

impl ReaderAccumulator {
    pub fn absorb(&mut self, block: Block) {
        let blocks = match self.per_label.iter_mut().find(|(l, _)| *l == block.label) {
            Some((_, blocks)) => blocks,
            None => {
                self.per_label.push((block.label, Vec::new()));
                self.per_label.sort_by_key(|(l, _)| *l);
                &mut self
                    .per_label
                    .iter_mut()
                    .find(|(l, _)| *l == block.label)
                    .expect("just inserted")
                    .1
            }
        };
        if !blocks.iter().any(|b| b.index == block.index) {
            blocks.push(block);
        }
    }

    pub fn distinct_blocks(&self, label: Label) -> usize {
        self.per_label
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, blocks)| blocks.len())
            .unwrap_or(0)
    }

    /// Try to recover the newest label with at least `tau` distinct blocks.
    pub fn recover(&self, codec: &Codec) -> Option<(Label, Value)> {
        let tau = codec.params().tau as usize;
        for (label, blocks) in self.per_label.iter().rev() {
            if blocks.len() >= tau {
                if let Ok(value) = codec.combine(blocks) {
                    return Some((*label, value));
                }
            }
        }
        None
    }
}

/// First-round selection rule of the two-round read: the freshest label
/// reported as stored by at least `n - f` of the responding objects.
pub fn select_round1_label(
    responses: &[(ObjectIndex, Option<Label>)],
    cfg: &ModelConfig,
) -> Option<Label> {
    let mut counts: BTreeMap<Label, u8> = BTreeMap::new();
    for (_, label) in responses {
        if let Some(l) = label {
            *counts.entry(*l).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .filter(|&(_, c)| c >= cfg.quorum())
        .map(|(l, _)| l)
        .max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::WriterId;
    use alloc::vec;

    fn cfg() -> ModelConfig {
        ModelConfig {
            n: 5,
            f: 1,
            tau: 3,
            t: 1,
            read_mode: ReadMode::NonFast,
            signing: Signing::None,
            total_order: false,
        }
    }

    fn l(seq: u32) -> Label {
        Label::new(WriterId(1), seq)
    }

    #[test]
    fn config_invariants() {
        assert!(cfg().validate().is_ok());
        assert!(ModelConfig { f: 5, ..cfg() }.validate().is_err());
        assert!(ModelConfig { tau: 1, ..cfg() }.validate().is_err());
        assert!(ModelConfig { tau: 6, ..cfg() }.validate().is_err());
        assert!(ModelConfig { t: 0, ..cfg() }.validate().is_err());
        assert!(ModelConfig { t: 6, ..cfg() }.validate().is_err());
        assert!(ModelConfig { signing: Signing::Specific, read_mode: ReadMode::Fast, ..cfg() }
            .validate()
            .is_err());
        assert!(ModelConfig { total_order: true, read_mode: ReadMode::NonFast, ..cfg() }
            .validate()
            .is_err());
    }

    #[test]
    fn round1_label_needs_quorum_support() {
        let c = cfg(); // quorum = 4
        let o = ObjectIndex;
        // Fresh label held by 3 < 4 objects, older by 2: nothing qualifies.
        let responses = vec![
            (o(1), Some(l(2))),
            (o(2), Some(l(2))),
            (o(3), Some(l(2))),
            (o(4), Some(l(1))),
            (o(5), Some(l(1))),
        ];
        assert_eq!(select_round1_label(&responses, &c), None);
        // Four supporters qualify; the freshest qualifying label wins.
        let responses = vec![
            (o(1), Some(l(2))),
            (o(2), Some(l(2))),
            (o(3), Some(l(2))),
            (o(4), Some(l(2))),
            (o(5), Some(l(1))),
        ];
        assert_eq!(select_round1_label(&responses, &c), Some(l(2)));
    }

    #[test]
    fn accumulator_recovers_across_operations() {
        let c = cfg();
        let codec = Codec::new(c.codec_params(), 3);
        let v = Value::new(vec![0x42]).unwrap();
        let blocks = codec.split(&v, l(1));
        let mut acc = ReaderAccumulator::default();
        acc.absorb(blocks[0].clone());
        acc.absorb(blocks[1].clone());
        assert_eq!(acc.recover(&codec), None);
        // Re-receiving a block changes nothing.
        acc.absorb(blocks[1].clone());
        assert_eq!(acc.distinct_blocks(l(1)), 2);
        acc.absorb(blocks[4].clone());
        assert_eq!(acc.recover(&codec), Some((l(1), v)));
    }
}
