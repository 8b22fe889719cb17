//! The loggable R/W register: one storage object holding a single coded
//! block and an append-only log of the reads it has served.
//!
//! Faulty objects follow a [`FaultScript`]: they may omit value responses
//! (per reader, per label, per request phase), hide their true log from
//! auditors, fabricate records, or crash. Values are never corrupted; an
//! object can only serve a block it genuinely stores.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::dispersal::Block;
use crate::ids::{Label, ObjectIndex, ReaderId};
use crate::token::SignedToken;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// A log entry: reader identity and the label of the block served.
/// Logs have set semantics, so repeat reads collapse to one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ReadRecord {
    pub reader: ReaderId,
    pub label: Label,
}

impl fmt::Display for ReadRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.reader, self.label)
    }
}

/// Which request phase an omission rule applies to. Label queries are the
/// first round of the two-round read; block reads are fast reads and second
/// rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OmitPhase {
    #[default]
    Both,
    LabelQuery,
    BlockRead,
}

/// One scripted omission: drop requests from `reader`, optionally only when
/// the stored block carries `label`, optionally only in one phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct OmitRule {
    pub reader: ReaderId,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub label: Option<Label>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub phase: OmitPhase,
}

impl OmitRule {
    fn matches(&self, reader: ReaderId, stored: Option<Label>, phase: OmitPhase) -> bool {
        if self.reader != reader {
            return false;
        }
        if !(self.phase == OmitPhase::Both || self.phase == phase) {
            return false;
        }
        match self.label {
            None => true,
            Some(l) => stored == Some(l),
        }
    }
}

/// Declarative per-object Byzantine behaviour. Every non-default field
/// requires `is_faulty`; at most `f` objects in a scenario may set it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FaultScript {
    #[cfg_attr(feature = "serde", serde(default))]
    pub is_faulty: bool,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Vec::is_empty"))]
    pub omit_block_to: Vec<OmitRule>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub omit_records_to_audit: bool,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "BTreeSet::is_empty"))]
    pub fabricate: BTreeSet<ReadRecord>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub crash_after_event: Option<u64>,
}

impl FaultScript {
    pub fn correct() -> Self {
        Self::default()
    }

    /// A script is consistent when deviations only appear on faulty objects.
    pub fn deviates(&self) -> bool {
        !self.omit_block_to.is_empty()
            || self.omit_records_to_audit
            || !self.fabricate.is_empty()
            || self.crash_after_event.is_some()
    }
}

/// Outcome of delivering a value request to an object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Serve<T> {
    /// The object responds with `T` (a block, `None` for bottom, a label...).
    Respond(T),
    /// No response: scripted omission or crash.
    Silent,
}

/// State of one loggable register.
#[derive(Debug, Clone)]
pub struct StorageObject {
    index: ObjectIndex,
    stored: Option<Block>,
    /// Sorted, duplicate-free: logs have set semantics.
    log: Vec<ReadRecord>,
    script: FaultScript,
    crashed: bool,
}

impl StorageObject {
    pub fn new(index: ObjectIndex, script: FaultScript) -> Self {
        StorageObject { index, stored: None, log: Vec::new(), script, crashed: false }
    }

    pub fn index(&self) -> ObjectIndex {
        self.index
    }

    pub fn stored(&self) -> Option<&Block> {
        self.stored.as_ref()
    }

    pub fn stored_label(&self) -> Option<Label> {
        self.stored.as_ref().map(|b| b.label)
    }

    pub fn script(&self) -> &FaultScript {
        &self.script
    }

    /// The true log: every read this object actually served, fabrications
    /// excluded. What auditors see goes through [`Self::rw_get_log`].
    pub fn true_log(&self) -> &[ReadRecord] {
        &self.log
    }

    fn append_record(&mut self, record: ReadRecord) {
        if let Err(pos) = self.log.binary_search(&record) {
            self.log.insert(pos, record);
        }
    }

    /// Whether the object is still participating at event ordinal `now`.
    /// Once a scripted crash point is passed the object stays down.
    pub fn alive(&mut self, now: u64) -> bool {
        if let Some(limit) = self.script.crash_after_event {
            if now > limit {
                self.crashed = true;
            }
        }
        !self.crashed
    }

    pub fn crashed(&self) -> bool {
        self.crashed
    }

    /// Store a block. Objects apply every delivered write; incompleteness
    /// of a high-level write is a matter of which objects get deliveries.
    pub fn rw_write(&mut self, block: Block) {
        debug_assert_eq!(block.index, self.index, "block delivered to the wrong object");
        self.stored = Some(block);
    }

    /// Serve a read request. `requested` is set only in the second round of
    /// the two-round variant: a correct object then responds (and logs)
    /// only if it holds that exact label, and answers bottom otherwise.
    /// `token` is checked when present; a mismatched token gets no response
    /// and no record.
    pub fn rw_read(
        &mut self,
        reader: ReaderId,
        requested: Option<Label>,
        token: Option<&SignedToken>,
    ) -> Serve<Option<Block>> {
        if self.crashed {
            return Serve::Silent;
        }
        if let Some(token) = token {
            let scope_ok = match requested {
                Some(label) => token.scope.covers(label),
                None => true,
            };
            if token.reader != reader || !scope_ok {
                return Serve::Silent;
            }
        }
        let stored_label = self.stored_label();
        if self
            .script
            .omit_block_to
            .iter()
            .any(|rule| rule.matches(reader, stored_label, OmitPhase::BlockRead))
        {
            return Serve::Silent;
        }
        match (requested, self.stored.clone()) {
            (Some(want), Some(block)) if block.label == want => {
                self.append_record(ReadRecord { reader, label: block.label });
                Serve::Respond(Some(block))
            }
            (Some(_), _) => Serve::Respond(None),
            (None, Some(block)) => {
                self.append_record(ReadRecord { reader, label: block.label });
                Serve::Respond(Some(block))
            }
            (None, None) => Serve::Respond(None),
        }
    }

    /// First round of the two-round read: report the stored label without
    /// creating a record.
    pub fn rw_read_label(&mut self, reader: ReaderId) -> Serve<Option<Label>> {
        if self.crashed {
            return Serve::Silent;
        }
        let stored_label = self.stored_label();
        if self
            .script
            .omit_block_to
            .iter()
            .any(|rule| rule.matches(reader, stored_label, OmitPhase::LabelQuery))
        {
            return Serve::Silent;
        }
        Serve::Respond(stored_label)
    }

    /// Serve the log to an auditor: the true log, unless hidden by script,
    /// plus any fabricated records. Sorted and duplicate-free.
    pub fn rw_get_log(&self) -> Serve<Vec<ReadRecord>> {
        if self.crashed {
            return Serve::Silent;
        }
        let mut out =
            if self.script.omit_records_to_audit { Vec::new() } else { self.log.clone() };
        for record in &self.script.fabricate {
            if let Err(pos) = out.binary_search(record) {
                out.insert(pos, *record);
            }
        }
        Serve::Respond(out)
    }

    /// Records this object would return that it never actually served.
    pub fn fabricated_records(&self) -> impl Iterator<Item = &ReadRecord> {
        self.script.fabricate.iter().filter(move |r| !self.log.contains(r))
    }
}
