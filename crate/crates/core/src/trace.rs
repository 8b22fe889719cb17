//! The execution trace: an ordered record of every invocation, delivery,
//! response, and crash in a run. The trace is the single source of ground
//! truth; the oracle derives providing sets and property verdicts from it
//! without consulting any module-internal state.

use alloc::vec::Vec;

use crate::ids::{Label, ObjectIndex, ObjectSet, ReaderId, Value, WriterId};
use crate::object::ReadRecord;
use crate::token::TokenScope;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Sequential identifier of a high-level read operation within a run.
pub type ReadOpId = u32;
/// Sequential identifier of a high-level audit operation within a run.
pub type AuditOpId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EventKind {
    InvokeWrite { writer: WriterId, label: Label, value: Value },
    DeliverWrite { object: ObjectIndex, label: Label },
    AckWrite { object: ObjectIndex, label: Label },
    CompleteWrite { writer: WriterId, label: Label },

    InvokeRead { reader: ReaderId, op: ReadOpId },
    DeliverLabelQuery { object: ObjectIndex, reader: ReaderId, op: ReadOpId },
    RespondLabelQuery { object: ObjectIndex, reader: ReaderId, op: ReadOpId, label: Option<Label> },
    DeliverRead {
        object: ObjectIndex,
        reader: ReaderId,
        op: ReadOpId,
        requested: Option<Label>,
        token: Option<TokenScope>,
    },
    /// `returned` is the label of the served block (`None` for bottom);
    /// `logged` tells whether the object appended a record while serving.
    RespondRead {
        object: ObjectIndex,
        reader: ReaderId,
        op: ReadOpId,
        returned: Option<Label>,
        logged: bool,
    },
    CompleteRead { reader: ReaderId, op: ReadOpId, recovered: Option<Label> },

    InvokeAudit { op: AuditOpId },
    DeliverGetLog { object: ObjectIndex, op: AuditOpId },
    RespondGetLog { object: ObjectIndex, op: AuditOpId, records: Vec<ReadRecord> },
    CompleteAudit { op: AuditOpId },

    CrashObject { object: ObjectIndex },
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Event {
    pub ordinal: u64,
    pub kind: EventKind,
}

/// Who participated in the run. Reader fault flags matter to the oracle:
/// the accuracy properties protect correct readers only.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Cast {
    pub n: u8,
    pub writers: Vec<WriterId>,
    pub readers: Vec<ReaderInfo>,
    pub faulty_objects: ObjectSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ReaderInfo {
    pub id: ReaderId,
    pub faulty: bool,
}

impl Cast {
    pub fn reader_is_faulty(&self, id: ReaderId) -> Option<bool> {
        self.readers.iter().find(|r| r.id == id).map(|r| r.faulty)
    }
}

/// A finished execution: the cast plus the ordered event sequence. Event
/// ordinals equal positions in `events`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ExecutionTrace {
    pub cast: Cast,
    pub events: Vec<Event>,
}

impl ExecutionTrace {
    pub fn push(&mut self, kind: EventKind) -> u64 {
        let ordinal = self.events.len() as u64;
        self.events.push(Event { ordinal, kind });
        ordinal
    }

    pub fn next_ordinal(&self) -> u64 {
        self.events.len() as u64
    }

    /// Events strictly before `ordinal`.
    pub fn prefix(&self, ordinal: u64) -> &[Event] {
        let end = (ordinal as usize).min(self.events.len());
        &self.events[..end]
    }

    /// Ordinal of the invocation event of audit `op`, if present.
    pub fn audit_invocation(&self, op: AuditOpId) -> Option<u64> {
        self.events.iter().find_map(|e| match e.kind {
            EventKind::InvokeAudit { op: o } if o == op => Some(e.ordinal),
            _ => None,
        })
    }
}
