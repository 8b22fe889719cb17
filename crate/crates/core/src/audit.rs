//! Evidence collection over an auditing quorum.
//!
//! An audit gathers logs from all `n` objects in parallel, proceeds once
//! `n - f` have responded (an empty log is a response), groups the distinct
//! records by (reader, label), and reports an evidence for every group
//! attested by at least `t` distinct objects. In signed variants, records
//! that no suitable received token backs are discarded before counting.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::emulation::{ModelConfig, Signing};
use crate::ids::{Label, ObjectIndex, ObjectSet, ReaderId};
use crate::object::ReadRecord;
use crate::token::TokenRegistry;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// The attesting objects behind one reported (reader, label) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Evidence {
    pub reader: ReaderId,
    pub label: Label,
    pub attesting: ObjectSet,
}

impl Evidence {
    pub fn count(&self) -> u8 {
        self.attesting.len()
    }

    /// The one-line rendering used in reports.
    pub fn render_line(&self) -> String {
        format!(
            "reader={} label={}:{} objects={} count={}",
            self.reader.0,
            self.label.writer.0,
            self.label.seq,
            self.attesting,
            self.count()
        )
    }
}

/// Everything an audit produced: the quorum used, the raw collected logs,
/// records rejected by token verification, and the evidences themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AuditReport {
    /// Ordinal of this audit's invocation event in the trace.
    pub audit_ordinal: u64,
    /// Evidence threshold in force when the report was produced.
    pub t: u8,
    pub quorum: ObjectSet,
    /// Log returned by each quorum member, in index order.
    pub collected_logs: Vec<(ObjectIndex, Vec<ReadRecord>)>,
    /// Records dropped by token verification, with the object that served them.
    pub rejected: Vec<(ObjectIndex, ReadRecord)>,
    /// Evidences with at least `t` attesting objects, sorted by (reader, label).
    pub evidences: Vec<Evidence>,
}

impl AuditReport {
    pub fn evidence_for(&self, reader: ReaderId, label: Label) -> Option<&Evidence> {
        self.evidences.iter().find(|e| e.reader == reader && e.label == label)
    }

    /// Objects in the quorum whose collected log contains `record`,
    /// after verification filtering.
    pub fn attesting_objects(&self, record: &ReadRecord) -> ObjectSet {
        let mut set = ObjectSet::EMPTY;
        for (k, log) in &self.collected_logs {
            if log.contains(record) && !self.rejected.contains(&(*k, *record)) {
                set.insert(*k);
            }
        }
        set
    }

    pub fn render_lines(&self) -> Vec<String> {
        self.evidences.iter().map(Evidence::render_line).collect()
    }
}

/// Verify one record against the token registry: accept when the recording
/// object actually received a token minted for the record's reader whose
/// scope covers the record's label.
pub fn verify_record(
    object: ObjectIndex,
    record: &ReadRecord,
    registry: &TokenRegistry,
) -> bool {
    registry.object_can_attest(object, record)
}

/// Group the collected logs into evidences. `collected` must hold exactly
/// the quorum's responses. Verification applies only in signed variants.
pub fn evaluate(
    collected: &[(ObjectIndex, Vec<ReadRecord>)],
    cfg: &ModelConfig,
    registry: &TokenRegistry,
) -> (Vec<Evidence>, Vec<(ObjectIndex, ReadRecord)>) {
    let mut rejected: Vec<(ObjectIndex, ReadRecord)> = Vec::new();
    let verify = cfg.signing != Signing::None;

    // Tally attesting objects per distinct verified record in one pass.
    let mut tallies: Vec<(ReadRecord, ObjectSet)> = Vec::new();
    for (object, log) in collected {
        for record in log {
            if verify && !verify_record(*object, record, registry) {
                rejected.push((*object, *record));
                continue;
            }
            match tallies.iter_mut().find(|(r, _)| r == record) {
                Some((_, attesting)) => attesting.insert(*object),
                None => tallies.push((*record, ObjectSet::EMPTY.with(*object))),
            }
        }
    }

    let mut evidences: Vec<Evidence> = tallies
        .into_iter()
        .filter(|(_, attesting)| attesting.len() >= cfg.t)
        .map(|(record, attesting)| Evidence { reader: record.reader, label: record.label, attesting })
        .collect();
    evidences.sort_by_key(|e| (e.reader, e.label));
    (evidences, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emulation::{ReadMode, Signing};
    use crate::ids::WriterId;
    use crate::token::TokenScope;
    use alloc::vec;

    fn cfg(t: u8, signing: Signing) -> ModelConfig {
        ModelConfig {
            n: 5,
            f: 1,
            tau: 3,
            t,
            read_mode: if signing == Signing::Specific { ReadMode::NonFast } else { ReadMode::Fast },
            signing,
            total_order: false,
        }
    }

    fn rec(reader: u16, seq: u32) -> ReadRecord {
        ReadRecord { reader: ReaderId(reader), label: Label::new(WriterId(1), seq) }
    }

    fn logs(entries: &[(u8, &[ReadRecord])]) -> Vec<(ObjectIndex, Vec<ReadRecord>)> {
        entries
            .iter()
            .map(|(k, records)| (ObjectIndex(*k), records.to_vec()))
            .collect()
    }

    #[test]
    fn empty_logs_yield_no_evidence() {
        let collected = logs(&[(1, &[]), (2, &[]), (3, &[]), (4, &[])]);
        let (ev, rej) = evaluate(&collected, &cfg(1, Signing::None), &TokenRegistry::new());
        assert!(ev.is_empty());
        assert!(rej.is_empty());
    }

    #[test]
    fn threshold_filters_evidences() {
        let r = rec(1, 1);
        let collected = logs(&[(1, &[r]), (2, &[r]), (3, &[]), (4, &[])]);
        let (ev, _) = evaluate(&collected, &cfg(2, Signing::None), &TokenRegistry::new());
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].attesting, ObjectSet::from_indices([ObjectIndex(1), ObjectIndex(2)]));
        let (ev, _) = evaluate(&collected, &cfg(3, Signing::None), &TokenRegistry::new());
        assert!(ev.is_empty());
    }

    #[test]
    fn lone_fabrication_below_threshold_reports_nothing() {
        // One faulty object fabricates a record; with t=2 no evidence forms.
        let collected = logs(&[(1, &[rec(7, 1)]), (2, &[]), (3, &[]), (4, &[])]);
        let (ev, _) = evaluate(&collected, &cfg(2, Signing::None), &TokenRegistry::new());
        assert!(ev.is_empty());
        let (ev, _) = evaluate(&collected, &cfg(1, Signing::None), &TokenRegistry::new());
        assert_eq!(ev.len(), 1);
    }

    #[test]
    fn verification_discards_unbacked_records() {
        let mut registry = TokenRegistry::new();
        let token = registry.mint(ReaderId(1), TokenScope::AnyValue);
        registry.deliver(ObjectIndex(2), token);

        // Object 2 served reader 1 (token received); object 1 fabricates a
        // record about reader 9 that no request ever backed.
        let collected = logs(&[(1, &[rec(9, 1)]), (2, &[rec(1, 1)]), (3, &[]), (4, &[])]);
        let (ev, rej) = evaluate(&collected, &cfg(1, Signing::Generic), &registry);
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].reader, ReaderId(1));
        assert_eq!(rej, vec![(ObjectIndex(1), rec(9, 1))]);
    }

    #[test]
    fn specific_token_replay_on_other_label_rejected() {
        let mut registry = TokenRegistry::new();
        let token =
            registry.mint(ReaderId(1), TokenScope::Specific(Label::new(WriterId(1), 1)));
        registry.deliver(ObjectIndex(1), token);

        // The faulty object replays reader 1's token for label 1:1 to back
        // a record citing label 1:2.
        let collected = logs(&[(1, &[rec(1, 2)]), (2, &[]), (3, &[]), (4, &[])]);
        let (ev, rej) = evaluate(&collected, &cfg(1, Signing::Specific), &registry);
        assert!(ev.is_empty());
        assert_eq!(rej.len(), 1);
        // The same record scoped to the token's own label is accepted.
        let collected = logs(&[(1, &[rec(1, 1)]), (2, &[]), (3, &[]), (4, &[])]);
        let (ev, rej) = evaluate(&collected, &cfg(1, Signing::Specific), &registry);
        assert_eq!(ev.len(), 1);
        assert!(rej.is_empty());
    }

    #[test]
    fn raising_t_never_adds_evidences() {
        let collected = logs(&[
            (1, &[rec(1, 1), rec(2, 1)]),
            (2, &[rec(1, 1)]),
            (3, &[rec(1, 1), rec(2, 1)]),
            (4, &[]),
        ]);
        let registry = TokenRegistry::new();
        let mut previous: Option<Vec<Evidence>> = None;
        for t in 1..=5 {
            let (ev, _) = evaluate(&collected, &cfg(t, Signing::None), &registry);
            if let Some(prev) = previous {
                for e in &ev {
                    assert!(prev.iter().any(|p| p.reader == e.reader && p.label == e.label));
                }
            }
            previous = Some(ev);
        }
    }

    #[test]
    fn render_line_format() {
        let e = Evidence {
            reader: ReaderId(1),
            label: Label::new(WriterId(2), 7),
            attesting: ObjectSet::from_indices([ObjectIndex(4), ObjectIndex(2)]),
        };
        assert_eq!(e.render_line(), "reader=1 label=2:7 objects=[2,4] count=2");
    }
}
