//! Ground truth over a finished trace: providing sets, effective reads, and
//! verdicts for the three audit properties.
//!
//! Everything here is derived from the event sequence alone. An object
//! belongs to the providing set of (reader, label) exactly when the trace
//! shows both a delivered write of that label's block to the object and a
//! response of that block from the object to the reader. "Before the
//! audit" is interpreted by event ordinal: an effective read counts iff its
//! qualifying responses precede the audit's invocation event.


use alloc::vec::Vec;
use core::fmt;

use crate::audit::AuditReport;
use crate::emulation::ModelConfig;
use crate::ids::{Label, ObjectSet, ReaderId};
use crate::trace::{Event, EventKind, ExecutionTrace};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// The audit properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Property {
    /// Every effective read preceding the audit is reported.
    Completeness,
    /// A correct reader that never invoked a read is not reported.
    WeakAccuracy,
    /// A correct reader is never reported for a value it did not
    /// effectively read.
    StrongAccuracy,
}

pub const ALL_PROPERTIES: [Property; 3] =
    [Property::Completeness, Property::WeakAccuracy, Property::StrongAccuracy];

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Property::Completeness => "completeness",
            Property::WeakAccuracy => "weak_accuracy",
            Property::StrongAccuracy => "strong_accuracy",
        };
        write!(f, "{name}")
    }
}

/// Objects that both stored a block of `label` and returned it to `reader`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ProvidingSet {
    pub reader: ReaderId,
    pub label: Label,
    pub objects: ObjectSet,
}

/// Verdict for one property against one audit report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PropertyVerdict {
    pub property: Property,
    pub holds: bool,
    /// The violating (reader, label) pair when the property fails.
    pub witness: Option<(ReaderId, Label)>,
}

impl PropertyVerdict {
    fn holds(property: Property) -> Self {
        PropertyVerdict { property, holds: true, witness: None }
    }

    fn violated(property: Property, reader: ReaderId, label: Label) -> Self {
        PropertyVerdict { property, holds: false, witness: Some((reader, label)) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleError {
    /// The report's audit invocation ordinal does not name an audit
    /// invocation event of this trace.
    ReportMismatch { ordinal: u64 },
    /// A reported reader is not declared in the trace cast.
    UnknownReader(ReaderId),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::ReportMismatch { ordinal } => {
                write!(f, "no audit invocation at trace ordinal {ordinal}")
            }
            OracleError::UnknownReader(r) => write!(f, "reader {r} not declared in the cast"),
        }
    }
}

impl core::error::Error for OracleError {}

fn providing_map(events: &[Event]) -> Vec<((ReaderId, Label), ObjectSet)> {
    // Few distinct labels and reader/label pairs at desk scale; linear
    // scans beat map lookups here.
    let mut delivered: Vec<(Label, ObjectSet)> = Vec::new();
    for e in events {
        if let EventKind::DeliverWrite { object, label } = e.kind {
            match delivered.iter_mut().find(|(l, _)| *l == label) {
                Some((_, set)) => set.insert(object),
                None => delivered.push((label, ObjectSet::EMPTY.with(object))),
            }
        }
    }
    let mut served: Vec<((ReaderId, Label), ObjectSet)> = Vec::new();
    for e in events {
        if let EventKind::RespondRead { object, reader, returned: Some(label), .. } = e.kind {
            let was_written = delivered
                .iter()
                .any(|(l, set)| *l == label && set.contains(object));
            if was_written {
                match served.iter_mut().find(|((r, l), _)| *r == reader && *l == label) {
                    Some((_, set)) => set.insert(object),
                    None => served.push(((reader, label), ObjectSet::EMPTY.with(object))),
                }
            }
        }
    }
    served.sort_by_key(|(key, _)| *key);
    served
}

fn providing_size(map: &[((ReaderId, Label), ObjectSet)], reader: ReaderId, label: Label) -> u8 {
    map.iter()
        .find(|((r, l), _)| *r == reader && *l == label)
        .map(|(_, set)| set.len())
        .unwrap_or(0)
}

/// Providing sets over the whole trace.
pub fn providing_sets(trace: &ExecutionTrace) -> Vec<ProvidingSet> {
    providing_sets_before(trace, trace.next_ordinal())
}

/// Providing sets over the prefix of events strictly before `ordinal`.
pub fn providing_sets_before(trace: &ExecutionTrace, ordinal: u64) -> Vec<ProvidingSet> {
    providing_map(trace.prefix(ordinal))
        .into_iter()
        .map(|((reader, label), objects)| ProvidingSet { reader, label, objects })
        .collect()
}

/// Pairs effectively read in the whole trace: providing set of size >= tau.
pub fn effective_reads(trace: &ExecutionTrace, tau: u8) -> Vec<(ReaderId, Label)> {
    effective_reads_before(trace, tau, trace.next_ordinal())
}

/// Pairs effectively read within the prefix before `ordinal`.
pub fn effective_reads_before(
    trace: &ExecutionTrace,
    tau: u8,
    ordinal: u64,
) -> Vec<(ReaderId, Label)> {
    providing_sets_before(trace, ordinal)
        .into_iter()
        .filter(|p| p.objects.len() >= tau)
        .map(|p| (p.reader, p.label))
        .collect()
}

fn reader_invoked_before(trace: &ExecutionTrace, reader: ReaderId, ordinal: u64) -> bool {
    trace
        .prefix(ordinal)
        .iter()
        .any(|e| matches!(e.kind, EventKind::InvokeRead { reader: r, .. } if r == reader))
}

fn audit_ordinal_checked(trace: &ExecutionTrace, report: &AuditReport) -> Result<u64, OracleError> {
    let ordinal = report.audit_ordinal;
    let is_audit_invocation = trace
        .events
        .get(ordinal as usize)
        .map(|e| matches!(e.kind, EventKind::InvokeAudit { .. }))
        .unwrap_or(false);
    if !is_audit_invocation {
        return Err(OracleError::ReportMismatch { ordinal });
    }
    Ok(ordinal)
}

/// Prefix analysis shared by the property checks on one report.
struct AuditView {
    at: u64,
    providing: Vec<((ReaderId, Label), ObjectSet)>,
}

impl AuditView {
    fn new(trace: &ExecutionTrace, report: &AuditReport) -> Result<Self, OracleError> {
        let at = audit_ordinal_checked(trace, report)?;
        Ok(AuditView { at, providing: providing_map(trace.prefix(at)) })
    }

    fn verdict(
        &self,
        property: Property,
        trace: &ExecutionTrace,
        report: &AuditReport,
        cfg: &ModelConfig,
    ) -> Result<PropertyVerdict, OracleError> {
        match property {
            Property::Completeness => {
                // Applies to every reader, faulty ones included: the audit
                // exists to catch partial readers too. The providing map is
                // sorted, so the first missing pair is the witness.
                for ((reader, label), objects) in &self.providing {
                    if objects.len() >= cfg.tau
                        && report.evidence_for(*reader, *label).is_none()
                    {
                        return Ok(PropertyVerdict::violated(property, *reader, *label));
                    }
                }
                Ok(PropertyVerdict::holds(property))
            }
            Property::WeakAccuracy => {
                for e in &report.evidences {
                    let faulty = trace
                        .cast
                        .reader_is_faulty(e.reader)
                        .ok_or(OracleError::UnknownReader(e.reader))?;
                    if !faulty && !reader_invoked_before(trace, e.reader, self.at) {
                        return Ok(PropertyVerdict::violated(property, e.reader, e.label));
                    }
                }
                Ok(PropertyVerdict::holds(property))
            }
            Property::StrongAccuracy => {
                for e in &report.evidences {
                    let faulty = trace
                        .cast
                        .reader_is_faulty(e.reader)
                        .ok_or(OracleError::UnknownReader(e.reader))?;
                    if faulty {
                        continue;
                    }
                    if providing_size(&self.providing, e.reader, e.label) < cfg.tau {
                        return Ok(PropertyVerdict::violated(property, e.reader, e.label));
                    }
                }
                Ok(PropertyVerdict::holds(property))
            }
        }
    }
}

/// Check one property of `report` against the trace it was produced from.
pub fn check(
    property: Property,
    trace: &ExecutionTrace,
    report: &AuditReport,
    cfg: &ModelConfig,
) -> Result<PropertyVerdict, OracleError> {
    AuditView::new(trace, report)?.verdict(property, trace, report, cfg)
}

/// Verdicts for several properties over one report, sharing the prefix scan.
pub fn check_set(
    properties: &[Property],
    trace: &ExecutionTrace,
    report: &AuditReport,
    cfg: &ModelConfig,
) -> Result<Vec<PropertyVerdict>, OracleError> {
    let view = AuditView::new(trace, report)?;
    properties.iter().map(|&p| view.verdict(p, trace, report, cfg)).collect()
}

/// All three verdicts for one report.
pub fn check_all(
    trace: &ExecutionTrace,
    report: &AuditReport,
    cfg: &ModelConfig,
) -> Result<[PropertyVerdict; 3], OracleError> {
    let view = AuditView::new(trace, report)?;
    Ok([
        view.verdict(Property::Completeness, trace, report, cfg)?,
        view.verdict(Property::WeakAccuracy, trace, report, cfg)?,
        view.verdict(Property::StrongAccuracy, trace, report, cfg)?,
    ])
}

/// Stricter per-value reading of weak accuracy: a correct reader must not
/// be reported for any label whose providing set is empty. Under generic
/// tokens a faulty object can repurpose a received request to back a record
/// for another value, so this variant can fail where the default holds.
pub fn weak_accuracy_per_value(
    trace: &ExecutionTrace,
    report: &AuditReport,
    _cfg: &ModelConfig,
) -> Result<PropertyVerdict, OracleError> {
    let at = audit_ordinal_checked(trace, report)?;
    let providing = providing_map(trace.prefix(at));
    for e in &report.evidences {
        let faulty = trace
            .cast
            .reader_is_faulty(e.reader)
            .ok_or(OracleError::UnknownReader(e.reader))?;
        if faulty {
            continue;
        }
        if providing_size(&providing, e.reader, e.label) == 0 {
            return Ok(PropertyVerdict::violated(Property::WeakAccuracy, e.reader, e.label));
        }
    }
    Ok(PropertyVerdict::holds(Property::WeakAccuracy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{ObjectIndex, WriterId};
    use crate::trace::{Cast, ReaderInfo};

    fn l(seq: u32) -> Label {
        Label::new(WriterId(1), seq)
    }

    fn trace_with(events: Vec<EventKind>) -> ExecutionTrace {
        let mut t = ExecutionTrace {
            cast: Cast {
                n: 5,
                writers: alloc::vec![WriterId(1)],
                readers: alloc::vec![
                    ReaderInfo { id: ReaderId(1), faulty: false },
                    ReaderInfo { id: ReaderId(2), faulty: true },
                ],
                faulty_objects: ObjectSet::EMPTY,
            },
            events: Vec::new(),
        };
        for k in events {
            t.push(k);
        }
        t
    }

    fn respond(object: u8, reader: u16, label: Label) -> EventKind {
        EventKind::RespondRead {
            object: ObjectIndex(object),
            reader: ReaderId(reader),
            op: 0,
            returned: Some(label),
            logged: true,
        }
    }

    fn deliver(object: u8, label: Label) -> EventKind {
        EventKind::DeliverWrite { object: ObjectIndex(object), label }
    }

    #[test]
    fn empty_trace_has_no_providing_sets() {
        let t = trace_with(alloc::vec![]);
        assert!(providing_sets(&t).is_empty());
    }

    #[test]
    fn providing_needs_both_write_and_response() {
        let t = trace_with(alloc::vec![
            deliver(1, l(1)),
            respond(1, 1, l(1)),
            // Object 2 responded but the trace shows no delivered write.
            respond(2, 1, l(1)),
        ]);
        let sets = providing_sets(&t);
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].objects, ObjectSet::EMPTY.with(ObjectIndex(1)));
    }

    #[test]
    fn repeat_responses_count_once() {
        let t = trace_with(alloc::vec![
            deliver(1, l(1)),
            respond(1, 1, l(1)),
            respond(1, 1, l(1)),
            respond(1, 1, l(1)),
        ]);
        let sets = providing_sets(&t);
        assert_eq!(sets[0].objects.len(), 1);
    }

    #[test]
    fn effective_read_boundary_is_tau() {
        let events = alloc::vec![
            deliver(1, l(1)),
            deliver(2, l(1)),
            deliver(3, l(1)),
            respond(1, 1, l(1)),
            respond(2, 1, l(1)),
            respond(3, 1, l(1)),
        ];
        let t = trace_with(events);
        assert_eq!(effective_reads(&t, 3), alloc::vec![(ReaderId(1), l(1))]);
        assert!(effective_reads(&t, 4).is_empty());
    }

    #[test]
    fn two_labels_below_threshold_each_are_excluded() {
        let t = trace_with(alloc::vec![
            deliver(1, l(1)),
            deliver(2, l(1)),
            deliver(3, l(2)),
            deliver(4, l(2)),
            respond(1, 1, l(1)),
            respond(2, 1, l(1)),
            respond(3, 1, l(2)),
            respond(4, 1, l(2)),
        ]);
        assert!(effective_reads(&t, 3).is_empty());
        assert_eq!(providing_sets(&t).len(), 2);
    }

    #[test]
    fn prefix_monotonicity() {
        let t = trace_with(alloc::vec![
            deliver(1, l(1)),
            deliver(2, l(1)),
            deliver(3, l(1)),
            respond(1, 1, l(1)),
            respond(2, 1, l(1)),
            respond(3, 1, l(1)),
        ]);
        let mut previous = 0usize;
        for ord in 0..=t.next_ordinal() {
            let now: usize =
                providing_sets_before(&t, ord).iter().map(|p| p.objects.len() as usize).sum();
            assert!(now >= previous);
            previous = now;
        }
    }

    #[test]
    fn report_mismatch_is_an_error() {
        let t = trace_with(alloc::vec![deliver(1, l(1))]);
        let report = AuditReport {
            audit_ordinal: 0,
            t: 1,
            quorum: ObjectSet::all(4),
            collected_logs: Vec::new(),
            rejected: Vec::new(),
            evidences: Vec::new(),
        };
        let cfg = ModelConfig {
            n: 5,
            f: 1,
            tau: 3,
            t: 1,
            read_mode: Default::default(),
            signing: Default::default(),
            total_order: false,
        };
        assert_eq!(
            check(Property::Completeness, &t, &report, &cfg),
            Err(OracleError::ReportMismatch { ordinal: 0 })
        );
    }
}
