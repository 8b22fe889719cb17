//! Scripted executions: the model configuration, one fault script per
//! object, the declared readers, and an ordered list of high-level steps.
//! A scenario plus its seed fully determines the resulting trace.

use alloc::vec::Vec;
use core::fmt;

use crate::emulation::{ConfigError, ModelConfig, ReadMode};
use crate::ids::{Label, ObjectIndex, ObjectSet, ReaderId, Value, WriterId};
use crate::object::FaultScript;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ReaderSpec {
    pub id: ReaderId,
    #[cfg_attr(feature = "serde", serde(default))]
    pub faulty: bool,
}

/// One high-level step. Delivery subsets, read targets, and the audit
/// quorum are schedule choices scripted here; that is where the adversary's
/// control over the execution lives.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Step {
    /// High-level write: the block deliveries reach exactly `deliver_to`.
    /// A proper subset leaves the write incomplete.
    Write { writer: WriterId, value: Value, deliver_to: ObjectSet },
    /// High-level read. Correct readers target all objects; faulty readers
    /// may pick a subset. In the two-round mode, a faulty reader may give
    /// `request_label` to skip label discovery and fetch blocks directly.
    Read {
        reader: ReaderId,
        targets: ObjectSet,
        #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
        request_label: Option<Label>,
        #[cfg_attr(feature = "serde", serde(default))]
        retries: u8,
    },
    /// High-level audit; `quorum` is the adversary's choice of which
    /// `n - f` log responses arrive first.
    Audit { quorum: ObjectSet },
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Scenario {
    pub cfg: ModelConfig,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    /// One script per object, index order.
    pub scripts: Vec<FaultScript>,
    pub readers: Vec<ReaderSpec>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    Config(ConfigError),
    ScriptCount { expected: u8, got: usize },
    FaultBudgetExceeded { declared: u8, f: u8 },
    DeviationWithoutFaultFlag(ObjectIndex),
    DuplicateReader(ReaderId),
    UndeclaredReader(ReaderId),
    SetOutOfRange { step: usize },
    QuorumSize { step: usize, got: u8, want: u8 },
    CorrectReaderMustTargetAll { step: usize, reader: ReaderId },
    RequestLabelInFastMode { step: usize },
    RequestLabelByCorrectReader { step: usize, reader: ReaderId },
    PartialProtocolRead { step: usize, reader: ReaderId },
    TotalOrderPartialDelivery { step: usize },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Config(e) => write!(f, "{e}"),
            ScenarioError::ScriptCount { expected, got } => {
                write!(f, "expected {expected} fault scripts, got {got}")
            }
            ScenarioError::FaultBudgetExceeded { declared, f: ff } => {
                write!(f, "{declared} objects declared faulty, budget is f={ff}")
            }
            ScenarioError::DeviationWithoutFaultFlag(k) => {
                write!(f, "object {k} has scripted deviations but is not flagged faulty")
            }
            ScenarioError::DuplicateReader(r) => write!(f, "reader {r} declared twice"),
            ScenarioError::UndeclaredReader(r) => write!(f, "reader {r} is not declared"),
            ScenarioError::SetOutOfRange { step } => {
                write!(f, "step {step}: object set references indices beyond n")
            }
            ScenarioError::QuorumSize { step, got, want } => {
                write!(f, "step {step}: audit quorum has {got} members, need exactly {want}")
            }
            ScenarioError::CorrectReaderMustTargetAll { step, reader } => {
                write!(f, "step {step}: correct reader {reader} must target all objects")
            }
            ScenarioError::RequestLabelInFastMode { step } => {
                write!(f, "step {step}: request_label is only meaningful in the two-round mode")
            }
            ScenarioError::RequestLabelByCorrectReader { step, reader } => {
                write!(f, "step {step}: correct reader {reader} cannot skip label discovery")
            }
            ScenarioError::PartialProtocolRead { step, reader } => {
                write!(
                    f,
                    "step {step}: faulty reader {reader} must either follow the full protocol \
                     (all targets, no request_label) or fetch a chosen label directly"
                )
            }
            ScenarioError::TotalOrderPartialDelivery { step } => {
                write!(f, "step {step}: total order delivers writes to every object")
            }
        }
    }
}

impl core::error::Error for ScenarioError {}

impl From<ConfigError> for ScenarioError {
    fn from(e: ConfigError) -> Self {
        ScenarioError::Config(e)
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let cfg = &self.cfg;
        cfg.validate()?;
        let all = ObjectSet::all(cfg.n);

        if self.scripts.len() != cfg.n as usize {
            return Err(ScenarioError::ScriptCount { expected: cfg.n, got: self.scripts.len() });
        }
        let declared_faulty = self.scripts.iter().filter(|s| s.is_faulty).count() as u8;
        if declared_faulty > cfg.f {
            return Err(ScenarioError::FaultBudgetExceeded { declared: declared_faulty, f: cfg.f });
        }
        for (i, script) in self.scripts.iter().enumerate() {
            if !script.is_faulty && script.deviates() {
                return Err(ScenarioError::DeviationWithoutFaultFlag(ObjectIndex(i as u8 + 1)));
            }
            for record in &script.fabricate {
                self.require_reader(record.reader)?;
            }
            for rule in &script.omit_block_to {
                self.require_reader(rule.reader)?;
            }
        }

        for (i, r) in self.readers.iter().enumerate() {
            if self.readers[..i].iter().any(|other| other.id == r.id) {
                return Err(ScenarioError::DuplicateReader(r.id));
            }
        }

        for (i, step) in self.steps.iter().enumerate() {
            match step {
                Step::Write { deliver_to, .. } => {
                    if !deliver_to.is_subset(&all) {
                        return Err(ScenarioError::SetOutOfRange { step: i });
                    }
                    if cfg.total_order && *deliver_to != all {
                        return Err(ScenarioError::TotalOrderPartialDelivery { step: i });
                    }
                }
                Step::Read { reader, targets, request_label, .. } => {
                    let spec = self
                        .readers
                        .iter()
                        .find(|r| r.id == *reader)
                        .ok_or(ScenarioError::UndeclaredReader(*reader))?;
                    if !targets.is_subset(&all) {
                        return Err(ScenarioError::SetOutOfRange { step: i });
                    }
                    if request_label.is_some() && cfg.read_mode == ReadMode::Fast {
                        return Err(ScenarioError::RequestLabelInFastMode { step: i });
                    }
                    if !spec.faulty {
                        if *targets != all {
                            return Err(ScenarioError::CorrectReaderMustTargetAll {
                                step: i,
                                reader: *reader,
                            });
                        }
                        if request_label.is_some() {
                            return Err(ScenarioError::RequestLabelByCorrectReader {
                                step: i,
                                reader: *reader,
                            });
                        }
                    } else if cfg.read_mode == ReadMode::NonFast
                        && request_label.is_none()
                        && *targets != all
                    {
                        return Err(ScenarioError::PartialProtocolRead {
                            step: i,
                            reader: *reader,
                        });
                    }
                }
                Step::Audit { quorum } => {
                    if !quorum.is_subset(&all) {
                        return Err(ScenarioError::SetOutOfRange { step: i });
                    }
                    if quorum.len() != cfg.quorum() {
                        return Err(ScenarioError::QuorumSize {
                            step: i,
                            got: quorum.len(),
                            want: cfg.quorum(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn require_reader(&self, id: ReaderId) -> Result<(), ScenarioError> {
        if self.readers.iter().any(|r| r.id == id) {
            Ok(())
        } else {
            Err(ScenarioError::UndeclaredReader(id))
        }
    }

    /// Faulty objects as declared by the scripts.
    pub fn faulty_objects(&self) -> ObjectSet {
        self.scripts
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_faulty)
            .map(|(i, _)| ObjectIndex(i as u8 + 1))
            .collect()
    }

    pub fn writers(&self) -> Vec<WriterId> {
        let mut out: Vec<WriterId> = Vec::new();
        for step in &self.steps {
            if let Step::Write { writer, .. } = step {
                if !out.contains(writer) {
                    out.push(*writer);
                }
            }
        }
        out
    }
}
