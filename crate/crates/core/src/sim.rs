//! The deterministic scheduler: executes a scenario's steps one at a time,
//! interleaving deliveries and responses in ascending object order, and
//! records every action in the trace. Rerunning the same scenario with the
//! same seed reproduces the identical trace, reports, and outcomes.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::audit::{self, AuditReport};
use crate::dispersal::{Block, Codec};
use crate::emulation::{
    select_round1_label, ModelConfig, ReadMode, ReaderAccumulator, ReadOutcome, Signing,
};
use crate::ids::{Label, ObjectIndex, ObjectSet, ReaderId, Value, WriterId};
use crate::object::{ReadRecord, Serve, StorageObject};
use crate::scenario::{Scenario, ScenarioError, Step};
use crate::token::{SignedToken, TokenRegistry, TokenScope};
use crate::trace::{Cast, EventKind, ExecutionTrace, ReaderInfo};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunError {
    Scenario(ScenarioError),
    /// Fewer than `n - f` objects can answer the audit's log query.
    AuditBlocked { step: usize, responses: u8 },
    /// The scripted quorum names an object that cannot respond.
    QuorumUnavailable { step: usize, object: ObjectIndex },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Scenario(e) => write!(f, "invalid scenario: {e}"),
            RunError::AuditBlocked { step, responses } => {
                write!(f, "audit at step {step} blocked: only {responses} objects can respond")
            }
            RunError::QuorumUnavailable { step, object } => {
                write!(f, "audit at step {step}: quorum member {object} cannot respond")
            }
        }
    }
}

impl core::error::Error for RunError {}

impl From<ScenarioError> for RunError {
    fn from(e: ScenarioError) -> Self {
        RunError::Scenario(e)
    }
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunResult {
    pub trace: ExecutionTrace,
    pub reports: Vec<AuditReport>,
    pub outcomes: Vec<ReadOutcome>,
}

type SplitKey = (u64, u8, u8, Label, Value);

/// Reusable execution engine. Buffers persist across runs, so driving many
/// scenarios through one engine (as the search does) avoids most
/// per-run allocation.
#[derive(Debug)]
pub struct Engine {
    trace: ExecutionTrace,
    objects: Vec<StorageObject>,
    registry: TokenRegistry,
    accumulators: BTreeMap<ReaderId, ReaderAccumulator>,
    outcomes: Vec<ReadOutcome>,
    reports: Vec<AuditReport>,
    next_seq: BTreeMap<WriterId, u32>,
    read_ops: u32,
    audit_ops: u32,
    codec: Codec,
    split_cache: Vec<(SplitKey, Vec<Block>)>,
    seed: u64,
    round1_scratch: Vec<(ObjectIndex, Option<Label>)>,
}

impl Default for Engine {
    fn default() -> Self {
        Self::new()
    }
}

impl Engine {
    pub fn new() -> Self {
        Engine {
            trace: ExecutionTrace::default(),
            objects: Vec::new(),
            registry: TokenRegistry::new(),
            accumulators: BTreeMap::new(),
            outcomes: Vec::new(),
            reports: Vec::new(),
            next_seq: BTreeMap::new(),
            read_ops: 0,
            audit_ops: 0,
            codec: Codec::new(crate::dispersal::CodecParams::new(1, 1).unwrap(), 0),
            split_cache: Vec::new(),
            seed: 0,
            round1_scratch: Vec::new(),
        }
    }

    /// Run a scenario and hand back owned results.
    pub fn run(&mut self, scenario: &Scenario) -> Result<RunResult, RunError> {
        self.execute(scenario)?;
        Ok(RunResult {
            trace: self.trace.clone(),
            reports: self.reports.clone(),
            outcomes: self.outcomes.clone(),
        })
    }

    /// Run a scenario, leaving the results borrowable from the engine.
    /// The hot path for the exhaustive search.
    pub fn execute(&mut self, scenario: &Scenario) -> Result<(), RunError> {
        scenario.validate()?;
        self.reset(scenario);
        for (i, step) in scenario.steps.iter().enumerate() {
            match step {
                Step::Write { writer, value, deliver_to } => {
                    self.run_write(&scenario.cfg, *writer, value, *deliver_to)
                }
                Step::Read { reader, targets, request_label, retries } => {
                    self.run_read(scenario, *reader, *targets, *request_label, *retries)
                }
                Step::Audit { quorum } => self.run_audit(scenario, i, *quorum)?,
            }
        }
        Ok(())
    }

    pub fn trace(&self) -> &ExecutionTrace {
        &self.trace
    }

    pub fn reports(&self) -> &[AuditReport] {
        &self.reports
    }

    pub fn outcomes(&self) -> &[ReadOutcome] {
        &self.outcomes
    }

    pub fn objects(&self) -> &[StorageObject] {
        &self.objects
    }

    fn reset(&mut self, scenario: &Scenario) {
        let cfg = &scenario.cfg;
        self.trace.events.clear();
        self.trace.cast = Cast {
            n: cfg.n,
            writers: scenario.writers(),
            readers: scenario
                .readers
                .iter()
                .map(|r| ReaderInfo { id: r.id, faulty: r.faulty })
                .collect(),
            faulty_objects: scenario.faulty_objects(),
        };
        self.objects.clear();
        for (i, script) in scenario.scripts.iter().enumerate() {
            self.objects.push(StorageObject::new(ObjectIndex(i as u8 + 1), script.clone()));
        }
        self.registry.clear();
        self.accumulators.clear();
        self.outcomes.clear();
        self.reports.clear();
        self.next_seq.clear();
        self.read_ops = 0;
        self.audit_ops = 0;
        self.seed = scenario.seed;
        self.codec = Codec::new(cfg.codec_params(), scenario.seed);
        if self.split_cache.len() > 64 {
            self.split_cache.clear();
        }
    }

    /// Whether object `k` participates at the current point of the trace;
    /// emits the crash event when a scripted crash point is first passed.
    fn object_alive(&mut self, k: ObjectIndex) -> bool {
        let now = self.trace.next_ordinal();
        let obj = &mut self.objects[(k.0 - 1) as usize];
        let was_crashed = obj.crashed();
        let alive = obj.alive(now);
        if !alive && !was_crashed {
            self.trace.push(EventKind::CrashObject { object: k });
        }
        alive
    }

    fn split_cached(&mut self, value: &Value, label: Label) -> Vec<Block> {
        let params = self.codec.params();
        let seed = self.seed;
        if let Some((_, blocks)) = self.split_cache.iter().find(|((s, n, tau, l, v), _)| {
            *s == seed && *n == params.n && *tau == params.tau && *l == label && v == value
        }) {
            return blocks.clone();
        }
        let blocks = self.codec.split(value, label);
        self.split_cache
            .push(((seed, params.n, params.tau, label, value.clone()), blocks.clone()));
        blocks
    }

    fn run_write(
        &mut self,
        cfg: &ModelConfig,
        writer: WriterId,
        value: &Value,
        deliver_to: ObjectSet,
    ) {
        let seq = self.next_seq.entry(writer).or_insert(0);
        *seq += 1;
        let label = Label::new(writer, *seq);
        self.trace.push(EventKind::InvokeWrite { writer, label, value: value.clone() });
        let blocks = self.split_cached(value, label);
        let mut acks: u8 = 0;
        for k in deliver_to.iter() {
            if !self.object_alive(k) {
                continue;
            }
            self.trace.push(EventKind::DeliverWrite { object: k, label });
            self.objects[(k.0 - 1) as usize].rw_write(blocks[(k.0 - 1) as usize].clone());
            self.trace.push(EventKind::AckWrite { object: k, label });
            acks += 1;
        }
        if acks >= cfg.quorum() {
            self.trace.push(EventKind::CompleteWrite { writer, label });
        }
    }

    fn run_read(
        &mut self,
        scenario: &Scenario,
        reader: ReaderId,
        targets: ObjectSet,
        request_label: Option<Label>,
        retries: u8,
    ) {
        let cfg = scenario.cfg;
        let op = self.read_ops;
        self.read_ops += 1;
        self.trace.push(EventKind::InvokeRead { reader, op });

        let (blocks_this_op, responses, expected, completed_protocol) = match cfg.read_mode {
            ReadMode::Fast => {
                let token = self.mint_token(&cfg, reader, None);
                let (blocks, responses) = self.block_round(reader, op, targets, None, token);
                (blocks, responses, targets.len(), true)
            }
            ReadMode::NonFast => {
                if let Some(label) = request_label {
                    let token = self.mint_token(&cfg, reader, Some(label));
                    let (blocks, responses) =
                        self.block_round(reader, op, targets, Some(label), token);
                    (blocks, responses, targets.len(), true)
                } else {
                    let mut selected = None;
                    for _ in 0..=retries {
                        selected = self.label_round(&cfg, reader, op, targets);
                        if selected.is_some() {
                            break;
                        }
                    }
                    match selected {
                        Some(label) => {
                            let token = self.mint_token(&cfg, reader, Some(label));
                            let (blocks, responses) =
                                self.block_round(reader, op, targets, Some(label), token);
                            (blocks, responses, targets.len(), true)
                        }
                        None => (Vec::new(), 0, targets.len(), false),
                    }
                }
            }
        };

        let recovered = self
            .accumulators
            .entry(reader)
            .or_default()
            .recover(&self.codec);
        let needed = cfg.quorum().min(expected);
        let complete = completed_protocol && responses >= needed;
        if complete {
            self.trace.push(EventKind::CompleteRead {
                reader,
                op,
                recovered: recovered.as_ref().map(|(l, _)| *l),
            });
        }
        self.outcomes.push(ReadOutcome {
            reader,
            op,
            blocks_received: blocks_this_op,
            recovered,
            complete,
        });
    }

    fn mint_token(
        &mut self,
        cfg: &ModelConfig,
        reader: ReaderId,
        label: Option<Label>,
    ) -> Option<SignedToken> {
        match cfg.signing {
            Signing::None => None,
            Signing::Generic => Some(self.registry.mint(reader, TokenScope::AnyValue)),
            Signing::Specific => {
                let label = label.expect("specific tokens are scoped to a label");
                Some(self.registry.mint(reader, TokenScope::Specific(label)))
            }
        }
    }

    /// First round of the two-round read: collect stored labels and apply
    /// the selection rule.
    fn label_round(
        &mut self,
        cfg: &ModelConfig,
        reader: ReaderId,
        op: u32,
        targets: ObjectSet,
    ) -> Option<Label> {
        let mut responses = core::mem::take(&mut self.round1_scratch);
        responses.clear();
        for k in targets.iter() {
            if !self.object_alive(k) {
                continue;
            }
            self.trace.push(EventKind::DeliverLabelQuery { object: k, reader, op });
            match self.objects[(k.0 - 1) as usize].rw_read_label(reader) {
                Serve::Silent => {}
                Serve::Respond(label) => {
                    self.trace.push(EventKind::RespondLabelQuery { object: k, reader, op, label });
                    responses.push((k, label));
                }
            }
        }
        let selected = select_round1_label(&responses, cfg);
        self.round1_scratch = responses;
        selected
    }

    /// One round of block requests; used by fast reads and second rounds.
    fn block_round(
        &mut self,
        reader: ReaderId,
        op: u32,
        targets: ObjectSet,
        requested: Option<Label>,
        token: Option<SignedToken>,
    ) -> (Vec<Block>, u8) {
        let mut received = Vec::new();
        let mut responses: u8 = 0;
        for k in targets.iter() {
            if !self.object_alive(k) {
                continue;
            }
            self.trace.push(EventKind::DeliverRead {
                object: k,
                reader,
                op,
                requested,
                token: token.map(|t| t.scope),
            });
            if let Some(t) = token {
                self.registry.deliver(k, t);
            }
            match self.objects[(k.0 - 1) as usize].rw_read(reader, requested, token.as_ref()) {
                Serve::Silent => {}
                Serve::Respond(maybe_block) => {
                    let returned = maybe_block.as_ref().map(|b| b.label);
                    self.trace.push(EventKind::RespondRead {
                        object: k,
                        reader,
                        op,
                        returned,
                        logged: maybe_block.is_some(),
                    });
                    responses += 1;
                    if let Some(block) = maybe_block {
                        self.accumulators.entry(reader).or_default().absorb(block.clone());
                        received.push(block);
                    }
                }
            }
        }
        (received, responses)
    }

    fn run_audit(
        &mut self,
        scenario: &Scenario,
        step: usize,
        quorum: ObjectSet,
    ) -> Result<(), RunError> {
        let cfg = scenario.cfg;
        let op = self.audit_ops;
        self.audit_ops += 1;
        let audit_ordinal = self.trace.push(EventKind::InvokeAudit { op });

        // Query all objects in parallel; crashed ones never see the request.
        let mut responders = ObjectSet::EMPTY;
        for k in ObjectSet::all(cfg.n).iter() {
            if !self.object_alive(k) {
                continue;
            }
            self.trace.push(EventKind::DeliverGetLog { object: k, op });
            responders.insert(k);
        }
        if responders.len() < cfg.quorum() {
            return Err(RunError::AuditBlocked { step, responses: responders.len() });
        }
        if let Some(missing) = quorum.iter().find(|k| !responders.contains(*k)) {
            return Err(RunError::QuorumUnavailable { step, object: missing });
        }

        // The scripted quorum's responses arrive first; the rest are late
        // and ignored by the algorithm.
        let mut collected: Vec<(ObjectIndex, Vec<ReadRecord>)> =
            Vec::with_capacity(quorum.len() as usize);
        for k in quorum.iter() {
            match self.objects[(k.0 - 1) as usize].rw_get_log() {
                Serve::Silent => unreachable!("alive objects answer log queries"),
                Serve::Respond(log) => {
                    self.trace.push(EventKind::RespondGetLog { object: k, op, records: log.clone() });
                    collected.push((k, log));
                }
            }
        }

        let (evidences, rejected) = audit::evaluate(&collected, &cfg, &self.registry);
        self.reports.push(AuditReport {
            audit_ordinal,
            t: cfg.t,
            quorum,
            collected_logs: collected,
            rejected,
            evidences,
        });
        self.trace.push(EventKind::CompleteAudit { op });
        Ok(())
    }

    /// Token registry of the last run, for unforgeability checks in tests.
    pub fn registry(&self) -> &TokenRegistry {
        &self.registry
    }
}
