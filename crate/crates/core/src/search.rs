//! Bounded-exhaustive adversary search at desk scale.
//!
//! The search enumerates every adversary choice over a fixed operation
//! skeleton — two writes, two readers, one audit:
//!
//! ```text
//!   write(w1, v1) -> D1     read(r1, T1)     write(w1, v2) -> D2
//!   read(r2, T2)            audit -> quorum A
//! ```
//!
//! Free choices are the delivery subsets of both writes, each reader's
//! target set (empty = the reader never reads; full = a correct
//! protocol-following reader; anything else = a faulty partial reader),
//! the audit quorum, the faulty objects' scripts, and — in the two-round
//! mode — the label a partial reader fetches directly.
//!
//! Objects within one (faultiness, quorum membership) class are
//! interchangeable, so subsets are enumerated as multisets of per-object
//! membership signatures rather than raw sets; the faulty objects are
//! canonically the lowest indices. Faulty scripts are reduced to the two
//! extremal behaviours that dominate all others for the checked
//! properties: for completeness violations the faulty objects serve every
//! request, hide their whole log from auditors, and fabricate nothing
//! (any record they could contribute only helps the audit); for accuracy
//! violations they omit every block response, return their log untouched,
//! and fabricate a record for every (reader, label) pair including one
//! never-written label (served blocks only enlarge providing sets, and a
//! served record is subsumed by the fabricated one). In the two-round
//! mode each faulty object additionally either answers or omits label
//! queries, enumerated separately, since first-round participation feeds
//! back into which label a correct reader fetches.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::ControlFlow;

use crate::audit::AuditReport;
use crate::emulation::{ModelConfig, ReadMode};
use crate::ids::{Label, ObjectIndex, ObjectSet, ReaderId, Value, WriterId};
use crate::object::{FaultScript, OmitPhase, OmitRule, ReadRecord};
use crate::oracle::{self, Property, PropertyVerdict};
use crate::scenario::{ReaderSpec, Scenario, Step};
use crate::sim::{Engine, RunError};
use crate::trace::ExecutionTrace;

/// Limits on the enumerable scale. Beyond these the space stops being a
/// desk-scale object.
pub const MAX_N: u8 = 7;
pub const MAX_F: u8 = 2;

const WRITER: WriterId = WriterId(1);
const READER_1: ReaderId = ReaderId(1);
const READER_2: ReaderId = ReaderId(2);
/// Stand-in for every never-written label a faulty object might cite; by
/// symmetry one fresh label covers them all.
const BOGUS_SEQ: u32 = 99;

/// The searchable space: a model configuration (n, f, tau, t, variant) and
/// an optional cap on the number of enumerated scenarios.
#[derive(Debug, Clone, Copy)]
pub struct SearchSpace {
    pub cfg: ModelConfig,
    pub cap: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    /// Position in enumeration order (counting simulated scenarios).
    pub ordinal: u64,
    pub scenario: Scenario,
    pub property: Property,
    pub verdict: PropertyVerdict,
    pub report: AuditReport,
    pub trace: ExecutionTrace,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub violated: bool,
    pub counterexample: Option<Counterexample>,
    pub states_explored: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchError {
    Scale { n: u8, f: u8 },
    TooLarge { size: u64, cap: u64 },
    Config(crate::emulation::ConfigError),
    Run(RunError),
}

impl fmt::Display for SearchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchError::Scale { n, f: ff } => {
                write!(f, "search supports n <= {MAX_N}, f <= {MAX_F}; got n={n} f={ff}")
            }
            SearchError::TooLarge { size, cap } => {
                write!(f, "search space has {size} scenarios, cap is {cap}")
            }
            SearchError::Config(e) => write!(f, "{e}"),
            SearchError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SearchError {}

impl From<RunError> for SearchError {
    fn from(e: RunError) -> Self {
        SearchError::Run(e)
    }
}

/// Signature bits: which step subsets an object belongs to.
const BIT_D1: u8 = 0;
const BIT_T1: u8 = 1;
const BIT_D2: u8 = 2;
const BIT_T2: u8 = 3;

#[derive(Debug, Clone, Copy)]
struct Layout {
    /// Free signature bits under the current model; total order pins both
    /// delivery bits to "delivered".
    free: [bool; 4],
}

impl Layout {
    fn for_cfg(cfg: &ModelConfig) -> Self {
        let deliveries_free = !cfg.total_order;
        Layout { free: [deliveries_free, true, deliveries_free, true] }
    }

    fn cells(&self) -> u32 {
        1u32 << self.free.iter().filter(|&&b| b).count()
    }

    /// Expand a packed cell number into the four signature bits.
    fn unpack(&self, cell: u32) -> [bool; 4] {
        let mut out = [true; 4]; // pinned bits read as "member"
        let mut shift = 0;
        for (i, &free) in self.free.iter().enumerate() {
            if free {
                out[i] = cell & (1 << shift) != 0;
                shift += 1;
            }
        }
        out
    }
}

/// The two extremal faulty behaviours (see module docs).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    /// Serve everything, hide the log, fabricate nothing.
    HideRecords,
    /// Omit all block responses, keep the log, fabricate every pair.
    Fabricate,
}

fn variants_for(props: &[Property]) -> Vec<Variant> {
    let mut out = Vec::new();
    if props.contains(&Property::Completeness) {
        out.push(Variant::HideRecords);
    }
    if props.iter().any(|p| matches!(p, Property::WeakAccuracy | Property::StrongAccuracy)) {
        out.push(Variant::Fabricate);
    }
    out
}

fn fabrication_set(labels: &[Label]) -> BTreeSet<ReadRecord> {
    let mut all: Vec<Label> = labels.to_vec();
    all.push(Label::new(WRITER, BOGUS_SEQ));
    let mut set = BTreeSet::new();
    for reader in [READER_1, READER_2] {
        for &label in &all {
            set.insert(ReadRecord { reader, label });
        }
    }
    set
}

fn script_for(variant: Variant, omit_label_queries: bool, labels: &[Label]) -> FaultScript {
    let mut omit = Vec::new();
    match variant {
        Variant::HideRecords => {
            if omit_label_queries {
                for reader in [READER_1, READER_2] {
                    omit.push(OmitRule { reader, label: None, phase: OmitPhase::LabelQuery });
                }
            }
            FaultScript {
                is_faulty: true,
                omit_block_to: omit,
                omit_records_to_audit: true,
                fabricate: BTreeSet::new(),
                crash_after_event: None,
            }
        }
        Variant::Fabricate => {
            for reader in [READER_1, READER_2] {
                let phase =
                    if omit_label_queries { OmitPhase::Both } else { OmitPhase::BlockRead };
                omit.push(OmitRule { reader, label: None, phase });
            }
            FaultScript {
                is_faulty: true,
                omit_block_to: omit,
                omit_records_to_audit: false,
                fabricate: fabrication_set(labels),
                crash_after_event: None,
            }
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Multiset coefficient: ways to distribute `m` identical items over
/// `cells` cells.
fn multiset(m: u8, cells: u32) -> u64 {
    binomial(m as u64 + cells as u64 - 1, m as u64)
}

/// Number of (signature-multiset, quorum-split) combinations with the
/// given number of free cells per object.
fn base_count(n: u8, f: u8, cells: u32) -> u64 {
    let mut total = 0u64;
    for e in e_range(n, f) {
        let correct_excluded = f - e;
        let correct_included = n - f - correct_excluded;
        total += multiset(e, cells)
            * multiset(f - e, cells)
            * multiset(correct_excluded, cells)
            * multiset(correct_included, cells);
    }
    total
}

fn e_range(n: u8, f: u8) -> impl Iterator<Item = u8> {
    let lo = (2 * f).saturating_sub(n);
    lo..=f
}

/// Closed-form size of the space for the given properties, counting
/// simulated scenarios exactly as the enumerator visits them.
pub fn space_size(space: &SearchSpace, props: &[Property]) -> u64 {
    let cfg = &space.cfg;
    let layout = Layout::for_cfg(cfg);
    let variants = variants_for(props).len() as u64;
    if variants == 0 {
        return 0;
    }
    let query_assignments: u64 = if cfg.read_mode == ReadMode::NonFast {
        1u64 << cfg.f
    } else {
        1
    };
    let behaviors = variants * query_assignments;

    if cfg.read_mode != ReadMode::NonFast {
        return base_count(cfg.n, cfg.f, layout.cells()) * behaviors;
    }

    // Two-round mode: a partial reader picks one of the two written labels,
    // so bases weigh by 2 per partial reader. Count by target-set class
    // (empty/full/partial) with inclusion-exclusion over pinned t-bits.
    let count = |t1: Option<bool>, t2: Option<bool>| {
        let mut free = layout.free;
        if t1.is_some() {
            free[BIT_T1 as usize] = false;
        }
        if t2.is_some() {
            free[BIT_T2 as usize] = false;
        }
        let cells = 1u32 << free.iter().filter(|&&b| b).count();
        base_count(cfg.n, cfg.f, cells)
    };
    let any = count(None, None);
    let t1_pinned = count(Some(false), None); // same count for empty and full
    let t2_pinned = count(None, Some(false));
    let both_pinned = count(Some(false), Some(false));

    // Per reader: empty, full (factor 1 each) and partial (factor 2).
    // Sum over the 3x3 class grid of count * factor.
    let n_pp = any - 2 * t1_pinned - 2 * t2_pinned + 4 * both_pinned;
    let n_p1 = 2 * (t2_pinned - 2 * both_pinned); // t2 in {E,F}, t1 partial
    let n_1p = 2 * (t1_pinned - 2 * both_pinned);
    let n_11 = 4 * both_pinned;
    let weighted = n_11 + 2 * (n_p1 + n_1p) + 4 * n_pp;
    weighted * behaviors
}

/// Visit all ways to distribute `m` identical objects over `cells` cells,
/// in lexicographic order.
fn compositions(
    m: u8,
    cells: u32,
    scratch: &mut Vec<u8>,
    visit: &mut dyn FnMut(&[u8]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    if cells == 1 {
        scratch.push(m);
        let flow = visit(scratch);
        scratch.pop();
        return flow;
    }
    for first in 0..=m {
        scratch.push(first);
        compositions(m - first, cells - 1, scratch, visit)?;
        scratch.pop();
    }
    ControlFlow::Continue(())
}

struct Enumerator<'a> {
    space: &'a SearchSpace,
    props: &'a [Property],
    layout: Layout,
    variants: Vec<Variant>,
    labels: [Label; 2],
    values: [Value; 2],
    /// Faulty scripts by (variant, omit-label-queries), built once.
    scripts: [[FaultScript; 2]; 2],
    engine: Engine,
    scenario: Scenario,
    explored: u64,
    found: Option<Counterexample>,
}

struct BaseSets {
    d1: ObjectSet,
    t1: ObjectSet,
    d2: ObjectSet,
    t2: ObjectSet,
    quorum: ObjectSet,
}

impl<'a> Enumerator<'a> {
    fn new(space: &'a SearchSpace, props: &'a [Property]) -> Self {
        let cfg = space.cfg;
        let labels = [Label::new(WRITER, 1), Label::new(WRITER, 2)];
        let scenario = Scenario {
            cfg,
            seed: 0,
            scripts: vec![FaultScript::correct(); cfg.n as usize],
            readers: vec![
                ReaderSpec { id: READER_1, faulty: false },
                ReaderSpec { id: READER_2, faulty: false },
            ],
            steps: Vec::new(),
        };
        let scripts = [
            [
                script_for(Variant::HideRecords, false, &labels),
                script_for(Variant::HideRecords, true, &labels),
            ],
            [
                script_for(Variant::Fabricate, false, &labels),
                script_for(Variant::Fabricate, true, &labels),
            ],
        ];
        Enumerator {
            space,
            props,
            layout: Layout::for_cfg(&cfg),
            variants: variants_for(props),
            labels,
            values: [
                Value::new(vec![0x01]).unwrap(),
                Value::new(vec![0x02]).unwrap(),
            ],
            scripts,
            engine: Engine::new(),
            scenario,
            explored: 0,
            found: None,
        }
    }

    fn run(&mut self) -> Result<(), SearchError> {
        let cfg = self.space.cfg;
        let n = cfg.n;
        let f = cfg.f;
        let cells = self.layout.cells();
        // Composition tables by group size, computed once.
        let mut tables: alloc::collections::BTreeMap<u8, Vec<Vec<u8>>> = Default::default();
        let mut table = |size: u8| -> Vec<Vec<u8>> {
            tables
                .entry(size)
                .or_insert_with(|| {
                    let mut all = Vec::new();
                    let mut scratch = Vec::with_capacity(cells as usize);
                    let _ = compositions(size, cells, &mut scratch, &mut |c| {
                        all.push(c.to_vec());
                        ControlFlow::Continue(())
                    });
                    all
                })
                .clone()
        };
        // Group sizes, in materialization order: faulty outside the quorum,
        // faulty inside, correct outside, correct inside.
        for e in e_range(n, f) {
            let sizes = [e, f - e, f - e, n - f - (f - e)];
            let lists: [Vec<Vec<u8>>; 4] =
                [table(sizes[0]), table(sizes[1]), table(sizes[2]), table(sizes[3])];
            for c0 in &lists[0] {
                for c1 in &lists[1] {
                    for c2 in &lists[2] {
                        for c3 in &lists[3] {
                            let counts = [c0.as_slice(), c1.as_slice(), c2.as_slice(), c3.as_slice()];
                            let sets = self.materialize_sets(&sizes, &counts);
                            if self.visit_base(&sets).is_break() {
                                return Ok(());
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn materialize_sets(&self, sizes: &[u8; 4], counts: &[&[u8]; 4]) -> BaseSets {
        let mut sets = BaseSets {
            d1: ObjectSet::EMPTY,
            t1: ObjectSet::EMPTY,
            d2: ObjectSet::EMPTY,
            t2: ObjectSet::EMPTY,
            quorum: ObjectSet::EMPTY,
        };
        let mut index = 1u8;
        for (group, group_counts) in counts.iter().enumerate() {
            debug_assert_eq!(group_counts.iter().sum::<u8>(), sizes[group]);
            let in_quorum = group == 1 || group == 3;
            for (cell, &count) in group_counts.iter().enumerate() {
                let bits = self.layout.unpack(cell as u32);
                for _ in 0..count {
                    let k = ObjectIndex(index);
                    if bits[BIT_D1 as usize] {
                        sets.d1.insert(k);
                    }
                    if bits[BIT_T1 as usize] {
                        sets.t1.insert(k);
                    }
                    if bits[BIT_D2 as usize] {
                        sets.d2.insert(k);
                    }
                    if bits[BIT_T2 as usize] {
                        sets.t2.insert(k);
                    }
                    if in_quorum {
                        sets.quorum.insert(k);
                    }
                    index += 1;
                }
            }
        }
        sets
    }

    fn visit_base(&mut self, sets: &BaseSets) -> ControlFlow<()> {
        let cfg = self.space.cfg;
        let all = ObjectSet::all(cfg.n);
        let nonfast = cfg.read_mode == ReadMode::NonFast;
        let labels = self.labels;

        let label_options = |targets: ObjectSet| -> Vec<Option<Label>> {
            let partial = !targets.is_empty() && targets != all;
            if nonfast && partial {
                vec![Some(labels[0]), Some(labels[1])]
            } else {
                vec![None]
            }
        };
        let options1 = label_options(sets.t1);
        let options2 = label_options(sets.t2);

        let query_assignments: u8 = if nonfast { 1 << cfg.f } else { 1 };
        let variants = self.variants.clone();
        for &label1 in &options1 {
            for &label2 in &options2 {
                for variant in &variants {
                    for assignment in 0..query_assignments {
                        self.build_scenario(sets, label1, label2, *variant, assignment);
                        if self.simulate().is_break() {
                            return ControlFlow::Break(());
                        }
                    }
                }
            }
        }
        ControlFlow::Continue(())
    }

    fn build_scenario(
        &mut self,
        sets: &BaseSets,
        label1: Option<Label>,
        label2: Option<Label>,
        variant: Variant,
        assignment: u8,
    ) {
        let cfg = self.space.cfg;
        let all = ObjectSet::all(cfg.n);
        let variant_idx = match variant {
            Variant::HideRecords => 0,
            Variant::Fabricate => 1,
        };
        for j in 0..cfg.n as usize {
            let faulty = (j as u8) < cfg.f;
            self.scenario.scripts[j] = if faulty {
                let omit_queries = assignment & (1 << j) != 0;
                self.scripts[variant_idx][omit_queries as usize].clone()
            } else {
                FaultScript::correct()
            };
        }
        let reader_faulty = |t: ObjectSet| !t.is_empty() && t != all;
        self.scenario.readers[0].faulty = reader_faulty(sets.t1);
        self.scenario.readers[1].faulty = reader_faulty(sets.t2);

        self.scenario.steps.clear();
        self.scenario.steps.push(Step::Write {
            writer: WRITER,
            value: self.values[0].clone(),
            deliver_to: sets.d1,
        });
        if !sets.t1.is_empty() {
            self.scenario.steps.push(Step::Read {
                reader: READER_1,
                targets: sets.t1,
                request_label: label1,
                retries: 0,
            });
        }
        self.scenario.steps.push(Step::Write {
            writer: WRITER,
            value: self.values[1].clone(),
            deliver_to: sets.d2,
        });
        if !sets.t2.is_empty() {
            self.scenario.steps.push(Step::Read {
                reader: READER_2,
                targets: sets.t2,
                request_label: label2,
                retries: 0,
            });
        }
        self.scenario.steps.push(Step::Audit { quorum: sets.quorum });
    }

    fn simulate(&mut self) -> ControlFlow<()> {
        self.explored += 1;
        self.engine
            .execute(&self.scenario)
            .expect("search scenarios are valid by construction");
        let trace = self.engine.trace();
        let report = &self.engine.reports()[0];
        let verdicts = oracle::check_set(self.props, trace, report, &self.space.cfg)
            .expect("report belongs to this trace");
        for verdict in verdicts {
            if !verdict.holds {
                self.found = Some(Counterexample {
                    ordinal: self.explored,
                    scenario: self.scenario.clone(),
                    property: verdict.property,
                    verdict,
                    report: report.clone(),
                    trace: trace.clone(),
                });
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    }
}

fn check_scale(cfg: &ModelConfig) -> Result<(), SearchError> {
    cfg.validate().map_err(SearchError::Config)?;
    if cfg.n > MAX_N || cfg.f > MAX_F {
        return Err(SearchError::Scale { n: cfg.n, f: cfg.f });
    }
    Ok(())
}

/// Enumerate the space and return the first counterexample violating any of
/// `props`, or certify that none exists.
pub fn find_violation(space: &SearchSpace, props: &[Property]) -> Result<SearchResult, SearchError> {
    check_scale(&space.cfg)?;
    if let Some(cap) = space.cap {
        let size = space_size(space, props);
        if size > cap {
            return Err(SearchError::TooLarge { size, cap });
        }
    }
    let mut enumerator = Enumerator::new(space, props);
    enumerator.run()?;
    Ok(SearchResult {
        violated: enumerator.found.is_some(),
        counterexample: enumerator.found,
        states_explored: enumerator.explored,
    })
}

/// Per-threshold results for a property combination: for each `t` in
/// `1..=n`, the first violation (if any). The combination is impossible at
/// this `tau` when every threshold admits a violation.
#[derive(Debug, Clone)]
pub struct ThresholdSweep {
    pub per_t: Vec<(u8, SearchResult)>,
    pub impossible: bool,
}

pub fn sweep_thresholds(
    space: &SearchSpace,
    props: &[Property],
) -> Result<ThresholdSweep, SearchError> {
    let mut per_t = Vec::new();
    let mut impossible = true;
    for t in 1..=space.cfg.n {
        let mut sub = *space;
        sub.cfg.t = t;
        let result = find_violation(&sub, props)?;
        impossible &= result.violated;
        per_t.push((t, result));
    }
    Ok(ThresholdSweep { per_t, impossible })
}

/// A certified minimal bound: the least (tau, t) in lexicographic order for
/// which the full enumeration finds no violation of the property set.
#[derive(Debug, Clone)]
pub struct BoundRow {
    pub properties: Vec<Property>,
    pub n: u8,
    pub f: u8,
    pub tau: u8,
    pub t: u8,
    /// No (tau, t) within range satisfies the set.
    pub impossible: bool,
    pub states_explored: u64,
}

/// Find the minimal certified (tau, t) for a property combination under
/// the given model. For accuracy-only combinations tau is pinned at the
/// completeness floor `2f + 1` and only t is searched, mirroring how the
/// bounds are stated.
pub fn minimal_bounds(
    base: &SearchSpace,
    props: &[Property],
) -> Result<BoundRow, SearchError> {
    check_scale(&base.cfg)?;
    let cfg = base.cfg;
    let accuracy_only = !props.contains(&Property::Completeness);
    let mut states = 0u64;

    let tau_range: Vec<u8> = if accuracy_only {
        vec![(2 * cfg.f + 1).min(cfg.n)]
    } else {
        (cfg.f + 1..=cfg.n).collect()
    };

    for tau in tau_range {
        for t in 1..=cfg.n {
            let mut sub = *base;
            sub.cfg.tau = tau;
            sub.cfg.t = t;
            let result = find_violation(&sub, props)?;
            states += result.states_explored;
            if !result.violated {
                return Ok(BoundRow {
                    properties: props.to_vec(),
                    n: cfg.n,
                    f: cfg.f,
                    tau,
                    t,
                    impossible: false,
                    states_explored: states,
                });
            }
        }
    }
    Ok(BoundRow {
        properties: props.to_vec(),
        n: cfg.n,
        f: cfg.f,
        tau: 0,
        t: 0,
        impossible: true,
        states_explored: states,
    })
}
