//! The scenario file format: JSON with optional group shorthand.
//!
//! Objects can be declared either explicitly (one entry per object) or as
//! named groups whose sizes are linear formulas in `n`, `f`, and `tau`
//! (for example `"tau-2f"` or `"n-tau-2f+1"`). Group names can then stand
//! in for object index lists anywhere a set is expected, so scenario files
//! read like the group constructions they encode.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use arsim_core::emulation::ModelConfig;
use arsim_core::ids::{Label, ObjectIndex, ObjectSet, ReaderId, Value, WriterId};
use arsim_core::object::{FaultScript, OmitPhase, OmitRule, ReadRecord};
use arsim_core::scenario::{ReaderSpec, Scenario, Step};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub cfg: ModelConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objects: Vec<ObjectDef>,
    #[serde(default)]
    pub readers: Vec<ReaderDef>,
    pub steps: Vec<StepDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub expect: Vec<Expectation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupDef {
    pub name: String,
    /// Linear size formula over `n`, `f`, `tau`, e.g. `"tau-2f"`.
    pub size: String,
    #[serde(default, skip_serializing_if = "ScriptDef::is_default")]
    pub script: ScriptDef,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectDef {
    #[serde(default, skip_serializing_if = "ScriptDef::is_default")]
    pub script: ScriptDef,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptDef {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub faulty: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub omit_records_to_audit: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub omit_block_to: Vec<OmitDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fabricate: Vec<RecordDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crash_after_event: Option<u64>,
}

impl ScriptDef {
    fn is_default(&self) -> bool {
        *self == ScriptDef::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmitDef {
    pub reader: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<OmitPhase>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordDef {
    pub reader: u16,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReaderDef {
    pub id: u16,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub faulty: bool,
}

/// A set of objects: `"all"`, or a list of group names and object indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SetExpr {
    Keyword(String),
    Members(Vec<GroupOrIndex>),
}

impl Default for SetExpr {
    fn default() -> Self {
        SetExpr::Keyword("all".into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupOrIndex {
    Index(u8),
    Group(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepDef {
    Write {
        writer: u16,
        /// Hex-encoded payload.
        value: String,
        #[serde(default)]
        deliver: SetExpr,
    },
    Read {
        reader: u16,
        #[serde(default)]
        targets: SetExpr,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default, skip_serializing_if = "is_zero")]
        retries: u8,
    },
    Audit {
        quorum: SetExpr,
    },
}

fn is_zero(v: &u8) -> bool {
    *v == 0
}

/// Expected verdicts at a given (tau, t); omitted fields are unchecked.
/// Entries without explicit tau/t apply at the file's own configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Expectation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completeness: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_accuracy: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_accuracy: Option<bool>,
}

impl Expectation {
    pub fn applies(&self, original: &ModelConfig, effective: &ModelConfig) -> bool {
        self.tau.unwrap_or(original.tau) == effective.tau
            && self.t.unwrap_or(original.t) == effective.t
    }
}

pub fn parse_label(text: &str) -> Result<Label> {
    let (writer, seq) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("label `{text}` is not of the form <writer>:<seq>"))?;
    Ok(Label::new(
        WriterId(writer.parse().with_context(|| format!("writer id in label `{text}`"))?),
        seq.parse().with_context(|| format!("sequence number in label `{text}`"))?,
    ))
}

pub fn render_label(label: Label) -> String {
    format!("{}:{}", label.writer.0, label.seq)
}

/// Evaluate a group size formula: signed linear terms over n, f, tau.
fn eval_size(formula: &str, n: i64, f: i64, tau: i64) -> Result<i64> {
    let mut total = 0i64;
    let mut sign = 1i64;
    let mut rest = formula.trim();
    if rest.is_empty() {
        bail!("empty size formula");
    }
    while !rest.is_empty() {
        rest = rest.trim_start();
        match rest.chars().next() {
            Some('+') => {
                sign = 1;
                rest = &rest[1..];
                continue;
            }
            Some('-') => {
                sign = -1;
                rest = &rest[1..];
                continue;
            }
            _ => {}
        }
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        rest = &rest[digits.len()..];
        let coeff: i64 = if digits.is_empty() { 1 } else { digits.parse()? };
        let (var, len) = if rest.starts_with("tau") {
            (tau, 3)
        } else if rest.starts_with('n') {
            (n, 1)
        } else if rest.starts_with('f') {
            (f, 1)
        } else if digits.is_empty() {
            bail!("unexpected token in size formula at `{rest}`");
        } else {
            (1, 0)
        };
        rest = &rest[len..];
        total += sign * coeff * var;
        sign = 1;
    }
    Ok(total)
}

struct Groups {
    by_name: BTreeMap<String, ObjectSet>,
}

impl Groups {
    fn resolve(&self, expr: &SetExpr, n: u8) -> Result<ObjectSet> {
        match expr {
            SetExpr::Keyword(word) if word == "all" => Ok(ObjectSet::all(n)),
            SetExpr::Keyword(word) => bail!("unknown set keyword `{word}` (expected \"all\")"),
            SetExpr::Members(members) => {
                let mut set = ObjectSet::EMPTY;
                for m in members {
                    match m {
                        GroupOrIndex::Index(i) => {
                            if *i < 1 || *i > n {
                                bail!("object index {i} out of range 1..={n}");
                            }
                            set.insert(ObjectIndex(*i));
                        }
                        GroupOrIndex::Group(name) => {
                            let group = self
                                .by_name
                                .get(name)
                                .ok_or_else(|| anyhow!("unknown group `{name}`"))?;
                            set = set.union(*group);
                        }
                    }
                }
                Ok(set)
            }
        }
    }
}

fn script_from_def(def: &ScriptDef) -> Result<FaultScript> {
    let mut omit = Vec::new();
    for rule in &def.omit_block_to {
        omit.push(OmitRule {
            reader: ReaderId(rule.reader),
            label: rule.label.as_deref().map(parse_label).transpose()?,
            phase: rule.phase.unwrap_or_default(),
        });
    }
    let mut fabricate = std::collections::BTreeSet::new();
    for record in &def.fabricate {
        fabricate
            .insert(ReadRecord { reader: ReaderId(record.reader), label: parse_label(&record.label)? });
    }
    Ok(FaultScript {
        is_faulty: def.faulty,
        omit_block_to: omit,
        omit_records_to_audit: def.omit_records_to_audit,
        fabricate,
        crash_after_event: def.crash_after_event,
    })
}

/// Expand a scenario file into a runnable scenario under `cfg` (the file's
/// configuration with any command-line overrides applied). Group sizes are
/// re-evaluated against the effective parameters.
pub fn expand(file: &ScenarioFile, cfg: ModelConfig) -> Result<Scenario> {
    let n = cfg.n;
    let mut scripts: Vec<FaultScript> = Vec::with_capacity(n as usize);
    let mut groups = Groups { by_name: BTreeMap::new() };

    if !file.groups.is_empty() && !file.objects.is_empty() {
        bail!("declare objects either as groups or explicitly, not both");
    }
    if !file.groups.is_empty() {
        let mut next = 1u8;
        for g in &file.groups {
            let size = eval_size(&g.size, n as i64, cfg.f as i64, cfg.tau as i64)
                .with_context(|| format!("size of group `{}`", g.name))?;
            if size < 0 {
                bail!(
                    "group `{}` has negative size {} at n={} f={} tau={}",
                    g.name,
                    size,
                    n,
                    cfg.f,
                    cfg.tau
                );
            }
            let script = script_from_def(&g.script)
                .with_context(|| format!("script of group `{}`", g.name))?;
            let members: ObjectSet =
                (next..next + size as u8).map(ObjectIndex).collect();
            for _ in 0..size {
                scripts.push(script.clone());
            }
            next += size as u8;
            groups.by_name.insert(g.name.clone(), members);
        }
        if scripts.len() != n as usize {
            bail!("group sizes sum to {}, expected n={}", scripts.len(), n);
        }
    } else {
        for (i, def) in file.objects.iter().enumerate() {
            scripts.push(
                script_from_def(&def.script).with_context(|| format!("script of object {}", i + 1))?,
            );
        }
        if scripts.len() != n as usize {
            bail!("{} object entries, expected n={}", scripts.len(), n);
        }
    }

    let readers =
        file.readers.iter().map(|r| ReaderSpec { id: ReaderId(r.id), faulty: r.faulty }).collect();

    let mut steps = Vec::with_capacity(file.steps.len());
    for (i, def) in file.steps.iter().enumerate() {
        let step = match def {
            StepDef::Write { writer, value, deliver } => {
                let payload = hex::decode(value)
                    .with_context(|| format!("step {i}: value is not valid hex"))?;
                Step::Write {
                    writer: WriterId(*writer),
                    value: Value::new(payload)
                        .map_err(|e| anyhow!("step {i}: {e}"))?,
                    deliver_to: groups.resolve(deliver, n).with_context(|| format!("step {i}"))?,
                }
            }
            StepDef::Read { reader, targets, label, retries } => Step::Read {
                reader: ReaderId(*reader),
                targets: groups.resolve(targets, n).with_context(|| format!("step {i}"))?,
                request_label: label.as_deref().map(parse_label).transpose()?,
                retries: *retries,
            },
            StepDef::Audit { quorum } => Step::Audit {
                quorum: groups.resolve(quorum, n).with_context(|| format!("step {i}"))?,
            },
        };
        steps.push(step);
    }

    let scenario = Scenario { cfg, seed: file.seed, scripts, readers, steps };
    scenario.validate().map_err(|e| anyhow!("invalid scenario: {e}"))?;
    Ok(scenario)
}

pub fn load(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scenario file {}", path.display()))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing scenario file {}", path.display()))?;
    Ok(file)
}

/// Render a concrete scenario back into the explicit-objects file form,
/// e.g. to save a search counterexample for replay.
pub fn to_file(scenario: &Scenario, name: Option<String>, expect: Vec<Expectation>) -> ScenarioFile {
    let objects = scenario
        .scripts
        .iter()
        .map(|s| ObjectDef {
            script: ScriptDef {
                faulty: s.is_faulty,
                omit_records_to_audit: s.omit_records_to_audit,
                omit_block_to: s
                    .omit_block_to
                    .iter()
                    .map(|r| OmitDef {
                        reader: r.reader.0,
                        label: r.label.map(render_label),
                        phase: (r.phase != OmitPhase::Both).then_some(r.phase),
                    })
                    .collect(),
                fabricate: s
                    .fabricate
                    .iter()
                    .map(|r| RecordDef { reader: r.reader.0, label: render_label(r.label) })
                    .collect(),
                crash_after_event: s.crash_after_event,
            },
        })
        .collect();
    let indices = |set: ObjectSet| {
        SetExpr::Members(set.iter().map(|k| GroupOrIndex::Index(k.0)).collect())
    };
    let steps = scenario
        .steps
        .iter()
        .map(|step| match step {
            Step::Write { writer, value, deliver_to } => StepDef::Write {
                writer: writer.0,
                value: hex::encode(value.bytes()),
                deliver: indices(*deliver_to),
            },
            Step::Read { reader, targets, request_label, retries } => StepDef::Read {
                reader: reader.0,
                targets: indices(*targets),
                label: request_label.map(render_label),
                retries: *retries,
            },
            Step::Audit { quorum } => StepDef::Audit { quorum: indices(*quorum) },
        })
        .collect();
    ScenarioFile {
        name,
        cfg: scenario.cfg,
        seed: scenario.seed,
        groups: Vec::new(),
        objects,
        readers: scenario
            .readers
            .iter()
            .map(|r| ReaderDef { id: r.id.0, faulty: r.faulty })
            .collect(),
        steps,
        expect,
    }
}
