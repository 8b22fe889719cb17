//! Report rendering: a human summary on standard output, or one JSON
//! document per line behind `--json`. The JSON stream is byte-stable for a
//! given scenario and seed.

use serde::Serialize;

use arsim_core::audit::AuditReport;
use arsim_core::emulation::{ModelConfig, ReadMode, Signing};
use arsim_core::oracle::PropertyVerdict;

use crate::file::render_label;

pub fn model_name(cfg: &ModelConfig) -> &'static str {
    match (cfg.read_mode, cfg.signing, cfg.total_order) {
        (ReadMode::Fast, Signing::None, false) => "fast",
        (ReadMode::Fast, Signing::Generic, false) => "signed",
        (ReadMode::Fast, Signing::None, true) => "total",
        (ReadMode::Fast, Signing::Generic, true) => "total-signed",
        (ReadMode::NonFast, Signing::None, false) => "nonfast",
        (ReadMode::NonFast, Signing::Specific, false) => "nonfast-signed",
        (ReadMode::NonFast, Signing::Generic, false) => "nonfast-generic",
        _ => "custom",
    }
}

/// Parse a model name into configuration flags (read mode, signing, total order).
pub fn parse_model(name: &str) -> Option<(ReadMode, Signing, bool)> {
    Some(match name {
        "fast" => (ReadMode::Fast, Signing::None, false),
        "signed" => (ReadMode::Fast, Signing::Generic, false),
        "total" => (ReadMode::Fast, Signing::None, true),
        "total-signed" => (ReadMode::Fast, Signing::Generic, true),
        "nonfast" => (ReadMode::NonFast, Signing::None, false),
        "nonfast-signed" => (ReadMode::NonFast, Signing::Specific, false),
        _ => return None,
    })
}

pub struct Emitter {
    pub json: bool,
}

impl Emitter {
    pub fn line(&self, human: String, json: impl Serialize) {
        if self.json {
            println!("{}", serde_json::to_string(&json).expect("serializable"));
        } else {
            println!("{human}");
        }
    }
}

#[derive(Serialize)]
struct JsonHeader<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    name: &'a str,
    n: u8,
    f: u8,
    tau: u8,
    t: u8,
    model: &'static str,
    seed: u64,
}

#[derive(Serialize)]
struct JsonEvidence {
    #[serde(rename = "type")]
    kind: &'static str,
    reader: u16,
    label: String,
    objects: Vec<u8>,
    count: u8,
}

#[derive(Serialize)]
struct JsonRejected {
    #[serde(rename = "type")]
    kind: &'static str,
    object: u8,
    reader: u16,
    label: String,
}

#[derive(Serialize)]
struct JsonVerdict {
    #[serde(rename = "type")]
    kind: &'static str,
    property: String,
    holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<(u16, String)>,
}

pub fn emit_header(out: &Emitter, name: &str, cfg: &ModelConfig, seed: u64) {
    out.line(
        format!(
            "scenario {name} n={} f={} tau={} t={} model={} seed={seed}",
            cfg.n,
            cfg.f,
            cfg.tau,
            cfg.t,
            model_name(cfg)
        ),
        JsonHeader {
            kind: "run",
            name,
            n: cfg.n,
            f: cfg.f,
            tau: cfg.tau,
            t: cfg.t,
            model: model_name(cfg),
            seed,
        },
    );
}

pub fn emit_report(out: &Emitter, report: &AuditReport) {
    for evidence in &report.evidences {
        out.line(
            format!("evidence {}", evidence.render_line()),
            JsonEvidence {
                kind: "evidence",
                reader: evidence.reader.0,
                label: render_label(evidence.label),
                objects: evidence.attesting.iter().map(|k| k.0).collect(),
                count: evidence.count(),
            },
        );
    }
    for (object, record) in &report.rejected {
        out.line(
            format!(
                "rejected object={} reader={} label={}",
                object.0,
                record.reader.0,
                render_label(record.label)
            ),
            JsonRejected {
                kind: "rejected",
                object: object.0,
                reader: record.reader.0,
                label: render_label(record.label),
            },
        );
    }
}

pub fn emit_verdict(out: &Emitter, verdict: &PropertyVerdict) {
    let witness = verdict.witness.map(|(r, l)| (r.0, render_label(l)));
    let human = match &witness {
        Some((r, l)) => {
            format!("verdict {}={} witness=reader {r} label {l}", verdict.property, verdict.holds)
        }
        None => format!("verdict {}={}", verdict.property, verdict.holds),
    };
    out.line(
        human,
        JsonVerdict {
            kind: "verdict",
            property: verdict.property.to_string(),
            holds: verdict.holds,
            witness,
        },
    );
}
