//! Command-line harness for the auditable register simulator: run scripted
//! scenarios, sweep parameters, search for property violations, and
//! reproduce the bounds table.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use arsim_core::emulation::ModelConfig;
use arsim_core::oracle::{self, Property};
use arsim_core::scenario::Scenario;
use arsim_core::search::{find_violation, sweep_thresholds, SearchSpace};
use arsim_core::sim::Engine;

use arsim_cli::file::{self, Expectation, ScenarioFile};
use arsim_cli::output::{emit_header, emit_report, emit_verdict, model_name, parse_model, Emitter};
use arsim_cli::table;

#[derive(Parser)]
#[command(name = "arsim", version, about = "Auditable register emulation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file and check its expected verdicts.
    Run(RunArgs),
    /// Run a scenario template across parameter ranges.
    Sweep(SweepArgs),
    /// Exhaustively search for a property violation.
    Search(SearchArgs),
    /// Generate certified reports.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (JSON).
    scenario: PathBuf,
    /// Override the evidence threshold t.
    #[arg(long)]
    t: Option<u8>,
    /// Override the block threshold tau (groups re-expand).
    #[arg(long)]
    tau: Option<u8>,
    /// Machine-readable JSON lines instead of the human summary.
    #[arg(long)]
    json: bool,
    /// Write the full run result (trace, reports, outcomes) to a file.
    #[arg(long)]
    result_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Scenario template file (JSON).
    template: PathBuf,
    /// Range of tau values, e.g. `3..5` (inclusive).
    #[arg(long)]
    tau: Option<String>,
    /// Range of t values, e.g. `1..7` (inclusive).
    #[arg(long)]
    t: Option<String>,
    /// Comma-separated model list:
    /// fast,signed,total,total-signed,nonfast,nonfast-signed.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    n: u8,
    #[arg(long)]
    f: u8,
    #[arg(long)]
    tau: u8,
    /// Evidence threshold; omitted = sweep t over 1..=n and report whether
    /// any single threshold satisfies the properties.
    #[arg(long)]
    t: Option<u8>,
    /// Property or `+`-joined pair: completeness, weak-accuracy,
    /// strong-accuracy.
    #[arg(long)]
    property: String,
    /// Model variant (default fast).
    #[arg(long, default_value = "fast")]
    model: String,
    /// Abort if the space exceeds this many scenarios.
    #[arg(long)]
    cap: Option<u64>,
    /// Write the first counterexample as a replayable scenario file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Report kind; `table1` is the bounds table.
    kind: String,
    #[arg(long, default_value_t = 1)]
    f: u8,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Search(args) => cmd_search(args),
        Command::Report(args) => cmd_report(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn seed_override() -> Result<Option<u64>> {
    match std::env::var("ARSIM_SEED") {
        Ok(text) => Ok(Some(
            text.parse::<u64>().context("ARSIM_SEED must be an unsigned integer")?,
        )),
        Err(_) => Ok(None),
    }
}

fn effective_cfg(file: &ScenarioFile, tau: Option<u8>, t: Option<u8>) -> ModelConfig {
    let mut cfg = file.cfg;
    if let Some(tau) = tau {
        cfg.tau = tau;
    }
    if let Some(t) = t {
        cfg.t = t;
    }
    cfg
}

fn expand_with_seed(file: &ScenarioFile, cfg: ModelConfig) -> Result<Scenario> {
    let mut scenario = file::expand(file, cfg)?;
    if let Some(seed) = seed_override()? {
        scenario.seed = seed;
    }
    Ok(scenario)
}

/// Check applicable expectations; returns (checked, mismatches).
fn check_expectations(
    out: &Emitter,
    file: &ScenarioFile,
    cfg: &ModelConfig,
    verdicts: &[oracle::PropertyVerdict],
) -> (usize, usize) {
    let mut checked = 0usize;
    let mut mismatched = 0usize;
    let lookup = |p: Property| verdicts.iter().find(|v| v.property == p).map(|v| v.holds);
    for expectation in &file.expect {
        if !expectation.applies(&file.cfg, cfg) {
            continue;
        }
        for (property, want) in [
            (Property::Completeness, expectation.completeness),
            (Property::WeakAccuracy, expectation.weak_accuracy),
            (Property::StrongAccuracy, expectation.strong_accuracy),
        ] {
            let Some(want) = want else { continue };
            checked += 1;
            let got = lookup(property);
            if got != Some(want) {
                mismatched += 1;
                out.line(
                    format!(
                        "expect MISMATCH {property}: expected {want}, got {}",
                        got.map(|b| b.to_string()).unwrap_or_else(|| "nothing".into())
                    ),
                    serde_json::json!({
                        "type": "expect-mismatch",
                        "property": property.to_string(),
                        "expected": want,
                        "got": got,
                    }),
                );
            }
        }
    }
    (checked, mismatched)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode> {
    let out = Emitter { json: args.json };
    let file = file::load(&args.scenario)?;
    let cfg = effective_cfg(&file, args.tau, args.t);
    let scenario = expand_with_seed(&file, cfg)?;
    let result = Engine::new().run(&scenario).map_err(|e| anyhow!("{e}"))?;

    let name = file.name.clone().unwrap_or_else(|| args.scenario.display().to_string());
    emit_header(&out, &name, &cfg, scenario.seed);
    let mut verdicts = Vec::new();
    for report in &result.reports {
        emit_report(&out, report);
        for verdict in oracle::check_all(&result.trace, report, &cfg)? {
            emit_verdict(&out, &verdict);
            verdicts.push(verdict);
        }
    }
    if let Some(path) = args.result_out {
        std::fs::write(&path, serde_json::to_vec(&result)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let (checked, mismatched) = check_expectations(&out, &file, &cfg, &verdicts);
    out.line(
        format!("expect checked={checked} mismatched={mismatched}"),
        serde_json::json!({ "type": "summary", "checked": checked, "mismatched": mismatched }),
    );
    Ok(if mismatched == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn parse_range(text: &str, default: u8) -> Result<Vec<u8>> {
    match text.split_once("..") {
        Some((a, b)) => {
            let lo: u8 = a.parse().context("range start")?;
            let hi: u8 = b.parse().context("range end")?;
            if lo > hi {
                bail!("empty range {text}");
            }
            Ok((lo..=hi).collect())
        }
        None if text.is_empty() => Ok(vec![default]),
        None => Ok(vec![text.parse().context("range value")?]),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let out = Emitter { json: args.json };
    let file = file::load(&args.template)?;
    let taus = match &args.tau {
        Some(text) => parse_range(text, file.cfg.tau)?,
        None => vec![file.cfg.tau],
    };
    let ts = match &args.t {
        Some(text) => parse_range(text, file.cfg.t)?,
        None => vec![file.cfg.t],
    };
    let models: Vec<String> = match &args.model {
        Some(list) => list.split(',').map(str::to_string).collect(),
        None => vec![model_name(&file.cfg).to_string()],
    };
    let mut mismatched_total = 0usize;
    let mut engine = Engine::new();
    for model in &models {
        let (read_mode, signing, total_order) =
            parse_model(model).ok_or_else(|| anyhow!("unknown model `{model}`"))?;
        for &tau in &taus {
            for &t in &ts {
                let mut cfg = effective_cfg(&file, Some(tau), Some(t));
                cfg.read_mode = read_mode;
                cfg.signing = signing;
                cfg.total_order = total_order;
                let cell = match expand_with_seed(&file, cfg) {
                    Ok(scenario) => match engine.run(&scenario) {
                        Ok(result) => {
                            let mut all = Vec::new();
                            for report in &result.reports {
                                all.extend(oracle::check_all(&result.trace, report, &cfg)?);
                            }
                            let (_, mismatched) = check_expectations(&out, &file, &cfg, &all);
                            mismatched_total += mismatched;
                            Ok(all)
                        }
                        Err(e) => Err(format!("{e}")),
                    },
                    Err(e) => Err(format!("{e:#}")),
                };
                match cell {
                    Ok(verdicts) => {
                        let brief: Vec<String> = verdicts
                            .iter()
                            .map(|v| format!("{}={}", v.property, v.holds))
                            .collect();
                        out.line(
                            format!("cell model={model} tau={tau} t={t} {}", brief.join(" ")),
                            serde_json::json!({
                                "type": "cell",
                                "model": model,
                                "tau": tau,
                                "t": t,
                                "verdicts": verdicts.iter().map(|v| {
                                    (v.property.to_string(), v.holds)
                                }).collect::<std::collections::BTreeMap<_, _>>(),
                            }),
                        );
                    }
                    Err(reason) => {
                        out.line(
                            format!("cell model={model} tau={tau} t={t} invalid: {reason}"),
                            serde_json::json!({
                                "type": "cell",
                                "model": model,
                                "tau": tau,
                                "t": t,
                                "invalid": reason,
                            }),
                        );
                    }
                }
            }
        }
    }
    Ok(if mismatched_total == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn parse_properties(text: &str) -> Result<Vec<Property>> {
    text.split('+')
        .map(|p| match p.trim() {
            "completeness" => Ok(Property::Completeness),
            "weak-accuracy" => Ok(Property::WeakAccuracy),
            "strong-accuracy" => Ok(Property::StrongAccuracy),
            other => bail!("unknown property `{other}`"),
        })
        .collect()
}

fn cmd_search(args: SearchArgs) -> Result<ExitCode> {
    let out = Emitter { json: args.json };
    let props = parse_properties(&args.property)?;
    let (read_mode, signing, total_order) =
        parse_model(&args.model).ok_or_else(|| anyhow!("unknown model `{}`", args.model))?;
    let cfg = ModelConfig {
        n: args.n,
        f: args.f,
        tau: args.tau,
        t: args.t.unwrap_or(1),
        read_mode,
        signing,
        total_order,
    };
    let space = SearchSpace { cfg, cap: args.cap };

    let emit_result = |out: &Emitter,
                       t: u8,
                       result: &arsim_core::search::SearchResult|
     -> Result<()> {
        match &result.counterexample {
            Some(ce) => {
                let witness = ce.verdict.witness.map(|(r, l)| (r.0, file::render_label(l)));
                out.line(
                    format!(
                        "search t={t} violated={} states={} property={} witness={:?} ordinal={}",
                        result.violated,
                        result.states_explored,
                        ce.property,
                        witness,
                        ce.ordinal
                    ),
                    serde_json::json!({
                        "type": "search",
                        "t": t,
                        "violated": true,
                        "states_explored": result.states_explored,
                        "property": ce.property.to_string(),
                        "witness": witness,
                        "ordinal": ce.ordinal,
                    }),
                );
            }
            None => {
                out.line(
                    format!(
                        "search t={t} violated=false states={}",
                        result.states_explored
                    ),
                    serde_json::json!({
                        "type": "search",
                        "t": t,
                        "violated": false,
                        "states_explored": result.states_explored,
                    }),
                );
            }
        }
        Ok(())
    };

    if let Some(t) = args.t {
        let result = find_violation(&space, &props)?;
        emit_result(&out, t, &result)?;
        if let (Some(path), Some(ce)) = (&args.out, &result.counterexample) {
            let expectation = violated_expectation(ce);
            let rendered = file::to_file(
                &ce.scenario,
                Some(format!("counterexample-{}", ce.property)),
                vec![expectation],
            );
            std::fs::write(path, serde_json::to_vec_pretty(&rendered)?)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(ExitCode::SUCCESS)
    } else {
        let sweep = sweep_thresholds(&space, &props)?;
        for (t, result) in &sweep.per_t {
            emit_result(&out, *t, result)?;
        }
        out.line(
            format!("no-single-t={}", sweep.impossible),
            serde_json::json!({ "type": "threshold-sweep", "impossible": sweep.impossible }),
        );
        Ok(ExitCode::SUCCESS)
    }
}

fn violated_expectation(ce: &arsim_core::search::Counterexample) -> Expectation {
    let mut expectation = Expectation::default();
    match ce.property {
        Property::Completeness => expectation.completeness = Some(false),
        Property::WeakAccuracy => expectation.weak_accuracy = Some(false),
        Property::StrongAccuracy => expectation.strong_accuracy = Some(false),
    }
    expectation
}

fn cmd_report(args: ReportArgs) -> Result<ExitCode> {
    if args.kind != "table1" {
        bail!("unknown report `{}` (available: table1)", args.kind);
    }
    let out = Emitter { json: args.json };
    let matched = table::run_table1(&out, args.f)?;
    Ok(if matched { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
