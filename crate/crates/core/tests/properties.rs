//! Property tests over randomized scenarios: codec round-trips, log
//! soundness against the trace, report-log consistency, threshold
//! monotonicity, quorum insensitivity, and token unforgeability.

use arsim_core::dispersal::{Codec, CodecParams};
use arsim_core::emulation::{ModelConfig, ReadMode, Signing};
use arsim_core::ids::{Label, ObjectIndex, ObjectSet, ReaderId, Value, WriterId};
use arsim_core::object::{FaultScript, OmitPhase, OmitRule, ReadRecord};
use arsim_core::oracle;
use arsim_core::scenario::{ReaderSpec, Scenario, Step};
use arsim_core::sim::Engine;
use arsim_core::trace::EventKind;
use proptest::prelude::*;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_subset(state: &mut u64, n: u8) -> ObjectSet {
    let bits = splitmix(state);
    (1..=n).filter(|i| bits & (1 << i) != 0).map(ObjectIndex).collect()
}

/// Derive a valid scenario from a handful of random knobs. Steps follow
/// the two-writes, two-readers, one-audit shape with random subsets.
fn build_scenario(n: u8, f: u8, tau_rel: u8, t: u8, mode_sel: u8, mut rng: u64) -> Scenario {
    let tau = (f + 1 + tau_rel % (n - f)).min(n);
    let t = 1 + t % n;
    let (read_mode, signing, total_order) = match mode_sel % 5 {
        0 => (ReadMode::Fast, Signing::None, false),
        1 => (ReadMode::Fast, Signing::Generic, false),
        2 => (ReadMode::Fast, Signing::None, true),
        3 => (ReadMode::NonFast, Signing::None, false),
        _ => (ReadMode::NonFast, Signing::Specific, false),
    };
    let cfg = ModelConfig { n, f, tau, t, read_mode, signing, total_order };
    let all = ObjectSet::all(n);
    let labels = [Label::new(WriterId(1), 1), Label::new(WriterId(1), 2)];

    let mut scripts = vec![FaultScript::correct(); n as usize];
    for j in 0..f {
        let bits = splitmix(&mut rng);
        let mut fabricate = std::collections::BTreeSet::new();
        for (i, reader) in [ReaderId(1), ReaderId(2)].into_iter().enumerate() {
            for (jj, &label) in
                [labels[0], labels[1], Label::new(WriterId(1), 9)].iter().enumerate()
            {
                if bits & (1 << (i * 3 + jj)) != 0 {
                    fabricate.insert(ReadRecord { reader, label });
                }
            }
        }
        let mut omit = Vec::new();
        for (i, reader) in [ReaderId(1), ReaderId(2)].into_iter().enumerate() {
            if bits & (1 << (8 + i)) != 0 {
                let phase = match bits >> (10 + 2 * i) & 3 {
                    0 => OmitPhase::Both,
                    1 => OmitPhase::LabelQuery,
                    _ => OmitPhase::BlockRead,
                };
                omit.push(OmitRule { reader, label: None, phase });
            }
        }
        scripts[j as usize] = FaultScript {
            is_faulty: true,
            omit_block_to: omit,
            omit_records_to_audit: bits & (1 << 15) != 0,
            fabricate,
            crash_after_event: None,
        };
    }

    let mut steps = Vec::new();
    let d1 = if total_order { all } else { random_subset(&mut rng, n) };
    steps.push(Step::Write {
        writer: WriterId(1),
        value: Value::new(vec![0x11]).unwrap(),
        deliver_to: d1,
    });
    let mut readers = Vec::new();
    for (idx, id) in [ReaderId(1), ReaderId(2)].into_iter().enumerate() {
        let choice = splitmix(&mut rng) % 3;
        let targets = match choice {
            0 => ObjectSet::EMPTY,
            1 => all,
            _ => random_subset(&mut rng, n),
        };
        let partial = !targets.is_empty() && targets != all;
        readers.push(ReaderSpec { id, faulty: partial });
        if !targets.is_empty() {
            let request_label = if read_mode == ReadMode::NonFast && partial {
                Some(labels[(splitmix(&mut rng) % 2) as usize])
            } else {
                None
            };
            steps.push(Step::Read { reader: id, targets, request_label, retries: 0 });
        }
        if idx == 0 {
            let d2 = if total_order { all } else { random_subset(&mut rng, n) };
            steps.push(Step::Write {
                writer: WriterId(1),
                value: Value::new(vec![0x22]).unwrap(),
                deliver_to: d2,
            });
        }
    }
    // Quorum: drop f random objects.
    let mut quorum = all;
    while quorum.len() > n - f {
        let k = (splitmix(&mut rng) % n as u64) as u8 + 1;
        quorum.remove(ObjectIndex(k));
    }
    steps.push(Step::Audit { quorum });

    Scenario { cfg, seed: rng, scripts, readers, steps }
}

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    (3u8..=6, 0u8..=1, any::<u8>(), any::<u8>(), any::<u8>(), any::<u64>())
        .prop_map(|(n, f, tau_rel, t, mode, rng)| build_scenario(n, f, tau_rel, t, mode, rng))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn codec_round_trips_at_every_threshold(
        payload in proptest::collection::vec(any::<u8>(), 1..=8),
        n in 1u8..=7,
        tau_rel in any::<u8>(),
        key in any::<u64>(),
    ) {
        let tau = 1 + tau_rel % n;
        let codec = Codec::new(CodecParams::new(n, tau).unwrap(), key);
        let value = Value::new(payload).unwrap();
        let label = Label::new(WriterId(1), 1);
        let blocks = codec.split(&value, label);
        prop_assert_eq!(blocks.len(), n as usize);
        // The first tau blocks and the last tau blocks both reconstruct.
        prop_assert_eq!(codec.combine(&blocks[..tau as usize]).unwrap(), value.clone());
        prop_assert_eq!(codec.combine(&blocks[(n - tau) as usize..]).unwrap(), value.clone());
        if tau > 1 {
            prop_assert!(codec.combine(&blocks[..(tau - 1) as usize]).is_err());
        }
        prop_assert_eq!(codec.split(&value, label), blocks);
    }

    #[test]
    fn scenarios_run_deterministically(scenario in arb_scenario()) {
        prop_assert_eq!(scenario.validate(), Ok(()));
        let a = Engine::new().run(&scenario).unwrap();
        let b = Engine::new().run(&scenario).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn correct_object_logs_match_the_trace(scenario in arb_scenario()) {
        let mut engine = Engine::new();
        engine.execute(&scenario).unwrap();
        let trace = engine.trace();
        for obj in engine.objects() {
            let k = obj.index();
            if obj.script().is_faulty {
                continue;
            }
            // Soundness: every record corresponds to a served read.
            for record in obj.true_log() {
                let served = trace.events.iter().any(|e| matches!(
                    e.kind,
                    EventKind::RespondRead { object, reader, returned: Some(label), logged: true, .. }
                        if object == k && reader == record.reader && label == record.label
                ));
                prop_assert!(served, "unbacked record at object {}", k);
            }
            // Completeness: every served read left a record.
            for e in &trace.events {
                if let EventKind::RespondRead {
                    object,
                    reader,
                    returned: Some(label),
                    ..
                } = e.kind
                {
                    if object == k {
                        let logged = obj.true_log().contains(&ReadRecord { reader, label });
                        prop_assert!(logged, "missing record at object {}", k);
                    }
                }
            }
        }
    }

    #[test]
    fn reports_are_consistent_with_collected_logs(scenario in arb_scenario()) {
        let mut engine = Engine::new();
        engine.execute(&scenario).unwrap();
        for report in engine.reports() {
            prop_assert_eq!(report.quorum.len(), scenario.cfg.quorum());
            for evidence in &report.evidences {
                let record = ReadRecord { reader: evidence.reader, label: evidence.label };
                prop_assert_eq!(report.attesting_objects(&record), evidence.attesting);
                prop_assert!(evidence.count() >= scenario.cfg.t);
                prop_assert!(evidence.attesting.is_subset(&report.quorum));
            }
        }
    }

    #[test]
    fn raising_t_only_removes_evidences(scenario in arb_scenario()) {
        let mut previous: Option<Vec<(ReaderId, Label)>> = None;
        for t in (1..=scenario.cfg.n).rev() {
            let mut s = scenario.clone();
            s.cfg.t = t;
            let run = Engine::new().run(&s).unwrap();
            let pairs: Vec<(ReaderId, Label)> =
                run.reports[0].evidences.iter().map(|e| (e.reader, e.label)).collect();
            if let Some(higher) = previous {
                for pair in &higher {
                    prop_assert!(pairs.contains(pair));
                }
            }
            previous = Some(pairs);
        }
    }

    #[test]
    fn quorum_differences_come_from_outside_the_intersection(scenario in arb_scenario()) {
        // Any evidence reported under one quorum but not another must rest
        // on records held by objects outside the second quorum.
        let n = scenario.cfg.n;
        let f = scenario.cfg.f;
        if f == 0 {
            return Ok(());
        }
        let mut runs = Vec::new();
        for excluded in 1..=n {
            let mut s = scenario.clone();
            let mut quorum = ObjectSet::all(n);
            quorum.remove(ObjectIndex(excluded));
            if let Some(Step::Audit { quorum: q }) = s.steps.last_mut() {
                *q = quorum;
            }
            runs.push((quorum, Engine::new().run(&s).unwrap()));
        }
        for (qa, ra) in &runs {
            for (qb, rb) in &runs {
                for ev in &ra.reports[0].evidences {
                    if rb.reports[0].evidence_for(ev.reader, ev.label).is_none() {
                        let outside = ev.attesting.difference(qa.intersection(*qb));
                        prop_assert!(!outside.is_empty());
                    }
                }
            }
        }
    }

    #[test]
    fn tokens_are_never_forged(scenario in arb_scenario()) {
        if scenario.cfg.signing == Signing::None {
            return Ok(());
        }
        let mut engine = Engine::new();
        engine.execute(&scenario).unwrap();
        let trace = engine.trace();
        // Every token any object received was minted for a reader that
        // invoked a read in this run.
        for k in ObjectSet::all(scenario.cfg.n).iter() {
            for token in engine.registry().received_by(k) {
                let minted_for_requester = trace.events.iter().any(|e| matches!(
                    e.kind,
                    EventKind::InvokeRead { reader, .. } if reader == token.reader
                ));
                prop_assert!(minted_for_requester);
            }
        }
    }

    #[test]
    fn effective_reads_grow_with_the_prefix(scenario in arb_scenario()) {
        let run = Engine::new().run(&scenario).unwrap();
        let tau = scenario.cfg.tau;
        let mut previous = 0usize;
        for ordinal in 0..=run.trace.next_ordinal() {
            let now = oracle::effective_reads_before(&run.trace, tau, ordinal).len();
            prop_assert!(now >= previous);
            previous = now;
        }
    }
}
