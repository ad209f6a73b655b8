use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::marrs::{SequenceRule, Threshold, ThresholdPolicy};
use crate::netsim::{CellId, HandoverRequest, UeId};
use crate::ric::RicDecision;
use crate::Error;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn gain_matches_the_reference_table() {
    // Means are rounded to two decimals, so the ratio only agrees to that precision.
    assert!(close(gain_percent(4.27, 10.61), 248.50, 0.05));
    assert!(close(gain_percent(14.34, 7.23), 50.39, 0.05));
}

fn short(iterations: u64, seed: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig { iterations, seed, ..ScenarioConfig::default() };
    c.attack.start_iteration = iterations / 2;
    c
}

#[test]
fn identical_runs_have_full_gain() {
    let run = run_closed_loop(&short(60, 1)).unwrap();
    let gains = compute_attack_gain(&run.metrics, &run.metrics).unwrap();
    assert_eq!(gains.len(), 6);
    for g in gains {
        if g.benign.mean > 0.0 {
            assert_eq!(g.percent, 100.0);
        }
    }
}

#[test]
fn mismatched_topologies_are_rejected() {
    let a = RunMetrics::new(vec![CellId(1), CellId(2)], 0);
    let b = RunMetrics::new(vec![CellId(1), CellId(3)], 0);
    assert!(matches!(compute_attack_gain(&a, &b), Err(Error::TopologyMismatch(_))));
}

#[test]
fn confusion_example() {
    let c = ConfusionCounts { tp: 46, fp: 2, fn_: 0, tn: 202 };
    let m = c.metrics();
    assert!(close(m.precision, 46.0 / 48.0, 1e-12));
    assert!(close(m.precision, 0.958, 5e-4));
    assert_eq!(m.recall, 1.0);
    assert!(close(m.f1, 0.979, 5e-4));
    assert!(close(m.accuracy, 248.0 / 250.0, 1e-12));
}

#[test]
fn perfect_and_silent_verdicts() {
    let truth = [true, false, true, false, false];
    let perfect = compute_detection_metrics(&truth, &truth).unwrap();
    assert_eq!((perfect.accuracy, perfect.f1), (1.0, 1.0));
    let silent = compute_detection_metrics(&[false; 5], &truth).unwrap();
    assert_eq!((silent.recall, silent.f1, silent.precision), (0.0, 0.0, 0.0));
    assert!(compute_detection_metrics(&[true], &truth).is_err());
}

proptest! {
    #[test]
    fn confusion_counts_cover_every_subject(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..200)) {
        let (p, t): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
        let c = ConfusionCounts::from_labels(&p, &t).unwrap();
        prop_assert_eq!(c.total(), p.len());
        let m = c.metrics();
        for v in [m.accuracy, m.precision, m.recall, m.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let p_r = m.precision + m.recall;
        if p_r > 0.0 {
            prop_assert!((m.f1 - 2.0 * m.precision * m.recall / p_r).abs() < 1e-12);
        }
    }

    #[test]
    fn gain_is_the_mean_ratio(b in 0.1f64..50.0, m in 0.0f64..50.0) {
        prop_assert!((gain_percent(b, m) * b / 100.0 - m).abs() < 1e-9);
    }
}

#[test]
fn every_iteration_serves_all_users() {
    let c = short(200, 2);
    let run = run_closed_loop(&c).unwrap();
    assert_eq!(run.metrics.iterations.len(), 200);
    for row in &run.metrics.ue_counts {
        assert_eq!(row.iter().sum::<u32>(), c.topology.ue_count as u32);
    }
}

#[test]
fn switching_the_attack_off_reproduces_the_benign_run() {
    let c = short(40, 3);
    let benign = run_closed_loop(&c.benign()).unwrap();
    let disabled = run_closed_loop(&c.with_attackers(&[CellId(5)]).benign()).unwrap();
    assert_eq!(benign.metrics, disabled.metrics);
    let again = run_closed_loop(&c.benign()).unwrap();
    assert_eq!(benign.metrics, again.metrics);
}

#[test]
fn attack_leaves_the_prefix_untouched() {
    let mut c = short(100, 4);
    c.attack.start_iteration = 70;
    let benign = run_closed_loop(&c.benign()).unwrap();
    let attacked = run_closed_loop(&c.with_attackers(&[CellId(5)])).unwrap();
    let a = c.attack.start_iteration as usize;
    assert_eq!(benign.metrics.ue_counts[..a], attacked.metrics.ue_counts[..a]);
}

#[test]
fn ran_side_enforces_lockstep() {
    let c = short(10, 5);
    let mut ran = RanSide::new(&c).unwrap();
    assert!(matches!(ran.apply(0, &[]), Err(Error::Protocol(_))));
    let e = ran.emit().unwrap();
    assert!(matches!(ran.emit(), Err(Error::Protocol(_))));
    assert!(matches!(ran.apply(e.truth.iteration + 1, &[]), Err(Error::Protocol(_))));
    ran.apply(e.truth.iteration, &[]).unwrap();
    assert!(ran.emit().is_ok());
}

#[test]
fn wire_envelopes_are_well_formed() {
    let c = short(5, 6);
    let mut ran = RanSide::new(&c).unwrap();
    let batch = ran.emit().unwrap().reported;
    let t = batch.iteration;
    let ho = HandoverRequest { ue_id: UeId(3), target_cell: CellId(2), issued_at: t };
    let msgs = [WireMessage::batch(batch), WireMessage::handover(ho), WireMessage::ack(t, vec![UeId(7)]), WireMessage::end(t)];
    for m in &msgs {
        assert!(m.is_well_formed());
        assert_eq!(m.iteration, t);
        assert_eq!(m.schema_version, SCHEMA_VERSION);
    }
    let broken = WireMessage { kind: MessageType::Ack, ..msgs[1].clone() };
    assert!(!broken.is_well_formed());

    let decision = RicDecision { anomalous: vec![UeId(3)], handovers: vec![ho, ho] };
    let reply = answer(t, &decision);
    assert_eq!(reply.len(), 3);
    assert_eq!(reply.last().unwrap().kind, MessageType::Ack);
    assert!(reply[..2].iter().all(|m| m.kind == MessageType::Handover));
    assert_eq!(decision_from_answer(t, &reply).unwrap(), decision);
    assert!(decision_from_answer(t + 1, &reply).is_err());
    assert!(decision_from_answer(t, &reply[..2]).is_err());
    assert!(decision_from_answer(t, &[]).is_err());
}

#[test]
fn evaluation_split_is_disjoint() {
    let c = ScenarioConfig::default();
    let s = EvaluationSplit::new(&c).unwrap();
    let w = c.detection.window_len as u64;
    assert_eq!(s.train, 0..400);
    assert_eq!(s.benign_validation, 400..500);
    assert!(s.attack_validation.start >= c.attack.start_iteration);
    assert!(s.attack_validation.end + w <= s.attack_test.start);
    assert_eq!(s.attack_test.end, c.iterations - w + 1);
    assert!(EvaluationSplit::new(&short(15, 0)).is_err());
}

#[test]
fn sequence_sweep_counts_consecutive_windows() {
    let t = Threshold::new(1.0, ThresholdPolicy::MaxF1).unwrap();
    let mk = |cell: u32, start: u64, loss: f64, malicious: bool| LabeledScore { run: 1, cell: CellId(cell), start, loss, malicious };
    let mut windows = Vec::new();
    // Malicious cell: untrusted, untrusted, trusted, untrusted.
    for (i, l) in [2.0, 2.0, 0.5, 2.0].into_iter().enumerate() {
        windows.push(mk(5, i as u64, l, true));
    }
    // Benign cell: one spurious alarm.
    for (i, l) in [0.1, 1.5, 0.1, 0.1].into_iter().enumerate() {
        windows.push(mk(1, i as u64, l, false));
    }
    let res = sequence_sweep(&windows, &t, &[1, 3], 1.0, 0).unwrap();
    assert_eq!(res.len(), 4);
    let get = |k, rule| res.iter().find(|r| r.k == k && r.rule == rule).unwrap().metrics.counts;
    let k3_all = get(3, SequenceRule::All);
    assert_eq!(k3_all.total(), 4);
    assert_eq!((k3_all.tp, k3_all.fp), (0, 0));
    let k3_maj = get(3, SequenceRule::Majority);
    assert_eq!((k3_maj.tp, k3_maj.fn_, k3_maj.fp), (2, 0, 0));
    let k1 = get(1, SequenceRule::All);
    assert_eq!((k1.tp, k1.fn_, k1.fp, k1.tn), (3, 1, 1, 3));
}

#[test]
fn unknown_experiment_cell_is_rejected() {
    let mut c = ScenarioConfig::default();
    c.experiment.mas_attackers = vec![CellId(99)];
    assert!(matches!(c.validate(), Err(Error::UnknownCell(CellId(99)))));
}
