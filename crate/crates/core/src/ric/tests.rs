use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::anomaly::{IsolationForestConfig, IsolationForestModel};
use crate::netsim::{CellId, KpiReportBatch, Simulator, TopologyConfig, UeId};
use crate::Error;

fn sim_batches(n: usize, seed: u64) -> Vec<KpiReportBatch> {
    let mut sim = Simulator::new(&TopologyConfig::default(), seed).unwrap();
    (0..n)
        .map(|_| {
            sim.step_mobility();
            sim.emit_reports()
        })
        .collect()
}

fn fc(cell: u32, value: f64) -> QoeForecast {
    QoeForecast { ue_id: UeId(1), candidate_cell: CellId(cell), horizon: 1, value }
}

#[test]
fn ingest_first_batch_creates_one_record_per_entity() {
    let b = sim_batches(1, 1).remove(0);
    let mut store = KpiStore::new();
    store.ingest(b.clone()).unwrap();
    for c in &b.cells {
        assert_eq!(store.cell_window(c.cell_id, 0..u64::MAX).len(), 1);
    }
    for u in &b.ues {
        assert_eq!(store.ue_window(u.ue_id, 0..u64::MAX).len(), 1);
    }
}

#[test]
fn out_of_order_batch_leaves_store_unchanged() {
    let mut batches = sim_batches(6, 2);
    let mut store = KpiStore::new();
    let mut b4 = batches.remove(4);
    let b5 = batches.remove(4);
    store.ingest(b5).unwrap();
    let before = store.clone();
    assert_eq!(store.ingest(b4.clone()), Err(Error::OutOfOrder { last: 5, got: 4 }));
    assert_eq!(store, before);

    b4.iteration = 6;
    assert!(matches!(store.ingest(b4), Err(Error::MalformedBatch(_))));
    assert_eq!(store, before);
}

#[test]
fn window_query_returns_exactly_the_range() {
    let mut store = KpiStore::new();
    for b in sim_batches(100, 3) {
        store.ingest(b).unwrap();
    }
    for c in store.cell_ids() {
        let w = store.cell_window(c, 90..100);
        assert_eq!(w.len(), 10);
        assert_eq!(w[0].timestamp, 90);
    }
    for u in store.ue_ids() {
        assert_eq!(store.ue_window(u, 90..100).len(), 10);
    }
}

/// Store of 120 iterations; the forest sees the even iterations only.
fn trained(seed: u64) -> (KpiStore, IsolationForestModel, Vec<Vec<f64>>) {
    let mut store = KpiStore::new();
    let mut data = Vec::new();
    for b in sim_batches(120, seed) {
        if b.iteration % 2 == 0 {
            data.extend(b.ues.iter().map(ue_feature_vector));
        }
        store.ingest(b).unwrap();
    }
    let model = IsolationForestModel::fit(&data, &IsolationForestConfig { seed, ..Default::default() }).unwrap();
    (store, model, data)
}

#[test]
fn ad_flags_a_ue_far_below_the_training_rsrp() {
    let (_, model, data) = trained(4);
    let weakest = data.iter().min_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    let mut batch = sim_batches(1, 4).remove(0);
    let ue = &mut batch.ues[7];
    ue.pdcp_thp_dl = weakest[0];
    ue.prb_ratio_dl = weakest[1];
    ue.rsrp = weakest[2] - 30.0;
    ue.rsrq = weakest[3];
    ue.snir = weakest[4];
    let target = ue.ue_id;
    let expected = model.score(&ue_feature_vector(ue)) > model.score_threshold;
    let mut store = KpiStore::new();
    store.ingest(batch).unwrap();
    let flagged = ad_detect(&store, &model, 0).unwrap();
    assert!(expected);
    assert!(flagged.contains(&target));
}

#[test]
fn ad_flags_nothing_at_the_training_centre() {
    let (_, model, data) = trained(5);
    let centre: Vec<f64> = (0..5).map(|j| crate::math::mean(&data.iter().map(|r| r[j]).collect::<Vec<_>>())).collect();
    let mut batch = sim_batches(1, 5).remove(0);
    for u in &mut batch.ues {
        u.pdcp_thp_dl = centre[0];
        u.prb_ratio_dl = centre[1];
        u.rsrp = centre[2];
        u.rsrq = centre[3];
        u.snir = centre[4];
    }
    let mut s = KpiStore::new();
    s.ingest(batch).unwrap();
    assert!(model.score(&centre) <= model.score_threshold);
    assert!(ad_detect(&s, &model, 0).unwrap().is_empty());
}

#[test]
fn ad_flag_rate_on_benign_holdout_is_near_contamination() {
    let (store, model, _) = trained(6);
    let ids = store.ue_ids();
    let mut flagged = 0;
    let mut total = 0;
    for t in (1..120).step_by(2) {
        let f = ad_detect(&store, &model, t).unwrap();
        assert!(f.iter().all(|u| ids.contains(u)));
        flagged += f.len();
        total += store.ues_at(t).len();
    }
    let rate = flagged as f64 / total as f64;
    assert!((0.05..=0.15).contains(&rate), "rate {rate}");
    assert_eq!(ad_detect(&store, &model, 500), Err(Error::MissingIteration(500)));
}

#[test]
fn ts_examples() {
    let p0 = A1Policy { handover_margin: 0.0, ..Default::default() };
    let p1 = A1Policy { handover_margin: 1.0, ..Default::default() };
    assert_eq!(ts_decide(UeId(1), &fc(1, 10.0), &[fc(2, 10.0)], &p0, 0), None);
    let r = ts_decide(UeId(1), &fc(1, 4.0), &[fc(5, 9.0), fc(3, 7.0)], &p1, 3).unwrap();
    assert_eq!((r.target_cell, r.issued_at), (CellId(5), 3));
    assert_eq!(ts_decide(UeId(1), &fc(1, 4.0), &[fc(5, 4.5)], &p1, 0), None);
    assert_eq!(ts_decide(UeId(1), &fc(1, 4.0), &[], &p0, 0), None);
    let tie = ts_decide(UeId(1), &fc(1, 0.0), &[fc(6, 3.0), fc(2, 3.0), fc(4, 3.0)], &p0, 0).unwrap();
    assert_eq!(tie.target_cell, CellId(2));
}

proptest! {
    #[test]
    fn ts_decision_is_shift_invariant(
        serving in -1000i32..1000,
        neighbors in proptest::collection::vec((1u32..8, -1000i32..1000), 0..7),
        margin in 0u32..20,
        shift in -100_000i32..100_000,
    ) {
        let policy = A1Policy { handover_margin: margin as f64, ..Default::default() };
        let s = fc(9, serving as f64);
        let n: Vec<_> = neighbors.iter().map(|&(c, v)| fc(c, v as f64)).collect();
        let s2 = fc(9, (serving + shift) as f64);
        let n2: Vec<_> = neighbors.iter().map(|&(c, v)| fc(c, (v + shift) as f64)).collect();
        prop_assert_eq!(ts_decide(UeId(1), &s, &n, &policy, 0), ts_decide(UeId(1), &s2, &n2, &policy, 0));
    }
}

#[test]
fn rsrp_gap_factor_is_clamped_linear_ratio() {
    assert!((rsrp_gap_factor(-80.0, -80.0) - 1.0).abs() < 1e-12);
    assert!((rsrp_gap_factor(-83.0, -80.0) - 0.501_187_233_627_272_2).abs() < 1e-12);
    assert_eq!(rsrp_gap_factor(-60.0, -80.0), 2.0);
}

#[test]
fn candidate_series_pairs_ue_and_cell_rows() {
    let mut store = KpiStore::new();
    let batches = sim_batches(30, 7);
    for b in batches.clone() {
        store.ingest(b).unwrap();
    }
    let s = candidate_series(&store, UeId(1), CellId(2), 29, 10);
    assert_eq!(s.len(), 10);
    let b = &batches[29];
    assert_eq!(s[9], vec![b.ue(UeId(1)).unwrap().pdcp_thp_dl, b.cell(CellId(2)).unwrap().throughput_per_ue()]);
    assert!(matches!(
        qp_fit(&store, UeId(1), CellId(2), 5, &QpConfig::default()),
        Err(Error::InsufficientHistory { .. })
    ));
    assert!(qp_fit(&store, UeId(1), CellId(2), 29, &QpConfig::default()).is_ok());
}

#[test]
fn ric_pass_is_deterministic_and_respects_warmup() {
    let cfg = RicConfig { ad: AdConfig { training_iterations: 40, ..Default::default() }, ..Default::default() };
    let run = || {
        let mut ric = Ric::new(cfg.clone(), 11);
        let mut out = Vec::new();
        for b in sim_batches(80, 11) {
            out.push(ric.on_batch(b).unwrap());
        }
        (ric, out)
    };
    let (ric, a) = run();
    let (_, b) = run();
    assert_eq!(a, b);
    assert!(a[..40].iter().all(|d| d.handovers.is_empty() && d.anomalous.is_empty()));
    assert!(a[40..].iter().any(|d| !d.anomalous.is_empty()));
    assert_eq!(ric.decide(79).unwrap(), a[79]);
    assert_eq!(ric.decide(79).unwrap(), ric.decide(79).unwrap());
    for d in &a {
        for h in &d.handovers {
            assert!(d.anomalous.contains(&h.ue_id));
        }
    }
}
