use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;

use proptest::prelude::*;

use super::*;
use crate::netsim::{CellId, KpiReportBatch, Simulator, TopologyConfig};
use crate::nn::{Activation, Mlp};
use crate::ric::QpConfig;
use crate::rng::{self, Stream};
use crate::Error;

fn bounds() -> CategoryBoundaries {
    CategoryBoundaries::new([10.0, 20.0, 30.0]).unwrap()
}

#[test]
fn boundary_value_falls_into_the_upper_bin() {
    let b = bounds();
    assert_eq!(categorize(20.0, &b), QoeCategory::Good);
    assert_eq!(categorize(19.999, &b), QoeCategory::Average);
    assert_eq!(categorize(-1e9, &b), QoeCategory::Poor);
    assert_eq!(categorize(30.0, &b), QoeCategory::Excellent);
}

#[test]
fn boundaries_must_increase() {
    assert!(CategoryBoundaries::new([1.0, 1.0, 2.0]).is_err());
    assert!(CategoryBoundaries::new([1.0, f64::NAN, 2.0]).is_err());
    assert!(CategoryBoundaries::from_quartiles(&[]).is_err());
    let flat = CategoryBoundaries::from_quartiles(&[5.0; 10]).unwrap().values();
    assert!(flat[0] < flat[1] && flat[1] < flat[2]);
}

#[test]
fn quartile_bins_hold_a_quarter_each() {
    let mut r = rng::stream(3, Stream::Training);
    let xs: Vec<f64> = (0..4000).map(|_| rng::normal(&mut r, 5.0) + 20.0).collect();
    let b = CategoryBoundaries::from_quartiles(&xs).unwrap();
    let mut counts = [0usize; 4];
    for &x in &xs {
        counts[b.categorize(x).index()] += 1;
    }
    for c in counts {
        let share = c as f64 / xs.len() as f64;
        assert!((share - 0.25).abs() < 0.01, "{counts:?}");
    }
}

#[test]
fn category_order_and_successor() {
    assert!(QoeCategory::Poor < QoeCategory::Excellent);
    assert_eq!(QoeCategory::Average.next(), Some(QoeCategory::Good));
    assert_eq!(QoeCategory::Excellent.next(), None);
}

proptest! {
    #[test]
    fn categorize_is_monotone(a in -100.0f64..100.0, b in -100.0f64..100.0) {
        let bd = bounds();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(bd.categorize(lo) <= bd.categorize(hi));
    }

    #[test]
    fn bins_partition_the_line(x in -1e6f64..1e6) {
        let v = bounds().values();
        let inside = [x < v[0], v[0] <= x && x < v[1], v[1] <= x && x < v[2], v[2] <= x];
        prop_assert_eq!(inside.iter().filter(|&&b| b).count(), 1);
        prop_assert!(inside[bounds().categorize(x).index()]);
    }
}

fn history(n: usize, seed: u64) -> Vec<crate::netsim::CellKpiReport> {
    let mut sim = Simulator::new(&TopologyConfig::default(), seed).unwrap();
    (0..n)
        .map(|_| {
            sim.step_mobility();
            sim.emit_reports().cell(CellId(3)).unwrap().clone()
        })
        .collect()
}

#[test]
fn substitute_data_labels_are_oracle_outputs() {
    let h = history(80, 1);
    let qp = QpConfig::default();
    let data = collect_substitute_data(&h, &qp, 30).unwrap();
    assert_eq!(data.len(), 30);
    for (i, s) in data.iter().enumerate() {
        let t = h.len() - 30 + i;
        assert_eq!(s.features, cell_features(&h[t]));
        assert_eq!(s.label, qoe_oracle(&h[..=t], &qp).unwrap());
    }
    assert!(collect_substitute_data(&h, &qp, 0).unwrap().is_empty());
    let too_many = collect_substitute_data(&h, &qp, 80);
    assert!(matches!(too_many, Err(Error::InsufficientHistory { .. })));
}

#[test]
fn features_round_trip_through_a_report() {
    let h = history(3, 2);
    let r = &h[2];
    assert_eq!(with_features(r, &cell_features(r)), *r);
    let moved = with_features(r, &[1.0, 2.0, 3.4, 0.6, -2.0]);
    assert_eq!((moved.num_ues, moved.new_ues, moved.left_ues), (3, 1, 0));
    assert_eq!((moved.cell_id, moved.timestamp), (r.cell_id, r.timestamp));
}

#[test]
fn substitute_rejects_empty_and_small_datasets() {
    let cfg = SubstituteConfig::default();
    assert!(matches!(train_substitute(&[], &cfg, 0), Err(Error::EmptyData(_))));
    let few: Vec<SubstituteSample> =
        (0..10).map(|i| SubstituteSample { features: [i as f64; ATTACK_DIM], label: i as f64 }).collect();
    assert!(matches!(train_substitute(&few, &cfg, 0), Err(Error::InsufficientHistory { .. })));
}

fn realizable(n: usize) -> Vec<SubstituteSample> {
    let mut r = rng::stream(11, Stream::Training);
    let teacher = Mlp::new(&[ATTACK_DIM, 8, 1], Activation::Tanh, &mut r);
    (0..n)
        .map(|_| {
            let features: [f64; ATTACK_DIM] = core::array::from_fn(|_| rng::normal(&mut r, 1.0));
            SubstituteSample { label: teacher.predict(&features)[0], features }
        })
        .collect()
}

#[test]
fn realizable_target_is_learned() {
    let data = realizable(400);
    let m = train_substitute(&data, &SubstituteConfig::default(), 4).unwrap();
    assert!(m.agreement >= 0.9, "agreement {}", m.agreement);
}

#[test]
fn reported_agreement_matches_the_held_out_split() {
    let data = realizable(250);
    let m = train_substitute(&data, &SubstituteConfig::default(), 5).unwrap();
    assert_eq!(m.held_out.len(), 50);
    let agree = m.held_out.iter().filter(|&&i| m.category(&data[i].features) == m.boundaries.categorize(data[i].label)).count();
    assert_eq!(m.agreement, agree as f64 / 50.0);
}

#[test]
fn constant_labels_give_a_constant_prediction() {
    let mut r = rng::stream(2, Stream::Training);
    let data: Vec<SubstituteSample> = (0..100)
        .map(|_| SubstituteSample { features: core::array::from_fn(|_| rng::normal(&mut r, 1.0)), label: 7.5e6 })
        .collect();
    let far = CategoryBoundaries::new([5e6, 6e6, 7e6]).unwrap();
    let m = train_substitute_with(&data, &[], Some(far), &SubstituteConfig::default(), 0).unwrap();
    assert_eq!(m.agreement, 1.0);
    for s in &data {
        assert!((m.predict(&s.features) - 7.5e6).abs() < 1e3, "{}", m.predict(&s.features));
    }
}

#[test]
fn unreachable_agreement_is_an_error() {
    let mut r = rng::stream(9, Stream::Training);
    let data: Vec<SubstituteSample> = (0..100)
        .map(|_| SubstituteSample { features: [0.0; ATTACK_DIM], label: rng::normal(&mut r, 1.0) })
        .collect();
    let cfg = SubstituteConfig { attempts: 2, epochs: 5, ..SubstituteConfig::default() };
    match train_substitute(&data, &cfg, 0) {
        Err(Error::SubstituteAgreement { attempts: 2, best, .. }) => assert!(best < 0.8),
        other => panic!("{other:?}"),
    }
}

/// "excellent iff x > 5", otherwise good; counts every query.
struct Step {
    calls: Cell<usize>,
}

impl HardLabelOracle for Step {
    fn dim(&self) -> usize {
        1
    }

    fn category(&self, x: &[f64]) -> QoeCategory {
        self.calls.set(self.calls.get() + 1);
        if x[0] > 5.0 {
            QoeCategory::Excellent
        } else {
            QoeCategory::Good
        }
    }
}

fn budget(max_l2: f64, queries: usize) -> AttackBudget {
    AttackBudget { max_l2, query_budget: queries, clamp_box: vec![(-100.0, 100.0)] }
}

#[test]
fn one_dimensional_boundary_is_found() {
    let o = Step { calls: Cell::new(0) };
    let out = hop_skip_jump(&o, &[4.0], QoeCategory::Excellent, &[vec![10.0]], &HsjConfig::default(), &budget(3.0, 25_000), 1)
        .unwrap();
    assert!(out.success);
    assert!(out.point[0] > 5.0 && out.point[0] - 5.0 <= 1e-3, "{:?}", out.point);
    assert!((out.distance - 1.0).abs() <= 1e-3);
    assert_eq!(out.queries, o.calls.get());
}

#[test]
fn starting_in_the_target_costs_nothing() {
    let o = Step { calls: Cell::new(0) };
    let out =
        hop_skip_jump(&o, &[7.0], QoeCategory::Excellent, &[vec![10.0]], &HsjConfig::default(), &budget(3.0, 100), 1).unwrap();
    assert_eq!(out.distance, 0.0);
    assert_eq!(out.queries, 1);
    assert_eq!(out.point, vec![7.0]);
    assert!(out.success);
}

#[test]
fn missing_init_sample_is_an_error() {
    let o = Step { calls: Cell::new(0) };
    let r = hop_skip_jump(&o, &[4.0], QoeCategory::Excellent, &[vec![1.0]], &HsjConfig::default(), &budget(3.0, 100), 1);
    assert!(matches!(r, Err(Error::NoInitSample)));
}

/// Excellent outside the unit-radius ball around (3, 3).
struct Ring {
    calls: Cell<usize>,
}

impl HardLabelOracle for Ring {
    fn dim(&self) -> usize {
        2
    }

    fn category(&self, x: &[f64]) -> QoeCategory {
        self.calls.set(self.calls.get() + 1);
        let d = crate::math::l2_distance(x, &[3.0, 3.0]);
        if d > 1.0 {
            QoeCategory::Excellent
        } else {
            QoeCategory::Good
        }
    }
}

#[test]
fn distance_never_grows_and_queries_are_exact() {
    let o = Ring { calls: Cell::new(0) };
    let b = AttackBudget { max_l2: 3.0, query_budget: 4_000, clamp_box: vec![(-10.0, 10.0); 2] };
    let out = hop_skip_jump(&o, &[3.2, 3.1], QoeCategory::Excellent, &[vec![8.0, -4.0]], &HsjConfig::default(), &b, 7).unwrap();
    assert!(out.distance_history.windows(2).all(|w| w[1] <= w[0]));
    assert!(out.queries <= 4_000);
    assert_eq!(out.queries, o.calls.get());
    // Nearest boundary point is at distance 1 - |(0.2, 0.1)|.
    let optimum = 1.0 - crate::math::l2_norm(&[0.2, 0.1]);
    assert!(out.distance < optimum + 0.15, "{} vs {optimum}", out.distance);
}

#[test]
fn tight_query_budget_is_respected() {
    let o = Ring { calls: Cell::new(0) };
    let b = AttackBudget { max_l2: 3.0, query_budget: 50, clamp_box: vec![(-10.0, 10.0); 2] };
    let out = hop_skip_jump(&o, &[3.2, 3.1], QoeCategory::Excellent, &[vec![8.0, -4.0]], &HsjConfig::default(), &b, 7).unwrap();
    assert!(out.queries <= 50);
    assert_eq!(out.queries, o.calls.get());
}

#[test]
fn crafting_is_deterministic_and_honours_the_contract() {
    let h = history(160, 3);
    let qp = QpConfig::default();
    let n = h.len() - 6;
    let data = collect_substitute_data(&h, &qp, n).unwrap();
    let model = train_substitute(&data, &SubstituteConfig::default(), 1).unwrap();
    let pool: Vec<[f64; ATTACK_DIM]> = data.iter().map(|s| s.features).collect();
    let b = AttackBudget::for_network(50, 100e6, 200.0);
    let report = &h[h.len() - 1];
    let current = model.category(&cell_features(report));
    let Some(target) = current.next() else { return };
    let run = |seed| craft_adversarial(&model, report, target, &b, &HsjConfig::default(), &pool, seed);
    let (a, again) = match (run(42), run(42)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::NoInitSample), Err(Error::NoInitSample)) => return,
        other => panic!("{other:?}"),
    };
    assert_eq!(a, again);
    assert!(a.query_count <= b.query_budget);
    if a.success {
        assert!(a.delta_l2 <= b.max_l2);
        assert!(a.achieved_category > a.original_category);
        let p = cell_features(&a.perturbed);
        for (v, (lo, hi)) in p.iter().zip(&b.clamp_box) {
            assert!(lo <= v && v <= hi);
        }
    } else {
        assert_eq!(a.perturbed, a.original);
    }
}

fn batch(seed: u64) -> KpiReportBatch {
    let mut sim = Simulator::new(&TopologyConfig::default(), seed).unwrap();
    sim.step_mobility();
    sim.emit_reports()
}

fn lie(batch: &KpiReportBatch, cell: CellId, extra: f64) -> AdversarialReport {
    let original = batch.cell(cell).unwrap().clone();
    let perturbed = crate::netsim::CellKpiReport { throughput: original.throughput + extra, ..original.clone() };
    AdversarialReport {
        original,
        perturbed,
        delta: vec![0.1, 0.0, 0.0, 0.0, 0.0],
        delta_l2: 0.1,
        original_category: QoeCategory::Good,
        target: QoeCategory::Excellent,
        achieved_category: QoeCategory::Excellent,
        query_count: 1,
        distance_history: vec![0.1],
        success: true,
    }
}

#[test]
fn empty_malicious_set_leaves_the_batch_alone() {
    let b = batch(1);
    let (out, incidents) = inject(&b, &[], &BTreeMap::new());
    assert_eq!(out, b);
    assert!(incidents.is_empty());
}

#[test]
fn single_and_multi_attacker_injection_touch_only_their_cells() {
    let b = batch(2);
    for attackers in [vec![CellId(5)], vec![CellId(1), CellId(5)]] {
        let crafted: BTreeMap<_, _> = attackers.iter().map(|&c| (c, lie(&b, c, 1e6))).collect();
        let (out, incidents) = inject(&b, &attackers, &crafted);
        assert!(incidents.is_empty());
        let differing = out.cells.iter().zip(&b.cells).filter(|(x, y)| x != y).count();
        assert_eq!(differing, attackers.len());
        assert_eq!(out.ues, b.ues);
        for c in &attackers {
            assert_eq!(out.cell(*c).unwrap().throughput, b.cell(*c).unwrap().throughput + 1e6);
        }
    }
}

#[test]
fn implausible_lies_are_dropped_with_an_incident() {
    let b = batch(3);
    let mut bad = lie(&b, CellId(2), 0.0);
    bad.perturbed.num_ues = b.ues.len() as u32 + 1;
    let crafted = BTreeMap::from([(CellId(2), bad)]);
    let (out, incidents) = inject(&b, &[CellId(2)], &crafted);
    assert_eq!(out, b);
    assert_eq!(incidents.len(), 1);
    assert_eq!((incidents[0].cell, incidents[0].iteration), (CellId(2), b.iteration));

    let mut negative = lie(&b, CellId(2), 0.0);
    negative.perturbed.throughput = -1.0;
    let (out, incidents) = inject(&b, &[CellId(2)], &BTreeMap::from([(CellId(2), negative)]));
    assert_eq!(out, b);
    assert_eq!(incidents.len(), 1);
}

#[test]
fn attacker_passes_reports_through_before_the_start() {
    let cfg = AttackConfig {
        enabled: true,
        malicious_cells: vec![CellId(5)],
        start_iteration: 1_000,
        ..AttackConfig::default()
    };
    let mut a = Attacker::new(cfg, QpConfig::default(), AttackBudget::for_network(50, 100e6, 200.0), 0).unwrap();
    let mut sim = Simulator::new(&TopologyConfig::default(), 4).unwrap();
    for _ in 0..5 {
        sim.step_mobility();
        let b = sim.emit_reports();
        let step = a.process(&b).unwrap();
        assert_eq!(step.batch, b);
        assert!(step.crafted.is_empty());
    }
}

#[test]
fn config_rejects_duplicates_and_bad_fixed_boundaries() {
    let dup = AttackConfig { malicious_cells: vec![CellId(1), CellId(1)], ..AttackConfig::default() };
    assert!(dup.validate().is_err());
    let fixed = AttackConfig { boundaries: BoundarySource::Fixed { values: [3.0, 2.0, 1.0] }, ..AttackConfig::default() };
    assert!(fixed.validate().is_err());
    assert!(AttackConfig::default().active_cells().is_empty());
}
