use ransteer_core::harness::{run_closed_loop, ScenarioConfig};
use ransteer_core::marrs::{DetectionConfig, MarrsPipeline, WindowScore};
use ransteer_core::math;
use ransteer_core::netsim::{CellId, KpiReportBatch};
use ransteer_core::ric::KpiStore;

/// The benign telemetry with one cell's reported throughput scaled by
/// `factor` from `from` onwards.
fn with_inflated_throughput(store: &KpiStore, cell: CellId, from: u64, factor: f64) -> KpiStore {
    let mut out = KpiStore::new();
    for &t in store.iterations() {
        let mut cells: Vec<_> = store.cells_at(t).into_iter().cloned().collect();
        if t >= from {
            for r in cells.iter_mut().filter(|r| r.cell_id == cell) {
                r.throughput *= factor;
            }
        }
        let ues = store.ues_at(t).into_iter().cloned().collect();
        out.ingest(KpiReportBatch { iteration: t, ues, cells }).unwrap();
    }
    out
}

fn auc_for(scores: &[WindowScore], liar: CellId, from: u64) -> f64 {
    let pick = |malicious: bool| -> Vec<f64> {
        scores
            .iter()
            .filter(|s| s.start >= from && (s.cell == liar) == malicious)
            .map(|s| s.loss.unwrap())
            .collect()
    };
    math::auc(&pick(false), &pick(true))
}

#[test]
fn tripled_throughput_reports_score_above_honest_ones() {
    let config = ScenarioConfig { iterations: 300, seed: 0, ..ScenarioConfig::default() };
    let benign = run_closed_loop(&config.benign()).unwrap();
    let (pipeline, summary) = MarrsPipeline::train(&benign.store, 0..240, &DetectionConfig::default(), 0).unwrap();
    for report in summary.ae2.values() {
        assert!(report.final_loss().unwrap() < report.loss_history[0]);
    }

    let liar = CellId(5);
    let lied = with_inflated_throughput(&benign.store, liar, 250, 3.0);
    let windows = pipeline.extract(&lied, 240..300).unwrap();
    let auc = auc_for(&pipeline.scores(&windows).unwrap(), liar, 250);
    assert!(auc > 0.9, "auc {auc}");

    let honest = pipeline.extract(&benign.store, 240..300).unwrap();
    let baseline = auc_for(&pipeline.scores(&honest).unwrap(), liar, 250);
    assert!(baseline < auc);
}
