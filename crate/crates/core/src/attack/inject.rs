use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::AdversarialReport;
use crate::netsim::{CellId, CellKpiReport, KpiReportBatch};

/// A crafted report that was refused at injection time; the original went out instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionIncident {
    pub cell: CellId,
    pub iteration: u64,
    pub reason: String,
}

/// Plausibility of a lie: same identity and timestamp, finite non-negative
/// quantities, counts within the UE population and a UE-count change no larger
/// than the population.
pub fn check_plausible(original: &CellKpiReport, perturbed: &CellKpiReport, ue_population: usize) -> Result<(), String> {
    if perturbed.cell_id != original.cell_id || perturbed.timestamp != original.timestamp {
        return Err(format!("identity changed: {}@{}", perturbed.cell_id, perturbed.timestamp));
    }
    if !(perturbed.throughput.is_finite() && perturbed.throughput >= 0.0) {
        return Err(format!("throughput {}", perturbed.throughput));
    }
    if !(perturbed.meas_period_prb.is_finite() && perturbed.meas_period_prb >= 0.0) {
        return Err(format!("meas_period_prb {}", perturbed.meas_period_prb));
    }
    let n = ue_population as u64;
    for (name, v) in [("num_ues", perturbed.num_ues), ("new_ues", perturbed.new_ues), ("left_ues", perturbed.left_ues)] {
        if u64::from(v) > n {
            return Err(format!("{name} {v} exceeds UE population {n}"));
        }
    }
    if u64::from(perturbed.num_ues.abs_diff(original.num_ues)) > n {
        return Err(format!("num_ues jump {} -> {}", original.num_ues, perturbed.num_ues));
    }
    Ok(())
}

/// Replaces the malicious cells' reports with their crafted versions. UE
/// reports and honest cells pass through untouched.
pub fn inject(
    batch: &KpiReportBatch,
    malicious: &[CellId],
    crafted: &BTreeMap<CellId, AdversarialReport>,
) -> (KpiReportBatch, Vec<InjectionIncident>) {
    let mut out = batch.clone();
    let mut incidents = Vec::new();
    for report in out.cells.iter_mut().filter(|c| malicious.contains(&c.cell_id)) {
        let Some(adv) = crafted.get(&report.cell_id) else { continue };
        let verdict = if adv.original != *report {
            Err(String::from("crafted against a different report"))
        } else {
            check_plausible(report, &adv.perturbed, batch.ues.len())
        };
        match verdict {
            Ok(()) => *report = adv.perturbed.clone(),
            Err(reason) => {
                log::warn!("dropping crafted report for {} at {}: {reason}", report.cell_id, batch.iteration);
                incidents.push(InjectionIncident { cell: report.cell_id, iteration: batch.iteration, reason });
            }
        }
    }
    (out, incidents)
}
