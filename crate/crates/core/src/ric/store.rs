use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use crate::netsim::{CellId, CellKpiReport, KpiReportBatch, UeId, UeKpiReport};
use crate::{Error, Result};

/// Append-only per-entity KPI time series, keyed by id and indexed by iteration.
///
/// A batch is validated in full before anything is appended, so readers never
/// observe half of one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KpiStore {
    cells: BTreeMap<CellId, Vec<CellKpiReport>>,
    ues: BTreeMap<UeId, Vec<UeKpiReport>>,
    iterations: Vec<u64>,
}

fn window<'a, T>(series: &'a [T], range: &Range<u64>, ts: impl Fn(&T) -> u64) -> &'a [T] {
    let lo = series.partition_point(|r| ts(r) < range.start);
    let hi = series.partition_point(|r| ts(r) < range.end);
    &series[lo..hi.max(lo)]
}

impl KpiStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ingest(&mut self, batch: KpiReportBatch) -> Result<()> {
        let t = batch.iteration;
        if let Some(&last) = self.iterations.last() {
            if t <= last {
                return Err(Error::OutOfOrder { last, got: t });
            }
        }
        if let Some(bad) = batch.cells.iter().map(|c| c.timestamp).chain(batch.ues.iter().map(|u| u.timestamp)).find(|&s| s != t) {
            return Err(Error::MalformedBatch(format!("record stamped {bad} inside batch {t}")));
        }
        let mut cell_ids: Vec<CellId> = batch.cells.iter().map(|c| c.cell_id).collect();
        cell_ids.sort();
        let mut ue_ids: Vec<UeId> = batch.ues.iter().map(|u| u.ue_id).collect();
        ue_ids.sort();
        if cell_ids.windows(2).any(|w| w[0] == w[1]) || ue_ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::MalformedBatch(format!("duplicate entity in batch {t}")));
        }

        for c in batch.cells {
            self.cells.entry(c.cell_id).or_default().push(c);
        }
        for u in batch.ues {
            self.ues.entry(u.ue_id).or_default().push(u);
        }
        self.iterations.push(t);
        Ok(())
    }

    /// Number of ingested batches.
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn iterations(&self) -> &[u64] {
        &self.iterations
    }

    pub fn last_iteration(&self) -> Option<u64> {
        self.iterations.last().copied()
    }

    pub fn contains(&self, t: u64) -> bool {
        self.iterations.binary_search(&t).is_ok()
    }

    pub fn cell_ids(&self) -> Vec<CellId> {
        self.cells.keys().copied().collect()
    }

    pub fn ue_ids(&self) -> Vec<UeId> {
        self.ues.keys().copied().collect()
    }

    pub fn cell_window(&self, cell: CellId, range: Range<u64>) -> &[CellKpiReport] {
        self.cells.get(&cell).map_or(&[], |s| window(s, &range, |r| r.timestamp))
    }

    pub fn ue_window(&self, ue: UeId, range: Range<u64>) -> &[UeKpiReport] {
        self.ues.get(&ue).map_or(&[], |s| window(s, &range, |r| r.timestamp))
    }

    pub fn cell_at(&self, cell: CellId, t: u64) -> Option<&CellKpiReport> {
        self.cell_window(cell, t..t + 1).first()
    }

    pub fn ue_at(&self, ue: UeId, t: u64) -> Option<&UeKpiReport> {
        self.ue_window(ue, t..t + 1).first()
    }

    /// Every UE report of iteration `t`, in id order.
    pub fn ues_at(&self, t: u64) -> Vec<&UeKpiReport> {
        self.ues.values().filter_map(|s| window(s, &(t..t + 1), |r| r.timestamp).first()).collect()
    }

    pub fn cells_at(&self, t: u64) -> Vec<&CellKpiReport> {
        self.cells.values().filter_map(|s| window(s, &(t..t + 1), |r| r.timestamp).first()).collect()
    }
}
