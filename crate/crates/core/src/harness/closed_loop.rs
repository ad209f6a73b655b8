use alloc::vec::Vec;

use super::{RunMetrics, ScenarioConfig};
use crate::attack::{AdversarialReport, AttackBudget, Attacker, InjectionIncident};
use crate::netsim::{HandoverRequest, KpiReportBatch, Simulator};
use crate::ric::{KpiStore, Ric, RicDecision};
use crate::{Error, Result};

/// One iteration's output on the RAN side.
#[derive(Debug, Clone, PartialEq)]
pub struct RanEmission {
    /// What the RIC receives.
    pub reported: KpiReportBatch,
    /// What the simulator actually measured.
    pub truth: KpiReportBatch,
    pub crafted: Vec<AdversarialReport>,
    pub incidents: Vec<InjectionIncident>,
}

/// Simulator plus the rogue cells' injection point. Alternates strictly
/// between [`RanSide::emit`] and [`RanSide::apply`].
#[derive(Debug, Clone)]
pub struct RanSide {
    sim: Simulator,
    attacker: Option<Attacker>,
    awaiting: Option<u64>,
}

impl RanSide {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let mut sim = Simulator::new(&config.topology, config.seed)?;
        let attacker = if config.attack.enabled && !config.attack.malicious_cells.is_empty() {
            for &c in &config.attack.malicious_cells {
                sim.set_malicious(c, true)?;
            }
            let budget = AttackBudget::for_network(
                config.topology.ue_count,
                config.topology.radio.max_thp_bps,
                2.0 * config.topology.radio.meas_period_prb_khz,
            );
            Some(Attacker::new(config.attack.clone(), config.ric.qp, budget, config.seed)?)
        } else {
            None
        };
        Ok(Self { sim, attacker, awaiting: None })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn emit(&mut self) -> Result<RanEmission> {
        if let Some(t) = self.awaiting {
            return Err(Error::Protocol(alloc::format!("batch {t} not yet acknowledged")));
        }
        self.sim.step_mobility();
        let truth = self.sim.emit_reports();
        let (reported, crafted, incidents) = match &mut self.attacker {
            Some(a) => {
                let step = a.process(&truth)?;
                (step.batch, step.crafted, step.incidents)
            }
            None => (truth.clone(), Vec::new(), Vec::new()),
        };
        self.awaiting = Some(truth.iteration);
        Ok(RanEmission { reported, truth, crafted, incidents })
    }

    pub fn apply(&mut self, iteration: u64, handovers: &[HandoverRequest]) -> Result<()> {
        match self.awaiting {
            Some(t) if t == iteration => {}
            other => {
                return Err(Error::Protocol(alloc::format!("handovers for {iteration} while awaiting {other:?}")));
            }
        }
        for h in handovers {
            self.sim.apply_handover(h)?;
        }
        self.awaiting = None;
        Ok(())
    }
}

/// The near-RT RIC end of the loop.
#[derive(Debug, Clone)]
pub struct RicSide {
    ric: Ric,
}

impl RicSide {
    pub fn new(config: &ScenarioConfig) -> Self {
        Self { ric: Ric::new(config.ric.clone(), config.seed) }
    }

    pub fn on_batch(&mut self, batch: KpiReportBatch) -> Result<RicDecision> {
        self.ric.on_batch(batch)
    }

    pub fn ric(&self) -> &Ric {
        &self.ric
    }

    pub fn into_store(self) -> KpiStore {
        self.ric.into_store()
    }
}

/// Everything a finished run leaves behind.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    /// The telemetry exactly as the RIC stored it.
    pub store: KpiStore,
    pub crafted: Vec<AdversarialReport>,
}

/// Accumulates per-iteration observations into [`RunMetrics`].
#[derive(Debug, Clone)]
pub struct RunRecorder {
    metrics: RunMetrics,
    crafted: Vec<AdversarialReport>,
}

impl RunRecorder {
    pub fn new(config: &ScenarioConfig) -> Self {
        let mut cells: Vec<_> = config.topology.cells.iter().map(|c| c.id).collect();
        cells.sort();
        let measure_from = config.attack.start_iteration;
        Self { metrics: RunMetrics::new(cells, measure_from), crafted: Vec::new() }
    }

    pub fn record(&mut self, emission: &RanEmission, decision: &RicDecision) {
        self.metrics.push_iteration(&emission.truth, decision);
        self.metrics.attack.absorb(&emission.crafted, &emission.incidents);
        self.crafted.extend(emission.crafted.iter().cloned());
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    /// Metrics and crafted reports, for callers that do not hold the RIC store.
    pub fn into_parts(self) -> (RunMetrics, Vec<AdversarialReport>) {
        (self.metrics, self.crafted)
    }

    pub fn finish(self, store: KpiStore) -> RunOutput {
        RunOutput { metrics: self.metrics, store, crafted: self.crafted }
    }
}

/// In-process closed loop: mobility, telemetry, optional injection, then the
/// RIC's AD -> QP -> TS pass and handover application, `iterations` times.
pub fn run_closed_loop(config: &ScenarioConfig) -> Result<RunOutput> {
    config.validate()?;
    let mut ran = RanSide::new(config)?;
    let mut ric = RicSide::new(config);
    let mut rec = RunRecorder::new(config);
    for _ in 0..config.iterations {
        let emission = ran.emit()?;
        let t = emission.reported.iteration;
        let decision = ric.on_batch(emission.reported.clone())?;
        ran.apply(t, &decision.handovers)?;
        rec.record(&emission, &decision);
    }
    Ok(rec.finish(ric.into_store()))
}
