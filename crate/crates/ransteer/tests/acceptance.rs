//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::fs;
use std::time::{Duration, Instant};

use ransteer::{run_split, Export};
use ransteer_core::attack::{cell_features, AttackBudget};
use ransteer_core::harness::{
    experiment_on, run_closed_loop, CellGain, ExperimentReport, PairedRuns, RunMetrics, ScenarioConfig,
};
use ransteer_core::marrs::{classify_loss, classify_sequence, SequenceRule};
use ransteer_core::netsim::CellId;
use ransteer_core::nn::{
    adam_step, gradient_check, AdamConfig, AdamState, Activation, Example, Mlp, Seq2SeqAutoencoder, Seq2SeqConfig,
};
use ransteer_core::ric::VarModel;
use ransteer_core::rng::{self, Stream};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ratio(gains: &[CellGain], cell: CellId) -> f64 {
    gains.iter().find(|g| g.cell == cell).map_or(f64::NAN, |g| g.percent / 100.0)
}

fn attack_efficacy(report: &ExperimentReport, config: &ScenarioConfig, elapsed: Duration) -> Outcome {
    let exp = &config.experiment;
    let sas: Vec<f64> = exp.sas_attackers.iter().map(|&c| ratio(&report.sas_gain, c)).collect();
    let mas: Vec<f64> = exp.mas_attackers.iter().map(|&c| ratio(&report.mas_gain, c)).collect();
    let neighbours: Vec<(CellId, f64)> = report
        .mas_gain
        .iter()
        .filter(|g| !exp.mas_attackers.contains(&g.cell))
        .map(|g| (g.cell, g.percent / 100.0))
        .collect();
    let lowest = neighbours.iter().map(|n| n.1).fold(f64::INFINITY, f64::min);
    let pass = sas.iter().all(|&r| r >= 1.5) && mas.iter().all(|&r| r > 1.3) && lowest < 0.8 && elapsed.as_secs() < 600;
    outcome(
        pass,
        format!("SAS attacker ratio {sas:.3?} (>= 1.5), MAS attacker ratios {mas:.3?} (> 1.3), lowest benign neighbour {lowest:.3} (< 0.8), paired SAS runtime {:.1}s", elapsed.as_secs_f64()),
    )
}

fn detection_quality(r: &ExperimentReport) -> Outcome {
    let m = &r.marrs.metrics;
    outcome(
        (m.recall - 1.0).abs() <= 0.02 && m.f1 >= 0.90,
        format!("MARRS recall {:.3} (1 +- 0.02), F1 {:.3} (>= 0.90), threshold {:.4}, AUC {:.3}", m.recall, m.f1, r.marrs.threshold, r.marrs.auc),
    )
}

fn f1_of(r: &ExperimentReport, name: &str) -> f64 {
    r.benchmarks.iter().find(|b| b.name == name).map_or(f64::NAN, |b| b.metrics.f1)
}

fn benchmark_ordering(r: &ExperimentReport) -> Outcome {
    let marrs = r.marrs.metrics.f1;
    let lin = f1_of(r, "linear AE");
    let trees = f1_of(r, "iForest").max(f1_of(r, "OCSVM"));
    outcome(
        marrs - lin >= 0.02 && lin - trees >= 0.02,
        format!("F1 MARRS {marrs:.3}, linear AE {lin:.3}, iForest {:.3}, OCSVM {:.3} (margins >= 0.02)", f1_of(r, "iForest"), f1_of(r, "OCSVM")),
    )
}

fn ablation_ordering(r: &ExperimentReport) -> Outcome {
    let (m, plus, one) = (r.marrs.metrics.f1, r.ae1_plus.metrics.f1, r.ae1_only.metrics.f1);
    outcome(m >= plus && plus >= one - 0.01, format!("F1 MARRS {m:.3} >= AE1+ {plus:.3} >= AE1 {one:.3} - 0.01"))
}

fn data_over_time(r: &ExperimentReport) -> Outcome {
    let (Some(first), Some(full)) = (r.segments.first(), r.segments.last()) else {
        return outcome(false, "no segment results".into());
    };
    let (a, b) = (first.result.metrics.f1, full.result.metrics.f1);
    let all: Vec<String> = r.segments.iter().map(|s| format!("{:.3}", s.result.metrics.f1)).collect();
    outcome(b >= a + 0.03, format!("F1 by training prefix [{}]; full {b:.3} vs first segment {a:.3} (+0.03 needed)", all.join(", ")))
}

fn sequence_precision(r: &ExperimentReport) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = false;
    for k in [3, 5, 7] {
        let rows: Vec<_> = r.sequences.iter().filter(|s| s.k == k).collect();
        if rows.is_empty() {
            continue;
        }
        let ok = rows.len() == 2 && rows.iter().all(|s| s.metrics.precision == 1.0 && s.metrics.recall >= 0.8);
        pass |= ok;
        for s in rows {
            lines.push(format!("k={k} {:?} P {:.3} R {:.3}", s.rule, s.metrics.precision, s.metrics.recall));
        }
    }
    outcome(pass, lines.join("; "))
}

fn seq(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, Stream::Training);
    (0..n).map(|_| rng::normal(&mut r, 1.0)).collect()
}

fn numerical_substrate() -> Outcome {
    let cfg = Seq2SeqConfig { input_dim: 3, input_steps: 4, output_dim: 3, window_len: 4, latent_dim: 2, hidden_size: 3 };
    let mut lstm = Seq2SeqAutoencoder::new(cfg, &mut rng::stream(7, Stream::Training));
    let lstm_err = gradient_check(&mut lstm, &Example::new(seq(12, 1), seq(12, 2)), 1e-5).max_relative_error;
    let mut dense_err: f64 = 0.0;
    for act in [Activation::Tanh, Activation::Sigmoid, Activation::Identity] {
        let mut mlp = Mlp::new(&[4, 6, 2], act, &mut rng::stream(8, Stream::Training));
        dense_err = dense_err.max(gradient_check(&mut mlp, &Example::new(seq(4, 3), seq(2, 4)), 1e-5).max_relative_error);
    }

    let a = [0.6, -0.15, 0.25, 0.3];
    let c = [0.7, -1.1];
    let mut series = vec![vec![5.0, -4.0]];
    for _ in 1..300 {
        let y = series.last().unwrap();
        series.push(vec![c[0] + a[0] * y[0] + a[1] * y[1], c[1] + a[2] * y[0] + a[3] * y[1]]);
    }
    let var_err = match VarModel::fit(&series, 1) {
        Ok(m) => m.coefficients[0]
            .iter()
            .zip(a)
            .chain(m.intercept.iter().zip(c))
            .map(|(g, w)| (g - w).abs())
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    };

    let acfg = AdamConfig { lr: 0.01, beta1: 0.9, beta2: 0.999, eps: 1e-8 };
    let g = vec![0.3, -2.0, 5e-7];
    let mut p = vec![1.0, 2.0, -3.0];
    let start = p.clone();
    let mut st = AdamState::new(&[3], acfg);
    adam_step(vec![p.as_mut_slice()], &vec![g.clone()], &mut st);
    let adam_err = (0..3)
        .map(|j| {
            let m_hat = (1.0 - acfg.beta1) * g[j] / (1.0 - acfg.beta1);
            let v_hat = (1.0 - acfg.beta2) * g[j] * g[j] / (1.0 - acfg.beta2);
            (p[j] - (start[j] - acfg.lr * m_hat / (v_hat.sqrt() + acfg.eps))).abs()
        })
        .fold(0.0, f64::max);

    outcome(
        lstm_err < 1e-4 && dense_err < 1e-4 && var_err <= 1e-6 && adam_err <= 1e-12,
        format!("LSTM grad rel err {lstm_err:.2e}, dense {dense_err:.2e} (< 1e-4); VAR(1) coef err {var_err:.2e} (<= 1e-6); Adam step err {adam_err:.2e} (<= 1e-12)"),
    )
}

fn equation_equivalence() -> Outcome {
    let grid: Vec<f64> = (0..=60).map(|i| f64::from(i) * 0.1).chain([0.0, f64::MIN_POSITIVE, 1e300]).collect();
    let mut window_mismatches = 0;
    for &loss in &grid {
        for &t in &grid {
            let literal = t <= loss;
            window_mismatches += usize::from(classify_loss(loss, t) != literal);
        }
    }
    let mut seq_mismatches = 0;
    let mut vectors = 0;
    for k in 1..=8usize {
        for bits in 0u32..(1 << k) {
            let labels: Vec<bool> = (0..k).map(|i| bits >> i & 1 == 1).collect();
            let hits = labels.iter().filter(|&&l| l).count() as f64;
            let maj = classify_sequence(&labels, SequenceRule::Majority, k).ok() != Some(hits >= (k as f64 + 1.0) / 2.0);
            let all = classify_sequence(&labels, SequenceRule::All, k).ok() != Some(hits == k as f64);
            seq_mismatches += usize::from(maj) + usize::from(all);
            vectors += 1;
        }
    }
    outcome(
        window_mismatches == 0 && seq_mismatches == 0,
        format!("window rule mismatches {window_mismatches}/{}; sequence rule mismatches {seq_mismatches} over {vectors} label vectors (k <= 8)", grid.len() * grid.len()),
    )
}

fn csv_bytes(config: &ScenarioConfig, m: &RunMetrics) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let mut ex = Export::create(dir.path(), config, "run").unwrap();
    let path = ex.counts("counts.csv", m).unwrap();
    fs::read(path).unwrap()
}

fn systems_determinism(config: &ScenarioConfig, runs: &PairedRuns) -> Outcome {
    let sas = config.with_attackers(&config.experiment.sas_attackers);
    let split = match run_split(&sas) {
        Ok(out) => out,
        Err(e) => return outcome(false, format!("split run failed: {e}")),
    };
    let same_csv = csv_bytes(&sas, &runs.sas.metrics) == csv_bytes(&sas, &split.metrics);
    let disabled = run_closed_loop(&sas.benign()).map(|o| o.metrics);
    let paired = disabled.as_ref().is_ok_and(|m| *m == runs.benign.metrics);
    outcome(same_csv && paired, format!("split vs in-process SAS counts CSV identical: {same_csv}; attack disabled reproduces benign run: {paired}"))
}

fn crafting_contract(config: &ScenarioConfig, runs: &PairedRuns) -> Outcome {
    let t = &config.topology;
    let budget = AttackBudget::for_network(t.ue_count, t.radio.max_thp_bps, 2.0 * t.radio.meas_period_prb_khz);
    let crafted = &runs.sas.crafted;
    let successes: Vec<_> = crafted.iter().filter(|a| a.success).collect();
    let rate = if crafted.is_empty() { 0.0 } else { successes.len() as f64 / crafted.len() as f64 };
    let violations = successes
        .iter()
        .filter(|a| {
            let inside = cell_features(&a.perturbed).iter().zip(&budget.clamp_box).all(|(v, (lo, hi))| lo <= v && v <= hi);
            !(a.delta_l2 <= budget.max_l2 && a.achieved_category > a.original_category && inside && a.query_count <= budget.query_budget)
        })
        .count();
    outcome(
        rate >= 0.9 && violations == 0,
        format!("{} of {} crafted reports succeeded ({:.1}%, >= 90%); contract violations {violations}", successes.len(), crafted.len(), 100.0 * rate),
    )
}

fn main() {
    let config = ScenarioConfig::default();
    let started = Instant::now();
    let runs = PairedRuns::run(&config).expect("paired runs");
    let paired_elapsed = started.elapsed();
    let report = experiment_on(&config, runs.clone()).expect("experiment");
    eprintln!("experiment finished in {:.1}s", started.elapsed().as_secs_f64());

    let results = [
        ("attack efficacy", attack_efficacy(&report, &config, paired_elapsed)),
        ("detection quality", detection_quality(&report)),
        ("benchmark ordering", benchmark_ordering(&report)),
        ("ablation ordering", ablation_ordering(&report)),
        ("data-over-time trend", data_over_time(&report)),
        ("sequence precision", sequence_precision(&report)),
        ("numerical substrate", numerical_substrate()),
        ("rule equivalence", equation_equivalence()),
        ("systems determinism", systems_determinism(&config, &runs)),
        ("crafting contract", crafting_contract(&config, &runs)),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {:>2} [{}] {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
