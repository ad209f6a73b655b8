use std::net::{SocketAddr, TcpListener};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ransteer::{load_bundle, load_config, Export, Overrides};
use ransteer_core::harness::{
    evaluate_detector, experiment_on, train_detector, PairedRuns, RunMode, RunOutput, ScenarioConfig,
};
use ransteer_core::netsim::CellId;

#[derive(Parser)]
#[command(name = "ransteer", version, about = "Traffic-steering closed loop, KPI-lying cells and their detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    InProcess,
    Split,
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON). Defaults apply to anything it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// One closed-loop run; writes per-iteration counts.
    Run {
        #[command(flatten)]
        common: Common,
        /// Cells that lie in this run, e.g. `--attackers 1,5`.
        #[arg(long, value_delimiter = ',')]
        attackers: Vec<u32>,
        /// Drive the RAN against a RIC already serving at this address.
        #[arg(long)]
        ric: Option<SocketAddr>,
    },
    /// Serves the RIC end of one split run.
    Ric {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: SocketAddr,
    },
    /// Benign, single-attacker and multi-attacker runs with the UE-count summary.
    Attack {
        #[command(flatten)]
        common: Common,
    },
    /// Trains and calibrates the detector and stores it as a bundle.
    TrainDetect {
        #[command(flatten)]
        common: Common,
    },
    /// Full experiment, or only a stored detector when `--bundle` is given.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Sequence-rule sweep over window run lengths.
    SweepSeq {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Sequence lengths to evaluate, e.g. `--lengths 1,3,5,7`.
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<usize>,
    },
}

fn scenario(path: Option<&Path>, overrides: &Overrides) -> ransteer::Result<ScenarioConfig> {
    let base = match path {
        Some(p) => load_config(p)?,
        None => ScenarioConfig::default(),
    };
    overrides.apply(base)
}

impl Common {
    fn config(&self) -> ransteer::Result<ScenarioConfig> {
        let mode = self.mode.map(|m| match m {
            Mode::InProcess => RunMode::InProcess,
            Mode::Split => RunMode::Split,
        });
        scenario(self.config.as_deref(), &Overrides { seed: Some(self.seed), iterations: self.iterations, mode })
    }
}

fn paired(config: &ScenarioConfig) -> ransteer::Result<PairedRuns> {
    let exp = &config.experiment;
    Ok(PairedRuns {
        benign: ransteer::run_scenario(&config.benign())?,
        sas: ransteer::run_scenario(&config.with_attackers(&exp.sas_attackers))?,
        mas: ransteer::run_scenario(&config.with_attackers(&exp.mas_attackers))?,
        sas_cells: exp.sas_attackers.clone(),
        mas_cells: exp.mas_attackers.clone(),
    })
}

fn finish(export: Export) -> ransteer::Result<()> {
    let dir = export.dir().to_path_buf();
    let manifest = export.finish()?;
    println!("wrote {} files to {} (config {})", manifest.files.len() + 1, dir.display(), &manifest.config_hash[..12]);
    Ok(())
}

fn run(cli: Cli) -> ransteer::Result<()> {
    match cli.command {
        Command::Run { common, attackers, ric } => {
            let mut config = common.config()?;
            if !attackers.is_empty() {
                let cells: Vec<CellId> = attackers.into_iter().map(CellId).collect();
                config = config.with_attackers(&cells);
                config.validate()?;
            }
            let mut export = Export::create(&common.out, &config, "run")?;
            let metrics = match ric {
                Some(addr) => ransteer::connect_ran(addr, &config)?.0,
                None => {
                    let RunOutput { metrics, .. } = ransteer::run_scenario(&config)?;
                    metrics
                }
            };
            export.counts("counts.csv", &metrics)?;
            export.json("run.json", &metrics)?;
            finish(export)
        }
        Command::Ric { config, seed, iterations, listen } => {
            let config = scenario(config.as_deref(), &Overrides { seed: Some(seed), iterations, mode: None })?;
            let listener = TcpListener::bind(listen).map_err(ransteer::Error::Connection)?;
            log::info!("RIC listening on {listen}");
            let summary = ransteer::serve_one(&listener, &config)?;
            println!("served {} batches", summary.batches);
            Ok(())
        }
        Command::Attack { common } => {
            let config = common.config()?;
            let runs = paired(&config)?;
            let mut export = Export::create(&common.out, &config, "attack")?;
            export.counts("counts_benign.csv", &runs.benign.metrics)?;
            export.counts("counts_sas.csv", &runs.sas.metrics)?;
            export.counts("counts_mas.csv", &runs.mas.metrics)?;
            let (sas, mas) = (runs.sas_gain()?, runs.mas_gain()?);
            export.gain_summary("attack_summary.csv", &sas, &mas)?;
            for (name, gains) in [("SAS", &sas), ("MAS", &mas)] {
                let line: Vec<String> = gains.iter().map(|g| format!("{} {:.1}%", g.cell, g.percent)).collect();
                println!("{name}: {}", line.join("  "));
            }
            finish(export)
        }
        Command::TrainDetect { common } => {
            let config = common.config()?;
            let runs = paired(&config)?;
            let (pipeline, eval) = train_detector(&config, &runs)?;
            let mut export = Export::create(&common.out, &config, "train-detect")?;
            export.bundle("detector.bundle", &pipeline)?;
            export.detection("detection.csv", &[&eval.result])?;
            println!("threshold {:.5}, test F1 {:.3}", eval.result.threshold, eval.result.metrics.f1);
            finish(export)
        }
        Command::Evaluate { common, bundle } => {
            let config = common.config()?;
            let runs = paired(&config)?;
            let mut export = Export::create(&common.out, &config, "evaluate")?;
            match bundle {
                Some(path) => {
                    let eval = evaluate_detector(&load_bundle(&path)?, &config, &runs)?;
                    export.detection("detection.csv", &[&eval.result])?;
                    export.sequence_sweep("sequence_sweep.csv", &eval.sequences)?;
                    export.scores("test_scores.csv", &eval.test_scores)?;
                }
                None => {
                    let report = experiment_on(&config, runs)?;
                    export.experiment(&report)?;
                    for r in std::iter::once(&report.marrs).chain(&report.benchmarks) {
                        println!("{:<10} F1 {:.3}  recall {:.3}  AUC {:.3}", r.name, r.metrics.f1, r.metrics.recall, r.auc);
                    }
                }
            }
            finish(export)
        }
        Command::SweepSeq { common, bundle, lengths } => {
            let mut config = common.config()?;
            if !lengths.is_empty() {
                config.detection.sequence_lengths = lengths;
                config.validate()?;
            }
            let runs = paired(&config)?;
            let eval = match bundle {
                Some(path) => evaluate_detector(&load_bundle(&path)?, &config, &runs)?,
                None => train_detector(&config, &runs)?.1,
            };
            let mut export = Export::create(&common.out, &config, "sweep-seq")?;
            export.sequence_sweep("sequence_sweep.csv", &eval.sequences)?;
            for s in &eval.sequences {
                println!("k={} {:?}: precision {:.3} recall {:.3}", s.k, s.rule, s.metrics.precision, s.metrics.recall);
            }
            finish(export)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
