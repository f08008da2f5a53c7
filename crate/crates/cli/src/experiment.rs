use std::fs;
use std::path::{Path, PathBuf};

use online_coreset::{
    epsilon_regret, inconsistency, online_clustering, online_lowrank, online_regression,
    random_order, ClusteringConfig, CoresetConstants, LowRankConfig, Observation, OnlineReport,
    RegressionConfig, SeedStream, Stream, UpdateMode,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Mode, Ordering, Problem};
use crate::error::HarnessError;
use crate::generate;
use crate::oracle;

pub const SUMMARY_FILE: &str = "summary.json";

pub fn ledger_file_name(seed: u64) -> String {
    format!("ledger_seed{seed}.csv")
}

/// One line of a ledger CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub t: usize,
    pub step_loss: f64,
    pub cum_loss: f64,
    pub prefix_opt: Option<f64>,
    pub changed: u8,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub n: usize,
    pub ledger: String,
    pub total_loss: f64,
    pub opt: f64,
    pub regret: f64,
    pub inconsistency: usize,
    pub resolves: usize,
    pub clip_events: u64,
    pub clamp_events: u64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub problem: String,
    pub ordering: Ordering,
    pub mode: Mode,
    pub epsilon: f64,
    /// "random-order" when the stream was shuffled, otherwise "no guarantee".
    pub guarantee: String,
    pub opt_note: String,
    pub median_regret: f64,
    pub median_inconsistency: f64,
    pub runs: Vec<SeedSummary>,
    pub config: serde_json::Value,
}

/// Everything one seed produced, before anything is written.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub report: OnlineReport,
    pub opt: f64,
    pub prefix_opt: Vec<Option<f64>>,
}

impl SeedRun {
    pub fn regret(&self) -> f64 {
        epsilon_regret(&self.report.ledger, self.opt, self.report.ledger.epsilon)
            .expect("validated epsilon and opt")
    }

    pub fn records(&self, timing: bool) -> Vec<LedgerRecord> {
        let l = &self.report.ledger;
        l.cumulative()
            .into_iter()
            .enumerate()
            .map(|(i, cum)| LedgerRecord {
                t: i + 1,
                step_loss: l.step_losses[i],
                cum_loss: cum,
                prefix_opt: self.prefix_opt[i],
                changed: u8::from(i > 0 && l.changed[i - 1]),
                wall_ms: if timing { l.wall_ms[i] } else { 0.0 },
            })
            .collect()
    }
}

fn order<X>(
    items: Vec<X>,
    ordering: Ordering,
    seed: SeedStream,
    norm: impl Fn(&X) -> f64,
) -> Result<Stream<X>, HarnessError> {
    Ok(match ordering {
        Ordering::Random => random_order(items, seed.key())?,
        Ordering::AsGiven => Stream::as_given(items)?,
        Ordering::SortedNorm => {
            let mut idx: Vec<usize> = (0..items.len()).collect();
            idx.sort_by(|&i, &j| norm(&items[i]).total_cmp(&norm(&items[j])).then(i.cmp(&j)));
            Stream::from_order(items, idx)?
        }
    })
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn update_mode(mode: Mode) -> UpdateMode {
    match mode {
        Mode::Fresh => UpdateMode::Fresh,
        Mode::Lazy => UpdateMode::Lazy,
    }
}

fn loaded(config: &ExperimentConfig) -> Result<Option<Vec<Vec<f64>>>, HarnessError> {
    config
        .data
        .as_deref()
        .map(generate::read_points)
        .transpose()
}

/// Generate (or load), order, run and score one seed. Prefix optima cost a
/// full oracle solve per step and are skipped when `prefix` is false.
pub fn run_seed(
    config: &ExperimentConfig,
    seed: u64,
    prefix: bool,
) -> Result<SeedRun, HarnessError> {
    let root = SeedStream::new(seed);
    let data_seed = root.child("data", 0);
    let order_seed = root.child("order", 0);
    let mode = update_mode(config.mode);
    let clip = config.clip;
    match config.problem {
        Problem::Cluster => {
            let points = match loaded(config)? {
                Some(p) => p,
                None => generate::cluster_points(
                    config.n,
                    config.d,
                    config.k,
                    config.separation,
                    data_seed,
                ),
            };
            let d = points[0].len();
            let mut cc = ClusteringConfig::new(d, config.k, config.z, config.epsilon);
            cc.mode = mode;
            cc.clip = clip;
            cc.constants = CoresetConstants {
                n1: config.const_n1,
                n2: config.const_n2,
                verbatim_weights: config.paper_verbatim_weights,
                ..CoresetConstants::default()
            };
            let stream = order(points, config.ordering, order_seed, |p| l2(p))?;
            let ordered: Vec<Vec<f64>> = stream.iter().cloned().collect();
            let opt = oracle::cluster_opt(
                &ordered,
                config.k,
                config.z,
                config.opt_restarts,
                root.child("opt", 0),
                clip,
            )?;
            let report = online_clustering(&stream, &cc, seed)?;
            let n = report.ledger.len();
            Ok(SeedRun {
                seed,
                report,
                opt,
                prefix_opt: vec![None; n],
            })
        }
        Problem::Lowrank => {
            let cols = match loaded(config)? {
                Some(p) => p,
                None => generate::lowrank_columns(
                    config.d,
                    config.n,
                    config.rank(),
                    config.noise,
                    data_seed,
                ),
            };
            let d = cols[0].len();
            let mut lc = LowRankConfig::new(d, config.k, config.epsilon);
            lc.mode = mode;
            lc.clip = clip;
            lc.const_m = config.const_m;
            let stream = order(cols, config.ordering, order_seed, |c| l2(c))?;
            let ordered: Vec<Vec<f64>> = stream.iter().cloned().collect();
            let opt = oracle::lowrank_opt(&ordered, config.k, clip)?;
            let report = online_lowrank(&stream, &lc, seed)?;
            let prefix_opt = if prefix {
                oracle::prefix_opts(&ordered, |p| oracle::lowrank_opt(p, config.k, clip))?
                    .into_iter()
                    .map(Some)
                    .collect()
            } else {
                vec![None; ordered.len()]
            };
            Ok(SeedRun {
                seed,
                report,
                opt,
                prefix_opt,
            })
        }
        Problem::Regress => {
            let rows = match loaded(config)? {
                Some(p) => generate::observations_from_points(p)?,
                None => generate::regression_rows(config.n, config.d, config.noise, data_seed).0,
            };
            let d = rows[0].a.len();
            let mut rc = RegressionConfig::new(d, config.epsilon);
            rc.mode = mode;
            rc.clip = clip;
            rc.const_m = config.const_m;
            let stream = order(
                rows,
                config.ordering,
                order_seed,
                |o: &Observation| l2(&o.a),
            )?;
            let ordered: Vec<Observation> = stream.iter().cloned().collect();
            let opt = oracle::regression_opt(&ordered, clip)?;
            let report = online_regression(&stream, &rc, seed)?;
            let prefix_opt = if prefix {
                oracle::prefix_opts(&ordered, |p| oracle::regression_opt(p, clip))?
                    .into_iter()
                    .map(Some)
                    .collect()
            } else {
                vec![None; ordered.len()]
            };
            Ok(SeedRun {
                seed,
                report,
                opt,
                prefix_opt,
            })
        }
        Problem::Sensitivity => Err(HarnessError::config(
            "problem",
            "use the sensitivity report for this problem",
        )),
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    assert!(!v.is_empty());
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn write_ledger(path: &Path, records: &[LedgerRecord]) -> Result<(), HarnessError> {
    let wrap = |source| HarnessError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    for r in records {
        w.serialize(r).map_err(wrap)?;
    }
    w.flush()
        .map_err(|e| HarnessError::io(path.display().to_string(), e))
}

pub fn read_ledger(path: &Path) -> Result<Vec<LedgerRecord>, HarnessError> {
    let wrap = |source| HarnessError::Csv {
        path: path.display().to_string(),
        source,
    };
    csv::Reader::from_path(path)
        .map_err(wrap)?
        .deserialize()
        .collect::<Result<Vec<LedgerRecord>, _>>()
        .map_err(wrap)
}

/// Files created under an output directory, removed again unless committed.
struct OutputGuard {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    fn new(dir: &Path) -> Result<Self, HarnessError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir.display().to_string(), e))?;
        Ok(OutputGuard {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
            committed: false,
        })
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn config_echo(config: &ExperimentConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    if let Some(map) = v.as_object_mut() {
        map.remove("out");
    }
    v
}

pub fn summarize(config: &ExperimentConfig, runs: &[SeedRun]) -> Summary {
    let seeds: Vec<SeedSummary> = runs
        .iter()
        .map(|r| SeedSummary {
            seed: r.seed,
            n: r.report.ledger.len(),
            ledger: ledger_file_name(r.seed),
            total_loss: r.report.ledger.total_loss(),
            opt: r.opt,
            regret: r.regret(),
            inconsistency: inconsistency(&r.report.ledger),
            resolves: r.report.resolves,
            clip_events: r.report.clip_events,
            clamp_events: r.report.clamp_events,
            wall_ms: if config.timing {
                r.report.ledger.wall_ms.iter().sum()
            } else {
                0.0
            },
        })
        .collect();
    Summary {
        problem: config.problem.name().to_string(),
        ordering: config.ordering,
        mode: config.mode,
        epsilon: config.epsilon,
        guarantee: if config.ordering == Ordering::Random {
            "random-order"
        } else {
            "no guarantee"
        }
        .to_string(),
        opt_note: "opt is an upper bound on the hindsight optimum, so regret is a lower bound"
            .to_string(),
        median_regret: median(seeds.iter().map(|s| s.regret).collect()),
        median_inconsistency: median(seeds.iter().map(|s| s.inconsistency as f64).collect()),
        runs: seeds,
        config: config_echo(config),
    }
}

/// Run every seed in parallel and write one ledger per seed plus a summary.
/// On failure nothing written by this call is left behind.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Summary, HarnessError> {
    config.validate()?;
    let mut guard = OutputGuard::new(&config.out)?;
    guard.files = config
        .seeds
        .iter()
        .map(|&s| config.out.join(ledger_file_name(s)))
        .chain([config.out.join(SUMMARY_FILE)])
        .collect();
    let runs = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let run = run_seed(config, seed, true)?;
            write_ledger(
                &config.out.join(ledger_file_name(seed)),
                &run.records(config.timing),
            )?;
            log::info!("seed {seed}: regret {}", run.regret());
            Ok(run)
        })
        .collect::<Result<Vec<SeedRun>, HarnessError>>()?;
    let summary = summarize(config, &runs);
    let path = config.out.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    fs::write(&path, text).map_err(|e| HarnessError::io(path.display().to_string(), e))?;
    guard.committed = true;
    Ok(summary)
}
