//! Repeated engine runs with on-disk artifacts, and report tables computed
//! from those artifacts alone.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assess::{hitting_cdf, nondominated, unary_hv_diff, wilcoxon_signed_rank, AssessError};
use crate::model::{GroundedTask, ObjectiveVector};
use crate::moea::{
    aggregate_campaign, derive_seed, evolve_pareto, evolve_single, AggregationConfig, ArchiveEvent, Budget,
    EngineConfig, EngineError, RunTrace, Snapshot, TraceError,
};
use crate::par::{par_map, with_workers, Execution};
use crate::zeno::{build_task, ParetoFront, ZenoConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Load(#[from] crate::Error),
    #[error(transparent)]
    Assess(#[from] AssessError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Json { path: PathBuf, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Instance {
    Zeno(ZenoConfig),
    Pddl { domain: PathBuf, problem: PathBuf },
}

impl Instance {
    pub fn load(&self) -> Result<GroundedTask, ExperimentError> {
        match self {
            Instance::Zeno(cfg) => Ok(build_task(cfg)?),
            Instance::Pddl { domain, problem } => {
                let d = fs::read_to_string(domain).map_err(io_err(domain))?;
                let p = fs::read_to_string(problem).map_err(io_err(problem))?;
                Ok(crate::pddl::load(&d, &p).map_err(crate::Error::from)?)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineMode {
    Pareto,
    Aggregate,
    Single,
}

fn default_repetitions() -> usize {
    11
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub instance: Instance,
    pub engine: EngineMode,
    /// `budget` is the total per repetition; an aggregation campaign splits
    /// it evenly across its runs.
    #[serde(default)]
    pub engine_config: EngineConfig,
    /// Required in single mode.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub aggregation: AggregationConfig,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.repetitions == 0 {
            return Err(ExperimentError::Config("repetitions must be at least 1".into()));
        }
        self.engine_config.validate()?;
        match self.engine {
            EngineMode::Single => match self.alpha {
                Some(a) if (0.0..=1.0).contains(&a) => {}
                _ => return Err(ExperimentError::Config("single mode needs alpha in [0, 1]".into())),
            },
            EngineMode::Aggregate => {
                self.aggregation.validate()?;
                if self.per_run_budget().limit() == 0 {
                    return Err(ExperimentError::Config("budget too small to split across the alpha runs".into()));
                }
            }
            EngineMode::Pareto => {}
        }
        Ok(())
    }

    /// Number of engine runs per repetition.
    pub fn runs_per_repetition(&self) -> usize {
        match self.engine {
            EngineMode::Aggregate => {
                let a = &self.aggregation.alphas;
                let extra = if self.aggregation.bounds.is_none() {
                    [0.0, 1.0].iter().filter(|x| !a.contains(x)).count()
                } else {
                    0
                };
                a.len() + extra
            }
            _ => 1,
        }
    }

    /// Budget of each engine run: the total divided by the run count, so
    /// every engine mode gets the same total.
    pub fn per_run_budget(&self) -> Budget {
        let k = self.runs_per_repetition() as u64;
        match self.engine_config.budget {
            Budget::Nodes(n) => Budget::Nodes(n / k),
            Budget::Evaluations(n) => Budget::Evaluations(n / k),
            Budget::WallClockMs(n) => Budget::WallClockMs(n / k),
        }
    }

    pub fn digest(&self) -> String {
        let blob = serde_json::to_string(self).expect("config serialises");
        Sha256::digest(blob.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn repetition_seed(&self, rep: usize) -> u64 {
        derive_seed(self.seed, u64::MAX - 2, rep as u64)
    }
}

/// Everything needed to reproduce an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub config_digest: String,
    pub task: String,
    pub seeds: Vec<u64>,
    pub version: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FRONT_FILE: &str = "front.json";

pub fn trace_file_name(rep: usize, alpha: Option<f64>) -> String {
    match alpha {
        Some(a) => format!("rep-{rep:02}-alpha-{a}.jsonl"),
        None => format!("rep-{rep:02}.jsonl"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontSummary {
    /// Final approximation of each repetition.
    pub repetitions: Vec<Vec<ObjectiveVector>>,
    /// Non-dominated union over repetitions.
    pub merged: Vec<ObjectiveVector>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value).expect("serialisable");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ExperimentError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Json {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Traces of one repetition: a single run, or every run of a campaign.
fn run_repetition(
    cfg: &ExperimentConfig,
    task: &GroundedTask,
    seed: u64,
) -> Result<(Vec<RunTrace>, Vec<ObjectiveVector>), ExperimentError> {
    let engine = EngineConfig {
        budget: cfg.per_run_budget(),
        ..cfg.engine_config.clone()
    };
    // repetitions are the parallel unit
    let exec = Execution::Sequential;
    Ok(match cfg.engine {
        EngineMode::Pareto => {
            let t = evolve_pareto(task, &engine, seed, exec)?;
            let front = t.final_archive();
            (vec![t], front)
        }
        EngineMode::Single => {
            let alpha = cfg.alpha.expect("validated");
            let t = evolve_single(task, &engine, alpha, cfg.aggregation.bounds, seed, exec)?;
            let front = nondominated(&t.final_archive());
            (vec![t], front)
        }
        EngineMode::Aggregate => {
            let c = aggregate_campaign(task, &engine, &cfg.aggregation, seed, exec)?;
            (c.traces, c.front)
        }
    })
}

/// Runs every repetition (concurrently, up to `workers`) and writes one
/// trace file per engine run, `front.json` and `manifest.json` to `out`.
/// Files depend only on the configuration.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<Manifest, ExperimentError> {
    cfg.validate()?;
    let task = cfg.instance.load()?;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let seeds: Vec<u64> = (0..cfg.repetitions).map(|r| cfg.repetition_seed(r)).collect();
    let reps: Vec<usize> = (0..cfg.repetitions).collect();
    let results = with_workers(workers, || {
        par_map(Execution::Parallel, &reps, |&r| run_repetition(cfg, &task, seeds[r]))
    });
    let mut fronts = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        let (traces, front) = res?;
        for t in &traces {
            let alpha = match cfg.engine {
                EngineMode::Aggregate => t.alpha,
                _ => None,
            };
            let path = out.join(trace_file_name(r, alpha));
            let f = fs::File::create(&path).map_err(io_err(&path))?;
            let mut w = BufWriter::new(f);
            t.write_jsonl(&mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
        }
        fronts.push(front);
    }
    let merged = nondominated(&fronts.concat());
    write_json(
        &out.join(FRONT_FILE),
        &FrontSummary {
            repetitions: fronts,
            merged,
        },
    )?;
    let manifest = Manifest {
        config: cfg.clone(),
        config_digest: cfg.digest(),
        task: task.name.clone(),
        seeds,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// A repetition as seen by the report: its archive history on the total
/// budget axis and its final approximation.
#[derive(Clone, Debug, PartialEq)]
pub struct RepetitionView {
    pub trace: RunTrace,
    pub final_front: Vec<ObjectiveVector>,
}

/// Combines a campaign's runs as if they ran side by side with equal
/// shares: a discovery at budget `b` of one run happens at `k·b` overall.
pub fn merge_campaign(traces: &[RunTrace]) -> RunTrace {
    let k = traces.len() as u64;
    let mut events: Vec<ArchiveEvent> = traces
        .iter()
        .flat_map(|t| t.archive_events.iter().map(|e| ArchiveEvent {
            budget: e.budget * k,
            point: e.point,
        }))
        .collect();
    events.sort_by_key(|e| (e.budget, e.point));
    let mut archive: Vec<ObjectiveVector> = Vec::new();
    let mut kept = Vec::new();
    let mut snapshots: Vec<Snapshot> = Vec::new();
    for e in events {
        if archive.iter().any(|a| a.weakly_dominates(&e.point)) {
            continue;
        }
        archive.retain(|a| !e.point.dominates(a));
        archive.push(e.point);
        archive.sort_unstable();
        kept.push(e);
        match snapshots.last_mut() {
            Some(s) if s.budget == e.budget => s.archive = archive.clone(),
            _ => snapshots.push(Snapshot {
                budget: e.budget,
                generation: snapshots.len() as u64,
                evaluations: 0,
                archive: archive.clone(),
            }),
        }
    }
    let first = traces.first();
    RunTrace {
        engine: "aggregate".into(),
        task: first.map(|t| t.task.clone()).unwrap_or_default(),
        seed: first.map_or(0, |t| t.seed),
        config_digest: String::new(),
        alpha: None,
        archive_events: kept,
        snapshots,
        final_population: traces.iter().flat_map(|t| t.final_population.iter().copied()).collect(),
        budget_used: traces.iter().map(|t| t.budget_used).sum(),
        evaluations: traces.iter().map(|t| t.evaluations).sum(),
    }
}

/// Loads every repetition of an experiment directory.
pub fn load_repetitions(dir: &Path) -> Result<(Manifest, Vec<RepetitionView>), ExperimentError> {
    let manifest: Manifest = read_json(&dir.join(MANIFEST_FILE))?;
    let fronts: FrontSummary = read_json(&dir.join(FRONT_FILE))?;
    let cfg = &manifest.config;
    let mut views = Vec::new();
    for (r, final_front) in fronts.repetitions.into_iter().enumerate() {
        let read = |name: String| -> Result<RunTrace, ExperimentError> {
            let path = dir.join(name);
            let f = fs::File::open(&path).map_err(io_err(&path))?;
            Ok(RunTrace::read_jsonl(BufReader::new(f))?)
        };
        let trace = match cfg.engine {
            EngineMode::Aggregate => {
                let mut alphas = cfg.aggregation.alphas.clone();
                if cfg.aggregation.bounds.is_none() {
                    for extra in [1.0, 0.0] {
                        if !alphas.contains(&extra) {
                            alphas.push(extra);
                        }
                    }
                }
                let traces = alphas
                    .iter()
                    .map(|&a| read(trace_file_name(r, Some(a))))
                    .collect::<Result<Vec<_>, _>>()?;
                merge_campaign(&traces)
            }
            _ => read(trace_file_name(r, None))?,
        };
        views.push(RepetitionView { trace, final_front });
    }
    Ok((manifest, views))
}

/// Numbers computed by `emit_report`, also written as CSV and JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub sets: Vec<SetSummary>,
    /// Between the first two sets' final gaps, when they pair up.
    pub wilcoxon_p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub label: String,
    pub final_gaps: Vec<f64>,
    pub mean_final_gap: f64,
    /// Repetitions whose final approximation is the whole front.
    pub whole_front_hits: usize,
    pub repetitions: usize,
}

const HV_SERIES_POINTS: u64 = 50;

fn label_of(dir: &Path) -> String {
    dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn csv_point(p: &ObjectiveVector) -> String {
    format!("{},{}", p.makespan, p.secondary)
}

/// Writes `hv.csv` (gap after every generation of every run), `hv_mean.csv`
/// (mean gap per set on an even budget grid), `hitting.csv` (discovery CDF
/// steps per front point and for the whole front), `final.csv` (final
/// approximations) and `summary.json` into `out`.
pub fn emit_report(dirs: &[PathBuf], front: &ParetoFront, out: &Path) -> Result<Report, ExperimentError> {
    if front.is_empty() {
        return Err(AssessError::EmptyFront.into());
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut hv = String::from("set,repetition,budget,hv_gap\n");
    let mut hv_mean = String::from("set,budget,mean_hv_gap\n");
    let mut hitting = String::from("set,target,budget,fraction\n");
    let mut finals = String::from("set,repetition,makespan,secondary\n");
    let mut sets = Vec::new();
    for dir in dirs {
        let label = label_of(dir);
        let (_, views) = load_repetitions(dir)?;
        if views.is_empty() {
            return Err(ExperimentError::Config(format!("{} holds no repetitions", dir.display())));
        }
        for (r, v) in views.iter().enumerate() {
            for s in &v.trace.snapshots {
                let gap = unary_hv_diff(&s.archive, front)?;
                hv.push_str(&format!("{label},{r},{},{gap}\n", s.budget));
            }
            for p in &v.final_front {
                finals.push_str(&format!("{label},{r},{}\n", csv_point(p)));
            }
        }
        let horizon = views.iter().map(|v| v.trace.budget_used).max().unwrap_or(0);
        for i in 0..=HV_SERIES_POINTS {
            let b = horizon * i / HV_SERIES_POINTS;
            let mut sum = 0.0;
            for v in &views {
                sum += unary_hv_diff(&v.trace.archive_at(b), front)?;
            }
            hv_mean.push_str(&format!("{label},{b},{}\n", sum / views.len() as f64));
        }
        let traces: Vec<RunTrace> = views.iter().map(|v| v.trace.clone()).collect();
        let cdf = hitting_cdf(&traces, front)?;
        for curve in cdf.points.iter().chain(std::iter::once(&cdf.whole_front)) {
            hitting.push_str(&format!("{label},\"{}\",0,0\n", curve.label));
            for (b, f) in &curve.steps {
                hitting.push_str(&format!("{label},\"{}\",{b},{f}\n", curve.label));
            }
        }
        let final_gaps = views
            .iter()
            .map(|v| unary_hv_diff(&v.final_front, front))
            .collect::<Result<Vec<f64>, _>>()?;
        sets.push(SetSummary {
            mean_final_gap: final_gaps.iter().sum::<f64>() / final_gaps.len() as f64,
            whole_front_hits: views.iter().filter(|v| v.final_front == front.points).count(),
            repetitions: views.len(),
            final_gaps,
            label,
        });
    }
    let wilcoxon_p = match sets.as_slice() {
        [a, b, ..] if a.final_gaps.len() == b.final_gaps.len() => Some(wilcoxon_signed_rank(&a.final_gaps, &b.final_gaps)?),
        _ => None,
    };
    for (name, body) in [("hv.csv", hv), ("hv_mean.csv", hv_mean), ("hitting.csv", hitting), ("final.csv", finals)] {
        let path = out.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
    }
    let report = Report { sets, wilcoxon_p };
    write_json(&out.join("summary.json"), &report)?;
    Ok(report)
}
