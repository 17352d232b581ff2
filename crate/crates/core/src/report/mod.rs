//! Batch analysis over a trial manifest and the report files it produces.

mod config;
mod emit;
mod manifest;
mod study;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{
    detect_grf_events, detect_kinematic_events, EventSequence, EventSource, FootMap,
};
use crate::ingest::{parse_dlc_csv, parse_grf_csv, parse_openpose_frames, GrfSignal, IngestError, PersonSelection};
use crate::params::{aggregate_trials, compute_params, mean, Parameter, TemporalParams, TrialAggregate};
use crate::stats::{absolute_errors, bland_altman, pearson, shapiro_wilk, AbsErrorSummary, BlandAltmanResult, NormalityResult, PairedSeries};

pub use config::AnalysisConfig;
pub use emit::{emit_plot_data, emit_tables, quantile, render_text_report};
pub use manifest::{InputKind, Manifest, TrialEntry, REFERENCE_SYSTEM};
pub use study::write_synth_study;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{trial}: input {} not found", path.display())]
    MissingInput { trial: String, path: PathBuf },
    #[error("{trial}: {source}")]
    Ingest { trial: String, source: IngestError },
    #[error("{trial}: {reason}")]
    Pipeline { trial: String, reason: String },
    #[error("no {system} entries to pair against")]
    MissingSystem { system: String },
    #[error("{system}: video {video_id} has no {reference} entry")]
    MissingPairing { system: String, video_id: String, reference: String },
    #[error("{system} {parameter}: {reason}")]
    Statistics { system: String, parameter: Parameter, reason: String },
    #[error("report has no rows")]
    EmptyReport,
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ReportError {
    /// Bad or missing input, as opposed to a failure while processing it.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            ReportError::Manifest(_)
                | ReportError::Config(_)
                | ReportError::MissingInput { .. }
                | ReportError::Ingest { .. }
        )
    }
}

/// Result of running one manifest entry through detection and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub entry: TrialEntry,
    pub events: EventSequence,
    pub params: TemporalParams,
}

/// Per-video parameter values: the mean over that video's steps or cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoValues {
    pub system: String,
    pub trial_id: String,
    pub subject_id: Option<String>,
    pub ankle_substituted: bool,
    pub n_events: usize,
    pub step_time: f64,
    pub cadence: f64,
    pub stance_time: f64,
    pub double_support: f64,
}

impl VideoValues {
    pub fn get(&self, p: Parameter) -> f64 {
        match p {
            Parameter::StepTime => self.step_time,
            Parameter::Cadence => self.cadence,
            Parameter::StanceTime => self.stance_time,
            Parameter::DoubleSupport => self.double_support,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub system: String,
    pub n_trials: usize,
    pub aggregate: TrialAggregate,
}

/// One system by parameter entry of an agreement table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell<T> {
    pub system: String,
    pub parameter: Parameter,
    pub value: T,
}

/// Everything the report files are rendered from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    /// Pose systems in tag order, then the reference.
    pub table_a: Vec<SystemSummary>,
    pub table_b: Vec<Cell<BlandAltmanResult>>,
    pub table_c: Vec<Cell<AbsErrorSummary>>,
    /// `None` where fewer than three videos or a constant series rule r out a coefficient.
    pub pearson: Vec<Cell<Option<f64>>>,
    /// Per system, Shapiro-Wilk over the per-video values; `None` where the test is undefined.
    pub normality: Vec<Cell<Option<NormalityResult>>>,
    pub videos: Vec<VideoValues>,
}

impl StudyReport {
    pub fn is_empty(&self) -> bool {
        self.table_a.is_empty()
    }

    /// Systems in report order.
    pub fn systems(&self) -> Vec<&str> {
        self.table_a.iter().map(|s| s.system.as_str()).collect()
    }
}

/// Ordering of systems in every table: pose systems by tag, reference last.
fn system_order(a: &str, b: &str) -> std::cmp::Ordering {
    (a == REFERENCE_SYSTEM, a).cmp(&(b == REFERENCE_SYSTEM, b))
}

fn trial_label(e: &TrialEntry) -> String {
    format!("{}/{}", e.system, e.trial_id)
}

fn pipeline_err(e: &TrialEntry, reason: impl ToString) -> ReportError {
    ReportError::Pipeline { trial: trial_label(e), reason: reason.to_string() }
}

fn open(path: &std::path::Path, e: &TrialEntry) -> Result<BufReader<File>, ReportError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|err| ReportError::Ingest { trial: trial_label(e), source: err.into() })
}

/// Reads and runs event detection for one entry. `kinematic_feet` supplies
/// the events named by a force entry's `feet_from`.
pub fn detect_entry_events(
    entry: &TrialEntry,
    manifest: &Manifest,
    cfg: &AnalysisConfig,
    kinematic_feet: Option<&EventSequence>,
) -> Result<EventSequence, ReportError> {
    let (kind, rel) = entry
        .input()
        .ok_or_else(|| ReportError::Manifest(format!("{}: no input path", trial_label(entry))))?;
    let path = manifest.resolve(rel);
    let ingest_err = |source: IngestError| ReportError::Ingest { trial: trial_label(entry), source };
    let mut ev_cfg = cfg.events.clone();
    if let Some(w) = entry.image_width_px {
        ev_cfg.image_width_px = w;
    }
    match kind {
        InputKind::Grf => {
            let mut g = parse_grf_csv(open(&path, entry)?).map_err(ingest_err)?;
            if let Some(fs) = entry.fs {
                g = GrfSignal::new(fs, g.t0(), g.platforms().to_vec()).map_err(ingest_err)?;
            }
            let filter = cfg.grf_filter(g.fs()).map_err(|e| pipeline_err(entry, e))?;
            let feet = if let Some(f) = entry.first_foot {
                FootMap::Alternating { first: f }
            } else if let Some(v) = &entry.pass_first_feet {
                FootMap::PerPass(v.clone())
            } else if let Some(v) = &entry.platform_feet {
                FootMap::Platforms(v.clone())
            } else if entry.feet_from.is_some() {
                let k = kinematic_feet.ok_or_else(|| pipeline_err(entry, "feet_from events unavailable"))?;
                FootMap::NearestKinematic(k.clone())
            } else {
                FootMap::default()
            };
            detect_grf_events(&g, &ev_cfg, Some(&filter), &feet).map_err(|e| pipeline_err(entry, e))
        }
        InputKind::Dlc | InputKind::OpenPose => {
            let fps = entry.fps.unwrap_or(cfg.default_fps);
            let series = if kind == InputKind::Dlc {
                parse_dlc_csv(open(&path, entry)?, fps).map_err(ingest_err)?
            } else {
                let mut files: Vec<PathBuf> = std::fs::read_dir(&path)
                    .map_err(|err| ingest_err(err.into()))?
                    .filter_map(|d| d.ok().map(|d| d.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "json"))
                    .collect();
                files.sort();
                let streams = files.iter().map(|f| open(f, entry)).collect::<Result<Vec<_>, _>>()?;
                parse_openpose_frames(streams, fps, PersonSelection::default()).map_err(ingest_err)?
            };
            let filter = cfg.kin_filter(fps).map_err(|e| pipeline_err(entry, e))?;
            detect_kinematic_events(&series, &ev_cfg, &filter).map_err(|e| pipeline_err(entry, e))
        }
    }
}

fn run_entry(
    entry: &TrialEntry,
    manifest: &Manifest,
    cfg: &AnalysisConfig,
    kinematic_feet: Option<&EventSequence>,
) -> Result<TrialOutcome, ReportError> {
    let events = detect_entry_events(entry, manifest, cfg, kinematic_feet)?;
    let source = match entry.input().map(|(k, _)| k) {
        Some(InputKind::Grf) => EventSource::Force,
        _ => EventSource::Kinematic,
    };
    let params = compute_params(&events, &entry.trial_id, &format!("{source}:{}", entry.system), cfg.double_support)
        .map_err(|e| pipeline_err(entry, e))?;
    Ok(TrialOutcome { entry: entry.clone(), events, params })
}

/// Processes every entry, kinematic ones first so force entries can borrow
/// their foot attribution. Results come back ordered by (system, trial_id).
pub fn run_trials(manifest: &Manifest, cfg: &AnalysisConfig, threads: usize) -> Result<Vec<TrialOutcome>, ReportError> {
    cfg.validate()?;
    manifest.check_paths()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ReportError::ThreadPool(e.to_string()))?;
    let (force, kin): (Vec<&TrialEntry>, Vec<&TrialEntry>) =
        manifest.trials.iter().partition(|t| t.input().is_some_and(|(k, _)| k == InputKind::Grf));

    let first_error = |mut results: Vec<Result<TrialOutcome, ReportError>>, entries: &[&TrialEntry]| {
        // report the error of the first failing entry in (system, trial_id) order
        let mut idx: Vec<usize> = (0..entries.len()).collect();
        idx.sort_by(|&a, &b| (&entries[a].system, &entries[a].trial_id).cmp(&(&entries[b].system, &entries[b].trial_id)));
        for i in idx {
            if results[i].is_err() {
                return Err(std::mem::replace(&mut results[i], Err(ReportError::EmptyReport)).unwrap_err());
            }
        }
        Ok(results.into_iter().map(Result::unwrap).collect::<Vec<_>>())
    };

    let kin_out = pool.install(|| kin.par_iter().map(|e| run_entry(e, manifest, cfg, None)).collect::<Vec<_>>());
    let kin_out = first_error(kin_out, &kin)?;
    let by_key: BTreeMap<(&str, &str), &EventSequence> =
        kin_out.iter().map(|o| ((o.entry.system.as_str(), o.entry.trial_id.as_str()), &o.events)).collect();
    let force_out = pool.install(|| {
        force
            .par_iter()
            .map(|e| {
                let feet = e.feet_from.as_deref().and_then(|s| by_key.get(&(s, e.trial_id.as_str())).copied());
                run_entry(e, manifest, cfg, feet)
            })
            .collect::<Vec<_>>()
    });
    let force_out = first_error(force_out, &force)?;

    let mut all: Vec<TrialOutcome> = kin_out.into_iter().chain(force_out).collect();
    all.sort_by(|a, b| {
        system_order(&a.entry.system, &b.entry.system).then_with(|| a.entry.trial_id.cmp(&b.entry.trial_id))
    });
    Ok(all)
}

fn video_values(o: &TrialOutcome) -> Result<VideoValues, ReportError> {
    let m = |p: Parameter| -> Result<f64, ReportError> {
        let v = o.params.values(p);
        if v.is_empty() {
            return Err(pipeline_err(&o.entry, format!("no {} values", p.key())));
        }
        Ok(mean(v))
    };
    Ok(VideoValues {
        system: o.entry.system.clone(),
        trial_id: o.entry.trial_id.clone(),
        subject_id: o.entry.subject_id.clone(),
        ankle_substituted: o.events.ankle_substituted(),
        n_events: o.events.len(),
        step_time: m(Parameter::StepTime)?,
        cadence: m(Parameter::Cadence)?,
        stance_time: m(Parameter::StanceTime)?,
        double_support: m(Parameter::DoubleSupport)?,
    })
}

/// Folds processed trials into the report. Single threaded and ordered, so
/// the result depends only on the outcomes.
pub fn build_report(outcomes: &[TrialOutcome], cfg: &AnalysisConfig) -> Result<StudyReport, ReportError> {
    if outcomes.is_empty() {
        return Err(ReportError::EmptyReport);
    }
    let mut by_system: BTreeMap<&str, Vec<&TrialOutcome>> = BTreeMap::new();
    for o in outcomes {
        by_system.entry(o.entry.system.as_str()).or_default().push(o);
    }
    let mut systems: Vec<&str> = by_system.keys().copied().collect();
    systems.sort_by(|a, b| system_order(a, b));

    let mut table_a = Vec::new();
    let mut videos: BTreeMap<&str, Vec<VideoValues>> = BTreeMap::new();
    for &s in &systems {
        let mut trials = by_system[s].clone();
        trials.sort_by(|a, b| a.entry.trial_id.cmp(&b.entry.trial_id));
        let params: Vec<TemporalParams> = trials.iter().map(|o| o.params.clone()).collect();
        let aggregate = aggregate_trials(&params, cfg.aggregation)
            .map_err(|e| ReportError::Pipeline { trial: s.to_string(), reason: e.to_string() })?;
        table_a.push(SystemSummary { system: s.to_string(), n_trials: trials.len(), aggregate });
        videos.insert(s, trials.iter().map(|o| video_values(o)).collect::<Result<_, _>>()?);
    }

    let mut report = StudyReport {
        table_a,
        table_b: Vec::new(),
        table_c: Vec::new(),
        pearson: Vec::new(),
        normality: Vec::new(),
        videos: Vec::new(),
    };

    for &s in &systems {
        for p in Parameter::ALL {
            let x: Vec<f64> = videos[s].iter().map(|v| v.get(p)).collect();
            let value = shapiro_wilk(&x).ok();
            report.normality.push(Cell { system: s.to_string(), parameter: p, value });
        }
    }

    let compared: Vec<&str> = systems.iter().copied().filter(|&s| s != REFERENCE_SYSTEM).collect();
    if !compared.is_empty() {
        let reference: BTreeMap<&str, &VideoValues> = videos
            .get(REFERENCE_SYSTEM)
            .ok_or_else(|| ReportError::MissingSystem { system: REFERENCE_SYSTEM.to_string() })?
            .iter()
            .map(|v| (v.trial_id.as_str(), v))
            .collect();
        for &s in &compared {
            let est = &videos[s];
            let refs: Vec<&VideoValues> = est
                .iter()
                .map(|v| {
                    reference.get(v.trial_id.as_str()).copied().ok_or_else(|| ReportError::MissingPairing {
                        system: s.to_string(),
                        video_id: v.trial_id.clone(),
                        reference: REFERENCE_SYSTEM.to_string(),
                    })
                })
                .collect::<Result<_, _>>()?;
            for p in Parameter::ALL {
                let stats_err = |e: crate::stats::StatsError| ReportError::Statistics {
                    system: s.to_string(),
                    parameter: p,
                    reason: e.to_string(),
                };
                let pairs = PairedSeries::new(
                    est.iter().map(|v| v.get(p)).collect(),
                    refs.iter().map(|v| v.get(p)).collect(),
                    est.iter().map(|v| v.trial_id.clone()).collect(),
                )
                .map_err(stats_err)?;
                let cell = |value| Cell { system: s.to_string(), parameter: p, value };
                report.table_b.push(cell(bland_altman(&pairs).map_err(stats_err)?));
                report.table_c.push(Cell { system: s.to_string(), parameter: p, value: absolute_errors(&pairs).map_err(stats_err)? });
                report.pearson.push(Cell {
                    system: s.to_string(),
                    parameter: p,
                    value: pearson(pairs.est(), pairs.reference()).ok(),
                });
            }
        }
    }
    report.videos = systems.iter().flat_map(|s| videos[s].iter().cloned()).collect();
    Ok(report)
}

/// Runs the whole pipeline over a manifest.
pub fn run_analyze(manifest: &Manifest, cfg: &AnalysisConfig, threads: usize) -> Result<StudyReport, ReportError> {
    let outcomes = run_trials(manifest, cfg, threads)?;
    build_report(&outcomes, cfg)
}

/// Systems named in a manifest, in report order.
pub fn manifest_systems(m: &Manifest) -> Vec<String> {
    let mut s: Vec<String> = m.trials.iter().map(|t| t.system.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    s.sort_by(|a, b| system_order(a, b));
    s
}
