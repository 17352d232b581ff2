//! Temporal gait parameters from an event sequence.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::{EventKind, EventSequence, Foot, GaitEvent};

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("step time must be positive, got {0}")]
    NonPositiveStepTime(f64),
    #[error("no {0} values to summarise")]
    Empty(Parameter),
    #[error("{param} mean is {mean}, coefficient of variation needs a positive mean")]
    NonPositiveMean { param: Parameter, mean: f64 },
    #[error("{param} value {value} is not allowed")]
    InvalidValue { param: Parameter, value: f64 },
}

/// The four temporal parameters, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    StepTime,
    Cadence,
    StanceTime,
    DoubleSupport,
}

impl Parameter {
    pub const ALL: [Parameter; 4] =
        [Parameter::StepTime, Parameter::Cadence, Parameter::StanceTime, Parameter::DoubleSupport];

    /// Machine name used in file names and long-format tables.
    pub fn key(self) -> &'static str {
        match self {
            Parameter::StepTime => "step_time",
            Parameter::Cadence => "cadence",
            Parameter::StanceTime => "stance_time",
            Parameter::DoubleSupport => "double_support",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Parameter::StepTime => "Step time (s)",
            Parameter::Cadence => "Cadence (steps/min)",
            Parameter::StanceTime => "Stance time (s)",
            Parameter::DoubleSupport => "Double support time (s)",
        }
    }

    pub fn from_key(key: &str) -> Option<Parameter> {
        Parameter::ALL.into_iter().find(|p| p.key() == key)
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// One heel contact to the next heel contact of the same foot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitCycle {
    pub foot: Foot,
    pub hc: f64,
    pub next_hc_same_foot: f64,
    pub to: Option<f64>,
    pub contralateral_hc: Option<f64>,
    pub contralateral_to: Option<f64>,
    pub pass_id: u32,
}

impl GaitCycle {
    pub fn duration(&self) -> f64 {
        self.next_hc_same_foot - self.hc
    }
}

fn first_after<'a>(
    events: &'a [&'a GaitEvent],
    foot: Foot,
    kind: EventKind,
    pred: impl Fn(f64) -> bool,
) -> Option<f64> {
    events.iter().find(|e| e.foot == foot && e.kind == kind && pred(e.time_s)).map(|e| e.time_s)
}

fn pass_events(e: &EventSequence) -> Vec<Vec<&GaitEvent>> {
    e.pass_ids().into_iter().map(|p| e.in_pass(p).collect()).collect()
}

/// Pairs consecutive same-foot heel contacts within each pass. Events of
/// either foot falling in `[hc, next_hc)` are attached; a trailing heel
/// contact without a successor opens no cycle.
pub fn build_cycles(e: &EventSequence) -> Vec<GaitCycle> {
    let mut cycles = Vec::new();
    for events in pass_events(e) {
        for foot in [Foot::Left, Foot::Right] {
            let hcs: Vec<&GaitEvent> =
                events.iter().copied().filter(|ev| ev.foot == foot && ev.is_heel_contact()).collect();
            for w in hcs.windows(2) {
                let (hc, next) = (w[0].time_s, w[1].time_s);
                let inside = |t: f64| t >= hc && t < next;
                cycles.push(GaitCycle {
                    foot,
                    hc,
                    next_hc_same_foot: next,
                    to: first_after(&events, foot, EventKind::ToeOff, |t| t > hc && t < next),
                    contralateral_hc: first_after(&events, foot.other(), EventKind::HeelContact, inside),
                    contralateral_to: first_after(&events, foot.other(), EventKind::ToeOff, inside),
                    pass_id: w[0].pass_id,
                });
            }
        }
    }
    cycles.sort_by(|a, b| a.hc.total_cmp(&b.hc).then(a.foot.cmp(&b.foot)));
    cycles
}

/// Intervals between consecutive heel contacts of opposite feet, per pass.
pub fn compute_step_times(e: &EventSequence) -> Vec<f64> {
    let mut out = Vec::new();
    for events in pass_events(e) {
        let hcs: Vec<&&GaitEvent> = events.iter().filter(|ev| ev.is_heel_contact()).collect();
        for w in hcs.windows(2) {
            if w[0].foot != w[1].foot {
                out.push(w[1].time_s - w[0].time_s);
            }
        }
    }
    out
}

/// Instantaneous cadence, `60 / t` per step.
pub fn compute_cadence(step_times: &[f64]) -> Result<Vec<f64>, ParamsError> {
    step_times
        .iter()
        .map(|&t| if t > 0.0 && t.is_finite() { Ok(60.0 / t) } else { Err(ParamsError::NonPositiveStepTime(t)) })
        .collect()
}

/// `to - hc` for every cycle that has a toe-off.
pub fn compute_stance_times(cycles: &[GaitCycle]) -> Vec<f64> {
    cycles.iter().filter_map(|c| c.to.map(|to| to - c.hc)).collect()
}

/// Which double-support figure to report per cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoubleSupportMode {
    /// both phases around the contralateral stance
    #[default]
    Total,
    /// only the phase that ends the cycle foot's own stance
    SinglePhase,
}

/// The two double-support phases attributed to one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleSupportPhases {
    /// Contralateral stance overlapping the end of this foot's stance.
    pub terminal: f64,
    /// Contralateral stance overlapping the start of this foot's next stance.
    pub next_initial: f64,
}

impl DoubleSupportPhases {
    pub fn total(&self) -> f64 {
        self.terminal + self.next_initial
    }
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

/// Per-cycle double-support phases.
///
/// The contralateral stance is the one whose heel contact falls in
/// `[hc, next_hc)`. Its overlap with this foot's stance `[hc, to]` and with
/// the next stance `[next_hc, next_to]` are the two phases. Cycles without
/// a toe-off or without a complete contralateral stance are skipped; a
/// missing `next_to` leaves the next stance open-ended.
pub fn double_support_phases(cycles: &[GaitCycle], e: &EventSequence) -> Vec<DoubleSupportPhases> {
    let mut out = Vec::new();
    for c in cycles {
        let events: Vec<&GaitEvent> = e.in_pass(c.pass_id).collect();
        let Some(to) = c.to else { continue };
        let other = c.foot.other();
        let Some(chc) =
            first_after(&events, other, EventKind::HeelContact, |t| t >= c.hc && t < c.next_hc_same_foot)
        else {
            continue;
        };
        let Some(cto) = first_after(&events, other, EventKind::ToeOff, |t| t > chc) else { continue };
        let next_to = first_after(&events, c.foot, EventKind::ToeOff, |t| t > c.next_hc_same_foot)
            .unwrap_or(f64::INFINITY);
        out.push(DoubleSupportPhases {
            terminal: overlap((c.hc, to), (chc, cto)),
            next_initial: overlap((c.next_hc_same_foot, next_to), (chc, cto)),
        });
    }
    out
}

pub fn compute_double_support(cycles: &[GaitCycle], e: &EventSequence, mode: DoubleSupportMode) -> Vec<f64> {
    double_support_phases(cycles, e)
        .into_iter()
        .map(|p| match mode {
            DoubleSupportMode::Total => p.total(),
            DoubleSupportMode::SinglePhase => p.terminal,
        })
        .collect()
}

/// All per-step and per-cycle values of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalParams {
    pub trial_id: String,
    /// Which channel or system produced the events.
    pub source: String,
    pub step_times_s: Vec<f64>,
    pub cadence_steps_per_min: Vec<f64>,
    pub stance_times_s: Vec<f64>,
    pub double_support_times_s: Vec<f64>,
}

impl TemporalParams {
    pub fn values(&self, p: Parameter) -> &[f64] {
        match p {
            Parameter::StepTime => &self.step_times_s,
            Parameter::Cadence => &self.cadence_steps_per_min,
            Parameter::StanceTime => &self.stance_times_s,
            Parameter::DoubleSupport => &self.double_support_times_s,
        }
    }

    /// Every value finite; durations and rates strictly positive, double
    /// support non-negative.
    pub fn validate(&self) -> Result<(), ParamsError> {
        for p in Parameter::ALL {
            for &v in self.values(p) {
                let ok = v.is_finite() && if p == Parameter::DoubleSupport { v >= 0.0 } else { v > 0.0 };
                if !ok {
                    return Err(ParamsError::InvalidValue { param: p, value: v });
                }
            }
        }
        Ok(())
    }
}

/// Runs the four parameter computations over one event sequence.
pub fn compute_params(
    e: &EventSequence,
    trial_id: &str,
    source: &str,
    mode: DoubleSupportMode,
) -> Result<TemporalParams, ParamsError> {
    let cycles = build_cycles(e);
    let step_times_s = compute_step_times(e);
    let p = TemporalParams {
        trial_id: trial_id.to_string(),
        source: source.to_string(),
        cadence_steps_per_min: compute_cadence(&step_times_s)?,
        step_times_s,
        stance_times_s: compute_stance_times(&cycles),
        double_support_times_s: compute_double_support(&cycles, e, mode),
    };
    p.validate()?;
    Ok(p)
}

/// Mean, sample SD and coefficient of variation of one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub cv_percent: f64,
    pub n: usize,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; zero for a single value.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// `100 * sd / mean`.
pub fn cv_percent(mean: f64, sd: f64) -> f64 {
    100.0 * sd / mean
}

pub fn summarize(param: Parameter, values: &[f64]) -> Result<Summary, ParamsError> {
    if values.is_empty() {
        return Err(ParamsError::Empty(param));
    }
    let m = mean(values);
    if !(m > 0.0) {
        return Err(ParamsError::NonPositiveMean { param, mean: m });
    }
    let sd = sample_sd(values);
    Ok(Summary { mean: m, sd, cv_percent: cv_percent(m, sd), n: values.len() })
}

/// How several trials are folded into one summary row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// every step or cycle of every trial counts once
    #[default]
    Pooled,
    /// each trial contributes its own mean
    PerTrialMeans,
}

/// Summary rows for the four parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialAggregate {
    pub step_time: Summary,
    pub cadence: Summary,
    pub stance_time: Summary,
    pub double_support: Summary,
}

impl TrialAggregate {
    pub fn get(&self, p: Parameter) -> &Summary {
        match p {
            Parameter::StepTime => &self.step_time,
            Parameter::Cadence => &self.cadence,
            Parameter::StanceTime => &self.stance_time,
            Parameter::DoubleSupport => &self.double_support,
        }
    }
}

pub fn aggregate_trial(p: &TemporalParams) -> Result<TrialAggregate, ParamsError> {
    aggregate_trials(std::slice::from_ref(p), Aggregation::Pooled)
}

pub fn aggregate_trials(trials: &[TemporalParams], how: Aggregation) -> Result<TrialAggregate, ParamsError> {
    let collect = |p: Parameter| -> Vec<f64> {
        match how {
            Aggregation::Pooled => trials.iter().flat_map(|t| t.values(p).iter().copied()).collect(),
            Aggregation::PerTrialMeans => {
                trials.iter().map(|t| t.values(p)).filter(|v| !v.is_empty()).map(mean).collect()
            }
        }
    };
    let s = |p: Parameter| summarize(p, &collect(p));
    Ok(TrialAggregate {
        step_time: s(Parameter::StepTime)?,
        cadence: s(Parameter::Cadence)?,
        stance_time: s(Parameter::StanceTime)?,
        double_support: s(Parameter::DoubleSupport)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{EventSource, GaitEvent};

    fn ev(foot: Foot, kind: EventKind, t: f64, pass: u32) -> GaitEvent {
        GaitEvent::new(foot, kind, t, EventSource::Force, pass)
    }

    use EventKind::{HeelContact as HC, ToeOff as TO};
    use Foot::{Left as L, Right as R};

    fn seq(evs: &[(Foot, EventKind, f64)]) -> EventSequence {
        EventSequence::new(evs.iter().map(|&(f, k, t)| ev(f, k, t, 0)).collect()).unwrap()
    }

    #[test]
    fn one_right_cycle() {
        let c = build_cycles(&seq(&[(R, HC, 1.0), (R, TO, 1.7), (R, HC, 2.12)]));
        assert_eq!(c.len(), 1);
        assert_eq!((c[0].foot, c[0].hc, c[0].next_hc_same_foot, c[0].to), (R, 1.0, 2.12, Some(1.7)));
        assert!(build_cycles(&seq(&[(R, HC, 1.0)])).is_empty());
    }

    #[test]
    fn cycles_never_straddle_passes() {
        let s = EventSequence::new(vec![ev(R, HC, 1.0, 0), ev(R, TO, 1.7, 0), ev(R, HC, 6.0, 1)]).unwrap();
        assert!(build_cycles(&s).is_empty());
        assert!(compute_step_times(&EventSequence::new(vec![ev(R, HC, 1.0, 0), ev(L, HC, 6.0, 1)]).unwrap())
            .is_empty());
    }

    #[test]
    fn step_times() {
        let s = seq(&[(R, HC, 1.0), (L, HC, 1.55), (R, TO, 1.7), (R, HC, 2.12)]);
        let t = compute_step_times(&s);
        assert!((t[0] - 0.55).abs() < 1e-12 && (t[1] - 0.57).abs() < 1e-12);
        assert!(compute_step_times(&seq(&[(R, HC, 1.0), (R, TO, 1.5), (R, HC, 2.12)])).is_empty());
    }

    #[test]
    fn cadence() {
        assert_eq!(compute_cadence(&[0.5, 0.5]).unwrap(), vec![120.0, 120.0]);
        assert_eq!(compute_cadence(&[0.6]).unwrap(), vec![100.0]);
        let c = compute_cadence(&[0.55, 0.57]).unwrap();
        assert!((c[0] - 109.09).abs() < 0.01 && (c[1] - 105.26).abs() < 0.01);
        assert_eq!(compute_cadence(&[0.0]), Err(ParamsError::NonPositiveStepTime(0.0)));
    }

    #[test]
    fn stance_skips_missing_toe_off() {
        let c = build_cycles(&seq(&[(R, HC, 1.0), (R, TO, 1.7), (R, HC, 2.12)]));
        assert!((compute_stance_times(&c)[0] - 0.7).abs() < 1e-12);
        let mut c = c;
        c[0].to = None;
        assert!(compute_stance_times(&c).is_empty());
    }

    #[test]
    fn double_support_worked_example() {
        let s = seq(&[(R, HC, 1.0), (L, HC, 1.55), (R, TO, 1.7), (R, HC, 2.12), (L, TO, 2.26), (R, TO, 2.8)]);
        let cycles = build_cycles(&s);
        let right: Vec<GaitCycle> = cycles.into_iter().filter(|c| c.foot == R).collect();
        let ds = double_support_phases(&right, &s);
        assert_eq!(ds.len(), 1);
        assert!((ds[0].terminal - 0.15).abs() < 1e-12);
        assert!((ds[0].next_initial - 0.14).abs() < 1e-12);
        assert!((ds[0].total() - 0.29).abs() < 1e-12);
        let single = compute_double_support(&right, &s, DoubleSupportMode::SinglePhase);
        assert!((single[0] - 0.15).abs() < 1e-12);
    }

    #[test]
    fn double_support_disjoint_and_identical() {
        // flight phases between stances
        let s = seq(&[(R, HC, 1.0), (R, TO, 1.3), (L, HC, 1.4), (L, TO, 1.7), (R, HC, 1.8), (R, TO, 2.1)]);
        let c: Vec<GaitCycle> = build_cycles(&s).into_iter().filter(|c| c.foot == R).collect();
        assert_eq!(compute_double_support(&c, &s, DoubleSupportMode::Total), vec![0.0]);

        let s = seq(&[(R, HC, 1.0), (L, HC, 1.0), (R, TO, 1.6), (L, TO, 1.6), (R, HC, 2.0), (L, HC, 2.0)]);
        let c: Vec<GaitCycle> = build_cycles(&s).into_iter().filter(|c| c.foot == R).collect();
        let ds = compute_double_support(&c, &s, DoubleSupportMode::Total);
        assert!((ds[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn summaries() {
        let s = summarize(Parameter::StepTime, &[0.5; 4]).unwrap();
        assert_eq!((s.sd, s.cv_percent, s.n), (0.0, 0.0, 4));
        assert!((cv_percent(0.557, 0.039) - 7.002).abs() < 1e-3);
        assert!((cv_percent(0.552, 0.047) - 8.514).abs() < 1e-3);
        assert_eq!(summarize(Parameter::Cadence, &[]), Err(ParamsError::Empty(Parameter::Cadence)));
        assert!(matches!(summarize(Parameter::DoubleSupport, &[0.0]), Err(ParamsError::NonPositiveMean { .. })));
        assert_eq!(summarize(Parameter::StepTime, &[0.7]).unwrap().sd, 0.0);
        assert!((sample_sd(&[1.0, 2.0, 3.0, 4.0]) - 1.2909944487358056).abs() < 1e-15);
    }

    #[test]
    fn pooled_versus_per_trial() {
        let t = |id: &str, v: Vec<f64>| TemporalParams {
            trial_id: id.into(),
            source: "x".into(),
            cadence_steps_per_min: compute_cadence(&v).unwrap(),
            stance_times_s: v.clone(),
            double_support_times_s: v.clone(),
            step_times_s: v,
        };
        let trials = [t("a", vec![0.5, 0.5, 0.5]), t("b", vec![0.8])];
        let pooled = aggregate_trials(&trials, Aggregation::Pooled).unwrap();
        let per = aggregate_trials(&trials, Aggregation::PerTrialMeans).unwrap();
        assert!((pooled.step_time.mean - 0.575).abs() < 1e-12);
        assert!((per.step_time.mean - 0.65).abs() < 1e-12);
        assert_eq!((pooled.step_time.n, per.step_time.n), (4, 2));
    }
}
