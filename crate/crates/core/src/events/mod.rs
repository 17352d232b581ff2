//! Heel-contact and toe-off detection from force and keypoint channels.

mod grf;
mod kinematic;
mod passes;
mod peaks;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsp::{DspError, PreprocessOrder};
use crate::ingest::{Role, TrialMeta};

pub use grf::{detect_grf_events, FootMap};
pub use kinematic::{detect_kinematic_events, detect_kinematic_events_in, hip_track};
pub use passes::{segment_passes, Direction, PassWindow};
pub use peaks::{find_peaks, Peak};

#[derive(Debug, Error)]
pub enum EventError {
    #[error("no force sample exceeds the {threshold_n} N threshold on any platform")]
    NoSupraThreshold { threshold_n: f64 },
    #[error("conflicting platform to foot map: {0}")]
    FootMapConflict(String),
    #[error("layout {layout} has no {role:?} keypoint")]
    MissingPart { layout: String, role: Role },
    #[error("no walking passes to search")]
    NoPasses,
    #[error("hip trajectory has no valid samples")]
    NoHipTrajectory,
    #[error("{foot} {kind} at {time_s} s (pass {pass_id}) breaks heel-contact/toe-off alternation")]
    Alternation { foot: Foot, kind: EventKind, time_s: f64, pass_id: u32 },
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("invalid event configuration: {0}")]
    InvalidConfig(String),
    #[error("event table row {row}: {reason}")]
    Parse { row: usize, reason: String },
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Foot {
    Left,
    Right,
}

impl Foot {
    pub fn other(self) -> Foot {
        match self {
            Foot::Left => Foot::Right,
            Foot::Right => Foot::Left,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Foot::Left => "left",
            Foot::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "HC")]
    HeelContact,
    #[serde(rename = "TO")]
    ToeOff,
}

impl EventKind {
    fn as_str(self) -> &'static str {
        match self {
            EventKind::HeelContact => "HC",
            EventKind::ToeOff => "TO",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventSource {
    Force,
    Kinematic,
}

impl EventSource {
    fn as_str(self) -> &'static str {
        match self {
            EventSource::Force => "force",
            EventSource::Kinematic => "kinematic",
        }
    }
}

macro_rules! text_enum {
    ($t:ty, $($v:expr),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $t {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                [$($v),+]
                    .into_iter()
                    .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
                    .ok_or_else(|| format!("unrecognised value {s:?}"))
            }
        }
    };
}

text_enum!(Foot, Foot::Left, Foot::Right);
text_enum!(EventKind, EventKind::HeelContact, EventKind::ToeOff);
text_enum!(EventSource, EventSource::Force, EventSource::Kinematic);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitEvent {
    pub foot: Foot,
    pub kind: EventKind,
    pub time_s: f64,
    pub source: EventSource,
    pub pass_id: u32,
}

impl GaitEvent {
    pub fn new(foot: Foot, kind: EventKind, time_s: f64, source: EventSource, pass_id: u32) -> Self {
        GaitEvent { foot, kind, time_s, source, pass_id }
    }

    pub fn is_heel_contact(&self) -> bool {
        self.kind == EventKind::HeelContact
    }
}

/// Time-ordered events of one trial.
///
/// Construction sorts the events and checks that, per foot and pass, heel
/// contacts and toe-offs strictly alternate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventSequence {
    events: Vec<GaitEvent>,
    meta: Option<TrialMeta>,
    ankle_substituted: bool,
}

impl EventSequence {
    pub fn new(mut events: Vec<GaitEvent>) -> Result<Self, EventError> {
        for e in &events {
            if !(e.time_s.is_finite() && e.time_s >= 0.0) {
                return Err(EventError::InvalidEvent(format!("event time {} s", e.time_s)));
            }
        }
        events.sort_by(|a, b| {
            a.time_s
                .total_cmp(&b.time_s)
                .then(a.pass_id.cmp(&b.pass_id))
                .then(a.foot.cmp(&b.foot))
                .then(a.kind.cmp(&b.kind))
        });
        check_alternation(&events)?;
        Ok(EventSequence { events, meta: None, ankle_substituted: false })
    }

    pub fn empty() -> Self {
        EventSequence::default()
    }

    pub fn with_meta(mut self, meta: TrialMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub(crate) fn with_ankle_substitution(mut self, flag: bool) -> Self {
        self.ankle_substituted = flag;
        self
    }

    pub fn events(&self) -> &[GaitEvent] {
        &self.events
    }

    pub fn meta(&self) -> Option<&TrialMeta> {
        self.meta.as_ref()
    }

    /// True when heel and toe events were both taken from the ankle
    /// because the layout has neither.
    pub fn ankle_substituted(&self) -> bool {
        self.ankle_substituted
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Sorted distinct pass ids.
    pub fn pass_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.events.iter().map(|e| e.pass_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn in_pass(&self, pass_id: u32) -> impl Iterator<Item = &GaitEvent> {
        self.events.iter().filter(move |e| e.pass_id == pass_id)
    }

    pub fn heel_contacts(&self) -> impl Iterator<Item = &GaitEvent> {
        self.events.iter().filter(|e| e.is_heel_contact())
    }

    pub fn toe_offs(&self) -> impl Iterator<Item = &GaitEvent> {
        self.events.iter().filter(|e| !e.is_heel_contact())
    }
}

fn check_alternation(events: &[GaitEvent]) -> Result<(), EventError> {
    let mut last: std::collections::HashMap<(u32, Foot), EventKind> = Default::default();
    for e in events {
        if last.insert((e.pass_id, e.foot), e.kind) == Some(e.kind) {
            return Err(EventError::Alternation {
                foot: e.foot,
                kind: e.kind,
                time_s: e.time_s,
                pass_id: e.pass_id,
            });
        }
    }
    Ok(())
}

/// Tuning constants for both detectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventConfig {
    /// Force level separating swing from stance.
    pub grf_threshold_n: f64,
    /// Supra-threshold runs shorter than this are noise.
    pub min_stance_s: f64,
    /// Minimum spacing of same-kind kinematic extrema.
    pub min_event_separation_s: f64,
    pub peak_prominence_px: f64,
    /// Keypoints below this confidence are treated as missing.
    pub confidence_threshold: f64,
    pub preprocess_order: PreprocessOrder,
    /// Velocity-sign runs shorter than this are merged into a neighbour.
    pub pass_min_duration_s: f64,
    /// Passes whose net hip travel is below this share of the image width are dropped.
    pub pass_min_travel_fraction: f64,
    pub image_width_px: f64,
    /// A break between consecutive force stances longer than this starts a new pass.
    pub force_pass_gap_s: f64,
}

impl Default for EventConfig {
    fn default() -> Self {
        EventConfig {
            grf_threshold_n: 10.0,
            min_stance_s: 0.2,
            min_event_separation_s: 0.25,
            peak_prominence_px: 10.0,
            confidence_threshold: 0.5,
            preprocess_order: PreprocessOrder::MaskFirst,
            pass_min_duration_s: 0.5,
            pass_min_travel_fraction: 0.25,
            image_width_px: 640.0,
            force_pass_gap_s: 1.0,
        }
    }
}

impl EventConfig {
    pub fn validate(&self) -> Result<(), EventError> {
        let positive = [
            ("min_stance_s", self.min_stance_s),
            ("min_event_separation_s", self.min_event_separation_s),
            ("peak_prominence_px", self.peak_prominence_px),
            ("pass_min_duration_s", self.pass_min_duration_s),
            ("image_width_px", self.image_width_px),
            ("force_pass_gap_s", self.force_pass_gap_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(EventError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        // a zero threshold is the literal "above zero" rule and stays allowed
        if !(self.grf_threshold_n.is_finite() && self.grf_threshold_n >= 0.0) {
            return Err(EventError::InvalidConfig(format!(
                "grf_threshold_n must be non-negative, got {}",
                self.grf_threshold_n
            )));
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return Err(EventError::InvalidConfig("confidence_threshold must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.pass_min_travel_fraction) {
            return Err(EventError::InvalidConfig("pass_min_travel_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

const CSV_HEADER: [&str; 5] = ["time_s", "foot", "kind", "source", "pass_id"];

/// Writes `time_s,foot,kind,source,pass_id` rows.
pub fn write_events_csv<W: Write>(seq: &EventSequence, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", CSV_HEADER.join(","))?;
    for e in seq.events() {
        writeln!(w, "{},{},{},{},{}", e.time_s, e.foot, e.kind, e.source, e.pass_id)?;
    }
    Ok(())
}

pub fn read_events_csv<R: Read>(reader: R) -> Result<EventSequence, EventError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(EventError::Parse {
            row: 1,
            reason: format!("header must be {}", CSV_HEADER.join(",")),
        });
    }
    let mut events = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 2;
        let bad = |reason: String| EventError::Parse { row, reason };
        events.push(GaitEvent {
            time_s: rec[0].parse().map_err(|_| bad(format!("bad time {:?}", &rec[0])))?,
            foot: rec[1].parse().map_err(bad)?,
            kind: rec[2].parse().map_err(bad)?,
            source: rec[3].parse().map_err(bad)?,
            pass_id: rec[4].parse().map_err(|_| bad(format!("bad pass id {:?}", &rec[4])))?,
        });
    }
    EventSequence::new(events)
}
