//! Parsers for force-platform exports and pose-estimation outputs.
//!
//! Three input families are supported:
//!
//! - a plain-text GRF table (`time_s,fz1_n[,fz2_n,...]`),
//! - OpenPose per-frame JSON (`people[].pose_keypoints_2d`),
//! - DeepLabCut tabular CSV (scorer / bodyparts / coords header rows).
//!
//! Every parser has a matching writer so synthetic trials can be written to
//! disk and read back through the same code path as real recordings.

mod dlc;
mod grf;
mod layout;
mod openpose;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dlc::{parse_dlc_csv, write_dlc_csv};
pub use grf::{parse_grf_csv, write_grf_csv};
pub use layout::{detect_layout, match_layout, normalize_name, LayoutKind, LayoutMatch, Role, SkeletonLayout};
pub use openpose::{parse_openpose_frames, write_openpose_frame, PersonSelection};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("non-numeric value {value:?} at row {row}, column {column}")]
    NonNumeric { row: usize, column: usize, value: String },
    #[error("non-uniform sampling at row {row}: step {step} s, median step {median} s")]
    NonUniformSampling { row: usize, step: f64, median: f64 },
    #[error("no data rows")]
    EmptyBody,
    #[error("at least two samples are needed to infer the sampling rate, found {0}")]
    TooFewSamples(usize),
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("frame {frame}: malformed object: {reason}")]
    MalformedFrame { frame: usize, reason: String },
    #[error("frame {frame}: pose_keypoints_2d has {len} values, expected 75")]
    KeypointLength { frame: usize, len: usize },
    #[error("unknown layout: no skeleton has {count} parts")]
    UnknownLayout { count: usize },
    #[error("parts not recognised for {layout}: {names:?}")]
    UnrecognizedParts { layout: LayoutKind, names: Vec<String> },
    #[error("part listed twice: {0}")]
    DuplicatePart(String),
    #[error("part names match more than one layout")]
    AmbiguousLayout,
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One 2D keypoint sample in image coordinates (y grows downward).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub confidence: f64,
}

impl Keypoint {
    pub const MISSING: Keypoint = Keypoint { x: 0.0, y: 0.0, confidence: 0.0 };

    pub fn new(x: f64, y: f64, confidence: f64) -> Self {
        Keypoint { x, y, confidence }
    }

    /// Finite coordinates and a confidence inside `[0, 1]`.
    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && (0.0..=1.0).contains(&self.confidence)
    }
}

/// Per-frame keypoints for one tracked subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointSeries {
    layout: SkeletonLayout,
    fps: f64,
    frames: Vec<Vec<Keypoint>>,
}

impl KeypointSeries {
    pub fn new(
        layout: SkeletonLayout,
        fps: f64,
        frames: Vec<Vec<Keypoint>>,
    ) -> Result<Self, IngestError> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(IngestError::InvalidSeries(format!("fps must be positive, got {fps}")));
        }
        let parts = layout.part_count();
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.len() != parts) {
            return Err(IngestError::InvalidSeries(format!(
                "frame {i} has {} keypoints, layout {} has {parts}",
                f.len(),
                layout.kind()
            )));
        }
        Ok(KeypointSeries { layout, fps, frames })
    }

    pub fn layout(&self) -> SkeletonLayout {
        self.layout
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn frames(&self) -> &[Vec<Keypoint>] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// The time series of one keypoint.
    pub fn track(&self, part: usize) -> Vec<Keypoint> {
        self.frames.iter().map(|f| f[part]).collect()
    }

    /// Applies `f` to every keypoint, keeping layout and rate.
    pub fn map_keypoints(&self, mut f: impl FnMut(Keypoint) -> Keypoint) -> KeypointSeries {
        KeypointSeries {
            layout: self.layout,
            fps: self.fps,
            frames: self.frames.iter().map(|fr| fr.iter().map(|&k| f(k)).collect()).collect(),
        }
    }
}

/// Vertical ground reaction force, one series per platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrfSignal {
    fs: f64,
    t0: f64,
    platforms: Vec<Vec<f64>>,
}

impl GrfSignal {
    pub fn new(fs: f64, t0: f64, platforms: Vec<Vec<f64>>) -> Result<Self, IngestError> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(IngestError::InvalidSeries(format!("fs must be positive, got {fs}")));
        }
        if !t0.is_finite() {
            return Err(IngestError::InvalidSeries("t0 must be finite".into()));
        }
        if platforms.is_empty() {
            return Err(IngestError::InvalidSeries("no platform series".into()));
        }
        let len = platforms[0].len();
        if platforms.iter().any(|p| p.len() != len) {
            return Err(IngestError::InvalidSeries("platform series differ in length".into()));
        }
        if platforms.iter().flatten().any(|v| !v.is_finite()) {
            return Err(IngestError::InvalidSeries("non-finite force sample".into()));
        }
        Ok(GrfSignal { fs, t0, platforms })
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn platforms(&self) -> &[Vec<f64>] {
        &self.platforms
    }

    pub fn platform_count(&self) -> usize {
        self.platforms.len()
    }

    pub fn len(&self) -> usize {
        self.platforms[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Recording metadata for a single trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMeta {
    pub trial_id: String,
    pub subject_id: String,
    pub camera_fps: f64,
    pub resolution: (u32, u32),
}

impl TrialMeta {
    pub fn new(trial_id: impl Into<String>, subject_id: impl Into<String>) -> Self {
        TrialMeta {
            trial_id: trial_id.into(),
            subject_id: subject_id.into(),
            camera_fps: 25.0,
            resolution: (640, 480),
        }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.camera_fps.is_finite() && self.camera_fps > 0.0) {
            return Err(IngestError::InvalidSeries("camera_fps must be positive".into()));
        }
        if self.resolution.0 == 0 || self.resolution.1 == 0 {
            return Err(IngestError::InvalidSeries("resolution must be positive".into()));
        }
        Ok(())
    }
}
