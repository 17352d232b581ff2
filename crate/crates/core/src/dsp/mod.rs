//! Zero-phase Butterworth filtering, confidence masking and gap filling.

mod butterworth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Keypoint;

pub use butterworth::{design_butterworth, Biquad, FilterSpec};

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("filter order must be 2, 4, 6 or 8, got {0}")]
    InvalidOrder(usize),
    #[error("cutoff {cutoff_hz} Hz must lie strictly between 0 and Nyquist ({fs_hz} Hz sampling)")]
    InvalidCutoff { cutoff_hz: f64, fs_hz: f64 },
    #[error("series of {len} samples is too short, filtering needs more than {needed}")]
    TooShort { len: usize, needed: usize },
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("no valid samples to interpolate from")]
    NoValidSamples,
    #[error("values and mask differ in length ({values} vs {mask})")]
    LengthMismatch { values: usize, mask: usize },
}

/// Forward-backward filtering through the cascade.
///
/// The input is extended at both ends by odd reflection of
/// [`FilterSpec::pad_len`] samples and each pass starts from the steady
/// state of its first sample, so a constant input comes out unchanged.
pub fn filtfilt(x: &[f64], spec: &FilterSpec) -> Result<Vec<f64>, DspError> {
    let pad = spec.pad_len();
    if x.len() <= pad {
        return Err(DspError::TooShort { len: x.len(), needed: pad });
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(DspError::NonFinite(i));
    }
    let n = x.len();
    let (first, last) = (x[0], x[n - 1]);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * last - x[n - 1 - i]));

    run_from_steady_state(spec, &mut ext);
    ext.reverse();
    run_from_steady_state(spec, &mut ext);
    ext.reverse();
    Ok(ext[pad..pad + n].to_vec())
}

fn run_from_steady_state(spec: &FilterSpec, y: &mut [f64]) {
    let x0 = y[0];
    let mut level = x0;
    for s in spec.sections() {
        let [z1, z2] = s.step_state();
        let mut z = [z1 * level, z2 * level];
        level *= s.dc_gain();
        for v in y.iter_mut() {
            *v = s.tick(*v, &mut z);
        }
    }
}

/// A series with a per-sample validity flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedSeries {
    values: Vec<f64>,
    valid: Vec<bool>,
    fs: f64,
}

impl MaskedSeries {
    pub fn new(values: Vec<f64>, valid: Vec<bool>, fs: f64) -> Result<Self, DspError> {
        if values.len() != valid.len() {
            return Err(DspError::LengthMismatch { values: values.len(), mask: valid.len() });
        }
        Ok(MaskedSeries { values, valid, fs })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// Masked x and y coordinates of one keypoint.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedTrack {
    pub x: MaskedSeries,
    pub y: MaskedSeries,
}

/// Marks samples valid when `confidence >= threshold` (and the sample is
/// well formed). Values pass through unchanged.
pub fn mask_track(track: &[Keypoint], threshold: f64, fs: f64) -> MaskedTrack {
    let valid: Vec<bool> = track.iter().map(|k| k.is_valid() && k.confidence >= threshold).collect();
    MaskedTrack {
        x: MaskedSeries { values: track.iter().map(|k| k.x).collect(), valid: valid.clone(), fs },
        y: MaskedSeries { values: track.iter().map(|k| k.y).collect(), valid, fs },
    }
}

/// [`mask_track`] for every part of a series, in layout order.
pub fn mask_low_confidence(series: &crate::ingest::KeypointSeries, threshold: f64) -> Vec<MaskedTrack> {
    (0..series.layout().part_count())
        .map(|p| mask_track(&series.track(p), threshold, series.fps()))
        .collect()
}

/// Fills invalid samples: linearly between valid neighbours, and by holding
/// the nearest valid value before the first and after the last one.
pub fn interpolate_gaps(m: &MaskedSeries) -> Result<Vec<f64>, DspError> {
    let idx: Vec<usize> = (0..m.values.len()).filter(|&i| m.valid[i]).collect();
    let (Some(&first), Some(&last)) = (idx.first(), idx.last()) else {
        return Err(DspError::NoValidSamples);
    };
    let v = &m.values;
    let mut out = v.clone();
    out[..first].fill(v[first]);
    out[last + 1..].fill(v[last]);
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = (b - a) as f64;
        for (i, slot) in out.iter_mut().enumerate().take(b).skip(a + 1) {
            let t = (i - a) as f64 / span;
            *slot = v[a] + (v[b] - v[a]) * t;
        }
    }
    Ok(out)
}

/// Order of the kinematic cleaning steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessOrder {
    /// mask, interpolate, then filter the gap-free series
    #[default]
    MaskFirst,
    /// filter the raw coordinates, then mask and interpolate
    FilterFirst,
}

/// Cleans one coordinate series: confidence mask, gap interpolation and
/// zero-phase low-pass, in the requested order.
pub fn clean_series(
    raw: &MaskedSeries,
    filter: &FilterSpec,
    order: PreprocessOrder,
) -> Result<Vec<f64>, DspError> {
    match order {
        PreprocessOrder::MaskFirst => filtfilt(&interpolate_gaps(raw)?, filter),
        PreprocessOrder::FilterFirst => {
            let filtered = filtfilt(&raw.values, filter)?;
            interpolate_gaps(&MaskedSeries::new(filtered, raw.valid.clone(), raw.fs)?)
        }
    }
}
