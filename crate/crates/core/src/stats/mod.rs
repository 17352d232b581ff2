//! Agreement statistics between an estimating system and a reference.

mod shapiro;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{mean, sample_sd};

pub use shapiro::{shapiro_wilk, NormalityResult};

/// Multiplier of the difference SD for 95% limits of agreement.
pub const LOA_Z: f64 = 1.96;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("sample size {n} outside the supported range {min}..={max}")]
    SampleSize { n: usize, min: usize, max: usize },
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("label sets cover different points: {0}")]
    IndexMismatch(String),
}

fn check_pair(x: &[f64], y: &[f64], needed: usize) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < needed {
        return Err(StatsError::TooFew { needed, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Per-video values of an estimating system and of the reference, aligned
/// by video id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSeries {
    est: Vec<f64>,
    reference: Vec<f64>,
    video_ids: Vec<String>,
}

impl PairedSeries {
    pub fn new(est: Vec<f64>, reference: Vec<f64>, video_ids: Vec<String>) -> Result<Self, StatsError> {
        check_pair(&est, &reference, 1)?;
        if video_ids.len() != est.len() {
            return Err(StatsError::LengthMismatch(est.len(), video_ids.len()));
        }
        Ok(PairedSeries { est, reference, video_ids })
    }

    /// Pairs with ids `0..n`.
    pub fn unlabelled(est: Vec<f64>, reference: Vec<f64>) -> Result<Self, StatsError> {
        let ids = (0..est.len()).map(|i| i.to_string()).collect();
        PairedSeries::new(est, reference, ids)
    }

    pub fn est(&self) -> &[f64] {
        &self.est
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn video_ids(&self) -> &[String] {
        &self.video_ids
    }

    pub fn len(&self) -> usize {
        self.est.len()
    }

    pub fn is_empty(&self) -> bool {
        self.est.is_empty()
    }

    /// The same pairs with the roles of the two systems exchanged.
    pub fn swapped(&self) -> PairedSeries {
        PairedSeries {
            est: self.reference.clone(),
            reference: self.est.clone(),
            video_ids: self.video_ids.clone(),
        }
    }
}

/// Product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y, 3)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Descriptive band for a correlation coefficient, for report annotation.
pub fn correlation_strength(r: f64) -> &'static str {
    let a = r.abs();
    if a > 0.7 {
        "strong"
    } else if a < 0.5 {
        "low"
    } else {
        "moderate"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltmanPoint {
    pub pair_mean: f64,
    pub pair_diff: f64,
    pub video_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltmanResult {
    pub bias: f64,
    pub sd_diff: f64,
    pub loa_lower: f64,
    pub loa_upper: f64,
    pub points: Vec<BlandAltmanPoint>,
}

impl BlandAltmanResult {
    pub fn record(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("bias", self.bias),
            ("sd_diff", self.sd_diff),
            ("loa_lower", self.loa_lower),
            ("loa_upper", self.loa_upper),
        ]
    }
}

/// Mean difference `est - ref` with limits `bias ± 1.96 sd`.
pub fn bland_altman(p: &PairedSeries) -> Result<BlandAltmanResult, StatsError> {
    if p.len() < 2 {
        return Err(StatsError::TooFew { needed: 2, got: p.len() });
    }
    let diffs: Vec<f64> = p.est.iter().zip(&p.reference).map(|(e, r)| e - r).collect();
    let bias = mean(&diffs);
    let sd_diff = sample_sd(&diffs);
    let half = LOA_Z * sd_diff;
    let points = p
        .est
        .iter()
        .zip(&p.reference)
        .zip(&diffs)
        .zip(&p.video_ids)
        .map(|(((e, r), d), id)| BlandAltmanPoint { pair_mean: 0.5 * (e + r), pair_diff: *d, video_id: id.clone() })
        .collect();
    Ok(BlandAltmanResult { bias, sd_diff, loa_lower: bias - half, loa_upper: bias + half, points })
}

/// Accuracy and precision of the per-video absolute error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsErrorSummary {
    pub accuracy_mu: f64,
    pub precision_sigma: f64,
    pub errors: Vec<f64>,
}

impl AbsErrorSummary {
    pub fn record(&self) -> Vec<(&'static str, f64)> {
        vec![("accuracy_mu", self.accuracy_mu), ("precision_sigma", self.precision_sigma)]
    }
}

/// `|est - ref|` per video, then mean (accuracy) and sample SD (precision).
pub fn absolute_errors(p: &PairedSeries) -> Result<AbsErrorSummary, StatsError> {
    if p.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    let errors: Vec<f64> = p.est.iter().zip(&p.reference).map(|(e, r)| (e - r).abs()).collect();
    Ok(AbsErrorSummary { accuracy_mu: mean(&errors), precision_sigma: sample_sd(&errors), errors })
}

/// Landmark annotations keyed by (image, keypoint), in pixels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelSet {
    points: BTreeMap<(String, String), (f64, f64)>,
}

impl LabelSet {
    pub fn new() -> Self {
        LabelSet::default()
    }

    pub fn insert(&mut self, image: impl Into<String>, keypoint: impl Into<String>, x: f64, y: f64) {
        self.points.insert((image.into(), keypoint.into()), (x, y));
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), &(f64, f64))> {
        self.points.iter()
    }
}

impl FromIterator<(String, String, f64, f64)> for LabelSet {
    fn from_iter<I: IntoIterator<Item = (String, String, f64, f64)>>(iter: I) -> Self {
        let mut s = LabelSet::new();
        for (img, kp, x, y) in iter {
            s.insert(img, kp, x, y);
        }
        s
    }
}

/// Mean Euclidean distance between corresponding labels of two sets.
pub fn mae_euclidean(a: &LabelSet, b: &LabelSet) -> Result<f64, StatsError> {
    if a.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    if let Some(((img, kp), _)) = a.points.iter().find(|(k, _)| !b.points.contains_key(*k)) {
        return Err(StatsError::IndexMismatch(format!("{img}/{kp} missing from the second set")));
    }
    if let Some(((img, kp), _)) = b.points.iter().find(|(k, _)| !a.points.contains_key(*k)) {
        return Err(StatsError::IndexMismatch(format!("{img}/{kp} missing from the first set")));
    }
    let total: f64 = a
        .points
        .iter()
        .map(|(k, (x, y))| {
            let (u, v) = b.points[k];
            (x - u).hypot(y - v)
        })
        .sum();
    Ok(total / a.len() as f64)
}
