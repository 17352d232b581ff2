use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::{design_butterworth, DspError, FilterSpec};
use crate::events::EventConfig;
use crate::params::{Aggregation, DoubleSupportMode};

use super::ReportError;

/// Analysis settings, read from a flat TOML file. Event detection keys sit
/// beside the filter and aggregation keys; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    #[serde(flatten)]
    pub events: EventConfig,
    pub grf_filter_order: usize,
    pub grf_cutoff_hz: f64,
    pub kin_filter_order: usize,
    pub kin_cutoff_hz: f64,
    /// Camera rate for keypoint entries without `fps`.
    pub default_fps: f64,
    pub double_support: DoubleSupportMode,
    pub aggregation: Aggregation,
    /// Also render SVG plots next to the plot CSVs.
    pub plot_svg: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            events: EventConfig::default(),
            grf_filter_order: 2,
            grf_cutoff_hz: 20.0,
            kin_filter_order: 2,
            kin_cutoff_hz: 5.0,
            default_fps: 25.0,
            double_support: DoubleSupportMode::Total,
            aggregation: Aggregation::Pooled,
            plot_svg: false,
        }
    }
}

impl AnalysisConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ReportError> {
        let table: toml::Table = toml::from_str(text).map_err(|e| ReportError::Config(e.to_string()))?;
        // serde cannot deny unknown fields through a flattened struct
        let known = toml::Table::try_from(AnalysisConfig::default()).expect("config serialises");
        if let Some(k) = table.keys().find(|k| !known.contains_key(*k)) {
            return Err(ReportError::Config(format!("unknown key {k:?}")));
        }
        let c: AnalysisConfig = table.try_into().map_err(|e: toml::de::Error| ReportError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ReportError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        self.events.validate().map_err(|e| ReportError::Config(e.to_string()))?;
        if !(self.default_fps.is_finite() && self.default_fps > 0.0) {
            return Err(ReportError::Config(format!("default_fps must be positive, got {}", self.default_fps)));
        }
        // cutoffs are checked against the actual rates per trial; catch the obvious here
        for (name, order, cutoff) in [
            ("grf", self.grf_filter_order, self.grf_cutoff_hz),
            ("kin", self.kin_filter_order, self.kin_cutoff_hz),
        ] {
            if order == 0 || !(cutoff.is_finite() && cutoff > 0.0) {
                return Err(ReportError::Config(format!("{name} filter needs order >= 1 and a positive cutoff")));
            }
        }
        Ok(())
    }

    pub fn grf_filter(&self, fs: f64) -> Result<FilterSpec, DspError> {
        design_butterworth(self.grf_filter_order, self.grf_cutoff_hz, fs)
    }

    pub fn kin_filter(&self, fps: f64) -> Result<FilterSpec, DspError> {
        design_butterworth(self.kin_filter_order, self.kin_cutoff_hz, fps)
    }
}
