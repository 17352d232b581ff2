use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::events::Foot;

use super::ReportError;

/// System tag of the force-platform reference.
pub const REFERENCE_SYSTEM: &str = "Platforms";

/// One recording of one video by one system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialEntry {
    /// Video identifier shared by every system that processed the video.
    pub trial_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_id: Option<String>,
    /// `Platforms` for the force reference, any other tag for a pose system.
    pub system: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grf: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dlc: Option<PathBuf>,
    /// Directory of per-frame OpenPose JSON files, read in file-name order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub openpose_dir: Option<PathBuf>,
    /// Camera rate for keypoint input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
    /// Overrides the force sampling rate inferred from the time column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_width_px: Option<f64>,
    /// Force only: foot of the first contact in every pass.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_foot: Option<Foot>,
    /// Force only: first foot of each pass in turn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pass_first_feet: Option<Vec<Foot>>,
    /// Force only: fixed foot per platform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub platform_feet: Option<Vec<Foot>>,
    /// Force only: attribute feet from this system's kinematic events for
    /// the same video.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feet_from: Option<String>,
}

/// Which reader a trial entry needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    Grf,
    Dlc,
    OpenPose,
}

impl TrialEntry {
    pub fn new(trial_id: impl Into<String>, system: impl Into<String>) -> Self {
        TrialEntry {
            trial_id: trial_id.into(),
            subject_id: None,
            system: system.into(),
            grf: None,
            dlc: None,
            openpose_dir: None,
            fps: None,
            fs: None,
            image_width_px: None,
            first_foot: None,
            pass_first_feet: None,
            platform_feet: None,
            feet_from: None,
        }
    }

    pub fn is_reference(&self) -> bool {
        self.system == REFERENCE_SYSTEM
    }

    pub fn input(&self) -> Option<(InputKind, &Path)> {
        match (&self.grf, &self.dlc, &self.openpose_dir) {
            (Some(p), None, None) => Some((InputKind::Grf, p)),
            (None, Some(p), None) => Some((InputKind::Dlc, p)),
            (None, None, Some(p)) => Some((InputKind::OpenPose, p)),
            _ => None,
        }
    }

    fn label(&self) -> String {
        format!("{}/{}", self.system, self.trial_id)
    }

    fn validate(&self) -> Result<(), ReportError> {
        let bad = |reason: String| ReportError::Manifest(format!("{}: {reason}", self.label()));
        if self.trial_id.trim().is_empty() || self.system.trim().is_empty() {
            return Err(ReportError::Manifest("trial_id and system must be non-empty".into()));
        }
        // tags end up in file names, ids in CSV cells
        if !self.system.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) {
            return Err(bad("system tags may use letters, digits, '_', '-' and '.' only".into()));
        }
        if self.trial_id.contains([',', '"', '\n', '\r']) {
            return Err(bad("trial_id may not contain commas, quotes or line breaks".into()));
        }
        let Some((kind, _)) = self.input() else {
            return Err(bad("exactly one of grf, dlc, openpose_dir is required".into()));
        };
        if self.is_reference() != (kind == InputKind::Grf) {
            return Err(bad(format!("the {REFERENCE_SYSTEM} system takes force input and only it does")));
        }
        for (name, v) in [("fps", self.fps), ("fs", self.fs), ("image_width_px", self.image_width_px)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(bad(format!("{name} must be positive, got {v}")));
                }
            }
        }
        let foot_keys = [
            self.first_foot.is_some(),
            self.pass_first_feet.is_some(),
            self.platform_feet.is_some(),
            self.feet_from.is_some(),
        ];
        if foot_keys.iter().filter(|&&k| k).count() > 1 {
            return Err(bad("give at most one of first_foot, pass_first_feet, platform_feet, feet_from".into()));
        }
        if kind != InputKind::Grf && foot_keys.iter().any(|&k| k) {
            return Err(bad("foot attribution keys apply to force input only".into()));
        }
        if kind == InputKind::Grf && self.fps.is_some() {
            return Err(bad("fps applies to keypoint input; use fs for force".into()));
        }
        Ok(())
    }
}

/// A batch of trials. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(rename = "trial", default)]
    pub trials: Vec<TrialEntry>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl Manifest {
    pub fn new(trials: Vec<TrialEntry>, base_dir: impl Into<PathBuf>) -> Result<Self, ReportError> {
        let m = Manifest { trials, base_dir: base_dir.into() };
        m.validate()?;
        Ok(m)
    }

    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ReportError> {
        let mut m: Manifest = toml::from_str(text).map_err(|e| ReportError::Manifest(e.to_string()))?;
        m.base_dir = base_dir.into();
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ReportError::Manifest(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("manifest serialises")
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self) -> Result<(), ReportError> {
        if self.trials.is_empty() {
            return Err(ReportError::Manifest("no [[trial]] entries".into()));
        }
        let mut seen = BTreeSet::new();
        for t in &self.trials {
            t.validate()?;
            if !seen.insert((t.system.as_str(), t.trial_id.as_str())) {
                return Err(ReportError::Manifest(format!("duplicate trial_id {} for system {}", t.trial_id, t.system)));
            }
        }
        for t in &self.trials {
            if let Some(src) = &t.feet_from {
                if !seen.contains(&(src.as_str(), t.trial_id.as_str())) {
                    return Err(ReportError::Manifest(format!(
                        "{}: feet_from names {src}, which has no entry for this video",
                        t.label()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Fails on the first input path that does not exist.
    pub fn check_paths(&self) -> Result<(), ReportError> {
        for t in &self.trials {
            let (_, p) = t.input().expect("validated");
            let full = self.resolve(p);
            if !full.exists() {
                return Err(ReportError::MissingInput { trial: t.label(), path: full });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TEXT: &str = r#"
[[trial]]
trial_id = "v01"
system = "Platforms"
grf = "v01/grf.csv"
first_foot = "left"

[[trial]]
trial_id = "v01"
system = "DLCCT_16"
dlc = "v01/dlc.csv"
fps = 25
"#;

    #[test]
    fn parses_and_resolves() {
        let m = Manifest::from_toml_str(TEXT, "/data").unwrap();
        assert_eq!(m.trials.len(), 2);
        assert_eq!(m.trials[0].first_foot, Some(Foot::Left));
        assert_eq!(m.resolve(m.trials[1].dlc.as_ref().unwrap()), PathBuf::from("/data/v01/dlc.csv"));
        let again = Manifest::from_toml_str(&m.to_toml_string(), "/data").unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn rejects_bad_entries() {
        let dup = format!("{TEXT}\n[[trial]]\ntrial_id = \"v01\"\nsystem = \"DLCCT_16\"\ndlc = \"x.csv\"\n");
        assert!(matches!(Manifest::from_toml_str(&dup, "."), Err(ReportError::Manifest(m)) if m.contains("duplicate")));
        let two_inputs = "[[trial]]\ntrial_id = \"a\"\nsystem = \"OPPT\"\ndlc = \"x\"\nopenpose_dir = \"y\"\n";
        assert!(Manifest::from_toml_str(two_inputs, ".").is_err());
        let force_system = "[[trial]]\ntrial_id = \"a\"\nsystem = \"OPPT\"\ngrf = \"x\"\n";
        assert!(Manifest::from_toml_str(force_system, ".").is_err());
        let unknown = "[[trial]]\ntrial_id = \"a\"\nsystem = \"OPPT\"\ndlc = \"x\"\ncolour = 1\n";
        assert!(Manifest::from_toml_str(unknown, ".").is_err());
        assert!(Manifest::from_toml_str("", ".").is_err());
        let feet = "[[trial]]\ntrial_id = \"a\"\nsystem = \"Platforms\"\ngrf = \"x\"\nfeet_from = \"OPPT\"\n";
        assert!(Manifest::from_toml_str(feet, ".").is_err());
    }

    #[test]
    fn missing_paths_are_reported() {
        let m = Manifest::from_toml_str(TEXT, "/nonexistent").unwrap();
        assert!(matches!(m.check_paths(), Err(ReportError::MissingInput { .. })));
    }
}
