use std::path::{Path, PathBuf};

use crate::synth::{generate_trial, study_params, write_trial, SynthError, SynthParams};

use super::{Manifest, ReportError, TrialEntry, REFERENCE_SYSTEM};

/// Generates `n` synthetic trials under `dir` and writes a `manifest.toml`
/// pairing each trial's force file with its DLC file (system `DLCCT_16`)
/// and, with `with_openpose`, its OpenPose frames (system `OPPT`).
pub fn write_synth_study(base: &SynthParams, n: usize, dir: &Path, with_openpose: bool) -> Result<PathBuf, ReportError> {
    let synth_err = |id: &str, e: SynthError| ReportError::Pipeline { trial: id.to_string(), reason: e.to_string() };
    let mut entries = Vec::new();
    for (i, p) in study_params(base, n).into_iter().enumerate() {
        let id = format!("trial_{i:02}");
        let trial = generate_trial(&p).map_err(|e| synth_err(&id, e))?;
        let files = write_trial(&trial, &dir.join(&id), with_openpose).map_err(|e| synth_err(&id, e))?;
        let rel = |f: &Path| f.strip_prefix(dir).expect("written under dir").to_path_buf();

        let mut force = TrialEntry::new(&id, REFERENCE_SYSTEM);
        force.subject_id = Some("synthetic".into());
        force.grf = Some(rel(&files.grf));
        force.first_foot = Some(p.first_foot);
        entries.push(force);

        let mut dlc = TrialEntry::new(&id, "DLCCT_16");
        dlc.subject_id = Some("synthetic".into());
        dlc.dlc = Some(rel(&files.dlc));
        dlc.fps = Some(p.cam_fps);
        entries.push(dlc);

        if let Some(op) = &files.openpose_dir {
            let mut e = TrialEntry::new(&id, "OPPT");
            e.subject_id = Some("synthetic".into());
            e.openpose_dir = Some(rel(op));
            e.fps = Some(p.cam_fps);
            entries.push(e);
        }
    }
    let manifest = Manifest::new(entries, dir)?;
    let path = dir.join("manifest.toml");
    std::fs::write(&path, manifest.to_toml_string())?;
    Ok(path)
}
