use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::events::write_events_csv;
use crate::ingest::{write_dlc_csv, write_grf_csv, write_openpose_frame, Keypoint, KeypointSeries, LayoutKind, SkeletonLayout};

use super::{SynthError, SynthTrial};

/// DLCCT_16 index to BODY_25 index.
const DLCCT_TO_BODY25: [usize; 16] = [2, 3, 4, 9, 10, 11, 24, 22, 5, 6, 7, 12, 13, 14, 21, 19];
const BODY25_MID_HIP: usize = 8;

/// Re-expresses a DLCCT_16 series as BODY_25. Mid-hip is the mean of the two
/// hips at the lower of their confidences; landmarks absent from DLCCT_16 are
/// missing.
pub fn to_body25(series: &KeypointSeries) -> Result<KeypointSeries, SynthError> {
    if series.layout().kind() != LayoutKind::Dlcct16 {
        return Err(SynthError::Invalid(format!("expected DLCCT_16, got {}", series.layout().kind())));
    }
    let frames = series
        .frames()
        .iter()
        .map(|f| {
            let mut out = vec![Keypoint::MISSING; 25];
            for (src, &dst) in DLCCT_TO_BODY25.iter().enumerate() {
                out[dst] = f[src];
            }
            let (r, l) = (f[3], f[11]);
            out[BODY25_MID_HIP] = Keypoint::new(0.5 * (r.x + l.x), 0.5 * (r.y + l.y), r.confidence.min(l.confidence));
            out
        })
        .collect();
    Ok(KeypointSeries::new(SkeletonLayout::body25(), series.fps(), frames)?)
}

/// Paths written by [`write_trial`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialFiles {
    pub grf: PathBuf,
    pub dlc: PathBuf,
    pub truth: PathBuf,
    pub openpose_dir: Option<PathBuf>,
}

/// Writes `grf.csv`, `dlc.csv`, `truth_events.csv` and optionally one
/// OpenPose JSON per frame under `openpose/`.
pub fn write_trial(trial: &SynthTrial, dir: &Path, with_openpose: bool) -> Result<TrialFiles, SynthError> {
    fs::create_dir_all(dir)?;
    let files = TrialFiles {
        grf: dir.join("grf.csv"),
        dlc: dir.join("dlc.csv"),
        truth: dir.join("truth_events.csv"),
        openpose_dir: with_openpose.then(|| dir.join("openpose")),
    };
    write_grf_csv(&trial.grf, BufWriter::new(File::create(&files.grf)?))?;
    write_dlc_csv(&trial.keypoints, "DLC_synthetic", BufWriter::new(File::create(&files.dlc)?))?;
    write_events_csv(&trial.truth, BufWriter::new(File::create(&files.truth)?))?;
    if let Some(op) = &files.openpose_dir {
        fs::create_dir_all(op)?;
        let body = to_body25(&trial.keypoints)?;
        for (i, frame) in body.frames().iter().enumerate() {
            let f = File::create(op.join(format!("frame_{i:06}_keypoints.json")))?;
            write_openpose_frame(frame, BufWriter::new(f))?;
        }
    }
    Ok(files)
}
