use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{IngestError, Keypoint, KeypointSeries, SkeletonLayout};

const BODY25_VALUES: usize = 25 * 3;

/// How to pick the tracked subject when a frame holds several detections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PersonSelection {
    /// Largest bounding box over keypoints with positive confidence.
    #[default]
    LargestBoundingBox,
    /// Fixed position in the `people` array; frames without it are empty.
    Index(usize),
}

#[derive(Deserialize)]
struct FrameIn {
    people: Vec<PersonIn>,
}

#[derive(Deserialize)]
struct PersonIn {
    pose_keypoints_2d: Vec<f64>,
}

#[derive(Serialize)]
struct FrameOut<'a> {
    version: f64,
    people: Vec<PersonOut<'a>>,
}

#[derive(Serialize)]
struct PersonOut<'a> {
    person_id: [i32; 1],
    pose_keypoints_2d: &'a [f64],
}

/// Parses a sequence of OpenPose frame files into a BODY_25 series.
///
/// Frames are taken in the order given; the output always has one frame per
/// input stream. A frame with no people becomes a frame of zero-confidence
/// keypoints.
pub fn parse_openpose_frames<I, R>(
    frame_streams: I,
    fps: f64,
    selection: PersonSelection,
) -> Result<KeypointSeries, IngestError>
where
    I: IntoIterator<Item = R>,
    R: Read,
{
    let mut frames = Vec::new();
    for (i, stream) in frame_streams.into_iter().enumerate() {
        let frame: FrameIn = serde_json::from_reader(stream)
            .map_err(|e| IngestError::MalformedFrame { frame: i, reason: e.to_string() })?;
        frames.push(select_person(i, &frame.people, selection)?);
    }
    KeypointSeries::new(SkeletonLayout::body25(), fps, frames)
}

fn select_person(
    frame: usize,
    people: &[PersonIn],
    selection: PersonSelection,
) -> Result<Vec<Keypoint>, IngestError> {
    let chosen = match selection {
        PersonSelection::Index(k) => people.get(k),
        PersonSelection::LargestBoundingBox => {
            let mut best: Option<(usize, f64)> = None;
            for (i, p) in people.iter().enumerate() {
                let area = if p.pose_keypoints_2d.len() == BODY25_VALUES {
                    bounding_box_area(&p.pose_keypoints_2d)
                } else {
                    -1.0
                };
                if best.is_none_or(|(_, a)| area > a) {
                    best = Some((i, area));
                }
            }
            best.map(|(i, _)| &people[i])
        }
    };
    let Some(person) = chosen else {
        return Ok(vec![Keypoint::MISSING; 25]);
    };
    let values = &person.pose_keypoints_2d;
    if values.len() % 3 != 0 || values.len() != BODY25_VALUES {
        return Err(IngestError::KeypointLength { frame, len: values.len() });
    }
    Ok(values.chunks_exact(3).map(|c| Keypoint::new(c[0], c[1], c[2])).collect())
}

fn bounding_box_area(values: &[f64]) -> f64 {
    let mut min = (f64::INFINITY, f64::INFINITY);
    let mut max = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut any = false;
    for c in values.chunks_exact(3) {
        if c[2] > 0.0 && c[0].is_finite() && c[1].is_finite() {
            any = true;
            min = (min.0.min(c[0]), min.1.min(c[1]));
            max = (max.0.max(c[0]), max.1.max(c[1]));
        }
    }
    if any {
        (max.0 - min.0) * (max.1 - min.1)
    } else {
        0.0
    }
}

/// Writes one frame in OpenPose output form. An all-zero frame is written
/// with an empty `people` array, which is how OpenPose reports no detection.
pub fn write_openpose_frame<W: Write>(keypoints: &[Keypoint], w: W) -> Result<(), IngestError> {
    if keypoints.len() != 25 {
        return Err(IngestError::InvalidSeries(format!(
            "BODY_25 frame needs 25 keypoints, got {}",
            keypoints.len()
        )));
    }
    let flat: Vec<f64> = keypoints.iter().flat_map(|k| [k.x, k.y, k.confidence]).collect();
    let empty = flat.iter().all(|&v| v == 0.0);
    let frame = FrameOut {
        version: 1.3,
        people: if empty {
            Vec::new()
        } else {
            vec![PersonOut { person_id: [-1], pose_keypoints_2d: &flat }]
        },
    };
    serde_json::to_writer(w, &frame)
        .map_err(|e| IngestError::InvalidSeries(format!("cannot serialise frame: {e}")))
}
