use super::passes::split_monotone;
use super::{
    find_peaks, EventConfig, EventError, EventKind, EventSequence, EventSource, Foot, GaitEvent,
    PassWindow,
};
use crate::dsp::{clean_series, mask_track, FilterSpec, MaskedSeries};
use crate::ingest::{KeypointSeries, Role};

fn clean_x(k: &KeypointSeries, part: usize, cfg: &EventConfig, filter: &FilterSpec) -> Result<Vec<f64>, EventError> {
    let m = mask_track(&k.track(part), cfg.confidence_threshold, k.fps());
    Ok(clean_series(&m.x, filter, cfg.preprocess_order)?)
}

fn require(k: &KeypointSeries, role: Role) -> Result<usize, EventError> {
    k.layout().role(role).ok_or(EventError::MissingPart { layout: k.layout().kind().to_string(), role })
}

/// Cleaned x coordinate of the pelvis reference: the mid-hip keypoint when
/// the layout has one, else the mean of both hips (valid only where both are).
pub fn hip_track(k: &KeypointSeries, cfg: &EventConfig, filter: &FilterSpec) -> Result<Vec<f64>, EventError> {
    let layout = k.layout();
    let masked = if let Some(mid) = layout.role(Role::MidHip) {
        mask_track(&k.track(mid), cfg.confidence_threshold, k.fps()).x
    } else {
        let l = mask_track(&k.track(require(k, Role::LeftHip)?), cfg.confidence_threshold, k.fps()).x;
        let r = mask_track(&k.track(require(k, Role::RightHip)?), cfg.confidence_threshold, k.fps()).x;
        let values = l.values().iter().zip(r.values()).map(|(a, b)| 0.5 * (a + b)).collect();
        let valid = l.valid().iter().zip(r.valid()).map(|(a, b)| *a && *b).collect();
        MaskedSeries::new(values, valid, k.fps())?
    };
    if masked.valid_count() == 0 {
        return Err(EventError::NoHipTrajectory);
    }
    Ok(clean_series(&masked, filter, cfg.preprocess_order)?)
}

/// Kinematic events over the passes found by [`super::segment_passes`].
///
/// A trial with no usable pass (a subject standing still, say) gives an
/// empty sequence rather than an error.
pub fn detect_kinematic_events(
    k: &KeypointSeries,
    cfg: &EventConfig,
    filter: &FilterSpec,
) -> Result<EventSequence, EventError> {
    cfg.validate()?;
    let hip = hip_track(k, cfg, filter)?;
    let passes = split_monotone(&hip, k.fps(), cfg);
    if passes.is_empty() {
        let substituted = k.layout().role(Role::LeftHeel).is_none();
        return Ok(EventSequence::empty().with_ankle_substitution(substituted));
    }
    detect_kinematic_events_in(k, &passes, cfg, filter)
}

/// Heel contacts and toe-offs inside the given passes.
///
/// With progression `p = direction * (part_x - hip_x)`, a heel contact is a
/// local maximum of the heel's `p` and a toe-off a local minimum of the
/// toe's `p`. Extrema need `peak_prominence_px` of prominence and
/// `min_event_separation_s` of spacing. Where a foot shows two events of
/// the same kind in a row, the less prominent one is dropped (the later one
/// on a tie). Layouts without heels and toes use the ankle for both.
pub fn detect_kinematic_events_in(
    k: &KeypointSeries,
    passes: &[PassWindow],
    cfg: &EventConfig,
    filter: &FilterSpec,
) -> Result<EventSequence, EventError> {
    cfg.validate()?;
    if passes.is_empty() {
        return Err(EventError::NoPasses);
    }
    let layout = k.layout();
    let substituted = layout.role(Role::LeftHeel).is_none() && layout.role(Role::RightHeel).is_none();
    let part = |heel: Role, toe: Role, ankle: Role| -> Result<(usize, usize), EventError> {
        if substituted {
            let a = require(k, ankle)?;
            Ok((a, a))
        } else {
            Ok((require(k, heel)?, require(k, toe)?))
        }
    };
    let feet = [
        (Foot::Left, part(Role::LeftHeel, Role::LeftToe, Role::LeftAnkle)?),
        (Foot::Right, part(Role::RightHeel, Role::RightToe, Role::RightAnkle)?),
    ];

    let hip = hip_track(k, cfg, filter)?;
    let fps = k.fps();
    let distance = ((cfg.min_event_separation_s * fps).ceil() as usize).max(1);
    let mut events = Vec::new();
    for (foot, (heel, toe)) in feet {
        let heel_x = clean_x(k, heel, cfg, filter)?;
        let toe_x = if toe == heel { heel_x.clone() } else { clean_x(k, toe, cfg, filter)? };
        for (pass_id, w) in passes.iter().enumerate() {
            let range = w.start_frame..w.end_frame.min(hip.len());
            let dir = w.direction.sign();
            let p_heel: Vec<f64> = range.clone().map(|i| dir * (heel_x[i] - hip[i])).collect();
            let neg_toe: Vec<f64> = range.clone().map(|i| -dir * (toe_x[i] - hip[i])).collect();

            let mut found: Vec<(usize, EventKind, f64)> = Vec::new();
            for pk in find_peaks(&p_heel, cfg.peak_prominence_px, distance) {
                found.push((range.start + pk.index, EventKind::HeelContact, pk.prominence));
            }
            for pk in find_peaks(&neg_toe, cfg.peak_prominence_px, distance) {
                found.push((range.start + pk.index, EventKind::ToeOff, pk.prominence));
            }
            found.sort_by_key(|&(frame, kind, _)| (frame, kind));
            enforce_alternation(&mut found);
            events.extend(found.into_iter().map(|(frame, kind, _)| {
                GaitEvent::new(foot, kind, frame as f64 / fps, EventSource::Kinematic, pass_id as u32)
            }));
        }
    }
    Ok(EventSequence::new(events)?.with_ankle_substitution(substituted))
}

fn enforce_alternation(found: &mut Vec<(usize, EventKind, f64)>) {
    while let Some(i) = found.windows(2).position(|w| w[0].1 == w[1].1) {
        let drop = if found[i + 1].2 > found[i].2 { i } else { i + 1 };
        found.remove(drop);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::design_butterworth;
    use crate::ingest::{Keypoint, SkeletonLayout};

    #[test]
    fn alternation_drops_weaker() {
        let hc = EventKind::HeelContact;
        let to = EventKind::ToeOff;
        let mut f = vec![(1, hc, 5.0), (5, hc, 9.0), (9, to, 3.0), (12, hc, 4.0), (15, to, 2.0), (18, to, 2.0)];
        enforce_alternation(&mut f);
        let frames: Vec<usize> = f.iter().map(|e| e.0).collect();
        assert_eq!(frames, vec![5, 9, 12, 15]);
    }

    #[test]
    fn standing_subject_gives_nothing() {
        let frame: Vec<Keypoint> = (0..16).map(|i| Keypoint::new(300.0 + i as f64, 200.0, 0.95)).collect();
        let k = KeypointSeries::new(SkeletonLayout::dlcct16(), 25.0, vec![frame; 100]).unwrap();
        let spec = design_butterworth(4, 5.0, 25.0).unwrap();
        let s = detect_kinematic_events(&k, &EventConfig::default(), &spec).unwrap();
        assert!(s.is_empty());
        assert!(!s.ankle_substituted());
    }

    #[test]
    fn empty_pass_list_is_an_error() {
        let frame = vec![Keypoint::new(1.0, 1.0, 1.0); 16];
        let k = KeypointSeries::new(SkeletonLayout::dlcct16(), 25.0, vec![frame; 60]).unwrap();
        let spec = design_butterworth(4, 5.0, 25.0).unwrap();
        assert!(matches!(
            detect_kinematic_events_in(&k, &[], &EventConfig::default(), &spec),
            Err(EventError::NoPasses)
        ));
    }

    #[test]
    fn no_hip_samples() {
        let frame = vec![Keypoint::new(1.0, 1.0, 0.1); 25];
        let k = KeypointSeries::new(SkeletonLayout::body25(), 25.0, vec![frame; 60]).unwrap();
        let spec = design_butterworth(4, 5.0, 25.0).unwrap();
        assert!(matches!(
            detect_kinematic_events(&k, &EventConfig::default(), &spec),
            Err(EventError::NoHipTrajectory)
        ));
    }
}
