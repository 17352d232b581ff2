use serde::{Deserialize, Serialize};

use super::{EventConfig, EventError, EventKind, EventSequence, EventSource, Foot, GaitEvent};
use crate::dsp::{filtfilt, FilterSpec};
use crate::ingest::GrfSignal;

/// How force stances are attributed to feet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FootMap {
    /// Feet alternate in order of contact, every pass starting with `first`.
    Alternating { first: Foot },
    /// Feet alternate in order of contact; entry `k` is the first foot of pass `k`.
    PerPass(Vec<Foot>),
    /// A fixed foot per platform.
    Platforms(Vec<Foot>),
    /// Each stance takes the foot of the nearest kinematic event of the same kind.
    NearestKinematic(EventSequence),
}

impl Default for FootMap {
    fn default() -> Self {
        FootMap::Alternating { first: Foot::Right }
    }
}

#[derive(Debug, Clone, Copy)]
struct Stance {
    platform: usize,
    /// first supra-threshold sample, `None` when the run starts the record
    start: Option<usize>,
    /// first sample back at or below threshold, `None` when the run ends the record
    end: Option<usize>,
}

impl Stance {
    fn key(&self) -> usize {
        self.start.unwrap_or(0)
    }
}

/// Heel contacts and toe-offs from vertical force.
///
/// Each platform is optionally low-passed with `filter`, then every run of
/// samples strictly above `grf_threshold_n` is a stance: its first sample is
/// the heel contact and the first sample back at or below the threshold is
/// the toe-off. Runs shorter than `min_stance_s` are discarded. A run cut by
/// the start of the record yields only its toe-off, one cut by the end only
/// its heel contact.
///
/// Stances separated by more than `force_pass_gap_s` belong to different
/// passes. Feet are attributed with `feet`.
pub fn detect_grf_events(
    g: &GrfSignal,
    cfg: &EventConfig,
    filter: Option<&FilterSpec>,
    feet: &FootMap,
) -> Result<EventSequence, EventError> {
    cfg.validate()?;
    let fs = g.fs();
    let min_len = cfg.min_stance_s * fs;
    let mut stances = Vec::new();
    let mut any_above = false;
    for (platform, raw) in g.platforms().iter().enumerate() {
        let filtered;
        let v = match filter {
            Some(spec) => {
                filtered = filtfilt(raw, spec)?;
                &filtered
            }
            None => raw,
        };
        let mut i = 0;
        while i < v.len() {
            if v[i] > cfg.grf_threshold_n {
                any_above = true;
                let s = i;
                while i < v.len() && v[i] > cfg.grf_threshold_n {
                    i += 1;
                }
                if ((i - s) as f64) < min_len - 1e-9 {
                    continue;
                }
                stances.push(Stance {
                    platform,
                    start: (s > 0).then_some(s),
                    end: (i < v.len()).then_some(i),
                });
            } else {
                i += 1;
            }
        }
    }
    if !any_above {
        return Err(EventError::NoSupraThreshold { threshold_n: cfg.grf_threshold_n });
    }
    stances.sort_by_key(|s| (s.key(), s.platform));

    let gap = cfg.force_pass_gap_s * fs;
    let mut pass_of = Vec::with_capacity(stances.len());
    let mut pass = 0u32;
    for (k, s) in stances.iter().enumerate() {
        if k > 0 {
            let prev = &stances[k - 1];
            if let (Some(end), Some(start)) = (prev.end, s.start) {
                if start as f64 - end as f64 > gap {
                    pass += 1;
                }
            }
        }
        pass_of.push(pass);
    }

    let time = |idx: usize| g.t0() + idx as f64 / fs;
    let foot_of = assign_feet(&stances, &pass_of, feet, g.platform_count(), &time)?;
    check_overlap(&stances, &foot_of)?;

    let mut events = Vec::new();
    for ((s, &foot), &pass_id) in stances.iter().zip(&foot_of).zip(&pass_of) {
        if let Some(i) = s.start {
            events.push(GaitEvent::new(foot, EventKind::HeelContact, time(i), EventSource::Force, pass_id));
        }
        if let Some(i) = s.end {
            events.push(GaitEvent::new(foot, EventKind::ToeOff, time(i), EventSource::Force, pass_id));
        }
    }
    EventSequence::new(events)
}

fn assign_feet(
    stances: &[Stance],
    pass_of: &[u32],
    feet: &FootMap,
    platforms: usize,
    time: &dyn Fn(usize) -> f64,
) -> Result<Vec<Foot>, EventError> {
    let alternate = |first_of_pass: &dyn Fn(u32) -> Result<Foot, EventError>| {
        let mut out = Vec::with_capacity(stances.len());
        let mut k = 0;
        for (i, &p) in pass_of.iter().enumerate() {
            if i == 0 || pass_of[i - 1] != p {
                k = 0;
            }
            let first = first_of_pass(p)?;
            out.push(if k % 2 == 0 { first } else { first.other() });
            k += 1;
        }
        Ok(out)
    };
    match feet {
        FootMap::Alternating { first } => alternate(&|_| Ok(*first)),
        FootMap::PerPass(firsts) => alternate(&|p| {
            firsts.get(p as usize).copied().ok_or_else(|| {
                EventError::FootMapConflict(format!(
                    "no first foot given for pass {p} ({} given)",
                    firsts.len()
                ))
            })
        }),
        FootMap::Platforms(map) => {
            if map.len() != platforms {
                return Err(EventError::FootMapConflict(format!(
                    "{} feet given for {platforms} platforms",
                    map.len()
                )));
            }
            Ok(stances.iter().map(|s| map[s.platform]).collect())
        }
        FootMap::NearestKinematic(kin) => stances
            .iter()
            .map(|s| {
                let (kind, t) = match (s.start, s.end) {
                    (Some(i), _) => (EventKind::HeelContact, time(i)),
                    (None, Some(i)) => (EventKind::ToeOff, time(i)),
                    (None, None) => (EventKind::HeelContact, time(0)),
                };
                kin.events()
                    .iter()
                    .filter(|e| e.kind == kind)
                    .min_by(|a, b| (a.time_s - t).abs().total_cmp(&(b.time_s - t).abs()))
                    .map(|e| e.foot)
                    .ok_or_else(|| {
                        EventError::FootMapConflict("no kinematic events to attribute feet from".into())
                    })
            })
            .collect(),
    }
}

fn check_overlap(stances: &[Stance], foot_of: &[Foot]) -> Result<(), EventError> {
    for foot in [Foot::Left, Foot::Right] {
        let mine: Vec<&Stance> =
            stances.iter().zip(foot_of).filter(|(_, &f)| f == foot).map(|(s, _)| s).collect();
        for w in mine.windows(2) {
            let ok = matches!((w[0].end, w[1].start), (Some(e), Some(s)) if e <= s);
            if !ok {
                return Err(EventError::FootMapConflict(format!(
                    "{foot} stances on platforms {} and {} overlap",
                    w[0].platform + 1,
                    w[1].platform + 1
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trapezoid(len: usize, up: usize, down: usize) -> Vec<f64> {
        (0..len)
            .map(|i| {
                if i < up - 3 || i >= down {
                    0.0
                } else if i < up + 10 {
                    // ramp crossing 10 N between samples up-1 and up
                    (i + 3 - up) as f64 * 4.0 + 2.0
                } else {
                    700.0
                }
            })
            .collect()
    }

    #[test]
    fn noiseless_trapezoid() {
        let f = trapezoid(2000, 1003, 1700);
        assert!(f[1002] <= 10.0 && f[1003] > 10.0 && f[1699] > 10.0 && f[1700] <= 10.0);
        let g = GrfSignal::new(1000.0, 0.0, vec![f]).unwrap();
        let s = detect_grf_events(&g, &EventConfig::default(), None, &FootMap::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.events()[0].time_s, 1.003);
        assert_eq!(s.events()[0].kind, EventKind::HeelContact);
        assert_eq!(s.events()[1].time_s, 1.7);
    }

    #[test]
    fn short_run_debounced() {
        let mut f = vec![0.0; 1000];
        f[400..450].fill(300.0);
        let g = GrfSignal::new(1000.0, 0.0, vec![f]).unwrap();
        let s = detect_grf_events(&g, &EventConfig::default(), None, &FootMap::default()).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn nothing_above_threshold() {
        let g = GrfSignal::new(1000.0, 0.0, vec![vec![3.0; 500]]).unwrap();
        let e = detect_grf_events(&g, &EventConfig::default(), None, &FootMap::default()).unwrap_err();
        assert!(matches!(e, EventError::NoSupraThreshold { .. }));
    }

    fn two_platforms() -> GrfSignal {
        let mut a = vec![0.0; 3000];
        let mut b = vec![0.0; 3000];
        a[500..1200].fill(600.0);
        b[1050..1750].fill(600.0);
        a[1600..2300].fill(600.0);
        GrfSignal::new(1000.0, 0.0, vec![a, b]).unwrap()
    }

    #[test]
    fn alternating_attribution() {
        let s = detect_grf_events(&two_platforms(), &EventConfig::default(), None, &FootMap::default())
            .unwrap();
        let hc: Vec<(Foot, f64)> = s.heel_contacts().map(|e| (e.foot, e.time_s)).collect();
        assert_eq!(hc, vec![(Foot::Right, 0.5), (Foot::Left, 1.05), (Foot::Right, 1.6)]);
    }

    #[test]
    fn platform_map_conflicts() {
        let g = two_platforms();
        let cfg = EventConfig::default();
        // platform 1 carries two right stances while platform 2 is also right
        let e = detect_grf_events(&g, &cfg, None, &FootMap::Platforms(vec![Foot::Right, Foot::Right]))
            .unwrap_err();
        assert!(matches!(e, EventError::FootMapConflict(_)));
        let e = detect_grf_events(&g, &cfg, None, &FootMap::Platforms(vec![Foot::Left])).unwrap_err();
        assert!(matches!(e, EventError::FootMapConflict(_)));
        assert!(detect_grf_events(&g, &cfg, None, &FootMap::Platforms(vec![Foot::Left, Foot::Right])).is_ok());
    }

    #[test]
    fn censored_runs() {
        let mut f = vec![0.0; 2000];
        f[..300].fill(500.0);
        f[1500..].fill(500.0);
        let g = GrfSignal::new(1000.0, 0.0, vec![f]).unwrap();
        let s = detect_grf_events(&g, &EventConfig::default(), None, &FootMap::default()).unwrap();
        let kinds: Vec<EventKind> = s.events().iter().map(|e| e.kind).collect();
        assert_eq!(kinds, vec![EventKind::ToeOff, EventKind::HeelContact]);
    }

    #[test]
    fn passes_split_on_long_gaps() {
        let mut f = vec![0.0; 8000];
        f[500..1200].fill(600.0);
        f[5000..5700].fill(600.0);
        let g = GrfSignal::new(1000.0, 0.0, vec![f]).unwrap();
        let s = detect_grf_events(&g, &EventConfig::default(), None, &FootMap::PerPass(vec![Foot::Left, Foot::Right]))
            .unwrap();
        assert_eq!(s.pass_ids(), vec![0, 1]);
        assert_eq!(s.events()[0].foot, Foot::Left);
        assert_eq!(s.events()[2].foot, Foot::Right);
        assert!(detect_grf_events(&g, &EventConfig::default(), None, &FootMap::PerPass(vec![Foot::Left])).is_err());
    }

    #[test]
    fn nearest_kinematic_attribution() {
        let kin = EventSequence::new(vec![
            GaitEvent::new(Foot::Left, EventKind::HeelContact, 0.52, EventSource::Kinematic, 0),
            GaitEvent::new(Foot::Right, EventKind::HeelContact, 1.04, EventSource::Kinematic, 0),
            GaitEvent::new(Foot::Left, EventKind::ToeOff, 1.2, EventSource::Kinematic, 0),
            GaitEvent::new(Foot::Left, EventKind::HeelContact, 1.6, EventSource::Kinematic, 0),
        ])
        .unwrap();
        let s = detect_grf_events(&two_platforms(), &EventConfig::default(), None, &FootMap::NearestKinematic(kin))
            .unwrap();
        let feet: Vec<Foot> = s.heel_contacts().map(|e| e.foot).collect();
        assert_eq!(feet, vec![Foot::Left, Foot::Right, Foot::Left]);
    }

    #[test]
    fn filtered_path_runs() {
        let f = trapezoid(3000, 1003, 1700);
        let g = GrfSignal::new(1000.0, 0.0, vec![f]).unwrap();
        let spec = crate::dsp::design_butterworth(2, 20.0, 1000.0).unwrap();
        let s = detect_grf_events(&g, &EventConfig::default(), Some(&spec), &FootMap::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s.events()[0].time_s - 1.003).abs() < 0.01);
    }
}
