//! Synthetic walking trials with exactly known gait events.
//!
//! A trial is scheduled analytically from step time and the stance and
//! double-support fractions of the stride. Force and keypoint streams are
//! then rendered from that schedule, so every event time is known exactly.

mod write;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::events::{Direction, EventKind, EventSequence, EventSource, Foot, GaitEvent};
use crate::ingest::{GrfSignal, Keypoint, KeypointSeries, LayoutKind, Role, SkeletonLayout, TrialMeta};

pub use write::{to_body25, write_trial, TrialFiles};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("inconsistent fractions: {0}")]
    InconsistentFractions(String),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Ingest(#[from] crate::ingest::IngestError),
    #[error(transparent)]
    Events(#[from] crate::events::EventError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Noise applied after the clean signals are rendered.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthNoise {
    /// Gaussian force noise per sample.
    pub grf_sigma_n: f64,
    /// Gaussian keypoint noise per coordinate.
    pub kp_sigma_px: f64,
    /// Share of keypoint samples replaced by a low-confidence misdetection.
    pub confidence_dropout_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub step_time_s: f64,
    /// Stance duration as a share of the stride.
    pub stance_fraction: f64,
    /// Double support per stride as a share of the stride; must equal
    /// `2 * stance_fraction - 1` for symmetric walking.
    pub double_support_fraction: f64,
    pub n_strides: usize,
    pub walk_speed_px_per_s: f64,
    pub direction: Direction,
    pub grf_fs: f64,
    pub cam_fps: f64,
    pub subject_weight_n: f64,
    pub n_platforms: usize,
    /// Width of the smooth loading and unloading ramps at each end of a stance.
    pub edge_ramp_s: f64,
    pub first_foot: Foot,
    pub noise: SynthNoise,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            step_time_s: 0.557,
            stance_fraction: 0.62,
            double_support_fraction: 0.24,
            n_strides: 10,
            walk_speed_px_per_s: 250.0,
            direction: Direction::Positive,
            grf_fs: 1000.0,
            cam_fps: 25.0,
            subject_weight_n: 700.0,
            n_platforms: 4,
            edge_ramp_s: 0.107,
            first_foot: Foot::Right,
            noise: SynthNoise::default(),
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn stride_s(&self) -> f64 {
        2.0 * self.step_time_s
    }

    pub fn stance_s(&self) -> f64 {
        self.stance_fraction * self.stride_s()
    }

    /// Trial length: half a step of lead-in, `2 n` steps, half a step of tail.
    pub fn duration_s(&self) -> f64 {
        (2 * self.n_strides + 1) as f64 * self.step_time_s
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SynthError> {
        let p: SynthParams = toml::from_str(text).map_err(|e| SynthError::Invalid(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        for (name, value) in [
            ("step_time_s", self.step_time_s),
            ("walk_speed_px_per_s", self.walk_speed_px_per_s),
            ("grf_fs", self.grf_fs),
            ("cam_fps", self.cam_fps),
            ("subject_weight_n", self.subject_weight_n),
            ("edge_ramp_s", self.edge_ramp_s),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(SynthError::NonPositive { name, value });
            }
        }
        if self.n_strides == 0 {
            return Err(SynthError::NonPositive { name: "n_strides", value: 0.0 });
        }
        let (sf, dsf) = (self.stance_fraction, self.double_support_fraction);
        if !(0.0 < dsf && dsf < sf && sf < 1.0) {
            return Err(SynthError::InconsistentFractions(format!(
                "need 0 < double_support_fraction ({dsf}) < stance_fraction ({sf}) < 1"
            )));
        }
        if (dsf - (2.0 * sf - 1.0)).abs() > 1e-9 {
            return Err(SynthError::InconsistentFractions(format!(
                "double_support_fraction {dsf} must equal 2 * stance_fraction - 1 = {}",
                2.0 * sf - 1.0
            )));
        }
        if self.n_platforms < 2 {
            return Err(SynthError::Invalid("consecutive stances overlap, at least 2 platforms are needed".into()));
        }
        if self.stance_s() <= 2.0 * self.edge_ramp_s {
            return Err(SynthError::Invalid(format!(
                "stance of {} s is too short for two {} s edge ramps",
                self.stance_s(),
                self.edge_ramp_s
            )));
        }
        let n = self.noise;
        if !(n.grf_sigma_n >= 0.0 && n.kp_sigma_px >= 0.0) {
            return Err(SynthError::Invalid("noise levels must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&n.confidence_dropout_rate) {
            return Err(SynthError::Invalid("confidence_dropout_rate must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A rendered trial and its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTrial {
    pub grf: GrfSignal,
    /// DLCCT_16 keypoints.
    pub keypoints: KeypointSeries,
    /// Every heel contact and toe-off inside the trial window.
    pub truth: EventSequence,
    /// The events of the stances fully recorded by the platforms.
    pub force_truth: EventSequence,
    pub params: SynthParams,
}

/// One foot contact in the analytic schedule.
#[derive(Debug, Clone, Copy)]
struct Contact {
    j: i64,
    foot: Foot,
    hc: f64,
    to: f64,
}

fn schedule(p: &SynthParams, from: i64, to: i64) -> Vec<Contact> {
    let t_first = 0.5 * p.step_time_s;
    (from..=to)
        .map(|j| {
            let hc = t_first + j as f64 * p.step_time_s;
            let foot = if j.rem_euclid(2) == 0 { p.first_foot } else { p.first_foot.other() };
            Contact { j, foot, hc, to: hc + p.stance_s() }
        })
        .collect()
}

/// Vertical force `u` seconds into a stance: two raised-cosine lobes with
/// quarter-sine loading and unloading ramps.
fn stance_force(u: f64, p: &SynthParams) -> f64 {
    let s = p.stance_s();
    if !(0.0..s).contains(&u) {
        return 0.0;
    }
    let amp = 1.1 * p.subject_weight_n;
    let half_width = 0.4 * s;
    let lobe = |centre: f64| {
        let d = (u - centre).abs();
        if d < half_width { 0.5 * (1.0 + (PI * d / half_width).cos()) } else { 0.0 }
    };
    let edge = u.min(s - u);
    let ramp = if edge < p.edge_ramp_s { (0.5 * PI * edge / p.edge_ramp_s).sin() } else { 1.0 };
    amp * (lobe(0.25 * s) + lobe(0.75 * s)) * ramp
}

/// Share of the stride length covered `s` of the way through swing.
fn swing_progress(s: f64) -> f64 {
    const SHAPE: f64 = 1.3;
    beta_reg(SHAPE, SHAPE, s.clamp(0.0, 1.0))
}

const GROUND_Y: f64 = 420.0;
const HIP_Y: f64 = 250.0;
const FOOT_LENGTH: f64 = 35.0;
const HEEL_LIFT: f64 = 14.0;

struct FootState {
    heel_x: f64,
    heel_y: f64,
    toe_y: f64,
}

fn foot_state(contacts: &[Contact], foot: Foot, t: f64, p: &SynthParams, hip_x: &dyn Fn(f64) -> f64) -> FootState {
    let mine: Vec<&Contact> = contacts.iter().filter(|c| c.foot == foot).collect();
    // the heel rests under the hip at mid-stance
    let plant = |c: &Contact| hip_x(c.hc + 0.5 * p.stance_s());
    for (k, c) in mine.iter().enumerate() {
        if t >= c.hc && t <= c.to {
            return FootState { heel_x: plant(c), heel_y: GROUND_Y, toe_y: GROUND_Y };
        }
        if let Some(next) = mine.get(k + 1) {
            if t > c.to && t < next.hc {
                let s = (t - c.to) / (next.hc - c.to);
                let x = plant(c) + (plant(next) - plant(c)) * swing_progress(s);
                let lift = (PI * s).sin();
                return FootState {
                    heel_x: x,
                    heel_y: GROUND_Y - HEEL_LIFT * lift,
                    toe_y: GROUND_Y - 0.5 * HEEL_LIFT * lift,
                };
            }
        }
    }
    // outside the generated schedule the foot is parked at the nearest plant
    let c = if t < mine[0].hc { mine[0] } else { mine[mine.len() - 1] };
    FootState { heel_x: plant(c), heel_y: GROUND_Y, toe_y: GROUND_Y }
}

/// Renders one trial.
pub fn generate_trial(p: &SynthParams) -> Result<SynthTrial, SynthError> {
    p.validate()?;
    let end = p.duration_s();
    let n2 = 2 * p.n_strides as i64;
    let contacts = schedule(p, -3, n2 + 3);
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    // ground truth inside [0, end)
    let mut truth = Vec::new();
    for c in &contacts {
        for (kind, t) in [(EventKind::HeelContact, c.hc), (EventKind::ToeOff, c.to)] {
            if (0.0..end).contains(&t) {
                truth.push(GaitEvent::new(c.foot, kind, t, EventSource::Kinematic, 0));
            }
        }
    }
    let recorded: Vec<&Contact> = contacts.iter().filter(|c| c.hc >= 0.0 && c.to < end).collect();
    let force_truth: Vec<GaitEvent> = recorded
        .iter()
        .flat_map(|c| {
            [
                GaitEvent::new(c.foot, EventKind::HeelContact, c.hc, EventSource::Force, 0),
                GaitEvent::new(c.foot, EventKind::ToeOff, c.to, EventSource::Force, 0),
            ]
        })
        .collect();

    // force
    let n_samples = (end * p.grf_fs).ceil() as usize;
    let mut platforms = vec![vec![0.0; n_samples]; p.n_platforms];
    for c in &recorded {
        let plate = &mut platforms[c.j.rem_euclid(p.n_platforms as i64) as usize];
        let first = (c.hc * p.grf_fs).floor().max(0.0) as usize;
        let last = ((c.to * p.grf_fs).ceil() as usize).min(n_samples);
        for (i, v) in plate.iter_mut().enumerate().take(last).skip(first) {
            *v += stance_force(i as f64 / p.grf_fs - c.hc, p);
        }
    }
    if p.noise.grf_sigma_n > 0.0 {
        let normal = Normal::new(0.0, p.noise.grf_sigma_n).expect("sigma checked");
        for v in platforms.iter_mut().flatten() {
            *v += normal.sample(&mut rng);
        }
    }
    let grf = GrfSignal::new(p.grf_fs, 0.0, platforms)?;

    // keypoints
    let layout = SkeletonLayout::dlcct16();
    let d = p.direction.sign();
    let x0 = if d > 0.0 { 60.0 } else { 60.0 + p.walk_speed_px_per_s * end };
    let hip_x = move |t: f64| x0 + d * p.walk_speed_px_per_s * t;
    let n_frames = (end * p.cam_fps).ceil() as usize;
    let kp_noise = (p.noise.kp_sigma_px > 0.0).then(|| Normal::new(0.0, p.noise.kp_sigma_px).expect("sigma checked"));
    let garbage_x = Uniform::new(0.0, 640.0).expect("valid range");
    let garbage_y = Uniform::new(0.0, 480.0).expect("valid range");
    let mut frames = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let t = f as f64 / p.cam_fps;
        let clean = body_pose(&layout, &contacts, t, p, &hip_x);
        let frame = clean
            .into_iter()
            .map(|(x, y)| {
                if p.noise.confidence_dropout_rate > 0.0 && rng.random::<f64>() < p.noise.confidence_dropout_rate {
                    let conf = rng.random_range(0.0..0.45);
                    return Keypoint::new(garbage_x.sample(&mut rng), garbage_y.sample(&mut rng), conf);
                }
                let (mut x, mut y) = (x, y);
                if let Some(n) = &kp_noise {
                    x += n.sample(&mut rng);
                    y += n.sample(&mut rng);
                }
                Keypoint::new(x, y, rng.random_range(0.8..1.0))
            })
            .collect();
        frames.push(frame);
    }
    let keypoints = KeypointSeries::new(layout, p.cam_fps, frames)?;

    let meta = TrialMeta {
        trial_id: format!("synth_{}", p.seed),
        subject_id: "synthetic".into(),
        camera_fps: p.cam_fps,
        resolution: (640, 480),
    };
    Ok(SynthTrial {
        grf,
        keypoints,
        truth: EventSequence::new(truth)?.with_meta(meta.clone()),
        force_truth: EventSequence::new(force_truth)?.with_meta(meta),
        params: p.clone(),
    })
}

/// Clean DLCCT_16 coordinates at time `t`, canonical part order.
fn body_pose(
    layout: &SkeletonLayout,
    contacts: &[Contact],
    t: f64,
    p: &SynthParams,
    hip_x: &dyn Fn(f64) -> f64,
) -> Vec<(f64, f64)> {
    debug_assert_eq!(layout.kind(), LayoutKind::Dlcct16);
    let d = p.direction.sign();
    let hx = hip_x(t);
    let mut out = vec![(0.0, 0.0); layout.part_count()];
    for (foot, sway) in [(Foot::Right, 1.0), (Foot::Left, -1.0)] {
        let fs = foot_state(contacts, foot, t, p, hip_x);
        let role = |l: Role, r: Role| layout.role(if foot == Foot::Left { l } else { r }).expect("DLCCT_16 role");
        let ankle = (fs.heel_x + d * 8.0, fs.heel_y - 18.0);
        out[role(Role::LeftHeel, Role::RightHeel)] = (fs.heel_x, fs.heel_y);
        out[role(Role::LeftToe, Role::RightToe)] = (fs.heel_x + d * FOOT_LENGTH, fs.toe_y);
        out[role(Role::LeftAnkle, Role::RightAnkle)] = ankle;
        out[role(Role::LeftHip, Role::RightHip)] = (hx, HIP_Y);
        // knee, then the arm chain, in layout order after the hip
        let hip_idx = role(Role::LeftHip, Role::RightHip);
        out[hip_idx + 1] = (0.5 * (hx + ankle.0) + d * 6.0, 0.5 * (HIP_Y + ankle.1));
        let shoulder = hip_idx - 3;
        let arm = sway * d * 0.1 * (fs.heel_x - hx);
        out[shoulder] = (hx + d * 4.0, 120.0);
        out[shoulder + 1] = (hx + d * 4.0 - 0.5 * arm, 175.0);
        out[shoulder + 2] = (hx + d * 4.0 - arm, 225.0);
    }
    out
}

/// Parameters for a study of `n` trials: consecutive seeds and step times
/// spread uniformly over ±10% of the base value.
pub fn study_params(base: &SynthParams, n: usize) -> Vec<SynthParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(base.seed ^ 0x5eed_5eed);
    (0..n)
        .map(|i| SynthParams {
            step_time_s: base.step_time_s * rng.random_range(0.9..1.1),
            seed: base.seed + i as u64,
            ..base.clone()
        })
        .collect()
}
