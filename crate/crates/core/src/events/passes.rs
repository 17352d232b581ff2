use serde::{Deserialize, Serialize};

use super::{hip_track, EventConfig, EventError};
use crate::dsp::FilterSpec;
use crate::ingest::KeypointSeries;

/// Walking direction along the image x axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+x")]
    Positive,
    #[serde(rename = "-x")]
    Negative,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Positive => 1.0,
            Direction::Negative => -1.0,
        }
    }
}

/// One monotone traversal, frames `[start_frame, end_frame)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassWindow {
    pub start_frame: usize,
    pub end_frame: usize,
    pub direction: Direction,
}

impl PassWindow {
    pub fn len(&self) -> usize {
        self.end_frame - self.start_frame
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, frame: usize) -> bool {
        (self.start_frame..self.end_frame).contains(&frame)
    }
}

#[derive(Debug, Clone, Copy)]
struct Run {
    start: usize,
    end: usize,
    sign: i8,
}

/// Splits a trial into walking passes from the hip trajectory.
///
/// The cleaned hip x is differentiated and cut where the velocity changes
/// sign; sign runs shorter than `pass_min_duration_s` are absorbed by a
/// neighbour. Windows whose net travel is under `pass_min_travel_fraction`
/// of the image width are dropped as turnarounds.
pub fn segment_passes(
    k: &KeypointSeries,
    cfg: &EventConfig,
    filter: &FilterSpec,
) -> Result<Vec<PassWindow>, EventError> {
    cfg.validate()?;
    let x = hip_track(k, cfg, filter)?;
    Ok(split_monotone(&x, k.fps(), cfg))
}

pub(crate) fn split_monotone(x: &[f64], fps: f64, cfg: &EventConfig) -> Vec<PassWindow> {
    let n = x.len();
    if n < 2 {
        return Vec::new();
    }
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut signs: Vec<i8> = (0..n)
        .map(|i| {
            let v = x[(i + 1).min(n - 1)] - x[i.min(n - 2)];
            if v.abs() <= 1e-12 * scale {
                0
            } else if v > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    // stationary samples inherit the surrounding direction
    let mut prev = 0;
    for s in signs.iter_mut() {
        if *s == 0 {
            *s = prev;
        } else {
            prev = *s;
        }
    }
    let mut next = 0;
    for s in signs.iter_mut().rev() {
        if *s == 0 {
            *s = next;
        } else {
            next = *s;
        }
    }

    let mut runs: Vec<Run> = Vec::new();
    for (i, &s) in signs.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.sign == s => r.end = i + 1,
            _ => runs.push(Run { start: i, end: i + 1, sign: s }),
        }
    }

    let min_len = (cfg.pass_min_duration_s * fps).ceil() as usize;
    loop {
        let short = runs
            .iter()
            .enumerate()
            .filter(|(_, r)| r.end - r.start < min_len)
            .min_by_key(|(i, r)| (r.end - r.start, *i))
            .map(|(i, _)| i);
        let Some(i) = short else { break };
        if runs.len() == 1 {
            break;
        }
        let left = i.checked_sub(1).map(|j| runs[j].end - runs[j].start);
        let right = runs.get(i + 1).map(|r| r.end - r.start);
        let into = match (left, right) {
            (Some(l), Some(r)) if r > l => i + 1,
            (Some(_), _) => i - 1,
            (None, _) => i + 1,
        };
        let absorbed = runs.remove(i);
        let target = if into > i { into - 1 } else { into };
        runs[target].start = runs[target].start.min(absorbed.start);
        runs[target].end = runs[target].end.max(absorbed.end);
        // coalesce neighbours that now share a direction
        let mut merged: Vec<Run> = Vec::with_capacity(runs.len());
        for r in runs {
            match merged.last_mut() {
                Some(m) if m.sign == r.sign => m.end = r.end,
                _ => merged.push(r),
            }
        }
        runs = merged;
    }

    let min_travel = cfg.pass_min_travel_fraction * cfg.image_width_px;
    runs.iter()
        .filter_map(|r| {
            let net = x[r.end - 1] - x[r.start];
            if net == 0.0 || net.abs() < min_travel {
                return None;
            }
            Some(PassWindow {
                start_frame: r.start,
                end_frame: r.end,
                direction: if net > 0.0 { Direction::Positive } else { Direction::Negative },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EventConfig {
        EventConfig::default()
    }

    #[test]
    fn monotone_is_one_pass() {
        let x: Vec<f64> = (0..100).map(|i| 50.0 + 5.0 * i as f64).collect();
        let w = split_monotone(&x, 25.0, &cfg());
        assert_eq!(w, vec![PassWindow { start_frame: 0, end_frame: 100, direction: Direction::Positive }]);
    }

    #[test]
    fn out_and_back() {
        let mut x: Vec<f64> = (0..=55).map(|i| 50.0 + 10.0 * i as f64).collect();
        x.extend((1..=55).map(|i| 600.0 - 10.0 * i as f64));
        let w = split_monotone(&x, 25.0, &cfg());
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].direction, Direction::Positive);
        assert_eq!(w[1].direction, Direction::Negative);
        assert_eq!(w[0].end_frame, w[1].start_frame);
    }

    #[test]
    fn triangle_wave_ten_legs() {
        let leg = 60;
        let x: Vec<f64> = (0..10 * leg)
            .map(|i| {
                let (k, j) = (i / leg, (i % leg) as f64);
                if k % 2 == 0 { 50.0 + 9.0 * j } else { 50.0 + 9.0 * (leg as f64 - j) }
            })
            .collect();
        let w = split_monotone(&x, 25.0, &cfg());
        assert_eq!(w.len(), 10);
        for (i, p) in w.iter().enumerate() {
            let want = if i % 2 == 0 { Direction::Positive } else { Direction::Negative };
            assert_eq!(p.direction, want);
        }
    }

    #[test]
    fn jitter_absorbed_and_short_travel_dropped() {
        let mut x: Vec<f64> = (0..100).map(|i| 10.0 * i as f64).collect();
        x[50] -= 25.0; // two-frame backwards blip
        let w = split_monotone(&x, 25.0, &cfg());
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].start_frame, w[0].end_frame), (0, 100));

        let still = vec![320.0; 80];
        assert!(split_monotone(&still, 25.0, &cfg()).is_empty());
        let shuffle: Vec<f64> = (0..80).map(|i| 300.0 + i as f64).collect();
        assert!(split_monotone(&shuffle, 25.0, &cfg()).is_empty());
    }
}
