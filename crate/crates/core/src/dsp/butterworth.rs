use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::DspError;

/// One second-order section, denominator normalised so that `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b: [f64; 3],
    /// `[a1, a2]`
    pub a: [f64; 2],
}

impl Biquad {
    /// Complex response at normalised angular frequency `w` (rad/sample).
    fn response(&self, w: f64) -> (f64, f64) {
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b[0] + self.b[1] * c1 + self.b[2] * c2, self.b[1] * s1 + self.b[2] * s2);
        let den = (1.0 + self.a[0] * c1 + self.a[1] * c2, self.a[0] * s1 + self.a[1] * s2);
        let d = den.0 * den.0 + den.1 * den.1;
        ((num.0 * den.0 + num.1 * den.1) / d, (num.1 * den.0 - num.0 * den.1) / d)
    }

    pub fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / (1.0 + self.a[0] + self.a[1])
    }

    /// Both poles strictly inside the unit circle (Jury conditions).
    pub fn is_stable(&self) -> bool {
        let [a1, a2] = self.a;
        a2.abs() < 1.0 && a1.abs() < 1.0 + a2
    }

    /// Transposed direct form II state for a unit step held forever.
    pub(crate) fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[1] * g;
        let z1 = self.b[1] - self.a[0] * g + z2;
        [z1, z2]
    }

    #[inline]
    pub(crate) fn tick(&self, x: f64, z: &mut [f64; 2]) -> f64 {
        let y = self.b[0] * x + z[0];
        z[0] = self.b[1] * x - self.a[0] * y + z[1];
        z[1] = self.b[2] * x - self.a[1] * y;
        y
    }
}

/// A low-pass Butterworth filter realised as cascaded biquads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    order: usize,
    cutoff_hz: f64,
    fs_hz: f64,
    sections: Vec<Biquad>,
}

/// Designs an even-order Butterworth low-pass by the bilinear transform,
/// prewarped so the -3 dB point lands exactly on `cutoff_hz`.
pub fn design_butterworth(order: usize, cutoff_hz: f64, fs_hz: f64) -> Result<FilterSpec, DspError> {
    if !matches!(order, 2 | 4 | 6 | 8) {
        return Err(DspError::InvalidOrder(order));
    }
    if !(fs_hz.is_finite() && fs_hz > 0.0 && cutoff_hz.is_finite() && cutoff_hz > 0.0)
        || cutoff_hz >= fs_hz / 2.0
    {
        return Err(DspError::InvalidCutoff { cutoff_hz, fs_hz });
    }
    let k = (PI * cutoff_hz / fs_hz).tan();
    let k2 = k * k;
    let sections = (0..order / 2)
        .map(|i| {
            // pole pair quality factor of the analog prototype
            let q = 1.0 / (2.0 * ((2 * i + 1) as f64 * PI / (2 * order) as f64).sin());
            let norm = 1.0 / (1.0 + k / q + k2);
            let b0 = k2 * norm;
            Biquad {
                b: [b0, 2.0 * b0, b0],
                a: [2.0 * (k2 - 1.0) * norm, (1.0 - k / q + k2) * norm],
            }
        })
        .collect();
    Ok(FilterSpec { order, cutoff_hz, fs_hz, sections })
}

impl FilterSpec {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn fs_hz(&self) -> f64 {
        self.fs_hz
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Samples of odd extension added at each end by `filtfilt`.
    pub fn pad_len(&self) -> usize {
        3 * 2 * self.order
    }

    pub fn dc_gain(&self) -> f64 {
        self.sections.iter().map(Biquad::dc_gain).product()
    }

    /// Single-pass magnitude response at `freq_hz`.
    pub fn gain_at(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.fs_hz;
        self.sections
            .iter()
            .map(|s| {
                let (re, im) = s.response(w);
                re.hypot(im)
            })
            .product()
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }

    /// Causal single pass from rest.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for s in &self.sections {
            let mut z = [0.0; 2];
            for v in y.iter_mut() {
                *v = s.tick(*v, &mut z);
            }
        }
        y
    }
}

impl fmt::Display for FilterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "butterworth lowpass order={} cutoff_hz={} fs_hz={} sections={}",
            self.order,
            self.cutoff_hz,
            self.fs_hz,
            self.sections.len()
        )?;
        for (i, s) in self.sections.iter().enumerate() {
            writeln!(
                f,
                "  sos[{i}] b=[{:.12e}, {:.12e}, {:.12e}] a=[1, {:.12e}, {:.12e}]",
                s.b[0], s.b[1], s.b[2], s.a[0], s.a[1]
            )?;
        }
        Ok(())
    }
}
