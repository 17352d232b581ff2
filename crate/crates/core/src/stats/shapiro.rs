use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::StatsError;

/// Shapiro-Wilk W and its p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityResult {
    pub w_statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

impl NormalityResult {
    pub fn record(&self) -> Vec<(&'static str, f64)> {
        vec![("w_statistic", self.w_statistic), ("p_value", self.p_value), ("n", self.n as f64)]
    }
}

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Royston's approximation of the Shapiro-Wilk test, valid for
/// `3 <= n <= 5000`.
pub fn shapiro_wilk(x: &[f64]) -> Result<NormalityResult, StatsError> {
    let n = x.len();
    if !(3..=5000).contains(&n) {
        return Err(StatsError::SampleSize { n, min: 3, max: 5000 });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[n - 1] - sorted[0] <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }

    let half = n / 2;
    let std_normal = Normal::standard();
    let mut a = vec![0.0; half];
    if n == 3 {
        a[0] = FRAC_1_SQRT_2;
    } else {
        let an25 = n as f64 + 0.25;
        let m: Vec<f64> = (1..=half).map(|i| std_normal.inverse_cdf((i as f64 - 0.375) / an25)).collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / (n as f64).sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first_free, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            a[1] = a2;
            (2, fac)
        } else {
            (1, ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt())
        };
        a[0] = a1;
        for i in first_free..half {
            a[i] = -m[i] / fac;
        }
    }

    let mean = sorted.iter().sum::<f64>() / n as f64;
    let ss: f64 = sorted.iter().map(|v| (v - mean) * (v - mean)).sum();
    let b: f64 = (0..half).map(|i| a[i] * (sorted[n - 1 - i] - sorted[i])).sum();
    let w = (b * b / ss).min(1.0);

    let p = if n == 3 {
        (6.0 / PI * (w.sqrt().asin() - PI / 3.0)).max(0.0)
    } else {
        let nf = n as f64;
        let mut y = (1.0 - w).ln();
        let (mu, sigma) = if n <= 11 {
            let gamma = poly(&G, nf);
            if y >= gamma {
                return Ok(NormalityResult { w_statistic: w, p_value: 0.0, n });
            }
            y = -(gamma - y).ln();
            (poly(&C3, nf), poly(&C4, nf).exp())
        } else {
            let ln_n = nf.ln();
            (poly(&C5, ln_n), poly(&C6, ln_n).exp())
        };
        1.0 - std_normal.cdf((y - mu) / sigma)
    };
    Ok(NormalityResult { w_statistic: w, p_value: p.clamp(0.0, 1.0), n })
}
