//! Welch estimates of `C̃(ω) = ∫ C(t) e^{iωt} dt` for sampled series.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_SEGMENTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WindowKind {
    Hann,
}

/// One-sided grid `ω ≥ 0`; the estimate is even in `ω`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralEstimate {
    pub omega: Vec<f64>,
    pub density: Vec<f64>,
    /// Standard error of the segment average.
    pub stderr: Vec<f64>,
    pub segments: usize,
    pub window: WindowKind,
    pub dt: f64,
    pub segment_len: usize,
    pub mean: f64,
    /// Sample variance `C(0)` of the mean-removed series.
    pub variance: f64,
}

impl SpectralEstimate {
    /// Linear interpolation in `|ω|`; zero past the Nyquist frequency.
    pub fn at(&self, omega: f64) -> f64 {
        let w = omega.abs();
        let dw = self.omega[1] - self.omega[0];
        let x = w / dw;
        let i = x.floor() as usize;
        if i + 1 >= self.omega.len() {
            return if i + 1 == self.omega.len() { self.density[i] } else { 0.0 };
        }
        let f = x - i as f64;
        self.density[i] * (1.0 - f) + self.density[i + 1] * f
    }

    /// `(C̃(0), standard error)`.
    pub fn zero_frequency(&self) -> (f64, f64) {
        (self.density[0], self.stderr[0])
    }

    /// `(1/2π) ∫ C̃ dω` over the full band.
    pub fn integrated_power(&self) -> f64 {
        let n = self.density.len();
        let dw = self.omega[1] - self.omega[0];
        let inner: f64 = self.density[1..n - 1].iter().sum();
        (self.density[0] + 2.0 * inner + self.density[n - 1]) * dw / (2.0 * PI)
    }

    /// `integrated_power / variance`; one by Parseval up to windowing.
    pub fn parseval_ratio(&self) -> f64 {
        self.integrated_power() / self.variance
    }
}

fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos())).collect()
}

/// Welch average for one series (Hann window, 50% overlap).
pub fn spectral_density(series: &[f64], dt: f64, segment_len: usize) -> Result<SpectralEstimate> {
    pooled_spectral_density(&[series.to_vec()], dt, segment_len)
}

/// Welch average over several independent series sharing one mean.
pub fn pooled_spectral_density(series: &[Vec<f64>], dt: f64, segment_len: usize) -> Result<SpectralEstimate> {
    if segment_len < 8 || !segment_len.is_multiple_of(2) {
        return Err(Error::OutOfRange(format!("segment length must be even and at least 8, got {segment_len}")));
    }
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::OutOfRange(format!("sample spacing must be positive, got {dt}")));
    }
    let total: usize = series.iter().map(Vec::len).sum();
    if series.iter().all(|s| s.len() < segment_len) {
        return Err(Error::InsufficientData(format!(
            "series of {} samples is shorter than one segment of {segment_len}",
            series.iter().map(Vec::len).max().unwrap_or(0)
        )));
    }
    let mean = series.iter().flatten().sum::<f64>() / total as f64;
    let variance = series.iter().flatten().map(|x| (x - mean).powi(2)).sum::<f64>() / total as f64;

    let w = hann(segment_len);
    let wnorm: f64 = w.iter().map(|x| x * x).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment_len);
    let half = segment_len / 2 + 1;
    let hop = segment_len / 2;
    let mut sum = vec![0.0; half];
    let mut sum2 = vec![0.0; half];
    let mut segments = 0usize;
    let mut buf = vec![Complex::new(0.0, 0.0); segment_len];
    for s in series {
        let mut start = 0;
        while start + segment_len <= s.len() {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = Complex::new(w[i] * (s[start + i] - mean), 0.0);
            }
            fft.process(&mut buf);
            for m in 0..half {
                let p = dt * buf[m].norm_sqr() / wnorm;
                sum[m] += p;
                sum2[m] += p * p;
            }
            segments += 1;
            start += hop;
        }
    }
    if segments < MIN_SEGMENTS {
        return Err(Error::InsufficientData(format!(
            "only {segments} segments of length {segment_len}; at least {MIN_SEGMENTS} are required"
        )));
    }
    let n = segments as f64;
    let density: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderr = sum2
        .iter()
        .zip(&density)
        .map(|(s2, m)| ((s2 / n - m * m).max(0.0) / (n - 1.0)).sqrt())
        .collect();
    let dw = 2.0 * PI / (segment_len as f64 * dt);
    Ok(SpectralEstimate {
        omega: (0..half).map(|m| m as f64 * dw).collect(),
        density,
        stderr,
        segments,
        window: WindowKind::Hann,
        dt,
        segment_len,
        mean,
        variance,
    })
}
