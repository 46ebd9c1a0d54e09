//! Narrowband dominant-frequency estimation.
//!
//! The grid frequency never strays more than a few tens of millihertz
//! from 60 Hz, so the DFT is evaluated only on a small support around
//! the nominal frequency instead of zero-padding a full FFT. Each
//! estimate covers sixty cycles, advancing thirty cycles per step.

use super::CyclicError;
use crate::dsp::NOMINAL_FREQ_HZ;

pub const DEFAULT_PBW_HZ: f64 = 0.2;
pub const DEFAULT_FREQ_POINTS: usize = 41;
pub const DEFAULT_WINDOW_CYCLES: f64 = 60.0;
pub const DEFAULT_HOP_CYCLES: f64 = 30.0;

/// Evenly spaced frequency support centered on the nominal frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySupport {
    pub center: f64,
    pub pbw: f64,
    pub points: usize,
}

impl Default for FrequencySupport {
    fn default() -> Self {
        FrequencySupport {
            center: NOMINAL_FREQ_HZ,
            pbw: DEFAULT_PBW_HZ,
            points: DEFAULT_FREQ_POINTS,
        }
    }
}

impl FrequencySupport {
    pub fn with_pbw(pbw: f64) -> Self {
        FrequencySupport { pbw, ..FrequencySupport::default() }
    }

    pub fn step(&self) -> f64 {
        self.pbw / (self.points - 1) as f64
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.center - self.pbw / 2.0 + index as f64 * self.step()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.frequency(k)).collect()
    }

    /// Index of the nearest support point.
    pub fn index_of(&self, f: f64) -> usize {
        let lo = self.center - self.pbw / 2.0;
        (((f - lo) / self.step()).round() as isize).clamp(0, self.points as isize - 1) as usize
    }
}

/// DFT magnitude of `x` at each support frequency:
/// `|sum_n x[n] exp(-j 2 pi f n / fs)|`.
///
/// The complex exponential advances by rotation rather than per-sample
/// trigonometry; over a sixty-cycle window the rotation drift is far
/// below the tolerance of any consumer.
pub fn narrowband_spectrum(x: &[f64], fs: f64, support: &FrequencySupport) -> Vec<f64> {
    let mut out = Vec::with_capacity(support.points);
    for idx in 0..support.points {
        let w = 2.0 * std::f64::consts::PI * support.frequency(idx) / fs;
        let (rc, rs) = (w.cos(), -w.sin());
        let mut pr = 1.0f64;
        let mut pi = 0.0f64;
        let mut re = 0.0f64;
        let mut im = 0.0f64;
        for &v in x {
            re += v * pr;
            im += v * pi;
            let npr = pr * rc - pi * rs;
            pi = pr * rs + pi * rc;
            pr = npr;
        }
        out.push((re * re + im * im).sqrt());
    }
    out
}

/// Dominant frequency per sliding window: `(window start time in seconds,
/// argmax of the narrowband spectrum)`.
pub fn dominant_frequency(
    x: &[f64],
    fs: f64,
    support: &FrequencySupport,
    window_cycles: f64,
    hop_cycles: f64,
) -> Result<Vec<(f64, f64)>, CyclicError> {
    let nc = fs / NOMINAL_FREQ_HZ;
    let win = (window_cycles * nc).round() as usize;
    let hop = (hop_cycles * nc).round().max(1.0) as usize;
    if x.len() < win || win == 0 {
        return Err(CyclicError::TooShort { n: x.len(), needed: win.max(1) });
    }
    let mut out = Vec::new();
    let mut start = 0usize;
    while start + win <= x.len() {
        let spectrum = narrowband_spectrum(&x[start..start + win], fs, support);
        let best = argmax(&spectrum);
        out.push((start as f64 / fs, support.frequency(best)));
        start += hop;
    }
    Ok(out)
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0usize;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = k;
        }
    }
    best
}

/// Histogram of frequency estimates over the support grid.
pub fn frequency_histogram(estimates: &[f64], support: &FrequencySupport) -> Vec<u64> {
    let mut counts = vec![0u64; support.points];
    for &f in estimates {
        counts[support.index_of(f)] += 1;
    }
    counts
}
