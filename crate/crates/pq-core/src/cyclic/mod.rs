//! Continuous-signal compaction: cycle extraction and time
//! synchronization, cyclic/residual histograms, narrowband dominant
//! frequency estimation, and the six-file CSV output set.
//!
//! Cycles are delimited by consecutive negative-to-positive transitions
//! and re-sampled onto an ideal 60 Hz time grid so that hours of
//! continuous data can be overlaid sample-by-sample.

mod compact;
mod frequency;
mod histogram;

use thiserror::Error;

use crate::dsp::NOMINAL_FREQ_HZ;
use crate::ingest::IngestError;

pub use compact::{compact, CompactOptions, CompactReport};
pub use frequency::{
    dominant_frequency, frequency_histogram, narrowband_spectrum, FrequencySupport,
};
pub use histogram::{cyclic_histogram, residual_histogram, Histogram2d};

#[derive(Debug, Error)]
pub enum CyclicError {
    #[error("no zero crossings found in the signal")]
    NoZeroCrossings,
    #[error("zero slope at a cycle boundary; cannot synchronize")]
    ZeroSlope,
    #[error("no cycles to histogram")]
    EmptyStream,
    #[error("residual histogram needs at least two cycles")]
    TooFewCycles,
    #[error("signal too short: {n} samples, need {needed}")]
    TooShort { n: usize, needed: usize },
    #[error("no voltage channels in the configuration")]
    NoVoltageChannels,
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One cycle re-sampled onto the ideal grid `t in [0, 1/60)` with the
/// estimated zero crossing at sample 0. Length is exactly `round(fs/60)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncedCycle {
    pub samples: Vec<f64>,
}

/// Incremental cycle splitter. Feed samples one at a time; a raw window
/// (guard sample, one cycle, guard sample) pops out at each completed
/// cycle. Windows whose length is inconsistent with the nominal cycle
/// are rejected and counted as disturbed.
pub struct CycleExtractor {
    cycle: usize,
    max_window: usize,
    prev: Option<f64>,
    pending: Vec<f64>,
    has_start: bool,
    saw_transition: bool,
    rejected: u64,
    no_crossing_runs: u64,
}

impl CycleExtractor {
    pub fn new(fs: f64) -> Self {
        let cycle = (fs / NOMINAL_FREQ_HZ).round().max(2.0) as usize;
        CycleExtractor {
            cycle,
            max_window: 2 * cycle + 4,
            prev: None,
            pending: Vec::with_capacity(2 * cycle + 6),
            has_start: false,
            saw_transition: false,
            rejected: 0,
            no_crossing_runs: 0,
        }
    }

    /// Number of windows dropped for inconsistent length or runaway
    /// crossing-free stretches.
    pub fn rejected(&self) -> u64 {
        self.rejected + self.no_crossing_runs
    }

    pub fn push(&mut self, sample: f64) -> Option<Vec<f64>> {
        let prev = self.prev.replace(sample);
        if self.has_start {
            self.pending.push(sample);
        }
        let Some(prev) = prev else {
            return None;
        };
        let transition = prev < 0.0 && sample >= 0.0;
        if !transition {
            if self.has_start && self.pending.len() > self.max_window {
                // Crossing-free for far too long; drop the run.
                self.pending.clear();
                self.has_start = false;
                self.rejected += 1;
            }
            return None;
        }
        self.saw_transition = true;
        let window = if self.has_start { Some(std::mem::take(&mut self.pending)) } else { None };
        // A new window starts at the sample before this transition.
        self.pending.clear();
        self.pending.extend([prev, sample]);
        self.has_start = true;

        let window = window?;
        let expect = self.cycle + 2;
        if window.len().abs_diff(expect) > 2 {
            self.rejected += 1;
            None
        } else {
            Some(window)
        }
    }

    /// Close the stream: a trailing partial cycle counts as rejected, and
    /// a stream with no crossings at all counts one rejection.
    pub fn finish(&mut self) {
        if !self.saw_transition && self.prev.is_some() {
            self.no_crossing_runs += 1;
        } else if self.has_start && self.pending.len() > 2 {
            self.rejected += 1;
        }
        self.pending.clear();
        self.has_start = false;
    }
}

/// Split an in-memory signal into raw cycle windows. Returns the windows
/// and the rejected count; a signal with no crossings yields zero
/// windows and one rejection.
pub fn extract_cycles(x: &[f64], fs: f64) -> (Vec<Vec<f64>>, u64) {
    let mut ex = CycleExtractor::new(fs);
    let mut out = Vec::new();
    for &s in x {
        if let Some(w) = ex.push(s) {
            out.push(w);
        }
    }
    ex.finish();
    (out, ex.rejected())
}

/// Re-sample a raw window onto the ideal time grid.
///
/// The zero crossing at each end of the window is estimated from the
/// local slope; the window is assigned a uniformly spaced relative time
/// vector pinned so those crossings land at 0 and 1/60 s, and linear
/// interpolation maps the samples onto the grid.
pub fn synchronize_cycle(window: &[f64], fs: f64) -> Result<SyncedCycle, CyclicError> {
    let n = window.len();
    if n < 4 {
        return Err(CyclicError::TooShort { n, needed: 4 });
    }
    let dt = 1.0 / fs;
    let out_len = (fs / NOMINAL_FREQ_HZ).round() as usize;

    let m1 = (window[1] - window[0]) / dt;
    let m2 = (window[n - 1] - window[n - 2]) / dt;
    if m1 == 0.0 || m2 == 0.0 {
        return Err(CyclicError::ZeroSlope);
    }
    // Crossing offsets inside the boundary sample pairs, in samples.
    let alpha = -window[0] / (window[1] - window[0]);
    let beta = -window[n - 2] / (window[n - 1] - window[n - 2]);
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(CyclicError::ZeroSlope);
    }

    // Relative time of the first and last window samples, with the first
    // crossing at t = 0 and the second at t = 1/60.
    let t_first = -alpha * dt;
    let t_last = 1.0 / NOMINAL_FREQ_HZ + (1.0 - beta) * dt;
    let dt_r = (t_last - t_first) / (n - 1) as f64;
    if dt_r <= 0.0 {
        return Err(CyclicError::ZeroSlope);
    }

    let mut samples = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let t = j as f64 * dt;
        let pos = (t - t_first) / dt_r;
        let k = (pos.floor().max(0.0) as usize).min(n - 2);
        let frac = (pos - k as f64).clamp(0.0, 1.0);
        samples.push(window[k] + frac * (window[k + 1] - window[k]));
    }
    Ok(SyncedCycle { samples })
}
