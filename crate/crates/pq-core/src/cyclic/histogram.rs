//! Cyclic and residual histograms: per-sample-position histograms over
//! many synchronized cycles, concatenated into a bins-by-Nc matrix.

use super::{CyclicError, SyncedCycle};

pub const DEFAULT_BINS: usize = 1024;

/// A bins-by-columns count matrix with shared uniform bin edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2d {
    pub bins: usize,
    /// Number of sample positions (columns).
    pub columns: usize,
    /// Counts in column-major order: `counts[col * bins + bin]`.
    pub counts: Vec<u64>,
    pub lo: f64,
    pub hi: f64,
}

impl Histogram2d {
    pub fn new(bins: usize, columns: usize, lo: f64, hi: f64) -> Self {
        assert!(bins > 0 && columns > 0);
        let hi = if hi > lo { hi } else { lo + 1.0 };
        Histogram2d { bins, columns, counts: vec![0; bins * columns], lo, hi }
    }

    pub fn bin_of(&self, value: f64) -> usize {
        let t = (value - self.lo) / (self.hi - self.lo);
        ((t * self.bins as f64).floor() as isize).clamp(0, self.bins as isize - 1) as usize
    }

    pub fn count(&self, bin: usize, column: usize) -> u64 {
        self.counts[column * self.bins + bin]
    }

    pub fn accumulate(&mut self, cycle: &[f64]) {
        for (col, &v) in cycle.iter().enumerate().take(self.columns) {
            let bin = self.bin_of(v);
            self.counts[col * self.bins + bin] += 1;
        }
    }

    pub fn column_sum(&self, column: usize) -> u64 {
        self.counts[column * self.bins..(column + 1) * self.bins].iter().sum()
    }

    pub fn occupied_bins(&self, column: usize) -> usize {
        self.counts[column * self.bins..(column + 1) * self.bins]
            .iter()
            .filter(|&&c| c > 0)
            .count()
    }

    /// Edges of the `bins + 1` bin boundaries.
    pub fn edges(&self) -> impl Iterator<Item = f64> + '_ {
        let step = (self.hi - self.lo) / self.bins as f64;
        (0..=self.bins).map(move |k| self.lo + k as f64 * step)
    }

    /// Merge counts from another histogram with identical geometry.
    pub fn merge(&mut self, other: &Histogram2d) {
        assert_eq!(self.bins, other.bins);
        assert_eq!(self.columns, other.columns);
        assert_eq!((self.lo, self.hi), (other.lo, other.hi));
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

fn extrema<'a>(cycles: impl Iterator<Item = &'a [f64]>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut any = false;
    for c in cycles {
        for &v in c {
            lo = lo.min(v);
            hi = hi.max(v);
            any = true;
        }
    }
    any.then_some((lo, hi))
}

/// Histogram of the nth sample over all synchronized cycles, for each n.
/// Bin edges span the global minimum and maximum of all cycles.
pub fn cyclic_histogram(cycles: &[SyncedCycle], bins: usize) -> Result<Histogram2d, CyclicError> {
    let width = cycles.first().map(|c| c.samples.len()).ok_or(CyclicError::EmptyStream)?;
    let (lo, hi) =
        extrema(cycles.iter().map(|c| c.samples.as_slice())).ok_or(CyclicError::EmptyStream)?;
    let mut h = Histogram2d::new(bins, width, lo, hi);
    for c in cycles {
        h.accumulate(&c.samples);
    }
    Ok(h)
}

/// Histogram of `cycle_k - cycle_1` for k >= 2, with its own edges. The
/// subtraction magnifies cycle-to-cycle activity that the cyclic
/// histogram compresses into a couple of bins.
pub fn residual_histogram(cycles: &[SyncedCycle], bins: usize) -> Result<Histogram2d, CyclicError> {
    if cycles.len() < 2 {
        return Err(CyclicError::TooFewCycles);
    }
    let first = &cycles[0].samples;
    let width = first.len();
    let diffs: Vec<Vec<f64>> = cycles[1..]
        .iter()
        .map(|c| c.samples.iter().zip(first).map(|(a, b)| a - b).collect())
        .collect();
    let (lo, hi) =
        extrema(diffs.iter().map(|d| d.as_slice())).ok_or(CyclicError::EmptyStream)?;
    let mut h = Histogram2d::new(bins, width, lo, hi);
    for d in &diffs {
        h.accumulate(d);
    }
    Ok(h)
}
