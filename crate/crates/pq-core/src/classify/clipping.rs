//! Analog-to-digital converter clipping: a flat-topped run of samples
//! around the record maximum.

use super::{Detection, Event, PhaseSet, ThresholdConfig};
use crate::dsp;

/// Clipping with the default flat-top tolerance (exact sample equality up
/// to f64 rounding).
pub fn detect_ad_clipping(x: &[f64], cfg: &ThresholdConfig) -> Option<Detection> {
    detect_ad_clipping_with_tolerance(x, cfg, 0.0)
}

/// `abs_tol` admits digitizers whose repeated samples differ by a small
/// fixed amount (e.g. 10 V or 1 A); zero demands exact repetition.
pub fn detect_ad_clipping_with_tolerance(
    x: &[f64],
    cfg: &ThresholdConfig,
    abs_tol: f64,
) -> Option<Detection> {
    if x.len() < 3 {
        return None;
    }
    let (imax, peak) = x
        .iter()
        .enumerate()
        .map(|(k, &v)| (k, v.abs()))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;

    let w = cfg.clip_window.round() as usize;
    let lo = imax.saturating_sub(w);
    let hi = (imax + w + 1).min(x.len());
    let seg = &x[lo..hi];
    let deriv = dsp::derivative(seg, 1).ok()?;

    let tol = 1e-9 * peak + abs_tol;
    let mut run = 0usize;
    let mut best = 0usize;
    for d in &deriv {
        if d.abs() <= tol {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }

    if best as f64 > cfg.clip_run {
        Some(
            Detection::new(Event::AdClipping, PhaseSet::EMPTY)
                .with("flat_run", best as f64)
                .with("clip_level", peak),
        )
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(n: usize) -> Vec<f64> {
        (0..n).map(|k| 100.0 * (2.0 * PI * k as f64 / 16.0).sin()).collect()
    }

    /// Clamp the waveform at `level` and force `run` consecutive samples
    /// around each crest to exactly the clip level.
    fn clip(x: &mut [f64], level: f64, run: usize) {
        for v in x.iter_mut() {
            if v.abs() > level {
                *v = v.signum() * level;
            }
        }
        let n = x.len();
        for c in 0..n / 16 {
            for (center, sign) in [(c * 16 + 4, 1.0f64), (c * 16 + 12, -1.0f64)] {
                let start = center.saturating_sub(run / 2);
                for v in x.iter_mut().take((start + run).min(n)).skip(start) {
                    *v = sign * level;
                }
            }
        }
    }

    #[test]
    fn six_sample_flat_top_detected() {
        let mut x = sine(160);
        clip(&mut x, 80.0, 6);
        let det = detect_ad_clipping(&x, &ThresholdConfig::default()).expect("detection");
        assert!(det.evidence["flat_run"] >= 5.0);
        assert_eq!(det.evidence["clip_level"], 80.0);
    }

    #[test]
    fn pure_sine_not_clipped() {
        let x = sine(160);
        assert!(detect_ad_clipping(&x, &ThresholdConfig::default()).is_none());
    }

    #[test]
    fn four_sample_run_is_strictly_not_enough() {
        // Four equal samples produce three zero-derivative steps; even a
        // five-sample run (four steps) stays at the threshold and must
        // not fire.
        let mut x = sine(160);
        clip(&mut x, 80.0, 5);
        assert!(detect_ad_clipping(&x, &ThresholdConfig::default()).is_none());
        let mut y = sine(160);
        clip(&mut y, 80.0, 4);
        assert!(detect_ad_clipping(&y, &ThresholdConfig::default()).is_none());
    }

    #[test]
    fn tolerance_knob_admits_jittered_flats() {
        let mut x = sine(160);
        clip(&mut x, 80.0, 6);
        // Jitter the flats by up to 0.5; exact matching fails, a 1.0
        // tolerance recovers the detection.
        for (k, v) in x.iter_mut().enumerate() {
            if v.abs() == 80.0 {
                *v += if k % 2 == 0 { 0.4 } else { -0.4 };
            }
        }
        let cfg = ThresholdConfig::default();
        assert!(detect_ad_clipping(&x, &cfg).is_none());
        assert!(detect_ad_clipping_with_tolerance(&x, &cfg, 1.0).is_some());
    }
}
