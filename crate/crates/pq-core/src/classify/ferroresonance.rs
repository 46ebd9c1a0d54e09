//! Ferroresonance: square-wave-like voltage with recurring large
//! sample-to-sample jumps and harmonic content, while the current stays
//! zero or nominal (the line is de-energized).

use super::{cluster_indices, Detection, Event, PhaseSet, ThresholdConfig};
use crate::dsp::{self, NominalValues, THD_HARMONIC_COUNT};

pub fn detect_ferroresonance(
    v: &[f64],
    i: &[f64],
    nominals: &NominalValues,
    cfg: &ThresholdConfig,
) -> Option<Detection> {
    if nominals.voltage_degenerate() {
        return None;
    }
    let nc = nominals.nc;

    // (i) + (ii): large voltage jumps, often enough, for long enough.
    let dv = dsp::derivative(v, 1).ok()?;
    let gate = cfg.tau_ferro * nominals.v_peak_nom;
    let hits: Vec<usize> =
        dv.iter().enumerate().filter(|(_, d)| d.abs() > gate).map(|(k, _)| k).collect();
    let clusters = cluster_indices(&hits, 1);
    if (clusters.len() as f64) < cfg.ferro_min_hits {
        return None;
    }
    let max_gap = clusters
        .windows(2)
        .map(|w| (w[1].0 - w[0].1) as f64)
        .fold(0.0f64, f64::max);
    if max_gap > cfg.ferro_gap * nc {
        return None;
    }
    let span = (clusters.last().unwrap().1 - clusters[0].0) as f64;
    if span < cfg.ferro_span * nc {
        return None;
    }

    // (iii) harmonic content in the voltage.
    let profile = dsp::harmonic_profile(v, nominals.fs, THD_HARMONIC_COUNT).ok()?;
    if profile.max_above_fundamental() <= cfg.ferro_harm {
        return None;
    }

    // (iv) current recorded as zero or nominal.
    let i_rms = (i.iter().map(|&x| x * x).sum::<f64>() / i.len() as f64).sqrt();
    let sign_ratio = match dsp::derivative(i, 1) {
        Ok(di) => dsp::sign_changes(&di).len() as f64 / i.len() as f64,
        Err(_) => return None,
    };
    let current_ok = i_rms <= f64::EPSILON || sign_ratio < cfg.tau_i;
    if !current_ok {
        return None;
    }

    Some(
        Detection::new(Event::Ferroresonance, PhaseSet::EMPTY)
            .with("jump_count", clusters.len() as f64)
            .with("span_cycles", span / nc)
            .with("current_sign_ratio", sign_ratio),
    )
}
