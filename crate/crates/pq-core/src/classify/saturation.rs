//! Current transformer saturation.
//!
//! Gated on a located fault (current beyond twice nominal peak for at
//! least a quarter cycle). Six indicators are then evaluated and mapped
//! onto four confidence tiers: current beyond the CT rating, DC offset,
//! loss of DC offset, irregular zero-crossing spacing, a large third
//! derivative ("kneeing"), and elevated second/third harmonics.

use super::{locate_fault, zero_crossings, Confidence, Detection, Event, PhaseSet, ThresholdConfig};
use crate::dsp::{self, NominalValues};
use crate::ingest::CtRating;

pub fn detect_ct_saturation(
    i: &[f64],
    nominals: &NominalValues,
    cfg: &ThresholdConfig,
    ct: &CtRating,
) -> Option<Detection> {
    if nominals.current_degenerate() {
        return None;
    }
    let nc = nominals.nc;
    let cycle = nominals.nc_samples();
    let (start, end) = locate_fault(i, nominals.i_peak_nom, cfg, nc)?;
    let fault = &i[start..=end];

    // (Eq. service factor) current versus the CT primary rating.
    let max_ratio = i.iter().fold(0.0f64, |a, &v| a.max(v.abs())) / ct.i_primary;
    let flag_rating = max_ratio > cfg.tau_ct;

    // DC offset: per-cycle average of positive and negative extremes.
    let offsets = cycle_offsets(fault, cycle);
    let i_dc = offsets.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let dc_ratio = i_dc / nominals.i_peak_nom;
    let flag_dc = dc_ratio > cfg.tau_dc;
    let flag_dc_loss = match (offsets.first(), offsets.last()) {
        (Some(&first), Some(&last)) if offsets.len() > 1 => last.abs() < first.abs(),
        _ => false,
    };

    // Zero-crossing spacing versus half a nominal cycle.
    let crossings = zero_crossings(fault);
    let worst_spacing = crossings
        .windows(2)
        .map(|w| ((w[1] - w[0]) as f64 - nc / 2.0).abs())
        .fold(0.0f64, f64::max);
    let flag_zc = !crossings.is_empty() && worst_spacing > cfg.tau_z;

    // Kneeing: third derivative of the fault against the first cycle.
    let flag_d3 = third_derivative_ratio(fault, &i[..cycle])
        .map(|r| r > cfg.tau_d3)
        .unwrap_or(false);

    // Harmonic content of the whole current waveform.
    let profile = dsp::harmonic_profile(i, nominals.fs, 3).ok()?;
    let h2 = profile.h(2);
    let h3 = profile.h(3);
    let flag_h2 = h2 > cfg.h2_min;
    let flag_h3 = h3 > cfg.h3_min;

    let minor = [flag_dc, flag_dc_loss, flag_zc, flag_d3, flag_h3]
        .iter()
        .filter(|&&b| b)
        .count();
    let minor_no_h3 = [flag_dc, flag_dc_loss, flag_zc, flag_d3].iter().filter(|&&b| b).count();

    let confidence = if flag_rating && flag_h2 && minor >= 3 {
        Confidence::High
    } else if flag_rating && !flag_h2 && minor >= 3 {
        Confidence::Medium
    } else if flag_rating && !flag_h2 && minor >= 2 {
        Confidence::Low
    } else if !flag_rating && flag_h2 && flag_h3 && minor_no_h3 >= 2 {
        Confidence::Low
    } else {
        return None;
    };

    let mut det = Detection::new(Event::CtSaturation, PhaseSet::EMPTY)
        .with("max_i_over_ip", max_ratio)
        .with("i_dc_ratio", dc_ratio)
        .with("zc_spacing_dev", worst_spacing)
        .with("h2", h2)
        .with("h3", h3)
        .with("fault_start", start as f64)
        .with("fault_end", end as f64);
    det.confidence = confidence;
    Some(det)
}

/// Per-cycle DC offset of the faulted section: the average of the cycle's
/// maximum and minimum. A section shorter than one cycle is treated as a
/// single cycle.
fn cycle_offsets(fault: &[f64], cycle: usize) -> Vec<f64> {
    let chunk = cycle.max(1);
    let mut out = Vec::new();
    let mut start = 0;
    while start < fault.len() {
        let end = (start + chunk).min(fault.len());
        let seg = &fault[start..end];
        let hi = seg.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lo = seg.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        out.push((hi + lo) / 2.0);
        start = end;
    }
    out
}

fn third_derivative_ratio(fault: &[f64], first_cycle: &[f64]) -> Option<f64> {
    let df = dsp::derivative(fault, 3).ok()?;
    let dc = dsp::derivative(first_cycle, 3).ok()?;
    let peak = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let denom = peak(&dc);
    if denom <= 0.0 {
        return None;
    }
    Some(peak(&df) / denom)
}
