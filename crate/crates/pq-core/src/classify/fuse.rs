//! Melted fuse: a current fault cleared in under one and a half cycles.
//! The fault's inception and clearing points are located by a fallback
//! chain: first-derivative sign changes beside the spike, a large second
//! derivative, and finally the zero crossings adjacent to the spike.

use super::{locate_fault, zero_crossings, Detection, Event, PhaseSet, ThresholdConfig};
use crate::dsp::{self, NominalValues};

pub fn detect_melted_fuse(
    i: &[f64],
    nominals: &NominalValues,
    cfg: &ThresholdConfig,
) -> Option<Detection> {
    if nominals.current_degenerate() {
        return None;
    }
    let nc = nominals.nc;
    let cycle = nominals.nc_samples().max(2);
    let (start, end) = locate_fault(i, nominals.i_peak_nom, cfg, nc)?;

    let pre_lo = start.saturating_sub(cycle);
    let post_hi = (end + 1 + cycle).min(i.len());

    let deriv = dsp::derivative(i, 1).ok()?;
    let changes = dsp::sign_changes(&deriv);

    // Inception: the sign change closest before the spike, else the first
    // large second derivative in the preceding cycle, else the nearest
    // zero crossing, else the spike boundary itself.
    let inception = changes
        .iter()
        .rev()
        .find(|&&k| k >= pre_lo && k < start)
        .copied()
        .or_else(|| second_derivative_point(i, pre_lo, start, nominals, cfg, true))
        .or_else(|| nearest_crossing(i, start, true))
        .unwrap_or(start);

    // Clearing: mirrored logic after the spike.
    let clearing = changes
        .iter()
        .find(|&&k| k > end && k < post_hi)
        .copied()
        .or_else(|| second_derivative_point(i, end + 1, post_hi, nominals, cfg, false))
        .or_else(|| nearest_crossing(i, end, false))
        .unwrap_or(end);

    if clearing <= inception {
        return None;
    }
    let clearing_cycles = (clearing - inception) as f64 / nc;
    if clearing_cycles >= cfg.tau_c {
        return None;
    }

    Some(
        Detection::new(Event::MeltedFuse, PhaseSet::EMPTY)
            .with("clearing_cycles", (clearing_cycles * 1000.0).round() / 1000.0)
            .with("inception", inception as f64)
            .with("clearing", clearing as f64),
    )
}

/// First index in `[lo, hi)` whose second derivative exceeds the gate,
/// scanning forward for inception and for clearing alike (the first
/// break after the spike is the clearing edge).
fn second_derivative_point(
    i: &[f64],
    lo: usize,
    hi: usize,
    nominals: &NominalValues,
    cfg: &ThresholdConfig,
    _inception: bool,
) -> Option<usize> {
    if hi <= lo + 2 {
        return None;
    }
    let seg = &i[lo..hi];
    let d2 = dsp::derivative(seg, 2).ok()?;
    let gate = cfg.tau_d2 * nominals.i_peak_nom;
    d2.iter().position(|&v| v.abs() > gate).map(|k| lo + k)
}

fn nearest_crossing(i: &[f64], from: usize, before: bool) -> Option<usize> {
    let crossings = zero_crossings(i);
    if before {
        crossings.iter().rev().find(|&&k| k < from).copied()
    } else {
        crossings.iter().find(|&&k| k > from).copied()
    }
}
