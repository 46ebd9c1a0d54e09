//! Harmonic resonance: sustained high-frequency content in a voltage
//! signal. Requires elevated THD, a strong sixth-or-higher harmonic, and
//! dense first-derivative sign changes across several cycles. Only
//! consulted when ferroresonance came back negative.

use super::{Detection, Event, PhaseSet, ThresholdConfig};
use crate::dsp::{self, NominalValues, THD_HARMONIC_COUNT};

pub fn detect_harmonic_resonance(
    v: &[f64],
    nominals: &NominalValues,
    cfg: &ThresholdConfig,
) -> Option<Detection> {
    if nominals.voltage_degenerate() {
        return None;
    }
    let nc = nominals.nc;
    let cycle = nominals.nc_samples().max(2);

    let profile = dsp::harmonic_profile(v, nominals.fs, THD_HARMONIC_COUNT).ok()?;
    let thd = dsp::thd_of_profile(&profile);
    if thd <= cfg.thd_min {
        return None;
    }

    let (order, strength) = (6..=profile.max_order())
        .map(|n| (n, profile.h(n)))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    if strength <= cfg.hr_harm {
        return None;
    }

    // Sign-change density per cycle.
    let need = cfg.hr_sign_frac * nc;
    let qualifying = v
        .chunks_exact(cycle)
        .filter(|chunk| {
            dsp::derivative(chunk, 1)
                .map(|d| dsp::sign_changes(&d).len() as f64 >= need)
                .unwrap_or(false)
        })
        .count();
    if (qualifying as f64) < cfg.hr_cycles {
        return None;
    }

    Some(
        Detection::new(Event::HarmonicResonance, PhaseSet::EMPTY)
            .with("thd", thd)
            .with("dominant_order", order as f64)
            .with("dominant_ratio", strength)
            .with("qualifying_cycles", qualifying as f64),
    )
}
