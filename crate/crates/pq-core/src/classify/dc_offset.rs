//! DC offset in an analog channel, confirmed in both domains: the 0 Hz
//! spectral component against the fundamental, and per-cycle means
//! against the nominal peak.

use super::{cycle_means, Detection, Event, PhaseSet, ThresholdConfig};
use crate::dsp::{self, NominalValues};

pub fn detect_dc_offset(
    x: &[f64],
    nominals: &NominalValues,
    cfg: &ThresholdConfig,
    on_current: bool,
) -> Option<Detection> {
    let peak_nom = if on_current { nominals.i_peak_nom } else { nominals.v_peak_nom };
    if peak_nom <= 0.0 {
        return None;
    }

    // Frequency domain: |X_0| / |X_1|.
    let profile = dsp::harmonic_profile(x, nominals.fs, 1).ok()?;
    let h0 = profile.h(0);
    if h0 <= cfg.tau_f_dc {
        return None;
    }

    // Time domain validation: some cycle's mean beyond half the nominal peak.
    let means = cycle_means(x, nominals.nc);
    let (idx, worst) = means
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(k, &m)| (k, m))?;
    if worst.abs() <= cfg.dc_cycle_mean_frac * peak_nom {
        return None;
    }

    Some(
        Detection::new(Event::DcOffset, PhaseSet::EMPTY)
            .with("h0_ratio", h0)
            .with("max_cycle_mean", worst)
            .with("max_cycle_index", idx as f64),
    )
}
