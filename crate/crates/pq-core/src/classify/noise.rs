//! Induced transient noise from switching: small random spikes spread
//! over many cycles. The disturbance is isolated against a first-cycle
//! reference; spike instances are runs of large residual derivative.

use super::{cluster_indices, Confidence, Detection, Event, PhaseSet, ThresholdConfig};
use crate::dsp::{self, NominalValues, THD_HARMONIC_COUNT};

/// Harmonic ceiling for noise events: spike noise is broadband, so all
/// discrete harmonics must stay small.
const NOISE_HARMONIC_MAX: f64 = 0.05;

pub fn detect_transient_noise(
    v: &[f64],
    nominals: &NominalValues,
    cfg: &ThresholdConfig,
) -> Option<Detection> {
    if nominals.voltage_degenerate() {
        return None;
    }
    let nc = nominals.nc;
    let vq = nominals.v_peak_nom;
    let residual = dsp::first_cycle_residual(v, nc).ok()?;

    // (i) overall difference from the ideal waveform.
    let mean_diff = residual.iter().sum::<f64>() / residual.len() as f64;
    if mean_diff.abs() <= cfg.tau_n {
        return None;
    }

    // (ii) harmonic content stays below 5% of the fundamental.
    let profile = dsp::harmonic_profile(v, nominals.fs, THD_HARMONIC_COUNT).ok()?;
    if profile.max_above_fundamental() >= NOISE_HARMONIC_MAX {
        return None;
    }

    // (iii) spike instances: runs of residual derivative above 10% of
    // the nominal peak.
    let deriv = dsp::derivative(&residual, 1).ok()?;
    let gate = cfg.noise_deriv_frac * vq;
    let hits: Vec<usize> =
        deriv.iter().enumerate().filter(|(_, d)| d.abs() > gate).map(|(k, _)| k).collect();
    let instances = cluster_indices(&hits, 1);
    let count = instances.len();
    if count == 0 {
        return None;
    }

    // (iv) persistence across cycles.
    let span = (instances.last().unwrap().1 - instances[0].0) as f64;
    if span < cfg.noise_cycles * nc {
        return None;
    }
    // (v) at least one occurrence per cycle on average.
    if (count as f64) / (span / nc) < cfg.noise_per_cycle {
        return None;
    }
    // (vi) enough total instances.
    if (count as f64) < cfg.noise_count {
        return None;
    }

    // (vii) samples above the nominal peak upgrade the confidence.
    let exceed = v.iter().filter(|s| s.abs() > vq).count();
    let confidence = if exceed as f64 >= cfg.noise_peak_exceed {
        Confidence::High
    } else {
        Confidence::Medium
    };

    let mut det = Detection::new(Event::TransientNoise, PhaseSet::EMPTY)
        .with("instance_count", count as f64)
        .with("residual_mean", mean_diff.abs())
        .with("span_cycles", span / nc)
        .with("peak_exceed_count", exceed as f64);
    det.confidence = confidence;
    Some(det)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ThresholdConfig;
    use crate::synth::{self, DisturbanceSpec, GeneratorConfig};
    use crate::Event;

    fn run(spec: &DisturbanceSpec) -> Option<Detection> {
        let gen = GeneratorConfig::default();
        let (rec, truth) = synth::synthesize(&gen, spec).unwrap();
        let phase = truth.phases.iter().next().unwrap();
        let nom = crate::dsp::nominal_values(&rec, phase).unwrap();
        detect_transient_noise(rec.voltage(phase), &nom, &ThresholdConfig::default())
    }

    #[test]
    fn spikes_exceeding_peak_are_high_confidence() {
        let det = run(&DisturbanceSpec::defaults(Event::TransientNoise, 3)).expect("detection");
        assert_eq!(det.confidence, Confidence::High);
        assert!(det.evidence["instance_count"] >= 20.0);
        assert!(det.evidence["peak_exceed_count"] >= 5.0);
    }

    #[test]
    fn spikes_below_peak_are_medium_confidence() {
        // Clean record: with measurement noise, ordinary crest samples
        // straddle the first-cycle peak and the "samples above nominal
        // peak" criterion loses its meaning.
        let mut spec = DisturbanceSpec::defaults(Event::TransientNoise, 3);
        spec.params.insert("exceed_count".into(), 0.0);
        spec.params.insert("snr_db".into(), 0.0);
        let det = run(&spec).expect("detection");
        assert_eq!(det.confidence, Confidence::Medium);
        assert_eq!(det.evidence["peak_exceed_count"], 0.0);
    }

    #[test]
    fn clean_record_is_none() {
        let gen = GeneratorConfig::default();
        let rec = synth::generate_nominal(&gen, 5);
        let nom = crate::dsp::nominal_values(&rec, crate::dsp::Phase::A).unwrap();
        assert!(detect_transient_noise(&rec.va, &nom, &ThresholdConfig::default()).is_none());
    }
}
