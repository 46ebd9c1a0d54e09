//! High-speed reclosing with tapped motor loads: the RMS voltage decays
//! from nominal to (near) zero and later steps back up when the breaker
//! recloses. The event's three characteristic points are `t1` (decay
//! start), `t2` (voltage at zero), and `t3` (reclose); a reclose within
//! thirty cycles of `t2` is flagged high-speed.

use super::{Detection, Event, PhaseSet, ThresholdConfig};
use crate::dsp::{self, NominalValues};

pub fn detect_hs_reclosing(
    v: &[f64],
    nominals: &NominalValues,
    cfg: &ThresholdConfig,
) -> Option<Detection> {
    if nominals.voltage_degenerate() {
        return None;
    }
    let nc = nominals.nc;
    let vq = nominals.v_rms_nom;
    let window = ((nc / 2.0).round() as usize).max(1);
    let r = dsp::rms(v, window).ok()?;

    // t1: RMS first sags below the decay threshold.
    let t1 = r.iter().position(|&x| x < cfg.tau_s * vq)?;

    // t2: RMS reaches (approximately) zero, else its minimum; either way
    // the decay must reach below half of nominal.
    let tail = &r[t1..];
    let t2 = match tail.iter().position(|&x| x < cfg.tau_zero * vq) {
        Some(k) => t1 + k,
        None => {
            let (k, &min) = tail
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))?;
            if min >= cfg.decay_floor * vq {
                return None;
            }
            t1 + k
        }
    };
    if t2 <= t1 {
        return None;
    }

    // Decay shape checks: the median sits between the endpoints, the
    // slope is downward on average, and the decay is not a sudden step.
    let decay = &r[t1..=t2];
    let mut sorted = decay.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if !(median < decay[0] && median > decay[decay.len() - 1]) {
        return None;
    }
    let d = dsp::derivative(decay, 1).ok()?;
    if d.iter().sum::<f64>() / d.len() as f64 >= 0.0 {
        return None;
    }
    let max_decay_step = d.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if max_decay_step / vq >= cfg.tau_l {
        return None;
    }

    // t3: the RMS steps up by the reclose threshold in one sample.
    let after = &r[t2..];
    let da = dsp::derivative(after, 1).ok()?;
    let step = da.iter().position(|&x| x / vq > cfg.tau_u)?;
    let t3 = t2 + step + 1;

    let gap_cycles = (t3 - t2) as f64 / nc;
    let high_speed = gap_cycles <= cfg.tau_hs;

    Some(
        Detection::new(Event::HsReclosing, PhaseSet::EMPTY)
            .with("t1", t1 as f64)
            .with("t2", t2 as f64)
            .with("t3", t3 as f64)
            .with("gap_cycles", gap_cycles)
            .with("high_speed", if high_speed { 1.0 } else { 0.0 }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{self, DisturbanceSpec, GeneratorConfig};
    use crate::Event;

    fn run(spec: &DisturbanceSpec) -> Option<Detection> {
        let gen = GeneratorConfig::default();
        let (rec, truth) = synth::synthesize(&gen, spec).unwrap();
        let phase = truth.phases.iter().next().unwrap();
        let nom = crate::dsp::nominal_values(&rec, phase).unwrap();
        detect_hs_reclosing(rec.voltage(phase), &nom, &ThresholdConfig::default())
    }

    #[test]
    fn slow_reclose_detected_without_flag() {
        let mut spec = DisturbanceSpec::defaults(Event::HsReclosing, 9);
        spec.params.insert("gap_cycles".into(), 45.0);
        let det = run(&spec).expect("detection");
        assert_eq!(det.evidence["high_speed"], 0.0);
        assert!(det.evidence["gap_cycles"] > 30.0);
    }

    #[test]
    fn fast_reclose_flagged_high_speed() {
        let mut spec = DisturbanceSpec::defaults(Event::HsReclosing, 9);
        spec.params.insert("gap_cycles".into(), 12.0);
        let det = run(&spec).expect("detection");
        assert_eq!(det.evidence["high_speed"], 1.0);
        assert!(det.evidence["gap_cycles"] < 30.0);
    }

    #[test]
    fn shallow_sag_is_none() {
        let mut spec = DisturbanceSpec::defaults(Event::HsReclosing, 9);
        spec.params.insert("decay_depth".into(), 0.7);
        assert!(run(&spec).is_none());
    }
}
