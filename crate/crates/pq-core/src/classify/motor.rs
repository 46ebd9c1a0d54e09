//! Motor starting (direct-on-line) and electronically started (VFD)
//! motors.
//!
//! Direct starts show a sustained voltage sag with a sustained current
//! spike on all three phases and little harmonic content. VFD starts are
//! recognized from the pulse count of the rectifier current and the
//! dominant harmonics on either side of integer multiples of that pulse
//! number.

use std::collections::BTreeMap;

use super::{Detection, Event, PhaseSet, RecordContext};
use crate::dsp::{self, Phase, THD_HARMONIC_COUNT};

pub fn detect_motor_starting(ctx: &RecordContext<'_>) -> Option<Detection> {
    let cfg = ctx.cfg;
    let nc = ctx.nc;
    let window = ctx.nominals[0].nc_samples().max(1);
    let need = (cfg.motor_cycles * nc).round() as usize;

    // Sag + spike must hold simultaneously on all three phases; find the
    // longest run where every per-phase condition is true.
    let mut rms_v = Vec::new();
    let mut rms_i = Vec::new();
    for phase in Phase::ALL {
        rms_v.push(dsp::rms(ctx.record.voltage(phase), window).ok()?);
        rms_i.push(dsp::rms(ctx.record.current(phase), window).ok()?);
    }
    let len = rms_v[0].len();
    let spike_level = cfg.motor_spike * ctx.ct.i_primary;
    let mut run = 0usize;
    let mut best = 0usize;
    let mut min_v_ratio = f64::INFINITY;
    let mut max_i_rms = 0.0f64;
    for k in 0..len {
        let ok = Phase::ALL.iter().all(|&p| {
            let nom = ctx.nominal(p);
            rms_v[p as usize][k] < cfg.motor_sag * nom.v_rms_nom
                && rms_i[p as usize][k] > spike_level
        });
        if ok {
            run += 1;
            best = best.max(run);
            for p in 0..3 {
                min_v_ratio = min_v_ratio.min(rms_v[p][k] / ctx.nominals[p].v_rms_nom);
                max_i_rms = max_i_rms.max(rms_i[p][k]);
            }
        } else {
            run = 0;
        }
    }
    if best < need {
        return None;
    }

    // Motor starts are low in harmonics on every channel.
    for phase in Phase::ALL {
        for signal in [ctx.record.voltage(phase), ctx.record.current(phase)] {
            let profile = dsp::harmonic_profile(signal, ctx.fs, THD_HARMONIC_COUNT).ok()?;
            if profile.max_above_fundamental() >= cfg.motor_harm {
                return None;
            }
        }
    }

    Some(
        Detection::new(Event::MotorStarting, PhaseSet::all())
            .with("run_cycles", best as f64 / nc)
            .with("min_v_ratio", min_v_ratio)
            .with("max_i_rms", max_i_rms),
    )
}

pub fn detect_vfd_start(ctx: &RecordContext<'_>) -> Option<Detection> {
    let cfg = ctx.cfg;
    let cycle = ctx.nominals[0].nc_samples().max(2);

    // Count 50%-of-cycle-max crossings per half-cycle on each phase.
    let mut all_k: Vec<usize> = Vec::new();
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for phase in Phase::ALL {
        let i = ctx.record.current(phase);
        let ks = half_cycle_crossings(i, cycle);
        let busy: Vec<usize> =
            ks.iter().enumerate().filter(|(_, &k)| k > 2).map(|(h, _)| h).collect();
        if (busy.len() as f64) < 2.0 * cfg.vfd_cross_cycles {
            return None;
        }
        spans.push((busy[0], *busy.last().unwrap()));
        all_k.extend(ks.into_iter().filter(|&k| k > 2));
    }

    // Np = 3/2 * mode(K).
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for k in &all_k {
        *counts.entry(*k).or_insert(0) += 1;
    }
    let (&mode_k, _) = counts.iter().max_by_key(|(_, &c)| c)?;
    let np = ((3.0 / 2.0) * mode_k as f64).round() as usize;
    if np < 2 {
        return None;
    }

    // The harmonics beside each integer multiple of Np must dominate the
    // harmonic at the multiple itself, for the first four multiples.
    for phase in Phase::ALL {
        let profile =
            dsp::harmonic_profile(ctx.record.current(phase), ctx.fs, 4 * np + 1).ok()?;
        for k in 1..=4 {
            let center = profile.h(k * np);
            if !(profile.h(k * np + 1) > cfg.tau_v * center
                && profile.h(k * np - 1) > cfg.tau_v * center)
            {
                return None;
            }
        }
    }

    // All three phase currents must grow over the event.
    for (phase, &(h0, h1)) in Phase::ALL.iter().zip(&spans) {
        let i = ctx.record.current(*phase);
        let hc = cycle / 2;
        let first = rms_of(&i[h0 * hc..((h0 + 2) * hc).min(i.len())]);
        let last_start = (h1 * hc).min(i.len().saturating_sub(2 * hc));
        let last = rms_of(&i[last_start..(last_start + 2 * hc).min(i.len())]);
        if last <= first {
            return None;
        }
    }

    Some(
        Detection::new(Event::VfdStarting, PhaseSet::all())
            .with("np_pulses", np as f64)
            .with("mode_crossings", mode_k as f64),
    )
}

fn rms_of(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|&v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Crossing counts of `|i|` against 50% of its cycle's maximum, per
/// half-cycle, with a small hysteresis band so threshold chatter does
/// not inflate the count.
fn half_cycle_crossings(i: &[f64], cycle: usize) -> Vec<usize> {
    let hc = (cycle / 2).max(1);
    let mut out = Vec::new();
    for (c, chunk) in i.chunks_exact(cycle).enumerate() {
        let cmax = chunk.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if cmax <= 0.0 {
            out.extend([0, 0]);
            continue;
        }
        let hi = 0.52 * cmax;
        let lo = 0.48 * cmax;
        for half in 0..2 {
            let seg = &i[c * cycle + half * hc..(c * cycle + (half + 1) * hc).min(i.len())];
            let mut state = seg.first().map(|&v| v.abs() > 0.5 * cmax).unwrap_or(false);
            let mut k = 0usize;
            for &v in seg {
                let a = v.abs();
                if state && a < lo {
                    state = false;
                    k += 1;
                } else if !state && a > hi {
                    state = true;
                    k += 1;
                }
            }
            out.push(k);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ThresholdConfig;
    use crate::synth::{self, DisturbanceSpec, GeneratorConfig};

    fn run(kind: Event, mutate: impl FnOnce(&mut DisturbanceSpec)) -> Option<Detection> {
        let gen = GeneratorConfig::default();
        let mut spec = DisturbanceSpec::defaults(kind, 31);
        mutate(&mut spec);
        let (rec, _) = synth::synthesize(&gen, &spec).unwrap();
        let cfg = ThresholdConfig::default();
        let ctx = RecordContext::build(&rec, &cfg)?;
        match kind {
            Event::MotorStarting => detect_motor_starting(&ctx),
            Event::VfdStarting => detect_vfd_start(&ctx),
            _ => unreachable!(),
        }
    }

    #[test]
    fn three_phase_start_detected() {
        let det = run(Event::MotorStarting, |_| {}).expect("detection");
        assert!(det.evidence["run_cycles"] >= 10.0);
        assert!(det.evidence["min_v_ratio"] < 0.95);
    }

    #[test]
    fn two_phase_start_rejected() {
        assert!(run(Event::MotorStarting, |s| {
            s.params.insert("phases".into(), 2.0);
        })
        .is_none());
    }

    #[test]
    fn short_start_rejected_as_fault_like() {
        assert!(run(Event::MotorStarting, |s| {
            s.params.insert("dur_cycles".into(), 6.0);
        })
        .is_none());
    }

    #[test]
    fn six_pulse_vfd_identified() {
        let det = run(Event::VfdStarting, |_| {}).expect("detection");
        assert_eq!(det.evidence["np_pulses"], 6.0);
        assert_eq!(det.evidence["mode_crossings"], 4.0);
    }

    #[test]
    fn twelve_pulse_vfd_identified() {
        let det = run(Event::VfdStarting, |s| {
            s.params.insert("n_pulse".into(), 12.0);
        })
        .expect("detection");
        assert_eq!(det.evidence["np_pulses"], 12.0);
        assert_eq!(det.evidence["mode_crossings"], 8.0);
    }

    #[test]
    fn clean_record_is_not_vfd() {
        let gen = GeneratorConfig::default();
        let rec = synth::generate_nominal(&gen, 31);
        let cfg = ThresholdConfig::default();
        let ctx = RecordContext::build(&rec, &cfg).unwrap();
        assert!(detect_vfd_start(&ctx).is_none());
        assert!(detect_motor_starting(&ctx).is_none());
    }
}
