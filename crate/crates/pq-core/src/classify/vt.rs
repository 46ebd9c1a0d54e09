//! Instrument transformer problems on the voltage side.
//!
//! Improper VT secondary grounding shows as a simultaneous sag on one
//! phase and swell on another with the pairwise phase angle pulled away
//! from the nominal 120 degrees. Incipient CVT failure is a sustained
//! single-phase peak deviation with undisturbed currents.

use super::{half_cycle_peaks, Detection, Event, PhaseSet, RecordContext};
use crate::dsp::{self, Phase};

pub fn detect_vt_grounding(ctx: &RecordContext<'_>) -> Option<Detection> {
    let cfg = ctx.cfg;
    let nc = ctx.nc;
    let cycle = ctx.nominals[0].nc_samples().max(2);

    // Per-phase, per-half-cycle peak ratios.
    let mut ratios: Vec<Vec<f64>> = Vec::with_capacity(3);
    for phase in Phase::ALL {
        let vq = ctx.nominal(phase).v_peak_nom;
        if vq <= 0.0 {
            return None;
        }
        ratios.push(
            half_cycle_peaks(ctx.record.voltage(phase), nc)
                .iter()
                .map(|(_, p)| p.abs() / vq)
                .collect(),
        );
    }
    let halves = ratios.iter().map(Vec::len).min()?;

    // Simultaneous sag and swell on two different phases.
    let mut sag_phase = None;
    let mut swell_phase = None;
    let mut first_half = usize::MAX;
    let mut last_half = 0usize;
    for h in 0..halves {
        for p in 0..3 {
            for q in 0..3 {
                if p == q {
                    continue;
                }
                if ratios[p][h] < 1.0 - cfg.vt_sag && ratios[q][h] > 1.0 + cfg.vt_swell {
                    sag_phase = Some(Phase::ALL[p]);
                    swell_phase = Some(Phase::ALL[q]);
                    first_half = first_half.min(h);
                    last_half = last_half.max(h);
                }
            }
        }
    }
    let (sag_phase, swell_phase) = (sag_phase?, swell_phase?);

    // Pairwise angles over the disturbed span, extended to whole cycles.
    let hc = cycle / 2;
    let n = ctx.record.va.len();
    let start = (first_half * hc / cycle) * cycle;
    let mut end = ((last_half + 1) * hc).div_ceil(cycle) * cycle;
    end = end.min(n);
    if end < start + cycle {
        end = (start + cycle).min(n);
    }
    let window = start..end;

    let mut worst = 0.0f64;
    for (a, b) in [(Phase::A, Phase::B), (Phase::B, Phase::C), (Phase::A, Phase::C)] {
        let va = &ctx.record.voltage(a)[window.clone()];
        let vb = &ctx.record.voltage(b)[window.clone()];
        if let Ok(theta) = dsp::phase_angle(va, vb) {
            worst = worst.max((theta - 120.0).abs());
        }
    }
    if worst <= cfg.vt_angle_dev {
        return None;
    }

    let mut phases = PhaseSet::single(sag_phase);
    phases.insert(swell_phase);
    Some(
        Detection::new(Event::VtGrounding, phases)
            .with("worst_angle_dev", worst)
            .with("sag_phase", sag_phase as usize as f64)
            .with("swell_phase", swell_phase as usize as f64),
    )
}

pub fn detect_cvt_failure(ctx: &RecordContext<'_>) -> Option<Detection> {
    let cfg = ctx.cfg;
    let nc = ctx.nc;
    let need_halves = (cfg.cvt_cycles * 2.0).round() as usize;

    // Sustained peak deviation, phase by phase.
    let mut candidates = Vec::new();
    for phase in Phase::ALL {
        let vq = ctx.nominal(phase).v_peak_nom;
        if vq <= 0.0 {
            return None;
        }
        let peaks = half_cycle_peaks(ctx.record.voltage(phase), nc);
        let mut run = 0usize;
        let mut best = 0usize;
        let mut worst_dev = 0.0f64;
        for (_, p) in &peaks {
            let dev = (p.abs() / vq - 1.0).abs();
            if dev > cfg.cvt_peak_dev {
                run += 1;
                best = best.max(run);
                worst_dev = worst_dev.max(dev);
            } else {
                run = 0;
            }
        }
        if best >= need_halves {
            candidates.push((phase, best, worst_dev));
        }
    }
    // CVTs are single-phase devices: the deviation must be confined to
    // exactly one phase.
    if candidates.len() != 1 {
        return None;
    }
    let (phase, run_halves, worst_dev) = candidates[0];

    // The disturbed phase must differ from its own first cycle.
    let vq = ctx.nominal(phase).v_peak_nom;
    let res = dsp::first_cycle_residual(ctx.record.voltage(phase), nc).ok()?;
    if !res.iter().any(|r| r.abs() / vq > cfg.tau_delta) {
        return None;
    }

    // All current channels must be undisturbed.
    for p in Phase::ALL {
        let iq = ctx.nominal(p).i_peak_nom;
        if iq <= 0.0 {
            return None;
        }
        let res_i = dsp::first_cycle_residual(ctx.record.current(p), nc).ok()?;
        if res_i.iter().any(|r| r.abs() / iq > cfg.tau_delta) {
            return None;
        }
    }

    Some(
        Detection::new(Event::CvtFailure, PhaseSet::single(phase))
            .with("peak_dev", worst_dev)
            .with("run_cycles", run_halves as f64 / 2.0),
    )
}
