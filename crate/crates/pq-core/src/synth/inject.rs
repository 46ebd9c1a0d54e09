//! Per-kind disturbance waveshapes.
//!
//! Each injector is the simplest signal that satisfies the published
//! criteria of its detector, parameterized enough to generate varied
//! corpora and the negative variants used in tests. Ground truth records
//! exactly what was touched.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{DisturbanceSpec, GeneratorConfig, GroundTruth, SynthError};
use crate::classify::{Event, PhaseSet};
use crate::dsp::Phase;
use crate::ingest::EventRecord;

pub(super) fn default_params(kind: Event) -> BTreeMap<String, f64> {
    let pairs: &[(&str, f64)] = match kind {
        Event::None => &[],
        Event::CtSaturation => &[
            ("phase", 0.0),
            ("start_cycle", 8.0),
            ("dur_cycles", 6.0),
            ("fault_mult_ip", 20.0),
            ("variant_medium", 0.0),
        ],
        Event::AdClipping => {
            &[("phase", 0.0), ("on_current", 1.0), ("clip_frac", 0.8), ("run", 6.0)]
        }
        Event::TransientNoise => &[
            ("phase", 0.0),
            ("count", 25.0),
            ("exceed_count", 6.0),
            ("span_cycles", 15.0),
            ("start_cycle", 2.0),
            ("spike_frac", 0.45),
            ("exceed_frac", 0.35),
        ],
        Event::HsReclosing => &[
            ("pre_cycles", 5.0),
            ("decay_tau_cycles", 1.5),
            ("gap_cycles", 45.0),
            ("post_cycles", 6.0),
            ("decay_depth", 0.0),
        ],
        Event::DcOffset => &[
            ("phase", 0.0),
            ("on_current", 1.0),
            ("offset_frac", 0.6),
            ("start_cycle", 5.0),
        ],
        Event::MotorStarting => &[
            ("phases", 3.0),
            ("sag", 0.93),
            ("i_rms_mult", 3.0),
            ("start_cycle", 5.0),
            ("dur_cycles", 20.0),
        ],
        Event::VfdStarting => &[
            ("n_pulse", 6.0),
            ("start_cycle", 3.0),
            ("dur_cycles", 24.0),
            ("amp_mult", 5.0),
        ],
        Event::MeltedFuse => {
            &[("phase", 0.0), ("start_cycle", 12.0), ("dur_cycles", 1.1), ("mag", 5.0)]
        }
        Event::Ferroresonance => {
            &[("phase", 0.0), ("square_gain", 3.0), ("overvoltage", 1.1)]
        }
        Event::CapacitorSwitching => &[("start_cycle", 17.0)],
        Event::Lightning => &[
            ("phase", 0.0),
            ("strikes", 2.0),
            ("dur_cycles", 0.25),
            ("mag_frac", 0.8),
            ("start_cycle", 10.0),
            ("spacing_cycles", 3.0),
        ],
        Event::HarmonicResonance => &[("phase", 0.0), ("order", 13.0), ("ratio", 0.12)],
        Event::VtGrounding => &[
            ("start_cycle", 5.0),
            ("dur_cycles", 15.0),
            ("sag", 0.905),
            ("swell", 1.095),
            ("angle_shift_deg", 8.0),
        ],
        Event::CvtFailure => &[
            ("phase", 1.0),
            ("phases", 1.0),
            ("level", 0.85),
            ("start_cycle", 8.0),
            ("dur_cycles", 5.0),
        ],
    };
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub(super) fn apply(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
    rng: &mut ChaCha8Rng,
) -> Result<GroundTruth, SynthError> {
    match spec.kind {
        Event::None => Ok(GroundTruth::nominal()),
        Event::CtSaturation => ct_saturation(rec, cfg, spec),
        Event::AdClipping => ad_clipping(rec, cfg, spec),
        Event::TransientNoise => transient_noise(rec, cfg, spec, rng),
        Event::HsReclosing => hs_reclosing(rec, cfg, spec),
        Event::DcOffset => dc_offset(rec, cfg, spec),
        Event::MotorStarting => motor_starting(rec, cfg, spec),
        Event::VfdStarting => vfd_starting(rec, cfg, spec),
        Event::MeltedFuse => melted_fuse(rec, cfg, spec),
        Event::Ferroresonance => ferroresonance(rec, cfg, spec),
        Event::CapacitorSwitching => capacitor_switching(rec, cfg, spec),
        Event::Lightning => lightning(rec, cfg, spec, rng),
        Event::HarmonicResonance => harmonic_resonance(rec, cfg, spec),
        Event::VtGrounding => vt_grounding(rec, cfg, spec),
        Event::CvtFailure => cvt_failure(rec, cfg, spec),
    }
}

fn truth(
    event: Event,
    phases: PhaseSet,
    start: usize,
    end: usize,
    params: &[(&str, f64)],
) -> GroundTruth {
    GroundTruth {
        event,
        phases,
        start,
        end,
        params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
    }
}

fn window(
    rec: &EventRecord,
    start_cycle: f64,
    dur_cycles: f64,
    nc: f64,
) -> Result<(usize, usize), SynthError> {
    let s = (start_cycle * nc).round() as usize;
    let e = ((start_cycle + dur_cycles) * nc).round() as usize;
    if e > rec.len() || s >= e {
        return Err(SynthError::SpecOutOfRange {
            detail: format!(
                "cycles {start_cycle}..{} exceed record of {} samples",
                start_cycle + dur_cycles,
                rec.len()
            ),
        });
    }
    Ok((s, e))
}

/// Dead-zone nonlinearity that flattens the waveform near its zero
/// crossings, the way a saturated CT "knees".
fn knee(s: f64, frac: f64) -> f64 {
    let a = s.abs();
    if a <= frac {
        0.0
    } else {
        s.signum() * (a - frac) / (1.0 - frac)
    }
}

fn ct_saturation(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let phase = spec.phase();
    let medium = spec.get("variant_medium", 0.0) > 0.5;
    let (s, e) = window(rec, spec.get("start_cycle", 8.0), spec.get("dur_cycles", 6.0), nc)?;

    let i_p = 1200.0;
    let fault_amp = spec.get("fault_mult_ip", 20.0) * i_p;
    // The high variant carries a fully offset fault current with a second
    // saturation episode mid-fault (re-opening the zero-crossing gap);
    // the medium variant keeps the offset moderate and the even
    // harmonics low.
    let (dc_frac, dc_tau_cycles, second_pulse, h2_frac) =
        if medium { (0.25, 1.0, false, 0.0) } else { (2.5, 1.5, true, 0.25) };
    let h3_frac = 0.10;
    let knee_frac = 0.18;
    let dc_amp = dc_frac * fault_amp;
    let re_entry = 3.5 * nc;

    let w = 2.0 * PI * cfg.f0 / cfg.fs;
    let chan = rec.current_mut(phase);
    for k in s..e {
        let t = (k - s) as f64;
        let mut dc = dc_amp * (-t / (dc_tau_cycles * nc)).exp();
        if second_pulse && t >= re_entry {
            dc += dc_amp * (-(t - re_entry) / (dc_tau_cycles * nc)).exp();
        }
        let theta = w * t;
        chan[k] = dc
            + fault_amp * knee(theta.sin(), knee_frac)
            + h2_frac * fault_amp * (2.0 * theta).sin()
            + h3_frac * fault_amp * (3.0 * theta).sin();
    }

    Ok(truth(
        Event::CtSaturation,
        PhaseSet::single(phase),
        s,
        e - 1,
        &[
            ("fault_amp", fault_amp),
            ("dc_amp", dc_amp),
            ("variant_medium", if medium { 1.0 } else { 0.0 }),
        ],
    ))
}

fn ad_clipping(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let hc = ((nc / 2.0).round() as usize).max(2);
    let phase = spec.phase();
    let on_current = spec.get("on_current", 1.0) > 0.5;
    let run = spec.get("run", 6.0).round() as usize;
    if run < 2 || run > hc - 1 {
        return Err(SynthError::SpecOutOfRange {
            detail: format!("clip run {run} does not fit a half-cycle of {hc} samples"),
        });
    }
    let amp = if on_current { cfg.i_amp[phase as usize] } else { cfg.v_amp[phase as usize] };
    let level = spec.get("clip_frac", 0.8) * amp;

    let chan =
        if on_current { rec.current_mut(phase) } else { rec.voltage_mut(phase) };
    for v in chan.iter_mut() {
        if v.abs() > level {
            *v = v.signum() * level;
        }
    }
    let n = chan.len();
    let mut first = usize::MAX;
    let mut last = 0usize;
    let mut h = 0usize;
    while h * hc < n {
        let lo = h * hc;
        let hi = ((h + 1) * hc).min(n);
        if hi - lo < run {
            break;
        }
        let (ext, val) = chan[lo..hi]
            .iter()
            .enumerate()
            .map(|(k, &v)| (lo + k, v))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("non-empty half-cycle");
        let sign = if val >= 0.0 { 1.0 } else { -1.0 };
        let start = ext.saturating_sub(run / 2).clamp(lo, hi - run);
        for v in chan.iter_mut().take(start + run).skip(start) {
            *v = sign * level;
        }
        first = first.min(start);
        last = last.max(start + run - 1);
        h += 1;
    }

    Ok(truth(
        Event::AdClipping,
        PhaseSet::single(phase),
        first,
        last,
        &[
            ("run", run as f64),
            ("clip_level", level),
            ("on_current", if on_current { 1.0 } else { 0.0 }),
        ],
    ))
}

fn transient_noise(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
    rng: &mut ChaCha8Rng,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let cycle = nc.round() as usize;
    let hc = cycle / 2;
    let phase = spec.phase();
    let amp = cfg.v_amp[phase as usize];
    let count = spec.get("count", 25.0).round() as usize;
    let exceed = (spec.get("exceed_count", 6.0).round() as usize).min(count);
    let span = spec.get("span_cycles", 15.0).round() as usize;
    let start = spec.get("start_cycle", 2.0).round() as usize;
    let normal = count - exceed;
    if normal > 2 * span || start + span + 1 > cfg.cycles {
        return Err(SynthError::SpecOutOfRange {
            detail: format!("{count} spikes over {span} cycles starting at {start}"),
        });
    }

    let chan = rec.voltage_mut(phase);
    let mut first = usize::MAX;
    let mut last = 0usize;
    // Spikes near zero crossings, positively biased 7:3. The bias keeps
    // the mean actual-minus-ideal difference well away from zero while
    // the mixed signs keep the spike train from stacking coherently
    // into even harmonics.
    for j in 0..normal {
        let c = start + (j % span);
        let slot = (j / span) % 2;
        let pos = c * cycle + slot * hc + rng.gen_range(0..2);
        let sign = if j % 10 < 7 { 1.0 } else { -1.0 };
        chan[pos] += sign * spec.get("spike_frac", 0.45) * amp;
        first = first.min(pos);
        last = last.max(pos);
    }
    // Crest spikes that push individual samples past the nominal peak.
    for j in 0..exceed {
        let c = start + (j % span);
        let slot = (j / span) % 2;
        let pos = c * cycle + hc / 2 + slot * hc;
        let sign = if chan[pos] >= 0.0 { 1.0 } else { -1.0 };
        chan[pos] += sign * spec.get("exceed_frac", 0.35) * amp;
        first = first.min(pos);
        last = last.max(pos);
    }

    Ok(truth(
        Event::TransientNoise,
        PhaseSet::single(phase),
        first,
        last,
        &[("count", count as f64), ("exceed_count", exceed as f64)],
    ))
}

fn hs_reclosing(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let tau = spec.get("decay_tau_cycles", 1.5) * nc;
    let depth = spec.get("decay_depth", 0.0);
    let gap = spec.get("gap_cycles", 45.0) * nc;
    let s0 = (spec.get("pre_cycles", 5.0) * nc).round() as usize;

    // Envelope: exponential decay clamped to zero (or floored at the
    // configured depth), then a step back to nominal at the reclose.
    let decay_len = (tau * (200.0f64).ln()).ceil() as usize;
    let rz_raw = s0 + decay_len + gap.round() as usize;
    let n = rec.len();
    // Breakers re-energize near a voltage crest here so the RMS step-up
    // is sharp on phase A; a reclose at a zero crossing ramps the RMS
    // too gently for the step rule to see.
    let crest = 0.95 * cfg.v_amp[0];
    let rz = (rz_raw..n)
        .find(|&k| rec.va[k].abs() >= crest)
        .unwrap_or(rz_raw);
    if rz + (2.0 * nc) as usize >= n {
        return Err(SynthError::SpecOutOfRange {
            detail: format!("reclose at {rz} exceeds record of {n} samples"),
        });
    }
    for phase in Phase::ALL {
        let chan = rec.voltage_mut(phase);
        for k in s0..rz {
            let mut env = (-(k as f64 - s0 as f64) / tau).exp();
            if depth > 0.0 {
                env = env.max(depth);
            } else if env < 0.005 {
                env = 0.0;
            }
            chan[k] *= env;
        }
    }

    let high_speed = spec.get("gap_cycles", 45.0) <= 30.0;
    Ok(truth(
        Event::HsReclosing,
        PhaseSet::all(),
        s0,
        rz,
        &[
            ("gap_cycles", spec.get("gap_cycles", 45.0)),
            ("high_speed", if high_speed { 1.0 } else { 0.0 }),
        ],
    ))
}

fn dc_offset(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let phase = spec.phase();
    let on_current = spec.get("on_current", 1.0) > 0.5;
    let amp = if on_current { cfg.i_amp[phase as usize] } else { cfg.v_amp[phase as usize] };
    let offset = spec.get("offset_frac", 0.6) * amp;
    let s = (spec.get("start_cycle", 5.0) * nc).round() as usize;
    let n = rec.len();
    if s + (nc as usize) >= n {
        return Err(SynthError::SpecOutOfRange { detail: format!("offset start {s} beyond record") });
    }
    let chan = if on_current { rec.current_mut(phase) } else { rec.voltage_mut(phase) };
    for v in chan.iter_mut().skip(s) {
        *v += offset;
    }
    Ok(truth(
        Event::DcOffset,
        PhaseSet::single(phase),
        s,
        n - 1,
        &[("offset_amps", offset), ("on_current", if on_current { 1.0 } else { 0.0 })],
    ))
}

fn motor_starting(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let (s, e) = window(rec, spec.get("start_cycle", 5.0), spec.get("dur_cycles", 20.0), nc)?;
    let n_phases = (spec.get("phases", 3.0).round() as usize).clamp(1, 3);
    let sag = spec.get("sag", 0.93);
    let i_p = 1200.0;
    let mut phases = PhaseSet::EMPTY;
    for phase in Phase::ALL.into_iter().take(n_phases) {
        phases.insert(phase);
        let i_scale =
            spec.get("i_rms_mult", 3.0) * i_p * f64::sqrt(2.0) / cfg.i_amp[phase as usize];
        for k in s..e {
            rec.voltage_mut(phase)[k] *= sag;
            rec.current_mut(phase)[k] *= i_scale;
        }
    }
    Ok(truth(
        Event::MotorStarting,
        phases,
        s,
        e - 1,
        &[("sag", sag), ("dur_cycles", spec.get("dur_cycles", 20.0))],
    ))
}

fn vfd_starting(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let cycle = nc.round() as usize;
    let hc = cycle / 2;
    let np = spec.get("n_pulse", 6.0).round() as usize;
    if np % 3 != 0 || np < 6 {
        return Err(SynthError::SpecOutOfRange { detail: format!("pulse number {np}") });
    }
    let bumps = np / 3;
    let (s, e) = window(rec, spec.get("start_cycle", 3.0), spec.get("dur_cycles", 24.0), nc)?;
    let amp = spec.get("amp_mult", 5.0) * cfg.i_amp[0];
    let w = 2.0 * PI * cfg.f0 / cfg.fs;
    let spacing = hc as f64 / bumps as f64;
    let width = (0.7 * spacing).round().max(3.0);

    for phase in Phase::ALL {
        let shift = (phase as usize as f64) * nc / 3.0;
        let chan = rec.current_mut(phase);
        for k in s..e {
            let t = k as f64 - s as f64 + shift;
            // Ramping envelope: the drive brings the motor up gradually.
            let env = 0.5 + 0.5 * (k - s) as f64 / (e - s) as f64;
            let pos = t.rem_euclid(nc);
            let half = (pos / hc as f64).floor() as usize % 2;
            let sign = if half == 0 { 1.0 } else { -1.0 };
            let in_half = pos % hc as f64;
            let mut v = 0.05 * env * amp * (w * t).sin();
            for b in 0..bumps {
                let center = (b as f64 + 0.5) * spacing;
                let d = (in_half - center).abs();
                if d < width / 2.0 {
                    v += sign * env * amp * (PI * (d / width + 0.5)).sin().powi(2);
                }
            }
            // Seasoning at the characteristic side orders keeps them far
            // above the noise floor without disturbing the pulse count.
            for m in 1..=4 {
                for side in [np * m - 1, np * m + 1] {
                    v += 0.02 * env * amp * (side as f64 * w * t).sin();
                }
            }
            chan[k] = v;
        }
    }

    Ok(truth(Event::VfdStarting, PhaseSet::all(), s, e - 1, &[("np", np as f64)]))
}

fn melted_fuse(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let phase = spec.phase();
    let dur = (spec.get("dur_cycles", 1.1) * nc).round().max(2.0) as usize;
    let s0 = (spec.get("start_cycle", 12.0) * nc).round() as usize;
    let mag = spec.get("mag", 5.0) * cfg.i_amp[phase as usize];

    // Start the burst at a falling zero crossing so the fault inception
    // carries a first-derivative sign change.
    let chan = rec.current_mut(phase);
    let t0 = (s0..chan.len() - 1)
        .find(|&k| chan[k] > 0.0 && chan[k + 1] <= 0.0)
        .map(|k| k + 1)
        .ok_or_else(|| SynthError::SpecOutOfRange {
            detail: "no falling zero crossing after start".into(),
        })?;
    if t0 + dur + (nc as usize) >= chan.len() {
        return Err(SynthError::SpecOutOfRange {
            detail: format!("fuse burst at {t0} does not fit"),
        });
    }
    // Default shape is a half-sine swell; a nonzero `rise_frac` jumps
    // the current immediately at inception (step-fault shape).
    let rise = spec.get("rise_frac", 0.0);
    for j in 0..dur {
        let frac = j as f64 / dur as f64;
        let env = (PI * frac).sin().max(rise * (1.0 - frac));
        chan[t0 + j] += mag * env;
    }

    Ok(truth(
        Event::MeltedFuse,
        PhaseSet::single(phase),
        t0,
        t0 + dur - 1,
        &[("dur_cycles", spec.get("dur_cycles", 1.1)), ("mag", spec.get("mag", 5.0))],
    ))
}

fn ferroresonance(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let phase = spec.phase();
    let gain = spec.get("square_gain", 3.0);
    let over = spec.get("overvoltage", 1.1);
    // The resonance rings well above the fundamental; a seventh-harmonic
    // component rides on the square wave.
    let h7 = spec.get("h7_frac", 0.10);
    let amp = over * cfg.v_amp[phase as usize];
    let w = 2.0 * PI * cfg.f0 / cfg.fs;
    let angle = match phase {
        Phase::A => 0.0,
        Phase::B => -2.0 * PI / 3.0,
        Phase::C => 2.0 * PI / 3.0,
    };
    let chan = rec.voltage_mut(phase);
    let norm = gain.tanh();
    for (k, v) in chan.iter_mut().enumerate() {
        let theta = w * k as f64 + angle;
        *v = amp * ((gain * theta.sin()).tanh() / norm + h7 * (7.0 * theta).sin());
    }
    let end = rec.len() - 1;
    Ok(truth(
        Event::Ferroresonance,
        PhaseSet::single(phase),
        0,
        end,
        &[("square_gain", gain), ("overvoltage", over)],
    ))
}

/// Shape of the switching transient on the triggering phase, as
/// (cycle-fraction, value in units of nominal peak) anchors. The phase-A
/// cycle starts at a positive-going zero crossing, so fractions align
/// with the sine's angle.
const CAP_ANCHORS: [(f64, f64); 11] = [
    (2.0 / 16.0, 0.707_106_781_186_547_6),
    (3.0 / 16.0, 0.30),
    (4.0 / 16.0, 0.05),
    (5.0 / 16.0, -0.05),
    (6.0 / 16.0, -0.15),
    (7.0 / 16.0, -0.35),
    (8.0 / 16.0, -0.70),
    (9.0 / 16.0, -0.95),
    (10.0 / 16.0, -1.05),
    (11.0 / 16.0, -1.08),
    (12.0 / 16.0, -1.0),
];

fn capacitor_switching(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let c0 = spec.get("start_cycle", 17.0).round() as usize;
    let base = (c0 as f64 * nc).round() as usize;
    let lo = base + (CAP_ANCHORS[0].0 * nc).round() as usize;
    let hi = base + (CAP_ANCHORS[CAP_ANCHORS.len() - 1].0 * nc).round() as usize;
    if hi + 2 * nc.round() as usize >= rec.len() {
        return Err(SynthError::SpecOutOfRange {
            detail: format!("switching transient at cycle {c0} does not fit"),
        });
    }

    // Trigger phase A follows the anchor polyline.
    let amp = cfg.v_amp[0];
    let chan = rec.voltage_mut(Phase::A);
    for k in lo..=hi {
        let frac = (k - base) as f64 / nc;
        chan[k] = amp * interp(&CAP_ANCHORS, frac);
    }

    // The other two phases see the same bank operation as a damped ring.
    let ring_len = (2.0 * nc).round() as usize;
    let tau = 0.5 * nc;
    for phase in [Phase::B, Phase::C] {
        let ring_amp = 0.12 * cfg.v_amp[phase as usize];
        let chan = rec.voltage_mut(phase);
        for j in 0..ring_len {
            let k = lo + j;
            chan[k] += ring_amp
                * (2.0 * PI * 4.0 * cfg.f0 * j as f64 / cfg.fs).sin()
                * (-(j as f64) / tau).exp();
        }
    }

    Ok(truth(
        Event::CapacitorSwitching,
        PhaseSet::single(Phase::A),
        lo,
        hi,
        &[("start_cycle", c0 as f64)],
    ))
}

fn interp(anchors: &[(f64, f64)], frac: f64) -> f64 {
    let mut prev = anchors[0];
    for &(x, y) in anchors.iter().skip(1) {
        if frac <= x {
            let t = (frac - prev.0) / (x - prev.0);
            return prev.1 + t * (y - prev.1);
        }
        prev = (x, y);
    }
    anchors[anchors.len() - 1].1
}

fn lightning(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
    rng: &mut ChaCha8Rng,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let cycle = nc.round() as usize;
    let phase = spec.phase();
    let strikes = spec.get("strikes", 2.0).round() as usize;
    let spacing = spec.get("spacing_cycles", 3.0);
    let d = ((spec.get("dur_cycles", 0.25) * nc).round() as usize).max(2);
    let start = spec.get("start_cycle", 10.0).round() as usize;
    let amp = spec.get("mag_frac", 0.8) * cfg.v_amp[phase as usize];

    let chan = rec.voltage_mut(phase);
    let mut first = usize::MAX;
    let mut last = 0usize;
    for j in 0..strikes {
        // A little placement jitter keeps repeated strikes incoherent.
        let pos = ((start as f64 + j as f64 * spacing) * nc).round() as usize
            + rng.gen_range(0..3)
            + 1;
        if pos + d + cycle >= chan.len() {
            return Err(SynthError::SpecOutOfRange {
                detail: format!("strike {j} at {pos} does not fit"),
            });
        }
        for i in 0..d {
            chan[pos + i] += amp * (1.0 - i as f64 / d as f64);
        }
        first = first.min(pos);
        last = last.max(pos + d - 1);
    }

    Ok(truth(
        Event::Lightning,
        PhaseSet::single(phase),
        first.min(last),
        last,
        &[("strikes", strikes as f64), ("dur_cycles", spec.get("dur_cycles", 0.25))],
    ))
}

fn harmonic_resonance(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let phase = spec.phase();
    let order = spec.get("order", 13.0);
    let ratio = spec.get("ratio", 0.095);
    let amp = ratio * cfg.v_amp[phase as usize];
    let w = 2.0 * PI * cfg.f0 / cfg.fs;
    let chan = rec.voltage_mut(phase);
    for (k, v) in chan.iter_mut().enumerate() {
        *v += amp * (order * w * k as f64 + 0.9).sin();
    }
    let end = rec.len() - 1;
    Ok(truth(
        Event::HarmonicResonance,
        PhaseSet::single(phase),
        0,
        end,
        &[("order", order), ("ratio", ratio)],
    ))
}

fn vt_grounding(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let (s, e) = window(rec, spec.get("start_cycle", 5.0), spec.get("dur_cycles", 15.0), nc)?;
    let sag = spec.get("sag", 0.905);
    let swell = spec.get("swell", 1.095);
    let shift = spec.get("angle_shift_deg", 8.0).to_radians();
    let w = 2.0 * PI * cfg.f0 / cfg.fs;

    // Phase B sags; phase C swells and its angle is pulled off nominal.
    for k in s..e {
        rec.vb[k] = sag * cfg.v_amp[1] * (w * k as f64 - 2.0 * PI / 3.0).sin();
        rec.vc[k] = swell * cfg.v_amp[2] * (w * k as f64 + 2.0 * PI / 3.0 + shift).sin();
    }

    let mut phases = PhaseSet::single(Phase::B);
    phases.insert(Phase::C);
    Ok(truth(
        Event::VtGrounding,
        phases,
        s,
        e - 1,
        &[
            ("sag", sag),
            ("swell", swell),
            ("angle_shift_deg", spec.get("angle_shift_deg", 8.0)),
        ],
    ))
}

fn cvt_failure(
    rec: &mut EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<GroundTruth, SynthError> {
    let nc = cfg.nc();
    let (s, e) = window(rec, spec.get("start_cycle", 8.0), spec.get("dur_cycles", 5.0), nc)?;
    let level = spec.get("level", 0.85);
    let n_phases = (spec.get("phases", 1.0).round() as usize).clamp(1, 3);
    let first = spec.phase();

    let mut phases = PhaseSet::EMPTY;
    let mut applied = 0;
    for offset in 0..3 {
        if applied == n_phases {
            break;
        }
        let phase = Phase::ALL[(first as usize + offset) % 3];
        phases.insert(phase);
        for v in rec.voltage_mut(phase)[s..e].iter_mut() {
            *v *= level;
        }
        applied += 1;
    }

    Ok(truth(
        Event::CvtFailure,
        phases,
        s,
        e - 1,
        &[("level", level), ("dur_cycles", spec.get("dur_cycles", 5.0))],
    ))
}

