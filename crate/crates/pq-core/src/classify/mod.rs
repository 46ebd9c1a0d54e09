//! The fourteen rule-based disturbance detectors and the orchestrator
//! that runs them against a record.
//!
//! Each detector is a pure function of its inputs and the threshold
//! configuration, so they are testable in isolation. Cross-detector
//! ordering rules live only in [`classify_record`]: ferroresonance is
//! checked before harmonic resonance, which is checked before induced
//! transient noise, and lightning is only considered when capacitor
//! switching and melted fuse both came back negative.

mod capacitor;
mod clipping;
mod dc_offset;
mod ferroresonance;
mod fuse;
mod lightning;
mod motor;
mod noise;
mod reclosing;
mod resonance;
mod saturation;
mod thresholds;
mod vt;

use std::collections::BTreeMap;
use std::fmt;

use crate::dsp::{self, NominalValues, Phase};
use crate::ingest::{CtRating, EventRecord};

pub use capacitor::detect_capacitor_switching;
pub use clipping::{detect_ad_clipping, detect_ad_clipping_with_tolerance};
pub use dc_offset::detect_dc_offset;
pub use ferroresonance::detect_ferroresonance;
pub use fuse::detect_melted_fuse;
pub use lightning::detect_lightning;
pub use motor::{detect_motor_starting, detect_vfd_start};
pub use noise::detect_transient_noise;
pub use reclosing::detect_hs_reclosing;
pub use resonance::detect_harmonic_resonance;
pub use saturation::detect_ct_saturation;
pub use thresholds::{ThresholdConfig, ThresholdError};
pub use vt::{detect_cvt_failure, detect_vt_grounding};

/// The disturbance event types the system identifies. `None` marks a
/// record (or phase) with no identified disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Event {
    CtSaturation,
    AdClipping,
    TransientNoise,
    HsReclosing,
    DcOffset,
    MotorStarting,
    VfdStarting,
    MeltedFuse,
    Ferroresonance,
    CapacitorSwitching,
    Lightning,
    HarmonicResonance,
    VtGrounding,
    CvtFailure,
    None,
}

impl Event {
    pub const ALL: [Event; 14] = [
        Event::CtSaturation,
        Event::AdClipping,
        Event::TransientNoise,
        Event::HsReclosing,
        Event::DcOffset,
        Event::MotorStarting,
        Event::VfdStarting,
        Event::MeltedFuse,
        Event::Ferroresonance,
        Event::CapacitorSwitching,
        Event::Lightning,
        Event::HarmonicResonance,
        Event::VtGrounding,
        Event::CvtFailure,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Event::CtSaturation => "ct_saturation",
            Event::AdClipping => "ad_clipping",
            Event::TransientNoise => "transient_noise",
            Event::HsReclosing => "hs_reclosing",
            Event::DcOffset => "dc_offset",
            Event::MotorStarting => "motor_starting",
            Event::VfdStarting => "vfd_starting",
            Event::MeltedFuse => "melted_fuse",
            Event::Ferroresonance => "ferroresonance",
            Event::CapacitorSwitching => "capacitor_switching",
            Event::Lightning => "lightning",
            Event::HarmonicResonance => "harmonic_resonance",
            Event::VtGrounding => "vt_grounding",
            Event::CvtFailure => "cvt_failure",
            Event::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Event> {
        Event::ALL
            .iter()
            .copied()
            .chain(std::iter::once(Event::None))
            .find(|e| e.as_str() == s)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Detection confidence. Only CT saturation (four tiers) and transient
/// noise (medium/high) populate this; other detectors report `NotApplicable`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Confidence {
    NotApplicable,
    Low,
    Medium,
    High,
}

impl Confidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::NotApplicable => "n/a",
            Confidence::Low => "low",
            Confidence::Medium => "medium",
            Confidence::High => "high",
        }
    }
}

/// A set of phases, e.g. the phases on which an event was observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseSet(u8);

impl PhaseSet {
    pub const EMPTY: PhaseSet = PhaseSet(0);

    pub fn single(phase: Phase) -> Self {
        let mut s = PhaseSet::EMPTY;
        s.insert(phase);
        s
    }

    pub fn all() -> Self {
        PhaseSet(0b111)
    }

    fn bit(phase: Phase) -> u8 {
        match phase {
            Phase::A => 1,
            Phase::B => 2,
            Phase::C => 4,
        }
    }

    pub fn insert(&mut self, phase: Phase) {
        self.0 |= Self::bit(phase);
    }

    pub fn contains(&self, phase: Phase) -> bool {
        self.0 & Self::bit(phase) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Phase> + '_ {
        Phase::ALL.into_iter().filter(|&p| self.contains(p))
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.iter() {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

/// One detector verdict: the event, its confidence tier where the rule
/// defines tiers, the phases involved, and the numeric evidence that
/// drove the decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub event: Event,
    pub confidence: Confidence,
    pub phases: PhaseSet,
    pub evidence: BTreeMap<String, f64>,
}

impl Detection {
    pub fn new(event: Event, phases: PhaseSet) -> Self {
        Detection {
            event,
            confidence: Confidence::NotApplicable,
            phases,
            evidence: BTreeMap::new(),
        }
    }

    pub fn none() -> Self {
        Detection::new(Event::None, PhaseSet::EMPTY)
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.evidence.insert(key.to_string(), value);
        self
    }
}

/// Immutable per-record analysis context shared by the detectors: the
/// sampling geometry, per-phase nominal values, and the CT rating.
pub struct RecordContext<'a> {
    pub record: &'a EventRecord,
    pub cfg: &'a ThresholdConfig,
    pub ct: CtRating,
    pub fs: f64,
    pub nc: f64,
    pub nominals: [NominalValues; 3],
}

impl<'a> RecordContext<'a> {
    pub fn build(record: &'a EventRecord, cfg: &'a ThresholdConfig) -> Option<Self> {
        let nominals = [
            dsp::nominal_values(record, Phase::A).ok()?,
            dsp::nominal_values(record, Phase::B).ok()?,
            dsp::nominal_values(record, Phase::C).ok()?,
        ];
        let ct = match record.ct_ratio {
            Some(r) => CtRating::from_ratio(r),
            None => CtRating::default(),
        };
        Some(RecordContext {
            record,
            cfg,
            ct,
            fs: nominals[0].fs,
            nc: nominals[0].nc,
            nominals,
        })
    }

    pub fn nominal(&self, phase: Phase) -> &NominalValues {
        &self.nominals[phase as usize]
    }
}

/// Run every detector against the record under the published ordering
/// rules and return all non-conflicting detections. A record with no
/// detection yields a single `none` entry; a phase whose first cycle is
/// degenerate yields a `none` entry flagged `unclassifiable`.
pub fn classify_record(record: &EventRecord, cfg: &ThresholdConfig) -> Vec<Detection> {
    let mut out: Vec<Detection> = Vec::new();

    let Some(ctx) = RecordContext::build(record, cfg) else {
        let mut d = Detection::none().with("unclassifiable", 1.0);
        d.phases = PhaseSet::all();
        return vec![d];
    };

    let mut v_ok = [true; 3];
    let mut i_ok = [true; 3];
    for phase in Phase::ALL {
        let nom = ctx.nominal(phase);
        if nom.voltage_degenerate() {
            v_ok[phase as usize] = false;
            out.push(
                Detection::new(Event::None, PhaseSet::single(phase))
                    .with("unclassifiable", 1.0)
                    .with("on_current", 0.0),
            );
        }
        if nom.current_degenerate() {
            i_ok[phase as usize] = false;
            out.push(
                Detection::new(Event::None, PhaseSet::single(phase))
                    .with("unclassifiable", 1.0)
                    .with("on_current", 1.0),
            );
        }
    }
    let all_v = v_ok.iter().all(|&b| b);
    let all_i = i_ok.iter().all(|&b| b);

    // Ferroresonance first; harmonic resonance only when ferroresonance is
    // absent; induced transient noise only when both are absent.
    let mut ferro_fired = false;
    for phase in Phase::ALL {
        if !v_ok[phase as usize] {
            continue;
        }
        let nom = ctx.nominal(phase);
        if let Some(mut d) =
            detect_ferroresonance(record.voltage(phase), record.current(phase), nom, cfg)
        {
            d.phases = PhaseSet::single(phase);
            ferro_fired = true;
            out.push(d);
        }
    }

    let mut resonance_fired = false;
    if !ferro_fired {
        for phase in Phase::ALL {
            if !v_ok[phase as usize] {
                continue;
            }
            if let Some(mut d) =
                detect_harmonic_resonance(record.voltage(phase), ctx.nominal(phase), cfg)
            {
                d.phases = PhaseSet::single(phase);
                resonance_fired = true;
                out.push(d);
            }
        }
    }

    if !ferro_fired && !resonance_fired {
        for phase in Phase::ALL {
            if !v_ok[phase as usize] {
                continue;
            }
            if let Some(mut d) =
                detect_transient_noise(record.voltage(phase), ctx.nominal(phase), cfg)
            {
                d.phases = PhaseSet::single(phase);
                out.push(d);
            }
        }
    }

    for phase in Phase::ALL {
        if i_ok[phase as usize] {
            let nom = ctx.nominal(phase);
            if let Some(mut d) = detect_ct_saturation(record.current(phase), nom, cfg, &ctx.ct) {
                d.phases = PhaseSet::single(phase);
                out.push(d);
            }
        }
    }

    for phase in Phase::ALL {
        for (signal, on_current, ok) in [
            (record.voltage(phase), 0.0, v_ok[phase as usize]),
            (record.current(phase), 1.0, i_ok[phase as usize]),
        ] {
            if !ok {
                continue;
            }
            if let Some(mut d) = detect_ad_clipping(signal, cfg) {
                d.phases = PhaseSet::single(phase);
                out.push(d.with("on_current", on_current));
            }
        }
    }

    for phase in Phase::ALL {
        if !v_ok[phase as usize] {
            continue;
        }
        if let Some(mut d) = detect_hs_reclosing(record.voltage(phase), ctx.nominal(phase), cfg) {
            d.phases = PhaseSet::single(phase);
            out.push(d);
        }
    }

    for phase in Phase::ALL {
        let nom = ctx.nominal(phase);
        for (signal, on_current, ok) in [
            (record.voltage(phase), 0.0, v_ok[phase as usize]),
            (record.current(phase), 1.0, i_ok[phase as usize]),
        ] {
            if !ok {
                continue;
            }
            if let Some(mut d) = detect_dc_offset(signal, nom, cfg, on_current > 0.5) {
                d.phases = PhaseSet::single(phase);
                out.push(d.with("on_current", on_current));
            }
        }
    }

    if all_v && all_i {
        if let Some(d) = detect_motor_starting(&ctx) {
            out.push(d);
        }
        if let Some(d) = detect_vfd_start(&ctx) {
            out.push(d);
        }
    }

    let mut fuse_fired = false;
    for phase in Phase::ALL {
        if !i_ok[phase as usize] {
            continue;
        }
        if let Some(mut d) = detect_melted_fuse(record.current(phase), ctx.nominal(phase), cfg) {
            d.phases = PhaseSet::single(phase);
            fuse_fired = true;
            out.push(d);
        }
    }

    let mut cap_fired = false;
    if all_v {
        if let Some(d) = detect_capacitor_switching(&ctx) {
            cap_fired = true;
            out.push(d);
        }
    }

    if !cap_fired && !fuse_fired {
        out.extend(detect_lightning(&ctx));
    }

    if all_v {
        if let Some(d) = detect_vt_grounding(&ctx) {
            out.push(d);
        }
        if let Some(d) = detect_cvt_failure(&ctx) {
            out.push(d);
        }
    }

    if out.is_empty() {
        out.push(Detection::none());
    }
    out
}

// ---------------------------------------------------------------------------
// Shared helpers used by several detectors
// ---------------------------------------------------------------------------

/// Span (inclusive) of the fault region: samples where `|x|` exceeds
/// `fuse_min_mag` times the nominal peak, provided the region persists
/// for at least a quarter cycle.
pub(crate) fn locate_fault(
    x: &[f64],
    peak_nom: f64,
    cfg: &ThresholdConfig,
    nc: f64,
) -> Option<(usize, usize)> {
    if peak_nom <= 0.0 {
        return None;
    }
    let gate = cfg.fuse_min_mag * peak_nom;
    let first = x.iter().position(|&v| v.abs() > gate)?;
    let last = x.iter().rposition(|&v| v.abs() > gate)?;
    let min_len = (cfg.fuse_min_dur * nc).round() as usize;
    if last - first + 1 >= min_len.max(1) {
        Some((first, last))
    } else {
        None
    }
}

/// Per-half-cycle extremum of `|x|`: (sample index, signed value).
pub(crate) fn half_cycle_peaks(x: &[f64], nc: f64) -> Vec<(usize, f64)> {
    let hc = (nc / 2.0).round().max(1.0) as usize;
    let mut out = Vec::with_capacity(x.len() / hc + 1);
    let mut start = 0;
    while start < x.len() {
        let end = (start + hc).min(x.len());
        let (idx, &val) = x[start..end]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(k, v)| (start + k, v))
            .expect("non-empty window");
        out.push((idx, val));
        start = end;
    }
    out
}

/// Mean of each whole cycle of the signal.
pub(crate) fn cycle_means(x: &[f64], nc: f64) -> Vec<f64> {
    let cycle = nc.round().max(1.0) as usize;
    x.chunks_exact(cycle)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Group indices (ascending) into clusters, starting a new cluster when
/// the gap between neighbors exceeds `max_gap`. Returns inclusive spans.
pub(crate) fn cluster_indices(indices: &[usize], max_gap: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut iter = indices.iter().copied();
    let Some(first) = iter.next() else {
        return out;
    };
    let (mut start, mut end) = (first, first);
    for idx in iter {
        if idx - end <= max_gap {
            end = idx;
        } else {
            out.push((start, end));
            start = idx;
            end = idx;
        }
    }
    out.push((start, end));
    out
}

/// Indices of zero crossings: position `k` such that the sign of the
/// signal differs between `k` and `k+1` (zeros carry the previous sign).
pub(crate) fn zero_crossings(x: &[f64]) -> Vec<usize> {
    dsp::sign_changes(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_set_display_and_ops() {
        let mut s = PhaseSet::single(Phase::A);
        s.insert(Phase::C);
        assert_eq!(s.to_string(), "AC");
        assert!(s.contains(Phase::C));
        assert!(!s.contains(Phase::B));
        assert_eq!(PhaseSet::EMPTY.to_string(), "");
        assert_eq!(PhaseSet::all().to_string(), "ABC");
    }

    #[test]
    fn event_name_round_trip() {
        for e in Event::ALL {
            assert_eq!(Event::parse(e.as_str()), Some(e));
        }
        assert_eq!(Event::parse("none"), Some(Event::None));
        assert_eq!(Event::parse("bogus"), None);
    }

    #[test]
    fn cluster_indices_grouping() {
        assert_eq!(cluster_indices(&[1, 2, 3, 10, 11, 30], 2), vec![(1, 3), (10, 11), (30, 30)]);
        assert!(cluster_indices(&[], 2).is_empty());
    }

    #[test]
    fn half_cycle_peaks_of_sine() {
        let x: Vec<f64> =
            (0..64).map(|k| (2.0 * std::f64::consts::PI * k as f64 / 16.0).sin()).collect();
        let peaks = half_cycle_peaks(&x, 16.0);
        assert_eq!(peaks.len(), 8);
        for (k, (_, v)) in peaks.iter().enumerate() {
            let expect = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((v - expect).abs() < 1e-9, "peak {k} = {v}");
        }
    }

    mod orchestrator {
        use super::super::*;
        use crate::synth::{self, DisturbanceSpec, GeneratorConfig};

        fn classify_kind(kind: Event, seed: u64) -> Vec<Detection> {
            let gen = GeneratorConfig::default();
            let spec = DisturbanceSpec::defaults(kind, seed);
            let (rec, _) = synth::synthesize(&gen, &spec).unwrap();
            classify_record(&rec, &ThresholdConfig::default())
        }

        #[test]
        fn nominal_record_reports_none() {
            let gen = GeneratorConfig::default();
            let rec = synth::generate_nominal(&gen, 77);
            let dets = classify_record(&rec, &ThresholdConfig::default());
            assert_eq!(dets.len(), 1);
            assert_eq!(dets[0].event, Event::None);
        }

        #[test]
        fn ferroresonance_suppresses_harmonic_resonance_and_noise() {
            // The square-wave record trips the raw harmonic-resonance
            // rule on its own (high THD, strong high harmonics, dense
            // sign changes); the orchestrator must keep only
            // ferroresonance.
            let gen = GeneratorConfig::default();
            let spec = DisturbanceSpec::defaults(Event::Ferroresonance, 51);
            let (rec, truth) = synth::synthesize(&gen, &spec).unwrap();
            let phase = truth.phases.iter().next().unwrap();
            let cfg = ThresholdConfig::default();
            let nom = crate::dsp::nominal_values(&rec, phase).unwrap();
            assert!(
                detect_harmonic_resonance(rec.voltage(phase), &nom, &cfg).is_some(),
                "precondition: the raw harmonic-resonance rule must fire on this record"
            );
            let dets = classify_record(&rec, &cfg);
            assert!(dets.iter().any(|d| d.event == Event::Ferroresonance));
            assert!(dets.iter().all(|d| d.event != Event::HarmonicResonance));
            assert!(dets.iter().all(|d| d.event != Event::TransientNoise));
        }

        #[test]
        fn capacitor_switching_suppresses_lightning() {
            let gen = GeneratorConfig::default();
            let spec = DisturbanceSpec::defaults(Event::CapacitorSwitching, 53);
            let (rec, _) = synth::synthesize(&gen, &spec).unwrap();
            let cfg = ThresholdConfig::default();
            // Precondition: the raw lightning rule would isolate the
            // sub-cycle disturbance if it ran unconditionally.
            let ctx = RecordContext::build(&rec, &cfg).unwrap();
            assert!(
                detect_lightning(&ctx).iter().any(|d| d.event == Event::Lightning),
                "precondition: raw lightning isolation fires on the transient"
            );
            let dets = classify_record(&rec, &cfg);
            assert!(dets.iter().any(|d| d.event == Event::CapacitorSwitching));
            assert!(dets.iter().all(|d| d.event != Event::Lightning));
        }

        #[test]
        fn melted_fuse_suppresses_lightning() {
            let dets = classify_kind(Event::MeltedFuse, 55);
            assert!(dets.iter().any(|d| d.event == Event::MeltedFuse));
            assert!(dets.iter().all(|d| d.event != Event::Lightning));
        }

        #[test]
        fn degenerate_phase_marked_unclassifiable() {
            let gen = GeneratorConfig { snr_db: None, ..GeneratorConfig::default() };
            let mut rec = synth::generate_nominal(&gen, 1);
            for v in rec.vb.iter_mut() {
                *v = 0.0;
            }
            let dets = classify_record(&rec, &ThresholdConfig::default());
            let marker = dets
                .iter()
                .find(|d| d.evidence.contains_key("unclassifiable"))
                .expect("unclassifiable marker");
            assert!(marker.phases.contains(Phase::B));
            assert_eq!(marker.event, Event::None);
        }

        #[test]
        fn detectors_are_pure() {
            for kind in [Event::CtSaturation, Event::Lightning, Event::VfdStarting] {
                let a = classify_kind(kind, 60);
                let b = classify_kind(kind, 60);
                assert_eq!(a, b, "{kind:?} classification not reproducible");
            }
        }
    }
}
