//! Deterministic synthetic waveform generation.
//!
//! Produces labeled nominal and disturbance records for every event type
//! the classifier handles. Each record is fully determined by its
//! generator configuration and a seed, and comes with machine-readable
//! ground truth (event type, phases, start/end sample, parameters) so
//! classifier tests can assert against the injected values.

mod inject;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{Event, PhaseSet};
use crate::dsp::Phase;
use crate::ingest::{self, EventRecord, IngestError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("disturbance does not fit the record: {detail}")]
    SpecOutOfRange { detail: String },
    #[error("unknown event kind {kind:?}")]
    UnknownKind { kind: String },
    #[error("io error: {0}")]
    Io(#[from] IngestError),
}

/// Parameters of the balanced three-phase base record.
#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub fs: f64,
    pub f0: f64,
    pub cycles: usize,
    /// Per-phase peak voltage.
    pub v_amp: [f64; 3],
    /// Per-phase peak current.
    pub i_amp: [f64; 3],
    /// Current lag behind voltage, degrees.
    pub current_lag_deg: f64,
    /// Gaussian noise level relative to each channel's nominal RMS;
    /// `None` generates clean records.
    pub snr_db: Option<f64>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            fs: 960.0,
            f0: 60.0,
            cycles: 30,
            v_amp: [132_900.0; 3],
            i_amp: [1_000.0; 3],
            current_lag_deg: 30.0,
            snr_db: Some(60.0),
        }
    }
}

impl GeneratorConfig {
    pub fn n_samples(&self) -> usize {
        (self.cycles as f64 * self.fs / self.f0).round() as usize
    }

    pub fn nc(&self) -> f64 {
        self.fs / self.f0
    }

    fn phase_angle_rad(phase: Phase) -> f64 {
        match phase {
            Phase::A => 0.0,
            Phase::B => -2.0 * std::f64::consts::PI / 3.0,
            Phase::C => 2.0 * std::f64::consts::PI / 3.0,
        }
    }

    /// Clean voltage sample for `phase` at sample index `k`.
    pub fn voltage_at(&self, phase: Phase, k: usize) -> f64 {
        let w = 2.0 * std::f64::consts::PI * self.f0 / self.fs;
        self.v_amp[phase as usize] * (w * k as f64 + Self::phase_angle_rad(phase)).sin()
    }

    /// Clean current sample for `phase` at sample index `k`.
    pub fn current_at(&self, phase: Phase, k: usize) -> f64 {
        let w = 2.0 * std::f64::consts::PI * self.f0 / self.fs;
        let lag = self.current_lag_deg.to_radians();
        self.i_amp[phase as usize] * (w * k as f64 + Self::phase_angle_rad(phase) - lag).sin()
    }
}

/// A disturbance to inject: the kind, free-form numeric parameters, and
/// the seed that fixes every random choice.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSpec {
    pub kind: Event,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl DisturbanceSpec {
    /// Defaults that make the corresponding detector fire (or, for
    /// `Event::None`, a plain nominal record).
    pub fn defaults(kind: Event, seed: u64) -> Self {
        DisturbanceSpec { kind, params: inject::default_params(kind), seed }
    }

    pub(crate) fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    pub(crate) fn phase(&self) -> Phase {
        match self.get("phase", 0.0) as usize {
            1 => Phase::B,
            2 => Phase::C,
            _ => Phase::A,
        }
    }
}

/// Ground truth attached to a generated record.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub event: Event,
    pub phases: PhaseSet,
    pub start: usize,
    pub end: usize,
    pub params: BTreeMap<String, f64>,
}

impl GroundTruth {
    fn nominal() -> Self {
        GroundTruth {
            event: Event::None,
            phases: PhaseSet::EMPTY,
            start: 0,
            end: 0,
            params: BTreeMap::new(),
        }
    }
}

/// Generate a balanced three-phase record, with noise when configured.
pub fn generate_nominal(cfg: &GeneratorConfig, seed: u64) -> EventRecord {
    let mut rec = clean_nominal(cfg);
    if let Some(snr) = cfg.snr_db {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e6f6973);
        add_noise(&mut rec, cfg, snr, &mut rng);
    }
    rec
}

fn clean_nominal(cfg: &GeneratorConfig) -> EventRecord {
    let n = cfg.n_samples();
    let mut rec = EventRecord {
        time: (0..n).map(|k| k as f64 / cfg.fs).collect(),
        va: Vec::with_capacity(n),
        vb: Vec::with_capacity(n),
        vc: Vec::with_capacity(n),
        ia: Vec::with_capacity(n),
        ib: Vec::with_capacity(n),
        ic: Vec::with_capacity(n),
        source_path: String::new(),
        ct_ratio: None,
    };
    for k in 0..n {
        rec.va.push(cfg.voltage_at(Phase::A, k));
        rec.vb.push(cfg.voltage_at(Phase::B, k));
        rec.vc.push(cfg.voltage_at(Phase::C, k));
        rec.ia.push(cfg.current_at(Phase::A, k));
        rec.ib.push(cfg.current_at(Phase::B, k));
        rec.ic.push(cfg.current_at(Phase::C, k));
    }
    rec
}

fn add_noise(rec: &mut EventRecord, cfg: &GeneratorConfig, snr_db: f64, rng: &mut ChaCha8Rng) {
    let gain = 10f64.powf(-snr_db / 20.0);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    for phase in Phase::ALL {
        let sigma_v = cfg.v_amp[phase as usize] / f64::sqrt(2.0) * gain;
        let sigma_i = cfg.i_amp[phase as usize] / f64::sqrt(2.0) * gain;
        for v in rec.voltage_mut(phase).iter_mut() {
            *v += sigma_v * normal.sample(rng);
        }
        for i in rec.current_mut(phase).iter_mut() {
            *i += sigma_i * normal.sample(rng);
        }
    }
}

/// Insert the disturbance described by `spec` into `record`, returning
/// the modified record and its ground truth. The record is expected to
/// be a (clean or noisy) nominal base at the spec's sampling geometry.
pub fn inject(
    record: EventRecord,
    cfg: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<(EventRecord, GroundTruth), SynthError> {
    let mut rec = record;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let truth = inject::apply(&mut rec, cfg, spec, &mut rng)?;
    Ok((rec, truth))
}

/// Full pipeline: build the kind-appropriate nominal base, inject the
/// disturbance, and apply noise. A/D clipping is injected after noise
/// (the digitizer clips the noisy analog signal); every other kind is
/// injected before it.
pub fn synthesize(
    base: &GeneratorConfig,
    spec: &DisturbanceSpec,
) -> Result<(EventRecord, GroundTruth), SynthError> {
    let cfg = config_for(base, spec);
    let clean = clean_nominal(&cfg);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x6e6f6973);

    if spec.kind == Event::AdClipping {
        let mut rec = clean;
        if let Some(snr) = cfg.snr_db {
            add_noise(&mut rec, &cfg, snr, &mut noise_rng);
        }
        return inject(rec, &cfg, spec);
    }

    let (mut rec, truth) = inject(clean, &cfg, spec)?;
    if let Some(snr) = cfg.snr_db {
        add_noise(&mut rec, &cfg, snr, &mut noise_rng);
    }
    Ok((rec, truth))
}

/// Per-kind sampling geometry: pulse-number harmonics and high-order
/// resonance need headroom below Nyquist, and reclosing needs a longer
/// record than the default.
fn config_for(base: &GeneratorConfig, spec: &DisturbanceSpec) -> GeneratorConfig {
    let mut cfg = base.clone();
    match spec.kind {
        Event::VfdStarting => {
            let np = spec.get("n_pulse", 6.0);
            let default_fs = if np > 6.0 { 7680.0 } else { 3840.0 };
            cfg.fs = spec.get("fs", default_fs);
        }
        Event::HarmonicResonance => {
            cfg.fs = spec.get("fs", 1920.0);
            // A longer record keeps the whole-cycle spectral window
            // aligned despite the sampling-frequency estimator's
            // N/(N-1) bias, which otherwise smears high-order harmonics.
            cfg.cycles = cfg.cycles.max(60);
        }
        Event::HsReclosing => {
            let pre = spec.get("pre_cycles", 5.0);
            let tau = spec.get("decay_tau_cycles", 1.5);
            let gap = spec.get("gap_cycles", 45.0);
            let post = spec.get("post_cycles", 6.0);
            let needed = (pre + 6.0 * tau + gap + post + 2.0).ceil() as usize;
            cfg.cycles = cfg.cycles.max(needed);
        }
        _ => {
            if let Some(&fs) = spec.params.get("fs") {
                cfg.fs = fs;
            }
        }
    }
    if let Some(&cycles) = spec.params.get("cycles") {
        cfg.cycles = cycles as usize;
    }
    if let Some(&snr) = spec.params.get("snr_db") {
        cfg.snr_db = (snr > 0.0).then_some(snr);
    }
    cfg
}

// ---------------------------------------------------------------------------
// Corpus generation
// ---------------------------------------------------------------------------

/// Corpus description, loadable from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_records_per_kind")]
    pub records_per_kind: usize,
    /// Event kind names; empty means all fourteen kinds plus nominal.
    #[serde(default)]
    pub kinds: Vec<String>,
    #[serde(default = "default_snr")]
    pub snr_db: Option<f64>,
}

fn default_seed() -> u64 {
    42
}
fn default_records_per_kind() -> usize {
    10
}
fn default_snr() -> Option<f64> {
    Some(60.0)
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            seed: default_seed(),
            records_per_kind: default_records_per_kind(),
            kinds: Vec::new(),
            snr_db: default_snr(),
        }
    }
}

impl CorpusSpec {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn resolved_kinds(&self) -> Result<Vec<Event>, SynthError> {
        if self.kinds.is_empty() {
            let mut all = Event::ALL.to_vec();
            all.push(Event::None);
            return Ok(all);
        }
        self.kinds
            .iter()
            .map(|name| {
                Event::parse(name).ok_or_else(|| SynthError::UnknownKind { kind: name.clone() })
            })
            .collect()
    }
}

/// One generated corpus entry.
#[derive(Debug, Clone)]
pub struct CorpusRecord {
    pub file_name: String,
    pub record: EventRecord,
    pub truth: GroundTruth,
}

/// Build the labeled corpus in memory. Records vary per-seed within the
/// bounds that keep each kind detectable.
pub fn build_corpus(spec: &CorpusSpec) -> Result<Vec<CorpusRecord>, SynthError> {
    let mut out = Vec::new();
    let base = GeneratorConfig { snr_db: spec.snr_db, ..GeneratorConfig::default() };
    for kind in spec.resolved_kinds()? {
        for idx in 0..self::record_count(spec, kind) {
            let seed = mix_seed(spec.seed, kind, idx);
            let mut dspec = DisturbanceSpec::defaults(kind, seed);
            jitter_params(&mut dspec, kind, idx, seed);
            let (mut record, truth) = synthesize(&base, &dspec)?;
            let file_name = format!("{}_{idx:03}.csv", kind.as_str());
            record.source_path = file_name.clone();
            out.push(CorpusRecord { file_name, record, truth });
        }
    }
    Ok(out)
}

fn record_count(spec: &CorpusSpec, _kind: Event) -> usize {
    spec.records_per_kind
}

fn mix_seed(seed: u64, kind: Event, idx: usize) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9) ^ (kind as u64).wrapping_mul(0x94d0_49bb_1331_11eb);
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9) ^ idx as u64;
    h ^ (h >> 31)
}

/// Bounded per-record variation so the corpus is not ten copies of the
/// same waveform. Ranges stay inside each detector's firing region.
fn jitter_params(spec: &mut DisturbanceSpec, kind: Event, idx: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a69_7474);
    let mut set = |key: &str, value: f64| {
        spec.params.insert(key.to_string(), value);
    };
    let rotate_phase = (idx % 3) as f64;
    match kind {
        Event::None => {}
        Event::CtSaturation => {
            set("phase", rotate_phase);
            set("start_cycle", rng.gen_range(6..=10) as f64);
            set("fault_mult_ip", rng.gen_range(18.0..24.0));
        }
        Event::AdClipping => {
            set("phase", rotate_phase);
            set("run", rng.gen_range(6..=7) as f64);
            set("clip_frac", rng.gen_range(0.70..0.85));
        }
        Event::TransientNoise => {
            set("phase", rotate_phase);
            set("count", rng.gen_range(24..=30) as f64);
            set("exceed_count", rng.gen_range(5..=8) as f64);
        }
        Event::HsReclosing => {
            let gap: f64 = if idx % 2 == 0 {
                rng.gen_range(38.0..55.0)
            } else {
                rng.gen_range(8.0..22.0)
            };
            set("gap_cycles", gap.round());
        }
        Event::DcOffset => {
            set("phase", rotate_phase);
            set("offset_frac", rng.gen_range(0.55..0.75));
            set("start_cycle", rng.gen_range(4..=8) as f64);
        }
        Event::MotorStarting => {
            set("sag", rng.gen_range(0.90..0.94));
            set("dur_cycles", rng.gen_range(12..=20) as f64);
        }
        Event::VfdStarting => {
            set("amp_mult", rng.gen_range(4.0..6.0));
        }
        Event::MeltedFuse => {
            set("phase", rotate_phase);
            set("dur_cycles", rng.gen_range(0.8..1.2));
            set("start_cycle", rng.gen_range(10..=16) as f64);
        }
        Event::Ferroresonance => {
            set("phase", rotate_phase);
            set("square_gain", rng.gen_range(2.5..6.0));
        }
        Event::CapacitorSwitching => {
            set("start_cycle", rng.gen_range(3..=24) as f64);
        }
        Event::Lightning => {
            set("phase", rotate_phase);
            set("strikes", rng.gen_range(1..=3) as f64);
            set("dur_cycles", rng.gen_range(0.15..0.5));
        }
        Event::HarmonicResonance => {
            set("phase", rotate_phase);
            set("order", [7.0, 11.0, 13.0][idx % 3]);
            set("ratio", rng.gen_range(0.11..0.135));
        }
        Event::VtGrounding => {
            set("angle_shift_deg", rng.gen_range(7.0..10.0));
        }
        Event::CvtFailure => {
            set("phase", rotate_phase);
            set("level", rng.gen_range(0.80..0.88));
            set("dur_cycles", rng.gen_range(4..=7) as f64);
        }
    }
}

/// Write the corpus as event CSVs plus a `labels.csv` manifest; returns
/// the generated entries.
pub fn write_corpus(spec: &CorpusSpec, dir: &Path) -> Result<Vec<CorpusRecord>, SynthError> {
    let corpus = build_corpus(spec)?;
    std::fs::create_dir_all(dir).map_err(IngestError::from)?;
    let mut labels = String::from("file,kind,phases,start_sample,end_sample,params\n");
    for entry in &corpus {
        ingest::write_event_csv(&entry.record, dir.join(&entry.file_name))?;
        let mut params = String::new();
        for (k, v) in &entry.truth.params {
            if !params.is_empty() {
                params.push(';');
            }
            write!(params, "{k}={v}").expect("write to string");
        }
        writeln!(
            labels,
            "{},{},{},{},{},{}",
            entry.file_name,
            entry.truth.event.as_str(),
            entry.truth.phases,
            entry.truth.start,
            entry.truth.end,
            params
        )
        .expect("write to string");
    }
    std::fs::write(dir.join("labels.csv"), labels).map_err(IngestError::from)?;
    Ok(corpus)
}

/// Parsed `labels.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub file: String,
    pub kind: Event,
    pub phases: String,
    pub start: usize,
    pub end: usize,
}

pub fn read_labels(path: &Path) -> Result<Vec<Label>, SynthError> {
    let text = std::fs::read_to_string(path).map_err(IngestError::from)?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 5 {
            continue;
        }
        let kind = Event::parse(f[1]).ok_or_else(|| SynthError::UnknownKind {
            kind: f[1].to_string(),
        })?;
        out.push(Label {
            file: f[0].to_string(),
            kind,
            phases: f[2].to_string(),
            start: f[3].parse().unwrap_or(0),
            end: f[4].parse().unwrap_or(0),
        });
    }
    Ok(out)
}
