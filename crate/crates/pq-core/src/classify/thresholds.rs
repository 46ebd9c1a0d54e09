//! Every tunable threshold used by the detectors, with the published
//! defaults. Values load from a flat `key = value` text file; unknown
//! keys are rejected so configuration drift is caught early, and absent
//! keys keep their defaults.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ThresholdError {
    #[error("unknown threshold key {key:?} at line {line}")]
    UnknownKey { key: String, line: usize },
    #[error("bad value for {key:?} at line {line}: {value:?}")]
    BadValue { key: String, line: usize, value: String },
    #[error("threshold {key:?} must be strictly positive, got {value}")]
    NotPositive { key: String, value: f64 },
    #[error("line {line} is not in key = value form: {text:?}")]
    BadLine { line: usize, text: String },
    #[error("io error: {0}")]
    Io(String),
}

macro_rules! threshold_config {
    ($( $(#[$doc:meta])* $name:ident = $default:expr ),* $(,)?) => {
        /// Detector thresholds. Field names double as the config-file keys.
        #[derive(Debug, Clone, PartialEq)]
        pub struct ThresholdConfig {
            $( $(#[$doc])* pub $name: f64, )*
        }

        impl Default for ThresholdConfig {
            fn default() -> Self {
                Self { $( $name: $default, )* }
            }
        }

        impl ThresholdConfig {
            /// All config keys, in declaration order.
            pub const KEYS: &'static [&'static str] = &[ $( stringify!($name), )* ];

            fn set(&mut self, key: &str, value: f64) -> bool {
                match key {
                    $( stringify!($name) => { self.$name = value; true } )*
                    _ => false,
                }
            }

            pub fn get(&self, key: &str) -> Option<f64> {
                match key {
                    $( stringify!($name) => Some(self.$name), )*
                    _ => None,
                }
            }

            pub fn set_checked(&mut self, key: &str, value: f64) -> Result<(), ThresholdError> {
                if !value.is_finite() || value <= 0.0 {
                    return Err(ThresholdError::NotPositive { key: key.into(), value });
                }
                if self.set(key, value) {
                    Ok(())
                } else {
                    Err(ThresholdError::UnknownKey { key: key.into(), line: 0 })
                }
            }
        }
    };
}

threshold_config! {
    /// CT saturation: minimum current as a multiple of the CT primary rating.
    tau_ct = 15.0,
    /// CT saturation: minimum DC offset as a multiple of nominal peak current.
    tau_dc = 3.0,
    /// CT saturation: zero-crossing spacing deviation, in samples.
    tau_z = 10.0,
    /// CT saturation: third-derivative ratio of fault to first cycle.
    tau_d3 = 5.0,
    /// CT saturation: second-harmonic current ratio gate.
    h2_min = 0.15,
    /// CT saturation: third-harmonic current ratio gate.
    h3_min = 0.05,
    /// A/D clipping: samples inspected either side of the record maximum.
    clip_window = 10.0,
    /// A/D clipping: flat run must exceed this many zero-derivative samples.
    clip_run = 4.0,
    /// Transient noise: minimum mean actual-minus-ideal difference (volts).
    tau_n = 30.0,
    /// Transient noise: spike derivative as a fraction of nominal peak.
    noise_deriv_frac = 0.10,
    /// Transient noise: minimum persistence in cycles.
    noise_cycles = 5.0,
    /// Transient noise: minimum average occurrences per cycle.
    noise_per_cycle = 1.0,
    /// Transient noise: minimum total instances.
    noise_count = 20.0,
    /// Transient noise: samples above nominal peak for high confidence.
    noise_peak_exceed = 5.0,
    /// Reclosing: RMS sag ratio marking the start of decay.
    tau_s = 0.9,
    /// Reclosing: RMS ratio treated as zero voltage.
    tau_zero = 0.01,
    /// Reclosing: the decay must reach below this fraction of nominal.
    decay_floor = 0.5,
    /// Reclosing: maximum RMS derivative during the decay (ratio).
    tau_l = 0.5,
    /// Reclosing: minimum RMS step-up marking the reclose (ratio).
    tau_u = 0.3,
    /// Reclosing: high-speed flag when reclose follows within this many cycles.
    tau_hs = 30.0,
    /// DC offset: minimum 0 Hz to fundamental magnitude ratio.
    tau_f_dc = 0.5,
    /// DC offset: minimum cycle mean as a fraction of nominal peak.
    dc_cycle_mean_frac = 0.5,
    /// Motor starting: RMS voltage sag ratio.
    motor_sag = 0.95,
    /// Motor starting: RMS current as a multiple of the CT primary rating.
    motor_spike = 2.0,
    /// Motor starting: minimum persistence in cycles.
    motor_cycles = 10.0,
    /// Motor starting: maximum harmonic ratio on any channel.
    motor_harm = 0.15,
    /// VFD starting: cycles that must show more than two 50% crossings.
    vfd_cross_cycles = 8.0,
    /// VFD starting: side-harmonic dominance ratio.
    tau_v = 5.0,
    /// Melted fuse: maximum clearing time in cycles.
    tau_c = 1.5,
    /// Melted fuse: minimum event duration in cycles.
    fuse_min_dur = 0.25,
    /// Melted fuse: minimum current as a multiple of nominal peak.
    fuse_min_mag = 2.0,
    /// Melted fuse: second-derivative ratio fallback gate.
    tau_d2 = 0.02,
    /// Ferroresonance: voltage derivative as a fraction of nominal peak.
    tau_ferro = 0.5,
    /// Ferroresonance: minimum number of large-derivative hits.
    ferro_min_hits = 5.0,
    /// Ferroresonance: maximum spacing between hits, in cycles.
    ferro_gap = 3.0,
    /// Ferroresonance: minimum span of hits, in cycles.
    ferro_span = 5.0,
    /// Ferroresonance: minimum harmonic ratio in the voltage.
    ferro_harm = 0.05,
    /// Ferroresonance: maximum current sign-change ratio for a nominal current.
    tau_i = 0.3,
    /// Residual disturbance isolation ratio (capacitor switching, lightning,
    /// CVT failure).
    tau_delta = 0.02,
    /// Capacitor switching: maximum disturbance duration in cycles.
    cap_max_dur = 2.0,
    /// Capacitor switching: low overvoltage peak gate (ratio).
    cap_peak_lo = 1.02,
    /// Capacitor switching: high overvoltage peak gate (ratio).
    cap_peak_hi = 1.10,
    /// Capacitor switching: overvoltage-cycle derivative gate (ratio).
    tau_o = 0.02,
    /// Capacitor switching: the depression must fall below this ratio.
    cap_sag_floor = 0.9,
    /// Capacitor switching: pre-peak spacing tolerance (fraction of a cycle).
    tau_p = 0.1,
    /// Lightning: maximum strike duration in cycles.
    lightning_max_dur = 1.0,
    /// Lightning: more isolated disturbances than this rejects the event.
    lightning_max_strikes = 5.0,
    /// Lightning: identified when the strike count is at most this.
    lightning_id_strikes = 3.0,
    /// Harmonic resonance: minimum THD.
    thd_min = 0.08,
    /// Harmonic resonance: minimum ratio for the 6th or a higher harmonic.
    hr_harm = 0.05,
    /// Harmonic resonance: per-cycle sign changes as a fraction of Nc.
    hr_sign_frac = 0.10,
    /// Harmonic resonance: cycles that must show the sign-change density.
    hr_cycles = 3.0,
    /// VT grounding: sag gate (fraction below nominal peak).
    vt_sag = 0.05,
    /// VT grounding: swell gate (fraction above nominal peak).
    vt_swell = 0.05,
    /// VT grounding: minimum deviation from 120 degrees.
    vt_angle_dev = 5.0,
    /// CVT failure: peak rise/fall gate (fraction of nominal peak).
    cvt_peak_dev = 0.10,
    /// CVT failure: minimum persistence in cycles.
    cvt_cycles = 3.0,
}

impl ThresholdConfig {
    /// Parse `key = value` text. `#` starts a comment; blank lines are
    /// skipped. Unknown keys and non-positive values are errors.
    pub fn from_text(text: &str) -> Result<Self, ThresholdError> {
        let mut cfg = ThresholdConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = no + 1;
            let stripped = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            };
            let stripped = stripped.trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped
                .split_once('=')
                .ok_or_else(|| ThresholdError::BadLine { line, text: raw.to_string() })?;
            let key = key.trim();
            let value_text = value.trim();
            let value: f64 = value_text.parse().map_err(|_| ThresholdError::BadValue {
                key: key.to_string(),
                line,
                value: value_text.to_string(),
            })?;
            cfg.set_checked(key, value).map_err(|e| match e {
                ThresholdError::UnknownKey { key, .. } => ThresholdError::UnknownKey { key, line },
                other => other,
            })?;
        }
        Ok(cfg)
    }

    pub fn from_file<P: AsRef<Path>>(path: P) -> Result<Self, ThresholdError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ThresholdError::Io(e.to_string()))?;
        Self::from_text(&text)
    }
}
