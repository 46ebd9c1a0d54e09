//! Automated identification of electrical disturbance events in power
//! transmission waveform records, plus compaction of continuous digital
//! fault recorder (DFR) oscillography into cyclic, residual, and
//! frequency histograms.
//!
//! The crate is organized around the processing pipeline:
//!
//! * [`ingest`] — event CSV files and COMTRADE CFG/OSG records in and out.
//! * [`dsp`] — the shared signal calculations: nominal values, sliding RMS,
//!   derivatives, harmonic ratios, THD, first-cycle residuals, phase angle.
//! * [`classify`] — fourteen rule-based disturbance detectors and the
//!   orchestrator that applies the cross-detector ordering rules.
//! * [`cyclic`] — cycle extraction, time synchronization, cyclic/residual
//!   histograms, and narrowband dominant-frequency estimation for
//!   continuous records.
//! * [`synth`] — deterministic labeled waveform generation used to build
//!   test corpora.
//!
//! All samples are carried as `f64` in engineering units; detector
//! thresholds are ratios against per-record nominal values wherever the
//! underlying rule allows it.

pub mod classify;
pub mod cyclic;
pub mod dsp;
pub mod ingest;
pub mod synth;

pub use classify::{classify_record, Confidence, Detection, Event, PhaseSet, ThresholdConfig};
pub use dsp::{HarmonicProfile, NominalValues, Phase};
pub use ingest::{ComtradeConfig, CtRating, EventRecord};
