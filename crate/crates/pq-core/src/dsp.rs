//! General signal calculations shared by every disturbance detector:
//! nominal values, sliding RMS, discrete derivatives, harmonic ratios,
//! total harmonic distortion, first-cycle residuals, and phase angle.
//!
//! All operations are pure and reentrant. Derivatives are taken with
//! respect to the sample index (unit spacing), so derivative-based
//! thresholds are in per-sample units. The nominal system frequency is
//! fixed at 60 Hz.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::ingest::EventRecord;

/// Nominal power system frequency in Hz.
pub const NOMINAL_FREQ_HZ: f64 = 60.0;

/// Harmonic order cap used for THD and "all harmonics below x%" style tests.
pub const THD_HARMONIC_COUNT: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("time vector is degenerate (t_e equals t_1)")]
    DegenerateTime,
    #[error("record holds fewer samples ({n}) than one cycle ({needed})")]
    RecordTooShort { n: usize, needed: usize },
    #[error("RMS window of {window} samples exceeds signal length {n}")]
    WindowTooLarge { window: usize, n: usize },
    #[error("signal of {n} samples is too short for derivative order {order}")]
    TooShort { n: usize, order: usize },
    #[error("fundamental magnitude is below machine scale")]
    DegenerateFundamental,
    #[error("phase angle input vector has zero norm")]
    DegenerateVector,
    #[error("nominal values are degenerate (zero first-cycle peak)")]
    DegenerateNominal,
}

/// One of the three phases of a transmission circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn letter(self) -> char {
        match self {
            Phase::A => 'A',
            Phase::B => 'B',
            Phase::C => 'C',
        }
    }
}

/// Per-record nominal scalars derived from the first cycle of a record.
///
/// `nc` is kept fractional; consumers that need an integer sample count
/// round half-up at the point of use.
#[derive(Debug, Clone, Copy)]
pub struct NominalValues {
    /// Sampling frequency in Hz.
    pub fs: f64,
    /// Samples per nominal 60 Hz cycle (`fs / 60`, unrounded).
    pub nc: f64,
    /// Nominal peak voltage from the first cycle.
    pub v_peak_nom: f64,
    /// Nominal peak current from the first cycle.
    pub i_peak_nom: f64,
    /// Nominal RMS voltage from the first cycle.
    pub v_rms_nom: f64,
    /// Nominal RMS current from the first cycle.
    pub i_rms_nom: f64,
}

impl NominalValues {
    /// Rounded samples-per-cycle for consumers that index by sample.
    pub fn nc_samples(&self) -> usize {
        self.nc.round() as usize
    }

    /// True when the first cycle carried no usable signal on the channel
    /// kind the caller cares about.
    pub fn voltage_degenerate(&self) -> bool {
        self.v_peak_nom <= 0.0
    }

    pub fn current_degenerate(&self) -> bool {
        self.i_peak_nom <= 0.0
    }
}

/// Harmonic magnitude ratios `H_n = |X_n| / |X_1|` for n = 0..=M.
#[derive(Debug, Clone)]
pub struct HarmonicProfile {
    ratios: Vec<f64>,
    fundamental_magnitude: f64,
}

impl HarmonicProfile {
    /// Ratio of the nth harmonic to the fundamental. Orders that were not
    /// requested or that sit above the Nyquist frequency report 0.
    pub fn h(&self, n: usize) -> f64 {
        self.ratios.get(n).copied().unwrap_or(0.0)
    }

    pub fn fundamental_magnitude(&self) -> f64 {
        self.fundamental_magnitude
    }

    /// Highest order carried by the profile.
    pub fn max_order(&self) -> usize {
        self.ratios.len().saturating_sub(1)
    }

    /// Largest ratio among harmonics `2..=max_order`.
    pub fn max_above_fundamental(&self) -> f64 {
        self.ratios.iter().skip(2).fold(0.0, |a, &b| a.max(b))
    }
}

/// Sampling frequency from a time vector: `N / (t_e - t_1)`.
///
/// The formula carries an `N/(N-1)` bias that is negligible for DFR-scale
/// records (N >= 1000) and is kept verbatim so downstream cycle counts
/// match the rest of the toolchain.
pub fn sampling_frequency(time: &[f64]) -> Result<f64, DspError> {
    if time.len() < 2 {
        return Err(DspError::TooShort { n: time.len(), order: 1 });
    }
    let span = time[time.len() - 1] - time[0];
    if span <= 0.0 {
        return Err(DspError::DegenerateTime);
    }
    Ok(time.len() as f64 / span)
}

/// Samples per nominal cycle: `fs / 60`, returned unrounded.
pub fn samples_per_cycle(fs: f64) -> f64 {
    fs / NOMINAL_FREQ_HZ
}

/// Nominal peak and RMS values of the selected phase, taken from the
/// first cycle of the record.
pub fn nominal_values(record: &EventRecord, phase: Phase) -> Result<NominalValues, DspError> {
    let fs = sampling_frequency(&record.time)?;
    let nc = samples_per_cycle(fs);
    let cycle = nc.round() as usize;
    let n = record.len();
    if cycle == 0 || n < cycle {
        return Err(DspError::RecordTooShort { n, needed: cycle.max(1) });
    }
    let v = &record.voltage(phase)[..cycle];
    let i = &record.current(phase)[..cycle];
    let peak = |x: &[f64]| x.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let rms1 = |x: &[f64]| (x.iter().map(|&b| b * b).sum::<f64>() / x.len() as f64).sqrt();
    Ok(NominalValues {
        fs,
        nc,
        v_peak_nom: peak(v),
        i_peak_nom: peak(i),
        v_rms_nom: rms1(v),
        i_rms_nom: rms1(i),
    })
}

/// Sliding-window RMS. Output sample `k` is the RMS of `x[k..k + window]`,
/// so the output length is `N - window + 1`.
pub fn rms(x: &[f64], window: usize) -> Result<Vec<f64>, DspError> {
    if window == 0 || window > x.len() {
        return Err(DspError::WindowTooLarge { window, n: x.len() });
    }
    let inv = 1.0 / window as f64;
    let mut sumsq: f64 = x[..window].iter().map(|&v| v * v).sum();
    let mut out = Vec::with_capacity(x.len() - window + 1);
    out.push((sumsq * inv).max(0.0).sqrt());
    for k in window..x.len() {
        sumsq += x[k] * x[k] - x[k - window] * x[k - window];
        out.push((sumsq * inv).max(0.0).sqrt());
    }
    Ok(out)
}

/// Repeated forward difference with unit sample spacing. Output length is
/// `N - order`.
pub fn derivative(x: &[f64], order: usize) -> Result<Vec<f64>, DspError> {
    assert!((1..=3).contains(&order), "derivative order must be 1..=3");
    if x.len() <= order {
        return Err(DspError::TooShort { n: x.len(), order });
    }
    let mut cur: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    for _ in 1..order {
        cur = cur.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(cur)
}

/// Indices `n1` where the sign of the sequence flips between `n1` and the
/// next nonzero sample. Exact zeros carry the previous sign, so a
/// plateau between opposite signs counts once.
pub fn sign_changes(x_deriv: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut last_sign = 0i8;
    let mut last_idx = 0usize;
    for (k, &v) in x_deriv.iter().enumerate() {
        let s = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        };
        if s == 0 {
            continue;
        }
        if last_sign != 0 && s != last_sign {
            out.push(last_idx);
        }
        last_sign = s;
        last_idx = k;
    }
    out
}

/// Harmonic ratios of `x` up to order `m`.
///
/// The spectrum is taken over the signal truncated to a whole number of
/// nominal cycles to keep the 60 Hz multiples on-bin. Orders at or above
/// the Nyquist frequency are reported as absent (ratio 0).
pub fn harmonic_profile(x: &[f64], fs: f64, m: usize) -> Result<HarmonicProfile, DspError> {
    let nc = samples_per_cycle(fs);
    let cycles = (x.len() as f64 / nc).floor();
    if cycles < 1.0 {
        return Err(DspError::RecordTooShort { n: x.len(), needed: nc.round() as usize });
    }
    let len = ((cycles * nc).round() as usize).min(x.len());

    let mut buf: Vec<Complex<f64>> =
        x[..len].iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);

    let bin = |order: usize| -> Option<usize> {
        let k = (order as f64 * NOMINAL_FREQ_HZ * len as f64 / fs).round() as usize;
        // Bin 0 is DC; harmonics must stay strictly below Nyquist.
        if order > 0 && (k == 0 || k as f64 >= len as f64 / 2.0) {
            None
        } else {
            Some(k)
        }
    };

    let fund_bin = bin(1).ok_or(DspError::DegenerateFundamental)?;
    let fundamental = buf[fund_bin].norm();
    let scale = x[..len].iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if fundamental < 1e-12 * scale.max(1e-300) * len as f64 {
        return Err(DspError::DegenerateFundamental);
    }

    let mut ratios = Vec::with_capacity(m + 1);
    for order in 0..=m {
        let r = match bin(order) {
            Some(k) => buf[k].norm() / fundamental,
            None => 0.0,
        };
        ratios.push(r);
    }
    if ratios.len() > 1 {
        ratios[1] = 1.0;
    }
    Ok(HarmonicProfile { ratios, fundamental_magnitude: fundamental })
}

/// Total harmonic distortion: `sqrt(sum H_i^2)` for i = 2..=100.
pub fn thd(x: &[f64], fs: f64) -> Result<f64, DspError> {
    let profile = harmonic_profile(x, fs, THD_HARMONIC_COUNT)?;
    Ok(thd_of_profile(&profile))
}

/// THD from an already-computed profile.
pub fn thd_of_profile(profile: &HarmonicProfile) -> f64 {
    (2..=profile.max_order()).map(|n| profile.h(n) * profile.h(n)).sum::<f64>().sqrt()
}

/// Difference between the signal and its first cycle tiled to the full
/// record length. Large values mark where the record departs from its
/// pre-event shape.
pub fn first_cycle_residual(x: &[f64], nc: f64) -> Result<Vec<f64>, DspError> {
    let cycle = nc.round() as usize;
    if cycle == 0 || x.len() < 2 * cycle {
        return Err(DspError::RecordTooShort { n: x.len(), needed: 2 * cycle.max(1) });
    }
    Ok(x.iter().enumerate().map(|(k, &v)| v - x[k % cycle]).collect())
}

/// First index at which `|residual|` exceeds `threshold`, if any.
pub fn disturbance_onset(residual: &[f64], threshold: f64) -> Option<usize> {
    residual.iter().position(|&r| r.abs() > threshold)
}

/// Angle in degrees between two signals treated as vectors:
/// `acos(a.b / (|a||b|))`, in [0, 180].
pub fn phase_angle(v_alpha: &[f64], v_beta: &[f64]) -> Result<f64, DspError> {
    assert_eq!(v_alpha.len(), v_beta.len(), "phase_angle inputs must have equal length");
    let dot: f64 = v_alpha.iter().zip(v_beta).map(|(&a, &b)| a * b).sum();
    let na: f64 = v_alpha.iter().map(|&a| a * a).sum::<f64>().sqrt();
    let nb: f64 = v_beta.iter().map(|&b| b * b).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(DspError::DegenerateVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0).acos().to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn sine(amp: f64, freq: f64, fs: f64, n: usize, phase: f64) -> Vec<f64> {
        (0..n).map(|k| amp * (2.0 * PI * freq * k as f64 / fs + phase).sin()).collect()
    }

    #[test]
    fn sampling_frequency_direct() {
        assert_relative_eq!(sampling_frequency(&[0.0, 0.5, 1.0]).unwrap(), 3.0);
    }

    #[test]
    fn sampling_frequency_small_n_bias() {
        let t: Vec<f64> = (0..16).map(|k| k as f64 / 960.0).collect();
        assert_relative_eq!(sampling_frequency(&t).unwrap(), 1024.0, epsilon = 1e-9);
    }

    #[test]
    fn sampling_frequency_dfr_record() {
        // 1601 samples at dt = 1/960: N/(t_e - t_1) = 1601*960/1600 = 960.6
        let t: Vec<f64> = (0..1601).map(|k| k as f64 / 960.0).collect();
        assert!((sampling_frequency(&t).unwrap() - 960.6).abs() < 0.01);
    }

    #[test]
    fn sampling_frequency_degenerate() {
        assert_eq!(sampling_frequency(&[1.0, 1.0]), Err(DspError::DegenerateTime));
    }

    #[test]
    fn samples_per_cycle_values() {
        assert_relative_eq!(samples_per_cycle(960.0), 16.0);
        assert_relative_eq!(samples_per_cycle(1920.0), 32.0);
        assert_relative_eq!(samples_per_cycle(960.6), 16.01, epsilon = 1e-9);
    }

    #[test]
    fn rms_constant_signal() {
        let out = rms(&[-3.0; 40], 8).unwrap();
        assert_eq!(out.len(), 33);
        for v in out {
            assert_relative_eq!(v, 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rms_unit_sine_full_cycle() {
        let x = sine(1.0, 60.0, 960.0, 160, 0.3);
        for v in rms(&x, 16).unwrap() {
            assert!((v - 0.7071).abs() < 1e-3, "rms {v}");
        }
    }

    #[test]
    fn rms_matches_per_window_definition() {
        // Brute-force evaluation of the windowed definition as the oracle.
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let x: Vec<f64> = (0..64).map(|_| next() * 10.0).collect();
        let got = rms(&x, 16).unwrap();
        for (k, &g) in got.iter().enumerate() {
            let oracle =
                (x[k..k + 16].iter().map(|&v| v * v).sum::<f64>() / 16.0).sqrt();
            assert_relative_eq!(g, oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn rms_window_too_large() {
        assert!(matches!(rms(&[1.0, 2.0], 3), Err(DspError::WindowTooLarge { .. })));
    }

    #[test]
    fn derivative_ramp_and_bump() {
        let ramp: Vec<f64> = (0..10).map(|k| 2.5 * k as f64).collect();
        for d in derivative(&ramp, 1).unwrap() {
            assert_relative_eq!(d, 2.5, epsilon = 1e-12);
        }
        for d in derivative(&ramp, 2).unwrap() {
            assert_relative_eq!(d, 0.0, epsilon = 1e-12);
        }
        assert_eq!(derivative(&[0.0, 1.0, 0.0], 2).unwrap(), vec![-2.0]);
    }

    #[test]
    fn derivative_length_contract() {
        let x = [1.0, 4.0, 9.0, 16.0, 25.0];
        assert_eq!(derivative(&x, 3).unwrap().len(), 2);
        assert!(matches!(derivative(&[1.0], 1), Err(DspError::TooShort { .. })));
    }

    #[test]
    fn sign_changes_monotone_empty() {
        assert!(sign_changes(&[1.0, 2.0, 3.0, 3.5]).is_empty());
    }

    #[test]
    fn sign_changes_sine_extrema_count() {
        for cycles in [3usize, 7, 12] {
            let x = sine(1.0, 60.0, 960.0, cycles * 16, 0.17);
            let d = derivative(&x, 1).unwrap();
            let n = sign_changes(&d).len() as i64;
            let expect = 2 * cycles as i64;
            assert!((n - expect).abs() <= 1, "cycles {cycles}: {n} changes");
        }
    }

    #[test]
    fn sign_changes_zero_plateau_counts_once() {
        assert_eq!(sign_changes(&[1.0, 0.0, 0.0, -1.0]), vec![0]);
        assert_eq!(sign_changes(&[1.0, 0.0, 0.0, 1.0]), Vec::<usize>::new());
    }

    #[test]
    fn harmonic_profile_pure_tone() {
        let x = sine(50.0, 60.0, 960.0, 320, 0.0);
        let p = harmonic_profile(&x, 960.0, 7).unwrap();
        assert_relative_eq!(p.h(1), 1.0);
        for n in 2..=7 {
            assert!(p.h(n) <= 1e-6, "H{n} = {}", p.h(n));
        }
    }

    #[test]
    fn harmonic_profile_third_harmonic_mix() {
        let mut x = sine(1.0, 60.0, 960.0, 320, 0.0);
        let h3 = sine(0.2, 180.0, 960.0, 320, 0.4);
        for (a, b) in x.iter_mut().zip(h3) {
            *a += b;
        }
        let p = harmonic_profile(&x, 960.0, 5).unwrap();
        assert!((p.h(3) - 0.2).abs() < 1e-3, "H3 = {}", p.h(3));
    }

    #[test]
    fn harmonic_profile_above_nyquist_absent() {
        let x = sine(1.0, 60.0, 960.0, 160, 0.0);
        let p = harmonic_profile(&x, 960.0, 20).unwrap();
        // 8th harmonic = 480 Hz = Nyquist at 960 Hz sampling.
        for n in 8..=20 {
            assert_eq!(p.h(n), 0.0, "order {n} should be absent");
        }
    }

    #[test]
    fn harmonic_profile_degenerate() {
        let x = vec![0.0; 64];
        assert_eq!(harmonic_profile(&x, 960.0, 5).unwrap_err(), DspError::DegenerateFundamental);
    }

    #[test]
    fn thd_pure_sine_near_zero() {
        let x = sine(100.0, 60.0, 960.0, 480, 1.1);
        assert!(thd(&x, 960.0).unwrap() < 1e-6);
    }

    #[test]
    fn thd_pythagorean_mix() {
        let mut x = sine(1.0, 60.0, 960.0, 480, 0.0);
        let h5 = sine(0.06, 300.0, 960.0, 480, 0.9);
        let h7 = sine(0.08, 420.0, 960.0, 480, 2.1);
        for ((a, b), c) in x.iter_mut().zip(h5).zip(h7) {
            *a += b + c;
        }
        assert!((thd(&x, 960.0).unwrap() - 0.100).abs() < 1e-3);
    }

    #[test]
    fn residual_of_periodic_signal_is_zero() {
        let x = sine(2.0, 60.0, 960.0, 160, 0.2);
        let r = first_cycle_residual(&x, 16.0).unwrap();
        let peak = r.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        assert!(peak <= 1e-12 * 2.0, "residual peak {peak}");
        assert_eq!(disturbance_onset(&r, 1e-6), None);
    }

    #[test]
    fn residual_of_dc_step() {
        let mut x = sine(1.0, 60.0, 960.0, 320, 0.0);
        for v in x.iter_mut().skip(10 * 16) {
            *v += 0.5;
        }
        let r = first_cycle_residual(&x, 16.0).unwrap();
        for (k, &v) in r.iter().enumerate() {
            let expect = if k >= 160 { 0.5 } else { 0.0 };
            assert_relative_eq!(v, expect, epsilon = 1e-12);
        }
        assert_eq!(disturbance_onset(&r, 0.1), Some(160));
    }

    #[test]
    fn phase_angle_identity_and_balanced() {
        let a = sine(1.0, 60.0, 960.0, 160, 0.0);
        assert!(phase_angle(&a, &a).unwrap() < 1e-6);
        let b = sine(1.0, 60.0, 960.0, 160, -2.0 * PI / 3.0);
        let theta = phase_angle(&a, &b).unwrap();
        assert!((theta - 120.0).abs() < 0.5, "theta {theta}");
    }

    #[test]
    fn phase_angle_degenerate() {
        let a = [0.0; 8];
        let b = [1.0; 8];
        assert_eq!(phase_angle(&a, &b), Err(DspError::DegenerateVector));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn signal(min_len: usize) -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-1e4f64..1e4, min_len..min_len + 64)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn rms_invariant_under_sign_flip(x in signal(8)) {
                let flipped: Vec<f64> = x.iter().map(|v| -v).collect();
                prop_assert_eq!(rms(&x, 8).unwrap(), rms(&flipped, 8).unwrap());
            }

            #[test]
            fn rms_scales_linearly(x in signal(8), k in 0.01f64..100.0) {
                let scaled: Vec<f64> = x.iter().map(|v| v * k).collect();
                for (a, b) in rms(&x, 8).unwrap().iter().zip(rms(&scaled, 8).unwrap()) {
                    prop_assert!((a * k - b).abs() <= 1e-9 * b.abs().max(1e-12));
                }
            }

            #[test]
            fn derivative_antisymmetric_under_reversal(x in signal(4)) {
                let mut reversed = x.clone();
                reversed.reverse();
                let mut d = derivative(&reversed, 1).unwrap();
                d.reverse();
                let of_forward = derivative(&x, 1).unwrap();
                for (a, b) in of_forward.iter().zip(&d) {
                    prop_assert_eq!(*a, -*b);
                }
            }

            #[test]
            fn residual_of_tiled_cycle_is_zero(cycle in proptest::collection::vec(-1e4f64..1e4, 16), reps in 2usize..6) {
                let mut x = Vec::new();
                for _ in 0..reps {
                    x.extend_from_slice(&cycle);
                }
                let r = first_cycle_residual(&x, 16.0).unwrap();
                prop_assert!(r.iter().all(|&v| v == 0.0));
            }

            #[test]
            fn phase_angle_symmetric_and_scale_invariant(
                a in signal(16), k in 0.01f64..50.0
            ) {
                let b: Vec<f64> = a.iter().rev().cloned().collect();
                prop_assume!(phase_angle(&a, &b).is_ok());
                let ab = phase_angle(&a, &b).unwrap();
                let ba = phase_angle(&b, &a).unwrap();
                let scaled: Vec<f64> = b.iter().map(|v| v * k).collect();
                let with_scale = phase_angle(&a, &scaled).unwrap();
                prop_assert!((ab - ba).abs() < 1e-9);
                prop_assert!((ab - with_scale).abs() < 1e-6);
            }

            #[test]
            fn harmonic_ratios_scale_invariant(k in 0.01f64..100.0, phase in 0.0f64..6.28) {
                let x: Vec<f64> = (0..160)
                    .map(|n| {
                        let t = n as f64 / 960.0;
                        let w = 2.0 * PI * 60.0;
                        (w * t + phase).sin() + 0.3 * (3.0 * w * t).sin()
                    })
                    .collect();
                let scaled: Vec<f64> = x.iter().map(|v| v * k).collect();
                let p1 = harmonic_profile(&x, 960.0, 5).unwrap();
                let p2 = harmonic_profile(&scaled, 960.0, 5).unwrap();
                for n in 0..=5 {
                    prop_assert!((p1.h(n) - p2.h(n)).abs() < 1e-9, "order {}", n);
                }
            }
        }
    }
}
