//! The six-file compaction pipeline for a CFG/OSG pair.
//!
//! Voltage channels only: current is inductively driven and its cycles
//! collapse too often for cyclic analysis. The OSG is streamed twice —
//! a first pass establishes global bin edges and the frequency
//! histogram, a second pass fills the count matrices — so peak memory
//! stays at O(bins x Nc + window) regardless of file size.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::frequency::{
    argmax, narrowband_spectrum, FrequencySupport, DEFAULT_FREQ_POINTS, DEFAULT_HOP_CYCLES,
    DEFAULT_PBW_HZ, DEFAULT_WINDOW_CYCLES,
};
use super::histogram::{Histogram2d, DEFAULT_BINS};
use super::{synchronize_cycle, CycleExtractor, CyclicError};
use crate::dsp::NOMINAL_FREQ_HZ;
use crate::ingest::{parse_comtrade_cfg, ComtradeConfig, OsgReader};

const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone)]
pub struct CompactOptions {
    pub bins: usize,
    pub pbw_hz: f64,
    pub freq_points: usize,
    pub window_cycles: f64,
    pub hop_cycles: f64,
}

impl Default for CompactOptions {
    fn default() -> Self {
        CompactOptions {
            bins: DEFAULT_BINS,
            pbw_hz: DEFAULT_PBW_HZ,
            freq_points: DEFAULT_FREQ_POINTS,
            window_cycles: DEFAULT_WINDOW_CYCLES,
            hop_cycles: DEFAULT_HOP_CYCLES,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompactReport {
    pub out_files: Vec<PathBuf>,
    pub channels: Vec<String>,
    pub accepted_cycles: u64,
    pub rejected_cycles: u64,
    pub frequency_estimates: u64,
    pub input_bytes: u64,
    pub output_bytes: u64,
}

impl CompactReport {
    pub fn ratio(&self) -> f64 {
        self.input_bytes as f64 / self.output_bytes.max(1) as f64
    }
}

struct ChannelPass1 {
    extractor: CycleExtractor,
    first_cycle: Option<Vec<f64>>,
    accepted: u64,
    sync_rejects: u64,
    // Rolling buffer for the dominant-frequency hops.
    freq_buf: Vec<f64>,
}

/// Compact one CFG/OSG pair into six CSV files in `out_dir`.
pub fn compact(
    cfg_path: &Path,
    osg_path: &Path,
    out_dir: &Path,
    opts: &CompactOptions,
) -> Result<CompactReport, CyclicError> {
    let cfg = parse_comtrade_cfg(cfg_path)?;
    let volt_idx = cfg.voltage_channel_indices();
    if volt_idx.is_empty() {
        return Err(CyclicError::NoVoltageChannels);
    }
    let fs = cfg.sample_rate;
    let nc = fs / NOMINAL_FREQ_HZ;
    let width = nc.round() as usize;
    let support = FrequencySupport {
        center: NOMINAL_FREQ_HZ,
        pbw: opts.pbw_hz,
        points: opts.freq_points,
    };
    let win = (opts.window_cycles * nc).round() as usize;
    let hop = (opts.hop_cycles * nc).round().max(1.0) as usize;

    // Pass 1: global extrema of synchronized cycles and their residuals,
    // plus the frequency histogram.
    let mut st: Vec<ChannelPass1> = volt_idx
        .iter()
        .map(|_| ChannelPass1 {
            extractor: CycleExtractor::new(fs),
            first_cycle: None,
            accepted: 0,
            sync_rejects: 0,
            freq_buf: Vec::with_capacity(win + CHUNK),
        })
        .collect();
    let mut cyc_lo = f64::INFINITY;
    let mut cyc_hi = f64::NEG_INFINITY;
    let mut res_lo = f64::INFINITY;
    let mut res_hi = f64::NEG_INFINITY;
    let mut freq_counts = vec![0u64; support.points];
    let mut n_estimates = 0u64;

    stream_voltage(&cfg, osg_path, &volt_idx, |ch, samples| {
        let state = &mut st[ch];
        for &v in samples {
            if let Some(window) = state.extractor.push(v) {
                match synchronize_cycle(&window, fs) {
                    Ok(sc) => {
                        for &s in &sc.samples {
                            cyc_lo = cyc_lo.min(s);
                            cyc_hi = cyc_hi.max(s);
                        }
                        match &state.first_cycle {
                            Some(first) => {
                                for (a, b) in sc.samples.iter().zip(first) {
                                    let d = a - b;
                                    res_lo = res_lo.min(d);
                                    res_hi = res_hi.max(d);
                                }
                            }
                            None => state.first_cycle = Some(sc.samples.clone()),
                        }
                        state.accepted += 1;
                    }
                    Err(_) => state.sync_rejects += 1,
                }
            }
        }
        // Frequency estimation on the raw (unsynchronized) samples.
        state.freq_buf.extend_from_slice(samples);
        let mut consumed = 0usize;
        while consumed + win <= state.freq_buf.len() {
            let spectrum =
                narrowband_spectrum(&state.freq_buf[consumed..consumed + win], fs, &support);
            freq_counts[argmax(&spectrum)] += 1;
            n_estimates += 1;
            consumed += hop;
        }
        state.freq_buf.drain(..consumed);
    })?;
    for state in &mut st {
        state.extractor.finish();
    }

    let accepted: u64 = st.iter().map(|s| s.accepted).sum();
    let rejected: u64 = st.iter().map(|s| s.extractor.rejected() + s.sync_rejects).sum();
    if accepted == 0 {
        return Err(CyclicError::EmptyStream);
    }
    if res_lo > res_hi {
        // Single cycle per channel: residuals are empty but well-defined.
        res_lo = 0.0;
        res_hi = 0.0;
    }

    // Pass 2: fill the count matrices.
    let mut cyclic = Histogram2d::new(opts.bins, width, cyc_lo, cyc_hi);
    let mut residual = Histogram2d::new(opts.bins, width, res_lo, res_hi);
    let mut st2: Vec<(CycleExtractor, Option<Vec<f64>>)> =
        volt_idx.iter().map(|_| (CycleExtractor::new(fs), None)).collect();
    stream_voltage(&cfg, osg_path, &volt_idx, |ch, samples| {
        let (extractor, first_cycle) = &mut st2[ch];
        for &v in samples {
            if let Some(window) = extractor.push(v) {
                if let Ok(sc) = synchronize_cycle(&window, fs) {
                    cyclic.accumulate(&sc.samples);
                    match first_cycle {
                        Some(first) => {
                            let diff: Vec<f64> =
                                sc.samples.iter().zip(first.iter()).map(|(a, b)| a - b).collect();
                            residual.accumulate(&diff);
                        }
                        None => *first_cycle = Some(sc.samples),
                    }
                }
            }
        }
    })?;

    // Output files.
    fs::create_dir_all(out_dir)?;
    let base = osg_path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
    let channels: Vec<String> = volt_idx.iter().map(|&i| cfg.analog[i].name.clone()).collect();
    let duration_s = cfg.n_samples as f64 / fs;

    let path = |suffix: &str| out_dir.join(format!("{base}_{suffix}.csv"));
    let out_files = vec![
        path("cyclic"),
        path("cyclic_meta"),
        path("residual"),
        path("residual_meta"),
        path("freq"),
        path("freq_meta"),
    ];

    write_matrix_csv(&out_files[0], &cyclic)?;
    write_matrix_meta(&out_files[1], &cyclic, &cfg, &channels, accepted, rejected, duration_s)?;
    write_matrix_csv(&out_files[2], &residual)?;
    write_matrix_meta(&out_files[3], &residual, &cfg, &channels, accepted, rejected, duration_s)?;
    write_freq_csv(&out_files[4], &freq_counts)?;
    write_freq_meta(&out_files[5], &support, &cfg, n_estimates, duration_s)?;

    let input_bytes =
        fs::metadata(osg_path)?.len() + fs::metadata(cfg_path).map(|m| m.len()).unwrap_or(0);
    let output_bytes = out_files.iter().filter_map(|p| fs::metadata(p).ok()).map(|m| m.len()).sum();

    Ok(CompactReport {
        out_files,
        channels,
        accepted_cycles: accepted,
        rejected_cycles: rejected,
        frequency_estimates: n_estimates,
        input_bytes,
        output_bytes,
    })
}

/// Stream the voltage channels of the OSG in chunks, invoking the sink
/// with (voltage-channel ordinal, samples).
fn stream_voltage(
    cfg: &ComtradeConfig,
    osg_path: &Path,
    volt_idx: &[usize],
    mut sink: impl FnMut(usize, &[f64]),
) -> Result<(), CyclicError> {
    let mut reader = OsgReader::open(cfg, osg_path)?;
    let mut chans: Vec<Vec<f64>> = vec![Vec::with_capacity(CHUNK); cfg.n_channels];
    loop {
        for c in &mut chans {
            c.clear();
        }
        let got = reader.read_into(&mut chans, CHUNK)?;
        if got == 0 {
            return Ok(());
        }
        for (ord, &idx) in volt_idx.iter().enumerate() {
            sink(ord, &chans[idx]);
        }
    }
}

fn write_matrix_csv(path: &Path, h: &Histogram2d) -> Result<(), CyclicError> {
    let mut text = String::with_capacity(h.bins * h.columns * 2);
    for bin in 0..h.bins {
        for col in 0..h.columns {
            if col > 0 {
                text.push(',');
            }
            write!(text, "{}", h.count(bin, col)).expect("write to string");
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_matrix_meta(
    path: &Path,
    h: &Histogram2d,
    cfg: &ComtradeConfig,
    channels: &[String],
    accepted: u64,
    rejected: u64,
    duration_s: f64,
) -> Result<(), CyclicError> {
    let mut text = String::new();
    text.push_str("key,value\n");
    writeln!(text, "bins,{}", h.bins).ok();
    writeln!(text, "columns,{}", h.columns).ok();
    writeln!(text, "sample_rate_hz,{}", cfg.sample_rate).ok();
    writeln!(text, "start_timestamp,\"{}\"", cfg.start_timestamp).ok();
    writeln!(text, "trigger_timestamp,\"{}\"", cfg.trigger_timestamp).ok();
    writeln!(text, "duration_s,{duration_s}").ok();
    writeln!(text, "channels,{}", channels.join(";")).ok();
    writeln!(text, "accepted_cycles,{accepted}").ok();
    writeln!(text, "rejected_cycles,{rejected}").ok();
    let edges: Vec<String> = h.edges().map(|e| e.to_string()).collect();
    writeln!(text, "bin_edges,{}", edges.join(";")).ok();
    fs::write(path, text)?;
    Ok(())
}

fn write_freq_csv(path: &Path, counts: &[u64]) -> Result<(), CyclicError> {
    let mut text = String::new();
    for c in counts {
        writeln!(text, "{c}").ok();
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_freq_meta(
    path: &Path,
    support: &FrequencySupport,
    cfg: &ComtradeConfig,
    n_estimates: u64,
    duration_s: f64,
) -> Result<(), CyclicError> {
    let mut text = String::new();
    text.push_str("key,value\n");
    writeln!(text, "center_hz,{}", support.center).ok();
    writeln!(text, "pbw_hz,{}", support.pbw).ok();
    writeln!(text, "points,{}", support.points).ok();
    writeln!(text, "start_timestamp,\"{}\"", cfg.start_timestamp).ok();
    writeln!(text, "duration_s,{duration_s}").ok();
    writeln!(text, "estimates,{n_estimates}").ok();
    let freqs: Vec<String> = support.frequencies().iter().map(f64::to_string).collect();
    writeln!(text, "support_hz,{}", freqs.join(";")).ok();
    fs::write(path, text)?;
    Ok(())
}
