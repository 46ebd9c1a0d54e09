//! COMTRADE (IEEE C37.111-2013) configuration and oscillography files.
//!
//! Only the 2013 revision is handled, with ASCII or 16-bit binary analog
//! data. Status channels are parsed for record-stride purposes and
//! otherwise ignored. The [`OsgReader`] streams samples in bounded
//! chunks so day-scale files never have to fit in memory; [`read_osg`]
//! is the convenience whole-file wrapper.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::IngestError;

/// Rated continuous currents of a CT and the implied turns ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtRating {
    pub r_ct: f64,
    pub i_primary: f64,
    pub i_secondary: f64,
}

impl CtRating {
    pub fn new(i_primary: f64, i_secondary: f64) -> Self {
        Self { r_ct: i_primary / i_secondary, i_primary, i_secondary }
    }

    /// Ratio with the conventional 5 A secondary.
    pub fn from_ratio(r_ct: f64) -> Self {
        Self { r_ct, i_primary: r_ct * 5.0, i_secondary: 5.0 }
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let implied = self.i_primary / self.i_secondary;
        if self.i_secondary == 0.0 || ((self.r_ct - implied) / implied).abs() > 1e-9 {
            return Err(IngestError::InvalidRecord {
                detail: format!(
                    "CT ratio {} does not match {}/{}",
                    self.r_ct, self.i_primary, self.i_secondary
                ),
            });
        }
        Ok(())
    }
}

impl Default for CtRating {
    /// The conventional 1200:5 rating used when a record carries none.
    fn default() -> Self {
        CtRating::new(1200.0, 5.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Ascii,
    Binary16,
}

/// One analog channel descriptor from a CFG file.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogChannel {
    pub index: usize,
    pub name: String,
    pub phase: String,
    pub unit: String,
    /// Conversion: engineering value = `scale_a * raw + offset_b`.
    pub scale_a: f64,
    pub offset_b: f64,
    pub primary: f64,
    pub secondary: f64,
}

impl AnalogChannel {
    pub fn is_voltage(&self) -> bool {
        self.unit.trim().to_ascii_uppercase().ends_with('V')
    }

    pub fn is_current(&self) -> bool {
        self.unit.trim().to_ascii_uppercase().ends_with('A')
    }

    pub fn ct_rating(&self) -> CtRating {
        CtRating::new(self.primary, self.secondary)
    }
}

/// Metadata needed to interpret an OSG file.
#[derive(Debug, Clone, PartialEq)]
pub struct ComtradeConfig {
    pub station: String,
    pub rec_dev_id: String,
    pub revision: u32,
    /// Number of analog channels.
    pub n_channels: usize,
    pub n_digital: usize,
    pub analog: Vec<AnalogChannel>,
    pub line_freq: f64,
    pub sample_rate: f64,
    pub n_samples: usize,
    pub start_timestamp: String,
    pub trigger_timestamp: String,
    pub data_format: DataFormat,
    pub time_mult: f64,
}

impl ComtradeConfig {
    fn digital_words(&self) -> usize {
        self.n_digital.div_ceil(16)
    }

    /// Bytes per sample record in the binary layout: sample number,
    /// timestamp, analog values, packed status words.
    pub fn binary_stride(&self) -> usize {
        4 + 4 + 2 * self.n_channels + 2 * self.digital_words()
    }

    pub fn voltage_channel_indices(&self) -> Vec<usize> {
        (0..self.analog.len()).filter(|&i| self.analog[i].is_voltage()).collect()
    }

    pub fn current_channel_indices(&self) -> Vec<usize> {
        (0..self.analog.len()).filter(|&i| self.analog[i].is_current()).collect()
    }
}

fn bad(line: usize, detail: impl Into<String>) -> IngestError {
    IngestError::BadFieldFormat { line, detail: detail.into() }
}

/// Parse a 2013-revision CFG file.
pub fn parse_comtrade_cfg<P: AsRef<Path>>(path: P) -> Result<ComtradeConfig, IngestError> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let lines: Vec<&str> = text.lines().collect();
    let mut no = 0usize;
    let mut next = || -> Result<&str, IngestError> {
        let line = lines.get(no).copied().ok_or(IngestError::TruncatedFile {
            expected: no as u64 + 1,
            found: no as u64,
        })?;
        no += 1;
        Ok(line)
    };

    // Station line: name, device id, revision year.
    let station_line = next()?;
    let parts: Vec<&str> = station_line.split(',').map(str::trim).collect();
    if parts.len() < 3 {
        return Err(IngestError::UnsupportedRevision {
            found: "pre-1999 (no revision field)".into(),
        });
    }
    let revision: u32 = parts[2]
        .parse()
        .map_err(|_| IngestError::UnsupportedRevision { found: parts[2].into() })?;
    if revision != 2013 {
        return Err(IngestError::UnsupportedRevision { found: parts[2].into() });
    }
    let station = parts[0].to_string();
    let rec_dev_id = parts[1].to_string();

    // Channel count line: TT,##A,##D
    let counts_line = next()?;
    let parts: Vec<&str> = counts_line.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad(2, format!("expected TT,##A,##D, found {counts_line:?}")));
    }
    let total: usize = parts[0].parse().map_err(|_| bad(2, "total channel count"))?;
    let n_analog = parse_suffixed(parts[1], 'A').ok_or_else(|| bad(2, "analog count"))?;
    let n_digital = parse_suffixed(parts[2], 'D').ok_or_else(|| bad(2, "digital count"))?;
    if total != n_analog + n_digital {
        return Err(IngestError::ChannelCountMismatch {
            declared: total,
            found: n_analog + n_digital,
        });
    }

    let mut analog = Vec::with_capacity(n_analog);
    for k in 0..n_analog {
        let line_no = 3 + k;
        let line = next().map_err(|_| IngestError::ChannelCountMismatch {
            declared: n_analog,
            found: k,
        })?;
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() < 13 {
            // Most likely the analog block ended early and this is the
            // frequency or status-channel line.
            return Err(IngestError::ChannelCountMismatch { declared: n_analog, found: k });
        }
        let index: usize = f[0].parse().map_err(|_| bad(line_no, "channel index"))?;
        if index != k + 1 {
            return Err(bad(line_no, format!("channel index {index}, expected {}", k + 1)));
        }
        let num = |i: usize, what: &str| -> Result<f64, IngestError> {
            f[i].parse().map_err(|_| bad(line_no, format!("{what} field {:?}", f[i])))
        };
        let secondary = num(11, "secondary")?;
        if secondary == 0.0 {
            return Err(bad(line_no, "secondary rating must be nonzero"));
        }
        analog.push(AnalogChannel {
            index,
            name: f[1].to_string(),
            phase: f[2].to_string(),
            unit: f[4].to_string(),
            scale_a: num(5, "scale a")?,
            offset_b: num(6, "offset b")?,
            primary: num(10, "primary")?,
            secondary,
        });
    }
    for k in 0..n_digital {
        next().map_err(|_| IngestError::ChannelCountMismatch {
            declared: n_digital,
            found: k,
        })?;
    }

    let freq_line_no = 3 + n_analog + n_digital;
    let line_freq: f64 =
        next()?.trim().parse().map_err(|_| bad(freq_line_no, "line frequency"))?;
    let nrates: usize =
        next()?.trim().parse().map_err(|_| bad(freq_line_no + 1, "nrates"))?;
    if nrates != 1 {
        return Err(bad(freq_line_no + 1, format!("{nrates} sample rates; only 1 supported")));
    }
    let rate_line = next()?;
    let f: Vec<&str> = rate_line.split(',').map(str::trim).collect();
    if f.len() != 2 {
        return Err(bad(freq_line_no + 2, "expected samp,endsamp"));
    }
    let sample_rate: f64 = f[0].parse().map_err(|_| bad(freq_line_no + 2, "sample rate"))?;
    let n_samples: usize = f[1].parse().map_err(|_| bad(freq_line_no + 2, "endsamp"))?;
    if sample_rate <= 0.0 || n_samples == 0 {
        return Err(bad(freq_line_no + 2, "sample rate and sample count must be positive"));
    }

    let start_timestamp = next()?.trim().to_string();
    let trigger_timestamp = next()?.trim().to_string();
    let format_line_no = freq_line_no + 5;
    let data_format = match next()?.trim().to_ascii_uppercase().as_str() {
        "ASCII" => DataFormat::Ascii,
        "BINARY" => DataFormat::Binary16,
        other => {
            return Err(bad(format_line_no, format!("unsupported data format {other:?}")))
        }
    };
    let time_mult: f64 = match lines.get(no) {
        Some(s) if !s.trim().is_empty() => {
            s.trim().parse().map_err(|_| bad(format_line_no + 1, "time multiplier"))?
        }
        _ => 1.0,
    };

    Ok(ComtradeConfig {
        station,
        rec_dev_id,
        revision,
        n_channels: n_analog,
        n_digital,
        analog,
        line_freq,
        sample_rate,
        n_samples,
        start_timestamp,
        trigger_timestamp,
        data_format,
        time_mult,
    })
}

fn parse_suffixed(field: &str, suffix: char) -> Option<usize> {
    let trimmed = field.trim();
    let body = trimmed
        .strip_suffix(suffix)
        .or_else(|| trimmed.strip_suffix(suffix.to_ascii_lowercase()))?;
    body.parse().ok()
}

/// Streaming OSG reader. Samples are converted to engineering units with
/// each channel's `a * raw + b` mapping as they are read.
pub struct OsgReader {
    format: DataFormat,
    reader: BufReader<File>,
    scale: Vec<(f64, f64)>,
    n_analog: usize,
    n_digital: usize,
    stride: usize,
    total: usize,
    read_so_far: usize,
    buf: Vec<u8>,
}

impl OsgReader {
    pub fn open<P: AsRef<Path>>(cfg: &ComtradeConfig, path: P) -> Result<Self, IngestError> {
        let file = File::open(path.as_ref())?;
        if cfg.data_format == DataFormat::Binary16 {
            let expected = (cfg.n_samples * cfg.binary_stride()) as u64;
            let found = file.metadata()?.len();
            if found < expected {
                return Err(IngestError::TruncatedFile { expected, found });
            }
            if found > expected {
                return Err(IngestError::LengthMismatch { expected, found });
            }
        }
        Ok(Self {
            format: cfg.data_format,
            reader: BufReader::with_capacity(1 << 20, file),
            scale: cfg.analog.iter().map(|c| (c.scale_a, c.offset_b)).collect(),
            n_analog: cfg.n_channels,
            n_digital: cfg.n_digital,
            stride: cfg.binary_stride(),
            total: cfg.n_samples,
            read_so_far: 0,
            buf: Vec::new(),
        })
    }

    pub fn n_channels(&self) -> usize {
        self.n_analog
    }

    pub fn n_samples(&self) -> usize {
        self.total
    }

    /// Read up to `cap` samples, appending each channel's values to the
    /// corresponding vector in `chans`. Returns the number of samples
    /// appended; 0 means the file is exhausted.
    pub fn read_into(
        &mut self,
        chans: &mut [Vec<f64>],
        cap: usize,
    ) -> Result<usize, IngestError> {
        assert_eq!(chans.len(), self.n_analog, "one output vector per analog channel");
        let want = cap.min(self.total - self.read_so_far);
        if want == 0 {
            return Ok(0);
        }
        match self.format {
            DataFormat::Binary16 => self.read_binary(chans, want),
            DataFormat::Ascii => self.read_ascii(chans, want),
        }
    }

    fn read_binary(
        &mut self,
        chans: &mut [Vec<f64>],
        want: usize,
    ) -> Result<usize, IngestError> {
        self.buf.resize(want * self.stride, 0);
        self.reader.read_exact(&mut self.buf).map_err(|_| IngestError::TruncatedFile {
            expected: (self.total * self.stride) as u64,
            found: ((self.read_so_far + want) * self.stride) as u64,
        })?;
        for rec in self.buf.chunks_exact(self.stride) {
            let analog = &rec[8..8 + 2 * self.n_analog];
            for (ch, pair) in analog.chunks_exact(2).enumerate() {
                let raw = i16::from_le_bytes([pair[0], pair[1]]) as f64;
                let (a, b) = self.scale[ch];
                chans[ch].push(a * raw + b);
            }
        }
        self.read_so_far += want;
        Ok(want)
    }

    fn read_ascii(&mut self, chans: &mut [Vec<f64>], want: usize) -> Result<usize, IngestError> {
        let mut line = String::new();
        let mut got = 0usize;
        while got < want {
            line.clear();
            let n = self.reader.read_line(&mut line)?;
            if n == 0 {
                return Err(IngestError::TruncatedFile {
                    expected: self.total as u64,
                    found: (self.read_so_far + got) as u64,
                });
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim().split(',').collect();
            let expected_fields = 2 + self.n_analog + self.n_digital;
            if fields.len() != expected_fields {
                return Err(IngestError::LengthMismatch {
                    expected: expected_fields as u64,
                    found: fields.len() as u64,
                });
            }
            for ch in 0..self.n_analog {
                let raw: f64 = fields[2 + ch].trim().parse().map_err(|_| {
                    IngestError::MalformedNumber {
                        row: self.read_so_far + got + 1,
                        column: format!("analog {}", ch + 1),
                        value: fields[2 + ch].to_string(),
                    }
                })?;
                let (a, b) = self.scale[ch];
                chans[ch].push(a * raw + b);
            }
            got += 1;
        }
        self.read_so_far += got;
        // Past the declared end, any further non-empty row is an
        // inconsistency rather than trailing whitespace.
        if self.read_so_far == self.total {
            loop {
                line.clear();
                if self.reader.read_line(&mut line)? == 0 {
                    break;
                }
                if !line.trim().is_empty() {
                    return Err(IngestError::LengthMismatch {
                        expected: self.total as u64,
                        found: self.total as u64 + 1,
                    });
                }
            }
        }
        Ok(got)
    }
}

/// Read a whole OSG file into per-channel vectors of engineering values.
pub fn read_osg<P: AsRef<Path>>(
    cfg: &ComtradeConfig,
    path: P,
) -> Result<Vec<Vec<f64>>, IngestError> {
    let mut reader = OsgReader::open(cfg, path)?;
    let mut chans: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.n_samples); cfg.n_channels];
    while reader.read_into(&mut chans, 1 << 16)? > 0 {}
    Ok(chans)
}

/// Write a CFG file describing `cfg`. Counterpart of
/// [`parse_comtrade_cfg`], used by the synthetic-corpus tooling.
pub fn write_comtrade_cfg<P: AsRef<Path>>(
    cfg: &ComtradeConfig,
    path: P,
) -> Result<(), IngestError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{},{},{}", cfg.station, cfg.rec_dev_id, cfg.revision)?;
    writeln!(out, "{},{}A,{}D", cfg.n_channels + cfg.n_digital, cfg.n_channels, cfg.n_digital)?;
    for ch in &cfg.analog {
        writeln!(
            out,
            "{},{},{},,{},{},{},0.0,-32767,32767,{},{},P",
            ch.index, ch.name, ch.phase, ch.unit, ch.scale_a, ch.offset_b, ch.primary,
            ch.secondary
        )?;
    }
    for k in 0..cfg.n_digital {
        writeln!(out, "{},ST{},,,0", k + 1, k + 1)?;
    }
    writeln!(out, "{}", cfg.line_freq)?;
    writeln!(out, "1")?;
    writeln!(out, "{},{}", cfg.sample_rate, cfg.n_samples)?;
    writeln!(out, "{}", cfg.start_timestamp)?;
    writeln!(out, "{}", cfg.trigger_timestamp)?;
    writeln!(
        out,
        "{}",
        match cfg.data_format {
            DataFormat::Ascii => "ASCII",
            DataFormat::Binary16 => "BINARY",
        }
    )?;
    writeln!(out, "{}", cfg.time_mult)?;
    out.flush()?;
    Ok(())
}

/// Streaming OSG writer: engineering values in, quantized records out.
pub struct OsgWriter {
    format: DataFormat,
    out: BufWriter<File>,
    scale: Vec<(f64, f64)>,
    n_digital_words: usize,
    written: usize,
    total: usize,
    buf: Vec<u8>,
}

impl OsgWriter {
    pub fn create<P: AsRef<Path>>(cfg: &ComtradeConfig, path: P) -> Result<Self, IngestError> {
        Ok(Self {
            format: cfg.data_format,
            out: BufWriter::with_capacity(1 << 20, File::create(path)?),
            scale: cfg.analog.iter().map(|c| (c.scale_a, c.offset_b)).collect(),
            n_digital_words: cfg.digital_words(),
            written: 0,
            total: cfg.n_samples,
            buf: Vec::new(),
        })
    }

    /// Append one chunk; every channel slice must have the same length.
    pub fn write_chunk(&mut self, chans: &[&[f64]]) -> Result<(), IngestError> {
        assert_eq!(chans.len(), self.scale.len());
        let n = chans.first().map_or(0, |c| c.len());
        for c in chans {
            assert_eq!(c.len(), n, "ragged chunk");
        }
        match self.format {
            DataFormat::Binary16 => {
                self.buf.clear();
                for k in 0..n {
                    let idx = (self.written + k + 1) as u32;
                    self.buf.extend_from_slice(&idx.to_le_bytes());
                    self.buf.extend_from_slice(&0u32.to_le_bytes());
                    for (ch, &(a, b)) in self.scale.iter().enumerate() {
                        let raw = ((chans[ch][k] - b) / a).round().clamp(-32767.0, 32767.0);
                        self.buf.extend_from_slice(&(raw as i16).to_le_bytes());
                    }
                    for _ in 0..self.n_digital_words {
                        self.buf.extend_from_slice(&0u16.to_le_bytes());
                    }
                }
                self.out.write_all(&self.buf)?;
            }
            DataFormat::Ascii => {
                let mut line = String::new();
                for k in 0..n {
                    line.clear();
                    line.push_str(&format!("{},0", self.written + k + 1));
                    for (ch, &(a, b)) in self.scale.iter().enumerate() {
                        let raw = ((chans[ch][k] - b) / a).round().clamp(-32767.0, 32767.0);
                        line.push_str(&format!(",{}", raw as i64));
                    }
                    for _ in 0..self.n_digital_words * 16 {
                        line.push_str(",0");
                    }
                    writeln!(self.out, "{line}")?;
                }
            }
        }
        self.written += n;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), IngestError> {
        self.out.flush()?;
        if self.written != self.total {
            return Err(IngestError::LengthMismatch {
                expected: self.total as u64,
                found: self.written as u64,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;
    use tempfile::tempdir;

    fn sample_cfg(n_analog: usize, format: DataFormat, n_samples: usize) -> ComtradeConfig {
        let names = ["VA", "VB", "VC", "IA", "IB", "IC"];
        let analog = (0..n_analog)
            .map(|k| AnalogChannel {
                index: k + 1,
                name: names[k % 6].to_string(),
                phase: names[k % 6][1..].to_string(),
                unit: if k < 3 { "V".into() } else { "A".into() },
                scale_a: 1.0,
                offset_b: 0.0,
                primary: 1200.0,
                secondary: 5.0,
            })
            .collect();
        ComtradeConfig {
            station: "STN".into(),
            rec_dev_id: "DFR1".into(),
            revision: 2013,
            n_channels: n_analog,
            n_digital: 0,
            analog,
            line_freq: 60.0,
            sample_rate: 960.0,
            n_samples,
            start_timestamp: "01/01/2026,00:00:00.000000".into(),
            trigger_timestamp: "01/01/2026,00:00:00.000000".into(),
            data_format: format,
            time_mult: 1.0,
        }
    }

    #[test]
    fn cfg_round_trip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("rec.cfg");
        let cfg = sample_cfg(6, DataFormat::Binary16, 3456000);
        write_comtrade_cfg(&cfg, &p).unwrap();
        let back = parse_comtrade_cfg(&p).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.n_channels, 6);
        assert_eq!(back.sample_rate, 960.0);
        assert_eq!(back.data_format, DataFormat::Binary16);
    }

    #[test]
    fn cfg_ct_rating_example() {
        let cfg = sample_cfg(6, DataFormat::Binary16, 100);
        let ct = cfg.analog[3].ct_rating();
        assert_eq!(ct.r_ct, 240.0);
        ct.validate().unwrap();
    }

    #[test]
    fn cfg_wrong_revision_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("rec.cfg");
        std::fs::write(&p, "STN,DFR1,1999\n1,1A,0D\n1,VA,A,,V,1,0,0,-32767,32767,1,1,P\n60\n1\n960,16\nx\nx\nASCII\n1\n").unwrap();
        assert!(matches!(
            parse_comtrade_cfg(&p),
            Err(IngestError::UnsupportedRevision { .. })
        ));
    }

    #[test]
    fn cfg_channel_count_mismatch() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("rec.cfg");
        // Declares 3 analog channels but only lists 1.
        std::fs::write(&p, "STN,DFR1,2013\n3,3A,0D\n1,VA,A,,V,1,0,0,-32767,32767,1,1,P\n60\n1\n960,16\nx\nx\nASCII\n1\n").unwrap();
        assert!(matches!(
            parse_comtrade_cfg(&p),
            Err(IngestError::ChannelCountMismatch { declared: 3, found: 1 })
        ));
    }

    #[test]
    fn cfg_total_vs_parts_mismatch() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("rec.cfg");
        std::fs::write(&p, "STN,DFR1,2013\n9,6A,1D\n").unwrap();
        assert!(matches!(
            parse_comtrade_cfg(&p),
            Err(IngestError::ChannelCountMismatch { declared: 9, found: 7 })
        ));
    }

    #[test]
    fn binary_osg_identity_scaling() {
        let dir = tempdir().unwrap();
        let cfg = sample_cfg(1, DataFormat::Binary16, 16);
        let osg = dir.path().join("rec.osg");
        let vals: Vec<f64> =
            (0..16).map(|n| (1000.0 * (2.0 * PI * n as f64 / 16.0).sin()).round()).collect();
        let mut w = OsgWriter::create(&cfg, &osg).unwrap();
        w.write_chunk(&[&vals]).unwrap();
        w.finish().unwrap();
        let chans = read_osg(&cfg, &osg).unwrap();
        assert_eq!(chans.len(), 1);
        assert_eq!(chans[0], vals);
    }

    #[test]
    fn binary_osg_truncation_detected() {
        let dir = tempdir().unwrap();
        let cfg = sample_cfg(1, DataFormat::Binary16, 16);
        let osg = dir.path().join("rec.osg");
        let vals = vec![0.0; 16];
        let mut w = OsgWriter::create(&cfg, &osg).unwrap();
        w.write_chunk(&[&vals]).unwrap();
        w.finish().unwrap();
        let full = std::fs::read(&osg).unwrap();
        std::fs::write(&osg, &full[..full.len() - 2]).unwrap();
        assert!(matches!(
            read_osg(&cfg, &osg),
            Err(IngestError::TruncatedFile { .. })
        ));
    }

    #[test]
    fn ascii_osg_round_trip_and_overrun() {
        let dir = tempdir().unwrap();
        let mut cfg = sample_cfg(2, DataFormat::Ascii, 8);
        cfg.analog[0].scale_a = 0.5;
        cfg.analog[0].offset_b = 10.0;
        let osg = dir.path().join("rec.dat");
        let a: Vec<f64> = (0..8).map(|k| 10.0 + 0.5 * k as f64).collect();
        let b: Vec<f64> = (0..8).map(|k| -(k as f64)).collect();
        let mut w = OsgWriter::create(&cfg, &osg).unwrap();
        w.write_chunk(&[&a, &b]).unwrap();
        w.finish().unwrap();
        let chans = read_osg(&cfg, &osg).unwrap();
        assert_eq!(chans[0], a);
        assert_eq!(chans[1], b);

        // Appending an extra row makes the file inconsistent with the CFG.
        let mut text = std::fs::read_to_string(&osg).unwrap();
        text.push_str("9,0,0,0\n");
        std::fs::write(&osg, text).unwrap();
        assert!(matches!(read_osg(&cfg, &osg), Err(IngestError::LengthMismatch { .. })));
    }

    #[test]
    fn osg_quantization_bounded_by_half_scale_step() {
        let dir = tempdir().unwrap();
        let mut cfg = sample_cfg(1, DataFormat::Binary16, 960);
        cfg.analog[0].scale_a = 4.5;
        let osg = dir.path().join("rec.osg");
        let vals: Vec<f64> =
            (0..960).map(|n| 132_900.0 * (2.0 * PI * 60.0 * n as f64 / 960.0).sin()).collect();
        let mut w = OsgWriter::create(&cfg, &osg).unwrap();
        w.write_chunk(&[&vals]).unwrap();
        w.finish().unwrap();
        let chans = read_osg(&cfg, &osg).unwrap();
        let worst = vals
            .iter()
            .zip(&chans[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(worst <= 4.5 / 2.0 + 1e-9, "worst quantization error {worst}");
    }
}
