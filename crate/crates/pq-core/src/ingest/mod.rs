//! File ingestion and result output.
//!
//! Event records arrive as seven-column CSV files (time, three voltage
//! phases, three current phases). Continuous oscillography arrives as
//! COMTRADE CFG/OSG pairs, handled in [`comtrade`]. Classification
//! results leave as a flat CSV with one row per detected event.

pub mod comtrade;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::classify::Detection;
use crate::dsp::Phase;

pub use comtrade::{
    parse_comtrade_cfg, read_osg, write_comtrade_cfg, AnalogChannel, ComtradeConfig, CtRating,
    DataFormat, OsgReader, OsgWriter,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("missing column: {detail}")]
    MissingColumn { detail: String },
    #[error("time vector not strictly increasing at row {row}")]
    NonMonotonicTime { row: usize },
    #[error("malformed number at row {row}, column {column}: {value:?}")]
    MalformedNumber { row: usize, column: String, value: String },
    #[error("record has {n} data rows; at least 2 are required")]
    TooFewRows { n: usize },
    #[error("unsupported COMTRADE revision {found:?}; only 2013 is handled")]
    UnsupportedRevision { found: String },
    #[error("channel count mismatch: declared {declared}, found {found}")]
    ChannelCountMismatch { declared: usize, found: usize },
    #[error("bad field format at line {line}: {detail}")]
    BadFieldFormat { line: usize, detail: String },
    #[error("truncated file: expected {expected} bytes/rows, found {found}")]
    TruncatedFile { expected: u64, found: u64 },
    #[error("length mismatch: expected {expected} bytes/rows, found {found}")]
    LengthMismatch { expected: u64, found: u64 },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid record: {detail}")]
    InvalidRecord { detail: String },
}

/// One recorded disturbance event: a time vector plus three voltage and
/// three current channels, all of identical length.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub time: Vec<f64>,
    pub va: Vec<f64>,
    pub vb: Vec<f64>,
    pub vc: Vec<f64>,
    pub ia: Vec<f64>,
    pub ib: Vec<f64>,
    pub ic: Vec<f64>,
    pub source_path: String,
    /// CT turns ratio when known; classification falls back to the
    /// configured default when absent.
    pub ct_ratio: Option<f64>,
}

impl EventRecord {
    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    pub fn voltage(&self, phase: Phase) -> &[f64] {
        match phase {
            Phase::A => &self.va,
            Phase::B => &self.vb,
            Phase::C => &self.vc,
        }
    }

    pub fn current(&self, phase: Phase) -> &[f64] {
        match phase {
            Phase::A => &self.ia,
            Phase::B => &self.ib,
            Phase::C => &self.ic,
        }
    }

    pub fn voltage_mut(&mut self, phase: Phase) -> &mut Vec<f64> {
        match phase {
            Phase::A => &mut self.va,
            Phase::B => &mut self.vb,
            Phase::C => &mut self.vc,
        }
    }

    pub fn current_mut(&mut self, phase: Phase) -> &mut Vec<f64> {
        match phase {
            Phase::A => &mut self.ia,
            Phase::B => &mut self.ib,
            Phase::C => &mut self.ic,
        }
    }

    /// Enforces the structural invariants shared by every parser path.
    pub fn validate(&self) -> Result<(), IngestError> {
        let n = self.len();
        if n < 2 {
            return Err(IngestError::TooFewRows { n });
        }
        for ch in [&self.va, &self.vb, &self.vc, &self.ia, &self.ib, &self.ic] {
            if ch.len() != n {
                return Err(IngestError::MissingColumn {
                    detail: format!("channel length {} != time length {n}", ch.len()),
                });
            }
        }
        for (k, w) in self.time.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(IngestError::NonMonotonicTime { row: k + 2 });
            }
        }
        if let Some(r) = self.ct_ratio {
            if r <= 0.0 {
                return Err(IngestError::InvalidRecord {
                    detail: format!("ct_ratio {r} must be positive"),
                });
            }
        }
        Ok(())
    }
}

const COLUMNS: [&str; 7] = ["t", "va", "vb", "vc", "ia", "ib", "ic"];

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64, IngestError> {
    let v: f64 = raw.trim().parse().map_err(|_| IngestError::MalformedNumber {
        row,
        column: column.to_string(),
        value: raw.to_string(),
    })?;
    if !v.is_finite() {
        return Err(IngestError::MalformedNumber {
            row,
            column: column.to_string(),
            value: raw.to_string(),
        });
    }
    Ok(v)
}

/// Parse a seven-column event CSV into an [`EventRecord`].
///
/// Header names are matched case-insensitively (`time` is accepted for
/// `t`); a file whose first row is numeric is treated as headerless with
/// positional columns `t,Va,Vb,Vc,Ia,Ib,Ic`.
pub fn parse_event_csv<P: AsRef<Path>>(path: P) -> Result<EventRecord, IngestError> {
    let path = path.as_ref();
    let file = BufReader::new(File::open(path)?);
    let mut lines = Vec::new();
    for line in file.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    if lines.is_empty() {
        return Err(IngestError::TooFewRows { n: 0 });
    }

    let first: Vec<&str> = lines[0].split(',').map(str::trim).collect();
    let headerless = first.iter().all(|c| c.parse::<f64>().is_ok());
    // column_order[k] = source column index of canonical column k
    let (column_order, data_start) = if headerless {
        if first.len() != COLUMNS.len() {
            return Err(IngestError::MissingColumn {
                detail: format!("expected 7 columns, found {}", first.len()),
            });
        }
        ((0..7).collect::<Vec<usize>>(), 0)
    } else {
        let lowered: Vec<String> = first.iter().map(|c| c.to_ascii_lowercase()).collect();
        let mut order = Vec::with_capacity(7);
        for want in COLUMNS {
            let idx = lowered.iter().position(|h| {
                h == want || (want == "t" && h == "time")
            });
            match idx {
                Some(i) => order.push(i),
                None => {
                    return Err(IngestError::MissingColumn {
                        detail: format!("column {want:?} not found in header"),
                    })
                }
            }
        }
        (order, 1)
    };

    let mut cols: [Vec<f64>; 7] = Default::default();
    for (k, line) in lines.iter().enumerate().skip(data_start) {
        let row = k + 1; // 1-based, counting the header if present
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != first.len() {
            return Err(IngestError::MissingColumn {
                detail: format!("row {row} has {} columns, expected {}", cells.len(), first.len()),
            });
        }
        for (slot, &src) in column_order.iter().enumerate() {
            cols[slot].push(parse_cell(cells[src], row, COLUMNS[slot])?);
        }
    }

    let [time, va, vb, vc, ia, ib, ic] = cols;
    let record = EventRecord {
        time,
        va,
        vb,
        vc,
        ia,
        ib,
        ic,
        source_path: path.display().to_string(),
        ct_ratio: None,
    };
    record.validate()?;
    Ok(record)
}

/// Write an event record back out in the canonical seven-column layout.
/// Values use shortest round-trip formatting, so parse(write(r)) == r
/// on every numeric field.
pub fn write_event_csv<P: AsRef<Path>>(record: &EventRecord, path: P) -> Result<(), IngestError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "t,Va,Vb,Vc,Ia,Ib,Ic")?;
    let mut line = String::new();
    for k in 0..record.len() {
        line.clear();
        write!(
            line,
            "{},{},{},{},{},{},{}",
            record.time[k],
            record.va[k],
            record.vb[k],
            record.vc[k],
            record.ia[k],
            record.ib[k],
            record.ic[k]
        )
        .expect("write to string");
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Classification output for one source file.
#[derive(Debug, Clone)]
pub struct RecordResult {
    pub source: String,
    pub detections: Vec<Detection>,
}

/// Write classification results: one row per (record, detection), with
/// evidence flattened into trailing name/value pairs. Records with no
/// detections emit a single `none` row.
pub fn write_results_csv<P: AsRef<Path>>(
    results: &[RecordResult],
    path: P,
) -> Result<(), IngestError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "source,event,confidence,phases,metric_name,metric_value")?;
    for rec in results {
        if rec.detections.is_empty() {
            writeln!(out, "{},none,n/a,,", escape(&rec.source))?;
            continue;
        }
        for det in &rec.detections {
            let mut line = format!(
                "{},{},{},{}",
                escape(&rec.source),
                det.event.as_str(),
                det.confidence.as_str(),
                det.phases
            );
            for (name, value) in &det.evidence {
                write!(line, ",{name},{value}").expect("write to string");
            }
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Read a results CSV back into (source, event, confidence, phases,
/// evidence) tuples. Used by the batch tooling and tests.
pub fn read_results_csv<P: AsRef<Path>>(
    path: P,
) -> Result<Vec<(String, String, String, String, BTreeMap<String, f64>)>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_path(path.as_ref())?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| IngestError::InvalidRecord { detail: e.to_string() })?;
        let get = |i: usize| row.get(i).unwrap_or("").to_string();
        let mut evidence = BTreeMap::new();
        let mut i = 4;
        while i + 1 < row.len() {
            if let Ok(v) = row[i + 1].parse::<f64>() {
                evidence.insert(row[i].to_string(), v);
            }
            i += 2;
        }
        out.push((get(0), get(1), get(2), get(3), evidence));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write(path: &Path, text: &str) {
        std::fs::write(path, text).unwrap();
    }

    #[test]
    fn parses_minimal_file_with_header() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ev.csv");
        write(
            &p,
            "t,Va,Vb,Vc,Ia,Ib,Ic\n0,1,2,3,4,5,6\n0.00104166,1,2,3,4,5,6\n0.00208333,1,2,3,4,5,6\n",
        );
        let r = parse_event_csv(&p).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r.va, vec![1.0, 1.0, 1.0]);
        assert_eq!(r.ic, vec![6.0, 6.0, 6.0]);
    }

    #[test]
    fn parses_headerless_positional() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ev.csv");
        write(&p, "0,1,2,3,4,5,6\n1,1,2,3,4,5,6\n");
        let r = parse_event_csv(&p).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r.ib[0], 5.0);
    }

    #[test]
    fn header_case_and_order_insensitive() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ev.csv");
        write(&p, "TIME,IA,IB,IC,VA,VB,VC\n0,4,5,6,1,2,3\n1,4,5,6,1,2,3\n");
        let r = parse_event_csv(&p).unwrap();
        assert_eq!(r.va[0], 1.0);
        assert_eq!(r.ia[0], 4.0);
    }

    #[test]
    fn six_columns_is_missing_column() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ev.csv");
        write(&p, "t,Va,Vb,Vc,Ia,Ib\n0,1,2,3,4,5\n1,1,2,3,4,5\n");
        assert!(matches!(parse_event_csv(&p), Err(IngestError::MissingColumn { .. })));
    }

    #[test]
    fn malformed_number_names_row_and_column() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ev.csv");
        write(&p, "t,Va,Vb,Vc,Ia,Ib,Ic\n0,1,2,3,4,5,6\n1,1,oops,3,4,5,6\n");
        match parse_event_csv(&p) {
            Err(IngestError::MalformedNumber { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "vb");
            }
            other => panic!("expected MalformedNumber, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ev.csv");
        write(&p, "t,Va,Vb,Vc,Ia,Ib,Ic\n0,1,2,3,4,5,6\n1,inf,2,3,4,5,6\n");
        assert!(matches!(parse_event_csv(&p), Err(IngestError::MalformedNumber { .. })));
    }

    #[test]
    fn non_monotonic_time_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("ev.csv");
        write(&p, "t,Va,Vb,Vc,Ia,Ib,Ic\n0,1,2,3,4,5,6\n0,1,2,3,4,5,6\n");
        match parse_event_csv(&p) {
            Err(IngestError::NonMonotonicTime { row }) => assert_eq!(row, 2),
            other => panic!("expected NonMonotonicTime, got {other:?}"),
        }
    }

    #[test]
    fn results_csv_round_trip() {
        use crate::classify::{Confidence, Detection, Event, PhaseSet};
        let dir = tempdir().unwrap();
        let p = dir.path().join("results.csv");
        let mut det = Detection::new(Event::CtSaturation, PhaseSet::single(Phase::A));
        det.confidence = Confidence::High;
        det.evidence.insert("i_dc_ratio".into(), 3.4);
        let rows = vec![
            RecordResult { source: "a.csv".into(), detections: vec![det] },
            RecordResult { source: "b.csv".into(), detections: vec![] },
        ];
        write_results_csv(&rows, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("source,event,confidence,phases,metric_name,metric_value\n"));
        assert!(text.contains("a.csv,ct_saturation,high,A,i_dc_ratio,3.4"));
        assert!(text.contains("b.csv,none,n/a,,"));
        let back = read_results_csv(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].1, "ct_saturation");
        assert_eq!(back[0].4["i_dc_ratio"], 3.4);
    }
}
