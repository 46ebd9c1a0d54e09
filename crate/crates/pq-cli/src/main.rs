//! `pq` — batch disturbance classification, continuous-data compaction,
//! and synthetic corpus generation.
//!
//! Exit codes: 0 on success, 1 when any input file failed to process,
//! 2 when the configuration or corpus spec itself is unusable.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use pq_core::classify::{classify_record, ThresholdConfig};
use pq_core::cyclic::{compact, CompactOptions};
use pq_core::ingest::{parse_event_csv, write_results_csv, RecordResult};
use pq_core::synth::{write_corpus, CorpusSpec};

#[derive(Parser)]
#[command(name = "pq", version, about = "Power-quality event analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every event CSV in a directory.
    Classify(ClassifyArgs),
    /// Compact a COMTRADE CFG/OSG pair into histogram CSVs.
    Compact(CompactArgs),
    /// Generate a labeled synthetic corpus from a JSON spec.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    /// Directory of event CSV files.
    input_dir: PathBuf,
    /// Threshold configuration file (key = value lines).
    #[arg(long, env = "PQ_CONFIG")]
    config: Option<PathBuf>,
    /// Results CSV path.
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
    /// Worker threads for parsing and classification.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct CompactArgs {
    /// COMTRADE configuration (.cfg) file.
    cfg: PathBuf,
    /// Matching oscillography (.osg / .dat) file.
    osg: PathBuf,
    /// Output directory for the six CSV files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Histogram bins.
    #[arg(long, default_value_t = 1024)]
    bins: usize,
    /// Process bandwidth around 60 Hz for frequency estimation, in Hz.
    #[arg(long, default_value_t = 0.2)]
    pbw: f64,
}

#[derive(Args)]
struct SynthArgs {
    /// Corpus spec (JSON).
    spec: PathBuf,
    /// Output directory for event CSVs and labels.csv.
    #[arg(long, default_value = "corpus")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Classify(args) => cmd_classify(args),
        Command::Compact(args) => cmd_compact(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn cmd_classify(args: ClassifyArgs) -> ExitCode {
    let started = Instant::now();
    let cfg = match &args.config {
        Some(path) => match ThresholdConfig::from_file(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("unusable config {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => ThresholdConfig::default(),
    };

    let mut files = match list_event_csvs(&args.input_dir) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("{e:#}");
            return ExitCode::from(1);
        }
    };
    files.sort();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .expect("thread pool");
    let outcomes: Vec<(PathBuf, Result<RecordResult>)> = pool.install(|| {
        use rayon::prelude::*;
        files
            .par_iter()
            .map(|path| {
                let result = parse_event_csv(path)
                    .map(|record| RecordResult {
                        source: file_name(path),
                        detections: classify_record(&record, &cfg),
                    })
                    .with_context(|| format!("parsing {}", path.display()));
                (path.clone(), result)
            })
            .collect()
    });

    let mut results = Vec::new();
    let mut failed = 0usize;
    for (path, outcome) in &outcomes {
        match outcome {
            Ok(rec) => {
                let events: Vec<&str> =
                    rec.detections.iter().map(|d| d.event.as_str()).collect();
                println!("ok    {}: {}", file_name(path), events.join("+"));
                results.push(rec.clone());
            }
            Err(e) => {
                failed += 1;
                println!("error {}: {e:#}", file_name(path));
            }
        }
    }
    results.sort_by(|a, b| a.source.cmp(&b.source));

    if let Err(e) = write_results_csv(&results, &args.out) {
        eprintln!("writing {}: {e}", args.out.display());
        return ExitCode::from(1);
    }
    println!(
        "files: {} ok, {} failed; results: {}; wall time {:.2} s",
        results.len(),
        failed,
        args.out.display(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn list_event_csvs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry?.path();
        let is_csv = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("csv"))
            .unwrap_or(false);
        // labels.csv is the corpus ground-truth manifest, not an event.
        if is_csv && file_name(&path) != "labels.csv" {
            files.push(path);
        }
    }
    Ok(files)
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().to_string()).unwrap_or_default()
}

fn cmd_compact(args: CompactArgs) -> ExitCode {
    let started = Instant::now();
    for input in [&args.cfg, &args.osg] {
        if !input.exists() {
            eprintln!("missing input file: {}", input.display());
            return ExitCode::from(1);
        }
    }
    let opts = CompactOptions { bins: args.bins, pbw_hz: args.pbw, ..CompactOptions::default() };
    match compact(&args.cfg, &args.osg, &args.out_dir, &opts) {
        Ok(report) => {
            for f in &report.out_files {
                println!("wrote {}", f.display());
            }
            println!(
                "cycles: {} accepted, {} rejected; frequency estimates: {}",
                report.accepted_cycles, report.rejected_cycles, report.frequency_estimates
            );
            println!(
                "compaction: {} -> {} bytes, ratio {:.1}; wall time {:.2} s",
                report.input_bytes,
                report.output_bytes,
                report.ratio(),
                started.elapsed().as_secs_f64()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("compaction failed: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_synth(args: SynthArgs) -> ExitCode {
    let text = match std::fs::read_to_string(&args.spec) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("reading spec {}: {e}", args.spec.display());
            return ExitCode::from(2);
        }
    };
    let spec = match CorpusSpec::from_json(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("bad corpus spec {}: {e}", args.spec.display());
            return ExitCode::from(2);
        }
    };
    match write_corpus(&spec, &args.out_dir) {
        Ok(corpus) => {
            println!(
                "wrote {} labeled records and labels.csv to {}",
                corpus.len(),
                args.out_dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("corpus generation failed: {e}");
            ExitCode::from(2)
        }
    }
}
