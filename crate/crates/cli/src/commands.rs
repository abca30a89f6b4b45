use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use panelcov::construction::NaiveKind;
use panelcov::distortion::{
    analyze_instrument, boxplot_data, construction_stats, histogram_data, select_instruments, summarize,
    write_boxplot_csv, write_construction_stats_csv, write_histogram_csv, write_records_csv, write_scatter_csv,
    ConstructionStats, DistortionRecord, DistortionSummary, Measure,
};
use panelcov::ingest::{load_corpus, write_matrix_csv, write_metadata_json, Corpus, CorpusLayout};
use panelcov::model::DatasetVersion;
use panelcov::numfmt::write_json;
use panelcov::synthetic::{make_universe, to_corpus, write_corpus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{InputSource, RunConfig};
use crate::error::{CliError, Result};

pub const MATRIX_FILE: &str = "availability_matrix.csv";
pub const METADATA_FILE: &str = "metadata.json";
pub const INGEST_REPORT_FILE: &str = "ingest_report.json";
pub const RECORDS_FILE: &str = "distortion_records.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const HISTOGRAM_FILE: &str = "fig_v1_histogram.csv";
pub const BOXPLOT_FILE: &str = "fig_v2_boxplot.csv";
pub const SCATTER_FILE: &str = "fig_v4_scatter.csv";
pub const MODEL_STATS_FILE: &str = "model_stats.csv";
pub const REPORT_FILE: &str = "report.md";

const MEASURES: [Measure; 2] = [Measure::ReturnStd, Measure::GarchUnconditionalVariance];

/// Run-level facts written next to the per-group summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub version: DatasetVersion,
    pub panel_start: NaiveDate,
    pub instruments_loaded: usize,
    pub selected: Vec<String>,
    pub failed: Vec<FailedInstrument>,
    pub summaries: Vec<DistortionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedInstrument {
    pub ticker: String,
    pub reason: String,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::output(dir)(panelcov::Error::io(dir, e)))
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> panelcov::Result<()>) -> Result<()> {
    let path = dir.join(name);
    let run = || {
        let file = File::create(&path).map_err(|e| panelcov::Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        body(&mut out)?;
        out.flush().map_err(|e| panelcov::Error::io(&path, e))
    };
    run().map_err(CliError::output(&path))
}

fn load_input(cfg: &RunConfig) -> Result<Corpus> {
    match &cfg.input {
        InputSource::Corpus(dir) => load_corpus_dir(dir),
        InputSource::Synthetic(spec) => {
            let universe = make_universe(spec).map_err(CliError::analysis)?;
            if universe.is_empty() {
                return Err(CliError::Config("synthetic universe has no instruments".into()));
            }
            to_corpus(&universe).map_err(CliError::ingest)
        }
    }
}

/// Loads the corpus and writes the availability matrix, per-instrument
/// metadata and the ingest report.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<()> {
    let corpus = load_corpus_dir(cfg.corpus_dir()?)?;
    let out = &cfg.output_dir;
    create_dir(out)?;
    write_file(out, MATRIX_FILE, |w| write_matrix_csv(&corpus.matrix, w))?;
    write_file(out, METADATA_FILE, |w| write_metadata_json(&corpus.metadata, w))?;
    write_file(out, INGEST_REPORT_FILE, |w| write_json(w, &corpus.report))?;
    log::info!(
        "ingested {} instruments over {} dates ({} warnings, {} rejects)",
        corpus.pairs.len(),
        corpus.calendar.len(),
        corpus.report.warnings.len(),
        corpus.report.rejects.len()
    );
    Ok(())
}

fn load_corpus_dir(dir: &Path) -> Result<Corpus> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!(
            "corpus directory {} not found",
            dir.display()
        )));
    }
    load_corpus(&CorpusLayout::under(dir)).map_err(CliError::ingest)
}

/// Generates a synthetic universe and writes it in the ingestion layout.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.synthetic_spec()?;
    let universe = make_universe(spec).map_err(CliError::analysis)?;
    if universe.is_empty() {
        log::warn!("n_instruments = 0: writing an empty corpus");
    }
    create_dir(&cfg.output_dir)?;
    write_corpus(&universe, &cfg.output_dir).map_err(CliError::output(&cfg.output_dir))?;
    log::info!(
        "wrote {} synthetic instruments to {}",
        universe.len(),
        cfg.output_dir.display()
    );
    Ok(())
}

struct InstrumentResult {
    ticker: String,
    outcome: std::result::Result<(Vec<DistortionRecord>, Vec<ConstructionStats>), String>,
}

/// Everything `analyze` produces, before it is written.
pub struct Analysis {
    pub summary: AnalysisSummary,
    pub records: Vec<DistortionRecord>,
    pub model_stats: Vec<ConstructionStats>,
}

/// Selects instruments, measures distortion for every requested naive
/// construction, and aggregates. Instruments are processed in parallel; a
/// failing instrument is logged and excluded.
pub fn run_analysis(cfg: &RunConfig, corpus: &Corpus) -> Result<Analysis> {
    let panel_start = corpus.calendar.panel_start();
    let selected = select_instruments(&corpus.metadata, &cfg.criteria, cfg.version);
    if selected.is_empty() {
        return Err(CliError::Analysis(panelcov::Error::EmptySample));
    }
    log::info!("{} of {} instruments selected", selected.len(), corpus.metadata.len());

    let results: Vec<InstrumentResult> = selected
        .par_iter()
        .map(|ticker| {
            let series = corpus
                .pair(ticker)
                .and_then(|p| p.get(cfg.version))
                .expect("selected instruments have a series of the chosen version");
            let run = || -> panelcov::Result<_> {
                let mut records = Vec::new();
                for &kind in &cfg.naive_kinds {
                    let d = analyze_instrument(series, kind, panel_start, &cfg.fit)?;
                    records.push(d.return_std);
                    records.push(d.garch);
                }
                let stats = construction_stats(series, panel_start, &cfg.fit)?;
                Ok((records, stats))
            };
            InstrumentResult {
                ticker: ticker.clone(),
                outcome: run().map_err(|e| e.to_string()),
            }
        })
        .collect();

    let mut records = Vec::new();
    let mut model_stats = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        match r.outcome {
            Ok((rec, stats)) => {
                records.extend(rec);
                model_stats.extend(stats);
            }
            Err(reason) => {
                log::warn!("{}: analysis failed: {reason}", r.ticker);
                failed.push(FailedInstrument {
                    ticker: r.ticker,
                    reason,
                });
            }
        }
    }
    if records.is_empty() {
        return Err(CliError::Analysis(panelcov::Error::EmptySample));
    }
    records.sort_by(|a, b| (a.naive_kind, a.measure, &a.ticker).cmp(&(b.naive_kind, b.measure, &b.ticker)));

    let mut summaries = Vec::new();
    for &kind in &cfg.naive_kinds {
        for measure in MEASURES {
            let group = group(&records, measure, kind);
            match summarize(&group) {
                Ok(s) => summaries.push(s),
                Err(e) => log::warn!("{measure} / {kind}: no summary: {e}"),
            }
        }
    }
    Ok(Analysis {
        summary: AnalysisSummary {
            version: cfg.version,
            panel_start,
            instruments_loaded: corpus.metadata.len(),
            selected,
            failed,
            summaries,
        },
        records,
        model_stats,
    })
}

fn group(records: &[DistortionRecord], measure: Measure, kind: NaiveKind) -> Vec<DistortionRecord> {
    records
        .iter()
        .filter(|r| r.measure == measure && r.naive_kind == kind)
        .cloned()
        .collect()
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Analysis> {
    let corpus = load_input(cfg)?;
    let analysis = run_analysis(cfg, &corpus)?;
    write_analysis(cfg, &analysis)?;
    Ok(analysis)
}

fn write_analysis(cfg: &RunConfig, a: &Analysis) -> Result<()> {
    let out = &cfg.output_dir;
    create_dir(out)?;
    let mut hist = Vec::new();
    let mut boxes = Vec::new();
    for &kind in &cfg.naive_kinds {
        for measure in MEASURES {
            let g = group(&a.records, measure, kind);
            let bins = histogram_data(&g, cfg.histogram_bins);
            if !bins.is_empty() {
                hist.push((measure, kind, bins));
            }
            if let Some(b) = boxplot_data(&g) {
                boxes.push((measure, kind, b));
            }
        }
    }
    write_file(out, RECORDS_FILE, |w| write_records_csv(&a.records, w))?;
    write_file(out, SUMMARY_FILE, |w| write_json(w, &a.summary))?;
    write_file(out, HISTOGRAM_FILE, |w| write_histogram_csv(&hist, w))?;
    write_file(out, BOXPLOT_FILE, |w| write_boxplot_csv(&boxes, w))?;
    write_file(out, SCATTER_FILE, |w| write_scatter_csv(&a.records, w))?;
    write_file(out, MODEL_STATS_FILE, |w| {
        write_construction_stats_csv(&a.model_stats, w)
    })?;
    Ok(())
}

/// Renders the analysis in `cfg.output_dir` as markdown, writes it to
/// `report.md` there, and returns it.
pub fn cmd_report(cfg: &RunConfig) -> Result<String> {
    let dir = &cfg.output_dir;
    if !dir.is_dir() {
        return Err(CliError::Config(format!(
            "analysis directory {} not found",
            dir.display()
        )));
    }
    let open = |name: &str| {
        let path = dir.join(name);
        File::open(&path)
            .map(BufReader::new)
            .map_err(|e| CliError::Config(format!("missing analysis output {}: {e}", path.display())))
    };
    let summary: AnalysisSummary = serde_json::from_reader(open(SUMMARY_FILE)?)
        .map_err(|e| CliError::Config(format!("unreadable {SUMMARY_FILE}: {e}")))?;
    let stats = panelcov::distortion::read_construction_stats_csv(open(MODEL_STATS_FILE)?)
        .map_err(|e| CliError::Config(format!("unreadable {MODEL_STATS_FILE}: {e}")))?;
    let text = crate::report::render(&summary, &stats);
    write_file(dir, REPORT_FILE, |w| {
        w.write_all(text.as_bytes())
            .map_err(|e| panelcov::Error::io(dir.join(REPORT_FILE), e))
    })?;
    Ok(text)
}
