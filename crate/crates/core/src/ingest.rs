//! Per-instrument end-of-day CSV ingestion and availability matrix assembly.
//!
//! A corpus is two directories (adjusted, unadjusted) of `<TICKER>.csv`
//! files with header `date,open,high,low,close,volume` and ISO dates. Column
//! names and the date format can be remapped through [`ColumnMap`].

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    availability_code, coverage_window, AvailabilityCode, AvailabilityMatrix, DatasetVersion, InstrumentMetadata,
    InstrumentSeries, InstrumentType, OhlcvRow, TradingCalendar,
};
use crate::numfmt::write_json;

/// Header names for each field plus the `chrono` date format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub date: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub volume: String,
    pub date_format: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            date: "date".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            volume: "volume".into(),
            date_format: "%Y-%m-%d".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestWarning {
    pub ticker: String,
    pub version: Option<DatasetVersion>,
    pub date: Option<NaiveDate>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReject {
    pub ticker: String,
    pub version: Option<DatasetVersion>,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub instruments_loaded: usize,
    pub rows_loaded: usize,
    pub warnings: Vec<IngestWarning>,
    pub rejects: Vec<IngestReject>,
}

/// Parses one instrument file.
///
/// Unparseable or non-positive-close rows are dropped with a warning, rows
/// are sorted by date and duplicate dates keep their last occurrence. The
/// file is rejected only when no valid row remains.
pub fn parse_eod_file(
    content: &[u8],
    ticker: &str,
    version: DatasetVersion,
    columns: &ColumnMap,
) -> Result<(InstrumentSeries, Vec<IngestWarning>)> {
    let mut warnings = Vec::new();
    let mut warn = |date: Option<NaiveDate>, message: String| {
        warnings.push(IngestWarning {
            ticker: ticker.to_string(),
            version: Some(version),
            date,
            message,
        })
    };

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(content);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
    };
    let require = |name: &str| {
        find(name).ok_or_else(|| Error::MissingColumn {
            ticker: ticker.to_string(),
            column: name.to_string(),
        })
    };
    let date_col = require(&columns.date)?;
    let close_col = require(&columns.close)?;
    let open_col = find(&columns.open);
    let high_col = find(&columns.high);
    let low_col = find(&columns.low);
    let volume_col = find(&columns.volume);

    // Later rows overwrite earlier ones, so the last occurrence of a date wins.
    let mut by_date: BTreeMap<NaiveDate, OhlcvRow> = BTreeMap::new();
    for (line, record) in reader.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                warn(None, format!("record {}: {e}", line + 1));
                continue;
            }
        };
        let field = |idx: usize| record.get(idx).unwrap_or("");
        let date = match NaiveDate::parse_from_str(field(date_col), &columns.date_format) {
            Ok(d) => d,
            Err(_) => {
                warn(
                    None,
                    format!("record {}: unparseable date `{}`", line + 1, field(date_col)),
                );
                continue;
            }
        };
        let close = match field(close_col).parse::<f64>() {
            Ok(c) if c.is_finite() => c,
            _ => {
                warn(Some(date), format!("unparseable close `{}`", field(close_col)));
                continue;
            }
        };
        if close <= 0.0 {
            warn(Some(date), format!("non-positive close {close}, row skipped"));
            continue;
        }
        let optional = |col: Option<usize>, default: f64| -> std::result::Result<f64, String> {
            match col.map(field) {
                None | Some("") => Ok(default),
                Some(s) => s
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("unparseable number `{s}`")),
            }
        };
        let parsed = (|| {
            Ok::<_, String>(OhlcvRow {
                date,
                open: optional(open_col, close)?,
                high: optional(high_col, close)?,
                low: optional(low_col, close)?,
                close,
                volume: optional(volume_col, 0.0)?,
            })
        })();
        let row = match parsed {
            Ok(r) => r,
            Err(msg) => {
                warn(Some(date), msg);
                continue;
            }
        };
        if !row.is_ohlc_consistent() {
            warn(Some(date), "OHLC ordering violated; row kept".into());
        }
        if row.volume < 0.0 {
            warn(Some(date), format!("negative volume {}; row kept", row.volume));
        }
        if by_date.insert(date, row).is_some() {
            warn(Some(date), "duplicate date; keeping last occurrence".into());
        }
    }

    if by_date.is_empty() {
        return Err(Error::EmptyAfterCleaning {
            ticker: ticker.to_string(),
        });
    }
    let series = InstrumentSeries::new(ticker, version, by_date.into_values().collect())?;
    Ok((series, warnings))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusLayout {
    pub adjusted_dir: PathBuf,
    pub unadjusted_dir: PathBuf,
    pub metadata_path: Option<PathBuf>,
    #[serde(default)]
    pub columns: ColumnMap,
}

impl CorpusLayout {
    /// Layout rooted at `root` with `adjusted/` and `unadjusted/`
    /// subdirectories and an optional `metadata.csv`.
    pub fn under(root: impl AsRef<Path>) -> Self {
        let root = root.as_ref();
        let metadata = root.join("metadata.csv");
        Self {
            adjusted_dir: root.join("adjusted"),
            unadjusted_dir: root.join("unadjusted"),
            metadata_path: metadata.is_file().then_some(metadata),
            columns: ColumnMap::default(),
        }
    }

    pub fn dir(&self, version: DatasetVersion) -> &Path {
        match version {
            DatasetVersion::Adjusted => &self.adjusted_dir,
            DatasetVersion::Unadjusted => &self.unadjusted_dir,
        }
    }
}

/// Both versions of one instrument; at least one is present.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    pub ticker: String,
    pub adjusted: Option<InstrumentSeries>,
    pub unadjusted: Option<InstrumentSeries>,
}

impl SeriesPair {
    pub fn get(&self, version: DatasetVersion) -> Option<&InstrumentSeries> {
        match version {
            DatasetVersion::Adjusted => self.adjusted.as_ref(),
            DatasetVersion::Unadjusted => self.unadjusted.as_ref(),
        }
    }

    fn versions(&self) -> impl Iterator<Item = &InstrumentSeries> {
        self.adjusted.iter().chain(self.unadjusted.iter())
    }
}

/// Price series, metadata and availability matrix for a loaded corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub pairs: Vec<SeriesPair>,
    pub metadata: Vec<InstrumentMetadata>,
    pub calendar: TradingCalendar,
    pub matrix: AvailabilityMatrix,
    pub report: IngestReport,
}

impl Corpus {
    pub fn pair(&self, ticker: &str) -> Option<&SeriesPair> {
        self.pairs
            .binary_search_by(|p| p.ticker.as_str().cmp(ticker))
            .ok()
            .map(|i| &self.pairs[i])
    }
}

fn list_csv_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut files = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_csv = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if !is_csv || !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            files.push((stem.to_string(), path));
        }
    }
    files.sort();
    Ok(files)
}

/// Reads the optional `ticker,instrument_type` sidecar.
pub fn read_instrument_types(path: &Path) -> Result<HashMap<String, InstrumentType>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut types = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let (Some(ticker), Some(kind)) = (record.get(0), record.get(1)) else {
            return Err(Error::Config(format!(
                "{}: metadata rows need `ticker,instrument_type`",
                path.display()
            )));
        };
        types.insert(ticker.to_string(), kind.parse()?);
    }
    Ok(types)
}

type ParsedFile = (
    String,
    DatasetVersion,
    std::result::Result<(InstrumentSeries, Vec<IngestWarning>), String>,
);

/// Loads every instrument file of both versions, derives per-version
/// coverage windows, and assembles the availability matrix over the union
/// calendar.
pub fn load_corpus(layout: &CorpusLayout) -> Result<Corpus> {
    let mut report = IngestReport::default();
    let mut jobs = Vec::new();
    let mut any_dir = false;
    for version in [DatasetVersion::Adjusted, DatasetVersion::Unadjusted] {
        let dir = layout.dir(version);
        if !dir.is_dir() {
            report.warnings.push(IngestWarning {
                ticker: String::new(),
                version: Some(version),
                date: None,
                message: format!("{} directory {} not found", version, dir.display()),
            });
            continue;
        }
        any_dir = true;
        jobs.extend(
            list_csv_files(dir)?
                .into_iter()
                .map(|(ticker, path)| (ticker, version, path)),
        );
    }
    if !any_dir {
        return Err(Error::Config(format!(
            "neither {} nor {} exists",
            layout.adjusted_dir.display(),
            layout.unadjusted_dir.display()
        )));
    }

    let parsed: Vec<ParsedFile> = jobs
        .par_iter()
        .map(|(ticker, version, path)| {
            let outcome = fs::read(path)
                .map_err(|e| format!("{}: {e}", path.display()))
                .and_then(|bytes| parse_eod_file(&bytes, ticker, *version, &layout.columns).map_err(|e| e.to_string()));
            (ticker.clone(), *version, outcome)
        })
        .collect();

    let mut pairs: BTreeMap<String, SeriesPair> = BTreeMap::new();
    for (ticker, version, outcome) in parsed {
        match outcome {
            Ok((series, warnings)) => {
                report.rows_loaded += series.len();
                report.warnings.extend(warnings);
                let pair = pairs.entry(ticker.clone()).or_insert_with(|| SeriesPair {
                    ticker,
                    adjusted: None,
                    unadjusted: None,
                });
                match version {
                    DatasetVersion::Adjusted => pair.adjusted = Some(series),
                    DatasetVersion::Unadjusted => pair.unadjusted = Some(series),
                }
            }
            Err(reason) => {
                log::warn!("rejected {ticker} ({version}): {reason}");
                report.rejects.push(IngestReject {
                    ticker,
                    version: Some(version),
                    reason,
                });
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Config("corpus contains no usable instrument files".into()));
    }

    let types = match &layout.metadata_path {
        Some(path) => read_instrument_types(path)?,
        None => HashMap::new(),
    };
    assemble_corpus(pairs.into_values().collect(), &types, report)
}

/// Derives metadata, the union calendar and the availability matrix for
/// already-parsed series. `pairs` must be sorted by ticker; tickers missing
/// from `types` are typed `Other`.
pub fn assemble_corpus(
    pairs: Vec<SeriesPair>,
    types: &HashMap<String, InstrumentType>,
    mut report: IngestReport,
) -> Result<Corpus> {
    if pairs.windows(2).any(|w| w[0].ticker >= w[1].ticker) {
        return Err(Error::InternalInvariantViolation(
            "series pairs must be sorted by unique ticker".into(),
        ));
    }
    let metadata = pairs
        .iter()
        .map(|p| {
            InstrumentMetadata::new(
                p.ticker.clone(),
                types.get(&p.ticker).copied().unwrap_or(InstrumentType::Other),
                p.adjusted.as_ref().map(coverage_window).transpose()?,
                p.unadjusted.as_ref().map(coverage_window).transpose()?,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    report.instruments_loaded = pairs.len();

    let calendar = TradingCalendar::union_of(pairs.iter().flat_map(SeriesPair::versions))?;
    let matrix = build_availability_matrix(&pairs, &calendar)?;
    Ok(Corpus {
        pairs,
        metadata,
        calendar,
        matrix,
        report,
    })
}

/// Fills `codes[ticker][date]` from which versions have a row on that date.
pub fn build_availability_matrix(pairs: &[SeriesPair], calendar: &TradingCalendar) -> Result<AvailabilityMatrix> {
    let width = calendar.len();
    let mut codes = vec![AvailabilityCode::NONE; pairs.len() * width];
    for (i, pair) in pairs.iter().enumerate() {
        let row = &mut codes[i * width..(i + 1) * width];
        let mut seen = vec![(false, false); width];
        for series in pair.versions() {
            for r in series.rows() {
                let idx = calendar.index_of(r.date).ok_or_else(|| {
                    Error::InternalInvariantViolation(format!(
                        "{} has a row on {} which is missing from the calendar",
                        pair.ticker, r.date
                    ))
                })?;
                match series.version() {
                    DatasetVersion::Adjusted => seen[idx].0 = true,
                    DatasetVersion::Unadjusted => seen[idx].1 = true,
                }
            }
        }
        for (cell, (adj, unadj)) in row.iter_mut().zip(seen) {
            *cell = availability_code(adj, unadj);
        }
    }
    AvailabilityMatrix::from_parts(
        calendar.clone(),
        pairs.iter().map(|p| p.ticker.clone()).collect(),
        codes,
    )
}

/// Writes the matrix as CSV: one row per date, one column per ticker.
pub fn write_matrix_csv<W: Write>(matrix: &AvailabilityMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(matrix.tickers().iter().cloned());
    w.write_record(&header)?;
    let n = matrix.tickers().len();
    let mut line: Vec<String> = Vec::with_capacity(n + 1);
    for (t, date) in matrix.calendar().dates().iter().enumerate() {
        line.clear();
        line.push(date.format("%Y-%m-%d").to_string());
        line.extend((0..n).map(|i| matrix.code(i, t).to_string()));
        w.write_record(&line)?;
    }
    w.flush().map_err(|e| Error::io("<matrix csv>", e))?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: R) -> Result<AvailabilityMatrix> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut by_date: Vec<Vec<AvailabilityCode>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| Error::Config(format!("matrix date `{}`: {e}", &record[0])))?;
        let row = record
            .iter()
            .skip(1)
            .map(|c| {
                c.parse::<u8>()
                    .map_err(|e| e.to_string())
                    .and_then(AvailabilityCode::try_from)
                    .map_err(|e| Error::Config(format!("matrix cell `{c}` on {date}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != tickers.len() {
            return Err(Error::Config(format!("matrix row for {date} has {} cells", row.len())));
        }
        dates.push(date);
        by_date.push(row);
    }
    if dates.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("matrix dates are not strictly increasing".into()));
    }
    let calendar = TradingCalendar::from_dates(dates)?;
    let width = calendar.len();
    let mut codes = vec![AvailabilityCode::NONE; tickers.len() * width];
    for (t, row) in by_date.into_iter().enumerate() {
        for (i, code) in row.into_iter().enumerate() {
            codes[i * width + t] = code;
        }
    }
    AvailabilityMatrix::from_parts(calendar, tickers, codes)
}

pub fn write_metadata_json<W: Write>(metadata: &[InstrumentMetadata], out: W) -> Result<()> {
    write_json(out, metadata)?;
    Ok(())
}

pub fn read_metadata_json<R: Read>(input: R) -> Result<Vec<InstrumentMetadata>> {
    Ok(serde_json::from_reader(input)?)
}
