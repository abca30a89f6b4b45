//! Domain types shared across the crate: trading calendars, per-instrument
//! OHLCV series, coverage windows and the availability matrix.
//!
//! Everything here is immutable once built and can be shared freely between
//! worker threads.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the two parallel dataset versions a series comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetVersion {
    Adjusted,
    Unadjusted,
}

impl fmt::Display for DatasetVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetVersion::Adjusted => "adjusted",
            DatasetVersion::Unadjusted => "unadjusted",
        })
    }
}

impl FromStr for DatasetVersion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "adjusted" => Ok(DatasetVersion::Adjusted),
            "unadjusted" => Ok(DatasetVersion::Unadjusted),
            other => Err(Error::Config(format!("unknown dataset version `{other}`"))),
        }
    }
}

/// Sorted, duplicate-free set of trading dates forming the panel's date axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradingCalendar {
    dates: Vec<NaiveDate>,
}

impl TradingCalendar {
    /// Builds a calendar from any collection of dates; input order and
    /// duplicates do not matter.
    pub fn from_dates(dates: impl IntoIterator<Item = NaiveDate>) -> Result<Self> {
        let mut dates: Vec<NaiveDate> = dates.into_iter().collect();
        dates.sort_unstable();
        dates.dedup();
        if dates.is_empty() {
            return Err(Error::Config("trading calendar has no dates".into()));
        }
        Ok(Self { dates })
    }

    /// Union of all row dates across the given series.
    pub fn union_of<'a>(series: impl IntoIterator<Item = &'a InstrumentSeries>) -> Result<Self> {
        Self::from_dates(series.into_iter().flat_map(|s| s.rows().iter().map(|r| r.date)))
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn panel_start(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn panel_end(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcvRow {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl OhlcvRow {
    /// `low <= min(open, close) <= max(open, close) <= high`.
    ///
    /// Raw exchange records violate this now and then; callers warn, they
    /// do not reject.
    pub fn is_ohlc_consistent(&self) -> bool {
        let lo = self.open.min(self.close);
        let hi = self.open.max(self.close);
        self.low <= lo && hi <= self.high
    }
}

/// Date-ordered end-of-day observations for one instrument in one dataset
/// version. Rows are strictly increasing by date and every close is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentSeries {
    ticker: String,
    version: DatasetVersion,
    rows: Vec<OhlcvRow>,
}

impl InstrumentSeries {
    pub fn new(ticker: impl Into<String>, version: DatasetVersion, rows: Vec<OhlcvRow>) -> Result<Self> {
        let ticker = ticker.into();
        if rows.is_empty() {
            return Err(Error::EmptySeries { ticker });
        }
        for pair in rows.windows(2) {
            if pair[1].date <= pair[0].date {
                return Err(Error::UnorderedRows {
                    ticker,
                    date: pair[1].date,
                });
            }
        }
        if let Some(bad) = rows.iter().find(|r| !(r.close > 0.0) || !r.close.is_finite()) {
            return Err(Error::NonPositiveClose {
                ticker,
                date: bad.date,
                close: bad.close,
            });
        }
        Ok(Self { ticker, version, rows })
    }

    /// Convenience constructor for close-only data (synthetic series, tests).
    pub fn from_closes(
        ticker: impl Into<String>,
        version: DatasetVersion,
        points: impl IntoIterator<Item = (NaiveDate, f64)>,
    ) -> Result<Self> {
        let rows = points
            .into_iter()
            .map(|(date, close)| OhlcvRow {
                date,
                open: close,
                high: close,
                low: close,
                close,
                volume: 0.0,
            })
            .collect();
        Self::new(ticker, version, rows)
    }

    pub fn ticker(&self) -> &str {
        &self.ticker
    }

    pub fn version(&self) -> DatasetVersion {
        self.version
    }

    pub fn rows(&self) -> &[OhlcvRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.rows[0].date
    }

    pub fn last_date(&self) -> NaiveDate {
        self.rows[self.rows.len() - 1].date
    }

    pub fn has_date(&self, date: NaiveDate) -> bool {
        self.rows.binary_search_by_key(&date, |r| r.date).is_ok()
    }

    /// Same rows with every price multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|r| OhlcvRow {
                open: r.open * factor,
                high: r.high * factor,
                low: r.low * factor,
                close: r.close * factor,
                ..*r
            })
            .collect();
        Self::new(self.ticker.clone(), self.version, rows)
    }

    /// Same rows labelled as another dataset version.
    pub fn with_version(&self, version: DatasetVersion) -> Self {
        Self {
            version,
            ..self.clone()
        }
    }
}

/// Observed listing interval `[first_date, last_date]` of one series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageWindow {
    pub first_date: NaiveDate,
    pub last_date: NaiveDate,
    pub trading_days: usize,
    pub lifespan_days: usize,
}

impl CoverageWindow {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.first_date <= date && date <= self.last_date
    }

    /// Calendar days inside the window with no observation.
    pub fn non_trading_days(&self) -> usize {
        self.lifespan_days - self.trading_days
    }
}

pub fn coverage_window(series: &InstrumentSeries) -> Result<CoverageWindow> {
    if series.is_empty() {
        return Err(Error::EmptySeries {
            ticker: series.ticker().to_string(),
        });
    }
    let first_date = series.first_date();
    let last_date = series.last_date();
    Ok(CoverageWindow {
        first_date,
        last_date,
        trading_days: series.len(),
        lifespan_days: calendar_days_between(first_date, last_date) + 1,
    })
}

/// Number of calendar days from `from` to `to` (`to - from`), zero when
/// `to <= from`.
pub(crate) fn calendar_days_between(from: NaiveDate, to: NaiveDate) -> usize {
    (to - from).num_days().max(0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentType {
    Equity,
    MutualFund,
    TreasuryBill,
    Bond,
    Index,
    Sukuk,
    Other,
}

impl FromStr for InstrumentType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        Ok(match norm.as_str() {
            "equity" | "stock" => InstrumentType::Equity,
            "mutualfund" | "fund" => InstrumentType::MutualFund,
            "treasurybill" | "tbill" => InstrumentType::TreasuryBill,
            "bond" => InstrumentType::Bond,
            "index" => InstrumentType::Index,
            "sukuk" => InstrumentType::Sukuk,
            "other" => InstrumentType::Other,
            _ => return Err(Error::Config(format!("unknown instrument type `{}`", s.trim()))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentMetadata {
    pub ticker: String,
    pub instrument_type: InstrumentType,
    pub coverage_adjusted: Option<CoverageWindow>,
    pub coverage_unadjusted: Option<CoverageWindow>,
}

impl InstrumentMetadata {
    pub fn new(
        ticker: impl Into<String>,
        instrument_type: InstrumentType,
        coverage_adjusted: Option<CoverageWindow>,
        coverage_unadjusted: Option<CoverageWindow>,
    ) -> Result<Self> {
        let ticker = ticker.into();
        if coverage_adjusted.is_none() && coverage_unadjusted.is_none() {
            return Err(Error::InternalInvariantViolation(format!(
                "metadata for {ticker} has no coverage window"
            )));
        }
        Ok(Self {
            ticker,
            instrument_type,
            coverage_adjusted,
            coverage_unadjusted,
        })
    }

    pub fn coverage(&self, version: DatasetVersion) -> Option<&CoverageWindow> {
        match version {
            DatasetVersion::Adjusted => self.coverage_adjusted.as_ref(),
            DatasetVersion::Unadjusted => self.coverage_unadjusted.as_ref(),
        }
    }
}

/// Four-valued availability code. Bit 0 marks the adjusted version, bit 1
/// the unadjusted version, so `BOTH == ADJUSTED | UNADJUSTED`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[repr(transparent)]
#[serde(try_from = "u8", into = "u8")]
pub struct AvailabilityCode(u8);

impl AvailabilityCode {
    pub const NONE: Self = Self(0);
    pub const ADJUSTED_ONLY: Self = Self(1);
    pub const UNADJUSTED_ONLY: Self = Self(2);
    pub const BOTH: Self = Self(3);

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn has_adjusted(self) -> bool {
        self.0 & 1 != 0
    }

    pub fn has_unadjusted(self) -> bool {
        self.0 & 2 != 0
    }

    pub fn has(self, version: DatasetVersion) -> bool {
        match version {
            DatasetVersion::Adjusted => self.has_adjusted(),
            DatasetVersion::Unadjusted => self.has_unadjusted(),
        }
    }

    pub fn is_available(self) -> bool {
        self.0 != 0
    }
}

impl TryFrom<u8> for AvailabilityCode {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        if v <= 3 {
            Ok(Self(v))
        } else {
            Err(format!("availability code must be 0..=3, got {v}"))
        }
    }
}

impl From<AvailabilityCode> for u8 {
    fn from(c: AvailabilityCode) -> u8 {
        c.0
    }
}

impl fmt::Display for AvailabilityCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn availability_code(adjusted_present: bool, unadjusted_present: bool) -> AvailabilityCode {
    AvailabilityCode(adjusted_present as u8 | (unadjusted_present as u8) << 1)
}

/// Dense `tickers x dates` grid of availability codes, stored row-major by
/// ticker.
#[derive(Debug, Clone, PartialEq)]
pub struct AvailabilityMatrix {
    calendar: TradingCalendar,
    tickers: Vec<String>,
    codes: Vec<AvailabilityCode>,
}

impl AvailabilityMatrix {
    pub fn from_parts(calendar: TradingCalendar, tickers: Vec<String>, codes: Vec<AvailabilityCode>) -> Result<Self> {
        if codes.len() != tickers.len() * calendar.len() {
            return Err(Error::InternalInvariantViolation(format!(
                "grid has {} cells, expected {} x {}",
                codes.len(),
                tickers.len(),
                calendar.len()
            )));
        }
        Ok(Self {
            calendar,
            tickers,
            codes,
        })
    }

    pub fn calendar(&self) -> &TradingCalendar {
        &self.calendar
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    pub fn code(&self, ticker_idx: usize, date_idx: usize) -> AvailabilityCode {
        self.codes[ticker_idx * self.calendar.len() + date_idx]
    }

    pub fn row(&self, ticker_idx: usize) -> &[AvailabilityCode] {
        let w = self.calendar.len();
        &self.codes[ticker_idx * w..(ticker_idx + 1) * w]
    }

    /// Number of instruments with an observation in at least one version on
    /// the given date.
    pub fn available_count(&self, date_idx: usize) -> usize {
        (0..self.tickers.len())
            .filter(|&i| self.code(i, date_idx).is_available())
            .count()
    }

    /// Number of instruments observed in both versions on the given date.
    pub fn both_count(&self, date_idx: usize) -> usize {
        (0..self.tickers.len())
            .filter(|&i| self.code(i, date_idx) == AvailabilityCode::BOTH)
            .count()
    }

    /// First and last calendar index where `version` is present for the
    /// given ticker.
    pub fn observed_span(&self, ticker_idx: usize, version: DatasetVersion) -> Option<(usize, usize)> {
        let row = self.row(ticker_idx);
        let first = row.iter().position(|c| c.has(version))?;
        let last = row.iter().rposition(|c| c.has(version))?;
        Some((first, last))
    }
}
