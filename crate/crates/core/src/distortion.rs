//! Proportional volatility distortion between coverage-aware and naive
//! constructions, instrument selection, and cross-instrument aggregation.

use std::fmt;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::construction::{construct, log_returns, Construction, NaiveKind, ReturnSeries};
use crate::econometrics::{fit_arima101, fit_garch11, rolling_forecast, unconditional_variance, FitConfig, GarchFit};
use crate::error::{BestSoFar, Error, Result};
use crate::model::{DatasetVersion, InstrumentMetadata, InstrumentSeries};
use crate::numfmt::{fmt_f64, fmt_opt};
use crate::stats::{self, FiveNumber, HistogramBin, ReturnSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    ReturnStd,
    GarchUnconditionalVariance,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::ReturnStd => "return_std",
            Measure::GarchUnconditionalVariance => "garch_unconditional_variance",
        })
    }
}

/// `(sigma_aware - sigma_naive) / sigma_aware`; positive when the naive
/// construction understates volatility.
pub fn distortion(sigma_aware: f64, sigma_naive: f64) -> Result<f64> {
    if !(sigma_aware > 0.0) {
        return Err(Error::DegenerateBaseline(sigma_aware));
    }
    Ok((sigma_aware - sigma_naive) / sigma_aware)
}

/// Closed-form sample std of the aware returns with `k` zeros appended.
///
/// With `N = n + k` and `m' = n * mean / N`, the variance is
/// `(sum_of_squares - N m'^2) / (N - 1)`.
pub fn analytic_naive_std(aware: &ReturnSummary, k: usize) -> Result<f64> {
    if aware.n < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: aware.n,
        });
    }
    let total = (aware.n + k) as f64;
    let m = aware.n as f64 * aware.mean / total;
    let var = (aware.sum_of_squares - total * m * m) / (total - 1.0);
    Ok(var.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCriteria {
    /// Instruments must first trade strictly after this date.
    pub listed_after: NaiveDate,
    pub min_trading_days: usize,
}

impl Default for SelectionCriteria {
    fn default() -> Self {
        Self {
            listed_after: NaiveDate::from_ymd_opt(2016, 12, 31).expect("valid date"),
            min_trading_days: 400,
        }
    }
}

impl SelectionCriteria {
    pub fn validate(&self) -> Result<()> {
        if self.min_trading_days < 2 {
            return Err(Error::Config("min_trading_days must be at least 2".into()));
        }
        Ok(())
    }
}

/// Tickers listed after the cutoff with enough trading history, judged on
/// the coverage window of `version`.
pub fn select_instruments(
    metadata: &[InstrumentMetadata],
    criteria: &SelectionCriteria,
    version: DatasetVersion,
) -> Vec<String> {
    metadata
        .iter()
        .filter(|m| {
            m.coverage(version)
                .is_some_and(|w| w.first_date > criteria.listed_after && w.trading_days >= criteria.min_trading_days)
        })
        .map(|m| m.ticker.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionRecord {
    pub ticker: String,
    pub naive_kind: NaiveKind,
    pub measure: Measure,
    /// Padded returns added by the naive construction.
    pub padding_days: usize,
    pub sigma_aware: Option<f64>,
    pub sigma_naive: Option<f64>,
    pub delta_sigma: Option<f64>,
    pub garch_breakdown: bool,
}

/// Both measures for one instrument and one naive construction.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentDistortion {
    pub return_std: DistortionRecord,
    pub garch: DistortionRecord,
    pub garch_aware: Option<GarchFit>,
    pub garch_naive: Option<GarchFit>,
}

/// GARCH long-run variance, or `None` when estimation broke down.
fn garch_variance(returns: &ReturnSeries, config: &FitConfig) -> Result<(Option<f64>, Option<GarchFit>)> {
    let fit = match fit_garch11(returns, config) {
        Ok(fit) => fit,
        Err(Error::ConvergenceFailure { best, iterations }) => match *best {
            BestSoFar::Garch(fit) => {
                log::warn!(
                    "{} ({}): GARCH search stopped after {iterations} iterations; using best point",
                    returns.ticker,
                    returns.construction
                );
                fit
            }
            BestSoFar::Arima(_) => unreachable!("GARCH fit reports GARCH parameters"),
        },
        Err(Error::NonFiniteLikelihood) => {
            log::warn!(
                "{} ({}): GARCH likelihood not finite",
                returns.ticker,
                returns.construction
            );
            return Ok((None, None));
        }
        Err(e) => return Err(e),
    };
    match unconditional_variance(&fit) {
        Ok(v) => Ok((Some(v), Some(fit))),
        Err(Error::Breakdown { persistence }) => {
            log::info!(
                "{} ({}): GARCH breakdown, persistence {persistence:.6}",
                returns.ticker,
                returns.construction
            );
            Ok((None, Some(fit)))
        }
        Err(e) => Err(e),
    }
}

/// Builds the coverage-aware and the chosen naive construction and
/// measures both return std and GARCH long-run variance on each.
pub fn analyze_instrument(
    series: &InstrumentSeries,
    naive_kind: NaiveKind,
    panel_start: NaiveDate,
    config: &FitConfig,
) -> Result<InstrumentDistortion> {
    let aware = log_returns(&construct(series, Construction::CoverageAware, panel_start)?)?;
    let naive = log_returns(&construct(series, naive_kind.construction(), panel_start)?)?;
    let padding_days = naive.len() - aware.len();

    let std_aware = stats::sample_std(&aware.values());
    let std_naive = stats::sample_std(&naive.values());
    let return_std = DistortionRecord {
        ticker: series.ticker().to_string(),
        naive_kind,
        measure: Measure::ReturnStd,
        padding_days,
        sigma_aware: Some(std_aware),
        sigma_naive: Some(std_naive),
        delta_sigma: Some(distortion(std_aware, std_naive)?),
        garch_breakdown: false,
    };

    let (uv_aware, fit_aware) = garch_variance(&aware, config)?;
    let (uv_naive, fit_naive) = garch_variance(&naive, config)?;
    let delta = match (uv_aware, uv_naive) {
        (Some(a), Some(n)) => Some(distortion(a, n)?),
        _ => None,
    };
    let garch = DistortionRecord {
        ticker: series.ticker().to_string(),
        naive_kind,
        measure: Measure::GarchUnconditionalVariance,
        padding_days,
        sigma_aware: uv_aware,
        sigma_naive: uv_naive,
        delta_sigma: delta,
        garch_breakdown: delta.is_none(),
    };
    Ok(InstrumentDistortion {
        return_std,
        garch,
        garch_aware: fit_aware,
        garch_naive: fit_naive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSummary {
    pub measure: Measure,
    pub naive_kind: NaiveKind,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub frac_positive: f64,
    pub sign_test_p: Option<f64>,
    pub t_stat: Option<f64>,
    pub t_test_p: Option<f64>,
    pub breakdown_count: usize,
}

/// Aggregates records of a single measure and naive kind. Records without a
/// distortion value (GARCH breakdowns) are excluded and counted.
pub fn summarize(records: &[DistortionRecord]) -> Result<DistortionSummary> {
    let first = records.first().ok_or(Error::EmptySample)?;
    if records
        .iter()
        .any(|r| r.measure != first.measure || r.naive_kind != first.naive_kind)
    {
        return Err(Error::InvalidParameter(
            "summarize expects records of one measure and one naive kind".into(),
        ));
    }
    let mut deltas: Vec<f64> = records.iter().filter_map(|r| r.delta_sigma).collect();
    if deltas.is_empty() {
        return Err(Error::EmptySample);
    }
    // Sorted so the result does not depend on record order.
    deltas.sort_by(f64::total_cmp);
    let n = deltas.len();
    let tt = stats::t_test(&deltas).ok();
    Ok(DistortionSummary {
        measure: first.measure,
        naive_kind: first.naive_kind,
        n,
        mean: stats::mean(&deltas),
        median: stats::median(&deltas),
        frac_positive: deltas.iter().filter(|&&d| d > 0.0).count() as f64 / n as f64,
        sign_test_p: stats::sign_test(&deltas).ok(),
        t_stat: tt.map(|t| t.t),
        t_test_p: tt.map(|t| t.p),
        breakdown_count: records.iter().filter(|r| r.garch_breakdown).count(),
    })
}

/// One row of the per-construction model statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionStats {
    pub ticker: String,
    pub construction: Construction,
    /// Price observations in the construction.
    pub obs: usize,
    pub return_std: f64,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
}

/// Observation count, return std, ARIMA(1,0,1) information criteria and
/// rolling forecast errors for every construction of one instrument.
pub fn construction_stats(
    series: &InstrumentSeries,
    panel_start: NaiveDate,
    config: &FitConfig,
) -> Result<Vec<ConstructionStats>> {
    Construction::ALL
        .iter()
        .map(|&construction| {
            let prices = construct(series, construction, panel_start)?;
            let returns = log_returns(&prices)?;
            let arima = match fit_arima101(&returns, config) {
                Ok(fit) => Some(fit),
                Err(Error::ConvergenceFailure { best, .. }) => match *best {
                    BestSoFar::Arima(fit) => Some(fit),
                    BestSoFar::Garch(_) => None,
                },
                Err(e) => {
                    log::warn!("{} ({construction}): ARIMA fit skipped: {e}", series.ticker());
                    None
                }
            };
            let forecast = rolling_forecast(&returns, config.split_fraction, config)
                .map_err(|e| log::warn!("{} ({construction}): forecast skipped: {e}", series.ticker()))
                .ok();
            Ok(ConstructionStats {
                ticker: series.ticker().to_string(),
                construction,
                obs: prices.len(),
                return_std: stats::sample_std(&returns.values()),
                aic: arima.map(|a| a.aic),
                bic: arima.map(|a| a.bic),
                rmse: forecast.map(|f| f.rmse),
                mae: forecast.map(|f| f.mae),
            })
        })
        .collect()
}

pub fn write_records_csv<W: Write>(records: &[DistortionRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "ticker",
        "naive_kind",
        "measure",
        "padding_days",
        "sigma_aware",
        "sigma_naive",
        "delta_sigma",
        "garch_breakdown",
    ])?;
    for r in records {
        w.write_record([
            r.ticker.clone(),
            r.naive_kind.to_string(),
            r.measure.to_string(),
            r.padding_days.to_string(),
            fmt_opt(r.sigma_aware),
            fmt_opt(r.sigma_naive),
            fmt_opt(r.delta_sigma),
            r.garch_breakdown.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<records csv>", e))?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<DistortionRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for record in reader.records() {
        let rec = record?;
        let bad = |what: &str| Error::Config(format!("distortion table: bad {what} in {rec:?}"));
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad("number"))
            }
        };
        let measure = match &rec[2] {
            "return_std" => Measure::ReturnStd,
            "garch_unconditional_variance" => Measure::GarchUnconditionalVariance,
            _ => return Err(bad("measure")),
        };
        out.push(DistortionRecord {
            ticker: rec[0].to_string(),
            naive_kind: rec[1].parse()?,
            measure,
            padding_days: rec[3].parse().map_err(|_| bad("padding_days"))?,
            sigma_aware: opt(&rec[4])?,
            sigma_naive: opt(&rec[5])?,
            delta_sigma: opt(&rec[6])?,
            garch_breakdown: rec[7].parse().map_err(|_| bad("garch_breakdown"))?,
        });
    }
    Ok(out)
}

fn deltas_of(records: &[DistortionRecord]) -> Vec<f64> {
    records.iter().filter_map(|r| r.delta_sigma).collect()
}

/// Histogram of distortion values (one group of records).
pub fn histogram_data(records: &[DistortionRecord], bins: usize) -> Vec<HistogramBin> {
    stats::histogram(&deltas_of(records), bins)
}

pub fn boxplot_data(records: &[DistortionRecord]) -> Option<FiveNumber> {
    let d = deltas_of(records);
    (!d.is_empty()).then(|| stats::five_number(&d))
}

/// `(ticker, padding_days, delta_sigma)` pairs for the padding scatter.
pub fn scatter_data(records: &[DistortionRecord]) -> Vec<(String, usize, f64)> {
    records
        .iter()
        .filter_map(|r| r.delta_sigma.map(|d| (r.ticker.clone(), r.padding_days, d)))
        .collect()
}

/// Writes histogram bins for several record groups.
pub fn write_histogram_csv<W: Write>(groups: &[(Measure, NaiveKind, Vec<HistogramBin>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["measure", "naive_kind", "bin_lower", "bin_upper", "count"])?;
    for (measure, kind, bins) in groups {
        for b in bins {
            w.write_record([
                measure.to_string(),
                kind.to_string(),
                fmt_f64(b.lower),
                fmt_f64(b.upper),
                b.count.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<histogram csv>", e))?;
    Ok(())
}

pub fn write_boxplot_csv<W: Write>(groups: &[(Measure, NaiveKind, FiveNumber)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["measure", "naive_kind", "min", "q1", "median", "q3", "max"])?;
    for (measure, kind, f) in groups {
        w.write_record([
            measure.to_string(),
            kind.to_string(),
            fmt_f64(f.min),
            fmt_f64(f.q1),
            fmt_f64(f.median),
            fmt_f64(f.q3),
            fmt_f64(f.max),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<boxplot csv>", e))?;
    Ok(())
}

pub fn write_scatter_csv<W: Write>(records: &[DistortionRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ticker", "naive_kind", "measure", "padding_days", "delta_sigma"])?;
    for r in records {
        if let Some(d) = r.delta_sigma {
            w.write_record([
                r.ticker.clone(),
                r.naive_kind.to_string(),
                r.measure.to_string(),
                r.padding_days.to_string(),
                fmt_f64(d),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<scatter csv>", e))?;
    Ok(())
}

pub fn write_construction_stats_csv<W: Write>(rows: &[ConstructionStats], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "ticker",
        "construction",
        "obs",
        "return_std",
        "aic",
        "bic",
        "rmse",
        "mae",
    ])?;
    for r in rows {
        w.write_record([
            r.ticker.clone(),
            r.construction.to_string(),
            r.obs.to_string(),
            fmt_f64(r.return_std),
            fmt_opt(r.aic),
            fmt_opt(r.bic),
            fmt_opt(r.rmse),
            fmt_opt(r.mae),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<model stats csv>", e))?;
    Ok(())
}

pub fn read_construction_stats_csv<R: std::io::Read>(input: R) -> Result<Vec<ConstructionStats>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for record in reader.records() {
        let rec = record?;
        let bad = || Error::Config(format!("model stats table: malformed row {rec:?}"));
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad())
            }
        };
        let construction = match &rec[1] {
            "coverage_aware" => Construction::CoverageAware,
            "naive_forward_filled" => Construction::NaiveForwardFilled,
            "naive_backward_filled" => Construction::NaiveBackwardFilled,
            _ => return Err(bad()),
        };
        out.push(ConstructionStats {
            ticker: rec[0].to_string(),
            construction,
            obs: rec[2].parse().map_err(|_| bad())?,
            return_std: rec[3].parse().map_err(|_| bad())?,
            aic: opt(&rec[4])?,
            bic: opt(&rec[5])?,
            rmse: opt(&rec[6])?,
            mae: opt(&rec[7])?,
        });
    }
    Ok(out)
}
