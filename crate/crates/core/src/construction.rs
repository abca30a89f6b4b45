//! Coverage-aware and naive (calendar-filled) price constructions, and log
//! returns that remember which observations were padding.
//!
//! The naive constructions reindex a series onto every calendar day (all
//! seven weekdays). Forward fill spans the observed window; backward fill
//! additionally reaches back to the panel start with the first close. Filled
//! points copy the close bit-for-bit, so every return inside a filled run is
//! exactly `0.0` and every return leaving a run equals the coverage-aware
//! return across the same gap.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{calendar_days_between, InstrumentSeries};
use crate::numfmt::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    CoverageAware,
    NaiveForwardFilled,
    NaiveBackwardFilled,
}

impl Construction {
    pub const ALL: [Construction; 3] = [
        Construction::CoverageAware,
        Construction::NaiveForwardFilled,
        Construction::NaiveBackwardFilled,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Construction::CoverageAware => "Coverage-Aware",
            Construction::NaiveForwardFilled => "Naive Forward-Filled",
            Construction::NaiveBackwardFilled => "Naive Backward-Filled",
        }
    }
}

impl fmt::Display for Construction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Construction::CoverageAware => "coverage_aware",
            Construction::NaiveForwardFilled => "naive_forward_filled",
            Construction::NaiveBackwardFilled => "naive_backward_filled",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Observed,
    ForwardFilled,
    BackwardFilled,
}

impl Origin {
    pub fn is_padding(self) -> bool {
        self != Origin::Observed
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Observed => "observed",
            Origin::ForwardFilled => "forward_filled",
            Origin::BackwardFilled => "backward_filled",
        })
    }
}

/// The two naive constructions, as selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NaiveKind {
    ForwardFilled,
    BackwardFilled,
}

impl NaiveKind {
    pub fn construction(self) -> Construction {
        match self {
            NaiveKind::ForwardFilled => Construction::NaiveForwardFilled,
            NaiveKind::BackwardFilled => Construction::NaiveBackwardFilled,
        }
    }
}

impl fmt::Display for NaiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NaiveKind::ForwardFilled => "forward_filled",
            NaiveKind::BackwardFilled => "backward_filled",
        })
    }
}

impl FromStr for NaiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "forward" | "forward_filled" | "ffill" => Ok(NaiveKind::ForwardFilled),
            "backward" | "backward_filled" | "bfill" => Ok(NaiveKind::BackwardFilled),
            other => Err(Error::Config(format!("unknown naive construction `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub date: NaiveDate,
    pub close: f64,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub ticker: String,
    pub construction: Construction,
    pub points: Vec<PricePoint>,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn padded_count(&self) -> usize {
        self.points.iter().filter(|p| p.origin.is_padding()).count()
    }

    /// CSV dump: `date,value,origin`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "value", "origin"])?;
        for p in &self.points {
            w.write_record([p.date.to_string(), fmt_f64(p.close), p.origin.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<price csv>", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnPoint {
    pub date: NaiveDate,
    pub r: f64,
    pub padded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub ticker: String,
    pub construction: Construction,
    pub points: Vec<ReturnPoint>,
}

impl ReturnSeries {
    /// Bare return series (no dates or padding provenance); used for
    /// simulations and estimator tests.
    pub fn from_values(ticker: impl Into<String>, values: &[f64]) -> Self {
        let base = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        Self {
            ticker: ticker.into(),
            construction: Construction::CoverageAware,
            points: values
                .iter()
                .enumerate()
                .map(|(i, &r)| ReturnPoint {
                    date: base + Days::new(i as u64),
                    r,
                    padded: false,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.r).collect()
    }

    pub fn padded_count(&self) -> usize {
        self.points.iter().filter(|p| p.padded).count()
    }

    /// CSV dump: `date,r,padded`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["date", "r", "padded"])?;
        for p in &self.points {
            w.write_record([p.date.to_string(), fmt_f64(p.r), p.padded.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<return csv>", e))?;
        Ok(())
    }
}

/// Observed closes only, gaps (weekends, suspensions) left as they are.
pub fn coverage_aware(series: &InstrumentSeries) -> PriceSeries {
    PriceSeries {
        ticker: series.ticker().to_string(),
        construction: Construction::CoverageAware,
        points: series
            .rows()
            .iter()
            .map(|r| PricePoint {
                date: r.date,
                close: r.close,
                origin: Origin::Observed,
            })
            .collect(),
    }
}

/// One point per calendar day in `[S_i, E_i]`, carrying the latest close over
/// days without an observation.
pub fn naive_forward_fill(series: &InstrumentSeries) -> PriceSeries {
    let rows = series.rows();
    let lifespan = calendar_days_between(series.first_date(), series.last_date()) + 1;
    let mut points = Vec::with_capacity(lifespan);
    for pair in rows.windows(2) {
        let (prev, next) = (&pair[0], &pair[1]);
        points.push(PricePoint {
            date: prev.date,
            close: prev.close,
            origin: Origin::Observed,
        });
        let mut day = prev.date + Days::new(1);
        while day < next.date {
            points.push(PricePoint {
                date: day,
                close: prev.close,
                origin: Origin::ForwardFilled,
            });
            day = day + Days::new(1);
        }
    }
    let last = rows[rows.len() - 1];
    points.push(PricePoint {
        date: last.date,
        close: last.close,
        origin: Origin::Observed,
    });
    debug_assert_eq!(points.len(), lifespan);
    PriceSeries {
        ticker: series.ticker().to_string(),
        construction: Construction::NaiveForwardFilled,
        points,
    }
}

/// Forward-filled series extended back to `panel_start` with the first
/// observed close.
pub fn naive_backward_fill(series: &InstrumentSeries, panel_start: NaiveDate) -> Result<PriceSeries> {
    let first = series.first_date();
    if panel_start > first {
        return Err(Error::PanelStartAfterListing {
            ticker: series.ticker().to_string(),
            panel_start,
            first_date: first,
        });
    }
    let prefix = calendar_days_between(panel_start, first);
    let first_close = series.rows()[0].close;
    let forward = naive_forward_fill(series);
    let mut points = Vec::with_capacity(prefix + forward.len());
    points.extend((0..prefix).map(|i| PricePoint {
        date: panel_start + Days::new(i as u64),
        close: first_close,
        origin: Origin::BackwardFilled,
    }));
    points.extend(forward.points);
    Ok(PriceSeries {
        ticker: series.ticker().to_string(),
        construction: Construction::NaiveBackwardFilled,
        points,
    })
}

/// Builds the requested construction for one series.
pub fn construct(series: &InstrumentSeries, construction: Construction, panel_start: NaiveDate) -> Result<PriceSeries> {
    match construction {
        Construction::CoverageAware => Ok(coverage_aware(series)),
        Construction::NaiveForwardFilled => Ok(naive_forward_fill(series)),
        Construction::NaiveBackwardFilled => naive_backward_fill(series, panel_start),
    }
}

/// `r_t = ln(P_t) - ln(P_{t-1})` over consecutive points.
///
/// A return is padded when its later point is filled, or when its earlier
/// point is a backward fill: the listing-boundary return of a backward-filled
/// series is a fabricated zero even though it lands on an observed close.
/// Padded returns are then exactly the ones the construction added.
pub fn log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: prices.len(),
        });
    }
    if let Some(bad) = prices.points.iter().find(|p| !(p.close > 0.0)) {
        return Err(Error::NonPositiveClose {
            ticker: prices.ticker.clone(),
            date: bad.date,
            close: bad.close,
        });
    }
    let points = prices
        .points
        .windows(2)
        .map(|w| ReturnPoint {
            date: w[1].date,
            r: w[1].close.ln() - w[0].close.ln(),
            padded: w[1].origin.is_padding() || w[0].origin == Origin::BackwardFilled,
        })
        .collect();
    Ok(ReturnSeries {
        ticker: prices.ticker.clone(),
        construction: prices.construction,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{coverage_window, DatasetVersion};

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn series(points: &[(&str, f64)]) -> InstrumentSeries {
        InstrumentSeries::from_closes("T", DatasetVersion::Unadjusted, points.iter().map(|&(s, c)| (d(s), c))).unwrap()
    }

    #[test]
    fn aware_keeps_gaps() {
        let s = series(&[("2020-01-06", 1.0), ("2020-01-07", 1.1), ("2020-01-20", 1.2)]);
        let p = coverage_aware(&s);
        assert_eq!(p.len(), 3);
        assert!(p.points.iter().all(|x| x.origin == Origin::Observed));
        assert_eq!(p.points[2].date, d("2020-01-20"));
    }

    #[test]
    fn forward_fill_mon_tue_thu() {
        // 2020-01-06 is a Monday.
        let s = series(&[("2020-01-06", 10.0), ("2020-01-07", 11.0), ("2020-01-09", 12.0)]);
        let p = naive_forward_fill(&s);
        let got: Vec<(NaiveDate, f64, Origin)> = p.points.iter().map(|x| (x.date, x.close, x.origin)).collect();
        assert_eq!(
            got,
            vec![
                (d("2020-01-06"), 10.0, Origin::Observed),
                (d("2020-01-07"), 11.0, Origin::Observed),
                (d("2020-01-08"), 11.0, Origin::ForwardFilled),
                (d("2020-01-09"), 12.0, Origin::Observed),
            ]
        );
    }

    #[test]
    fn forward_fill_single_row() {
        let p = naive_forward_fill(&series(&[("2020-01-06", 3.0)]));
        assert_eq!(p.len(), 1);
        assert_eq!(p.padded_count(), 0);
    }

    #[test]
    fn backward_fill_prefix() {
        let s = series(&[("2020-01-09", 5.0), ("2020-01-10", 6.0)]);
        let same = naive_backward_fill(&s, d("2020-01-09")).unwrap();
        assert_eq!(same.points, naive_forward_fill(&s).points);

        let p = naive_backward_fill(&s, d("2020-01-06")).unwrap();
        let prefix: Vec<_> = p
            .points
            .iter()
            .take_while(|x| x.origin == Origin::BackwardFilled)
            .collect();
        assert_eq!(prefix.len(), 3);
        assert!(prefix.iter().all(|x| x.close == 5.0));
        assert_eq!(p.points[0].date, d("2020-01-06"));

        let err = naive_backward_fill(&s, d("2020-01-10"));
        assert!(matches!(err, Err(Error::PanelStartAfterListing { .. })));
    }

    #[test]
    fn returns_basic() {
        let s = series(&[("2020-01-06", 100.0), ("2020-01-07", 100.0), ("2020-01-08", 110.0)]);
        let r = log_returns(&coverage_aware(&s)).unwrap();
        assert_eq!(r.points[0].r, 0.0);
        assert!(!r.points[0].padded, "genuine flat day is not padding");
        assert!((r.points[1].r - 0.095_310_179_804_324_87).abs() < 1e-15);
        let one = coverage_aware(&series(&[("2020-01-06", 1.0)]));
        assert!(matches!(log_returns(&one), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn filled_runs_are_zero_and_flagged() {
        let s = series(&[("2020-01-03", 10.0), ("2020-01-06", 12.0), ("2020-01-07", 11.0)]);
        let r = log_returns(&naive_backward_fill(&s, d("2019-12-30")).unwrap()).unwrap();
        for p in &r.points {
            if p.padded {
                assert_eq!(p.r, 0.0);
            }
        }
        let w = coverage_window(&s).unwrap();
        let fwd = log_returns(&naive_forward_fill(&s)).unwrap();
        assert_eq!(fwd.padded_count(), w.non_trading_days());
        assert_eq!(r.padded_count(), w.non_trading_days() + 4);
        // The listing-boundary return of the backward fill lands on an
        // observed close but is still a fabricated zero.
        let boundary = r.points.iter().find(|p| p.date == d("2020-01-03")).unwrap();
        assert_eq!((boundary.r, boundary.padded), (0.0, true));
        assert_eq!(r.len(), coverage_aware(&s).len() - 1 + r.padded_count());
    }

    #[test]
    fn naive_kind_parsing() {
        assert_eq!("forward".parse::<NaiveKind>().unwrap(), NaiveKind::ForwardFilled);
        assert_eq!(
            "backward-filled".parse::<NaiveKind>().unwrap(),
            NaiveKind::BackwardFilled
        );
        assert!("sideways".parse::<NaiveKind>().is_err());
    }
}
