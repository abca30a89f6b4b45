//! Synthetic instrument universes with known GARCH(1,1) dynamics and
//! staggered listings.
//!
//! Randomness comes from [`SplitMix64`], a fully specified 64-bit generator,
//! and standard normals from Acklam's rational inverse-CDF approximation, so
//! any implementation of the same two algorithms reproduces a corpus from
//! its seed alone.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{assemble_corpus, Corpus, IngestReport, SeriesPair};
use crate::model::{DatasetVersion, InstrumentSeries, InstrumentType, OhlcvRow};
use crate::numfmt::{fmt_f64, write_json};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64: state advances by the golden-ratio increment and each output
/// is the state passed through the variant-13 finaliser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Independent stream for sub-task `index` of a seeded job.
    pub fn derive(seed: u64, index: u64) -> Self {
        Self::new(mix64(seed ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on the open interval (0, 1): `((x >> 11) + 0.5) / 2^53`.
    pub fn next_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_gaussian(&mut self) -> f64 {
        inverse_normal_cdf(self.next_f64())
    }

    /// Uniform integer in `0..=max`.
    pub fn next_below_inclusive(&mut self, max: u64) -> u64 {
        if max == u64::MAX {
            return self.next_u64();
        }
        (self.next_f64() * (max + 1) as f64).floor() as u64
    }
}

/// Acklam's approximation to the standard normal quantile (relative error
/// below 1.15e-9), no refinement step.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    }
}

/// Generating parameters of a GARCH(1,1) return process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchSpec {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
}

impl GarchSpec {
    pub fn new(omega: f64, alpha: f64, beta: f64, mu: f64) -> Self {
        Self { omega, alpha, beta, mu }
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !(self.alpha >= 0.0) || !(self.beta >= 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!("invalid GARCH parameters {self:?}")));
        }
        if !(self.alpha + self.beta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "generating process must be stationary (alpha + beta = {})",
                self.alpha + self.beta
            )));
        }
        Ok(())
    }
}

/// `n` log returns `mu + sigma_t z_t`, variance recursion started at the
/// unconditional variance. No validation; see [`simulate_garch_prices`].
pub fn simulate_garch_returns(spec: &GarchSpec, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    let mut sigma2 = spec.unconditional_variance();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let e = sigma2.sqrt() * rng.next_gaussian();
        out.push(spec.mu + e);
        sigma2 = spec.omega + spec.alpha * e * e + spec.beta * sigma2;
    }
    out
}

/// `n_days` closes starting at `p0`, each the previous close times
/// `exp(r_t)` for a simulated GARCH return.
pub fn simulate_garch_prices(spec: &GarchSpec, n_days: usize, p0: f64, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    if n_days < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 days, got {n_days}")));
    }
    if !(p0 > 0.0) || !p0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "initial price must be positive, got {p0}"
        )));
    }
    let returns = simulate_garch_returns(spec, n_days - 1, seed);
    let mut prices = Vec::with_capacity(n_days);
    prices.push(p0);
    let mut p = p0;
    for r in returns {
        p *= r.exp();
        prices.push(p);
    }
    Ok(prices)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ListingSpread {
    /// Every instrument lists on the panel start.
    AtStart,
    /// Offset drawn uniformly from `0..=max_offset_days`.
    Uniform { max_offset_days: u32 },
    /// Offsets assigned in order, cycling if shorter than the universe.
    Fixed { offsets: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_instruments: usize,
    pub panel_start: NaiveDate,
    pub panel_end: NaiveDate,
    pub listing_spread: ListingSpread,
    pub trading_week: BTreeSet<u8>,
    /// Probability that a scheduled trading day is a market holiday.
    pub holiday_rate: f64,
    /// One entry shared by all, or cycled across instruments.
    pub garch: Vec<GarchSpec>,
    pub initial_price: f64,
    pub seed: u64,
}

/// Weekday numbering used by `trading_week`: Monday = 0 ... Sunday = 6.
pub fn weekday_index(w: Weekday) -> u8 {
    w.num_days_from_monday() as u8
}

pub fn parse_weekday(s: &str) -> Result<u8> {
    s.trim()
        .parse::<Weekday>()
        .map(weekday_index)
        .map_err(|_| Error::Config(format!("unknown weekday `{}`", s.trim())))
}

impl Default for SyntheticSpec {
    /// Twenty instruments over 2012-10 to 2026-01, listings spread over the
    /// first eight years, a Sunday-to-Thursday week with 5% holidays.
    fn default() -> Self {
        Self {
            n_instruments: 20,
            panel_start: NaiveDate::from_ymd_opt(2012, 10, 1).expect("valid date"),
            panel_end: NaiveDate::from_ymd_opt(2026, 1, 29).expect("valid date"),
            listing_spread: ListingSpread::Uniform { max_offset_days: 3000 },
            trading_week: [Weekday::Sun, Weekday::Mon, Weekday::Tue, Weekday::Wed, Weekday::Thu]
                .into_iter()
                .map(weekday_index)
                .collect(),
            holiday_rate: 0.05,
            garch: vec![GarchSpec::new(2e-6, 0.08, 0.90, 0.0002)],
            initial_price: 100.0,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.panel_start > self.panel_end {
            return Err(Error::InvalidParameter("panel start is after panel end".into()));
        }
        if self.trading_week.is_empty() || self.trading_week.iter().any(|&d| d > 6) {
            return Err(Error::InvalidParameter(
                "trading week must be a non-empty set of weekdays 0..=6".into(),
            ));
        }
        if !(0.0..=0.2).contains(&self.holiday_rate) {
            return Err(Error::InvalidParameter(format!(
                "holiday rate must lie in [0, 0.2], got {}",
                self.holiday_rate
            )));
        }
        if self.garch.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one GARCH parameter set is required".into(),
            ));
        }
        for g in &self.garch {
            g.validate()?;
        }
        if !(self.initial_price > 0.0) {
            return Err(Error::InvalidParameter("initial price must be positive".into()));
        }
        if let ListingSpread::Fixed { offsets } = &self.listing_spread {
            if offsets.is_empty() && self.n_instruments > 0 {
                return Err(Error::InvalidParameter("fixed listing spread needs offsets".into()));
            }
        }
        Ok(())
    }

    /// Exchange calendar: scheduled weekdays minus seeded Bernoulli holidays.
    pub fn market_days(&self) -> Vec<NaiveDate> {
        let mut rng = SplitMix64::derive(self.seed, u64::MAX);
        self.panel_start
            .iter_days()
            .take_while(|d| *d <= self.panel_end)
            .filter(|d| self.trading_week.contains(&weekday_index(d.weekday())))
            .filter(|_| !(self.holiday_rate > 0.0 && rng.next_f64() < self.holiday_rate))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticInstrument {
    pub series: InstrumentSeries,
    pub garch: GarchSpec,
    pub listing_date: NaiveDate,
    pub seed: u64,
}

/// Ground-truth record written next to a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ticker: String,
    pub listing_date: NaiveDate,
    pub first_trading_date: NaiveDate,
    pub trading_days: usize,
    pub garch: GarchSpec,
    pub seed: u64,
}

pub fn ticker_for(index: usize) -> String {
    format!("SYN{index:03}")
}

/// Builds the universe. Each instrument trades every market day from its
/// listing date to the panel end; closes follow its GARCH process.
pub fn make_universe(spec: &SyntheticSpec) -> Result<Vec<SyntheticInstrument>> {
    spec.validate()?;
    let market = spec.market_days();
    let span = (spec.panel_end - spec.panel_start).num_days() as u64;
    (0..spec.n_instruments)
        .into_par_iter()
        .map(|i| {
            let mut rng = SplitMix64::derive(spec.seed, i as u64);
            let offset = match &spec.listing_spread {
                ListingSpread::AtStart => 0,
                ListingSpread::Uniform { max_offset_days } => {
                    rng.next_below_inclusive(u64::from(*max_offset_days).min(span))
                }
                ListingSpread::Fixed { offsets } => u64::from(offsets[i % offsets.len()]),
            };
            let listing_date = spec.panel_start + Days::new(offset);
            let first = market.partition_point(|d| *d < listing_date);
            let dates = &market[first..];
            if dates.len() < 2 {
                return Err(Error::InvalidParameter(format!(
                    "{} lists on {listing_date} with fewer than 2 market days left",
                    ticker_for(i)
                )));
            }
            let garch = spec.garch[i % spec.garch.len()];
            let price_seed = rng.next_u64();
            let closes = simulate_garch_prices(&garch, dates.len(), spec.initial_price, price_seed)?;
            let mut prev = closes[0];
            let rows = dates
                .iter()
                .zip(&closes)
                .map(|(&date, &close)| {
                    let open = prev;
                    prev = close;
                    OhlcvRow {
                        date,
                        open,
                        high: open.max(close),
                        low: open.min(close),
                        close,
                        volume: 0.0,
                    }
                })
                .collect();
            Ok(SyntheticInstrument {
                series: InstrumentSeries::new(ticker_for(i), DatasetVersion::Unadjusted, rows)?,
                garch,
                listing_date,
                seed: price_seed,
            })
        })
        .collect()
}

fn write_series_csv(series: &InstrumentSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "open", "high", "low", "close", "volume"])?;
    for r in series.rows() {
        w.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            fmt_f64(r.open),
            fmt_f64(r.high),
            fmt_f64(r.low),
            fmt_f64(r.close),
            fmt_f64(r.volume),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// In-memory equivalent of writing the universe with [`write_corpus`] and
/// loading it back.
pub fn to_corpus(instruments: &[SyntheticInstrument]) -> Result<Corpus> {
    let mut pairs: Vec<SeriesPair> = instruments
        .iter()
        .map(|inst| SeriesPair {
            ticker: inst.series.ticker().to_string(),
            adjusted: Some(inst.series.with_version(DatasetVersion::Adjusted)),
            unadjusted: Some(inst.series.with_version(DatasetVersion::Unadjusted)),
        })
        .collect();
    pairs.sort_by(|a, b| a.ticker.cmp(&b.ticker));
    let types = pairs
        .iter()
        .map(|p| (p.ticker.clone(), InstrumentType::Equity))
        .collect();
    let report = IngestReport {
        rows_loaded: 2 * instruments.iter().map(|i| i.series.len()).sum::<usize>(),
        ..IngestReport::default()
    };
    assemble_corpus(pairs, &types, report)
}

/// Writes the universe in the ingestion layout: identical `adjusted/` and
/// `unadjusted/` trees, `metadata.csv`, and `ground_truth.json`.
pub fn write_corpus(instruments: &[SyntheticInstrument], root: &Path) -> Result<()> {
    for sub in ["adjusted", "unadjusted"] {
        let dir = root.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for inst in instruments {
            write_series_csv(&inst.series, &dir.join(format!("{}.csv", inst.series.ticker())))?;
        }
    }
    let meta_path = root.join("metadata.csv");
    let mut w = csv::Writer::from_path(&meta_path)?;
    w.write_record(["ticker", "instrument_type"])?;
    for inst in instruments {
        w.write_record([inst.series.ticker(), "equity"])?;
    }
    w.flush().map_err(|e| Error::io(&meta_path, e))?;

    let truth: Vec<GroundTruth> = instruments
        .iter()
        .map(|inst| GroundTruth {
            ticker: inst.series.ticker().to_string(),
            listing_date: inst.listing_date,
            first_trading_date: inst.series.first_date(),
            trading_days: inst.series.len(),
            garch: inst.garch,
            seed: inst.seed,
        })
        .collect();
    let truth_path = root.join("ground_truth.json");
    let file = fs::File::create(&truth_path).map_err(|e| Error::io(&truth_path, e))?;
    write_json(std::io::BufWriter::new(file), &truth)?;
    Ok(())
}
