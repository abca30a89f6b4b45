//! Coverage-aware panel construction for end-of-day market data.
//!
//! Listing coverage is tracked explicitly (coverage windows plus a
//! per-instrument, per-date availability matrix), so analyses can be run on
//! observed trading days only and compared against calendar-filled "naive"
//! panels. The [`distortion`] module quantifies how much those naive
//! panels understate return volatility and GARCH(1,1) long-run variance.
//!
//! Module map:
//! - [`model`]: calendars, series, coverage windows, availability codes
//! - [`ingest`]: CSV corpus loading and matrix import/export
//! - [`construction`]: coverage-aware and naive price series, log returns
//! - [`econometrics`]: GARCH(1,1) and ARIMA(1,0,1) estimation
//! - [`distortion`]: distortion metric, selection, aggregation, tests
//! - [`synthetic`]: seeded GARCH universes with known ground truth

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod construction;
pub mod distortion;
pub mod econometrics;
pub mod error;
pub mod ingest;
pub mod model;
pub mod numfmt;
pub mod optim;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
