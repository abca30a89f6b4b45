//! Return-level model estimation: GARCH(1,1) volatility fits and the fixed
//! ARIMA(1,0,1) mean model with rolling one-step forecasts.

mod arima;
mod garch;

pub use arima::{fit_arima101, rolling_forecast, ArimaFit, ForecastMetrics};
pub use garch::{fit_garch11, garch_loglik, unconditional_variance, GarchFit, GarchParams};

use serde::{Deserialize, Serialize};

use crate::optim::SimplexOptions;

/// Estimation settings shared by both models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub simplex: SimplexOptions,
    /// Fitted `alpha + beta` at or above this marks a GARCH breakdown.
    pub breakdown_threshold: f64,
    /// Chronological training share for rolling forecasts.
    pub split_fraction: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            simplex: SimplexOptions::default(),
            breakdown_threshold: 0.999,
            split_fraction: 0.8,
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}
