use serde::{Deserialize, Serialize};

use super::FitConfig;
use crate::construction::ReturnSeries;
use crate::error::{BestSoFar, Error, Result};
use crate::optim::{minimize_multistart, SimplexOptions};
use crate::stats;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const MIN_LEN: usize = 50;
const MIN_TEST: usize = 20;
/// Parameters counted in the information criteria: c, phi, theta, sigma2.
const N_PARAMS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArimaFit {
    pub c: f64,
    pub phi: f64,
    pub theta: f64,
    pub sigma2_eps: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// Residuals entering the conditional likelihood (series length - 1).
    pub n_obs: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub split_fraction: f64,
}

#[derive(Debug, Clone, Copy)]
struct Arma {
    c: f64,
    phi: f64,
    theta: f64,
}

impl Arma {
    /// One-step errors `e_t = r_t - c - phi r_{t-1} - theta e_{t-1}` for
    /// `t >= 1`, conditioning on `r_0` with a zero pre-sample residual.
    fn residuals(&self, r: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(r.len().saturating_sub(1));
        let mut prev_e = 0.0;
        for w in r.windows(2) {
            let e = w[1] - self.c - self.phi * w[0] - self.theta * prev_e;
            out.push(e);
            prev_e = e;
        }
        out
    }

    fn ssr(&self, r: &[f64]) -> f64 {
        let mut prev_e = 0.0;
        let mut ss = 0.0;
        for w in r.windows(2) {
            let e = w[1] - self.c - self.phi * w[0] - self.theta * prev_e;
            ss += e * e;
            prev_e = e;
        }
        ss
    }
}

/// Conditional-sum-of-squares estimate. `phi` and `theta` are mapped
/// through `tanh`, keeping the AR part stationary and the MA part
/// invertible.
fn css_estimate(r: &[f64], opts: &SimplexOptions) -> (Arma, f64, bool) {
    let mean = stats::mean(r);
    let scale = stats::sample_std(r).max(f64::MIN_POSITIVE);
    let decode = |x: &[f64]| Arma {
        c: x[0] * scale,
        phi: x[1].tanh(),
        theta: x[2].tanh(),
    };
    let start = |phi: f64, theta: f64| vec![mean * (1.0 - phi) / scale, phi.atanh(), theta.atanh()];
    let starts = [start(0.0, 0.0), start(0.5, -0.3), start(-0.5, 0.3)];
    let result = minimize_multistart(|x| decode(x).ssr(r), &starts, &[0.1, 0.3, 0.3], opts);
    (decode(&result.x), result.fx, result.converged)
}

/// Fixed-order ARIMA(1,0,1) with constant, estimated by conditional sum of
/// squares. The Gaussian log-likelihood uses the concentrated innovation
/// variance `SSR / n_obs`.
pub fn fit_arima101(returns: &ReturnSeries, config: &FitConfig) -> Result<ArimaFit> {
    let r = returns.values();
    if r.len() < MIN_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_LEN,
            got: r.len(),
        });
    }
    let (arma, ssr, converged) = css_estimate(&r, &config.simplex);
    let m = r.len() - 1;
    let sigma2_eps = ssr / m as f64;
    if !(sigma2_eps > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let loglik = -0.5 * m as f64 * (LN_2PI + sigma2_eps.ln() + 1.0);
    let fit = ArimaFit {
        c: arma.c,
        phi: arma.phi,
        theta: arma.theta,
        sigma2_eps,
        loglik,
        aic: 2.0 * N_PARAMS - 2.0 * loglik,
        bic: N_PARAMS * (m as f64).ln() - 2.0 * loglik,
        n_obs: m,
        converged,
    };
    if !converged {
        return Err(Error::ConvergenceFailure {
            iterations: config.simplex.max_iterations,
            best: Box::new(BestSoFar::Arima(fit)),
        });
    }
    Ok(fit)
}

/// Fits on the chronological first `split_fraction` of the returns, then
/// forecasts each test return one step ahead with parameters frozen and the
/// lagged return and residual updated from realised data.
pub fn rolling_forecast(returns: &ReturnSeries, split_fraction: f64, config: &FitConfig) -> Result<ForecastMetrics> {
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction must lie in (0, 1), got {split_fraction}"
        )));
    }
    let r = returns.values();
    let n_train = (split_fraction * r.len() as f64).floor() as usize;
    let n_test = r.len() - n_train;
    if n_train < MIN_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_LEN,
            got: n_train,
        });
    }
    if n_test < MIN_TEST {
        return Err(Error::InsufficientData {
            needed: MIN_TEST,
            got: n_test,
        });
    }
    let (arma, _, converged) = css_estimate(&r[..n_train], &config.simplex);
    if !converged {
        log::warn!("{}: ARIMA training fit hit the iteration cap", returns.ticker);
    }
    // residuals()[t - 1] is the error at time t
    let errors = &arma.residuals(&r)[n_train - 1..];
    let sse = stats::sum_of_squares(errors);
    let sae = errors.iter().fold(0.0, |acc, e| acc + e.abs());
    Ok(ForecastMetrics {
        rmse: (sse / n_test as f64).sqrt(),
        mae: sae / n_test as f64,
        n_train,
        n_test,
        split_fraction,
    })
}
