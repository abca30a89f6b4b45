use serde::{Deserialize, Serialize};

use super::{logistic, logit, FitConfig};
use crate::construction::ReturnSeries;
use crate::error::{BestSoFar, Error, Result};
use crate::optim::minimize_multistart;
use crate::stats;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Hard floor on series length; fits below [`WARN_LEN`] proceed with a warning.
const MIN_LEN: usize = 10;
const WARN_LEN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub mu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub mu: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub loglik: f64,
    pub n_obs: usize,
    pub persistence: f64,
    pub breakdown: bool,
    /// Log-likelihood at the first starting point of the search.
    pub initial_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl GarchFit {
    pub fn params(&self) -> GarchParams {
        GarchParams {
            mu: self.mu,
            omega: self.omega,
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

/// Gaussian log-likelihood of a GARCH(1,1) with constant mean.
///
/// `sigma2_t = omega + alpha * e_{t-1}^2 + beta * sigma2_{t-1}` with
/// `e_t = r_t - mu`. The pre-sample squared residual and variance are both
/// set to the mean of `e_t^2`, so `sigma2_1 = omega + (alpha + beta) * that`.
pub fn garch_loglik(params: &GarchParams, returns: &ReturnSeries) -> Result<f64> {
    if returns.len() < MIN_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_LEN,
            got: returns.len(),
        });
    }
    check_params(params)?;
    loglik_values(params, &returns.values())
}

fn check_params(p: &GarchParams) -> Result<()> {
    if !(p.omega > 0.0) || !(p.alpha >= 0.0) || !(p.beta >= 0.0) || !p.mu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "GARCH needs omega > 0, alpha >= 0, beta >= 0 (got {p:?})"
        )));
    }
    Ok(())
}

pub(crate) fn loglik_values(p: &GarchParams, r: &[f64]) -> Result<f64> {
    let n = r.len() as f64;
    let backcast = r.iter().fold(0.0, |acc, &x| acc + (x - p.mu) * (x - p.mu)) / n;
    let mut sigma2 = p.omega + (p.alpha + p.beta) * backcast;
    let mut prev_e2 = 0.0;
    let mut ll = 0.0;
    for (t, &x) in r.iter().enumerate() {
        if t > 0 {
            sigma2 = p.omega + p.alpha * prev_e2 + p.beta * sigma2;
        }
        let e2 = (x - p.mu) * (x - p.mu);
        ll -= 0.5 * (LN_2PI + sigma2.ln() + e2 / sigma2);
        prev_e2 = e2;
    }
    if ll.is_finite() {
        Ok(ll)
    } else {
        Err(Error::NonFiniteLikelihood)
    }
}

/// Search-space mapping: `[mu / scale, ln omega, logit alpha, logit beta]`.
/// Alpha and beta are bounded to (0, 1) individually; their sum is left
/// free so persistence can reach and pass the breakdown threshold.
struct Transform {
    scale: f64,
}

impl Transform {
    fn to_params(&self, x: &[f64]) -> GarchParams {
        GarchParams {
            mu: x[0] * self.scale,
            omega: x[1].exp(),
            alpha: logistic(x[2]),
            beta: logistic(x[3]),
        }
    }

    fn to_search(&self, p: &GarchParams) -> Vec<f64> {
        vec![p.mu / self.scale, p.omega.ln(), logit(p.alpha), logit(p.beta)]
    }
}

const STARTS: [(f64, f64); 3] = [(0.05, 0.90), (0.15, 0.60), (0.02, 0.97)];
const STEP: [f64; 4] = [0.1, 0.5, 0.5, 0.5];

/// Maximum-likelihood GARCH(1,1) by simplex search over transformed
/// parameters, from three fixed starting points.
pub fn fit_garch11(returns: &ReturnSeries, config: &FitConfig) -> Result<GarchFit> {
    let r = returns.values();
    if r.len() < MIN_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_LEN,
            got: r.len(),
        });
    }
    if r.len() < WARN_LEN {
        log::warn!(
            "{}: GARCH fit on only {} returns; estimates will be unstable",
            returns.ticker,
            r.len()
        );
    }
    let mean = stats::mean(&r);
    let var = stats::sample_variance(&r);
    if !(var > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let tf = Transform { scale: var.sqrt() };
    let starts: Vec<Vec<f64>> = STARTS
        .iter()
        .map(|&(alpha, beta)| {
            tf.to_search(&GarchParams {
                mu: mean,
                omega: var * (1.0 - alpha - beta),
                alpha,
                beta,
            })
        })
        .collect();
    let objective = |x: &[f64]| match loglik_values(&tf.to_params(x), &r) {
        Ok(ll) => -ll,
        Err(_) => f64::INFINITY,
    };
    let initial_loglik = -objective(&starts[0]);
    let result = minimize_multistart(objective, &starts, &STEP, &config.simplex);

    let p = tf.to_params(&result.x);
    let persistence = p.alpha + p.beta;
    let fit = GarchFit {
        mu: p.mu,
        omega: p.omega,
        alpha: p.alpha,
        beta: p.beta,
        loglik: -result.fx,
        n_obs: r.len(),
        persistence,
        breakdown: persistence >= config.breakdown_threshold,
        initial_loglik,
        iterations: result.iterations,
        converged: result.converged,
    };
    if !fit.loglik.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }
    if !result.converged {
        return Err(Error::ConvergenceFailure {
            iterations: result.iterations,
            best: Box::new(BestSoFar::Garch(fit)),
        });
    }
    Ok(fit)
}

/// Long-run variance `omega / (1 - alpha - beta)`; undefined for fits
/// flagged as breakdowns.
pub fn unconditional_variance(fit: &GarchFit) -> Result<f64> {
    if fit.breakdown || fit.persistence >= 1.0 {
        return Err(Error::Breakdown {
            persistence: fit.persistence,
        });
    }
    Ok(fit.omega / (1.0 - fit.persistence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{simulate_garch_returns, GarchSpec};

    fn fit_with(omega: f64, alpha: f64, beta: f64) -> GarchFit {
        GarchFit {
            mu: 0.0,
            omega,
            alpha,
            beta,
            loglik: 0.0,
            n_obs: 100,
            persistence: alpha + beta,
            breakdown: alpha + beta >= 0.999,
            initial_loglik: 0.0,
            iterations: 0,
            converged: true,
        }
    }

    #[test]
    fn three_observation_recursion() {
        // Independent evaluation of the recursion and Gaussian density
        // (pre-sample terms = mean squared residual).
        let p = GarchParams {
            mu: 0.001,
            omega: 1e-5,
            alpha: 0.1,
            beta: 0.8,
        };
        let ll = loglik_values(&p, &[0.01, -0.02, 0.015]).unwrap();
        assert!((ll - 8.180_649_887_184_554).abs() < 1e-12, "{ll}");
    }

    #[test]
    fn no_dynamics_is_iid_gaussian() {
        let r: Vec<f64> = (0..50).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.003).collect();
        let omega = 4e-5;
        let p = GarchParams {
            mu: 0.0005,
            omega,
            alpha: 0.0,
            beta: 0.0,
        };
        let closed: f64 = r
            .iter()
            .map(|x| -0.5 * ((2.0 * std::f64::consts::PI * omega).ln() + (x - p.mu).powi(2) / omega))
            .sum();
        let ll = garch_loglik(&p, &ReturnSeries::from_values("X", &r)).unwrap();
        assert!((ll - closed).abs() < 1e-10 * closed.abs());
    }

    #[test]
    fn scaling_shifts_loglik_by_jacobian() {
        let r = simulate_garch_returns(&GarchSpec::new(2e-6, 0.08, 0.9, 0.0003), 300, 7);
        let p = GarchParams {
            mu: 0.0002,
            omega: 3e-6,
            alpha: 0.1,
            beta: 0.85,
        };
        let c: f64 = 3.5;
        let scaled: Vec<f64> = r.iter().map(|x| x * c).collect();
        let ps = GarchParams {
            mu: c * p.mu,
            omega: c * c * p.omega,
            ..p
        };
        let a = loglik_values(&p, &r).unwrap();
        let b = loglik_values(&ps, &scaled).unwrap();
        let expected = a - r.len() as f64 * c.ln();
        assert!((b - expected).abs() < 1e-9 * a.abs(), "{b} vs {expected}");
    }

    #[test]
    fn loglik_preconditions() {
        let short = ReturnSeries::from_values("X", &[0.01; 5]);
        let p = GarchParams {
            mu: 0.0,
            omega: 1e-5,
            alpha: 0.1,
            beta: 0.8,
        };
        assert!(matches!(garch_loglik(&p, &short), Err(Error::InsufficientData { .. })));
        let long = ReturnSeries::from_values("X", &[0.01; 20]);
        let bad = GarchParams { omega: 0.0, ..p };
        assert!(matches!(garch_loglik(&bad, &long), Err(Error::InvalidParameter(_))));
        let neg = GarchParams { alpha: -0.1, ..p };
        assert!(garch_loglik(&neg, &long).is_err());
    }

    #[test]
    fn unconditional_variance_values() {
        assert!((unconditional_variance(&fit_with(1e-4, 0.0, 0.0)).unwrap() - 1e-4).abs() < 1e-18);
        // 2e-6 / (1 - 0.98)
        assert!((unconditional_variance(&fit_with(2e-6, 0.08, 0.90)).unwrap() - 1e-4).abs() < 1e-15);
        assert!(matches!(
            unconditional_variance(&fit_with(1e-6, 0.1, 0.8995)),
            Err(Error::Breakdown { .. })
        ));
    }

    #[test]
    fn white_noise_has_no_garch_effect() {
        let r = simulate_garch_returns(&GarchSpec::new(1e-4, 0.0, 0.0, 0.0), 3000, 11);
        let fit = fit_garch11(&ReturnSeries::from_values("WN", &r), &FitConfig::default()).unwrap();
        assert!(fit.alpha < 0.05, "{fit:?}");
        assert!(!fit.breakdown);
        assert!(fit.persistence < 0.999);
        assert!(fit.loglik >= fit.initial_loglik);
    }

    #[test]
    fn fit_is_deterministic() {
        let r = simulate_garch_returns(&GarchSpec::new(2e-6, 0.08, 0.9, 0.0), 800, 3);
        let s = ReturnSeries::from_values("D", &r);
        let a = fit_garch11(&s, &FitConfig::default()).unwrap();
        let b = fit_garch11(&s, &FitConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_tiny_and_constant_series() {
        let cfg = FitConfig::default();
        assert!(matches!(
            fit_garch11(&ReturnSeries::from_values("X", &[0.01; 5]), &cfg),
            Err(Error::InsufficientData { .. })
        ));
        assert!(matches!(
            fit_garch11(&ReturnSeries::from_values("X", &[0.0; 50]), &cfg),
            Err(Error::DegenerateSeries)
        ));
    }
}
