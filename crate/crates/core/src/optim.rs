//! Derivative-free Nelder-Mead simplex minimisation.
//!
//! Standard coefficients (reflection 1, expansion 2, contraction 1/2,
//! shrink 1/2). Non-finite objective values are treated as `+inf`, so an
//! objective can reject a region simply by returning NaN.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Relative spread of objective values across the simplex that counts as
    /// converged.
    pub ftol: f64,
    /// Simplex diameter (max-norm) below which the search stops.
    pub xtol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            ftol: 1e-10,
            xtol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

/// Minimises `f` from `x0` with an axis-aligned initial simplex whose
/// vertices are `x0 + step[i] * e_i`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x0.len(), step.len(), "step must match dimension");
    let dim = x0.len();
    let mut obj = Counted { f, evaluations: 0 };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), obj.eval(x0)));
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += step[i];
        let fv = obj.eval(&v);
        simplex.push((v, fv));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let spread = worst - best;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if best.is_finite() && (spread <= opts.ftol * best.abs() || spread == 0.0 || diameter <= opts.xtol) {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(v, _)| v[j]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64, toward: &[f64]| -> Vec<f64> {
            centroid.iter().zip(toward).map(|(c, w)| c + t * (c - w)).collect()
        };
        let worst_x = simplex[dim].0.clone();

        let reflected = along(1.0, &worst_x);
        let f_reflected = obj.eval(&reflected);
        if f_reflected < simplex[0].1 {
            let expanded = along(2.0, &worst_x);
            let f_expanded = obj.eval(&expanded);
            simplex[dim] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < simplex[dim - 1].1 {
            simplex[dim] = (reflected, f_reflected);
            continue;
        }
        let (contracted, f_contracted) = if f_reflected < simplex[dim].1 {
            let c = along(0.5, &worst_x);
            let fc = obj.eval(&c);
            (c, fc)
        } else {
            let c = along(-0.5, &worst_x);
            let fc = obj.eval(&c);
            (c, fc)
        };
        if f_contracted < simplex[dim].1.min(f_reflected) {
            simplex[dim] = (contracted, f_contracted);
            continue;
        }
        let best_x = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            for (vi, bi) in v.iter_mut().zip(&best_x) {
                *vi = bi + 0.5 * (*vi - bi);
            }
            *fv = obj.eval(v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    SimplexResult {
        x,
        fx,
        iterations,
        evaluations: obj.evaluations,
        converged,
    }
}

/// Runs [`nelder_mead`] from each start, re-polishes the best end point with
/// a fresh simplex, and returns the lowest value found. `converged` reports
/// whether the run that produced the winner converged.
pub fn minimize_multistart<F>(mut f: F, starts: &[Vec<f64>], step: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(!starts.is_empty(), "need at least one start");
    let mut best: Option<SimplexResult> = None;
    let mut evaluations = 0;
    let mut iterations = 0;
    for x0 in starts {
        let r = nelder_mead(&mut f, x0, step, opts);
        evaluations += r.evaluations;
        iterations += r.iterations;
        if best.as_ref().is_none_or(|b| r.fx < b.fx) {
            best = Some(r);
        }
    }
    let mut best = best.expect("non-empty starts");
    let polish = nelder_mead(&mut f, &best.x, step, opts);
    evaluations += polish.evaluations;
    iterations += polish.iterations;
    if polish.fx <= best.fx {
        best = polish;
    }
    best.evaluations = evaluations;
    best.iterations = iterations;
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 1.0;
        let r = nelder_mead(f, &[0.0, 0.0], &[1.0, 1.0], &SimplexOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 3.0).abs() < 1e-4 && (r.x[1] + 1.0).abs() < 1e-4, "{:?}", r.x);
        assert!((r.fx - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rosenbrock_with_restarts() {
        let opts = SimplexOptions {
            max_iterations: 5000,
            ..Default::default()
        };
        let r = minimize_multistart(rosenbrock, &[vec![-1.2, 1.0], vec![2.0, 2.0]], &[0.5, 0.5], &opts);
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3, "{:?}", r.x);
    }

    #[test]
    fn nan_region_is_avoided() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                (x[0] - 0.5).powi(2) + x[1] * x[1]
            }
        };
        let r = nelder_mead(f, &[2.0, 1.0], &[1.0, 1.0], &SimplexOptions::default());
        assert!((r.x[0] - 0.5).abs() < 1e-4);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let opts = SimplexOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &[0.1, 0.1], &opts);
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn deterministic() {
        let a = nelder_mead(rosenbrock, &[-1.2, 1.0], &[0.3, 0.3], &SimplexOptions::default());
        let b = nelder_mead(rosenbrock, &[-1.2, 1.0], &[0.3, 0.3], &SimplexOptions::default());
        assert_eq!(a, b);
    }
}
