use chrono::NaiveDate;
use panelcov::construction::{Construction, ReturnSeries};
use panelcov::distortion::construction_stats;
use panelcov::econometrics::{fit_garch11, garch_loglik, unconditional_variance, FitConfig, GarchParams};
use panelcov::synthetic::{make_universe, simulate_garch_returns, GarchSpec, ListingSpread, SyntheticSpec};
use panelcov::Error;

type Field = fn(&mut GarchParams) -> &mut f64;

fn garch_sample(n: usize, seed: u64) -> ReturnSeries {
    ReturnSeries::from_values(
        "G",
        &simulate_garch_returns(&GarchSpec::new(2e-6, 0.08, 0.9, 0.0003), n, seed),
    )
}

#[test]
fn fitted_point_is_a_stationary_point() {
    let r = garch_sample(3000, 11);
    let fit = fit_garch11(&r, &FitConfig::default()).unwrap();
    let p = fit.params();
    let at = |q: GarchParams| garch_loglik(&q, &r).unwrap();
    let base = at(p);
    assert!((base - fit.loglik).abs() < 1e-9);
    // The Newton step (slope over curvature, by central differences) measures
    // how far each coordinate sits from the maximum.
    let probes: [(&str, Field, f64); 4] = [
        ("mu", |q| &mut q.mu, 1e-5),
        ("omega", |q| &mut q.omega, 1e-8),
        ("alpha", |q| &mut q.alpha, 1e-4),
        ("beta", |q| &mut q.beta, 1e-4),
    ];
    for (name, field, tol) in probes {
        let x = *field(&mut p.clone());
        let h = 1e-3 * x.abs();
        let mut up = p;
        *field(&mut up) = x + h;
        let mut down = p;
        *field(&mut down) = x - h;
        let (lu, ld) = (at(up), at(down));
        let slope = (lu - ld) / (2.0 * h);
        let curvature = (lu - 2.0 * base + ld) / (h * h);
        assert!(curvature < 0.0, "{name}: not a maximum along this axis");
        let step = -slope / curvature;
        assert!(step.abs() < tol, "{name}: Newton step {step:e} at {x:e}");
    }
}

#[test]
fn search_never_loses_likelihood() {
    for seed in 1..=5 {
        let fit = fit_garch11(&garch_sample(1500, seed), &FitConfig::default()).unwrap();
        assert!(fit.loglik >= fit.initial_loglik, "seed {seed}: {fit:?}");
    }
}

#[test]
fn leading_zero_run_breaks_garch() {
    let mut r = vec![0.0; 1500];
    r.extend(simulate_garch_returns(&GarchSpec::new(2e-5, 0.1, 0.85, 0.0), 1000, 5));
    let fit = match fit_garch11(&ReturnSeries::from_values("Z", &r), &FitConfig::default()) {
        Ok(f) => f,
        Err(Error::ConvergenceFailure { best, .. }) => match *best {
            panelcov::error::BestSoFar::Garch(f) => f,
            _ => unreachable!(),
        },
        Err(e) => panic!("{e}"),
    };
    assert!(fit.breakdown && fit.persistence >= 0.999, "{fit:?}");
    assert!(matches!(unconditional_variance(&fit), Err(Error::Breakdown { .. })));
}

#[test]
fn padding_flatters_aic_and_forecast_errors() {
    let spec = SyntheticSpec {
        n_instruments: 3,
        panel_start: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
        panel_end: NaiveDate::from_ymd_opt(2020, 12, 31).unwrap(),
        listing_spread: ListingSpread::Fixed {
            offsets: vec![0, 400, 900],
        },
        ..SyntheticSpec::default()
    };
    let universe = make_universe(&spec).unwrap();
    let panel_start = universe[0].series.first_date();
    for inst in &universe {
        let rows = construction_stats(&inst.series, panel_start, &FitConfig::default()).unwrap();
        let get = |c: Construction| rows.iter().find(|r| r.construction == c).unwrap();
        let aware = get(Construction::CoverageAware);
        for c in [Construction::NaiveForwardFilled, Construction::NaiveBackwardFilled] {
            let naive = get(c);
            assert!(naive.obs > aware.obs);
            assert!(naive.return_std < aware.return_std);
            assert!(naive.aic.unwrap() < aware.aic.unwrap(), "{c}: {naive:?} vs {aware:?}");
            assert!(naive.rmse.unwrap() < aware.rmse.unwrap(), "{c}: {naive:?} vs {aware:?}");
        }
    }
}
