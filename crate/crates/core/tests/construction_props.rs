use chrono::{Days, NaiveDate};
use panelcov::construction::NaiveKind;
use panelcov::construction::{
    construct, coverage_aware, log_returns, naive_backward_fill, naive_forward_fill, Construction, Origin,
};
use panelcov::distortion::{analytic_naive_std, analyze_instrument, distortion};
use panelcov::econometrics::FitConfig;
use panelcov::model::{DatasetVersion, InstrumentSeries};
use panelcov::stats::{sample_std, sum_of_squares, ReturnSummary};
use proptest::prelude::*;

fn base() -> NaiveDate {
    NaiveDate::from_ymd_opt(2018, 1, 1).unwrap()
}

/// Strictly increasing dates built from positive gaps, starting `lead` days
/// after `base()`, with positive closes.
fn instrument() -> impl Strategy<Value = (InstrumentSeries, u64)> {
    (0u64..400, prop::collection::vec((1u64..6, 0.5f64..500.0), 2..120)).prop_map(|(lead, steps)| {
        let mut date = base() + Days::new(lead);
        let mut points = Vec::with_capacity(steps.len());
        for (i, (gap, close)) in steps.into_iter().enumerate() {
            if i > 0 {
                date = date + Days::new(gap);
            }
            points.push((date, close));
        }
        (
            InstrumentSeries::from_closes("P", DatasetVersion::Unadjusted, points).unwrap(),
            lead,
        )
    })
}

fn sorted_bits(xs: &[f64]) -> Vec<u64> {
    let mut v: Vec<u64> = xs.iter().map(|x| x.to_bits()).collect();
    v.sort_unstable();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn naive_returns_are_aware_returns_plus_zeros((series, _) in instrument()) {
        let aware = log_returns(&coverage_aware(&series)).unwrap();
        let aware_ss = sum_of_squares(&aware.values());
        for c in [Construction::NaiveForwardFilled, Construction::NaiveBackwardFilled] {
            let naive = log_returns(&construct(&series, c, base()).unwrap()).unwrap();
            let kept: Vec<f64> = naive.points.iter().filter(|p| !p.padded).map(|p| p.r).collect();
            prop_assert_eq!(sorted_bits(&kept), sorted_bits(&aware.values()));
            prop_assert!(naive.points.iter().filter(|p| p.padded).all(|p| p.r == 0.0));
            prop_assert_eq!(naive.len(), aware.len() + naive.padded_count());
            prop_assert_eq!(sum_of_squares(&naive.values()).to_bits(), aware_ss.to_bits());
        }
    }

    #[test]
    fn pipeline_std_matches_closed_form((series, _) in instrument()) {
        let aware = log_returns(&coverage_aware(&series)).unwrap();
        let summary = ReturnSummary::of(&aware.values());
        prop_assume!(sample_std(&aware.values()) > 0.0);
        for c in [Construction::NaiveForwardFilled, Construction::NaiveBackwardFilled] {
            let naive = log_returns(&construct(&series, c, base()).unwrap()).unwrap();
            let analytic = analytic_naive_std(&summary, naive.padded_count()).unwrap();
            let pipeline = sample_std(&naive.values());
            prop_assert!(((pipeline - analytic) / analytic).abs() <= 1e-12, "{} vs {}", pipeline, analytic);
        }
    }

    #[test]
    fn forward_fill_spans_the_window_daily((series, _) in instrument()) {
        let ff = naive_forward_fill(&series);
        let span = (series.last_date() - series.first_date()).num_days() as usize + 1;
        prop_assert_eq!(ff.len(), span);
        prop_assert_eq!(ff.len() - ff.padded_count(), series.len());
        prop_assert!(ff.points.windows(2).all(|w| w[1].date == w[0].date + Days::new(1)));
        // fills copy the previous close exactly
        prop_assert!(ff.points.windows(2).all(|w| w[1].origin == Origin::Observed || w[1].close.to_bits() == w[0].close.to_bits()));
    }

    #[test]
    fn backward_prefix_reaches_panel_start((series, lead) in instrument()) {
        let bf = naive_backward_fill(&series, base()).unwrap();
        let prefix = bf.points.iter().take_while(|p| p.origin == Origin::BackwardFilled).count();
        prop_assert_eq!(prefix as u64, lead);
        prop_assert_eq!(bf.points[0].date, base());
        prop_assert!(bf.points[..prefix].iter().all(|p| p.close.to_bits() == series.rows()[0].close.to_bits()));
        prop_assert_eq!(bf.len(), naive_forward_fill(&series).len() + prefix);
    }

    #[test]
    fn dilution_is_monotone_in_padding(xs in prop::collection::vec(-0.1f64..0.1, 3..200), k in 0usize..500) {
        // centred sample: adding zeros can only lower the std
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let centred: Vec<f64> = xs.iter().map(|x| x - m).collect();
        let mut s = ReturnSummary::of(&centred);
        s.mean = 0.0;
        let a = analytic_naive_std(&s, k).unwrap();
        let b = analytic_naive_std(&s, k + 1).unwrap();
        prop_assert!(b <= a);
    }

    #[test]
    fn distortion_is_scale_invariant((series, _) in instrument(), factor in 0.01f64..100.0) {
        let scaled = series.scaled(factor).unwrap();
        for c in [Construction::NaiveForwardFilled, Construction::NaiveBackwardFilled] {
            let d = |s: &InstrumentSeries| {
                let a = sample_std(&log_returns(&coverage_aware(s)).unwrap().values());
                let n = sample_std(&log_returns(&construct(s, c, base()).unwrap()).unwrap().values());
                distortion(a, n)
            };
            match (d(&series), d(&scaled)) {
                (Ok(x), Ok(y)) => prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y),
                (Err(_), Err(_)) => {}
                (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
            }
        }
    }
}

#[test]
fn five_day_week_pads_about_two_sevenths() {
    let start = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap(); // a Monday
    let points: Vec<(NaiveDate, f64)> = start
        .iter_days()
        .take(7 * 150)
        .filter(|d| chrono::Datelike::weekday(d).number_from_monday() <= 5)
        .enumerate()
        .map(|(i, d)| (d, 100.0 + (i % 7) as f64))
        .collect();
    let series = InstrumentSeries::from_closes("W", DatasetVersion::Unadjusted, points).unwrap();
    let naive = log_returns(&naive_forward_fill(&series)).unwrap();
    let share = naive.padded_count() as f64 / naive.len() as f64;
    assert!((share - 2.0 / 7.0).abs() < 0.01, "{share}");
}

#[test]
fn seven_day_trading_means_no_distortion() {
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let returns =
        panelcov::synthetic::simulate_garch_returns(&panelcov::synthetic::GarchSpec::new(2e-6, 0.08, 0.9, 0.0), 800, 3);
    let mut p = 50.0;
    let points: Vec<(NaiveDate, f64)> = returns
        .iter()
        .enumerate()
        .map(|(i, r)| {
            p *= r.exp();
            (start + Days::new(i as u64), p)
        })
        .collect();
    let series = InstrumentSeries::from_closes("D", DatasetVersion::Unadjusted, points).unwrap();
    let d = analyze_instrument(&series, NaiveKind::ForwardFilled, start, &FitConfig::default()).unwrap();
    assert_eq!(d.return_std.padding_days, 0);
    assert_eq!(d.return_std.delta_sigma, Some(0.0));
    assert_eq!(d.garch.delta_sigma, Some(0.0));
}
