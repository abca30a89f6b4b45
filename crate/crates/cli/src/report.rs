//! Markdown rendering of an analysis directory.

use std::fmt::Write;

use panelcov::distortion::{ConstructionStats, DistortionSummary};

use crate::commands::AnalysisSummary;

fn num(x: Option<f64>, decimals: usize) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.decimals$}"))
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn pval(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |p| format!("{p:.3e}"))
}

fn summary_block(out: &mut String, s: &DistortionSummary) {
    let _ = writeln!(out, "### {} / {}\n", s.measure, s.naive_kind);
    let _ = writeln!(
        out,
        "- instruments: {} (GARCH breakdowns excluded: {})",
        s.n, s.breakdown_count
    );
    let _ = writeln!(out, "- mean distortion: {}", pct(s.mean));
    let _ = writeln!(out, "- median distortion: {}", pct(s.median));
    let _ = writeln!(out, "- positive share: {}", pct(s.frac_positive));
    let _ = writeln!(out, "- sign test p: {}", pval(s.sign_test_p));
    let _ = writeln!(out, "- t-test: t = {}, p = {}\n", num(s.t_stat, 3), pval(s.t_test_p));
}

/// Per-instrument model table (one row per construction) followed by the
/// aggregate distortion lines for every measure and naive construction.
pub fn render(summary: &AnalysisSummary, stats: &[ConstructionStats]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Coverage distortion report\n");
    let _ = writeln!(
        out,
        "Dataset version: {}. Panel start: {}. Instruments loaded: {}, selected: {}, failed: {}.\n",
        summary.version,
        summary.panel_start,
        summary.instruments_loaded,
        summary.selected.len(),
        summary.failed.len()
    );
    for f in &summary.failed {
        let _ = writeln!(out, "- {} failed: {}", f.ticker, f.reason);
    }
    if !summary.failed.is_empty() {
        out.push('\n');
    }

    let _ = writeln!(out, "## Distortion summary\n");
    if summary.summaries.is_empty() {
        let _ = writeln!(out, "No summaries were produced.\n");
    }
    for s in &summary.summaries {
        summary_block(&mut out, s);
    }

    let _ = writeln!(out, "## Model statistics\n");
    let mut tickers: Vec<&str> = stats.iter().map(|s| s.ticker.as_str()).collect();
    tickers.dedup();
    for ticker in tickers {
        let _ = writeln!(out, "### {ticker}\n");
        let _ = writeln!(out, "| Construction | Obs. | Return STD | AIC | BIC | RMSE | MAE |");
        let _ = writeln!(out, "|---|---:|---:|---:|---:|---:|---:|");
        for s in stats.iter().filter(|s| s.ticker == ticker) {
            let _ = writeln!(
                out,
                "| {} | {} | {:.5} | {} | {} | {} | {} |",
                s.construction.label(),
                s.obs,
                s.return_std,
                num(s.aic, 2),
                num(s.bic, 2),
                num(s.rmse, 6),
                num(s.mae, 6)
            );
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use panelcov::construction::{Construction, NaiveKind};
    use panelcov::distortion::Measure;
    use panelcov::model::DatasetVersion;

    #[test]
    fn renders_table_and_summary_lines() {
        let stats: Vec<ConstructionStats> = Construction::ALL
            .iter()
            .map(|&c| ConstructionStats {
                ticker: "ABC".into(),
                construction: c,
                obs: 100,
                return_std: 0.02,
                aic: Some(-500.0),
                bic: Some(-490.0),
                rmse: Some(0.01),
                mae: None,
            })
            .collect();
        let summary = AnalysisSummary {
            version: DatasetVersion::Unadjusted,
            panel_start: NaiveDate::from_ymd_opt(2012, 10, 1).unwrap(),
            instruments_loaded: 1,
            selected: vec!["ABC".into()],
            failed: vec![],
            summaries: vec![DistortionSummary {
                measure: Measure::ReturnStd,
                naive_kind: NaiveKind::ForwardFilled,
                n: 1,
                mean: 0.2,
                median: 0.2,
                frac_positive: 1.0,
                sign_test_p: Some(1.0),
                t_stat: None,
                t_test_p: None,
                breakdown_count: 0,
            }],
        };
        let text = render(&summary, &stats);
        assert!(text.contains("| Construction | Obs. | Return STD | AIC | BIC | RMSE | MAE |"));
        assert_eq!(text.matches("| Naive Backward-Filled |").count(), 1);
        assert!(text.contains("| Coverage-Aware | 100 | 0.02000 | -500.00 | -490.00 | 0.010000 | n/a |"));
        for line in [
            "- mean distortion: 20.00%",
            "- median distortion: 20.00%",
            "- sign test p:",
            "- t-test:",
        ] {
            assert!(text.contains(line), "{line}");
        }
    }
}
