//! Run configuration: a plain `key = value` file plus command-line
//! overrides.
//!
//! Blank lines and lines starting with `#` are ignored. Later assignments of
//! the same key win, and `--set key=value` flags are applied after the file.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `corpus` | none | corpus root (`adjusted/`, `unadjusted/`, `metadata.csv`) |
//! | `output` | `panelcov-out` | output directory |
//! | `version` | `unadjusted` | dataset version analysed |
//! | `naive_kinds` | `forward,backward` | naive constructions compared |
//! | `listed_after` | `2016-12-31`, or the day before `synthetic.panel_start` for synthetic input | selection: first trade strictly after |
//! | `min_trading_days` | `400` | selection: minimum observed days |
//! | `split_fraction` | `0.8` | forecast training share |
//! | `breakdown_threshold` | `0.999` | GARCH persistence breakdown level |
//! | `max_iterations` | `2000` | simplex iteration cap per start |
//! | `histogram_bins` | `20` | bins in the distortion histogram |
//! | `seed` | `42` | synthetic universe seed |
//! | `synthetic.*` | see below | synthetic universe (selects synthetic input) |
//!
//! Synthetic keys: `n_instruments`, `panel_start`, `panel_end`, `listing`
//! (`at_start`, `uniform:<max days>` or `fixed:<d1>,<d2>,...`),
//! `trading_week` (e.g. `sun,mon,tue,wed,thu`), `holiday_rate`, `omega`,
//! `alpha`, `beta`, `mu`, `initial_price`. Setting `corpus` together with
//! any `synthetic.*` key is an error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use panelcov::construction::NaiveKind;
use panelcov::distortion::SelectionCriteria;
use panelcov::econometrics::FitConfig;
use panelcov::model::DatasetVersion;
use panelcov::synthetic::{parse_weekday, GarchSpec, ListingSpread, SyntheticSpec};

use crate::error::{CliError, Result};

const KNOWN_KEYS: &[&str] = &[
    "corpus",
    "output",
    "version",
    "naive_kinds",
    "listed_after",
    "min_trading_days",
    "split_fraction",
    "breakdown_threshold",
    "max_iterations",
    "histogram_bins",
    "seed",
];

const SYNTHETIC_KEYS: &[&str] = &[
    "n_instruments",
    "panel_start",
    "panel_end",
    "listing",
    "trading_week",
    "holiday_rate",
    "omega",
    "alpha",
    "beta",
    "mu",
    "initial_price",
];

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Corpus(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputSource,
    pub naive_kinds: Vec<NaiveKind>,
    pub criteria: SelectionCriteria,
    pub fit: FitConfig,
    pub output_dir: PathBuf,
    pub version: DatasetVersion,
    pub histogram_bins: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: InputSource::Synthetic(SyntheticSpec::default()),
            naive_kinds: vec![NaiveKind::ForwardFilled, NaiveKind::BackwardFilled],
            criteria: SelectionCriteria::default(),
            fit: FitConfig::default(),
            output_dir: PathBuf::from("panelcov-out"),
            version: DatasetVersion::Unadjusted,
            histogram_bins: 20,
        }
    }
}

/// Parses `key = value` lines into an ordered map.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = split_assignment(line)
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
        map.insert(key, value);
    }
    Ok(map)
}

fn split_assignment(s: &str) -> Option<(String, String)> {
    let (k, v) = s.split_once('=')?;
    let k = k.trim();
    if k.is_empty() {
        return None;
    }
    Some((k.to_string(), v.trim().to_string()))
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("`{key}`: cannot parse `{value}`: {e}")))
}

fn parse_date(key: &str, value: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map_err(|e| CliError::Config(format!("`{key}`: expected YYYY-MM-DD, got `{value}`: {e}")))
}

fn parse_listing(value: &str) -> Result<ListingSpread> {
    let bad = || CliError::Config(format!("`synthetic.listing`: unrecognised `{value}`"));
    match value.split_once(':') {
        None if value == "at_start" => Ok(ListingSpread::AtStart),
        Some(("uniform", days)) => Ok(ListingSpread::Uniform {
            max_offset_days: parse_value("synthetic.listing", days.trim())?,
        }),
        Some(("fixed", list)) => Ok(ListingSpread::Fixed {
            offsets: list
                .split(',')
                .map(|d| parse_value("synthetic.listing", d.trim()))
                .collect::<Result<_>>()?,
        }),
        _ => Err(bad()),
    }
}

impl RunConfig {
    /// Reads the optional config file, applies overrides, and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut map = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                parse_kv(&text)?
            }
            None => BTreeMap::new(),
        };
        for o in overrides {
            let (k, v) =
                split_assignment(o).ok_or_else(|| CliError::Config(format!("override `{o}` is not `key=value`")))?;
            map.insert(k, v);
        }
        Self::from_map(&map)
    }

    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        for key in map.keys() {
            let known = match key.strip_prefix("synthetic.") {
                Some(sub) => SYNTHETIC_KEYS.contains(&sub),
                None => KNOWN_KEYS.contains(&key.as_str()),
            };
            if !known {
                return Err(CliError::Config(format!("unknown key `{key}`")));
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let mut cfg = RunConfig::default();

        let mut spec = SyntheticSpec::default();
        let any_synthetic = map.keys().any(|k| k.starts_with("synthetic."));
        if let Some(v) = get("seed") {
            spec.seed = parse_value("seed", v)?;
        }
        if let Some(v) = get("synthetic.n_instruments") {
            spec.n_instruments = parse_value("synthetic.n_instruments", v)?;
        }
        if let Some(v) = get("synthetic.panel_start") {
            spec.panel_start = parse_date("synthetic.panel_start", v)?;
        }
        if let Some(v) = get("synthetic.panel_end") {
            spec.panel_end = parse_date("synthetic.panel_end", v)?;
        }
        if let Some(v) = get("synthetic.listing") {
            spec.listing_spread = parse_listing(v)?;
        }
        if let Some(v) = get("synthetic.trading_week") {
            spec.trading_week = v
                .split(',')
                .map(|d| parse_weekday(d).map_err(|e| CliError::Config(e.to_string())))
                .collect::<Result<_>>()?;
        }
        if let Some(v) = get("synthetic.holiday_rate") {
            spec.holiday_rate = parse_value("synthetic.holiday_rate", v)?;
        }
        if let Some(v) = get("synthetic.initial_price") {
            spec.initial_price = parse_value("synthetic.initial_price", v)?;
        }
        let g = spec.garch[0];
        let garch = GarchSpec::new(
            get("synthetic.omega").map_or(Ok(g.omega), |v| parse_value("synthetic.omega", v))?,
            get("synthetic.alpha").map_or(Ok(g.alpha), |v| parse_value("synthetic.alpha", v))?,
            get("synthetic.beta").map_or(Ok(g.beta), |v| parse_value("synthetic.beta", v))?,
            get("synthetic.mu").map_or(Ok(g.mu), |v| parse_value("synthetic.mu", v))?,
        );
        spec.garch = vec![garch];
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;

        cfg.input = match get("corpus") {
            Some(_) if any_synthetic => {
                return Err(CliError::Config(
                    "exactly one input source: set `corpus` or `synthetic.*` keys, not both".into(),
                ))
            }
            Some(dir) => InputSource::Corpus(PathBuf::from(dir)),
            None => InputSource::Synthetic(spec),
        };

        if let Some(v) = get("output") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some(v) = get("version") {
            cfg.version = parse_value("version", v)?;
        }
        if let Some(v) = get("naive_kinds") {
            let mut kinds: Vec<NaiveKind> = v
                .split(',')
                .map(|k| parse_value("naive_kinds", k))
                .collect::<Result<_>>()?;
            kinds.sort();
            kinds.dedup();
            if kinds.is_empty() {
                return Err(CliError::Config("`naive_kinds` is empty".into()));
            }
            cfg.naive_kinds = kinds;
        }
        match (get("listed_after"), &cfg.input) {
            (Some(v), _) => cfg.criteria.listed_after = parse_date("listed_after", v)?,
            // The real-data cutoff would drop most of a synthetic universe.
            (None, InputSource::Synthetic(spec)) => {
                cfg.criteria.listed_after = spec.panel_start.pred_opt().unwrap_or(spec.panel_start)
            }
            (None, InputSource::Corpus(_)) => {}
        }
        if let Some(v) = get("min_trading_days") {
            cfg.criteria.min_trading_days = parse_value("min_trading_days", v)?;
        }
        cfg.criteria.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(v) = get("split_fraction") {
            cfg.fit.split_fraction = parse_value("split_fraction", v)?;
        }
        if !(cfg.fit.split_fraction > 0.0 && cfg.fit.split_fraction < 1.0) {
            return Err(CliError::Config("`split_fraction` must lie in (0, 1)".into()));
        }
        if let Some(v) = get("breakdown_threshold") {
            cfg.fit.breakdown_threshold = parse_value("breakdown_threshold", v)?;
        }
        if !(cfg.fit.breakdown_threshold > 0.0 && cfg.fit.breakdown_threshold <= 1.0) {
            return Err(CliError::Config("`breakdown_threshold` must lie in (0, 1]".into()));
        }
        if let Some(v) = get("max_iterations") {
            cfg.fit.simplex.max_iterations = parse_value("max_iterations", v)?;
        }
        if cfg.fit.simplex.max_iterations == 0 {
            return Err(CliError::Config("`max_iterations` must be positive".into()));
        }
        if let Some(v) = get("histogram_bins") {
            cfg.histogram_bins = parse_value("histogram_bins", v)?;
        }
        if cfg.histogram_bins == 0 {
            return Err(CliError::Config("`histogram_bins` must be positive".into()));
        }
        Ok(cfg)
    }

    pub fn synthetic_spec(&self) -> Result<&SyntheticSpec> {
        match &self.input {
            InputSource::Synthetic(spec) => Ok(spec),
            InputSource::Corpus(_) => Err(CliError::Config(
                "this command needs a synthetic input, not `corpus`".into(),
            )),
        }
    }

    pub fn corpus_dir(&self) -> Result<&Path> {
        match &self.input {
            InputSource::Corpus(dir) => Ok(dir),
            InputSource::Synthetic(_) => Err(CliError::Config("this command needs `corpus` to be set".into())),
        }
    }
}
