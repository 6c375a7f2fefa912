//! Experiment configuration: TOML with `[experiment]`, `[model]`,
//! `[network]`, `[output]` sections and a list of `[[series]]`.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use toml::Spanned;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Design,
    Baseline,
    Oracle,
    Montecarlo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Design => "design",
            Self::Baseline => "baseline",
            Self::Oracle => "oracle",
            Self::Montecarlo => "montecarlo",
        }
    }

    fn accepts(self, series: SeriesKind) -> bool {
        use SeriesKind::*;
        match self {
            Self::Design => matches!(series, Swaszek | Cover | Linear | Design | DesignTrace),
            Self::Baseline => matches!(series, Swaszek | Cover | Linear),
            Self::Oracle => matches!(series, Oracle),
            Self::Montecarlo => matches!(series, Montecarlo),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    Swaszek,
    Cover,
    Linear,
    Design,
    DesignTrace,
    Oracle,
    Montecarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    #[default]
    Shifted,
    Nominal,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    model: RawModel,
    network: RawNetwork,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    series: Vec<RawSeries>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    kind: Spanned<ExperimentKind>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(rename = "M")]
    hypotheses: Spanned<usize>,
    snr_db: Spanned<f64>,
    bins: Option<Spanned<usize>>,
    interval_pad: Option<Spanned<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    #[serde(rename = "N_list")]
    n_list: Spanned<Vec<usize>>,
    #[serde(default)]
    rates: Option<Spanned<Vec<u32>>>,
    #[serde(rename = "K")]
    iterations: Option<Spanned<usize>>,
    eta: Option<Spanned<f64>>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    #[serde(default)]
    prefix: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeries {
    kind: Spanned<SeriesKind>,
    name: Option<String>,
    schedule: Option<Schedule>,
    rates: Option<Spanned<Vec<u32>>>,
    rate: Option<Spanned<u32>>,
    trials: Option<Spanned<u64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelConfig {
    #[serde(rename = "M")]
    pub hypotheses: usize,
    pub snr_db: f64,
    pub bins: usize,
    pub interval_pad: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetworkConfig {
    #[serde(rename = "N_list")]
    pub n_list: Vec<usize>,
    pub rates: Vec<u32>,
    #[serde(rename = "K")]
    pub iterations: usize,
    pub eta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputConfig {
    pub dir: Option<String>,
    pub prefix: String,
}

/// One requested curve after defaults are applied. `design` and
/// `design_trace` requests are expanded by the runner.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesConfig {
    pub kind: SeriesKind,
    pub name: Option<String>,
    pub schedule: Schedule,
    pub rates: Vec<u32>,
    pub trials: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub experiment: ExperimentKind,
    pub model: ModelConfig,
    pub network: NetworkConfig,
    pub output: OutputConfig,
    pub series: Vec<SeriesConfig>,
}

/// A configuration problem anchored to a line of the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

struct Checker<'a> {
    text: &'a str,
}

impl Checker<'_> {
    fn fail<T>(&self, span: Range<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError { line: Some(line_of(self.text, span.start)), message: message.into() })
    }

    fn rates(&self, rates: &Spanned<Vec<u32>>) -> Result<Vec<u32>, ConfigError> {
        let v = rates.get_ref();
        if v.is_empty() {
            return self.fail(rates.span(), "rates must not be empty");
        }
        if let Some(r) = v.iter().find(|&&r| !(1..=16).contains(&r)) {
            return self.fail(rates.span(), format!("rate {r} outside 1..=16 bits"));
        }
        Ok(v.clone())
    }
}

pub const DEFAULT_TRIALS: u64 = 1_000_000;

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().map(|s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        let ck = Checker { text };

        let m = &raw.model;
        if *m.hypotheses.get_ref() < 2 {
            return ck.fail(m.hypotheses.span(), "M must be at least 2");
        }
        if !m.snr_db.get_ref().is_finite() {
            return ck.fail(m.snr_db.span(), "snr_db must be finite");
        }
        let bins = match &m.bins {
            Some(b) if *b.get_ref() < 2 => return ck.fail(b.span(), "bins must be at least 2"),
            Some(b) => *b.get_ref(),
            None => tandem_core::gaussian::DEFAULT_BINS,
        };
        let interval_pad = match &m.interval_pad {
            Some(p) if !(*p.get_ref() > 0.0) || !p.get_ref().is_finite() => {
                return ck.fail(p.span(), "interval_pad must be positive")
            }
            Some(p) => *p.get_ref(),
            None => tandem_core::gaussian::DEFAULT_PAD,
        };
        let model = ModelConfig { hypotheses: *m.hypotheses.get_ref(), snr_db: *m.snr_db.get_ref(), bins, interval_pad };

        let n = &raw.network;
        if let Some(&bad) = n.n_list.get_ref().iter().find(|&&v| v == 0) {
            return ck.fail(n.n_list.span(), format!("N_list entries must be at least 1, got {bad}"));
        }
        let mut n_list = n.n_list.get_ref().clone();
        n_list.sort_unstable();
        n_list.dedup();
        let rates = match &n.rates {
            Some(r) => ck.rates(r)?,
            None => Vec::new(),
        };
        let iterations = match &n.iterations {
            Some(k) if *k.get_ref() == 0 => return ck.fail(k.span(), "K must be at least 1"),
            Some(k) => *k.get_ref(),
            None => 3,
        };
        let eta = match &n.eta {
            Some(e) if !(*e.get_ref() > 0.0) || !e.get_ref().is_finite() => {
                return ck.fail(e.span(), "eta must be positive")
            }
            Some(e) => *e.get_ref(),
            None => 1e-6,
        };
        let network = NetworkConfig { n_list, rates, iterations, eta, seed: n.seed };

        let experiment = *raw.experiment.kind.get_ref();
        let mut series = Vec::with_capacity(raw.series.len());
        for s in &raw.series {
            let kind = *s.kind.get_ref();
            if !experiment.accepts(kind) {
                return ck.fail(
                    s.kind.span(),
                    format!("series kind {kind:?} is not part of a {} experiment", experiment.name()),
                );
            }
            if matches!(kind, SeriesKind::Swaszek | SeriesKind::Cover) && model.hypotheses != 2 {
                return ck.fail(s.kind.span(), "rate-one baselines are defined for M = 2 only");
            }
            let rates = match (&s.rate, &s.rates) {
                (Some(r), None) => ck.rates(&Spanned::new(r.span(), vec![*r.get_ref()]))?,
                (None, Some(r)) => ck.rates(r)?,
                (Some(r), Some(_)) => return ck.fail(r.span(), "give either rate or rates, not both"),
                (None, None) => network.rates.clone(),
            };
            let needs_rates = matches!(
                kind,
                SeriesKind::Design | SeriesKind::DesignTrace | SeriesKind::Oracle | SeriesKind::Montecarlo
            );
            if needs_rates && rates.is_empty() {
                return ck.fail(s.kind.span(), "series needs rates (in the series or in [network])");
            }
            if kind == SeriesKind::DesignTrace && rates.len() != 1 {
                return ck.fail(s.kind.span(), "design_trace takes exactly one rate");
            }
            let trials = match &s.trials {
                Some(t) if *t.get_ref() < 10_000 => return ck.fail(t.span(), "trials must be at least 10000"),
                Some(t) => *t.get_ref(),
                None => DEFAULT_TRIALS,
            };
            series.push(SeriesConfig {
                kind,
                name: s.name.clone(),
                schedule: s.schedule.unwrap_or_default(),
                rates: if needs_rates { rates } else { Vec::new() },
                trials,
            });
        }

        Ok(Config {
            experiment,
            model,
            network,
            output: OutputConfig { dir: raw.output.dir, prefix: raw.output.prefix },
            series,
        })
    }
}
