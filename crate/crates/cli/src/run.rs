//! Evaluates the requested series over the configured grid of `N`.

use std::time::Instant;

use log::info;
use serde::Serialize;
use tandem_core::{
    brute_force_design, cover_curve, design_network, discretize, linear_detector_error, monte_carlo_error,
    multiplication_count, network_error, snr_to_amplitude, swaszek_curve, CoverSchedule, DesignConfig,
    DiscreteObservationModel, Error as CoreError, GaussianSpec, NetworkDesign, Priors,
};

use crate::config::{Config, Schedule, SeriesConfig, SeriesKind};
use crate::RunError;

/// One CSV row.
#[derive(Debug, Clone)]
pub struct Row {
    pub n: usize,
    pub series: String,
    pub log10_pe: f64,
    pub pe: f64,
    pub iterations_used: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplicationEstimate {
    pub sweeps: usize,
    pub exact: u128,
    pub approx: u128,
}

/// Per-cell details recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    #[serde(rename = "N")]
    pub n: usize,
    pub series: String,
    pub rate: Option<u32>,
    /// `log10 P_E` of the initialized network and after each outer iteration.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
    /// Inner sweep counts, one list per outer iteration.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweeps: Vec<Vec<usize>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub multiplications: Vec<MultiplicationEstimate>,
    /// `log10 P_E` minus the linear detector's at the same `N`.
    pub gap_to_linear: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloCell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluated_tuples: Option<u128>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloCell {
    pub trials: u64,
    pub errors: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub analytic_pe: f64,
}

#[derive(Debug, Default)]
pub struct Series {
    pub name: String,
    pub rows: Vec<Row>,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub series: Vec<Series>,
    pub cells: Vec<Cell>,
}

impl Outcome {
    fn series_mut(&mut self, name: &str) -> &mut Series {
        if let Some(i) = self.series.iter().position(|s| s.name == name) {
            return &mut self.series[i];
        }
        self.series.push(Series { name: name.to_string(), rows: Vec::new() });
        self.series.last_mut().expect("just pushed")
    }

    fn push(&mut self, name: &str, row: Row) {
        self.series_mut(name).rows.push(row);
    }
}

struct Context<'a> {
    config: &'a Config,
    observations: DiscreteObservationModel,
    priors: Priors,
    amplitude: f64,
    timing: bool,
}

impl Context<'_> {
    fn linear_log10(&self, n: usize) -> Result<f64, RunError> {
        Ok(linear_detector_error(n, self.config.model.hypotheses, self.amplitude, 1.0)?.log10())
    }

    fn design(&self, n: usize, rate: u32) -> Result<NetworkDesign, RunError> {
        let net = &self.config.network;
        let config = DesignConfig {
            iterations: net.iterations,
            eta: net.eta,
            ..DesignConfig::uniform(n, rate, net.seed)
        };
        let design = design_network(&config, vec![self.observations.clone(); n], self.priors.clone())?;
        check_trace(&design.trace()).map_err(|msg| RunError::Invariant(format!("N = {n}, rate {rate}: {msg}")))?;
        Ok(design)
    }

    fn ms(&self, start: Instant) -> u64 {
        if self.timing {
            start.elapsed().as_millis() as u64
        } else {
            0
        }
    }
}

fn check_trace(trace: &[f64]) -> Result<(), String> {
    for (k, &p) in trace.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("error probability {p} at iteration {k} is not a probability"));
        }
    }
    for (k, w) in trace.windows(2).enumerate() {
        if w[1] > w[0] + 1e-12 {
            return Err(format!("error rose from {} to {} in iteration {}", w[0], w[1], k + 1));
        }
    }
    Ok(())
}

fn row(n: usize, series: &str, pe: f64, iterations_used: usize, wall_ms: u64) -> Result<Row, RunError> {
    if !(0.0..=1.0).contains(&pe) {
        return Err(RunError::Invariant(format!("{series}, N = {n}: error probability {pe} out of range")));
    }
    Ok(Row { n, series: series.to_string(), log10_pe: pe.log10(), pe, iterations_used, wall_ms })
}

fn series_name(spec: &SeriesConfig, default: String) -> String {
    spec.name.clone().unwrap_or(default)
}

pub fn run(config: &Config, timing: bool) -> Result<Outcome, RunError> {
    let m = &config.model;
    let amplitude = snr_to_amplitude(m.snr_db);
    let spec = GaussianSpec::padded(m.hypotheses, amplitude, m.bins, m.interval_pad);
    let ctx = Context {
        config,
        observations: discretize(&spec)?,
        priors: Priors::uniform(m.hypotheses)?,
        amplitude,
        timing,
    };
    let mut out = Outcome::default();
    for spec in &config.series {
        match spec.kind {
            SeriesKind::Swaszek | SeriesKind::Cover => baseline(&ctx, spec, &mut out)?,
            SeriesKind::Linear => linear(&ctx, spec, &mut out)?,
            SeriesKind::Design => design(&ctx, spec, &mut out)?,
            SeriesKind::DesignTrace => design_trace(&ctx, spec, &mut out)?,
            SeriesKind::Oracle => oracle(&ctx, spec, &mut out)?,
            SeriesKind::Montecarlo => montecarlo(&ctx, spec, &mut out)?,
        }
    }
    for s in &mut out.series {
        s.rows.sort_by_key(|r| r.n);
    }
    out.series.sort_by(|a, b| a.name.cmp(&b.name));
    out.cells.sort_by(|a, b| a.series.cmp(&b.series).then(a.n.cmp(&b.n)));
    Ok(out)
}

fn baseline(ctx: &Context, spec: &SeriesConfig, out: &mut Outcome) -> Result<(), RunError> {
    let n_list = &ctx.config.network.n_list;
    let Some(&max_n) = n_list.last() else { return Ok(()) };
    let start = Instant::now();
    let (curve, default) = match spec.kind {
        SeriesKind::Swaszek => (swaszek_curve(max_n, ctx.amplitude, 1.0)?, "swaszek"),
        _ => {
            let schedule = match spec.schedule {
                Schedule::Shifted => CoverSchedule::Shifted,
                Schedule::Nominal => CoverSchedule::Nominal,
            };
            (cover_curve(max_n, ctx.amplitude, 1.0, schedule)?, "cover")
        }
    };
    let name = series_name(spec, default.to_string());
    let wall = ctx.ms(start);
    for &n in n_list {
        out.push(&name, row(n, &name, curve[n - 1], 0, wall)?);
    }
    Ok(())
}

fn linear(ctx: &Context, spec: &SeriesConfig, out: &mut Outcome) -> Result<(), RunError> {
    let name = series_name(spec, "linear".into());
    for &n in &ctx.config.network.n_list {
        let start = Instant::now();
        let pe = linear_detector_error(n, ctx.config.model.hypotheses, ctx.amplitude, 1.0)?;
        out.push(&name, row(n, &name, pe, 0, ctx.ms(start))?);
    }
    Ok(())
}

fn design_cell(ctx: &Context, n: usize, series: &str, rate: u32, d: &NetworkDesign) -> Result<Cell, RunError> {
    let m = &ctx.config.model;
    let multiplications = d
        .iterations
        .iter()
        .map(|it| {
            // one T per iteration: the largest sweep count of any DM
            let t = it.sweeps.iter().copied().max().unwrap_or(0);
            let c = multiplication_count(n, m.hypotheses, m.bins, 1 << rate, t);
            MultiplicationEstimate { sweeps: t, exact: c.exact, approx: c.approx }
        })
        .collect();
    Ok(Cell {
        n,
        series: series.to_string(),
        rate: Some(rate),
        trace: d.trace().iter().map(|p| p.log10()).collect(),
        sweeps: d.iterations.iter().map(|it| it.sweeps.clone()).collect(),
        multiplications,
        gap_to_linear: Some(d.error().log10() - ctx.linear_log10(n)?),
        monte_carlo: None,
        evaluated_tuples: None,
    })
}

fn design(ctx: &Context, spec: &SeriesConfig, out: &mut Outcome) -> Result<(), RunError> {
    for &rate in &spec.rates {
        let name = match &spec.name {
            Some(base) if spec.rates.len() > 1 => format!("{base}_rate{rate}"),
            Some(base) => base.clone(),
            None => format!("rate{rate}"),
        };
        for &n in &ctx.config.network.n_list {
            info!("{name}: designing N = {n}");
            let start = Instant::now();
            let d = ctx.design(n, rate)?;
            let wall = ctx.ms(start);
            out.push(&name, row(n, &name, d.error(), d.iterations.len(), wall)?);
            out.cells.push(design_cell(ctx, n, &name, rate, &d)?);
        }
    }
    Ok(())
}

fn design_trace(ctx: &Context, spec: &SeriesConfig, out: &mut Outcome) -> Result<(), RunError> {
    let rate = spec.rates[0];
    let base = spec.name.clone().unwrap_or_else(|| format!("rate{rate}"));
    let names: Vec<String> = std::iter::once(format!("{base}_initialized"))
        .chain((1..=ctx.config.network.iterations).map(|k| format!("{base}_iteration{k}")))
        .collect();
    for name in &names {
        out.series_mut(name);
    }
    for &n in &ctx.config.network.n_list {
        info!("{base}: tracing N = {n}");
        let start = Instant::now();
        let d = ctx.design(n, rate)?;
        let wall = ctx.ms(start);
        for (k, &pe) in d.trace().iter().enumerate() {
            out.push(&names[k], row(n, &names[k], pe, k, wall)?);
        }
        out.cells.push(design_cell(ctx, n, &base, rate, &d)?);
    }
    Ok(())
}

fn oracle(ctx: &Context, spec: &SeriesConfig, out: &mut Outcome) -> Result<(), RunError> {
    for &rate in &spec.rates {
        let name = series_name(spec, format!("oracle_rate{rate}"));
        for &n in &ctx.config.network.n_list {
            info!("{name}: exhaustive search N = {n}");
            let start = Instant::now();
            let rates = vec![rate; n - 1];
            let best = brute_force_design(vec![ctx.observations.clone(); n], ctx.priors.clone(), &rates)?;
            let wall = ctx.ms(start);
            out.push(&name, row(n, &name, best.error, 0, wall)?);
            out.cells.push(Cell {
                n,
                series: name.clone(),
                rate: Some(rate),
                trace: Vec::new(),
                sweeps: Vec::new(),
                multiplications: Vec::new(),
                gap_to_linear: Some(best.error.log10() - ctx.linear_log10(n)?),
                monte_carlo: None,
                evaluated_tuples: Some(best.evaluated),
            });
        }
    }
    Ok(())
}

fn montecarlo(ctx: &Context, spec: &SeriesConfig, out: &mut Outcome) -> Result<(), RunError> {
    for &rate in &spec.rates {
        let name = series_name(spec, format!("montecarlo_rate{rate}"));
        for &n in &ctx.config.network.n_list {
            info!("{name}: simulating N = {n}");
            let start = Instant::now();
            let d = ctx.design(n, rate)?;
            let analytic = network_error(&d.network)?;
            let mc = monte_carlo_error(&d.network, spec.trials, ctx.config.network.seed)?;
            let wall = ctx.ms(start);
            out.push(&name, row(n, &name, mc.estimate, d.iterations.len(), wall)?);
            let mut cell = design_cell(ctx, n, &name, rate, &d)?;
            cell.monte_carlo = Some(MonteCarloCell {
                trials: mc.trials,
                errors: mc.errors,
                ci_low: mc.ci_low,
                ci_high: mc.ci_high,
                analytic_pe: analytic,
            });
            out.cells.push(cell);
        }
    }
    Ok(())
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Infeasible { cardinality, budget } => RunError::Infeasible(format!(
                "exhaustive search over {cardinality} decision-function tuples exceeds the budget of {budget}"
            )),
            CoreError::InvalidArgument(msg) => RunError::Config(msg),
            other => RunError::Invariant(other.to_string()),
        }
    }
}
