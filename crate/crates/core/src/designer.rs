//! Cyclic person-by-person design of every DM in the chain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::markov::{backward_products, dm_transition_matrix, network_error};
use crate::model::{DecisionFunction, DiscreteObservationModel, MessageDistribution, Priors};
use crate::network::TandemNetwork;
use crate::restricted::{design_dm, RestrictedModel};

/// Outer iterations stop early once a full cycle improves less than this.
pub const EARLY_STOP_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignConfig {
    /// Number of DMs `N`, fusion center included.
    pub dms: usize,
    /// Link rates in bits, one per link `1..N-1`; `|M_l| = 2^{R_l}`.
    pub rates: Vec<u32>,
    /// Outer iterations `K`.
    pub iterations: usize,
    /// Inner per-sweep improvement threshold.
    pub eta: f64,
    /// Seed for the random table of DM 1.
    pub seed: u64,
    /// Stop before `K` iterations when a cycle improves less than [`EARLY_STOP_THRESHOLD`].
    pub early_stop: bool,
    pub initialization: Initialization,
}

/// How DM 1's table is drawn before the first design cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Initialization {
    /// One seeded random index for every bin: the first message carries no
    /// information, so the initial error equals the fusion center's own.
    #[default]
    Uninformative,
    /// An independent seeded random index per bin.
    RandomTable,
}

impl DesignConfig {
    /// Equal rates on all links, `K = 3`, `eta = 1e-6`.
    pub fn uniform(dms: usize, rate: u32, seed: u64) -> Self {
        Self {
            dms,
            rates: vec![rate; dms.saturating_sub(1)],
            iterations: 3,
            eta: 1e-6,
            seed,
            early_stop: false,
            initialization: Initialization::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dms == 0 {
            return Err(Error::InvalidArgument("need at least one DM".into()));
        }
        if self.rates.len() + 1 != self.dms {
            return Err(Error::InvalidArgument(format!(
                "{} DMs need {} link rates, got {}",
                self.dms,
                self.dms - 1,
                self.rates.len()
            )));
        }
        if let Some(r) = self.rates.iter().find(|&&r| !(1..=16).contains(&r)) {
            return Err(Error::InvalidArgument(format!("rate {r} outside 1..=16 bits")));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("need at least one outer iteration".into()));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidArgument(format!("eta must be positive, got {}", self.eta)));
        }
        Ok(())
    }

    pub fn alphabet(&self, link: usize) -> usize {
        1usize << self.rates[link - 1]
    }
}

/// Pass-through chain with a seeded random table at DM 1.
///
/// DM 1 draws its indices uniformly with `ChaCha8Rng::seed_from_u64(seed)`
/// (see [`Initialization`]). Intermediate DMs forward `u`, clamped to their own
/// alphabet when rates shrink along the chain.
pub fn initialize_network(
    config: &DesignConfig,
    observations: Vec<DiscreteObservationModel>,
    priors: Priors,
) -> Result<TandemNetwork> {
    config.validate()?;
    if observations.len() != config.dms {
        return Err(Error::InvalidArgument(format!(
            "{} observation models for {} DMs",
            observations.len(),
            config.dms
        )));
    }
    let mut decisions = Vec::with_capacity(config.dms.saturating_sub(1));
    if config.dms > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let out = config.alphabet(1);
        let bins = observations[0].alphabet_size();
        let table = match config.initialization {
            Initialization::Uninformative => vec![rng.random_range(0..out); bins],
            Initialization::RandomTable => (0..bins).map(|_| rng.random_range(0..out)).collect(),
        };
        decisions.push(DecisionFunction::new(bins, 1, out, table)?);
        for l in 2..config.dms {
            decisions.push(DecisionFunction::pass_through(
                observations[l - 1].alphabet_size(),
                config.alphabet(l - 1),
                config.alphabet(l),
            )?);
        }
    }
    TandemNetwork::new(priors, observations, decisions)
}

/// Statistics of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    /// Network error after each DM `1..N-1` was redesigned.
    pub dm_errors: Vec<f64>,
    /// Inner sweep count `T` for each DM.
    pub sweeps: Vec<usize>,
    /// Largest incremental `q` discrepancy seen in any DM.
    pub max_q_drift: f64,
    /// Network error at the end of the cycle.
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct NetworkDesign {
    pub network: TandemNetwork,
    pub initial_error: f64,
    pub iterations: Vec<IterationReport>,
}

impl NetworkDesign {
    /// Initial error followed by the error after each outer iteration.
    pub fn trace(&self) -> Vec<f64> {
        std::iter::once(self.initial_error)
            .chain(self.iterations.iter().map(|it| it.error))
            .collect()
    }

    pub fn error(&self) -> f64 {
        self.iterations.last().map_or(self.initial_error, |it| it.error)
    }

    pub fn max_sweeps(&self) -> usize {
        self.iterations.iter().flat_map(|it| it.sweeps.iter().copied()).max().unwrap_or(0)
    }
}

/// Initializes the chain and runs `K` cycles of DM-by-DM redesign.
pub fn design_network(
    config: &DesignConfig,
    observations: Vec<DiscreteObservationModel>,
    priors: Priors,
) -> Result<NetworkDesign> {
    let network = initialize_network(config, observations, priors)?;
    improve_network(config, network)
}

/// Runs the design cycles starting from an arbitrary network.
pub fn improve_network(config: &DesignConfig, mut network: TandemNetwork) -> Result<NetworkDesign> {
    config.validate()?;
    let initial_error = network_error(&network)?;
    let mut iterations = Vec::new();
    let n = network.dms();
    if n < 2 {
        return Ok(NetworkDesign { network, initial_error, iterations });
    }
    let mut previous = initial_error;
    for _ in 0..config.iterations {
        let report = design_cycle(&mut network, config.eta)?;
        let improvement = previous - report.error;
        previous = report.error;
        iterations.push(report);
        if config.early_stop && improvement < EARLY_STOP_THRESHOLD {
            break;
        }
    }
    Ok(NetworkDesign { network, initial_error, iterations })
}

/// One outer iteration: refresh `P^{l→N-1}` by the descending recursion,
/// then redesign DMs `1..N-1` in order, propagating `q^l` forward.
///
/// The products for DM `l` depend only on DMs `l+1..N-1`, which are still
/// unchanged when DM `l` is redesigned, so each channel is exact.
pub fn design_cycle(network: &mut TandemNetwork, eta: f64) -> Result<IterationReport> {
    let n = network.dms();
    let products = backward_products(network)?;
    let mut upstream = MessageDistribution::degenerate(network.hypotheses(), 1, 0);
    let mut dm_errors = Vec::with_capacity(n - 1);
    let mut sweeps = Vec::with_capacity(n - 1);
    let mut max_q_drift: f64 = 0.0;
    for l in 1..n {
        let model = RestrictedModel::assemble(network, l, &products[l - 1], &upstream)?;
        let design = design_dm(&model, network.decision(l).clone(), eta)?;
        network.set_decision(l, design.gamma)?;
        dm_errors.push(design.error);
        sweeps.push(design.sweeps);
        max_q_drift = max_q_drift.max(design.max_q_drift);
        let step = dm_transition_matrix(network.decision(l), network.observation(l))?;
        upstream = upstream.propagate(&step)?;
    }
    let error = network_error(network)?;
    Ok(IterationReport { dm_errors, sweeps, max_q_drift, error })
}

/// Multiplication counts for one outer iteration with equal alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiplicationCount {
    /// Full count including the backward products and forward propagation.
    pub exact: u128,
    /// Leading term `N M T |X|^2 |M|^4`.
    pub approx: u128,
}

/// Counts multiplications of one outer iteration for `dms` DMs, `hypotheses`
/// hypotheses, `|X| = bins`, `|M| = messages` and `sweeps` inner sweeps per DM.
pub fn multiplication_count(
    dms: usize,
    hypotheses: usize,
    bins: usize,
    messages: usize,
    sweeps: usize,
) -> MultiplicationCount {
    let (n, m, x, v, t) = (dms as u128, hypotheses as u128, bins as u128, messages as u128, sweeps as u128);
    if n < 2 {
        return MultiplicationCount { exact: 0, approx: n * m * t * x * x * v.pow(4) };
    }
    let inner = 2 * (1 + t) * m * x * v + 3 * m * t * x * x * v.pow(3) + m * t * x * x * v.pow(4);
    let exact = (n - 2) * m * v.pow(3) + (n - 2) * m * v.pow(2) + (n - 1) * inner;
    MultiplicationCount { exact, approx: n * m * t * x * x * v.pow(4) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs() -> DiscreteObservationModel {
        DiscreteObservationModel::new(vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.3, 0.6]]).unwrap()
    }

    #[test]
    fn config_validation() {
        let mut c = DesignConfig::uniform(3, 2, 0);
        assert!(c.validate().is_ok());
        c.eta = 0.0;
        assert!(c.validate().is_err());
        let mut c = DesignConfig::uniform(3, 2, 0);
        c.iterations = 0;
        assert!(c.validate().is_err());
        let mut c = DesignConfig::uniform(3, 2, 0);
        c.rates = vec![0, 1];
        assert!(c.validate().is_err());
        c.rates = vec![1];
        assert!(c.validate().is_err());
    }

    #[test]
    fn intermediate_dms_start_as_identity() {
        let net = initialize_network(&DesignConfig::uniform(3, 2, 7), vec![obs(); 3], Priors::uniform(2).unwrap())
            .unwrap();
        let p = dm_transition_matrix(net.decision(2), net.observation(2)).unwrap();
        assert_eq!(p, crate::model::HypothesisMatrix::identity(2, 4));
    }

    #[test]
    fn shrinking_rates_clamp_pass_through() {
        let mut c = DesignConfig::uniform(3, 2, 1);
        c.rates = vec![2, 1];
        let net = initialize_network(&c, vec![obs(); 3], Priors::uniform(2).unwrap()).unwrap();
        assert_eq!(net.decision(2).apply(0, 3), 1);
        assert_eq!(net.decision(2).apply(2, 0), 0);
    }

    #[test]
    fn single_dm_has_nothing_to_design() {
        let d = design_network(&DesignConfig::uniform(1, 1, 0), vec![obs()], Priors::uniform(2).unwrap()).unwrap();
        assert!(d.iterations.is_empty());
        assert!((d.error() - (1.0 - 0.5 * (0.5 + 0.3 + 0.6))).abs() < 1e-15);
    }

    #[test]
    fn multiplication_count_terms() {
        let c = multiplication_count(20, 2, 128, 8, 4);
        assert_eq!(c.approx, 2 * 20 * 4 * 128 * 128 * 4096);
        assert!(c.exact >= c.approx);
        assert_eq!(multiplication_count(40, 2, 128, 8, 4).approx, 2 * c.approx);
        // with N = 2 the backward-product loop contributes nothing
        let two = multiplication_count(2, 2, 16, 4, 1);
        let inner = 2 * 2 * 2 * 16 * 4 + 3 * 2 * 16 * 16 * 64 + 2 * 16 * 16 * 256;
        assert_eq!(two.exact, inner);
        for n in 2..30 {
            let c = multiplication_count(n, 3, 64, 8, 3);
            assert!(c.exact >= (n as u128 - 1) * 3 * 3 * 64 * 64 * 4096);
        }
    }
}
