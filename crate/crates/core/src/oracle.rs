//! Independent ground truth for tiny instances: exhaustive search over all
//! decision tables, and Monte Carlo simulation of a fixed network.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::markov::{fc_joint_pmf, forward_q, network_error};
use crate::model::{map_decision, DecisionFunction, DiscreteObservationModel, MessageDistribution, Priors};
use crate::network::TandemNetwork;

/// Largest number of decision-function tuples [`brute_force_design`] will enumerate.
pub const SEARCH_BUDGET: u128 = 10_000_000;

/// Two-sided 99% standard normal quantile.
const Z_99: f64 = 2.575_829_303_548_900_4;

/// Trials per independently seeded shard.
const SHARD_TRIALS: u64 = 1 << 16;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub error: f64,
    pub network: TandemNetwork,
    /// Number of decision-function tuples evaluated.
    pub evaluated: u128,
}

/// Number of decision-function tuples for the given alphabets.
pub fn search_cardinality(observations: &[DiscreteObservationModel], rates: &[u32]) -> u128 {
    let mut total: u128 = 1;
    let mut in_msg: u128 = 1;
    for (l, &r) in rates.iter().enumerate() {
        let out = 1u128 << r;
        let inputs = observations[l].alphabet_size() as u128 * in_msg;
        let per_dm = u32::try_from(inputs)
            .ok()
            .and_then(|e| out.checked_pow(e))
            .unwrap_or(u128::MAX);
        total = total.saturating_mul(per_dm);
        in_msg = out;
    }
    total
}

/// Global optimum over all decision tables of DMs `1..N-1`.
pub fn brute_force_design(
    observations: Vec<DiscreteObservationModel>,
    priors: Priors,
    rates: &[u32],
) -> Result<BruteForceResult> {
    if rates.len() + 1 != observations.len() {
        return Err(Error::InvalidArgument(format!(
            "{} DMs need {} rates, got {}",
            observations.len(),
            observations.len() - 1,
            rates.len()
        )));
    }
    let cardinality = search_cardinality(&observations, rates);
    if cardinality > SEARCH_BUDGET {
        return Err(Error::Infeasible { cardinality, budget: SEARCH_BUDGET });
    }
    let mut shapes = Vec::with_capacity(rates.len());
    let mut in_msg = 1;
    for (l, &r) in rates.iter().enumerate() {
        let out = 1usize << r;
        shapes.push((observations[l].alphabet_size(), in_msg, out));
        in_msg = out;
    }
    let decisions = shapes
        .iter()
        .map(|&(x, u, v)| DecisionFunction::constant(x, u, v, 0))
        .collect::<Result<Vec<_>>>()?;
    let mut tables: Vec<Vec<usize>> = decisions.iter().map(|d| d.table().to_vec()).collect();
    let mut network = TandemNetwork::new(priors, observations, decisions)?;

    let mut best = network.clone();
    let mut best_error = network_error(&network)?;
    let mut evaluated = 1;
    // odometer over all table entries, DM 1 least significant
    'search: loop {
        let mut dm = 0;
        loop {
            if dm == tables.len() {
                break 'search;
            }
            let out = shapes[dm].2;
            let t = &mut tables[dm];
            let mut carry = true;
            for digit in t.iter_mut() {
                *digit += 1;
                if *digit < out {
                    carry = false;
                    break;
                }
                *digit = 0;
            }
            let (x, u, v) = shapes[dm];
            network.set_decision(dm + 1, DecisionFunction::new(x, u, v, t.clone())?)?;
            if !carry {
                break;
            }
            dm += 1;
        }
        let e = network_error(&network)?;
        evaluated += 1;
        if e < best_error {
            best_error = e;
            best = network.clone();
        }
    }
    Ok(BruteForceResult { error: best_error, network: best, evaluated })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub trials: u64,
    pub errors: u64,
    pub estimate: f64,
    /// Wilson score 99% interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

impl MonteCarloEstimate {
    pub fn contains(&self, p: f64) -> bool {
        (self.ci_low..=self.ci_high).contains(&p)
    }
}

fn wilson(errors: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z_99 * Z_99;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_99 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Simulates the network: draws `H` from the priors, each `x_l` from the
/// binned PMFs, runs the decision tables forward and fuses by MAP.
///
/// Trials are split into shards of 65536; shard `k` uses
/// `ChaCha8Rng::seed_from_u64(seed)` on stream `k`, so results do not depend
/// on how shards are scheduled.
pub fn monte_carlo_error(network: &TandemNetwork, trials: u64, seed: u64) -> Result<MonteCarloEstimate> {
    if trials < 10_000 {
        return Err(Error::InvalidArgument(format!("need at least 10^4 trials, got {trials}")));
    }
    let n = network.dms();
    let hyp = network.hypotheses();
    let q = if n == 1 {
        MessageDistribution::degenerate(hyp, 1, 0)
    } else {
        forward_q(network, n - 1)?
    };
    let fc_messages = q.len();
    let joint = fc_joint_pmf(&q, network.fusion_observation())?;
    let fusion: Vec<usize> = (0..joint[0].len())
        .map(|z| {
            let scores: Vec<f64> = joint.iter().map(|pmf| pmf[z]).collect();
            map_decision(&scores, network.priors())
        })
        .collect();
    let hypothesis = WeightedAliasIndex::new(network.priors().as_slice().to_vec())
        .map_err(|e| Error::InvalidInput(format!("priors: {e}")))?;
    let samplers = (1..=n)
        .map(|l| {
            (0..hyp)
                .map(|j| {
                    WeightedAliasIndex::new(network.observation(l).pmf(j).to_vec())
                        .map_err(|e| Error::InvalidInput(format!("DM {l}, hypothesis {j}: {e}")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut errors = 0u64;
    let shards = trials.div_ceil(SHARD_TRIALS);
    for shard in 0..shards {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shard);
        let count = SHARD_TRIALS.min(trials - shard * SHARD_TRIALS);
        for _ in 0..count {
            let h = hypothesis.sample(&mut rng);
            let mut u = 0;
            for l in 1..n {
                let x = samplers[l - 1][h].sample(&mut rng);
                u = network.decision(l).apply(x, u);
            }
            let x = samplers[n - 1][h].sample(&mut rng);
            if fusion[x * fc_messages + u] != h {
                errors += 1;
            }
        }
    }
    let (ci_low, ci_high) = wilson(errors, trials);
    Ok(MonteCarloEstimate {
        trials,
        errors,
        estimate: errors as f64 / trials as f64,
        ci_low,
        ci_high,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cardinality_and_refusal() {
        let obs = DiscreteObservationModel::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        assert_eq!(search_cardinality(&[obs.clone(), obs.clone()], &[1]), 4);
        assert_eq!(search_cardinality(&[obs.clone(), obs.clone(), obs.clone()], &[1, 1]), 4 * 16);
        let big = DiscreteObservationModel::new(vec![vec![1.0 / 64.0; 64]; 2]).unwrap();
        let err = brute_force_design(vec![big.clone(), big.clone(), big], Priors::uniform(2).unwrap(), &[2, 2])
            .unwrap_err();
        assert!(matches!(err, Error::Infeasible { budget: SEARCH_BUDGET, .. }));
    }

    #[test]
    fn single_dm_needs_no_search() {
        let obs = DiscreteObservationModel::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        let r = brute_force_design(vec![obs], Priors::uniform(2).unwrap(), &[]).unwrap();
        assert_eq!(r.evaluated, 1);
        assert!((r.error - (1.0 - 0.5 * (0.5 + 0.8))).abs() < 1e-15);
    }

    #[test]
    fn enumerates_every_tuple() {
        let obs = DiscreteObservationModel::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        let r = brute_force_design(vec![obs.clone(), obs.clone(), obs], Priors::uniform(2).unwrap(), &[1, 1])
            .unwrap();
        assert_eq!(r.evaluated, 64);
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson(500, 10_000);
        assert!(lo < 0.05 && hi > 0.05);
        let (lo, hi) = wilson(0, 10_000);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 1e-3);
    }

    #[test]
    fn too_few_trials() {
        let obs = DiscreteObservationModel::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        let net = TandemNetwork::new(Priors::uniform(2).unwrap(), vec![obs], vec![]).unwrap();
        assert!(monte_carlo_error(&net, 9_999, 0).is_err());
    }
}
