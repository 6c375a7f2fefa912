//! Message statistics along the chain.
//!
//! Conditioned on the hypothesis, the messages `u_1, ..., u_{N-1}` form a
//! Markov chain. Each DM contributes a transition matrix built from its
//! decision table, and the distribution seen by the fusion center follows
//! from products of those matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{
    bayes_error, DecisionFunction, DiscreteObservationModel, HypothesisMatrix, MessageDistribution,
};
use crate::network::TandemNetwork;

/// Transition matrices of one DM: entry `(m, n)` under `H_j` is the mass of
/// all observations `x` with `γ(x, n) = m`.
pub fn dm_transition_matrix(
    gamma: &DecisionFunction,
    obs: &DiscreteObservationModel,
) -> Result<HypothesisMatrix> {
    if gamma.in_obs() != obs.alphabet_size() {
        return Err(Error::InvalidInput(format!(
            "decision table covers {} observations, model has {}",
            gamma.in_obs(),
            obs.alphabet_size()
        )));
    }
    let mats = (0..obs.hypotheses())
        .map(|j| {
            let pmf = obs.pmf(j);
            let mut m = DMatrix::zeros(gamma.out_msg(), gamma.in_msg());
            for (x, &p) in pmf.iter().enumerate() {
                for n in 0..gamma.in_msg() {
                    m[(gamma.apply(x, n), n)] += p;
                }
            }
            m
        })
        .collect();
    HypothesisMatrix::new(mats)
}

/// `P^{l→N-1}_j` for `l = 1..N-1`; element `l-1` holds the product for DM `l`.
///
/// Built by the descending recursion `P^{l→N-1} = P^{l+1→N-1} × P^{l+1}`
/// starting from the identity at `l = N-1`.
pub fn backward_products(network: &TandemNetwork) -> Result<Vec<HypothesisMatrix>> {
    let n = network.dms();
    if n < 2 {
        return Ok(Vec::new());
    }
    let mut out = vec![HypothesisMatrix::identity(network.hypotheses(), network.message_alphabet(n - 1))];
    for l in (1..n - 1).rev() {
        let step = dm_transition_matrix(network.decision(l + 1), network.observation(l + 1))?;
        if step.cols() != network.message_alphabet(l) {
            return Err(Error::InvalidNetwork(format!(
                "DM {} expects {} messages, DM {l} emits {}",
                l + 1,
                step.cols(),
                network.message_alphabet(l)
            )));
        }
        let next = out.last().expect("seeded").compose(&step)?;
        out.push(next);
    }
    out.reverse();
    Ok(out)
}

/// Message distribution on the link out of DM `up_to`, `1 <= up_to <= N-1`.
pub fn forward_q(network: &TandemNetwork, up_to: usize) -> Result<MessageDistribution> {
    if up_to == 0 || up_to >= network.dms() {
        return Err(Error::InvalidArgument(format!(
            "no outgoing link at DM {up_to} in a network of {} DMs",
            network.dms()
        )));
    }
    let mut q = MessageDistribution::degenerate(network.hypotheses(), 1, 0);
    for k in 1..=up_to {
        q = q.propagate(&dm_transition_matrix(network.decision(k), network.observation(k))?)?;
    }
    Ok(q)
}

/// Joint PMFs of the fusion-center input `z = (x_N, u_{N-1})`, indexed
/// `z = x * |M_{N-1}| + u`.
pub fn fc_joint_pmf(q: &MessageDistribution, obs: &DiscreteObservationModel) -> Result<Vec<Vec<f64>>> {
    if q.hypotheses() != obs.hypotheses() {
        return Err(Error::InvalidInput("hypothesis count mismatch".into()));
    }
    Ok((0..obs.hypotheses())
        .map(|j| {
            let qj: &DVector<f64> = q.get(j);
            obs.pmf(j)
                .iter()
                .flat_map(|&px| qj.iter().map(move |&pu| px * pu))
                .collect()
        })
        .collect())
}

/// Error probability of the network with a MAP fusion center.
pub fn network_error(network: &TandemNetwork) -> Result<f64> {
    let n = network.dms();
    let q = if n == 1 {
        MessageDistribution::degenerate(network.hypotheses(), 1, 0)
    } else {
        forward_q(network, n - 1)?
    };
    let joint = fc_joint_pmf(&q, network.fusion_observation())?;
    bayes_error(&joint, network.priors())
}
