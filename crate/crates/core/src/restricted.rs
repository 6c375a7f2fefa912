//! Design of a single DM against its restricted model.
//!
//! When DM `l` is redesigned with every other DM held fixed, the rest of the
//! chain collapses into two pieces: the composite input `y = (x_l, u_{l-1})`
//! with PMF `P_j(x_l) P_j(u_{l-1})`, and a hypothesis-dependent channel
//! `P^{l→N-1}_j` from `u_l` to the fusion center's incoming message. The
//! decision table is then improved one input at a time, keeping the message
//! PMF `q_j` current with rank-1 updates.

use crate::error::{Error, Result};
use crate::markov::{backward_products, forward_q};
use crate::model::{
    DecisionFunction, DiscreteObservationModel, HypothesisMatrix, MessageDistribution, Priors,
    INTERNAL_TOLERANCE,
};
use crate::network::TandemNetwork;

/// `Σ_y max_j π_j P_j(y) w_j` for the fusion center's own observation.
///
/// For two hypotheses the bins are pre-sorted by likelihood ratio so that
/// the sum over bins is a prefix/suffix split found by bisection.
#[derive(Debug, Clone)]
pub(crate) struct FusionKernel {
    weighted: Vec<Vec<f64>>,
    binary: Option<BinarySplit>,
}

#[derive(Debug, Clone)]
struct BinarySplit {
    a0: Vec<f64>,
    a1: Vec<f64>,
    prefix0: Vec<f64>,
    suffix1: Vec<f64>,
}

impl FusionKernel {
    pub(crate) fn new(obs: &DiscreteObservationModel, priors: &Priors) -> Self {
        let weighted: Vec<Vec<f64>> = (0..obs.hypotheses())
            .map(|j| obs.pmf(j).iter().map(|p| p * priors.as_slice()[j]).collect())
            .collect();
        let binary = (weighted.len() == 2).then(|| {
            let mut order: Vec<usize> = (0..weighted[0].len())
                .filter(|&y| weighted[0][y] > 0.0 || weighted[1][y] > 0.0)
                .collect();
            order.sort_by(|&p, &q| {
                let kp = weighted[1][p].atan2(weighted[0][p]);
                let kq = weighted[1][q].atan2(weighted[0][q]);
                kp.total_cmp(&kq).then(p.cmp(&q))
            });
            let a0: Vec<f64> = order.iter().map(|&y| weighted[0][y]).collect();
            let a1: Vec<f64> = order.iter().map(|&y| weighted[1][y]).collect();
            let mut prefix0 = vec![0.0; a0.len() + 1];
            for k in 0..a0.len() {
                prefix0[k + 1] = prefix0[k] + a0[k];
            }
            let mut suffix1 = vec![0.0; a1.len() + 1];
            for k in (0..a1.len()).rev() {
                suffix1[k] = suffix1[k + 1] + a1[k];
            }
            BinarySplit { a0, a1, prefix0, suffix1 }
        });
        Self { weighted, binary }
    }

    pub(crate) fn mass(&self, w: &[f64]) -> f64 {
        if let Some(b) = &self.binary {
            let (w0, w1) = (w[0], w[1]);
            let split = partition(&b.a0, &b.a1, w0, w1);
            return w0 * b.prefix0[split] + w1 * b.suffix1[split];
        }
        let bins = self.weighted[0].len();
        let mut total = 0.0;
        for y in 0..bins {
            let mut best = self.weighted[0][y] * w[0];
            for j in 1..self.weighted.len() {
                let v = self.weighted[j][y] * w[j];
                if v > best {
                    best = v;
                }
            }
            total += best;
        }
        total
    }
}

/// First sorted bin where hypothesis 1 strictly wins.
fn partition(a0: &[f64], a1: &[f64], w0: f64, w1: f64) -> usize {
    let (mut lo, mut hi) = (0, a0.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if a1[mid] * w1 > a0[mid] * w0 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Two-node equivalent of the chain for designing DM `l`.
#[derive(Debug, Clone)]
pub struct RestrictedModel {
    in_obs: usize,
    in_msg: usize,
    out_msg: usize,
    input_pmfs: Vec<Vec<f64>>,
    /// Per hypothesis, row-major `|M_{N-1}| x |M_l|`: `channel[j][m * out_msg + n]`.
    channel: Vec<Vec<f64>>,
    fc_messages: usize,
    fusion: FusionKernel,
}

impl RestrictedModel {
    /// `input_pmfs[j][x * in_msg + u]` is `P_j(y)` for the composite input.
    pub fn new(
        input_pmfs: Vec<Vec<f64>>,
        in_obs: usize,
        in_msg: usize,
        channel: &HypothesisMatrix,
        fusion_obs: &DiscreteObservationModel,
        priors: &Priors,
    ) -> Result<Self> {
        let hyp = priors.len();
        if input_pmfs.len() != hyp || channel.hypotheses() != hyp || fusion_obs.hypotheses() != hyp {
            return Err(Error::InvalidInput("hypothesis count mismatch in restricted model".into()));
        }
        for (j, pmf) in input_pmfs.iter().enumerate() {
            if pmf.len() != in_obs * in_msg {
                return Err(Error::InvalidInput(format!(
                    "input pmf {j} has {} entries, expected {}",
                    pmf.len(),
                    in_obs * in_msg
                )));
            }
            let s: f64 = pmf.iter().sum();
            if (s - 1.0).abs() > 1e-9 || pmf.iter().any(|p| *p < 0.0) {
                return Err(Error::InvalidInput(format!("input pmf {j} sums to {s}")));
            }
        }
        let out_msg = channel.cols();
        let fc_messages = channel.rows();
        let channel = (0..hyp)
            .map(|j| {
                let m = channel.get(j);
                let mut rows = Vec::with_capacity(fc_messages * out_msg);
                for r in 0..fc_messages {
                    for c in 0..out_msg {
                        rows.push(m[(r, c)]);
                    }
                }
                rows
            })
            .collect();
        Ok(Self {
            in_obs,
            in_msg,
            out_msg,
            input_pmfs,
            channel,
            fc_messages,
            fusion: FusionKernel::new(fusion_obs, priors),
        })
    }

    /// Restricted model of DM `l` with products and upstream PMFs computed fresh.
    pub fn from_network(network: &TandemNetwork, l: usize) -> Result<Self> {
        if l == 0 || l >= network.dms() {
            return Err(Error::InvalidArgument(format!(
                "DM {l} is not designable in a network of {} DMs (the fusion center applies MAP)",
                network.dms()
            )));
        }
        let products = backward_products(network)?;
        let upstream = if l == 1 {
            MessageDistribution::degenerate(network.hypotheses(), 1, 0)
        } else {
            forward_q(network, l - 1)?
        };
        Self::assemble(network, l, &products[l - 1], &upstream)
    }

    /// Restricted model of DM `l` from a precomputed channel `P^{l→N-1}` and `q^{l-1}`.
    pub fn assemble(
        network: &TandemNetwork,
        l: usize,
        channel: &HypothesisMatrix,
        upstream: &MessageDistribution,
    ) -> Result<Self> {
        let obs = network.observation(l);
        let in_msg = upstream.len();
        let input_pmfs = (0..network.hypotheses())
            .map(|j| {
                let q = upstream.get(j);
                obs.pmf(j)
                    .iter()
                    .flat_map(|&px| q.iter().map(move |&pu| px * pu))
                    .collect()
            })
            .collect();
        if channel.cols() != network.message_alphabet(l) {
            return Err(Error::InvalidNetwork(format!(
                "channel accepts {} messages, DM {l} emits {}",
                channel.cols(),
                network.message_alphabet(l)
            )));
        }
        Self::new(input_pmfs, obs.alphabet_size(), in_msg, channel, network.fusion_observation(), network.priors())
    }

    pub fn hypotheses(&self) -> usize {
        self.input_pmfs.len()
    }

    pub fn inputs(&self) -> usize {
        self.in_obs * self.in_msg
    }

    pub fn out_alphabet(&self) -> usize {
        self.out_msg
    }

    pub fn input_pmf(&self, hypothesis: usize) -> &[f64] {
        &self.input_pmfs[hypothesis]
    }

    /// Entry `(m, n)` of the channel under `H_j`.
    pub fn channel(&self, hypothesis: usize, m: usize, n: usize) -> f64 {
        self.channel[hypothesis][m * self.out_msg + n]
    }

    fn check_gamma(&self, gamma: &DecisionFunction) -> Result<()> {
        if gamma.in_obs() != self.in_obs || gamma.in_msg() != self.in_msg || gamma.out_msg() != self.out_msg {
            return Err(Error::InvalidInput(format!(
                "decision function shape {}x{}->{} does not fit restricted model {}x{}->{}",
                gamma.in_obs(),
                gamma.in_msg(),
                gamma.out_msg(),
                self.in_obs,
                self.in_msg,
                self.out_msg
            )));
        }
        Ok(())
    }

    /// `q_j(m) = Σ_{y: γ(y) = m} P_j(y)`, summed in input order.
    pub fn message_pmf(&self, gamma: &DecisionFunction) -> Vec<Vec<f64>> {
        self.input_pmfs
            .iter()
            .map(|pmf| {
                let mut q = vec![0.0; self.out_msg];
                for (y, p) in pmf.iter().enumerate() {
                    q[gamma.assigned(y)] += p;
                }
                q
            })
            .collect()
    }

    /// `⟨q_j, r_{j,m}⟩` for every hypothesis, laid out `[m * M + j]`.
    fn fc_message_mass(&self, q: &[Vec<f64>]) -> Vec<f64> {
        let hyp = self.hypotheses();
        let mut out = vec![0.0; self.fc_messages * hyp];
        for m in 0..self.fc_messages {
            for j in 0..hyp {
                let row = &self.channel[j][m * self.out_msg..(m + 1) * self.out_msg];
                out[m * hyp + j] = row.iter().zip(&q[j]).map(|(r, p)| r * p).sum();
            }
        }
        out
    }

    /// Probability of a correct fusion decision, `1 - P_E`, for message PMF `q`.
    pub fn success_probability(&self, q: &[Vec<f64>]) -> f64 {
        let hyp = self.hypotheses();
        let base = self.fc_message_mass(q);
        (0..self.fc_messages).map(|m| self.fusion.mass(&base[m * hyp..(m + 1) * hyp])).sum()
    }

    /// Error probability of the restricted model under `gamma`.
    pub fn error(&self, gamma: &DecisionFunction) -> Result<f64> {
        self.check_gamma(gamma)?;
        Ok((1.0 - self.success_probability(&self.message_pmf(gamma))).clamp(0.0, 1.0))
    }
}

/// Decision table under design together with its incrementally maintained
/// message PMF and error probability.
#[derive(Debug, Clone)]
pub struct DesignState {
    gamma: DecisionFunction,
    q: Vec<Vec<f64>>,
    error: f64,
}

impl DesignState {
    pub fn new(model: &RestrictedModel, gamma: DecisionFunction) -> Result<Self> {
        model.check_gamma(&gamma)?;
        let q = model.message_pmf(&gamma);
        let error = 1.0 - model.success_probability(&q);
        Ok(Self { gamma, q, error })
    }

    pub fn gamma(&self) -> &DecisionFunction {
        &self.gamma
    }

    pub fn into_gamma(self) -> DecisionFunction {
        self.gamma
    }

    /// Incrementally maintained `q_j`.
    pub fn q(&self) -> &[Vec<f64>] {
        &self.q
    }

    pub fn error(&self) -> f64 {
        self.error
    }

    /// Largest gap between the incremental `q` and one rebuilt from the table.
    pub fn q_drift(&self, model: &RestrictedModel) -> f64 {
        model
            .message_pmf(&self.gamma)
            .iter()
            .zip(&self.q)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Scratch space reused across inputs during a sweep.
struct Scorer {
    base: Vec<f64>,
    base_mass: Vec<f64>,
    w: Vec<f64>,
}

impl Scorer {
    fn new(model: &RestrictedModel) -> Self {
        let hyp = model.hypotheses();
        Self {
            base: vec![0.0; model.fc_messages * hyp],
            base_mass: vec![0.0; model.fc_messages],
            w: vec![0.0; hyp],
        }
    }

    /// Caches `⟨q_j, r_{j,m}⟩` and the per-row fusion mass for the current state.
    fn load(&mut self, model: &RestrictedModel, state: &DesignState) {
        let hyp = model.hypotheses();
        self.base = model.fc_message_mass(&state.q);
        for m in 0..model.fc_messages {
            self.base_mass[m] = model.fusion.mass(&self.base[m * hyp..(m + 1) * hyp]);
        }
    }

    /// Success probability if input `y` (currently at `from`) were assigned `to`.
    fn score(&mut self, model: &RestrictedModel, y: usize, from: usize, to: usize) -> f64 {
        let hyp = model.hypotheses();
        let mut total = 0.0;
        for m in 0..model.fc_messages {
            let mut changed = false;
            for j in 0..hyp {
                let row = &model.channel[j][m * model.out_msg..(m + 1) * model.out_msg];
                let delta = row[to] - row[from];
                let p = model.input_pmfs[j][y];
                self.w[j] = self.base[m * hyp + j] + p * delta;
                changed |= p != 0.0 && delta != 0.0;
            }
            total += if changed { model.fusion.mass(&self.w) } else { self.base_mass[m] };
        }
        total
    }
}

/// `1 - P_E` of the network in which input `y` is moved to `candidate`.
pub fn candidate_score(state: &DesignState, model: &RestrictedModel, y: usize, candidate: usize) -> f64 {
    let mut scorer = Scorer::new(model);
    scorer.load(model, state);
    scorer.score(model, y, state.gamma.assigned(y), candidate)
}

/// Reassigns input `y` to its best index, keeping the incumbent on ties and
/// otherwise preferring the lowest index. Returns whether the table changed.
pub fn reassign_input(state: &mut DesignState, model: &RestrictedModel, y: usize) -> bool {
    let mut scorer = Scorer::new(model);
    reassign_with(&mut scorer, state, model, y)
}

fn reassign_with(scorer: &mut Scorer, state: &mut DesignState, model: &RestrictedModel, y: usize) -> bool {
    if model.input_pmfs.iter().all(|pmf| pmf[y] == 0.0) {
        return false;
    }
    scorer.load(model, state);
    let current = state.gamma.assigned(y);
    let mut best = current;
    let mut best_score = scorer.base_mass.iter().sum::<f64>();
    for candidate in 0..model.out_msg {
        if candidate == current {
            continue;
        }
        let s = scorer.score(model, y, current, candidate);
        if s > best_score {
            best = candidate;
            best_score = s;
        }
    }
    state.error = 1.0 - best_score;
    if best == current {
        return false;
    }
    for (q, pmf) in state.q.iter_mut().zip(&model.input_pmfs) {
        q[current] -= pmf[y];
        q[best] += pmf[y];
    }
    state.gamma.assign(y, best);
    true
}

/// Outcome of designing one DM.
#[derive(Debug, Clone)]
pub struct DmDesign {
    pub gamma: DecisionFunction,
    pub initial_error: f64,
    pub error: f64,
    /// Number of full sweeps over the inputs (`T`).
    pub sweeps: usize,
    /// Error after each sweep.
    pub sweep_errors: Vec<f64>,
    /// Largest incremental-vs-rebuilt `q` discrepancy observed after any sweep.
    pub max_q_drift: f64,
}

/// Repeats lexicographic sweeps over all inputs until a sweep improves the
/// error by at most `eta`.
pub fn design_dm(model: &RestrictedModel, gamma_init: DecisionFunction, eta: f64) -> Result<DmDesign> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {eta}")));
    }
    let mut state = DesignState::new(model, gamma_init)?;
    let initial_error = state.error;
    let mut scorer = Scorer::new(model);
    let mut error = initial_error;
    let mut sweep_errors = Vec::new();
    let mut max_q_drift: f64 = 0.0;
    loop {
        for y in 0..model.inputs() {
            reassign_with(&mut scorer, &mut state, model, y);
        }
        let drift = state.q_drift(model);
        max_q_drift = max_q_drift.max(drift);
        debug_assert!(drift <= INTERNAL_TOLERANCE, "incremental q drifted by {drift}");
        let after = 1.0 - model.success_probability(&state.q);
        state.error = after;
        sweep_errors.push(after);
        let improvement = error - after;
        error = after;
        if improvement <= eta {
            break;
        }
    }
    Ok(DmDesign {
        gamma: state.gamma,
        initial_error,
        error,
        sweeps: sweep_errors.len(),
        sweep_errors,
        max_q_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pmf(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 0.01).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    fn toy_model(seed: u64, hyp: usize) -> RestrictedModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<Vec<f64>> = (0..hyp).map(|_| random_pmf(&mut rng, 4)).collect();
        let fc = DiscreteObservationModel::new((0..hyp).map(|_| random_pmf(&mut rng, 3)).collect()).unwrap();
        let mats = (0..hyp)
            .map(|_| {
                let cols: Vec<f64> = (0..2).flat_map(|_| random_pmf(&mut rng, 2)).collect();
                nalgebra::DMatrix::from_column_slice(2, 2, &cols)
            })
            .collect();
        let channel = HypothesisMatrix::new(mats).unwrap();
        RestrictedModel::new(inputs, 4, 1, &channel, &fc, &Priors::uniform(hyp).unwrap()).unwrap()
    }

    #[test]
    fn binary_kernel_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let obs = DiscreteObservationModel::new(vec![random_pmf(&mut rng, 50), random_pmf(&mut rng, 50)]).unwrap();
        let priors = Priors::new(vec![0.35, 0.65]).unwrap();
        let kernel = FusionKernel::new(&obs, &priors);
        for _ in 0..200 {
            let w = [rng.random::<f64>(), rng.random::<f64>()];
            let direct: f64 = (0..50)
                .map(|y| (0.35 * obs.pmf(0)[y] * w[0]).max(0.65 * obs.pmf(1)[y] * w[1]))
                .sum();
            assert_abs_diff_eq!(kernel.mass(&w), direct, epsilon = 1e-14);
        }
        assert_eq!(kernel.mass(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn incumbent_score_is_one_minus_error() {
        for hyp in [2, 3] {
            let model = toy_model(11, hyp);
            let gamma = DecisionFunction::new(4, 1, 2, vec![0, 1, 1, 0]).unwrap();
            let state = DesignState::new(&model, gamma).unwrap();
            for y in 0..4 {
                let s = candidate_score(&state, &model, y, state.gamma().assigned(y));
                assert_abs_diff_eq!(s + state.error(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn zero_mass_input_scores_equal() {
        let fc = DiscreteObservationModel::new(vec![vec![0.6, 0.4], vec![0.1, 0.9]]).unwrap();
        let inputs = vec![vec![0.5, 0.0, 0.5], vec![0.2, 0.0, 0.8]];
        let channel = HypothesisMatrix::identity(2, 2);
        let model = RestrictedModel::new(inputs, 3, 1, &channel, &fc, &Priors::uniform(2).unwrap()).unwrap();
        let state = DesignState::new(&model, DecisionFunction::new(3, 1, 2, vec![0, 0, 1]).unwrap()).unwrap();
        let a = candidate_score(&state, &model, 1, 0);
        let b = candidate_score(&state, &model, 1, 1);
        assert_eq!(a, b);
        let mut moved = state.clone();
        assert!(!reassign_input(&mut moved, &model, 1));
        assert_eq!(moved.gamma(), state.gamma());
    }

    #[test]
    fn single_input_becomes_degenerate() {
        let fc = DiscreteObservationModel::new(vec![vec![0.6, 0.4], vec![0.1, 0.9]]).unwrap();
        let channel = HypothesisMatrix::identity(2, 3);
        let model =
            RestrictedModel::new(vec![vec![1.0], vec![1.0]], 1, 1, &channel, &fc, &Priors::uniform(2).unwrap())
                .unwrap();
        let mut state = DesignState::new(&model, DecisionFunction::new(1, 1, 3, vec![2]).unwrap()).unwrap();
        reassign_input(&mut state, &model, 0);
        let m = state.gamma().assigned(0);
        for q in state.q() {
            for (k, v) in q.iter().enumerate() {
                assert_eq!(*v, if k == m { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn eta_one_means_single_sweep() {
        let model = toy_model(5, 2);
        let gamma = DecisionFunction::new(4, 1, 2, vec![0, 0, 0, 0]).unwrap();
        let d = design_dm(&model, gamma, 1.0).unwrap();
        assert_eq!(d.sweeps, 1);
        assert!(d.error <= d.initial_error + 1e-12);
    }

    #[test]
    fn fixed_point_returned_unchanged() {
        let model = toy_model(9, 3);
        let gamma = DecisionFunction::new(4, 1, 2, vec![1, 0, 1, 0]).unwrap();
        let first = design_dm(&model, gamma, 1e-9).unwrap();
        let again = design_dm(&model, first.gamma.clone(), 1e-9).unwrap();
        assert_eq!(again.sweeps, 1);
        assert_eq!(again.gamma, first.gamma);
    }

    #[test]
    fn rejects_nonpositive_threshold() {
        let model = toy_model(1, 2);
        let gamma = DecisionFunction::new(4, 1, 2, vec![0; 4]).unwrap();
        assert!(design_dm(&model, gamma.clone(), 0.0).is_err());
        assert!(design_dm(&model, gamma, f64::NAN).is_err());
    }

    #[test]
    fn fc_cannot_be_designed() {
        let obs = DiscreteObservationModel::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        let net = TandemNetwork::new(
            Priors::uniform(2).unwrap(),
            vec![obs.clone(), obs],
            vec![DecisionFunction::new(2, 1, 2, vec![0, 1]).unwrap()],
        )
        .unwrap();
        assert!(matches!(RestrictedModel::from_network(&net, 2), Err(Error::InvalidArgument(_))));
        let model = RestrictedModel::from_network(&net, 1).unwrap();
        assert_eq!(model.inputs(), 2);
        assert_eq!(model.channel(0, 1, 1), 1.0);
        assert_eq!(model.channel(1, 0, 1), 0.0);
    }
}
