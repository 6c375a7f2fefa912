//! Probability primitives shared by every stage of the pipeline.
//!
//! All indices are zero-based: hypothesis `j` runs over `0..M`, observation
//! bins over `0..|X|` and messages over `0..|M_l|`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance for externally supplied PMFs (discretization carries truncation error).
pub const INGEST_TOLERANCE: f64 = 1e-9;
/// Tolerance for vectors and matrices produced internally.
pub const INTERNAL_TOLERANCE: f64 = 1e-10;
const PRIOR_TOLERANCE: f64 = 1e-12;

fn check_pmf(pmf: &[f64], tol: f64, what: &str) -> Result<()> {
    if pmf.is_empty() {
        return Err(Error::InvalidInput(format!("{what}: empty distribution")));
    }
    if let Some(bad) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidInput(format!("{what}: entry {bad} is not a probability")));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidInput(format!("{what}: masses sum to {total}")));
    }
    Ok(())
}

/// Prior probabilities of the `M` hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct Priors(Vec<f64>);

impl Priors {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least two hypotheses, got {}",
                weights.len()
            )));
        }
        check_pmf(&weights, PRIOR_TOLERANCE, "priors")?;
        Ok(Self(weights))
    }

    /// Equally likely hypotheses.
    pub fn uniform(hypotheses: usize) -> Result<Self> {
        Self::new(vec![1.0 / hypotheses as f64; hypotheses])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

/// Conditional PMFs `P(x | H_j)` over a finite observation alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteObservationModel {
    pmfs: Vec<Vec<f64>>,
}

impl DiscreteObservationModel {
    pub fn new(pmfs: Vec<Vec<f64>>) -> Result<Self> {
        Self::with_tolerance(pmfs, INGEST_TOLERANCE)
    }

    pub(crate) fn with_tolerance(pmfs: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        let Some(first) = pmfs.first() else {
            return Err(Error::InvalidInput("observation model has no hypotheses".into()));
        };
        let size = first.len();
        for (j, pmf) in pmfs.iter().enumerate() {
            if pmf.len() != size {
                return Err(Error::InvalidInput(format!(
                    "pmf of hypothesis {j} has {} bins, expected {size}",
                    pmf.len()
                )));
            }
            check_pmf(pmf, tol, &format!("pmf of hypothesis {j}"))?;
        }
        Ok(Self { pmfs })
    }

    pub fn hypotheses(&self) -> usize {
        self.pmfs.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.pmfs[0].len()
    }

    pub fn pmf(&self, hypothesis: usize) -> &[f64] {
        &self.pmfs[hypothesis]
    }

    pub fn pmfs(&self) -> &[Vec<f64>] {
        &self.pmfs
    }
}

/// Index assignment of one decision maker: `(observation, incoming message) -> outgoing message`.
///
/// Inputs are enumerated lexicographically, `y = x * in_msg + u`. The first
/// decision maker has `in_msg == 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionFunction {
    in_obs: usize,
    in_msg: usize,
    out_msg: usize,
    table: Vec<usize>,
}

impl DecisionFunction {
    pub fn new(in_obs: usize, in_msg: usize, out_msg: usize, table: Vec<usize>) -> Result<Self> {
        if in_obs == 0 || in_msg == 0 || out_msg == 0 {
            return Err(Error::InvalidInput("decision function alphabets must be non-empty".into()));
        }
        if table.len() != in_obs * in_msg {
            return Err(Error::InvalidInput(format!(
                "table has {} entries, expected {}",
                table.len(),
                in_obs * in_msg
            )));
        }
        if let Some(&m) = table.iter().find(|&&m| m >= out_msg) {
            return Err(Error::InvalidInput(format!(
                "output index {m} outside alphabet of size {out_msg}"
            )));
        }
        Ok(Self { in_obs, in_msg, out_msg, table })
    }

    /// Forwards the incoming message, clamped to the output alphabet.
    pub fn pass_through(in_obs: usize, in_msg: usize, out_msg: usize) -> Result<Self> {
        let table = (0..in_obs)
            .flat_map(|_| (0..in_msg).map(|u| u.min(out_msg.saturating_sub(1))))
            .collect();
        Self::new(in_obs, in_msg, out_msg, table)
    }

    /// Maps every input to the same message.
    pub fn constant(in_obs: usize, in_msg: usize, out_msg: usize, message: usize) -> Result<Self> {
        Self::new(in_obs, in_msg, out_msg, vec![message; in_obs * in_msg])
    }

    pub fn in_obs(&self) -> usize {
        self.in_obs
    }

    pub fn in_msg(&self) -> usize {
        self.in_msg
    }

    pub fn out_msg(&self) -> usize {
        self.out_msg
    }

    /// Number of composite inputs `|X| * |M_{l-1}|`.
    pub fn inputs(&self) -> usize {
        self.table.len()
    }

    pub fn input_index(&self, x: usize, u: usize) -> usize {
        x * self.in_msg + u
    }

    pub fn apply(&self, x: usize, u: usize) -> usize {
        self.table[self.input_index(x, u)]
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn assigned(&self, input: usize) -> usize {
        self.table[input]
    }

    pub(crate) fn assign(&mut self, input: usize, message: usize) {
        debug_assert!(message < self.out_msg);
        self.table[input] = message;
    }
}

/// Per-hypothesis column-stochastic transition matrices; entry `(m, n)` of
/// matrix `j` is `P_j(u_k = m | u_{k-1} = n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisMatrix {
    mats: Vec<DMatrix<f64>>,
}

impl HypothesisMatrix {
    pub fn new(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(Error::InvalidInput("no hypotheses".into()));
        };
        let shape = first.shape();
        for (j, m) in mats.iter().enumerate() {
            if m.shape() != shape {
                return Err(Error::InvalidInput(format!("matrix {j} has shape {:?}", m.shape())));
            }
            if m.iter().any(|p| !(0.0..=1.0 + INTERNAL_TOLERANCE).contains(p)) {
                return Err(Error::InvalidInput(format!("matrix {j} has entries outside [0, 1]")));
            }
            for (c, col) in m.column_iter().enumerate() {
                let s = col.sum();
                if (s - 1.0).abs() > INTERNAL_TOLERANCE {
                    return Err(Error::InvalidInput(format!(
                        "column {c} of matrix {j} sums to {s}"
                    )));
                }
            }
        }
        Ok(Self { mats })
    }

    pub fn identity(hypotheses: usize, size: usize) -> Self {
        Self { mats: vec![DMatrix::identity(size, size); hypotheses] }
    }

    pub fn hypotheses(&self) -> usize {
        self.mats.len()
    }

    pub fn rows(&self) -> usize {
        self.mats[0].nrows()
    }

    pub fn cols(&self) -> usize {
        self.mats[0].ncols()
    }

    pub fn get(&self, hypothesis: usize) -> &DMatrix<f64> {
        &self.mats[hypothesis]
    }

    /// `self × rhs` per hypothesis, i.e. apply `rhs` first.
    pub fn compose(&self, rhs: &HypothesisMatrix) -> Result<HypothesisMatrix> {
        if self.cols() != rhs.rows() || self.hypotheses() != rhs.hypotheses() {
            return Err(Error::InvalidNetwork(format!(
                "cannot compose {}x{} with {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        let mats = self.mats.iter().zip(&rhs.mats).map(|(a, b)| a * b).collect();
        HypothesisMatrix::new(mats)
    }

    pub fn max_abs_diff(&self, other: &HypothesisMatrix) -> f64 {
        self.mats
            .iter()
            .zip(&other.mats)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }
}

/// Per-hypothesis PMF of the messages on one link.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageDistribution {
    q: Vec<DVector<f64>>,
}

impl MessageDistribution {
    pub fn new(q: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = q.first() else {
            return Err(Error::InvalidInput("no hypotheses".into()));
        };
        let len = first.len();
        for (j, v) in q.iter().enumerate() {
            if v.len() != len {
                return Err(Error::InvalidInput(format!("vector {j} has length {}", v.len())));
            }
            check_pmf(v.as_slice(), INTERNAL_TOLERANCE, &format!("message pmf {j}"))?;
        }
        Ok(Self { q })
    }

    /// Every hypothesis puts all mass on `message`.
    pub fn degenerate(hypotheses: usize, size: usize, message: usize) -> Self {
        let mut v = DVector::zeros(size);
        v[message] = 1.0;
        Self { q: vec![v; hypotheses] }
    }

    pub fn hypotheses(&self) -> usize {
        self.q.len()
    }

    pub fn len(&self) -> usize {
        self.q[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.q[0].is_empty()
    }

    pub fn get(&self, hypothesis: usize) -> &DVector<f64> {
        &self.q[hypothesis]
    }

    pub fn propagate(&self, transition: &HypothesisMatrix) -> Result<MessageDistribution> {
        if transition.cols() != self.len() || transition.hypotheses() != self.hypotheses() {
            return Err(Error::InvalidNetwork(format!(
                "transition of width {} applied to {} messages",
                transition.cols(),
                self.len()
            )));
        }
        let q = self
            .q
            .iter()
            .enumerate()
            .map(|(j, v)| transition.get(j) * v)
            .collect();
        MessageDistribution::new(q)
    }

    pub fn max_abs_diff(&self, other: &MessageDistribution) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }
}

/// Minimum error probability `1 - Σ_z max_j π_j P(z | H_j)` of a MAP decision on `z`.
pub fn bayes_error(joint_pmfs: &[Vec<f64>], priors: &Priors) -> Result<f64> {
    if joint_pmfs.len() != priors.len() {
        return Err(Error::InvalidInput(format!(
            "{} pmfs for {} hypotheses",
            joint_pmfs.len(),
            priors.len()
        )));
    }
    let size = joint_pmfs[0].len();
    for (j, pmf) in joint_pmfs.iter().enumerate() {
        if pmf.len() != size {
            return Err(Error::InvalidInput(format!("pmf {j} has {} entries", pmf.len())));
        }
        check_pmf(pmf, INGEST_TOLERANCE, &format!("joint pmf {j}"))?;
    }
    let pi = priors.as_slice();
    let correct: f64 = (0..size)
        .map(|z| {
            joint_pmfs
                .iter()
                .zip(pi)
                .map(|(pmf, p)| p * pmf[z])
                .fold(0.0, f64::max)
        })
        .sum();
    Ok((1.0 - correct).clamp(0.0, 1.0))
}

/// MAP hypothesis for one outcome; ties go to the lowest index.
pub fn map_decision(likelihoods: &[f64], priors: &Priors) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (j, (l, p)) in likelihoods.iter().zip(priors.as_slice()).enumerate() {
        let score = l * p;
        if score > best_score {
            best = j;
            best_score = score;
        }
    }
    best
}
