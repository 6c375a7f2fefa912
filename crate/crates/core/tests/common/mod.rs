//! Random instances and independent reference computations shared by the
//! integration tests. The references use plain nested vectors and loops,
//! never the library's matrix code.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tandem_core::{DecisionFunction, DiscreteObservationModel, Priors, TandemNetwork};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_pmf(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 0.02).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

pub fn random_model(rng: &mut ChaCha8Rng, hypotheses: usize, bins: usize) -> DiscreteObservationModel {
    DiscreteObservationModel::new((0..hypotheses).map(|_| random_pmf(rng, bins)).collect()).unwrap()
}

pub fn random_priors(rng: &mut ChaCha8Rng, hypotheses: usize) -> Priors {
    Priors::new(random_pmf(rng, hypotheses)).unwrap()
}

/// Network with independent random models and random decision tables.
pub fn random_network(
    rng: &mut ChaCha8Rng,
    hypotheses: usize,
    bins: usize,
    rates: &[u32],
) -> TandemNetwork {
    let n = rates.len() + 1;
    let observations: Vec<_> = (0..n).map(|_| random_model(rng, hypotheses, bins)).collect();
    let mut decisions = Vec::new();
    let mut in_msg = 1;
    for &r in rates {
        let out = 1usize << r;
        let table = (0..bins * in_msg).map(|_| rng.random_range(0..out)).collect();
        decisions.push(DecisionFunction::new(bins, in_msg, out, table).unwrap());
        in_msg = out;
    }
    TandemNetwork::new(random_priors(rng, hypotheses), observations, decisions).unwrap()
}

pub type Mat = Vec<Vec<f64>>;

/// `P_j(u_l = m | u_{l-1} = n)` by direct summation over the table.
pub fn naive_transition(net: &TandemNetwork, l: usize, j: usize) -> Mat {
    let g = net.decision(l);
    let pmf = net.observation(l).pmf(j);
    let mut m = vec![vec![0.0; g.in_msg()]; g.out_msg()];
    for n in 0..g.in_msg() {
        for (x, p) in pmf.iter().enumerate() {
            m[g.apply(x, n)][n] += p;
        }
    }
    m
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|c| (0..inner).map(|k| row[k] * b[k][c]).sum())
                .collect()
        })
        .collect()
}

/// `P^{N-1} × P^{N-2} × ... × P^{l+1}` multiplied left to right.
pub fn naive_product(net: &TandemNetwork, l: usize, j: usize) -> Mat {
    let n = net.dms();
    let size = net.message_alphabet(n - 1);
    let mut acc: Mat = (0..size).map(|r| (0..size).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect();
    for k in (l + 1..n).rev() {
        acc = matmul(&acc, &naive_transition(net, k, j));
    }
    acc
}

/// Error probability by enumerating every joint observation and running
/// the chain and MAP fusion explicitly. Exponential in `N`; tiny networks only.
pub fn enumerated_error(net: &TandemNetwork) -> f64 {
    let n = net.dms();
    let hyp = net.hypotheses();
    let sizes: Vec<usize> = (1..=n).map(|l| net.observation(l).alphabet_size()).collect();
    let fc_msgs = if n == 1 { 1 } else { net.message_alphabet(n - 1) };
    let fc_bins = sizes[n - 1];
    // joint[j][x_N * fc_msgs + u]
    let mut joint = vec![vec![0.0; fc_bins * fc_msgs]; hyp];
    let mut xs = vec![0usize; n - 1];
    loop {
        let mut u = 0;
        for l in 1..n {
            u = net.decision(l).apply(xs[l - 1], u);
        }
        for (j, row) in joint.iter_mut().enumerate() {
            let p: f64 = (1..n).map(|l| net.observation(l).pmf(j)[xs[l - 1]]).product();
            for x in 0..fc_bins {
                row[x * fc_msgs + u] += p * net.fusion_observation().pmf(j)[x];
            }
        }
        let mut k = 0;
        loop {
            if k == xs.len() {
                let pri = net.priors().as_slice();
                let correct: f64 = (0..fc_bins * fc_msgs)
                    .map(|z| (0..hyp).map(|j| pri[j] * joint[j][z]).fold(f64::MIN, f64::max))
                    .sum();
                return 1.0 - correct;
            }
            xs[k] += 1;
            if xs[k] < sizes[k] {
                break;
            }
            xs[k] = 0;
            k += 1;
        }
    }
}
