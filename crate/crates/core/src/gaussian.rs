//! Binned Gaussian observation models: `M` equally spaced means on
//! `[-a, a]` in white Gaussian noise, quantized into uniform bins.

use log::warn;

use crate::baselines::q_tail;
use crate::error::{Error, Result};
use crate::model::DiscreteObservationModel;

pub const DEFAULT_BINS: usize = 128;
pub const DEFAULT_PAD: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    pub hypotheses: usize,
    pub amplitude: f64,
    pub sigma: f64,
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
}

impl GaussianSpec {
    /// Unit noise, `bins` bins over `[-a - pad, a + pad]`.
    pub fn padded(hypotheses: usize, amplitude: f64, bins: usize, pad: f64) -> Self {
        Self {
            hypotheses,
            amplitude,
            sigma: 1.0,
            bins,
            lo: -amplitude - pad,
            hi: amplitude + pad,
        }
    }

    /// 128 bins over `[-a - 4, a + 4]` at the given per-DM SNR in dB.
    pub fn at_snr(hypotheses: usize, snr_db: f64) -> Self {
        Self::padded(hypotheses, snr_to_amplitude(snr_db), DEFAULT_BINS, DEFAULT_PAD)
    }

    pub fn validate(&self) -> Result<()> {
        if self.hypotheses < 2 {
            return Err(Error::InvalidArgument(format!("need M >= 2, got {}", self.hypotheses)));
        }
        if !(self.amplitude > 0.0) || !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument("amplitude and sigma must be positive".into()));
        }
        if self.bins < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 bins, got {}", self.bins)));
        }
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidArgument(format!("bad interval [{}, {}]", self.lo, self.hi)));
        }
        Ok(())
    }

    pub fn means(&self) -> Vec<f64> {
        signal_set(self.hypotheses, self.amplitude)
    }

    fn edge(&self, b: usize) -> f64 {
        self.lo + (self.hi - self.lo) * b as f64 / self.bins as f64
    }

    fn raw_masses(&self, mean: f64) -> Vec<f64> {
        (0..self.bins)
            .map(|b| interval_mass((self.edge(b) - mean) / self.sigma, (self.edge(b + 1) - mean) / self.sigma))
            .collect()
    }

    /// Gaussian mass inside `[lo, hi]` for each hypothesis, before renormalization.
    pub fn captured_mass(&self) -> Vec<f64> {
        self.means()
            .iter()
            .map(|&s| interval_mass((self.lo - s) / self.sigma, (self.hi - s) / self.sigma))
            .collect()
    }
}

/// `P(z1 < Z < z2)`, evaluated on whichever side keeps the terms small.
fn interval_mass(z1: f64, z2: f64) -> f64 {
    if z1 >= 0.0 {
        q_tail(z1) - q_tail(z2)
    } else if z2 <= 0.0 {
        q_tail(-z2) - q_tail(-z1)
    } else {
        1.0 - q_tail(z2) - q_tail(-z1)
    }
}

/// `M` equally spaced points from `-a` to `a`.
pub fn signal_set(hypotheses: usize, a: f64) -> Vec<f64> {
    if hypotheses < 2 {
        return vec![0.0; hypotheses];
    }
    let step = 2.0 * a / (hypotheses - 1) as f64;
    (0..hypotheses)
        .map(|j| {
            // mirror the upper half so the set is exactly symmetric
            let k = hypotheses - 1 - j;
            if j < k {
                -a + step * j as f64
            } else if j == k {
                0.0
            } else {
                a - step * k as f64
            }
        })
        .collect()
}

/// Amplitude `a = 10^{E/20}` for a per-DM SNR `E = a²` in dB with unit noise.
pub fn snr_to_amplitude(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 20.0)
}

/// Bins each hypothesis' Gaussian and renormalizes the captured mass to 1.
///
/// With a symmetric interval the pmf of `-s` is built as the exact bin
/// reversal of the pmf of `s`.
pub fn discretize(spec: &GaussianSpec) -> Result<DiscreteObservationModel> {
    spec.validate()?;
    let means = spec.means();
    for (j, &s) in means.iter().enumerate() {
        if s - 3.0 * spec.sigma < spec.lo || s + 3.0 * spec.sigma > spec.hi {
            warn!(
                "interval [{}, {}] does not cover mean {s} of hypothesis {j} within 3 sigma",
                spec.lo, spec.hi
            );
        }
    }
    let symmetric = spec.lo == -spec.hi;
    let m = spec.hypotheses;
    let mut pmfs: Vec<Option<Vec<f64>>> = vec![None; m];
    for j in 0..m {
        if pmfs[j].is_some() {
            continue;
        }
        let mut pmf = spec.raw_masses(means[j]);
        if symmetric && j == m - 1 - j {
            // zero mean: average with its own mirror image
            let rev: Vec<f64> = pmf.iter().rev().copied().collect();
            pmf.iter_mut().zip(rev).for_each(|(p, r)| *p = 0.5 * (*p + r));
        }
        let total: f64 = pmf.iter().sum();
        pmf.iter_mut().for_each(|p| *p /= total);
        if symmetric && j < m - 1 - j {
            pmfs[m - 1 - j] = Some(pmf.iter().rev().copied().collect());
        }
        pmfs[j] = Some(pmf);
    }
    DiscreteObservationModel::new(pmfs.into_iter().map(|p| p.expect("filled")).collect())
}
