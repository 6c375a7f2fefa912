//! Closed-form reference curves for antipodal Gaussian signals with equal priors.

use libm::erfc;

use crate::error::{Error, Result};

/// Gaussian tail `Q(x) = P(Z > x)` for a standard normal `Z`.
pub fn q_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    q_tail(-x)
}

fn check_signal(a: f64, sigma: f64) -> Result<()> {
    if !(a > 0.0) || !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "amplitude and noise level must be positive (a = {a}, sigma = {sigma})"
        )));
    }
    Ok(())
}

/// Error after DM `i` of a rate-one chain where DM `i` decides `+a` above `τ_i`
/// when its predecessor said `-a`, above `-τ_i` otherwise. Starts from `P_E(0) = 1/2`.
fn rate_one_recursion(dms: usize, a: f64, sigma: f64, mut threshold: impl FnMut(usize, f64) -> f64) -> Vec<f64> {
    let mut pe = 0.5;
    (1..=dms)
        .map(|i| {
            let tau = threshold(i, pe);
            let hi = q_tail((a + tau) / sigma);
            let lo = q_tail((a - tau) / sigma);
            pe = hi + pe * (lo - hi);
            pe
        })
        .collect()
}

/// Optimal rate-one chain: each DM runs the likelihood-ratio test against its
/// predecessor's error, `τ_i = σ²/(2a) ln((1 - P_E(i-1)) / P_E(i-1))`.
/// Returns `P_E(1..=dms)`.
pub fn swaszek_curve(dms: usize, a: f64, sigma: f64) -> Result<Vec<f64>> {
    check_signal(a, sigma)?;
    Ok(rate_one_recursion(dms, a, sigma, |_, prev| {
        sigma * sigma / (2.0 * a) * ((1.0 - prev) / prev).ln()
    }))
}

/// Indexing of the two-state scheme's growing thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoverSchedule {
    /// `τ_i = sqrt(2σ² log10 i)`.
    Nominal,
    /// `τ_1 = 0`, then `τ_i = sqrt(2σ² log10 (i + 1))`; the convention behind
    /// the usual comparison data.
    #[default]
    Shifted,
}

/// Threshold used by DM `i` (1-based) of the two-state scheme.
pub fn cover_threshold(i: usize, sigma: f64, schedule: CoverSchedule) -> f64 {
    let arg = match schedule {
        CoverSchedule::Nominal => i as f64,
        CoverSchedule::Shifted if i <= 1 => 1.0,
        CoverSchedule::Shifted => (i + 1) as f64,
    };
    (2.0 * sigma * sigma * arg.log10()).sqrt()
}

/// Two-state rate-one scheme: DM `i` outputs `+a` above `τ_i`, `-a` below
/// `-τ_i`, and repeats its input in between. Returns `P_E(1..=dms)`.
pub fn cover_curve(dms: usize, a: f64, sigma: f64, schedule: CoverSchedule) -> Result<Vec<f64>> {
    check_signal(a, sigma)?;
    Ok(rate_one_recursion(dms, a, sigma, |i, _| cover_threshold(i, sigma, schedule)))
}

/// Error of the unconstrained (infinite-rate) chain, which sums all
/// observations and applies a multi-level threshold:
/// `2(M-1)/M · Q(a √N / (σ (M-1)))` for `M` equally spaced signals on `[-a, a]`.
pub fn linear_detector_error(dms: usize, hypotheses: usize, a: f64, sigma: f64) -> Result<f64> {
    check_signal(a, sigma)?;
    if hypotheses < 2 || dms == 0 {
        return Err(Error::InvalidArgument(format!(
            "need M >= 2 and N >= 1 (M = {hypotheses}, N = {dms})"
        )));
    }
    let m = hypotheses as f64;
    Ok(2.0 * (m - 1.0) / m * q_tail(a * (dms as f64).sqrt() / (sigma * (m - 1.0))))
}
