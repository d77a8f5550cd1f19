//! Cumulative-distribution-table sampler for the rounded Gaussian.

use rand::RngCore;

#[derive(Debug, Clone)]
pub struct GaussianSampler {
    /// `cdf[k]` = P(|x| <= k) scaled to 2^64, clamped below `u64::MAX`.
    cdf: Vec<u64>,
    pub sigma: f64,
    pub cut: i64,
}

impl GaussianSampler {
    /// Discrete Gaussian of parameter `sigma`, tails cut at `tail·sigma`.
    pub fn new(sigma: f64, tail: f64) -> Self {
        let cut = (tail * sigma).floor() as i64;
        let weights: Vec<f64> = (0..=cut)
            .map(|k| {
                let w = (-(k as f64).powi(2) / (2.0 * sigma * sigma)).exp();
                if k == 0 {
                    w
                } else {
                    2.0 * w
                }
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<u64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                (acc * 18446744073709551616.0).min(u64::MAX as f64) as u64
            })
            .collect();
        *cdf.last_mut().unwrap() = u64::MAX;
        Self { cdf, sigma, cut }
    }

    pub fn sample(&self, rng: &mut impl RngCore) -> i64 {
        let u = rng.next_u64();
        let k = self.cdf.partition_point(|&c| c < u) as i64;
        if k != 0 && rng.next_u32() & 1 == 1 {
            -k
        } else {
            k
        }
    }
}
