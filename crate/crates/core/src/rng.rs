//! Random-variate generation.
//!
//! Every draw in the simulator goes through an [`RngHandle`], a ChaCha20
//! generator keyed by a 64-bit seed and a 64-bit stream id. Two handles with
//! the same `(seed, stream_id)` produce the same sequence on every platform
//! and regardless of how many worker threads are running.
//!
//! Stream ids are laid out as `trial | (label << 56)`: the low 56 bits carry
//! the Monte Carlo trial index and the top byte a [`SubStream`] label so that
//! the static realization and the temporal evolution of one trial never share
//! variates.

use num_complex::Complex64;
use rand::distr::{Distribution, Open01};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LABEL_SHIFT: u32 = 56;
const TRIAL_MASK: u64 = (1 << LABEL_SHIFT) - 1;

/// Largest Poisson rate sampled by exact inversion.
const POISSON_INVERSION_MAX_RATE: f64 = 30.0;

/// Purpose labels for substreams derived from one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum SubStream {
    /// Cluster, ray, gain, shadowing and LOS draws of a static realization.
    Realization = 0,
    /// Innovations of the AR(1) gain and LOS-phase processes.
    Evolution = 1,
}

/// Seedable generator bound to one `(seed, stream_id)` pair.
#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    stream_id: u64,
    inner: ChaCha20Rng,
}

impl RngHandle {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    /// Handle for `label` within Monte Carlo trial `trial`.
    pub fn for_trial(seed: u64, trial: u64, label: SubStream) -> Self {
        debug_assert!(trial <= TRIAL_MASK);
        Self::new(seed, (trial & TRIAL_MASK) | ((label as u64) << LABEL_SHIFT))
    }

    /// Fresh handle on the same trial with a different label.
    pub fn substream(&self, label: SubStream) -> Self {
        Self::for_trial(self.seed, self.stream_id & TRIAL_MASK, label)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.inner.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Gaussian with the given mean and standard deviation.
    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }

    /// Uniform on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        Open01.sample(&mut self.inner)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.inner.random::<f64>() < p
    }
}

impl RngCore for RngHandle {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Number of clusters, `max(Poisson(lambda), 1)`.
pub fn sample_cluster_count(lambda: f64, rng: &mut RngHandle) -> Result<usize> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::config(
            "cluster_rate",
            format!("Poisson rate must be positive and finite, got {lambda}"),
        ));
    }
    Ok(sample_poisson(lambda, rng).max(1))
}

fn sample_poisson(lambda: f64, rng: &mut RngHandle) -> usize {
    if lambda > POISSON_INVERSION_MAX_RATE {
        let draw: f64 = Poisson::new(lambda)
            .expect("rate checked positive")
            .sample(rng);
        return draw as usize;
    }
    // Sequential search of the CDF.
    let u = rng.uniform(0.0, 1.0);
    let mut k = 0usize;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    let cap = (20.0 * POISSON_INVERSION_MAX_RATE) as usize;
    while u >= cdf && k < cap {
        k += 1;
        pmf *= lambda / k as f64;
        cdf += pmf;
    }
    k
}

/// Cluster count and per-cluster ray counts of one drop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterCounts {
    pub n_clusters: usize,
    pub rays_per_cluster: Vec<usize>,
}

impl ClusterCounts {
    pub fn total_rays(&self) -> usize {
        self.rays_per_cluster.iter().sum()
    }
}

/// Draws the cluster count, then one ray count per cluster.
pub fn sample_cluster_counts(lambda: f64, rng: &mut RngHandle) -> Result<ClusterCounts> {
    let n_clusters = sample_cluster_count(lambda, rng)?;
    let rays_per_cluster = (0..n_clusters).map(|_| sample_ray_count(rng)).collect();
    Ok(ClusterCounts {
        n_clusters,
        rays_per_cluster,
    })
}

/// Number of rays in one cluster, uniform on `{1, ..., 30}`.
pub fn sample_ray_count(rng: &mut RngHandle) -> usize {
    rng.inner.random_range(1..=crate::MAX_RAYS_PER_CLUSTER)
}

/// Laplacian variate with the given mean and standard deviation (scale `sigma / sqrt(2)`).
///
/// The result is not wrapped into any angular range.
pub fn sample_laplacian_angle(mean: f64, sigma: f64, rng: &mut RngHandle) -> f64 {
    let scale = sigma / std::f64::consts::SQRT_2;
    let v = rng.open01() - 0.5;
    mean - scale * v.signum() * (1.0 - 2.0 * v.abs()).ln()
}

/// Circular complex Gaussian with zero mean and unit variance.
pub fn sample_complex_gain(rng: &mut RngHandle) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * rng.standard_normal(), s * rng.standard_normal())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::config(
            "rho",
            format!("AR(1) coefficient must lie in [0, 1], got {rho}"),
        ));
    }
    Ok(())
}

/// Stationary AR(1) circular Gaussian sequence with autocorrelation `variance * rho^|k|`.
///
/// The first element is drawn from the stationary law; subsequent elements
/// follow `x(n) = rho x(n-1) + sqrt(1 - rho^2) w(n)`.
pub fn ar1_complex_sequence(
    rho: f64,
    n: usize,
    variance: f64,
    rng: &mut RngHandle,
) -> Result<Vec<Complex64>> {
    check_rho(rho)?;
    if n == 0 {
        return Err(Error::config("n", "sequence length must be at least 1"));
    }
    let first = sample_complex_gain(rng) * variance.sqrt();
    ar1_continue(first, rho, n, variance, rng)
}

/// AR(1) sequence of length `n` whose first element is `start`.
pub fn ar1_continue(
    start: Complex64,
    rho: f64,
    n: usize,
    variance: f64,
    rng: &mut RngHandle,
) -> Result<Vec<Complex64>> {
    check_rho(rho)?;
    let innovation = (1.0 - rho * rho).sqrt() * variance.sqrt();
    let mut out = Vec::with_capacity(n);
    let mut x = start;
    for k in 0..n {
        if k > 0 {
            let w = sample_complex_gain(rng);
            x = x * rho + w * innovation;
        }
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_stream_is_reproducible() {
        let mut a = RngHandle::new(7, 3);
        let mut b = RngHandle::new(7, 3);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn labels_do_not_collide_with_trials() {
        let a = RngHandle::for_trial(1, 5, SubStream::Realization);
        let b = a.substream(SubStream::Evolution);
        assert_eq!(a.stream_id() & TRIAL_MASK, b.stream_id() & TRIAL_MASK);
        assert_ne!(a.stream_id(), b.stream_id());
    }

    #[test]
    fn rejects_bad_rates() {
        let mut rng = RngHandle::new(0, 0);
        assert!(sample_cluster_count(0.0, &mut rng).is_err());
        assert!(sample_cluster_count(-1.0, &mut rng).is_err());
        assert!(ar1_complex_sequence(1.5, 4, 1.0, &mut rng).is_err());
        assert!(ar1_complex_sequence(-0.1, 4, 1.0, &mut rng).is_err());
    }

    #[test]
    fn tiny_rate_gives_one_cluster() {
        let mut rng = RngHandle::new(11, 0);
        for _ in 0..10_000 {
            assert_eq!(sample_cluster_count(1e-9, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn cluster_count_never_zero() {
        let mut rng = RngHandle::new(12, 0);
        for _ in 0..100_000 {
            assert!(sample_cluster_count(1.9, &mut rng).unwrap() >= 1);
        }
    }

    #[test]
    fn large_rate_falls_back() {
        let mut rng = RngHandle::new(13, 0);
        let n = 20_000;
        let mean = (0..n)
            .map(|_| sample_cluster_count(50.0, &mut rng).unwrap() as f64)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 50.0).abs() < 0.5, "{mean}");
    }

    #[test]
    fn ray_count_in_range() {
        let mut rng = RngHandle::new(14, 0);
        for _ in 0..100_000 {
            let r = sample_ray_count(&mut rng);
            assert!((1..=30).contains(&r));
        }
    }

    #[test]
    fn rho_one_is_constant() {
        let mut rng = RngHandle::new(15, 0);
        let x = ar1_complex_sequence(1.0, 64, 1.0, &mut rng).unwrap();
        assert!(x.iter().all(|v| *v == x[0]));
    }

    #[test]
    fn rho_zero_is_white() {
        let mut rng = RngHandle::new(16, 0);
        let x = ar1_complex_sequence(0.0, 100_000, 1.0, &mut rng).unwrap();
        let num: Complex64 = x.windows(2).map(|w| w[1] * w[0].conj()).sum();
        let den: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        assert!(num.norm() / den < 0.01);
    }

    #[test]
    fn complex_gain_splits_power_evenly() {
        let mut rng = RngHandle::new(17, 0);
        let n = 1_000_000;
        let (mut re2, mut im2) = (0.0, 0.0);
        for _ in 0..n {
            let g = sample_complex_gain(&mut rng);
            re2 += g.re * g.re;
            im2 += g.im * g.im;
        }
        assert!((re2 / n as f64 - 0.5).abs() < 0.005);
        assert!((im2 / n as f64 - 0.5).abs() < 0.005);
    }
}
