//! Link-level evaluation: eigen-beamforming on the strongest tap, stacked
//! LMMSE reception over a `P`-epoch window, and the achievable rate.
//!
//! With `G(l) = D^H H(l) Q`, the received `M`-vector at epoch `n` is
//!
//! ```text
//! r(n) = sum_{l=0}^{P-1} G(l) s(n - l) + D^H w(n)
//! ```
//!
//! Stacking `r(n), ..., r(n + P - 1)` gives `A s(n) + A_I s_I(n) + B w`,
//! where `s_I(n)` collects the `2P - 2` neighbouring symbol vectors
//! `s(n - P + 1), ..., s(n - 1), s(n + 1), ..., s(n + P - 1)` in that order.

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{generate_static, SampledChannel};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::rng::{RngHandle, SubStream};
use crate::toeplitz::solve_hermitian_block_toeplitz;

type CMat = DMatrix<Complex64>;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative diagonal loading applied when the interference-plus-noise matrix
/// of the rate expression is not numerically positive definite.
pub const RATE_REGULARIZATION: f64 = 1e-12;

/// Precoder, combiner and the tap they were designed on.
#[derive(Debug, Clone)]
pub struct BeamformerPair {
    /// `N_T x M` precoder.
    pub q: CMat,
    /// `N_R x M` combiner.
    pub d: CMat,
    /// Index of the strongest tap.
    pub mu: usize,
    /// Top-`M` singular values of `H(mu)`, descending.
    pub singular_values: Vec<f64>,
}

/// Top-`M` singular pairs of the tap with the largest Frobenius norm.
///
/// Ties between taps go to the smallest index.
pub fn design_beamformers(ch: &SampledChannel, m: usize) -> Result<BeamformerPair> {
    if ch.is_empty() {
        return Err(Error::Internal("channel has no taps".into()));
    }
    let (n_r, n_t) = (ch.n_r(), ch.n_t());
    if m == 0 || m > n_r.min(n_t) {
        return Err(Error::config(
            "streams",
            format!("must lie in [1, {}], got {m}", n_r.min(n_t)),
        ));
    }
    let mut mu = 0;
    let mut best = ch.taps[0].norm_squared();
    for (l, tap) in ch.taps.iter().enumerate().skip(1) {
        let e = tap.norm_squared();
        if e > best {
            best = e;
            mu = l;
        }
    }

    let svd = ch.taps[mu].clone().svd(true, true);
    let u = svd.u.expect("left vectors requested");
    let v_t = svd.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let order = &order[..m];

    let d = CMat::from_fn(n_r, m, |r, c| u[(r, order[c])]);
    let q = CMat::from_fn(n_t, m, |r, c| v_t[(order[c], r)].conj());
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

    let top = singular_values[0];
    if top > 0.0 {
        let weak = singular_values
            .iter()
            .filter(|&&s| s <= top * 1e-12)
            .count();
        if weak > 0 {
            warn!("{weak} of {m} streams sit on numerically zero singular values of H({mu})");
        }
    }

    Ok(BeamformerPair {
        q,
        d,
        mu,
        singular_values,
    })
}

/// Stacked-window description of the beamformed link.
///
/// Only the `M x M` effective taps are stored; the dense stacked matrices
/// are available through [`StackedModel::signature_matrix`],
/// [`StackedModel::interference_matrix`] and [`StackedModel::noise_map`].
#[derive(Debug, Clone)]
pub struct StackedModel {
    /// Effective taps `G(l) = D^H H(l) Q`.
    pub effective_taps: Vec<CMat>,
    /// `M x N_R` combiner adjoint.
    pub combiner_adjoint: CMat,
    pub noise_variance: f64,
}

impl StackedModel {
    pub fn streams(&self) -> usize {
        self.combiner_adjoint.nrows()
    }

    pub fn window(&self) -> usize {
        self.effective_taps.len()
    }

    fn tap(&self, l: i64) -> Option<&CMat> {
        usize::try_from(l).ok().and_then(|l| self.effective_taps.get(l))
    }

    /// Symbol offsets (relative to `n`) of the interferers, in column order.
    pub fn interferer_offsets(&self) -> Vec<i64> {
        let p = self.window() as i64;
        (-(p - 1)..p).filter(|&j| j != 0).collect()
    }

    /// `A`, `MP x M`: block `l` is `G(l)`.
    pub fn signature_matrix(&self) -> CMat {
        let (m, p) = (self.streams(), self.window());
        let mut a = CMat::zeros(m * p, m);
        for (l, g) in self.effective_taps.iter().enumerate() {
            a.view_mut((l * m, 0), (m, m)).copy_from(g);
        }
        a
    }

    /// `A_I`, `MP x M(2P-2)`: the column block of `s(n + j)` holds `G(k - j)`
    /// in block row `k`, zero where `k - j` falls outside the channel.
    pub fn interference_matrix(&self) -> CMat {
        let (m, p) = (self.streams(), self.window());
        let offsets = self.interferer_offsets();
        let mut a_i = CMat::zeros(m * p, m * offsets.len());
        for (col, &j) in offsets.iter().enumerate() {
            for k in 0..p {
                if let Some(g) = self.tap(k as i64 - j) {
                    a_i.view_mut((k * m, col * m), (m, m)).copy_from(g);
                }
            }
        }
        a_i
    }

    /// `B`, `MP x N_R P`: block diagonal with `D^H` repeated `P` times.
    pub fn noise_map(&self) -> CMat {
        let (m, p) = (self.streams(), self.window());
        let n_r = self.combiner_adjoint.ncols();
        let mut b = CMat::zeros(m * p, n_r * p);
        for k in 0..p {
            b.view_mut((k * m, k * n_r), (m, n_r))
                .copy_from(&self.combiner_adjoint);
        }
        b
    }

    /// Covariance of the stacked noise vector, normalized to unit power per
    /// antenna; the noise power itself is carried by `noise_variance`.
    pub fn noise_covariance(&self) -> CMat {
        let n = self.combiner_adjoint.ncols() * self.window();
        CMat::identity(n, n)
    }

    /// First block row of the stacked observation covariance
    /// `(P_T/M)(A A^H + A_I A_I^H) + sigma^2 B B^H`.
    pub fn covariance_blocks(&self, symbol_power: f64) -> Vec<CMat> {
        let (m, p) = (self.streams(), self.window());
        let scale = Complex64::new(symbol_power, 0.0);
        let dd = &self.combiner_adjoint * self.combiner_adjoint.adjoint();
        (0..p)
            .map(|lag| {
                let mut t = CMat::zeros(m, m);
                for l in 0..p - lag {
                    t.gemm(
                        scale,
                        &self.effective_taps[l],
                        &self.effective_taps[l + lag].adjoint(),
                        ONE,
                    );
                }
                if lag == 0 {
                    t += &dd * Complex64::new(self.noise_variance, 0.0);
                }
                t
            })
            .collect()
    }
}

pub fn build_stacked_model(
    ch: &SampledChannel,
    bf: &BeamformerPair,
    noise_variance: f64,
) -> StackedModel {
    let d_h = bf.d.adjoint();
    let effective_taps = ch
        .taps
        .iter()
        .map(|h| &d_h * h * &bf.q)
        .collect();
    StackedModel {
        effective_taps,
        combiner_adjoint: d_h,
        noise_variance,
    }
}

/// LMMSE estimator `E = (P_T/M) C^{-1} A`, `MP x M`.
pub fn lmmse_operator(model: &StackedModel, tx_power: f64, m: usize) -> Result<CMat> {
    if m != model.streams() {
        return Err(Error::Internal(format!(
            "model has {} streams, asked for {m}",
            model.streams()
        )));
    }
    if !(model.noise_variance > 0.0) {
        return Err(Error::config("noise_variance", "must be positive"));
    }
    let symbol_power = tx_power / m as f64;
    let blocks = model.covariance_blocks(symbol_power);
    let rhs = model.signature_matrix() * Complex64::new(symbol_power, 0.0);
    solve_hermitian_block_toeplitz(&blocks, &rhs)
}

fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn log2_det_hpd(m: CMat) -> Option<f64> {
    let chol = m.cholesky()?;
    let l = chol.l_dirty();
    Some(2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.log2()).sum::<f64>())
}

/// Achievable rate in bits per channel use:
/// `log2 det(I + R^{-1} (P_T/M) E^H A A^H E)` with
/// `R = E^H ((P_T/M) A_I A_I^H + sigma^2 B C_w B^H) E`.
pub fn achievable_rate(model: &StackedModel, e: &CMat, tx_power: f64, m: usize) -> Result<f64> {
    let p = model.window();
    if e.nrows() != m * p || e.ncols() != m || model.streams() != m {
        return Err(Error::Internal("estimator shape does not match the model".into()));
    }
    let symbol_power = Complex64::new(tx_power / m as f64, 0.0);
    // The rate is unchanged when E is multiplied on the right by an invertible
    // matrix, so each column is scaled to unit norm. Streams whose signature
    // vanishes otherwise leave columns of order 1e-20 that make both
    // determinants underflow together. An exactly zero column detects nothing
    // and is dropped.
    let kept: Vec<nalgebra::DVector<Complex64>> = e
        .column_iter()
        .filter_map(|c| {
            let norm = c.norm();
            (norm > 0.0).then(|| c / Complex64::new(norm, 0.0))
        })
        .collect();
    if kept.is_empty() {
        return Ok(0.0);
    }
    let e = CMat::from_columns(&kept);
    let k_cols = e.ncols();
    let blocks: Vec<CMat> = (0..p).map(|k| e.rows(k * m, m).adjoint()).collect();

    // E^H A
    let mut useful = CMat::zeros(k_cols, m);
    for (ek, g) in blocks.iter().zip(&model.effective_taps) {
        useful.gemm(ONE, ek, g, ONE);
    }
    let signal = &useful * useful.adjoint() * symbol_power;

    let mut interference = CMat::zeros(k_cols, k_cols);
    let mut column = CMat::zeros(k_cols, m);
    for j in model.interferer_offsets() {
        column.fill(ZERO);
        for (k, ek) in blocks.iter().enumerate() {
            if let Some(g) = model.tap(k as i64 - j) {
                column.gemm(ONE, ek, g, ONE);
            }
        }
        interference.gemm(symbol_power, &column, &column.adjoint(), ONE);
    }

    // C_w is the identity, so B C_w B^H is block diagonal with D^H D.
    let dd = &model.combiner_adjoint * model.combiner_adjoint.adjoint();
    let mut noise = CMat::zeros(k_cols, k_cols);
    for ek in &blocks {
        noise += ek * &dd * ek.adjoint();
    }
    let r = hermitian_part(&(interference + noise * Complex64::new(model.noise_variance, 0.0)));
    let total = hermitian_part(&(&r + &signal));

    let (log_r, log_total) = match (log2_det_hpd(r.clone()), log2_det_hpd(total.clone())) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            let load = RATE_REGULARIZATION * (r.trace().re / k_cols as f64).max(f64::MIN_POSITIVE);
            warn!("interference-plus-noise matrix is ill-conditioned; loading diagonal by {load:e}");
            let eye = CMat::identity(k_cols, k_cols) * Complex64::new(load, 0.0);
            let a = log2_det_hpd(&r + &eye);
            let b = log2_det_hpd(&total + &eye);
            match (a, b) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::Numerical(
                        "rate covariance is not positive definite".into(),
                    ))
                }
            }
        }
    };
    Ok((log_total - log_r).max(0.0))
}

/// Outcome of one Monte Carlo drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    pub trial: u64,
    pub seed: u64,
    pub stream_id: u64,
    pub los: bool,
    pub n_clusters: usize,
    pub n_rays: usize,
    pub taps: usize,
    pub tap_offset: i64,
    pub mu: usize,
    /// Bits per channel use.
    pub rate: f64,
    /// Bits/s/Hz.
    pub spectral_efficiency: f64,
}

/// Runs one drop: realize, sample, beamform, stack, estimate, rate.
pub fn evaluate_trial(config: &ScenarioConfig, trial: u64) -> Result<LinkResult> {
    let mut rng = RngHandle::for_trial(config.seed, trial, SubStream::Realization);
    let (real, ch) = generate_static(config, &mut rng)?;
    let m = config.streams;
    let bf = design_beamformers(&ch, m)?;
    let model = build_stacked_model(&ch, &bf, config.noise_variance_watts());
    let tx_power = config.tx_power_watts();
    let e = lmmse_operator(&model, tx_power, m)?;
    let rate = achievable_rate(&model, &e, tx_power, m)?;
    Ok(LinkResult {
        trial,
        seed: config.seed,
        stream_id: rng.stream_id(),
        los: real.los.present,
        n_clusters: real.clusters.len(),
        n_rays: real.total_rays(),
        taps: ch.len(),
        tap_offset: ch.tap_offset,
        mu: bf.mu,
        rate,
        spectral_efficiency: rate / config.se_divisor(),
    })
}

/// Sorted spectral-efficiency samples with their empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfResult {
    /// Per-trial results in trial order.
    pub trials: Vec<LinkResult>,
    /// Spectral efficiencies sorted ascending.
    pub samples: Vec<f64>,
    /// `cdf[i] = (i + 1) / n`, paired with `samples[i]`.
    pub cdf: Vec<f64>,
}

impl CdfResult {
    pub fn from_trials(trials: Vec<LinkResult>) -> Self {
        let mut samples: Vec<f64> = trials.iter().map(|t| t.spectral_efficiency).collect();
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        let cdf = (1..=samples.len()).map(|i| i as f64 / n).collect();
        Self {
            trials,
            samples,
            cdf,
        }
    }

    /// Empirical median (mean of the two middle samples for even counts).
    pub fn median(&self) -> f64 {
        let n = self.samples.len();
        if n % 2 == 1 {
            self.samples[n / 2]
        } else {
            0.5 * (self.samples[n / 2 - 1] + self.samples[n / 2])
        }
    }

    /// Fraction of samples at or below `x`.
    pub fn cdf_at(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.samples.len() as f64
    }
}

/// `config.n_trials` independent drops; trial `k` uses substream `k`.
///
/// Trials run on the current rayon pool. Results are assembled in trial order,
/// so the output does not depend on the number of worker threads.
pub fn run_cdf_experiment(config: &ScenarioConfig) -> Result<CdfResult> {
    config.validate()?;
    let trials = (0..config.n_trials as u64)
        .into_par_iter()
        .map(|k| evaluate_trial(config, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(CdfResult::from_trials(trials))
}
