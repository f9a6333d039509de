//! Time-invariant clustered channel: drawing a realization and rendering it
//! as a sampled matrix impulse response.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::{ScatteredRows, ScenarioConfig, ShadowingMode};
use crate::error::{Error, Result};
use crate::geometry::{
    clip_cluster_distance, los_geometry, ray_path_length, steering_vector, LinkGeometry,
    PlanarArray, RayAngles,
};
use crate::propagation::{
    draw_los, path_loss_db, sample_shadow_fading, LinkCondition, Scenario,
};
use crate::pulse::{end_to_end_pulse, PulseSpec};
use crate::rng::{
    sample_cluster_counts, sample_complex_gain, sample_laplacian_angle, ClusterCounts, RngHandle,
};
use crate::SPEED_OF_LIGHT;

/// Lower end of the cluster-distance range, meters.
pub const MIN_CLUSTER_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub angles: RayAngles,
    pub gain: Complex64,
    /// Total single-bounce path length, m.
    pub length: f64,
    /// Propagation delay `length / c`, s.
    pub delay: f64,
    pub shadow_db: f64,
    /// Path gain in dB, shadowing included.
    pub attenuation_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub mean_angles: RayAngles,
    /// Distance of the cluster's scatterers from the transmitter, m.
    pub distance: f64,
    /// Upper bound the distance was drawn under, after ground clipping.
    pub distance_bound: f64,
    pub rays: Vec<Ray>,
}

/// Direct path. Geometry and delay are filled in even when `present` is false,
/// since the direct-path delay is the time origin of the sampled channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosPath {
    pub present: bool,
    pub angles: RayAngles,
    /// Phase `eta`, rad.
    pub phase: f64,
    pub length: f64,
    pub delay: f64,
    pub shadow_db: f64,
    pub attenuation_db: f64,
}

/// One random drop of the clustered channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub scenario: Scenario,
    pub geometry: LinkGeometry,
    pub clusters: Vec<Cluster>,
    pub los: LosPath,
}

impl ChannelRealization {
    pub fn counts(&self) -> ClusterCounts {
        ClusterCounts {
            n_clusters: self.clusters.len(),
            rays_per_cluster: self.clusters.iter().map(|c| c.rays.len()).collect(),
        }
    }

    pub fn total_rays(&self) -> usize {
        self.clusters.iter().map(|c| c.rays.len()).sum()
    }

    /// Normalization `sqrt(N_R N_T / sum_i N_ray,i)` of the cluster paths.
    pub fn gamma(&self, n_r: usize, n_t: usize) -> f64 {
        ((n_r * n_t) as f64 / self.total_rays() as f64).sqrt()
    }

    pub fn rays(&self) -> impl Iterator<Item = &Ray> {
        self.clusters.iter().flat_map(|c| c.rays.iter())
    }

    pub fn rays_mut(&mut self) -> impl Iterator<Item = &mut Ray> {
        self.clusters.iter_mut().flat_map(|c| c.rays.iter_mut())
    }

    /// Checks the structural invariants of a drawn realization.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Internal(msg));
        if self.clusters.is_empty() {
            return fail("realization has no clusters".into());
        }
        for (i, c) in self.clusters.iter().enumerate() {
            if c.rays.is_empty() || c.rays.len() > crate::MAX_RAYS_PER_CLUSTER {
                return fail(format!("cluster {i} has {} rays", c.rays.len()));
            }
            let lower = MIN_CLUSTER_DISTANCE.min(c.distance_bound);
            if c.distance < lower || c.distance > c.distance_bound {
                return fail(format!("cluster {i} distance {} out of range", c.distance));
            }
            for r in &c.rays {
                if (r.delay - r.length / SPEED_OF_LIGHT).abs() > 1e-18 {
                    return fail(format!("cluster {i}: delay does not match path length"));
                }
                if r.delay < self.los.delay * (1.0 - 1e-12) {
                    return fail(format!("cluster {i}: ray shorter than the direct path"));
                }
            }
        }
        Ok(())
    }
}

/// Draws one drop.
///
/// Draw order on `rng`: LOS indicator, LOS phase, LOS shadowing, cluster
/// count, ray count per cluster; then for each cluster the mean departure
/// azimuth and elevation, mean arrival azimuth and elevation, distance, an
/// optional cluster shadowing draw, and for each ray its four angles, gain
/// and (per-path mode) shadowing.
pub fn realize_channel(config: &ScenarioConfig, rng: &mut RngHandle) -> Result<ChannelRealization> {
    use std::f64::consts::{FRAC_PI_2, PI};

    config.validate()?;
    let geom = config.link_geometry()?;
    let wavelength = geom.wavelength();
    let scenario = config.scenario;
    let sigma = config.angle_spread_deg.to_radians();

    let los_geo = los_geometry(&geom);
    let los_row = scenario.params(LinkCondition::Los);
    let present = draw_los(scenario.class(), geom.d, rng).0;
    let phase = rng.uniform(0.0, 2.0 * PI);
    let los_shadow = sample_shadow_fading(&los_row, rng);
    let mut los_angles = los_geo.angles;
    los_angles.aoa_azimuth += config.rx_rotation;
    let los = LosPath {
        present,
        angles: los_angles,
        phase,
        length: los_geo.length,
        delay: los_geo.delay,
        shadow_db: los_shadow,
        attenuation_db: path_loss_db(&los_row, geom.d, wavelength, los_shadow),
    };

    let scattered_row = match (config.scattered_rows, present) {
        (ScatteredRows::FollowLos, true) => los_row,
        _ => scenario.params(LinkCondition::Nlos),
    };

    let counts = sample_cluster_counts(config.cluster_rate, rng)?;
    let raw_max = config.max_distance_factor * geom.d;
    let mut clusters = Vec::with_capacity(counts.n_clusters);
    for &n_rays in &counts.rays_per_cluster {
        let mean_angles = RayAngles {
            aod_azimuth: rng.uniform(-FRAC_PI_2, FRAC_PI_2),
            aod_elevation: rng.uniform(-FRAC_PI_2, FRAC_PI_2),
            aoa_azimuth: rng.uniform(0.0, 2.0 * PI) + config.rx_rotation,
            aoa_elevation: rng.uniform(-FRAC_PI_2, FRAC_PI_2),
        };
        let bound = clip_cluster_distance(raw_max, mean_angles.aod_elevation, &geom);
        let distance = rng.uniform(MIN_CLUSTER_DISTANCE.min(bound), bound);
        let cluster_shadow = match config.shadowing {
            ShadowingMode::PerCluster => Some(sample_shadow_fading(&scattered_row, rng)),
            ShadowingMode::PerPath => None,
        };

        let rays = (0..n_rays)
            .map(|_| {
                let angles = RayAngles {
                    aod_azimuth: sample_laplacian_angle(mean_angles.aod_azimuth, sigma, rng),
                    aod_elevation: sample_laplacian_angle(mean_angles.aod_elevation, sigma, rng),
                    aoa_azimuth: sample_laplacian_angle(mean_angles.aoa_azimuth, sigma, rng),
                    aoa_elevation: sample_laplacian_angle(mean_angles.aoa_elevation, sigma, rng),
                };
                let gain = sample_complex_gain(rng);
                let shadow_db = cluster_shadow
                    .unwrap_or_else(|| sample_shadow_fading(&scattered_row, rng));
                let length =
                    ray_path_length(distance, angles.aod_elevation, angles.aod_azimuth, &geom);
                Ray {
                    angles,
                    gain,
                    length,
                    delay: length / SPEED_OF_LIGHT,
                    shadow_db,
                    attenuation_db: path_loss_db(&scattered_row, length, wavelength, shadow_db),
                }
            })
            .collect();
        clusters.push(Cluster {
            mean_angles,
            distance,
            distance_bound: bound,
            rays,
        });
    }

    Ok(ChannelRealization {
        scenario,
        geometry: geom,
        clusters,
        los,
    })
}

/// Discrete-time matrix impulse response `H(0), ..., H(P-1)`.
///
/// Tap `l` sits at time `(tap_offset + l) * sample_period` after the
/// direct-path delay.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledChannel {
    pub taps: Vec<DMatrix<Complex64>>,
    pub sample_period: f64,
    pub tap_offset: i64,
}

impl SampledChannel {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn n_r(&self) -> usize {
        self.taps.first().map_or(0, |t| t.nrows())
    }

    pub fn n_t(&self) -> usize {
        self.taps.first().map_or(0, |t| t.ncols())
    }
}

/// Sum of squared Frobenius norms over all taps.
pub fn total_tap_energy(ch: &SampledChannel) -> f64 {
    ch.taps.iter().map(|t| t.norm_squared()).sum()
}

/// One path rendered onto the sampling grid.
#[derive(Debug, Clone)]
pub(crate) struct PathTerm {
    /// Real scale: `gamma * 10^(L/20)` or `sqrt(N_R N_T) * 10^(L/20)`.
    pub amplitude: f64,
    pub a_r: DVector<Complex64>,
    pub a_t_conj: DVector<Complex64>,
    /// Grid index of `weights[0]`.
    pub first_index: i64,
    pub weights: Vec<f64>,
}

/// Everything about a realization that stays fixed in time. Paths are
/// ordered cluster by cluster, ray by ray, with the direct path (if any) last.
#[derive(Debug, Clone)]
pub(crate) struct SynthesisPlan {
    pub terms: Vec<PathTerm>,
    pub grid_start: i64,
    pub grid_len: usize,
    pub n_r: usize,
    pub n_t: usize,
    pub sample_period: f64,
}

impl SynthesisPlan {
    pub fn new(
        real: &ChannelRealization,
        rx: &PlanarArray,
        tx: &PlanarArray,
        spec: &PulseSpec,
    ) -> Result<Self> {
        spec.validate()?;
        let (n_r, n_t) = (rx.elements(), tx.elements());
        let wavelength = real.geometry.wavelength();
        let ts = spec.sample_period();
        let support = spec.support();
        let origin = real.los.delay;

        let term = |amplitude: f64, angles: &RayAngles, delay: f64| {
            let rel = delay - origin;
            let first = ((rel - support) / ts).ceil() as i64;
            let last = ((rel + support) / ts).floor() as i64;
            let weights = (first..=last)
                .map(|n| end_to_end_pulse(spec, n as f64 * ts - rel))
                .collect();
            PathTerm {
                amplitude,
                a_r: steering_vector(rx, angles.aoa_azimuth, angles.aoa_elevation, wavelength),
                a_t_conj: steering_vector(tx, angles.aod_azimuth, angles.aod_elevation, wavelength)
                    .map(|z| z.conj()),
                first_index: first,
                weights,
            }
        };

        let mut terms = Vec::with_capacity(real.total_rays() + 1);
        if real.total_rays() > 0 {
            let gamma = real.gamma(n_r, n_t);
            for ray in real.rays() {
                let amp = gamma * 10f64.powf(ray.attenuation_db / 20.0);
                terms.push(term(amp, &ray.angles, ray.delay));
            }
        }
        if real.los.present {
            let amp = ((n_r * n_t) as f64).sqrt() * 10f64.powf(real.los.attenuation_db / 20.0);
            terms.push(term(amp, &real.los.angles, real.los.delay));
        }
        if terms.is_empty() {
            return Err(Error::Internal(
                "realization has neither cluster paths nor a direct path".into(),
            ));
        }

        let grid_start = terms.iter().map(|t| t.first_index).min().unwrap_or(0);
        let grid_end = terms
            .iter()
            .map(|t| t.first_index + t.weights.len() as i64)
            .max()
            .unwrap_or(0);
        Ok(Self {
            terms,
            grid_start,
            grid_len: (grid_end - grid_start).max(1) as usize,
            n_r,
            n_t,
            sample_period: ts,
        })
    }

    /// Per-path complex gains of the static channel, in plan order.
    pub fn static_gains(real: &ChannelRealization) -> Vec<Complex64> {
        let mut gains: Vec<Complex64> = real.rays().map(|r| r.gain).collect();
        if real.los.present {
            gains.push(Complex64::from_polar(1.0, real.los.phase));
        }
        gains
    }

    /// Renders every grid tap for the given per-path gains.
    pub fn synthesize(&self, gains: &[Complex64]) -> Vec<DMatrix<Complex64>> {
        debug_assert_eq!(gains.len(), self.terms.len());
        let mut taps = vec![DMatrix::<Complex64>::zeros(self.n_r, self.n_t); self.grid_len];
        for (term, gain) in self.terms.iter().zip(gains) {
            let coef = *gain * term.amplitude;
            for (k, &w) in term.weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let idx = (term.first_index - self.grid_start) as usize + k;
                let scaled = coef * w;
                let tap = &mut taps[idx];
                for c in 0..self.n_t {
                    let col = term.a_t_conj[c] * scaled;
                    for r in 0..self.n_r {
                        tap[(r, c)] += term.a_r[r] * col;
                    }
                }
            }
        }
        taps
    }

    /// Smallest window `[lo, hi)` left after stripping leading and trailing
    /// taps whose cumulative energy stays within half the threshold each.
    pub fn energy_window(taps: &[DMatrix<Complex64>], threshold: f64) -> (usize, usize) {
        let energies: Vec<f64> = taps.iter().map(|t| t.norm_squared()).collect();
        let total: f64 = energies.iter().sum();
        if !(total > 0.0) {
            return (0, taps.len());
        }
        let budget = 0.5 * threshold * total;
        let mut lo = 0;
        let mut acc = 0.0;
        while lo + 1 < energies.len() && acc + energies[lo] <= budget {
            acc += energies[lo];
            lo += 1;
        }
        let mut hi = energies.len();
        acc = 0.0;
        while hi > lo + 1 && acc + energies[hi - 1] <= budget {
            acc += energies[hi - 1];
            hi -= 1;
        }
        (lo, hi)
    }

    pub fn window(&self, taps: Vec<DMatrix<Complex64>>, window: (usize, usize)) -> SampledChannel {
        let (lo, hi) = window;
        SampledChannel {
            taps: taps.into_iter().skip(lo).take(hi - lo).collect(),
            sample_period: self.sample_period,
            tap_offset: self.grid_start + lo as i64,
        }
    }
}

/// Renders a realization as a sampled matrix channel.
///
/// Paths are placed by evaluating the pulse at `n T_s - tau` (no rounding of
/// delays to the grid). Taps are retained so that at most `energy_threshold`
/// of the total energy is discarded.
pub fn sample_channel(
    real: &ChannelRealization,
    rx: &PlanarArray,
    tx: &PlanarArray,
    spec: &PulseSpec,
    energy_threshold: f64,
) -> Result<SampledChannel> {
    if !(energy_threshold > 0.0 && energy_threshold < 1.0) {
        return Err(Error::config(
            "energy_threshold",
            format!("must lie in (0, 1), got {energy_threshold}"),
        ));
    }
    let plan = SynthesisPlan::new(real, rx, tx, spec)?;
    let taps = plan.synthesize(&SynthesisPlan::static_gains(real));
    let window = SynthesisPlan::energy_window(&taps, energy_threshold);
    Ok(plan.window(taps, window))
}

/// Draws a realization from `config` and samples it with the configured arrays and pulse.
pub fn generate_static(
    config: &ScenarioConfig,
    rng: &mut RngHandle,
) -> Result<(ChannelRealization, SampledChannel)> {
    let real = realize_channel(config, rng)?;
    let ch = sample_channel(
        &real,
        &config.rx_array(),
        &config.tx_array(),
        &config.pulse(),
        config.energy_threshold,
    )?;
    Ok((real, ch))
}
