//! Static channel: drops, sampling and the array-size power law.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use mmwchan::channel::{generate_static, realize_channel, sample_channel, total_tap_energy};
use mmwchan::config::ScenarioConfig;
use mmwchan::geometry::PlanarArray;
use mmwchan::propagation::Scenario;
use mmwchan::rng::{RngHandle, SubStream};
use num_complex::Complex64;

const SPEED: f64 = 299_792_458.0;

fn nlos_realization(cfg: &ScenarioConfig, seed: u64) -> mmwchan::channel::ChannelRealization {
    let mut rng = RngHandle::for_trial(cfg.seed, seed, SubStream::Realization);
    let mut real = realize_channel(cfg, &mut rng).unwrap();
    real.los.present = false;
    real
}

const ARRAYS: [((usize, usize), (usize, usize)); 5] = [
    ((1, 1), (1, 1)),
    ((2, 2), (2, 2)),
    ((3, 1), (1, 4)),
    ((5, 2), (5, 2)),
    ((5, 4), (6, 5)),
];

fn energy_per_element(
    real: &mmwchan::channel::ChannelRealization,
    cfg: &ScenarioConfig,
    rx: (usize, usize),
    tx: (usize, usize),
) -> f64 {
    let rx = PlanarArray::new(rx.0, rx.1);
    let tx = PlanarArray::new(tx.0, tx.1);
    let ch = sample_channel(real, &rx, &tx, &cfg.pulse(), cfg.energy_threshold).unwrap();
    total_tap_energy(&ch) / (rx.elements() * tx.elements()) as f64
}

/// When no two pulses overlap on the sampling grid, every cross term
/// between rays vanishes and the energy is exactly proportional to
/// `N_R N_T`.
#[test]
fn power_scaling_is_exact_for_separated_rays() {
    let cfg = ScenarioConfig::default();
    let ts = cfg.pulse().sample_period();
    let span = 2.0 * f64::from(cfg.pulse().truncation_half_length) + 3.0;
    for trial in 0..40 {
        let mut real = nlos_realization(&cfg, trial);
        let origin = real.los.delay;
        let mut rng = RngHandle::new(77, trial);
        for (k, ray) in real.rays_mut().enumerate() {
            ray.delay = origin + (span * k as f64 + rng.uniform(0.0, 1.0)) * ts;
        }
        let reference = energy_per_element(&real, &cfg, ARRAYS[0].0, ARRAYS[0].1);
        for &(rx, tx) in &ARRAYS[1..] {
            let e = energy_per_element(&real, &cfg, rx, tx);
            assert!(
                (e / reference - 1.0).abs() < 1e-10,
                "trial {trial} {rx:?}x{tx:?}: {}",
                e / reference
            );
        }
    }
}

/// With the drop's natural delays, pulses overlap and the cross terms depend
/// on the array, so the law holds on average over drops.
#[test]
fn power_scaling_holds_in_expectation() {
    let cfg = ScenarioConfig::default();
    let drops = 2000;
    let mut sums = vec![0.0; ARRAYS.len()];
    for trial in 0..drops {
        let real = nlos_realization(&cfg, trial);
        // Normalize each drop so a few strong drops do not dominate.
        let scale = real
            .rays()
            .map(|r| 10f64.powf(r.attenuation_db / 10.0))
            .sum::<f64>()
            / real.total_rays() as f64;
        for (s, &(rx, tx)) in sums.iter_mut().zip(&ARRAYS) {
            *s += energy_per_element(&real, &cfg, rx, tx) / scale;
        }
    }
    for (i, s) in sums.iter().enumerate().skip(1) {
        let ratio = s / sums[0];
        assert!((ratio - 1.0).abs() < 0.03, "{:?}: {ratio}", ARRAYS[i]);
    }
}

#[test]
fn mean_cluster_and_ray_counts_over_drops() {
    let cfg = ScenarioConfig::default();
    let drops = 10_000u64;
    let mut clusters = 0usize;
    let mut rays = 0usize;
    for trial in 0..drops {
        let mut rng = RngHandle::for_trial(3, trial, SubStream::Realization);
        let real = realize_channel(&cfg, &mut rng).unwrap();
        clusters += real.clusters.len();
        rays += real.total_rays();
    }
    let mean_clusters = clusters as f64 / drops as f64;
    let mean_rays = rays as f64 / clusters as f64;
    assert!((mean_clusters / (1.9 + (-1.9f64).exp()) - 1.0).abs() < 0.03, "{mean_clusters}");
    assert!((mean_rays / 15.5 - 1.0).abs() < 0.03, "{mean_rays}");
}

#[test]
fn drop_invariants_in_every_scenario() {
    for (s, scenario) in Scenario::ALL.into_iter().enumerate() {
        let mut cfg = ScenarioConfig {
            scenario,
            rx_y: 2,
            rx_z: 2,
            tx_y: 2,
            tx_z: 2,
            streams: 2,
            ..ScenarioConfig::default()
        };
        if scenario.class() == mmwchan::propagation::ScenarioClass::Inh {
            cfg.d = 8.0;
            cfg.h_t = 3.0;
        }
        for trial in 0..300 {
            let mut rng = RngHandle::for_trial(s as u64, trial, SubStream::Realization);
            let (real, ch) = generate_static(&cfg, &mut rng).unwrap();
            real.check_invariants().unwrap();
            let los_len = real.los.length;
            for c in &real.clusters {
                assert!(c.distance <= c.distance_bound * (1.0 + 1e-12));
                assert!(c.distance_bound <= cfg.max_distance_factor * cfg.d + 1e-9);
                if c.mean_angles.aod_elevation < 0.0 {
                    let clip = cfg.h_t / c.mean_angles.aod_elevation.sin().abs();
                    assert!(c.distance_bound <= clip + 1e-9);
                }
                assert!((1..=30).contains(&c.rays.len()));
                for r in &c.rays {
                    assert!(r.length >= los_len - 1e-9);
                    assert!((r.delay - r.length / SPEED).abs() < 1e-20);
                }
            }
            assert!(!ch.is_empty());
            assert!(total_tap_energy(&ch) > 0.0);
            assert_eq!(ch.n_r(), 4);
            assert_eq!(ch.n_t(), 4);
        }
    }
}

#[test]
fn energy_window_keeps_required_fraction() {
    let cfg = ScenarioConfig {
        rx_y: 2,
        rx_z: 2,
        tx_y: 2,
        tx_z: 1,
        streams: 1,
        ..ScenarioConfig::default()
    };
    for trial in 0..100 {
        let mut rng = RngHandle::for_trial(8, trial, SubStream::Realization);
        let real = realize_channel(&cfg, &mut rng).unwrap();
        let (rx, tx, spec) = (cfg.rx_array(), cfg.tx_array(), cfg.pulse());
        let full = sample_channel(&real, &rx, &tx, &spec, 1e-300).unwrap();
        for thr in [1e-2, 1e-4, 1e-6] {
            let cut = sample_channel(&real, &rx, &tx, &spec, thr).unwrap();
            let kept = total_tap_energy(&cut) / total_tap_energy(&full);
            assert!(kept >= 1.0 - thr - 1e-12, "thr {thr}: {kept}");
            let shift = (cut.tap_offset - full.tap_offset) as usize;
            for (l, tap) in cut.taps.iter().enumerate() {
                assert_eq!(tap, &full.taps[l + shift]);
            }
        }
    }
}

/// A single ray whose delay falls on the grid produces one tap equal to
/// `gamma sqrt(L) alpha a_r a_t^H`, with the steering vectors evaluated here
/// from their closed form.
#[test]
fn single_on_grid_ray_reproduces_closed_form() {
    let cfg = ScenarioConfig {
        rx_y: 3,
        rx_z: 2,
        tx_y: 2,
        tx_z: 2,
        ..ScenarioConfig::default()
    };
    let mut rng = RngHandle::new(4, 4);
    let mut real = realize_channel(&cfg, &mut rng).unwrap();
    real.los.present = false;
    real.clusters.truncate(1);
    real.clusters[0].rays.truncate(1);
    let ts = cfg.pulse().sample_period();
    let ray = &mut real.clusters[0].rays[0];
    ray.delay = real.los.delay + 5.0 * ts;
    let ray = ray.clone();

    let ch = sample_channel(&real, &cfg.rx_array(), &cfg.tx_array(), &cfg.pulse(), 1e-4).unwrap();
    assert_eq!(ch.len(), 1);
    assert_eq!(ch.tap_offset, 5);

    let lambda = SPEED / cfg.carrier_frequency;
    let k = 2.0 * PI / lambda;
    let spacing = 0.5 * lambda;
    let steer = |y: usize, z: usize, az: f64, el: f64| -> Vec<Complex64> {
        let mut v = Vec::new();
        for m in 0..y {
            for n in 0..z {
                let phase = -k * spacing * (m as f64 * az.sin() * el.sin() + n as f64 * el.cos());
                v.push(Complex64::from_polar(1.0 / ((y * z) as f64).sqrt(), phase));
            }
        }
        v
    };
    let a_r = steer(3, 2, ray.angles.aoa_azimuth, ray.angles.aoa_elevation);
    let a_t = steer(2, 2, ray.angles.aod_azimuth, ray.angles.aod_elevation);
    let gamma = (6.0 * 4.0f64).sqrt();
    let amp = gamma * 10f64.powf(ray.attenuation_db / 20.0);
    for r in 0..6 {
        for c in 0..4 {
            let want = ray.gain * amp * a_r[r] * a_t[c].conj();
            let got = ch.taps[0][(r, c)];
            assert!((got - want).norm() < 1e-12 * want.norm().max(1e-300), "({r},{c})");
        }
    }
}

#[test]
fn direct_path_only_channel_is_rank_one_with_expected_power() {
    let cfg = ScenarioConfig {
        rx_y: 2,
        rx_z: 2,
        tx_y: 3,
        tx_z: 1,
        streams: 1,
        ..ScenarioConfig::default()
    };
    let mut rng = RngHandle::new(6, 1);
    let mut real = realize_channel(&cfg, &mut rng).unwrap();
    real.clusters.clear();
    real.los.present = true;
    let ch = sample_channel(&real, &cfg.rx_array(), &cfg.tx_array(), &cfg.pulse(), 1e-300).unwrap();
    // LOS delay is the grid origin, so only tap 0 is non-zero.
    let peak = ch.taps.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let nonzero: Vec<_> = ch.taps.iter().filter(|t| t.norm() > 1e-12 * peak).collect();
    assert_eq!(nonzero.len(), 1);
    let power = 12.0 * 10f64.powf(real.los.attenuation_db / 10.0);
    assert!((total_tap_energy(&ch) / power - 1.0).abs() < 1e-12);
}

#[test]
fn generation_is_reproducible() {
    let cfg = ScenarioConfig::default();
    let run = || {
        let mut rng = RngHandle::for_trial(42, 0, SubStream::Realization);
        generate_static(&cfg, &mut rng).unwrap()
    };
    let (a_real, a) = run();
    let (b_real, b) = run();
    assert_eq!(a, b);
    assert_eq!(a_real, b_real);
}
