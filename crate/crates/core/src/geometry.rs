//! Planar arrays and the deterministic geometry of single-bounce paths.
//!
//! Elevation is measured from the horizontal plane: `0` is horizontal,
//! positive angles point up and negative angles point toward the ground.
//! The array phase uses the `(sin(az) sin(el), cos(el))` projection, so a
//! wave with `az = 0, el = pi/2` hits every element in phase.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Uniform planar array with `y_count` horizontal and `z_count` vertical elements.
///
/// Elements are flattened row-major over `(m, n)`: element `(m, n)` sits at
/// index `m * z_count + n`, `m` counting horizontal and `n` vertical positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarArray {
    pub y_count: usize,
    pub z_count: usize,
    /// Inter-element spacing in wavelengths.
    pub spacing_wavelengths: f64,
}

impl PlanarArray {
    pub fn new(y_count: usize, z_count: usize) -> Self {
        Self {
            y_count,
            z_count,
            spacing_wavelengths: 0.5,
        }
    }

    pub fn elements(&self) -> usize {
        self.y_count * self.z_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Horizontal link length in meters.
    pub d: f64,
    pub h_t: f64,
    pub h_r: f64,
    pub carrier_frequency: f64,
}

impl LinkGeometry {
    pub fn new(d: f64, h_t: f64, h_r: f64, carrier_frequency: f64) -> Result<Self> {
        for (key, v) in [
            ("d", d),
            ("h_t", h_t),
            ("h_r", h_r),
            ("carrier_frequency", carrier_frequency),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        Ok(Self {
            d,
            h_t,
            h_r,
            carrier_frequency,
        })
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }
}

/// Departure and arrival angles of one path, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RayAngles {
    pub aod_azimuth: f64,
    pub aod_elevation: f64,
    pub aoa_azimuth: f64,
    pub aoa_elevation: f64,
}

/// Unit-norm array response toward `(azimuth, elevation)`.
pub fn steering_vector(
    array: &PlanarArray,
    azimuth: f64,
    elevation: f64,
    wavelength: f64,
) -> DVector<Complex64> {
    let k = 2.0 * std::f64::consts::PI / wavelength;
    let spacing = array.spacing_wavelengths * wavelength;
    let horizontal = azimuth.sin() * elevation.sin();
    let vertical = elevation.cos();
    let norm = 1.0 / (array.elements() as f64).sqrt();
    DVector::from_fn(array.elements(), |idx, _| {
        let m = (idx / array.z_count) as f64;
        let n = (idx % array.z_count) as f64;
        Complex64::from_polar(norm, -k * spacing * (m * horizontal + n * vertical))
    })
}

/// Length of the single-bounce path through a scatterer at distance `r_i` from the transmitter.
pub fn ray_path_length(r_i: f64, aod_elevation: f64, aod_azimuth: f64, geom: &LinkGeometry) -> f64 {
    let vertical = geom.h_t - geom.h_r + r_i * aod_elevation.sin();
    let horizontal = geom.d - r_i * aod_elevation.cos() * aod_azimuth.cos();
    r_i + vertical.hypot(horizontal)
}

/// Upper bound on a cluster's distance so that its scatterers stay above ground.
///
/// A departure direction with negative elevation meets the ground after
/// `h_t / |sin(el)|` meters.
pub fn clip_cluster_distance(raw_max: f64, aod_elevation_mean: f64, geom: &LinkGeometry) -> f64 {
    let s = aod_elevation_mean.sin();
    if s < 0.0 {
        raw_max.min(geom.h_t / s.abs())
    } else {
        raw_max
    }
}

/// Direct-path angles, length and delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LosGeometry {
    pub angles: RayAngles,
    pub length: f64,
    pub delay: f64,
}

/// The transmitter boresight points at the receiver (departure azimuth 0); the
/// receiver sees the transmitter behind it (arrival azimuth pi) at the mirrored
/// elevation.
pub fn los_geometry(geom: &LinkGeometry) -> LosGeometry {
    let dh = geom.h_t - geom.h_r;
    let length = geom.d.hypot(dh);
    let elevation = (dh / geom.d).atan();
    LosGeometry {
        angles: RayAngles {
            aod_azimuth: 0.0,
            aod_elevation: -elevation,
            aoa_azimuth: std::f64::consts::PI,
            aoa_elevation: elevation,
        },
        length,
        delay: length / SPEED_OF_LIGHT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn geom(d: f64, h_t: f64, h_r: f64) -> LinkGeometry {
        LinkGeometry::new(d, h_t, h_r, 73e9).unwrap()
    }

    #[test]
    fn single_element_is_one() {
        let a = steering_vector(&PlanarArray::new(1, 1), 0.3, -1.1, 0.004);
        assert_eq!(a.len(), 1);
        assert!((a[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn broadside_is_flat() {
        let arr = PlanarArray::new(4, 3);
        let a = steering_vector(&arr, 0.0, FRAC_PI_2, 0.004);
        let expect = 1.0 / 12f64.sqrt();
        for v in a.iter() {
            assert!((v.re - expect).abs() < 1e-12 && v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn half_wave_endfire_pair() {
        let a = steering_vector(&PlanarArray::new(2, 1), FRAC_PI_2, FRAC_PI_2, 0.004);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a[0] - Complex64::new(s, 0.0)).norm() < 1e-12);
        assert!((a[1] - Complex64::from_polar(s, -std::f64::consts::PI)).norm() < 1e-12);
    }

    #[test]
    fn flattening_is_row_major() {
        // Pure vertical phase progression: index m * Z + n depends only on n.
        let arr = PlanarArray::new(3, 2);
        let a = steering_vector(&arr, 0.0, 1.0, 0.004);
        assert!((a[0] - a[2]).norm() < 1e-12);
        assert!((a[1] - a[3]).norm() < 1e-12);
        assert!((a[0] - a[1]).norm() > 1e-3);
    }

    #[test]
    fn path_length_examples() {
        let g = geom(30.0, 5.0, 5.0);
        assert!((ray_path_length(10.0, 0.0, 0.0, &g) - 30.0).abs() < 1e-12);
        assert!((ray_path_length(10.0, 0.0, FRAC_PI_2, &g) - 40.0).abs() < 1e-12);
    }

    #[test]
    fn clipping_examples() {
        let g = geom(30.0, 7.0, 1.0);
        assert_eq!(clip_cluster_distance(52.5, 0.0, &g), 52.5);
        assert!((clip_cluster_distance(52.5, -FRAC_PI_2, &g) - 7.0).abs() < 1e-12);
        assert!((clip_cluster_distance(52.5, -FRAC_PI_6, &g) - 14.0).abs() < 1e-12);
        assert_eq!(clip_cluster_distance(52.5, 0.4, &g), 52.5);
    }

    #[test]
    fn los_examples() {
        let flat = los_geometry(&geom(30.0, 3.0, 3.0));
        assert!((flat.delay - 30.0 / SPEED_OF_LIGHT).abs() < 1e-20);
        assert!((flat.delay - 100.069e-9).abs() < 1e-12);
        assert_eq!(flat.angles.aod_elevation, 0.0);

        let tilted = los_geometry(&geom(30.0, 7.0, 1.0));
        assert!((tilted.length - 936f64.sqrt()).abs() < 1e-12);
        assert!((tilted.length - 30.594).abs() < 1e-3);
        assert!(tilted.angles.aod_elevation < 0.0);

        let far = los_geometry(&geom(1e9, 7.0, 1.0));
        assert!(far.angles.aod_elevation.abs() < 1e-8);
    }

    #[test]
    fn rejects_non_positive_geometry() {
        match LinkGeometry::new(-5.0, 7.0, 1.0, 73e9) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "d"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(LinkGeometry::new(30.0, 0.0, 1.0, 73e9).is_err());
    }

    proptest! {
        #[test]
        fn steering_vectors_have_unit_norm(
            y in 1usize..12, z in 1usize..12,
            az in -7.0f64..7.0, el in -7.0f64..7.0,
        ) {
            let a = steering_vector(&PlanarArray::new(y, z), az, el, 0.0041);
            prop_assert!((a.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn path_length_monotone_on_axis(d in 1.0f64..200.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let g = geom(d, 4.0, 4.0);
            let (lo, hi) = if a < b { (a * d, b * d) } else { (b * d, a * d) };
            prop_assert!(ray_path_length(lo, 0.0, 0.0, &g) <= ray_path_length(hi, 0.0, 0.0, &g) + 1e-9);
        }

        #[test]
        fn path_never_shorter_than_direct(
            r in 0.01f64..100.0, el in -1.57f64..1.57, az in -3.2f64..3.2,
            d in 1.0f64..100.0, ht in 0.5f64..20.0, hr in 0.5f64..20.0,
        ) {
            let g = geom(d, ht, hr);
            prop_assert!(ray_path_length(r, el, az, &g) >= los_geometry(&g).length - 1e-9);
        }

        #[test]
        fn clip_is_bounded(raw in 0.01f64..500.0, el in -1.57f64..1.57, ht in 0.1f64..30.0) {
            let g = geom(30.0, ht, 1.0);
            let c = clip_cluster_distance(raw, el, &g);
            prop_assert!(c <= raw && c > 0.0);
        }
    }
}
