//! Path loss, shadow fading and line-of-sight probability for the four
//! urban-micro and indoor-hotspot scenarios.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngHandle;
use crate::SPEED_OF_LIGHT;

/// Scenario family; each has a LOS and an NLOS parameter row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Scenario {
    UmiStreetCanyon,
    UmiOpenSquare,
    InhOffice,
    InhShoppingMall,
}

/// Geometry class selecting the LOS-probability law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioClass {
    Umi,
    Inh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkCondition {
    Los,
    Nlos,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::UmiStreetCanyon,
        Scenario::UmiOpenSquare,
        Scenario::InhOffice,
        Scenario::InhShoppingMall,
    ];

    pub fn class(self) -> ScenarioClass {
        match self {
            Scenario::UmiStreetCanyon | Scenario::UmiOpenSquare => ScenarioClass::Umi,
            Scenario::InhOffice | Scenario::InhShoppingMall => ScenarioClass::Inh,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::UmiStreetCanyon => "UMi-StreetCanyon",
            Scenario::UmiOpenSquare => "UMi-OpenSquare",
            Scenario::InhOffice => "InH-Office",
            Scenario::InhShoppingMall => "InH-ShoppingMall",
        }
    }

    /// Tabulated path-loss parameters for this scenario and link condition.
    pub fn params(self, condition: LinkCondition) -> ScenarioParams {
        use LinkCondition::*;
        use Scenario::*;
        let (n, sigma_sf, b, f0) = match (self, condition) {
            (UmiStreetCanyon, Los) => (1.98, 3.1, 0.0, None),
            (UmiStreetCanyon, Nlos) => (3.19, 8.2, 0.0, None),
            (UmiOpenSquare, Los) => (1.85, 4.2, 0.0, None),
            (UmiOpenSquare, Nlos) => (2.89, 7.1, 0.0, None),
            (InhOffice, Los) => (1.73, 3.02, 0.0, None),
            (InhOffice, Nlos) => (3.19, 8.29, 0.06, Some(24.2e9)),
            (InhShoppingMall, Los) => (1.73, 2.01, 0.0, None),
            (InhShoppingMall, Nlos) => (2.59, 7.40, 0.01, Some(39.5e9)),
        };
        ScenarioParams {
            scenario: self,
            condition,
            n,
            sigma_sf,
            b,
            f0,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::config(
                    "scenario",
                    format!(
                        "unknown scenario `{s}` (expected one of UMi-StreetCanyon, \
                         UMi-OpenSquare, InH-Office, InH-ShoppingMall)"
                    ),
                )
            })
    }
}

impl TryFrom<String> for Scenario {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Scenario> for String {
    fn from(s: Scenario) -> String {
        s.name().to_string()
    }
}

/// One row of the path-loss table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub scenario: Scenario,
    pub condition: LinkCondition,
    /// Path-loss exponent.
    pub n: f64,
    /// Shadow-fading standard deviation, dB.
    pub sigma_sf: f64,
    pub b: f64,
    /// Reference frequency in Hz; only meaningful when `b != 0`.
    pub f0: Option<f64>,
}

/// Path gain in dB (negative for attenuation) at distance `r`.
///
/// `shadow_db` is the shadow-fading realization and is subtracted. The
/// corresponding amplitude factor is `10^(L / 20)`.
pub fn path_loss_db(params: &ScenarioParams, r: f64, wavelength: f64, shadow_db: f64) -> f64 {
    let bracket = match params.f0 {
        Some(f0) if params.b != 0.0 => {
            1.0 - params.b + params.b * SPEED_OF_LIGHT / (wavelength * f0)
        }
        _ => 1.0,
    };
    -20.0 * (4.0 * std::f64::consts::PI / wavelength).log10()
        - 10.0 * params.n * bracket * r.log10()
        - shadow_db
}

/// Zero-mean Gaussian shadow fading in dB with the row's standard deviation.
pub fn sample_shadow_fading(params: &ScenarioParams, rng: &mut RngHandle) -> f64 {
    rng.normal(0.0, params.sigma_sf)
}

/// Probability that a direct path exists over a horizontal distance `d`.
pub fn los_probability(class: ScenarioClass, d: f64) -> f64 {
    match class {
        ScenarioClass::Umi => {
            let e = (-d / 39.0).exp();
            (20.0 / d).min(1.0) * (1.0 - e) + e
        }
        ScenarioClass::Inh => {
            if d <= 1.2 {
                1.0
            } else if d <= 6.5 {
                (-(d - 1.2) / 4.7).exp()
            } else {
                0.32 * (-(d - 6.5) / 32.6).exp()
            }
        }
    }
}

/// LOS indicator, Bernoulli with [`los_probability`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LosIndicator(pub bool);

pub fn draw_los(class: ScenarioClass, d: f64, rng: &mut RngHandle) -> LosIndicator {
    LosIndicator(rng.bernoulli(los_probability(class, d)))
}
