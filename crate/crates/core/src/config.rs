//! Scenario configuration files and seeded user drops.
//!
//! A configuration is a TOML document. Every key is optional and unknown keys
//! are rejected; an empty file describes the default deployment of three
//! 40 m waveguides with four PAs each serving three users at 28 GHz.

use crate::admm::AdmmSettings;
use crate::bcd::BcdSettings;
use crate::model::{
    dbm_to_watts, ModelError, MotionModel, Scenario, SystemGeometry, UserSet, SPEED_OF_LIGHT,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Optimizer or comparison scheme to run on a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Joint design with continuously movable PAs.
    Continuous,
    /// Joint design with PAs restricted to a candidate grid.
    Discrete,
    /// Fixed half-wavelength array at the origin.
    ConventionalMimo,
    /// Continuous design with the radiation ratios frozen at the equal split.
    EqualRadiation,
    /// Continuous design that ignores the motion cost while optimizing.
    TransmitOnly,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Continuous,
        Algorithm::Discrete,
        Algorithm::ConventionalMimo,
        Algorithm::EqualRadiation,
        Algorithm::TransmitOnly,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            Algorithm::Continuous => "continuous",
            Algorithm::Discrete => "discrete",
            Algorithm::ConventionalMimo => "conventional-mimo",
            Algorithm::EqualRadiation => "equal-radiation",
            Algorithm::TransmitOnly => "transmit-only",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.token() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub waveguides: usize,
    pub antennas_per_waveguide: usize,
    /// Waveguide length (m).
    pub length: f64,
    pub height: f64,
    pub waveguide_y: Vec<f64>,
    /// Pre-installed x-coordinates, shared by every waveguide.
    pub initial_positions: Vec<f64>,
    pub carrier_hz: f64,
    pub n_eff: f64,
    /// Minimum PA spacing (m); half a wavelength when absent.
    pub min_spacing: Option<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            waveguides: 3,
            antennas_per_waveguide: 4,
            length: 40.0,
            height: 5.0,
            waveguide_y: vec![-15.0, 0.0, 15.0],
            initial_positions: vec![8.0, 16.0, 24.0, 32.0],
            carrier_hz: 28e9,
            n_eff: 1.4,
            min_spacing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionConfig {
    pub motor_power: f64,
    pub speed: f64,
    pub move_duration: f64,
    pub transmit_duration: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            motor_power: 0.1,
            speed: 1.0,
            move_duration: 0.1,
            transmit_duration: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Uniform over `x in [0, side]`, `y in [-side / 2, side / 2]`.
    Uniform,
    /// Positions listed in the configuration.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UserConfig {
    pub count: usize,
    pub noise_dbm: f64,
    /// SINR target, linear unless `sinr_in_db` is set.
    pub sinr_target: f64,
    pub sinr_in_db: bool,
    pub placement: Placement,
    /// Side of the square service area (m).
    pub area_side: f64,
    /// Ground positions for explicit placement (m).
    pub positions: Vec<[f64; 2]>,
}

impl Default for UserConfig {
    fn default() -> Self {
        Self {
            count: 3,
            noise_dbm: -80.0,
            sinr_target: 24.0,
            sinr_in_db: false,
            placement: Placement::Uniform,
            area_side: 40.0,
            positions: Vec::new(),
        }
    }
}

impl UserConfig {
    /// Linear SINR target.
    pub fn target_linear(&self) -> f64 {
        if self.sinr_in_db {
            10f64.powf(self.sinr_target / 10.0)
        } else {
            self.sinr_target
        }
    }
}

/// Conventional array used by the MIMO comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MimoConfig {
    /// Element spacing along the y-axis in wavelengths.
    pub spacing_wavelengths: f64,
    /// Array centre `(x, y)`; the array sits at the deployment height.
    pub center: [f64; 2],
}

impl Default for MimoConfig {
    fn default() -> Self {
        Self {
            spacing_wavelengths: 0.5,
            center: [0.0, 0.0],
        }
    }
}

/// Everything needed to generate scenarios and run the optimizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Seed of the user-drop generator.
    pub seed: u64,
    /// Independent user drops per sweep point.
    pub drops: usize,
    pub algorithms: Vec<Algorithm>,
    /// Multiplies the service-area side, the waveguide length and every
    /// waveguide coordinate.
    pub area_scale: f64,
    pub geometry: GeometryConfig,
    pub motion: MotionConfig,
    pub users: UserConfig,
    pub admm: AdmmSettings,
    pub discrete: BcdSettings,
    pub mimo: MimoConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            drops: 20,
            algorithms: vec![Algorithm::Continuous],
            area_scale: 1.0,
            geometry: GeometryConfig::default(),
            motion: MotionConfig::default(),
            users: UserConfig::default(),
            admm: AdmmSettings::default(),
            discrete: BcdSettings::default(),
            mimo: MimoConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    /// Checks the configuration by building the geometry for a placeholder drop.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |s: &str| Err(ConfigError::Invalid(s.to_string()));
        if !(self.area_scale > 0.0 && self.area_scale.is_finite()) {
            return bad("area_scale must be positive");
        }
        if self.drops == 0 {
            return bad("drops must be at least 1");
        }
        if self.algorithms.is_empty() {
            return bad("at least one algorithm is required");
        }
        if !(self.users.area_side > 0.0) {
            return bad("users.area_side must be positive");
        }
        if !self.users.noise_dbm.is_finite() || !self.users.sinr_target.is_finite() {
            return bad("noise and SINR target must be finite");
        }
        if self.users.placement == Placement::Explicit
            && self.users.positions.len() != self.users.count
        {
            return bad("explicit placement needs one position per user");
        }
        if !(self.mimo.spacing_wavelengths > 0.0) {
            return bad("mimo.spacing_wavelengths must be positive");
        }
        self.admm
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.discrete
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let placeholder = vec![[0.0, 0.0]; self.users.count];
        self.scenario(placeholder)?;
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.geometry.carrier_hz
    }

    pub fn system_geometry(&self) -> SystemGeometry {
        let g = &self.geometry;
        let s = self.area_scale;
        SystemGeometry {
            waveguides: g.waveguides,
            antennas_per_waveguide: g.antennas_per_waveguide,
            users: self.users.count,
            length: g.length * s,
            height: g.height,
            waveguide_y: g.waveguide_y.iter().map(|y| y * s).collect(),
            carrier_hz: g.carrier_hz,
            n_eff: g.n_eff,
            min_spacing: g.min_spacing.unwrap_or(self.wavelength() / 2.0),
        }
    }

    pub fn motion_model(&self) -> Result<MotionModel, ConfigError> {
        let g = &self.geometry;
        if g.initial_positions.len() != g.antennas_per_waveguide {
            return Err(ConfigError::Invalid(format!(
                "geometry.initial_positions needs {} entries, got {}",
                g.antennas_per_waveguide,
                g.initial_positions.len()
            )));
        }
        let m = &self.motion;
        let s = self.area_scale;
        Ok(MotionModel {
            motor_power: m.motor_power,
            speed: m.speed,
            move_duration: m.move_duration,
            transmit_duration: m.transmit_duration,
            initial_positions: DMatrix::from_fn(g.waveguides, g.antennas_per_waveguide, |_, n| {
                g.initial_positions[n] * s
            }),
        })
    }

    /// Scenario for the given user positions.
    pub fn scenario(&self, positions: Vec<[f64; 2]>) -> Result<Scenario, ConfigError> {
        let users = UserSet::uniform(
            positions,
            dbm_to_watts(self.users.noise_dbm),
            self.users.target_linear(),
        );
        Ok(Scenario::new(
            self.system_geometry(),
            self.motion_model()?,
            users,
        )?)
    }

    /// User positions of drop `index`.
    ///
    /// Drop `i` draws from ChaCha8 seeded with `seed` on stream `i`, so each
    /// drop is reproducible on its own and independent of the others.
    pub fn drop_positions(&self, index: u64) -> Vec<[f64; 2]> {
        match self.users.placement {
            Placement::Explicit => self.users.positions.clone(),
            Placement::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(index);
                let side = self.users.area_side * self.area_scale;
                (0..self.users.count)
                    .map(|_| {
                        let x = rng.random_range(0.0..side);
                        let y = rng.random_range(-0.5 * side..0.5 * side);
                        [x, y]
                    })
                    .collect()
            }
        }
    }

    pub fn drop_scenario(&self, index: u64) -> Result<Scenario, ConfigError> {
        self.scenario(self.drop_positions(index))
    }
}
