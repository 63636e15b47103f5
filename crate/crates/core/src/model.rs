//! Physical model of a pinching-antenna system.
//!
//! `M` dielectric waveguides run parallel to the x-axis at height `h`, each fed
//! at `x = 0` and carrying `N` movable pinching antennas (PAs). `K` single-antenna
//! users sit on the ground plane. Everything the optimizers report is evaluated
//! through the functions in this module, with all powers in watts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("invalid motion model: {0}")]
    Motion(String),
    #[error("invalid user set: {0}")]
    Users(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Waveguide layout and carrier constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemGeometry {
    pub waveguides: usize,
    pub antennas_per_waveguide: usize,
    pub users: usize,
    /// Waveguide length `D` (m).
    pub length: f64,
    /// Deployment height `h` (m).
    pub height: f64,
    /// y-coordinate of each waveguide (m).
    pub waveguide_y: Vec<f64>,
    pub carrier_hz: f64,
    pub n_eff: f64,
    /// Minimum spacing between adjacent PAs on one waveguide (m).
    pub min_spacing: f64,
}

impl SystemGeometry {
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |s: &str| Err(ModelError::Geometry(s.to_string()));
        if self.waveguides == 0 || self.antennas_per_waveguide == 0 || self.users == 0 {
            return err("M, N and K must all be at least 1");
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return err("waveguide length must be positive");
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return err("deployment height must be positive");
        }
        if self.waveguide_y.len() != self.waveguides {
            return err("one y-coordinate per waveguide is required");
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return err("carrier frequency must be positive");
        }
        if !(self.n_eff >= 0.0 && self.n_eff.is_finite()) {
            return err("effective refractive index must be non-negative");
        }
        if !(self.min_spacing >= 0.0) {
            return err("minimum spacing must be non-negative");
        }
        if (self.antennas_per_waveguide - 1) as f64 * self.min_spacing > self.length {
            return err("(N-1) * delta_min exceeds the waveguide length");
        }
        Ok(())
    }

    pub fn num_antennas(&self) -> usize {
        self.waveguides * self.antennas_per_waveguide
    }

    /// Free-space wavelength `c / f_c`.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Guided wavelength `lambda_c / n_eff`.
    pub fn guided_wavelength(&self) -> f64 {
        self.wavelength() / self.n_eff
    }

    /// Free-space wavenumber `2 pi / lambda_c`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    /// Path-loss constant `beta = lambda_c / (4 pi)`.
    pub fn beta(&self) -> f64 {
        self.wavelength() / (4.0 * PI)
    }

    /// Flat index of PA `(m, n)`.
    #[inline]
    pub fn pa_index(&self, m: usize, n: usize) -> usize {
        m * self.antennas_per_waveguide + n
    }
}

/// Two-phase protocol and motor parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    /// Motor power `P` (W).
    pub motor_power: f64,
    /// PA speed `v` (m/s).
    pub speed: f64,
    /// Movement phase `T1` (s).
    pub move_duration: f64,
    /// Transmission phase `T2` (s).
    pub transmit_duration: f64,
    /// Pre-installed x-coordinates, `M x N` (m).
    pub initial_positions: DMatrix<f64>,
}

impl MotionModel {
    pub fn validate(&self, geom: &SystemGeometry) -> Result<(), ModelError> {
        let err = |s: String| Err(ModelError::Motion(s));
        if !(self.motor_power >= 0.0 && self.motor_power.is_finite()) {
            return err("motor power must be non-negative".into());
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return err("speed must be positive".into());
        }
        if !(self.move_duration > 0.0 && self.transmit_duration > 0.0) {
            return err("phase durations must be positive".into());
        }
        let x0 = &self.initial_positions;
        if x0.nrows() != geom.waveguides || x0.ncols() != geom.antennas_per_waveguide {
            return err(format!(
                "initial positions must be {}x{}, got {}x{}",
                geom.waveguides,
                geom.antennas_per_waveguide,
                x0.nrows(),
                x0.ncols()
            ));
        }
        for m in 0..x0.nrows() {
            for n in 0..x0.ncols() {
                let x = x0[(m, n)];
                if !(0.0..=geom.length).contains(&x) {
                    return err(format!("initial position ({m},{n}) = {x} outside [0, D]"));
                }
                if n > 0 && x - x0[(m, n - 1)] < geom.min_spacing {
                    return err(format!(
                        "initial positions on waveguide {m} violate spacing at {n}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Largest displacement reachable in the movement phase, `v * T1`.
    pub fn max_displacement(&self) -> f64 {
        self.speed * self.move_duration
    }

    pub fn frame_duration(&self) -> f64 {
        self.move_duration + self.transmit_duration
    }

    /// Weight of the transmit power in the average-power objective.
    pub fn transmit_weight(&self) -> f64 {
        self.transmit_duration / self.frame_duration()
    }

    /// Average-power cost per metre of PA displacement.
    pub fn motion_weight(&self) -> f64 {
        self.motor_power / (self.speed * self.frame_duration())
    }

    /// Reachable interval `[max(0, x' - vT1), min(D, x' + vT1)]` for PA `(m, n)`.
    pub fn reachable_interval(&self, geom: &SystemGeometry, m: usize, n: usize) -> (f64, f64) {
        let x0 = self.initial_positions[(m, n)];
        let d = self.max_displacement();
        ((x0 - d).max(0.0), (x0 + d).min(geom.length))
    }
}

/// Ground users with their noise powers and linear SINR targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSet {
    /// Ground coordinates `(x, y)`; the users sit at `z = 0`.
    pub positions: Vec<[f64; 2]>,
    /// Noise power per user (W).
    pub noise_power: Vec<f64>,
    /// SINR threshold per user (linear).
    pub sinr_target: Vec<f64>,
}

impl UserSet {
    pub fn uniform(positions: Vec<[f64; 2]>, noise_power: f64, sinr_target: f64) -> Self {
        let k = positions.len();
        Self {
            positions,
            noise_power: vec![noise_power; k],
            sinr_target: vec![sinr_target; k],
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self, geom: &SystemGeometry) -> Result<(), ModelError> {
        let k = self.positions.len();
        if k != geom.users {
            return Err(ModelError::Users(format!(
                "expected {} users, got {k}",
                geom.users
            )));
        }
        if self.noise_power.len() != k || self.sinr_target.len() != k {
            return Err(ModelError::Users(
                "noise and SINR lists must have one entry per user".into(),
            ));
        }
        if self
            .noise_power
            .iter()
            .any(|&s| !(s > 0.0 && s.is_finite()))
        {
            return Err(ModelError::Users("noise powers must be positive".into()));
        }
        if self
            .sinr_target
            .iter()
            .any(|&g| !(g > 0.0 && g.is_finite()))
        {
            return Err(ModelError::Users("SINR targets must be positive".into()));
        }
        Ok(())
    }
}

/// The static world a design is computed for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub geometry: SystemGeometry,
    pub motion: MotionModel,
    pub users: UserSet,
}

impl Scenario {
    pub fn new(
        geometry: SystemGeometry,
        motion: MotionModel,
        users: UserSet,
    ) -> Result<Self, ModelError> {
        let s = Self {
            geometry,
            motion,
            users,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.geometry.validate()?;
        self.motion.validate(&self.geometry)?;
        self.users.validate(&self.geometry)
    }
}

/// PA positions and radiation power ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaState {
    /// `M x N` x-coordinates (m).
    pub positions: DMatrix<f64>,
    /// `M x N` radiation ratios `alpha_{m,n} >= 0`.
    pub ratios: DMatrix<f64>,
}

impl AntennaState {
    /// Pre-installed positions with power split equally over each waveguide.
    pub fn equal_split(motion: &MotionModel) -> Self {
        let x = motion.initial_positions.clone();
        let n = x.ncols();
        let ratios = DMatrix::from_element(x.nrows(), n, 1.0 / (n as f64).sqrt());
        Self {
            positions: x,
            ratios,
        }
    }
}

/// Complex `M x K` matrix of per-waveguide feed weights; column `k` serves user `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Beamformer {
    pub weights: DMatrix<Complex64>,
}

impl Beamformer {
    pub fn zeros(waveguides: usize, users: usize) -> Self {
        Self {
            weights: DMatrix::zeros(waveguides, users),
        }
    }

    /// Total transmit power `sum_k ||w_k||^2`.
    pub fn power(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_sqr()).sum()
    }

    pub fn column(&self, k: usize) -> DVector<Complex64> {
        self.weights.column(k).into_owned()
    }
}

/// Distance between PA `(m, n)` at `x` and ground point `user`.
#[inline]
pub fn pa_user_distance(geom: &SystemGeometry, m: usize, x: f64, user: [f64; 2]) -> f64 {
    let dx = x - user[0];
    let dy = geom.waveguide_y[m] - user[1];
    (dx * dx + dy * dy + geom.height * geom.height).sqrt()
}

/// Squared distance between PA and user excluding the x-offset, `(y_m - y_k)^2 + h^2`.
#[inline]
pub fn lateral_distance_sq(geom: &SystemGeometry, m: usize, user: [f64; 2]) -> f64 {
    let dy = geom.waveguide_y[m] - user[1];
    dy * dy + geom.height * geom.height
}

/// Channel phase `(2 pi / lambda_c)(r + n_eff x)` for a PA at `x` on waveguide `m`.
#[inline]
pub fn channel_phase(geom: &SystemGeometry, m: usize, x: f64, user: [f64; 2]) -> f64 {
    geom.wavenumber() * (pa_user_distance(geom, m, x, user) + geom.n_eff * x)
}

/// Single element of the effective channel for a PA at `x` on waveguide `m`.
#[inline]
pub fn channel_element(geom: &SystemGeometry, m: usize, x: f64, user: [f64; 2]) -> Complex64 {
    let r = pa_user_distance(geom, m, x, user);
    let phase = geom.wavenumber() * (r + geom.n_eff * x);
    Complex64::from_polar(geom.beta() / r, phase)
}

/// Effective channel `G^H h_k` of length `M N`: in-waveguide propagation from the
/// feed at `x = 0` composed with the spherical-wave free-space link.
pub fn effective_channel(
    geom: &SystemGeometry,
    positions: &DMatrix<f64>,
    user: [f64; 2],
) -> DVector<Complex64> {
    let n_ant = geom.antennas_per_waveguide;
    DVector::from_fn(geom.num_antennas(), |i, _| {
        let (m, n) = (i / n_ant, i % n_ant);
        channel_element(geom, m, positions[(m, n)], user)
    })
}

/// Effective channels of every user.
pub fn effective_channels(
    geom: &SystemGeometry,
    positions: &DMatrix<f64>,
    users: &UserSet,
) -> Vec<DVector<Complex64>> {
    users
        .positions
        .iter()
        .map(|&u| effective_channel(geom, positions, u))
        .collect()
}

/// Block-diagonal `M N x M` radiation matrix `A` built from the `M x N` ratios.
pub fn radiation_matrix(ratios: &DMatrix<f64>) -> DMatrix<f64> {
    let (m_wg, n_pa) = ratios.shape();
    let mut a = DMatrix::zeros(m_wg * n_pa, m_wg);
    for m in 0..m_wg {
        for n in 0..n_pa {
            a[(m * n_pa + n, m)] = ratios[(m, n)];
        }
    }
    a
}

/// Per-waveguide combined channel `A^H t`: entry `m` is `sum_n alpha_{m,n} t_{m,n}`.
pub fn combined_channel(channel: &DVector<Complex64>, ratios: &DMatrix<f64>) -> DVector<Complex64> {
    let (m_wg, n_pa) = ratios.shape();
    DVector::from_fn(m_wg, |m, _| {
        (0..n_pa)
            .map(|n| channel[m * n_pa + n] * ratios[(m, n)])
            .sum()
    })
}

/// Received amplitude `t^H A w`.
pub fn beam_gain(
    channel: &DVector<Complex64>,
    ratios: &DMatrix<f64>,
    w: &DVector<Complex64>,
) -> Complex64 {
    combined_channel(channel, ratios).dotc(w)
}

/// Per-user SINR for effective channels `t_k`, ratios `alpha` and beamformer `W`.
pub fn sinr(
    channels: &[DVector<Complex64>],
    ratios: &DMatrix<f64>,
    bf: &Beamformer,
    noise: &[f64],
) -> Vec<f64> {
    channels
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let b = combined_channel(t, ratios);
            let mut signal = 0.0;
            let mut interference = 0.0;
            for j in 0..bf.weights.ncols() {
                let g = b.dotc(&bf.weights.column(j)).norm_sqr();
                if j == k {
                    signal = g;
                } else {
                    interference += g;
                }
            }
            signal / (interference + noise[k])
        })
        .collect()
}

/// Energy spent moving one PA from `x_init` to `x`, `P |x - x_init| / v` (J).
pub fn motion_energy(x: f64, x_init: f64, motion: &MotionModel) -> f64 {
    motion.motor_power * (x - x_init).abs() / motion.speed
}

/// Total movement energy of all PAs (J).
pub fn total_motion_energy(positions: &DMatrix<f64>, motion: &MotionModel) -> f64 {
    positions
        .iter()
        .zip(motion.initial_positions.iter())
        .map(|(&x, &x0)| motion_energy(x, x0, motion))
        .sum()
}

/// Average power over one frame: transmit power during `T2` plus motion energy,
/// both spread over `T1 + T2`.
pub fn average_power(bf: &Beamformer, positions: &DMatrix<f64>, motion: &MotionModel) -> f64 {
    motion.transmit_weight() * bf.power()
        + total_motion_energy(positions, motion) / motion.frame_duration()
}

/// Watts to dBm.
pub fn watts_to_dbm(p: f64) -> f64 {
    10.0 * (p * 1000.0).log10()
}

/// dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

/// Worst violation of each constraint of the average-power problem.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// `max_k (Gamma_k - gamma_k)`, linear units.
    pub sinr_shortfall: f64,
    /// `max_k (Gamma_k - gamma_k) / Gamma_k`.
    pub sinr_relative_shortfall: f64,
    /// `max_m ||alpha_m||^2 - 1`.
    pub radiation_excess: f64,
    /// Most negative ratio, reported as a positive violation.
    pub negative_ratio: f64,
    /// `max (delta_min - (x_{m,n} - x_{m,n-1}))`.
    pub spacing_deficit: f64,
    /// Largest excursion outside `[0, D]`.
    pub range_excess: f64,
    /// `max |x - x'| - v T1`.
    pub movement_excess: f64,
}

impl FeasibilityReport {
    /// The SINR check is relative to each target; all others are absolute.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.worst() <= tol
    }

    pub fn worst(&self) -> f64 {
        [
            self.sinr_relative_shortfall,
            self.radiation_excess,
            self.negative_ratio,
            self.spacing_deficit,
            self.range_excess,
            self.movement_excess,
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Evaluate every constraint of the design `(state, W)` against the true channels.
pub fn audit_feasibility(
    state: &AntennaState,
    bf: &Beamformer,
    scenario: &Scenario,
) -> FeasibilityReport {
    let geom = &scenario.geometry;
    let motion = &scenario.motion;
    let users = &scenario.users;
    let channels = effective_channels(geom, &state.positions, users);
    let gammas = sinr(&channels, &state.ratios, bf, &users.noise_power);

    let mut rep = FeasibilityReport {
        sinr_shortfall: f64::NEG_INFINITY,
        sinr_relative_shortfall: f64::NEG_INFINITY,
        radiation_excess: f64::NEG_INFINITY,
        negative_ratio: f64::NEG_INFINITY,
        spacing_deficit: f64::NEG_INFINITY,
        range_excess: f64::NEG_INFINITY,
        movement_excess: f64::NEG_INFINITY,
    };
    for (g, &target) in gammas.iter().zip(&users.sinr_target) {
        rep.sinr_shortfall = rep.sinr_shortfall.max(target - g);
        rep.sinr_relative_shortfall = rep.sinr_relative_shortfall.max((target - g) / target);
    }
    let x = &state.positions;
    let (m_wg, n_pa) = x.shape();
    for m in 0..m_wg {
        let row_norm: f64 = (0..n_pa).map(|n| state.ratios[(m, n)].powi(2)).sum();
        rep.radiation_excess = rep.radiation_excess.max(row_norm - 1.0);
        for n in 0..n_pa {
            rep.negative_ratio = rep.negative_ratio.max(-state.ratios[(m, n)]);
            let xi = x[(m, n)];
            rep.range_excess = rep.range_excess.max(-xi).max(xi - geom.length);
            let moved = (xi - motion.initial_positions[(m, n)]).abs();
            rep.movement_excess = rep.movement_excess.max(moved - motion.max_displacement());
            if n > 0 {
                rep.spacing_deficit = rep
                    .spacing_deficit
                    .max(geom.min_spacing - (xi - x[(m, n - 1)]));
            }
        }
    }
    if n_pa == 1 {
        rep.spacing_deficit = f64::NEG_INFINITY;
    }
    rep
}

/// Removes solver round-off from a design: positions are clipped to their
/// reachable intervals with spacing restored left to right, ratios are made
/// non-negative and each waveguide row is scaled into the unit ball.
pub fn project_design(state: &AntennaState, scenario: &Scenario) -> AntennaState {
    let geom = &scenario.geometry;
    let motion = &scenario.motion;
    let mut x = state.positions.clone();
    let mut a = state.ratios.clone();
    for m in 0..x.nrows() {
        for n in 0..x.ncols() {
            let (lo, hi) = motion.reachable_interval(geom, m, n);
            let mut v = x[(m, n)].clamp(lo, hi);
            if n > 0 {
                v = v.max(x[(m, n - 1)] + geom.min_spacing).min(hi);
            }
            x[(m, n)] = v;
        }
        let mut norm2 = 0.0;
        for n in 0..a.ncols() {
            a[(m, n)] = a[(m, n)].max(0.0);
            norm2 += a[(m, n)] * a[(m, n)];
        }
        if norm2 > 1.0 {
            let s = 1.0 / norm2.sqrt();
            for n in 0..a.ncols() {
                a[(m, n)] *= s;
            }
        }
    }
    AntennaState {
        positions: x,
        ratios: a,
    }
}
