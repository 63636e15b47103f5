//! Reference schemes the joint designs are compared against.
//!
//! The conventional array has one fixed antenna per RF chain and no radiation
//! ratios, so it gets its own small outcome type. The two PASS baselines are
//! restricted runs of the continuous optimizer and return a [`SolveReport`].

use crate::admm::{self, AdmmError, AdmmSettings};
use crate::beamforming::{self, BeamformError};
use crate::model::{sinr, watts_to_dbm, Beamformer, MotionModel, Scenario, UserSet};
use crate::report::{SolveReport, SolveStatus};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    ConventionalMimo,
    EqualRadiationPass,
    TransmitOnlyPass,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [
        BaselineKind::ConventionalMimo,
        BaselineKind::EqualRadiationPass,
        BaselineKind::TransmitOnlyPass,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            BaselineKind::ConventionalMimo => "conventional-mimo",
            BaselineKind::EqualRadiationPass => "equal-radiation-pass",
            BaselineKind::TransmitOnlyPass => "transmit-only-pass",
        }
    }
}

/// Positions of the fixed antennas of a conventional array (m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub elements: Vec<[f64; 3]>,
    pub carrier_hz: f64,
}

impl ArrayGeometry {
    /// `count` elements on a line parallel to the y-axis, `spacing` apart and
    /// centred on `(center[0], center[1], height)`.
    pub fn line(
        count: usize,
        spacing: f64,
        center: [f64; 2],
        height: f64,
        carrier_hz: f64,
    ) -> Self {
        let mid = (count as f64 - 1.0) / 2.0;
        let elements = (0..count)
            .map(|i| [center[0], center[1] + (i as f64 - mid) * spacing, height])
            .collect();
        Self {
            elements,
            carrier_hz,
        }
    }

    pub fn wavelength(&self) -> f64 {
        crate::model::SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Line-of-sight channel `beta exp(j k0 r) / r` from every element to a ground point.
    pub fn channel(&self, user: [f64; 2]) -> DVector<Complex64> {
        let lambda = self.wavelength();
        let beta = lambda / (4.0 * std::f64::consts::PI);
        let k0 = 2.0 * std::f64::consts::PI / lambda;
        DVector::from_iterator(
            self.elements.len(),
            self.elements.iter().map(|e| {
                let r = ((e[0] - user[0]).powi(2) + (e[1] - user[1]).powi(2) + e[2] * e[2]).sqrt();
                Complex64::from_polar(beta / r, k0 * r)
            }),
        )
    }

    pub fn channels(&self, users: &UserSet) -> Vec<DVector<Complex64>> {
        users.positions.iter().map(|&u| self.channel(u)).collect()
    }
}

/// Result of the conventional-array baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoOutcome {
    pub status: SolveStatus,
    pub beamformer: Beamformer,
    pub transmit_power_w: f64,
    /// Transmit power weighted by the transmission share of the frame.
    pub average_power_w: f64,
    /// `max_k (Gamma_k - gamma_k) / Gamma_k` on the final beamformer.
    pub sinr_relative_shortfall: f64,
    pub elapsed_s: f64,
}

impl MimoOutcome {
    pub fn average_power_dbm(&self) -> f64 {
        watts_to_dbm(self.average_power_w)
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.status.has_design() && self.sinr_relative_shortfall <= tol
    }
}

/// Minimum-power beamforming on a fixed conventional array.
pub fn mimo_power_min(
    users: &UserSet,
    array: &ArrayGeometry,
    motion: &MotionModel,
    tol: f64,
) -> MimoOutcome {
    let start = Instant::now();
    let channels = array.channels(users);
    let identity = DMatrix::from_element(array.elements.len(), 1, 1.0);
    let solved =
        beamforming::min_power_beamformer(&channels, &users.noise_power, &users.sinr_target, tol)
            .and_then(|w| {
                beamforming::restore_qos(
                    &channels,
                    &identity,
                    &w,
                    &users.noise_power,
                    &users.sinr_target,
                )
                .ok_or(BeamformError::Infeasible)
            });
    let (status, bf) = match solved {
        Ok(w) => (SolveStatus::Converged, w),
        Err(BeamformError::Infeasible) => (
            SolveStatus::QosInfeasible,
            Beamformer::zeros(array.elements.len(), users.len()),
        ),
        Err(_) => (
            SolveStatus::SolverFailure,
            Beamformer::zeros(array.elements.len(), users.len()),
        ),
    };
    let gammas = sinr(&channels, &identity, &bf, &users.noise_power);
    let shortfall = gammas
        .iter()
        .zip(&users.sinr_target)
        .map(|(g, t)| (t - g) / t)
        .fold(f64::NEG_INFINITY, f64::max);
    let p = bf.power();
    MimoOutcome {
        status,
        transmit_power_w: p,
        average_power_w: motion.transmit_weight() * p,
        beamformer: bf,
        sinr_relative_shortfall: shortfall,
        elapsed_s: start.elapsed().as_secs_f64(),
    }
}

/// Continuous design with the radiation ratios frozen at `1 / sqrt(N)`.
pub fn equal_power_pass(
    scenario: &Scenario,
    settings: &AdmmSettings,
) -> Result<SolveReport, AdmmError> {
    let settings = AdmmSettings {
        update_alpha: false,
        ..settings.clone()
    };
    admm::run_named(
        scenario,
        &settings,
        BaselineKind::EqualRadiationPass.token(),
    )
}

/// Continuous design that ignores the motion cost while optimizing.
///
/// The returned report is audited against the true scenario, so its average
/// power includes the energy spent moving the antennas.
pub fn transmit_only_pass(
    scenario: &Scenario,
    settings: &AdmmSettings,
) -> Result<SolveReport, AdmmError> {
    let settings = AdmmSettings {
        motion_in_objective: false,
        ..settings.clone()
    };
    admm::run_named(scenario, &settings, BaselineKind::TransmitOnlyPass.token())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn motion() -> MotionModel {
        MotionModel {
            motor_power: 0.1,
            speed: 1.0,
            move_duration: 0.1,
            transmit_duration: 0.9,
            initial_positions: DMatrix::from_element(1, 1, 10.0),
        }
    }

    #[test]
    fn line_array_is_centred_and_spaced() {
        let a = ArrayGeometry::line(3, 0.5, [1.0, 2.0], 5.0, 28e9);
        assert_eq!(
            a.elements,
            vec![[1.0, 1.5, 5.0], [1.0, 2.0, 5.0], [1.0, 2.5, 5.0]]
        );
    }

    #[test]
    fn single_user_matches_matched_filter_power() {
        let array = ArrayGeometry::line(3, 0.00535, [0.0, 0.0], 5.0, 28e9);
        let users = UserSet::uniform(vec![[12.0, -4.0]], 1e-11, 24.0);
        let h = array.channel(users.positions[0]);
        let out = mimo_power_min(&users, &array, &motion(), 1e-10);
        assert_eq!(out.status, SolveStatus::Converged);
        let expected = 24.0 * 1e-11 / h.norm_squared();
        assert_relative_eq!(out.transmit_power_w, expected, max_relative = 1e-6);
        assert_relative_eq!(out.average_power_w, 0.9 * expected, max_relative = 1e-6);
        assert!(out.is_feasible(1e-6));
    }

    #[test]
    fn power_vanishes_with_target() {
        let array = ArrayGeometry::line(2, 0.00535, [0.0, 0.0], 5.0, 28e9);
        let users = UserSet::uniform(vec![[12.0, -4.0], [20.0, 7.0]], 1e-11, 1e-9);
        let tiny = mimo_power_min(&users, &array, &motion(), 1e-10);
        let users = UserSet::uniform(users.positions.clone(), 1e-11, 24.0);
        let normal = mimo_power_min(&users, &array, &motion(), 1e-10);
        assert!(tiny.transmit_power_w < 1e-9 * normal.transmit_power_w);
    }
}
