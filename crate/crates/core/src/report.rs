//! Outcome of a solver run: trajectory, final design and its audit.

use crate::model::{
    audit_feasibility, average_power, total_motion_energy, watts_to_dbm, AntennaState, Beamformer,
    FeasibilityReport, Scenario,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// Stopping rule met.
    Converged,
    /// Iteration budget exhausted before the stopping rule was met.
    MaxIterations,
    /// SINR targets could not be met at the first beamforming step.
    QosInfeasible,
    /// Rounded discrete selection could not be repaired.
    RoundingFailed,
    /// A subproblem failed numerically.
    SolverFailure,
}

impl SolveStatus {
    pub fn token(&self) -> &'static str {
        match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max-iterations",
            SolveStatus::QosInfeasible => "qos-infeasible",
            SolveStatus::RoundingFailed => "rounding-failed",
            SolveStatus::SolverFailure => "solver-failure",
        }
    }

    /// Whether the run produced a design worth auditing.
    pub fn has_design(&self) -> bool {
        matches!(self, SolveStatus::Converged | SolveStatus::MaxIterations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `f1` for the continuous design, the penalized surrogate for the discrete one.
    pub objective: f64,
    /// Splitting residual (continuous) or largest distance of `z` from `{0, 1}` (discrete).
    pub residual: f64,
    /// Largest constraint violation of the iterate as seen by the algorithm.
    pub max_violation: f64,
    /// Penalty weight in force during the iteration (`rho1` or `zeta`).
    pub penalty: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub algorithm: String,
    pub status: SolveStatus,
    pub iterations: Vec<IterationRecord>,
    pub state: AntennaState,
    pub beamformer: Beamformer,
    /// Selected candidate per PA (row-major `m * N + n`), discrete runs only.
    pub selection: Option<Vec<usize>>,
    pub audit: FeasibilityReport,
    /// Average power recomputed from the final design (W).
    pub average_power_w: f64,
    pub transmit_power_w: f64,
    pub motion_energy_j: f64,
    /// Number of iterations in which a subproblem fell back to its previous value.
    pub recoveries: usize,
    pub elapsed_s: f64,
}

impl SolveReport {
    /// Builds a report whose powers and audit are recomputed from `(state, bf)`.
    #[allow(clippy::too_many_arguments)]
    pub fn audited(
        algorithm: &str,
        status: SolveStatus,
        iterations: Vec<IterationRecord>,
        state: AntennaState,
        beamformer: Beamformer,
        selection: Option<Vec<usize>>,
        recoveries: usize,
        elapsed_s: f64,
        scenario: &Scenario,
    ) -> Self {
        let audit = audit_feasibility(&state, &beamformer, scenario);
        let average_power_w = average_power(&beamformer, &state.positions, &scenario.motion);
        Self {
            algorithm: algorithm.to_string(),
            status,
            iterations,
            transmit_power_w: beamformer.power(),
            motion_energy_j: total_motion_energy(&state.positions, &scenario.motion),
            state,
            beamformer,
            selection,
            audit,
            average_power_w,
            recoveries,
            elapsed_s,
        }
    }

    pub fn average_power_dbm(&self) -> f64 {
        watts_to_dbm(self.average_power_w)
    }

    /// True when the run ended with a design that passes the audit at `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.status.has_design() && self.audit.is_feasible(tol)
    }
}
