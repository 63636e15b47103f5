//! ADMM for continuous antenna movement.
//!
//! The channel `t_{k,m,n} = beta e^{j theta_{k,m,n}} / r_{k,m,n}` is split by two
//! equality constraints,
//!
//! ```text
//!   theta = phi(X)              (phase split, dual mu)
//!   R_k(X) t_k = u_k(theta)     (channel split, dual lambda_k)
//! ```
//!
//! and the augmented Lagrangian is minimized block by block in the order
//! `W, t, alpha, theta, X`, followed by dual ascent and penalty growth.
//! Each block performs a single convex (or closed-form) step per outer iteration.
//!
//! Indexing: PA `(m, n)` is `i = m * N + n`; the phase entry for user `k` is
//! `k * M * N + i`.

use crate::bcd::{local_search, BcdSettings, DiscreteGrid, RoundedDesign};
use crate::beamforming::{self, BeamformError};
use crate::conic::{self, Affine, ComplexAffine, ComplexVarBlock, ConicProblem};
use crate::model::{
    average_power, channel_phase, combined_channel, effective_channels, project_design, sinr,
    total_motion_energy, AntennaState, Beamformer, ModelError, Scenario,
};
use crate::report::{IterationRecord, SolveReport, SolveStatus};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdmmError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid ADMM settings: {0}")]
    Settings(String),
}

/// How the channel proxies `t_k` are updated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyUpdate {
    /// Minimize the channel-split penalty alone under the linearized SINR
    /// constraints. From a consistent start the previous `t` is already optimal,
    /// so the antennas never leave their initial positions.
    PenaltyOnly,
    /// Jointly choose `t` and a common rescaling of `W`, trading transmit power
    /// against the channel-split penalty. The SINR constraints are linearized
    /// exactly as above with the noise scaled by the power factor.
    PowerAware,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdmmSettings {
    /// Initial penalty on the phase split (rad^-2).
    ///
    /// The phase block weighs `2 rho1` against `rho2 L` with `L ~ 2 beta^2`, so
    /// the two penalties must be chosen together. With channels in SI units a
    /// phase penalty far above `rho2 beta^2` pins `theta` to `phi(X)` and the
    /// antennas stop moving.
    pub rho1_init: f64,
    /// Initial penalty on the channel split.
    pub rho2_init: f64,
    /// Penalty growth factor per iteration (`>= 1`; `1` keeps penalties fixed).
    pub epsilon: f64,
    pub rho_max: f64,
    /// Tolerance on the splitting residual.
    pub varsigma1: f64,
    /// Tolerance on the relative change of the average power.
    pub varsigma2: f64,
    pub max_iter: usize,
    pub solver_tol: f64,
    pub proxy_update: ProxyUpdate,
    /// When false the radiation ratios stay at their initial value.
    pub update_alpha: bool,
    /// Add the SINR constraints (linearized in `alpha`) to the ratio update so
    /// that the iterate never leaves the feasible set.
    pub alpha_keeps_qos: bool,
    /// When false the motion cost is dropped from every subproblem.
    pub motion_in_objective: bool,
    /// Candidate spacing (m) of the coordinate search that follows the
    /// splitting iterations; `0` disables the search and the warm restart.
    pub refine_spacing: f64,
    /// Beamformer and ratio alternations per position tried by the search.
    pub refine_rounds: usize,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            rho1_init: 1e-3,
            rho2_init: 3e3,
            epsilon: 1.25,
            rho_max: 1e9,
            varsigma1: 1e-4,
            varsigma2: 1e-4,
            max_iter: 200,
            solver_tol: 1e-8,
            proxy_update: ProxyUpdate::PowerAware,
            update_alpha: true,
            alpha_keeps_qos: true,
            motion_in_objective: true,
            refine_spacing: 0.0125,
            refine_rounds: 1,
        }
    }
}

impl AdmmSettings {
    pub fn validate(&self) -> Result<(), AdmmError> {
        let bad = |s: &str| Err(AdmmError::Settings(s.to_string()));
        if !(self.rho1_init > 0.0 && self.rho2_init > 0.0) {
            return bad("penalties must be positive");
        }
        if !(self.epsilon >= 1.0) {
            return bad("epsilon must be at least 1");
        }
        if !(self.rho_max >= self.rho1_init.max(self.rho2_init)) {
            return bad("rho_max must not be below the initial penalties");
        }
        if !(self.varsigma1 > 0.0 && self.varsigma2 > 0.0 && self.solver_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.refine_spacing >= 0.0 && self.refine_spacing.is_finite()) {
            return bad("refine_spacing must be non-negative");
        }
        Ok(())
    }
}

/// Primal and dual iterate of the ADMM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmState {
    pub w: Beamformer,
    pub positions: DMatrix<f64>,
    pub ratios: DMatrix<f64>,
    /// Phase auxiliaries, length `K M N`.
    pub theta: Vec<f64>,
    /// Channel proxies, one length-`MN` vector per user.
    pub t: Vec<DVector<Complex64>>,
    pub mu: Vec<f64>,
    pub lambda: Vec<DVector<Complex64>>,
    pub rho1: f64,
    pub rho2: f64,
    pub iter: usize,
}

/// Distances `r_{k,i}` for every user and PA.
pub fn distances(scenario: &Scenario, positions: &DMatrix<f64>) -> Vec<Vec<f64>> {
    let geom = &scenario.geometry;
    let n_pa = geom.antennas_per_waveguide;
    scenario
        .users
        .positions
        .iter()
        .map(|&u| {
            (0..geom.num_antennas())
                .map(|i| {
                    crate::model::pa_user_distance(
                        geom,
                        i / n_pa,
                        positions[(i / n_pa, i % n_pa)],
                        u,
                    )
                })
                .collect()
        })
        .collect()
}

/// Phases `phi_{k,i} = k0 (r_{k,i} + n_eff x_i)`, length `K M N`.
pub fn phases(scenario: &Scenario, positions: &DMatrix<f64>) -> Vec<f64> {
    let geom = &scenario.geometry;
    let n_pa = geom.antennas_per_waveguide;
    let mn = geom.num_antennas();
    let mut out = Vec::with_capacity(scenario.users.len() * mn);
    for &u in &scenario.users.positions {
        for i in 0..mn {
            out.push(channel_phase(
                geom,
                i / n_pa,
                positions[(i / n_pa, i % n_pa)],
                u,
            ));
        }
    }
    out
}

/// Algorithm start: initial positions, equal split, consistent auxiliaries,
/// zero duals and zero beamformer.
pub fn init_state(scenario: &Scenario, settings: &AdmmSettings) -> Result<AdmmState, AdmmError> {
    init_state_at(
        scenario,
        settings,
        &AntennaState::equal_split(&scenario.motion),
    )
}

/// Consistent iterate at a given design: proxies and phases match the
/// positions, duals are zero and the beamformer is left for the first sweep.
pub fn init_state_at(
    scenario: &Scenario,
    settings: &AdmmSettings,
    start: &AntennaState,
) -> Result<AdmmState, AdmmError> {
    scenario.validate()?;
    settings.validate()?;
    let geom = &scenario.geometry;
    let k = scenario.users.len();
    let mn = geom.num_antennas();
    Ok(AdmmState {
        w: Beamformer::zeros(geom.waveguides, k),
        theta: phases(scenario, &start.positions),
        t: effective_channels(geom, &start.positions, &scenario.users),
        mu: vec![0.0; k * mn],
        lambda: vec![DVector::zeros(mn); k],
        positions: start.positions.clone(),
        ratios: start.ratios.clone(),
        rho1: settings.rho1_init,
        rho2: settings.rho2_init,
        iter: 0,
    })
}

/// Splitting residual `||theta - phi||^2 + sum_k ||R_k t_k - u_k||^2`.
pub fn residual(state: &AdmmState, scenario: &Scenario) -> f64 {
    let phi = phases(scenario, &state.positions);
    let r = distances(scenario, &state.positions);
    let beta = scenario.geometry.beta();
    let mn = scenario.geometry.num_antennas();
    let mut acc = 0.0;
    for (th, ph) in state.theta.iter().zip(&phi) {
        acc += (th - ph).powi(2);
    }
    for (k, tk) in state.t.iter().enumerate() {
        for i in 0..mn {
            let u = Complex64::from_polar(beta, state.theta[k * mn + i]);
            acc += (tk[i] * r[k][i] - u).norm_sqr();
        }
    }
    acc
}

fn motion_scale(settings: &AdmmSettings) -> f64 {
    if settings.motion_in_objective {
        1.0
    } else {
        0.0
    }
}

/// Average power of the iterate as seen by the optimizer (`f1`, with the motion
/// term dropped when the settings exclude it).
pub fn objective(state: &AdmmState, scenario: &Scenario, settings: &AdmmSettings) -> f64 {
    let motion = &scenario.motion;
    motion.transmit_weight() * state.w.power()
        + motion_scale(settings) * total_motion_energy(&state.positions, motion)
            / motion.frame_duration()
}

/// Augmented Lagrangian without the feasibility indicator.
pub fn augmented_lagrangian(
    state: &AdmmState,
    scenario: &Scenario,
    settings: &AdmmSettings,
) -> f64 {
    let phi = phases(scenario, &state.positions);
    let r = distances(scenario, &state.positions);
    let beta = scenario.geometry.beta();
    let mn = scenario.geometry.num_antennas();
    let (rho1, rho2) = (state.rho1, state.rho2);
    let mut val = objective(state, scenario, settings);
    for j in 0..phi.len() {
        let d = state.theta[j] - phi[j] + state.mu[j] / rho1;
        val += 0.5 * rho1 * d * d - 0.5 * state.mu[j] * state.mu[j] / rho1;
    }
    for (k, tk) in state.t.iter().enumerate() {
        for i in 0..mn {
            let u = Complex64::from_polar(beta, state.theta[k * mn + i]);
            let l = state.lambda[k][i];
            val += 0.5 * rho2 * (tk[i] * r[k][i] - u + l / rho2).norm_sqr()
                - 0.5 * l.norm_sqr() / rho2;
        }
    }
    val
}

/// Largest relative SINR shortfall of `(W, alpha)` against the proxies `t`.
pub fn proxy_qos_violation(state: &AdmmState, scenario: &Scenario) -> f64 {
    let users = &scenario.users;
    let g = sinr(&state.t, &state.ratios, &state.w, &users.noise_power);
    g.iter()
        .zip(&users.sinr_target)
        .map(|(g, t)| (t - g) / t)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Beamformer block: least transmit power meeting every SINR target for the
/// current proxies and ratios.
pub fn update_beamformer(
    state: &AdmmState,
    scenario: &Scenario,
    tol: f64,
) -> Result<Beamformer, BeamformError> {
    let users = &scenario.users;
    beamforming::min_power_for_channels(
        &state.t,
        &state.ratios,
        &users.noise_power,
        &users.sinr_target,
        tol,
    )
}

/// Result of the proxy block.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyStep {
    pub t: Vec<DVector<Complex64>>,
    /// Factor `p` such that the beamformer should become `W / sqrt(p)`.
    pub power_factor: f64,
    /// True when the convex step failed and the previous proxies were kept.
    pub fell_back: bool,
}

/// `conj(z)^T a` as a complex affine expression in the complex variables `z`.
fn conj_dot(z: &ComplexVarBlock, a: &DVector<Complex64>) -> ComplexAffine {
    let mut e = ComplexAffine::default();
    for (i, ai) in a.iter().enumerate() {
        // conj(z_i) a_i = (zr - j zi)(ar + j ai)
        e.re.add_term(z.re(i), ai.re).add_term(z.im(i), ai.im);
        e.im.add_term(z.re(i), ai.im).add_term(z.im(i), -ai.re);
    }
    e
}

/// `A w_j` as a length-`MN` vector.
fn radiated(ratios: &DMatrix<f64>, w: &Beamformer, j: usize) -> DVector<Complex64> {
    let (m_wg, n_pa) = ratios.shape();
    DVector::from_fn(m_wg * n_pa, |i, _| {
        w.weights[(i / n_pa, j)] * ratios[(i / n_pa, i % n_pa)]
    })
}

/// Proxy block: one SCA step on the SINR constraints around the current `t`.
pub fn update_t(state: &AdmmState, scenario: &Scenario, settings: &AdmmSettings) -> ProxyStep {
    let users = &scenario.users;
    let beta = scenario.geometry.beta();
    let k_users = users.len();
    let mn = scenario.geometry.num_antennas();
    let r = distances(scenario, &state.positions);
    let power = state.w.power();
    let power_aware = settings.proxy_update == ProxyUpdate::PowerAware && power > 0.0;

    let mut p = ConicProblem::new();
    // t = beta * tau keeps the variables O(1 / r).
    let tau: Vec<ComplexVarBlock> = (0..k_users).map(|_| p.add_complex_vars(mn)).collect();
    let pen = p.add_var();
    p.add_objective(pen, 0.5 * state.rho2 * beta * beta);
    let mut tail = Vec::with_capacity(2 * k_users * mn);
    for k in 0..k_users {
        for i in 0..mn {
            let target = Complex64::from_polar(1.0, state.theta[k * mn + i])
                - state.lambda[k][i] / (state.rho2 * beta);
            tail.push(Affine {
                terms: vec![(tau[k].re(i), r[k][i])],
                constant: -target.re,
            });
            tail.push(Affine {
                terms: vec![(tau[k].im(i), r[k][i])],
                constant: -target.im,
            });
        }
    }
    p.squared_norm_le(Affine::var(pen), tail);

    let factor = if power_aware {
        let pf = p.add_var();
        let epi = p.add_var();
        p.add_objective(epi, 1.0);
        let weighted = scenario.motion.transmit_weight() * power;
        // epi * pf >= weighted
        p.rotated_soc(
            Affine::var(epi),
            Affine::var(pf),
            vec![Affine::constant((2.0 * weighted).sqrt())],
        );
        Some(pf)
    } else {
        None
    };

    for k in 0..k_users {
        let scale = beta / users.noise_power[k].sqrt();
        let gamma = users.sinr_target[k];
        let tau_prev = state.t[k].map(|v| v / beta);
        let mut interference = Vec::new();
        let mut signal_lin = Affine::zero();
        for j in 0..k_users {
            let a = radiated(&state.ratios, &state.w, j) * Complex64::new(scale, 0.0);
            let e = conj_dot(&tau[k], &a);
            if j == k {
                let g = tau_prev.dotc(&a);
                // |tau^H a|^2 >= 2 Re{conj(g) tau^H a} - |g|^2
                signal_lin
                    .add_scaled(&e.re, 2.0 * g.re)
                    .add_scaled(&e.im, 2.0 * g.im);
                signal_lin.add_constant(-g.norm_sqr());
            } else {
                interference.push(e.re);
                interference.push(e.im);
            }
        }
        let mut bound = signal_lin.scaled(1.0 / gamma);
        match factor {
            Some(pf) => {
                bound.add_term(pf, -1.0);
            }
            None => {
                bound.add_constant(-1.0);
            }
        }
        p.squared_norm_le(bound, interference);
    }

    let keep = || ProxyStep {
        t: state.t.clone(),
        power_factor: 1.0,
        fell_back: true,
    };
    let sol = match conic::solve(&p, settings.solver_tol) {
        Ok(s) if s.is_usable(settings.solver_tol.sqrt()) => s,
        _ => return keep(),
    };
    let t: Vec<DVector<Complex64>> = tau
        .iter()
        .map(|b| DVector::from_vec(b.values(&sol.x)).map(|v| v * beta))
        .collect();
    let power_factor = factor.map_or(1.0, |pf| sol.x[pf]);
    if !(power_factor > 0.0 && power_factor.is_finite()) {
        return keep();
    }
    ProxyStep {
        t,
        power_factor,
        fell_back: false,
    }
}

/// Per-user coefficient vectors `c_{k,j}` with `t_k^H A w_j / sigma_k = c_{k,j}^T alpha`.
fn ratio_coefficients(
    t: &[DVector<Complex64>],
    w: &Beamformer,
    noise: &[f64],
    n_pa: usize,
) -> Vec<Vec<DVector<Complex64>>> {
    t.iter()
        .enumerate()
        .map(|(k, tk)| {
            let s = 1.0 / noise[k].sqrt();
            (0..w.weights.ncols())
                .map(|j| {
                    DVector::from_fn(tk.len(), |i, _| tk[i].conj() * w.weights[(i / n_pa, j)] * s)
                })
                .collect()
        })
        .collect()
}

fn alpha_vec(ratios: &DMatrix<f64>) -> DVector<f64> {
    let (m_wg, n_pa) = ratios.shape();
    DVector::from_fn(m_wg * n_pa, |i, _| ratios[(i / n_pa, i % n_pa)])
}

fn lin_gain(c: &DVector<Complex64>, a: &DVector<f64>) -> Complex64 {
    c.iter().zip(a.iter()).map(|(c, a)| c * a).sum()
}

/// Tangent minorant `2 Re{conj(g) s} - |g|^2` of `|s|^2` at `s = g`.
///
/// The proxy and ratio blocks both replace a signal power `|s|^2`, with `s`
/// affine in the block variable, by this bound.
pub fn signal_minorant(s: Complex64, g: Complex64) -> f64 {
    2.0 * (g.conj() * s).re - g.norm_sqr()
}

/// Quadratic-transform auxiliaries `q_k = |s_k| / (I_k + sigma_k^2)`, in units
/// where each noise power is one.
pub fn quadratic_transform_q(
    t: &[DVector<Complex64>],
    ratios: &DMatrix<f64>,
    w: &Beamformer,
    noise: &[f64],
) -> Vec<f64> {
    let c = ratio_coefficients(t, w, noise, ratios.ncols());
    let a = alpha_vec(ratios);
    (0..t.len())
        .map(|k| {
            let s = lin_gain(&c[k][k], &a).norm();
            let i: f64 = (0..t.len())
                .filter(|&j| j != k)
                .map(|j| lin_gain(&c[k][j], &a).norm_sqr())
                .sum();
            s / (i + 1.0)
        })
        .collect()
}

/// Fractional-programming surrogate
/// `f2 = sum_k 2 q_k |s_k| - q_k^2 (I_k + sigma_k^2)` in noise-normalized units.
pub fn quadratic_transform_value(
    t: &[DVector<Complex64>],
    ratios: &DMatrix<f64>,
    w: &Beamformer,
    noise: &[f64],
    q: &[f64],
) -> f64 {
    let c = ratio_coefficients(t, w, noise, ratios.ncols());
    let a = alpha_vec(ratios);
    (0..t.len())
        .map(|k| {
            let s = lin_gain(&c[k][k], &a).norm();
            let i: f64 = (0..t.len())
                .filter(|&j| j != k)
                .map(|j| lin_gain(&c[k][j], &a).norm_sqr())
                .sum();
            2.0 * q[k] * s - q[k] * q[k] * (i + 1.0)
        })
        .collect::<Vec<_>>()
        .iter()
        .sum()
}

/// Ratio block for generic channels: one quadratic-transform pass followed by
/// one convex solve with the signal power linearized at the current ratios.
///
/// Returns the previous ratios when the beamformer is zero, when the convex
/// step fails, or when it does not improve the surrogate.
pub fn update_ratios(
    channels: &[DVector<Complex64>],
    ratios: &DMatrix<f64>,
    w: &Beamformer,
    noise: &[f64],
    targets: &[f64],
    keep_qos: bool,
    tol: f64,
) -> DMatrix<f64> {
    let (m_wg, n_pa) = ratios.shape();
    let k_users = channels.len();
    if w.power() == 0.0 {
        return ratios.clone();
    }
    let c = ratio_coefficients(channels, w, noise, n_pa);
    let a_prev = alpha_vec(ratios);
    let q = quadratic_transform_q(channels, ratios, w, noise);

    let mut p = ConicProblem::new();
    let alpha = p.add_vars(m_wg * n_pa);
    let psi = p.add_vars(k_users);
    let epi = p.add_vars(k_users);
    for i in 0..alpha.len() {
        p.bound(alpha.at(i), 0.0, f64::INFINITY);
    }
    for m in 0..m_wg {
        let tail = (0..n_pa)
            .map(|n| Affine::var(alpha.at(m * n_pa + n)))
            .collect();
        p.soc(Affine::constant(1.0), tail);
    }
    let gain_expr = |cv: &DVector<Complex64>| {
        let mut e = ComplexAffine::default();
        for (i, ci) in cv.iter().enumerate() {
            e.add_real_var(alpha.at(i), *ci);
        }
        e
    };
    for k in 0..k_users {
        let mut tail = Vec::new();
        for j in (0..k_users).filter(|&j| j != k) {
            let e = gain_expr(&c[k][j]);
            tail.push(e.re);
            tail.push(e.im);
        }
        p.squared_norm_le(Affine::var(epi.at(k)), tail);
        // psi_k^2 <= 2 Re{conj(g) s_k(alpha)} - |g|^2
        let g = lin_gain(&c[k][k], &a_prev);
        let s = gain_expr(&c[k][k]);
        let mut lin = Affine::constant(-g.norm_sqr());
        lin.add_scaled(&s.re, 2.0 * g.re)
            .add_scaled(&s.im, 2.0 * g.im);
        p.squared_norm_le(lin.clone(), vec![Affine::var(psi.at(k))]);
        if keep_qos {
            let mut qos = lin;
            qos.add_term(epi.at(k), -targets[k])
                .add_constant(-targets[k]);
            p.nonneg(qos);
        }
        p.add_objective(psi.at(k), -2.0 * q[k]);
        p.add_objective(epi.at(k), q[k] * q[k]);
    }
    let sol = match conic::solve(&p, tol) {
        Ok(s) if s.is_usable(tol.sqrt()) => s,
        _ => return ratios.clone(),
    };
    let next = DMatrix::from_fn(m_wg, n_pa, |m, n| sol.x[alpha.at(m * n_pa + n)].max(0.0));
    let before = quadratic_transform_value(channels, ratios, w, noise, &q);
    let after = quadratic_transform_value(channels, &next, w, noise, &q);
    if after <= before + 1e-12 * before.abs() {
        return ratios.clone();
    }
    if keep_qos {
        // Solver round-off must not push the iterate out of the QoS set.
        let g = sinr(channels, &next, w, noise);
        if g.iter().zip(targets).any(|(g, t)| g < &(t * (1.0 - 1e-9))) {
            return ratios.clone();
        }
    }
    next
}

/// Ratio block against the channel proxies.
pub fn update_alpha(
    state: &AdmmState,
    scenario: &Scenario,
    settings: &AdmmSettings,
) -> DMatrix<f64> {
    let users = &scenario.users;
    update_ratios(
        &state.t,
        &state.ratios,
        &state.w,
        &users.noise_power,
        &users.sinr_target,
        settings.alpha_keeps_qos,
        settings.solver_tol,
    )
}

/// `L = 2 beta |r t + lambda / rho2|`, the gradient Lipschitz constant of
/// `v(theta) = |r t - beta e^{j theta} + lambda / rho2|^2`.
pub fn lipschitz_constant(r: f64, t: Complex64, lambda: Complex64, rho2: f64, beta: f64) -> f64 {
    2.0 * beta * (t * r + lambda / rho2).norm()
}

/// `v(theta) = |c - beta e^{j theta}|^2` with `c = r t + lambda / rho2`.
pub fn v_value(theta: f64, c: Complex64, beta: f64) -> f64 {
    (c - Complex64::from_polar(beta, theta)).norm_sqr()
}

/// `dv/dtheta = 2 beta |c| sin(theta - angle(c))`.
pub fn v_gradient(theta: f64, c: Complex64, beta: f64) -> f64 {
    2.0 * beta * c.norm() * (theta - c.arg()).sin()
}

/// Data of the phase subproblem for one entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTerm {
    pub phi: f64,
    pub mu: f64,
    /// `r t + lambda / rho2`
    pub c: Complex64,
}

/// Phase objective `f3` for one entry.
pub fn phase_objective(theta: f64, term: &PhaseTerm, rho1: f64, rho2: f64, beta: f64) -> f64 {
    let d = theta - term.phi + term.mu / rho1;
    0.5 * rho1 * d * d + 0.5 * rho2 * v_value(theta, term.c, beta)
}

/// Majorizer of [`phase_objective`] built at `theta_prev`.
pub fn phase_surrogate(
    theta: f64,
    theta_prev: f64,
    term: &PhaseTerm,
    rho1: f64,
    rho2: f64,
    beta: f64,
) -> f64 {
    let l = 2.0 * beta * term.c.norm();
    let d = theta - term.phi + term.mu / rho1;
    let h = theta - theta_prev;
    let v = v_value(theta_prev, term.c, beta)
        + v_gradient(theta_prev, term.c, beta) * h
        + 0.5 * l * h * h;
    0.5 * rho1 * d * d + 0.5 * rho2 * v
}

/// Derivative of [`phase_surrogate`] in `theta`.
pub fn phase_surrogate_gradient(
    theta: f64,
    theta_prev: f64,
    term: &PhaseTerm,
    rho1: f64,
    rho2: f64,
    beta: f64,
) -> f64 {
    let l = 2.0 * beta * term.c.norm();
    rho1 * (theta - term.phi + term.mu / rho1)
        + 0.5 * rho2 * (v_gradient(theta_prev, term.c, beta) + l * (theta - theta_prev))
}

/// Closed-form minimizer of the phase surrogate.
pub fn phase_step(theta_prev: f64, term: &PhaseTerm, rho1: f64, rho2: f64, beta: f64) -> f64 {
    let l = 2.0 * beta * term.c.norm();
    let grad = v_gradient(theta_prev, term.c, beta);
    // Written as an increment on theta_prev; the absolute phases are large.
    let delta = (2.0 * rho1 * (term.phi - term.mu / rho1 - theta_prev) - rho2 * grad)
        / (2.0 * rho1 + rho2 * l);
    theta_prev + delta
}

/// Phase data for every entry at the current iterate.
pub fn phase_terms(state: &AdmmState, scenario: &Scenario) -> Vec<PhaseTerm> {
    let phi = phases(scenario, &state.positions);
    let r = distances(scenario, &state.positions);
    let mn = scenario.geometry.num_antennas();
    (0..phi.len())
        .map(|j| {
            let (k, i) = (j / mn, j % mn);
            PhaseTerm {
                phi: phi[j],
                mu: state.mu[j],
                c: state.t[k][i] * r[k][i] + state.lambda[k][i] / state.rho2,
            }
        })
        .collect()
}

/// Phase block.
pub fn update_theta(state: &AdmmState, scenario: &Scenario) -> Vec<f64> {
    let beta = scenario.geometry.beta();
    phase_terms(state, scenario)
        .iter()
        .zip(&state.theta)
        .map(|(term, &th)| phase_step(th, term, state.rho1, state.rho2, beta))
        .collect()
}

/// Position objective `f4` (motion cost plus both split penalties) at `positions`.
pub fn position_objective(
    state: &AdmmState,
    scenario: &Scenario,
    settings: &AdmmSettings,
    positions: &DMatrix<f64>,
) -> f64 {
    let motion = &scenario.motion;
    let beta = scenario.geometry.beta();
    let mn = scenario.geometry.num_antennas();
    let phi = phases(scenario, positions);
    let r = distances(scenario, positions);
    let mut val =
        motion_scale(settings) * total_motion_energy(positions, motion) / motion.frame_duration();
    for j in 0..phi.len() {
        let d = state.theta[j] - phi[j] + state.mu[j] / state.rho1;
        val += 0.5 * state.rho1 * d * d;
    }
    for (k, tk) in state.t.iter().enumerate() {
        for i in 0..mn {
            let u = Complex64::from_polar(beta, state.theta[k * mn + i]);
            val += 0.5
                * state.rho2
                * (tk[i] * r[k][i] - u + state.lambda[k][i] / state.rho2).norm_sqr();
        }
    }
    val
}

/// Convex majorizer of [`position_objective`] built at the current positions,
/// evaluated at `positions`. The phase mismatch is bounded on each side by
/// replacing the distance with its tangent (a lower bound) or with the tangent
/// plus a curvature term (an upper bound), and the cross term of `eta` is
/// linearized wherever it is concave.
pub fn position_surrogate(
    state: &AdmmState,
    scenario: &Scenario,
    settings: &AdmmSettings,
    positions: &DMatrix<f64>,
) -> f64 {
    let geom = &scenario.geometry;
    let motion = &scenario.motion;
    let beta = scenario.geometry.beta();
    let k0 = geom.wavenumber();
    let n_pa = geom.antennas_per_waveguide;
    let mn = geom.num_antennas();
    let r_prev = distances(scenario, &state.positions);
    let r_new = distances(scenario, positions);
    let phi_prev = phases(scenario, &state.positions);
    let mut val =
        motion_scale(settings) * total_motion_energy(positions, motion) / motion.frame_duration();
    for (k, u) in scenario.users.positions.iter().enumerate() {
        for i in 0..mn {
            let j = k * mn + i;
            let (m, n) = (i / n_pa, i % n_pa);
            let xp = state.positions[(m, n)];
            let dx = positions[(m, n)] - xp;
            let slope = (xp - u[0]) / r_prev[k][i];
            let r_lin = r_prev[k][i] + slope * dx;
            // Smallest xi meeting both one-sided phase constraints.
            let c0 = state.theta[j] - phi_prev[j] + state.mu[j] / state.rho1;
            let upper = c0 - k0 * (r_lin - r_prev[k][i]) - k0 * geom.n_eff * dx;
            let lateral = ((geom.waveguide_y[m] - u[1]).powi(2) + geom.height * geom.height).sqrt();
            let r_quad = r_lin + 0.5 * dx * dx / lateral;
            let lower = c0 - k0 * (r_quad - r_prev[k][i]) - k0 * geom.n_eff * dx;
            let xi = upper.max(-lower).max(0.0);
            val += 0.5 * state.rho1 * xi * xi;
            let t = state.t[k][i];
            let cp = state.lambda[k][i] / state.rho2 - Complex64::from_polar(beta, state.theta[j]);
            let b = 2.0 * (t * cp.conj()).re;
            let r_cross = if b >= 0.0 { r_new[k][i] } else { r_lin };
            let eta = t.norm_sqr() * r_new[k][i] * r_new[k][i] + cp.norm_sqr() + b * r_cross;
            val += 0.5 * state.rho2 * eta;
        }
    }
    val
}

/// Result of the position block.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionStep {
    pub positions: DMatrix<f64>,
    pub fell_back: bool,
}

/// Position block: one convex step on the majorizer of `f4`.
pub fn update_positions(
    state: &AdmmState,
    scenario: &Scenario,
    settings: &AdmmSettings,
) -> PositionStep {
    let geom = &scenario.geometry;
    let motion = &scenario.motion;
    let beta = geom.beta();
    let k0 = geom.wavenumber();
    let n_pa = geom.antennas_per_waveguide;
    let m_wg = geom.waveguides;
    let mn = geom.num_antennas();
    let k_users = scenario.users.len();
    let r_prev = distances(scenario, &state.positions);
    let phi_prev = phases(scenario, &state.positions);
    let xp = |i: usize| state.positions[(i / n_pa, i % n_pa)];
    let x0 = |i: usize| motion.initial_positions[(i / n_pa, i % n_pa)];

    let mut p = ConicProblem::new();
    // Displacements from the current positions.
    let dx = p.add_vars(mn);

    // Feasible set C3-C5.
    let reach = motion.max_displacement();
    for i in 0..mn {
        let lo = (x0(i) - reach).max(0.0) - xp(i);
        let hi = (x0(i) + reach).min(geom.length) - xp(i);
        p.bound(dx.at(i), lo.min(0.0), hi.max(0.0));
    }
    for m in 0..m_wg {
        for n in 1..n_pa {
            let (a, b) = (m * n_pa + n - 1, m * n_pa + n);
            p.nonneg(Affine {
                terms: vec![(dx.at(b), 1.0), (dx.at(a), -1.0)],
                constant: xp(b) - xp(a) - geom.min_spacing,
            });
        }
    }

    // Motion cost.
    let mw = motion_scale(settings) * motion.motion_weight();
    if mw > 0.0 {
        let e = p.add_vars(mn);
        for i in 0..mn {
            let off = xp(i) - x0(i);
            p.nonneg(Affine {
                terms: vec![(e.at(i), 1.0), (dx.at(i), -1.0)],
                constant: -off,
            });
            p.nonneg(Affine {
                terms: vec![(e.at(i), 1.0), (dx.at(i), 1.0)],
                constant: off,
            });
            p.add_objective(e.at(i), mw);
        }
    }

    // Phase split: xi >= |theta - phi(x) + mu / rho1|.
    let xi = p.add_vars(k_users * mn);
    let xi_sq = p.add_var();
    p.add_objective(xi_sq, 0.5 * state.rho1);
    p.squared_norm_le(
        Affine::var(xi_sq),
        (0..xi.len()).map(|j| Affine::var(xi.at(j))).collect(),
    );

    // Channel split: eta = |t|^2 r^2 + b r + const, with b = 2 Re{t conj(c')}.
    let mut quad = vec![0.0; mn];
    let mut lin = vec![0.0; mn];
    for (k, u) in scenario.users.positions.iter().enumerate() {
        for i in 0..mn {
            let j = k * mn + i;
            let m = i / n_pa;
            let a = xp(i) - u[0];
            let lateral = ((geom.waveguide_y[m] - u[1]).powi(2) + geom.height * geom.height).sqrt();
            let rp = r_prev[k][i];
            let slope = a / rp;
            let c0 = state.theta[j] - phi_prev[j] + state.mu[j] / state.rho1;

            // Upper phase constraint with r(x) bounded by its tangent plus the
            // curvature bound r'' <= 1 / lateral:
            //   k0 dx^2 / (2 lateral) <= c0 + xi - k0 (slope + n_eff) dx
            p.rotated_soc(
                Affine {
                    terms: vec![(xi.at(j), 1.0), (dx.at(i), -k0 * (slope + geom.n_eff))],
                    constant: c0,
                },
                Affine::constant(lateral / k0),
                vec![Affine::var(dx.at(i))],
            );
            // Lower phase constraint, linearized: xi >= c0 - k0 (slope + n_eff) dx
            p.nonneg(Affine {
                terms: vec![(xi.at(j), 1.0), (dx.at(i), k0 * (slope + geom.n_eff))],
                constant: -c0,
            });

            let t = state.t[k][i];
            let cp = state.lambda[k][i] / state.rho2 - Complex64::from_polar(beta, state.theta[j]);
            let b = 2.0 * (t * cp.conj()).re;
            let w2 = t.norm_sqr();
            // |t|^2 r^2 = |t|^2 (r_prev^2 + 2 a dx + dx^2)
            quad[i] += w2;
            lin[i] += 2.0 * w2 * a;
            if b >= 0.0 {
                // Epigraph of the exact distance, offset by r_prev.
                let s = p.add_var();
                p.soc(
                    Affine {
                        terms: vec![(s, 1.0)],
                        constant: rp,
                    },
                    vec![
                        Affine {
                            terms: vec![(dx.at(i), 1.0)],
                            constant: a,
                        },
                        Affine::constant(lateral),
                    ],
                );
                p.add_objective(s, 0.5 * state.rho2 * b);
            } else {
                lin[i] += b * slope;
            }
        }
    }
    let quad_epi = p.add_var();
    p.add_objective(quad_epi, 0.5 * state.rho2);
    let mut quad_tail = Vec::new();
    for i in 0..mn {
        p.add_objective(dx.at(i), 0.5 * state.rho2 * lin[i]);
        if quad[i] > 0.0 {
            quad_tail.push(Affine::term(dx.at(i), quad[i].sqrt()));
        }
    }
    p.squared_norm_le(Affine::var(quad_epi), quad_tail);

    let sol = match conic::solve(&p, settings.solver_tol) {
        Ok(s) if s.is_usable(settings.solver_tol.sqrt()) => s,
        _ => {
            return PositionStep {
                positions: state.positions.clone(),
                fell_back: true,
            }
        }
    };
    let positions = DMatrix::from_fn(m_wg, n_pa, |m, n| {
        let i = m * n_pa + n;
        xp(i) + sol.x[dx.at(i)]
    });
    // Majorize-minimize never accepts a worse point.
    let before = position_objective(state, scenario, settings, &state.positions);
    let after = position_objective(state, scenario, settings, &positions);
    if after > before + 1e-9 * before.abs().max(1e-12) {
        return PositionStep {
            positions: state.positions.clone(),
            fell_back: true,
        };
    }
    PositionStep {
        positions,
        fell_back: false,
    }
}

/// Dual ascent on both splits at the latest primal iterate.
pub fn update_duals(state: &mut AdmmState, scenario: &Scenario) {
    let phi = phases(scenario, &state.positions);
    let r = distances(scenario, &state.positions);
    let beta = scenario.geometry.beta();
    let mn = scenario.geometry.num_antennas();
    for j in 0..phi.len() {
        state.mu[j] += state.rho1 * (state.theta[j] - phi[j]);
    }
    for k in 0..state.t.len() {
        for i in 0..mn {
            let u = Complex64::from_polar(beta, state.theta[k * mn + i]);
            state.lambda[k][i] += (state.t[k][i] * r[k][i] - u) * state.rho2;
        }
    }
}

/// `rho <- min(epsilon rho, rho_max)` for both penalties.
pub fn scale_penalties(state: &mut AdmmState, settings: &AdmmSettings) {
    state.rho1 = (state.rho1 * settings.epsilon).min(settings.rho_max);
    state.rho2 = (state.rho2 * settings.epsilon).min(settings.rho_max);
}

/// Counters gathered by [`sweep`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SweepOutcome {
    pub recoveries: usize,
    pub beamformer_infeasible: bool,
}

/// One pass over the primal blocks `W, t, alpha, theta, X` (no dual update).
pub fn sweep(state: &mut AdmmState, scenario: &Scenario, settings: &AdmmSettings) -> SweepOutcome {
    let mut out = SweepOutcome::default();
    match update_beamformer(state, scenario, settings.solver_tol) {
        Ok(w) => state.w = w,
        Err(BeamformError::Infeasible) => {
            out.beamformer_infeasible = true;
            out.recoveries += 1;
        }
        Err(_) => out.recoveries += 1,
    }
    let step = update_t(state, scenario, settings);
    if step.fell_back {
        out.recoveries += 1;
    } else {
        state.t = step.t;
        if step.power_factor != 1.0 {
            let s = 1.0 / step.power_factor.sqrt();
            state.w.weights.iter_mut().for_each(|w| *w *= s);
        }
    }
    if settings.update_alpha {
        state.ratios = update_alpha(state, scenario, settings);
    }
    state.theta = update_theta(state, scenario);
    let pos = update_positions(state, scenario, settings);
    if pos.fell_back {
        out.recoveries += 1;
    }
    state.positions = pos.positions;
    out
}

/// Runs the splitting method from the equal split, with refinement.
pub fn run(scenario: &Scenario, settings: &AdmmSettings) -> Result<SolveReport, AdmmError> {
    run_named(scenario, settings, "continuous")
}

/// The scenario whose average power the optimizer minimizes.
fn optimized_scenario(scenario: &Scenario, settings: &AdmmSettings) -> Scenario {
    let mut s = scenario.clone();
    if !settings.motion_in_objective {
        s.motion.motor_power = 0.0;
    }
    s
}

/// Coordinate search around a finished design.
///
/// Each PA may jump to any point of its reachable interval that lies a whole
/// number of `refine_spacing` steps from its pre-installed position, or stay
/// put. Anchoring the candidates there makes the grid of a shorter reach a
/// subset of the grid of a longer one. The splitting iterations only make small
/// moves, and the average power repeats roughly every wavelength, so this
/// reaches basins that the iterations cannot.
pub fn refine(
    scenario: &Scenario,
    settings: &AdmmSettings,
    design: &AntennaState,
    bf: &Beamformer,
) -> Option<(AntennaState, Beamformer)> {
    if settings.refine_spacing <= 0.0 {
        return None;
    }
    let target = optimized_scenario(scenario, settings);
    let geom = &scenario.geometry;
    let motion = &scenario.motion;
    let n_pa = geom.antennas_per_waveguide;
    let steps = (motion.max_displacement() / settings.refine_spacing + 1e-9).floor() as i64;
    let mut positions: Vec<Vec<f64>> = (0..geom.num_antennas())
        .map(|i| {
            let (m, n) = (i / n_pa, i % n_pa);
            let x0 = motion.initial_positions[(m, n)];
            let (lo, hi) = motion.reachable_interval(geom, m, n);
            (-steps..=steps)
                .map(|j| x0 + j as f64 * settings.refine_spacing)
                .filter(|x| (lo..=hi).contains(x))
                .collect()
        })
        .collect();
    // Candidates clipped by the waveguide ends are padded with the home position
    // so that every PA has the same count.
    let width = positions.iter().map(Vec::len).max().unwrap_or(1);
    for (i, xs) in positions.iter_mut().enumerate() {
        let x0 = motion.initial_positions[(i / n_pa, i % n_pa)];
        xs.resize(width, x0);
        xs.push(design.positions[(i / n_pa, i % n_pa)]);
    }
    let grid = DiscreteGrid::from_positions(&target, positions);
    let bcd_settings = BcdSettings {
        update_alpha: settings.update_alpha,
        polish_rounds: settings.refine_rounds,
        solver_tol: settings.solver_tol,
        ..BcdSettings::default()
    };
    let start = RoundedDesign {
        selection: vec![grid.candidates - 1; grid.num_pas()],
        state: design.clone(),
        beamformer: bf.clone(),
    };
    let found = local_search(&target, &grid, start, &bcd_settings);
    Some((found.state, found.beamformer))
}

/// Splitting iterations from the equal split, then a coordinate search and a warm
/// restart from its result when that lowers the power.
pub fn run_named(
    scenario: &Scenario,
    settings: &AdmmSettings,
    name: &str,
) -> Result<SolveReport, AdmmError> {
    let first = run_from(scenario, settings, init_state(scenario, settings)?, name);
    if !first.status.has_design() {
        return Ok(first);
    }
    let Some((design, bf)) = refine(scenario, settings, &first.state, &first.beamformer) else {
        return Ok(first);
    };
    let target = optimized_scenario(scenario, settings);
    let cost = |r: &SolveReport| average_power(&r.beamformer, &r.state.positions, &target.motion);
    let refined_cost = average_power(&bf, &design.positions, &target.motion);
    if refined_cost >= cost(&first) * (1.0 - 1e-9) {
        return Ok(first);
    }
    let warm = run_from(
        scenario,
        settings,
        init_state_at(scenario, settings, &design)?,
        name,
    );
    let mut records = first.iterations.clone();
    let offset = records.len();
    let elapsed = first.elapsed_s;
    records.extend(warm.iterations.iter().map(|r| IterationRecord {
        iteration: r.iteration + offset,
        elapsed_s: r.elapsed_s + elapsed,
        ..r.clone()
    }));
    let recoveries = first.recoveries + warm.recoveries;
    let total = elapsed + warm.elapsed_s;
    let keep_warm =
        warm.status.has_design() && warm.is_feasible(1e-6) && cost(&warm) <= refined_cost;
    // The status describes the restart, whose iterations end the trajectory.
    let status = if warm.status.has_design() {
        warm.status
    } else {
        first.status
    };
    let (state, bf) = if keep_warm {
        (warm.state, warm.beamformer)
    } else {
        (design, bf)
    };
    Ok(SolveReport::audited(
        name, status, records, state, bf, None, recoveries, total, scenario,
    ))
}

/// Runs the splitting iterations from a given iterate.
pub fn run_from(
    scenario: &Scenario,
    settings: &AdmmSettings,
    mut state: AdmmState,
    name: &str,
) -> SolveReport {
    let start = Instant::now();
    let mut records = Vec::new();
    let mut recoveries = 0;
    let mut prev_obj: Option<f64> = None;
    let mut status = SolveStatus::MaxIterations;
    for it in 1..=settings.max_iter {
        state.iter += 1;
        let out = sweep(&mut state, scenario, settings);
        if out.beamformer_infeasible && it == 1 {
            status = SolveStatus::QosInfeasible;
            break;
        }
        recoveries += out.recoveries;
        update_duals(&mut state, scenario);
        let res = residual(&state, scenario);
        let obj = objective(&state, scenario, settings);
        records.push(IterationRecord {
            iteration: it,
            objective: obj,
            residual: res,
            max_violation: proxy_qos_violation(&state, scenario).max(0.0),
            penalty: state.rho1,
            elapsed_s: start.elapsed().as_secs_f64(),
        });
        let settled = prev_obj.is_some_and(|p| (obj - p).abs() <= settings.varsigma2 * p.abs());
        prev_obj = Some(obj);
        if res <= settings.varsigma1 && settled {
            status = SolveStatus::Converged;
            break;
        }
        scale_penalties(&mut state, settings);
    }
    finish(scenario, state, status, records, recoveries, start, name)
}

/// Re-solves the beamformer on the true channels of the final design.
fn finish(
    scenario: &Scenario,
    state: AdmmState,
    mut status: SolveStatus,
    records: Vec<IterationRecord>,
    recoveries: usize,
    start: Instant,
    name: &str,
) -> SolveReport {
    let users = &scenario.users;
    let design = project_design(
        &AntennaState {
            positions: state.positions.clone(),
            ratios: state.ratios.clone(),
        },
        scenario,
    );
    let mut bf = state.w.clone();
    if status != SolveStatus::QosInfeasible {
        let channels = effective_channels(&scenario.geometry, &design.positions, users);
        let polished = beamforming::min_power_for_channels(
            &channels,
            &design.ratios,
            &users.noise_power,
            &users.sinr_target,
            1e-9,
        )
        .ok()
        .or_else(|| Some(bf.clone()));
        match polished.and_then(|w| {
            beamforming::restore_qos(
                &channels,
                &design.ratios,
                &w,
                &users.noise_power,
                &users.sinr_target,
            )
        }) {
            Some(w) => bf = w,
            None => status = SolveStatus::QosInfeasible,
        }
    }
    SolveReport::audited(
        name,
        status,
        records,
        design,
        bf,
        None,
        recoveries,
        start.elapsed().as_secs_f64(),
        scenario,
    )
}

/// Combined channels `A^H t_k` of the proxies, used by diagnostics.
pub fn proxy_combined(state: &AdmmState) -> Vec<DVector<Complex64>> {
    state
        .t
        .iter()
        .map(|t| combined_channel(t, &state.ratios))
        .collect()
}
