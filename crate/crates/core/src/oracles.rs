//! Brute-force and closed-form reference solutions.
//!
//! These routines deliberately avoid the conic solver: beamforming is solved by
//! the uplink-downlink duality fixed point, positions by exhaustive scans.
//! They are slow and only meant for small instances and tests.

use crate::model::{
    average_power, combined_channel, effective_channels, pa_user_distance, Beamformer, Scenario,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_2;

/// Minimum-power beamformer via the uplink-downlink duality fixed point.
///
/// Iterates `lambda_k = 1 / ((1 + 1/Gamma_k) g_k^H S^{-1} g_k)` with
/// `S = I + sum_j lambda_j g_j g_j^H` and `g_k = b_k / sigma_k`, then recovers
/// downlink powers from a `K x K` linear system. Returns `None` when the
/// iteration diverges (targets unattainable) or does not settle.
pub fn duality_beamformer(
    combined: &[DVector<Complex64>],
    noise: &[f64],
    targets: &[f64],
) -> Option<Beamformer> {
    let k_users = combined.len();
    let m = combined.first()?.len();
    let g: Vec<DVector<Complex64>> = combined
        .iter()
        .zip(noise)
        .map(|(b, s)| b.map(|v| v / s.sqrt()))
        .collect();
    let mut lambda = vec![0.0; k_users];
    let mut converged = false;
    for _ in 0..20_000 {
        let mut s = DMatrix::<Complex64>::identity(m, m);
        for (gj, &lj) in g.iter().zip(&lambda) {
            s += gj * gj.adjoint() * Complex64::new(lj, 0.0);
        }
        let chol = s.cholesky()?;
        let next: Vec<f64> = g
            .iter()
            .zip(targets)
            .map(|(gk, &t)| {
                let q = gk.dotc(&chol.solve(gk)).re;
                1.0 / ((1.0 + 1.0 / t) * q)
            })
            .collect();
        let change = next
            .iter()
            .zip(&lambda)
            .map(|(a, b)| (a - b).abs() / a.abs().max(1e-300))
            .fold(0.0, f64::max);
        lambda = next;
        if lambda.iter().any(|l| !l.is_finite() || *l > 1e30) {
            return None;
        }
        if change < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let mut s = DMatrix::<Complex64>::identity(m, m);
    for (gj, &lj) in g.iter().zip(&lambda) {
        s += gj * gj.adjoint() * Complex64::new(lj, 0.0);
    }
    let chol = s.cholesky()?;
    let dirs: Vec<DVector<Complex64>> = g
        .iter()
        .map(|gk| {
            let u = chol.solve(gk);
            let n = u.norm();
            u / Complex64::new(n, 0.0)
        })
        .collect();
    // (1/Gamma_k) |g_k^H u_k|^2 p_k - sum_{j != k} |g_k^H u_j|^2 p_j = 1
    let mat = DMatrix::from_fn(k_users, k_users, |k, j| {
        let c = g[k].dotc(&dirs[j]).norm_sqr();
        if j == k {
            c / targets[k]
        } else {
            -c
        }
    });
    let p = mat.lu().solve(&DVector::from_element(k_users, 1.0))?;
    if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return None;
    }
    let weights = DMatrix::from_fn(m, k_users, |i, k| dirs[k][i] * p[k].sqrt());
    Some(Beamformer { weights })
}

/// Optimum of a single-PA, single-user scenario found by scanning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub position: f64,
    pub average_power: f64,
}

/// Scans the reachable interval of the only PA at `resolution` metres.
///
/// With one PA and one user the least transmit power is
/// `Gamma sigma^2 r^2 / beta^2`, so each grid point costs a square root.
///
/// # Panics
/// If the scenario has more than one PA or user, or `resolution <= 0`.
pub fn grid_oracle_1d(scenario: &Scenario, resolution: f64) -> GridOptimum {
    let geom = &scenario.geometry;
    let motion = &scenario.motion;
    assert!(
        geom.num_antennas() == 1 && scenario.users.len() == 1,
        "single PA and user only"
    );
    assert!(resolution > 0.0);
    let user = scenario.users.positions[0];
    let need =
        scenario.users.sinr_target[0] * scenario.users.noise_power[0] / (geom.beta() * geom.beta());
    let x0 = motion.initial_positions[(0, 0)];
    let (lo, hi) = motion.reachable_interval(geom, 0, 0);
    let cost = |x: f64| {
        let r = pa_user_distance(geom, 0, x, user);
        motion.transmit_weight() * need * r * r + motion.motion_weight() * (x - x0).abs()
    };
    let steps = ((hi - lo) / resolution).ceil() as usize;
    let mut best = GridOptimum {
        position: x0,
        average_power: cost(x0),
    };
    for i in 0..=steps {
        let x = (lo + i as f64 * resolution).min(hi);
        let c = cost(x);
        if c < best.average_power {
            best = GridOptimum {
                position: x,
                average_power: c,
            };
        }
    }
    best
}

/// Optimum of a discrete-placement instance found by enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOptimum {
    /// Chosen candidate per PA (`m * N + n`).
    pub selection: Vec<usize>,
    pub positions: DMatrix<f64>,
    pub ratios: DMatrix<f64>,
    pub beamformer: Beamformer,
    pub average_power: f64,
}

/// Largest number of selections [`exhaustive_discrete_oracle`] will enumerate.
pub const ENUMERATION_CAP: usize = 100_000;

/// Unit-norm ratios for one waveguide from `N - 1` spherical angles in `[0, pi/2]`.
fn ratios_from_angles(angles: &[f64]) -> Vec<f64> {
    let n = angles.len() + 1;
    let mut out = vec![0.0; n];
    let mut rest = 1.0;
    for (i, a) in angles.iter().enumerate() {
        out[i] = rest * a.cos();
        rest *= a.sin();
    }
    out[n - 1] = rest;
    out
}

/// Minimum average power for fixed positions with the ratios chosen by a
/// coordinate scan over spherical angles (`steps + 1` values per angle).
fn best_ratios(
    scenario: &Scenario,
    positions: &DMatrix<f64>,
    steps: usize,
) -> Option<(DMatrix<f64>, Beamformer, f64)> {
    let geom = &scenario.geometry;
    let users = &scenario.users;
    let (m_wg, n_pa) = (geom.waveguides, geom.antennas_per_waveguide);
    let channels = effective_channels(geom, positions, users);
    let evaluate = |angles: &[f64]| -> Option<(DMatrix<f64>, Beamformer, f64)> {
        let mut ratios = DMatrix::zeros(m_wg, n_pa);
        for m in 0..m_wg {
            let row = ratios_from_angles(&angles[m * (n_pa - 1)..(m + 1) * (n_pa - 1)]);
            for n in 0..n_pa {
                ratios[(m, n)] = row[n];
            }
        }
        let combined: Vec<_> = channels
            .iter()
            .map(|t| combined_channel(t, &ratios))
            .collect();
        let bf = duality_beamformer(&combined, &users.noise_power, &users.sinr_target)?;
        let p = average_power(&bf, positions, &scenario.motion);
        Some((ratios, bf, p))
    };
    let n_angles = m_wg * (n_pa - 1);
    // Equal split: cos(a_i) = 1 / sqrt(N - i).
    let mut angles: Vec<f64> = (0..n_angles)
        .map(|j| (1.0 / ((n_pa - j % (n_pa - 1).max(1)) as f64).sqrt()).acos())
        .collect();
    let mut best = evaluate(&angles);
    if n_angles == 0 {
        return best;
    }
    let sweeps = if n_angles == 1 { 1 } else { 4 };
    for _ in 0..sweeps {
        for j in 0..n_angles {
            for s in 0..=steps {
                let mut trial = angles.clone();
                trial[j] = FRAC_PI_2 * s as f64 / steps as f64;
                if let Some(cand) = evaluate(&trial) {
                    if best.as_ref().is_none_or(|b| cand.2 < b.2) {
                        best = Some(cand);
                        angles = trial;
                    }
                }
            }
        }
    }
    best
}

/// Enumerates every spacing-feasible selection from `candidates` (one list of
/// x-coordinates per PA) and optimizes the ratios for each.
///
/// Returns `None` when no selection meets the SINR targets.
///
/// # Panics
/// If the number of selections exceeds [`ENUMERATION_CAP`].
pub fn exhaustive_discrete_oracle(
    scenario: &Scenario,
    candidates: &[Vec<f64>],
    alpha_steps: usize,
) -> Option<DiscreteOptimum> {
    let geom = &scenario.geometry;
    let (m_wg, n_pa) = (geom.waveguides, geom.antennas_per_waveguide);
    let total: usize = candidates.iter().map(|c| c.len()).product();
    assert!(
        total <= ENUMERATION_CAP,
        "{total} selections exceed the enumeration cap"
    );
    let mut best: Option<DiscreteOptimum> = None;
    let mut idx = vec![0usize; candidates.len()];
    loop {
        let positions = DMatrix::from_fn(m_wg, n_pa, |m, n| {
            candidates[m * n_pa + n][idx[m * n_pa + n]]
        });
        let spaced = (0..m_wg).all(|m| {
            (1..n_pa).all(|n| positions[(m, n)] - positions[(m, n - 1)] >= geom.min_spacing)
        });
        if spaced {
            if let Some((ratios, bf, p)) = best_ratios(scenario, &positions, alpha_steps) {
                if best.as_ref().is_none_or(|b| p < b.average_power) {
                    best = Some(DiscreteOptimum {
                        selection: idx.clone(),
                        positions,
                        ratios,
                        beamformer: bf,
                        average_power: p,
                    });
                }
            }
        }
        // Odometer increment.
        let mut d = 0;
        loop {
            if d == idx.len() {
                return best;
            }
            idx[d] += 1;
            if idx[d] < candidates[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Largest relative gap between `grad` and a central difference of `f` with
/// step `step`, over `points`.
pub fn finite_diff_check(
    f: impl Fn(f64) -> f64,
    grad: impl Fn(f64) -> f64,
    points: &[f64],
    step: f64,
) -> f64 {
    assert!(step > 0.0);
    points
        .iter()
        .map(|&x| {
            let fd = (f(x + step) - f(x - step)) / (2.0 * step);
            let g = grad(x);
            (fd - g).abs() / g.abs().max(fd.abs()).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}
