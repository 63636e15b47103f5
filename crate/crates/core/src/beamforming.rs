//! QoS-constrained transmit power minimization for fixed effective channels.
//!
//! Given per-user combined channels `b_k` (length `M`), finds the beamformer
//! `W` of least Frobenius norm with `|b_k^H w_k|^2 / (sum_{j != k} |b_k^H w_j|^2 + sigma_k^2) >= Gamma_k`.
//! The phase of `b_k^H w_k` is fixed to be real, which turns each SINR constraint
//! into a second-order cone.

use crate::conic::{self, Affine, ComplexAffine, ConicProblem, ConicStatus};
use crate::model::{combined_channel, sinr, Beamformer};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamformError {
    #[error("SINR targets unattainable for the given channels")]
    Infeasible,
    #[error("conic solver stopped without a usable point ({0:?})")]
    Solver(ConicStatus),
    #[error(transparent)]
    Conic(#[from] conic::ConicError),
}

/// Minimum-power beamformer for combined channels `b_k = A^H t_k`.
pub fn min_power_beamformer(
    combined: &[DVector<Complex64>],
    noise: &[f64],
    targets: &[f64],
    tol: f64,
) -> Result<Beamformer, BeamformError> {
    let k_users = combined.len();
    let m = combined.first().map_or(0, |b| b.len());
    let mut p = ConicProblem::new();
    // w_{m,k} stored column by column.
    let w = p.add_complex_vars(m * k_users);
    let idx = |mm: usize, k: usize| mm + k * m;
    let s = p.add_var();
    p.add_objective(s, 1.0);

    // Normalizing by sigma_k keeps the cone data O(1) whatever the path loss.
    let mut gains: Vec<Vec<ComplexAffine>> = Vec::with_capacity(k_users);
    for (k, b) in combined.iter().enumerate() {
        let scale = 1.0 / noise[k].sqrt();
        let row = (0..k_users)
            .map(|j| {
                let mut e = ComplexAffine::default();
                for mm in 0..m {
                    e.add_complex_var(w.re(idx(mm, j)), w.im(idx(mm, j)), b[mm].conj() * scale);
                }
                e
            })
            .collect();
        gains.push(row);
    }
    for (k, row) in gains.iter().enumerate() {
        let coef = (1.0 + 1.0 / targets[k]).sqrt();
        let mut tail = Vec::with_capacity(2 * k_users + 1);
        for e in row {
            tail.push(e.re.clone());
            tail.push(e.im.clone());
        }
        tail.push(Affine::constant(1.0));
        p.soc(row[k].re.scaled(coef), tail);
        p.equal_zero(row[k].im.clone());
    }
    let mut norm_tail = Vec::with_capacity(2 * m * k_users);
    for i in 0..m * k_users {
        norm_tail.push(Affine::var(w.re(i)));
        norm_tail.push(Affine::var(w.im(i)));
    }
    p.soc(Affine::var(s), norm_tail);

    let sol = conic::solve(&p, tol)?;
    match sol.status {
        ConicStatus::PrimalInfeasible => return Err(BeamformError::Infeasible),
        _ if !sol.is_usable(tol.sqrt()) => return Err(BeamformError::Solver(sol.status)),
        _ => {}
    }
    let vals = w.values(&sol.x);
    Ok(Beamformer {
        weights: DMatrix::from_fn(m, k_users, |mm, k| vals[idx(mm, k)]),
    })
}

/// Minimum-power beamformer for effective channels `t_k` and ratios `alpha`.
pub fn min_power_for_channels(
    channels: &[DVector<Complex64>],
    ratios: &DMatrix<f64>,
    noise: &[f64],
    targets: &[f64],
    tol: f64,
) -> Result<Beamformer, BeamformError> {
    let combined: Vec<_> = channels
        .iter()
        .map(|t| combined_channel(t, ratios))
        .collect();
    min_power_beamformer(&combined, noise, targets, tol)
}

/// Scales `W` up by the smallest factor that lifts every SINR to its target.
///
/// Uniform scaling raises each SINR monotonically, so solver round-off on the
/// QoS constraints can be removed without touching the beam directions.
/// Returns `None` when some user cannot reach its target at any scale.
pub fn restore_qos(
    channels: &[DVector<Complex64>],
    ratios: &DMatrix<f64>,
    bf: &Beamformer,
    noise: &[f64],
    targets: &[f64],
) -> Option<Beamformer> {
    let gammas = sinr(channels, ratios, bf, noise);
    if gammas.iter().zip(targets).all(|(g, t)| g >= t) {
        return Some(bf.clone());
    }
    let mut scale2: f64 = 1.0;
    for (k, t) in channels.iter().enumerate() {
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
        let margin = signal - targets[k] * interference;
        if margin <= 0.0 {
            return None;
        }
        scale2 = scale2.max(targets[k] * noise[k] / margin);
    }
    // A hair above the exact factor so the recomputed SINR clears the target.
    let s = (scale2 * (1.0 + 1e-12)).sqrt();
    Some(Beamformer {
        weights: bf.weights.map(|w| w * s),
    })
}
