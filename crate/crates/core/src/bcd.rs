//! Block coordinate descent for PAs restricted to discrete candidate positions.
//!
//! Each PA `i` picks one of `Ñ` candidates through a selection vector `z_i`.
//! The received signal depends on the product `z_i d_i`, where
//! `d_i = alpha_i [Re w_m, Im w_m]` is the real-split feed row of PA `i` on waveguide
//! `m`. The product is replaced by a free matrix `Q_i` tied to `(z_i, d_i)` by
//!
//! ```text
//!   [ P_i    Q_i   z_i  ]
//!   [ Q_i^T  S_i   d_i^T] >= 0,   Tr(P_i) <= 1,
//!   [ z_i^T  d_i   1    ]
//! ```
//!
//! which forces `Q_i = z_i d_i` whenever `z_i` is a vertex of the simplex.
//! `P_i` is further restricted to a diagonal with `P_cc <= z_c`, which holds
//! at every vertex and keeps fractional selections from gaining signal for free. The
//! binary requirement is handled by the concave penalty `zeta * sum z (1 - z)`,
//! linearized at the previous iterate. Alternating this `(W, z)` block with a
//! ratio update and finally rounding gives the discrete design.

use crate::admm::update_ratios;
use crate::beamforming::{self, restore_qos, BeamformError};
use crate::conic::{self, Affine, ConicProblem, ConicStatus, VarBlock};
use crate::model::{
    average_power, channel_element, project_design, AntennaState, Beamformer, ModelError, Scenario,
};
use crate::report::{IterationRecord, SolveReport, SolveStatus};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BcdError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid discrete settings: {0}")]
    Settings(String),
    #[error("SINR targets unattainable on the candidate grid")]
    Infeasible,
    #[error("conic solver stopped without a usable point ({0:?})")]
    Solver(ConicStatus),
    #[error(transparent)]
    Conic(#[from] conic::ConicError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BcdSettings {
    /// Candidates per PA.
    pub candidates: usize,
    /// Largest accepted `candidates`; the semidefinite blocks grow with it.
    pub max_candidates: usize,
    /// Initial weight of the binary penalty (W).
    pub zeta_init: f64,
    /// Factor applied to the penalty weight when a stage ends non-binary.
    pub zeta_growth: f64,
    /// Penalty stages before rounding is forced.
    pub max_stages: usize,
    /// Relative objective tolerance that ends a stage.
    pub varsigma: f64,
    /// Total iteration budget across stages.
    pub max_iter: usize,
    /// Largest distance of any selection entry from `{0, 1}` accepted as binary.
    pub binary_tol: f64,
    pub solver_tol: f64,
    pub update_alpha: bool,
    /// Improve the rounded selection by single-PA candidate swaps.
    pub local_search: bool,
    /// Beamformer and ratio alternations per evaluated selection.
    pub polish_rounds: usize,
}

impl Default for BcdSettings {
    fn default() -> Self {
        Self {
            candidates: 5,
            max_candidates: 12,
            zeta_init: 1.0,
            zeta_growth: 5.0,
            max_stages: 6,
            varsigma: 1e-4,
            max_iter: 100,
            binary_tol: 1e-3,
            solver_tol: 1e-8,
            update_alpha: true,
            local_search: true,
            polish_rounds: 4,
        }
    }
}

impl BcdSettings {
    pub fn validate(&self) -> Result<(), BcdError> {
        let bad = |s: &str| Err(BcdError::Settings(s.to_string()));
        if self.candidates == 0 {
            return bad("at least one candidate per PA is required");
        }
        if self.candidates > self.max_candidates {
            return bad("candidates exceeds max_candidates");
        }
        if !(self.zeta_init > 0.0) || !(self.zeta_growth >= 1.0) {
            return bad("zeta_init must be positive and zeta_growth at least 1");
        }
        if !(self.varsigma > 0.0 && self.binary_tol > 0.0 && self.solver_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_iter == 0 || self.max_stages == 0 {
            return bad("iteration and stage budgets must be positive");
        }
        Ok(())
    }
}

/// Candidate positions and their channels, indexed by PA `i = m * N + n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteGrid {
    pub candidates: usize,
    /// x-coordinate of every candidate, per PA.
    pub positions: Vec<Vec<f64>>,
    /// Distance of every candidate from the pre-installed position.
    pub displacement: Vec<Vec<f64>>,
    /// `channels[k][i][c]`: channel of user `k` through candidate `c` of PA `i`.
    pub channels: Vec<Vec<Vec<Complex64>>>,
}

impl DiscreteGrid {
    /// Uniformly spaced candidates over each reachable interval, endpoints
    /// included. A single candidate sits at the pre-installed position.
    pub fn build(scenario: &Scenario, candidates: usize) -> Self {
        assert!(candidates >= 1);
        let geom = &scenario.geometry;
        let motion = &scenario.motion;
        let n_pa = geom.antennas_per_waveguide;
        let positions = (0..geom.num_antennas())
            .map(|i| {
                let (m, n) = (i / n_pa, i % n_pa);
                let (lo, hi) = motion.reachable_interval(geom, m, n);
                if candidates == 1 {
                    vec![motion.initial_positions[(m, n)]]
                } else {
                    (0..candidates)
                        .map(|c| lo + (hi - lo) * c as f64 / (candidates - 1) as f64)
                        .collect()
                }
            })
            .collect();
        Self::from_positions(scenario, positions)
    }

    /// Grid with explicit candidates; every PA needs the same number of them.
    ///
    /// # Panics
    /// If the PA count or candidate counts are inconsistent.
    pub fn from_positions(scenario: &Scenario, positions: Vec<Vec<f64>>) -> Self {
        let geom = &scenario.geometry;
        let n_pa = geom.antennas_per_waveguide;
        assert_eq!(positions.len(), geom.num_antennas());
        let candidates = positions[0].len();
        assert!(candidates >= 1 && positions.iter().all(|xs| xs.len() == candidates));
        let displacement = positions
            .iter()
            .enumerate()
            .map(|(i, xs)| {
                let x0 = scenario.motion.initial_positions[(i / n_pa, i % n_pa)];
                xs.iter().map(|x| (x - x0).abs()).collect()
            })
            .collect();
        let channels = scenario
            .users
            .positions
            .iter()
            .map(|&u| {
                positions
                    .iter()
                    .enumerate()
                    .map(|(i, xs)| {
                        xs.iter()
                            .map(|&x| channel_element(geom, i / n_pa, x, u))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            candidates,
            positions,
            displacement,
            channels,
        }
    }

    pub fn num_pas(&self) -> usize {
        self.positions.len()
    }

    /// Per-user channels `sum_c z_{i,c} h_{k,i,c}` for a (possibly relaxed) selection.
    pub fn mixed_channels(&self, z: &[Vec<f64>]) -> Vec<DVector<Complex64>> {
        self.channels
            .iter()
            .map(|hk| {
                DVector::from_fn(self.num_pas(), |i, _| {
                    hk[i].iter().zip(&z[i]).map(|(h, w)| h * w).sum()
                })
            })
            .collect()
    }

    /// One-hot selection vectors.
    pub fn one_hot(&self, selection: &[usize]) -> Vec<Vec<f64>> {
        selection
            .iter()
            .map(|&c| {
                (0..self.candidates)
                    .map(|j| if j == c { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    /// `M x N` positions of a selection.
    pub fn selected_positions(&self, selection: &[usize], waveguides: usize) -> DMatrix<f64> {
        let n_pa = self.num_pas() / waveguides;
        DMatrix::from_fn(waveguides, n_pa, |m, n| {
            let i = m * n_pa + n;
            self.positions[i][selection[i]]
        })
    }
}

/// Forward construction of the bilinear LMI: for `B = C D` the matrix
/// `[[C C^T, B, C], [B^T, D^T D, D^T], [C^T, D, I]]` is positive semidefinite.
pub fn bilinear_lmi(c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let (a, r) = c.shape();
    let b = d.ncols();
    assert_eq!(d.nrows(), r, "inner dimensions of C and D differ");
    let prod = c * d;
    let n = a + b + r;
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), (a, a)).copy_from(&(c * c.transpose()));
    out.view_mut((0, a), (a, b)).copy_from(&prod);
    out.view_mut((a, 0), (b, a)).copy_from(&prod.transpose());
    out.view_mut((0, a + b), (a, r)).copy_from(c);
    out.view_mut((a + b, 0), (r, a)).copy_from(&c.transpose());
    out.view_mut((a, a), (b, b)).copy_from(&(d.transpose() * d));
    out.view_mut((a, a + b), (b, r)).copy_from(&d.transpose());
    out.view_mut((a + b, a), (r, b)).copy_from(d);
    out.view_mut((a + b, a + b), (r, r)).fill_with_identity();
    out
}

/// Real-split feed rows `d_i = alpha_i [Re w_m, Im w_m]`, one row per PA.
pub fn feed_rows(ratios: &DMatrix<f64>, w: &Beamformer) -> Vec<DVector<f64>> {
    let (m_wg, n_pa) = ratios.shape();
    let k_users = w.weights.ncols();
    (0..m_wg * n_pa)
        .map(|i| {
            let (m, n) = (i / n_pa, i % n_pa);
            let a = ratios[(m, n)];
            DVector::from_fn(2 * k_users, |j, _| {
                let v = w.weights[(m, j % k_users)];
                a * if j < k_users { v.re } else { v.im }
            })
        })
        .collect()
}

/// Largest distance of a selection entry from `{0, 1}`.
pub fn binary_violation(z: &[Vec<f64>]) -> f64 {
    z.iter()
        .flatten()
        .map(|&v| v.min(1.0 - v).max(0.0))
        .fold(0.0, f64::max)
}

/// Concave binary penalty `sum z (1 - z)`; zero exactly on binary selections.
pub fn binary_penalty(z: &[Vec<f64>]) -> f64 {
    z.iter().flatten().map(|&v| v - v * v).sum()
}

/// Tangent majorizer of [`binary_penalty`] built at `z_prev`.
pub fn binary_penalty_surrogate(z: &[Vec<f64>], z_prev: &[Vec<f64>]) -> f64 {
    z.iter()
        .flatten()
        .zip(z_prev.iter().flatten())
        .map(|(&v, &p)| (1.0 - 2.0 * p) * v + p * p)
        .sum()
}

/// Average-power part of the discrete objective: `T2/(T1+T2) tau` plus the
/// expected motion cost of the selection.
pub fn discrete_power(scenario: &Scenario, grid: &DiscreteGrid, tau: f64, z: &[Vec<f64>]) -> f64 {
    let motion = &scenario.motion;
    let moved: f64 = grid
        .displacement
        .iter()
        .flatten()
        .zip(z.iter().flatten())
        .map(|(d, v)| d * v)
        .sum();
    motion.transmit_weight() * tau + motion.motion_weight() * moved
}

/// Result of the joint `(W, z)` block.
#[derive(Debug, Clone, PartialEq)]
pub struct WzStep {
    pub w: Beamformer,
    pub z: Vec<Vec<f64>>,
    /// `Q_i`, `Ñ x 2K`, columns ordered `[Re, Im]` per user.
    pub q: Vec<DMatrix<f64>>,
    pub p: Vec<DMatrix<f64>>,
    pub s: Vec<DMatrix<f64>>,
    /// Epigraph of the transmit power.
    pub tau: f64,
    /// Surrogate objective at the returned point.
    pub objective: f64,
}

fn symmetric_block(
    p: &mut ConicProblem,
    side: usize,
) -> (VarBlock, impl Fn(usize, usize) -> usize) {
    let vars = p.add_vars(side * (side + 1) / 2);
    let start = vars.0.start;
    let idx = move |i: usize, j: usize| {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        start + j * (j + 1) / 2 + i
    };
    (vars, idx)
}

fn read_symmetric(x: &[f64], side: usize, idx: &impl Fn(usize, usize) -> usize) -> DMatrix<f64> {
    DMatrix::from_fn(side, side, |i, j| x[idx(i, j)])
}

/// Clamps a selection entry to `[0, 1]` and rounds entries within `tol` of an
/// end. Interior-point solutions leave unselected candidates at about `tol`,
/// and a large penalty weight would otherwise magnify that into the objective.
fn snap_unit(v: f64, tol: f64) -> f64 {
    if v <= tol {
        0.0
    } else if v >= 1.0 - tol {
        1.0
    } else {
        v
    }
}

/// Joint beamformer and relaxed selection update for fixed ratios.
///
/// Minimizes the average power plus the linearized binary penalty with weight
/// `zeta` anchored at `z_prev`. When `fixed` is given, every selection entry is
/// pinned to it.
pub fn update_w_z(
    scenario: &Scenario,
    grid: &DiscreteGrid,
    ratios: &DMatrix<f64>,
    z_prev: &[Vec<f64>],
    zeta: f64,
    fixed: Option<&[Vec<f64>]>,
    tol: f64,
) -> Result<WzStep, BcdError> {
    let geom = &scenario.geometry;
    let users = &scenario.users;
    let (m_wg, n_pa) = (geom.waveguides, geom.antennas_per_waveguide);
    let mn = m_wg * n_pa;
    let k_users = users.len();
    let nc = grid.candidates;
    let motion = &scenario.motion;

    let mut p = ConicProblem::new();
    let w = p.add_complex_vars(m_wg * k_users);
    let widx = |m: usize, k: usize| m + k * m_wg;
    let tau = p.add_var();
    p.add_objective(tau, motion.transmit_weight());
    let z: Vec<VarBlock> = (0..mn).map(|_| p.add_vars(nc)).collect();
    let q: Vec<VarBlock> = (0..mn).map(|_| p.add_vars(nc * 2 * k_users)).collect();
    let qidx = |i: usize, c: usize, col: usize| q[i].at(c * 2 * k_users + col);

    let mut trace_s = Affine::zero();
    let mut p_blocks = Vec::with_capacity(mn);
    let mut s_blocks = Vec::with_capacity(mn);
    for i in 0..mn {
        let (m, n) = (i / n_pa, i % n_pa);
        let alpha = ratios[(m, n)];
        let mut sum = Affine::constant(-1.0);
        // Since the entries of z_i sum to one, the linearized penalty
        // sum_c (1 - 2 p_c) z_c equals sum_c 2 (p_max - p_c) z_c + 1 - 2 p_max.
        // The shifted form keeps the solver objective on the scale of the
        // power, so its relative gap tolerance stays meaningful for large zeta.
        let p_max = z_prev[i].iter().copied().fold(0.0, f64::max);
        for c in 0..nc {
            let zc = z[i].at(c);
            p.bound(zc, 0.0, 1.0);
            sum.add_term(zc, 1.0);
            let lin = 2.0 * (p_max - z_prev[i][c]) * zeta
                + motion.motion_weight() * grid.displacement[i][c];
            p.add_objective(zc, lin);
            if let Some(fz) = fixed {
                p.equal_zero(Affine {
                    terms: vec![(zc, 1.0)],
                    constant: -fz[i][c],
                });
            }
        }
        p.equal_zero(sum);

        // At a one-hot z the block P equals z z^T = diag(z), so P is kept
        // diagonal with P_cc <= z_c. This implies Tr(P) <= 1 and makes a
        // fractional selection pay for every candidate it mixes in.
        let pd = p.add_vars(nc);
        let (_, sidx) = symmetric_block(&mut p, 2 * k_users);
        let mut tr = Affine::constant(1.0);
        for c in 0..nc {
            tr.add_term(pd.at(c), -1.0);
            p.nonneg(Affine {
                terms: vec![(z[i].at(c), 1.0), (pd.at(c), -1.0)],
                constant: 0.0,
            });
        }
        p.nonneg(tr);
        for j in 0..2 * k_users {
            trace_s.add_term(sidx(j, j), 1.0);
        }
        // d_i as affine expressions of W.
        let d = |j: usize| {
            let k = j % k_users;
            if j < k_users {
                Affine::term(w.re(widx(m, k)), alpha)
            } else {
                Affine::term(w.im(widx(m, k)), alpha)
            }
        };
        let one = nc + 2 * k_users;
        p.psd(one + 1, |r, c| {
            if c < nc {
                if r == c {
                    Affine::var(pd.at(c))
                } else {
                    Affine::zero()
                }
            } else if c < one {
                if r < nc {
                    Affine::var(qidx(i, r, c - nc))
                } else {
                    Affine::var(sidx(r - nc, c - nc))
                }
            } else if r < nc {
                Affine::var(z[i].at(r))
            } else if r < one {
                d(r - nc)
            } else {
                Affine::constant(1.0)
            }
        });
        p_blocks.push(pd);
        s_blocks.push(sidx);
    }
    // Tr(S) cannot exceed the transmit power at an exact point, which keeps
    // fractional selections from inflating Q for free.
    let mut cut = Affine::var(tau);
    cut.add_scaled(&trace_s, -1.0);
    p.nonneg(cut);
    let norm_tail = (0..m_wg * k_users)
        .flat_map(|j| [Affine::var(w.re(j)), Affine::var(w.im(j))])
        .collect();
    p.squared_norm_le(Affine::var(tau), norm_tail);

    // SINR: gains g_{k,j} = sum_{i,c} conj(h_{k,i,c}) Q_{i,c,j} / sigma_k.
    for k in 0..k_users {
        let s = 1.0 / users.noise_power[k].sqrt();
        let gain = |j: usize| {
            let mut re = Affine::zero();
            let mut im = Affine::zero();
            for i in 0..mn {
                for c in 0..nc {
                    let h = grid.channels[k][i][c] * s;
                    let (a, b) = (qidx(i, c, j), qidx(i, c, k_users + j));
                    // (h_r - j h_i)(a + j b)
                    re.add_term(a, h.re).add_term(b, h.im);
                    im.add_term(b, h.re).add_term(a, -h.im);
                }
            }
            (re, im)
        };
        let mut tail = Vec::with_capacity(2 * k_users + 1);
        let mut own = None;
        for j in 0..k_users {
            let (re, im) = gain(j);
            if j == k {
                own = Some((re.clone(), im.clone()));
            }
            tail.push(re);
            tail.push(im);
        }
        tail.push(Affine::constant(1.0));
        let (re, im) = own.expect("user k is among the columns");
        let coef = (1.0 + 1.0 / users.sinr_target[k]).sqrt();
        p.soc(re.scaled(coef), tail);
        p.equal_zero(im);
    }

    let sol = conic::solve(&p, tol)?;
    match sol.status {
        ConicStatus::PrimalInfeasible => return Err(BcdError::Infeasible),
        _ if !sol.is_usable(tol.sqrt()) => return Err(BcdError::Solver(sol.status)),
        _ => {}
    }
    let x = &sol.x;
    let weights = DMatrix::from_fn(m_wg, k_users, |m, k| w.value(x, widx(m, k)));
    let zv: Vec<Vec<f64>> = z
        .iter()
        .map(|b| b.values(x).iter().map(|&v| snap_unit(v, tol)).collect())
        .collect();
    let qv = (0..mn)
        .map(|i| DMatrix::from_fn(nc, 2 * k_users, |c, col| x[qidx(i, c, col)]))
        .collect();
    let pv = p_blocks
        .iter()
        .map(|b| DMatrix::from_diagonal(&DVector::from_column_slice(b.values(x))))
        .collect();
    let sv = s_blocks
        .iter()
        .map(|f| read_symmetric(x, 2 * k_users, f))
        .collect();
    let tau_v = x[tau];
    let objective =
        discrete_power(scenario, grid, tau_v, &zv) + zeta * binary_penalty_surrogate(&zv, z_prev);
    Ok(WzStep {
        w: Beamformer { weights },
        z: zv,
        q: qv,
        p: pv,
        s: sv,
        tau: tau_v,
        objective,
    })
}

/// Ratio update against the channels of the current (relaxed) selection.
pub fn update_alpha_discrete(
    scenario: &Scenario,
    grid: &DiscreteGrid,
    z: &[Vec<f64>],
    w: &Beamformer,
    ratios: &DMatrix<f64>,
    tol: f64,
) -> DMatrix<f64> {
    let users = &scenario.users;
    let channels = grid.mixed_channels(z);
    update_ratios(
        &channels,
        ratios,
        w,
        &users.noise_power,
        &users.sinr_target,
        true,
        tol,
    )
}

/// Per-PA argmax of the relaxed selection (first index wins ties).
pub fn round_selection(z: &[Vec<f64>]) -> Vec<usize> {
    z.iter()
        .map(|zi| {
            zi.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (c, &v)| {
                    if v > best.1 {
                        (c, v)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect()
}

/// Restores the spacing constraint left to right on every waveguide.
///
/// A PA too close to its left neighbour moves to the admissible candidate with
/// the largest relaxed weight. Returns `None` when some PA has no admissible
/// candidate.
pub fn repair_spacing(
    scenario: &Scenario,
    grid: &DiscreteGrid,
    selection: &[usize],
    z: &[Vec<f64>],
) -> Option<Vec<usize>> {
    let geom = &scenario.geometry;
    let n_pa = geom.antennas_per_waveguide;
    let mut out = selection.to_vec();
    for m in 0..geom.waveguides {
        for n in 1..n_pa {
            let i = m * n_pa + n;
            let left = grid.positions[i - 1][out[i - 1]];
            if grid.positions[i][out[i]] - left >= geom.min_spacing {
                continue;
            }
            let best = (0..grid.candidates)
                .filter(|&c| grid.positions[i][c] - left >= geom.min_spacing)
                .max_by(|&a, &b| z[i][a].total_cmp(&z[i][b]).then(b.cmp(&a)))?;
            out[i] = best;
        }
    }
    Some(out)
}

/// Outcome of rounding a relaxed selection.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundedDesign {
    pub selection: Vec<usize>,
    pub state: AntennaState,
    pub beamformer: Beamformer,
}

/// Rounds `z`, repairs spacing and re-solves the beamformer on the true
/// channels of the selected positions.
pub fn round_and_repair(
    scenario: &Scenario,
    grid: &DiscreteGrid,
    z: &[Vec<f64>],
    ratios: &DMatrix<f64>,
    tol: f64,
) -> Result<RoundedDesign, SolveStatus> {
    let selection = repair_spacing(scenario, grid, &round_selection(z), z)
        .ok_or(SolveStatus::RoundingFailed)?;
    let users = &scenario.users;
    let one_hot = grid.one_hot(&selection);
    let channels = grid.mixed_channels(&one_hot);
    let positions = grid.selected_positions(&selection, scenario.geometry.waveguides);
    let bf = match beamforming::min_power_for_channels(
        &channels,
        ratios,
        &users.noise_power,
        &users.sinr_target,
        tol,
    ) {
        Ok(bf) => bf,
        Err(BeamformError::Infeasible) => return Err(SolveStatus::RoundingFailed),
        Err(_) => return Err(SolveStatus::SolverFailure),
    };
    let bf = restore_qos(
        &channels,
        ratios,
        &bf,
        &users.noise_power,
        &users.sinr_target,
    )
    .ok_or(SolveStatus::RoundingFailed)?;
    Ok(RoundedDesign {
        selection,
        state: AntennaState {
            positions,
            ratios: ratios.clone(),
        },
        beamformer: bf,
    })
}

/// Best beamformer and ratios found for a fixed selection, with the average power.
fn polish_selection(
    scenario: &Scenario,
    grid: &DiscreteGrid,
    selection: &[usize],
    ratios: &DMatrix<f64>,
    settings: &BcdSettings,
) -> Option<(RoundedDesign, f64)> {
    let users = &scenario.users;
    let channels = grid.mixed_channels(&grid.one_hot(selection));
    let positions = grid.selected_positions(selection, scenario.geometry.waveguides);
    let solve = |a: &DMatrix<f64>| {
        beamforming::min_power_for_channels(
            &channels,
            a,
            &users.noise_power,
            &users.sinr_target,
            settings.solver_tol,
        )
        .ok()
        .and_then(|bf| restore_qos(&channels, a, &bf, &users.noise_power, &users.sinr_target))
    };
    let mut a = ratios.clone();
    let mut bf = solve(&a)?;
    let rounds = if settings.update_alpha {
        settings.polish_rounds
    } else {
        0
    };
    for _ in 0..rounds {
        let a_next = update_ratios(
            &channels,
            &a,
            &bf,
            &users.noise_power,
            &users.sinr_target,
            true,
            settings.solver_tol,
        );
        let a_next = project_design(
            &AntennaState {
                positions: positions.clone(),
                ratios: a_next,
            },
            scenario,
        )
        .ratios;
        match solve(&a_next) {
            Some(next) if next.power() < bf.power() * (1.0 - 1e-9) => {
                a = a_next;
                bf = next;
            }
            _ => break,
        }
    }
    let power = average_power(&bf, &positions, &scenario.motion);
    Some((
        RoundedDesign {
            selection: selection.to_vec(),
            state: AntennaState {
                positions,
                ratios: a,
            },
            beamformer: bf,
        },
        power,
    ))
}

fn spacing_ok(scenario: &Scenario, grid: &DiscreteGrid, selection: &[usize]) -> bool {
    let geom = &scenario.geometry;
    let n_pa = geom.antennas_per_waveguide;
    (0..geom.waveguides).all(|m| {
        (1..n_pa).all(|n| {
            let i = m * n_pa + n;
            grid.positions[i][selection[i]] - grid.positions[i - 1][selection[i - 1]]
                >= geom.min_spacing
        })
    })
}

/// First-improvement search over single-PA candidate changes.
///
/// Every neighbouring selection is scored by its average power after
/// re-solving the beamformer and ratios, and the search stops when no single
/// change lowers it.
pub fn local_search(
    scenario: &Scenario,
    grid: &DiscreteGrid,
    start: RoundedDesign,
    settings: &BcdSettings,
) -> RoundedDesign {
    let Some((mut best, mut best_power)) = polish_selection(
        scenario,
        grid,
        &start.selection,
        &start.state.ratios,
        settings,
    ) else {
        return start;
    };
    let start_power = average_power(&start.beamformer, &start.state.positions, &scenario.motion);
    if start_power <= best_power {
        best = start;
        best_power = start_power;
    }
    loop {
        let mut improved = false;
        for i in 0..grid.num_pas() {
            for c in 0..grid.candidates {
                if c == best.selection[i] {
                    continue;
                }
                let mut sel = best.selection.clone();
                sel[i] = c;
                if !spacing_ok(scenario, grid, &sel) {
                    continue;
                }
                if let Some((d, p)) =
                    polish_selection(scenario, grid, &sel, &best.state.ratios, settings)
                {
                    if p < best_power * (1.0 - 1e-9) {
                        best = d;
                        best_power = p;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            return best;
        }
    }
}

/// Runs the discrete design with the candidate count from `settings`.
pub fn run_discrete(scenario: &Scenario, settings: &BcdSettings) -> Result<SolveReport, BcdError> {
    scenario.validate()?;
    settings.validate()?;
    let grid = DiscreteGrid::build(scenario, settings.candidates);
    Ok(run_on_grid(scenario, &grid, settings))
}

/// Alternates the `(W, z)` and ratio blocks on a prepared grid, then rounds.
pub fn run_on_grid(
    scenario: &Scenario,
    grid: &DiscreteGrid,
    settings: &BcdSettings,
) -> SolveReport {
    let start = Instant::now();
    let geom = &scenario.geometry;
    let mn = geom.num_antennas();
    let init = AntennaState::equal_split(&scenario.motion);
    let mut ratios = init.ratios.clone();
    let mut z_prev = vec![vec![0.0; grid.candidates]; mn];
    let mut zeta = settings.zeta_init;
    let mut records = Vec::new();
    let mut recoveries = 0;
    let mut status = SolveStatus::MaxIterations;
    let mut stage = 0;
    let mut prev_obj: Option<f64> = None;
    let mut current: Option<WzStep> = None;
    let fail = |status: SolveStatus, records: Vec<IterationRecord>, recoveries: usize| {
        SolveReport::audited(
            "discrete",
            status,
            records,
            init.clone(),
            Beamformer::zeros(geom.waveguides, scenario.users.len()),
            None,
            recoveries,
            start.elapsed().as_secs_f64(),
            scenario,
        )
    };

    for it in 1..=settings.max_iter {
        let step = match update_w_z(
            scenario,
            grid,
            &ratios,
            &z_prev,
            zeta,
            None,
            settings.solver_tol,
        ) {
            Ok(s) => s,
            Err(BcdError::Infeasible) if current.is_none() => {
                return fail(SolveStatus::QosInfeasible, records, recoveries)
            }
            Err(_) if current.is_none() => {
                return fail(SolveStatus::SolverFailure, records, recoveries)
            }
            Err(_) => {
                recoveries += 1;
                break;
            }
        };
        let violation = binary_violation(&step.z);
        records.push(IterationRecord {
            iteration: it,
            objective: step.objective,
            residual: violation,
            max_violation: 0.0,
            penalty: zeta,
            elapsed_s: start.elapsed().as_secs_f64(),
        });
        if settings.update_alpha {
            ratios = update_alpha_discrete(
                scenario,
                grid,
                &step.z,
                &step.w,
                &ratios,
                settings.solver_tol,
            );
        }
        let settled =
            prev_obj.is_some_and(|p| (step.objective - p).abs() <= settings.varsigma * p.abs());
        prev_obj = Some(step.objective);
        z_prev = step.z.clone();
        current = Some(step);
        if settled {
            if violation <= settings.binary_tol {
                status = SolveStatus::Converged;
                break;
            }
            stage += 1;
            if stage >= settings.max_stages {
                break;
            }
            zeta *= settings.zeta_growth;
            prev_obj = None;
        }
    }
    let step = current.expect("first iteration either succeeds or returns");
    match round_and_repair(scenario, grid, &step.z, &ratios, settings.solver_tol) {
        Ok(d) => {
            let d = if settings.local_search {
                local_search(scenario, grid, d, settings)
            } else {
                d
            };
            SolveReport::audited(
                "discrete",
                status,
                records,
                d.state,
                d.beamformer,
                Some(d.selection),
                recoveries,
                start.elapsed().as_secs_f64(),
                scenario,
            )
        }
        Err(s) => fail(s, records, recoveries),
    }
}
