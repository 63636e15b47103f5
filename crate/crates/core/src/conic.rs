//! Backend-agnostic conic programs.
//!
//! Problems are stated as a linear objective over real decision variables and a
//! list of cone memberships of affine expressions:
//!
//! ```text
//!   minimize    c' x + c0
//!   subject to  (a_i' x + b_i)_{i in block} in K_block
//! ```
//!
//! with `K` one of the zero cone, the nonnegative orthant, the second-order cone
//! or the cone of positive-semidefinite matrices. Complex data is realified here:
//! complex affine expressions carry separate real and imaginary parts, and
//! Hermitian PSD blocks use the embedding `[[Re, -Im], [Im, Re]]`.
//!
//! The interior-point backend is Clarabel.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use std::ops::Range;
use thiserror::Error;

/// Default relative accuracy requested from the backend.
pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("malformed conic problem: {0}")]
    Malformed(String),
}

/// Real affine expression `sum_j a_j x_j + c`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn var(j: usize) -> Self {
        Self {
            terms: vec![(j, 1.0)],
            constant: 0.0,
        }
    }

    pub fn term(j: usize, a: f64) -> Self {
        Self {
            terms: vec![(j, a)],
            constant: 0.0,
        }
    }

    pub fn add_term(&mut self, j: usize, a: f64) -> &mut Self {
        if a != 0.0 {
            self.terms.push((j, a));
        }
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn add_scaled(&mut self, other: &Affine, s: f64) -> &mut Self {
        for &(j, a) in &other.terms {
            self.add_term(j, a * s);
        }
        self.constant += other.constant * s;
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = Affine::zero();
        out.add_scaled(self, s);
        out
    }

    pub fn plus(&self, other: &Affine) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, 1.0);
        out
    }

    pub fn minus(&self, other: &Affine) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum::<f64>() + self.constant
    }
}

/// Complex affine expression in real variables, stored as `re + j im`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplexAffine {
    pub re: Affine,
    pub im: Affine,
}

impl ComplexAffine {
    pub fn constant(c: Complex64) -> Self {
        Self {
            re: Affine::constant(c.re),
            im: Affine::constant(c.im),
        }
    }

    /// `coef * (x_re + j x_im)` for a complex variable stored as two reals.
    pub fn complex_var(re: usize, im: usize, coef: Complex64) -> Self {
        let mut out = Self::default();
        out.add_complex_var(re, im, coef);
        out
    }

    /// Adds `coef * (x_re + j x_im)`.
    pub fn add_complex_var(&mut self, re: usize, im: usize, coef: Complex64) -> &mut Self {
        self.re.add_term(re, coef.re).add_term(im, -coef.im);
        self.im.add_term(re, coef.im).add_term(im, coef.re);
        self
    }

    /// Adds `coef * x` for a real variable `x`.
    pub fn add_real_var(&mut self, j: usize, coef: Complex64) -> &mut Self {
        self.re.add_term(j, coef.re);
        self.im.add_term(j, coef.im);
        self
    }

    pub fn add_constant(&mut self, c: Complex64) -> &mut Self {
        self.re.constant += c.re;
        self.im.constant += c.im;
        self
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: self.im.scaled(-1.0),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }
}

/// A contiguous run of real decision variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarBlock(pub Range<usize>);

impl VarBlock {
    pub fn at(&self, i: usize) -> usize {
        debug_assert!(i < self.0.len());
        self.0.start + i
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values<'a>(&self, x: &'a [f64]) -> &'a [f64] {
        &x[self.0.clone()]
    }
}

/// A block of complex variables stored as `len` real parts followed by `len`
/// imaginary parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexVarBlock {
    pub re: VarBlock,
    pub im: VarBlock,
}

impl ComplexVarBlock {
    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self, i: usize) -> usize {
        self.re.at(i)
    }

    pub fn im(&self, i: usize) -> usize {
        self.im.at(i)
    }

    pub fn value(&self, x: &[f64], i: usize) -> Complex64 {
        Complex64::new(x[self.re(i)], x[self.im(i)])
    }

    pub fn values(&self, x: &[f64]) -> Vec<Complex64> {
        (0..self.len()).map(|i| self.value(x, i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    /// Every row equals zero.
    Zero,
    /// Every row is nonnegative.
    Nonnegative,
    /// First row bounds the Euclidean norm of the others.
    SecondOrder,
    /// Rows are the upper triangle (column-major) of a symmetric `side x side`
    /// matrix that must be PSD. Stored unscaled; the `sqrt(2)` weighting of
    /// off-diagonal entries is applied when the backend problem is built.
    Psd { side: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub rows: Vec<Affine>,
}

/// A conic program over real variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConicProblem {
    num_vars: usize,
    objective: Vec<f64>,
    objective_constant: f64,
    blocks: Vec<ConeBlock>,
}

impl ConicProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn blocks(&self) -> &[ConeBlock] {
        &self.blocks
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn add_vars(&mut self, n: usize) -> VarBlock {
        let start = self.num_vars;
        self.num_vars += n;
        self.objective.resize(self.num_vars, 0.0);
        VarBlock(start..self.num_vars)
    }

    pub fn add_var(&mut self) -> usize {
        self.add_vars(1).at(0)
    }

    pub fn add_complex_vars(&mut self, n: usize) -> ComplexVarBlock {
        let re = self.add_vars(n);
        let im = self.add_vars(n);
        ComplexVarBlock { re, im }
    }

    /// Adds `c * x_j` to the objective.
    pub fn add_objective(&mut self, j: usize, c: f64) {
        self.objective[j] += c;
    }

    /// Adds an affine expression to the objective.
    pub fn add_objective_affine(&mut self, e: &Affine) {
        for &(j, a) in &e.terms {
            self.objective[j] += a;
        }
        self.objective_constant += e.constant;
    }

    pub fn equal_zero(&mut self, e: Affine) {
        self.push(ConeKind::Zero, vec![e]);
    }

    pub fn nonneg(&mut self, e: Affine) {
        self.push(ConeKind::Nonnegative, vec![e]);
    }

    /// `lo <= x_j <= hi`; infinite bounds are skipped.
    pub fn bound(&mut self, j: usize, lo: f64, hi: f64) {
        if lo.is_finite() {
            self.nonneg(Affine {
                terms: vec![(j, 1.0)],
                constant: -lo,
            });
        }
        if hi.is_finite() {
            self.nonneg(Affine {
                terms: vec![(j, -1.0)],
                constant: hi,
            });
        }
    }

    /// `||tail|| <= head`.
    pub fn soc(&mut self, head: Affine, tail: Vec<Affine>) {
        let mut rows = Vec::with_capacity(tail.len() + 1);
        rows.push(head);
        rows.extend(tail);
        self.push(ConeKind::SecondOrder, rows);
    }

    /// `||tail||^2 <= 2 u v` with `u, v >= 0`.
    pub fn rotated_soc(&mut self, u: Affine, v: Affine, tail: Vec<Affine>) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let head = u.plus(&v).scaled(s);
        let diff = u.minus(&v).scaled(s);
        let mut rows = vec![diff];
        rows.extend(tail);
        self.soc(head, rows);
    }

    /// `||tail||^2 <= bound` for an affine `bound`.
    pub fn squared_norm_le(&mut self, bound: Affine, tail: Vec<Affine>) {
        self.rotated_soc(bound, Affine::constant(0.5), tail);
    }

    /// Symmetric `side x side` matrix with entries `entry(i, j)` (`i <= j`) is PSD.
    pub fn psd(&mut self, side: usize, mut entry: impl FnMut(usize, usize) -> Affine) {
        let mut rows = Vec::with_capacity(side * (side + 1) / 2);
        for j in 0..side {
            for i in 0..=j {
                rows.push(entry(i, j));
            }
        }
        self.push(ConeKind::Psd { side }, rows);
    }

    /// Hermitian `side x side` matrix is PSD, realified as `[[Re, -Im], [Im, Re]]`.
    /// `entry(i, j)` is queried for `i <= j`; the lower triangle is its conjugate.
    pub fn psd_hermitian(
        &mut self,
        side: usize,
        mut entry: impl FnMut(usize, usize) -> ComplexAffine,
    ) {
        let mut cache = vec![vec![ComplexAffine::default(); side]; side];
        for j in 0..side {
            for i in 0..=j {
                let e = entry(i, j);
                cache[j][i] = e.conj();
                cache[i][j] = e;
            }
        }
        self.psd(2 * side, |i, j| {
            let (bi, ri) = (i / side, i % side);
            let (bj, rj) = (j / side, j % side);
            let h = &cache[ri][rj];
            match (bi, bj) {
                (0, 0) | (1, 1) => h.re.clone(),
                (0, 1) => h.im.scaled(-1.0),
                _ => h.im.clone(),
            }
        });
    }

    fn push(&mut self, kind: ConeKind, rows: Vec<Affine>) {
        self.blocks.push(ConeBlock { kind, rows });
    }

    fn check(&self) -> Result<(), ConicError> {
        for (b, block) in self.blocks.iter().enumerate() {
            match block.kind {
                ConeKind::SecondOrder if block.rows.is_empty() => {
                    return Err(ConicError::Malformed(format!(
                        "block {b}: empty second-order cone"
                    )));
                }
                ConeKind::Psd { side } if block.rows.len() != side * (side + 1) / 2 => {
                    return Err(ConicError::Malformed(format!(
                        "block {b}: PSD row count mismatch"
                    )));
                }
                _ => {}
            }
            for row in &block.rows {
                if let Some(&(j, _)) = row.terms.iter().find(|(j, _)| *j >= self.num_vars) {
                    return Err(ConicError::Malformed(format!(
                        "block {b}: variable {j} out of range"
                    )));
                }
                if !row.constant.is_finite() || row.terms.iter().any(|(_, a)| !a.is_finite()) {
                    return Err(ConicError::Malformed(format!(
                        "block {b}: non-finite coefficient"
                    )));
                }
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(ConicError::Malformed("non-finite objective".into()));
        }
        Ok(())
    }

    /// Largest cone violation of `x` over all blocks.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .map(|b| block_violation(b, x))
            .fold(0.0, f64::max)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .sum::<f64>()
            + self.objective_constant
    }
}

fn block_violation(block: &ConeBlock, x: &[f64]) -> f64 {
    let v: Vec<f64> = block.rows.iter().map(|r| r.eval(x)).collect();
    match block.kind {
        ConeKind::Zero => v.iter().fold(0.0, |acc, e| acc.max(e.abs())),
        ConeKind::Nonnegative => v.iter().fold(0.0, |acc, e| acc.max(-e)),
        ConeKind::SecondOrder => {
            let tail = v[1..].iter().map(|e| e * e).sum::<f64>().sqrt();
            (tail - v[0]).max(0.0)
        }
        ConeKind::Psd { side } => {
            let m = unpack_symmetric(side, &v);
            let eig = SymmetricEigen::new(m);
            (-eig.eigenvalues.min()).max(0.0)
        }
    }
}

fn unpack_symmetric(side: usize, upper: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(side, side);
    let mut idx = 0;
    for j in 0..side {
        for i in 0..=j {
            m[(i, j)] = upper[idx];
            m[(j, i)] = upper[idx];
            idx += 1;
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConicStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    NumericalLimit,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: ConicStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Largest cone violation of `x`, recomputed from the problem data.
    pub max_residual: f64,
    pub iterations: u32,
}

impl ConicSolution {
    /// Optimal, or stopped at reduced accuracy with a primal point that still
    /// satisfies the constraints to `tol`.
    pub fn is_usable(&self, tol: f64) -> bool {
        match self.status {
            ConicStatus::Optimal => true,
            ConicStatus::NumericalLimit | ConicStatus::IterationLimit => {
                self.max_residual <= tol && self.x.iter().all(|v| v.is_finite())
            }
            _ => false,
        }
    }
}

/// Solves `problem` to relative accuracy `tol`.
pub fn solve(problem: &ConicProblem, tol: f64) -> Result<ConicSolution, ConicError> {
    problem.check()?;
    let n = problem.num_vars;

    // Clarabel form: A x + s = b, s in K. Row `a'x + c` becomes A-row `-a`, b = c.
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut b = Vec::new();
    let mut cones = Vec::with_capacity(problem.blocks.len());
    for block in &problem.blocks {
        let weights: Vec<f64> = match block.kind {
            ConeKind::Psd { side } => {
                let mut w = Vec::with_capacity(block.rows.len());
                for j in 0..side {
                    for i in 0..=j {
                        w.push(if i == j {
                            1.0
                        } else {
                            std::f64::consts::SQRT_2
                        });
                    }
                }
                w
            }
            _ => vec![1.0; block.rows.len()],
        };
        for (row, w) in block.rows.iter().zip(weights) {
            let r = b.len();
            for &(j, a) in &row.terms {
                triplets.push((r, j, -a * w));
            }
            b.push(row.constant * w);
        }
        cones.push(match block.kind {
            ConeKind::Zero => SupportedConeT::ZeroConeT(block.rows.len()),
            ConeKind::Nonnegative => SupportedConeT::NonnegativeConeT(block.rows.len()),
            ConeKind::SecondOrder => SupportedConeT::SecondOrderConeT(block.rows.len()),
            ConeKind::Psd { side } => SupportedConeT::PSDTriangleConeT(side),
        });
    }
    let a = csc_from_triplets(b.len(), n, triplets);
    let p = CscMatrix::<f64>::zeros((n, n));

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(tol)
        .tol_gap_rel(tol)
        .tol_feas(tol)
        .tol_infeas_abs(tol)
        .tol_infeas_rel(tol)
        .max_iter(400)
        .build()
        .map_err(|e| ConicError::Malformed(format!("{e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &problem.objective, &a, &b, &cones, settings)
        .map_err(|e| ConicError::Malformed(format!("{e:?}")))?;
    solver.solve();

    let status = match solver.solution.status {
        SolverStatus::Solved => ConicStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            ConicStatus::PrimalInfeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            ConicStatus::DualInfeasible
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => ConicStatus::IterationLimit,
        _ => ConicStatus::NumericalLimit,
    };
    let x = solver.solution.x.clone();
    let max_residual = problem.max_violation(&x);
    Ok(ConicSolution {
        status,
        objective: problem.objective_value(&x),
        max_residual,
        iterations: solver.solution.iterations,
        x,
    })
}

/// Like [`solve`], but if the backend fails to certify a solution and `hint`
/// satisfies every constraint to `tol`, the hint is returned with status
/// `NumericalLimit`.
pub fn solve_with_hint(
    problem: &ConicProblem,
    tol: f64,
    hint: &[f64],
) -> Result<ConicSolution, ConicError> {
    let sol = solve(problem, tol)?;
    if sol.status == ConicStatus::Optimal || hint.len() != problem.num_vars {
        return Ok(sol);
    }
    let viol = problem.max_violation(hint);
    if viol <= tol {
        return Ok(ConicSolution {
            status: ConicStatus::NumericalLimit,
            x: hint.to_vec(),
            objective: problem.objective_value(hint),
            max_residual: viol,
            iterations: sol.iterations,
        });
    }
    Ok(sol)
}

fn csc_from_triplets(m: usize, n: usize, mut t: Vec<(usize, usize, f64)>) -> CscMatrix<f64> {
    t.sort_by_key(|a| (a.1, a.0));
    let mut colptr = vec![0usize; n + 1];
    let mut rowval = Vec::with_capacity(t.len());
    let mut nzval: Vec<f64> = Vec::with_capacity(t.len());
    let mut last: Option<(usize, usize)> = None;
    for (r, c, v) in t {
        if last == Some((r, c)) {
            *nzval.last_mut().unwrap() += v;
            continue;
        }
        rowval.push(r);
        nzval.push(v);
        colptr[c + 1] += 1;
        last = Some((r, c));
    }
    for c in 0..n {
        colptr[c + 1] += colptr[c];
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}
