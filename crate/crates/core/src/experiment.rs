//! Seeded experiment runs, parameter sweeps and their tabular output.
//!
//! A sweep crosses every axis value with every user drop and every configured
//! algorithm. Runs execute in parallel but rows come back in a fixed order, and
//! nothing time-dependent is written, so the same configuration always produces
//! the same bytes.

use crate::admm;
use crate::baselines::{self, ArrayGeometry, MimoOutcome};
use crate::bcd;
use crate::config::{Algorithm, ConfigError, Placement, ScenarioConfig};
use crate::model::{
    audit_feasibility, sinr, watts_to_dbm, AntennaState, Beamformer, FeasibilityReport, Scenario,
};
use crate::oracles;
use crate::report::{SolveReport, SolveStatus};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Audit tolerance for every emitted design.
pub const AUDIT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("sweep needs at least one value")]
    NoValues,
    #[error("record cannot be audited: {0}")]
    Record(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// SINR target, in the unit selected by `users.sinr_in_db`.
    Sinr,
    /// Motor power (W).
    MotionPower,
    /// Candidate positions per PA of the discrete design.
    GridDensity,
    /// PA speed (m/s).
    Speed,
    /// Service-area and waveguide scale factor.
    AreaScale,
}

impl Axis {
    pub const ALL: [Axis; 5] = [
        Axis::Sinr,
        Axis::MotionPower,
        Axis::GridDensity,
        Axis::Speed,
        Axis::AreaScale,
    ];

    pub fn token(&self) -> &'static str {
        match self {
            Axis::Sinr => "sinr",
            Axis::MotionPower => "motion-power",
            Axis::GridDensity => "grid-density",
            Axis::Speed => "speed",
            Axis::AreaScale => "area-scale",
        }
    }

    pub fn from_token(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.token() == s || a.token().replace('-', "_") == s)
    }

    /// Copy of `cfg` with this parameter set to `value`.
    pub fn apply(&self, cfg: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, ConfigError> {
        let mut out = cfg.clone();
        match self {
            Axis::Sinr => out.users.sinr_target = value,
            Axis::MotionPower => out.motion.motor_power = value,
            Axis::GridDensity => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(ConfigError::Invalid(format!(
                        "grid density must be a positive integer, got {value}"
                    )));
                }
                out.discrete.candidates = value as usize;
                out.discrete.max_candidates =
                    out.discrete.max_candidates.max(out.discrete.candidates);
            }
            Axis::Speed => out.motion.speed = value,
            Axis::AreaScale => out.area_scale = value,
        }
        out.validate()?;
        Ok(out)
    }
}

/// What a single algorithm run produced.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Pass(Box<SolveReport>),
    Mimo(MimoOutcome),
    /// The run could not start, for instance because of invalid settings.
    Failed(String),
}

impl RunOutcome {
    pub fn status_token(&self) -> &'static str {
        match self {
            RunOutcome::Pass(r) => r.status.token(),
            RunOutcome::Mimo(m) => m.status.token(),
            RunOutcome::Failed(_) => SolveStatus::SolverFailure.token(),
        }
    }

    pub fn is_feasible(&self) -> bool {
        match self {
            RunOutcome::Pass(r) => r.is_feasible(AUDIT_TOL),
            RunOutcome::Mimo(m) => m.is_feasible(AUDIT_TOL),
            RunOutcome::Failed(_) => false,
        }
    }

    /// Average power of the final design, if the run produced one.
    pub fn average_power_w(&self) -> Option<f64> {
        match self {
            RunOutcome::Pass(r) if r.status.has_design() => Some(r.average_power_w),
            RunOutcome::Mimo(m) if m.status.has_design() => Some(m.average_power_w),
            _ => None,
        }
    }

    pub fn report(&self) -> Option<&SolveReport> {
        match self {
            RunOutcome::Pass(r) => Some(r),
            _ => None,
        }
    }
}

/// The conventional array the MIMO comparison uses for this configuration.
pub fn mimo_array(cfg: &ScenarioConfig) -> ArrayGeometry {
    ArrayGeometry::line(
        cfg.geometry.waveguides,
        cfg.mimo.spacing_wavelengths * cfg.wavelength(),
        cfg.mimo.center,
        cfg.geometry.height,
        cfg.geometry.carrier_hz,
    )
}

/// Runs one algorithm on one scenario built from `cfg`.
pub fn run_algorithm(
    cfg: &ScenarioConfig,
    algorithm: Algorithm,
    scenario: &Scenario,
) -> RunOutcome {
    let pass = |r: Result<SolveReport, String>| match r {
        Ok(r) => RunOutcome::Pass(Box::new(r)),
        Err(e) => RunOutcome::Failed(e),
    };
    match algorithm {
        Algorithm::Continuous => pass(admm::run(scenario, &cfg.admm).map_err(|e| e.to_string())),
        Algorithm::Discrete => {
            pass(bcd::run_discrete(scenario, &cfg.discrete).map_err(|e| e.to_string()))
        }
        Algorithm::EqualRadiation => {
            pass(baselines::equal_power_pass(scenario, &cfg.admm).map_err(|e| e.to_string()))
        }
        Algorithm::TransmitOnly => {
            pass(baselines::transmit_only_pass(scenario, &cfg.admm).map_err(|e| e.to_string()))
        }
        Algorithm::ConventionalMimo => RunOutcome::Mimo(baselines::mimo_power_min(
            &scenario.users,
            &mimo_array(cfg),
            &scenario.motion,
            cfg.admm.solver_tol,
        )),
    }
}

/// One line of a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub axis: String,
    /// Axis value; `None` for a single run outside a sweep.
    pub value: Option<f64>,
    pub drop: u64,
    pub algorithm: Algorithm,
    pub status: String,
    pub feasible: bool,
    pub iterations: usize,
    pub average_power_w: Option<f64>,
    pub transmit_power_w: Option<f64>,
    pub motion_energy_j: Option<f64>,
}

impl RunRow {
    fn new(
        axis: &str,
        value: Option<f64>,
        drop: u64,
        algorithm: Algorithm,
        outcome: &RunOutcome,
    ) -> Self {
        let has_design = outcome.average_power_w().is_some();
        let (iterations, transmit, motion) = match outcome {
            RunOutcome::Pass(r) => (r.iterations.len(), r.transmit_power_w, r.motion_energy_j),
            RunOutcome::Mimo(m) => (0, m.transmit_power_w, 0.0),
            RunOutcome::Failed(_) => (0, f64::NAN, f64::NAN),
        };
        Self {
            axis: axis.to_string(),
            value,
            drop,
            algorithm,
            status: outcome.status_token().to_string(),
            feasible: outcome.is_feasible(),
            iterations,
            average_power_w: outcome.average_power_w(),
            transmit_power_w: has_design.then_some(transmit),
            motion_energy_j: has_design.then_some(motion),
        }
    }
}

/// Full result of one run, as written in the records format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub axis: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub seed: u64,
    pub drop: u64,
    pub algorithm: Algorithm,
    pub status: String,
    pub feasible: bool,
    pub users: Vec<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_power_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_power_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub design: Option<Design>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<FeasibilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Final design in plain nested lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    /// Rows are waveguides; empty for the conventional array.
    pub positions: Vec<Vec<f64>>,
    pub ratios: Vec<Vec<f64>>,
    /// `beamformer[m][k] = [re, im]`.
    pub beamformer: Vec<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub objective: f64,
    pub residual: f64,
    pub max_violation: f64,
    pub penalty: f64,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn weights_of(bf: &Beamformer) -> Vec<Vec<[f64; 2]>> {
    let w = &bf.weights;
    (0..w.nrows())
        .map(|i| w.row(i).iter().map(|c| [c.re, c.im]).collect())
        .collect()
}

impl RunRecord {
    pub fn new(
        cfg: &ScenarioConfig,
        axis: &str,
        value: Option<f64>,
        drop: u64,
        algorithm: Algorithm,
        scenario: &Scenario,
        outcome: &RunOutcome,
    ) -> Self {
        let power = outcome.average_power_w();
        let mut rec = Self {
            axis: axis.to_string(),
            value,
            seed: cfg.seed,
            drop,
            algorithm,
            status: outcome.status_token().to_string(),
            feasible: outcome.is_feasible(),
            users: scenario.users.positions.clone(),
            average_power_w: power,
            average_power_dbm: power.map(watts_to_dbm),
            design: None,
            audit: None,
            error: None,
            trajectory: Vec::new(),
        };
        match outcome {
            RunOutcome::Pass(r) => {
                if r.status.has_design() {
                    rec.design = Some(Design {
                        positions: rows_of(&r.state.positions),
                        ratios: rows_of(&r.state.ratios),
                        beamformer: weights_of(&r.beamformer),
                        selection: r.selection.clone(),
                    });
                    rec.audit = Some(r.audit);
                }
                rec.trajectory = r
                    .iterations
                    .iter()
                    .map(|it| TrajectoryPoint {
                        iteration: it.iteration,
                        objective: it.objective,
                        residual: it.residual,
                        max_violation: it.max_violation,
                        penalty: it.penalty,
                    })
                    .collect();
            }
            RunOutcome::Mimo(m) => {
                if m.status.has_design() {
                    rec.design = Some(Design {
                        positions: Vec::new(),
                        ratios: Vec::new(),
                        beamformer: weights_of(&m.beamformer),
                        selection: None,
                    });
                    rec.audit = Some(mimo_audit(cfg, scenario, &m.beamformer));
                }
            }
            RunOutcome::Failed(e) => rec.error = Some(e.clone()),
        }
        rec
    }
}

/// SINR audit of a conventional-array design; the PASS-only checks are left at `-inf`.
fn mimo_audit(cfg: &ScenarioConfig, scenario: &Scenario, bf: &Beamformer) -> FeasibilityReport {
    let users = &scenario.users;
    let array = mimo_array(cfg);
    let ones = DMatrix::from_element(array.elements.len(), 1, 1.0);
    let gammas = sinr(&array.channels(users), &ones, bf, &users.noise_power);
    let mut rep = FeasibilityReport {
        sinr_shortfall: f64::NEG_INFINITY,
        sinr_relative_shortfall: f64::NEG_INFINITY,
        radiation_excess: f64::NEG_INFINITY,
        negative_ratio: f64::NEG_INFINITY,
        spacing_deficit: f64::NEG_INFINITY,
        range_excess: f64::NEG_INFINITY,
        movement_excess: f64::NEG_INFINITY,
    };
    for (g, t) in gammas.iter().zip(&users.sinr_target) {
        rep.sinr_shortfall = rep.sinr_shortfall.max(t - g);
        rep.sinr_relative_shortfall = rep.sinr_relative_shortfall.max((t - g) / t);
    }
    rep
}

/// Recomputes the audit of a saved record against the scenario it was run on.
///
/// `cfg` is the configuration the record was produced from; a sweep record's
/// axis value is applied to it first.
pub fn audit_record(
    cfg: &ScenarioConfig,
    rec: &RunRecord,
) -> Result<FeasibilityReport, ExperimentError> {
    let bad = |s: &str| ExperimentError::Record(s.to_string());
    let cfg = match (Axis::from_token(&rec.axis), rec.value) {
        (Some(axis), Some(v)) => axis.apply(cfg, v)?,
        _ => cfg.clone(),
    };
    let scenario = cfg.scenario(rec.users.clone())?;
    let design = rec
        .design
        .as_ref()
        .ok_or_else(|| bad("no design (the run failed)"))?;
    let bf = Beamformer {
        weights: matrix_from_rows(&design.beamformer, |c| Complex64::new(c[0], c[1]))
            .ok_or_else(|| bad("ragged beamformer"))?,
    };
    if rec.algorithm == Algorithm::ConventionalMimo {
        return Ok(mimo_audit(&cfg, &scenario, &bf));
    }
    let state = AntennaState {
        positions: matrix_from_rows(&design.positions, |&x| x)
            .ok_or_else(|| bad("ragged positions"))?,
        ratios: matrix_from_rows(&design.ratios, |&x| x).ok_or_else(|| bad("ragged ratios"))?,
    };
    let g = &scenario.geometry;
    let (m, n, k) = (g.waveguides, g.antennas_per_waveguide, scenario.users.len());
    if state.positions.shape() != (m, n)
        || state.ratios.shape() != (m, n)
        || bf.weights.shape() != (m, k)
    {
        return Err(bad("design dimensions do not match the configuration"));
    }
    Ok(audit_feasibility(&state, &bf, &scenario))
}

fn matrix_from_rows<T, U: nalgebra::Scalar>(
    rows: &[Vec<T>],
    f: impl Fn(&T) -> U,
) -> Option<DMatrix<U>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.iter().flatten().map(f),
    ))
}

/// Rows and records of a batch of runs, in submission order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch {
    pub rows: Vec<RunRow>,
    pub records: Vec<RunRecord>,
}

struct Job {
    value: Option<f64>,
    drop: u64,
    algorithm: Algorithm,
}

fn run_jobs(
    configs: &[(Option<f64>, ScenarioConfig)],
    axis: &str,
    algorithms: &[Algorithm],
    drops: &[u64],
) -> Result<Batch, ExperimentError> {
    let mut jobs = Vec::new();
    for (ci, (value, _)) in configs.iter().enumerate() {
        for &drop in drops {
            for &algorithm in algorithms {
                jobs.push((
                    ci,
                    Job {
                        value: *value,
                        drop,
                        algorithm,
                    },
                ));
            }
        }
    }
    let results: Vec<Result<(RunRow, RunRecord), ConfigError>> = jobs
        .par_iter()
        .map(|(ci, job)| {
            let cfg = &configs[*ci].1;
            let scenario = cfg.drop_scenario(job.drop)?;
            let outcome = run_algorithm(cfg, job.algorithm, &scenario);
            Ok((
                RunRow::new(axis, job.value, job.drop, job.algorithm, &outcome),
                RunRecord::new(
                    cfg,
                    axis,
                    job.value,
                    job.drop,
                    job.algorithm,
                    &scenario,
                    &outcome,
                ),
            ))
        })
        .collect();
    let mut batch = Batch::default();
    for r in results {
        let (row, rec) = r?;
        batch.rows.push(row);
        batch.records.push(rec);
    }
    Ok(batch)
}

/// Runs every configured algorithm on drop `drop` of `cfg`.
pub fn run_drop(cfg: &ScenarioConfig, drop: u64) -> Result<Batch, ExperimentError> {
    cfg.validate()?;
    run_jobs(&[(None, cfg.clone())], "none", &cfg.algorithms, &[drop])
}

/// Runs every configured algorithm on `cfg.drops` drops for each axis value.
pub fn sweep(cfg: &ScenarioConfig, axis: Axis, values: &[f64]) -> Result<Batch, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::NoValues);
    }
    let configs = values
        .iter()
        .map(|&v| axis.apply(cfg, v).map(|c| (Some(v), c)))
        .collect::<Result<Vec<_>, _>>()?;
    let drops: Vec<u64> = (0..cfg.drops as u64).collect();
    run_jobs(&configs, axis.token(), &cfg.algorithms, &drops)
}

/// Mean over drops for one `(value, algorithm)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub axis: String,
    pub value: Option<f64>,
    pub algorithm: Algorithm,
    pub runs: usize,
    /// Runs whose design passed the audit; only these enter the mean.
    pub feasible: usize,
    pub mean_power_w: Option<f64>,
}

impl SummaryRow {
    pub fn mean_power_dbm(&self) -> Option<f64> {
        self.mean_power_w.map(watts_to_dbm)
    }
}

/// Averages the feasible runs of each `(value, algorithm)` pair, in order of first appearance.
pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut out: Vec<(SummaryRow, f64)> = Vec::new();
    for row in rows {
        let pos = out.iter().position(|(s, _)| {
            s.axis == row.axis
                && s.algorithm == row.algorithm
                && s.value.map(f64::to_bits) == row.value.map(f64::to_bits)
        });
        let idx = pos.unwrap_or_else(|| {
            out.push((
                SummaryRow {
                    axis: row.axis.clone(),
                    value: row.value,
                    algorithm: row.algorithm,
                    runs: 0,
                    feasible: 0,
                    mean_power_w: None,
                },
                0.0,
            ));
            out.len() - 1
        });
        let (s, acc) = &mut out[idx];
        s.runs += 1;
        if let (true, Some(p)) = (row.feasible, row.average_power_w) {
            s.feasible += 1;
            *acc += p;
        }
    }
    out.into_iter()
        .map(|(mut s, acc)| {
            s.mean_power_w = (s.feasible > 0).then(|| acc / s.feasible as f64);
            s
        })
        .collect()
}

/// Column order of the run table.
pub const RUN_COLUMNS: [&str; 11] = [
    "axis",
    "value",
    "drop",
    "algorithm",
    "status",
    "feasible",
    "iterations",
    "average_power_w",
    "average_power_dbm",
    "transmit_power_w",
    "motion_energy_j",
];

fn num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.9e}"))
}

fn value_field(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

/// Run table as CSV. Powers are blank when the run left no design.
pub fn runs_csv(rows: &[RunRow]) -> String {
    let mut s = RUN_COLUMNS.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.axis,
            value_field(r.value),
            r.drop,
            r.algorithm.token(),
            r.status,
            r.feasible,
            r.iterations,
            num(r.average_power_w),
            r.average_power_w
                .map_or_else(String::new, |p| format!("{:.4}", watts_to_dbm(p))),
            num(r.transmit_power_w),
            num(r.motion_energy_j),
        );
    }
    s
}

/// Column order of the summary table.
pub const SUMMARY_COLUMNS: [&str; 7] = [
    "axis",
    "value",
    "algorithm",
    "runs",
    "feasible",
    "mean_power_w",
    "mean_power_dbm",
];

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = SUMMARY_COLUMNS.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.axis,
            value_field(r.value),
            r.algorithm.token(),
            r.runs,
            r.feasible,
            num(r.mean_power_w),
            r.mean_power_dbm()
                .map_or_else(String::new, |p| format!("{p:.4}")),
        );
    }
    s
}

#[derive(Serialize, Deserialize)]
struct RecordFile {
    run: Vec<RunRecord>,
}

/// Records as a TOML document with one `[[run]]` table per run.
pub fn records_toml(records: &[RunRecord]) -> String {
    toml::to_string(&RecordFile {
        run: records.to_vec(),
    })
    .expect("records are always serializable")
}

/// Parses a document written by [`records_toml`].
pub fn parse_records(text: &str) -> Result<Vec<RunRecord>, toml::de::Error> {
    toml::from_str::<RecordFile>(text).map(|f| f.run)
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    let io_err = |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    f.write_all(contents.as_bytes()).map_err(io_err)
}

/// Grid step of the one-dimensional oracle (m).
pub const ORACLE_RESOLUTION: f64 = 1e-4;
/// Scan resolution of the radiation ratios in the enumeration oracle.
pub const ORACLE_ALPHA_STEPS: usize = 64;

/// An optimizer result next to the brute-force optimum of the same instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub kind: String,
    pub index: u64,
    pub status: String,
    /// Audited average power of the optimizer's design, if feasible.
    pub algorithm_power_w: Option<f64>,
    pub oracle_power_w: Option<f64>,
    pub elapsed_s: f64,
}

impl OracleCheck {
    /// Optimizer power over oracle power; `None` if either is missing.
    pub fn ratio(&self) -> Option<f64> {
        Some(self.algorithm_power_w? / self.oracle_power_w?)
    }
}

fn tiny_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seeded single-PA, single-user instance with randomized motor parameters.
pub fn tiny_continuous_config(seed: u64, index: u64) -> ScenarioConfig {
    let mut rng = tiny_rng(seed, index);
    let mut cfg = ScenarioConfig::default();
    cfg.geometry.waveguides = 1;
    cfg.geometry.antennas_per_waveguide = 1;
    cfg.geometry.waveguide_y = vec![0.0];
    cfg.geometry.initial_positions = vec![rng.random_range(5.0..35.0)];
    cfg.users.count = 1;
    cfg.motion.motor_power = rng.random_range(0.0..0.2);
    cfg.motion.speed = rng.random_range(0.5..2.0);
    cfg.users.placement = Placement::Explicit;
    cfg.users.positions = vec![[rng.random_range(0.0..40.0), rng.random_range(-20.0..20.0)]];
    cfg
}

/// Seeded instance with at most two PAs, two users and five candidates per PA.
///
/// Instances cycle through four shapes: one PA, two PAs on one waveguide,
/// and one PA on each of two waveguides serving one or two users.
pub fn tiny_discrete_config(seed: u64, index: u64) -> ScenarioConfig {
    let mut rng = tiny_rng(seed, index);
    let (m, n, k) = [(1, 1, 1), (1, 2, 1), (2, 1, 1), (2, 1, 2)][(index % 4) as usize];
    let mut cfg = ScenarioConfig::default();
    cfg.geometry.waveguides = m;
    cfg.geometry.antennas_per_waveguide = n;
    cfg.geometry.waveguide_y = if m == 1 { vec![0.0] } else { vec![-10.0, 10.0] };
    cfg.geometry.initial_positions = if n == 1 { vec![20.0] } else { vec![14.0, 26.0] };
    cfg.users.count = k;
    cfg.motion.motor_power = rng.random_range(0.0..0.1);
    cfg.discrete.candidates = if index % 8 < 4 { 3 } else { 5 };
    cfg.users.placement = Placement::Explicit;
    cfg.users.positions = (0..k)
        .map(|_| [rng.random_range(0.0..40.0), rng.random_range(-20.0..20.0)])
        .collect();
    cfg
}

/// Continuous design against the one-dimensional grid oracle.
pub fn continuous_oracle_check(
    cfg: &ScenarioConfig,
    index: u64,
) -> Result<OracleCheck, ExperimentError> {
    let scenario = cfg.drop_scenario(0)?;
    let start = std::time::Instant::now();
    let outcome = run_algorithm(cfg, Algorithm::Continuous, &scenario);
    let elapsed_s = start.elapsed().as_secs_f64();
    let oracle = oracles::grid_oracle_1d(&scenario, ORACLE_RESOLUTION);
    Ok(OracleCheck {
        kind: "continuous".into(),
        index,
        status: outcome.status_token().into(),
        algorithm_power_w: outcome
            .is_feasible()
            .then(|| outcome.average_power_w())
            .flatten(),
        oracle_power_w: Some(oracle.average_power),
        elapsed_s,
    })
}

/// Discrete design against exhaustive enumeration of the same candidate grid.
pub fn discrete_oracle_check(
    cfg: &ScenarioConfig,
    index: u64,
) -> Result<OracleCheck, ExperimentError> {
    let scenario = cfg.drop_scenario(0)?;
    let start = std::time::Instant::now();
    let outcome = run_algorithm(cfg, Algorithm::Discrete, &scenario);
    let elapsed_s = start.elapsed().as_secs_f64();
    let grid = bcd::DiscreteGrid::build(&scenario, cfg.discrete.candidates);
    let oracle =
        oracles::exhaustive_discrete_oracle(&scenario, &grid.positions, ORACLE_ALPHA_STEPS);
    Ok(OracleCheck {
        kind: "discrete".into(),
        index,
        status: outcome.status_token().into(),
        algorithm_power_w: outcome
            .is_feasible()
            .then(|| outcome.average_power_w())
            .flatten(),
        oracle_power_w: oracle.map(|o| o.average_power),
        elapsed_s,
    })
}

/// Runs `count` seeded oracle comparisons of each kind.
pub fn oracle_checks(seed: u64, count: u64) -> Result<Vec<OracleCheck>, ExperimentError> {
    let mut jobs: Vec<(bool, u64)> = (0..count).map(|i| (true, i)).collect();
    jobs.extend((0..count).map(|i| (false, i)));
    jobs.par_iter()
        .map(|&(continuous, i)| {
            if continuous {
                continuous_oracle_check(&tiny_continuous_config(seed, i), i)
            } else {
                discrete_oracle_check(&tiny_discrete_config(seed, i), i)
            }
        })
        .collect()
}

pub const ORACLE_COLUMNS: [&str; 7] = [
    "kind",
    "index",
    "status",
    "algorithm_power_w",
    "oracle_power_w",
    "ratio",
    "elapsed_s",
];

/// Oracle table as CSV. Includes wall time, so it is not byte-reproducible.
pub fn oracle_csv(checks: &[OracleCheck]) -> String {
    let mut s = ORACLE_COLUMNS.join(",");
    s.push('\n');
    for c in checks {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:.3}",
            c.kind,
            c.index,
            c.status,
            num(c.algorithm_power_w),
            num(c.oracle_power_w),
            c.ratio().map_or_else(String::new, |r| format!("{r:.6}")),
            c.elapsed_s
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(
        value: f64,
        drop: u64,
        algorithm: Algorithm,
        power: Option<f64>,
        feasible: bool,
    ) -> RunRow {
        RunRow {
            axis: "speed".into(),
            value: Some(value),
            drop,
            algorithm,
            status: if power.is_some() {
                "converged"
            } else {
                "qos-infeasible"
            }
            .into(),
            feasible,
            iterations: 3,
            average_power_w: power,
            transmit_power_w: power,
            motion_energy_j: power.map(|_| 0.0),
        }
    }

    #[test]
    fn axis_tokens_round_trip() {
        for a in Axis::ALL {
            assert_eq!(Axis::from_token(a.token()), Some(a));
        }
        assert_eq!(Axis::from_token("motion_power"), Some(Axis::MotionPower));
        assert_eq!(Axis::from_token("foo"), None);
    }

    #[test]
    fn axis_apply_sets_the_field() {
        let cfg = ScenarioConfig::default();
        assert_eq!(Axis::Speed.apply(&cfg, 2.0).unwrap().motion.speed, 2.0);
        assert_eq!(
            Axis::MotionPower
                .apply(&cfg, 0.04)
                .unwrap()
                .motion
                .motor_power,
            0.04
        );
        assert_eq!(Axis::AreaScale.apply(&cfg, 1.5).unwrap().area_scale, 1.5);
        assert_eq!(
            Axis::Sinr.apply(&cfg, 10.0).unwrap().users.sinr_target,
            10.0
        );
        let g = Axis::GridDensity.apply(&cfg, 20.0).unwrap();
        assert_eq!(g.discrete.candidates, 20);
        assert!(g.discrete.max_candidates >= 20);
        assert!(Axis::GridDensity.apply(&cfg, 2.5).is_err());
        assert!(Axis::Speed.apply(&cfg, -1.0).is_err());
    }

    #[test]
    fn summary_averages_feasible_rows_in_watts() {
        let rows = vec![
            row(1.0, 0, Algorithm::Continuous, Some(0.01), true),
            row(1.0, 1, Algorithm::Continuous, Some(0.03), true),
            row(1.0, 2, Algorithm::Continuous, None, false),
            row(1.0, 0, Algorithm::TransmitOnly, Some(0.5), false),
            row(2.0, 0, Algorithm::Continuous, Some(0.001), true),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].runs, s[0].feasible), (3, 2));
        assert!((s[0].mean_power_w.unwrap() - 0.02).abs() < 1e-15);
        assert_eq!(s[1].mean_power_w, None);
        assert!((s[2].mean_power_dbm().unwrap() - 0.0).abs() < 1e-12);
    }

    #[test]
    fn csv_has_fixed_header_and_blank_failed_powers() {
        let rows = vec![
            row(1.0, 0, Algorithm::Continuous, Some(1.0), true),
            row(1.0, 1, Algorithm::Continuous, None, false),
        ];
        let csv = runs_csv(&rows);
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(
            lines[0],
            "axis,value,drop,algorithm,status,feasible,iterations,average_power_w,average_power_dbm,transmit_power_w,motion_energy_j"
        );
        assert_eq!(lines[1], "speed,1,0,continuous,converged,true,3,1.000000000e0,30.0000,1.000000000e0,0.000000000e0");
        assert_eq!(lines[2], "speed,1,1,continuous,qos-infeasible,false,3,,,,");
    }

    #[test]
    fn mimo_array_uses_half_wavelength_line() {
        let cfg = ScenarioConfig::default();
        let a = mimo_array(&cfg);
        assert_eq!(a.elements.len(), 3);
        assert!((a.elements[1][1] - a.elements[0][1] - cfg.wavelength() / 2.0).abs() < 1e-15);
        assert_eq!(a.elements[1], [0.0, 0.0, 5.0]);
    }

    #[test]
    fn conventional_mimo_run_is_feasible_and_recorded() {
        let cfg = ScenarioConfig {
            algorithms: vec![Algorithm::ConventionalMimo],
            drops: 2,
            ..Default::default()
        };
        let batch = run_drop(&cfg, 1).unwrap();
        assert_eq!(batch.rows.len(), 1);
        assert_eq!(batch.rows[0].drop, 1);
        assert!(batch.rows[0].feasible);
        let text = records_toml(&batch.records);
        let back = parse_records(&text).unwrap();
        assert_eq!(back, batch.records);
        let audit = audit_record(&cfg, &back[0]).unwrap();
        assert_eq!(Some(audit), back[0].audit);
    }
}
