//! Fidelity maximization over Hamiltonian parameters on a time grid.
//!
//! At each time `t` the optimizer maximizes
//! `|<target| exp(-i H t) |0...0>|^2` over the parameters of a two-body model,
//! where every candidate `H` is first rescaled to unit energy bandwidth.
//! Each time point runs `restarts` independent local searches from points
//! drawn uniformly from the sampling box. Restart `r` at time `t` draws from
//! its own RNG stream keyed by `(seed, t, r)`, so results do not depend on
//! thread scheduling or on how many restarts are run after it.

pub mod local;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collective::{self, CollectiveModel};
use crate::dynamics::{bandwidth_of, hermitian_eigen, Transition};
use crate::error::{QslError, Result};
use crate::operators::{HamiltonianModel, InteractionGraph, OrbitOptions, SymmetryClass};
use crate::states::{StateVector, TargetState};
use crate::CMatrix;

pub use local::{LocalOutcome, LocalSearch, Tolerances};

/// Smallest and largest admissible grid spacing.
pub const MIN_STEP: f64 = 1e-4;
pub const MAX_STEP: f64 = 1e-1;

/// Evenly spaced times `start, start + step, ...` up to `end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSegment {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

/// Piecewise time grid; segments may overlap and are merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub segments: Vec<TimeSegment>,
}

impl TimeGrid {
    pub fn uniform(start: f64, end: f64, step: f64) -> Self {
        Self {
            segments: vec![TimeSegment { start, end, step }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(QslError::InvalidArgument("time grid has no segments".into()));
        }
        for s in &self.segments {
            if !(s.start >= 0.0 && s.end >= s.start && s.end.is_finite()) {
                return Err(QslError::InvalidArgument(format!(
                    "time segment [{}, {}] is not a valid non-negative interval",
                    s.start, s.end
                )));
            }
            if !(MIN_STEP..=MAX_STEP).contains(&s.step) {
                return Err(QslError::InvalidArgument(format!(
                    "time step {} outside [{MIN_STEP}, {MAX_STEP}]",
                    s.step
                )));
            }
        }
        Ok(())
    }

    /// Sorted, de-duplicated grid times.
    pub fn points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for s in &self.segments {
            let count = ((s.end - s.start) / s.step + 1e-9).floor() as usize;
            out.extend((0..=count).map(|k| s.start + k as f64 * s.step));
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(1.0));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub target: TargetState,
    pub n_sites: usize,
    pub graph: InteractionGraph,
    pub symmetry: SymmetryClass,
    pub orbit_options: OrbitOptions,
    pub grid: TimeGrid,
    pub restarts: usize,
    /// Parameters are drawn uniformly from `[lo, hi]`.
    pub sampling_box: (f64, f64),
    pub local_search: LocalSearch,
    pub param_tolerance: f64,
    pub objective_tolerance: f64,
    /// Objective evaluations per local search; 0 picks `400 * parameters`.
    pub max_evaluations: usize,
    pub seed: u64,
    /// Unit fidelity means `F >= 1 - epsilon`.
    pub epsilon: f64,
    /// Also start a local search from the previous grid point's optimum.
    pub warm_start: bool,
    /// Bisect grid intervals whose fidelity jump exceeds this value.
    pub refine_threshold: Option<f64>,
    pub max_refinements: usize,
    /// Stop the base grid after the first point at unit fidelity.
    pub stop_at_unit_fidelity: bool,
    /// Use the collective-spin block form for permutation-symmetric models.
    pub collective_fast_path: bool,
}

impl OptimizeConfig {
    /// Defaults: 200 restarts in `[-1, 1]`, Nelder-Mead to 1e-10 / 1e-12,
    /// warm starts on, refinement above a 0.05 fidelity jump.
    pub fn new(
        target: TargetState,
        graph: InteractionGraph,
        symmetry: SymmetryClass,
        grid: TimeGrid,
    ) -> Self {
        Self {
            target,
            n_sites: graph.n_sites(),
            graph,
            symmetry,
            orbit_options: OrbitOptions::default(),
            grid,
            restarts: 200,
            sampling_box: (-1.0, 1.0),
            local_search: LocalSearch::NelderMead,
            param_tolerance: 1e-10,
            objective_tolerance: 1e-12,
            max_evaluations: 0,
            seed: 0,
            epsilon: 1e-6,
            warm_start: true,
            refine_threshold: Some(0.05),
            max_refinements: 3,
            stop_at_unit_fidelity: false,
            collective_fast_path: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.graph.n_sites() != self.n_sites {
            return Err(QslError::DimensionMismatch {
                expected: self.n_sites,
                found: self.graph.n_sites(),
            });
        }
        if self.restarts == 0 {
            return Err(QslError::InvalidArgument("restarts must be >= 1".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(QslError::InvalidArgument("epsilon must be positive".into()));
        }
        let (lo, hi) = self.sampling_box;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(QslError::InvalidArgument(format!("invalid sampling box [{lo}, {hi}]")));
        }
        if !(self.param_tolerance > 0.0 && self.objective_tolerance > 0.0) {
            return Err(QslError::InvalidArgument("local tolerances must be positive".into()));
        }
        if let Some(thr) = self.refine_threshold {
            if !(thr > 0.0) {
                return Err(QslError::InvalidArgument("refine threshold must be positive".into()));
            }
        }
        self.grid.validate()
    }
}

enum Evaluator {
    Dense {
        model: HamiltonianModel,
        target: StateVector,
    },
    Collective {
        model: CollectiveModel,
        coefficients: Vec<Complex64>,
    },
}

/// A compiled optimization problem: model, target and evaluation strategy.
pub struct FidelityProblem {
    evaluator: Evaluator,
    n_params: usize,
    labels: Vec<String>,
    static_overlap: f64,
}

impl FidelityProblem {
    pub fn new(cfg: &OptimizeConfig) -> Result<Self> {
        let model = HamiltonianModel::with_options(
            cfg.graph.clone(),
            cfg.symmetry.clone(),
            cfg.orbit_options,
        )?;
        let target = cfg.target.build(cfg.n_sites)?;
        let static_overlap = target.amplitudes()[0].norm_sqr();
        let n_params = model.parameter_count();
        let labels = model.parameter_labels().to_vec();
        let permutation_symmetric = match cfg.symmetry {
            SymmetryClass::FullPermutation => true,
            SymmetryClass::Isotropic => cfg.graph.is_complete(),
            _ => false,
        };
        let evaluator = if cfg.collective_fast_path
            && permutation_symmetric
            && n_params == collective::PARAMETER_COUNT
        {
            let collective = CollectiveModel::new(cfg.n_sites)?;
            Evaluator::Collective {
                coefficients: collective.dicke_coefficients(&target)?,
                model: collective,
            }
        } else {
            Evaluator::Dense { model, target }
        };
        Ok(Self {
            evaluator,
            n_params,
            labels,
            static_overlap,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.n_params
    }

    pub fn parameter_labels(&self) -> &[String] {
        &self.labels
    }

    /// `|<target|0...0>|^2`, the fidelity at `t = 0` for every Hamiltonian.
    pub fn static_overlap(&self) -> f64 {
        self.static_overlap
    }

    /// Transition amplitude under the normalized Hamiltonian built from `params`.
    pub fn transition(&self, params: &[f64]) -> Result<Transition> {
        if params.len() != self.n_params {
            return Err(QslError::DimensionMismatch {
                expected: self.n_params,
                found: params.len(),
            });
        }
        match &self.evaluator {
            Evaluator::Collective {
                model,
                coefficients,
            } => model.normalized_transition(params, coefficients),
            Evaluator::Dense { model, target } => {
                let dim = target.dim();
                let mut h = CMatrix::zeros(dim, dim);
                model.assemble_into(params, &mut h)?;
                let (values, vectors) = hermitian_eigen(&h)?;
                let min = values[0];
                let bandwidth = bandwidth_of(min, values[dim - 1])?;
                let energies = values.iter().map(|e| (e - min) / bandwidth).collect();
                let amps = target.amplitudes();
                let weights = (0..dim)
                    .map(|k| {
                        let col = vectors.column(k);
                        let overlap_target: Complex64 = col.dotc(amps);
                        overlap_target.conj() * col[0].conj()
                    })
                    .collect();
                Ok(Transition::new(energies, weights))
            }
        }
    }

    /// Fidelity at time `t`; degenerate (zero-bandwidth) candidates score 0.
    pub fn objective(&self, params: &[f64], t: f64) -> Result<f64> {
        if params.iter().any(|p| !p.is_finite()) {
            return Ok(0.0);
        }
        match self.transition(params) {
            Ok(tr) => Ok(tr.fidelity(t)),
            Err(QslError::ZeroBandwidth { .. }) => Ok(0.0),
            Err(e) => Err(e),
        }
    }

    fn score(&self, params: &[f64], t: f64) -> f64 {
        self.objective(params, t).unwrap_or(0.0)
    }

    fn local_ascent(&self, t: f64, start: &[f64], cfg: &OptimizeConfig) -> LocalOutcome {
        let budget = if cfg.max_evaluations == 0 {
            400 * self.n_params.max(1)
        } else {
            cfg.max_evaluations
        };
        let tol = Tolerances {
            x: cfg.param_tolerance,
            f: cfg.objective_tolerance,
            max_evaluations: budget,
        };
        let step = 0.1 * (cfg.sampling_box.1 - cfg.sampling_box.0);
        let mut out = local::minimize(
            cfg.local_search,
            |x| 1.0 - self.score(x, t),
            start,
            step,
            tol,
        );
        // report the fidelity of the returned point exactly as re-evaluated
        out.value = self.score(&out.x, t);
        out
    }

    /// Best of `cfg.restarts` random starts plus an optional warm start.
    pub fn maximize(&self, t: f64, cfg: &OptimizeConfig, warm: Option<&[f64]>) -> PointResult {
        let (lo, hi) = cfg.sampling_box;
        let sample = |r: usize| -> Vec<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(cfg.seed, t, r as u64));
            (0..self.n_params).map(|_| rng.gen_range(lo..=hi)).collect()
        };

        if t == 0.0 {
            let params = sample(0);
            return PointResult {
                time: t,
                fidelity: self.score(&params, t),
                params,
                evaluations: 1,
            };
        }

        let mut runs: Vec<LocalOutcome> = (0..cfg.restarts)
            .into_par_iter()
            .map(|r| self.local_ascent(t, &sample(r), cfg))
            .collect();
        if let Some(w) = warm.filter(|w| w.len() == self.n_params) {
            runs.push(self.local_ascent(t, w, cfg));
        }

        let evaluations = runs.iter().map(|r| r.evaluations as u64).sum();
        // first maximum wins ties, so fresh restarts take precedence in index order
        let mut best = 0;
        for (k, run) in runs.iter().enumerate() {
            if run.value > runs[best].value {
                best = k;
            }
        }
        let run = runs.swap_remove(best);
        PointResult {
            time: t,
            fidelity: run.value,
            params: run.x,
            evaluations,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// RNG seed of restart `r` at time `t`.
pub fn restart_seed(master: u64, t: f64, r: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ t.to_bits()) ^ r)
}

/// Optimum found at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub time: f64,
    pub fidelity: f64,
    pub params: Vec<f64>,
    pub evaluations: u64,
}

/// Fidelity of `target` after evolving `|0...0>` for `t` under the normalized
/// Hamiltonian built from `params`.
pub fn objective(params: &[f64], t: f64, cfg: &OptimizeConfig) -> Result<f64> {
    FidelityProblem::new(cfg)?.objective(params, t)
}

/// Multistart maximization at a single time.
pub fn maximize_at_time(t: f64, cfg: &OptimizeConfig) -> Result<PointResult> {
    cfg.validate()?;
    Ok(FidelityProblem::new(cfg)?.maximize(t, cfg, None))
}

/// Maximal fidelity along a time grid, with the optimal parameters per point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityCurve {
    pub parameter_labels: Vec<String>,
    pub points: Vec<PointResult>,
}

impl FidelityCurve {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.time).collect()
    }

    pub fn fidelities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.fidelity).collect()
    }

    pub fn max_fidelity(&self) -> Option<&PointResult> {
        self.points
            .iter()
            .reduce(|a, b| if b.fidelity > a.fidelity { b } else { a })
    }
}

/// Emitted after every evaluated time point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProgressEvent {
    pub time: f64,
    pub best_fidelity: f64,
    pub evaluations: u64,
    pub points_done: usize,
}

pub fn sweep(cfg: &OptimizeConfig) -> Result<FidelityCurve> {
    sweep_with_progress(cfg, &|_| {})
}

/// Maximizes fidelity over the grid, then bisects intervals with large
/// fidelity jumps.
pub fn sweep_with_progress(
    cfg: &OptimizeConfig,
    progress: &(dyn Fn(&ProgressEvent) + Sync),
) -> Result<FidelityCurve> {
    cfg.validate()?;
    let problem = FidelityProblem::new(cfg)?;
    let mut points: Vec<PointResult> = Vec::new();
    let emit = |p: &PointResult, done: usize| {
        progress(&ProgressEvent {
            time: p.time,
            best_fidelity: p.fidelity,
            evaluations: p.evaluations,
            points_done: done,
        })
    };

    for t in cfg.grid.points() {
        let warm = if cfg.warm_start {
            points.last().map(|p| p.params.as_slice())
        } else {
            None
        };
        let result = problem.maximize(t, cfg, warm);
        let done = result.fidelity >= 1.0 - cfg.epsilon;
        points.push(result);
        emit(points.last().expect("just pushed"), points.len());
        if done && cfg.stop_at_unit_fidelity {
            break;
        }
    }

    if let Some(threshold) = cfg.refine_threshold {
        for _ in 0..cfg.max_refinements {
            let gaps: Vec<usize> = points
                .windows(2)
                .enumerate()
                .filter(|(_, w)| {
                    (w[1].fidelity - w[0].fidelity).abs() > threshold
                        && (w[1].time - w[0].time) / 2.0 >= MIN_STEP
                })
                .map(|(k, _)| k)
                .collect();
            if gaps.is_empty() {
                break;
            }
            let mut inserted = Vec::with_capacity(gaps.len());
            for k in gaps {
                let t = 0.5 * (points[k].time + points[k + 1].time);
                let warm = cfg.warm_start.then(|| points[k].params.as_slice());
                inserted.push(problem.maximize(t, cfg, warm));
                emit(inserted.last().expect("just pushed"), points.len() + inserted.len());
            }
            points.extend(inserted);
            points.sort_by(|a, b| a.time.total_cmp(&b.time));
        }
    }

    Ok(FidelityCurve {
        parameter_labels: problem.parameter_labels().to_vec(),
        points,
    })
}

/// First grid time with `F >= 1 - epsilon`.
pub fn minimal_time(curve: &FidelityCurve, epsilon: f64) -> Option<f64> {
    threshold_time(curve, 1.0 - epsilon)
}

/// Rounding slack when comparing fidelities against a level.
const LEVEL_SLACK: f64 = 1e-12;

/// First grid time with `F >= level`.
pub fn threshold_time(curve: &FidelityCurve, level: f64) -> Option<f64> {
    curve
        .points
        .iter()
        .find(|p| p.fidelity >= level - LEVEL_SLACK)
        .map(|p| p.time)
}

/// Rounds a fidelity for presentation (six decimals).
pub fn present_fidelity(f: f64) -> f64 {
    (f * 1e6).round() / 1e6
}

/// Convenience: `t / pi`.
pub fn in_units_of_pi(t: f64) -> f64 {
    t / PI
}
