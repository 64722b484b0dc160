//! Run configuration file.
//!
//! ```toml
//! [target]
//! state = "ghz"            # ghz | w | dicke:<k> | ame
//! sites = 3
//!
//! [hamiltonian]
//! graph = "complete"       # complete | chain | ring
//! range = 1                # ring only
//! symmetry = "full-permutation"
//! swaps = [[2, 4], [3, 5]] # pair-swap-product only, 1-based sites
//! symmetric_couplings = false
//!
//! [time]
//! segments = [{ start = 0.0, end = 7.0, step = 0.1 }]
//!
//! [optimizer]
//! restarts = 200
//! seed = 0
//!
//! [report]
//! threshold_levels = [0.99]
//! ```
//!
//! Every table rejects unknown keys.

use std::path::Path;

use serde::{Deserialize, Serialize};
use twobody_qsl::operators::{parameter_count_with, InteractionGraph, OrbitOptions, SymmetryClass};
use twobody_qsl::optimizer::{LocalSearch, OptimizeConfig, TimeGrid, TimeSegment};
use twobody_qsl::states::TargetState;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub target: TargetSection,
    #[serde(default)]
    pub hamiltonian: HamiltonianSection,
    pub time: TimeSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub report: ReportSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub state: String,
    pub sites: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphName {
    Complete,
    Chain,
    Ring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymmetryName {
    FullPermutation,
    Isotropic,
    PairSwapProduct,
    Unconstrained,
    ThreeBodyDiagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    #[serde(default = "default_graph")]
    pub graph: GraphName,
    #[serde(default = "default_range")]
    pub range: usize,
    #[serde(default = "default_symmetry")]
    pub symmetry: SymmetryName,
    #[serde(default)]
    pub swaps: Vec<[usize; 2]>,
    #[serde(default)]
    pub symmetric_couplings: bool,
}

fn default_graph() -> GraphName {
    GraphName::Complete
}

fn default_range() -> usize {
    1
}

fn default_symmetry() -> SymmetryName {
    SymmetryName::FullPermutation
}

impl Default for HamiltonianSection {
    fn default() -> Self {
        Self {
            graph: default_graph(),
            range: default_range(),
            symmetry: default_symmetry(),
            swaps: Vec::new(),
            symmetric_couplings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub segments: Vec<SegmentSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub restarts: usize,
    pub sampling_box: [f64; 2],
    pub local_search: LocalSearch,
    pub param_tolerance: f64,
    pub objective_tolerance: f64,
    /// Per local search; 0 picks 400 per parameter.
    pub max_evaluations: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub warm_start: bool,
    pub refine: bool,
    pub refine_threshold: f64,
    pub max_refinements: usize,
    pub stop_at_unit_fidelity: bool,
    pub collective_fast_path: bool,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let base = OptimizeConfig::new(
            TargetState::Ghz,
            InteractionGraph::complete(2).expect("two sites"),
            SymmetryClass::FullPermutation,
            TimeGrid::uniform(0.0, 0.0, 0.1),
        );
        Self {
            restarts: base.restarts,
            sampling_box: [base.sampling_box.0, base.sampling_box.1],
            local_search: base.local_search,
            param_tolerance: base.param_tolerance,
            objective_tolerance: base.objective_tolerance,
            max_evaluations: base.max_evaluations,
            seed: base.seed,
            epsilon: base.epsilon,
            warm_start: base.warm_start,
            refine: base.refine_threshold.is_some(),
            refine_threshold: base.refine_threshold.unwrap_or(0.05),
            max_refinements: base.max_refinements,
            stop_at_unit_fidelity: base.stop_at_unit_fidelity,
            collective_fast_path: base.collective_fast_path,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSection {
    /// Levels reported as first-crossing times in the summary.
    pub threshold_levels: Vec<f64>,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            threshold_levels: vec![0.99],
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub tolerance: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|message| CliError::Config {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.to_optimize_config().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(seed) = o.seed {
            self.optimizer.seed = seed;
        }
        if let Some(r) = o.restarts {
            self.optimizer.restarts = r;
        }
        if let Some(eps) = o.tolerance {
            self.optimizer.epsilon = eps;
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn target(&self) -> Result<TargetState, String> {
        self.target.state.parse().map_err(|e: twobody_qsl::QslError| e.to_string())
    }

    fn graph(&self) -> Result<InteractionGraph, String> {
        let n = self.target.sites;
        let g = match self.hamiltonian.graph {
            GraphName::Complete => InteractionGraph::complete(n),
            GraphName::Chain => InteractionGraph::chain(n),
            GraphName::Ring => InteractionGraph::ring(n, self.hamiltonian.range),
        };
        g.map_err(|e| e.to_string())
    }

    fn symmetry(&self) -> Result<SymmetryClass, String> {
        let h = &self.hamiltonian;
        if !h.swaps.is_empty() && h.symmetry != SymmetryName::PairSwapProduct {
            return Err("'swaps' only applies to symmetry = \"pair-swap-product\"".into());
        }
        Ok(match h.symmetry {
            SymmetryName::FullPermutation => SymmetryClass::FullPermutation,
            SymmetryName::Isotropic => SymmetryClass::Isotropic,
            SymmetryName::Unconstrained => SymmetryClass::Unconstrained,
            SymmetryName::ThreeBodyDiagonal => SymmetryClass::ThreeBodyDiagonal,
            SymmetryName::PairSwapProduct => {
                if h.swaps.is_empty() {
                    return Err("pair-swap-product needs at least one entry in 'swaps'".into());
                }
                let mut swaps = Vec::with_capacity(h.swaps.len());
                for [a, b] in &h.swaps {
                    if *a == 0 || *b == 0 {
                        return Err("swap sites are 1-based".into());
                    }
                    swaps.push((a - 1, b - 1));
                }
                SymmetryClass::PairSwapProduct(swaps)
            }
        })
    }

    /// Validated optimizer configuration.
    pub fn to_optimize_config(&self) -> Result<OptimizeConfig, String> {
        let target = self.target()?;
        let graph = self.graph()?;
        let symmetry = self.symmetry()?;
        let grid = TimeGrid {
            segments: self
                .time
                .segments
                .iter()
                .map(|s| TimeSegment {
                    start: s.start,
                    end: s.end,
                    step: s.step,
                })
                .collect(),
        };
        let o = &self.optimizer;
        let mut cfg = OptimizeConfig::new(target, graph, symmetry, grid);
        cfg.orbit_options = OrbitOptions {
            symmetric_couplings: self.hamiltonian.symmetric_couplings,
        };
        cfg.restarts = o.restarts;
        cfg.sampling_box = (o.sampling_box[0], o.sampling_box[1]);
        cfg.local_search = o.local_search;
        cfg.param_tolerance = o.param_tolerance;
        cfg.objective_tolerance = o.objective_tolerance;
        cfg.max_evaluations = o.max_evaluations;
        cfg.seed = o.seed;
        cfg.epsilon = o.epsilon;
        cfg.warm_start = o.warm_start;
        cfg.refine_threshold = o.refine.then_some(o.refine_threshold);
        cfg.max_refinements = o.max_refinements;
        cfg.stop_at_unit_fidelity = o.stop_at_unit_fidelity;
        cfg.collective_fast_path = o.collective_fast_path;
        cfg.validate().map_err(|e| e.to_string())?;
        parameter_count_with(&cfg.graph, &cfg.symmetry, cfg.orbit_options).map_err(|e| e.to_string())?;
        target.build(self.target.sites).map_err(|e| e.to_string())?;
        for level in &self.report.threshold_levels {
            if !(*level > 0.0 && *level < 1.0) {
                return Err(format!("threshold level {level} must lie in (0, 1)"));
            }
        }
        Ok(cfg)
    }
}
