//! Constrained multi-objective evolutionary search.
//!
//! Objectives are `(f1, f2)` (error and normalized parameter count), both
//! minimized, under `g = f2 − 1 ≤ 0`. Selection uses feasibility-first
//! dominance with NSGA-II ranking and crowding.

mod archive;
mod assess;
pub mod brute;
pub mod dominance;
mod nsga2;
mod two_phase;
pub mod variation;

use serde::{Deserialize, Serialize};

pub use archive::{Individual, ParetoArchive};
pub use assess::Assessor;
pub use brute::{brute_force_masked, brute_force_pareto, DEFAULT_ENUMERATION_LIMIT};
pub use dominance::{
    constrained_dominates, crowding_distance, fast_nondominated_sort, hypervolume_2d,
};
pub use nsga2::{evolve_single_loop, evolve_single_loop_with};
pub use two_phase::{evolve_structure, evolve_two_phase, evolve_two_phase_with};
pub use variation::{polynomial_mutation, sbx_crossover, GeneSpace};

use crate::evaluation::{EvaluatorError, TrainingBudget};
use crate::genome::CodecError;
use crate::graph::GraphError;
use crate::metrics::MetricsError;
use crate::space::{ConfigError, SearchConfig};

/// Which vector the variation operators act on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenomeMode {
    /// One real relaxation per digit.
    #[default]
    Digit,
    /// One real relaxation per packed gene; every gene bound must be < 2^53.
    Packed,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    SingleLoop,
    TwoPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerBudget {
    pub population: usize,
    pub generations: usize,
}

impl Default for InnerBudget {
    fn default() -> Self {
        Self {
            population: 8,
            generations: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EaParams {
    pub population: usize,
    pub generations: usize,
    pub seed: u64,
    pub crossover_prob: f64,
    pub crossover_eta: f64,
    pub mutation_prob: f64,
    pub mutation_eta: f64,
    pub mode: GenomeMode,
    pub strategy: Strategy,
    pub inner_budget: InnerBudget,
    pub budget: TrainingBudget,
    pub evaluator_timeout_s: u64,
}

impl Default for EaParams {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 1000,
            seed: 0,
            crossover_prob: 1.0,
            crossover_eta: 3.0,
            mutation_prob: 1.0,
            mutation_eta: 3.0,
            mode: GenomeMode::Digit,
            strategy: Strategy::SingleLoop,
            inner_budget: InnerBudget::default(),
            budget: TrainingBudget::default(),
            evaluator_timeout_s: 3600,
        }
    }
}

impl EaParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |reason: &str| ConfigError::Invalid {
            key: "ea",
            reason: reason.into(),
        };
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return Err(invalid("population must be even and >= 4"));
        }
        if self.inner_budget.population < 4 || !self.inner_budget.population.is_multiple_of(2) {
            return Err(invalid("inner_budget.population must be even and >= 4"));
        }
        for p in [self.crossover_prob, self.mutation_prob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid("probabilities must lie in [0, 1]"));
            }
        }
        for eta in [self.crossover_eta, self.mutation_eta] {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(invalid("distribution indices must be > 0"));
            }
        }
        if self.budget.epochs == 0 || self.budget.batch_size == 0 {
            return Err(invalid("budget epochs and batch_size must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.budget.dropout) {
            return Err(invalid("budget dropout must lie in [0, 1)"));
        }
        if self.evaluator_timeout_s == 0 {
            return Err(invalid("evaluator_timeout_s must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("graph construction failed: {0}")]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Evaluator(#[from] EvaluatorError),
    #[error("space of {size} genomes exceeds the enumeration limit {limit}")]
    SpaceTooLarge { size: u64, limit: u64 },
    #[error("packed mode needs every packed gene bound below 2^53")]
    PackedUnsupported,
    #[error("genomes have different shapes")]
    ShapeMismatch,
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub gen: usize,
    pub evals: usize,
    pub best_f1: Option<f64>,
    pub archive_size: usize,
    pub hypervolume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub archive: ParetoArchive,
    pub records: alloc::vec::Vec<GenerationRecord>,
    pub evaluations: usize,
}

/// Runs the strategy selected in the config.
pub fn search(
    config: &SearchConfig,
    evaluator: &mut dyn crate::evaluation::Evaluator,
    on_record: &mut dyn FnMut(&GenerationRecord),
) -> Result<SearchOutcome, SearchError> {
    match config.ea().strategy {
        Strategy::SingleLoop => evolve_single_loop_with(config, evaluator, on_record),
        Strategy::TwoPhase => evolve_two_phase_with(config, evaluator, on_record),
    }
}
