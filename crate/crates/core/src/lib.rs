//! Hierarchical cell-based architecture search space.
//!
//! The crate is `no_std` (with `alloc`) and covers everything that does not
//! touch the outside world:
//!
//! - [`space`]: the declarative space definition and its exact cardinalities,
//! - [`genome`]: digit and packed genomes and the decoder to architecture plans,
//! - [`graph`]: shaped operation DAGs built from plans,
//! - [`metrics`]: parameter counts and the `(f1, f2, g)` objective vector,
//! - [`evaluation`]: the evaluator interface, the analytic surrogate and a cache,
//! - [`optimizer`]: constrained NSGA-II in single- and two-loop form plus
//!   exhaustive oracles.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod evaluation;
pub mod genome;
pub mod graph;
pub mod metrics;
pub mod optimizer;
pub mod space;

pub use evaluation::{
    CachedEvaluator, EvalCache, EvalStatus, EvaluationRequest, EvaluationResult, Evaluator,
    EvaluatorError, SurrogateEvaluator, TrainingBudget,
};
pub use genome::{ArchitecturePlan, DigitGenome, GenomeLayout, PackedGenome};
pub use graph::{ArchGraph, ArchNode, NodeOp, TensorShape};
pub use metrics::ObjectiveVector;
pub use optimizer::{EaParams, Individual, ParetoArchive, SearchError, SearchOutcome};
pub use space::{ConfigError, SearchConfig, SpaceParams};

pub use num_bigint::BigUint;
