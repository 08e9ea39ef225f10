//! Fitness evaluation: the evaluator interface, the analytic surrogate and
//! an exact-match result cache.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::genome::{genome_hash, DigitGenome};
use crate::graph::ArchGraph;
use crate::metrics::{total_param_count, MetricsError};

/// Training settings handed to external evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingBudget {
    pub epochs: u32,
    pub batch_size: u32,
    pub dropout: f64,
}

impl Default for TrainingBudget {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 128,
            dropout: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationRequest {
    pub id: u64,
    pub genome: DigitGenome,
    pub graph: ArchGraph,
    pub param_count: u64,
    pub budget: TrainingBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub id: u64,
    pub status: EvalStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl EvaluationResult {
    pub fn ok(id: u64, accuracy: f64) -> Self {
        Self {
            id,
            status: EvalStatus::Ok,
            accuracy: Some(accuracy),
            message: None,
        }
    }

    pub fn error(id: u64, message: impl Into<String>) -> Self {
        Self {
            id,
            status: EvalStatus::Error,
            accuracy: None,
            message: Some(message.into()),
        }
    }

    /// Accuracy used for scoring. Errors, missing values and anything
    /// outside `[0, 1]` score 0.
    pub fn effective_accuracy(&self) -> f64 {
        match (self.status, self.accuracy) {
            (EvalStatus::Ok, Some(a)) if (0.0..=1.0).contains(&a) => a,
            _ => 0.0,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == EvalStatus::Ok && self.accuracy.is_some_and(|a| (0.0..=1.0).contains(&a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvaluatorError {
    #[error("evaluator could not be started: {0}")]
    Spawn(String),
    #[error("evaluator failed: {0}")]
    Fatal(String),
}

/// Scores a batch of candidates. Implementations return exactly one result
/// per request id; order does not matter.
pub trait Evaluator {
    fn evaluate(
        &mut self,
        requests: &[EvaluationRequest],
    ) -> Result<Vec<EvaluationResult>, EvaluatorError>;
}

impl<E: Evaluator + ?Sized> Evaluator for &mut E {
    fn evaluate(
        &mut self,
        requests: &[EvaluationRequest],
    ) -> Result<Vec<EvaluationResult>, EvaluatorError> {
        (**self).evaluate(requests)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for alloc::boxed::Box<E> {
    fn evaluate(
        &mut self,
        requests: &[EvaluationRequest],
    ) -> Result<Vec<EvaluationResult>, EvaluatorError> {
        (**self).evaluate(requests)
    }
}

const TWO_POW_64: f64 = 18_446_744_073_709_551_616.0;

/// `0.99·q/(q+1) − 0.02·J` clamped to `[0, 1]`, with `q = params / 10^6`
/// and `J = genome_hash / 2^64`.
pub fn surrogate_accuracy(genome: &DigitGenome, param_count: u64) -> f64 {
    let q = param_count as f64 / 1e6;
    let jitter = genome_hash(genome) as f64 / TWO_POW_64;
    (0.99 * q / (q + 1.0) - 0.02 * jitter).clamp(0.0, 1.0)
}

pub fn surrogate_evaluate(genome: &DigitGenome, graph: &ArchGraph) -> Result<f64, MetricsError> {
    Ok(surrogate_accuracy(genome, total_param_count(graph)?))
}

/// Deterministic stand-in for training.
#[derive(Debug, Clone, Copy, Default)]
pub struct SurrogateEvaluator;

impl Evaluator for SurrogateEvaluator {
    fn evaluate(
        &mut self,
        requests: &[EvaluationRequest],
    ) -> Result<Vec<EvaluationResult>, EvaluatorError> {
        Ok(requests
            .iter()
            .map(|r| EvaluationResult::ok(r.id, surrogate_accuracy(&r.genome, r.param_count)))
            .collect())
    }
}

/// Results keyed by genome hash; collisions are resolved by comparing the
/// full digit vectors.
#[derive(Debug, Clone)]
pub struct EvalCache {
    buckets: BTreeMap<u64, Vec<(DigitGenome, EvaluationResult)>>,
    hasher: fn(&DigitGenome) -> u64,
    len: usize,
}

impl Default for EvalCache {
    fn default() -> Self {
        Self::with_hasher(genome_hash)
    }
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_hasher(hasher: fn(&DigitGenome) -> u64) -> Self {
        Self {
            buckets: BTreeMap::new(),
            hasher,
            len: 0,
        }
    }

    pub fn get(&self, genome: &DigitGenome) -> Option<&EvaluationResult> {
        self.buckets
            .get(&(self.hasher)(genome))?
            .iter()
            .find(|(g, _)| g == genome)
            .map(|(_, r)| r)
    }

    /// Stores `result` unless the genome is already present. Returns whether
    /// it was stored.
    pub fn insert(&mut self, genome: DigitGenome, result: EvaluationResult) -> bool {
        let bucket = self.buckets.entry((self.hasher)(&genome)).or_default();
        if bucket.iter().any(|(g, _)| *g == genome) {
            return false;
        }
        bucket.push((genome, result));
        self.len += 1;
        true
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Wraps an evaluator so each distinct genome reaches it at most once.
///
/// Entries added since the last [`CachedEvaluator::drain_new`] are kept so a
/// caller can persist them.
#[derive(Debug)]
pub struct CachedEvaluator<E> {
    inner: E,
    cache: EvalCache,
    fresh: Vec<(DigitGenome, EvaluationResult)>,
}

impl<E> CachedEvaluator<E> {
    pub fn new(inner: E) -> Self {
        Self::with_cache(inner, EvalCache::new())
    }

    pub fn with_cache(inner: E, cache: EvalCache) -> Self {
        Self {
            inner,
            cache,
            fresh: Vec::new(),
        }
    }

    pub fn cache(&self) -> &EvalCache {
        &self.cache
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    pub fn drain_new(&mut self) -> Vec<(DigitGenome, EvaluationResult)> {
        core::mem::take(&mut self.fresh)
    }
}

impl<E: Evaluator> Evaluator for CachedEvaluator<E> {
    fn evaluate(
        &mut self,
        requests: &[EvaluationRequest],
    ) -> Result<Vec<EvaluationResult>, EvaluatorError> {
        let mut misses: Vec<EvaluationRequest> = Vec::new();
        for request in requests {
            let pending = misses.iter().any(|m| m.genome == request.genome);
            if self.cache.get(&request.genome).is_none() && !pending {
                misses.push(request.clone());
            }
        }
        if !misses.is_empty() {
            let results = self.inner.evaluate(&misses)?;
            for miss in &misses {
                let result = results
                    .iter()
                    .find(|r| r.id == miss.id)
                    .cloned()
                    .unwrap_or_else(|| {
                        EvaluationResult::error(miss.id, "no result from evaluator")
                    });
                if self.cache.insert(miss.genome.clone(), result.clone()) {
                    self.fresh.push((miss.genome.clone(), result));
                }
            }
        }
        Ok(requests
            .iter()
            .map(|request| {
                let mut hit = self
                    .cache
                    .get(&request.genome)
                    .cloned()
                    .expect("every request was just evaluated or cached");
                hit.id = request.id;
                hit
            })
            .collect())
    }
}
