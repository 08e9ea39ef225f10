use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{Individual, SearchError};
use crate::evaluation::{EvaluationRequest, Evaluator};
use crate::genome::{decode, DigitGenome, GenomeLayout};
use crate::graph::build_graph;
use crate::metrics::{total_param_count, ObjectiveVector};
use crate::space::SearchConfig;

/// Turns genomes into scored individuals: decode, build, count, evaluate.
/// Each distinct genome is evaluated once per assessor.
pub struct Assessor<'c> {
    config: &'c SearchConfig,
    layout: GenomeLayout,
    memo: BTreeMap<DigitGenome, (ObjectiveVector, u64)>,
    next_id: u64,
}

impl<'c> Assessor<'c> {
    pub fn new(config: &'c SearchConfig) -> Self {
        Self {
            config,
            layout: GenomeLayout::new(config.params()),
            memo: BTreeMap::new(),
            next_id: 0,
        }
    }

    pub fn config(&self) -> &'c SearchConfig {
        self.config
    }

    pub fn layout(&self) -> &GenomeLayout {
        &self.layout
    }

    /// Number of distinct genomes evaluated so far.
    pub fn evaluations(&self) -> usize {
        self.memo.len()
    }

    pub fn assess(
        &mut self,
        genomes: &[DigitGenome],
        evaluator: &mut dyn Evaluator,
    ) -> Result<Vec<Individual>, SearchError> {
        let mut requests: Vec<EvaluationRequest> = Vec::new();
        for genome in genomes {
            if self.memo.contains_key(genome) || requests.iter().any(|r| r.genome == *genome) {
                continue;
            }
            self.layout.check(genome.digits())?;
            let plan = decode(genome, self.config)?;
            let graph = build_graph(&plan, self.config)?;
            let param_count = total_param_count(&graph)?;
            requests.push(EvaluationRequest {
                id: self.next_id,
                genome: genome.clone(),
                graph,
                param_count,
                budget: self.config.budget(),
            });
            self.next_id += 1;
        }

        if !requests.is_empty() {
            let results = evaluator.evaluate(&requests)?;
            for request in &requests {
                let accuracy = match results.iter().find(|r| r.id == request.id) {
                    Some(result) => {
                        if !result.is_ok() {
                            log::warn!(
                                "evaluation {} failed: {}",
                                request.id,
                                result.message.as_deref().unwrap_or("invalid accuracy")
                            );
                        }
                        result.effective_accuracy()
                    }
                    None => {
                        log::warn!("evaluation {} returned no result", request.id);
                        0.0
                    }
                };
                let objectives = ObjectiveVector::from_counts(
                    1.0 - accuracy,
                    request.param_count,
                    self.config.total_param(),
                )?;
                self.memo
                    .insert(request.genome.clone(), (objectives, request.param_count));
            }
        }

        Ok(genomes
            .iter()
            .map(|g| {
                let (objectives, params) = self.memo[g];
                Individual::new(g.clone(), objectives, params)
            })
            .collect())
    }
}
