//! Two-loop search: an outer loop over cell definitions whose fitness is
//! the hypervolume of an inner NSGA-II front over the layer structure.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::assess::Assessor;
use super::nsga2::{record, Nsga2};
use super::variation::GeneSpace;
use super::{GenerationRecord, InnerBudget, ParetoArchive, SearchError, SearchOutcome};
use crate::evaluation::Evaluator;
use crate::genome::{genome_hash, DigitGenome, GenomeLayout};
use crate::space::SearchConfig;

struct Inner<'a> {
    space: GeneSpace,
    config: &'a SearchConfig,
    budget: InnerBudget,
    seed: u64,
}

impl Inner<'_> {
    /// Inner structure search with the cells of `cells` frozen.
    fn run(
        &self,
        cells: &DigitGenome,
        assessor: &mut Assessor<'_>,
        evaluator: &mut dyn Evaluator,
    ) -> Result<ParetoArchive, SearchError> {
        let engine = Nsga2 {
            space: &self.space,
            ea: self.config.ea(),
            population: self.budget.population,
            generations: self.budget.generations,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ genome_hash(cells));
        engine.run(cells, &mut rng, assessor, evaluator, &mut |_, _, _| {})
    }
}

fn structure_space(config: &SearchConfig) -> Result<GeneSpace, SearchError> {
    let layout = GenomeLayout::new(config.params());
    let mask = layout.structure_mask();
    GeneSpace::new(layout, config.ea().mode, &mask)
}

/// Inner loop on its own: searches the structure digits with the cell
/// digits of `cells` held fixed, using `budget` and `seed`.
pub fn evolve_structure(
    config: &SearchConfig,
    cells: &DigitGenome,
    budget: InnerBudget,
    seed: u64,
    evaluator: &mut dyn Evaluator,
) -> Result<ParetoArchive, SearchError> {
    let inner = Inner {
        space: structure_space(config)?,
        config,
        budget,
        seed,
    };
    let mut assessor = Assessor::new(config);
    inner.run(cells, &mut assessor, evaluator)
}

pub fn evolve_two_phase(
    config: &SearchConfig,
    evaluator: &mut dyn Evaluator,
) -> Result<SearchOutcome, SearchError> {
    evolve_two_phase_with(config, evaluator, &mut |_| {})
}

/// As [`evolve_two_phase`], reporting each outer generation.
pub fn evolve_two_phase_with(
    config: &SearchConfig,
    evaluator: &mut dyn Evaluator,
    on_record: &mut dyn FnMut(&GenerationRecord),
) -> Result<SearchOutcome, SearchError> {
    let ea = config.ea();
    let layout = GenomeLayout::new(config.params());
    let outer_space = GeneSpace::new(layout.clone(), ea.mode, &layout.cell_mask())?;
    let inner = Inner {
        space: structure_space(config)?,
        config,
        budget: ea.inner_budget,
        seed: ea.seed,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ea.seed);
    let mut assessor = Assessor::new(config);
    let mut archive = ParetoArchive::new();
    let mut fitness_memo: BTreeMap<DigitGenome, f64> = BTreeMap::new();
    let mut records = Vec::new();

    let mut fitness = |cells: &DigitGenome,
                       assessor: &mut Assessor<'_>,
                       archive: &mut ParetoArchive,
                       evaluator: &mut dyn Evaluator|
     -> Result<f64, SearchError> {
        if let Some(&hv) = fitness_memo.get(cells) {
            return Ok(hv);
        }
        let front = inner.run(cells, assessor, evaluator)?;
        let hv = front.hypervolume();
        archive.extend(front.entries().iter().cloned());
        fitness_memo.insert(cells.clone(), hv);
        Ok(hv)
    };

    let template = DigitGenome::zeros(&layout);
    let mut population: Vec<(DigitGenome, f64)> = Vec::with_capacity(ea.population);
    for _ in 0..ea.population {
        let cells = outer_space.randomize(&template, &mut rng);
        let hv = fitness(&cells, &mut assessor, &mut archive, evaluator)?;
        population.push((cells, hv));
    }
    let mut emit = |generation: usize, archive: &ParetoArchive, assessor: &Assessor<'_>| {
        let r = record(generation, archive, assessor);
        on_record(&r);
        records.push(r);
    };
    emit(0, &archive, &assessor);

    // higher hypervolume first, ties by lower index
    let better =
        |pop: &[(DigitGenome, f64)], i: usize, j: usize| match pop[i].1.total_cmp(&pop[j].1) {
            Ordering::Greater => i,
            Ordering::Less => j,
            Ordering::Equal => i.min(j),
        };

    for generation in 1..=ea.generations {
        let mut offspring = Vec::with_capacity(ea.population);
        while offspring.len() < ea.population {
            let a = better(
                &population,
                rng.gen_range(0..population.len()),
                rng.gen_range(0..population.len()),
            );
            let b = better(
                &population,
                rng.gen_range(0..population.len()),
                rng.gen_range(0..population.len()),
            );
            let (c1, c2) = outer_space.vary(&population[a].0, &population[b].0, ea, &mut rng);
            offspring.push(c1);
            offspring.push(c2);
        }
        offspring.truncate(ea.population);
        for cells in offspring {
            let hv = fitness(&cells, &mut assessor, &mut archive, evaluator)?;
            population.push((cells, hv));
        }
        // stable: earlier (parent) entries win ties
        population.sort_by(|a, b| b.1.total_cmp(&a.1));
        population.truncate(ea.population);
        emit(generation, &archive, &assessor);
    }

    archive.sort();
    Ok(SearchOutcome {
        archive,
        records,
        evaluations: assessor.evaluations(),
    })
}
