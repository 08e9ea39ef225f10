//! The generational NSGA-II loop over a [`GeneSpace`].

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::assess::Assessor;
use super::dominance::{crowding_distance, fast_nondominated_sort};
use super::variation::GeneSpace;
use super::{EaParams, GenerationRecord, Individual, ParetoArchive, SearchError, SearchOutcome};
use crate::evaluation::Evaluator;
use crate::genome::{DigitGenome, GenomeLayout};
use crate::metrics::ObjectiveVector;
use crate::space::SearchConfig;

/// Assigns rank and crowding to every member of `pop`.
fn rank_population(pop: &mut [Individual]) {
    let points: Vec<ObjectiveVector> = pop.iter().map(|i| i.objectives).collect();
    for (rank, front) in fast_nondominated_sort(&points).iter().enumerate() {
        let crowding = crowding_distance(&points, front);
        for (&idx, d) in front.iter().zip(crowding) {
            pop[idx].rank = rank;
            pop[idx].crowding = d;
        }
    }
}

/// Ordering of `a` against `b` for selection: lower rank, then larger
/// crowding. `Less` means `a` is preferred.
fn selection_order(a: &Individual, b: &Individual) -> Ordering {
    a.rank.cmp(&b.rank).then_with(|| {
        b.crowding
            .partial_cmp(&a.crowding)
            .unwrap_or(Ordering::Equal)
    })
}

/// Binary tournament; ties go to the lower index.
fn tournament<R: Rng + ?Sized>(pop: &[Individual], rng: &mut R) -> usize {
    let i = rng.gen_range(0..pop.len());
    let j = rng.gen_range(0..pop.len());
    match selection_order(&pop[i], &pop[j]) {
        Ordering::Less => i,
        Ordering::Greater => j,
        Ordering::Equal => i.min(j),
    }
}

/// Keeps the best `size` of `combined` by front, then crowding within the
/// last admitted front.
fn survive(combined: Vec<Individual>, size: usize) -> Vec<Individual> {
    let points: Vec<ObjectiveVector> = combined.iter().map(|i| i.objectives).collect();
    let mut chosen: Vec<(usize, usize, f64)> = Vec::with_capacity(size);
    for (rank, front) in fast_nondominated_sort(&points).iter().enumerate() {
        if chosen.len() == size {
            break;
        }
        let crowding = crowding_distance(&points, front);
        let mut members: Vec<(usize, usize, f64)> = front
            .iter()
            .zip(crowding)
            .map(|(&idx, d)| (idx, rank, d))
            .collect();
        if chosen.len() + members.len() > size {
            members.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
            members.truncate(size - chosen.len());
        }
        chosen.extend(members);
    }
    chosen
        .into_iter()
        .map(|(idx, rank, crowding)| Individual {
            rank,
            crowding,
            ..combined[idx].clone()
        })
        .collect()
}

/// One NSGA-II run over the free genes of `space`.
pub(crate) struct Nsga2<'s> {
    pub space: &'s GeneSpace,
    pub ea: &'s EaParams,
    pub population: usize,
    pub generations: usize,
}

impl Nsga2<'_> {
    /// Runs from `template` (frozen genes are taken from it) and returns
    /// the run's archive. `on_generation` sees the run archive after
    /// initialization (generation 0) and after every generation.
    pub fn run(
        &self,
        template: &DigitGenome,
        rng: &mut ChaCha8Rng,
        assessor: &mut Assessor<'_>,
        evaluator: &mut dyn Evaluator,
        on_generation: &mut dyn FnMut(usize, &ParetoArchive, &Assessor<'_>),
    ) -> Result<ParetoArchive, SearchError> {
        let mut archive = ParetoArchive::new();
        let initial: Vec<DigitGenome> = (0..self.population)
            .map(|_| self.space.randomize(template, rng))
            .collect();
        let mut population = assessor.assess(&initial, evaluator)?;
        archive.extend(population.iter().cloned());
        rank_population(&mut population);
        on_generation(0, &archive, assessor);

        for generation in 1..=self.generations {
            let mut offspring_genomes = Vec::with_capacity(self.population);
            while offspring_genomes.len() < self.population {
                let a = tournament(&population, rng);
                let b = tournament(&population, rng);
                let (c1, c2) =
                    self.space
                        .vary(&population[a].genome, &population[b].genome, self.ea, rng);
                offspring_genomes.push(c1);
                offspring_genomes.push(c2);
            }
            offspring_genomes.truncate(self.population);
            let offspring = assessor.assess(&offspring_genomes, evaluator)?;
            archive.extend(offspring.iter().cloned());

            let mut combined = population;
            combined.extend(offspring);
            population = survive(combined, self.population);
            on_generation(generation, &archive, assessor);
        }
        archive.sort();
        Ok(archive)
    }
}

pub(crate) fn record(
    generation: usize,
    archive: &ParetoArchive,
    assessor: &Assessor<'_>,
) -> GenerationRecord {
    GenerationRecord {
        gen: generation,
        evals: assessor.evaluations(),
        best_f1: archive.best_feasible_f1(),
        archive_size: archive.len(),
        hypervolume: archive.hypervolume(),
    }
}

/// Single-loop search directly on the whole genome.
pub fn evolve_single_loop(
    config: &SearchConfig,
    evaluator: &mut dyn Evaluator,
) -> Result<SearchOutcome, SearchError> {
    evolve_single_loop_with(config, evaluator, &mut |_| {})
}

/// As [`evolve_single_loop`], reporting each generation as it completes.
pub fn evolve_single_loop_with(
    config: &SearchConfig,
    evaluator: &mut dyn Evaluator,
    on_record: &mut dyn FnMut(&GenerationRecord),
) -> Result<SearchOutcome, SearchError> {
    let layout = GenomeLayout::new(config.params());
    let ea = config.ea();
    let space = GeneSpace::new(layout.clone(), ea.mode, &alloc::vec![true; layout.len()])?;
    let engine = Nsga2 {
        space: &space,
        ea,
        population: ea.population,
        generations: ea.generations,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ea.seed);
    let mut assessor = Assessor::new(config);
    let mut records = Vec::new();
    let archive = engine.run(
        &DigitGenome::zeros(&layout),
        &mut rng,
        &mut assessor,
        evaluator,
        &mut |generation, archive, assessor| {
            let r = record(generation, archive, assessor);
            on_record(&r);
            records.push(r);
        },
    )?;
    Ok(SearchOutcome {
        archive,
        records,
        evaluations: assessor.evaluations(),
    })
}
