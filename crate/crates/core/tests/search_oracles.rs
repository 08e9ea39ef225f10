mod common;

use cellspace_core::genome::GenomeLayout;
use cellspace_core::graph::{GraphBuilder, NodeAttrs};
use cellspace_core::metrics::{objective_vector, total_param_count};
use cellspace_core::optimizer::brute::{all_genomes, nondominated_by_definition};
use cellspace_core::optimizer::{
    brute_force_masked, brute_force_pareto, constrained_dominates, evolve_single_loop,
    evolve_single_loop_with, evolve_structure, evolve_two_phase, Assessor, GenomeMode, InnerBudget,
    SearchError, Strategy, DEFAULT_ENUMERATION_LIMIT,
};
use cellspace_core::{
    DigitGenome, NodeOp, ObjectiveVector, SearchConfig, SurrogateEvaluator, TensorShape,
};

use common::tiny_with;

fn brute(config: &SearchConfig) -> Vec<DigitGenome> {
    brute_force_pareto(config, &mut SurrogateEvaluator, DEFAULT_ENUMERATION_LIMIT)
        .unwrap()
        .genomes()
}

#[test]
fn tiny_front_is_nontrivial_and_mixed_feasibility() {
    let config = SearchConfig::tiny();
    let layout = GenomeLayout::new(config.params());
    let scored = Assessor::new(&config)
        .assess(&all_genomes(&layout), &mut SurrogateEvaluator)
        .unwrap();
    let feasible = scored.iter().filter(|i| i.objectives.is_feasible()).count();
    assert!(
        feasible > 0 && feasible < scored.len(),
        "{feasible} feasible"
    );
    let front =
        brute_force_pareto(&config, &mut SurrogateEvaluator, DEFAULT_ENUMERATION_LIMIT).unwrap();
    assert!(front.len() >= 3, "front of {}", front.len());
    assert!(front.is_sound());
    for ind in &scored {
        let member = front.entries().iter().any(|e| e.genome == ind.genome);
        let dominated = front
            .entries()
            .iter()
            .any(|e| constrained_dominates(&e.objectives, &ind.objectives));
        assert!(member != dominated);
    }
}

#[test]
fn brute_force_rejects_large_spaces() {
    let config = SearchConfig::reference_default();
    assert!(matches!(
        brute_force_pareto(&config, &mut SurrogateEvaluator, DEFAULT_ENUMERATION_LIMIT),
        Err(SearchError::SpaceTooLarge { .. })
    ));
}

#[test]
fn single_loop_equals_brute_force_for_seeds_one_to_five() {
    let oracle = brute(&SearchConfig::tiny());
    for seed in 1..=5 {
        let config = tiny_with(|ea| ea.seed = seed);
        let outcome = evolve_single_loop(&config, &mut SurrogateEvaluator).unwrap();
        assert_eq!(outcome.archive.genomes(), oracle, "seed {seed}");
    }
}

#[test]
fn single_loop_in_packed_mode_equals_brute_force() {
    let oracle = brute(&SearchConfig::tiny());
    let config = tiny_with(|ea| {
        ea.seed = 3;
        ea.mode = GenomeMode::Packed;
    });
    let outcome = evolve_single_loop(&config, &mut SurrogateEvaluator).unwrap();
    assert_eq!(outcome.archive.genomes(), oracle);
}

#[test]
fn zero_generations_keeps_the_initial_front() {
    let config = tiny_with(|ea| {
        ea.generations = 0;
        ea.seed = 4;
    });
    let outcome = evolve_single_loop(&config, &mut SurrogateEvaluator).unwrap();
    assert_eq!(outcome.records.len(), 1);

    let layout = GenomeLayout::new(config.params());
    let space = cellspace_core::optimizer::GeneSpace::new(
        layout.clone(),
        GenomeMode::Digit,
        &vec![true; layout.len()],
    )
    .unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(4);
    let initial: Vec<DigitGenome> = (0..8)
        .map(|_| space.randomize(&DigitGenome::zeros(&layout), &mut rng))
        .collect();
    let scored = Assessor::new(&config)
        .assess(&initial, &mut SurrogateEvaluator)
        .unwrap();
    let mut expected: Vec<DigitGenome> = nondominated_by_definition(&scored)
        .into_iter()
        .map(|i| i.genome)
        .collect();
    expected.sort();
    expected.dedup();
    assert_eq!(outcome.archive.genomes(), expected);
}

#[test]
fn runs_are_deterministic_generation_by_generation() {
    let config = tiny_with(|ea| {
        ea.seed = 99;
        ea.generations = 30;
    });
    let a = evolve_single_loop(&config, &mut SurrogateEvaluator).unwrap();
    let b = evolve_single_loop(&config, &mut SurrogateEvaluator).unwrap();
    assert_eq!(a, b);
    let other =
        evolve_single_loop(&tiny_with(|ea| ea.seed = 100), &mut SurrogateEvaluator).unwrap();
    assert_ne!(a.records, other.records);
}

#[test]
fn archive_is_sound_and_elitist_on_the_default_space() {
    let config = SearchConfig::reference_default()
        .with_ea(cellspace_core::EaParams {
            population: 12,
            generations: 15,
            seed: 8,
            ..Default::default()
        })
        .unwrap();
    let mut best = Vec::new();
    let outcome = evolve_single_loop_with(&config, &mut SurrogateEvaluator, &mut |r| {
        best.push(r.best_f1)
    })
    .unwrap();
    assert!(outcome.archive.is_sound());
    assert_eq!(best.len(), 16);
    let mut previous = f64::INFINITY;
    for b in best.into_iter().flatten() {
        assert!(b <= previous);
        previous = b;
    }
    let hv: Vec<f64> = outcome.records.iter().map(|r| r.hypervolume).collect();
    assert!(hv.windows(2).all(|w| w[1] >= w[0]));
}

/// The outer loop maximizes each cell set's hypervolume, so it only covers
/// the whole front once its population is wide enough to keep visiting
/// fresh cell sets.
#[test]
fn two_phase_with_generous_budget_equals_brute_force() {
    let oracle = brute(&SearchConfig::tiny());
    for seed in 1..=5 {
        let config = tiny_with(|ea| {
            ea.seed = seed;
            ea.strategy = Strategy::TwoPhase;
            ea.population = 32;
        });
        let outcome = evolve_two_phase(&config, &mut SurrogateEvaluator).unwrap();
        assert!(outcome.archive.is_sound());
        let found = outcome.archive.genomes();
        assert!(found.iter().all(|g| oracle.contains(g)), "seed {seed}");
        assert_eq!(found, oracle, "seed {seed}");
    }
}

#[test]
fn starved_two_phase_run_is_still_sound() {
    let config = tiny_with(|ea| {
        ea.seed = 1;
        ea.strategy = Strategy::TwoPhase;
        ea.generations = 2;
        ea.inner_budget = InnerBudget {
            population: 4,
            generations: 1,
        };
    });
    let outcome = evolve_two_phase(&config, &mut SurrogateEvaluator).unwrap();
    assert!(outcome.archive.is_sound());
    assert_eq!(outcome.records.len(), 3);
}

#[test]
fn frozen_cells_inner_search_equals_masked_enumeration() {
    let mut parts = SearchConfig::reference_default_parts();
    parts.stem_filters = 8;
    let config = SearchConfig::from_parts(parts).unwrap();
    let layout = GenomeLayout::new(config.params());
    let zeros = DigitGenome::zeros(&layout);
    let mask = layout.structure_mask();
    let oracle = brute_force_masked(
        &config,
        &zeros,
        &mask,
        &mut SurrogateEvaluator,
        DEFAULT_ENUMERATION_LIMIT,
    )
    .unwrap()
    .genomes();
    let budget = InnerBudget {
        population: 8,
        generations: 40,
    };
    let front = evolve_structure(&config, &zeros, budget, 1, &mut SurrogateEvaluator).unwrap();
    assert_eq!(front.genomes(), oracle);
}

#[test]
fn synthetic_over_budget_graph_is_dominated_by_every_feasible_point() {
    let mut b = GraphBuilder::new(TensorShape::new(1, 1, 299_999));
    let flat = b
        .push(NodeOp::Flatten, NodeAttrs::default(), vec![0])
        .unwrap();
    let dense = b
        .push(NodeOp::Dense, NodeAttrs::dense(1000), vec![flat])
        .unwrap();
    let graph = b.finish(dense);
    assert_eq!(total_param_count(&graph).unwrap(), 300_000_000);
    let budget = SearchConfig::reference_default().total_param();
    assert_eq!(budget, 150_000_000);
    let heavy = objective_vector(0.0, &graph, budget).unwrap();
    assert_eq!((heavy.f2, heavy.g), (2.0, 1.0));
    assert!(!heavy.is_feasible());
    for i in 0..=100 {
        for j in 0..=100 {
            let feasible =
                ObjectiveVector::from_counts(i as f64 / 100.0, j * 1_500_000, budget).unwrap();
            assert!(feasible.is_feasible());
            assert!(constrained_dominates(&feasible, &heavy));
            assert!(!constrained_dominates(&heavy, &feasible));
        }
    }
}
