//! Exhaustive Pareto fronts for spaces small enough to enumerate.

use alloc::vec::Vec;

use super::assess::Assessor;
use super::dominance::constrained_dominates;
use super::{Individual, ParetoArchive, SearchError};
use crate::evaluation::Evaluator;
use crate::genome::{for_each_genome, DigitGenome, GenomeLayout};
use crate::space::SearchConfig;

pub const DEFAULT_ENUMERATION_LIMIT: u64 = 100_000;

/// Members of `scored` that no other member constrained-dominates,
/// straight from the definition.
pub fn nondominated_by_definition(scored: &[Individual]) -> Vec<Individual> {
    scored
        .iter()
        .filter(|a| {
            !scored
                .iter()
                .any(|b| constrained_dominates(&b.objectives, &a.objectives))
        })
        .cloned()
        .collect()
}

/// Evaluates every genome of the space and returns the exact front.
pub fn brute_force_pareto(
    config: &SearchConfig,
    evaluator: &mut dyn Evaluator,
    limit: u64,
) -> Result<ParetoArchive, SearchError> {
    let layout = GenomeLayout::new(config.params());
    let mask = alloc::vec![true; layout.len()];
    brute_force_masked(
        config,
        &DigitGenome::zeros(&layout),
        &mask,
        evaluator,
        limit,
    )
}

/// Exhaustive front over the digits where `free` is set, with the others
/// taken from `template`.
pub fn brute_force_masked(
    config: &SearchConfig,
    template: &DigitGenome,
    free: &[bool],
    evaluator: &mut dyn Evaluator,
    limit: u64,
) -> Result<ParetoArchive, SearchError> {
    let layout = GenomeLayout::new(config.params());
    let size = layout
        .radices()
        .iter()
        .zip(free)
        .filter(|(_, &f)| f)
        .try_fold(1u64, |acc, (&r, _)| acc.checked_mul(r));
    let size = size.unwrap_or(u64::MAX);
    if size > limit {
        return Err(SearchError::SpaceTooLarge { size, limit });
    }

    let positions: Vec<usize> = (0..layout.len()).filter(|&i| free[i]).collect();
    let sub_radices: Vec<u64> = positions.iter().map(|&i| layout.radices()[i]).collect();
    let mut genomes = Vec::with_capacity(size as usize);
    let mut counter = alloc::vec![0u64; positions.len()];
    loop {
        let mut digits = template.digits().to_vec();
        for (&pos, &d) in positions.iter().zip(&counter) {
            digits[pos] = d as u32;
        }
        genomes.push(DigitGenome::from_digits_unchecked(digits));
        let mut k = 0;
        loop {
            if k == counter.len() {
                break;
            }
            counter[k] += 1;
            if counter[k] < sub_radices[k] {
                break;
            }
            counter[k] = 0;
            k += 1;
        }
        if k == counter.len() {
            break;
        }
    }

    let mut assessor = Assessor::new(config);
    let scored = assessor.assess(&genomes, evaluator)?;
    Ok(ParetoArchive::from_entries(nondominated_by_definition(
        &scored,
    )))
}

/// Every genome of the full space, in enumeration order.
pub fn all_genomes(layout: &GenomeLayout) -> Vec<DigitGenome> {
    let mut out = Vec::new();
    for_each_genome(layout, |g| out.push(g.clone()));
    out
}
