use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::dominance::{constrained_dominates, hypervolume_2d, objective_order};
use crate::genome::DigitGenome;
use crate::metrics::ObjectiveVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: DigitGenome,
    pub objectives: ObjectiveVector,
    pub param_count: u64,
    #[serde(skip)]
    pub rank: usize,
    #[serde(skip)]
    pub crowding: f64,
}

impl Individual {
    pub fn new(genome: DigitGenome, objectives: ObjectiveVector, param_count: u64) -> Self {
        Self {
            genome,
            objectives,
            param_count,
            rank: 0,
            crowding: 0.0,
        }
    }
}

/// All-time set of mutually non-dominated individuals, unique by genome.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParetoArchive {
    entries: Vec<Individual>,
}

impl ParetoArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Offers `candidate`; returns whether it entered the archive.
    pub fn insert(&mut self, candidate: Individual) -> bool {
        if self.entries.iter().any(|e| {
            e.genome == candidate.genome
                || constrained_dominates(&e.objectives, &candidate.objectives)
        }) {
            return false;
        }
        self.entries
            .retain(|e| !constrained_dominates(&candidate.objectives, &e.objectives));
        self.entries.push(candidate);
        true
    }

    pub fn extend(&mut self, candidates: impl IntoIterator<Item = Individual>) {
        for c in candidates {
            self.insert(c);
        }
    }

    /// Builds an archive from entries already known to be mutually
    /// non-dominated, keeping them verbatim.
    pub fn from_entries(entries: Vec<Individual>) -> Self {
        let mut archive = Self { entries };
        archive.sort();
        archive
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Individual] {
        &self.entries
    }

    /// Canonical order: ascending `(f1, f2, g)`, then genome.
    pub fn sort(&mut self) {
        self.entries.sort_by(|a, b| {
            objective_order(&a.objectives, &b.objectives).then_with(|| a.genome.cmp(&b.genome))
        });
    }

    pub fn sorted(mut self) -> Self {
        self.sort();
        self
    }

    pub fn genomes(&self) -> Vec<DigitGenome> {
        let mut out: Vec<_> = self.entries.iter().map(|e| e.genome.clone()).collect();
        out.sort();
        out
    }

    pub fn best_feasible_f1(&self) -> Option<f64> {
        self.entries
            .iter()
            .filter(|e| e.objectives.is_feasible())
            .map(|e| e.objectives.f1)
            .min_by(f64::total_cmp)
    }

    pub fn hypervolume(&self) -> f64 {
        let points: Vec<ObjectiveVector> = self.entries.iter().map(|e| e.objectives).collect();
        hypervolume_2d(&points, (1.0, 1.0))
    }

    /// True when no entry constrained-dominates another and genomes are unique.
    pub fn is_sound(&self) -> bool {
        self.entries.iter().enumerate().all(|(i, a)| {
            self.entries.iter().enumerate().all(|(j, b)| {
                i == j
                    || (a.genome != b.genome
                        && !constrained_dominates(&a.objectives, &b.objectives))
            })
        })
    }
}
