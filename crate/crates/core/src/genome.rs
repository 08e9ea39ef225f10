//! Genome representations and the decoder.
//!
//! The canonical genome is a flat vector of small digits in this order:
//! `L_c` structure digits, then block digits by (cell, pipeline, layer),
//! then one reduction digit per cell. The packed form groups the same
//! digits into one big integer per structure/pipeline/reduction gene.
//!
//! Conventions: mixed-radix numbers are little-endian (digit 0 is the first
//! layer), and inside a digit the catalog choice is the minor index and the
//! option or mode the major index (`choice = d mod N`, `option = d div N`).

use alloc::vec;
use alloc::vec::Vec;
use core::hash::Hasher;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::space::{SearchConfig, SpaceParams};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("gene value out of range (bound {bound})")]
    OutOfRange { bound: BigUint },
    #[error("digit {index} = {value} out of range (radix {radix})")]
    DigitOutOfRange {
        index: usize,
        value: u64,
        radix: u64,
    },
    #[error("expected {expected} entries, got {actual}")]
    Length { expected: usize, actual: usize },
}

/// Canonical unpacked genome: one digit per decision point.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DigitGenome {
    digits: Vec<u32>,
}

impl DigitGenome {
    /// Wraps digits after checking them against the layout.
    pub fn new(digits: Vec<u32>, layout: &GenomeLayout) -> Result<Self, CodecError> {
        layout.check(&digits)?;
        Ok(Self { digits })
    }

    /// Wraps digits without validation. Callers must know they are in range.
    pub fn from_digits_unchecked(digits: Vec<u32>) -> Self {
        Self { digits }
    }

    pub fn zeros(layout: &GenomeLayout) -> Self {
        Self {
            digits: vec![0; layout.len()],
        }
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn structure<'a>(&'a self, layout: &GenomeLayout) -> &'a [u32] {
        &self.digits[..layout.params.l_c]
    }

    pub fn pipeline<'a>(
        &'a self,
        layout: &GenomeLayout,
        cell: usize,
        pipeline: usize,
    ) -> &'a [u32] {
        let start = layout.block_position(cell, pipeline, 0);
        &self.digits[start..start + layout.params.l_b]
    }

    pub fn reduction(&self, layout: &GenomeLayout, cell: usize) -> u32 {
        self.digits[layout.reduction_position(cell)]
    }
}

/// The packed vector `X = [x, x_11, …, x_1(L_p+1), …]`: structure gene
/// first, then for each cell its pipeline genes followed by its reduction
/// gene.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedGenome {
    pub genes: Vec<BigUint>,
}

/// Positions and radices of every digit for one [`SpaceParams`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenomeLayout {
    params: SpaceParams,
    radices: Vec<u64>,
}

impl GenomeLayout {
    pub fn new(params: &SpaceParams) -> Self {
        let structure = params.structure_radix();
        let block = params.block_radix();
        let reduction = params
            .reduction_radix()
            .expect("validated params keep the reduction radix within u64");
        let mut radices =
            Vec::with_capacity(params.l_c + params.n_c * (params.l_p * params.l_b + 1));
        radices.extend(core::iter::repeat_n(structure, params.l_c));
        radices.extend(core::iter::repeat_n(
            block,
            params.n_c * params.l_p * params.l_b,
        ));
        radices.extend(core::iter::repeat_n(reduction, params.n_c));
        Self {
            params: *params,
            radices,
        }
    }

    pub fn params(&self) -> &SpaceParams {
        &self.params
    }

    /// Total digit count, `L_c + N_c·L_p·L_B + N_c`.
    pub fn len(&self) -> usize {
        self.radices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radices.is_empty()
    }

    pub fn radices(&self) -> &[u64] {
        &self.radices
    }

    pub fn block_position(&self, cell: usize, pipeline: usize, layer: usize) -> usize {
        let p = &self.params;
        p.l_c + (cell * p.l_p + pipeline) * p.l_b + layer
    }

    pub fn reduction_position(&self, cell: usize) -> usize {
        let p = &self.params;
        p.l_c + p.n_c * p.l_p * p.l_b + cell
    }

    /// True for the structure digits.
    pub fn structure_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|i| i < self.params.l_c).collect()
    }

    /// True for the block and reduction digits, i.e. the cell definitions.
    pub fn cell_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|i| i >= self.params.l_c).collect()
    }

    pub fn check(&self, digits: &[u32]) -> Result<(), CodecError> {
        if digits.len() != self.len() {
            return Err(CodecError::Length {
                expected: self.len(),
                actual: digits.len(),
            });
        }
        for (index, (&value, &radix)) in digits.iter().zip(&self.radices).enumerate() {
            if u64::from(value) >= radix {
                return Err(CodecError::DigitOutOfRange {
                    index,
                    value: value.into(),
                    radix,
                });
            }
        }
        Ok(())
    }

    pub fn packed_len(&self) -> usize {
        1 + self.params.n_c * (self.params.l_p + 1)
    }

    /// Exclusive upper bound of each packed gene.
    pub fn packed_bounds(&self) -> Vec<BigUint> {
        let p = &self.params;
        let mut bounds = Vec::with_capacity(self.packed_len());
        bounds.push(p.structure_cardinality());
        for _ in 0..p.n_c {
            for _ in 0..p.l_p {
                bounds.push(p.pipeline_cardinality());
            }
            bounds.push(p.reduction_cardinality());
        }
        bounds
    }

    /// Packed bounds as u64 when every bound is below `2^53`, so each gene
    /// is exactly representable as an `f64`.
    pub fn packed_bounds_u64(&self) -> Option<Vec<u64>> {
        self.packed_bounds()
            .iter()
            .map(|b| b.to_u64().filter(|&v| v < (1u64 << 53)))
            .collect()
    }

    /// Digit positions covered by packed gene `gene`, and their shared radix.
    pub fn packed_gene_digits(&self, gene: usize) -> (core::ops::Range<usize>, u64) {
        let p = &self.params;
        if gene == 0 {
            return (0..p.l_c, p.structure_radix());
        }
        let cell = (gene - 1) / (p.l_p + 1);
        let slot = (gene - 1) % (p.l_p + 1);
        if slot < p.l_p {
            let start = self.block_position(cell, slot, 0);
            (start..start + p.l_b, p.block_radix())
        } else {
            let pos = self.reduction_position(cell);
            (pos..pos + 1, self.radices[pos])
        }
    }
}

/// Little-endian mixed-radix split of `value` into `count` digits of `radix`.
fn split(value: &BigUint, radix: u64, count: usize) -> Result<Vec<u64>, CodecError> {
    let base = BigUint::from(radix);
    let bound = num_traits::pow(base.clone(), count);
    if *value >= bound {
        return Err(CodecError::OutOfRange { bound });
    }
    let mut rest = value.clone();
    let mut digits = Vec::with_capacity(count);
    for _ in 0..count {
        let digit = &rest % &base;
        rest /= &base;
        digits.push(digit.to_u64().unwrap_or(0));
    }
    Ok(digits)
}

fn join(digits: &[u32], radix: u64) -> BigUint {
    let base = BigUint::from(radix);
    digits
        .iter()
        .rev()
        .fold(BigUint::zero(), |acc, &d| acc * &base + BigUint::from(d))
}

/// One cell layer: which cell it instantiates and under which sampling mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LayerChoice {
    pub cell: usize,
    pub sampling: usize,
}

/// One block layer of a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockChoice {
    pub block: usize,
    pub option: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReductionVariant {
    /// One reduction block per branch, then the merge.
    BeforeMerge(Vec<usize>),
    /// The merge, then one reduction block.
    AfterMerge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReductionPlan {
    pub variant: ReductionVariant,
    pub merge: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellPlan {
    pub pipelines: Vec<Vec<BlockChoice>>,
    pub reduction: ReductionPlan,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArchitecturePlan {
    pub layers: Vec<LayerChoice>,
    pub cells: Vec<CellPlan>,
}

fn structure_digit(d: u64, p: &SpaceParams) -> LayerChoice {
    let n_c = p.n_c as u64;
    LayerChoice {
        cell: (d % n_c) as usize,
        sampling: (d / n_c) as usize,
    }
}

fn block_digit(d: u64, p: &SpaceParams) -> BlockChoice {
    let n_b = p.n_b as u64;
    BlockChoice {
        block: (d % n_b) as usize,
        option: (d / n_b) as usize,
    }
}

fn reduction_digit(r: u64, p: &SpaceParams) -> ReductionPlan {
    let n_r = p.n_r as u64;
    let branch_codes = num_traits::pow(n_r, p.l_r);
    let before = p.p_r as u64 * branch_codes;
    if r < before {
        let mut code = r % branch_codes;
        let mut blocks = Vec::with_capacity(p.l_r);
        for _ in 0..p.l_r {
            blocks.push((code % n_r) as usize);
            code /= n_r;
        }
        ReductionPlan {
            variant: ReductionVariant::BeforeMerge(blocks),
            merge: (r / branch_codes) as usize,
        }
    } else {
        let rest = r - before;
        ReductionPlan {
            variant: ReductionVariant::AfterMerge((rest % n_r) as usize),
            merge: (rest / n_r) as usize,
        }
    }
}

pub fn decode_structure_gene(
    x: &BigUint,
    params: &SpaceParams,
) -> Result<Vec<LayerChoice>, CodecError> {
    Ok(split(x, params.structure_radix(), params.l_c)?
        .into_iter()
        .map(|d| structure_digit(d, params))
        .collect())
}

pub fn decode_pipeline_gene(
    x: &BigUint,
    params: &SpaceParams,
) -> Result<Vec<BlockChoice>, CodecError> {
    Ok(split(x, params.block_radix(), params.l_b)?
        .into_iter()
        .map(|d| block_digit(d, params))
        .collect())
}

pub fn decode_reduction_gene(
    r: &BigUint,
    params: &SpaceParams,
) -> Result<ReductionPlan, CodecError> {
    let bound = params.reduction_cardinality();
    if *r >= bound {
        return Err(CodecError::OutOfRange { bound });
    }
    let r = r.to_u64().ok_or(CodecError::OutOfRange { bound })?;
    Ok(reduction_digit(r, params))
}

pub fn pack(genome: &DigitGenome, layout: &GenomeLayout) -> Result<PackedGenome, CodecError> {
    layout.check(genome.digits())?;
    let genes = (0..layout.packed_len())
        .map(|gene| {
            let (range, radix) = layout.packed_gene_digits(gene);
            join(&genome.digits()[range], radix)
        })
        .collect();
    Ok(PackedGenome { genes })
}

pub fn unpack(packed: &PackedGenome, layout: &GenomeLayout) -> Result<DigitGenome, CodecError> {
    if packed.genes.len() != layout.packed_len() {
        return Err(CodecError::Length {
            expected: layout.packed_len(),
            actual: packed.genes.len(),
        });
    }
    let mut digits = vec![0u32; layout.len()];
    for (gene, value) in packed.genes.iter().enumerate() {
        let (range, radix) = layout.packed_gene_digits(gene);
        let parts = split(value, radix, range.len())?;
        for (slot, d) in range.zip(parts) {
            // radices never exceed 2^32, so every digit fits
            digits[slot] = d as u32;
        }
    }
    Ok(DigitGenome { digits })
}

/// Decodes a genome into its symbolic plan. Total over in-range genomes.
pub fn decode(genome: &DigitGenome, config: &SearchConfig) -> Result<ArchitecturePlan, CodecError> {
    let p = config.params();
    let layout = GenomeLayout::new(p);
    layout.check(genome.digits())?;
    let layers = genome
        .structure(&layout)
        .iter()
        .map(|&d| structure_digit(d.into(), p))
        .collect();
    let cells = (0..p.n_c)
        .map(|cell| CellPlan {
            pipelines: (0..p.l_p)
                .map(|pipe| {
                    genome
                        .pipeline(&layout, cell, pipe)
                        .iter()
                        .map(|&d| block_digit(d.into(), p))
                        .collect()
                })
                .collect(),
            reduction: reduction_digit(genome.reduction(&layout, cell).into(), p),
        })
        .collect();
    Ok(ArchitecturePlan { layers, cells })
}

/// Draws a genome from `rng`: each digit, in canonical order, uniform over
/// its radix via `Rng::gen_range`.
pub fn random_genome_with<R: Rng + ?Sized>(rng: &mut R, layout: &GenomeLayout) -> DigitGenome {
    let digits = layout
        .radices()
        .iter()
        .map(|&radix| rng.gen_range(0..radix) as u32)
        .collect();
    DigitGenome { digits }
}

/// Seeded genome: ChaCha8 seeded with `seed_from_u64(seed)`, then
/// [`random_genome_with`].
pub fn random_genome(seed: u64, params: &SpaceParams) -> DigitGenome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_genome_with(&mut rng, &GenomeLayout::new(params))
}

/// FNV-1a 64 over each digit as a 4-byte big-endian integer.
pub fn genome_hash(genome: &DigitGenome) -> u64 {
    digits_hash(genome.digits())
}

pub fn digits_hash(digits: &[u32]) -> u64 {
    let mut hasher = fnv::FnvHasher::default();
    for d in digits {
        hasher.write(&d.to_be_bytes());
    }
    hasher.finish()
}

/// Calls `f` on every genome of the layout in mixed-radix counting order,
/// first digit fastest.
pub fn for_each_genome(layout: &GenomeLayout, mut f: impl FnMut(&DigitGenome)) {
    let mut genome = DigitGenome::zeros(layout);
    loop {
        f(&genome);
        let mut pos = 0;
        loop {
            if pos == layout.len() {
                return;
            }
            let next = u64::from(genome.digits[pos]) + 1;
            if next < layout.radices[pos] {
                genome.digits[pos] = next as u32;
                break;
            }
            genome.digits[pos] = 0;
            pos += 1;
        }
    }
}
