//! Real-coded variation on integer genes: simulated binary crossover and
//! polynomial mutation over the real relaxation `[0, upper]`, followed by
//! round-half-to-even and clamping.

use alloc::vec::Vec;

use rand::Rng;

use super::{EaParams, GenomeMode, SearchError};
use crate::genome::{DigitGenome, GenomeLayout};

/// SBX children of `y1`, `y2` for uniform draw `u`, lower child first.
/// The children's mean always equals the parents' mean.
pub fn sbx_pair(y1: f64, y2: f64, eta: f64, u: f64) -> (f64, f64) {
    let (lo, hi) = if y1 <= y2 { (y1, y2) } else { (y2, y1) };
    let exponent = 1.0 / (eta + 1.0);
    let beta = if u <= 0.5 {
        libm::pow(2.0 * u, exponent)
    } else {
        libm::pow(1.0 / (2.0 * (1.0 - u)), exponent)
    };
    let mid = 0.5 * (lo + hi);
    let half_spread = 0.5 * beta * (hi - lo);
    (mid - half_spread, mid + half_spread)
}

/// Bounded polynomial mutation of `y` in `[lower, upper]` for draw `u`.
pub fn polynomial_step(y: f64, lower: f64, upper: f64, eta: f64, u: f64) -> f64 {
    let span = upper - lower;
    if span <= 0.0 {
        return y;
    }
    let delta1 = (y - lower) / span;
    let delta2 = (upper - y) / span;
    let power = 1.0 / (eta + 1.0);
    let delta_q = if u < 0.5 {
        let xy = 1.0 - delta1;
        let val = 2.0 * u + (1.0 - 2.0 * u) * libm::pow(xy, eta + 1.0);
        libm::pow(val, power) - 1.0
    } else {
        let xy = 1.0 - delta2;
        let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * libm::pow(xy, eta + 1.0);
        1.0 - libm::pow(val, power)
    };
    y + delta_q * span
}

/// Nearest integer (ties to even), clamped to `[0, upper]`. NaN maps to 0.
pub fn round_clamp(value: f64, upper: u64) -> u64 {
    let r = libm::rint(value);
    if r >= upper as f64 {
        upper
    } else if r > 0.0 {
        r as u64
    } else {
        0
    }
}

/// SBX over gene vectors. Genes that are not `free` or have a single value
/// are copied from the parents.
pub fn sbx_genes<R: Rng + ?Sized>(
    p1: &[u64],
    p2: &[u64],
    uppers: &[u64],
    free: &[bool],
    ea: &EaParams,
    rng: &mut R,
) -> (Vec<u64>, Vec<u64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.gen::<f64>() >= ea.crossover_prob {
        return (c1, c2);
    }
    for i in 0..p1.len() {
        if !free[i] || uppers[i] == 0 || p1[i] == p2[i] {
            continue;
        }
        let u = rng.gen::<f64>();
        let swap = rng.gen::<f64>() < 0.5;
        let (lo, hi) = sbx_pair(p1[i] as f64, p2[i] as f64, ea.crossover_eta, u);
        let (a, b) = if swap { (hi, lo) } else { (lo, hi) };
        c1[i] = round_clamp(a, uppers[i]);
        c2[i] = round_clamp(b, uppers[i]);
    }
    (c1, c2)
}

/// Polynomial mutation over a gene vector, each free gene with probability
/// `mutation_prob`.
pub fn mutate_genes<R: Rng + ?Sized>(
    genes: &mut [u64],
    uppers: &[u64],
    free: &[bool],
    ea: &EaParams,
    rng: &mut R,
) {
    for i in 0..genes.len() {
        if !free[i] || uppers[i] == 0 {
            continue;
        }
        if rng.gen::<f64>() >= ea.mutation_prob {
            continue;
        }
        let u = rng.gen::<f64>();
        let y = polynomial_step(genes[i] as f64, 0.0, uppers[i] as f64, ea.mutation_eta, u);
        genes[i] = round_clamp(y, uppers[i]);
    }
}

/// Per-digit SBX on two genomes of `layout`.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &DigitGenome,
    p2: &DigitGenome,
    layout: &GenomeLayout,
    ea: &EaParams,
    rng: &mut R,
) -> Result<(DigitGenome, DigitGenome), SearchError> {
    let space = GeneSpace::new(
        layout.clone(),
        GenomeMode::Digit,
        &alloc::vec![true; layout.len()],
    )?;
    if p1.len() != layout.len() || p2.len() != layout.len() {
        return Err(SearchError::ShapeMismatch);
    }
    let (a, b) = sbx_genes(
        &space.to_genes(p1),
        &space.to_genes(p2),
        space.uppers(),
        space.free(),
        ea,
        rng,
    );
    Ok((space.from_genes(&a), space.from_genes(&b)))
}

/// Per-digit polynomial mutation of a genome of `layout`.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    genome: &DigitGenome,
    layout: &GenomeLayout,
    ea: &EaParams,
    rng: &mut R,
) -> DigitGenome {
    let uppers: Vec<u64> = layout.radices().iter().map(|r| r - 1).collect();
    let free = alloc::vec![true; layout.len()];
    let mut genes: Vec<u64> = genome.digits().iter().map(|&d| u64::from(d)).collect();
    mutate_genes(&mut genes, &uppers, &free, ea, rng);
    DigitGenome::from_digits_unchecked(genes.into_iter().map(|g| g as u32).collect())
}

/// The vector the operators act on: the digits themselves, or the packed
/// genes as integers below `2^53`.
#[derive(Debug, Clone)]
pub struct GeneSpace {
    layout: GenomeLayout,
    mode: GenomeMode,
    uppers: Vec<u64>,
    free: Vec<bool>,
    digit_free: Vec<bool>,
}

impl GeneSpace {
    pub fn new(
        layout: GenomeLayout,
        mode: GenomeMode,
        digit_free: &[bool],
    ) -> Result<Self, SearchError> {
        let (uppers, free) = match mode {
            GenomeMode::Digit => (
                layout.radices().iter().map(|r| r - 1).collect(),
                digit_free.to_vec(),
            ),
            GenomeMode::Packed => {
                let bounds = layout
                    .packed_bounds_u64()
                    .ok_or(SearchError::PackedUnsupported)?;
                let free = (0..layout.packed_len())
                    .map(|gene| layout.packed_gene_digits(gene).0.any(|d| digit_free[d]))
                    .collect();
                (bounds.iter().map(|b| b - 1).collect(), free)
            }
        };
        Ok(Self {
            layout,
            mode,
            uppers,
            free,
            digit_free: digit_free.to_vec(),
        })
    }

    pub fn layout(&self) -> &GenomeLayout {
        &self.layout
    }

    pub fn uppers(&self) -> &[u64] {
        &self.uppers
    }

    pub fn free(&self) -> &[bool] {
        &self.free
    }

    pub fn to_genes(&self, genome: &DigitGenome) -> Vec<u64> {
        match self.mode {
            GenomeMode::Digit => genome.digits().iter().map(|&d| u64::from(d)).collect(),
            GenomeMode::Packed => (0..self.layout.packed_len())
                .map(|gene| {
                    let (range, radix) = self.layout.packed_gene_digits(gene);
                    genome.digits()[range]
                        .iter()
                        .rev()
                        .fold(0u64, |acc, &d| acc * radix + u64::from(d))
                })
                .collect(),
        }
    }

    pub fn from_genes(&self, genes: &[u64]) -> DigitGenome {
        match self.mode {
            GenomeMode::Digit => {
                DigitGenome::from_digits_unchecked(genes.iter().map(|&g| g as u32).collect())
            }
            GenomeMode::Packed => {
                let mut digits = alloc::vec![0u32; self.layout.len()];
                for (gene, &value) in genes.iter().enumerate() {
                    let (range, radix) = self.layout.packed_gene_digits(gene);
                    let mut rest = value;
                    for slot in range {
                        digits[slot] = (rest % radix) as u32;
                        rest /= radix;
                    }
                }
                DigitGenome::from_digits_unchecked(digits)
            }
        }
    }

    /// Copy of `template` with every free digit drawn uniformly.
    pub fn randomize<R: Rng + ?Sized>(&self, template: &DigitGenome, rng: &mut R) -> DigitGenome {
        let digits = template
            .digits()
            .iter()
            .zip(self.layout.radices())
            .zip(&self.digit_free)
            .map(|((&d, &radix), &free)| {
                if free {
                    rng.gen_range(0..radix) as u32
                } else {
                    d
                }
            })
            .collect();
        DigitGenome::from_digits_unchecked(digits)
    }

    /// Crossover followed by mutation of both children.
    pub fn vary<R: Rng + ?Sized>(
        &self,
        p1: &DigitGenome,
        p2: &DigitGenome,
        ea: &EaParams,
        rng: &mut R,
    ) -> (DigitGenome, DigitGenome) {
        let (mut a, mut b) = sbx_genes(
            &self.to_genes(p1),
            &self.to_genes(p2),
            &self.uppers,
            &self.free,
            ea,
            rng,
        );
        mutate_genes(&mut a, &self.uppers, &self.free, ea, rng);
        mutate_genes(&mut b, &self.uppers, &self.free, ea, rng);
        (self.from_genes(&a), self.from_genes(&b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{pack, random_genome_with};
    use crate::space::SearchConfig;
    use alloc::vec;
    use num_traits::ToPrimitive;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sbx_preserves_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100_000 {
            let y1 = rng.gen_range(0.0..100.0);
            let y2 = rng.gen_range(0.0..100.0);
            let (c1, c2) = sbx_pair(y1, y2, 3.0, rng.gen());
            assert!(((c1 + c2) / 2.0 - (y1 + y2) / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn equal_parents_give_equal_children() {
        let layout = GenomeLayout::new(SearchConfig::reference_default().params());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ea = EaParams::default();
        for _ in 0..100 {
            let p = random_genome_with(&mut rng, &layout);
            let (a, b) = sbx_crossover(&p, &p, &layout, &ea, &mut rng).unwrap();
            assert_eq!(a, p);
            assert_eq!(b, p);
        }
        assert_eq!(sbx_pair(4.0, 4.0, 3.0, 0.9), (4.0, 4.0));
    }

    #[test]
    fn crossover_shape_mismatch() {
        let layout = GenomeLayout::new(SearchConfig::tiny().params());
        let a = DigitGenome::zeros(&layout);
        let b = DigitGenome::from_digits_unchecked(vec![0; 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sbx_crossover(&a, &b, &layout, &EaParams::default(), &mut rng).is_err());
    }

    #[test]
    fn zero_crossover_prob_copies_parents() {
        let layout = GenomeLayout::new(SearchConfig::reference_default().params());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ea = EaParams {
            crossover_prob: 0.0,
            ..EaParams::default()
        };
        let p1 = random_genome_with(&mut rng, &layout);
        let p2 = random_genome_with(&mut rng, &layout);
        assert_eq!(
            sbx_crossover(&p1, &p2, &layout, &ea, &mut rng).unwrap(),
            (p1, p2)
        );
    }

    #[test]
    fn radix_one_digit_never_mutates() {
        let layout = GenomeLayout::new(SearchConfig::tiny().params());
        assert_eq!(layout.radices()[0], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ea = EaParams::default();
        let g = DigitGenome::zeros(&layout);
        for _ in 0..1000 {
            assert_eq!(
                polynomial_mutation(&g, &layout, &ea, &mut rng).digits()[0],
                0
            );
        }
    }

    #[test]
    fn rounding_is_half_even() {
        assert_eq!(round_clamp(16.5, 34), 16);
        assert_eq!(round_clamp(17.5, 34), 18);
        assert_eq!(round_clamp(-3.0, 34), 0);
        assert_eq!(round_clamp(40.0, 34), 34);
        assert_eq!(round_clamp(f64::NAN, 34), 0);
    }

    #[test]
    fn packed_space_round_trips() {
        let config = SearchConfig::reference_default();
        let layout = GenomeLayout::new(config.params());
        let space = GeneSpace::new(
            layout.clone(),
            GenomeMode::Packed,
            &vec![true; layout.len()],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let g = random_genome_with(&mut rng, &layout);
            let genes = space.to_genes(&g);
            let big: Vec<u64> = pack(&g, &layout)
                .unwrap()
                .genes
                .iter()
                .map(|x| x.to_u64().unwrap())
                .collect();
            assert_eq!(genes, big);
            assert_eq!(space.from_genes(&genes), g);
        }
    }

    #[test]
    fn frozen_genes_are_untouched() {
        let layout = GenomeLayout::new(SearchConfig::reference_default().params());
        for mode in [GenomeMode::Digit, GenomeMode::Packed] {
            let space = GeneSpace::new(layout.clone(), mode, &layout.structure_mask()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(6);
            let ea = EaParams::default();
            let p1 = random_genome_with(&mut rng, &layout);
            let p2 = random_genome_with(&mut rng, &layout);
            let (a, _) = space.vary(&p1, &p2, &ea, &mut rng);
            assert_eq!(a.digits()[2..], p1.digits()[2..]);
            let r = space.randomize(&p1, &mut rng);
            assert_eq!(r.digits()[2..], p1.digits()[2..]);
        }
    }
}
