mod common;

use std::collections::BTreeSet;

use cellspace_core::genome::{
    decode, genome_hash, pack, random_genome, random_genome_with, unpack, DigitGenome,
    GenomeLayout, PackedGenome,
};
use cellspace_core::{BigUint, SearchConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{chi_square, chi_square_critical_001, fnv1a};

#[test]
fn round_trip_ten_thousand_seeded_genomes() {
    let config = SearchConfig::reference_default();
    let layout = GenomeLayout::new(config.params());
    let mut failures = 0;
    for seed in 0..10_000u64 {
        let g = random_genome(seed, config.params());
        let packed = pack(&g, &layout).unwrap();
        if unpack(&packed, &layout).unwrap() != g {
            failures += 1;
        }
    }
    assert_eq!(failures, 0);
}

#[test]
fn tiny_fixture_is_a_bijection() {
    let config = SearchConfig::tiny();
    let layout = GenomeLayout::new(config.params());
    let bounds = layout.packed_bounds();
    assert_eq!(config.params().total_cardinality(), BigUint::from(64u32));

    let mut plans = BTreeSet::new();
    let mut packed_seen = BTreeSet::new();
    let mut count = 0;
    cellspace_core::genome::for_each_genome(&layout, |g| {
        count += 1;
        let packed = pack(g, &layout).unwrap();
        for (gene, bound) in packed.genes.iter().zip(&bounds) {
            assert!(gene < bound);
        }
        assert_eq!(&unpack(&packed, &layout).unwrap(), g);
        packed_seen.insert(packed.genes.clone());
        plans.insert(decode(g, &config).unwrap());
    });
    assert_eq!(count, 64);
    assert_eq!(packed_seen.len(), 64);
    assert_eq!(plans.len(), 64);
}

#[test]
fn every_packed_vector_of_the_tiny_fixture_unpacks() {
    let config = SearchConfig::tiny();
    let layout = GenomeLayout::new(config.params());
    let bounds: Vec<u64> = layout.packed_bounds_u64().unwrap();
    let total: u64 = bounds.iter().product();
    assert_eq!(total, 64);
    let mut digits = BTreeSet::new();
    for code in 0..total {
        let mut rest = code;
        let genes = bounds
            .iter()
            .map(|&b| {
                let v = rest % b;
                rest /= b;
                BigUint::from(v)
            })
            .collect();
        let packed = PackedGenome { genes };
        let g = unpack(&packed, &layout).unwrap();
        assert_eq!(pack(&g, &layout).unwrap(), packed);
        digits.insert(g);
    }
    assert_eq!(digits.len(), 64);
}

#[test]
fn out_of_range_packed_gene_is_rejected() {
    let config = SearchConfig::reference_default();
    let layout = GenomeLayout::new(config.params());
    let mut genes: Vec<BigUint> = layout.packed_bounds();
    assert!(unpack(
        &PackedGenome {
            genes: genes.clone()
        },
        &layout
    )
    .is_err());
    genes.pop();
    assert!(unpack(&PackedGenome { genes }, &layout).is_err());
}

#[test]
fn random_genome_covers_all_tiny_plans() {
    let config = SearchConfig::tiny();
    let layout = GenomeLayout::new(config.params());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = std::collections::BTreeMap::new();
    let n = 10_000u64;
    for _ in 0..n {
        let g = random_genome_with(&mut rng, &layout);
        *counts.entry(decode(&g, &config).unwrap()).or_insert(0u64) += 1;
    }
    assert_eq!(counts.len(), 64);
    let observed: Vec<u64> = counts.values().copied().collect();
    let stat = chi_square(&observed, n as f64 / 64.0);
    assert!(stat < chi_square_critical_001(63), "chi-square {stat}");
}

#[test]
fn digit_histograms_are_uniform_within_five_sigma() {
    let config = SearchConfig::reference_default();
    let layout = GenomeLayout::new(config.params());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000u64;
    let mut hist: Vec<Vec<u64>> = layout
        .radices()
        .iter()
        .map(|&r| vec![0; r as usize])
        .collect();
    for _ in 0..n {
        let g = random_genome_with(&mut rng, &layout);
        for (h, &d) in hist.iter_mut().zip(g.digits()) {
            h[d as usize] += 1;
        }
    }
    for h in &hist {
        let p = 1.0 / h.len() as f64;
        let mean = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for &c in h {
            assert!(
                (c as f64 - mean).abs() <= 5.0 * sigma,
                "count {c} vs mean {mean}"
            );
        }
    }
}

#[test]
fn same_seed_gives_the_same_genome() {
    let params = *SearchConfig::reference_default().params();
    assert_eq!(random_genome(42, &params), random_genome(42, &params));
    assert_ne!(random_genome(42, &params), random_genome(43, &params));
}

#[test]
fn hash_matches_reference_fnv() {
    assert_eq!(
        genome_hash(&DigitGenome::from_digits_unchecked(vec![])),
        14_695_981_039_346_656_037
    );
    assert_eq!(
        genome_hash(&DigitGenome::from_digits_unchecked(vec![0])),
        fnv1a(&[0, 0, 0, 0])
    );
    let params = *SearchConfig::reference_default().params();
    for seed in 0..100 {
        let g = random_genome(seed, &params);
        let bytes: Vec<u8> = g.digits().iter().flat_map(|d| d.to_be_bytes()).collect();
        assert_eq!(genome_hash(&g), fnv1a(&bytes));
    }
}

#[test]
fn hash_buckets_are_uniform() {
    let params = *SearchConfig::reference_default().params();
    let buckets = 256usize;
    let n = 100_000u64;
    let mut counts = vec![0u64; buckets];
    for seed in 0..n {
        let h = genome_hash(&random_genome(seed, &params));
        counts[(h >> 56) as usize] += 1;
    }
    let stat = chi_square(&counts, n as f64 / buckets as f64);
    assert!(
        stat < chi_square_critical_001(buckets - 1),
        "chi-square {stat}"
    );
}

fn default_genome() -> impl Strategy<Value = DigitGenome> {
    let config = SearchConfig::reference_default();
    let layout = GenomeLayout::new(config.params());
    let digits: Vec<_> = layout.radices().iter().map(|&r| 0..r as u32).collect();
    digits.prop_map(DigitGenome::from_digits_unchecked)
}

proptest! {
    #[test]
    fn pack_unpack_is_identity(g in default_genome()) {
        let layout = GenomeLayout::new(SearchConfig::reference_default().params());
        let packed = pack(&g, &layout).unwrap();
        prop_assert_eq!(unpack(&packed, &layout).unwrap(), g.clone());
        prop_assert!(decode(&g, &SearchConfig::reference_default()).is_ok());
    }
}
