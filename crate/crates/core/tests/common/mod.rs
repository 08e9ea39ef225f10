#![allow(dead_code)]

use cellspace_core::optimizer::EaParams;
use cellspace_core::SearchConfig;

/// Upper-tail chi-square critical value at p = 0.001 (Wilson–Hilferty).
pub fn chi_square_critical_001(dof: usize) -> f64 {
    let k = dof as f64;
    let z = 3.090_232_306_167_813;
    let t = 1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt();
    k * t * t * t
}

pub fn chi_square(observed: &[u64], expected: f64) -> f64 {
    observed
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum()
}

pub fn tiny_with(f: impl FnOnce(&mut EaParams)) -> SearchConfig {
    let base = SearchConfig::tiny();
    let mut ea = *base.ea();
    f(&mut ea);
    base.with_ea(ea).unwrap()
}

/// Reference FNV-1a 64, byte at a time.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
