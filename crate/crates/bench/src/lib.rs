//! Fixtures shared by the benchmarks.

use secretary_core::harness::{generate_instance, random_weight_matrix, Family, GeneratorParams};
use secretary_core::secretary::StaticInstance;
use secretary_core::{BundleValuation, Instance};

/// `n` agents with three random XOS clauses over `m` items, fixed signals.
pub fn xos_oracles(n: usize, m: usize, seed: u64) -> Vec<BundleValuation> {
    let inst = generate_instance(&GeneratorParams::new(n, m, Family::XosLinear), seed)
        .expect("valid params");
    let agents: Vec<usize> = (0..n).collect();
    inst.freeze_at(&agents, &inst.signals)
}

pub fn weights(n: usize, m: usize, seed: u64) -> StaticInstance {
    random_weight_matrix(n, m, seed).expect("valid params")
}

pub fn instance(n: usize, m: usize, family: Family, seed: u64) -> Instance {
    generate_instance(&GeneratorParams::new(n, m, family), seed).expect("valid params")
}
