//! Fixed workloads for the benchmarks.

use kdst_core::harness::{desk_suite_instance, generate, GeneratorSpec};
use kdst_core::KdstInstance;

/// Layered instances of growing size, all with `k = 2`.
pub fn layered_ladder() -> Vec<(String, KdstInstance)> {
    [(8, 2, 2), (10, 3, 2), (12, 3, 4), (14, 3, 4)]
        .into_iter()
        .map(|(n, layers, terminals)| {
            let spec = GeneratorSpec::LayeredDag {
                n,
                layers,
                edge_prob: 0.35,
                cost_min: 1.0,
                cost_max: 10.0,
                integer_costs: true,
                k: 2,
                terminals,
            };
            let inst = generate(&spec, 1).and_then(|g| g.rooted()).expect("valid spec");
            (format!("n{}_D{}_h{}", n, layers, terminals), inst)
        })
        .collect()
}

/// The first `count` desk-suite instances.
pub fn desk(count: usize) -> Vec<KdstInstance> {
    (0..count).map(desk_suite_instance).collect()
}
