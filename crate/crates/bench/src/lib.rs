//! Fixtures shared by the benchmarks.

use gridgraph_core::cases;
use gridgraph_core::engine::{build_graph, PropertyGraph};
use gridgraph_core::network::scenario::{heaviest_load_bus, split_bus_with_jumper};
use gridgraph_core::network::NetworkCase;

/// The bundled IEEE cases, smallest first.
pub fn standard_cases() -> Vec<NetworkCase> {
    vec![cases::ieee14(), cases::ieee30(), cases::ieee118()]
}

/// IEEE 30 with its heaviest load bus split by a near-zero jumper.
pub fn augmented_ieee30() -> NetworkCase {
    let base = cases::ieee30();
    let bus = heaviest_load_bus(&base).expect("ieee30 has loads");
    split_bus_with_jumper(&base, bus, 1e-9)
}

/// Ring of `n` vertices where each vertex also links to the one `stride` ahead.
pub fn chorded_ring(n: usize, stride: usize) -> PropertyGraph {
    let edges = (0..n).flat_map(|v| [(v, (v + 1) % n), (v, (v + stride) % n)]);
    build_graph(n, edges).expect("endpoints are in range")
}
