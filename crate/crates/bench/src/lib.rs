//! Shared fixtures for the criterion benchmarks.

use polariton_core::fock::{CavityGraph, FockBasis};
use polariton_core::lindblad::{initial_mott_state, DensityMatrix};

/// Three cavities on a ring with at most three polaritons, starting from (1,1,1).
pub fn three_cavity_ring() -> (FockBasis, CavityGraph, DensityMatrix) {
    let basis = FockBasis::new(3, 3).expect("20-state basis");
    let graph = CavityGraph::cycle(3).expect("ring");
    let rho = initial_mott_state(&basis, &[1, 1, 1]).expect("Mott state in basis");
    (basis, graph, rho)
}
