//! Shared fixtures for the benchmarks.

use grac_core::adaptivity::AdaptProblem;
use grac_core::force::paper6;
use grac_core::{ACMesh, LatticeConfig, PotentialModel};

/// The experiment problem at half-width `l` with `N = 2(l + 8)`.
pub fn paper_problem(l: usize) -> AdaptProblem {
    let n = 2 * (l + 8);
    let lattice = LatticeConfig::canonical(n, 1.0).expect("valid lattice");
    let force = paper6(&lattice, l).expect("valid load");
    AdaptProblem {
        lattice,
        l,
        model: PotentialModel::eam_paper(),
        force,
    }
}

/// Initial mesh with every refinable continuum element bisected `times` times.
pub fn refined_mesh(p: &AdaptProblem, times: usize) -> ACMesh {
    let mut m = ACMesh::build_initial(p.l, p.lattice.n, p.lattice.eps).expect("valid mesh");
    for _ in 0..times {
        let marks: Vec<usize> = (0..m.k())
            .filter(|&j| !m.is_fixed(j) && m.atoms(j) >= 2 && !m.is_layer_element(j))
            .collect();
        m = grac_core::adaptivity::refine(&m, &marks)
            .expect("refinement")
            .0;
    }
    m
}
