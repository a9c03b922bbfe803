//! Fixtures shared by the benchmarks.

use qsuff_core::random::{block_family, rng_from_seed, well_conditioned_density};
use qsuff_core::ssa::{build_ssa_equality_state, SsaComponent, TripartiteState};
use qsuff_core::{DensityMatrix, Experiment, MatrixStarAlgebra};

/// Three states in block form with the blocks rotated by a Haar unitary, and the block algebra.
pub fn block_experiment(blocks: &[(usize, usize)], seed: u64) -> (Experiment, MatrixStarAlgebra) {
    let fam = block_family(blocks, 3, true, &mut rng_from_seed(seed));
    let exp = Experiment::from_states(fam.densities()).expect("valid family");
    let a = MatrixStarAlgebra::canonical(blocks).conjugated(&fam.unitary);
    (exp, a)
}

/// A saturating tripartite state with two blocks on `H_B`.
pub fn ssa_equality(da: usize, dc: usize, seed: u64) -> TripartiteState {
    let mut rng = rng_from_seed(seed);
    let components: Vec<SsaComponent> = [(2, 1), (1, 2)]
        .iter()
        .zip([0.6, 0.4])
        .map(|(&(dl, dr), weight)| SsaComponent {
            weight,
            left: DensityMatrix::new(well_conditioned_density(da * dl, 0.2, &mut rng)).expect("density"),
            right: DensityMatrix::new(well_conditioned_density(dr * dc, 0.2, &mut rng)).expect("density"),
        })
        .collect();
    build_ssa_equality_state(&components, da, dc).expect("valid components")
}
