use proptest::prelude::*;
use qsuff_core::random::{self, rng_from_seed};
use qsuff_core::ssa::{build_ssa_equality_state, ssa_equality_structure, ssa_gap, SsaComponent, TripartiteState};
use qsuff_core::{DensityMatrix, Error, Settings};

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=3, 1usize..=3, 1usize..=3)
}

fn blocks() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((1usize..=2, 1usize..=2), 1..=2)
}

fn sorted(mut b: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    b.sort();
    b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gap_is_nonnegative_and_forms_agree((da, db, dc) in dims(), rank in 1usize..=27, seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let n = da * db * dc;
        let d = random::density_of_rank(n, rank.min(n), &mut rng);
        let st = TripartiteState::new(DensityMatrix::new(d).unwrap(), (da, db, dc)).unwrap();
        let gap = ssa_gap(&st).unwrap();
        prop_assert!(gap.value() >= -1e-9, "gap {}", gap.value());
        prop_assert!(gap.discrepancy() <= 1e-8, "discrepancy {}", gap.discrepancy());
    }

    #[test]
    fn equality_states_have_their_structure_recovered(
        da in 1usize..=2,
        dc in 1usize..=2,
        parts in blocks(),
        seed in any::<u64>(),
    ) {
        let mut rng = rng_from_seed(seed);
        let w = random::probability_vector(parts.len(), 0.3, &mut rng);
        let components: Vec<SsaComponent> = parts
            .iter()
            .zip(&w)
            .map(|(&(dl, dr), &weight)| SsaComponent {
                weight,
                left: DensityMatrix::new(random::well_conditioned_density(da * dl, 0.2, &mut rng)).unwrap(),
                right: DensityMatrix::new(random::well_conditioned_density(dr * dc, 0.2, &mut rng)).unwrap(),
            })
            .collect();
        let st = build_ssa_equality_state(&components, da, dc).unwrap();
        let db = st.dims().1;
        let st = st.rotate_b(&random::unitary(db, &mut rng)).unwrap();
        prop_assert!(ssa_gap(&st).unwrap().value() <= 1e-8);
        let s = ssa_equality_structure(&st, &Settings::default()).unwrap();
        prop_assert!(s.reconstruction_residual <= 1e-7, "residual {}", s.reconstruction_residual);
        // with A or C trivial every state saturates and the split of H_B is not unique
        if da > 1 && dc > 1 {
            prop_assert_eq!(sorted(s.blocks.clone()), sorted(parts.clone()));
        }
    }

    #[test]
    fn generic_states_are_not_equality_cases((da, db, dc) in (2usize..=3, 2usize..=3, 2usize..=3), seed in any::<u64>()) {
        let mut rng = rng_from_seed(seed);
        let d = random::well_conditioned_density(da * db * dc, 0.2, &mut rng);
        let st = TripartiteState::new(DensityMatrix::new(d).unwrap(), (da, db, dc)).unwrap();
        let gap = ssa_gap(&st).unwrap().value();
        match ssa_equality_structure(&st, &Settings::default()) {
            Err(Error::NotEqualityCase { .. }) => prop_assert!(gap > 1e-7),
            other => prop_assert!(false, "gap {gap}, got {other:?}"),
        }
    }
}
