//! Strong subadditivity on `H_A ⊗ H_B ⊗ H_C` and the block form of states that saturate it.

use log::debug;
use serde::Serialize;

use crate::algebra::{structure_decomposition, BlockStructure, MatrixStarAlgebra};
use crate::divergence::{relative_entropy, von_neumann_entropy};
use crate::error::{Error, Result};
use crate::matrix::{
    identity, imaginary_power, kron, partial_trace, real, superoperator, CMat, KernelBuilder, SUPPORT_CUTOFF,
};
use crate::random::rng_from_seed;
use crate::settings::Settings;
use crate::state::{DensityMatrix, Experiment};
use crate::sufficiency::{subalgebra_sufficiency, SufficiencyVerdict};

const GAP_AGREEMENT: f64 = 1e-8;

/// A density matrix on `H_A ⊗ H_B ⊗ H_C` with its marginals.
#[derive(Debug, Clone)]
pub struct TripartiteState {
    density: DensityMatrix,
    dims: (usize, usize, usize),
    ab: DensityMatrix,
    bc: DensityMatrix,
    b: DensityMatrix,
}

impl TripartiteState {
    pub fn new(density: DensityMatrix, dims: (usize, usize, usize)) -> Result<Self> {
        let (da, db, dc) = dims;
        if da * db * dc != density.dim() || da * db * dc == 0 {
            return Err(Error::DimensionMismatch {
                expected: density.dim(),
                found: da * db * dc,
            });
        }
        let marginal =
            |keep: &[usize]| DensityMatrix::from_noisy(partial_trace(density.matrix(), &[da, db, dc], keep)?);
        let ab = marginal(&[0, 1])?;
        let bc = marginal(&[1, 2])?;
        let b = marginal(&[1])?;
        Ok(Self {
            density,
            dims,
            ab,
            bc,
            b,
        })
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn ab(&self) -> &DensityMatrix {
        &self.ab
    }

    pub fn bc(&self) -> &DensityMatrix {
        &self.bc
    }

    pub fn b(&self) -> &DensityMatrix {
        &self.b
    }

    fn marginal(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let (da, db, dc) = self.dims;
        DensityMatrix::from_noisy(partial_trace(self.density.matrix(), &[da, db, dc], keep)?)
    }

    pub fn a(&self) -> Result<DensityMatrix> {
        self.marginal(&[0])
    }

    pub fn c(&self) -> Result<DensityMatrix> {
        self.marginal(&[2])
    }

    pub fn ac(&self) -> Result<DensityMatrix> {
        self.marginal(&[0, 2])
    }

    /// The same state after a unitary change of basis on `H_B`.
    pub fn rotate_b(&self, u: &CMat) -> Result<Self> {
        let (da, db, dc) = self.dims;
        if u.nrows() != db || u.ncols() != db {
            return Err(Error::DimensionMismatch {
                expected: db,
                found: u.nrows(),
            });
        }
        let full = kron(&kron(&identity(da), u), &identity(dc));
        let d = DensityMatrix::from_noisy(&full * self.density.matrix() * full.adjoint())?;
        Self::new(d, self.dims)
    }
}

/// The saturation gap of strong subadditivity, computed twice.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SsaGap {
    /// `S(AB) + S(BC) − S(ABC) − S(B)`.
    pub entropy_form: f64,
    /// `S(ω_ABC ‖ ω_A ⊗ ω_BC) − S(ω_AB ‖ ω_A ⊗ ω_B)`.
    pub relative_entropy_form: f64,
}

impl SsaGap {
    pub fn value(&self) -> f64 {
        self.entropy_form
    }

    pub fn discrepancy(&self) -> f64 {
        (self.entropy_form - self.relative_entropy_form).abs()
    }
}

pub fn ssa_gap(st: &TripartiteState) -> Result<SsaGap> {
    let entropy_form = von_neumann_entropy(&st.ab) + von_neumann_entropy(&st.bc)
        - von_neumann_entropy(&st.density)
        - von_neumann_entropy(&st.b);
    let a = st.a()?;
    let a_bc = DensityMatrix::from_noisy(kron(a.matrix(), st.bc.matrix()))?;
    let a_b = DensityMatrix::from_noisy(kron(a.matrix(), st.b.matrix()))?;
    let relative_entropy_form = relative_entropy(&st.density, &a_bc)? - relative_entropy(&st.ab, &a_b)?;
    let gap = SsaGap {
        entropy_form,
        relative_entropy_form,
    };
    if gap.discrepancy() > GAP_AGREEMENT {
        return Err(Error::Numerical(format!(
            "entropy and relative-entropy gaps disagree: {entropy_form:.12e} vs {relative_entropy_form:.12e}"
        )));
    }
    Ok(gap)
}

/// One summand `w_n D^L_n ⊗ D^R_n` of a saturating state.
#[derive(Debug, Clone)]
pub struct SsaComponent {
    pub weight: f64,
    /// Density on `H_A ⊗ H^L_n`.
    pub left: DensityMatrix,
    /// Density on `H^R_n ⊗ H_C`.
    pub right: DensityMatrix,
}

/// `ω_ABC = Σₙ wₙ D^L_n ⊗ D^R_n` with `H_B = ⊕ₙ H^L_n ⊗ H^R_n` in the standard basis.
#[derive(Debug, Clone, Serialize)]
pub struct SsaStructure {
    /// `(dim H^L_n, dim H^R_n)`.
    pub blocks: Vec<(usize, usize)>,
    /// `ω_B(p_n)`.
    pub weights: Vec<f64>,
    #[serde(skip)]
    pub b_structure: BlockStructure,
    #[serde(skip)]
    pub left_states: Vec<DensityMatrix>,
    #[serde(skip)]
    pub right_states: Vec<DensityMatrix>,
    pub dims: (usize, usize, usize),
    pub gap: SsaGap,
    /// Dimension of the algebra `N_B` whose blocks split `H_B`.
    pub algebra_dimension: usize,
    /// `‖Σₙ wₙ D^L_n ⊗ D^R_n − ω_ABC‖_F`.
    pub reconstruction_residual: f64,
    /// Sufficiency of `B(H_A ⊗ H_B) ⊗ 1` for `{ω_ABC, ω_A ⊗ ω_BC}`; absent on the pure-state path.
    pub verdict: Option<SufficiencyVerdict>,
    /// The state is pure and the structure came from subadditivity on `AC`.
    pub pure_state: bool,
}

impl SsaStructure {
    pub fn components(&self) -> Vec<SsaComponent> {
        (0..self.blocks.len())
            .map(|n| SsaComponent {
                weight: self.weights[n],
                left: self.left_states[n].clone(),
                right: self.right_states[n].clone(),
            })
            .collect()
    }

    pub fn reconstruct(&self) -> CMat {
        assemble(self.dims, &self.b_structure, &self.components())
    }
}

/// `1_A ⊗ W_n ⊗ 1_C` for the block isometry `W_n: H^L_n ⊗ H^R_n → H_B`.
fn lifted_isometry(bs: &BlockStructure, n: usize, da: usize, dc: usize) -> CMat {
    kron(&kron(&identity(da), &bs.isometry(n)), &identity(dc))
}

fn assemble(dims: (usize, usize, usize), bs: &BlockStructure, components: &[SsaComponent]) -> CMat {
    let (da, db, dc) = dims;
    let mut out = CMat::zeros(da * db * dc, da * db * dc);
    for (n, c) in components.iter().enumerate() {
        let w = lifted_isometry(bs, n, da, dc);
        out += &w * kron(c.left.matrix(), c.right.matrix()) * w.adjoint() * real(c.weight);
    }
    out
}

/// Assembles `Σₙ wₙ D^L_n ⊗ D^R_n` with the blocks of `H_B` laid out consecutively.
pub fn build_ssa_equality_state(components: &[SsaComponent], da: usize, dc: usize) -> Result<TripartiteState> {
    if components.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let total: f64 = components.iter().map(|c| c.weight).sum();
    if components.iter().any(|c| !(c.weight > 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights(format!(
            "weights must be positive and sum to 1 (sum {total})"
        )));
    }
    let mut blocks = Vec::with_capacity(components.len());
    for c in components {
        let (l, r) = (c.left.dim(), c.right.dim());
        if l % da != 0 || r % dc != 0 {
            return Err(Error::DimensionMismatch {
                expected: da.max(dc),
                found: if l % da != 0 { l } else { r },
            });
        }
        blocks.push((l / da, r / dc));
    }
    let bs = standard_blocks(&blocks);
    let db = bs.ambient_dim();
    let d = DensityMatrix::from_noisy(assemble((da, db, dc), &bs, components))?;
    TripartiteState::new(d, (da, db, dc))
}

fn standard_blocks(blocks: &[(usize, usize)]) -> BlockStructure {
    let db: usize = blocks.iter().map(|(l, r)| l * r).sum();
    let mut offset = 0;
    let block_projections = blocks
        .iter()
        .map(|(l, r)| {
            let mut p = CMat::zeros(db, db);
            for k in offset..offset + l * r {
                p[(k, k)] = real(1.0);
            }
            offset += l * r;
            p
        })
        .collect();
    BlockStructure {
        unitary: identity(db),
        blocks: blocks.to_vec(),
        block_projections,
    }
}

/// `N_B = {b : σ_t^{ω_BC}(b ⊗ 1) = σ_t^{ω_B}(b) ⊗ 1}` for every `t` on the grid.
pub fn modular_equalizer(st: &TripartiteState, t_grid: &[f64], rank_tol: f64) -> Result<MatrixStarAlgebra> {
    let (_, db, dc) = st.dims;
    if !st.bc.is_faithful(SUPPORT_CUTOFF) {
        return Err(Error::NotFaithful { what: "ω_BC".into() });
    }
    let mut builder = KernelBuilder::new(db * db);
    for &t in t_grid {
        let u = imaginary_power(&st.bc, t)?;
        let v = imaginary_power(&st.b, t)?;
        let lifted = |x: &CMat| &u * kron(x, &identity(dc)) * u.adjoint();
        builder.set_reference(superoperator(db, db * dc, lifted).norm());
        builder.push(superoperator(db, db * dc, |x| {
            lifted(x) - kron(&(&v * x * v.adjoint()), &identity(dc))
        }));
    }
    let kernel = builder.finish(rank_tol);
    let mats: Vec<CMat> = kernel
        .vectors()
        .map(|col| CMat::from_fn(db, db, |i, j| col[i * db + j]))
        .collect();
    MatrixStarAlgebra::from_spanning_set(db, &mats)
}

/// Weights and factors of `ω` along a block structure of `H_B`. Blocks with
/// zero weight get maximally mixed placeholder factors.
fn extract(st: &TripartiteState, bs: &BlockStructure) -> Result<(Vec<f64>, Vec<DensityMatrix>, Vec<DensityMatrix>)> {
    let (da, _, dc) = st.dims;
    let mut weights = Vec::with_capacity(bs.len());
    let mut left = Vec::with_capacity(bs.len());
    let mut right = Vec::with_capacity(bs.len());
    for (n, &(dl, dr)) in bs.blocks.iter().enumerate() {
        let w = lifted_isometry(bs, n, da, dc);
        let q = w.adjoint() * st.density.matrix() * &w;
        let weight = q.trace().re;
        if weight <= SUPPORT_CUTOFF {
            weights.push(0.0);
            left.push(DensityMatrix::maximally_mixed(da * dl));
            right.push(DensityMatrix::maximally_mixed(dr * dc));
            continue;
        }
        let dims = [da, dl, dr, dc];
        weights.push(weight);
        left.push(DensityMatrix::normalized(partial_trace(&q, &dims, &[0, 1])?)?);
        right.push(DensityMatrix::normalized(partial_trace(&q, &dims, &[2, 3])?)?);
    }
    Ok((weights, left, right))
}

/// Block form of a pure state with `ω_AC = ω_A ⊗ ω_C`: `ψ = ψ_{A B^L} ⊗ ψ_{B^R C}`
/// on the support of `ω_B`, with a zero-weight block for the rest of `H_B`.
fn pure_structure(st: &TripartiteState) -> Result<BlockStructure> {
    let (da, db, dc) = st.dims;
    let psi = st.density.spectrum().eigenvectors.column(0).into_owned();
    let a = st.a()?.spectrum();
    let c = st.c()?.spectrum();
    let (ra, rc) = (a.rank(SUPPORT_CUTOFF), c.rank(SUPPORT_CUTOFF));
    let mut w = CMat::zeros(db, ra * rc);
    for i in 0..ra {
        for k in 0..rc {
            let scale = (a.eigenvalues[i] * c.eigenvalues[k]).sqrt();
            for j in 0..db {
                let mut s = real(0.0);
                for x in 0..da {
                    for z in 0..dc {
                        s += a.eigenvectors[(x, i)].conj() * c.eigenvectors[(z, k)].conj() * psi[(x * db + j) * dc + z];
                    }
                }
                w[(j, i * rc + k)] = s / real(scale);
            }
        }
    }
    let defect = (w.adjoint() * &w - identity(ra * rc)).norm();
    if defect > 1e-6 {
        return Err(Error::Numerical(format!(
            "pure-state factors are not orthonormal (defect {defect:.3e})"
        )));
    }
    // orthonormal completion of the range of w
    let svd = (identity(db) - &w * w.adjoint()).svd(true, false);
    let u_full = svd.u.expect("left vectors");
    let mut order: Vec<usize> = (0..db).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let rest = db - ra * rc;
    let mut unitary = CMat::zeros(db, db);
    unitary.columns_mut(0, ra * rc).copy_from(&w);
    for (k, &col) in order.iter().take(rest).enumerate() {
        unitary.set_column(ra * rc + k, &u_full.column(col));
    }
    let mut blocks = vec![(ra, rc)];
    if rest > 0 {
        blocks.push((1, rest));
    }
    let mut offset = 0;
    let block_projections = blocks
        .iter()
        .map(|(l, r)| {
            let cols = unitary.columns(offset, l * r).into_owned();
            offset += l * r;
            &cols * cols.adjoint()
        })
        .collect();
    Ok(BlockStructure {
        unitary,
        blocks,
        block_projections,
    })
}

fn is_pure(d: &DensityMatrix) -> bool {
    let sd = d.spectrum();
    sd.eigenvalues
        .get(1)
        .is_none_or(|l| *l <= SUPPORT_CUTOFF * sd.eigenvalues[0])
}

/// Recovers `H_B = ⊕ₙ H^L_n ⊗ H^R_n` and `ω_ABC = Σₙ ω_B(p_n) D^L_n ⊗ D^R_n`
/// for a state that saturates strong subadditivity.
pub fn ssa_equality_structure(st: &TripartiteState, settings: &Settings) -> Result<SsaStructure> {
    let gap = ssa_gap(st)?;
    if gap.value() > settings.tol.ssa_equality {
        return Err(Error::NotEqualityCase { gap: gap.value() });
    }
    let (da, db, dc) = st.dims;
    let faithful = st.density.is_faithful(SUPPORT_CUTOFF);
    let pure = !faithful && is_pure(&st.density);
    if !faithful && !pure {
        return Err(Error::NotFaithful { what: "ω_ABC".into() });
    }

    let (bs, algebra_dimension, verdict) = if pure {
        let bs = pure_structure(st)?;
        let dim = bs.blocks.iter().map(|(l, _)| l * l).sum();
        (bs, dim, None)
    } else {
        let n_b = modular_equalizer(st, &settings.t_grid, settings.tol.rank)?;
        debug!("N_B has dimension {}", n_b.dimension());
        let bs = structure_decomposition(&n_b, &mut rng_from_seed(settings.seed))?;
        let a = st.a()?;
        let reference = DensityMatrix::from_noisy(kron(a.matrix(), st.bc.matrix()))?;
        let exp = Experiment::with_reference(
            vec![
                ("omega_ABC".into(), st.density.clone()),
                ("omega_A x omega_BC".into(), reference.clone()),
            ],
            reference,
        )?;
        let verdict = subalgebra_sufficiency(&exp, &MatrixStarAlgebra::left_factor(da * db, dc), settings)?;
        (bs, n_b.dimension(), Some(verdict))
    };

    let (weights, left_states, right_states) = extract(st, &bs)?;
    let mut structure = SsaStructure {
        blocks: bs.blocks.clone(),
        weights,
        b_structure: bs,
        left_states,
        right_states,
        dims: (da, db, dc),
        gap,
        algebra_dimension,
        reconstruction_residual: 0.0,
        verdict,
        pure_state: pure,
    };
    let residual = (structure.reconstruct() - st.density.matrix()).norm();
    structure.reconstruction_residual = residual;
    if residual > settings.tol.ssa_reconstruction {
        return Err(Error::Reconstruction {
            residual,
            tolerance: settings.tol.ssa_reconstruction,
        });
    }
    Ok(structure)
}
