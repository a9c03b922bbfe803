//! Block decomposition `A ≅ ⊕ₙ M_{d_n} ⊗ 1_{m_n}` of a unital *-algebra.

use log::debug;
use rand::Rng;

use super::{center_seeded, commutant_seeded, MatrixStarAlgebra, Span, RANK_TOL};
use crate::error::{Error, Result};
use crate::matrix::{eigh, identity, kron, partial_trace, real, CMat};

const MAX_ATTEMPTS: usize = 5;
const PATTERN_TOL: f64 = 1e-8;

/// Unitary change of basis bringing an algebra into canonical block form.
///
/// Column `offset_n + i·m_n + j` of `unitary` is the basis vector `e_i ⊗ f_j`
/// of `H^L_n ⊗ H^R_n`, so `u* a u = ⊕ₙ a_n ⊗ 1_{m_n}` for every `a ∈ A`.
#[derive(Debug, Clone)]
pub struct BlockStructure {
    pub unitary: CMat,
    /// `(d_n, m_n)`: the algebra acts as `M_{d_n}` on `H^L_n`, with multiplicity `m_n = dim H^R_n`.
    pub blocks: Vec<(usize, usize)>,
    /// Minimal central projections `p_n`.
    pub block_projections: Vec<CMat>,
}

impl BlockStructure {
    pub fn ambient_dim(&self) -> usize {
        self.unitary.nrows()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn offset(&self, n: usize) -> usize {
        self.blocks[..n].iter().map(|(d, m)| d * m).sum()
    }

    /// Columns of the unitary spanning block `n` (`ambient × d_n m_n`).
    pub fn isometry(&self, n: usize) -> CMat {
        let (d, m) = self.blocks[n];
        self.unitary.columns(self.offset(n), d * m).into_owned()
    }

    /// `U_n* x U_n`, indexed as `H^L_n ⊗ H^R_n`.
    pub fn block_of(&self, n: usize, x: &CMat) -> CMat {
        let w = self.isometry(n);
        w.adjoint() * x * w
    }

    /// `Tr_{H^R_n}` of the block of `x`.
    pub fn left_reduced(&self, n: usize, x: &CMat) -> CMat {
        let (d, m) = self.blocks[n];
        partial_trace(&self.block_of(n, x), &[d, m], &[0]).expect("block dims")
    }

    /// `Tr_{H^L_n}` of the block of `x`.
    pub fn right_reduced(&self, n: usize, x: &CMat) -> CMat {
        let (d, m) = self.blocks[n];
        partial_trace(&self.block_of(n, x), &[d, m], &[1]).expect("block dims")
    }

    /// Embeds `⊕ₙ xₙ ⊗ yₙ` given per-block left and right factors.
    pub fn assemble(&self, parts: &[(CMat, CMat)]) -> CMat {
        let n = self.ambient_dim();
        let mut out = CMat::zeros(n, n);
        for (k, (l, r)) in parts.iter().enumerate() {
            let w = self.isometry(k);
            out += &w * kron(l, r) * w.adjoint();
        }
        out
    }

    /// Trace-preserving conditional expectation onto the algebra,
    /// `x ↦ ⊕ₙ Tr_R(xₙ)/m_n ⊗ 1`.
    pub fn conditional_expectation(&self, x: &CMat) -> CMat {
        let parts: Vec<(CMat, CMat)> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(k, &(_, m))| (self.left_reduced(k, x) / real(m as f64), identity(m)))
            .collect();
        self.assemble(&parts)
    }

    /// The algebra `⊕ₙ M_{d_n} ⊗ 1_{m_n}` conjugated back to the original basis.
    pub fn algebra(&self) -> MatrixStarAlgebra {
        MatrixStarAlgebra::canonical(&self.blocks).conjugated(&self.unitary)
    }

    /// The commutant `⊕ₙ 1_{d_n} ⊗ M_{m_n}` in the original basis.
    pub fn commutant_algebra(&self) -> MatrixStarAlgebra {
        let swapped: Vec<(usize, usize)> = self.blocks.iter().map(|&(d, m)| (m, d)).collect();
        // reorder the tensor legs so the multiplicity space comes first
        let n = self.ambient_dim();
        let mut perm = CMat::zeros(n, n);
        let mut offset = 0;
        for &(d, m) in &self.blocks {
            for i in 0..d {
                for j in 0..m {
                    perm[(offset + i * m + j, offset + j * d + i)] = real(1.0);
                }
            }
            offset += d * m;
        }
        MatrixStarAlgebra::canonical(&swapped).conjugated(&(&self.unitary * perm))
    }

    /// Largest deviation of `u* b u` from the canonical block pattern over a basis.
    pub fn pattern_deviation(&self, basis: &[CMat]) -> f64 {
        let mut worst: f64 = 0.0;
        for b in basis {
            let c = self.unitary.adjoint() * b * &self.unitary;
            let rebuilt = self.unitary.adjoint() * self.conditional_expectation(b) * &self.unitary;
            worst = worst.max((c - rebuilt).norm() / b.norm().max(1e-300));
        }
        worst
    }
}

/// Splits sorted eigenvalues into clusters separated by gaps larger than `gap`.
fn cluster(values: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || (values[k - 1] - values[k]).abs() > gap {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Orthonormal eigenvector blocks of a Hermitian matrix, grouped by clustered eigenvalue.
///
/// `scale` is the magnitude the eigenvalues are judged against; pass the norm of
/// the ambient element when `h` is a compression of it.
fn eigen_clusters(h: &CMat, scale: f64) -> Vec<CMat> {
    let sd = eigh(h);
    let scale = sd.max_abs().max(scale).max(1e-300);
    cluster(&sd.eigenvalues, 1e-7 * scale)
        .into_iter()
        .map(|r| sd.eigenvectors.columns(r.start, r.len()).into_owned())
        .collect()
}

/// Unitary polar factor of a square matrix.
fn polar_unitary(t: &CMat) -> CMat {
    let svd = t.clone().svd(true, true);
    svd.u.expect("left vectors") * svd.v_t.expect("right vectors")
}

/// Computes minimal central projections and the factor alignment inside each block.
pub fn structure_decomposition<R: Rng + ?Sized>(a: &MatrixStarAlgebra, rng: &mut R) -> Result<BlockStructure> {
    let n = a.ambient_dim();
    let z = center_seeded(a, rng);
    let comm = commutant_seeded(a, rng);
    let mut last_detail = String::new();
    for attempt in 1..=MAX_ATTEMPTS {
        match attempt_decomposition(a, &z, &comm, rng) {
            Ok(bs) => {
                let dev = bs.pattern_deviation(a.basis());
                if dev <= PATTERN_TOL {
                    debug!("structure decomposition: blocks {:?} (attempt {attempt})", bs.blocks);
                    return Ok(bs);
                }
                last_detail = format!("block pattern deviation {dev:.3e}");
            }
            Err(detail) => last_detail = detail,
        }
        debug!("structure decomposition attempt {attempt} failed: {last_detail}");
    }
    Err(Error::DegenerateSpectrum {
        attempts: MAX_ATTEMPTS,
        detail: format!(
            "{last_detail} (ambient dimension {n}, algebra dimension {})",
            a.dimension()
        ),
    })
}

fn attempt_decomposition<R: Rng + ?Sized>(
    a: &MatrixStarAlgebra,
    z: &MatrixStarAlgebra,
    comm: &MatrixStarAlgebra,
    rng: &mut R,
) -> std::result::Result<BlockStructure, String> {
    let n = a.ambient_dim();
    let central = eigen_clusters(&z.random_hermitian(rng), 0.0);
    if central.len() != z.dimension() {
        return Err(format!(
            "{} eigenvalue clusters for a center of dimension {}",
            central.len(),
            z.dimension()
        ));
    }
    let mut blocks = Vec::new();
    let mut columns: Vec<CMat> = Vec::new();
    let mut projections = Vec::new();
    let h_comm = comm.random_hermitian(rng);
    let c_comm = comm.random_element(rng);
    for g in &central {
        let r = g.ncols();
        let mut span = Span::new(r, RANK_TOL);
        for b in a.basis() {
            span.add_with_scale(&(g.adjoint() * b * g), b.norm());
        }
        let d2 = span.len();
        let d = (d2 as f64).sqrt().round() as usize;
        if d * d != d2 || d == 0 || r % d != 0 {
            return Err(format!("block of rank {r} carries a {d2}-dimensional algebra"));
        }
        let m = r / d;
        // eigenspaces of a generic commutant element: m clusters of size d
        let local = eigen_clusters(&(g.adjoint() * &h_comm * g), crate::matrix::op_norm(&h_comm));
        if local.len() != m || local.iter().any(|e| e.ncols() != d) {
            return Err(format!(
                "commutant spectrum in a ({d},{m}) block split as {:?}",
                local.iter().map(|e| e.ncols()).collect::<Vec<_>>()
            ));
        }
        let c_local = g.adjoint() * &c_comm * g;
        let first = &local[0];
        let mut aligned = Vec::with_capacity(m);
        for e in &local {
            let t = e.adjoint() * &c_local * first;
            let sv = t.clone().singular_values();
            let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
            let smax = sv.iter().copied().fold(0.0, f64::max);
            if !(smin > 1e-6 * smax.max(1e-300)) || smax == 0.0 {
                return Err("commutant element does not link the multiplicity spaces".into());
            }
            aligned.push(e * polar_unitary(&t));
        }
        // column (i, j) ↦ i·m + j
        let mut block_cols = CMat::zeros(r, d * m);
        for i in 0..d {
            for (j, e) in aligned.iter().enumerate() {
                block_cols.set_column(i * m + j, &e.column(i));
            }
        }
        columns.push(g * block_cols);
        projections.push(g * g.adjoint());
        blocks.push((d, m));
    }
    let mut unitary = CMat::zeros(n, n);
    let mut offset = 0;
    for c in &columns {
        unitary.columns_mut(offset, c.ncols()).copy_from(c);
        offset += c.ncols();
    }
    if offset != n {
        return Err(format!("blocks cover {offset} of {n} dimensions"));
    }
    Ok(BlockStructure {
        unitary,
        blocks,
        block_projections: projections,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;

    fn decompose(a: &MatrixStarAlgebra) -> BlockStructure {
        structure_decomposition(a, &mut random::rng_from_seed(3)).unwrap()
    }

    #[test]
    fn full_algebra_is_one_block() {
        let bs = decompose(&MatrixStarAlgebra::full(3));
        assert_eq!(bs.blocks, vec![(3, 1)]);
    }

    #[test]
    fn diagonal_algebra_is_abelian() {
        let bs = decompose(&MatrixStarAlgebra::diagonal(4));
        assert_eq!(bs.blocks, vec![(1, 1); 4]);
    }

    #[test]
    fn hidden_tensor_factor() {
        let mut r = random::rng_from_seed(5);
        let u = random::unitary(4, &mut r);
        let a = MatrixStarAlgebra::left_factor(2, 2).conjugated(&u);
        let bs = decompose(&a);
        assert_eq!(bs.blocks, vec![(2, 2)]);
        assert!(bs.pattern_deviation(a.basis()) < 1e-10);
        assert!(bs.algebra().span_distance(&a) < 1e-8);
        assert!(bs.commutant_algebra().span_distance(&super::super::commutant(&a)) < 1e-8);
    }

    #[test]
    fn mixed_blocks_round_trip() {
        let mut r = random::rng_from_seed(6);
        let u = random::unitary(7, &mut r);
        let a = MatrixStarAlgebra::canonical(&[(2, 2), (1, 3)]).conjugated(&u);
        let bs = decompose(&a);
        let mut got = bs.blocks.clone();
        got.sort();
        assert_eq!(got, vec![(1, 3), (2, 2)]);
        assert_eq!(a.dimension(), bs.blocks.iter().map(|(d, _)| d * d).sum::<usize>());
        assert!(bs.algebra().span_distance(&a) < 1e-8);
        let ident = bs.block_projections.iter().fold(CMat::zeros(7, 7), |s, p| s + p);
        assert!((ident - identity(7)).norm() < 1e-10);
    }

    #[test]
    fn conditional_expectation_matches_projection() {
        let mut r = random::rng_from_seed(7);
        let u = random::unitary(5, &mut r);
        let a = MatrixStarAlgebra::canonical(&[(1, 2), (3, 1)]).conjugated(&u);
        let bs = decompose(&a);
        let x = random::ginibre(5, 5, &mut r);
        assert!((bs.conditional_expectation(&x) - a.project(&x)).norm() < 1e-10);
    }
}
