//! Finite-dimensional matrix *-algebras in span representation.

mod domain;
mod structure;

pub use domain::{fixed_point_algebra, modular_invariance_check, multiplicative_domain, FixedPoints};
pub use structure::{structure_decomposition, BlockStructure};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::{c64, identity, kron, matrix_unit, real, CMat, CVec, KernelBuilder};

/// Relative tolerance for span-membership decisions.
pub const RANK_TOL: f64 = 1e-9;

/// Relative rounding noise assumed for matrices handed to a [`Span`].
const BASE_NOISE: f64 = 16.0 * f64::EPSILON;

/// A residual must exceed its propagated noise by this factor to count as new.
const NOISE_MARGIN: f64 = 100.0;

/// Incrementally built orthonormal basis of a subspace of `B(C^n)`,
/// stored as vectorized columns.
///
/// Each column carries an estimate of its own rounding noise. A direction that
/// entered with a small residual is normalized up, and so is its noise; later
/// rank decisions are made against that propagated noise, so an amplified error
/// is not mistaken for a new direction.
#[derive(Debug, Clone)]
pub(crate) struct Span {
    n: usize,
    cols: Vec<CVec>,
    noise: Vec<f64>,
    tol: f64,
}

impl Span {
    pub(crate) fn new(n: usize, tol: f64) -> Self {
        Self {
            n,
            cols: Vec::new(),
            noise: Vec::new(),
            tol,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.cols.len()
    }

    /// Orthogonal residual of `v` and the noise it inherits from the basis.
    fn orthogonal_part(&self, v: &CVec) -> (CVec, f64) {
        let mut r = v.clone();
        let mut inherited = 0.0;
        // two passes of modified Gram–Schmidt keep the basis orthonormal to rounding
        for _ in 0..2 {
            for (q, eta) in self.cols.iter().zip(&self.noise) {
                let c = q.dotc(&r);
                inherited += eta * c.norm();
                r.axpy(-c, q, real(1.0));
            }
        }
        (r, inherited)
    }

    /// Adds `x` if it is not already in the span; returns whether it was added.
    pub(crate) fn add(&mut self, x: &CMat) -> bool {
        self.add_with_scale(x, 0.0)
    }

    /// Like [`Span::add`], but the rank decision is relative to `max(‖x‖, scale)`,
    /// so rounding noise in a small part of a larger matrix is not taken as new.
    pub(crate) fn add_with_scale(&mut self, x: &CMat, scale: f64) -> bool {
        self.add_with_noise(x, scale, BASE_NOISE)
    }

    /// Like [`Span::add_with_scale`] for an `x` known only to relative accuracy
    /// `eta` of `max(‖x‖, scale)`.
    pub(crate) fn add_with_noise(&mut self, x: &CMat, scale: f64, eta: f64) -> bool {
        if self.cols.len() == self.n * self.n {
            return false;
        }
        let v = CVec::from_iterator(self.n * self.n, x.transpose().iter().copied());
        let norm = v.norm();
        if norm == 0.0 {
            return false;
        }
        let s = norm.max(scale);
        let (r, inherited) = self.orthogonal_part(&v);
        let rn = r.norm();
        let noise = eta.max(BASE_NOISE) * s + inherited;
        if rn > self.tol * s && rn > NOISE_MARGIN * noise {
            self.cols.push(r / real(rn));
            self.noise.push(noise / rn);
            true
        } else {
            false
        }
    }

    pub(crate) fn noises(&self) -> &[f64] {
        &self.noise
    }

    /// Noise estimate of the most recently added column.
    pub(crate) fn last_noise(&self) -> f64 {
        *self.noise.last().expect("nonempty span")
    }

    pub(crate) fn matrices(&self) -> Vec<CMat> {
        self.cols.iter().map(|v| unvec(v, self.n)).collect()
    }

    pub(crate) fn last_matrix(&self) -> CMat {
        unvec(self.cols.last().expect("nonempty span"), self.n)
    }
}

fn vec_of(x: &CMat) -> CVec {
    let n = x.nrows();
    CVec::from_iterator(n * n, x.transpose().iter().copied())
}

fn unvec(v: &CVec, n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| v[i * n + j])
}

/// Unital *-subalgebra of `B(C^n)` given by a Hilbert–Schmidt orthonormal basis.
#[derive(Debug, Clone)]
pub struct MatrixStarAlgebra {
    ambient_dim: usize,
    basis: Vec<CMat>,
    /// `n² × dim` matrix with the vectorized basis as columns.
    frame: CMat,
}

impl MatrixStarAlgebra {
    fn from_span(span: Span) -> Self {
        let n = span.n;
        let k = span.len();
        let mut frame = CMat::zeros(n * n, k);
        for (j, c) in span.cols.iter().enumerate() {
            frame.set_column(j, c);
        }
        Self {
            ambient_dim: n,
            basis: span.matrices(),
            frame,
        }
    }

    /// Span of `mats`, orthonormalized; closure is not checked.
    pub fn span_of<'a, I>(n: usize, mats: I) -> Self
    where
        I: IntoIterator<Item = &'a CMat>,
    {
        let mut span = Span::new(n, RANK_TOL);
        for m in mats {
            span.add(m);
        }
        Self::from_span(span)
    }

    /// Span of `mats` after checking that it is a unital *-algebra.
    pub fn from_spanning_set<'a, I>(n: usize, mats: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a CMat>,
    {
        let alg = Self::span_of(n, mats);
        alg.validate(1e-9)?;
        Ok(alg)
    }

    /// `B(C^n)`.
    pub fn full(n: usize) -> Self {
        let units: Vec<CMat> = (0..n * n).map(|k| matrix_unit(n, k / n, k % n)).collect();
        Self::span_of(n, &units)
    }

    /// `ℂ·1`.
    pub fn scalars(n: usize) -> Self {
        Self::span_of(n, [&identity(n)])
    }

    /// Diagonal matrices.
    pub fn diagonal(n: usize) -> Self {
        let units: Vec<CMat> = (0..n).map(|k| matrix_unit(n, k, k)).collect();
        Self::span_of(n, &units)
    }

    /// `⊕ M_{d_k}` on consecutive diagonal blocks.
    pub fn block_diagonal(sizes: &[usize]) -> Self {
        Self::canonical(&sizes.iter().map(|&d| (d, 1)).collect::<Vec<_>>())
    }

    /// `⊕ M_{d_k} ⊗ 1_{m_k}` in the standard basis; index `i·m + j` within a block.
    pub fn canonical(blocks: &[(usize, usize)]) -> Self {
        let n: usize = blocks.iter().map(|(d, m)| d * m).sum();
        let mut mats = Vec::new();
        let mut offset = 0;
        for &(d, m) in blocks {
            for i in 0..d {
                for j in 0..d {
                    let mut e = CMat::zeros(n, n);
                    let local = kron(&matrix_unit(d, i, j), &identity(m));
                    e.view_mut((offset, offset), (d * m, d * m)).copy_from(&local);
                    mats.push(e);
                }
            }
            offset += d * m;
        }
        Self::span_of(n, &mats)
    }

    /// `B(C^{d_l}) ⊗ 1_{d_r}`.
    pub fn left_factor(dl: usize, dr: usize) -> Self {
        Self::canonical(&[(dl, dr)])
    }

    /// `1_{d_l} ⊗ B(C^{d_r})`.
    pub fn right_factor(dl: usize, dr: usize) -> Self {
        let mats: Vec<CMat> = (0..dr * dr)
            .map(|k| kron(&identity(dl), &matrix_unit(dr, k / dr, k % dr)))
            .collect();
        Self::span_of(dl * dr, &mats)
    }

    /// `u A u*`.
    pub fn conjugated(&self, u: &CMat) -> Self {
        let mats: Vec<CMat> = self.basis.iter().map(|b| u * b * u.adjoint()).collect();
        Self::span_of(self.ambient_dim, &mats)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    /// Hilbert–Schmidt orthogonal projection onto the algebra.
    pub fn project(&self, x: &CMat) -> CMat {
        let v = vec_of(x);
        let coeffs = self.frame.adjoint() * &v;
        unvec(&(&self.frame * coeffs), self.ambient_dim)
    }

    /// `‖x − P x‖_F`.
    pub fn residual(&self, x: &CMat) -> f64 {
        let v = vec_of(x);
        let coeffs = self.frame.adjoint() * &v;
        (v - &self.frame * coeffs).norm()
    }

    /// `‖x − P x‖_F / max(‖x‖_F, 1e-300)`.
    pub fn relative_residual(&self, x: &CMat) -> f64 {
        self.residual(x) / x.norm().max(1e-300)
    }

    pub fn contains(&self, x: &CMat, tol: f64) -> bool {
        self.relative_residual(x) <= tol
    }

    /// Largest residual of `other`'s basis elements in this algebra.
    pub fn containment_residual(&self, other: &MatrixStarAlgebra) -> f64 {
        other.basis.iter().map(|b| self.residual(b)).fold(0.0, f64::max)
    }

    /// Symmetric span distance; zero when the two spans coincide.
    pub fn span_distance(&self, other: &MatrixStarAlgebra) -> f64 {
        if self.dimension() != other.dimension() {
            return f64::INFINITY;
        }
        self.containment_residual(other).max(other.containment_residual(self))
    }

    /// Largest residual of adjoints and pairwise products, plus the identity residual.
    pub fn closure_defect(&self) -> f64 {
        let mut worst = self.residual(&identity(self.ambient_dim));
        for (i, a) in self.basis.iter().enumerate() {
            worst = worst.max(self.residual(&a.adjoint()));
            for b in &self.basis[i..] {
                worst = worst.max(self.residual(&(a * b)));
                worst = worst.max(self.residual(&(b * a)));
            }
        }
        worst
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        let defect = self.closure_defect();
        if defect > tol {
            return Err(Error::Precondition(format!(
                "span is not a unital *-algebra (closure defect {defect:.3e})"
            )));
        }
        Ok(())
    }

    pub fn is_commutative(&self, tol: f64) -> bool {
        self.basis
            .iter()
            .enumerate()
            .all(|(i, a)| self.basis[i + 1..].iter().all(|b| (a * b - b * a).norm() <= tol))
    }

    /// Orthonormal basis of Hermitian elements spanning the same space.
    ///
    /// The real and imaginary parts of the basis span a real space of dimension
    /// `dimension()`; the leading eigenvectors of their Gram matrix pick it out.
    /// Choosing by count rather than by threshold keeps rounding noise in the
    /// parts out of the basis.
    pub fn hermitian_basis(&self) -> Vec<CMat> {
        let k = self.dimension();
        let mut parts = Vec::with_capacity(2 * k);
        for b in &self.basis {
            parts.push((b + b.adjoint()) * real(0.5));
            parts.push((b - b.adjoint()) * c64(0.0, -0.5));
        }
        let gram = nalgebra::DMatrix::<f64>::from_fn(parts.len(), parts.len(), |i, j| {
            crate::matrix::hs_inner(&parts[i], &parts[j]).re
        });
        let eig = gram.symmetric_eigen();
        let mut order: Vec<usize> = (0..parts.len()).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        order
            .into_iter()
            .take(k)
            .map(|c| {
                let scale = eig.eigenvalues[c].max(1e-300).sqrt();
                let mut h = CMat::zeros(self.ambient_dim, self.ambient_dim);
                for (p, w) in parts.iter().zip(eig.eigenvectors.column(c).iter()) {
                    h += p * real(w / scale);
                }
                (&h + h.adjoint()) * real(0.5)
            })
            .collect()
    }

    /// Gaussian real combination of a Hermitian basis.
    pub fn random_hermitian<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat {
        let n = self.ambient_dim;
        let mut out = CMat::zeros(n, n);
        for h in self.hermitian_basis() {
            let c: f64 = rng.sample(StandardNormal);
            out += h * real(c);
        }
        out
    }

    /// Gaussian complex combination of the basis.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat {
        let n = self.ambient_dim;
        let mut out = CMat::zeros(n, n);
        for b in &self.basis {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            out += b * c64(re, im);
        }
        out
    }
}

/// Relative residual above which a generator direction counts as well determined.
const STRONG_TOL: f64 = 1e-6;

/// Splits Hermitian generator candidates into an orthonormal set of well
/// determined directions, chosen largest residual first, and the leftovers
/// whose residual against those directions is small but not negligible.
fn pivoted_generators(n: usize, candidates: Vec<(CMat, f64)>) -> (Vec<(CMat, f64)>, Vec<(CMat, f64)>) {
    let mut residuals: Vec<CVec> = candidates.iter().map(|(c, _)| vec_of(c)).collect();
    let mut remaining: Vec<usize> = (0..candidates.len()).collect();
    let mut span = Span::new(n, RANK_TOL);
    let mut strong = Vec::new();
    while span.len() < n * n {
        let best = remaining
            .iter()
            .enumerate()
            .map(|(pos, &i)| (pos, residuals[i].norm() / candidates[i].1))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((pos, ratio)) = best else { break };
        if ratio <= STRONG_TOL {
            break;
        }
        let i = remaining.swap_remove(pos);
        let (c, scale) = &candidates[i];
        if !span.add_with_scale(c, *scale) {
            continue;
        }
        let q = vec_of(&span.last_matrix());
        strong.push((span.last_matrix(), span.last_noise()));
        for &j in &remaining {
            let coeff = q.dotc(&residuals[j]);
            residuals[j].axpy(-coeff, &q, real(1.0));
        }
    }
    let weak = remaining
        .into_iter()
        .filter(|&i| residuals[i].norm() > RANK_TOL * candidates[i].1)
        .map(|i| candidates[i].clone())
        .collect();
    (strong, weak)
}

/// Appends products `f g` of frontier elements with generators until the span stops growing.
fn close_under_products(span: &mut Span, mut frontier: Vec<(CMat, f64)>, gens: &[(CMat, f64)]) {
    let full = span.n * span.n;
    while !frontier.is_empty() && span.len() < full {
        let mut next = Vec::new();
        'outer: for (f, ef) in &frontier {
            for (g, eg) in gens {
                if span.add_with_noise(&(f * g), f.norm() * g.norm(), ef + eg) {
                    next.push((span.last_matrix(), span.last_noise()));
                    if span.len() == full {
                        break 'outer;
                    }
                }
            }
        }
        frontier = next;
    }
}

/// Smallest unital *-algebra containing `generators`.
///
/// Seeds the span with `1` and the Hermitian and skew parts of the generators,
/// then appends products of newly found elements with the generators until
/// nothing new appears.
pub fn generate_algebra(generators: &[CMat], ambient_dim: usize) -> Result<MatrixStarAlgebra> {
    let n = ambient_dim;
    if let Some(g) = generators.iter().find(|g| g.shape() != (n, n)) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g.nrows(),
        });
    }
    let full = n * n;
    let mut candidates = Vec::with_capacity(2 * generators.len());
    for g in generators {
        let scale = g.norm();
        for part in [(g + g.adjoint()) * real(0.5), (g - g.adjoint()) * c64(0.0, -0.5)] {
            if part.norm() > RANK_TOL * scale {
                candidates.push((part, scale));
            }
        }
    }
    let (strong, weak) = pivoted_generators(n, candidates);

    let mut span = Span::new(n, RANK_TOL);
    span.add(&identity(n));
    let mut gens = Vec::new();
    for (g, eta) in &strong {
        if span.add_with_noise(g, 0.0, *eta) {
            gens.push((span.last_matrix(), span.last_noise()));
        }
    }
    let frontier = span.matrices().into_iter().zip(span.noises().iter().copied()).collect();
    close_under_products(&mut span, frontier, &gens);

    // weakly represented generators go in last: by now the products of the
    // strong ones usually cover them, and a noisy direction is never normalized up
    let before = span.len();
    for (g, scale) in &weak {
        if span.add_with_scale(g, *scale) {
            gens.push((span.last_matrix(), span.last_noise()));
        }
    }
    if span.len() > before {
        let frontier = span.matrices().into_iter().zip(span.noises().iter().copied()).collect();
        close_under_products(&mut span, frontier, &gens);
    }
    if span.len() == full {
        return Ok(MatrixStarAlgebra::full(n));
    }
    Ok(MatrixStarAlgebra::from_span(span))
}

/// `x ↦ [x, b]` as an `n² × n²` matrix in row-major vectorization.
fn commutator_matrix(b: &CMat) -> CMat {
    let n = b.nrows();
    kron(&identity(n), &b.transpose()) - kron(b, &identity(n))
}

/// Commutant `{x : [x, b] = 0 for all b ∈ A}`.
///
/// The kernel is computed against a few generic elements of `A`, then checked
/// against every basis element; stragglers are added as explicit constraints.
pub fn commutant(a: &MatrixStarAlgebra) -> MatrixStarAlgebra {
    commutant_seeded(a, &mut crate::random::rng_from_seed(crate::settings::DEFAULT_SEED))
}

pub fn commutant_seeded<R: Rng + ?Sized>(a: &MatrixStarAlgebra, rng: &mut R) -> MatrixStarAlgebra {
    let n = a.ambient_dim;
    let mut constraints: Vec<CMat> = (0..2).map(|_| a.random_hermitian(rng)).collect();
    loop {
        let mut builder = KernelBuilder::new(n * n);
        for c in &constraints {
            builder.set_reference(c.norm());
            builder.push(commutator_matrix(c));
        }
        let kernel = builder.finish(RANK_TOL);
        let mats: Vec<CMat> = kernel.vectors().map(|v| unvec(&v, n)).collect();
        let cand = MatrixStarAlgebra::span_of(n, &mats);
        let offender = a.basis.iter().find(|b| {
            cand.basis
                .iter()
                .any(|x| (x * *b - *b * x).norm() > 1e-8 * b.norm().max(1.0))
        });
        match offender {
            None => return cand,
            Some(b) => {
                if constraints.len() > a.dimension() + 2 {
                    // every basis element is already a constraint; accept
                    return cand;
                }
                constraints.push((*b).clone());
            }
        }
    }
}

/// `A ∩ A'`.
pub fn center(a: &MatrixStarAlgebra) -> MatrixStarAlgebra {
    center_seeded(a, &mut crate::random::rng_from_seed(crate::settings::DEFAULT_SEED))
}

pub fn center_seeded<R: Rng + ?Sized>(a: &MatrixStarAlgebra, rng: &mut R) -> MatrixStarAlgebra {
    let n = a.ambient_dim;
    let k = a.dimension();
    let mut probes: Vec<CMat> = (0..2).map(|_| a.random_hermitian(rng)).collect();
    loop {
        // unknown coefficients c with Σ c_k [b_k, h] = 0 for every probe h
        let mut builder = KernelBuilder::new(k);
        for h in &probes {
            builder.set_reference(h.norm());
            let mut block = CMat::zeros(n * n, k);
            for (j, b) in a.basis.iter().enumerate() {
                block.set_column(j, &vec_of(&(b * h - h * b)));
            }
            builder.push(block);
        }
        let kernel = builder.finish(RANK_TOL);
        let mats: Vec<CMat> = kernel
            .vectors()
            .map(|c| {
                let mut x = CMat::zeros(n, n);
                for (j, b) in a.basis.iter().enumerate() {
                    x += b * c[j];
                }
                x
            })
            .collect();
        let cand = MatrixStarAlgebra::span_of(n, &mats);
        let offender = a.basis.iter().find(|b| {
            cand.basis
                .iter()
                .any(|x| (x * *b - *b * x).norm() > 1e-8 * b.norm().max(1.0))
        });
        match offender {
            Some(b) if probes.len() <= k + 2 => probes.push(b.clone()),
            _ => return cand,
        }
    }
}

/// `A ∩ B` as a span; both arguments must share the ambient dimension.
pub fn intersection(a: &MatrixStarAlgebra, b: &MatrixStarAlgebra) -> MatrixStarAlgebra {
    let n = a.ambient_dim;
    // coefficients c with (1 − P_B) Σ c_k a_k = 0
    let k = a.dimension();
    let mut block = CMat::zeros(n * n, k);
    for (j, x) in a.basis.iter().enumerate() {
        let v = vec_of(x);
        let coeffs = b.frame.adjoint() * &v;
        block.set_column(j, &(v - &b.frame * coeffs));
    }
    let mut builder = KernelBuilder::new(k);
    builder.set_reference(1.0);
    builder.push(block);
    let kernel = builder.finish(RANK_TOL);
    let mats: Vec<CMat> = kernel
        .vectors()
        .map(|c| {
            let mut x = CMat::zeros(n, n);
            for (j, y) in a.basis.iter().enumerate() {
                x += y * c[j];
            }
            x
        })
        .collect();
    MatrixStarAlgebra::span_of(n, &mats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::diag;
    use crate::random;

    #[test]
    fn generate_examples() {
        assert_eq!(generate_algebra(&[], 3).unwrap().dimension(), 1);
        let a = generate_algebra(&[diag(&[1.0, 2.0, 3.0])], 3).unwrap();
        assert_eq!(a.dimension(), 3);
        assert!(a.span_distance(&MatrixStarAlgebra::diagonal(3)) < 1e-9);
        let mut r = random::rng_from_seed(11);
        let g = [random::hermitian(3, &mut r), random::hermitian(3, &mut r)];
        assert_eq!(generate_algebra(&g, 3).unwrap().dimension(), 9);
    }

    #[test]
    fn generated_algebra_is_closed() {
        let mut r = random::rng_from_seed(12);
        // M_2 ⊗ 1_2 from two random elements of the left factor
        let g: Vec<CMat> = (0..2)
            .map(|_| kron(&random::hermitian(2, &mut r), &identity(2)))
            .collect();
        let a = generate_algebra(&g, 4).unwrap();
        assert_eq!(a.dimension(), 4);
        assert!(a.closure_defect() < 1e-10);
        // idempotent
        let again = generate_algebra(a.basis(), 4).unwrap();
        assert!(again.span_distance(&a) < 1e-10);
    }

    #[test]
    fn commutant_examples() {
        assert_eq!(commutant(&MatrixStarAlgebra::full(3)).dimension(), 1);
        assert_eq!(commutant(&MatrixStarAlgebra::scalars(3)).dimension(), 9);
        let a = MatrixStarAlgebra::left_factor(2, 3);
        let c = commutant(&a);
        assert_eq!(c.dimension(), 9);
        assert!(c.span_distance(&MatrixStarAlgebra::right_factor(2, 3)) < 1e-9);
        let cc = commutant(&c);
        assert!(cc.span_distance(&a) < 1e-9);
    }

    #[test]
    fn center_examples() {
        assert_eq!(center(&MatrixStarAlgebra::full(3)).dimension(), 1);
        let d = MatrixStarAlgebra::diagonal(4);
        assert!(center(&d).span_distance(&d) < 1e-9);
        let z = center(&MatrixStarAlgebra::block_diagonal(&[2, 3]));
        assert_eq!(z.dimension(), 2);
        let p1 = diag(&[1.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(z.residual(&p1) < 1e-10);
        assert!(z.is_commutative(1e-10));
    }

    #[test]
    fn hermitian_basis_is_orthonormal_and_hermitian() {
        let a = MatrixStarAlgebra::canonical(&[(2, 1), (1, 2)]);
        let h = a.hermitian_basis();
        assert_eq!(h.len(), a.dimension());
        for (i, x) in h.iter().enumerate() {
            assert!((x - x.adjoint()).norm() < 1e-12);
            for (j, y) in h.iter().enumerate() {
                let ip = crate::matrix::hs_inner(x, y);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - real(expect)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn intersection_of_diagonal_and_block() {
        let a = MatrixStarAlgebra::block_diagonal(&[2, 1]);
        let d = MatrixStarAlgebra::diagonal(3);
        let i = intersection(&a, &d);
        assert_eq!(i.dimension(), 3);
        let c = intersection(&a, &MatrixStarAlgebra::left_factor(1, 3));
        assert_eq!(c.dimension(), 1);
    }
}
