//! Seeded random matrices, states and channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::Channel;
use crate::matrix::{c64, real, CMat, CVec};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = ginibre(n, n, rng);
    (&g + g.adjoint()) * real(0.5)
}

/// Haar unitary via QR with the phases of `R`'s diagonal removed.
pub fn unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let qr = ginibre(n, n, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { real(1.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Isometry `rows × cols` (`rows ≥ cols`) with Haar-distributed range.
pub fn isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    unitary(rows, rng).columns(0, cols).into_owned()
}

/// Unit vector, uniformly distributed on the sphere.
pub fn pure_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(n, |_, _| gaussian(rng));
    let norm = v.norm();
    v / real(norm)
}

/// Full-rank density `G G* / Tr(G G*)` from a square Ginibre matrix.
pub fn density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    density_of_rank(n, n, rng)
}

/// Density of rank `k` (almost surely).
pub fn density_of_rank<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> CMat {
    let g = ginibre(n, k, rng);
    let w = &g * g.adjoint();
    let tr = w.trace();
    w / tr
}

/// Density with eigenvalues bounded away from zero: a mixture with the
/// maximally mixed state, weight `floor` on the latter.
pub fn well_conditioned_density<R: Rng + ?Sized>(n: usize, floor: f64, rng: &mut R) -> CMat {
    density(n, rng) * real(1.0 - floor) + CMat::identity(n, n) * real(floor / n as f64)
}

/// Trace-preserving channel `B(C^{d_in}) → B(C^{d_out})` with `k` Kraus operators,
/// cut from a Haar isometry `C^{d_in} → C^{d_out} ⊗ C^k`.
pub fn cptp_channel<R: Rng + ?Sized>(d_in: usize, d_out: usize, k: usize, rng: &mut R) -> Channel {
    assert!(d_out * k >= d_in, "environment too small for an isometry");
    let w = isometry(d_out * k, d_in, rng);
    let kraus = (0..k)
        .map(|i| CMat::from_fn(d_out, d_in, |r, c| w[(r * k + i, c)]))
        .collect();
    Channel::from_kraus(kraus).expect("valid Kraus list")
}

/// Unital and trace-preserving channel: a random mixture of `k` unitaries.
pub fn unital_channel<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Channel {
    let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.1).collect();
    let total: f64 = weights.iter().sum();
    let kraus = weights
        .iter()
        .map(|w| unitary(d, rng) * real((w / total).sqrt()))
        .collect();
    Channel::from_kraus(kraus).expect("valid Kraus list")
}

/// Probability vector with entries bounded below by `floor / n`.
pub fn probability_vector<R: Rng + ?Sized>(n: usize, floor: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter()
        .map(|x| (1.0 - floor) * x / total + floor / n as f64)
        .collect()
}

/// Family `D_θ = U (⊕ₙ s_n(θ) D_n(θ) ⊗ D^R_n) U*` with known blocks `(d_n, m_n)`.
#[derive(Debug, Clone)]
pub struct BlockFamily {
    pub blocks: Vec<(usize, usize)>,
    pub unitary: CMat,
    /// `s_n(θ)`, indexed `[θ][n]`.
    pub weights: Vec<Vec<f64>>,
    pub left: Vec<Vec<CMat>>,
    pub right: Vec<CMat>,
    pub states: Vec<CMat>,
}

impl BlockFamily {
    /// The family with the reference state `Σ_θ D_θ / |Θ|` as a list of densities.
    pub fn densities(&self) -> Vec<crate::state::DensityMatrix> {
        self.states
            .iter()
            .map(|d| crate::state::DensityMatrix::new(d.clone()).expect("valid density"))
            .collect()
    }
}

/// Random [`BlockFamily`] with `count` states; `rotate` conjugates by a Haar unitary.
pub fn block_family<R: Rng + ?Sized>(
    blocks: &[(usize, usize)],
    count: usize,
    rotate: bool,
    rng: &mut R,
) -> BlockFamily {
    let n: usize = blocks.iter().map(|(d, m)| d * m).sum();
    let u = if rotate { unitary(n, rng) } else { CMat::identity(n, n) };
    let right: Vec<CMat> = blocks
        .iter()
        .map(|&(_, m)| well_conditioned_density(m, 0.3, rng))
        .collect();
    let mut weights = Vec::with_capacity(count);
    let mut left = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        let s = probability_vector(blocks.len(), 0.3, rng);
        let l: Vec<CMat> = blocks
            .iter()
            .map(|&(d, _)| well_conditioned_density(d, 0.3, rng))
            .collect();
        let mut d = CMat::zeros(n, n);
        let mut offset = 0;
        for (k, &(dl, m)) in blocks.iter().enumerate() {
            let part = crate::matrix::kron(&l[k], &right[k]) * real(s[k]);
            d.view_mut((offset, offset), (dl * m, dl * m)).copy_from(&part);
            offset += dl * m;
        }
        states.push(crate::matrix::hermitian_part(&(&u * d * u.adjoint())));
        weights.push(s);
        left.push(l);
    }
    BlockFamily {
        blocks: blocks.to_vec(),
        unitary: u,
        weights,
        left,
        right,
        states,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::identity;

    #[test]
    fn generated_objects_are_valid() {
        let mut r = rng_from_seed(1);
        let u = unitary(4, &mut r);
        assert!((u.adjoint() * &u - identity(4)).norm() < 1e-12);
        let d = density_of_rank(4, 2, &mut r);
        assert!((d.trace().re - 1.0).abs() < 1e-12);
        let ch = cptp_channel(3, 2, 3, &mut r);
        assert!(ch.is_trace_preserving());
        let ch = unital_channel(3, 2, &mut r);
        assert!(ch.is_trace_preserving() && ch.is_unital());
        let p = probability_vector(5, 0.1, &mut r);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seeds_are_reproducible() {
        let a = hermitian(3, &mut rng_from_seed(9));
        let b = hermitian(3, &mut rng_from_seed(9));
        assert_eq!(a, b);
    }
}
