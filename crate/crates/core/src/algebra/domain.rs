//! Multiplicative domains, fixed-point algebras and modular invariance.

use super::{MatrixStarAlgebra, RANK_TOL};
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::matrix::{identity, imaginary_power, kron, matrix_unit, CMat, KernelBuilder};
use crate::state::DensityMatrix;

fn unvec(v: &crate::matrix::CVec, n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| v[i * n + j])
}

/// Constraint rows `a ↦ σ(a x) − σ(a)σ(x)` and `a ↦ σ(x a) − σ(x)σ(a)` for every matrix unit `x`.
fn push_domain_constraints(ch: &Channel, builder: &mut KernelBuilder) {
    let n = ch.in_dim();
    let m = ch.out_dim();
    let s = ch.superoperator();
    builder.set_reference(s.norm());
    for k in 0..n {
        for l in 0..n {
            let x = matrix_unit(n, k, l);
            let sx = ch.apply_unchecked(&x);
            // vec(a x) = (1 ⊗ xᵀ) vec a, vec(x a) = (x ⊗ 1) vec a
            let right = &s * kron(&identity(n), &x.transpose()) - kron(&identity(m), &sx.transpose()) * &s;
            let left = &s * kron(&x, &identity(n)) - kron(&sx, &identity(m)) * &s;
            builder.push(right);
            builder.push(left);
        }
    }
}

/// Largest subalgebra on which the unital map `ch` is multiplicative.
pub fn multiplicative_domain(ch: &Channel) -> Result<MatrixStarAlgebra> {
    ch.require_unital()?;
    let n = ch.in_dim();
    let mut builder = KernelBuilder::new(n * n);
    push_domain_constraints(ch, &mut builder);
    let kernel = builder.finish(RANK_TOL);
    let mats: Vec<CMat> = kernel.vectors().map(|v| unvec(&v, n)).collect();
    MatrixStarAlgebra::from_spanning_set(n, &mats)
}

/// Fixed points of a unital map together with the numerical gap that separated them.
#[derive(Debug, Clone)]
pub struct FixedPoints {
    pub algebra: MatrixStarAlgebra,
    /// Smallest singular value of `S − 1` classified as nonzero, relative to the largest.
    pub spectral_gap: f64,
}

fn is_automorphism(ch: &Channel) -> bool {
    ch.in_dim() == ch.out_dim() && ch.kraus().len() == 1 && {
        let v = &ch.kraus()[0];
        (v.adjoint() * v - identity(ch.in_dim())).norm() <= 1e-10
    }
}

/// Fixed-point algebra of `compose_with ∘ ch` (or of `ch` alone).
///
/// The unit eigenspace of the superoperator is intersected with the
/// multiplicative domain of `ch` unless the composed map is an automorphism.
pub fn fixed_point_algebra(ch: &Channel, compose_with: Option<&Channel>) -> Result<FixedPoints> {
    ch.require_unital()?;
    let map = match compose_with {
        Some(second) => second.compose(ch)?,
        None => ch.clone(),
    };
    if map.in_dim() != map.out_dim() {
        return Err(Error::DimensionMismatch {
            expected: map.in_dim(),
            found: map.out_dim(),
        });
    }
    map.require_unital()?;
    let n = map.in_dim();
    let mut builder = KernelBuilder::new(n * n);
    let s = map.superoperator();
    builder.set_reference(s.norm() + n as f64);
    builder.push(s - identity(n * n));
    let fixed_only = builder.clone().finish(RANK_TOL);
    if !is_automorphism(&map) {
        push_domain_constraints(ch, &mut builder);
    }
    let kernel = builder.finish(RANK_TOL);
    let mats: Vec<CMat> = kernel.vectors().map(|v| unvec(&v, n)).collect();
    Ok(FixedPoints {
        algebra: MatrixStarAlgebra::from_spanning_set(n, &mats)?,
        spectral_gap: fixed_only.smallest_kept,
    })
}

/// Largest relative residual of `D_ω^{it} b D_ω^{-it}` outside `A`, over the basis and grid.
pub fn modular_invariance_check(a: &MatrixStarAlgebra, omega: &DensityMatrix, t_grid: &[f64]) -> Result<(bool, f64)> {
    if !omega.is_faithful(crate::matrix::SUPPORT_CUTOFF) {
        return Err(Error::NotFaithful {
            what: "reference state".into(),
        });
    }
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let u = imaginary_power(omega, t)?;
        for b in a.basis() {
            let flowed = &u * b * u.adjoint();
            worst = worst.max(a.relative_residual(&flowed));
        }
    }
    Ok((worst <= 1e-8, worst))
}
