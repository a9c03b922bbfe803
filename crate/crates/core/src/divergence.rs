//! Transition probability, entropies, Connes cocycles and the relative modular operator.

use serde::Serialize;

use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::matrix::{
    eigh, identity, imaginary_power, kron, log_on_support, op_norm, pinv_on_support, power_on_support, sqrt_psd,
    support_projection, trace_product, vectorize, AsMatrix, CMat, SUPPORT_CUTOFF,
};
use crate::state::{support_excess, DensityMatrix};

const DOMINATION_TOL: f64 = 1e-9;

/// `P_A(D₁, D₂) = Tr D₁^{1/2} D₂^{1/2}`.
pub fn transition_probability(d1: &DensityMatrix, d2: &DensityMatrix) -> Result<f64> {
    same_dims(d1, d2)?;
    let s1 = sqrt_psd(d1)?;
    let s2 = sqrt_psd(d2)?;
    Ok(trace_product(&s1, &s2).re)
}

/// `Tr D₁(log D₁ − log D₂)`; `+∞` when `supp D₁ ≰ supp D₂`.
pub fn relative_entropy(d1: &DensityMatrix, d2: &DensityMatrix) -> Result<f64> {
    same_dims(d1, d2)?;
    if support_excess(d1.matrix(), d2.matrix(), SUPPORT_CUTOFF) > DOMINATION_TOL {
        return Ok(f64::INFINITY);
    }
    let neg_entropy: f64 = d1
        .spectrum()
        .eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum();
    let cross = trace_product(d1.matrix(), &log_on_support(d2, SUPPORT_CUTOFF)?).re;
    Ok((neg_entropy - cross).max(0.0))
}

/// `−Tr D log D`.
pub fn von_neumann_entropy(d: &DensityMatrix) -> f64 {
    entropy_of_matrix(d.matrix())
}

pub(crate) fn entropy_of_matrix(m: &CMat) -> f64 {
    -eigh(m)
        .eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l * l.ln())
        .sum::<f64>()
}

fn same_dims(d1: &DensityMatrix, d2: &DensityMatrix) -> Result<()> {
    if d1.dim() != d2.dim() {
        return Err(Error::DimensionMismatch {
            expected: d1.dim(),
            found: d2.dim(),
        });
    }
    Ok(())
}

/// One sample `u_t = D_φ^{it} D_ω^{-it}` of the Connes cocycle.
#[derive(Debug, Clone)]
pub struct CocycleSample {
    pub t: f64,
    pub u: CMat,
}

pub fn connes_cocycle(d_phi: &DensityMatrix, d_omega: &DensityMatrix, t: f64) -> Result<CocycleSample> {
    same_dims(d_phi, d_omega)?;
    let excess = support_excess(d_phi.matrix(), d_omega.matrix(), SUPPORT_CUTOFF);
    if excess > DOMINATION_TOL {
        return Err(Error::SupportViolation {
            what: "cocycle numerator".into(),
            excess,
        });
    }
    let u = imaginary_power(d_phi, t)? * imaginary_power(d_omega, -t)?;
    Ok(CocycleSample { t, u })
}

/// `σ_t^ω(x) = D_ω^{it} x D_ω^{-it}`.
pub fn modular_flow(d_omega: &DensityMatrix, x: &CMat, t: f64) -> Result<CMat> {
    if !d_omega.is_faithful(SUPPORT_CUTOFF) {
        return Err(Error::NotFaithful {
            what: "modular reference state".into(),
        });
    }
    if x.shape() != (d_omega.dim(), d_omega.dim()) {
        return Err(Error::DimensionMismatch {
            expected: d_omega.dim(),
            found: x.nrows(),
        });
    }
    let u = imaginary_power(d_omega, t)?;
    Ok(&u * x * u.adjoint())
}

/// Explicit relative modular operators and the contraction intertwining them.
#[derive(Debug, Clone, Serialize)]
pub struct ModularAudit {
    /// `Δ a = D₂ a D₁^{-1}` on `B(C^d)`.
    #[serde(skip)]
    pub delta: CMat,
    /// `Δ₀ y = T(D₂) y T(D₁)^{-1}` on `B(C^{d₀})`.
    #[serde(skip)]
    pub delta0: CMat,
    /// `V(y) = T*(y T(D₁)^{-1/2}) D₁^{1/2}`.
    #[serde(skip)]
    pub v: CMat,
    pub v_norm: f64,
    pub intertwining: f64,
    /// Largest eigenvalue of `V*ΔV − Δ₀`.
    pub order_excess: f64,
    /// Largest `rhs − lhs` of the resolvent inequality over the grid.
    pub resolvent_excess: f64,
    pub max_violation: f64,
}

const AUDIT_DIM_LIMIT: usize = 16;

/// Builds `Δ`, `Δ₀` and `V` for a trace-preserving `T` and checks
/// `‖V‖ ≤ 1`, `V T(D₁)^{1/2} = D₁^{1/2}`, `V*ΔV ≤ Δ₀` and the resolvent inequality
/// `⟨D₁^{1/2}, (Δ+t)^{-1} D₁^{1/2}⟩ ≥ ⟨T(D₁)^{1/2}, (Δ₀+t)^{-1} T(D₁)^{1/2}⟩`.
pub fn relative_modular_audit(
    t_map: &Channel,
    d1: &DensityMatrix,
    d2: &DensityMatrix,
    t_grid: &[f64],
) -> Result<ModularAudit> {
    t_map.require_trace_preserving()?;
    same_dims(d1, d2)?;
    let d = t_map.in_dim();
    let d0 = t_map.out_dim();
    if d1.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: d1.dim(),
        });
    }
    if d.max(d0) > AUDIT_DIM_LIMIT {
        return Err(Error::TooLarge {
            dim: d.max(d0),
            limit: AUDIT_DIM_LIMIT,
        });
    }
    let td1 = t_map.apply(d1.matrix())?;
    let td2 = t_map.apply(d2.matrix())?;

    let delta = kron(d2.matrix(), &pinv_on_support(d1)?.transpose());
    let delta0 = kron(&td2, &pinv_on_support(&td1)?.transpose());

    let m = power_on_support(&td1, -0.5, SUPPORT_CUTOFF)?;
    let nsqrt = sqrt_psd(d1)?;
    let dual = t_map.schrodinger_dual().superoperator();
    let v = kron(&identity(d), &nsqrt.transpose()) * dual * kron(&identity(d0), &m.transpose());

    let v_norm = op_norm(&v);
    let sqrt_d1 = vectorize(&nsqrt);
    let sqrt_td1 = vectorize(&sqrt_psd(&td1)?);
    let intertwining = (&v * &sqrt_td1 - &sqrt_d1).norm();

    let gap = v.adjoint() * &delta * &v - &delta0;
    let order_excess = eigh(&gap).eigenvalues.first().copied().unwrap_or(0.0);

    let mut resolvent_excess = f64::NEG_INFINITY;
    for &t in t_grid.iter().filter(|t| **t > 0.0) {
        let lhs = resolvent_form(&delta, &sqrt_d1, t)?;
        let rhs = resolvent_form(&delta0, &sqrt_td1, t)?;
        resolvent_excess = resolvent_excess.max(rhs - lhs);
    }
    let max_violation = (v_norm - 1.0)
        .max(intertwining)
        .max(order_excess)
        .max(resolvent_excess)
        .max(0.0);
    Ok(ModularAudit {
        delta,
        delta0,
        v,
        v_norm,
        intertwining,
        order_excess,
        resolvent_excess,
        max_violation,
    })
}

/// `⟨ξ, (Δ + t)^{-1} ξ⟩`.
fn resolvent_form(delta: &CMat, xi: &crate::matrix::CVec, t: f64) -> Result<f64> {
    let n = delta.nrows();
    let shifted = delta + identity(n) * crate::matrix::real(t);
    let sol = shifted
        .lu()
        .solve(xi)
        .ok_or_else(|| Error::Numerical("singular resolvent".into()))?;
    Ok(xi.dotc(&sol).re)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divergence {
    Transition,
    RelativeEntropy,
}

/// Nonnegative for every trace-preserving `T`: `P_A(TD₁,TD₂) − P_A(D₁,D₂)` or
/// `S(D₁‖D₂) − S(TD₁‖TD₂)`.
pub fn monotonicity_gap(t_map: &Channel, d1: &DensityMatrix, d2: &DensityMatrix, which: Divergence) -> Result<f64> {
    t_map.require_trace_preserving()?;
    let t1 = t_map.push_state(d1)?;
    let t2 = t_map.push_state(d2)?;
    Ok(match which {
        Divergence::Transition => transition_probability(&t1, &t2)? - transition_probability(d1, d2)?,
        Divergence::RelativeEntropy => {
            let before = relative_entropy(d1, d2)?;
            if before.is_infinite() {
                f64::INFINITY
            } else {
                before - relative_entropy(&t1, &t2)?
            }
        }
    })
}

/// `‖T*(T(D₂)^{it} T(D₁)^{-it}) p₁ − D₂^{it} D₁^{-it} p₁‖_F`, zero on equality cases.
pub fn intertwining_residual(t_map: &Channel, d1: &DensityMatrix, d2: &DensityMatrix, t: f64) -> Result<f64> {
    let td1 = t_map.apply(d1.matrix())?;
    let td2 = t_map.apply(d2.matrix())?;
    let p1 = support_projection(d1)?;
    let pushed = imaginary_power(&td2, t)? * imaginary_power(&td1, -t)?;
    let lhs = t_map.apply_dual(&pushed)? * &p1;
    let rhs = imaginary_power(d2, t)? * imaginary_power(d1, -t)? * &p1;
    Ok((lhs - rhs).norm())
}

/// Convenience: `Tr(D x)` as a real number for Hermitian `x`.
pub fn expectation_real<M: AsMatrix + ?Sized>(d: &DensityMatrix, x: &M) -> f64 {
    trace_product(d.matrix(), x.mat()).re
}
