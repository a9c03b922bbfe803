//! Completely positive maps in Kraus form, their duals, and recovery maps.
//!
//! A channel with Kraus operators `V_i` (each `out_dim × in_dim`) acts as
//! `a ↦ Σ V_i a V_i*`, taking `B(C^{in_dim})` to `B(C^{out_dim})`. Read as a
//! coarse-graining in the Heisenberg picture it is *unital* when
//! `Σ V_i V_i* = 1`; read on densities it is *trace preserving* when
//! `Σ V_i* V_i = 1`.

use crate::algebra::MatrixStarAlgebra;
use crate::error::{Error, Result};
use crate::matrix::{
    identity, kron, matrix_unit, power_on_support, real, sqrt_psd, CMat, HermitianOperator, SUPPORT_CUTOFF,
};
use crate::state::DensityMatrix;

const FLAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Channel {
    kraus: Vec<CMat>,
    in_dim: usize,
    out_dim: usize,
    unital: bool,
    trace_preserving: bool,
}

impl Channel {
    /// Builds a channel and detects the unital / trace-preserving flags.
    pub fn from_kraus(kraus: Vec<CMat>) -> Result<Self> {
        let first = kraus.first().ok_or(Error::EmptyKraus)?;
        let (out_dim, in_dim) = first.shape();
        if let Some(bad) = kraus.iter().find(|k| k.shape() != (out_dim, in_dim)) {
            return Err(Error::DimensionMismatch {
                expected: out_dim * in_dim,
                found: bad.nrows() * bad.ncols(),
            });
        }
        if kraus.iter().any(|k| !crate::matrix::is_finite(k)) {
            return Err(Error::NotFinite);
        }
        let mut ch = Self {
            kraus,
            in_dim,
            out_dim,
            unital: false,
            trace_preserving: false,
        };
        ch.unital = ch.unitality_residual() <= FLAG_TOL;
        ch.trace_preserving = ch.trace_preservation_residual() <= FLAG_TOL;
        Ok(ch)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_kraus(vec![identity(n)]).expect("identity channel")
    }

    /// `a ↦ u a u*`.
    pub fn unitary(u: CMat) -> Result<Self> {
        Self::from_kraus(vec![u])
    }

    /// `a ↦ Tr(a)/d · 1`, with Kraus operators `|i⟩⟨j| / √d`.
    pub fn completely_depolarizing(d: usize) -> Self {
        let s = 1.0 / (d as f64).sqrt();
        let kraus = (0..d * d).map(|k| matrix_unit(d, k / d, k % d) * real(s)).collect();
        Self::from_kraus(kraus).expect("depolarizing channel")
    }

    /// `a ↦ Σ p_k a p_k` for orthogonal projections summing to one.
    pub fn pinching(projections: Vec<CMat>) -> Result<Self> {
        Self::from_kraus(projections)
    }

    /// Partial trace over the right factor as a map `B(C^{dl} ⊗ C^{dr}) → B(C^{dl})`.
    pub fn partial_trace_right(dl: usize, dr: usize) -> Self {
        let kraus = (0..dr)
            .map(|k| {
                let mut bra = CMat::zeros(1, dr);
                bra[(0, k)] = real(1.0);
                kron(&identity(dl), &bra)
            })
            .collect();
        Self::from_kraus(kraus).expect("partial trace channel")
    }

    /// Embedding `a ↦ a ⊗ 1_{dr}`, the Heisenberg dual of [`Channel::partial_trace_right`].
    pub fn embedding_left(dl: usize, dr: usize) -> Self {
        Self::partial_trace_right(dl, dr).schrodinger_dual()
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn is_unital(&self) -> bool {
        self.unital
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// `‖Σ V V* − 1‖_F`.
    pub fn unitality_residual(&self) -> f64 {
        let s = self
            .kraus
            .iter()
            .fold(CMat::zeros(self.out_dim, self.out_dim), |acc, v| acc + v * v.adjoint());
        (s - identity(self.out_dim)).norm()
    }

    /// `‖Σ V* V − 1‖_F`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let s = self
            .kraus
            .iter()
            .fold(CMat::zeros(self.in_dim, self.in_dim), |acc, v| acc + v.adjoint() * v);
        (s - identity(self.in_dim)).norm()
    }

    pub fn require_unital(&self) -> Result<()> {
        if self.unital {
            Ok(())
        } else {
            Err(Error::NotUnital {
                residual: self.unitality_residual(),
            })
        }
    }

    pub fn require_trace_preserving(&self) -> Result<()> {
        if self.trace_preserving {
            Ok(())
        } else {
            Err(Error::NotTracePreserving {
                residual: self.trace_preservation_residual(),
            })
        }
    }

    /// `Σ V a V*`.
    pub fn apply(&self, a: &CMat) -> Result<CMat> {
        if a.shape() != (self.in_dim, self.in_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: a.nrows(),
            });
        }
        Ok(self.apply_unchecked(a))
    }

    pub(crate) fn apply_unchecked(&self, a: &CMat) -> CMat {
        self.kraus
            .iter()
            .fold(CMat::zeros(self.out_dim, self.out_dim), |acc, v| {
                acc + v * a * v.adjoint()
            })
    }

    /// Trace dual `x ↦ Σ V* x V`, so that `Tr(dual(x) a) = Tr(x apply(a))`.
    pub fn apply_dual(&self, x: &CMat) -> Result<CMat> {
        if x.shape() != (self.out_dim, self.out_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                found: x.nrows(),
            });
        }
        Ok(self.apply_dual_unchecked(x))
    }

    pub(crate) fn apply_dual_unchecked(&self, x: &CMat) -> CMat {
        self.kraus.iter().fold(CMat::zeros(self.in_dim, self.in_dim), |acc, v| {
            acc + v.adjoint() * x * v
        })
    }

    /// Pushes a density through the trace dual: `D ↦ Σ V* D V`.
    pub fn pull_state(&self, d: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_noisy(self.apply_dual(d.matrix())?)
    }

    /// Pushes a density forward: `D ↦ Σ V D V*`.
    pub fn push_state(&self, d: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_noisy(self.apply(d.matrix())?)
    }

    /// The trace dual as a channel: Kraus operators `V_i*`, flags swapped.
    pub fn schrodinger_dual(&self) -> Channel {
        Channel {
            kraus: self.kraus.iter().map(|v| v.adjoint()).collect(),
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            unital: self.trace_preserving,
            trace_preserving: self.unital,
        }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &Channel) -> Result<Channel> {
        if first.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                found: first.out_dim,
            });
        }
        let mut kraus = Vec::with_capacity(self.kraus.len() * first.kraus.len());
        for a in &self.kraus {
            for b in &first.kraus {
                kraus.push(a * b);
            }
        }
        Channel::from_kraus(kraus)
    }

    /// Superoperator `Σ V ⊗ conj(V)` acting on row-major vectorizations.
    pub fn superoperator(&self) -> CMat {
        self.kraus.iter().fold(
            CMat::zeros(self.out_dim * self.out_dim, self.in_dim * self.in_dim),
            |acc, v| acc + kron(v, &v.conjugate()),
        )
    }

    /// Kraus operators `wl* V wr` of the compression `a ↦ p σ(q a q) p`, where
    /// `wl` (out side) and `wr` (in side) are isometries onto the ranges of `p` and `q`.
    pub fn compress(&self, wl: &CMat, wr: &CMat) -> Result<Channel> {
        let kraus: Vec<CMat> = self
            .kraus
            .iter()
            .map(|v| wl.adjoint() * v * wr)
            .filter(|k| k.norm() > 1e-14)
            .collect();
        if kraus.is_empty() {
            return Err(Error::EmptyKraus);
        }
        Channel::from_kraus(kraus)
    }

    /// Rescales Kraus operators by `S^{-1/2}` with `S = Σ V V*`, removing rounding drift from unitality.
    pub fn renormalize_unital(&self) -> Result<Channel> {
        let s = self
            .kraus
            .iter()
            .fold(CMat::zeros(self.out_dim, self.out_dim), |acc, v| acc + v * v.adjoint());
        let inv_sqrt = power_on_support(&s, -0.5, SUPPORT_CUTOFF)?;
        Channel::from_kraus(self.kraus.iter().map(|v| &inv_sqrt * v).collect())
    }

    /// Choi matrix `Σ_{kl} E_{kl} ⊗ σ(E_{kl})`.
    pub fn choi_matrix(&self) -> HermitianOperator {
        choi_of_linear_map(self.in_dim, self.out_dim, |a| self.apply_unchecked(a))
    }

    /// `σ(a*a) − σ(a)*σ(a)`, positive for unital CP maps.
    pub fn schwarz_defect(&self, a: &CMat) -> Result<HermitianOperator> {
        self.require_unital()?;
        let sa = self.apply(a)?;
        let saa = self.apply(&(a.adjoint() * a))?;
        Ok(HermitianOperator::from_hermitian_part(&(saa - sa.adjoint() * sa)))
    }
}

/// Choi matrix of an arbitrary linear map, for certifying (non-)complete positivity.
pub fn choi_of_linear_map<F>(d_in: usize, d_out: usize, map: F) -> HermitianOperator
where
    F: Fn(&CMat) -> CMat,
{
    let mut c = CMat::zeros(d_in * d_out, d_in * d_out);
    for k in 0..d_in {
        for l in 0..d_in {
            let image = map(&matrix_unit(d_in, k, l));
            c.view_mut((k * d_out, l * d_out), (d_out, d_out)).copy_from(&image);
        }
    }
    HermitianOperator::from_hermitian_part(&c)
}

/// Trace-preserving conditional expectation onto `A`: the Hilbert–Schmidt projection.
pub fn conditional_expectation(a: &MatrixStarAlgebra, x: &CMat) -> Result<CMat> {
    if x.shape() != (a.ambient_dim(), a.ambient_dim()) {
        return Err(Error::DimensionMismatch {
            expected: a.ambient_dim(),
            found: x.nrows(),
        });
    }
    Ok(a.project(x))
}

/// `E_ω(x) = E(D)^{-1/2} E(D^{1/2} x D^{1/2}) E(D)^{-1/2}`, the ω-preserving
/// conditional expectation onto `A` (when one exists) and Petz's recovery map
/// of the embedding otherwise.
pub fn petz_conditional_expectation(a: &MatrixStarAlgebra, omega: &DensityMatrix, x: &CMat) -> Result<CMat> {
    PetzExpectation::new(a, omega)?.apply(x)
}

/// Precomputed factors of [`petz_conditional_expectation`] for repeated use.
#[derive(Debug, Clone)]
pub struct PetzExpectation<'a> {
    algebra: &'a MatrixStarAlgebra,
    sqrt_d: CMat,
    inv_sqrt_ed: CMat,
}

impl<'a> PetzExpectation<'a> {
    pub fn new(a: &'a MatrixStarAlgebra, omega: &DensityMatrix) -> Result<Self> {
        if omega.dim() != a.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: a.ambient_dim(),
                found: omega.dim(),
            });
        }
        if !omega.is_faithful(SUPPORT_CUTOFF) {
            return Err(Error::NotFaithful {
                what: "reference state".into(),
            });
        }
        let ed = a.project(omega.matrix());
        Ok(Self {
            algebra: a,
            sqrt_d: sqrt_psd(omega)?,
            inv_sqrt_ed: power_on_support(&ed, -0.5, SUPPORT_CUTOFF)?,
        })
    }

    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        let inner = conditional_expectation(self.algebra, &(&self.sqrt_d * x * &self.sqrt_d))?;
        Ok(&self.inv_sqrt_ed * inner * &self.inv_sqrt_ed)
    }
}

/// Petz dual `σ*_ω(x) = D₀^{-1/2} σᵀ(D^{1/2} x D^{1/2}) D₀^{-1/2}` with `D₀ = σᵀ(D)`.
///
/// Kraus operators `D₀^{-1/2} V_i* D^{1/2}`; the result is unital and maps
/// `B(C^{out_dim})` back to `B(C^{in_dim})`.
pub fn petz_dual(ch: &Channel, omega: &DensityMatrix) -> Result<Channel> {
    ch.require_unital()?;
    if omega.dim() != ch.out_dim() {
        return Err(Error::DimensionMismatch {
            expected: ch.out_dim(),
            found: omega.dim(),
        });
    }
    if !omega.is_faithful(SUPPORT_CUTOFF) {
        return Err(Error::NotFaithful {
            what: "reference state".into(),
        });
    }
    let d0 = ch.apply_dual(omega.matrix())?;
    let d0_state = DensityMatrix::from_noisy(d0.clone())?;
    if !d0_state.is_faithful(SUPPORT_CUTOFF) {
        return Err(Error::NotFaithful {
            what: "pulled-back reference state".into(),
        });
    }
    let sqrt_d = sqrt_psd(omega)?;
    let inv_sqrt_d0 = power_on_support(&d0, -0.5, SUPPORT_CUTOFF)?;
    let kraus = ch
        .kraus()
        .iter()
        .map(|v| &inv_sqrt_d0 * v.adjoint() * &sqrt_d)
        .collect();
    Channel::from_kraus(kraus)
}

/// `‖σ*_ωᵀ(D₀) − D‖_F`: zero exactly when `ω∘σ∘σ*_ω = ω`.
pub fn petz_normalization_residual(ch: &Channel, recovery: &Channel, omega: &DensityMatrix) -> Result<f64> {
    let d0 = ch.apply_dual(omega.matrix())?;
    let back = recovery.apply_dual(&d0)?;
    Ok((back - omega.matrix()).norm())
}
