//! Density matrices and finite statistical experiments.

use log::debug;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{
    eigh, hermitian_part, hermiticity_defect, identity, is_finite, real, AsMatrix, CMat, CVec, SpectralData,
    SUPPORT_CUTOFF,
};

const TRACE_TOL: f64 = 1e-10;
const MIN_EIGENVALUE: f64 = -1e-12;

/// Positive semidefinite matrix of unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: CMat) -> Result<Self> {
        let m = checked_hermitian(m)?;
        let tr = m.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::BadTrace { trace: tr });
        }
        let sd = eigh(&m);
        let min = sd.eigenvalues.last().copied().unwrap_or(0.0);
        if min < MIN_EIGENVALUE {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(Self(m))
    }

    /// Divides a PSD matrix by its trace.
    pub fn normalized(m: CMat) -> Result<Self> {
        let m = checked_hermitian(m)?;
        let tr = m.trace().re;
        if !(tr > 0.0) {
            return Err(Error::BadTrace { trace: tr });
        }
        Self::new(m / real(tr))
    }

    /// Clips eigenvalues that are negative by at most `1e-9 · λ_max`
    /// (rounding noise from products of channels) and renormalizes.
    pub fn from_noisy(m: CMat) -> Result<Self> {
        let m = checked_hermitian(m)?;
        let sd = eigh(&m);
        let floor = -1e-9 * sd.max_abs().max(1e-300);
        let min = sd.eigenvalues.last().copied().unwrap_or(0.0);
        if min < floor {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        let clipped: Vec<Complex64> = sd.eigenvalues.iter().map(|&l| real(l.max(0.0))).collect();
        Self::normalized(sd.compose(&clipped))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(identity(n) / real(n as f64))
    }

    /// Diagonal state from a probability vector.
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidWeights(format!("{probs:?}")));
        }
        Self::normalized(crate::matrix::diag(probs))
    }

    /// Projector onto a normalized copy of `psi`.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0) {
            return Err(Error::BadTrace { trace: 0.0 });
        }
        let v = psi / real(n);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }

    pub fn spectrum(&self) -> SpectralData {
        eigh(&self.0)
    }

    /// `Tr(D a)`.
    pub fn expectation(&self, a: &CMat) -> Complex64 {
        crate::matrix::trace_product(&self.0, a)
    }

    pub fn rank(&self, cutoff: f64) -> usize {
        self.spectrum().rank(cutoff)
    }

    pub fn is_faithful(&self, cutoff: f64) -> bool {
        self.rank(cutoff) == self.dim()
    }

    /// Ratio of the extreme eigenvalues on the support.
    pub fn condition_number(&self, cutoff: f64) -> f64 {
        let sd = self.spectrum();
        let r = sd.rank(cutoff);
        if r == 0 {
            return f64::INFINITY;
        }
        sd.eigenvalues[0] / sd.eigenvalues[r - 1]
    }

    /// `W* D W` for an isometry `W` whose range contains the support.
    pub fn compress(&self, w: &CMat) -> Result<Self> {
        Self::from_noisy(w.adjoint() * &self.0 * w)
    }

    /// `W D W*`, the inverse of [`DensityMatrix::compress`].
    pub fn embed(&self, w: &CMat) -> Result<Self> {
        Self::from_noisy(w * &self.0 * w.adjoint())
    }
}

impl AsMatrix for DensityMatrix {
    fn mat(&self) -> &CMat {
        &self.0
    }
}

fn checked_hermitian(m: CMat) -> Result<CMat> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare(m.nrows(), m.ncols()));
    }
    if !is_finite(&m) {
        return Err(Error::NotFinite);
    }
    let deviation = hermiticity_defect(&m);
    let tolerance = 1e-10 * m.norm().max(1.0);
    if deviation > tolerance {
        return Err(Error::NotHermitian { deviation, tolerance });
    }
    Ok(hermitian_part(&m))
}

/// `‖(1 − P) Q‖_F` for the support projections of `inner` and `outer`: zero when
/// `supp inner ≤ supp outer`.
pub fn support_excess(inner: &CMat, outer: &CMat, cutoff: f64) -> f64 {
    let p = eigh(outer).support_isometry(cutoff);
    let q = eigh(inner).support_isometry(cutoff);
    let overlap = p.adjoint() * &q;
    (&q - &p * overlap).norm()
}

/// A finite family of labeled states dominated by a reference state `ω`.
#[derive(Debug, Clone)]
pub struct Experiment {
    labels: Vec<String>,
    states: Vec<DensityMatrix>,
    weights: Option<Vec<f64>>,
    dominating: DensityMatrix,
}

const DOMINATION_TOL: f64 = 1e-9;

/// Mixes the family into a dominating state, uniformly unless weights are given.
pub fn build_dominating_state(states: Vec<(String, DensityMatrix)>, weights: Option<Vec<f64>>) -> Result<Experiment> {
    if states.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let n = states[0].1.dim();
    if let Some(bad) = states.iter().find(|(_, s)| s.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.1.dim(),
        });
    }
    let w = match &weights {
        Some(w) => {
            if w.len() != states.len() {
                return Err(Error::InvalidWeights(format!(
                    "{} weights for {} states",
                    w.len(),
                    states.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite() || *x <= 0.0) {
                return Err(Error::InvalidWeights("weights must be positive".into()));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidWeights(format!("weights sum to {total}")));
            }
            w.clone()
        }
        None => vec![1.0 / states.len() as f64; states.len()],
    };
    let mut mix = CMat::zeros(n, n);
    for ((_, s), &l) in states.iter().zip(&w) {
        mix += s.matrix() * real(l);
    }
    let dominating = DensityMatrix::from_noisy(mix)?;
    let (labels, states): (Vec<_>, Vec<_>) = states.into_iter().unzip();
    let exp = Experiment {
        labels,
        states,
        weights: Some(w),
        dominating,
    };
    exp.check_domination()?;
    Ok(exp)
}

impl Experiment {
    /// Family with an explicitly supplied reference state.
    pub fn with_reference(states: Vec<(String, DensityMatrix)>, dominating: DensityMatrix) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let n = dominating.dim();
        if let Some(bad) = states.iter().find(|(_, s)| s.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.1.dim(),
            });
        }
        let (labels, states): (Vec<_>, Vec<_>) = states.into_iter().unzip();
        let exp = Self {
            labels,
            states,
            weights: None,
            dominating,
        };
        exp.check_domination()?;
        Ok(exp)
    }

    /// Unlabeled family, uniformly mixed.
    pub fn from_states(states: Vec<DensityMatrix>) -> Result<Self> {
        build_dominating_state(
            states
                .into_iter()
                .enumerate()
                .map(|(k, s)| (format!("theta{k}"), s))
                .collect(),
            None,
        )
    }

    fn check_domination(&self) -> Result<()> {
        for (label, s) in self.labels.iter().zip(&self.states) {
            let excess = support_excess(s.matrix(), self.dominating.matrix(), SUPPORT_CUTOFF);
            if excess > DOMINATION_TOL {
                return Err(Error::SupportViolation {
                    what: format!("state {label}"),
                    excess,
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dominating.dim()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn dominating(&self) -> &DensityMatrix {
        &self.dominating
    }

    pub fn is_faithful(&self, cutoff: f64) -> bool {
        self.dominating.is_faithful(cutoff)
    }

    /// True when every state equals the reference state within `tol`.
    pub fn is_degenerate(&self, tol: f64) -> bool {
        self.states
            .iter()
            .all(|s| (s.matrix() - self.dominating.matrix()).norm() <= tol)
    }

    /// Restricts every state to `supp ω`.
    ///
    /// Returns the compressed experiment and the isometry `W` (`dim × rank ω`)
    /// with `D ↦ W* D W`.
    pub fn compress(&self, cutoff: f64) -> Result<(Experiment, CMat)> {
        let w = self.dominating.spectrum().support_isometry(cutoff);
        debug!(
            "compressing experiment from dimension {} to support of rank {}",
            self.dim(),
            w.ncols()
        );
        let states = self.states.iter().map(|s| s.compress(&w)).collect::<Result<Vec<_>>>()?;
        let exp = Experiment {
            labels: self.labels.clone(),
            states,
            weights: self.weights.clone(),
            dominating: self.dominating.compress(&w)?,
        };
        Ok((exp, w))
    }

    /// Same family and labels with every state mapped by `f`.
    pub fn map_states<F>(&self, f: F) -> Result<Experiment>
    where
        F: Fn(&DensityMatrix) -> Result<DensityMatrix>,
    {
        let states = self.states.iter().map(&f).collect::<Result<Vec<_>>>()?;
        let dominating = f(&self.dominating)?;
        let exp = Experiment {
            labels: self.labels.clone(),
            states,
            weights: self.weights.clone(),
            dominating,
        };
        exp.check_domination()?;
        Ok(exp)
    }
}
