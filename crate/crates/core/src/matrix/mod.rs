//! Dense complex matrix calculus.
//!
//! Everything in the toolkit is built on square `DMatrix<Complex64>` values.
//! Hermitian inputs are symmetrized before diagonalization so that rounding
//! noise in the strictly lower triangle never leaks into spectra.
//!
//! Vectorization is row-major throughout: `vec(a)[i * n + j] = a[(i, j)]`, so
//! that `vec(x a y) = (x ⊗ yᵀ) vec(a)`.

mod nullspace;
mod quadrature;

pub use nullspace::{null_space, KernelBuilder, NullSpace};
pub use quadrature::{resolvent_quadrature_check, IntegralForm};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;
/// Dense complex vector.
pub type CVec = DVector<Complex64>;

/// Default relative support cutoff.
pub const SUPPORT_CUTOFF: f64 = 1e-10;
/// Default relative Hermiticity tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Anything that can be viewed as a square complex matrix.
pub trait AsMatrix {
    fn mat(&self) -> &CMat;
}

impl AsMatrix for CMat {
    fn mat(&self) -> &CMat {
        self
    }
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

/// Diagonal matrix with real entries.
pub fn diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { real(values[i]) } else { real(0.0) })
}

/// Matrix unit `|i⟩⟨j|` of size `n`.
pub fn matrix_unit(n: usize, i: usize, j: usize) -> CMat {
    let mut e = zeros(n);
    e[(i, j)] = real(1.0);
    e
}

/// Builds a square matrix from row-major real/imaginary entries.
pub fn from_rows(n: usize, entries: &[(f64, f64)]) -> CMat {
    assert_eq!(entries.len(), n * n, "expected {} entries", n * n);
    CMat::from_fn(n, n, |i, j| {
        let (re, im) = entries[i * n + j];
        c64(re, im)
    })
}

pub fn trace(a: &CMat) -> Complex64 {
    a.trace()
}

/// Hilbert–Schmidt inner product `Tr(a* b)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut acc = real(0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn frobenius(a: &CMat) -> f64 {
    a.norm()
}

/// Largest singular value.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// `(a + a*) / 2`.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * real(0.5)
}

/// Deviation `‖a − a*‖_F`.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    (a - a.adjoint()).norm()
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn ensure_square(a: &CMat) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare(a.nrows(), a.ncols()));
    }
    Ok(())
}

/// Row-major vectorization.
pub fn vectorize(a: &CMat) -> CVec {
    let (r, c) = a.shape();
    CVec::from_fn(r * c, |k, _| a[(k / c, k % c)])
}

/// Inverse of [`vectorize`] for an `rows × cols` matrix.
pub fn unvectorize(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// Matrix of a linear map `B(C^{d_in}) → B(C^{d_out})` in the matrix-unit basis.
pub fn superoperator<F>(d_in: usize, d_out: usize, map: F) -> CMat
where
    F: Fn(&CMat) -> CMat,
{
    let mut out = CMat::zeros(d_out * d_out, d_in * d_in);
    for k in 0..d_in {
        for l in 0..d_in {
            let image = map(&matrix_unit(d_in, k, l));
            let col = k * d_in + l;
            for i in 0..d_out {
                for j in 0..d_out {
                    out[(i * d_out + j, col)] = image[(i, j)];
                }
            }
        }
    }
    out
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Self-adjoint matrix, checked on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator(CMat);

impl HermitianOperator {
    /// Accepts `a` when `‖a − a*‖_F ≤ tol · max(1, ‖a‖_F)`; the stored value is the exact Hermitian part.
    pub fn with_tolerance(a: CMat, tol: f64) -> Result<Self> {
        ensure_square(&a)?;
        if !is_finite(&a) {
            return Err(Error::NotFinite);
        }
        let deviation = hermiticity_defect(&a);
        let tolerance = tol * a.norm().max(1.0);
        if deviation > tolerance {
            return Err(Error::NotHermitian { deviation, tolerance });
        }
        Ok(Self(hermitian_part(&a)))
    }

    pub fn new(a: CMat) -> Result<Self> {
        Self::with_tolerance(a, HERMITIAN_TOL)
    }

    /// Takes the Hermitian part of `a` without checking.
    pub fn from_hermitian_part(a: &CMat) -> Self {
        Self(hermitian_part(a))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn into_inner(self) -> CMat {
        self.0
    }
}

impl AsMatrix for HermitianOperator {
    fn mat(&self) -> &CMat {
        &self.0
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// Unitary whose columns are the eigenvectors.
    pub eigenvectors: CMat,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Threshold separating the support from numerical zero.
    pub fn support_threshold(&self, cutoff: f64) -> f64 {
        cutoff * self.max_abs()
    }

    /// `U diag(g(λ)) U*`.
    pub fn compose(&self, values: &[Complex64]) -> CMat {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, v) in values.iter().enumerate() {
            for i in 0..u.nrows() {
                scaled[(i, j)] *= *v;
            }
        }
        scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMat {
        let values: Vec<Complex64> = self.eigenvalues.iter().map(|&l| real(l)).collect();
        self.compose(&values)
    }

    /// Number of eigenvalues above the support threshold.
    pub fn rank(&self, cutoff: f64) -> usize {
        let thr = self.support_threshold(cutoff);
        self.eigenvalues.iter().filter(|&&l| l > thr).count()
    }

    /// Columns spanning the support (eigenvalues above the threshold).
    pub fn support_isometry(&self, cutoff: f64) -> CMat {
        let r = self.rank(cutoff);
        self.eigenvectors.columns(0, r).into_owned()
    }
}

/// Eigen-decomposition of the Hermitian part of `a` (unchecked).
pub fn eigh(a: &CMat) -> SpectralData {
    let n = a.nrows();
    if n == 0 {
        return SpectralData {
            eigenvalues: vec![],
            eigenvectors: CMat::zeros(0, 0),
        };
    }
    let eig = hermitian_part(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = CMat::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    SpectralData {
        eigenvalues,
        eigenvectors,
    }
}

/// Spectral decomposition with eigenvalues sorted in descending order.
pub fn spectral(a: &HermitianOperator) -> SpectralData {
    eigh(a.mat())
}

/// Checked variant of [`spectral`] for raw matrices.
pub fn spectral_checked(a: &CMat) -> Result<SpectralData> {
    Ok(spectral(&HermitianOperator::new(a.clone())?))
}

/// `f(A)` by functional calculus.
///
/// With `support_only`, eigenvalues at or below `cutoff · λ_max` map to zero
/// and `f` is never evaluated there. A non-finite value of `f` at a retained
/// eigenvalue is a domain error.
pub fn mat_fun<M, F>(a: &M, f: F, support_only: bool, cutoff: f64) -> Result<CMat>
where
    M: AsMatrix + ?Sized,
    F: Fn(f64) -> Complex64,
{
    let sd = eigh(a.mat());
    fun_of_spectrum(&sd, f, support_only, cutoff)
}

/// Functional calculus on an already computed decomposition.
pub fn fun_of_spectrum<F>(sd: &SpectralData, f: F, support_only: bool, cutoff: f64) -> Result<CMat>
where
    F: Fn(f64) -> Complex64,
{
    let thr = sd.support_threshold(cutoff);
    let mut values = Vec::with_capacity(sd.dim());
    for &l in &sd.eigenvalues {
        if support_only && l <= thr {
            values.push(real(0.0));
            continue;
        }
        let v = f(l);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Domain { eigenvalue: l });
        }
        values.push(v);
    }
    Ok(sd.compose(&values))
}

/// Fails when the smallest eigenvalue is below `−tol · max(1, λ_max)`.
pub fn check_psd(sd: &SpectralData, tol: f64) -> Result<()> {
    let min = sd.eigenvalues.last().copied().unwrap_or(0.0);
    if min < -tol * sd.max_abs().max(1.0) {
        return Err(Error::NotPositive { min_eigenvalue: min });
    }
    Ok(())
}

const PSD_TOL: f64 = 1e-9;

fn psd_spectrum<M: AsMatrix + ?Sized>(d: &M) -> Result<SpectralData> {
    ensure_square(d.mat())?;
    let sd = eigh(d.mat());
    check_psd(&sd, PSD_TOL)?;
    Ok(sd)
}

/// `D^{p}` on the support of a PSD matrix; zero on the kernel.
pub fn power_on_support<M: AsMatrix + ?Sized>(d: &M, p: f64, cutoff: f64) -> Result<CMat> {
    let sd = psd_spectrum(d)?;
    fun_of_spectrum(&sd, |l| real(l.powf(p)), true, cutoff)
}

/// `D^{it}` computed on the support; `D^{i0}` is the support projection.
pub fn imaginary_power<M: AsMatrix + ?Sized>(d: &M, t: f64) -> Result<CMat> {
    imaginary_power_with(d, t, SUPPORT_CUTOFF)
}

pub fn imaginary_power_with<M: AsMatrix + ?Sized>(d: &M, t: f64, cutoff: f64) -> Result<CMat> {
    let sd = psd_spectrum(d)?;
    Ok(imaginary_power_of_spectrum(&sd, t, cutoff))
}

/// `D^{it}` on a precomputed decomposition of a PSD matrix.
pub fn imaginary_power_of_spectrum(sd: &SpectralData, t: f64, cutoff: f64) -> CMat {
    fun_of_spectrum(sd, |l| Complex64::from_polar(1.0, t * l.ln()), true, cutoff)
        .expect("phases are finite on the support")
}

/// Orthogonal projection onto the span of eigenvectors with `λ > cutoff · λ_max`.
pub fn support_projection<M: AsMatrix + ?Sized>(d: &M) -> Result<CMat> {
    support_projection_with(d, SUPPORT_CUTOFF)
}

pub fn support_projection_with<M: AsMatrix + ?Sized>(d: &M, cutoff: f64) -> Result<CMat> {
    let sd = psd_spectrum(d)?;
    Ok(fun_of_spectrum(&sd, |_| real(1.0), true, cutoff).expect("constant function"))
}

/// Isometry (`n × rank`) onto the support of a PSD matrix.
pub fn support_isometry<M: AsMatrix + ?Sized>(d: &M, cutoff: f64) -> Result<CMat> {
    Ok(psd_spectrum(d)?.support_isometry(cutoff))
}

/// Generalized inverse: `D D⁻ = D⁻ D = supp D`.
pub fn pinv_on_support<M: AsMatrix + ?Sized>(d: &M) -> Result<CMat> {
    power_on_support(d, -1.0, SUPPORT_CUTOFF)
}

/// Principal square root of a PSD matrix.
pub fn sqrt_psd<M: AsMatrix + ?Sized>(d: &M) -> Result<CMat> {
    power_on_support(d, 0.5, SUPPORT_CUTOFF)
}

/// `log D` on the support; zero on the kernel.
pub fn log_on_support<M: AsMatrix + ?Sized>(d: &M, cutoff: f64) -> Result<CMat> {
    let sd = psd_spectrum(d)?;
    fun_of_spectrum(&sd, |l| real(l.ln()), true, cutoff)
}

/// Exponential of a Hermitian matrix via its spectrum.
pub fn exp_hermitian<M: AsMatrix + ?Sized>(h: &M) -> CMat {
    let sd = eigh(h.mat());
    fun_of_spectrum(&sd, |l| real(l.exp()), false, 0.0).expect("finite exponential")
}

/// General matrix exponential (scaling and squaring).
pub fn expm(a: &CMat) -> CMat {
    a.clone().exp()
}

/// Partial trace over the subsystems not listed in `keep`.
///
/// `dims` lists the subsystem dimensions in tensor order; `keep` holds the
/// indices of the retained factors, whose order in the result follows `dims`.
pub fn partial_trace(a: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    ensure_square(a)?;
    let total: usize = dims.iter().product();
    if total != a.nrows() || dims.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: total,
            found: a.nrows(),
        });
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::Precondition(format!(
            "subsystem index {bad} out of range for {} factors",
            dims.len()
        )));
    }
    let kept: Vec<bool> = (0..dims.len()).map(|k| keep.contains(&k)).collect();
    let out_dim: usize = dims.iter().zip(&kept).filter(|(_, k)| **k).map(|(d, _)| *d).product();

    // split every full index into (kept index, traced index)
    let split: Vec<(usize, usize)> = (0..total)
        .map(|mut idx| {
            let (mut kept_idx, mut kept_stride) = (0, 1);
            let (mut traced_idx, mut traced_stride) = (0, 1);
            for (s, &d) in dims.iter().enumerate().rev() {
                let digit = idx % d;
                idx /= d;
                if kept[s] {
                    kept_idx += digit * kept_stride;
                    kept_stride *= d;
                } else {
                    traced_idx += digit * traced_stride;
                    traced_stride *= d;
                }
            }
            (kept_idx, traced_idx)
        })
        .collect();

    let mut out = CMat::zeros(out_dim, out_dim);
    for r in 0..total {
        let (kr, tr) = split[r];
        for c in 0..total {
            let (kc, tc) = split[c];
            if tr == tc {
                out[(kr, kc)] += a[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Directional derivative of `exp` at `h` along `e`.
///
/// Read off the upper-right block of `exp([[h, e], [0, h]])`; `h` is shifted
/// by its largest eigenvalue first so the block exponential cannot overflow.
pub fn frechet_exp(h: &HermitianOperator, e: &CMat) -> Result<CMat> {
    let n = h.dim();
    if e.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: e.nrows(),
        });
    }
    let shift = eigh(h.mat()).eigenvalues.first().copied().unwrap_or(0.0);
    let hs = h.mat() - identity(n) * real(shift);
    let mut block = CMat::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&hs);
    block.view_mut((n, n), (n, n)).copy_from(&hs);
    block.view_mut((0, n), (n, n)).copy_from(e);
    let ex = expm(&block);
    Ok(ex.view((0, n), (n, n)).into_owned() * real(shift.exp()))
}

/// `Σ_i a_i b_i` of matrices.
pub fn lin_comb(coeffs: &[Complex64], mats: &[CMat]) -> CMat {
    let n = mats.first().map(|m| m.nrows()).unwrap_or(0);
    let mut out = CMat::zeros(n, mats.first().map(|m| m.ncols()).unwrap_or(0));
    for (c, m) in coeffs.iter().zip(mats) {
        out += m * *c;
    }
    out
}

/// Frobenius distance between two matrices.
pub fn distance(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}
