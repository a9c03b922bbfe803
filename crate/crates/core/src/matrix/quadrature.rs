//! Integral representations of `x^{1/2}` and `log x` evaluated with matrix resolvents.
//!
//! The resolvent route never diagonalizes: every integrand evaluation is an
//! LU solve, so agreement with the spectral route is a genuine cross-check.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use super::{eigh, fun_of_spectrum, identity, real, AsMatrix, CMat};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralForm {
    Sqrt,
    Log,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    value: CMat,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod<F>(f: &F, a: f64, b: f64) -> Result<Panel>
where
    F: Fn(f64) -> Result<CMat>,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let centre = f(mid)?;
    let mut kronrod = &centre * real(WGK[7]);
    let mut gauss = &centre * real(WG[3]);
    for k in 0..7 {
        let dx = half * XGK[k];
        let sum = f(mid - dx)? + f(mid + dx)?;
        kronrod += &sum * real(WGK[k]);
        if k % 2 == 1 {
            gauss += &sum * real(WG[k / 2]);
        }
    }
    let error = ((&kronrod - &gauss) * real(half)).norm();
    Ok(Panel {
        a,
        b,
        value: kronrod * real(half),
        error,
    })
}

/// Adaptive G7–K15 integration of a matrix-valued function on `[0, 1]`.
///
/// Returns the integral once the summed Frobenius error estimate drops below `tol`.
pub(crate) fn integrate_unit<F>(f: F, tol: f64, max_panels: usize) -> Result<CMat>
where
    F: Fn(f64) -> Result<CMat>,
{
    let mut heap = BinaryHeap::new();
    for k in 0..8 {
        heap.push(gauss_kronrod(&f, k as f64 / 8.0, (k + 1) as f64 / 8.0)?);
    }
    loop {
        let total_err: f64 = heap.iter().map(|p| p.error).sum();
        if total_err <= tol {
            break;
        }
        if heap.len() >= max_panels {
            return Err(Error::Quadrature {
                estimate: total_err,
                panels: heap.len(),
            });
        }
        let worst = heap.pop().expect("nonempty heap");
        let m = 0.5 * (worst.a + worst.b);
        heap.push(gauss_kronrod(&f, worst.a, m)?);
        heap.push(gauss_kronrod(&f, m, worst.b)?);
    }
    let mut iter = heap.into_iter();
    let first = iter.next().expect("nonempty heap").value;
    Ok(iter.fold(first, |acc, p| acc + p.value))
}

fn solve(m: CMat, rhs: &CMat) -> Result<CMat> {
    m.lu()
        .solve(rhs)
        .ok_or_else(|| Error::Numerical("singular resolvent in quadrature".into()))
}

/// `x^{1/2} = (2/π) ∫_0^∞ x (x + s²)^{-1} ds`, mapped to `(0, 1)` by `s = (1−u)/u`.
fn sqrt_integrand(x: &CMat, u: f64) -> Result<CMat> {
    let n = x.nrows();
    let w = 1.0 - u;
    let m = x * real(u * u) + identity(n) * real(w * w);
    Ok(solve(m, x)? * real(2.0 / PI))
}

/// `log x = ∫_0^∞ (1+t)^{-1} − (x+t)^{-1} dt`, mapped to `(0, 1)` by `t = (1−u)/u`.
fn log_integrand(x: &CMat, u: f64) -> Result<CMat> {
    let n = x.nrows();
    let shifted = x - identity(n);
    let m = identity(n) + &shifted * real(u);
    solve(m, &shifted)
}

/// Evaluates the integral representation of `√D` or `log D` by adaptive
/// quadrature and returns its Frobenius distance to the spectral result.
pub fn resolvent_quadrature_check<M: AsMatrix + ?Sized>(d: &M, which: IntegralForm) -> Result<f64> {
    let x = d.mat();
    let sd = eigh(x);
    let min = sd.eigenvalues.last().copied().unwrap_or(0.0);
    let spectral = match which {
        IntegralForm::Sqrt => {
            if min < -1e-12 * sd.max_abs().max(1.0) {
                return Err(Error::NotPositive { min_eigenvalue: min });
            }
            fun_of_spectrum(&sd, |l| real(l.max(0.0).sqrt()), false, 0.0)?
        }
        IntegralForm::Log => {
            if min <= 0.0 {
                return Err(Error::Domain { eigenvalue: min });
            }
            fun_of_spectrum(&sd, |l| real(l.ln()), false, 0.0)?
        }
    };
    let tol = 1e-10 * spectral.norm().max(1.0);
    let quad = match which {
        IntegralForm::Sqrt => integrate_unit(|u| sqrt_integrand(x, u), tol, 20_000)?,
        IntegralForm::Log => integrate_unit(|u| log_integrand(x, u), tol, 20_000)?,
    };
    Ok((quad - spectral).norm())
}
