//! Independent re-check of decompositions stored in a report.
//!
//! Only the numbers in the report are used: the unitary, the block factors and
//! the original states. Nothing is recomputed by the analysis code.

use qsuff_core::matrix::{eigh, identity, kron, partial_trace, real, trace, CMat};

use crate::input::{InputError, JsonMatrix};
use crate::report::{Decomposition, SsaReport, SsaStructureReport};

#[derive(Debug, Clone, Copy, Default)]
pub struct Residuals {
    /// Largest `‖D − reassembled D‖_F`.
    pub reconstruction: f64,
    /// Largest deviation of the weights from a probability vector or from `Tr(p_n D)`.
    pub weights: f64,
    /// `‖U*U − 1‖_F`.
    pub unitary: f64,
    /// Largest deviation of a factor from being a density matrix.
    pub factors: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.reconstruction
            .max(self.weights)
            .max(self.unitary)
            .max(self.factors)
    }
}

/// Negative part of the spectrum plus trace defect and non-Hermiticity.
fn density_defect(m: &CMat) -> f64 {
    let herm = (m - m.adjoint()).norm();
    let h = (m + m.adjoint()) * real(0.5);
    let min = eigh(&h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    herm.max((trace(m).re - 1.0).abs()).max((-min).max(0.0))
}

fn square(m: &JsonMatrix, n: usize, field: &str) -> Result<CMat, InputError> {
    m.to_mat(n, n, field)
}

fn block_columns(u: &CMat, offset: usize, width: usize) -> CMat {
    u.columns(offset, width).into_owned()
}

pub fn decomposition(d: &Decomposition) -> Result<Residuals, InputError> {
    let n = d.dim;
    let total: usize = d.blocks.iter().map(|(a, b)| a * b).sum();
    if total != n {
        return Err(InputError::field(
            "decomposition.blocks",
            format!("blocks cover dimension {total}, expected {n}"),
        ));
    }
    if d.right_factors.len() != d.blocks.len() {
        return Err(InputError::field(
            "decomposition.right_factors",
            "one factor per block expected",
        ));
    }
    let u = square(&d.unitary, n, "decomposition.unitary")?;
    let mut r = Residuals {
        unitary: (u.adjoint() * &u - identity(n)).norm(),
        ..Residuals::default()
    };
    let rights = d
        .blocks
        .iter()
        .zip(&d.right_factors)
        .enumerate()
        .map(|(k, (&(_, m), f))| square(f, m, &format!("decomposition.right_factors[{k}]")))
        .collect::<Result<Vec<_>, _>>()?;
    for f in &rights {
        r.factors = r.factors.max(density_defect(f));
    }
    for (k, s) in d.states.iter().enumerate() {
        let field = format!("decomposition.states[{k}]");
        if s.weights.len() != d.blocks.len() || s.left_factors.len() != d.blocks.len() {
            return Err(InputError::field(
                &field,
                "one weight and one left factor per block expected",
            ));
        }
        let state = square(&s.matrix, n, &format!("{field}.matrix"))?;
        let mut rebuilt = CMat::zeros(n, n);
        let mut offset = 0;
        for (b, &(dl, m)) in d.blocks.iter().enumerate() {
            let left = square(&s.left_factors[b], dl, &format!("{field}.left_factors[{b}]"))?;
            r.factors = r.factors.max(density_defect(&left));
            let w = block_columns(&u, offset, dl * m);
            let s_n = s.weights[b];
            r.weights = r.weights.max((s_n - trace(&(w.adjoint() * &state * &w)).re).abs());
            rebuilt += &w * kron(&left, &rights[b]) * w.adjoint() * real(s_n);
            offset += dl * m;
        }
        let sum: f64 = s.weights.iter().sum();
        let negative = s.weights.iter().fold(0.0_f64, |acc, x| acc.max(-x));
        r.weights = r.weights.max((sum - 1.0).abs()).max(negative);
        r.reconstruction = r.reconstruction.max((rebuilt - state).norm());
    }
    Ok(r)
}

pub fn ssa(s: &SsaReport, st: &SsaStructureReport) -> Result<Residuals, InputError> {
    let (da, db, dc) = s.dims;
    let n = da * db * dc;
    let total: usize = st.blocks.iter().map(|(a, b)| a * b).sum();
    if total != db {
        return Err(InputError::field(
            "ssa.structure.blocks",
            format!("blocks cover dimension {total}, expected d_B = {db}"),
        ));
    }
    if st.components.len() != st.blocks.len() {
        return Err(InputError::field(
            "ssa.structure.components",
            "one component per block expected",
        ));
    }
    let state = square(&s.matrix, n, "ssa.matrix")?;
    let u = square(&st.b_unitary, db, "ssa.structure.b_unitary")?;
    let omega_b = partial_trace(&state, &[da, db, dc], &[1]).map_err(|e| InputError::field("ssa.dims", e))?;
    let mut r = Residuals {
        unitary: (u.adjoint() * &u - identity(db)).norm(),
        ..Residuals::default()
    };
    let mut rebuilt = CMat::zeros(n, n);
    let mut offset = 0;
    for (k, (&(dl, dr), c)) in st.blocks.iter().zip(&st.components).enumerate() {
        let field = format!("ssa.structure.components[{k}]");
        let left = square(&c.left, da * dl, &format!("{field}.left"))?;
        let right = square(&c.right, dr * dc, &format!("{field}.right"))?;
        r.factors = r.factors.max(density_defect(&left)).max(density_defect(&right));
        let w = block_columns(&u, offset, dl * dr);
        r.weights = r
            .weights
            .max((c.weight - trace(&(w.adjoint() * &omega_b * &w)).re).abs());
        let lifted = kron(&kron(&identity(da), &w), &identity(dc));
        rebuilt += &lifted * kron(&left, &right) * lifted.adjoint() * real(c.weight);
        offset += dl * dr;
    }
    r.reconstruction = (rebuilt - state).norm();
    Ok(r)
}
