//! Tolerances, seeds and sampling grids shared by every analysis.

use serde::{Deserialize, Serialize};

/// Default seed for all randomized steps (generic elements, sampled parameters).
pub const DEFAULT_SEED: u64 = 0x5EED;

/// Numerical tolerances. Every analysis records the values it ran with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Eigenvalues below `support_cutoff * lambda_max` are treated as zero.
    pub support_cutoff: f64,
    /// Relative Hermiticity tolerance, scaled by the Frobenius norm.
    pub hermitian: f64,
    /// Accuracy expected from spectral reconstructions.
    pub spectral: f64,
    /// Relative tolerance for rank and span-membership decisions.
    pub rank: f64,
    /// Residual threshold below which a sufficiency condition holds.
    pub sufficiency: f64,
    /// Upper edge of the borderline band `[sufficiency, borderline]`.
    pub borderline: f64,
    /// Reconstruction tolerance for decompositions.
    pub reconstruction: f64,
    /// Gap tolerance below which strong subadditivity counts as saturated.
    pub ssa_equality: f64,
    /// Reconstruction tolerance for the block form of a saturating state.
    pub ssa_reconstruction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            support_cutoff: 1e-10,
            hermitian: 1e-10,
            spectral: 1e-9,
            rank: 1e-9,
            sufficiency: 1e-7,
            borderline: 1e-6,
            reconstruction: 1e-8,
            ssa_equality: 1e-7,
            ssa_reconstruction: 1e-7,
        }
    }
}

/// The default sampling grid for cocycles and modular flows: `±0.37 k`, `k = 1..=8`.
///
/// The irregular spacing avoids accidental periodicity of `(p/q)^{it}` on
/// rational spectra.
pub fn default_t_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (1..=8).map(|k| 0.37 * k as f64).collect();
    grid.extend((1..=8).map(|k| -0.37 * k as f64));
    grid
}

/// Inserts midpoints between consecutive grid points (sorted), doubling density.
pub fn refine_grid(grid: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    let mut out = Vec::with_capacity(2 * sorted.len());
    for w in sorted.windows(2) {
        out.push(w[0]);
        let mid = 0.5 * (w[0] + w[1]);
        if mid != 0.0 {
            out.push(mid);
        }
    }
    if let Some(&last) = sorted.last() {
        out.push(last);
    }
    out
}

/// Bundle of tolerances, seed and grid passed to the analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub tol: Tolerances,
    pub seed: u64,
    pub t_grid: Vec<f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            seed: DEFAULT_SEED,
            t_grid: default_t_grid(),
        }
    }
}

impl Settings {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_grid(mut self, t_grid: Vec<f64>) -> Self {
        self.t_grid = t_grid;
        self
    }

    /// Positive part of the grid, used where only `t > 0` makes sense.
    pub fn positive_grid(&self) -> Vec<f64> {
        self.t_grid.iter().copied().filter(|t| *t > 0.0).collect()
    }
}
