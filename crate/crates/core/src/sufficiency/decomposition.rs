//! The minimal sufficient subalgebra and the factorizations it induces.

use log::debug;
use serde::Serialize;

use super::{petz_invariance_residual, subalgebra_sufficiency, SufficiencyVerdict};
use crate::algebra::{
    commutant, generate_algebra, modular_invariance_check, structure_decomposition, BlockStructure, MatrixStarAlgebra,
};
use crate::error::{Error, Result};
use crate::matrix::{
    commutator, identity, imaginary_power, pinv_on_support, power_on_support, real, trace, CMat, SUPPORT_CUTOFF,
};
use crate::random::rng_from_seed;
use crate::settings::{refine_grid, Settings};
use crate::state::Experiment;

const MAX_REFINEMENTS: usize = 3;
const MAX_FLOW_CLOSURES: usize = 6;
const SPAN_TOL: f64 = 1e-8;
const WEIGHT_TOL: f64 = 1e-9;

fn require_faithful(exp: &Experiment) -> Result<()> {
    if !exp.is_faithful(SUPPORT_CUTOFF) {
        return Err(Error::NotFaithful {
            what: "reference state".into(),
        });
    }
    Ok(())
}

/// Algebra generated by the cocycles `D_θ^{it} D_ω^{-it}` on `grid`, closed
/// under the modular flow of `ω` at the same times.
fn cocycle_algebra(exp: &Experiment, grid: &[f64]) -> Result<MatrixStarAlgebra> {
    let n = exp.dim();
    let omega = exp.dominating();
    let mut gens = Vec::with_capacity(exp.len() * (grid.len() + 1));
    let flows: Vec<CMat> = grid.iter().map(|&t| imaginary_power(omega, t)).collect::<Result<_>>()?;
    for s in exp.states() {
        gens.push(imaginary_power(s, 0.0)?);
        for (k, &t) in grid.iter().enumerate() {
            gens.push(imaginary_power(s, t)? * flows[k].adjoint());
        }
    }
    let mut alg = generate_algebra(&gens, n)?;
    for _ in 0..MAX_FLOW_CLOSURES {
        if alg.dimension() == n * n {
            break;
        }
        let mut extra = Vec::new();
        for b in alg.basis() {
            for f in &flows {
                let moved = f * b * f.adjoint();
                if alg.residual(&moved) > SPAN_TOL {
                    extra.push(moved);
                }
            }
        }
        if extra.is_empty() {
            break;
        }
        extra.extend(alg.basis().iter().cloned());
        alg = generate_algebra(&extra, n)?;
    }
    Ok(alg)
}

/// The minimal sufficient subalgebra together with its certificates.
#[derive(Debug, Clone)]
pub struct MinimalAlgebra {
    pub algebra: MatrixStarAlgebra,
    /// Grid the returned algebra was generated on.
    pub grid: Vec<f64>,
    /// Number of refinements performed before the span stabilized.
    pub refinements: usize,
    /// Span distance between the last two generated algebras.
    pub stabilization_distance: f64,
    /// Largest modular-flow residual of the result.
    pub modular_deviation: f64,
    pub verdict: SufficiencyVerdict,
}

/// Generates the algebra of cocycles, refines the grid until the span stops
/// changing, and checks that the result is sufficient and modular invariant.
pub fn minimal_sufficient_algebra(exp: &Experiment, settings: &Settings) -> Result<MinimalAlgebra> {
    require_faithful(exp)?;
    let mut grid = settings.t_grid.clone();
    let mut current = cocycle_algebra(exp, &grid)?;
    let mut log = vec![format!(
        "grid of {} points: dimension {}",
        grid.len(),
        current.dimension()
    )];
    let mut refinements = 0;
    let distance = loop {
        let finer = refine_grid(&grid);
        let next = cocycle_algebra(exp, &finer)?;
        refinements += 1;
        let d = if next.dimension() == current.dimension() {
            next.span_distance(&current)
        } else {
            f64::INFINITY
        };
        log.push(format!(
            "grid of {} points: dimension {} (span distance {d:.3e})",
            finer.len(),
            next.dimension()
        ));
        if d <= SPAN_TOL {
            break d;
        }
        if refinements >= MAX_REFINEMENTS {
            return Err(Error::NonStabilizing { log: log.join("; ") });
        }
        grid = finer;
        current = next;
    };
    debug!("minimal sufficient algebra: {}", log.join("; "));
    let (_, modular_deviation) = modular_invariance_check(&current, exp.dominating(), &settings.t_grid)?;
    let verdict = subalgebra_sufficiency(exp, &current, settings)?;
    if !verdict.sufficient {
        return Err(Error::Numerical(format!(
            "generated algebra of dimension {} is not sufficient (Petz residual {:.3e})",
            current.dimension(),
            verdict.residual(super::PETZ_INVARIANCE).unwrap_or(f64::NAN)
        )));
    }
    Ok(MinimalAlgebra {
        algebra: current,
        grid,
        refinements,
        stabilization_distance: distance,
        modular_deviation,
        verdict,
    })
}

/// `D_θ = Σₙ s_n(θ) D_n(θ) ⊗ D^R_n` in the block basis of the minimal sufficient algebra.
#[derive(Debug, Clone, Serialize)]
pub struct SDecomposition {
    #[serde(skip)]
    pub structure: BlockStructure,
    pub blocks: Vec<(usize, usize)>,
    /// `s_n(θ)`, indexed `[θ][n]`.
    pub weights: Vec<Vec<f64>>,
    /// `D_n(θ)` on `H^L_n`, indexed `[θ][n]`. Blocks with zero weight hold `1/d_n`.
    #[serde(skip)]
    pub left_factors: Vec<Vec<CMat>>,
    /// `D^R_n` on `H^R_n`, read off from the reference state.
    #[serde(skip)]
    pub right_factors: Vec<CMat>,
    /// `z_n > 0` with `z = Σ z_n p_n` central.
    pub central: Vec<f64>,
    pub algebra_dimension: usize,
    pub reconstruction_residual: f64,
    /// Largest `|s_n(θ) − Tr D_θ p_n|`.
    pub weight_residual: f64,
    /// Largest deviation of a normalized right factor from `D^R_n` over `θ`.
    pub right_factor_deviation: f64,
    pub refinements: usize,
}

impl SDecomposition {
    /// `Σₙ s_n(θ) D_n(θ) ⊗ D^R_n` for the state with index `k`.
    pub fn reconstruct(&self, k: usize) -> CMat {
        let parts: Vec<(CMat, CMat)> = (0..self.blocks.len())
            .map(|n| {
                (
                    &self.left_factors[k][n] * real(self.weights[k][n]),
                    self.right_factors[n].clone(),
                )
            })
            .collect();
        self.structure.assemble(&parts)
    }
}

/// Density of `φ|_A` with respect to the trace of `⊕ M_{d_n}`: `⊕ Tr_R(p_n D p_n) ⊗ 1`.
fn canonical_density(bs: &BlockStructure, d: &CMat) -> CMat {
    let parts: Vec<(CMat, CMat)> = bs
        .blocks
        .iter()
        .enumerate()
        .map(|(n, &(_, m))| (bs.left_reduced(n, d), identity(m)))
        .collect();
    bs.assemble(&parts)
}

/// Decomposes the family along the minimal sufficient algebra.
pub fn s_decomposition(exp: &Experiment, settings: &Settings) -> Result<SDecomposition> {
    let minimal = minimal_sufficient_algebra(exp, settings)?;
    let bs = structure_decomposition(&minimal.algebra, &mut rng_from_seed(settings.seed))?;
    let omega = exp.dominating().matrix();

    let right_factors: Vec<CMat> = (0..bs.len())
        .map(|n| {
            let r = bs.right_reduced(n, omega);
            let tr = trace(&r).re;
            r / real(tr)
        })
        .collect();

    let mut weights = Vec::with_capacity(exp.len());
    let mut left_factors = Vec::with_capacity(exp.len());
    let mut weight_residual: f64 = 0.0;
    let mut right_dev: f64 = 0.0;
    for s in exp.states() {
        let mut ws = Vec::with_capacity(bs.len());
        let mut ls = Vec::with_capacity(bs.len());
        for (n, &(d, _)) in bs.blocks.iter().enumerate() {
            let left = bs.left_reduced(n, s.matrix());
            let w = trace(&left).re;
            let by_projection = crate::matrix::trace_product(s.matrix(), &bs.block_projections[n]).re;
            weight_residual = weight_residual.max((w - by_projection).abs());
            if w > WEIGHT_TOL {
                ls.push(left / real(w));
                let right = bs.right_reduced(n, s.matrix()) / real(w);
                right_dev = right_dev.max((right - &right_factors[n]).norm());
            } else {
                ls.push(identity(d) / real(d as f64));
            }
            ws.push(w.max(0.0));
        }
        weights.push(ws);
        left_factors.push(ls);
    }

    // z_n from D_ω = D_{S,ω} D_R z on each block, D_R the density of ω on the commutant
    let d_s_omega = canonical_density(&bs, omega);
    let d_r = {
        let parts: Vec<(CMat, CMat)> = bs
            .blocks
            .iter()
            .enumerate()
            .map(|(n, &(d, _))| (identity(d), bs.right_reduced(n, omega)))
            .collect();
        bs.assemble(&parts)
    };
    let product = &d_s_omega * &d_r;
    let central: Vec<f64> = (0..bs.len())
        .map(|n| {
            let pb = bs.block_of(n, &product);
            let ob = bs.block_of(n, omega);
            crate::matrix::hs_inner(&pb, &ob).re / pb.norm_squared()
        })
        .collect();

    let mut dec = SDecomposition {
        blocks: bs.blocks.clone(),
        structure: bs,
        weights,
        left_factors,
        right_factors,
        central,
        algebra_dimension: minimal.algebra.dimension(),
        reconstruction_residual: 0.0,
        weight_residual,
        right_factor_deviation: right_dev,
        refinements: minimal.refinements,
    };
    dec.reconstruction_residual = (0..exp.len())
        .map(|k| (dec.reconstruct(k) - exp.states()[k].matrix()).norm())
        .fold(0.0, f64::max);
    let tol = settings.tol.reconstruction;
    if dec.reconstruction_residual > tol || dec.right_factor_deviation > tol {
        return Err(Error::Reconstruction {
            residual: dec.reconstruction_residual.max(dec.right_factor_deviation),
            tolerance: tol,
        });
    }
    Ok(dec)
}

/// `D_θ = D_{θ,0} D_{ω₁} z` for a modular-invariant subalgebra.
#[derive(Debug, Clone, Serialize)]
pub struct FactorizationResult {
    /// `D_{θ,0}`, the density of `φ_θ|_A`, per state.
    #[serde(skip)]
    pub theta_factors: Vec<CMat>,
    /// `D_{ω₁}`, the density of `ω` on `A' ∩ M`.
    #[serde(skip)]
    pub commutant_factor: CMat,
    /// `z`, positive and central in `A' ∩ M`.
    #[serde(skip)]
    pub central_factor: CMat,
    /// Largest `‖D_θ − D_{θ,0} D_{ω₁} z‖_F`.
    pub product_residual: f64,
    /// Residual of `D_ω = D_{ω₀} D_{ω₁} z`, zero by construction up to rounding.
    pub omega_residual: f64,
    /// Largest commutator among the three factors.
    pub commutation_residual: f64,
    /// Distance of `z` from the center of `A'` and smallest eigenvalue of `z`.
    pub central_residual: f64,
    pub central_min_eigenvalue: f64,
    pub modular_deviation: f64,
    pub verdict: SufficiencyVerdict,
    /// Product identity and verdict agree.
    pub consistent: bool,
}

/// Builds the three factors and checks the product identity against the verdict.
pub fn factorization_check(
    exp: &Experiment,
    a: &MatrixStarAlgebra,
    settings: &Settings,
) -> Result<FactorizationResult> {
    require_faithful(exp)?;
    let omega = exp.dominating();
    let (invariant, deviation) = modular_invariance_check(a, omega, &settings.t_grid)?;
    if !invariant {
        return Err(Error::NotModularInvariant { deviation });
    }
    let comm = commutant(a);
    let d_omega0 = a.project(omega.matrix());
    let d_omega1 = comm.project(omega.matrix());
    let pair = &d_omega0 * &d_omega1;
    // D_{ω₀} ∈ A and D_{ω₁} ∈ A' commute, so their product is positive
    let z = pinv_on_support(&crate::matrix::hermitian_part(&pair))? * omega.matrix();
    let z = crate::matrix::hermitian_part(&z);
    let omega_residual = (&pair * &z - omega.matrix()).norm();
    let center = crate::algebra::center(&comm);
    let central_residual = center.residual(&z);
    let central_min_eigenvalue = crate::matrix::eigh(&z).eigenvalues.last().copied().unwrap_or(0.0);

    let mut theta_factors = Vec::with_capacity(exp.len());
    let mut product_residual: f64 = 0.0;
    let mut commutation: f64 = commutator(&d_omega1, &z).norm();
    for s in exp.states() {
        let d0 = a.project(s.matrix());
        let prod = &d0 * &d_omega1 * &z;
        product_residual = product_residual.max((prod - s.matrix()).norm());
        commutation = commutation
            .max(commutator(&d0, &d_omega1).norm())
            .max(commutator(&d0, &z).norm());
        theta_factors.push(d0);
    }
    let verdict = subalgebra_sufficiency(exp, a, settings)?;
    let identity_holds = product_residual <= settings.tol.reconstruction;
    Ok(FactorizationResult {
        theta_factors,
        commutant_factor: d_omega1,
        central_factor: z,
        product_residual,
        omega_residual,
        commutation_residual: commutation,
        central_residual,
        central_min_eigenvalue,
        modular_deviation: deviation,
        consistent: identity_holds == verdict.sufficient,
        verdict,
    })
}

/// Outcome of reading a factorization `D_θ = L_θ R` against the minimal sufficient algebra.
#[derive(Debug, Clone, Serialize)]
pub struct LFactorReport {
    pub algebra_dimension: usize,
    pub minimal_dimension: usize,
    /// `M_S ⊆ M_L` residual.
    pub contains_minimal: f64,
    pub sufficient: bool,
    pub petz_residual: f64,
    pub modular_deviation: f64,
    /// `R₀ = D_{S,ω}^{-1} L_ω` with `L_ω = D_ω R^{-1}`.
    #[serde(skip)]
    pub r0: CMat,
    /// Largest `‖L_θ − D_{S,θ} R₀‖_F`.
    pub factor_residual: f64,
    /// Largest `‖[R₀, D_{S,θ}]‖_F`.
    pub commutation_residual: f64,
    /// `R₀` lies in `M_L` (HS residual) and is positive.
    pub r0_membership: f64,
    pub r0_min_eigenvalue: f64,
}

/// Checks a user-supplied factorization `D_θ = L_θ R` and extracts `R₀` with `L_θ = D_{S,θ} R₀`.
pub fn decompose_l_factors(
    exp: &Experiment,
    l_factors: &[CMat],
    r: &CMat,
    settings: &Settings,
) -> Result<LFactorReport> {
    require_faithful(exp)?;
    let n = exp.dim();
    if l_factors.len() != exp.len() {
        return Err(Error::DimensionMismatch {
            expected: exp.len(),
            found: l_factors.len(),
        });
    }
    let tol = settings.tol.reconstruction;
    let r_state = crate::matrix::hermitian_part(r);
    let r_spec = crate::matrix::eigh(&r_state);
    if r_spec.rank(SUPPORT_CUTOFF) != n {
        return Err(Error::Precondition("R must have full support".into()));
    }
    for (l, s) in l_factors.iter().zip(exp.states()) {
        let c = commutator(l, r).norm();
        if c > tol * l.norm().max(1.0) {
            return Err(Error::Precondition(format!(
                "L_θ does not commute with R (residual {c:.3e})"
            )));
        }
        let p = (l * r - s.matrix()).norm();
        if p > tol {
            return Err(Error::Precondition(format!("D_θ ≠ L_θ R (residual {p:.3e})")));
        }
    }
    let m_l = generate_algebra(l_factors, n)?;
    let petz = petz_invariance_residual(exp, &m_l)?;
    let (_, modular_deviation) = modular_invariance_check(&m_l, exp.dominating(), &settings.t_grid)?;
    let minimal = minimal_sufficient_algebra(exp, settings)?;
    let bs = structure_decomposition(&minimal.algebra, &mut rng_from_seed(settings.seed))?;

    let r_inv = power_on_support(&r_state, -1.0, SUPPORT_CUTOFF)?;
    let l_omega = exp.dominating().matrix() * &r_inv;
    let d_s_omega = canonical_density(&bs, exp.dominating().matrix());
    let r0 = pinv_on_support(&crate::matrix::hermitian_part(&d_s_omega))? * l_omega;

    let mut factor_residual: f64 = 0.0;
    let mut commutation: f64 = 0.0;
    for (l, s) in l_factors.iter().zip(exp.states()) {
        let d_s = canonical_density(&bs, s.matrix());
        factor_residual = factor_residual.max((&d_s * &r0 - l).norm());
        commutation = commutation.max(commutator(&r0, &d_s).norm());
    }
    let r0_herm = crate::matrix::hermitian_part(&r0);
    Ok(LFactorReport {
        algebra_dimension: m_l.dimension(),
        minimal_dimension: minimal.algebra.dimension(),
        contains_minimal: m_l.containment_residual(&minimal.algebra),
        sufficient: petz <= settings.tol.sufficiency,
        petz_residual: petz,
        modular_deviation,
        r0_membership: m_l.residual(&r0),
        r0_min_eigenvalue: crate::matrix::eigh(&r0_herm).eigenvalues.last().copied().unwrap_or(0.0),
        r0,
        factor_residual,
        commutation_residual: commutation,
    })
}
