//! Sufficiency of subalgebras and coarse-grainings, and the structures it implies.
//!
//! Every test evaluates several equivalent criteria independently. The Petz
//! recovery residual decides; the others are reported as witnesses and any
//! disagreement between them is surfaced as a borderline verdict.

mod decomposition;
mod kraus;

pub use decomposition::{
    decompose_l_factors, factorization_check, minimal_sufficient_algebra, s_decomposition, FactorizationResult,
    LFactorReport, MinimalAlgebra, SDecomposition,
};
pub use kraus::{channel_structure, state_preserving_structure, KrausBlock, KrausStructure};

use std::collections::BTreeMap;

use log::{debug, warn};
use serde::Serialize;

use crate::algebra::{fixed_point_algebra, multiplicative_domain, MatrixStarAlgebra};
use crate::channel::{petz_dual, Channel};
use crate::divergence::{relative_entropy, transition_probability};
use crate::error::{Error, Result};
use crate::matrix::{imaginary_power, power_on_support, sqrt_psd, support_projection, CMat, SUPPORT_CUTOFF};
use crate::settings::Settings;
use crate::state::{DensityMatrix, Experiment};

pub const PETZ_INVARIANCE: &str = "petz_invariance";
pub const COCYCLE_MEMBERSHIP: &str = "cocycle_membership";
pub const COCYCLE_RESTRICTION: &str = "cocycle_restriction";
pub const TRANSITION_PROBABILITY: &str = "transition_probability";
pub const RELATIVE_ENTROPY: &str = "relative_entropy";
pub const COCYCLE_INTERTWINING: &str = "cocycle_intertwining";
pub const PETZ_RECOVERY: &str = "petz_recovery";
pub const MULTIPLICATIVE_DOMAIN: &str = "multiplicative_domain";
pub const FIXED_POINTS: &str = "fixed_points";

/// Gap of the unit eigenvalue below which the fixed-point cross-check is skipped.
const FIXED_POINT_GAP: f64 = 1e-6;
/// Condition number above which a reference state counts as ill-conditioned.
const ILL_CONDITIONED: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Sufficient,
    Insufficient,
    Borderline,
}

impl Status {
    /// Exit code contract: 0 sufficient, 1 insufficient, 2 borderline.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Sufficient => 0,
            Status::Insufficient => 1,
            Status::Borderline => 2,
        }
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Holds,
    Fails,
    Borderline,
}

#[derive(Debug, Clone, Serialize)]
pub struct SufficiencyVerdict {
    /// Decided by the Petz residual alone.
    pub sufficient: bool,
    pub status: Status,
    /// Residual of each criterion; zero means the criterion holds exactly.
    pub per_condition: BTreeMap<String, f64>,
    pub outcomes: BTreeMap<String, Outcome>,
    /// Every state equals the reference state, so sufficiency is automatic.
    pub degenerate: bool,
    pub tolerance: f64,
    pub borderline_band: f64,
    /// Conditions that were not evaluated, with the reason.
    pub skipped: BTreeMap<String, String>,
}

impl SufficiencyVerdict {
    pub(crate) fn from_residuals(
        residuals: BTreeMap<String, f64>,
        authoritative: &str,
        settings: &Settings,
        degenerate: bool,
        skipped: BTreeMap<String, String>,
    ) -> Self {
        let tol = settings.tol.sufficiency;
        let band = settings.tol.borderline;
        let outcomes: BTreeMap<String, Outcome> = residuals
            .iter()
            .map(|(k, &r)| (k.clone(), classify(r, tol, band)))
            .collect();
        let decisive = outcomes[authoritative];
        let sufficient = decisive == Outcome::Holds;
        let any_borderline = outcomes.values().any(|o| *o == Outcome::Borderline);
        let disagree = outcomes.values().any(|o| *o != decisive);
        let status = if any_borderline || disagree {
            if disagree {
                warn!("sufficiency criteria disagree: {outcomes:?}");
            }
            Status::Borderline
        } else if sufficient {
            Status::Sufficient
        } else {
            Status::Insufficient
        };
        Self {
            sufficient,
            status,
            per_condition: residuals,
            outcomes,
            degenerate,
            tolerance: tol,
            borderline_band: band,
            skipped,
        }
    }

    pub fn residual(&self, condition: &str) -> Option<f64> {
        self.per_condition.get(condition).copied()
    }

    /// True when every evaluated criterion reached the same clear decision.
    pub fn is_consistent(&self) -> bool {
        self.status != Status::Borderline
    }
}

/// `r ≤ tol` holds, `r ≥ band` fails, anything between is borderline.
pub fn classify(r: f64, tol: f64, band: f64) -> Outcome {
    if r.is_nan() {
        Outcome::Borderline
    } else if r <= tol {
        Outcome::Holds
    } else if r >= band {
        Outcome::Fails
    } else {
        Outcome::Borderline
    }
}

/// Density of the restriction of a state to `A` with respect to the trace of
/// the ambient algebra: the trace-preserving conditional expectation of `D`.
pub fn restricted_density(a: &MatrixStarAlgebra, d: &DensityMatrix) -> Result<DensityMatrix> {
    DensityMatrix::from_noisy(a.project(d.matrix()))
}

/// Recovery `ρ ↦ D^{1/2} E(D)^{-1/2} E(ρ) E(D)^{-1/2} D^{1/2}` through `A`, the
/// Schrödinger form of the generalized conditional expectation. Inverses are
/// taken on supports, so `ω` need not be faithful.
pub(crate) struct SubalgebraRecovery<'a> {
    algebra: &'a MatrixStarAlgebra,
    sqrt_d: CMat,
    inv_sqrt_ed: CMat,
}

impl<'a> SubalgebraRecovery<'a> {
    pub(crate) fn new(algebra: &'a MatrixStarAlgebra, omega: &DensityMatrix) -> Result<Self> {
        let ed = algebra.project(omega.matrix());
        Ok(Self {
            algebra,
            sqrt_d: sqrt_psd(omega)?,
            inv_sqrt_ed: power_on_support(&crate::matrix::hermitian_part(&ed), -0.5, SUPPORT_CUTOFF)?,
        })
    }

    pub(crate) fn recover(&self, rho: &CMat) -> CMat {
        let e = self.algebra.project(rho);
        &self.sqrt_d * &self.inv_sqrt_ed * e * &self.inv_sqrt_ed * &self.sqrt_d
    }
}

/// Largest Petz residual `‖R(D_θ) − D_θ‖_F` of `A` over the family.
pub fn petz_invariance_residual(exp: &Experiment, a: &MatrixStarAlgebra) -> Result<f64> {
    let rec = SubalgebraRecovery::new(a, exp.dominating())?;
    Ok(exp
        .states()
        .iter()
        .map(|s| (rec.recover(s.matrix()) - s.matrix()).norm())
        .fold(0.0, f64::max))
}

fn check_algebra_dims(exp: &Experiment, a: &MatrixStarAlgebra) -> Result<()> {
    if a.ambient_dim() != exp.dim() {
        return Err(Error::DimensionMismatch {
            expected: exp.dim(),
            found: a.ambient_dim(),
        });
    }
    Ok(())
}

fn warn_if_ill_conditioned(omega: &DensityMatrix) {
    let k = omega.condition_number(SUPPORT_CUTOFF);
    if k > ILL_CONDITIONED {
        warn!("reference state has condition number {k:.3e}; cocycle residuals may lose accuracy");
    }
}

/// Decides whether `A` is sufficient for the family.
///
/// Evaluates the Petz invariance of the states under the generalized
/// conditional expectation, membership of the cocycles in `A`, equality of
/// the cocycles with those of the restricted states, and equality of the
/// transition probability and relative entropy with their restricted values.
/// When `ω` is not faithful, cocycles are compared after compressing `A` by
/// the support projection of `ω`.
pub fn subalgebra_sufficiency(
    exp: &Experiment,
    a: &MatrixStarAlgebra,
    settings: &Settings,
) -> Result<SufficiencyVerdict> {
    check_algebra_dims(exp, a)?;
    let omega = exp.dominating();
    warn_if_ill_conditioned(omega);
    let degenerate = exp.is_degenerate(settings.tol.sufficiency * 1e-3);
    let faithful = omega.is_faithful(SUPPORT_CUTOFF);
    let omega0 = restricted_density(a, omega)?;

    let petz = petz_invariance_residual(exp, a)?;

    // cocycles are compared inside p A p, the image of the compression q A q → p M p
    let p = support_projection(omega)?;
    let compressed: MatrixStarAlgebra;
    let target = if faithful {
        a
    } else {
        let mats: Vec<CMat> = a.basis().iter().map(|b| &p * b * &p).collect();
        compressed = MatrixStarAlgebra::span_of(a.ambient_dim(), &mats);
        &compressed
    };

    let mut membership: f64 = 0.0;
    let mut restriction: f64 = 0.0;
    let mut transition: f64 = 0.0;
    let mut entropy: f64 = 0.0;
    let omega_neg: Vec<CMat> = settings
        .t_grid
        .iter()
        .map(|&t| imaginary_power(omega, -t))
        .collect::<Result<_>>()?;
    let omega0_neg: Vec<CMat> = settings
        .t_grid
        .iter()
        .map(|&t| imaginary_power(&omega0, -t))
        .collect::<Result<_>>()?;
    for s in exp.states() {
        let s0 = restricted_density(a, s)?;
        for (k, &t) in settings.t_grid.iter().enumerate() {
            let u = imaginary_power(s, t)? * &omega_neg[k];
            let u0 = imaginary_power(&s0, t)? * &omega0_neg[k];
            membership = membership.max(target.residual(&u));
            let u0 = if faithful { u0 } else { &p * u0 * &p };
            restriction = restriction.max((&u - u0).norm());
        }
        transition = transition.max(transition_probability(&s0, &omega0)? - transition_probability(s, omega)?);
        let full = relative_entropy(s, omega)?;
        let reduced = relative_entropy(&s0, &omega0)?;
        entropy = entropy.max(full - reduced);
    }
    let mut residuals = BTreeMap::new();
    residuals.insert(PETZ_INVARIANCE.to_string(), petz);
    residuals.insert(COCYCLE_MEMBERSHIP.to_string(), membership);
    residuals.insert(COCYCLE_RESTRICTION.to_string(), restriction);
    residuals.insert(TRANSITION_PROBABILITY.to_string(), transition.max(0.0));
    residuals.insert(RELATIVE_ENTROPY.to_string(), entropy.max(0.0));
    debug!("subalgebra sufficiency residuals: {residuals:?}");
    Ok(SufficiencyVerdict::from_residuals(
        residuals,
        PETZ_INVARIANCE,
        settings,
        degenerate,
        BTreeMap::new(),
    ))
}

/// A channel restricted to the supports of `ω` and `ω∘σ`, with the family
/// compressed to match. Both reference states are faithful afterwards.
#[derive(Debug, Clone)]
pub struct CompressedChannelProblem {
    pub experiment: Experiment,
    pub channel: Channel,
    /// Isometry onto `supp ω` (output side).
    pub out_support: CMat,
    /// Isometry onto `supp ω∘σ` (input side).
    pub in_support: CMat,
}

pub fn compress_channel_problem(exp: &Experiment, ch: &Channel) -> Result<CompressedChannelProblem> {
    if ch.out_dim() != exp.dim() {
        return Err(Error::DimensionMismatch {
            expected: exp.dim(),
            found: ch.out_dim(),
        });
    }
    ch.require_unital()?;
    let (cexp, wl) = exp.compress(SUPPORT_CUTOFF)?;
    let pulled = ch.apply_dual(exp.dominating().matrix())?;
    let wr = DensityMatrix::from_noisy(pulled)?
        .spectrum()
        .support_isometry(SUPPORT_CUTOFF);
    let cch = ch.compress(&wl, &wr)?;
    if !cch.is_unital() {
        return Err(Error::Precondition(format!(
            "compression to the supports of the reference states is not unital (residual {:.3e})",
            cch.unitality_residual()
        )));
    }
    Ok(CompressedChannelProblem {
        experiment: cexp,
        channel: cch,
        out_support: wl,
        in_support: wr,
    })
}

/// The image `σ(A)` of a subalgebra on which `σ` is multiplicative.
fn image_algebra(ch: &Channel, a: &MatrixStarAlgebra) -> Result<MatrixStarAlgebra> {
    let mats: Vec<CMat> = a.basis().iter().map(|b| ch.apply(b)).collect::<Result<_>>()?;
    MatrixStarAlgebra::from_spanning_set(ch.out_dim(), &mats)
}

/// Decides whether the unital coarse-graining `σ: B(C^k) → B(C^n)` is
/// sufficient for a family on `B(C^n)`.
///
/// Evaluates the Petz recovery of every state, the intertwining of the
/// cocycles, the transition probability and relative entropy equalities,
/// and sufficiency of `σ(N_σ)`. The fixed-point subalgebra is added as a
/// cross-check when the unit eigenvalue of `σ*_ω∘σ` is well separated.
pub fn channel_sufficiency(exp: &Experiment, ch: &Channel, settings: &Settings) -> Result<SufficiencyVerdict> {
    let problem = compress_channel_problem(exp, ch)?;
    let exp = &problem.experiment;
    let ch = &problem.channel;
    let omega = exp.dominating();
    warn_if_ill_conditioned(omega);
    let degenerate = exp.is_degenerate(settings.tol.sufficiency * 1e-3);
    let omega0 = ch.pull_state(omega)?;
    let recovery = petz_dual(ch, omega)?;

    let mut petz: f64 = 0.0;
    let mut intertwining: f64 = 0.0;
    let mut transition: f64 = 0.0;
    let mut entropy: f64 = 0.0;
    let omega_neg: Vec<CMat> = settings
        .t_grid
        .iter()
        .map(|&t| imaginary_power(omega, -t))
        .collect::<Result<_>>()?;
    let omega0_neg: Vec<CMat> = settings
        .t_grid
        .iter()
        .map(|&t| imaginary_power(&omega0, -t))
        .collect::<Result<_>>()?;
    for s in exp.states() {
        let s0 = ch.pull_state(s)?;
        let back = recovery.apply_dual(s0.matrix())?;
        petz = petz.max((back - s.matrix()).norm());
        for (k, &t) in settings.t_grid.iter().enumerate() {
            let v = imaginary_power(s, t)? * &omega_neg[k];
            let u = imaginary_power(&s0, t)? * &omega0_neg[k];
            intertwining = intertwining.max((ch.apply(&u)? - v).norm());
        }
        transition = transition.max(transition_probability(&s0, &omega0)? - transition_probability(s, omega)?);
        entropy = entropy.max(relative_entropy(s, omega)? - relative_entropy(&s0, &omega0)?);
    }

    let domain = multiplicative_domain(ch)?;
    let image = image_algebra(ch, &domain)?;
    let domain_residual = petz_invariance_residual(exp, &image)?;

    let mut residuals = BTreeMap::new();
    let mut skipped = BTreeMap::new();
    residuals.insert(PETZ_RECOVERY.to_string(), petz);
    residuals.insert(COCYCLE_INTERTWINING.to_string(), intertwining);
    residuals.insert(TRANSITION_PROBABILITY.to_string(), transition.max(0.0));
    residuals.insert(RELATIVE_ENTROPY.to_string(), entropy.max(0.0));
    residuals.insert(MULTIPLICATIVE_DOMAIN.to_string(), domain_residual);

    let fixed = fixed_point_algebra(ch, Some(&recovery))?;
    if fixed.spectral_gap > FIXED_POINT_GAP {
        let image = image_algebra(ch, &fixed.algebra)?;
        residuals.insert(FIXED_POINTS.to_string(), petz_invariance_residual(exp, &image)?);
    } else {
        skipped.insert(
            FIXED_POINTS.to_string(),
            format!("unit eigenspace not separated (gap {:.3e})", fixed.spectral_gap),
        );
    }
    debug!("channel sufficiency residuals: {residuals:?}");
    Ok(SufficiencyVerdict::from_residuals(
        residuals,
        PETZ_RECOVERY,
        settings,
        degenerate,
        skipped,
    ))
}
