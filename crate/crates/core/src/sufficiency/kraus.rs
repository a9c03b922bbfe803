//! Kraus operators of sufficient channels in block form `V_i = Σₙ Uₙ ⊗ L_{i,n}`.

use serde::Serialize;

use super::{channel_sufficiency, minimal_sufficient_algebra, s_decomposition, SufficiencyVerdict, PETZ_RECOVERY};
use crate::algebra::{structure_decomposition, BlockStructure};
use crate::channel::Channel;
use crate::error::{Error, Result};
use crate::matrix::{commutator, eigh, identity, kron, matrix_unit, real, CMat, SUPPORT_CUTOFF};
use crate::random::rng_from_seed;
use crate::settings::Settings;
use crate::state::Experiment;

const MATCH_TOL: f64 = 1e-8;
const PRESERVATION_TOL: f64 = 1e-9;

/// One block of the decomposition: `Uₙ: K^L_n → H^L_n` and the components `L_{i,n}: K^R_n → H^R_n`.
#[derive(Debug, Clone, Serialize)]
pub struct KrausBlock {
    /// Index of the matching block on the output side.
    pub out_block: usize,
    pub left_dim: usize,
    pub in_multiplicity: usize,
    pub out_multiplicity: usize,
    #[serde(skip)]
    pub unitary: CMat,
    #[serde(skip)]
    pub components: Vec<CMat>,
    /// `‖α(qₙ) − pₙ‖_F`.
    pub projection_residual: f64,
    /// `‖Uₙ*Uₙ − 1‖_F`.
    pub unitary_residual: f64,
    /// Largest `‖(Uₙ* ⊗ 1) p_n V_i q_n − 1 ⊗ L_{i,n}‖_F`.
    pub component_residual: f64,
    /// `‖Σ L_{i,n} L_{i,n}* − 1‖_F`.
    pub unitality_residual: f64,
    /// Largest `‖[L_{i,n}, D^R_n]‖_F`; only for state-preserving channels.
    pub commutation_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KrausStructure {
    pub blocks: Vec<KrausBlock>,
    /// Frobenius distance between the Choi matrices of the channel and its reassembly.
    pub choi_distance: f64,
    /// Largest `‖p_m V_i q_n‖_F` between non-matching blocks.
    pub off_block_residual: f64,
    pub verdict: Option<SufficiencyVerdict>,
    #[serde(skip)]
    pub in_structure: BlockStructure,
    #[serde(skip)]
    pub out_structure: BlockStructure,
}

impl KrausStructure {
    /// Largest residual among all structural checks.
    pub fn max_residual(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| {
                [
                    b.projection_residual,
                    b.unitary_residual,
                    b.component_residual,
                    b.unitality_residual,
                    b.commutation_residual.unwrap_or(0.0),
                ]
            })
            .fold(self.choi_distance.max(self.off_block_residual), f64::max)
    }
}

/// `(1/d) Σ_k` of the diagonal `(k, k)` sub-blocks of a `d × d` grid of `r × c` blocks,
/// and the residual of `x` against `1_d ⊗ (that average)`.
fn split_identity_factor(x: &CMat, d: usize, r: usize, c: usize) -> (CMat, f64) {
    let mut avg = CMat::zeros(r, c);
    for k in 0..d {
        avg += x.view((k * r, k * c), (r, c));
    }
    avg /= real(d as f64);
    let residual = (x - kron(&identity(d), &avg)).norm();
    (avg, residual)
}

fn reassemble(ch: &Channel, in_bs: &BlockStructure, out_bs: &BlockStructure, blocks: &[KrausBlock]) -> Result<Channel> {
    let kraus = (0..ch.kraus().len())
        .map(|i| {
            let mut v = CMat::zeros(ch.out_dim(), ch.in_dim());
            for (n, b) in blocks.iter().enumerate() {
                let wk = in_bs.isometry(n);
                let wh = out_bs.isometry(b.out_block);
                v += wh * kron(&b.unitary, &b.components[i]) * wk.adjoint();
            }
            v
        })
        .collect();
    Channel::from_kraus(kraus)
}

fn off_block(ch: &Channel, in_bs: &BlockStructure, out_bs: &BlockStructure, pairs: &[usize]) -> f64 {
    let mut worst: f64 = 0.0;
    for v in ch.kraus() {
        for n in 0..in_bs.len() {
            for m in 0..out_bs.len() {
                if pairs[n] != m {
                    let part = out_bs.isometry(m).adjoint() * v * in_bs.isometry(n);
                    worst = worst.max(part.norm());
                }
            }
        }
    }
    worst
}

/// Block form of the Kraus operators of a sufficient channel.
///
/// The input-side blocks come from the algebra generated by the cocycles of
/// the pulled-back family, the output-side blocks from the minimal sufficient
/// algebra of the family itself. Fails with [`Error::Insufficient`] when the
/// channel is not sufficient, and with a numerical error when it is but the
/// structure cannot be read off.
pub fn channel_structure(exp: &Experiment, ch: &Channel, settings: &Settings) -> Result<KrausStructure> {
    let verdict = channel_sufficiency(exp, ch, settings)?;
    if !verdict.sufficient {
        return Err(Error::Insufficient {
            residual: verdict.residual(PETZ_RECOVERY).unwrap_or(f64::NAN),
        });
    }
    if !exp.is_faithful(SUPPORT_CUTOFF) {
        return Err(Error::NotFaithful {
            what: "reference state".into(),
        });
    }
    let pulled = exp.map_states(|s| ch.pull_state(s))?;
    if !pulled.is_faithful(SUPPORT_CUTOFF) {
        return Err(Error::NotFaithful {
            what: "pulled-back reference state".into(),
        });
    }
    let out_alg = minimal_sufficient_algebra(exp, settings)?.algebra;
    let in_alg = minimal_sufficient_algebra(&pulled, settings)?.algebra;
    let mut rng = rng_from_seed(settings.seed);
    let out_bs = structure_decomposition(&out_alg, &mut rng)?;
    let in_bs = structure_decomposition(&in_alg, &mut rng)?;
    if out_bs.len() != in_bs.len() {
        return Err(Error::Numerical(format!(
            "{} input blocks but {} output blocks",
            in_bs.len(),
            out_bs.len()
        )));
    }

    let mut blocks = Vec::with_capacity(in_bs.len());
    let mut pairs = Vec::with_capacity(in_bs.len());
    for n in 0..in_bs.len() {
        let image = ch.apply(&in_bs.block_projections[n])?;
        let (m, projection_residual) = out_bs
            .block_projections
            .iter()
            .enumerate()
            .map(|(m, p)| (m, (&image - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one block");
        if projection_residual > MATCH_TOL || pairs.contains(&m) {
            return Err(Error::Numerical(format!(
                "image of input block {n} is not a block projection (residual {projection_residual:.3e})"
            )));
        }
        let (d, mk) = in_bs.blocks[n];
        let (dh, mh) = out_bs.blocks[m];
        if d != dh {
            return Err(Error::Numerical(format!(
                "input block {n} has factor dimension {d}, its image has {dh}"
            )));
        }
        // α(a ⊗ 1) = U a U* ⊗ 1: read U column by column from the images of e_{i0}
        let image_of = |i: usize| -> Result<CMat> {
            let wk = in_bs.isometry(n);
            let x = &wk * kron(&matrix_unit(d, i, 0), &identity(mk)) * wk.adjoint();
            Ok(out_bs.left_reduced(m, &ch.apply(&x)?) / real(mh as f64))
        };
        let e00 = image_of(0)?;
        let u0 = eigh(&e00).eigenvectors.column(0).into_owned();
        let mut unitary = CMat::zeros(d, d);
        unitary.set_column(0, &u0);
        for i in 1..d {
            unitary.set_column(i, &(image_of(i)? * &u0));
        }
        let unitary_residual = (unitary.adjoint() * &unitary - identity(d)).norm();

        let wk = in_bs.isometry(n);
        let wh = out_bs.isometry(m);
        let lift = kron(&unitary.adjoint(), &identity(mh));
        let mut components = Vec::with_capacity(ch.kraus().len());
        let mut component_residual: f64 = 0.0;
        let mut sum = CMat::zeros(mh, mh);
        for v in ch.kraus() {
            let b = &lift * wh.adjoint() * v * &wk;
            let (l, res) = split_identity_factor(&b, d, mh, mk);
            component_residual = component_residual.max(res);
            sum += &l * l.adjoint();
            components.push(l);
        }
        blocks.push(KrausBlock {
            out_block: m,
            left_dim: d,
            in_multiplicity: mk,
            out_multiplicity: mh,
            unitary,
            components,
            projection_residual,
            unitary_residual,
            component_residual,
            unitality_residual: (sum - identity(mh)).norm(),
            commutation_residual: None,
        });
        pairs.push(m);
    }
    let rebuilt = reassemble(ch, &in_bs, &out_bs, &blocks)?;
    let choi_distance = (ch.choi_matrix().into_inner() - rebuilt.choi_matrix().into_inner()).norm();
    Ok(KrausStructure {
        off_block_residual: off_block(ch, &in_bs, &out_bs, &pairs),
        blocks,
        choi_distance,
        verdict: Some(verdict),
        in_structure: in_bs,
        out_structure: out_bs,
    })
}

/// Block form `V_i = Σₙ 1 ⊗ L_{i,n}` of a channel that leaves every state of the family invariant.
pub fn state_preserving_structure(exp: &Experiment, ch: &Channel, settings: &Settings) -> Result<KrausStructure> {
    if ch.in_dim() != ch.out_dim() || ch.out_dim() != exp.dim() {
        return Err(Error::DimensionMismatch {
            expected: exp.dim(),
            found: ch.in_dim(),
        });
    }
    let mut worst: f64 = 0.0;
    for s in exp.states() {
        worst = worst.max((ch.apply_dual(s.matrix())? - s.matrix()).norm());
    }
    if worst > PRESERVATION_TOL {
        return Err(Error::Precondition(format!(
            "channel does not preserve the family (residual {worst:.3e})"
        )));
    }
    let dec = s_decomposition(exp, settings)?;
    let bs = dec.structure.clone();
    let mut blocks = Vec::with_capacity(bs.len());
    for (n, &(d, m)) in bs.blocks.iter().enumerate() {
        let w = bs.isometry(n);
        let mut components = Vec::with_capacity(ch.kraus().len());
        let mut component_residual: f64 = 0.0;
        let mut commutation: f64 = 0.0;
        let mut sum = CMat::zeros(m, m);
        for v in ch.kraus() {
            let b = w.adjoint() * v * &w;
            let (l, res) = split_identity_factor(&b, d, m, m);
            component_residual = component_residual.max(res);
            commutation = commutation.max(commutator(&l, &dec.right_factors[n]).norm());
            sum += &l * l.adjoint();
            components.push(l);
        }
        blocks.push(KrausBlock {
            out_block: n,
            left_dim: d,
            in_multiplicity: m,
            out_multiplicity: m,
            unitary: identity(d),
            components,
            projection_residual: (ch.apply(&bs.block_projections[n])? - &bs.block_projections[n]).norm(),
            unitary_residual: 0.0,
            component_residual,
            unitality_residual: (sum - identity(m)).norm(),
            commutation_residual: Some(commutation),
        });
    }
    let pairs: Vec<usize> = (0..bs.len()).collect();
    let rebuilt = reassemble(ch, &bs, &bs, &blocks)?;
    let choi_distance = (ch.choi_matrix().into_inner() - rebuilt.choi_matrix().into_inner()).norm();
    Ok(KrausStructure {
        off_block_residual: off_block(ch, &bs, &bs, &pairs),
        blocks,
        choi_distance,
        verdict: None,
        in_structure: bs.clone(),
        out_structure: bs,
    })
}
