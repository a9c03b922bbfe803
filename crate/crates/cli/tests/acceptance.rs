//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use qsuff_core::divergence::{monotonicity_gap, relative_modular_audit, Divergence};
use qsuff_core::expfam::{
    commutative_family_check, expfam_channel_sufficiency, expfam_subalgebra_sufficiency, ExponentialFamily,
    EXPECTATION_FIXED, MODULAR_MEMBERSHIP, PREIMAGE, PULLED_BACK_FAMILY,
};
use qsuff_core::matrix::{
    c64, diag, eigh, identity, kron, real, resolvent_quadrature_check, trace_product, CMat, IntegralForm,
};
use qsuff_core::random::{self, block_family, rng_from_seed, BlockFamily, SeededRng};
use qsuff_core::ssa::{build_ssa_equality_state, ssa_equality_structure, ssa_gap, SsaComponent, TripartiteState};
use qsuff_core::sufficiency::{
    channel_structure, channel_sufficiency, factorization_check, minimal_sufficient_algebra, s_decomposition,
    state_preserving_structure, subalgebra_sufficiency, Outcome, Status, SufficiencyVerdict,
};
use qsuff_core::{Channel, DensityMatrix, Experiment, HermitianOperator, MatrixStarAlgebra, Settings};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sorted<T: Ord + Clone>(v: &[T]) -> Vec<T> {
    let mut v = v.to_vec();
    v.sort();
    v
}

fn state(m: CMat) -> DensityMatrix {
    DensityMatrix::new(m).expect("valid density")
}

/// Up to `max_blocks` blocks `(d, m)` with `Σ d m ≤ max_dim`, never a single `(1, m)`.
fn random_blocks(
    rng: &mut SeededRng,
    max_blocks: usize,
    max_d: usize,
    max_m: usize,
    max_dim: usize,
) -> Vec<(usize, usize)> {
    loop {
        let k = rng.random_range(1..=max_blocks);
        let b: Vec<(usize, usize)> = (0..k)
            .map(|_| (rng.random_range(1..=max_d), rng.random_range(1..=max_m)))
            .collect();
        let dim: usize = b.iter().map(|(d, m)| d * m).sum();
        if dim <= max_dim && (b.len() > 1 || b[0].0 > 1) {
            return b;
        }
    }
}

fn generic_family(n: usize, count: usize, rng: &mut SeededRng) -> Experiment {
    let states = (0..count)
        .map(|_| state(random::well_conditioned_density(n, 0.2, rng)))
        .collect();
    Experiment::from_states(states).unwrap()
}

/// `σ(⊕ₙ aₙ) = U (⊕ₙ aₙ ⊗ 1_{m_n}) U*` as a Kraus map from `B(⊕ C^{d_n})`.
fn block_embedding(fam: &BlockFamily) -> Channel {
    let n: usize = fam.blocks.iter().map(|(d, m)| d * m).sum();
    let k: usize = fam.blocks.iter().map(|(d, _)| d).sum();
    let mut kraus = Vec::new();
    let (mut out_off, mut in_off) = (0, 0);
    for &(d, m) in &fam.blocks {
        for j in 0..m {
            let mut v = CMat::zeros(n, k);
            for i in 0..d {
                v[(out_off + i * m + j, in_off + i)] = real(1.0);
            }
            kraus.push(&fam.unitary * v);
        }
        out_off += d * m;
        in_off += d;
    }
    Channel::from_kraus(kraus).unwrap()
}

fn all_outcomes(v: &SufficiencyVerdict, expected: Outcome) -> bool {
    v.outcomes.values().all(|o| *o == expected)
}

fn criterion_1() -> Check {
    let mut rng = rng_from_seed(101);
    let mut worst: f64 = f64::INFINITY;
    let mut count = 0;
    for d in [2usize, 3, 4, 6] {
        for _ in 0..500 {
            let d1 = state(random::density_of_rank(d, rng.random_range(1..=d), &mut rng));
            let d2 = state(random::density_of_rank(d, rng.random_range(1..=d), &mut rng));
            let d_out = rng.random_range(1..=d);
            let k = rng.random_range(d.div_ceil(d_out)..=d.div_ceil(d_out) + 2);
            let ch = random::cptp_channel(d, d_out, k, &mut rng);
            for which in [Divergence::Transition, Divergence::RelativeEntropy] {
                let gap = monotonicity_gap(&ch, &d1, &d2, which).map_err(|e| e.to_string())?;
                worst = worst.min(gap);
                count += 1;
            }
        }
    }
    ensure(worst >= -1e-9, || format!("smallest gap {worst:.3e}"))?;
    Ok(format!("{count} gaps, smallest {worst:.3e}"))
}

fn criterion_2() -> Check {
    let mut rng = rng_from_seed(102);
    let grid = Settings::default().positive_grid();
    let (mut norm, mut order, mut resolvent): (f64, f64, f64) = (0.0, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..50 {
        let d: usize = 2 + i % 5;
        let d_out = rng.random_range(2..=6);
        let k = rng.random_range(d.div_ceil(d_out)..=d.div_ceil(d_out) + 2);
        let ch = random::cptp_channel(d, d_out, k, &mut rng);
        let d1 = state(random::well_conditioned_density(d, 0.1, &mut rng));
        let d2 = state(random::well_conditioned_density(d, 0.1, &mut rng));
        let audit = relative_modular_audit(&ch, &d1, &d2, &grid).map_err(|e| e.to_string())?;
        norm = norm.max(audit.v_norm);
        order = order.max(audit.order_excess);
        resolvent = resolvent.max(audit.resolvent_excess);
    }
    ensure(norm <= 1.0 + 1e-10 && order <= 1e-9 && resolvent <= 1e-9, || {
        format!("‖V‖ {norm:.12}, order excess {order:.3e}, resolvent excess {resolvent:.3e}")
    })?;
    Ok(format!(
        "50 channels, ‖V‖ ≤ {norm:.12}, order excess {order:.3e}, resolvent excess {resolvent:.3e} on {} times",
        grid.len()
    ))
}

fn criterion_3() -> Check {
    let settings = Settings::default();
    let mut rng = rng_from_seed(103);
    let (mut verdicts, mut borderline, mut wrong) = (0usize, 0usize, Vec::new());
    let mut tally = |v: &SufficiencyVerdict, expected: bool, what: &str, wrong: &mut Vec<String>| {
        verdicts += 1;
        if v.status == Status::Borderline {
            borderline += 1;
        }
        let outcome = if expected { Outcome::Holds } else { Outcome::Fails };
        if v.sufficient != expected || (v.status != Status::Borderline && !all_outcomes(v, outcome)) {
            wrong.push(format!("{what}: {:?}", v.per_condition));
        }
    };
    for _ in 0..100 {
        let blocks = random_blocks(&mut rng, 3, 3, 3, 8);
        let fam = block_family(&blocks, 3, true, &mut rng);
        let exp = Experiment::from_states(fam.densities()).unwrap();
        let a = MatrixStarAlgebra::canonical(&blocks).conjugated(&fam.unitary);
        let v = subalgebra_sufficiency(&exp, &a, &settings).map_err(|e| e.to_string())?;
        tally(&v, true, &format!("subalgebra {blocks:?}"), &mut wrong);
        let v = channel_sufficiency(&exp, &block_embedding(&fam), &settings).map_err(|e| e.to_string())?;
        tally(&v, true, &format!("channel {blocks:?}"), &mut wrong);
    }
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let exp = generic_family(n, 3, &mut rng);
        let v = subalgebra_sufficiency(&exp, &MatrixStarAlgebra::diagonal(n), &settings).map_err(|e| e.to_string())?;
        tally(&v, false, &format!("generic subalgebra n={n}"), &mut wrong);
        let ch = random::unital_channel(n, 2, &mut rng);
        let v = channel_sufficiency(&exp, &ch, &settings).map_err(|e| e.to_string())?;
        tally(&v, false, &format!("generic channel n={n}"), &mut wrong);
    }
    let rate = borderline as f64 / verdicts as f64;
    ensure(wrong.is_empty() && rate < 0.01, || {
        format!(
            "{} disagreements, borderline rate {rate:.3}; first: {:?}",
            wrong.len(),
            wrong.first()
        )
    })?;
    Ok(format!("{verdicts} verdicts agree, borderline rate {rate:.3}"))
}

fn criterion_4() -> Check {
    let settings = Settings::default();
    let mut rng = rng_from_seed(104);
    let (mut recon, mut weight): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let blocks = random_blocks(&mut rng, 3, 3, 3, 12);
        let fam = block_family(&blocks, 3, true, &mut rng);
        let exp = Experiment::from_states(fam.densities()).unwrap();
        let dec = s_decomposition(&exp, &settings).map_err(|e| format!("{blocks:?}: {e}"))?;
        ensure(sorted(&dec.blocks) == sorted(&blocks), || {
            format!("constructed {blocks:?}, recovered {:?}", dec.blocks)
        })?;
        for (k, s) in exp.states().iter().enumerate() {
            recon = recon.max((dec.reconstruct(k) - s.matrix()).norm());
            for (n, p) in dec.structure.block_projections.iter().enumerate() {
                weight = weight.max((dec.weights[k][n] - trace_product(s.matrix(), p).re).abs());
            }
            // the same weights as the construction, up to the block order
            let found: Vec<f64> = sorted_f64(&dec.weights[k]);
            let built: Vec<f64> = sorted_f64(&fam.weights[k]);
            for (a, b) in found.iter().zip(&built) {
                weight = weight.max((a - b).abs());
            }
        }
    }
    ensure(recon <= 1e-8 && weight <= 1e-9, || {
        format!("reconstruction {recon:.3e}, weights {weight:.3e}")
    })?;
    Ok(format!("50 families, reconstruction {recon:.3e}, weights {weight:.3e}"))
}

fn sorted_f64(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn criterion_5() -> Check {
    let settings = Settings::default();
    let mut rng = rng_from_seed(105);
    let (mut sufficient_worst, mut insufficient_best): (f64, f64) = (0.0, f64::INFINITY);
    for _ in 0..50 {
        let blocks = random_blocks(&mut rng, 3, 3, 3, 8);
        let fam = block_family(&blocks, 3, true, &mut rng);
        let exp = Experiment::from_states(fam.densities()).unwrap();
        let a = MatrixStarAlgebra::canonical(&blocks).conjugated(&fam.unitary);
        let f = factorization_check(&exp, &a, &settings).map_err(|e| e.to_string())?;
        ensure(f.verdict.sufficient && f.product_residual <= 1e-8, || {
            format!("sufficient {blocks:?}: residual {:.3e}", f.product_residual)
        })?;
        sufficient_worst = sufficient_worst.max(f.product_residual);
    }
    for _ in 0..50 {
        // ω ± εX with ω in block form keeps A modular invariant; a generic X breaks
        // sufficiency unless A is everything
        let blocks = loop {
            let b = random_blocks(&mut rng, 3, 3, 3, 8);
            if b.len() > 1 || b[0].1 > 1 {
                break b;
            }
        };
        let fam = block_family(&blocks, 1, true, &mut rng);
        let omega = fam.states[0].clone();
        let n = omega.nrows();
        let x = random::hermitian(n, &mut rng);
        let x = &x - identity(n) * (x.trace() / real(n as f64));
        let floor = eigh(&omega).eigenvalues.last().copied().unwrap();
        let eps = 0.5 * floor / qsuff_core::matrix::op_norm(&x);
        let dx = &x * real(eps);
        let exp = Experiment::from_states(vec![state(&omega + &dx), state(&omega - &dx)]).unwrap();
        let a = MatrixStarAlgebra::canonical(&blocks).conjugated(&fam.unitary);
        let f = factorization_check(&exp, &a, &settings).map_err(|e| e.to_string())?;
        ensure(!f.verdict.sufficient && f.product_residual >= 1e-4, || {
            format!(
                "insufficient {blocks:?}: verdict {}, residual {:.3e}",
                f.verdict.sufficient, f.product_residual
            )
        })?;
        insufficient_best = insufficient_best.min(f.product_residual);
    }
    Ok(format!(
        "product residual ≤ {sufficient_worst:.3e} when sufficient, ≥ {insufficient_best:.3e} otherwise"
    ))
}

/// Puts `b` at `(r, c)` in an `rows × cols` zero matrix.
fn place(rows: usize, cols: usize, r: usize, c: usize, b: &CMat) -> CMat {
    let mut m = CMat::zeros(rows, cols);
    m.view_mut((r, c), b.shape()).copy_from(b);
    m
}

/// A block family and a channel with Kraus operators `U_fam (⊕ₙ Uₙ ⊗ L_{i,n}) Q*`.
fn structured_channel(rng: &mut SeededRng) -> (Experiment, Channel, usize) {
    let blocks = random_blocks(rng, 2, 3, 2, 8);
    let fam = block_family(&blocks, 3, true, rng);
    let exp = Experiment::from_states(fam.densities()).unwrap();
    let n = exp.dim();
    let m_in: Vec<usize> = blocks.iter().map(|_| rng.random_range(1..=2)).collect();
    let k_dim: usize = blocks.iter().zip(&m_in).map(|((d, _), mi)| d * mi).sum();
    let units: Vec<CMat> = blocks.iter().map(|&(d, _)| random::unitary(d, rng)).collect();
    // Lᵢ = Kᵢ* for a trace-preserving Kᵢ: C^m → C^{m_in}, so Σ Lᵢ Lᵢ* = 1
    let comps: Vec<Vec<CMat>> = blocks
        .iter()
        .zip(&m_in)
        .map(|(&(_, m), &mi)| {
            random::cptp_channel(m, mi, 2, rng)
                .kraus()
                .iter()
                .map(|k| k.adjoint())
                .collect()
        })
        .collect();
    let q = random::unitary(k_dim, rng);
    let kraus = (0..2)
        .map(|i| {
            let mut v = CMat::zeros(n, k_dim);
            let (mut ro, mut co) = (0, 0);
            for (b, &(d, m)) in blocks.iter().enumerate() {
                v += place(n, k_dim, ro, co, &kron(&units[b], &comps[b][i]));
                ro += d * m;
                co += d * m_in[b];
            }
            &fam.unitary * v * q.adjoint()
        })
        .collect();
    (exp, Channel::from_kraus(kraus).unwrap(), blocks.len())
}

/// Kraus operators `U_fam (⊕ₙ 1 ⊗ L_{i,n}) U_fam*` with `L_{i,n}` diagonal in the eigenbasis of `D^R_n`.
fn state_preserving_channel(rng: &mut SeededRng) -> (Experiment, Channel) {
    let blocks = random_blocks(rng, 2, 2, 3, 8);
    let fam = block_family(&blocks, 3, true, rng);
    let exp = Experiment::from_states(fam.densities()).unwrap();
    let n = exp.dim();
    let mut kraus = [CMat::zeros(n, n), CMat::zeros(n, n)];
    let mut off = 0;
    for (b, &(d, m)) in blocks.iter().enumerate() {
        let e = eigh(&fam.right[b]).eigenvectors;
        let split: Vec<Vec<f64>> = (0..m).map(|_| random::probability_vector(2, 0.2, rng)).collect();
        for (i, v) in kraus.iter_mut().enumerate() {
            let entries: Vec<_> = (0..m)
                .map(|j| {
                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                    c64(phase.cos(), phase.sin()) * split[j][i].sqrt()
                })
                .collect();
            let l = &e * CMat::from_fn(m, m, |r, c| if r == c { entries[r] } else { real(0.0) }) * e.adjoint();
            *v += place(n, n, off, off, &kron(&identity(d), &l));
        }
        off += d * m;
    }
    let kraus = kraus.iter().map(|v| &fam.unitary * v * fam.unitary.adjoint()).collect();
    (exp, Channel::from_kraus(kraus).unwrap())
}

fn criterion_6() -> Check {
    let settings = Settings::default();
    let mut rng = rng_from_seed(106);
    let mut choi: f64 = 0.0;
    let mut accepted_perturbations = 0;
    for _ in 0..30 {
        let (exp, ch, blocks) = structured_channel(&mut rng);
        let s = channel_structure(&exp, &ch, &settings).map_err(|e| e.to_string())?;
        ensure(s.choi_distance <= 1e-8 && s.blocks.len() == blocks, || {
            format!("{} blocks, Choi distance {:.3e}", s.blocks.len(), s.choi_distance)
        })?;
        choi = choi.max(s.choi_distance);

        let kraus: Vec<CMat> = ch
            .kraus()
            .iter()
            .map(|v| v + random::ginibre(v.nrows(), v.ncols(), &mut rng) * real(1e-2))
            .collect();
        let perturbed = Channel::from_kraus(kraus).unwrap().renormalize_unital().unwrap();
        if channel_structure(&exp, &perturbed, &settings).is_ok() {
            accepted_perturbations += 1;
        }
    }
    ensure(accepted_perturbations == 0, || {
        format!("{accepted_perturbations} perturbed channels accepted")
    })?;
    let mut commutation: f64 = 0.0;
    for _ in 0..30 {
        let (exp, ch) = state_preserving_channel(&mut rng);
        let s = state_preserving_structure(&exp, &ch, &settings).map_err(|e| e.to_string())?;
        for b in &s.blocks {
            commutation = commutation.max(b.commutation_residual.unwrap_or(f64::INFINITY));
        }
        ensure(s.max_residual() <= 1e-8, || {
            format!("state-preserving residual {:.3e}", s.max_residual())
        })?;
    }
    ensure(commutation <= 1e-8, || format!("commutation {commutation:.3e}"))?;
    Ok(format!(
        "30 channels, Choi distance ≤ {choi:.3e}; 30 perturbations rejected; commutators ≤ {commutation:.3e}"
    ))
}

fn random_family(n: usize, m: usize, rng: &mut SeededRng) -> ExponentialFamily {
    let h = HermitianOperator::from_hermitian_part(&random::hermitian(n, rng));
    let gens = (0..m)
        .map(|_| HermitianOperator::from_hermitian_part(&random::hermitian(n, rng)))
        .collect();
    ExponentialFamily::new(h, gens).unwrap()
}

/// The family at `count` points of radius up to `radius`, with the base state as reference.
fn sampled(fam: &ExponentialFamily, count: usize, radius: f64, rng: &mut SeededRng) -> Experiment {
    let mut states = vec![("base".to_string(), fam.base_state().clone())];
    for k in 0..count {
        let xi: Vec<f64> = (0..fam.len()).map(|_| rng.random_range(-radius..=radius)).collect();
        states.push((format!("s{k}"), fam.density_at(&xi).unwrap().state));
    }
    Experiment::with_reference(states, fam.base_state().clone()).unwrap()
}

fn criterion_7() -> Check {
    let settings = Settings::default();
    let mut rng = rng_from_seed(107);
    let h = 1e-5;
    let mut gradient: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(2..=4);
        let m = rng.random_range(1..=3);
        let fam = random_family(n, m, &mut rng);
        let xi: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let g = fam.log_partition(&xi).map_err(|e| e.to_string())?.gradient;
        let fd: Vec<f64> = (0..m)
            .map(|j| {
                let mut plus = xi.clone();
                let mut minus = xi.clone();
                plus[j] += h;
                minus[j] -= h;
                (fam.log_partition(&plus).unwrap().value - fam.log_partition(&minus).unwrap().value) / (2.0 * h)
            })
            .collect();
        let err: f64 = fd.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let size: f64 = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        gradient = gradient.max(err / size);
    }
    ensure(gradient <= 1e-6, || format!("gradient relative error {gradient:.3e}"))?;

    // the means at the fitted parameters reproduce the targets; ξ itself is reported
    let (mut inverse, mut drift): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let n = rng.random_range(2..=4);
        let m = rng.random_range(1..=3);
        let fam = random_family(n, m, &mut rng).centered().map_err(|e| e.to_string())?;
        let xi: Vec<f64> = (0..m).map(|_| rng.random_range(-0.5..=0.5)).collect();
        let target = fam.means(&xi).unwrap();
        let fit = fam.moment_match(&target).map_err(|e| e.to_string())?;
        let back = fam.means(&fit.xi).unwrap();
        for ((a, b), (x, y)) in back.iter().zip(&target).zip(fit.xi.iter().zip(&xi)) {
            inverse = inverse.max((a - b).abs());
            drift = drift.max((x - y).abs());
        }
    }
    ensure(inverse <= 1e-9, || {
        format!("means at the fit miss the targets by {inverse:.3e}")
    })?;

    let sz = HermitianOperator::new(diag(&[1.0, -1.0])).unwrap();
    let qubit = ExponentialFamily::new(HermitianOperator::new(CMat::zeros(2, 2)).unwrap(), vec![sz]).unwrap();
    let mut closed: f64 = 0.0;
    for k in -19..=19 {
        let theta = k as f64 * 0.05;
        let fit = qubit.moment_match(&[theta]).map_err(|e| e.to_string())?;
        closed = closed.max((fit.xi[0] - theta.atanh()).abs());
    }
    ensure(closed <= 1e-9, || format!("qubit closed form misses by {closed:.3e}"))?;

    let verdicts = expfam_verdicts(&settings, &mut rng)?;
    Ok(format!(
        "gradient {gradient:.3e}, inverse {inverse:.3e} (parameters within {drift:.3e}), atanh {closed:.3e}; {verdicts}"
    ))
}

/// Product base states with a generator on one factor; the family-specific
/// conditions against the generic tests on independently sampled points.
fn expfam_verdicts(settings: &Settings, rng: &mut SeededRng) -> Check {
    let holds = |v: &SufficiencyVerdict, keys: &[&str]| keys.iter().all(|k| v.outcomes[*k] == Outcome::Holds);
    let mut count = 0;
    for i in 0..40 {
        let (dl, dr) = (rng.random_range(2..=3), rng.random_range(2..=3));
        let left = i % 2 == 0;
        let rl = random::well_conditioned_density(dl, 0.2, rng);
        let rr = random::well_conditioned_density(dr, 0.2, rng);
        let omega = state(kron(&rl, &rr));
        let g = if left {
            kron(&random::hermitian(dl, rng), &identity(dr))
        } else {
            kron(&identity(dl), &random::hermitian(dr, rng))
        };
        let fam = ExponentialFamily::around(&omega, vec![HermitianOperator::from_hermitian_part(&g)]).unwrap();
        let independent = sampled(&fam, 4, 0.3, rng);

        let v = expfam_subalgebra_sufficiency(&fam, &MatrixStarAlgebra::left_factor(dl, dr), settings)
            .map_err(|e| e.to_string())?;
        let family_says = holds(&v.verdict, &[MODULAR_MEMBERSHIP, EXPECTATION_FIXED]);
        let generic = subalgebra_sufficiency(&independent, &MatrixStarAlgebra::left_factor(dl, dr), settings)
            .map_err(|e| e.to_string())?;
        ensure(family_says == generic.sufficient && generic.sufficient == left, || {
            format!(
                "subalgebra route: left {left}, family {family_says}, generic {}",
                generic.sufficient
            )
        })?;

        let ch = Channel::embedding_left(dl, dr);
        let v = expfam_channel_sufficiency(&fam, &ch, settings).map_err(|e| e.to_string())?;
        let family_says = holds(&v.verdict, &[PREIMAGE, PULLED_BACK_FAMILY]);
        let generic = channel_sufficiency(&independent, &ch, settings).map_err(|e| e.to_string())?;
        ensure(family_says == generic.sufficient && generic.sufficient == left, || {
            format!(
                "channel route: left {left}, family {family_says}, generic {}",
                generic.sufficient
            )
        })?;
        count += 2;
    }
    for _ in 0..10 {
        let n = rng.random_range(2..=5);
        let omega = state(diag(&random::probability_vector(n, 0.3, rng)));
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let fam = ExponentialFamily::around(&omega, vec![HermitianOperator::new(diag(&g)).unwrap()]).unwrap();
        let c = commutative_family_check(&fam, &MatrixStarAlgebra::diagonal(n), settings).map_err(|e| e.to_string())?;
        ensure(c.consistent && c.closed_form_holds && c.verdict.sufficient, || {
            format!(
                "commutative family: closed form residual {:.3e}",
                c.closed_form_residual
            )
        })?;
        count += 1;
    }
    Ok(format!("{count} verdicts agree"))
}

fn criterion_8() -> Check {
    let settings = Settings::default();
    let mut rng = rng_from_seed(108);
    let (mut lowest, mut discrepancy): (f64, f64) = (f64::INFINITY, 0.0);
    for _ in 0..1000 {
        let dims = (
            rng.random_range(1..=3),
            rng.random_range(1..=3),
            rng.random_range(1..=3),
        );
        let n = dims.0 * dims.1 * dims.2;
        let d = random::density_of_rank(n, rng.random_range(1..=n), &mut rng);
        let st = TripartiteState::new(state(d), dims).unwrap();
        let gap = ssa_gap(&st).map_err(|e| e.to_string())?;
        lowest = lowest.min(gap.value());
        discrepancy = discrepancy.max(gap.discrepancy());
    }
    ensure(lowest >= -1e-9 && discrepancy <= 1e-8, || {
        format!("smallest gap {lowest:.3e}, discrepancy {discrepancy:.3e}")
    })?;
    let (mut top_gap, mut recon): (f64, f64) = (0.0, 0.0);
    for _ in 0..50 {
        let (da, dc) = (rng.random_range(1..=2), rng.random_range(1..=2));
        let parts: Vec<(usize, usize)> = (0..rng.random_range(1..=2))
            .map(|_| (rng.random_range(1..=2), rng.random_range(1..=2)))
            .collect();
        let w = random::probability_vector(parts.len(), 0.3, &mut rng);
        let components: Vec<SsaComponent> = parts
            .iter()
            .zip(&w)
            .map(|(&(dl, dr), &weight)| SsaComponent {
                weight,
                left: state(random::well_conditioned_density(da * dl, 0.2, &mut rng)),
                right: state(random::well_conditioned_density(dr * dc, 0.2, &mut rng)),
            })
            .collect();
        let st = build_ssa_equality_state(&components, da, dc).map_err(|e| e.to_string())?;
        let st = st.rotate_b(&random::unitary(st.dims().1, &mut rng)).unwrap();
        let gap = ssa_gap(&st).map_err(|e| e.to_string())?;
        top_gap = top_gap.max(gap.value());
        discrepancy = discrepancy.max(gap.discrepancy());
        let s = ssa_equality_structure(&st, &settings).map_err(|e| format!("{parts:?}: {e}"))?;
        recon = recon.max(s.reconstruction_residual);
        if da > 1 && dc > 1 {
            ensure(sorted(&s.blocks) == sorted(&parts), || {
                format!("built {parts:?}, recovered {:?}", s.blocks)
            })?;
        }
    }
    ensure(top_gap <= 1e-8 && recon <= 1e-7 && discrepancy <= 1e-8, || {
        format!("equality gap {top_gap:.3e}, reconstruction {recon:.3e}, discrepancy {discrepancy:.3e}")
    })?;
    Ok(format!(
        "1000 gaps ≥ {lowest:.3e}; 50 equality cases, gap ≤ {top_gap:.3e}, reconstruction ≤ {recon:.3e}; forms within {discrepancy:.3e}"
    ))
}

fn random_partition(n: usize, rng: &mut SeededRng) -> Vec<Vec<usize>> {
    let k = rng.random_range(1..=n);
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        classes.entry(rng.random_range(0..k)).or_default().push(i);
    }
    classes.into_values().collect()
}

fn partition_algebra(n: usize, classes: &[Vec<usize>]) -> MatrixStarAlgebra {
    let projections: Vec<CMat> = classes
        .iter()
        .map(|c| {
            diag(
                &(0..n)
                    .map(|i| if c.contains(&i) { 1.0 } else { 0.0 })
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    MatrixStarAlgebra::span_of(n, &projections)
}

/// Sufficiency of a partition: the conditional law on each cell does not depend on θ.
fn partition_is_sufficient(probs: &[Vec<f64>], classes: &[Vec<usize>]) -> bool {
    classes.iter().all(|c| {
        let conditional = |p: &Vec<f64>| -> Vec<f64> {
            let mass: f64 = c.iter().map(|&i| p[i]).sum();
            c.iter().map(|&i| p[i] / mass).collect()
        };
        let first = conditional(&probs[0]);
        probs[1..]
            .iter()
            .all(|p| conditional(p).iter().zip(&first).all(|(a, b)| (a - b).abs() <= 1e-9))
    })
}

/// Cells of points with equal likelihood-ratio vectors `(p_θ(i) / p_0(i))_θ`.
fn ratio_classes(probs: &[Vec<f64>]) -> usize {
    let n = probs[0].len();
    let mut reps: Vec<usize> = Vec::new();
    for i in 0..n {
        let same = |j: usize| {
            probs
                .iter()
                .all(|p| (p[i] / probs[0][i] - p[j] / probs[0][j]).abs() <= 1e-9)
        };
        if !reps.iter().any(|&j| same(j)) {
            reps.push(i);
        }
    }
    reps.len()
}

fn criterion_9() -> Check {
    let settings = Settings::default();
    let mut rng = rng_from_seed(109);
    let mut positive = 0;
    for k in 0..50 {
        let n = rng.random_range(3..=6);
        let cells = random_partition(n, &mut rng);
        let within: Vec<Vec<f64>> = cells
            .iter()
            .map(|c| random::probability_vector(c.len(), 0.3, &mut rng))
            .collect();
        let probs: Vec<Vec<f64>> = (0..3)
            .map(|_| {
                let q = random::probability_vector(cells.len(), 0.3, &mut rng);
                let mut p = vec![0.0; n];
                for (c, cell) in cells.iter().enumerate() {
                    for (j, &i) in cell.iter().enumerate() {
                        p[i] = q[c] * within[c][j];
                    }
                }
                p
            })
            .collect();
        let exp = Experiment::from_states(probs.iter().map(|p| state(diag(p))).collect()).unwrap();
        let tested = if k % 2 == 0 {
            cells.clone()
        } else {
            random_partition(n, &mut rng)
        };
        let oracle = partition_is_sufficient(&probs, &tested);
        let v = subalgebra_sufficiency(&exp, &partition_algebra(n, &tested), &settings).map_err(|e| e.to_string())?;
        ensure(v.sufficient == oracle && v.status != Status::Borderline, || {
            format!("partition {tested:?}: oracle {oracle}, verdict {:?}", v.status)
        })?;
        positive += usize::from(oracle);
        let minimal = minimal_sufficient_algebra(&exp, &settings).map_err(|e| e.to_string())?;
        let cells_found = ratio_classes(&probs);
        ensure(minimal.algebra.dimension() == cells_found, || {
            format!(
                "minimal algebra of dimension {}, {cells_found} likelihood-ratio cells",
                minimal.algebra.dimension()
            )
        })?;
    }
    Ok(format!(
        "50 instances ({positive} sufficient) match the likelihood-ratio oracle"
    ))
}

fn criterion_10() -> Check {
    let mut rng = rng_from_seed(110);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let n = rng.random_range(1..=6);
        let mut values: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..=3.0))).collect();
        if k % 5 == 0 {
            values[0] = 1e-3;
            values[n - 1] = 1e3;
        }
        let u = random::unitary(n, &mut rng);
        let d = &u * diag(&values) * u.adjoint();
        for form in [IntegralForm::Sqrt, IntegralForm::Log] {
            worst = worst.max(resolvent_quadrature_check(&d, form).map_err(|e| e.to_string())?);
        }
    }
    ensure(worst <= 1e-6, || format!("quadrature error {worst:.3e}"))?;
    Ok(format!("100 quadratures within {worst:.3e}"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn qsuff(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qsuff"))
        .args(args)
        .env_remove("QSUFF_SEED")
        .output()
        .expect("binary runs")
}

fn criterion_11() -> Check {
    let runs: &[(&[&str], &str)] = &[
        (&["check-subalgebra"], "bipartite_product.json"),
        (&["check-subalgebra"], "generic_qubits.json"),
        (&["check-channel"], "bipartite_channel.json"),
        (&["decompose"], "two_blocks.json"),
        (&["decompose"], "single_state.json"),
        (&["decompose"], "classical.json"),
        (&["decompose"], "bipartite_product.json"),
        (&["ssa"], "ssa_product.json"),
        (&["ssa"], "ssa_equality.json"),
        (&["ssa"], "ssa_random.json"),
        (&["expfam", "fit"], "expfam_qubit.json"),
        (&["expfam", "check-sufficiency"], "expfam_product.json"),
    ];
    let dir = std::env::temp_dir().join(format!("qsuff-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut verified = 0;
    for (i, (cmd, file)) in runs.iter().enumerate() {
        let input = data(file);
        let mut args: Vec<&str> = cmd.to_vec();
        args.extend([input.to_str().unwrap(), "--seed", "42", "--no-timings"]);
        let a = qsuff(&args);
        let b = qsuff(&args);
        ensure(
            !a.stdout.is_empty() && a.stdout == b.stdout && a.status.code() == b.status.code(),
            || format!("{} {file} is not reproducible", cmd.join(" ")),
        )?;
        let report: serde_json::Value = serde_json::from_slice(&a.stdout).map_err(|e| e.to_string())?;
        let has_structure = report.get("decomposition").is_some() || report["ssa"].get("structure").is_some();
        if has_structure {
            let path = dir.join(format!("report{i}.json"));
            std::fs::write(&path, &a.stdout).map_err(|e| e.to_string())?;
            let v = qsuff(&["verify", path.to_str().unwrap()]);
            ensure(v.status.code() == Some(0), || {
                format!("verify rejected the report of {} {file}", cmd.join(" "))
            })?;
            verified += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    ensure(verified >= 6, || {
        format!("only {verified} reports carried a decomposition")
    })?;
    Ok(format!(
        "{} runs byte-identical, {verified} decompositions re-verified",
        runs.len()
    ))
}

const CRITERIA: [(&str, fn() -> Check); 11] = [
    ("monotonicity of P_A and relative entropy", criterion_1),
    ("relative modular operator audit", criterion_2),
    ("equality and sufficiency criteria agree", criterion_3),
    ("block decomposition round trip", criterion_4),
    ("factorization biconditional", criterion_5),
    ("Kraus structure of sufficient channels", criterion_6),
    ("exponential families", criterion_7),
    ("strong subadditivity", criterion_8),
    ("classical likelihood-ratio agreement", criterion_9),
    ("integral representations", criterion_10),
    ("CLI determinism and verify", criterion_11),
];

fn main() -> ExitCode {
    // `cargo test -- --list` and filters come through here too
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let start = Instant::now();
    let results: Vec<(Check, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = CRITERIA
            .iter()
            .map(|(_, f)| {
                s.spawn(move || {
                    let t = Instant::now();
                    let r = std::panic::catch_unwind(f).unwrap_or_else(|p| {
                        let msg = p
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_default();
                        Err(format!("panicked: {msg}"))
                    });
                    (r, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = 0;
    for (k, ((name, _), (result, secs))) in CRITERIA.iter().zip(&results).enumerate() {
        match result {
            Ok(detail) => println!("PASS criterion {:>2}: {name}: {detail} ({secs:.1} s)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name}: {detail} ({secs:.1} s)", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1} s",
        CRITERIA.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
