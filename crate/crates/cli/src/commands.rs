//! One function per subcommand. Each returns the report and the exit code it
//! implies; failures come back as [`CliError`].

use std::fmt;
use std::path::Path;

use log::info;
use qsuff_core::divergence::expectation_real;
use qsuff_core::expfam::{
    commutative_family_check, expfam_channel_sufficiency, expfam_subalgebra_sufficiency, ExpFamilyVerdict,
    ExponentialFamily,
};
use qsuff_core::ssa::{ssa_equality_structure, ssa_gap, TripartiteState};
use qsuff_core::sufficiency::{
    channel_structure, channel_sufficiency, factorization_check, s_decomposition, subalgebra_sufficiency,
};
use qsuff_core::{generate_algebra, Error, Settings};
use serde::Serialize;
use serde_json::Value;

use crate::input::{ExperimentFile, InputError, JsonMatrix};
use crate::report::{
    DecomposedState, Decomposition, ExpFamReport, FitReport, Report, SsaComponentReport, SsaReport, SsaStructureReport,
};

pub const EXIT_SUFFICIENT: i32 = 0;
pub const EXIT_INSUFFICIENT: i32 = 1;
pub const EXIT_NON_STABILIZING: i32 = 3;
pub const EXIT_REGION_EXIT: i32 = 4;
pub const EXIT_ANALYSIS: i32 = 5;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
pub enum CliError {
    Input(InputError),
    Analysis(Error),
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => EXIT_USAGE,
            Self::Analysis(Error::NonStabilizing { .. }) => EXIT_NON_STABILIZING,
            Self::Analysis(Error::RegionExit { .. }) => EXIT_REGION_EXIT,
            // malformed numbers that only the analysis layer can see
            Self::Analysis(Error::DimensionMismatch { .. }) => EXIT_USAGE,
            Self::Analysis(_) => EXIT_ANALYSIS,
            Self::Output(_) => 74,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Input(e) => write!(f, "invalid input: {e}"),
            Self::Analysis(e) => write!(f, "analysis failed: {e}"),
            Self::Output(e) => write!(f, "cannot write report: {e}"),
        }
    }
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        Self::Input(e)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Analysis(e)
    }
}

pub type Outcome = Result<(Report, i32), CliError>;

fn value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("analysis results serialize")
}

pub fn check_subalgebra(path: &Path, settings: &Settings) -> Outcome {
    let file = ExperimentFile::load(path)?;
    let exp = file.experiment()?;
    let gens = file.subalgebra_generators()?;
    let a = generate_algebra(&gens, file.dim)?;
    info!("generated subalgebra of dimension {}", a.dimension());
    let verdict = subalgebra_sufficiency(&exp, &a, settings)?;
    let mut report = Report::new("check-subalgebra", path, settings);
    report.subalgebra_dimension = Some(a.dimension());
    match factorization_check(&exp, &a, settings) {
        Ok(f) => {
            report.residuals.insert("factorization_product".into(), f.product_residual);
            report.residuals.insert("factorization_modular_deviation".into(), f.modular_deviation);
            if !f.consistent {
                report.notes.push("factorization identity disagrees with the verdict".into());
            }
        }
        Err(Error::NotModularInvariant { deviation }) => report.notes.push(format!(
            "subalgebra is not invariant under the modular group of the reference state (deviation {deviation:.3e}); factorization not checked"
        )),
        Err(e) => report.notes.push(format!("factorization not checked: {e}")),
    }
    let code = verdict.status.exit_code();
    report.verdict = Some(value(&verdict));
    Ok((report, code))
}

pub fn check_channel(path: &Path, settings: &Settings) -> Outcome {
    let file = ExperimentFile::load(path)?;
    let exp = file.experiment()?;
    let ch = file.channel()?;
    let verdict = channel_sufficiency(&exp, &ch, settings)?;
    let mut report = Report::new("check-channel", path, settings);
    if verdict.sufficient {
        match channel_structure(&exp, &ch, settings) {
            Ok(s) => report.structure = Some(value(&s)),
            Err(e) => report.notes.push(format!("Kraus structure not available: {e}")),
        }
    }
    let code = verdict.status.exit_code();
    report.verdict = Some(value(&verdict));
    Ok((report, code))
}

pub fn decompose(path: &Path, settings: &Settings) -> Outcome {
    let file = ExperimentFile::load(path)?;
    let exp = file.experiment()?;
    let dec = s_decomposition(&exp, settings)?;
    let states = exp
        .labels()
        .iter()
        .zip(exp.states())
        .enumerate()
        .map(|(k, (label, s))| DecomposedState {
            label: label.clone(),
            weights: dec.weights[k].clone(),
            left_factors: dec.left_factors[k].iter().map(JsonMatrix::from_mat).collect(),
            matrix: JsonMatrix::from_mat(s.matrix()),
        })
        .collect();
    let mut report = Report::new("decompose", path, settings);
    report.decomposition = Some(Decomposition {
        dim: exp.dim(),
        blocks: dec.blocks.clone(),
        algebra_dimension: dec.algebra_dimension,
        unitary: JsonMatrix::from_mat(&dec.structure.unitary),
        right_factors: dec.right_factors.iter().map(JsonMatrix::from_mat).collect(),
        central: dec.central.clone(),
        states,
        reconstruction_residual: dec.reconstruction_residual,
        weight_residual: dec.weight_residual,
        right_factor_deviation: dec.right_factor_deviation,
        refinements: dec.refinements,
        tolerance: settings.tol.reconstruction,
    });
    Ok((report, 0))
}

pub fn ssa(path: &Path, settings: &Settings) -> Outcome {
    let file = ExperimentFile::load(path)?;
    let dims = file.tripartite_dims()?;
    let states = file.densities()?;
    if states.len() != 1 {
        return Err(InputError::field("states", format!("expected one state, found {}", states.len())).into());
    }
    let st = TripartiteState::new(states[0].1.clone(), dims)?;
    let gap = ssa_gap(&st)?;
    let mut report = Report::new("ssa", path, settings);
    let equality = gap.value() <= settings.tol.ssa_equality;
    let structure = if equality {
        let s = ssa_equality_structure(&st, settings)?;
        Some(SsaStructureReport {
            blocks: s.blocks.clone(),
            b_unitary: JsonMatrix::from_mat(&s.b_structure.unitary),
            components: s
                .components()
                .iter()
                .map(|c| SsaComponentReport {
                    weight: c.weight,
                    left: JsonMatrix::from_mat(c.left.matrix()),
                    right: JsonMatrix::from_mat(c.right.matrix()),
                })
                .collect(),
            algebra_dimension: s.algebra_dimension,
            reconstruction_residual: s.reconstruction_residual,
            pure_state: s.pure_state,
            verdict: s.verdict.as_ref().map(value),
            tolerance: settings.tol.ssa_reconstruction,
        })
    } else {
        None
    };
    report.ssa = Some(SsaReport {
        dims,
        gap_entropies: gap.entropy_form,
        gap_relative_entropies: gap.relative_entropy_form,
        equality,
        tolerance: settings.tol.ssa_equality,
        structure,
        matrix: JsonMatrix::from_mat(st.density().matrix()),
    });
    let code = if equality { EXIT_SUFFICIENT } else { EXIT_INSUFFICIENT };
    Ok((report, code))
}

fn load_family(file: &ExperimentFile) -> Result<(ExponentialFamily, Vec<Vec<f64>>), CliError> {
    let (h, gens, targets) = file.expfam()?;
    let fam = ExponentialFamily::new(h, gens).map_err(|e| InputError::field("expfam.generators", e))?;
    Ok((fam, targets))
}

pub fn expfam_fit(path: &Path, settings: &Settings, extra_targets: &[Vec<f64>]) -> Outcome {
    let file = ExperimentFile::load(path)?;
    let (fam, mut targets) = load_family(&file)?;
    if !extra_targets.is_empty() {
        targets = extra_targets.to_vec();
    }
    if targets.is_empty() {
        return Err(InputError::field("expfam.targets", "no targets given (use the file or --target)").into());
    }
    if let Some(t) = targets.iter().find(|t| t.len() != fam.len()) {
        return Err(InputError::field(
            "--target",
            format!("expected {} mean values, found {}", fam.len(), t.len()),
        )
        .into());
    }
    let mut report = Report::new("expfam fit", path, settings);
    // centering shifts each generator by a multiple of 1, which leaves the
    // states unchanged; only the targets move
    let (work, shift) = if fam.is_centered() {
        (fam.clone(), vec![0.0; fam.len()])
    } else {
        let shift = fam
            .generators()
            .iter()
            .map(|a| expectation_real(fam.base_state(), a))
            .collect();
        report
            .notes
            .push("generators centered at the base state before fitting".into());
        (fam.centered()?, shift)
    };
    let mut fits = Vec::with_capacity(targets.len());
    for t in &targets {
        let shifted: Vec<f64> = t.iter().zip(&shift).map(|(a, b)| a - b).collect();
        let m = work.moment_match(&shifted)?;
        fits.push(FitReport {
            target: t.clone(),
            xi: m.xi,
            residual: m.residual,
            iterations: m.iterations,
        });
    }
    report.expfam = Some(ExpFamReport {
        generators: fam.len(),
        centered: fam.is_centered(),
        fits,
        route: None,
        samples: vec![],
        witness: None,
    });
    Ok((report, 0))
}

pub fn expfam_check(path: &Path, settings: &Settings) -> Outcome {
    let file = ExperimentFile::load(path)?;
    let (fam, _) = load_family(&file)?;
    let mut report = Report::new("expfam check-sufficiency", path, settings);
    let (route, v): (&str, ExpFamilyVerdict) = match (&file.subalgebra_generators, &file.channel) {
        (Some(_), None) => {
            let a = generate_algebra(&file.subalgebra_generators()?, file.dim)?;
            report.subalgebra_dimension = Some(a.dimension());
            let v = expfam_subalgebra_sufficiency(&fam, &a, settings)?;
            if a.is_commutative(1e-9) {
                match commutative_family_check(&fam, &a, settings) {
                    Ok(c) => {
                        report.residuals.insert("closed_form".into(), c.closed_form_residual);
                        if !c.consistent {
                            report
                                .notes
                                .push("closed form disagrees with the generic verdict".into());
                        }
                    }
                    Err(e) => report.notes.push(format!("closed form not checked: {e}")),
                }
            }
            ("subalgebra", v)
        }
        (None, Some(_)) => ("channel", expfam_channel_sufficiency(&fam, &file.channel()?, settings)?),
        _ => {
            return Err(InputError::field(
                "subalgebra_generators",
                "give exactly one of subalgebra_generators or channel",
            )
            .into())
        }
    };
    let code = v.verdict.status.exit_code();
    report.verdict = Some(value(&v.verdict));
    report.expfam = Some(ExpFamReport {
        generators: fam.len(),
        centered: fam.is_centered(),
        fits: vec![],
        route: Some(route.to_string()),
        samples: v.samples.clone(),
        witness: v.witness.clone(),
    });
    Ok((report, code))
}

/// Re-checks every decomposition in a report from the numbers it contains.
pub fn verify(path: &Path, settings: &Settings) -> Outcome {
    let text = crate::input::read_text(path)?;
    let original: Report = crate::input::parse_json(&text)?;
    let mut report = Report::new("verify", path, settings);
    let mut checked = 0;
    let mut failed = Vec::new();
    if let Some(d) = &original.decomposition {
        let r = crate::verify::decomposition(d)?;
        report
            .residuals
            .insert("decomposition_reconstruction".into(), r.reconstruction);
        report.residuals.insert("decomposition_weights".into(), r.weights);
        report.residuals.insert("decomposition_unitary".into(), r.unitary);
        report.residuals.insert("decomposition_factors".into(), r.factors);
        if r.max() > d.tolerance {
            failed.push(format!(
                "decomposition residual {:.3e} exceeds {:.3e}",
                r.max(),
                d.tolerance
            ));
        }
        checked += 1;
    }
    if let Some(s) = original
        .ssa
        .as_ref()
        .and_then(|s| s.structure.as_ref().map(|st| (s, st)))
    {
        let r = crate::verify::ssa(s.0, s.1)?;
        report.residuals.insert("ssa_reconstruction".into(), r.reconstruction);
        report.residuals.insert("ssa_unitary".into(), r.unitary);
        report.residuals.insert("ssa_factors".into(), r.factors);
        report.residuals.insert("ssa_weights".into(), r.weights);
        if r.max() > s.1.tolerance {
            failed.push(format!(
                "SSA structure residual {:.3e} exceeds {:.3e}",
                r.max(),
                s.1.tolerance
            ));
        }
        checked += 1;
    }
    if checked == 0 {
        return Err(InputError::field("decomposition", "the report contains no decomposition to verify").into());
    }
    let code = if failed.is_empty() {
        EXIT_SUFFICIENT
    } else {
        EXIT_INSUFFICIENT
    };
    report.notes = failed;
    Ok((report, code))
}
