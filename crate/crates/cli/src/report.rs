//! Report types and their JSON and plain-text renderings.
//!
//! Reports are lossless: a decomposition carries its unitary, block factors
//! and the original states, so `qsuff verify` can re-check it without the
//! input file.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use qsuff_core::Settings;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::input::JsonMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub format_version: String,
    pub command: String,
    pub input: String,
    pub settings: Settings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subalgebra_dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub residuals: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<Decomposition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssa: Option<SsaReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expfam: Option<ExpFamReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl Report {
    pub fn new(command: &str, input: &Path, settings: &Settings) -> Self {
        Self {
            format_version: crate::input::FORMAT_VERSION.to_string(),
            command: command.to_string(),
            input: input.display().to_string(),
            settings: settings.clone(),
            subalgebra_dimension: None,
            verdict: None,
            residuals: BTreeMap::new(),
            decomposition: None,
            ssa: None,
            expfam: None,
            structure: None,
            notes: Vec::new(),
            timings: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timings {
    pub total_ms: f64,
}

/// `D_θ = U (⊕ₙ s_n(θ) D_n(θ) ⊗ D^R_n) U*`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decomposition {
    pub dim: usize,
    /// `(d_n, m_n)` in the order the blocks appear in `unitary`.
    pub blocks: Vec<(usize, usize)>,
    pub algebra_dimension: usize,
    /// Columns of block `n` are consecutive, ordered as `H^L_n ⊗ H^R_n`.
    pub unitary: JsonMatrix,
    pub right_factors: Vec<JsonMatrix>,
    pub central: Vec<f64>,
    pub states: Vec<DecomposedState>,
    pub reconstruction_residual: f64,
    pub weight_residual: f64,
    pub right_factor_deviation: f64,
    pub refinements: usize,
    /// Tolerance the residuals were accepted under; `verify` re-checks against it.
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecomposedState {
    pub label: String,
    pub weights: Vec<f64>,
    pub left_factors: Vec<JsonMatrix>,
    pub matrix: JsonMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsaReport {
    pub dims: (usize, usize, usize),
    /// `S(AB) + S(BC) − S(ABC) − S(B)`.
    pub gap_entropies: f64,
    /// `S(ω_ABC ‖ ω_A ⊗ ω_BC) − S(ω_AB ‖ ω_A ⊗ ω_B)`.
    pub gap_relative_entropies: f64,
    pub equality: bool,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<SsaStructureReport>,
    pub matrix: JsonMatrix,
}

/// `ω_ABC = Σₙ wₙ D^L_n ⊗ D^R_n` with `H_B = ⊕ₙ H^L_n ⊗ H^R_n` in the basis `b_unitary`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsaStructureReport {
    pub blocks: Vec<(usize, usize)>,
    pub b_unitary: JsonMatrix,
    pub components: Vec<SsaComponentReport>,
    pub algebra_dimension: usize,
    pub reconstruction_residual: f64,
    pub pure_state: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Value>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SsaComponentReport {
    pub weight: f64,
    /// Density on `H_A ⊗ H^L_n`.
    pub left: JsonMatrix,
    /// Density on `H^R_n ⊗ H_C`.
    pub right: JsonMatrix,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpFamReport {
    pub generators: usize,
    pub centered: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FitReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub target: Vec<f64>,
    pub xi: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub fn to_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

pub fn to_human(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "qsuff {} on {}", report.command, report.input);
    let _ = writeln!(
        out,
        "  seed {}  tolerance {}  borderline {}  grid points {}",
        report.settings.seed,
        sci(report.settings.tol.sufficiency),
        sci(report.settings.tol.borderline),
        report.settings.t_grid.len()
    );
    if let Some(d) = report.subalgebra_dimension {
        let _ = writeln!(out, "subalgebra dimension {d}");
    }
    if let Some(v) = &report.verdict {
        let status = v.get("status").and_then(Value::as_str).unwrap_or("?");
        let sufficient = v.get("sufficient").and_then(Value::as_bool).unwrap_or(false);
        let _ = writeln!(
            out,
            "verdict: {} ({status})",
            if sufficient { "sufficient" } else { "not sufficient" }
        );
        if let Some(Value::Object(per)) = v.get("per_condition") {
            let outcomes = v.get("outcomes");
            for (name, r) in per {
                let outcome = outcomes.and_then(|o| o.get(name)).and_then(Value::as_str).unwrap_or("");
                let _ = writeln!(
                    out,
                    "  {name:<32} {:>12}  {outcome}",
                    r.as_f64().map(sci).unwrap_or_default()
                );
            }
        }
        if let Some(Value::Object(skipped)) = v.get("skipped") {
            for (name, why) in skipped {
                let _ = writeln!(out, "  {name:<32} skipped: {}", why.as_str().unwrap_or(""));
            }
        }
    }
    for (name, r) in &report.residuals {
        let _ = writeln!(out, "  {name:<32} {:>12}", sci(*r));
    }
    if let Some(d) = &report.decomposition {
        let _ = writeln!(out, "blocks (d_n, m_n): {:?}", d.blocks);
        let _ = writeln!(out, "  algebra dimension {}", d.algebra_dimension);
        for s in &d.states {
            let w: Vec<String> = s.weights.iter().map(|x| format!("{x:.6}")).collect();
            let _ = writeln!(out, "  {:<12} weights [{}]", s.label, w.join(", "));
        }
        let _ = writeln!(out, "  reconstruction residual {}", sci(d.reconstruction_residual));
    }
    if let Some(s) = &report.ssa {
        let _ = writeln!(out, "dims (A, B, C): {:?}", s.dims);
        let _ = writeln!(
            out,
            "gap {} (relative entropy form {})",
            sci(s.gap_entropies),
            sci(s.gap_relative_entropies)
        );
        let _ = writeln!(out, "equality: {}", s.equality);
        if let Some(st) = &s.structure {
            let _ = writeln!(out, "  blocks of H_B (dim L, dim R): {:?}", st.blocks);
            let w: Vec<String> = st.components.iter().map(|c| format!("{:.6}", c.weight)).collect();
            let _ = writeln!(out, "  weights [{}]", w.join(", "));
            let _ = writeln!(out, "  reconstruction residual {}", sci(st.reconstruction_residual));
        }
    }
    if let Some(e) = &report.expfam {
        for f in &e.fits {
            let _ = writeln!(
                out,
                "target {:?} -> xi {:?} (residual {})",
                f.target,
                f.xi,
                sci(f.residual)
            );
        }
        if let Some(w) = &e.witness {
            let _ = writeln!(out, "witness: {w}");
        }
    }
    for n in &report.notes {
        let _ = writeln!(out, "note: {n}");
    }
    if let Some(t) = &report.timings {
        let _ = writeln!(out, "time {:.1} ms", t.total_ms);
    }
    out
}
