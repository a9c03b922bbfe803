//! The versioned JSON experiment format and its validation.
//!
//! Matrices are row-major lists of `[re, im]` pairs. Structural problems are
//! reported with the JSON path and line of the offending value; semantic ones
//! (a state that is not a density matrix, a Kraus operator of the wrong shape)
//! with the field path.

use std::fmt;
use std::path::Path;

use qsuff_core::matrix::{c64, CMat};
use qsuff_core::{build_dominating_state, Channel, DensityMatrix, Experiment, HermitianOperator};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: &str = "1";

/// A matrix as a flat row-major list of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JsonMatrix(pub Vec<[f64; 2]>);

impl JsonMatrix {
    pub fn from_mat(m: &CMat) -> Self {
        let mut out = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                out.push([z.re, z.im]);
            }
        }
        Self(out)
    }

    pub fn to_mat(&self, rows: usize, cols: usize, field: &str) -> Result<CMat, InputError> {
        if self.0.len() != rows * cols {
            return Err(InputError::field(
                field,
                format!(
                    "expected {} entries for a {rows}x{cols} matrix, found {}",
                    rows * cols,
                    self.0.len()
                ),
            ));
        }
        if let Some(k) = self.0.iter().position(|z| !z[0].is_finite() || !z[1].is_finite()) {
            return Err(InputError::field(format!("{field}[{k}]"), "non-finite entry"));
        }
        Ok(CMat::from_fn(rows, cols, |i, j| {
            let z = self.0[i * cols + j];
            c64(z[0], z[1])
        }))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub label: String,
    pub matrix: JsonMatrix,
}

/// Which way the Kraus operators act.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    /// `σ(a) = Σ Vᵢ a Vᵢ*` is the unital map from `B(C^in_dim)` into `B(C^out_dim)`;
    /// the states live on `C^out_dim`.
    #[default]
    Heisenberg,
    /// `T(ρ) = Σ Vᵢ ρ Vᵢ*` is a trace-preserving map acting on the states, which
    /// live on `C^in_dim`.
    Schrodinger,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub kraus: Vec<JsonMatrix>,
    pub in_dim: usize,
    pub out_dim: usize,
    #[serde(default)]
    pub picture: Picture,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpFamEntry {
    #[serde(rename = "H")]
    pub h: JsonMatrix,
    pub generators: Vec<JsonMatrix>,
    /// Mean values `φ(aᵢ)` to fit, one list per target.
    #[serde(default)]
    pub targets: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub format_version: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor_dims: Option<Vec<usize>>,
    #[serde(default)]
    pub states: Vec<StateEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subalgebra_generators: Option<Vec<JsonMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expfam: Option<ExpFamEntry>,
}

/// Why an input file was rejected. Always maps to exit code 64.
#[derive(Debug, Clone, PartialEq)]
pub enum InputError {
    Io {
        path: String,
        message: String,
    },
    Syntax {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    Field {
        path: String,
        message: String,
    },
}

impl InputError {
    pub fn field(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self::Field {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io { path, message } => write!(f, "{path}: {message}"),
            Self::Syntax {
                path,
                line,
                column,
                message,
            } => write!(f, "line {line}, column {column}: at `{path}`: {message}"),
            Self::Field { path, message } => write!(f, "at `{path}`: {message}"),
        }
    }
}

impl std::error::Error for InputError {}

/// Deserializes JSON with the path of the failing value in the diagnostic.
pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        InputError::Syntax {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })
}

pub fn read_text(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let file: Self = parse_json(&read_text(path)?)?;
        file.check_header()?;
        Ok(file)
    }

    fn check_header(&self) -> Result<(), InputError> {
        if self.format_version != FORMAT_VERSION {
            return Err(InputError::field(
                "format_version",
                format!(
                    "unsupported version {:?}, expected {FORMAT_VERSION:?}",
                    self.format_version
                ),
            ));
        }
        if self.dim == 0 {
            return Err(InputError::field("dim", "must be positive"));
        }
        if let Some(td) = &self.tensor_dims {
            let product: usize = td.iter().product();
            if td.is_empty() || product != self.dim {
                return Err(InputError::field(
                    "tensor_dims",
                    format!("product {product} does not match dim {}", self.dim),
                ));
            }
        }
        Ok(())
    }

    /// The labeled states as density matrices on `C^dim`.
    pub fn densities(&self) -> Result<Vec<(String, DensityMatrix)>, InputError> {
        if self.states.is_empty() {
            return Err(InputError::field("states", "at least one state is required"));
        }
        self.states
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let field = format!("states[{k}].matrix");
                let m = s.matrix.to_mat(self.dim, self.dim, &field)?;
                let d = DensityMatrix::new(m).map_err(|e| InputError::field(&field, e))?;
                Ok((s.label.clone(), d))
            })
            .collect()
    }

    pub fn experiment(&self) -> Result<Experiment, InputError> {
        let states = self.densities()?;
        build_dominating_state(states, self.weights.clone()).map_err(|e| InputError::field("weights", e))
    }

    /// The channel as a unital map whose output side carries the states.
    pub fn channel(&self) -> Result<Channel, InputError> {
        let entry = self
            .channel
            .as_ref()
            .ok_or_else(|| InputError::field("channel", "this command needs a channel"))?;
        if entry.kraus.is_empty() {
            return Err(InputError::field(
                "channel.kraus",
                "at least one Kraus operator is required",
            ));
        }
        let state_side = match entry.picture {
            Picture::Heisenberg => entry.out_dim,
            Picture::Schrodinger => entry.in_dim,
        };
        if state_side != self.dim {
            return Err(InputError::field(
                "channel",
                format!(
                    "the states live on dimension {} but the channel acts on {state_side}",
                    self.dim
                ),
            ));
        }
        let kraus = entry
            .kraus
            .iter()
            .enumerate()
            .map(|(k, v)| v.to_mat(entry.out_dim, entry.in_dim, &format!("channel.kraus[{k}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let ch = Channel::from_kraus(kraus).map_err(|e| InputError::field("channel.kraus", e))?;
        match entry.picture {
            Picture::Heisenberg => Ok(ch),
            Picture::Schrodinger => {
                ch.require_trace_preserving()
                    .map_err(|e| InputError::field("channel.kraus", e))?;
                Ok(ch.schrodinger_dual())
            }
        }
    }

    pub fn subalgebra_generators(&self) -> Result<Vec<CMat>, InputError> {
        let gens = self
            .subalgebra_generators
            .as_ref()
            .ok_or_else(|| InputError::field("subalgebra_generators", "this command needs subalgebra generators"))?;
        gens.iter()
            .enumerate()
            .map(|(k, g)| g.to_mat(self.dim, self.dim, &format!("subalgebra_generators[{k}]")))
            .collect()
    }

    pub fn expfam(&self) -> Result<(HermitianOperator, Vec<HermitianOperator>, Vec<Vec<f64>>), InputError> {
        let e = self
            .expfam
            .as_ref()
            .ok_or_else(|| InputError::field("expfam", "this command needs an expfam block"))?;
        let herm = |m: &JsonMatrix, field: String| {
            let x = m.to_mat(self.dim, self.dim, &field)?;
            HermitianOperator::new(x).map_err(|err| InputError::field(&field, err))
        };
        let h = herm(&e.h, "expfam.H".into())?;
        let gens = e
            .generators
            .iter()
            .enumerate()
            .map(|(k, g)| herm(g, format!("expfam.generators[{k}]")))
            .collect::<Result<Vec<_>, _>>()?;
        for (k, t) in e.targets.iter().enumerate() {
            if t.len() != gens.len() {
                return Err(InputError::field(
                    format!("expfam.targets[{k}]"),
                    format!("expected {} mean values, found {}", gens.len(), t.len()),
                ));
            }
        }
        Ok((h, gens, e.targets.clone()))
    }

    /// `(d_A, d_B, d_C)` for the strong subadditivity analysis.
    pub fn tripartite_dims(&self) -> Result<(usize, usize, usize), InputError> {
        match self.tensor_dims.as_deref() {
            Some(&[a, b, c]) => Ok((a, b, c)),
            Some(other) => Err(InputError::field(
                "tensor_dims",
                format!("expected three factors, found {}", other.len()),
            )),
            None => Err(InputError::field(
                "tensor_dims",
                "this command needs tensor_dims [d_A, d_B, d_C]",
            )),
        }
    }
}
