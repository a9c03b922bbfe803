//! Sufficiency of subalgebras and coarse-grainings for finite families of
//! quantum states.
//!
//! States are density matrices, coarse-grainings are completely positive maps
//! in Kraus form, and subalgebras are unital *-algebras of matrices. The
//! crate decides sufficiency through several equivalent criteria (transition
//! probability and relative entropy equality, Connes cocycle membership,
//! Petz recovery), builds the minimal sufficient subalgebra and the block
//! decomposition of the states it induces, fits quantum exponential
//! families, and recovers the structure of states that saturate strong
//! subadditivity.

pub mod algebra;
pub mod channel;
pub mod divergence;
pub mod error;
pub mod expfam;
pub mod matrix;
pub mod random;
pub mod settings;
pub mod ssa;
pub mod state;
pub mod sufficiency;

pub use algebra::{generate_algebra, BlockStructure, MatrixStarAlgebra};
pub use channel::Channel;
pub use error::{Error, Result};
pub use matrix::{CMat, HermitianOperator, SpectralData};
pub use settings::{Settings, Tolerances, DEFAULT_SEED};
pub use state::{build_dominating_state, DensityMatrix, Experiment};
