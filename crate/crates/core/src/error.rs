use thiserror::Error;

use crate::algebra::AlgebraStructure;
use crate::channel::ChoiClass;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (residual {residual:.3e}, allowed {allowed:.3e})")]
    NotHermitian { residual: f64, allowed: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("iterative solver failed to converge: {0}")]
    ConvergenceFailure(String),

    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),

    #[error("Kraus operators are not trace preserving (residual {residual:.3e}, allowed {allowed:.3e})")]
    NotTracePreserving { residual: f64, allowed: f64 },

    #[error("operation requires a channel, got a general completely positive map")]
    NotAChannel,

    #[error("empty Kraus list")]
    EmptyKraus,

    #[error("complement-adjoint classification {adjoint} disagrees with Choi classification {choi}")]
    InconsistentClassification { adjoint: String, choi: String },

    #[error("map is not unital and trace preserving (unital residual {unital:.3e}, trace residual {trace:.3e})")]
    NotUnitalOrNotTP { unital: f64, trace: f64 },

    #[error("verification failed: {0}")]
    VerificationFailure(String),

    #[error("algebra structure is inconsistent: {0}")]
    StructureInconsistency(String),

    #[error("generic element resampling exhausted after {0} attempts")]
    ResampleExhausted(usize),

    #[error("algebra is not multiplicity free: {0:?}")]
    NotMultiplicityFree(Vec<(usize, usize)>),

    #[error("witness vectors do not resolve the identity (residual {0:.3e})")]
    ResolutionFailure(f64),

    #[error("witness vector {index} maps to an operator of rank {rank}")]
    RankFailure { index: usize, rank: usize },

    #[error("channel is outside the projection-Choi class: {0}")]
    OutOfScope(ChoiClass),

    #[error("channel is not entanglement breaking: multiplicative domain structure {}", format_blocks(.0))]
    NotEntanglementBreaking(AlgebraStructure),

    #[error("certificate vectors are not orthonormal (residual {0:.3e})")]
    NotOrthonormal(f64),

    #[error("invalid correlation matrix: {0}")]
    InvalidCorrelation(String),

    #[error("vector {0} is not a unit vector")]
    NotUnitVector(usize),

    #[error("construction failed: {0}")]
    ConstructionFailure(String),

    #[error("malformed input: {0}")]
    Format(String),
}

fn format_blocks(s: &AlgebraStructure) -> String {
    let parts: Vec<String> = s
        .blocks
        .iter()
        .map(|b| format!("I_{} (x) M_{}", b.multiplicity, b.block_size))
        .collect();
    parts.join(" + ")
}
