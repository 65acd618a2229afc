//! Analysis of finite-dimensional quantum channels given by Kraus operators.
//!
//! - [`numerics`]: complex dense linear algebra and tolerance handling
//! - [`channel`]: Kraus/Choi conversions, duals and complements
//! - [`algebra`]: multiplicative domains and *-algebra block structure
//! - [`certify`]: entanglement-breaking certificates for projection-Choi channels
//! - [`zoo`]: channel families used as fixtures
//! - [`format`]: JSON file formats

pub mod algebra;
pub mod certify;
pub mod channel;
pub mod error;
pub mod format;
pub mod numerics;
pub mod zoo;

pub use algebra::{multiplicative_domain, AlgebraStructure, MatrixAlgebra};
pub use certify::{certify, eb_rank, schur_normal_form, verify_eb_witness, EbCertificate, SchurNormalForm};
pub use channel::{ChoiClass, ChoiReport, ComplementAdjointClass, ComplementChannel, KrausChannel};
pub use error::{Error, Result};
pub use numerics::{ComplexMatrix, ComplexVector, ToleranceConfig, C64};
