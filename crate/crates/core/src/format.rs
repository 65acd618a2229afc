//! JSON file formats.
//!
//! Complex numbers are `[re, im]` pairs. Matrices are row-major arrays of
//! rows, vectors are flat arrays of pairs.
//!
//! ```json
//! {"n": 2, "m": 2, "kraus": [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]]}
//! ```

use serde::{Deserialize, Serialize};

use crate::algebra::{AlgebraStructure, MatrixAlgebra};
use crate::certify::{CertificateResiduals, EbCertificate, SchurNormalForm};
use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::numerics::{c64, outer, ComplexMatrix, ComplexVector, ToleranceConfig};

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;
pub type JsonVector = Vec<JsonComplex>;

pub fn matrix_to_json(a: &ComplexMatrix) -> JsonMatrix {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix, nrows: usize, ncols: usize) -> Result<ComplexMatrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Format(format!("expected a {nrows}x{ncols} matrix")));
    }
    let m = ComplexMatrix::from_fn(nrows, ncols, |i, j| c64(rows[i][j][0], rows[i][j][1]));
    crate::numerics::check_finite(&m).map_err(|_| Error::Format("non-finite matrix entry".into()))?;
    Ok(m)
}

pub fn vector_to_json(v: &ComplexVector) -> JsonVector {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_json(v: &JsonVector) -> ComplexVector {
    ComplexVector::from_iterator(v.len(), v.iter().map(|p| c64(p[0], p[1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub n: usize,
    pub m: usize,
    pub kraus: Vec<JsonMatrix>,
}

impl ChannelFile {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        Self {
            n: ch.input_dim(),
            m: ch.output_dim(),
            kraus: ch.kraus().iter().map(matrix_to_json).collect(),
        }
    }

    /// Validates shapes and trace preservation; the error carries the residual.
    pub fn to_channel(&self, tol: &ToleranceConfig) -> Result<KrausChannel> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Format("dimensions must be positive".into()));
        }
        let kraus = self
            .kraus
            .iter()
            .enumerate()
            .map(|(i, k)| {
                matrix_from_json(k, self.m, self.n)
                    .map_err(|e| Error::Format(format!("Kraus operator {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        KrausChannel::new(kraus, tol)
    }
}

pub fn write_channel(ch: &KrausChannel) -> String {
    serde_json::to_string_pretty(&ChannelFile::from_channel(ch)).expect("channel serializes")
}

pub fn read_channel(text: &str, tol: &ToleranceConfig) -> Result<KrausChannel> {
    let file: ChannelFile =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("channel JSON: {e}")))?;
    file.to_channel(tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub r: usize,
    pub w: Vec<JsonVector>,
    pub v: Vec<JsonVector>,
    pub u: Vec<JsonVector>,
    pub eb_rank: usize,
    pub choi_rank: usize,
    pub residuals: CertificateResiduals,
}

impl CertificateFile {
    pub fn from_certificate(c: &EbCertificate) -> Self {
        Self {
            r: c.r,
            w: c.w.iter().map(vector_to_json).collect(),
            v: c.v.iter().map(vector_to_json).collect(),
            u: c.u.iter().map(vector_to_json).collect(),
            eb_rank: c.eb_rank,
            choi_rank: c.choi_rank,
            residuals: c.residuals,
        }
    }

    /// Rebuilds the certificate with `L_i = u_i v_i*`; run
    /// [`EbCertificate::verify`] before trusting it.
    pub fn to_certificate(&self) -> Result<EbCertificate> {
        if self.w.len() != self.r || self.v.len() != self.r || self.u.len() != self.r {
            return Err(Error::Format(format!("certificate lists must have length r = {}", self.r)));
        }
        let u: Vec<_> = self.u.iter().map(vector_from_json).collect();
        let v: Vec<_> = self.v.iter().map(vector_from_json).collect();
        let rank_one_kraus = u.iter().zip(&v).map(|(a, b)| outer(a, b)).collect();
        Ok(EbCertificate {
            r: self.r,
            w: self.w.iter().map(vector_from_json).collect(),
            v,
            u,
            rank_one_kraus,
            eb_rank: self.eb_rank,
            choi_rank: self.choi_rank,
            residuals: self.residuals,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraDump {
    pub ambient_dim: usize,
    pub basis: Vec<JsonMatrix>,
    /// `[i_k, j_k]` pairs.
    pub structure: Vec<[usize; 2]>,
    pub multiplicity_free: bool,
}

impl AlgebraDump {
    pub fn new(alg: &MatrixAlgebra, s: &AlgebraStructure) -> Self {
        Self {
            ambient_dim: alg.ambient_dim(),
            basis: alg.basis().iter().map(matrix_to_json).collect(),
            structure: s.pairs().into_iter().map(|(i, j)| [i, j]).collect(),
            multiplicity_free: s.multiplicity_free,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormDump {
    pub v: JsonMatrix,
    pub c: JsonMatrix,
    pub residual: f64,
}

impl NormalFormDump {
    pub fn new(nf: &SchurNormalForm) -> Self {
        Self { v: matrix_to_json(&nf.v), c: matrix_to_json(&nf.c), residual: nf.residual }
    }
}
