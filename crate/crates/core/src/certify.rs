//! Entanglement-breaking certificates for channels whose Choi matrix is a projection.
//!
//! The pipeline reduces the channel to its canonical minimal Kraus set
//! `{K_1..K_d}`, forms the complement adjoint `Φ^{C†}(E_ij) = K_i* K_j`,
//! computes its multiplicative domain and reads off the block structure. A
//! multiplicity-free domain contains `d` rank-one projections `w_i w_i*`
//! summing to the identity; each is mapped to a rank-one `v_i v_i*`, and
//! `L_i = K(w̄_i) = Σ_j conj(w_ji) K_j` is a rank-one Kraus set of length `d`.
//! A domain with some multiplicity `i_k ≥ 2` refutes entanglement breaking.

use serde::{Deserialize, Serialize};

use crate::algebra::{multiplicative_domain, AlgebraStructure};
use crate::channel::{ChoiClass, KrausChannel};
use crate::error::{Error, Result};
use crate::numerics::{
    canonical_phase, frobenius, hermitian_eig, identity, matrix_unit, numerical_rank, outer,
    partial_transpose_second, ComplexMatrix, ComplexVector, ToleranceConfig,
};
use crate::zoo::{swap_operator, CorrelationMatrix};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateResiduals {
    /// `‖Σ w_i w_i* − I_d‖_F`
    pub resolution: f64,
    /// `max_i ‖Φ^{C†}(w_i w_i*) − v_i v_i*‖_F`
    pub adjoint_image: f64,
    /// `‖Σ v_i v_i* − I_n‖_F`
    pub trace_preservation: f64,
    /// `max_i |‖u_i‖ − 1|`
    pub unit_u: f64,
    /// `max_i ‖L_i − u_i v_i*‖_F`
    pub factorization: f64,
    /// `‖J(Σ L_i · L_i*) − J(Φ)‖_F`
    pub channel_choi: f64,
    /// `max_i |‖w_i‖ − ‖v_i‖|`
    pub norm_equality: f64,
}

impl CertificateResiduals {
    pub fn max(&self) -> f64 {
        [
            self.resolution,
            self.adjoint_image,
            self.trace_preservation,
            self.unit_u,
            self.factorization,
            self.channel_choi,
            self.norm_equality,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Rank-one Kraus decomposition `Φ(X) = Σ L_i X L_i*`, `L_i = u_i v_i*`, with
/// the witness vectors `w_i` it came from.
#[derive(Debug, Clone)]
pub struct EbCertificate {
    pub r: usize,
    pub w: Vec<ComplexVector>,
    pub v: Vec<ComplexVector>,
    pub u: Vec<ComplexVector>,
    pub rank_one_kraus: Vec<ComplexMatrix>,
    pub eb_rank: usize,
    pub choi_rank: usize,
    pub residuals: CertificateResiduals,
}

impl EbCertificate {
    /// Re-check every certificate condition against `channel`.
    ///
    /// The complement adjoint is evaluated through the Kraus operators of the
    /// materialized complement, not through `K(w̄)` as in the construction.
    pub fn verify(&self, channel: &KrausChannel, tol: &ToleranceConfig) -> Result<CertificateResiduals> {
        let comp = channel.complement(tol)?;
        let (n, d) = (channel.input_dim(), comp.d);
        let lens_ok = self.w.len() == self.r
            && self.v.len() == self.r
            && self.u.len() == self.r
            && self.rank_one_kraus.len() == self.r;
        if !lens_ok || self.w.iter().any(|w| w.len() != d) || self.v.iter().any(|v| v.len() != n) {
            return Err(Error::DimensionMismatch("certificate does not fit the channel".into()));
        }
        let adjoint = comp.adjoint();
        let mut res = CertificateResiduals::default();

        let sum_w = self.w.iter().fold(ComplexMatrix::zeros(d, d), |acc, w| acc + outer(w, w));
        res.resolution = frobenius(&(sum_w - identity(d)));
        let sum_v = self.v.iter().fold(ComplexMatrix::zeros(n, n), |acc, v| acc + outer(v, v));
        res.trace_preservation = frobenius(&(sum_v - identity(n)));

        for i in 0..self.r {
            let (w, v, u, l) = (&self.w[i], &self.v[i], &self.u[i], &self.rank_one_kraus[i]);
            let image = adjoint.apply(&outer(w, w))?;
            res.adjoint_image = res.adjoint_image.max(frobenius(&(image - outer(v, v))));
            res.unit_u = res.unit_u.max((u.norm() - 1.0).abs());
            res.factorization = res.factorization.max(frobenius(&(l - outer(u, v))));
            res.norm_equality = res.norm_equality.max((w.norm() - v.norm()).abs());
        }
        let rebuilt = KrausChannel::cp_map(self.rank_one_kraus.clone())?;
        res.channel_choi = frobenius(&(rebuilt.choi_matrix() - channel.choi_matrix()));

        let checks = [
            ("resolution of the identity", res.resolution, tol.eps_verify),
            ("complement-adjoint images", res.adjoint_image, tol.eps_verify),
            ("trace preservation", res.trace_preservation, tol.eps_verify),
            ("unit output vectors", res.unit_u, tol.eps_verify),
            ("rank-one factorization", res.factorization, tol.eps_verify),
            ("channel reconstruction", res.channel_choi, tol.eps_verify * n as f64),
            ("norm equality", res.norm_equality, tol.eps_verify),
        ];
        for (what, value, bound) in checks {
            if value > bound {
                return Err(Error::VerificationFailure(format!(
                    "certificate {what} residual {value:.3e} exceeds {bound:.1e}"
                )));
            }
        }
        Ok(res)
    }
}

/// Check a candidate witness `{w_i}` against a minimal Kraus set.
///
/// Accepts iff `Σ w_i w_i* = I_d` and every `Φ^{C†}(w_i w_i*) = K(w̄_i)* K(w̄_i)`
/// has rank at most one; returns the `v_i` with `Φ^{C†}(w_i w_i*) = v_i v_i*`.
/// A valid witness of length `r` shows the EB rank is at most `r`.
pub fn verify_eb_witness(
    minimal: &KrausChannel,
    w: &[ComplexVector],
    tol: &ToleranceConfig,
) -> Result<Vec<ComplexVector>> {
    let d = minimal.kraus().len();
    if w.iter().any(|x| x.len() != d) {
        return Err(Error::DimensionMismatch(format!("witness vectors must have length {d}")));
    }
    let sum = w.iter().fold(ComplexMatrix::zeros(d, d), |acc, x| acc + outer(x, x));
    let res = frobenius(&(sum - identity(d)));
    if res > tol.eps_verify {
        return Err(Error::ResolutionFailure(res));
    }
    w.iter()
        .enumerate()
        .map(|(index, wi)| {
            let k = minimal.kraus_combination(&wi.conjugate())?;
            let image = k.adjoint() * &k;
            let rank = numerical_rank(&image, tol);
            if rank > 1 {
                return Err(Error::RankFailure { index, rank });
            }
            let eig = hermitian_eig(&image, tol)?;
            Ok(eig.vector(0).scale(eig.values[0].max(0.0).sqrt()))
        })
        .collect()
}

/// Certify entanglement breaking for a channel with projection Choi matrix.
///
/// Scaled projections and anything else are refused with
/// [`Error::OutOfScope`]; a multiplicative domain with multiplicity is
/// returned as [`Error::NotEntanglementBreaking`].
pub fn certify(channel: &KrausChannel, tol: &ToleranceConfig) -> Result<EbCertificate> {
    tol.validate()?;
    channel.require_channel()?;
    let report = channel.choi(tol)?;
    if report.classification != ChoiClass::Projection {
        return Err(Error::OutOfScope(report.classification));
    }
    let comp = channel.complement(tol)?;
    let d = comp.d;
    let psi = comp.adjoint();
    let domain = multiplicative_domain(&psi, tol)?;
    let structure = domain.structure(tol)?;
    if !structure.multiplicity_free {
        return Err(Error::NotEntanglementBreaking(structure));
    }
    let w = domain.rank_one_resolution(&structure, tol)?;
    verify_eb_witness(&comp.source, &w, tol).map_err(|e| {
        Error::VerificationFailure(format!("rank-one resolution from the domain was rejected: {e}"))
    })?;

    let mut u = Vec::with_capacity(d);
    let mut v = Vec::with_capacity(d);
    let mut rank_one_kraus = Vec::with_capacity(d);
    for wi in &w {
        let l = comp.source.kraus_combination(&wi.conjugate())?;
        let eig = hermitian_eig(&(&l * l.adjoint()), tol)?;
        let ui = canonical_phase(&eig.vector(0));
        // L = u v*  ⇒  v = L* u
        v.push(l.adjoint() * &ui);
        u.push(ui);
        rank_one_kraus.push(l);
    }
    let mut cert = EbCertificate {
        r: d,
        w,
        v,
        u,
        rank_one_kraus,
        eb_rank: d,
        choi_rank: report.choi_rank,
        residuals: CertificateResiduals::default(),
    };
    cert.residuals = cert.verify(channel, tol)?;
    Ok(cert)
}

/// Schur normal form of a certified projection-Choi channel: `V e_i = v_i`
/// is unitary and the complement of `X ↦ Φ(V X V*)` with Kraus `u_i e_i*`
/// is `X ↦ C̄ ∘ X` for `c_ij = ⟨u_i, u_j⟩`.
#[derive(Debug, Clone)]
pub struct SchurNormalForm {
    pub v: ComplexMatrix,
    pub c: ComplexMatrix,
    pub residual: f64,
}

pub fn schur_normal_form(
    cert: &EbCertificate,
    channel: &KrausChannel,
    tol: &ToleranceConfig,
) -> Result<SchurNormalForm> {
    let n = channel.input_dim();
    if cert.r != n || cert.choi_rank != n || cert.v.len() != n || cert.u.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "normal form needs r = d = n, got r = {}, d = {}, n = {n}",
            cert.r, cert.choi_rank
        )));
    }
    let mut v = ComplexMatrix::zeros(n, n);
    for (i, vi) in cert.v.iter().enumerate() {
        v.set_column(i, vi);
    }
    let ortho = frobenius(&(v.adjoint() * &v - identity(n)));
    if ortho > tol.eps_verify {
        return Err(Error::NotOrthonormal(ortho));
    }
    let c = ComplexMatrix::from_fn(n, n, |i, j| cert.u[i].dotc(&cert.u[j]));
    CorrelationMatrix::new(c.clone(), tol)
        .map_err(|e| Error::VerificationFailure(format!("Gram matrix of u_i: {e}")))?;

    let rotated = KrausChannel::cp_map(cert.rank_one_kraus.clone())?.conjugate_input(&v)?;
    let target = channel.conjugate_input(&v)?;
    let mut residual = frobenius(&(rotated.choi_matrix() - target.choi_matrix()));
    let comp = rotated.complement_of_kraus();
    let c_bar = c.conjugate();
    for a in 0..n {
        for b in 0..n {
            let image = comp.apply(&matrix_unit(n, n, a, b))?;
            let expect = matrix_unit(n, n, a, b) * c_bar[(a, b)];
            residual = residual.max(frobenius(&(image - expect)));
        }
    }
    if residual > tol.eps_verify {
        return Err(Error::VerificationFailure(format!(
            "complement of the rotated channel is not a Schur multiplier (residual {residual:.3e})"
        )));
    }
    Ok(SchurNormalForm { v, c, residual })
}

/// An EB rank reported from the literature for a recognized family, not computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitedRank {
    pub family: String,
    pub rank: usize,
    pub note: String,
}

#[derive(Debug, Clone)]
pub enum EbRankOutcome {
    /// EB rank equals the Choi rank; the certificate gives the upper bound and
    /// a resolution of `I_d` needs at least `d` rank-one terms.
    Certified { rank: usize, certificate: Box<EbCertificate> },
    /// Outside the projection class; a cited value is attached for known families.
    Refused { class: ChoiClass, cited: Option<CitedRank> },
}

pub fn eb_rank(channel: &KrausChannel, tol: &ToleranceConfig) -> Result<EbRankOutcome> {
    match certify(channel, tol) {
        Ok(cert) => Ok(EbRankOutcome::Certified { rank: cert.eb_rank, certificate: Box::new(cert) }),
        Err(Error::OutOfScope(class)) => Ok(EbRankOutcome::Refused { class, cited: recognize_cited(channel, tol) }),
        Err(e) => Err(e),
    }
}

/// Werner–Holevo and completely depolarizing channels, recognized by Choi matrix.
pub fn recognize_cited(channel: &KrausChannel, tol: &ToleranceConfig) -> Option<CitedRank> {
    let (n, m) = (channel.input_dim(), channel.output_dim());
    if n != m {
        return None;
    }
    let j = channel.choi_matrix();
    let bound = tol.eps_verify * n as f64;
    let depolarizing = identity(n * n).unscale(n as f64);
    if frobenius(&(&j - depolarizing)) <= bound {
        return Some(CitedRank {
            family: "completely depolarizing".into(),
            rank: n * n,
            note: format!("EB rank n^2 = {} (cited, unverified)", n * n),
        });
    }
    if n >= 2 {
        let wh = (identity(n * n) + swap_operator(n)).unscale((n + 1) as f64);
        if frobenius(&(&j - wh)) <= bound {
            return Some(CitedRank {
                family: "Werner-Holevo".into(),
                rank: n * n,
                note: format!("EB rank d^2 = {} (cited, unverified)", n * n),
            });
        }
    }
    None
}

/// Peres–Horodecki test on the Choi matrix: a negative eigenvalue of the
/// partial transpose independently confirms that a channel is not
/// entanglement breaking. Not part of the certification pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PptReport {
    pub min_eigenvalue: f64,
    pub is_ppt: bool,
}

pub fn ppt_check(channel: &KrausChannel, tol: &ToleranceConfig) -> Result<PptReport> {
    let (n, m) = (channel.input_dim(), channel.output_dim());
    let pt = partial_transpose_second(&channel.choi_matrix(), n, m)?;
    let eig = hermitian_eig(&pt, tol)?;
    let min_eigenvalue = eig.values.last().copied().unwrap_or(0.0);
    Ok(PptReport { min_eigenvalue, is_ppt: min_eigenvalue >= -tol.eps_verify })
}

/// Pairs `(i_k, j_k)` of a refutation witness.
pub fn refutation_pairs(s: &AlgebraStructure) -> Vec<(usize, usize)> {
    s.pairs()
}
