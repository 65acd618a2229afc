//! Kraus representation of completely positive maps and the Choi/complement calculus.
//!
//! A map `Φ : M_n → M_m` is stored as an ordered list of `m × n` Kraus
//! operators, `Φ(X) = Σ K_i X K_i*`. The Choi matrix is
//! `J(Φ) = Σ E_ij ⊗ Φ(E_ij) = Σ vec(K_i) vec(K_i)*` on `C^n ⊗ C^m`, kept
//! unnormalized (trace `n` for a channel).
//!
//! Complements are always taken from the minimal Kraus set produced by
//! [`KrausChannel::minimal_kraus`]: eigenvectors of `J(Φ)` in descending
//! eigenvalue order, each phase-fixed so its largest-modulus entry is real
//! positive. Any other minimal set gives a unitarily equivalent complement;
//! this one is a reproducible convention.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    c64, check_finite, frobenius, hermitian_eig, identity, kron, matrix_unit, numerical_rank,
    trace, unvec, vec, ComplexMatrix, ComplexVector, ToleranceConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Trace preserving, checked at construction.
    Channel,
    /// Completely positive, no trace condition.
    CompletelyPositive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    n: usize,
    m: usize,
    kraus: Vec<ComplexMatrix>,
    kind: MapKind,
}

fn validate_shapes(kraus: &[ComplexMatrix]) -> Result<(usize, usize)> {
    let first = kraus.first().ok_or(Error::EmptyKraus)?;
    let (m, n) = first.shape();
    if m == 0 || n == 0 {
        return Err(Error::DimensionMismatch("Kraus operators must be non-empty".into()));
    }
    for (i, k) in kraus.iter().enumerate() {
        if k.shape() != (m, n) {
            return Err(Error::DimensionMismatch(format!(
                "Kraus operator {i} is {}x{}, expected {m}x{n}",
                k.nrows(),
                k.ncols()
            )));
        }
        check_finite(k)?;
    }
    Ok((n, m))
}

impl KrausChannel {
    /// A quantum channel; fails unless `‖Σ K_i*K_i − I_n‖_F ≤ eps_verify`.
    pub fn new(kraus: Vec<ComplexMatrix>, tol: &ToleranceConfig) -> Result<Self> {
        let (n, m) = validate_shapes(&kraus)?;
        let map = Self { n, m, kraus, kind: MapKind::CompletelyPositive };
        map.into_channel(tol)
    }

    /// A general completely positive map with no trace condition.
    pub fn cp_map(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let (n, m) = validate_shapes(&kraus)?;
        Ok(Self { n, m, kraus, kind: MapKind::CompletelyPositive })
    }

    /// Promote a CP map to a channel after checking trace preservation.
    pub fn into_channel(mut self, tol: &ToleranceConfig) -> Result<Self> {
        let residual = self.tp_residual();
        if residual > tol.eps_verify {
            return Err(Error::NotTracePreserving { residual, allowed: tol.eps_verify });
        }
        self.kind = MapKind::Channel;
        Ok(self)
    }

    /// CP map `M_n → M_m` with the given Choi matrix, read off its eigendecomposition.
    pub fn from_choi(
        choi: &ComplexMatrix,
        n: usize,
        m: usize,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        if choi.shape() != (n * m, n * m) {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix of a map M_{n} -> M_{m} must be {0}x{0}",
                n * m
            )));
        }
        let eig = hermitian_eig(choi, tol)?;
        let rank = numerical_rank(choi, tol).max(1);
        let kraus = (0..rank)
            .map(|k| {
                let weight = eig.values[k].max(0.0).sqrt();
                unvec(&eig.vector(k).scale(weight), m, n)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::cp_map(kraus)
    }

    pub fn identity(n: usize) -> Self {
        Self { n, m: n, kraus: vec![identity(n)], kind: MapKind::Channel }
    }

    pub fn input_dim(&self) -> usize {
        self.n
    }

    pub fn output_dim(&self) -> usize {
        self.m
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn into_kraus(self) -> Vec<ComplexMatrix> {
        self.kraus
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn is_channel(&self) -> bool {
        self.kind == MapKind::Channel
    }

    pub(crate) fn require_channel(&self) -> Result<()> {
        if self.is_channel() {
            Ok(())
        } else {
            Err(Error::NotAChannel)
        }
    }

    /// `‖Σ K_i*K_i − I_n‖_F`.
    pub fn tp_residual(&self) -> f64 {
        let s = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.n, self.n), |acc, k| acc + k.adjoint() * k);
        frobenius(&(s - identity(self.n)))
    }

    /// `‖Φ(I_n) − I_m‖_F`.
    pub fn unital_residual(&self) -> f64 {
        let s = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.m, self.m), |acc, k| acc + k * k.adjoint());
        frobenius(&(s - identity(self.m)))
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.n, self.n) {
            return Err(Error::DimensionMismatch(format!(
                "input must be {0}x{0}, got {1}x{2}",
                self.n,
                x.nrows(),
                x.ncols()
            )));
        }
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.m, self.m), |acc, k| acc + k * x * k.adjoint()))
    }

    /// Superoperator matrix `T` with `vec(Φ(X)) = T vec(X)`, i.e. `Σ conj(K_i) ⊗ K_i`.
    pub fn transfer_matrix(&self) -> ComplexMatrix {
        self.kraus.iter().fold(
            ComplexMatrix::zeros(self.m * self.m, self.n * self.n),
            |acc, k| acc + kron(&k.conjugate(), k),
        )
    }

    /// `J(Φ) = Σ vec(K_i) vec(K_i)*`.
    pub fn choi_matrix(&self) -> ComplexMatrix {
        let dim = self.n * self.m;
        self.kraus.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, k| {
            let v = vec(k);
            acc + &v * v.adjoint()
        })
    }

    pub fn choi(&self, tol: &ToleranceConfig) -> Result<ChoiReport> {
        ChoiReport::from_matrix(self.choi_matrix(), tol)
    }

    /// Equivalent map with exactly `Choi-rank` trace-orthogonal Kraus operators,
    /// `tr(K_j* K_i) = λ_i δ_ij`.
    pub fn minimal_kraus(&self, tol: &ToleranceConfig) -> Result<Self> {
        let mut out = Self::from_choi(&self.choi_matrix(), self.n, self.m, tol)?;
        out.kind = self.kind;
        Ok(out)
    }

    /// Hilbert–Schmidt dual `Φ†` with Kraus operators `K_i*`; always a CP map.
    pub fn dual(&self) -> Self {
        Self {
            n: self.m,
            m: self.n,
            kraus: self.kraus.iter().map(|k| k.adjoint()).collect(),
            kind: MapKind::CompletelyPositive,
        }
    }

    /// `K(x) = Σ x_i K_i`.
    pub fn kraus_combination(&self, x: &ComplexVector) -> Result<ComplexMatrix> {
        if x.len() != self.kraus.len() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector has length {}, expected {}",
                x.len(),
                self.kraus.len()
            )));
        }
        Ok(self
            .kraus
            .iter()
            .zip(x.iter())
            .fold(ComplexMatrix::zeros(self.m, self.n), |acc, (k, c)| acc + k * *c))
    }

    /// Change of Kraus representation by an isometry `W : C^d → C^r`,
    /// `L_i = Σ_j W_ij K_j`; the map itself is unchanged.
    pub fn remix(&self, w: &ComplexMatrix) -> Result<Self> {
        if w.ncols() != self.kraus.len() {
            return Err(Error::DimensionMismatch(format!(
                "mixing matrix has {} columns, expected {}",
                w.ncols(),
                self.kraus.len()
            )));
        }
        let kraus = (0..w.nrows())
            .map(|i| self.kraus_combination(&w.row(i).transpose()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kraus, ..self.clone() })
    }

    /// Same map with the Kraus list reordered; `order[i]` is the source index of slot `i`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.kraus.len()];
        if order.len() != self.kraus.len() || order.iter().any(|&i| i >= seen.len()) {
            return Err(Error::DimensionMismatch("not a permutation of the Kraus list".into()));
        }
        for &i in order {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::DimensionMismatch("not a permutation of the Kraus list".into()));
            }
        }
        let kraus = order.iter().map(|&i| self.kraus[i].clone()).collect();
        Ok(Self { kraus, ..self.clone() })
    }

    /// `X ↦ U Φ(X) U*` for a unitary `U` on the output.
    pub fn conjugate_output(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.shape() != (self.m, self.m) {
            return Err(Error::DimensionMismatch("output unitary has the wrong size".into()));
        }
        let kraus = self.kraus.iter().map(|k| u * k).collect();
        Ok(Self { kraus, ..self.clone() })
    }

    /// `X ↦ Φ(V X V*)` for a unitary `V` on the input.
    pub fn conjugate_input(&self, v: &ComplexMatrix) -> Result<Self> {
        if v.shape() != (self.n, self.n) {
            return Err(Error::DimensionMismatch("input unitary has the wrong size".into()));
        }
        let kraus = self.kraus.iter().map(|k| k * v).collect();
        Ok(Self { kraus, ..self.clone() })
    }

    /// Complementary map `Φ^C(X) = Σ tr(K_i*K_j X) E_ji` for *this* Kraus list.
    ///
    /// Its Kraus operators are `F_a` (`d × n`) with row `i` of `F_a` equal to
    /// row `a` of `K_i`.
    pub fn complement_of_kraus(&self) -> Self {
        let d = self.kraus.len();
        let kraus = (0..self.m)
            .map(|a| ComplexMatrix::from_fn(d, self.n, |i, c| self.kraus[i][(a, c)]))
            .collect();
        Self { n: self.n, m: d, kraus, kind: self.kind }
    }

    /// The complement, built from the canonical minimal Kraus set.
    pub fn complement(&self, tol: &ToleranceConfig) -> Result<ComplementChannel> {
        self.require_channel()?;
        let source = self.minimal_kraus(tol)?;
        let channel = source.complement_of_kraus();
        Ok(ComplementChannel { d: source.kraus.len(), source, channel })
    }

    /// `Φ^{C†}(X) = Σ X_ij K_i* K_j` for this Kraus list.
    pub fn complement_adjoint_apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.kraus.len();
        if x.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "complement adjoint takes {d}x{d} input, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let mut out = ComplexMatrix::zeros(self.n, self.n);
        for i in 0..d {
            for j in 0..d {
                if x[(i, j)] != c64(0.0, 0.0) {
                    out += (self.kraus[i].adjoint() * &self.kraus[j]) * x[(i, j)];
                }
            }
        }
        Ok(out)
    }

    /// Trace behaviour of the complement adjoint, cross-checked against the
    /// Choi classification.
    pub fn classify_complement_adjoint(
        &self,
        tol: &ToleranceConfig,
    ) -> Result<ComplementAdjointClass> {
        let report = self.choi(tol)?;
        let comp = self.complement(tol)?;
        let class = comp.adjoint_trace_class(tol)?;
        let consistent = match (&class, &report.classification) {
            (ComplementAdjointClass::TracePreserving, ChoiClass::Projection) => true,
            (
                ComplementAdjointClass::TraceStabilizing { alpha: a },
                ChoiClass::ScaledProjection { alpha: b },
            ) => (a - b).abs() <= tol.eps_eig * a.abs().max(1.0),
            (ComplementAdjointClass::Neither, ChoiClass::Other) => true,
            _ => false,
        };
        if consistent {
            Ok(class)
        } else {
            Err(Error::InconsistentClassification {
                adjoint: class.to_string(),
                choi: report.classification.to_string(),
            })
        }
    }
}

/// Projection classification of a Choi matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ChoiClass {
    Projection,
    ScaledProjection { alpha: f64 },
    Other,
}

impl fmt::Display for ChoiClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChoiClass::Projection => write!(f, "projection"),
            ChoiClass::ScaledProjection { alpha } => write!(f, "scaled projection (alpha = {alpha})"),
            ChoiClass::Other => write!(f, "not a multiple of a projection"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChoiReport {
    pub choi: ComplexMatrix,
    pub choi_rank: usize,
    pub classification: ChoiClass,
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl ChoiReport {
    /// Classify by clustering: every nonzero eigenvalue within `eps_eig` of 1
    /// gives a projection; within `eps_eig · max(1, α)` of their mean `α`
    /// gives a scaled projection.
    pub fn from_matrix(choi: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let eig = hermitian_eig(&choi, tol)?;
        let choi_rank = numerical_rank(&choi, tol);
        let nonzero = &eig.values[..choi_rank];
        let classification = if choi_rank == 0 {
            ChoiClass::Other
        } else if nonzero.iter().all(|l| (l - 1.0).abs() <= tol.eps_eig) {
            ChoiClass::Projection
        } else {
            let alpha = nonzero.iter().sum::<f64>() / choi_rank as f64;
            let radius = tol.eps_eig * alpha.abs().max(1.0);
            if alpha > 0.0 && nonzero.iter().all(|l| (l - alpha).abs() <= radius) {
                ChoiClass::ScaledProjection { alpha }
            } else {
                ChoiClass::Other
            }
        };
        Ok(Self { choi, choi_rank, classification, eigenvalues: eig.values })
    }

    /// Scalar `α` with nonzero spectrum `{α}`, if any.
    pub fn alpha(&self) -> Option<f64> {
        match self.classification {
            ChoiClass::Projection => Some(1.0),
            ChoiClass::ScaledProjection { alpha } => Some(alpha),
            ChoiClass::Other => None,
        }
    }

    /// `J(Φ)/tr J(Φ)`, the associated bipartite state.
    pub fn normalized_state(&self) -> ComplexMatrix {
        let t = trace(&self.choi).re;
        if t == 0.0 {
            self.choi.clone()
        } else {
            self.choi.unscale(t)
        }
    }
}

/// Trace behaviour of `Φ^{C†}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ComplementAdjointClass {
    /// `Φ^C(I_n) = I_d`.
    TracePreserving,
    /// `Φ^C(I_n) = α I_d`, so `tr Φ^{C†}(X) = α tr X`.
    TraceStabilizing { alpha: f64 },
    Neither,
}

impl fmt::Display for ComplementAdjointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TracePreserving => write!(f, "trace preserving"),
            Self::TraceStabilizing { alpha } => write!(f, "trace stabilizing (alpha = {alpha})"),
            Self::Neither => write!(f, "neither"),
        }
    }
}

/// Complement `Φ^C : M_n → M_d` of a channel, from its canonical minimal Kraus set.
#[derive(Debug, Clone)]
pub struct ComplementChannel {
    /// Minimal Kraus form of the source channel.
    pub source: KrausChannel,
    /// Choi rank of the source.
    pub d: usize,
    /// `Φ^C` as a Kraus map.
    pub channel: KrausChannel,
}

impl ComplementChannel {
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.channel.apply(x)
    }

    /// `Φ^{C†} : M_d → M_n` as a CP map.
    pub fn adjoint(&self) -> KrausChannel {
        self.channel.dual()
    }

    pub fn adjoint_apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.source.complement_adjoint_apply(x)
    }

    /// `Φ^C(I_n)`, the Gram matrix `G_ab = tr(K_b* K_a)` of the minimal Kraus set.
    pub fn image_of_identity(&self) -> ComplexMatrix {
        let n = self.source.input_dim();
        self.channel.apply(&identity(n)).expect("identity has the input shape")
    }

    /// `‖Φ^C(I_n) − I_d‖_F`.
    pub fn identity_residual(&self) -> f64 {
        frobenius(&(self.image_of_identity() - identity(self.d)))
    }

    pub fn adjoint_trace_class(&self, tol: &ToleranceConfig) -> Result<ComplementAdjointClass> {
        let g = self.image_of_identity();
        if frobenius(&(&g - identity(self.d))) <= tol.eps_verify {
            return Ok(ComplementAdjointClass::TracePreserving);
        }
        let alpha = trace(&g).re / self.d as f64;
        let dev = frobenius(&(&g - identity(self.d).scale(alpha)));
        if alpha > 0.0 && dev <= tol.eps_verify * alpha.max(1.0) {
            Ok(ComplementAdjointClass::TraceStabilizing { alpha })
        } else {
            Ok(ComplementAdjointClass::Neither)
        }
    }
}

/// `Σ_{ij} E_ij ⊗ Φ(E_ij)` evaluated by applying the map to matrix units.
///
/// Independent of the `vec` route used by [`KrausChannel::choi_matrix`].
pub fn choi_by_matrix_units(map: &KrausChannel) -> ComplexMatrix {
    let (n, m) = (map.input_dim(), map.output_dim());
    let mut j = ComplexMatrix::zeros(n * m, n * m);
    for a in 0..n {
        for b in 0..n {
            let img = map.apply(&matrix_unit(n, n, a, b)).expect("matrix unit has input shape");
            j += kron(&matrix_unit(n, n, a, b), &img);
        }
    }
    j
}
