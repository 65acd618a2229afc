//! Channel families used as fixtures and reachable from the CLI `gen` command.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::numerics::{
    basis_vector, c64, frobenius, hermitian_eig, identity, kron, matrix_unit, numerical_rank,
    outer, random_isometry_with, random_unit_vector, random_unitary_with, rng_from_seed, vec,
    ComplexMatrix, ComplexVector, ToleranceConfig, SVD_ITERATIONS,
};

/// Positive semidefinite matrix with unit diagonal.
///
/// When built from vectors, `c_ij = ⟨v_i, v_j⟩ = v_i* v_j`.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    matrix: ComplexMatrix,
    vectors: Option<Vec<ComplexVector>>,
}

impl CorrelationMatrix {
    pub fn new(matrix: ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidCorrelation("matrix must be square and non-empty".into()));
        }
        for i in 0..matrix.nrows() {
            if (matrix[(i, i)] - c64(1.0, 0.0)).norm() > tol.eps_verify {
                return Err(Error::InvalidCorrelation(format!(
                    "diagonal entry {i} is {}",
                    matrix[(i, i)]
                )));
            }
        }
        let eig = hermitian_eig(&matrix, tol).map_err(|e| Error::InvalidCorrelation(e.to_string()))?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -tol.eps_verify {
            return Err(Error::InvalidCorrelation(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { matrix, vectors: None })
    }

    /// Gram matrix of unit vectors.
    pub fn from_vectors(vectors: Vec<ComplexVector>, tol: &ToleranceConfig) -> Result<Self> {
        let k = vectors.first().map(|v| v.len()).unwrap_or(0);
        if vectors.is_empty() || vectors.iter().any(|v| v.len() != k) {
            return Err(Error::InvalidCorrelation("vectors must be non-empty and share a length".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if (v.norm() - 1.0).abs() > tol.eps_verify {
                return Err(Error::NotUnitVector(i));
            }
        }
        let n = vectors.len();
        let matrix = ComplexMatrix::from_fn(n, n, |i, j| vectors[i].dotc(&vectors[j]));
        Ok(Self { matrix, vectors: Some(vectors) })
    }

    /// Gram matrix of `n` random unit vectors in `C^k`.
    pub fn random(n: usize, k: usize, seed: u64, tol: &ToleranceConfig) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let vs = (0..n).map(|_| random_unit_vector(k, &mut rng)).collect();
        Self::from_vectors(vs, tol)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The generating vectors, if the matrix was built from them.
    pub fn vectors(&self) -> Option<&[ComplexVector]> {
        self.vectors.as_deref()
    }

    /// Rank-truncated factorization `C = Σ_a λ_a g_a g_a*` as pairs `(√λ_a, g_a)`.
    fn factor(&self, tol: &ToleranceConfig) -> Result<Vec<(f64, ComplexVector)>> {
        let eig = hermitian_eig(&self.matrix, tol)?;
        let rank = numerical_rank(&self.matrix, tol);
        Ok((0..rank).map(|a| (eig.values[a].max(0.0).sqrt(), eig.vector(a))).collect())
    }

    /// Unit vectors `v_j ∈ C^rank` with `⟨v_i, v_j⟩ = c_ij`.
    pub fn gram_vectors(&self, tol: &ToleranceConfig) -> Result<Vec<ComplexVector>> {
        let f = self.factor(tol)?;
        let r = f.len();
        Ok((0..self.dim())
            .map(|j| ComplexVector::from_fn(r, |a, _| f[a].1[j].conj() * f[a].0))
            .collect())
    }
}

/// Schur product channel `X ↦ X ∘ C` with `rank(C)` diagonal Kraus operators
/// `√λ_a diag(g_a)` from the eigendecomposition of `C`.
pub fn schur_channel(c: &CorrelationMatrix, tol: &ToleranceConfig) -> Result<KrausChannel> {
    let kraus = c
        .factor(tol)?
        .into_iter()
        .map(|(s, g)| ComplexMatrix::from_diagonal(&g.scale(s)))
        .collect();
    KrausChannel::new(kraus, tol)
}

/// Channel `M_n → M_m` with rank-one Kraus operators `u_k e_k*`, i.e.
/// `X ↦ Σ x_kk u_k u_k*`. Its Choi matrix is the projection `Σ E_kk ⊗ u_k u_k*`.
pub fn schur_complement_channel(
    vectors: &[ComplexVector],
    tol: &ToleranceConfig,
) -> Result<KrausChannel> {
    let n = vectors.len();
    let m = vectors.first().map(|v| v.len()).ok_or(Error::EmptyKraus)?;
    let mut kraus = Vec::with_capacity(n);
    for (k, u) in vectors.iter().enumerate() {
        if u.len() != m {
            return Err(Error::DimensionMismatch(format!("vector {k} has length {}", u.len())));
        }
        if (u.norm() - 1.0).abs() > tol.eps_verify {
            return Err(Error::NotUnitVector(k));
        }
        kraus.push(outer(u, &basis_vector(n, k)));
    }
    KrausChannel::new(kraus, tol)
}

/// `n` random unit vectors in `C^m`.
pub fn random_unit_vectors(n: usize, m: usize, seed: u64) -> Vec<ComplexVector> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| random_unit_vector(m, &mut rng)).collect()
}

/// Swap operator `W = Σ E_ij ⊗ E_ji` on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut w = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            w += kron(&matrix_unit(d, d, i, j), &matrix_unit(d, d, j, i));
        }
    }
    w
}

/// `X ↦ (tr(X) I + Xᵀ)/(d+1)`, with Kraus operators read off its Choi matrix
/// `(I ⊗ I + W)/(d+1)`.
pub fn werner_holevo(d: usize, tol: &ToleranceConfig) -> Result<KrausChannel> {
    if d < 2 {
        return Err(Error::DimensionMismatch("Werner–Holevo channel needs d >= 2".into()));
    }
    let choi = (identity(d * d) + swap_operator(d)).unscale((d + 1) as f64);
    KrausChannel::from_choi(&choi, d, d, tol)?.into_channel(tol)
}

/// Completely depolarizing channel `X ↦ tr(X) I/n`, Kraus `E_ij/√n`.
pub fn depolarizing(n: usize, tol: &ToleranceConfig) -> Result<KrausChannel> {
    if n == 0 {
        return Err(Error::DimensionMismatch("dimension must be positive".into()));
    }
    let s = 1.0 / (n as f64).sqrt();
    let kraus = (0..n)
        .flat_map(|i| (0..n).map(move |j| matrix_unit(n, n, i, j).scale(s)))
        .collect();
    KrausChannel::new(kraus, tol)
}

/// `d` Kraus operators sliced from a Haar isometry `C^n → C^m ⊗ C^d`.
pub fn random_channel(
    n: usize,
    m: usize,
    d: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<KrausChannel> {
    if n == 0 || m == 0 || d == 0 || m * d < n {
        return Err(Error::DimensionMismatch(format!(
            "need m*d >= n for an isometry, got n={n}, m={m}, d={d}"
        )));
    }
    let v = random_isometry_with(m * d, n, &mut rng_from_seed(seed));
    let kraus = (0..d).map(|i| v.view((i * m, 0), (m, n)).into_owned()).collect();
    KrausChannel::new(kraus, tol)
}

/// Mixture of `k` Haar unitaries with Dirichlet-like random weights (unital and TP).
pub fn random_unitary_mixture(
    n: usize,
    k: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<KrausChannel> {
    let mut rng = rng_from_seed(seed);
    let weights: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    let kraus = weights
        .iter()
        .map(|w| random_unitary_with(n, &mut rng).scale((w / total).sqrt()))
        .collect();
    KrausChannel::new(kraus, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionChoiFamily {
    /// Alternating projections from a random start.
    Generic,
    /// Random rank-one Kraus set `u_i v_i*` with orthonormal `v_i`, mixed by a
    /// random unitary so the Kraus operators are not themselves rank one.
    EntanglementBreaking,
}

const ALTERNATING_MAX_ITERATIONS: usize = 20_000;
const ALTERNATING_TARGET: f64 = 1e-13;

/// Random channel `M_n → M_m` whose Choi matrix is a rank-`n` projection.
///
/// The generic family alternates between the two polar projections
/// "stacked Kraus operators form an isometry" (trace preservation) and
/// "`vec(K_i)` are orthonormal" (projection Choi matrix), restarting from a
/// fresh random point up to `max_resample` times.
pub fn random_projection_choi_channel(
    n: usize,
    m: usize,
    seed: u64,
    family: ProjectionChoiFamily,
    tol: &ToleranceConfig,
) -> Result<KrausChannel> {
    if n == 0 || m == 0 {
        return Err(Error::DimensionMismatch("dimensions must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    match family {
        ProjectionChoiFamily::EntanglementBreaking => {
            let v = random_unitary_with(n, &mut rng);
            let kraus: Vec<_> = (0..n)
                .map(|i| outer(&random_unit_vector(m, &mut rng), &v.column(i).into_owned()))
                .collect();
            let mix = random_unitary_with(n, &mut rng);
            KrausChannel::new(kraus, tol)?.remix(&mix)
        }
        ProjectionChoiFamily::Generic => {
            for _ in 0..tol.max_resample {
                let start: Vec<_> = (0..n)
                    .map(|_| crate::numerics::ginibre(m, n, &mut rng))
                    .collect();
                if let Some(kraus) = alternate_projections(start, n, m)? {
                    let ch = KrausChannel::new(kraus, tol)?;
                    if frame_residual(ch.kraus()) <= tol.eps_verify {
                        return Ok(ch);
                    }
                }
            }
            Err(Error::ConstructionFailure(format!(
                "alternating projections stalled after {} restarts",
                tol.max_resample
            )))
        }
    }
}

fn polar(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let svd = nalgebra::SVD::try_new(a.clone(), true, true, f64::EPSILON, SVD_ITERATIONS)
        .ok_or_else(|| Error::ConvergenceFailure("polar factor".into()))?;
    Ok(svd.u.expect("u requested") * svd.v_t.expect("v_t requested"))
}

fn frame_matrix(kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let (m, n) = kraus[0].shape();
    let mut f = ComplexMatrix::zeros(n * m, kraus.len());
    for (i, k) in kraus.iter().enumerate() {
        f.set_column(i, &vec(k));
    }
    f
}

fn frame_residual(kraus: &[ComplexMatrix]) -> f64 {
    let f = frame_matrix(kraus);
    frobenius(&(f.adjoint() * &f - identity(kraus.len())))
}

fn alternate_projections(
    mut kraus: Vec<ComplexMatrix>,
    n: usize,
    m: usize,
) -> Result<Option<Vec<ComplexMatrix>>> {
    for _ in 0..ALTERNATING_MAX_ITERATIONS {
        // orthonormal vec(K_i)
        let f = polar(&frame_matrix(&kraus))?;
        for (i, k) in kraus.iter_mut().enumerate() {
            *k = ComplexMatrix::from_column_slice(m, n, f.column(i).as_slice());
        }
        // trace preservation: stacked [K_1; ...; K_n] is an isometry
        let mut s = ComplexMatrix::zeros(n * m, n);
        for (i, k) in kraus.iter().enumerate() {
            s.view_mut((i * m, 0), (m, n)).copy_from(k);
        }
        let s = polar(&s)?;
        for (i, k) in kraus.iter_mut().enumerate() {
            *k = s.view((i * m, 0), (m, n)).into_owned();
        }
        if frame_residual(&kraus) <= ALTERNATING_TARGET {
            return Ok(Some(kraus));
        }
    }
    Ok(None)
}

/// `X ↦ Φ(V X V*)` for a Haar-random `V`; returns the channel and `V`.
pub fn twirl_internal(
    ch: &KrausChannel,
    seed: u64,
) -> Result<(KrausChannel, ComplexMatrix)> {
    let v = random_unitary_with(ch.input_dim(), &mut rng_from_seed(seed));
    Ok((ch.conjugate_input(&v)?, v))
}

/// `X ↦ U Φ(X) U*` for a Haar-random `U`; returns the channel and `U`.
pub fn twirl_external(
    ch: &KrausChannel,
    seed: u64,
) -> Result<(KrausChannel, ComplexMatrix)> {
    let u = random_unitary_with(ch.output_dim(), &mut rng_from_seed(seed));
    Ok((ch.conjugate_output(&u)?, u))
}
