//! Dense complex-matrix substrate.
//!
//! Every rank, nullspace and clustering decision in the crate goes through
//! this module and is judged against a [`ToleranceConfig`].
//!
//! Vectorization is column stacking throughout: `vec(K)` is the block vector
//! whose blocks are the columns of `K`, so `vec(K) = (I ⊗ K) Σ e_i ⊗ e_i` and
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`. The row-stacking convention is never used.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen, QR, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const SVD_ITERATIONS: usize = 10_000;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Numerical thresholds and the RNG seed shared by every operation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative singular-value cutoff for rank decisions.
    pub eps_rank: f64,
    /// Eigenvalue clustering radius.
    pub eps_eig: f64,
    /// Residual bound for equality checks.
    pub eps_verify: f64,
    pub seed: u64,
    /// Number of generic-element draws before giving up.
    pub max_resample: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eps_rank: 1e-10,
            eps_eig: 1e-8,
            eps_verify: 1e-8,
            seed: 0,
            max_resample: 8,
        }
    }
}

impl ToleranceConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_rank", self.eps_rank),
            ("eps_eig", self.eps_eig),
            ("eps_verify", self.eps_verify),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidTolerance(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_resample == 0 {
            return Err(Error::InvalidTolerance("max_resample must be at least 1".into()));
        }
        Ok(())
    }

    /// Seed for an independent random stream derived from the base seed.
    pub fn stream_seed(&self, stream: u64) -> u64 {
        splitmix64(self.seed ^ splitmix64(stream.wrapping_add(0x9e37_79b9_7f4a_7c15)))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn check_finite(a: &ComplexMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Frobenius norm.
pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Matrix unit `E_ij = e_i e_j*` in an `rows × cols` matrix space.
pub fn matrix_unit(rows: usize, cols: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(rows, cols);
    e[(i, j)] = c64(1.0, 0.0);
    e
}

pub fn basis_vector(n: usize, i: usize) -> ComplexVector {
    let mut e = ComplexVector::zeros(n);
    e[i] = c64(1.0, 0.0);
    e
}

pub fn outer(u: &ComplexVector, v: &ComplexVector) -> ComplexMatrix {
    u * v.adjoint()
}

/// Hilbert–Schmidt inner product `tr(A* B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.diagonal().iter().sum()
}

pub fn hermitian_residual(a: &ComplexMatrix) -> f64 {
    frobenius(&(a - a.adjoint()))
}

/// Rescale `v` so that its largest-modulus entry is real and positive.
///
/// The first entry within a relative `1e-9` of the maximum modulus is used,
/// so near-ties resolve to the lowest index.
pub fn canonical_phase(v: &ComplexVector) -> ComplexVector {
    let max = v.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if max == 0.0 {
        return v.clone();
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-9))
        .unwrap_or(0);
    let phase = v[pivot] / v[pivot].norm();
    v * phase.conj()
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn vector(&self, k: usize) -> ComplexVector {
        self.vectors.column(k).into_owned()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = ComplexMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&x| c64(x, 0.0)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }
}

pub fn hermitian_eig(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<HermitianEig> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigen-decomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    check_finite(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEig { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }
    let residual = hermitian_residual(a);
    let allowed = tol.eps_verify * (1.0 + frobenius(a));
    if residual > allowed {
        return Err(Error::NotHermitian { residual, allowed });
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, SVD_ITERATIONS)
        .ok_or_else(|| Error::ConvergenceFailure(format!("Hermitian eigensolver on {n}x{n}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let v = canonical_phase(&eig.eigenvectors.column(i).into_owned());
        vectors.set_column(k, &v);
    }
    Ok(HermitianEig { values, vectors })
}

/// Singular values sorted descending, plus right singular vectors as columns of `V`.
fn svd_right(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let (r, c) = a.shape();
    // pad wide matrices so that the right factor is complete
    let work = if r < c {
        let mut p = ComplexMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::try_new(work, false, true, f64::EPSILON, SVD_ITERATIONS)
        .ok_or_else(|| Error::ConvergenceFailure(format!("SVD on {r}x{c}")))?;
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let mut v = ComplexMatrix::zeros(c, order.len());
    for (k, &i) in order.iter().enumerate() {
        v.set_column(k, &v_t.row(i).adjoint());
    }
    Ok((values, v))
}

pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    if a.is_empty() {
        return vec![];
    }
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Number of singular values above `eps_rank · σ_max`; zero when `σ_max ≤ eps_rank`.
pub fn numerical_rank(a: &ComplexMatrix, tol: &ToleranceConfig) -> usize {
    rank_from_singular_values(&singular_values(a), tol)
}

pub(crate) fn rank_from_singular_values(s: &[f64], tol: &ToleranceConfig) -> usize {
    let max = s.first().copied().unwrap_or(0.0);
    if max <= tol.eps_rank {
        return 0;
    }
    s.iter().filter(|&&x| x > tol.eps_rank * max).count()
}

/// Orthonormal basis (as columns) of the right null space of `a`.
pub fn nullspace(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    let c = a.ncols();
    if a.nrows() == 0 || c == 0 {
        return Ok(identity(c));
    }
    check_finite(a)?;
    let (s, v) = svd_right(a)?;
    let rank = rank_from_singular_values(&s, tol);
    if rank == 0 {
        return Ok(identity(c));
    }
    Ok(v.columns(rank, c - rank).into_owned())
}

/// Orthonormal basis (as columns) of the column span of `a`.
pub fn column_span(a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return Ok(ComplexMatrix::zeros(r, 0));
    }
    check_finite(a)?;
    // right singular vectors of a* are the left singular vectors of a
    let (s, v) = svd_right(&a.adjoint())?;
    let rank = rank_from_singular_values(&s, tol);
    Ok(v.columns(0, rank).into_owned())
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization.
pub fn vec(a: &ComplexMatrix) -> ComplexVector {
    ComplexVector::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &ComplexVector, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if v.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "cannot reshape a vector of length {} into {rows}x{cols}",
            v.len()
        )));
    }
    Ok(ComplexMatrix::from_column_slice(rows, cols, v.as_slice()))
}

/// Partial transpose on the second tensor factor of an operator on `C^a ⊗ C^b`.
pub fn partial_transpose_second(x: &ComplexMatrix, a: usize, b: usize) -> Result<ComplexMatrix> {
    if x.nrows() != a * b || x.ncols() != a * b {
        return Err(Error::DimensionMismatch(format!(
            "partial transpose expects {0}x{0}, got {1}x{2}",
            a * b,
            x.nrows(),
            x.ncols()
        )));
    }
    let mut out = ComplexMatrix::zeros(a * b, a * b);
    for i in 0..a {
        for j in 0..a {
            for k in 0..b {
                for l in 0..b {
                    out[(i * b + k, j * b + l)] = x[(i * b + l, j * b + k)];
                }
            }
        }
    }
    Ok(out)
}

pub fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexVector {
    loop {
        let v = ComplexVector::from_fn(n, |_, _| gaussian_c64(rng));
        let norm = v.norm();
        if norm > 1e-12 {
            return v.unscale(norm);
        }
    }
}

/// Haar-random unitary from the phase-corrected QR of a Ginibre matrix.
pub fn random_unitary_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let z = ginibre(n, n, rng);
    let qr = QR::new(z);
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

pub fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    random_unitary_with(n, &mut rng_from_seed(seed))
}

/// Random isometry `C^cols → C^rows` (first `cols` columns of a Haar unitary).
pub fn random_isometry_with<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    random_unitary_with(rows, rng).columns(0, cols).into_owned()
}

pub fn random_hermitian_in_span_with<R: Rng + ?Sized>(
    basis: &[ComplexMatrix],
    rng: &mut R,
) -> Result<ComplexMatrix> {
    let first = basis
        .first()
        .ok_or_else(|| Error::DimensionMismatch("empty basis".into()))?;
    if !first.is_square() || basis.iter().any(|b| b.shape() != first.shape()) {
        return Err(Error::DimensionMismatch(
            "basis elements must share one square shape".into(),
        ));
    }
    let mut acc = ComplexMatrix::zeros(first.nrows(), first.ncols());
    for b in basis {
        let coeff: f64 = rng.sample(StandardNormal);
        acc += b.scale(coeff);
    }
    Ok(&acc + acc.adjoint())
}

/// `H = Σ c_a B_a + (Σ c_a B_a)*` with real standard-normal `c_a`.
pub fn random_hermitian_in_span(basis: &[ComplexMatrix], seed: u64) -> Result<ComplexMatrix> {
    random_hermitian_in_span_with(basis, &mut rng_from_seed(seed))
}
