//! Finite-dimensional matrix *-algebras: multiplicative domains of unital
//! channels, commutants, and recognition of the block form
//! `⊕_k I_{i_k} ⊗ M_{j_k}`.

use rand::Rng;

use crate::channel::KrausChannel;
use crate::error::{Error, Result};
use crate::numerics::{
    column_span, frobenius, hermitian_eig, identity, kron, matrix_unit, nullspace,
    numerical_rank, random_hermitian_in_span_with, rng_from_seed, unvec, vec, ComplexMatrix,
    ComplexVector, ToleranceConfig,
};

/// A unital *-subalgebra of `M_d` given by a Frobenius-orthonormal basis.
#[derive(Debug, Clone)]
pub struct MatrixAlgebra {
    ambient_dim: usize,
    basis: Vec<ComplexMatrix>,
    contains_identity: bool,
    /// Fixed points dropped during domain post-verification (zero when the
    /// fixed-point space passed as is).
    pub rejected_fixed_points: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClosureResiduals {
    pub star: f64,
    pub product: f64,
    pub identity: f64,
}

impl ClosureResiduals {
    pub fn max(&self) -> f64 {
        self.star.max(self.product).max(self.identity)
    }
}

impl MatrixAlgebra {
    /// Orthonormalizes the span of `generators` as vectors in `C^{d²}`.
    /// No closure is enforced; see [`MatrixAlgebra::closure_residuals`].
    pub fn from_spanning(
        d: usize,
        generators: &[ComplexMatrix],
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        if generators.iter().any(|g| g.shape() != (d, d)) {
            return Err(Error::DimensionMismatch(format!("algebra generators must be {d}x{d}")));
        }
        let mut stacked = ComplexMatrix::zeros(d * d, generators.len());
        for (k, g) in generators.iter().enumerate() {
            stacked.set_column(k, &vec(g));
        }
        let q = column_span(&stacked, tol)?;
        Self::from_orthonormal_columns(d, &q, tol)
    }

    fn from_orthonormal_columns(d: usize, q: &ComplexMatrix, tol: &ToleranceConfig) -> Result<Self> {
        let basis = (0..q.ncols())
            .map(|k| unvec(&q.column(k).into_owned(), d, d))
            .collect::<Result<Vec<_>>>()?;
        let mut alg = Self { ambient_dim: d, basis, contains_identity: false, rejected_fixed_points: 0 };
        alg.contains_identity = alg.projection_residual(&identity(d)) <= tol.eps_verify;
        Ok(alg)
    }

    pub fn full(d: usize) -> Self {
        let basis = (0..d)
            .flat_map(|j| (0..d).map(move |i| matrix_unit(d, d, i, j)))
            .collect();
        Self { ambient_dim: d, basis, contains_identity: true, rejected_fixed_points: 0 }
    }

    pub fn scalars(d: usize) -> Self {
        let basis = vec![identity(d).unscale((d as f64).sqrt())];
        Self { ambient_dim: d, basis, contains_identity: true, rejected_fixed_points: 0 }
    }

    pub fn diagonal(d: usize) -> Self {
        let basis = (0..d).map(|i| matrix_unit(d, d, i, i)).collect();
        Self { ambient_dim: d, basis, contains_identity: true, rejected_fixed_points: 0 }
    }

    /// `⊕_k I_{i_k} ⊗ M_{j_k}` in standard position, from `(i_k, j_k)` pairs.
    pub fn standard_form(blocks: &[(usize, usize)]) -> Self {
        let d: usize = blocks.iter().map(|(i, j)| i * j).sum();
        let mut basis = Vec::new();
        let mut offset = 0;
        for &(mult, size) in blocks {
            let norm = (mult as f64).sqrt();
            for b in 0..size {
                for a in 0..size {
                    let local = kron(&identity(mult), &matrix_unit(size, size, a, b));
                    let mut e = ComplexMatrix::zeros(d, d);
                    e.view_mut((offset, offset), (mult * size, mult * size)).copy_from(&local);
                    basis.push(e.unscale(norm));
                }
            }
            offset += mult * size;
        }
        Self { ambient_dim: d, basis, contains_identity: true, rejected_fixed_points: 0 }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn contains_identity(&self) -> bool {
        self.contains_identity
    }

    /// Basis vectors `vec(B_a)` as the columns of a `d² × dim` matrix.
    pub fn basis_matrix(&self) -> ComplexMatrix {
        let d = self.ambient_dim;
        let mut q = ComplexMatrix::zeros(d * d, self.basis.len());
        for (k, b) in self.basis.iter().enumerate() {
            q.set_column(k, &vec(b));
        }
        q
    }

    /// Orthogonal projection of `x` onto the span.
    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.basis.iter().fold(ComplexMatrix::zeros(x.nrows(), x.ncols()), |acc, b| {
            acc + b * crate::numerics::hs_inner(b, x)
        })
    }

    /// `‖x − P(x)‖_F`.
    pub fn projection_residual(&self, x: &ComplexMatrix) -> f64 {
        frobenius(&(x - self.project(x)))
    }

    pub fn contains(&self, x: &ComplexMatrix, tol: &ToleranceConfig) -> bool {
        self.projection_residual(x) <= tol.eps_verify * frobenius(x).max(1.0)
    }

    pub fn closure_residuals(&self) -> ClosureResiduals {
        let star = self
            .basis
            .iter()
            .map(|b| self.projection_residual(&b.adjoint()))
            .fold(0.0, f64::max);
        let mut product: f64 = 0.0;
        for a in &self.basis {
            for b in &self.basis {
                product = product.max(self.projection_residual(&(a * b)));
            }
        }
        let d = self.ambient_dim;
        let identity = self.projection_residual(&identity(d)) / (d as f64).sqrt();
        ClosureResiduals { star, product, identity }
    }

    pub fn check_invariants(&self, tol: &ToleranceConfig) -> Result<ClosureResiduals> {
        let r = self.closure_residuals();
        if r.max() > tol.eps_verify {
            return Err(Error::VerificationFailure(format!(
                "algebra is not a unital *-algebra: {r:?}"
            )));
        }
        Ok(r)
    }

    /// `{U B U* : B ∈ A}`.
    pub fn conjugate(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.shape() != (self.ambient_dim, self.ambient_dim) {
            return Err(Error::DimensionMismatch("conjugating unitary has the wrong size".into()));
        }
        let basis = self.basis.iter().map(|b| u * b * u.adjoint()).collect();
        Ok(Self { basis, ..self.clone() })
    }

    /// `{X : [X, B_a] = 0 ∀a}`.
    pub fn commutant(&self, tol: &ToleranceConfig) -> Result<Self> {
        let d = self.ambient_dim;
        let id = identity(d);
        let mut stacked = ComplexMatrix::zeros(d * d * self.basis.len().max(1), d * d);
        for (k, b) in self.basis.iter().enumerate() {
            // vec(BX − XB) = (I ⊗ B − Bᵀ ⊗ I) vec(X)
            let c = kron(&id, b) - kron(&b.transpose(), &id);
            stacked.view_mut((k * d * d, 0), (d * d, d * d)).copy_from(&c);
        }
        let q = nullspace(&stacked, tol)?;
        Self::from_orthonormal_columns(d, &q, tol)
    }

    /// Intersection of two subspaces of `M_d`: the eigenvalue-1 space of
    /// `P_A P_B P_A`, computed in the coordinates of `A`.
    pub fn intersection(&self, other: &Self, tol: &ToleranceConfig) -> Result<Self> {
        let d = self.ambient_dim;
        if other.ambient_dim != d {
            return Err(Error::DimensionMismatch("algebras live in different matrix spaces".into()));
        }
        let qa = self.basis_matrix();
        let qb = other.basis_matrix();
        let overlap = qa.adjoint() * &qb;
        let gram = &overlap * overlap.adjoint();
        let eig = hermitian_eig(&gram, tol)?;
        let keep = eig.values.iter().take_while(|&&l| l >= 1.0 - tol.eps_eig).count();
        let q = &qa * eig.vectors.columns(0, keep);
        Self::from_orthonormal_columns(d, &q, tol)
    }

    pub fn center(&self, tol: &ToleranceConfig) -> Result<Self> {
        self.intersection(&self.commutant(tol)?, tol)
    }

    /// Recognize the block form `⊕_k I_{i_k} ⊗ M_{j_k}`.
    ///
    /// Minimal central projections come from clustering the spectrum of a
    /// random Hermitian central element; the element is redrawn whenever two
    /// clusters sit closer than `10 · eps_eig` or the cluster count differs
    /// from the dimension of the center.
    pub fn structure(&self, tol: &ToleranceConfig) -> Result<AlgebraStructure> {
        let d = self.ambient_dim;
        let center = self.center(tol)?;
        if center.dim() == 0 {
            return Err(Error::StructureInconsistency("algebra has a trivial center".into()));
        }
        let mut rng = rng_from_seed(tol.stream_seed(0x5354_5255));
        for _ in 0..tol.max_resample {
            let h = random_hermitian_in_span_with(center.basis(), &mut rng)?;
            let Some(projections) = central_projections(&h, center.dim(), tol)? else {
                continue;
            };
            let mut blocks = Vec::with_capacity(projections.len());
            for p in projections {
                let rank = numerical_rank(&p, tol);
                let mut compressed = ComplexMatrix::zeros(d * d, self.basis.len());
                for (k, b) in self.basis.iter().enumerate() {
                    compressed.set_column(k, &vec(&(&p * b * &p)));
                }
                let local_dim = numerical_rank(&compressed, tol);
                let block_size = (local_dim as f64).sqrt().round() as usize;
                if block_size == 0 || block_size * block_size != local_dim || !rank.is_multiple_of(block_size) {
                    return Err(Error::StructureInconsistency(format!(
                        "central block of rank {rank} has compressed dimension {local_dim}"
                    )));
                }
                blocks.push(AlgebraBlock {
                    multiplicity: rank / block_size,
                    block_size,
                    central_projection: p,
                });
            }
            blocks.sort_by(|a, b| {
                b.block_size.cmp(&a.block_size).then(b.multiplicity.cmp(&a.multiplicity))
            });
            let s = AlgebraStructure::new(blocks);
            s.check_dims(d, self.dim(), tol)?;
            return Ok(s);
        }
        Err(Error::ResampleExhausted(tol.max_resample))
    }

    /// `d` unit vectors `w_i` with `Σ w_i w_i* = I` and every `w_i w_i*` in the algebra.
    ///
    /// Taken from the spectral projections of a random Hermitian element,
    /// restricted to each central block; ordered by eigenvalue descending,
    /// then block index.
    pub fn rank_one_resolution(
        &self,
        structure: &AlgebraStructure,
        tol: &ToleranceConfig,
    ) -> Result<Vec<ComplexVector>> {
        if !structure.multiplicity_free {
            return Err(Error::NotMultiplicityFree(structure.pairs()));
        }
        let d = self.ambient_dim;
        let block_bases = structure
            .blocks
            .iter()
            .map(|b| {
                let eig = hermitian_eig(&b.central_projection, tol)?;
                let rank = b.multiplicity * b.block_size;
                Ok(eig.vectors.columns(0, rank).into_owned())
            })
            .collect::<Result<Vec<_>>>()?;

        let mut rng = rng_from_seed(tol.stream_seed(0x5245_534f));
        'attempt: for _ in 0..tol.max_resample {
            let h = random_hermitian_in_span_with(&self.basis, &mut rng)?;
            let scale = frobenius(&h).max(1.0);
            let mut found: Vec<(f64, usize, ComplexVector)> = Vec::with_capacity(d);
            for (k, q) in block_bases.iter().enumerate() {
                let local = q.adjoint() * &h * q;
                let eig = hermitian_eig(&local, tol)?;
                if eig.values.windows(2).any(|w| w[0] - w[1] < 10.0 * tol.eps_eig * scale) {
                    continue 'attempt;
                }
                for (i, &lambda) in eig.values.iter().enumerate() {
                    let w = crate::numerics::canonical_phase(&(q * eig.vector(i)));
                    found.push((lambda, k, w));
                }
            }
            found.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let ws: Vec<ComplexVector> = found.into_iter().map(|(_, _, w)| w).collect();

            let sum = ws.iter().fold(ComplexMatrix::zeros(d, d), |acc, w| acc + w * w.adjoint());
            let res = frobenius(&(sum - identity(d)));
            if ws.len() != d || res > tol.eps_verify {
                return Err(Error::VerificationFailure(format!(
                    "rank-one projections fail to resolve the identity (residual {res:.3e})"
                )));
            }
            for (i, w) in ws.iter().enumerate() {
                let r = self.projection_residual(&(w * w.adjoint()));
                if r > tol.eps_verify {
                    return Err(Error::VerificationFailure(format!(
                        "rank-one projection {i} lies outside the algebra (residual {r:.3e})"
                    )));
                }
            }
            return Ok(ws);
        }
        Err(Error::ResampleExhausted(tol.max_resample))
    }
}

/// Spectral clusters of a central element; `None` when the draw is ambiguous.
fn central_projections(
    h: &ComplexMatrix,
    expected: usize,
    tol: &ToleranceConfig,
) -> Result<Option<Vec<ComplexMatrix>>> {
    let eig = hermitian_eig(h, tol)?;
    let scale = eig.values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    let radius = tol.eps_eig * scale;
    let mut clusters: Vec<Vec<usize>> = vec![vec![0]];
    for k in 1..eig.values.len() {
        let gap = eig.values[k - 1] - eig.values[k];
        if gap <= radius {
            clusters.last_mut().expect("nonempty").push(k);
        } else if gap < 10.0 * radius {
            return Ok(None);
        } else {
            clusters.push(vec![k]);
        }
    }
    if clusters.len() != expected {
        return Ok(None);
    }
    let n = h.nrows();
    Ok(Some(
        clusters
            .iter()
            .map(|idx| {
                idx.iter().fold(ComplexMatrix::zeros(n, n), |acc, &k| {
                    let v = eig.vector(k);
                    acc + &v * v.adjoint()
                })
            })
            .collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct AlgebraBlock {
    /// `i_k`
    pub multiplicity: usize,
    /// `j_k`
    pub block_size: usize,
    pub central_projection: ComplexMatrix,
}

/// Block data of a *-algebra, ordered by descending `j_k` then descending `i_k`.
#[derive(Debug, Clone)]
pub struct AlgebraStructure {
    pub blocks: Vec<AlgebraBlock>,
    pub multiplicity_free: bool,
}

impl AlgebraStructure {
    fn new(blocks: Vec<AlgebraBlock>) -> Self {
        let multiplicity_free = blocks.iter().all(|b| b.multiplicity == 1);
        Self { blocks, multiplicity_free }
    }

    /// `(i_k, j_k)` pairs.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| (b.multiplicity, b.block_size)).collect()
    }

    fn check_dims(&self, ambient: usize, dim: usize, tol: &ToleranceConfig) -> Result<()> {
        let width: usize = self.blocks.iter().map(|b| b.multiplicity * b.block_size).sum();
        let algebra_dim: usize = self.blocks.iter().map(|b| b.block_size * b.block_size).sum();
        if width != ambient || algebra_dim != dim {
            return Err(Error::StructureInconsistency(format!(
                "blocks {:?} give width {width} (expected {ambient}) and dimension {algebra_dim} (expected {dim})",
                self.pairs()
            )));
        }
        let sum = self
            .blocks
            .iter()
            .fold(ComplexMatrix::zeros(ambient, ambient), |acc, b| acc + &b.central_projection);
        let res = frobenius(&(sum - identity(ambient)));
        if res > tol.eps_verify {
            return Err(Error::StructureInconsistency(format!(
                "central projections sum to the identity only within {res:.3e}"
            )));
        }
        Ok(())
    }
}

/// Residuals of the multiplicative-domain conditions for a single element `a`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DomainResiduals {
    /// `max ‖Ψ(AX) − Ψ(A)Ψ(X)‖`, `max ‖Ψ(XA) − Ψ(X)Ψ(A)‖` over the probes, relative to `‖A‖‖X‖`.
    pub bilinear: f64,
    /// `‖Ψ(AA*) − Ψ(A)Ψ(A*)‖ + ‖Ψ(A*A) − Ψ(A*)Ψ(A)‖`, relative to `‖A‖²`.
    pub quadratic: f64,
}

pub fn bilinear_residual(psi: &KrausChannel, a: &ComplexMatrix, x: &ComplexMatrix) -> Result<f64> {
    let pa = psi.apply(a)?;
    let px = psi.apply(x)?;
    let left = frobenius(&(psi.apply(&(a * x))? - &pa * &px));
    let right = frobenius(&(psi.apply(&(x * a))? - &px * &pa));
    let scale = (frobenius(a) * frobenius(x)).max(f64::MIN_POSITIVE);
    Ok(left.max(right) / scale)
}

pub fn quadratic_residual(psi: &KrausChannel, a: &ComplexMatrix) -> Result<f64> {
    let pa = psi.apply(a)?;
    let pas = psi.apply(&a.adjoint())?;
    let l = frobenius(&(psi.apply(&(a * a.adjoint()))? - &pa * &pas));
    let r = frobenius(&(psi.apply(&(a.adjoint() * a))? - &pas * &pa));
    Ok((l + r) / frobenius(a).powi(2).max(f64::MIN_POSITIVE))
}

/// Multiplicative domain of a unital trace-preserving CP map `Ψ` on `M_d`.
///
/// Computed as the fixed-point space of `Ψ†∘Ψ` (null space of `T − I` for its
/// transfer matrix `T`) and then checked against the defining bilinear
/// conditions on random probes and the quadratic conditions on every basis
/// element. Fixed points failing the quadratic test are dropped and counted
/// in [`MatrixAlgebra::rejected_fixed_points`]; if the remaining span still
/// fails, the call errors.
pub fn multiplicative_domain(psi: &KrausChannel, tol: &ToleranceConfig) -> Result<MatrixAlgebra> {
    let d = psi.input_dim();
    if psi.output_dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "unital trace-preserving map must be square, got M_{d} -> M_{}",
            psi.output_dim()
        )));
    }
    let unital = psi.unital_residual();
    let trace = psi.tp_residual();
    if unital > tol.eps_verify || trace > tol.eps_verify {
        return Err(Error::NotUnitalOrNotTP { unital, trace });
    }
    let t = psi.transfer_matrix();
    let t_dual = psi.dual().transfer_matrix();
    let shifted = &t_dual * &t - identity(d * d);
    let q = nullspace(&shifted, tol)?;
    let alg = MatrixAlgebra::from_orthonormal_columns(d, &q, tol)?;

    let seed = tol.stream_seed(0x4d44_4f4d);
    if verify_domain(psi, &alg, tol, seed).is_ok() {
        return Ok(alg);
    }
    let kept: Vec<ComplexMatrix> = alg
        .basis
        .iter()
        .filter(|b| quadratic_residual(psi, b).map(|r| r <= tol.eps_verify).unwrap_or(false))
        .cloned()
        .collect();
    let rejected = alg.dim() - kept.len();
    let mut reduced = MatrixAlgebra::from_spanning(d, &kept, tol)?;
    reduced.rejected_fixed_points = rejected;
    verify_domain(psi, &reduced, tol, seed).map_err(|e| {
        Error::VerificationFailure(format!(
            "fixed-point space of dimension {} is not a multiplicative domain ({e})",
            alg.dim()
        ))
    })?;
    Ok(reduced)
}

/// Closure, bilinear (three random probes plus every basis element) and
/// quadratic checks of a candidate multiplicative domain.
pub fn verify_domain(
    psi: &KrausChannel,
    alg: &MatrixAlgebra,
    tol: &ToleranceConfig,
    seed: u64,
) -> Result<DomainResiduals> {
    alg.check_invariants(tol)?;
    let d = alg.ambient_dim();
    let mut rng = rng_from_seed(seed);
    let probes: Vec<ComplexMatrix> = (0..3).map(|_| random_probe(d, &mut rng)).collect();
    let mut out = DomainResiduals::default();
    for a in alg.basis() {
        for x in probes.iter().chain(alg.basis()) {
            out.bilinear = out.bilinear.max(bilinear_residual(psi, a, x)?);
        }
        out.quadratic = out.quadratic.max(quadratic_residual(psi, a)?);
    }
    if out.bilinear > tol.eps_verify || out.quadratic > tol.eps_verify {
        return Err(Error::VerificationFailure(format!(
            "multiplicative-domain residuals {out:?} exceed {:.1e}",
            tol.eps_verify
        )));
    }
    Ok(out)
}

fn random_probe<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let x = crate::numerics::ginibre(d, d, rng);
    let n = frobenius(&x);
    x.unscale(n)
}
