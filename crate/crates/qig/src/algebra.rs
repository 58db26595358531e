//! Hermitian matrix algebra: square roots, commutators, Hilbert-Schmidt
//! geometry, random ensembles, and unitary evolution.
//!
//! All public values live in the Hermitian algebra. Constructors symmetrize
//! their input, so downstream trace formulas never see anti-Hermitian drift.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Hermiticity drift allowed after symmetrization.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Unit-trace tolerance for density matrices and tr(xi^2) for sqrt states.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in [-PSD_CLAMP, 0) are clamped to zero; anything more
/// negative is rejected as invalid data rather than repaired.
pub const PSD_CLAMP: f64 = 1e-10;

fn eigen_of(mat: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = mat.nrows();
    let eig = nalgebra::linalg::SymmetricEigen::try_new(mat.clone(), 1e-14, 10_000)
        .ok_or(Error::EigenFailure(n))?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

/// An n x n complex matrix equal to its conjugate transpose.
///
/// The constructor symmetrizes, `A <- (A + A^dagger)/2`, so every instance
/// satisfies the Hermiticity invariant exactly up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    mat: CMat,
}

impl HermitianMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let sym = (&mat + mat.adjoint()) * C64::new(0.5, 0.0);
        let h = Self { mat: sym };
        debug_assert!(h.hermiticity_defect() <= HERMITICITY_TOL);
        h.debug_check_real_spectrum();
        Ok(h)
    }

    #[cfg(debug_assertions)]
    fn debug_check_real_spectrum(&self) {
        // Real eigenvalues are a consequence of Hermiticity; the eigensolver
        // we use returns real values by construction, so checking the
        // symmetrization defect is the meaningful assertion here.
        debug_assert!(self.hermiticity_defect() <= HERMITICITY_TOL);
    }

    #[cfg(not(debug_assertions))]
    fn debug_check_real_spectrum(&self) {}

    /// Max |A_ij - conj(A_ji)| over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.mat.adjoint();
        (&self.mat - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: CMat::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMat::identity(dim, dim),
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            mat: CMat::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(diag[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn pauli_x() -> Self {
        Self::new(CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        ))
        .expect("pauli x")
    }

    pub fn pauli_y() -> Self {
        Self::new(CMat::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 0.0),
            ],
        ))
        .expect("pauli y")
    }

    pub fn pauli_z() -> Self {
        Self::from_diag(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.mat[(i, j)]
    }

    /// tr(A); real for Hermitian matrices.
    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            mat: &self.mat * C64::new(s, 0.0),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Self {
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(Self {
            mat: &self.mat - &other.mat,
        })
    }

    /// A + c*I.
    pub fn shift_identity(&self, c: f64) -> Self {
        Self {
            mat: &self.mat + CMat::identity(self.dim(), self.dim()) * C64::new(c, 0.0),
        }
    }

    /// Eigendecomposition A = V diag(w) V^dagger with real eigenvalues.
    pub fn eigen(&self) -> Result<(Vec<f64>, CMat)> {
        eigen_of(&self.mat)
    }

    pub fn hs_norm(&self) -> f64 {
        hs_inner(self, self).expect("same dims").max(0.0).sqrt()
    }

    /// Symmetrized product (AB + BA)/2, which stays Hermitian.
    pub fn anticommutator_half(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        let ab = &self.mat * &other.mat;
        let ba = &other.mat * &self.mat;
        Ok(Self {
            mat: (ab + ba) * C64::new(0.5, 0.0),
        })
    }
}

/// Hilbert-Schmidt inner product tr(AB); real and symmetric for Hermitian
/// arguments, with `hs_inner(A, A) >= 0`.
pub fn hs_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    // tr(AB) = sum_ij A_ij B_ji
    let mut acc = 0.0;
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            acc += (a.mat[(i, j)] * b.mat[(j, i)]).re;
        }
    }
    Ok(acc)
}

/// The Hermitian-valued commutator i[A, B] = i(AB - BA).
///
/// Exposed with the factor of i so the result stays in the ambient Hermitian
/// algebra; it is antisymmetric in (A, B).
pub fn commutator(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let ab = &a.mat * &b.mat;
    let ba = &b.mat * &a.mat;
    let m = (ab - ba) * C64::new(0.0, 1.0);
    HermitianMatrix::new(m)
}

/// Positive-semidefinite Hermitian matrix with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    herm: HermitianMatrix,
}

impl DensityMatrix {
    /// Validates trace and positivity. Eigenvalues in `[-PSD_CLAMP, 0)` are
    /// clamped to zero; more negative ones reject the input.
    pub fn new(herm: HermitianMatrix) -> Result<Self> {
        let tr = herm.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let (vals, vecs) = herm.eigen()?;
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -PSD_CLAMP {
            return Err(Error::NotPositiveSemidefinite(min));
        }
        if min >= 0.0 {
            return Ok(Self { herm });
        }
        // Reconstruct with clamped spectrum, renormalizing the trace.
        let clamped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        let rebuilt = reconstruct(&vecs, &clamped.iter().map(|v| v / total).collect::<Vec<_>>());
        Ok(Self {
            herm: HermitianMatrix::new(rebuilt)?,
        })
    }

    pub fn from_pure(x: &PureState) -> Self {
        let n = x.dim();
        let mat = CMat::from_fn(n, n, |i, j| x.amps[i] * x.amps[j].conj());
        Self {
            herm: HermitianMatrix::new(mat).expect("projector is Hermitian"),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            herm: HermitianMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.herm.dim()
    }

    pub fn as_herm(&self) -> &HermitianMatrix {
        &self.herm
    }

    pub fn matrix(&self) -> &CMat {
        self.herm.matrix()
    }

    /// min eigenvalue; used by rank/purity diagnostics.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let (vals, _) = self.herm.eigen()?;
        Ok(vals.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// tr(rho^2).
    pub fn purity(&self) -> f64 {
        hs_inner(&self.herm, &self.herm).expect("same dims")
    }
}

fn reconstruct(vecs: &CMat, vals: &[f64]) -> CMat {
    let n = vecs.nrows();
    let diag = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(vals[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    vecs * diag * vecs.adjoint()
}

/// Hermitian matrix xi with tr(xi^2) = 1; a point on the square-root sphere.
///
/// Any unit-HS-norm Hermitian matrix qualifies: its square is automatically
/// positive semidefinite with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtState {
    herm: HermitianMatrix,
}

impl SqrtState {
    pub fn new(herm: HermitianMatrix) -> Result<Self> {
        let norm2 = hs_inner(&herm, &herm)?;
        if (norm2 - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidSqrtNorm(norm2));
        }
        Ok(Self { herm })
    }

    pub fn dim(&self) -> usize {
        self.herm.dim()
    }

    pub fn as_herm(&self) -> &HermitianMatrix {
        &self.herm
    }

    pub fn matrix(&self) -> &CMat {
        self.herm.matrix()
    }

    /// xi^2 as a density matrix.
    pub fn square(&self) -> DensityMatrix {
        let sq = self.herm.matrix() * self.herm.matrix();
        let herm = HermitianMatrix::new(sq).expect("square of Hermitian");
        DensityMatrix::new(herm).expect("xi^2 is PSD with unit trace")
    }

    /// True when xi^2 = xi, i.e. xi is a rank-one projector.
    pub fn is_pure(&self, tol: f64) -> bool {
        let sq = self.herm.matrix() * self.herm.matrix();
        (sq - self.herm.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            <= tol
    }
}

/// Unit vector on the pure-state manifold, with the phase fixed so the first
/// nonzero amplitude is real positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVec,
}

impl PureState {
    pub fn new(amps: CVec) -> Result<Self> {
        let norm = amps.norm();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let mut v = amps / C64::new(norm, 0.0);
        // canonical phase
        if let Some(lead) = v.iter().find(|z| z.norm() > 1e-14).copied() {
            let phase = lead / C64::new(lead.norm(), 0.0);
            v /= phase;
        }
        Ok(Self { amps: v })
    }

    pub fn from_reals(re: &[f64]) -> Result<Self> {
        Self::new(CVec::from_iterator(
            re.len(),
            re.iter().map(|&r| C64::new(r, 0.0)),
        ))
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    /// <x|A|x>.
    pub fn expectation(&self, a: &HermitianMatrix) -> Result<f64> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch(a.dim(), self.dim()));
        }
        Ok((self.amps.adjoint() * a.matrix() * &self.amps)[(0, 0)].re)
    }

    /// <x|rho|x>.
    pub fn density_expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch(rho.dim(), self.dim()));
        }
        Ok((self.amps.adjoint() * rho.matrix() * &self.amps)[(0, 0)].re)
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    /// The projector as a square-root state (idempotent, so tr(xi^2) = 1).
    pub fn sqrt_state(&self) -> SqrtState {
        SqrtState::new(self.projector().as_herm().clone()).expect("projector has unit HS norm")
    }
}

/// Principal (positive semidefinite) square root of a density matrix,
/// via eigendecomposition with the nonnegative root of each eigenvalue.
pub fn principal_sqrt(rho: &DensityMatrix) -> Result<SqrtState> {
    let (vals, vecs) = rho.as_herm().eigen()?;
    let roots: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    let mat = reconstruct(&vecs, &roots);
    let herm = HermitianMatrix::new(mat)?;
    // Renormalize away eigensolver roundoff in tr(xi^2).
    let norm2 = hs_inner(&herm, &herm)?;
    SqrtState::new(herm.scale(1.0 / norm2.sqrt()))
}

/// Conjugation by exp(-iHt): xi_t = exp(-iHt) xi_0 exp(iHt).
pub fn unitary_evolve(xi0: &SqrtState, h: &HermitianMatrix, t: f64) -> Result<SqrtState> {
    if xi0.dim() != h.dim() {
        return Err(Error::DimensionMismatch(xi0.dim(), h.dim()));
    }
    if t == 0.0 {
        return Ok(xi0.clone());
    }
    let u = evolution_operator(h, t)?;
    let evolved = &u * xi0.matrix() * u.adjoint();
    let herm = HermitianMatrix::new(evolved)?;
    let norm2 = hs_inner(&herm, &herm)?;
    SqrtState::new(herm.scale(1.0 / norm2.sqrt()))
}

/// exp(-iHt) from the eigendecomposition of H.
pub fn evolution_operator(h: &HermitianMatrix, t: f64) -> Result<CMat> {
    let (vals, vecs) = h.eigen()?;
    let n = h.dim();
    let phases = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.0, -vals[i] * t).exp()
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(&vecs * phases * vecs.adjoint())
}

/// Derivatives of the unitary curve xi_t at t = 0:
/// xi' = -i[H, xi], xi'' = -[H, [H, xi]], xi''' = i[H, [H, [H, xi]]].
///
/// The sign convention is pinned to exp(-iHt) by the finite-difference tests.
pub fn derivatives_unitary(
    xi: &SqrtState,
    h: &HermitianMatrix,
    order: u32,
) -> Result<HermitianMatrix> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidOrder(order));
    }
    if xi.dim() != h.dim() {
        return Err(Error::DimensionMismatch(xi.dim(), h.dim()));
    }
    let mut cur = xi.as_herm().clone();
    for _ in 0..order {
        // d/dt X = -i[H, X] = -(i[H, X])
        cur = commutator(h, &cur)?.scale(-1.0);
    }
    Ok(cur)
}

/// (G + G^dagger)/2 with i.i.d. standard complex Gaussian G (GUE up to scale).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<HermitianMatrix> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let g = ginibre(dim, rng);
    HermitianMatrix::new((&g + g.adjoint()) * C64::new(0.5, 0.0))
}

/// G G^dagger / tr(G G^dagger): the Hilbert-Schmidt (Ginibre) measure.
pub fn random_density_hs<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DensityMatrix> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let g = ginibre(dim, rng);
    let gg = &g * g.adjoint();
    let tr = gg.trace().re;
    DensityMatrix::new(HermitianMatrix::new(gg / C64::new(tr, 0.0))?)
}

/// Normalized complex Gaussian vector: Haar (Fubini-Study) measure.
pub fn random_pure<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let v = CVec::from_fn(dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    PureState::new(v)
}

/// Random point on the square-root sphere: a normalized GUE matrix.
/// Not positive in general; its square is still a valid density matrix.
pub fn random_sqrt_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<SqrtState> {
    let h = random_hermitian(dim, rng)?;
    let norm = h.hs_norm();
    SqrtState::new(h.scale(1.0 / norm))
}

/// Full-rank positive square-root state: principal root of an HS-random
/// density matrix (full rank almost surely).
pub fn random_positive_sqrt<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<SqrtState> {
    principal_sqrt(&random_density_hs(dim, rng)?)
}

fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    CMat::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn hs_inner_normalized_identity() {
        let a = HermitianMatrix::identity(2).scale(SQRT_HALF);
        assert_abs_diff_eq!(hs_inner(&a, &a).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn hs_inner_pauli_orthogonality() {
        let x = HermitianMatrix::pauli_x();
        let z = HermitianMatrix::pauli_z();
        assert_abs_diff_eq!(hs_inner(&x, &z).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn hs_inner_diagonal_product() {
        let a = HermitianMatrix::from_diag(&[2.0, 1.0]);
        let b = HermitianMatrix::from_diag(&[1.0, 3.0]);
        assert_abs_diff_eq!(hs_inner(&a, &b).unwrap(), 5.0, epsilon = 1e-14);
    }

    #[test]
    fn hs_inner_rejects_dim_mismatch() {
        let a = HermitianMatrix::identity(2);
        let b = HermitianMatrix::identity(3);
        assert!(matches!(
            hs_inner(&a, &b),
            Err(Error::DimensionMismatch(2, 3))
        ));
    }

    #[test]
    fn principal_sqrt_scalar_matrix() {
        let rho = DensityMatrix::maximally_mixed(2);
        let xi = principal_sqrt(&rho).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { SQRT_HALF } else { 0.0 };
                assert_abs_diff_eq!(xi.matrix()[(i, j)].re, want, epsilon = 1e-12);
                assert_abs_diff_eq!(xi.matrix()[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn principal_sqrt_pure_projector_idempotent() {
        let rho = DensityMatrix::new(HermitianMatrix::from_diag(&[1.0, 0.0])).unwrap();
        let xi = principal_sqrt(&rho).unwrap();
        let diff = xi.as_herm().sub(rho.as_herm()).unwrap();
        assert!(diff.hs_norm() <= 1e-10);
    }

    #[test]
    fn principal_sqrt_diagonal_oracle() {
        // oracle: per-eigenvalue square root
        let rho = DensityMatrix::new(HermitianMatrix::from_diag(&[0.9, 0.1])).unwrap();
        let xi = principal_sqrt(&rho).unwrap();
        assert_abs_diff_eq!(xi.matrix()[(0, 0)].re, 0.9f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(xi.matrix()[(1, 1)].re, 0.1f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn density_rejects_far_negative_eigenvalue() {
        let m = HermitianMatrix::from_diag(&[1.1, -0.1]);
        assert!(matches!(
            DensityMatrix::new(m),
            Err(Error::NotPositiveSemidefinite(_))
        ));
    }

    #[test]
    fn density_clamps_tiny_negative_eigenvalue() {
        let m = HermitianMatrix::from_diag(&[1.0 + 5e-11, -5e-11]);
        let rho = DensityMatrix::new(m).unwrap();
        assert!(rho.min_eigenvalue().unwrap() >= -1e-15);
    }

    #[test]
    fn commutator_pauli_oracle() {
        // direct 2x2 multiplication: i[sx, sy] = -2 sz
        let got = commutator(&HermitianMatrix::pauli_x(), &HermitianMatrix::pauli_y()).unwrap();
        let want = HermitianMatrix::pauli_z().scale(-2.0);
        assert!(got.sub(&want).unwrap().hs_norm() <= 1e-14);
    }

    #[test]
    fn commutator_self_and_identity_vanish() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let a = random_hermitian(3, &mut rng).unwrap();
        assert!(commutator(&a, &a).unwrap().hs_norm() <= 1e-12);
        let id = HermitianMatrix::identity(3);
        assert!(commutator(&a, &id).unwrap().hs_norm() <= 1e-12);
    }

    #[test]
    fn evolve_t_zero_is_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let xi = random_sqrt_state(3, &mut rng).unwrap();
        let h = random_hermitian(3, &mut rng).unwrap();
        let out = unitary_evolve(&xi, &h, 0.0).unwrap();
        assert!(out.as_herm().sub(xi.as_herm()).unwrap().hs_norm() <= 1e-14);
    }

    #[test]
    fn evolve_identity_hamiltonian_is_trivial() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let xi = random_sqrt_state(2, &mut rng).unwrap();
        let out = unitary_evolve(&xi, &HermitianMatrix::identity(2), 1.7).unwrap();
        assert!(out.as_herm().sub(xi.as_herm()).unwrap().hs_norm() <= 1e-10);
    }

    #[test]
    fn evolve_qubit_half_turn() {
        // oracle: exp(-i sz t) = diag(e^{-it}, e^{it}); at t = pi/2 the
        // sx eigenprojector (I + sx)/2 rotates to (I - sx)/2.
        let xi0 = SqrtState::new(
            HermitianMatrix::identity(2)
                .add(&HermitianMatrix::pauli_x())
                .unwrap()
                .scale(0.5),
        )
        .unwrap();
        let out = unitary_evolve(&xi0, &HermitianMatrix::pauli_z(), std::f64::consts::FRAC_PI_2)
            .unwrap();
        let want = HermitianMatrix::identity(2)
            .sub(&HermitianMatrix::pauli_x())
            .unwrap()
            .scale(0.5);
        assert!(out.as_herm().sub(&want).unwrap().hs_norm() <= 1e-10);
    }

    #[test]
    fn evolve_preserves_spectrum_and_norm() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let xi = random_sqrt_state(4, &mut rng).unwrap();
        let h = random_hermitian(4, &mut rng).unwrap();
        let out = unitary_evolve(&xi, &h, 0.83).unwrap();
        let (mut w0, _) = xi.as_herm().eigen().unwrap();
        let (mut w1, _) = out.as_herm().eigen().unwrap();
        w0.sort_by(|a, b| a.partial_cmp(b).unwrap());
        w1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in w0.iter().zip(&w1) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(
            hs_inner(out.as_herm(), out.as_herm()).unwrap(),
            1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn derivative_commuting_vanishes_at_every_order() {
        let xi = principal_sqrt(&DensityMatrix::new(HermitianMatrix::from_diag(&[0.7, 0.3])).unwrap())
            .unwrap();
        let h = HermitianMatrix::pauli_z(); // diagonal, commutes with xi
        for order in 1..=3 {
            assert!(derivatives_unitary(&xi, &h, order).unwrap().hs_norm() <= 1e-12);
        }
    }

    #[test]
    fn derivative_first_matches_finite_difference() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let xi = random_sqrt_state(3, &mut rng).unwrap();
        let h = random_hermitian(3, &mut rng).unwrap();
        let d1 = derivatives_unitary(&xi, &h, 1).unwrap();
        let step = 1e-5;
        let plus = unitary_evolve(&xi, &h, step).unwrap();
        let minus = unitary_evolve(&xi, &h, -step).unwrap();
        let fd = plus
            .as_herm()
            .sub(minus.as_herm())
            .unwrap()
            .scale(1.0 / (2.0 * step));
        let rel = d1.sub(&fd).unwrap().hs_norm() / d1.hs_norm();
        assert!(rel <= 1e-8, "relative error {rel}");
    }

    #[test]
    fn derivative_trace_orthogonal_to_state() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let xi = random_sqrt_state(4, &mut rng).unwrap();
        let h = random_hermitian(4, &mut rng).unwrap();
        let d1 = derivatives_unitary(&xi, &h, 1).unwrap();
        assert_abs_diff_eq!(hs_inner(&d1, xi.as_herm()).unwrap(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn derivative_rejects_bad_order() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let xi = random_sqrt_state(2, &mut rng).unwrap();
        let h = random_hermitian(2, &mut rng).unwrap();
        assert!(matches!(
            derivatives_unitary(&xi, &h, 4),
            Err(Error::InvalidOrder(4))
        ));
    }

    #[test]
    fn random_generators_are_deterministic_per_seed() {
        let mut r1 = ChaCha12Rng::seed_from_u64(42);
        let mut r2 = ChaCha12Rng::seed_from_u64(42);
        let a = random_hermitian(3, &mut r1).unwrap();
        let b = random_hermitian(3, &mut r2).unwrap();
        assert_eq!(a, b);
        let p1 = random_pure(3, &mut r1).unwrap();
        let p2 = random_pure(3, &mut r2).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn random_density_passes_invariants() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        for _ in 0..50 {
            let rho = random_density_hs(3, &mut rng).unwrap();
            assert_abs_diff_eq!(rho.as_herm().trace(), 1.0, epsilon = 1e-10);
            assert!(rho.min_eigenvalue().unwrap() >= -1e-10);
        }
    }

    #[test]
    fn random_rejects_dim_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        assert!(matches!(
            random_hermitian(1, &mut rng),
            Err(Error::DimensionTooSmall(1))
        ));
    }

    #[test]
    fn haar_projector_mean_is_maximally_mixed() {
        // Haar symmetry Monte-Carlo check: mean projector -> I/dim.
        let dim = 3;
        let n = 100_000;
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let mut acc = CMat::zeros(dim, dim);
        for _ in 0..n {
            let x = random_pure(dim, &mut rng).unwrap();
            acc += x.projector().matrix();
        }
        acc /= C64::new(n as f64, 0.0);
        // per-entry standard error of a bounded-by-1 quantity
        let se = 1.0 / (n as f64).sqrt();
        for i in 0..dim {
            for j in 0..dim {
                let want = if i == j { 1.0 / dim as f64 } else { 0.0 };
                assert!((acc[(i, j)].re - want).abs() <= 5.0 * se);
                assert!(acc[(i, j)].im.abs() <= 5.0 * se);
            }
        }
    }

    #[test]
    fn unitary_evolution_is_hs_isometry() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let xi = random_sqrt_state(3, &mut rng).unwrap();
            let eta = random_sqrt_state(3, &mut rng).unwrap();
            let h = random_hermitian(3, &mut rng).unwrap();
            let t: f64 = rng.gen_range(-2.0..2.0);
            let d0 = xi.as_herm().sub(eta.as_herm()).unwrap();
            let before = hs_inner(&d0, &d0).unwrap();
            let xt = unitary_evolve(&xi, &h, t).unwrap();
            let et = unitary_evolve(&eta, &h, t).unwrap();
            let d1 = xt.as_herm().sub(et.as_herm()).unwrap();
            let after = hs_inner(&d1, &d1).unwrap();
            assert!((before - after).abs() <= 1e-9);
        }
    }

    #[test]
    fn purity_is_preserved_along_the_flow() {
        // boundary tangency stand-in: rank-deficient states stay rank-deficient
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let x = random_pure(3, &mut rng).unwrap();
        let xi0 = x.sqrt_state();
        let h = random_hermitian(3, &mut rng).unwrap();
        for k in 1..=10 {
            let xt = unitary_evolve(&xi0, &h, 0.3 * k as f64).unwrap();
            let min = xt.square().min_eigenvalue().unwrap();
            assert!(min.abs() <= 1e-9, "min eigenvalue {min}");
        }
    }

    #[test]
    fn derivatives_match_higher_finite_differences() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let xi = random_sqrt_state(3, &mut rng).unwrap();
        let h = random_hermitian(3, &mut rng).unwrap();
        let ev = |t: f64| unitary_evolve(&xi, &h, t).unwrap().as_herm().clone();

        // order 2, central: (f(h) - 2 f(0) + f(-h)) / h^2
        let s2 = 1e-3;
        let d2 = derivatives_unitary(&xi, &h, 2).unwrap();
        let fd2 = ev(s2)
            .add(&ev(-s2))
            .unwrap()
            .sub(&xi.as_herm().scale(2.0))
            .unwrap()
            .scale(1.0 / (s2 * s2));
        assert!(d2.sub(&fd2).unwrap().hs_norm() / d2.hs_norm() <= 1e-5);

        // order 3, central 4-point: (-f(-2h) + 2 f(-h) - 2 f(h) + f(2h)) / (2 h^3)
        let s3 = 1e-3;
        let d3 = derivatives_unitary(&xi, &h, 3).unwrap();
        let fd3 = ev(2.0 * s3)
            .sub(&ev(-2.0 * s3))
            .unwrap()
            .add(&ev(-s3).scale(2.0))
            .unwrap()
            .sub(&ev(s3).scale(2.0))
            .unwrap()
            .scale(1.0 / (2.0 * s3 * s3 * s3));
        assert!(d3.sub(&fd3).unwrap().hs_norm() / d3.hs_norm() <= 1e-4);
    }

    #[test]
    fn sqrt_round_trip_across_dims() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        for &dim in &[2usize, 3, 4, 8] {
            for _ in 0..100 {
                let rho = random_density_hs(dim, &mut rng).unwrap();
                let xi = principal_sqrt(&rho).unwrap();
                let back = xi.square();
                let diff = back.as_herm().sub(rho.as_herm()).unwrap();
                assert!(diff.hs_norm() <= 1e-10);
            }
        }
    }
}
