//! Multi-qubit density matrices, local unitaries and the SU(2) → SO(3) cover.
//!
//! Qubits are numbered from 1 in labels but stored left to right: qubit 1 is
//! the leftmost tensor factor, i.e. the most significant bit of a basis index.
//! `LocalUnitary::factors()[0]` acts on qubit 1.

use nalgebra::{DMatrix, Matrix2, Matrix3};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::max_abs;

/// Absolute / relative tolerance pair used by validation routines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { atol: 1e-10, rtol: 1e-9 }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum StateError {
    #[error("bad dimension {rows}x{cols}: expected a square matrix of side 2^N, N >= 1")]
    BadDimension { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |rho - rho^dag| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("trace is not one: tr = {trace} (deviation {deviation:e})")]
    TraceNotOne { trace: f64, deviation: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("amplitude vector is zero")]
    ZeroVector,
    #[error("rank {rank} outside 1..={dim}")]
    BadRank { rank: usize, dim: usize },
    #[error("expected {expected} local factors, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("not in SU(2): max |U U^dag - I| = {unitarity:e}, |det U - 1| = {det_deviation:e}")]
    NotSpecialUnitary { unitarity: f64, det_deviation: f64 },
    #[error("not in SO(3): max |O O^t - I| = {orthogonality:e}, det O = {det}")]
    NotRotation { orthogonality: f64, det: f64 },
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The Pauli matrices σx, σy, σz in that order.
pub fn pauli(k: usize) -> Matrix2<C64> {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match k {
        0 => Matrix2::new(z, o, o, z),
        1 => Matrix2::new(z, -i, i, z),
        2 => Matrix2::new(o, z, z, -o),
        _ => panic!("Pauli index {k} out of range 0..3"),
    }
}

fn qubits_for_dim(rows: usize, cols: usize) -> Result<usize, StateError> {
    if rows != cols || rows < 2 || !rows.is_power_of_two() {
        return Err(StateError::BadDimension { rows, cols });
    }
    Ok(rows.trailing_zeros() as usize)
}

/// A validated N-qubit density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    n_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DensityState {
    /// Wraps a matrix already known to be a valid state (dimension checked).
    pub(crate) fn from_trusted(matrix: DMatrix<C64>) -> Self {
        let n_qubits = matrix.nrows().trailing_zeros() as usize;
        Self { n_qubits, matrix }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// The complex conjugate ρ̄ (equivalently ρᵗ), again a valid state.
    pub fn conjugate(&self) -> Self {
        Self { n_qubits: self.n_qubits, matrix: self.matrix.map(|z| z.conj()) }
    }
}

fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let herm = (m + m.adjoint()) * c(0.5, 0.0);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Checks Hermiticity, unit trace and positivity (via eigenvalues, so rank
/// deficient states pass) and infers the qubit count.
pub fn validate_density(m: DMatrix<C64>, tol: &Tolerance) -> Result<DensityState, StateError> {
    let n_qubits = qubits_for_dim(m.nrows(), m.ncols())?;
    let deviation = max_abs(&(&m - m.adjoint()));
    if deviation > tol.atol {
        return Err(StateError::NotHermitian { deviation });
    }
    let trace = m.trace();
    let trace_dev = (trace - c(1.0, 0.0)).norm();
    if trace_dev > tol.atol {
        return Err(StateError::TraceNotOne { trace: trace.re, deviation: trace_dev });
    }
    let min_eigenvalue = hermitian_eigenvalues(&m)[0];
    if min_eigenvalue < -tol.atol {
        return Err(StateError::NotPositive { min_eigenvalue });
    }
    Ok(DensityState { n_qubits, matrix: m })
}

/// |ψ⟩⟨ψ| for the normalized amplitude vector.
pub fn pure_state_density(amplitudes: &[C64]) -> Result<DensityState, StateError> {
    let dim = amplitudes.len();
    qubits_for_dim(dim, dim)?;
    let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if !norm_sqr.is_finite() || norm_sqr <= 0.0 {
        return Err(StateError::ZeroVector);
    }
    let scale = 1.0 / norm_sqr.sqrt();
    let psi: Vec<C64> = amplitudes.iter().map(|a| a * scale).collect();
    let m = DMatrix::from_fn(dim, dim, |i, j| psi[i] * psi[j].conj());
    validate_density(m, &Tolerance::default())
}

fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

/// ρ = G G† / Tr(G G†) for a 2^N × rank Ginibre matrix G.
pub fn random_density<R: Rng + ?Sized>(
    n_qubits: usize,
    rank: usize,
    rng: &mut R,
) -> Result<DensityState, StateError> {
    if n_qubits == 0 || n_qubits > 16 {
        return Err(StateError::BadDimension { rows: 0, cols: 0 });
    }
    let dim = 1usize << n_qubits;
    if rank == 0 || rank > dim {
        return Err(StateError::BadRank { rank, dim });
    }
    let mut g = DMatrix::<C64>::zeros(dim, rank);
    for i in 0..dim {
        for j in 0..rank {
            g[(i, j)] = standard_complex(rng);
        }
    }
    let gg = &g * g.adjoint();
    let gg = (&gg + gg.adjoint()) * c(0.5, 0.0);
    let tr = gg.trace().re;
    Ok(DensityState::from_trusted(gg / c(tr, 0.0)))
}

/// Checks the SU(2) conditions on a 2×2 matrix.
pub fn check_su2(u: &Matrix2<C64>, atol: f64) -> Result<(), StateError> {
    let unitarity = max_abs(&(u * u.adjoint() - Matrix2::identity()));
    let det_deviation = (u.determinant() - c(1.0, 0.0)).norm();
    if unitarity > atol || det_deviation > atol {
        return Err(StateError::NotSpecialUnitary { unitarity, det_deviation });
    }
    Ok(())
}

/// A tensor product U₁ ⊗ … ⊗ U_N of SU(2) factors.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnitary {
    factors: Vec<Matrix2<C64>>,
}

impl LocalUnitary {
    pub fn new(factors: Vec<Matrix2<C64>>, atol: f64) -> Result<Self, StateError> {
        for u in &factors {
            check_su2(u, atol)?;
        }
        Ok(Self { factors })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { factors: vec![Matrix2::identity(); n_qubits] }
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Matrix2<C64>] {
        &self.factors
    }

    /// The full 2^N × 2^N operator, qubit 1 leftmost.
    pub fn kron(&self) -> DMatrix<C64> {
        let mut out = DMatrix::from_element(1, 1, c(1.0, 0.0));
        for f in &self.factors {
            let f = DMatrix::from_column_slice(2, 2, f.as_slice());
            out = out.kronecker(&f);
        }
        out
    }

    /// The SO(3) images of the factors.
    pub fn rotations(&self) -> Vec<Rotation3> {
        self.factors.iter().map(su2_rotation_unchecked).collect()
    }
}

/// Haar-random SU(2) element from a normalized Gaussian quaternion.
pub fn random_su2<R: Rng + ?Sized>(rng: &mut R) -> Matrix2<C64> {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            let [a, b, cc, d] = q.map(|x| x / norm);
            return Matrix2::new(c(a, b), c(cc, d), c(-cc, d), c(a, -b));
        }
    }
}

pub fn random_local_unitary<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> LocalUnitary {
    LocalUnitary { factors: (0..n_qubits).map(|_| random_su2(rng)).collect() }
}

/// (⊗Uᵢ) ρ (⊗Uᵢ)†.
pub fn apply_local_unitary(
    state: &DensityState,
    lu: &LocalUnitary,
) -> Result<DensityState, StateError> {
    if lu.n_qubits() != state.n_qubits() {
        return Err(StateError::ArityMismatch { expected: state.n_qubits(), found: lu.n_qubits() });
    }
    let u = lu.kron();
    let out = &u * state.matrix() * u.adjoint();
    let out = (&out + out.adjoint()) * c(0.5, 0.0);
    Ok(DensityState::from_trusted(out))
}

/// A proper rotation of ℝ³.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation3 {
    matrix: Matrix3<f64>,
}

impl Rotation3 {
    pub fn new(matrix: Matrix3<f64>, atol: f64) -> Result<Self, StateError> {
        let orthogonality = max_abs(&(matrix * matrix.transpose() - Matrix3::identity()));
        let det = matrix.determinant();
        if orthogonality > atol || (det - 1.0).abs() > atol {
            return Err(StateError::NotRotation { orthogonality, det });
        }
        Ok(Self { matrix })
    }

    pub fn identity() -> Self {
        Self { matrix: Matrix3::identity() }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }
}

fn su2_rotation_unchecked(u: &Matrix2<C64>) -> Rotation3 {
    let ud = u.adjoint();
    let matrix = Matrix3::from_fn(|k, l| 0.5 * (pauli(k) * u * pauli(l) * ud).trace().re);
    Rotation3 { matrix }
}

/// O_kl = ½ Tr(σ_k U σ_l U†), so that U σ_l U† = Σ_k O_kl σ_k and a Bloch
/// vector transforms as T ↦ O T.
pub fn su2_to_so3(u: &Matrix2<C64>, atol: f64) -> Result<Rotation3, StateError> {
    check_su2(u, atol)?;
    Ok(su2_rotation_unchecked(u))
}

const SIGN_EPS: f64 = 1e-12;

/// One of the two SU(2) preimages of `o`.
///
/// The sign is fixed so that the first component of (Re U₀₀, Im U₀₀, Re U₀₁,
/// Im U₀₁, …) exceeding 1e-12 in magnitude is positive. When Re Tr U ≠ 0
/// this is the preimage with positive trace.
pub fn so3_to_su2(o: &Rotation3) -> Matrix2<C64> {
    let r = o.matrix();
    let tr = r.trace();
    // Shepperd's method: divide by the largest of 4w, 4x, 4y, 4z.
    let (w, x, y, z) = if tr > r[(0, 0)] && tr > r[(1, 1)] && tr > r[(2, 2)] {
        let s = 2.0 * (1.0 + tr).sqrt();
        (s / 4.0, (r[(2, 1)] - r[(1, 2)]) / s, (r[(0, 2)] - r[(2, 0)]) / s, (r[(1, 0)] - r[(0, 1)]) / s)
    } else if r[(0, 0)] >= r[(1, 1)] && r[(0, 0)] >= r[(2, 2)] {
        let s = 2.0 * (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt();
        ((r[(2, 1)] - r[(1, 2)]) / s, s / 4.0, (r[(0, 1)] + r[(1, 0)]) / s, (r[(0, 2)] + r[(2, 0)]) / s)
    } else if r[(1, 1)] >= r[(2, 2)] {
        let s = 2.0 * (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt();
        ((r[(0, 2)] - r[(2, 0)]) / s, (r[(0, 1)] + r[(1, 0)]) / s, s / 4.0, (r[(1, 2)] + r[(2, 1)]) / s)
    } else {
        let s = 2.0 * (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt();
        ((r[(1, 0)] - r[(0, 1)]) / s, (r[(0, 2)] + r[(2, 0)]) / s, (r[(1, 2)] + r[(2, 1)]) / s, s / 4.0)
    };
    let norm = (w * w + x * x + y * y + z * z).sqrt();
    let (w, x, y, z) = (w / norm, x / norm, y / norm, z / norm);
    // U = w I - i (x σx + y σy + z σz)
    let u = Matrix2::new(c(w, -z), c(-y, -x), c(y, -x), c(w, z));
    let leading = u
        .transpose()
        .iter()
        .flat_map(|e| [e.re, e.im])
        .find(|v| v.abs() > SIGN_EPS)
        .unwrap_or(1.0);
    if leading < 0.0 {
        -u
    } else {
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn diag(entries: &[f64]) -> DMatrix<C64> {
        let n = entries.len();
        DMatrix::from_fn(n, n, |i, j| if i == j { c(entries[i], 0.0) } else { c(0.0, 0.0) })
    }

    fn ket(bits: usize, n: usize) -> Vec<C64> {
        (0..1 << n).map(|i| if i == bits { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()
    }

    #[test]
    fn maximally_mixed_validates() {
        let s = validate_density(diag(&[0.25; 4]), &Tolerance::default()).unwrap();
        assert_eq!(s.n_qubits(), 2);
    }

    #[test]
    fn product_projector_validates() {
        let s = validate_density(diag(&[1.0, 0.0, 0.0, 0.0]), &Tolerance::default()).unwrap();
        assert_eq!(s.n_qubits(), 2);
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        let err = validate_density(diag(&[0.6, 0.6, -0.1, -0.1]), &Tolerance::default()).unwrap_err();
        match err {
            StateError::NotPositive { min_eigenvalue } => assert!((min_eigenvalue + 0.1).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validation_error_paths() {
        let tol = Tolerance::default();
        assert!(matches!(
            validate_density(DMatrix::zeros(3, 3), &tol),
            Err(StateError::BadDimension { rows: 3, cols: 3 })
        ));
        assert!(matches!(
            validate_density(DMatrix::zeros(2, 4), &tol),
            Err(StateError::BadDimension { .. })
        ));
        assert!(matches!(
            validate_density(diag(&[0.5, 0.4]), &tol),
            Err(StateError::TraceNotOne { .. })
        ));
        let mut m = diag(&[0.5, 0.5]);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(validate_density(m, &tol), Err(StateError::NotHermitian { .. })));
    }

    #[test]
    fn pure_state_examples() {
        let s = pure_state_density(&ket(0, 2)).unwrap();
        assert_eq!(s.matrix(), &diag(&[1.0, 0.0, 0.0, 0.0]));

        let bell = pure_state_density(&[c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0)])
            .unwrap();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((bell.matrix()[(i, j)].re - 0.5).abs() < 1e-15);
        }

        let scaled: Vec<C64> = ket(0, 2).iter().map(|a| a * 2.0).collect();
        assert_eq!(pure_state_density(&scaled).unwrap().matrix(), &diag(&[1.0, 0.0, 0.0, 0.0]));

        assert_eq!(pure_state_density(&[c(0.0, 0.0); 4]), Err(StateError::ZeroVector));
    }

    #[test]
    fn random_density_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let full = random_density(2, 4, &mut rng).unwrap();
        validate_density(full.matrix().clone(), &Tolerance::default()).unwrap();
        assert!(full.eigenvalues()[0] > 1e-6);

        let pure = random_density(2, 1, &mut rng).unwrap();
        assert!((pure.purity() - 1.0).abs() < 1e-9);

        let a = random_density(3, 5, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = random_density(3, 5, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);

        assert_eq!(
            random_density(2, 5, &mut rng).unwrap_err(),
            StateError::BadRank { rank: 5, dim: 4 }
        );
        assert!(random_density(2, 0, &mut rng).is_err());
    }

    #[test]
    fn random_local_unitary_is_special_unitary_and_seeded() {
        let lu = random_local_unitary(2, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(lu.n_qubits(), 2);
        for u in lu.factors() {
            check_su2(u, 1e-12).unwrap();
        }
        let one = random_local_unitary(1, &mut ChaCha8Rng::seed_from_u64(4));
        assert!((one.factors()[0].determinant() - c(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(lu, random_local_unitary(2, &mut ChaCha8Rng::seed_from_u64(3)));
    }

    #[test]
    fn apply_identity_and_mixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = random_density(2, 3, &mut rng).unwrap();
        let same = apply_local_unitary(&rho, &LocalUnitary::identity(2)).unwrap();
        assert!(max_abs(&(same.matrix() - rho.matrix())) < 1e-15);

        let mixed = validate_density(diag(&[0.25; 4]), &Tolerance::default()).unwrap();
        let lu = random_local_unitary(2, &mut rng);
        let out = apply_local_unitary(&mixed, &lu).unwrap();
        assert!(max_abs(&(out.matrix() - mixed.matrix())) < 1e-14);

        assert_eq!(
            apply_local_unitary(&rho, &LocalUnitary::identity(3)).unwrap_err(),
            StateError::ArityMismatch { expected: 2, found: 3 }
        );
    }

    #[test]
    fn flip_first_qubit() {
        // iσx ∈ SU(2) on qubit 1 maps |00⟩ to |10⟩ (index 2).
        let i_sx = pauli(0) * c(0.0, 1.0);
        let lu = LocalUnitary::new(vec![i_sx, Matrix2::identity()], 1e-12).unwrap();
        let s = pure_state_density(&ket(0, 2)).unwrap();
        let out = apply_local_unitary(&s, &lu).unwrap();
        assert!(max_abs(&(out.matrix() - diag(&[0.0, 0.0, 1.0, 0.0]))) < 1e-15);
    }

    #[test]
    fn cover_examples() {
        let id = su2_to_so3(&Matrix2::identity(), 1e-12).unwrap();
        assert!(max_abs(&(id.matrix() - Matrix3::identity())) < 1e-15);

        let i_sx = pauli(0) * c(0.0, 1.0);
        let o = su2_to_so3(&i_sx, 1e-12).unwrap();
        assert!(max_abs(&(o.matrix() - Matrix3::from_diagonal(&[1.0, -1.0, -1.0].into()))) < 1e-15);

        let theta = std::f64::consts::FRAC_PI_2;
        let rz = Matrix2::new(c((theta / 2.0).cos(), -(theta / 2.0).sin()), c(0.0, 0.0), c(0.0, 0.0), c((theta / 2.0).cos(), (theta / 2.0).sin()));
        let o = su2_to_so3(&rz, 1e-12).unwrap();
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert!(max_abs(&(o.matrix() - expected)) < 1e-15);

        // the cover is two-to-one
        assert_eq!(su2_to_so3(&-rz, 1e-12).unwrap(), o);

        assert!(matches!(su2_to_so3(&(pauli(0)), 1e-12), Err(StateError::NotSpecialUnitary { .. })));
    }

    #[test]
    fn lift_examples() {
        let u = so3_to_su2(&Rotation3::identity());
        assert!(max_abs(&(u - Matrix2::identity())) < 1e-15);

        let o = Rotation3::new(Matrix3::from_diagonal(&[1.0, -1.0, -1.0].into()), 1e-12).unwrap();
        let u = so3_to_su2(&o);
        let i_sx = pauli(0) * c(0.0, 1.0);
        assert!(max_abs(&(u - i_sx)) < 1e-15, "{u}");

        let reflection = Matrix3::from_diagonal(&[-1.0, 1.0, 1.0].into());
        assert!(matches!(Rotation3::new(reflection, 1e-10), Err(StateError::NotRotation { .. })));
    }

    #[test]
    fn lift_round_trip_and_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..1000 {
            let u = random_su2(&mut rng);
            let v = random_su2(&mut rng);
            let back = so3_to_su2(&su2_to_so3(&u, 1e-12).unwrap());
            let err = max_abs(&(back - u)).min(max_abs(&(back + u)));
            assert!(err <= 1e-10, "round trip error {err}");
            assert!(back.trace().re >= -SIGN_EPS);

            let uv = su2_to_so3(&(u * v), 1e-10).unwrap();
            let prod = su2_to_so3(&u, 1e-12).unwrap().matrix() * su2_to_so3(&v, 1e-12).unwrap().matrix();
            assert!(max_abs(&(uv.matrix() - prod)) <= 1e-10);
        }
    }

    #[test]
    fn conjugation_preserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for n in 1..=3 {
            let rho = random_density(n, 1 << n, &mut rng).unwrap();
            let lu = random_local_unitary(n, &mut rng);
            let out = apply_local_unitary(&rho, &lu).unwrap();
            validate_density(out.matrix().clone(), &Tolerance::default()).unwrap();
            for (a, b) in rho.eigenvalues().iter().zip(out.eigenvalues()) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
    }
}
