use nalgebra::{ComplexField, DMatrix, Dim, Matrix, Matrix3, RawStorage, SVD};

/// Largest entry modulus.
pub fn max_abs<T, R, C, S>(m: &Matrix<T, R, C, S>) -> f64
where
    T: ComplexField<RealField = f64>,
    R: Dim,
    C: Dim,
    S: RawStorage<T, R, C>,
{
    m.iter().fold(0.0, |acc, z| acc.max(z.clone().modulus()))
}

/// SVD of a 3×3 real matrix with singular values sorted in descending order:
/// `m = left * diag(sigma) * right^t`.
pub fn sorted_svd3(m: &Matrix3<f64>) -> (Matrix3<f64>, [f64; 3], Matrix3<f64>) {
    let svd = SVD::new(*m, true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^t").transpose();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let left = Matrix3::from_columns(&order.map(|k| u.column(k).into_owned()));
    let right = Matrix3::from_columns(&order.map(|k| v.column(k).into_owned()));
    (left, order.map(|k| svd.singular_values[k]), right)
}

/// Orthogonal polar factor of a square matrix together with `max |m - Q|`.
pub fn polar_orthogonal(m: &Matrix3<f64>) -> (Matrix3<f64>, f64) {
    let svd = SVD::new(*m, true, true);
    let q = svd.u.expect("requested U") * svd.v_t.expect("requested V^t");
    (q, max_abs(&(m - q)))
}

/// Singular values in descending order.
pub fn singular_values_desc(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rank_tol * max(1, σ_max)`.
pub fn numerical_rank(singular_values: &[f64], rank_tol: f64) -> usize {
    let smax = singular_values.first().copied().unwrap_or(0.0);
    let cutoff = rank_tol * smax.max(1.0);
    singular_values.iter().filter(|&&s| s > cutoff).count()
}

/// Kronecker product of real matrices in the given order.
pub fn kron_all(factors: &[Matrix3<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for f in factors {
        let f = DMatrix::from_column_slice(3, 3, f.as_slice());
        out = out.kronecker(&f);
    }
    out
}
