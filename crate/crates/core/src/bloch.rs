//! Generalized Bloch correlation tensors.
//!
//! For an N-qubit state and an ascending qubit subset {j₁ < … < j_M}, the
//! tensor entry with Pauli indices (α₁ … α_M) is
//!
//! ```text
//! T^{α₁…α_M}_{j₁…j_M} = 2^{-N} Tr[ρ σ_{α₁}^{(j₁)} ⋯ σ_{α_M}^{(j_M)}]
//! ```
//!
//! Entries are stored flat in row-major order: the Pauli index of the last
//! qubit of the subset runs fastest, with x, y, z ↦ 0, 1, 2. The 2^{-N}
//! normalization is kept as-is.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::qstate::{validate_density, DensityState, StateError, Tolerance};

/// Extraction works on dense 2^N × 2^N matrices; 4^6 coefficients is the cap.
pub const MAX_QUBITS: usize = 6;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum BlochError {
    #[error("{n} qubits exceeds the supported maximum of {max}")]
    TooManyQubits { n: usize, max: usize },
    #[error("tensor family is incomplete: {0}")]
    IncompleteTensors(String),
    #[error("bad partition: {0}")]
    BadPartition(String),
    #[error("matrix is not symmetric (max asymmetry {deviation:e})")]
    NotSymmetric { deviation: f64 },
    #[error(transparent)]
    State(#[from] StateError),
}

/// An ascending set of distinct 1-based qubit labels.
///
/// Ordered by size first, then lexicographically, so iteration runs
/// T1, T2, …, T12, T13, …, T123, ….
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QubitSet(Vec<usize>);

impl QubitSet {
    /// Sorts and deduplicates-checks the labels; `None` on repeats or a zero label.
    pub fn new(labels: impl IntoIterator<Item = usize>) -> Option<Self> {
        let mut v: Vec<usize> = labels.into_iter().collect();
        v.sort_unstable();
        let distinct = v.windows(2).all(|w| w[0] != w[1]);
        (distinct && v.first().is_none_or(|&q| q >= 1)).then_some(Self(v))
    }

    pub fn single(q: usize) -> Self {
        Self(vec![q])
    }

    pub fn range(n: usize) -> Self {
        Self((1..=n).collect())
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.0.binary_search(&q).is_ok()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn is_subset(&self, other: &QubitSet) -> bool {
        self.0.iter().all(|&q| other.contains(q))
    }

    pub fn is_disjoint(&self, other: &QubitSet) -> bool {
        self.0.iter().all(|&q| !other.contains(q))
    }

    pub fn union(&self, other: &QubitSet) -> QubitSet {
        QubitSet::new(self.0.iter().chain(other.0.iter()).copied().collect::<std::collections::BTreeSet<_>>())
            .expect("union of valid sets")
    }

    pub fn difference(&self, other: &QubitSet) -> QubitSet {
        QubitSet(self.0.iter().copied().filter(|&q| !other.contains(q)).collect())
    }

    /// Dimension 3^|S| of the real space indexed by this set.
    pub fn space_dim(&self) -> usize {
        3usize.pow(self.0.len() as u32)
    }

    /// All nonempty subsets of {1..n} in the set ordering.
    pub fn all_nonempty(n: usize) -> Vec<QubitSet> {
        let mut out: Vec<QubitSet> = (1u32..(1 << n))
            .map(|mask| QubitSet((0..n).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect()))
            .collect();
        out.sort();
        out
    }
}

impl Ord for QubitSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for QubitSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for QubitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in &self.0 {
            write!(f, "{q}")?;
        }
        Ok(())
    }
}

/// Splits a row-major flat index over `len` Pauli slots into its digits.
fn digits(mut flat: usize, len: usize) -> Vec<usize> {
    let mut d = vec![0; len];
    for k in (0..len).rev() {
        d[k] = flat % 3;
        flat /= 3;
    }
    d
}

fn flatten(digits: impl IntoIterator<Item = usize>) -> usize {
    digits.into_iter().fold(0, |acc, d| acc * 3 + d)
}

/// Folds a flat tensor over `subset` into a 3^|rows| × 3^|cols| matrix.
/// `rows` and `cols` must partition `subset`.
pub(crate) fn fold_data(data: &[f64], subset: &QubitSet, rows: &QubitSet) -> DMatrix<f64> {
    let cols = subset.difference(rows);
    let row_pos: Vec<usize> = rows.as_slice().iter().map(|q| subset.as_slice().binary_search(q).unwrap()).collect();
    let col_pos: Vec<usize> = cols.as_slice().iter().map(|q| subset.as_slice().binary_search(q).unwrap()).collect();
    let mut m = DMatrix::zeros(rows.space_dim(), cols.space_dim());
    for (flat, &value) in data.iter().enumerate() {
        let d = digits(flat, subset.len());
        let r = flatten(row_pos.iter().map(|&k| d[k]));
        let c = flatten(col_pos.iter().map(|&k| d[k]));
        m[(r, c)] = value;
    }
    m
}

/// Inverse of [`fold_data`]: flattens a rows × cols matrix back over the
/// ascending union of the two sets.
pub(crate) fn unfold_data(m: &DMatrix<f64>, rows: &QubitSet, cols: &QubitSet) -> Vec<f64> {
    let subset = rows.union(cols);
    let row_pos: Vec<usize> = rows.as_slice().iter().map(|q| subset.as_slice().binary_search(q).unwrap()).collect();
    let col_pos: Vec<usize> = cols.as_slice().iter().map(|q| subset.as_slice().binary_search(q).unwrap()).collect();
    let mut out = vec![0.0; subset.space_dim()];
    for (flat, slot) in out.iter_mut().enumerate() {
        let d = digits(flat, subset.len());
        let r = flatten(row_pos.iter().map(|&k| d[k]));
        let c = flatten(col_pos.iter().map(|&k| d[k]));
        *slot = m[(r, c)];
    }
    out
}

/// The full family of correlation tensors of an N-qubit state, one per
/// nonempty ascending subset.
#[derive(Clone, Debug, PartialEq)]
pub struct BlochTensors {
    n_qubits: usize,
    tensors: BTreeMap<QubitSet, Vec<f64>>,
}

impl BlochTensors {
    pub fn zeros(n_qubits: usize) -> Self {
        let tensors = QubitSet::all_nonempty(n_qubits)
            .into_iter()
            .map(|s| {
                let len = s.space_dim();
                (s, vec![0.0; len])
            })
            .collect();
        Self { n_qubits, tensors }
    }

    /// Builds a family from explicit tensors; every nonempty subset of {1..n}
    /// must be present with 3^|S| entries.
    pub fn from_map(n_qubits: usize, tensors: BTreeMap<QubitSet, Vec<f64>>) -> Result<Self, BlochError> {
        for s in QubitSet::all_nonempty(n_qubits) {
            match tensors.get(&s) {
                None => return Err(BlochError::IncompleteTensors(format!("missing T{s}"))),
                Some(v) if v.len() != s.space_dim() => {
                    return Err(BlochError::IncompleteTensors(format!(
                        "T{s} has {} entries, expected {}",
                        v.len(),
                        s.space_dim()
                    )))
                }
                Some(_) => {}
            }
        }
        if tensors.len() != (1 << n_qubits) - 1 {
            return Err(BlochError::IncompleteTensors(format!("unexpected subsets for {n_qubits} qubits")));
        }
        Ok(Self { n_qubits, tensors })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn get(&self, subset: &QubitSet) -> Option<&[f64]> {
        self.tensors.get(subset).map(Vec::as_slice)
    }

    pub fn get_mut(&mut self, subset: &QubitSet) -> Option<&mut Vec<f64>> {
        self.tensors.get_mut(subset)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&QubitSet, &[f64])> {
        self.tensors.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Tᵢ as a 3-vector.
    pub fn vector(&self, i: usize) -> Option<Vector3<f64>> {
        self.get(&QubitSet::single(i)).map(Vector3::from_column_slice)
    }

    /// Tᵢⱼ as a 3×3 matrix, rows indexed by qubit i; Tᵢⱼ = Tⱼᵢᵗ for i > j.
    pub fn pair(&self, i: usize, j: usize) -> Option<Matrix3<f64>> {
        let (a, b) = (i.min(j), i.max(j));
        let data = self.get(&QubitSet::new([a, b])?)?;
        let m = Matrix3::from_row_slice(data);
        Some(if i < j { m } else { m.transpose() })
    }

    /// Tensors after the local rotations (O_{j₁} ⊗ ⋯ ⊗ O_{j_M}) act on each
    /// subset; `rotations[k]` acts on qubit k + 1.
    pub fn rotated(&self, rotations: &[Matrix3<f64>]) -> Self {
        assert_eq!(rotations.len(), self.n_qubits, "one rotation per qubit");
        let tensors = self
            .tensors
            .iter()
            .map(|(s, data)| {
                let mut cur = data.clone();
                let m = s.len();
                for (mode, &q) in s.as_slice().iter().enumerate() {
                    let o = &rotations[q - 1];
                    let stride = 3usize.pow((m - 1 - mode) as u32);
                    let mut next = vec![0.0; cur.len()];
                    for (flat, slot) in next.iter_mut().enumerate() {
                        let a = (flat / stride) % 3;
                        let base = flat - a * stride;
                        *slot = (0..3).map(|b| o[(a, b)] * cur[base + b * stride]).sum();
                    }
                    cur = next;
                }
                (s.clone(), cur)
            })
            .collect();
        Self { n_qubits: self.n_qubits, tensors }
    }

    /// Largest entry modulus over all tensors.
    pub fn max_abs(&self) -> f64 {
        self.tensors.values().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Bit masks describing a Pauli string on the computational basis:
/// P|c⟩ = i^{n_y} (-1)^{popcount(c & phase)} |c ⊕ flip⟩.
struct PauliMasks {
    flip: usize,
    phase: usize,
    n_y: u32,
}

fn pauli_masks(subset: &QubitSet, alphas: &[usize], n: usize) -> PauliMasks {
    let mut masks = PauliMasks { flip: 0, phase: 0, n_y: 0 };
    for (&q, &a) in subset.as_slice().iter().zip(alphas) {
        let bit = 1 << (n - q);
        match a {
            0 => masks.flip |= bit,
            1 => {
                masks.flip |= bit;
                masks.phase |= bit;
                masks.n_y += 1;
            }
            _ => masks.phase |= bit,
        }
    }
    masks
}

fn i_pow(k: u32) -> C64 {
    [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)][(k % 4) as usize]
}

fn parity_sign(x: usize) -> f64 {
    if x.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Computes every correlation tensor by applying each Pauli string through
/// bit masks rather than dense Kronecker products.
pub fn extract_tensors(state: &DensityState) -> Result<BlochTensors, BlochError> {
    let n = state.n_qubits();
    if n > MAX_QUBITS {
        return Err(BlochError::TooManyQubits { n, max: MAX_QUBITS });
    }
    let dim = state.dim();
    let rho = state.matrix();
    let scale = 1.0 / dim as f64;
    let mut out = BlochTensors::zeros(n);
    for (subset, data) in out.tensors.iter_mut() {
        for (flat, slot) in data.iter_mut().enumerate() {
            let alphas = digits(flat, subset.len());
            let m = pauli_masks(subset, &alphas, n);
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..dim {
                acc += rho[(c, c ^ m.flip)] * parity_sign(c & m.phase);
            }
            *slot = (acc * i_pow(m.n_y)).re * scale;
        }
    }
    Ok(out)
}

/// ρ = 2^{-N} I + Σ T · (Pauli strings), validated as a state.
pub fn reconstruct_density(t: &BlochTensors) -> Result<DensityState, BlochError> {
    let n = t.n_qubits();
    if n == 0 || n > MAX_QUBITS {
        return Err(BlochError::TooManyQubits { n, max: MAX_QUBITS });
    }
    let dim = 1usize << n;
    let mut rho = DMatrix::<C64>::zeros(dim, dim);
    for c in 0..dim {
        rho[(c, c)] = C64::new(1.0 / dim as f64, 0.0);
    }
    for (subset, data) in t.iter() {
        for (flat, &coef) in data.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            let alphas = digits(flat, subset.len());
            let m = pauli_masks(subset, &alphas, n);
            let phase = i_pow(m.n_y) * coef;
            for c in 0..dim {
                rho[(c ^ m.flip, c)] += phase * parity_sign(c & m.phase);
            }
        }
    }
    Ok(validate_density(rho, &Tolerance::default())?)
}

/// A tensor T_S realigned as a 3^|A| × 3^|B| matrix for the bipartition S = A ∪ B.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldedTensor {
    pub pivot: QubitSet,
    pub complement: QubitSet,
    pub matrix: DMatrix<f64>,
}

impl FoldedTensor {
    /// Flat parent tensor over the ascending union of pivot and complement.
    pub fn unfold(&self) -> Vec<f64> {
        unfold_data(&self.matrix, &self.pivot, &self.complement)
    }
}

/// Realigns T_subset with rows indexed by `pivot` and columns by the rest,
/// both in ascending qubit order.
pub fn fold(t: &BlochTensors, subset: &QubitSet, pivot: &QubitSet) -> Result<FoldedTensor, BlochError> {
    if pivot.is_empty() || !pivot.is_subset(subset) || pivot.len() == subset.len() {
        return Err(BlochError::BadPartition(format!("T{subset}: pivot {{{pivot}}} must be a nonempty proper subset")));
    }
    let data = t
        .get(subset)
        .ok_or_else(|| BlochError::IncompleteTensors(format!("no tensor T{subset}")))?;
    Ok(FoldedTensor {
        pivot: pivot.clone(),
        complement: subset.difference(pivot),
        matrix: fold_data(data, subset, pivot),
    })
}

fn symmetry_check(m: &DMatrix<f64>) -> Result<(), BlochError> {
    if !m.is_square() {
        return Err(BlochError::NotSymmetric { deviation: f64::INFINITY });
    }
    let deviation = crate::linalg::max_abs(&(m - m.transpose()));
    let scale = crate::linalg::max_abs(m).max(1.0);
    if deviation > 1e-10 * scale {
        return Err(BlochError::NotSymmetric { deviation });
    }
    Ok(())
}

/// p_α = Tr(m^α) for α = 1..=max_order, by repeated multiplication.
pub fn power_sums(m: &DMatrix<f64>, max_order: usize) -> Result<Vec<f64>, BlochError> {
    symmetry_check(m)?;
    let mut out = Vec::with_capacity(max_order);
    let mut power = m.clone();
    for alpha in 1..=max_order {
        if alpha > 1 {
            power = &power * m;
        }
        out.push(power.trace());
    }
    Ok(out)
}

/// Elementary symmetric polynomials (e₁, e₂, e₃) from power sums (p₁, p₂, p₃).
pub fn elementary_from_power(p1: f64, p2: f64, p3: f64) -> (f64, f64, f64) {
    let e1 = p1;
    let e2 = 0.5 * (p1 * p1 - p2);
    let e3 = (p1 * p1 * p1 - 3.0 * p2 * p1 + 2.0 * p3) / 6.0;
    (e1, e2, e3)
}

/// p₄ of three variables expressed through p₁, p₂, p₃.
pub fn fourth_power_sum(p1: f64, p2: f64, p3: f64) -> f64 {
    p1.powi(4) / 6.0 - p1 * p1 * p2 + 0.5 * p2 * p2 + 4.0 / 3.0 * p1 * p3
}

/// max |m³ − e₁m² + e₂m − e₃I| for a symmetric 3×3 matrix.
pub fn cayley_hamilton_residual(m: &Matrix3<f64>) -> Result<f64, BlochError> {
    let dm = DMatrix::from_column_slice(3, 3, m.as_slice());
    let p = power_sums(&dm, 3)?;
    let (e1, e2, e3) = elementary_from_power(p[0], p[1], p[2]);
    let m2 = m * m;
    let m3 = m2 * m;
    let residual = m3 - m2 * e1 + m * e2 - Matrix3::identity() * e3;
    Ok(crate::linalg::max_abs(&residual))
}
