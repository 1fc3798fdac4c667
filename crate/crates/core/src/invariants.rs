//! Polynomial LU invariants built from tensor words, and genericity checks.

use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::bloch::{power_sums, BlochError, BlochTensors};
use crate::linalg::{numerical_rank, singular_values_desc};
use crate::words::{
    chain_string, enumerate_words, evaluate_word, parse_symbols, three_qubit_orbits, two_qubit_orbits, Atom, OrbitSet, Word,
    WordError,
};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum InvariantError {
    #[error("scheme needs {expected} qubits, state has {found}")]
    WrongQubitCount { expected: usize, found: usize },
    #[error("unsupported qubit count {0}; supported range is 2 to 4")]
    UnsupportedQubitCount(usize),
    #[error("family {family}: word {word} has dimension {found}, expected {expected}")]
    DimensionMismatch { family: String, word: String, expected: usize, found: usize },
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Bloch(#[from] BlochError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// The 12 two-qubit invariants.
    TwoQubit12,
    /// The 90 three-qubit invariants in six groups.
    ThreeQubit90,
    /// The 90 followed by 51 pair- and pivot-symmetric completions.
    ThreeQubitExtended,
    /// Gram matrices of every single-pivot family plus pair traces.
    GramGeneric(usize),
}

impl Scheme {
    /// 12 for two qubits, 90 for three, Gram otherwise.
    pub fn default_for(n_qubits: usize) -> Self {
        match n_qubits {
            2 => Scheme::TwoQubit12,
            3 => Scheme::ThreeQubit90,
            n => Scheme::GramGeneric(n),
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Scheme::TwoQubit12 => 2,
            Scheme::ThreeQubit90 | Scheme::ThreeQubitExtended => 3,
            Scheme::GramGeneric(n) => *n,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::TwoQubit12 => write!(f, "two-qubit-12"),
            Scheme::ThreeQubit90 => write!(f, "three-qubit-90"),
            Scheme::ThreeQubitExtended => write!(f, "three-qubit-extended"),
            Scheme::GramGeneric(n) => write!(f, "gram-{n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Invariant {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantVector {
    pub scheme: Scheme,
    pub entries: Vec<Invariant>,
}

impl InvariantVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.label == label).map(|e| e.value)
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }
}

fn word(s: &str) -> Word {
    s.parse().unwrap_or_else(|e| panic!("built-in word {s}: {e}"))
}

/// A two-atom matrix block such as `T12 T12'`.
fn op(s: &str) -> [Atom; 2] {
    let (head, tail) = parse_symbols(s).expect("built-in block");
    [head[0].clone(), tail[0].clone()]
}

/// `(op)^k` spelled out for use in word strings.
fn power(op: &str, k: usize) -> String {
    match k {
        0 => String::new(),
        1 => format!("{op} "),
        k => format!("({op})^{k} "),
    }
}

struct Collector<'a> {
    t: &'a BlochTensors,
    entries: Vec<Invariant>,
}

impl<'a> Collector<'a> {
    fn new(t: &'a BlochTensors) -> Self {
        Self { t, entries: Vec::new() }
    }

    fn inner(&mut self, group: &str, a: &str, b: &str) -> Result<(), InvariantError> {
        let (wa, wb) = (word(a), word(b));
        let label = format!("{group}<{wa},{wb}>");
        if self.entries.iter().any(|e| e.label == label) {
            return Ok(());
        }
        let value = evaluate_word(&wa, self.t)?.dot(&evaluate_word(&wb, self.t)?);
        self.entries.push(Invariant { label, value });
        Ok(())
    }

    /// tr((A Aᵗ)^l) for l in `powers`; `op` is the two-atom block A Aᵗ.
    fn traces(&mut self, group: &str, op: &[Atom; 2], powers: std::ops::RangeInclusive<usize>) -> Result<(), InvariantError> {
        let a = op[0].folded(self.t)?;
        let b = op[1].folded(self.t)?;
        // The smaller of A·B and B·A carries the same nonzero spectrum.
        let m = if a.nrows() <= a.ncols() { &a * &b } else { &b * &a };
        let sums = power_sums(&m, *powers.end())?;
        for l in powers {
            let chain: Vec<Atom> = (0..l).flat_map(|_| op.iter().cloned()).collect();
            let inside = chain_string(&chain);
            self.entries.push(Invariant { label: format!("{group}tr({inside})"), value: sums[l - 1] });
        }
        Ok(())
    }

    /// ⟨Tᵢ,(M)^α Tᵢ⟩, ⟨Tⱼ,(M')^α Tⱼ⟩, ⟨Tᵢ,(M)^α Tᵢⱼ Tⱼ⟩ for α = 0..=2 with
    /// M = Tᵢⱼ Tᵢⱼᵗ.
    fn pair_block(&mut self, group: &str, i: usize, j: usize) -> Result<(), InvariantError> {
        let tij = Atom::pair(i, j).to_string();
        let tji = Atom::pair(j, i).to_string();
        let m = format!("{tij} {tji}");
        let mt = format!("{tji} {tij}");
        for a in 0..3 {
            self.inner(group, &format!("T{i}"), &format!("{}T{i}", power(&m, a)))?;
        }
        for a in 0..3 {
            self.inner(group, &format!("T{j}"), &format!("{}T{j}", power(&mt, a)))?;
        }
        for a in 0..3 {
            self.inner(group, &format!("T{i}"), &format!("{}{tij} T{j}", power(&m, a)))?;
        }
        Ok(())
    }
}

fn require_qubits(t: &BlochTensors, expected: usize) -> Result<(), InvariantError> {
    if t.n_qubits() != expected {
        return Err(InvariantError::WrongQubitCount { expected, found: t.n_qubits() });
    }
    Ok(())
}

/// The 12 two-qubit invariants: three pair blocks of ⟨·,·⟩ followed by
/// tr((T₁₂T₁₂ᵗ)^α) for α = 1, 2, 3.
pub fn two_qubit_invariants(t: &BlochTensors) -> Result<InvariantVector, InvariantError> {
    require_qubits(t, 2)?;
    let mut c = Collector::new(t);
    c.pair_block("", 1, 2)?;
    c.traces("", &op("T12 T12'"), 1..=3)?;
    Ok(InvariantVector { scheme: Scheme::TwoQubit12, entries: c.entries })
}

/// Pivot qubit i with its complement pair (j < k).
const PIVOTS: [(usize, usize, usize); 3] = [(1, 2, 3), (2, 1, 3), (3, 1, 2)];

fn fold_name(i: usize, j: usize, k: usize) -> String {
    format!("T{i}|{j}{k}")
}

/// (d) and (e) entries for pivot `i`.
fn pivot_pair_entries(c: &mut Collector, group_d: &str, group_e: &str, i: usize, j: usize, k: usize) -> Result<(), InvariantError> {
    let f = fold_name(i, j, k);
    let m = format!("{f}' {f}");
    for n in 0..9 {
        c.inner(group_d, &format!("T{j}{k}"), &format!("{}T{j}{k}", power(&m, n)))?;
    }
    for n in 0..9 {
        c.inner(group_e, &format!("T{j}{k}"), &format!("{}{f}' T{i}", power(&m, n)))?;
    }
    Ok(())
}

/// The three-qubit list in groups (a)–(f); `extended` appends the pair
/// blocks for 13 and 23 to (a) and the (d)/(e) entries for pivots 2 and 3,
/// after the first 90. Entries that repeat an earlier label (⟨Tᵢ,Tᵢ⟩) are
/// skipped, leaving 141.
pub fn three_qubit_invariants(t: &BlochTensors, extended: bool) -> Result<InvariantVector, InvariantError> {
    require_qubits(t, 3)?;
    let mut c = Collector::new(t);
    c.pair_block("[a] ", 1, 2)?;
    for (i, j) in [(1, 2), (1, 3), (2, 3)] {
        c.traces("[b] ", &[Atom::pair(i, j), Atom::pair(j, i)], 1..=3)?;
    }
    for (i, j, k) in PIVOTS {
        let f = fold_name(i, j, k);
        let m = format!("{f} {f}'");
        for n in 0..9 {
            c.inner("[c] ", &format!("T{i}"), &format!("{}T{i}", power(&m, n)))?;
        }
    }
    pivot_pair_entries(&mut c, "[d] ", "[e] ", 1, 2, 3)?;
    for (i, j, k) in PIVOTS {
        c.traces("[f] ", &op(&format!("{0}' {0}", fold_name(i, j, k))), 1..=9)?;
    }
    debug_assert_eq!(c.entries.len(), 90);
    if !extended {
        return Ok(InvariantVector { scheme: Scheme::ThreeQubit90, entries: c.entries });
    }
    c.pair_block("[a] ", 1, 3)?;
    c.pair_block("[a] ", 2, 3)?;
    for (i, j, k) in &PIVOTS[1..] {
        pivot_pair_entries(&mut c, "[d] ", "[e] ", *i, *j, *k)?;
    }
    Ok(InvariantVector { scheme: Scheme::ThreeQubitExtended, entries: c.entries })
}

/// All ⟨vᵢ, vⱼ⟩ with i ≤ j inside each family, families in order.
pub fn gram_invariants(families: &[OrbitSet], t: &BlochTensors) -> Result<Vec<Invariant>, InvariantError> {
    let mut out = Vec::new();
    for fam in families {
        let mut vecs = Vec::with_capacity(fam.words.len());
        for w in &fam.words {
            let v = evaluate_word(w, t)?;
            if v.len() != fam.dimension_bound() {
                return Err(InvariantError::DimensionMismatch {
                    family: fam.label.clone(),
                    word: w.to_string(),
                    expected: fam.dimension_bound(),
                    found: v.len(),
                });
            }
            vecs.push(v);
        }
        for i in 0..vecs.len() {
            for j in i..vecs.len() {
                out.push(Invariant {
                    label: format!("<{},{}>", fam.words[i], fam.words[j]),
                    value: vecs[i].dot(&vecs[j]),
                });
            }
        }
    }
    Ok(out)
}

/// Single-qubit pivots and their complements, without repeats.
pub fn generic_families(n_qubits: usize) -> Result<Vec<OrbitSet>, InvariantError> {
    if !(2..=4).contains(&n_qubits) {
        return Err(InvariantError::UnsupportedQubitCount(n_qubits));
    }
    let mut fams = Vec::new();
    for i in 1..=n_qubits {
        fams.push(enumerate_words(n_qubits, &[i], None)?);
    }
    if n_qubits > 2 {
        for i in 1..=n_qubits {
            let rest: Vec<usize> = (1..=n_qubits).filter(|&q| q != i).collect();
            fams.push(enumerate_words(n_qubits, &rest, None)?);
        }
    }
    Ok(fams)
}

/// Gram entries of [`generic_families`] followed by tr((TᵢⱼTᵢⱼᵗ)^β),
/// β = 1..=3, for every pair.
pub fn gram_generic_invariants(t: &BlochTensors) -> Result<InvariantVector, InvariantError> {
    let n = t.n_qubits();
    let mut entries = gram_invariants(&generic_families(n)?, t)?;
    let mut c = Collector::new(t);
    for i in 1..=n {
        for j in i + 1..=n {
            c.traces("", &[Atom::pair(i, j), Atom::pair(j, i)], 1..=3)?;
        }
    }
    entries.extend(c.entries);
    Ok(InvariantVector { scheme: Scheme::GramGeneric(n), entries })
}

/// Evaluates any scheme, checking the qubit count.
pub fn evaluate_scheme(scheme: Scheme, t: &BlochTensors) -> Result<InvariantVector, InvariantError> {
    match scheme {
        Scheme::TwoQubit12 => two_qubit_invariants(t),
        Scheme::ThreeQubit90 => three_qubit_invariants(t, false),
        Scheme::ThreeQubitExtended => three_qubit_invariants(t, true),
        Scheme::GramGeneric(n) => {
            require_qubits(t, n)?;
            gram_generic_invariants(t)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilyRank {
    pub label: String,
    /// Dimension of the target space.
    pub dim: usize,
    pub rank: usize,
    pub singular_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenericityReport {
    /// ℝ³-valued families; these decide genericity.
    pub vector_families: Vec<FamilyRank>,
    /// Families on larger target spaces, for information.
    pub other_families: Vec<FamilyRank>,
    pub generic: bool,
}

fn family_rank(fam: &OrbitSet, t: &BlochTensors, rank_tol: f64) -> Result<FamilyRank, InvariantError> {
    let m: DMatrix<f64> = fam.evaluate(t)?;
    let singular_values = singular_values_desc(&m);
    Ok(FamilyRank {
        label: fam.label.clone(),
        dim: fam.dimension_bound(),
        rank: numerical_rank(&singular_values, rank_tol),
        singular_values,
    })
}

/// The ℝ³ families used for genericity: the fixed six-word lists for two
/// qubits, the fifteen-word lists for three, enumerated families for four.
pub fn vector_families(n_qubits: usize) -> Result<Vec<OrbitSet>, InvariantError> {
    match n_qubits {
        2 => {
            let (a, b) = two_qubit_orbits();
            Ok(vec![a, b])
        }
        3 => Ok(three_qubit_orbits().into_iter().take(3).collect()),
        4 => (1..=4).map(|i| enumerate_words(4, &[i], None).map_err(Into::into)).collect(),
        n => Err(InvariantError::UnsupportedQubitCount(n)),
    }
}

/// Generic iff every ℝ³ family spans ℝ³ (rank σ > rank_tol·max(1, σ_max)).
pub fn genericity(t: &BlochTensors, rank_tol: f64) -> Result<GenericityReport, InvariantError> {
    let n = t.n_qubits();
    let vector_families = vector_families(n)?
        .iter()
        .map(|f| family_rank(f, t, rank_tol))
        .collect::<Result<Vec<_>, _>>()?;
    let others: Vec<OrbitSet> = match n {
        3 => three_qubit_orbits().into_iter().skip(3).collect(),
        4 => (1..=4)
            .map(|i| {
                let rest: Vec<usize> = (1..=4).filter(|&q| q != i).collect();
                enumerate_words(4, &rest, None)
            })
            .collect::<Result<_, _>>()?,
        _ => Vec::new(),
    };
    let other_families = others.iter().map(|f| family_rank(f, t, rank_tol)).collect::<Result<Vec<_>, _>>()?;
    let generic = vector_families.iter().all(|f| f.rank == 3);
    Ok(GenericityReport { vector_families, other_families, generic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{elementary_from_power, extract_tensors};
    use crate::qstate::{apply_local_unitary, pure_state_density, random_density, random_local_unitary};
    use num_complex::Complex64 as C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tensors(amps: &[f64]) -> BlochTensors {
        let a: Vec<C64> = amps.iter().map(|&x| C64::new(x, 0.0)).collect();
        extract_tensors(&pure_state_density(&a).unwrap()).unwrap()
    }

    fn ghz() -> BlochTensors {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        tensors(&[h, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, h])
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn two_qubit_labels() {
        let inv = two_qubit_invariants(&BlochTensors::zeros(2)).unwrap();
        let labels: Vec<&str> = inv.entries.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(
            labels,
            [
                "<T1,T1>",
                "<T1,T12 T12' T1>",
                "<T1,(T12 T12')^2 T1>",
                "<T2,T2>",
                "<T2,T12' T12 T2>",
                "<T2,(T12' T12)^2 T2>",
                "<T1,T12 T2>",
                "<T1,T12 T12' T12 T2>",
                "<T1,(T12 T12')^2 T12 T2>",
                "tr(T12 T12')",
                "tr((T12 T12')^2)",
                "tr((T12 T12')^3)",
            ]
        );
        assert!(inv.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_qubit_hand_values() {
        let inv = two_qubit_invariants(&tensors(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        let expected = [
            1.0 / 16.0,
            1.0 / 256.0,
            1.0 / 4096.0,
            1.0 / 16.0,
            1.0 / 256.0,
            1.0 / 4096.0,
            1.0 / 64.0,
            1.0 / 1024.0,
            1.0 / 16384.0,
            1.0 / 16.0,
            1.0 / 256.0,
            1.0 / 4096.0,
        ];
        for (e, x) in inv.entries.iter().zip(expected) {
            assert!(close(e.value, x, 1e-15), "{}: {} vs {x}", e.label, e.value);
        }

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = two_qubit_invariants(&tensors(&[h, 0.0, 0.0, h])).unwrap();
        for e in &bell.entries[..9] {
            assert!(e.value.abs() < 1e-15);
        }
        for (e, x) in bell.entries[9..].iter().zip([3.0 / 16.0, 3.0 / 256.0, 3.0 / 4096.0]) {
            assert!(close(e.value, x, 1e-15));
        }
    }

    #[test]
    fn wrong_qubit_counts() {
        assert_eq!(
            two_qubit_invariants(&BlochTensors::zeros(3)).unwrap_err(),
            InvariantError::WrongQubitCount { expected: 2, found: 3 }
        );
        assert!(three_qubit_invariants(&BlochTensors::zeros(2), false).is_err());
        assert_eq!(genericity(&BlochTensors::zeros(5), 1e-10).unwrap_err(), InvariantError::UnsupportedQubitCount(5));
        assert!(evaluate_scheme(Scheme::GramGeneric(3), &BlochTensors::zeros(2)).is_err());
    }

    #[test]
    fn three_qubit_shape_and_labels() {
        let inv = three_qubit_invariants(&BlochTensors::zeros(3), false).unwrap();
        assert_eq!(inv.len(), 90);
        assert!(inv.values().iter().all(|&v| v == 0.0));
        let groups: Vec<(char, usize)> = ['a', 'b', 'c', 'd', 'e', 'f']
            .iter()
            .map(|&g| (g, inv.entries.iter().filter(|e| e.label.starts_with(&format!("[{g}]"))).count()))
            .collect();
        assert_eq!(groups, [('a', 9), ('b', 9), ('c', 27), ('d', 9), ('e', 9), ('f', 27)]);
        let labels: std::collections::HashSet<&str> = inv.entries.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels.len(), 90);
        assert_eq!(inv.entries[18].label, "[c] <T1,T1>");
        assert_eq!(inv.entries[19].label, "[c] <T1,T1|23 T1|23' T1>");
        assert_eq!(inv.entries[27].label, "[c] <T2,T2>");
        assert_eq!(inv.entries[46].label, "[d] <T23,T1|23' T1|23 T23>");
        assert_eq!(inv.entries[54].label, "[e] <T23,T1|23' T1>");
        assert_eq!(inv.entries[63].label, "[f] tr(T1|23' T1|23)");
        assert_eq!(inv.entries[89].label, "[f] tr((T3|12' T3|12)^9)");

        let ext = three_qubit_invariants(&BlochTensors::zeros(3), true).unwrap();
        assert_eq!(ext.len(), 141);
        assert_eq!(ext.entries[..90], inv.entries[..]);
        let labels: std::collections::HashSet<&str> = ext.entries.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels.len(), 141);
    }

    #[test]
    fn ghz_values() {
        let inv = three_qubit_invariants(&ghz(), false).unwrap();
        assert!(close(inv.get("[f] tr(T1|23' T1|23)").unwrap(), 1.0 / 16.0, 1e-15));
        assert!(close(inv.get("[b] tr(T12 T12')").unwrap(), 1.0 / 64.0, 1e-15));
        for e in &inv.entries {
            let g = &e.label[..3];
            if ["[a]", "[c]", "[e]"].contains(&g) {
                assert!(e.value.abs() < 1e-15, "{}", e.label);
            }
        }
        // ⟨T23,T23⟩ = 1/64; T1|23ᵗT1|23 fixes the z⊗z direction only through T1|23 rows.
        assert!(close(inv.get("[d] <T23,T23>").unwrap(), 1.0 / 64.0, 1e-15));
    }

    #[test]
    fn product_state_pair_traces() {
        let mut amps = vec![0.0; 8];
        amps[0] = 1.0;
        let inv = three_qubit_invariants(&tensors(&amps), false).unwrap();
        for pair in ["12", "13", "23"] {
            let (i, j) = (&pair[..1], &pair[1..]);
            let v = inv.get(&format!("[b] tr(T{i}{j} T{i}{j}')")).unwrap();
            assert!(close(v, 1.0 / 64.0, 1e-15), "{pair}: {v}");
        }
    }

    #[test]
    fn invariance_under_local_unitaries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for (n, trials) in [(2, 40), (3, 10), (4, 2)] {
            for _ in 0..trials {
                let r = random_density(n, 1 << n, &mut rng).unwrap();
                let lu = random_local_unitary(n, &mut rng);
                let t = extract_tensors(&r).unwrap();
                let t2 = extract_tensors(&apply_local_unitary(&r, &lu).unwrap()).unwrap();
                let mut schemes = vec![Scheme::default_for(n), Scheme::GramGeneric(n)];
                if n == 3 {
                    schemes.push(Scheme::ThreeQubitExtended);
                }
                for s in schemes {
                    let a = evaluate_scheme(s, &t).unwrap();
                    let b = evaluate_scheme(s, &t2).unwrap();
                    for (x, y) in a.entries.iter().zip(&b.entries) {
                        assert_eq!(x.label, y.label);
                        let tol = 1e-15 + 1e-8 * x.value.abs().max(y.value.abs());
                        assert!((x.value - y.value).abs() <= tol, "{s} {}: {} vs {}", x.label, x.value, y.value);
                    }
                }
            }
        }
    }

    #[test]
    fn cubic_power_is_redundant() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..100 {
            let t = extract_tensors(&random_density(2, 4, &mut rng).unwrap()).unwrap();
            let inv = two_qubit_invariants(&t).unwrap();
            let v = inv.values();
            let (e1, e2, e3) = elementary_from_power(v[9], v[10], v[11]);
            let cubic = evaluate_word(&word("(T12 T12')^3 T1"), &t).unwrap().dot(&evaluate_word(&word("T1"), &t).unwrap());
            assert!((cubic - (e1 * v[2] - e2 * v[1] + e3 * v[0])).abs() <= 1e-9);
        }
    }

    #[test]
    fn gram_contains_two_qubit_products() {
        let t = extract_tensors(&random_density(2, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap()).unwrap();
        let (o1, o2) = two_qubit_orbits();
        let gram = gram_invariants(&[o1, o2], &t).unwrap();
        assert_eq!(gram.len(), 42);
        let inv = two_qubit_invariants(&t).unwrap();
        for e in &inv.entries[..9] {
            let g = gram.iter().find(|g| g.label == e.label).unwrap_or_else(|| panic!("{} missing", e.label));
            assert!((g.value - e.value).abs() <= 1e-15);
        }
        let zero = gram_invariants(&[two_qubit_orbits().0], &BlochTensors::zeros(2)).unwrap();
        assert!(zero.iter().all(|e| e.value == 0.0));
        let zz = gram_invariants(&[two_qubit_orbits().0], &tensors(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(zz[0].label, "<T1,T1>");
        assert!(close(zz[0].value, 1.0 / 16.0, 1e-15));
    }

    #[test]
    fn gram_generic_sizes() {
        assert_eq!(gram_generic_invariants(&BlochTensors::zeros(2)).unwrap().len(), 45);
        let n3 = gram_generic_invariants(&BlochTensors::zeros(3)).unwrap();
        assert_eq!(n3.len(), 3 * 231 + 3 * 2016 + 9);
    }

    #[test]
    fn genericity_examples() {
        let zz = genericity(&tensors(&[1.0, 0.0, 0.0, 0.0]), 1e-10).unwrap();
        assert_eq!(zz.vector_families[0].rank, 1);
        assert!(!zz.generic);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = genericity(&tensors(&[h, 0.0, 0.0, h]), 1e-10).unwrap();
        assert_eq!(bell.vector_families[0].rank, 0);
        assert!(!bell.generic);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let generic = (0..100)
            .filter(|_| {
                let t = extract_tensors(&random_density(2, 4, &mut rng).unwrap()).unwrap();
                genericity(&t, 1e-10).unwrap().generic
            })
            .count();
        assert!(generic >= 99, "{generic} of 100 generic");

        let t3 = extract_tensors(&random_density(3, 8, &mut rng).unwrap()).unwrap();
        let rep = genericity(&t3, 1e-10).unwrap();
        assert!(rep.generic);
        assert_eq!(rep.other_families.len(), 3);
        assert_eq!(rep.other_families[0].dim, 9);
    }
}
