//! Symbolic tensor words and the orbit families built from them.
//!
//! A word is a product of folded correlation tensors applied to a vector.
//! The head is a chain of matrix atoms; the tail is either a single vector
//! atom or a chain of matrix atoms whose product is realigned into a vector
//! (written `[T23 T23' T23]`).
//!
//! Surface syntax: `T1` and `T12` in final position are vectors over the
//! listed qubits; a bare multi-qubit atom elsewhere pivots on its first
//! qubit (`T12` = T_{1|2}, `T312` = T_{3|12}); `T1|23` names the split
//! explicitly; a trailing `'` transposes; `(A B)^k` repeats.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::bloch::{fold_data, unfold_data, BlochTensors, QubitSet};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum WordError {
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
    #[error("inadmissible word: junction {junction} joins {left} to {right}")]
    Inadmissible { junction: usize, left: String, right: String },
    #[error("word must end in a vector symbol")]
    EndsInMatrix,
    #[error("missing tensor T{0}")]
    MissingTensor(String),
    #[error("unsupported qubit count {0}; enumeration covers 2 to 4 qubits")]
    UnsupportedQubitCount(usize),
    #[error("bad index sequence: {0}")]
    BadIndexSequence(String),
}

/// One symbol: the tensor over `rows ∪ cols` folded with `rows` as the output
/// index set. A vector atom has no columns.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    rows: QubitSet,
    cols: QubitSet,
}

impl Atom {
    pub fn vector(set: QubitSet) -> Self {
        Self { rows: set, cols: QubitSet::empty() }
    }

    /// The folded tensor T_{rows|cols}. Panics on empty or overlapping sets.
    pub fn matrix(rows: QubitSet, cols: QubitSet) -> Self {
        assert!(!rows.is_empty() && !cols.is_empty() && rows.is_disjoint(&cols));
        Self { rows, cols }
    }

    /// T_{i|j} for two single qubits.
    pub fn pair(i: usize, j: usize) -> Self {
        Self::matrix(QubitSet::single(i), QubitSet::single(j))
    }

    pub fn rows(&self) -> &QubitSet {
        &self.rows
    }

    pub fn cols(&self) -> &QubitSet {
        &self.cols
    }

    pub fn is_vector(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn support(&self) -> QubitSet {
        self.rows.union(&self.cols)
    }

    pub fn transpose(&self) -> Self {
        assert!(!self.is_vector(), "vector atoms have no transpose");
        Self { rows: self.cols.clone(), cols: self.rows.clone() }
    }

    pub(crate) fn folded(&self, t: &BlochTensors) -> Result<DMatrix<f64>, WordError> {
        let support = self.support();
        let data = t.get(&support).ok_or_else(|| WordError::MissingTensor(support.to_string()))?;
        Ok(fold_data(data, &support, &self.rows))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_vector() {
            return write!(f, "T{}", self.rows);
        }
        let (p, q) = {
            let (a, b) = (&self.rows, &self.cols);
            let a_first = a.len() < b.len() || (a.len() == b.len() && a.as_slice()[0] < b.as_slice()[0]);
            if a_first {
                (a, b)
            } else {
                (b, a)
            }
        };
        if p.len() == 1 && q.len() == 1 {
            write!(f, "T{p}{q}")?;
        } else {
            write!(f, "T{p}|{q}")?;
        }
        if &self.rows == q {
            write!(f, "'")?;
        }
        Ok(())
    }
}

/// An admissible word: `head[0] ⋯ head[k] · tail`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Word {
    head: Vec<Atom>,
    tail: Vec<Atom>,
}

fn tail_output(tail: &[Atom]) -> Option<QubitSet> {
    match tail {
        [] => None,
        [only] if only.is_vector() => Some(only.rows.clone()),
        _ => {
            let (first, last) = (&tail[0], &tail[tail.len() - 1]);
            first.rows.is_disjoint(&last.cols).then(|| first.rows.union(&last.cols))
        }
    }
}

/// Checks index matching at every junction. Junctions are numbered from 1
/// over the flattened atom list.
pub fn check_admissible(head: &[Atom], tail: &[Atom]) -> Result<(), WordError> {
    let last = tail.last().ok_or(WordError::EndsInMatrix)?;
    if tail.len() == 1 && !last.is_vector() {
        return Err(WordError::EndsInMatrix);
    }
    let mismatch = |junction: usize, l: &Atom, r: &Atom| WordError::Inadmissible {
        junction,
        left: l.to_string(),
        right: r.to_string(),
    };
    for (k, pair) in head.windows(2).enumerate() {
        if pair[0].is_vector() || pair[1].is_vector() || pair[0].cols != pair[1].rows {
            return Err(mismatch(k + 1, &pair[0], &pair[1]));
        }
    }
    if tail.len() > 1 {
        for (k, pair) in tail.windows(2).enumerate() {
            if pair[0].is_vector() || pair[1].is_vector() || pair[0].cols != pair[1].rows {
                return Err(mismatch(head.len() + k + 1, &pair[0], &pair[1]));
            }
        }
    }
    let out = tail_output(tail).ok_or_else(|| mismatch(head.len() + tail.len() - 1, &tail[0], last))?;
    if let Some(h) = head.last() {
        if h.is_vector() || h.cols != out {
            return Err(mismatch(head.len(), h, &tail[0]));
        }
    }
    Ok(())
}

/// True iff adjacent index sets match throughout and the word ends in a vector.
pub fn admissible(head: &[Atom], tail: &[Atom]) -> bool {
    check_admissible(head, tail).is_ok()
}

impl Word {
    /// Builds a checked word. A single tail atom must be a vector.
    pub fn new(head: Vec<Atom>, tail: Vec<Atom>) -> Result<Self, WordError> {
        check_admissible(&head, &tail)?;
        Ok(Self { head, tail })
    }

    pub fn vector(set: QubitSet) -> Self {
        Self { head: Vec::new(), tail: vec![Atom::vector(set)] }
    }

    /// Vectorized product of a matrix chain; a single atom becomes the
    /// plain vector over its support.
    pub fn vectorized(chain: Vec<Atom>) -> Result<Self, WordError> {
        if chain.len() == 1 && !chain[0].is_vector() {
            return Ok(Self::vector(chain[0].support()));
        }
        Self::new(Vec::new(), chain)
    }

    pub fn head(&self) -> &[Atom] {
        &self.head
    }

    pub fn tail(&self) -> &[Atom] {
        &self.tail
    }

    /// The qubits indexing the output vector.
    pub fn output(&self) -> QubitSet {
        match self.head.first() {
            Some(a) => a.rows.clone(),
            None => tail_output(&self.tail).expect("checked at construction"),
        }
    }

    pub fn target_dim(&self) -> usize {
        self.output().space_dim()
    }

    /// `atoms · self`, checked.
    pub fn prepend(&self, atoms: &[Atom]) -> Result<Self, WordError> {
        let mut head = atoms.to_vec();
        head.extend(self.head.iter().cloned());
        Self::new(head, self.tail.clone())
    }

    /// Number of leading copies of the two-atom block `op`.
    pub fn leading_blocks(&self, op: &[Atom; 2]) -> usize {
        self.head.chunks_exact(2).take_while(|c| c[0] == op[0] && c[1] == op[1]).count()
    }

    pub fn atom_count(&self) -> usize {
        self.head.len() + self.tail.len()
    }
}

fn render_chain(atoms: &[Atom], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let mut i = 0;
    let mut first = true;
    while i < atoms.len() {
        if !first {
            write!(f, " ")?;
        }
        first = false;
        let mut reps = 1;
        while i + 2 * reps + 1 < atoms.len() && atoms[i + 2 * reps..i + 2 * reps + 2] == atoms[i..i + 2] {
            reps += 1;
        }
        if reps > 1 {
            write!(f, "({} {})^{}", atoms[i], atoms[i + 1], reps)?;
            i += 2 * reps;
        } else {
            write!(f, "{}", atoms[i])?;
            i += 1;
        }
    }
    Ok(())
}

/// Canonical rendering of a bare matrix chain, e.g. `(T12 T12')^2`.
pub fn chain_string(atoms: &[Atom]) -> String {
    struct Chain<'a>(&'a [Atom]);
    impl fmt::Display for Chain<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            render_chain(self.0, f)
        }
    }
    Chain(atoms).to_string()
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render_chain(&self.head, f)?;
        if !self.head.is_empty() {
            write!(f, " ")?;
        }
        if self.tail.len() == 1 {
            write!(f, "{}", self.tail[0])
        } else {
            write!(f, "[")?;
            render_chain(&self.tail, f)?;
            write!(f, "]")
        }
    }
}

#[derive(Clone, Debug)]
struct RawAtom {
    first: Vec<usize>,
    second: Option<Vec<usize>>,
    prime: bool,
    column: usize,
    grouped: bool,
}

impl RawAtom {
    fn resolve(&self, final_vector: bool) -> Result<Atom, WordError> {
        let err = |message: String| WordError::Parse { column: self.column, message };
        let set = |digits: &[usize]| QubitSet::new(digits.iter().copied()).ok_or_else(|| err("repeated qubit label".into()));
        let atom = match &self.second {
            Some(second) => {
                let rows = set(&self.first)?;
                let cols = set(second)?;
                if !rows.is_disjoint(&cols) {
                    return Err(err("pivot and complement overlap".into()));
                }
                Atom::matrix(rows, cols)
            }
            None if final_vector && !self.prime => Atom::vector(set(&self.first)?),
            None if self.first.len() == 1 => {
                if self.prime {
                    return Err(err("a single-qubit vector has no transpose".into()));
                }
                Atom::vector(set(&self.first)?)
            }
            None => {
                set(&self.first)?;
                Atom::matrix(QubitSet::single(self.first[0]), set(&self.first[1..])?)
            }
        };
        Ok(if self.prime && !atom.is_vector() { atom.transpose() } else { atom })
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    _src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { chars: src.chars().collect(), pos: 0, _src: src }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, WordError> {
        Err(WordError::Parse { column: self.pos + 1, message: message.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn digits(&mut self) -> Result<Vec<usize>, WordError> {
        let mut out = Vec::new();
        while let Some(c) = self.chars.get(self.pos) {
            match c.to_digit(10) {
                Some(0) => return self.err("qubit labels start at 1"),
                Some(d) => out.push(d as usize),
                None => break,
            }
            self.pos += 1;
        }
        if out.is_empty() {
            return self.err("expected qubit labels");
        }
        Ok(out)
    }

    fn atom(&mut self) -> Result<RawAtom, WordError> {
        let column = self.pos + 1;
        self.pos += 1; // 'T'
        let first = self.digits()?;
        let second = if self.chars.get(self.pos) == Some(&'|') {
            self.pos += 1;
            Some(self.digits()?)
        } else {
            None
        };
        let prime = self.chars.get(self.pos) == Some(&'\'');
        if prime {
            self.pos += 1;
        }
        Ok(RawAtom { first, second, prime, column, grouped: false })
    }

    /// Atoms up to `close` (or end of input when `close` is `None`).
    fn sequence(&mut self, close: Option<char>) -> Result<(Vec<RawAtom>, Option<Vec<RawAtom>>), WordError> {
        let mut atoms = Vec::new();
        let mut bracket = None;
        loop {
            match self.peek() {
                None if close.is_none() => break,
                None => return self.err(format!("missing '{}'", close.unwrap())),
                Some(c) if Some(c) == close => {
                    self.pos += 1;
                    break;
                }
                Some(_) if bracket.is_some() => return self.err("the bracketed tail must come last"),
                Some('T') => atoms.push(self.atom()?),
                Some('(') => {
                    self.pos += 1;
                    let (inner, b) = self.sequence(Some(')'))?;
                    if b.is_some() {
                        return self.err("brackets are not allowed inside a repetition");
                    }
                    if inner.is_empty() {
                        return self.err("empty repetition");
                    }
                    if self.peek() != Some('^') {
                        return self.err("expected '^' after ')'");
                    }
                    self.pos += 1;
                    self.skip_ws();
                    let start = self.pos;
                    while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                        self.pos += 1;
                    }
                    let text: String = self.chars[start..self.pos].iter().collect();
                    let k: usize = match text.parse() {
                        Ok(k) => k,
                        Err(_) => return self.err("expected a repetition count"),
                    };
                    for _ in 0..k {
                        atoms.extend(inner.iter().cloned().map(|mut a| {
                            a.grouped = true;
                            a
                        }));
                    }
                }
                Some('[') if close.is_none() => {
                    self.pos += 1;
                    let (inner, b) = self.sequence(Some(']'))?;
                    if b.is_some() || inner.is_empty() {
                        return self.err("bad bracketed tail");
                    }
                    bracket = Some(inner);
                }
                Some(c) => return self.err(format!("unexpected character '{c}'")),
            }
        }
        Ok((atoms, bracket))
    }
}

/// Parses surface syntax into head and tail atoms without checking
/// admissibility.
pub fn parse_symbols(src: &str) -> Result<(Vec<Atom>, Vec<Atom>), WordError> {
    let mut p = Parser::new(src);
    let (mut atoms, bracket) = p.sequence(None)?;
    match bracket {
        Some(inner) => {
            let head = atoms.iter().map(|a| a.resolve(false)).collect::<Result<Vec<_>, _>>()?;
            let tail: Vec<Atom> = inner.iter().map(|a| a.resolve(false)).collect::<Result<_, _>>()?;
            if tail.len() == 1 && !tail[0].is_vector() {
                return Ok((head, vec![Atom::vector(tail[0].support())]));
            }
            Ok((head, tail))
        }
        None => {
            let last = atoms.pop().ok_or(WordError::Parse { column: 1, message: "empty word".into() })?;
            let head = atoms.iter().map(|a| a.resolve(false)).collect::<Result<Vec<_>, _>>()?;
            let tail = last.resolve(!last.grouped)?;
            Ok((head, vec![tail]))
        }
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, tail) = parse_symbols(s)?;
        Word::new(head, tail)
    }
}

/// Right-to-left evaluation against a tensor family.
pub fn evaluate_word(w: &Word, t: &BlochTensors) -> Result<DVector<f64>, WordError> {
    let mut v = match w.tail.as_slice() {
        [only] => {
            let data = t.get(&only.rows).ok_or_else(|| WordError::MissingTensor(only.rows.to_string()))?;
            DVector::from_column_slice(data)
        }
        chain => {
            let mut m = chain[0].folded(t)?;
            for a in &chain[1..] {
                m *= a.folded(t)?;
            }
            DVector::from_vec(unfold_data(&m, &chain[0].rows, &chain[chain.len() - 1].cols))
        }
    };
    for a in w.head.iter().rev() {
        v = a.folded(t)? * v;
    }
    Ok(v)
}

/// A family of words spanning an orbit subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitSet {
    pub label: String,
    /// Qubits whose rotations act on the target space.
    pub target: QubitSet,
    pub words: Vec<Word>,
}

impl OrbitSet {
    /// Dimension 3^k of the target space.
    pub fn dimension_bound(&self) -> usize {
        self.target.space_dim()
    }

    /// Evaluated words as columns of a 3^k × m matrix.
    pub fn evaluate(&self, t: &BlochTensors) -> Result<DMatrix<f64>, WordError> {
        let cols = self.words.iter().map(|w| evaluate_word(w, t)).collect::<Result<Vec<_>, _>>()?;
        if cols.is_empty() {
            return Ok(DMatrix::zeros(self.dimension_bound(), 0));
        }
        Ok(DMatrix::from_columns(&cols))
    }
}

/// `(op)^k · g` for k = 0..=max_power, power-major.
fn orbit(op: &[Atom; 2], gens: &[Word], max_power: usize) -> Vec<Word> {
    let mut out = Vec::new();
    for k in 0..=max_power {
        let prefix: Vec<Atom> = (0..k).flat_map(|_| op.iter().cloned()).collect();
        for g in gens {
            out.push(g.prepend(&prefix).expect("orbit words are admissible"));
        }
    }
    out
}

fn set(q: &[usize]) -> QubitSet {
    QubitSet::new(q.iter().copied()).expect("distinct labels")
}

fn split(rows: &[usize], cols: &[usize]) -> Atom {
    Atom::matrix(set(rows), set(cols))
}

/// `(T_{a|b} T_{a|b}')^β T_{a|b}` vectorized over {a, b}.
fn pair_chain(a: usize, b: usize, beta: usize) -> Word {
    let m = Atom::pair(a, b);
    let mut chain: Vec<Atom> = (0..beta).flat_map(|_| [m.clone(), m.transpose()]).collect();
    chain.push(m);
    Word::vectorized(chain).expect("pair chains are admissible")
}

/// The two six-word families of a two-qubit state.
pub fn two_qubit_orbits() -> (OrbitSet, OrbitSet) {
    let t12 = Atom::pair(1, 2);
    let o1 = OrbitSet {
        label: "O1".into(),
        target: set(&[1]),
        words: orbit(
            &[t12.clone(), t12.transpose()],
            &[Word::vector(set(&[1])), Word::vector(set(&[2])).prepend(std::slice::from_ref(&t12)).unwrap()],
            2,
        ),
    };
    let o2 = OrbitSet {
        label: "O2".into(),
        target: set(&[2]),
        words: orbit(
            &[t12.transpose(), t12.clone()],
            &[Word::vector(set(&[2])), Word::vector(set(&[1])).prepend(&[t12.transpose()]).unwrap()],
            2,
        ),
    };
    (o1, o2)
}

/// Pivot qubit and its complement pair in cyclic order (1|23, 2|31, 3|12).
const THREE_QUBIT_PIVOTS: [(usize, usize, usize); 3] = [(1, 2, 3), (2, 3, 1), (3, 1, 2)];

/// The three ℝ³ families (pivots 1, 2, 3) followed by the three ℝ⁹ families
/// (complements 23, 31, 12).
pub fn three_qubit_orbits() -> Vec<OrbitSet> {
    let mut vector_families = Vec::new();
    let mut pair_families = Vec::new();
    for (i, j, k) in THREE_QUBIT_PIVOTS {
        let (a, b) = (j.min(k), j.max(k));
        let fold = split(&[i], &[j, k]);
        let chains: Vec<Word> = (0..4).map(|beta| pair_chain(a, b, beta)).collect();

        let mut gens = vec![Word::vector(set(&[i]))];
        gens.extend(chains.iter().map(|c| c.prepend(std::slice::from_ref(&fold)).unwrap()));
        vector_families.push(OrbitSet {
            label: format!("O{i}|{j}{k}"),
            target: set(&[i]),
            words: orbit(&[fold.clone(), fold.transpose()], &gens, 2),
        });

        let mut gens = vec![chains[0].clone(), Word::vector(set(&[i])).prepend(&[fold.transpose()]).unwrap()];
        gens.extend(chains[1..].iter().cloned());
        pair_families.push(OrbitSet {
            label: format!("O{j}{k}|{i}"),
            target: set(&[j, k]),
            words: orbit(&[fold.transpose(), fold.clone()], &gens, 8),
        });
    }
    vector_families.extend(pair_families);
    vector_families
}

/// Family label for pivot set `pivot` among `n` qubits. Three-qubit labels
/// list the complement cyclically after the pivot.
pub fn family_label(n: usize, pivot: &QubitSet) -> String {
    let all = QubitSet::range(n);
    let rest = all.difference(pivot);
    match n {
        2 => format!("O{pivot}"),
        3 if pivot.len() == 1 => {
            let (_, j, k) = THREE_QUBIT_PIVOTS[pivot.as_slice()[0] - 1];
            format!("O{pivot}|{j}{k}")
        }
        3 => {
            let i = rest.as_slice()[0];
            let (_, j, k) = THREE_QUBIT_PIVOTS[i - 1];
            format!("O{j}{k}|{i}")
        }
        _ => format!("O{pivot}|{rest}"),
    }
}

/// Generating words that start on the index set `s`.
fn seeds(s: &QubitSet, universe: &QubitSet) -> Vec<Word> {
    let mut out = vec![Word::vector(s.clone())];
    match *s.as_slice() {
        [a, b] => out.extend((1..4).map(|beta| pair_chain(a, b, beta))),
        [a] => {
            for &b in universe.as_slice().iter().filter(|&&b| b != a) {
                out.push(Word::vector(QubitSet::single(b)).prepend(&[Atom::pair(a, b)]).unwrap());
            }
        }
        _ => {}
    }
    out
}

/// The orbit family for the index sequence `seq` among `n_qubits` qubits:
/// generators on the pivot set I, plus T_{I|J} applied to generators on the
/// complement J, closed under (T_{I|J} T_{I|J}ᵗ)^k for k up to `degree_cap`
/// (default 3^|I| − 1). Words whose leading operator blocks exceed the cap
/// are dropped and duplicates keep their first position.
pub fn enumerate_words(n_qubits: usize, seq: &[usize], degree_cap: Option<usize>) -> Result<OrbitSet, WordError> {
    if !(2..=4).contains(&n_qubits) {
        return Err(WordError::UnsupportedQubitCount(n_qubits));
    }
    if seq.iter().any(|&q| q == 0 || q > n_qubits) {
        return Err(WordError::BadIndexSequence(format!("indices must lie in 1..={n_qubits}")));
    }
    let pivot = QubitSet::new(seq.iter().copied())
        .ok_or_else(|| WordError::BadIndexSequence("indices must be distinct".into()))?;
    if pivot.is_empty() || pivot.len() == n_qubits {
        return Err(WordError::BadIndexSequence("need a nonempty proper subset of the qubits".into()));
    }
    let universe = QubitSet::range(n_qubits);
    let rest = universe.difference(&pivot);
    let cap = degree_cap.unwrap_or(pivot.space_dim() - 1);
    let fold = Atom::matrix(pivot.clone(), rest.clone());
    let op = [fold.clone(), fold.transpose()];

    let mut gens = seeds(&pivot, &universe);
    gens.extend(seeds(&rest, &universe).iter().map(|w| w.prepend(std::slice::from_ref(&fold)).unwrap()));

    let mut seen = HashSet::new();
    let words = orbit(&op, &gens, cap)
        .into_iter()
        .filter(|w| w.leading_blocks(&op) <= cap && seen.insert(w.clone()))
        .collect();
    Ok(OrbitSet { label: family_label(n_qubits, &pivot), target: pivot, words })
}
