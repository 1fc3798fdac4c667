//! Deciding local-unitary equivalence: invariant comparison, witness
//! reconstruction and the two-qubit branch with vanishing local vectors.

use nalgebra::{DMatrix, Matrix3};
use thiserror::Error;

use crate::bloch::{extract_tensors, reconstruct_density, BlochError, BlochTensors};
use crate::invariants::{
    evaluate_scheme, genericity, vector_families, GenericityReport, InvariantError, InvariantVector, Scheme,
};
use crate::linalg::{max_abs, polar_orthogonal, sorted_svd3};
use crate::qstate::{apply_local_unitary, so3_to_su2, DensityState, LocalUnitary, Rotation3, StateError};

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Relative tolerance for invariant comparison.
    pub rtol: f64,
    /// Absolute floor for invariant comparison.
    pub atol: f64,
    /// Largest accepted max-abs conjugation residual of a witness.
    pub verify_tol: f64,
    pub rank_tol: f64,
    /// Norm below which T₁, T₂ count as zero.
    pub degenerate_atol: f64,
    /// Largest accepted distance from the solved map to its orthogonal factor.
    pub polar_tol: f64,
    /// Invariant scheme; `None` picks the default for the qubit count.
    pub scheme: Option<Scheme>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-15,
            verify_tol: 1e-7,
            rank_tol: 1e-10,
            degenerate_atol: 1e-10,
            polar_tol: 1e-6,
            scheme: None,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum DecideError {
    #[error("qubit counts differ: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },
    #[error("unsupported qubit count {0}; supported range is 2 to 4")]
    UnsupportedQubitCount(usize),
    #[error("cannot compare scheme {left} with scheme {right}")]
    SchemeMismatch { left: Scheme, right: Scheme },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Bloch(#[from] BlochError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum WitnessError {
    #[error("qubit {qubit}: orbit family has rank {rank}, need 3")]
    NotGeneric { qubit: usize, rank: usize },
    /// The unique orthogonal alignment of qubit `qubit` is improper.
    #[error("qubit {qubit}: family orientation differs ({})", separation.label)]
    OrientationMismatch { qubit: usize, separation: Separation },
    #[error("witness construction failed: {0}")]
    ConstructionFailure(String),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    Inequivalent,
    Inconclusive,
}

/// A named quantity taking different values on the two states.
#[derive(Clone, Debug, PartialEq)]
pub struct Separation {
    pub label: String,
    pub value: f64,
    pub value_prime: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchReport {
    pub matched: bool,
    pub first_failure: Option<Separation>,
    /// Largest |a − b| / (atol + rtol·max(|a|, |b|)); at most 1 on a match.
    pub max_violation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Invariant comparison followed by witness reconstruction.
    Invariants,
    /// Two qubits with T₁ = T₂ = 0 on both sides.
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub verdict: Verdict,
    pub branch: Branch,
    pub scheme: Option<Scheme>,
    pub witness: Option<LocalUnitary>,
    pub residual: Option<f64>,
    pub separating: Option<Separation>,
    pub genericity: Option<(GenericityReport, GenericityReport)>,
    /// Set when invariants agree but no proper witness was verified. The
    /// pipeline never reports Equivalent in that case; it stays false.
    pub certified_by_invariants_only: bool,
    /// Human-readable reason for Inconclusive verdicts.
    pub note: Option<String>,
}

impl Decision {
    fn new(verdict: Verdict, branch: Branch) -> Self {
        Self {
            verdict,
            branch,
            scheme: None,
            witness: None,
            residual: None,
            separating: None,
            genericity: None,
            certified_by_invariants_only: false,
            note: None,
        }
    }
}

fn within(a: f64, b: f64, rtol: f64, atol: f64) -> (bool, f64) {
    let bound = atol + rtol * a.abs().max(b.abs());
    let gap = (a - b).abs();
    let ratio = if bound > 0.0 { gap / bound } else if gap == 0.0 { 0.0 } else { f64::INFINITY };
    (gap <= bound, ratio)
}

fn compare_entries<'a>(
    pairs: impl IntoIterator<Item = (&'a str, f64, f64)>,
    rtol: f64,
    atol: f64,
) -> MatchReport {
    let mut report = MatchReport { matched: true, first_failure: None, max_violation: 0.0 };
    for (label, a, b) in pairs {
        let (ok, ratio) = within(a, b, rtol, atol);
        report.max_violation = report.max_violation.max(ratio);
        if !ok && report.first_failure.is_none() {
            report.matched = false;
            report.first_failure = Some(Separation { label: label.to_string(), value: a, value_prime: b, gap: (a - b).abs() });
        }
    }
    report
}

/// Entry-wise |a − b| ≤ atol + rtol·max(|a|, |b|).
pub fn compare_invariants(
    a: &InvariantVector,
    b: &InvariantVector,
    rtol: f64,
    atol: f64,
) -> Result<MatchReport, DecideError> {
    if a.scheme != b.scheme || a.len() != b.len() {
        return Err(DecideError::SchemeMismatch { left: a.scheme, right: b.scheme });
    }
    if a.entries.iter().zip(&b.entries).any(|(x, y)| x.label != y.label) {
        return Err(DecideError::SchemeMismatch { left: a.scheme, right: b.scheme });
    }
    Ok(compare_entries(
        a.entries.iter().zip(&b.entries).map(|(x, y)| (x.label.as_str(), x.value, y.value)),
        rtol,
        atol,
    ))
}

/// max |ρ′ − (⊗Uᵢ) ρ (⊗Uᵢ)†| entrywise.
pub fn verify_witness(rho: &DensityState, rho_prime: &DensityState, lu: &LocalUnitary) -> Result<f64, StateError> {
    if rho.n_qubits() != rho_prime.n_qubits() {
        return Err(StateError::ArityMismatch { expected: rho.n_qubits(), found: rho_prime.n_qubits() });
    }
    let moved = apply_local_unitary(rho, lu)?;
    Ok(max_abs(&(rho_prime.matrix() - moved.matrix())))
}

/// Column triples ordered by the volume they span after normalization.
fn ranked_triples(v: &DMatrix<f64>) -> Vec<[usize; 3]> {
    let norms: Vec<f64> = v.column_iter().map(|c| c.norm()).collect();
    let top = norms.iter().cloned().fold(0.0, f64::max);
    let usable: Vec<usize> = (0..v.ncols()).filter(|&k| norms[k] > 1e-12 * top && norms[k] > 0.0).collect();
    let unit = |k: usize| v.column(k) / norms[k];
    let mut scored = Vec::new();
    for (x, &a) in usable.iter().enumerate() {
        for (y, &b) in usable.iter().enumerate().skip(x + 1) {
            let ab = unit(a).cross(&unit(b));
            for &c in &usable[y + 1..] {
                scored.push((ab.dot(&unit(c)).abs(), [a, b, c]));
            }
        }
    }
    scored.sort_by(|p, q| q.0.total_cmp(&p.0));
    scored.into_iter().map(|(_, t)| t).collect()
}

fn triple(v: &DMatrix<f64>, idx: [usize; 3]) -> Matrix3<f64> {
    Matrix3::from_columns(&idx.map(|k| v.fixed_view::<3, 1>(0, k).into_owned()))
}

/// How many of the best-conditioned triples to try per qubit.
const TRIPLE_ATTEMPTS: usize = 5;

/// Solves for the rotation of each qubit that carries the evaluated ℝ³ orbit
/// family of `t` onto that of `t_prime`, then lifts to SU(2).
pub fn reconstruct_witness(t: &BlochTensors, t_prime: &BlochTensors, config: &Config) -> Result<LocalUnitary, WitnessError> {
    let n = t.n_qubits();
    let families = vector_families(n)?;
    let mut factors = Vec::with_capacity(n);
    for (q, fam) in families.iter().enumerate() {
        let qubit = q + 1;
        let v = fam.evaluate(t).map_err(InvariantError::from)?;
        let vp = fam.evaluate(t_prime).map_err(InvariantError::from)?;
        for m in [&v, &vp] {
            let rank = crate::linalg::numerical_rank(&crate::linalg::singular_values_desc(m), config.rank_tol);
            if rank < 3 {
                return Err(WitnessError::NotGeneric { qubit, rank });
            }
        }
        let mut improper = None;
        let mut worst_polar = 0.0f64;
        let mut found = None;
        for idx in ranked_triples(&v).into_iter().take(TRIPLE_ATTEMPTS) {
            let (basis, image) = (triple(&v, idx), triple(&vp, idx));
            let Some(inv) = basis.try_inverse() else { continue };
            let (o, polar_residual) = polar_orthogonal(&(image * inv));
            worst_polar = worst_polar.max(polar_residual);
            if polar_residual > config.polar_tol {
                continue;
            }
            if o.determinant() < 0.0 {
                if improper.is_none() {
                    let words: Vec<String> = idx.iter().map(|&k| fam.words[k].to_string()).collect();
                    let (d, dp) = (basis.determinant(), image.determinant());
                    improper = Some(Separation {
                        label: format!("det[{}]", words.join(", ")),
                        value: d,
                        value_prime: dp,
                        gap: (d - dp).abs(),
                    });
                }
                continue;
            }
            found = Some(o);
            break;
        }
        let o = match (found, improper) {
            (Some(o), _) => o,
            (None, Some(separation)) => return Err(WitnessError::OrientationMismatch { qubit, separation }),
            (None, None) => {
                return Err(WitnessError::ConstructionFailure(format!(
                    "qubit {qubit}: no basis gave an orthogonal map (polar residual {worst_polar:e})"
                )))
            }
        };
        let rot = Rotation3::new(o, 1e-9).map_err(|e| WitnessError::ConstructionFailure(e.to_string()))?;
        factors.push(so3_to_su2(&rot));
    }
    LocalUnitary::new(factors, 1e-9).map_err(|e| WitnessError::ConstructionFailure(e.to_string()))
}

fn pair_matrix(t: &BlochTensors) -> Result<Matrix3<f64>, DecideError> {
    t.pair(1, 2).ok_or_else(|| DecideError::PreconditionViolated("missing T12".into()))
}

/// Two-qubit states whose single-qubit vectors vanish: equivalent iff T₁₂
/// and T₁₂′ share singular values and determinant sign; the witness comes
/// from the two singular value decompositions.
pub fn degenerate_two_qubit_decide(t: &BlochTensors, t_prime: &BlochTensors, config: &Config) -> Result<Decision, DecideError> {
    if t.n_qubits() != 2 || t_prime.n_qubits() != 2 {
        return Err(DecideError::PreconditionViolated("two-qubit tensors required".into()));
    }
    for (side, tt) in [("first", t), ("second", t_prime)] {
        for q in 1..=2 {
            let norm = tt.vector(q).expect("two-qubit family").norm();
            if norm > config.degenerate_atol {
                return Err(DecideError::PreconditionViolated(format!("{side} state has |T{q}| = {norm:e}")));
            }
        }
    }
    let (m, mp) = (pair_matrix(t)?, pair_matrix(t_prime)?);
    let traces = |x: &Matrix3<f64>| {
        let g = x * x.transpose();
        [g.trace(), (g * g).trace(), (g * g * g).trace()]
    };
    let (tr, trp) = (traces(&m), traces(&mp));
    let labels = ["tr(T12 T12')", "tr((T12 T12')^2)", "tr((T12 T12')^3)"];
    let (l, s, r) = sorted_svd3(&m);
    let (lp, sp, rp) = sorted_svd3(&mp);
    let sv_labels = ["sigma1(T12)", "sigma2(T12)", "sigma3(T12)"];
    let (det, det_p) = (m.determinant(), mp.determinant());

    let mut entries: Vec<(&str, f64, f64)> = (0..3).map(|k| (labels[k], tr[k], trp[k])).collect();
    entries.extend((0..3).map(|k| (sv_labels[k], s[k], sp[k])));
    entries.push(("det(T12)", det, det_p));
    let report = compare_entries(entries, config.rtol, config.atol.max(config.degenerate_atol * 1e-3));
    if let Some(sep) = report.first_failure {
        let mut d = Decision::new(Verdict::Inequivalent, Branch::Degenerate);
        d.separating = Some(sep);
        return Ok(d);
    }

    let proper = |mut left: Matrix3<f64>, mut right: Matrix3<f64>, sigma3: f64| {
        if left.determinant() < 0.0 {
            left.column_mut(2).neg_mut();
            right.column_mut(2).neg_mut();
        }
        if right.determinant() < 0.0 && sigma3 <= config.degenerate_atol {
            right.column_mut(2).neg_mut();
        }
        (left, right)
    };
    let (l, r) = proper(l, r, s[2]);
    let (lp, rp) = proper(lp, rp, sp[2]);
    let o1 = lp * l.transpose();
    let o2 = rp * r.transpose();

    let mut d = Decision::new(Verdict::Inconclusive, Branch::Degenerate);
    let lift = |o: Matrix3<f64>| Rotation3::new(o, 1e-9).map(|r| so3_to_su2(&r));
    let witness = match (lift(o1), lift(o2)) {
        (Ok(u1), Ok(u2)) => LocalUnitary::new(vec![u1, u2], 1e-9)?,
        (a, b) => {
            let err = a.err().or(b.err()).unwrap();
            d.note = Some(format!("singular vectors did not give rotations: {err}"));
            return Ok(d);
        }
    };
    let residual = verify_witness(&reconstruct_density(t)?, &reconstruct_density(t_prime)?, &witness)?;
    d.residual = Some(residual);
    if residual <= config.verify_tol {
        d.verdict = Verdict::Equivalent;
        d.witness = Some(witness);
    } else {
        d.note = Some(format!("witness residual {residual:e} exceeds {:e}", config.verify_tol));
    }
    Ok(d)
}

/// Full pipeline: tensors, genericity, the degenerate two-qubit branch,
/// invariant comparison, then witness reconstruction and verification.
pub fn decide_equivalence(rho: &DensityState, rho_prime: &DensityState, config: &Config) -> Result<Decision, DecideError> {
    let n = rho.n_qubits();
    if n != rho_prime.n_qubits() {
        return Err(DecideError::QubitMismatch { left: n, right: rho_prime.n_qubits() });
    }
    if !(2..=4).contains(&n) {
        return Err(DecideError::UnsupportedQubitCount(n));
    }
    let scheme = config.scheme.unwrap_or(Scheme::default_for(n));
    if scheme.n_qubits() != n {
        return Err(InvariantError::WrongQubitCount { expected: scheme.n_qubits(), found: n }.into());
    }
    let t = extract_tensors(rho)?;
    let tp = extract_tensors(rho_prime)?;
    let reports = (genericity(&t, config.rank_tol)?, genericity(&tp, config.rank_tol)?);

    let small = |tt: &BlochTensors| (1..=2).all(|q| tt.vector(q).unwrap().norm() <= config.degenerate_atol);
    if n == 2 && small(&t) && small(&tp) {
        let mut d = degenerate_two_qubit_decide(&t, &tp, config)?;
        d.genericity = Some(reports);
        return Ok(d);
    }

    let mut d = Decision::new(Verdict::Inconclusive, Branch::Invariants);
    d.scheme = Some(scheme);
    let report = compare_invariants(&evaluate_scheme(scheme, &t)?, &evaluate_scheme(scheme, &tp)?, config.rtol, config.atol)?;
    let generic = reports.0.generic && reports.1.generic;
    d.genericity = Some(reports);
    if let Some(sep) = report.first_failure {
        d.verdict = Verdict::Inequivalent;
        d.separating = Some(sep);
        return Ok(d);
    }

    if !generic {
        let identity = LocalUnitary::identity(n);
        let residual = verify_witness(rho, rho_prime, &identity)?;
        if residual <= config.verify_tol {
            d.verdict = Verdict::Equivalent;
            d.witness = Some(identity);
            d.residual = Some(residual);
        } else {
            d.note = Some("invariants agree but the states are not generic".into());
        }
        return Ok(d);
    }

    match reconstruct_witness(&t, &tp, config) {
        Ok(lu) => {
            let residual = verify_witness(rho, rho_prime, &lu)?;
            d.residual = Some(residual);
            if residual <= config.verify_tol {
                d.verdict = Verdict::Equivalent;
                d.witness = Some(lu);
            } else {
                d.note = Some(format!("witness residual {residual:e} exceeds {:e}", config.verify_tol));
            }
        }
        Err(WitnessError::OrientationMismatch { separation, .. }) => {
            d.verdict = Verdict::Inequivalent;
            d.separating = Some(separation);
        }
        Err(e) => d.note = Some(e.to_string()),
    }
    Ok(d)
}
