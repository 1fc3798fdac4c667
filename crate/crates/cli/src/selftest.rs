//! Randomized property suites behind `blochlu selftest`.

use std::time::Instant;

use blochlu::bloch::{cayley_hamilton_residual, elementary_from_power, extract_tensors, fourth_power_sum, reconstruct_density};
use blochlu::decide::{compare_invariants, decide_equivalence, Config, Verdict};
use blochlu::invariants::{evaluate_scheme, Scheme};
use blochlu::qstate::{apply_local_unitary, random_density, random_local_unitary, random_su2, so3_to_su2, su2_to_so3};
use blochlu::words::{enumerate_words, Word};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io;

/// Outcome of one trial: pass flag and the measured error.
type Trial = (bool, f64);

struct Suite {
    name: &'static str,
    run: fn(&mut ChaCha8Rng) -> Result<Trial, String>,
}

fn max_entry_gap(a: &nalgebra::DMatrix<num_complex::Complex64>, b: &nalgebra::DMatrix<num_complex::Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn extract_round_trip(rng: &mut ChaCha8Rng) -> Result<Trial, String> {
    let n = rng.random_range(1..=4);
    let rank = rng.random_range(1..=1usize << n);
    let rho = random_density(n, rank, rng).map_err(|e| e.to_string())?;
    let t = extract_tensors(&rho).map_err(|e| e.to_string())?;
    let back = reconstruct_density(&t).map_err(|e| e.to_string())?;
    let err = max_entry_gap(rho.matrix(), back.matrix());
    Ok((err <= 1e-12, err))
}

fn invariance(rng: &mut ChaCha8Rng) -> Result<Trial, String> {
    let n = rng.random_range(2..=3);
    let rho = random_density(n, rng.random_range(1..=1usize << n), rng).map_err(|e| e.to_string())?;
    let lu = random_local_unitary(n, rng);
    let moved = apply_local_unitary(&rho, &lu).map_err(|e| e.to_string())?;
    let scheme = Scheme::default_for(n);
    let a = evaluate_scheme(scheme, &extract_tensors(&rho).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let b = evaluate_scheme(scheme, &extract_tensors(&moved).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let report = compare_invariants(&a, &b, 1e-8, 1e-15).map_err(|e| e.to_string())?;
    Ok((report.matched, report.max_violation))
}

fn witness(rng: &mut ChaCha8Rng) -> Result<Trial, String> {
    let n = rng.random_range(2..=3);
    let rho = random_density(n, 1 << n, rng).map_err(|e| e.to_string())?;
    let lu = random_local_unitary(n, rng);
    let moved = apply_local_unitary(&rho, &lu).map_err(|e| e.to_string())?;
    let d = decide_equivalence(&rho, &moved, &Config::default()).map_err(|e| e.to_string())?;
    let residual = d.residual.unwrap_or(f64::INFINITY);
    Ok((d.verdict == Verdict::Equivalent && residual <= 1e-7, residual))
}

fn newton(rng: &mut ChaCha8Rng) -> Result<Trial, String> {
    let x: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
    let p = |k: i32| x.iter().map(|v| v.powi(k)).sum::<f64>();
    let (e1, e2, e3) = elementary_from_power(p(1), p(2), p(3));
    let direct = [x[0] + x[1] + x[2], x[0] * x[1] + x[0] * x[2] + x[1] * x[2], x[0] * x[1] * x[2]];
    let err = [e1 - direct[0], e2 - direct[1], e3 - direct[2], fourth_power_sum(p(1), p(2), p(3)) - p(4)]
        .iter()
        .fold(0.0f64, |m, d| m.max(d.abs()));
    Ok((err <= 1e-9, err))
}

fn cayley_hamilton(rng: &mut ChaCha8Rng) -> Result<Trial, String> {
    let a = Matrix3::<f64>::from_fn(|_, _| rng.random_range(-1.0..1.0));
    let r = cayley_hamilton_residual(&(a + a.transpose())).map_err(|e| e.to_string())?;
    Ok((r <= 1e-9, r))
}

fn double_cover(rng: &mut ChaCha8Rng) -> Result<Trial, String> {
    let u = random_su2(rng);
    let o = su2_to_so3(&u, 1e-10).map_err(|e| e.to_string())?;
    let v = so3_to_su2(&o);
    let plus = (u - v).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let minus = (u + v).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let err = plus.min(minus);
    Ok((err <= 1e-10, err))
}

fn serialization(rng: &mut ChaCha8Rng) -> Result<Trial, String> {
    let n = rng.random_range(1..=3);
    let rho = random_density(n, rng.random_range(1..=1usize << n), rng).map_err(|e| e.to_string())?;
    let text = io::state_json(&rho).map_err(|e| e.to_string())?;
    let file: io::StateFile = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let back = file.to_state().map_err(|e| e.to_string())?;
    let t = extract_tensors(&rho).map_err(|e| e.to_string())?;
    let dump = serde_json::to_string(&io::tensor_dump(&t)).map_err(|e| e.to_string())?;
    let t_back = io::parse_tensor_dump(&serde_json::from_str(&dump).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let err = max_entry_gap(rho.matrix(), back.matrix());
    Ok((back == rho && t_back == t, err))
}

fn word_syntax(rng: &mut ChaCha8Rng) -> Result<Trial, String> {
    let n = rng.random_range(2..=3);
    let pivot = rng.random_range(1..=n);
    let family = enumerate_words(n, &[pivot], None).map_err(|e| e.to_string())?;
    let bad = family
        .words
        .iter()
        .filter(|w| w.to_string().parse::<Word>().as_ref() != Ok(*w))
        .count();
    Ok((bad == 0, bad as f64))
}

const SUITES: &[Suite] = &[
    Suite { name: "extract-reconstruct", run: extract_round_trip },
    Suite { name: "lu-invariance", run: invariance },
    Suite { name: "witness-recovery", run: witness },
    Suite { name: "newton-identities", run: newton },
    Suite { name: "cayley-hamilton", run: cayley_hamilton },
    Suite { name: "su2-so3-cover", run: double_cover },
    Suite { name: "serialization", run: serialization },
    Suite { name: "word-syntax", run: word_syntax },
];

/// Runs every suite `trials` times. Each suite gets its own stream derived
/// from `seed`, so results do not depend on suite order.
pub fn run(trials: usize, seed: u64) -> bool {
    out!("selftest: {trials} trials per suite, seed {seed}");
    if trials == 0 {
        return true;
    }
    let mut all_ok = true;
    for (k, suite) in SUITES.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((k as u64 + 1) << 32));
        let start = Instant::now();
        let mut passed = 0;
        let mut worst = 0.0f64;
        let mut first_error = None;
        for _ in 0..trials {
            match (suite.run)(&mut rng) {
                Ok((ok, err)) => {
                    passed += usize::from(ok);
                    worst = worst.max(err);
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        let ok = passed == trials;
        all_ok &= ok;
        let error = first_error.map(|e| format!(" error: {e}")).unwrap_or_default();
        out!(
            "{} {:<20} {passed}/{trials} worst {worst:.2e} ({:.2}s){error}",
            if ok { "ok  " } else { "FAIL" },
            suite.name,
            start.elapsed().as_secs_f64()
        );
    }
    all_ok
}
