//! `blochlu`: local-unitary invariants and equivalence checks for multi-qubit
//! density matrices.
//!
//! Exit status: 0 success or Equivalent, 1 Inequivalent (or a failed
//! selftest), 2 Inconclusive, 3 any error.

/// `println!` that tolerates a closed stdout (e.g. piping into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod io;
mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use blochlu::bloch::extract_tensors;
use blochlu::decide::{decide_equivalence, Branch, Config, Decision, Verdict};
use blochlu::invariants::{evaluate_scheme, generic_families, genericity, FamilyRank, GenericityReport, Scheme};
use blochlu::qstate::{apply_local_unitary, random_density, random_local_unitary, LocalUnitary};
use blochlu::words::{check_admissible, enumerate_words, parse_symbols, three_qubit_orbits, two_qubit_orbits, OrbitSet};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, value::RawValue, Value};

const EXIT_ERROR: u8 = 3;


#[derive(Parser)]
#[command(name = "blochlu", version, about = "Local-unitary invariants of multi-qubit states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Auto,
    #[value(name = "12")]
    Two,
    #[value(name = "90")]
    Ninety,
    Gram,
}

#[derive(Subcommand)]
enum Command {
    /// Print all Bloch tensors of a state as JSON.
    Extract {
        state: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate an invariant scheme with a genericity report.
    Invariants {
        state: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        scheme: SchemeArg,
        /// Three qubits only: append the cross-pivot inner products.
        #[arg(long)]
        extended: bool,
        #[arg(long, default_value_t = 1e-10)]
        rank_tol: f64,
    },
    /// Decide whether two states are local-unitary equivalent.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-15)]
        atol: f64,
        /// Print the witness factors U_i with ρ_b = (⊗U_i) ρ_a (⊗U_i)†.
        #[arg(long)]
        witness: bool,
        #[arg(long)]
        json: bool,
    },
    /// Apply a local unitary and write it next to the output as <stem>.unitary.json.
    Apply {
        state: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, env = "BLOCHLU_SEED")]
        seed: Option<u64>,
        /// Takes precedence over --seed.
        #[arg(long)]
        unitary: Option<PathBuf>,
    },
    /// Sample a Ginibre-random density matrix.
    Random {
        #[arg(long)]
        qubits: usize,
        /// Defaults to full rank.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, env = "BLOCHLU_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List orbit families, enumerate one, or check a word.
    Words {
        #[arg(long)]
        qubits: usize,
        #[arg(long)]
        family: Option<String>,
        /// Pivot index sequence, e.g. 1 or 23.
        #[arg(long, conflicts_with = "family")]
        enumerate: Option<String>,
        #[arg(long, requires = "enumerate")]
        cap: Option<usize>,
        #[arg(long, conflicts_with_all = ["family", "enumerate"])]
        check: Option<String>,
    },
    /// Run the randomized property suites.
    Selftest {
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, env = "BLOCHLU_SEED", default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_ERROR) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Extract { state, output } => {
            let t = extract_tensors(&io::read_state(&state)?)?;
            emit(&serde_json::to_string_pretty(&io::tensor_dump(&t))?, output.as_deref())?;
            Ok(0)
        }
        Command::Invariants { state, scheme, extended, rank_tol } => {
            let rho = io::read_state(&state)?;
            let n = rho.n_qubits();
            let scheme = match (scheme, extended) {
                (SchemeArg::Auto, false) => Scheme::default_for(n),
                (SchemeArg::Auto | SchemeArg::Ninety, true) => Scheme::ThreeQubitExtended,
                (SchemeArg::Two, false) => Scheme::TwoQubit12,
                (SchemeArg::Ninety, false) => Scheme::ThreeQubit90,
                (SchemeArg::Gram, false) => Scheme::GramGeneric(n),
                (_, true) => bail!("--extended applies to the three-qubit scheme only"),
            };
            let t = extract_tensors(&rho)?;
            let values = evaluate_scheme(scheme, &t)?;
            let report = genericity(&t, rank_tol)?;
            let entries = values
                .entries
                .iter()
                .map(|e| Ok(Entry { label: e.label.clone(), value: full_precision(e.value)? }))
                .collect::<Result<_>>()?;
            let doc = InvariantReport {
                tool: "blochlu",
                version: env!("CARGO_PKG_VERSION"),
                n_qubits: n,
                scheme: scheme.to_string(),
                tolerances: json!({ "rank_tol": rank_tol }),
                genericity: genericity_json(&report)?,
                entries,
            };
            out!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(0)
        }
        Command::Compare { a, b, rtol, atol, witness, json } => {
            let rho = io::read_state(&a)?;
            let rho_prime = io::read_state(&b)?;
            let config = Config { rtol, atol, ..Config::default() };
            let d = decide_equivalence(&rho, &rho_prime, &config)?;
            if json {
                out!("{}", serde_json::to_string_pretty(&decision_json(&d, &config)?)?);
            } else {
                print_decision(&d, witness);
            }
            Ok(match d.verdict {
                Verdict::Equivalent => 0,
                Verdict::Inequivalent => 1,
                Verdict::Inconclusive => 2,
            })
        }
        Command::Apply { state, output, seed, unitary } => {
            let rho = io::read_state(&state)?;
            let lu = match (unitary, seed) {
                (Some(path), _) => io::read_unitary(&path)?,
                (None, Some(seed)) => random_local_unitary(rho.n_qubits(), &mut ChaCha8Rng::seed_from_u64(seed)),
                (None, None) => bail!("apply needs --seed, --unitary or BLOCHLU_SEED"),
            };
            let out = apply_local_unitary(&rho, &lu)?;
            let lu_path = unitary_path(&output);
            io::write_json(&output, &io::StateFile::from_state(&out))?;
            io::write_json(&lu_path, &io::UnitaryFile::from_unitary(&lu))?;
            out!("wrote {}", output.display());
            out!("wrote {}", lu_path.display());
            Ok(0)
        }
        Command::Random { qubits, rank, seed, output } => {
            if qubits == 0 || qubits > 10 {
                bail!("--qubits must be between 1 and 10");
            }
            let rank = rank.unwrap_or(1 << qubits);
            let rho = random_density(qubits, rank, &mut ChaCha8Rng::seed_from_u64(seed))?;
            emit(&io::state_json(&rho)?, output.as_deref())?;
            Ok(0)
        }
        Command::Words { qubits, family, enumerate, cap, check } => {
            if let Some(src) = check {
                let (head, tail) = parse_symbols(&src)?;
                check_admissible(&head, &tail)?;
                let w: blochlu::words::Word = src.parse()?;
                out!("{w}");
                return Ok(0);
            }
            if let Some(seq) = enumerate {
                let seq: Vec<usize> = seq
                    .chars()
                    .filter(|c| !matches!(c, ',' | ' '))
                    .map(|c| c.to_digit(10).map(|d| d as usize).context("index sequence must be digits"))
                    .collect::<Result<_>>()?;
                print_family(&enumerate_words(qubits, &seq, cap)?);
                return Ok(0);
            }
            let families = named_families(qubits)?;
            match family {
                Some(label) => {
                    let fam = families.iter().find(|f| f.label == label).with_context(|| {
                        let known: Vec<&str> = families.iter().map(|f| f.label.as_str()).collect();
                        format!("unknown family {label:?}; known: {}", known.join(", "))
                    })?;
                    print_family(fam);
                }
                None => {
                    for f in &families {
                        out!("{}\t{} words\tdim {}", f.label, f.words.len(), f.dimension_bound());
                    }
                }
            }
            Ok(0)
        }
        Command::Selftest { trials, seed } => {
            let ok = selftest::run(trials, seed);
            Ok(if ok { 0 } else { 1 })
        }
    }
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            out!("{text}");
            Ok(())
        }
    }
}

/// `out.json` -> `out.unitary.json` in the same directory.
fn unitary_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "state".into());
    output.with_file_name(format!("{stem}.unitary.json"))
}

fn named_families(n: usize) -> Result<Vec<OrbitSet>> {
    Ok(match n {
        2 => {
            let (o1, o2) = two_qubit_orbits();
            vec![o1, o2]
        }
        3 => three_qubit_orbits(),
        _ => generic_families(n)?,
    })
}

fn print_family(f: &OrbitSet) {
    out!("# {} ({} words, target dim {})", f.label, f.words.len(), f.dimension_bound());
    for w in &f.words {
        out!("{w}");
    }
}

/// Seventeen significant digits, as a raw JSON number.
fn full_precision(x: f64) -> Result<Box<RawValue>> {
    if !x.is_finite() {
        bail!("non-finite value {x}");
    }
    Ok(RawValue::from_string(format!("{x:.16e}"))?)
}

#[derive(Serialize)]
struct Entry {
    label: String,
    value: Box<RawValue>,
}

#[derive(Serialize)]
struct InvariantReport {
    tool: &'static str,
    version: &'static str,
    n_qubits: usize,
    scheme: String,
    tolerances: Value,
    genericity: Genericity,
    entries: Vec<Entry>,
}

#[derive(Serialize)]
struct Family {
    label: String,
    dim: usize,
    rank: usize,
    singular_values: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
struct Genericity {
    generic: bool,
    vector_families: Vec<Family>,
    other_families: Vec<Family>,
}

#[derive(Serialize)]
struct SeparatingJson {
    label: String,
    a: Box<RawValue>,
    b: Box<RawValue>,
    gap: f64,
}

#[derive(Serialize)]
struct DecisionReport {
    tool: &'static str,
    version: &'static str,
    verdict: &'static str,
    branch: &'static str,
    scheme: Option<String>,
    tolerances: Value,
    separating: Option<SeparatingJson>,
    residual: Option<f64>,
    witness: Option<io::UnitaryFile>,
    note: Option<String>,
}

fn family_json(f: &FamilyRank) -> Result<Family> {
    let sv = f.singular_values.iter().map(|&s| full_precision(s)).collect::<Result<Vec<_>>>()?;
    Ok(Family { label: f.label.clone(), dim: f.dim, rank: f.rank, singular_values: sv })
}

fn genericity_json(r: &GenericityReport) -> Result<Genericity> {
    let vector = r.vector_families.iter().map(family_json).collect::<Result<Vec<_>>>()?;
    let other = r.other_families.iter().map(family_json).collect::<Result<Vec<_>>>()?;
    Ok(Genericity { generic: r.generic, vector_families: vector, other_families: other })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Equivalent => "equivalent",
        Verdict::Inequivalent => "inequivalent",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Invariants => "invariants",
        Branch::Degenerate => "degenerate",
    }
}

fn complex_text(z: num_complex::Complex64) -> String {
    format!("{:.16e}{:+.16e}i", z.re, z.im)
}

fn print_witness(lu: &LocalUnitary) {
    for (k, u) in lu.factors().iter().enumerate() {
        out!(
            "U{} = [[{}, {}], [{}, {}]]",
            k + 1,
            complex_text(u[(0, 0)]),
            complex_text(u[(0, 1)]),
            complex_text(u[(1, 0)]),
            complex_text(u[(1, 1)])
        );
    }
}

fn print_decision(d: &Decision, witness: bool) {
    out!("verdict: {}", verdict_name(d.verdict));
    out!("branch: {}", branch_name(d.branch));
    if let Some(s) = d.scheme {
        out!("scheme: {s}");
    }
    if let Some(s) = &d.separating {
        out!("separating: {}", s.label);
        out!("  a = {:.16e}", s.value);
        out!("  b = {:.16e}", s.value_prime);
        out!("  gap = {:.3e}", s.gap);
    }
    if let Some(r) = d.residual {
        out!("residual: {r:.3e}");
    }
    if witness {
        match &d.witness {
            Some(lu) => print_witness(lu),
            None => out!("witness: none"),
        }
    }
    if let Some(note) = &d.note {
        out!("note: {note}");
    }
}

fn decision_json(d: &Decision, config: &Config) -> Result<DecisionReport> {
    let separating = match &d.separating {
        Some(s) => Some(SeparatingJson {
            label: s.label.clone(),
            a: full_precision(s.value)?,
            b: full_precision(s.value_prime)?,
            gap: s.gap,
        }),
        None => None,
    };
    Ok(DecisionReport {
        tool: "blochlu",
        version: env!("CARGO_PKG_VERSION"),
        verdict: verdict_name(d.verdict),
        branch: branch_name(d.branch),
        scheme: d.scheme.map(|s| s.to_string()),
        tolerances: json!({
            "rtol": config.rtol,
            "atol": config.atol,
            "verify_tol": config.verify_tol,
            "rank_tol": config.rank_tol,
        }),
        separating,
        residual: d.residual,
        witness: d.witness.as_ref().map(io::UnitaryFile::from_unitary),
        note: d.note.clone(),
    })
}
