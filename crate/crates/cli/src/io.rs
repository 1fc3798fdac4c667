//! JSON file formats for states, local unitaries and tensor dumps.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use blochlu::bloch::{BlochTensors, QubitSet};
use blochlu::qstate::{validate_density, DensityState, LocalUnitary, Tolerance};
use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Serialize, Deserialize)]
pub struct Grid {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Amplitudes {
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Ensemble {
    pub weights: Vec<f64>,
    pub pures: Vec<Amplitudes>,
}

/// Exactly one of `matrix`, `pure`, `ensemble` must be present.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub n_qubits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pure: Option<Amplitudes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Ensemble>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitaryFile {
    pub factors: Vec<Grid>,
}

fn grid_matrix(g: &Grid, dim: usize, what: &str) -> Result<DMatrix<C64>> {
    if g.re.len() != dim {
        bail!("{what}: BadDimension: expected {dim} rows, found {}", g.re.len());
    }
    if let Some(im) = &g.im {
        if im.len() != dim {
            bail!("{what}: BadDimension: expected {dim} imaginary rows, found {}", im.len());
        }
    }
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    for (r, row) in g.re.iter().enumerate() {
        if row.len() != dim {
            bail!("{what}: BadDimension: row {r} has {} entries, expected {dim}", row.len());
        }
        for (c, &x) in row.iter().enumerate() {
            m[(r, c)].re = x;
        }
    }
    if let Some(im) = &g.im {
        for (r, row) in im.iter().enumerate() {
            if row.len() != dim {
                bail!("{what}: BadDimension: imaginary row {r} has {} entries, expected {dim}", row.len());
            }
            for (c, &x) in row.iter().enumerate() {
                m[(r, c)].im = x;
            }
        }
    }
    Ok(m)
}

fn amplitudes(a: &Amplitudes, dim: usize, what: &str) -> Result<Vec<C64>> {
    if a.re.len() != dim {
        bail!("{what}: BadDimension: expected {dim} amplitudes, found {}", a.re.len());
    }
    let im = match &a.im {
        Some(im) if im.len() != dim => bail!("{what}: BadDimension: expected {dim} imaginary parts, found {}", im.len()),
        Some(im) => im.clone(),
        None => vec![0.0; dim],
    };
    Ok(a.re.iter().zip(im).map(|(&r, i)| C64::new(r, i)).collect())
}

fn normalized_projector(v: &[C64], what: &str) -> Result<DMatrix<C64>> {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        bail!("{what}: zero vector");
    }
    let col = nalgebra::DVector::from_iterator(v.len(), v.iter().map(|z| z / norm));
    Ok(&col * col.adjoint())
}

impl StateFile {
    pub fn to_state(&self) -> Result<DensityState> {
        if self.n_qubits == 0 || self.n_qubits > 16 {
            bail!("n_qubits must be between 1 and 16, got {}", self.n_qubits);
        }
        let dim = 1usize << self.n_qubits;
        let m = match (&self.matrix, &self.pure, &self.ensemble) {
            (Some(g), None, None) => grid_matrix(g, dim, "matrix")?,
            (None, Some(a), None) => normalized_projector(&amplitudes(a, dim, "pure")?, "pure")?,
            (None, None, Some(e)) => {
                if e.weights.len() != e.pures.len() || e.pures.is_empty() {
                    bail!("ensemble: {} weights for {} pure states", e.weights.len(), e.pures.len());
                }
                if let Some(w) = e.weights.iter().find(|&&w| !w.is_finite() || w <= 0.0) {
                    bail!("ensemble: weight {w} is not positive");
                }
                let total: f64 = e.weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    bail!("ensemble: weights sum to {total}, expected 1");
                }
                let mut m = DMatrix::zeros(dim, dim);
                for (k, (w, p)) in e.weights.iter().zip(&e.pures).enumerate() {
                    let what = format!("ensemble pure {k}");
                    m += normalized_projector(&amplitudes(p, dim, &what)?, &what)? * C64::new(*w, 0.0);
                }
                m
            }
            _ => bail!("state file needs exactly one of \"matrix\", \"pure\", \"ensemble\""),
        };
        Ok(validate_density(m, &Tolerance::default())?)
    }

    pub fn from_state(state: &DensityState) -> Self {
        let m = state.matrix();
        let rows = |f: fn(&C64) -> f64| (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect()).collect();
        StateFile {
            n_qubits: state.n_qubits(),
            matrix: Some(Grid { re: rows(|z| z.re), im: Some(rows(|z| z.im)) }),
            pure: None,
            ensemble: None,
        }
    }
}

pub fn read_state(path: &Path) -> Result<DensityState> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: StateFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    file.to_state().with_context(|| format!("invalid state in {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn state_json(state: &DensityState) -> Result<String> {
    Ok(serde_json::to_string_pretty(&StateFile::from_state(state))?)
}

fn grid_2x2(u: &Matrix2<C64>) -> Grid {
    let rows = |f: fn(&C64) -> f64| (0..2).map(|r| (0..2).map(|c| f(&u[(r, c)])).collect()).collect();
    Grid { re: rows(|z| z.re), im: Some(rows(|z| z.im)) }
}

impl UnitaryFile {
    pub fn from_unitary(lu: &LocalUnitary) -> Self {
        UnitaryFile { factors: lu.factors().iter().map(grid_2x2).collect() }
    }

    pub fn to_unitary(&self) -> Result<LocalUnitary> {
        let factors = self
            .factors
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let m = grid_matrix(g, 2, &format!("factor {k}"))?;
                Ok(Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LocalUnitary::new(factors, 1e-9)?)
    }
}

pub fn read_unitary(path: &Path) -> Result<LocalUnitary> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: UnitaryFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    file.to_unitary().with_context(|| format!("invalid unitary in {}", path.display()))
}

/// Nested arrays indexed by the Pauli multi-index, last qubit innermost.
fn nest(data: &[f64]) -> Value {
    if data.len() == 1 {
        return Value::from(data[0]);
    }
    if data.len() == 3 {
        return Value::from(data.to_vec());
    }
    let step = data.len() / 3;
    Value::Array(data.chunks(step).map(nest).collect())
}

fn flatten(v: &Value, out: &mut Vec<f64>) -> Result<()> {
    match v {
        Value::Array(items) => {
            if items.len() != 3 {
                bail!("tensor axes must have length 3, found {}", items.len());
            }
            for item in items {
                flatten(item, out)?;
            }
        }
        Value::Number(n) => out.push(n.as_f64().context("non-finite tensor entry")?),
        other => bail!("unexpected tensor entry {other}"),
    }
    Ok(())
}

/// `{"n_qubits": N, "tensors": {"T1": [..], "T12": [[..]], ...}}`.
pub fn tensor_dump(t: &BlochTensors) -> Value {
    let mut tensors = serde_json::Map::new();
    for (s, data) in t.iter() {
        tensors.insert(format!("T{s}"), nest(data));
    }
    serde_json::json!({ "n_qubits": t.n_qubits(), "tensors": tensors })
}

pub fn parse_tensor_dump(v: &Value) -> Result<BlochTensors> {
    let n = v["n_qubits"].as_u64().context("missing n_qubits")? as usize;
    let obj = v["tensors"].as_object().context("missing tensors object")?;
    let mut map = BTreeMap::new();
    for (key, value) in obj {
        let digits = key.strip_prefix('T').with_context(|| format!("bad tensor key {key}"))?;
        let labels: Vec<usize> = digits
            .chars()
            .map(|c| c.to_digit(10).map(|d| d as usize).with_context(|| format!("bad tensor key {key}")))
            .collect::<Result<_>>()?;
        let set = QubitSet::new(labels).with_context(|| format!("bad tensor key {key}"))?;
        let mut data = Vec::new();
        flatten(value, &mut data).with_context(|| format!("tensor {key}"))?;
        map.insert(set, data);
    }
    Ok(BlochTensors::from_map(n, map)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use blochlu::bloch::extract_tensors;
    use blochlu::qstate::random_density;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn state_round_trip_is_bit_exact() {
        let s = random_density(2, 3, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let text = state_json(&s).unwrap();
        let back = serde_json::from_str::<StateFile>(&text).unwrap().to_state().unwrap();
        assert_eq!(back.matrix(), s.matrix());
    }

    #[test]
    fn tensor_dump_round_trip_is_bit_exact() {
        let s = random_density(3, 8, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let t = extract_tensors(&s).unwrap();
        let text = serde_json::to_string(&tensor_dump(&t)).unwrap();
        let back = parse_tensor_dump(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn bad_row_is_named() {
        let f: StateFile = serde_json::from_str(r#"{"n_qubits":1,"matrix":{"re":[[1,0],[0]]}}"#).unwrap();
        let err = f.to_state().unwrap_err().to_string();
        assert!(err.contains("BadDimension") && err.contains("row 1"), "{err}");
    }

    #[test]
    fn ensemble_and_pure_forms() {
        let f: StateFile = serde_json::from_str(
            r#"{"n_qubits":1,"ensemble":{"weights":[0.5,0.5],"pures":[{"re":[1,0]},{"re":[0,1]}]}}"#,
        )
        .unwrap();
        let s = f.to_state().unwrap();
        assert!((s.matrix()[(0, 0)].re - 0.5).abs() < 1e-15);
        let f: StateFile = serde_json::from_str(r#"{"n_qubits":1,"pure":{"re":[1,0],"im":[0,1]}}"#).unwrap();
        assert!((f.to_state().unwrap().matrix()[(0, 1)].im + 0.5).abs() < 1e-15);
        let f: StateFile = serde_json::from_str(r#"{"n_qubits":1}"#).unwrap();
        assert!(f.to_state().is_err());
    }
}
