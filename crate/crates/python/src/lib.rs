//! Python bindings for the `qpvsim` simulator.
//!
//! Bell labels cross the boundary as two-character strings such as `"01"`;
//! transcripts cross as JSON lines.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qpvsim::bell;
use qpvsim::cli::config::ScenarioConfig;
use qpvsim::cli::{runner, stats};
use qpvsim::keyauth::{self, AuthSession};
use qpvsim::quantum::{self, BellLabel, Pauli};
use qpvsim::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn label(s: &str) -> PyResult<BellLabel> {
    s.parse().map_err(to_py)
}

fn labels(v: &[String]) -> PyResult<Vec<BellLabel>> {
    v.iter().map(|s| label(s)).collect()
}

fn pauli(s: &str) -> PyResult<Pauli> {
    match s {
        "I" => Ok(Pauli::I),
        "X" => Ok(Pauli::X),
        "Z" => Ok(Pauli::Z),
        "XZ" => Ok(Pauli::XZ),
        _ => Err(PyValueError::new_err(format!("unknown Pauli {s:?}; use I, X, Z or XZ"))),
    }
}

/// Dense state vector over up to 16 qubits with its own seeded RNG.
#[pyclass(name = "StateVector", module = "pyqpv")]
struct PyStateVector {
    inner: quantum::StateVector,
    rng: ChaCha8Rng,
}

#[pymethods]
impl PyStateVector {
    #[new]
    #[pyo3(signature = (num_qubits, seed = 0))]
    fn new(num_qubits: usize, seed: u64) -> PyResult<Self> {
        Ok(PyStateVector { inner: quantum::StateVector::zero(num_qubits).map_err(to_py)?, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    /// Product of Bell pairs given as `(q1, q2, label)` triples.
    #[staticmethod]
    #[pyo3(signature = (num_qubits, pairs, seed = 0))]
    fn bell_product(num_qubits: usize, pairs: Vec<(usize, usize, String)>, seed: u64) -> PyResult<Self> {
        let p = pairs.iter().map(|(a, b, l)| Ok((*a, *b, label(l)?))).collect::<PyResult<Vec<_>>>()?;
        Ok(PyStateVector { inner: quantum::bell_product(num_qubits, &p).map_err(to_py)?, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    #[getter]
    fn num_qubits(&self) -> usize {
        self.inner.num_qubits()
    }

    fn amplitudes(&self) -> Vec<(f64, f64)> {
        self.inner.amplitudes().iter().map(|c| (c.re, c.im)).collect()
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    fn prob_one(&self, q: usize) -> PyResult<f64> {
        self.inner.prob_one(q).map_err(to_py)
    }

    fn hadamard(&mut self, q: usize) -> PyResult<()> {
        self.inner.apply_hadamard(q).map_err(to_py)
    }

    fn pauli(&mut self, q: usize, which: &str) -> PyResult<()> {
        self.inner.apply_pauli(q, pauli(which)?).map_err(to_py)
    }

    fn dense_encode(&mut self, q: usize, msg: &str) -> PyResult<()> {
        self.inner.dense_encode(q, label(msg)?).map_err(to_py)
    }

    fn measure_z(&mut self, q: usize) -> PyResult<u8> {
        self.inner.measure_z(q, &mut self.rng).map_err(to_py)
    }

    /// Probabilities of the four Bell outcomes on `(q1, q2)`, indexed 00, 01, 10, 11.
    fn bell_weights(&self, q1: usize, q2: usize) -> PyResult<[f64; 4]> {
        self.inner.bell_weights(q1, q2).map_err(to_py)
    }

    fn bsm(&mut self, q1: usize, q2: usize) -> PyResult<String> {
        Ok(self.inner.bsm(q1, q2, &mut self.rng).map_err(to_py)?.to_string())
    }

    /// Projects onto a chosen Bell outcome; returns its probability.
    fn bsm_forced(&mut self, q1: usize, q2: usize, outcome: &str) -> PyResult<f64> {
        self.inner.bsm_forced(q1, q2, label(outcome)?).map_err(to_py)
    }

    /// Bell label of `(q1, q2)` when they form a definite Bell pair.
    fn bell_label_of(&self, q1: usize, q2: usize) -> PyResult<Option<String>> {
        Ok(self.inner.bell_label_of(q1, q2).map_err(to_py)?.map(|l| l.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("StateVector(num_qubits={})", self.inner.num_qubits())
    }
}

#[pyfunction]
fn swap_label(a: &str, b: &str, m: &str) -> PyResult<String> {
    Ok(bell::swap_label(label(a)?, label(b)?, label(m)?).to_string())
}

#[pyfunction]
fn chain_label(pairs: Vec<String>, outcomes: Vec<String>) -> PyResult<String> {
    Ok(bell::chain_label(&labels(&pairs)?, &labels(&outcomes)?).map_err(to_py)?.to_string())
}

#[pyfunction]
fn infer_hidden(pairs: Vec<String>, outcomes: Vec<String>, endpoint: &str) -> PyResult<String> {
    Ok(bell::infer_hidden(&labels(&pairs)?, &labels(&outcomes)?, label(endpoint)?).map_err(to_py)?.to_string())
}

#[pyfunction]
fn emit_table() -> String {
    bell::emit_table()
}

/// Runs one trial of a scenario and returns its transcripts as JSON lines.
#[pyfunction]
#[pyo3(signature = (scheme, adversary = "none", seed = 0, rounds = 1, d = 1.0, trial = 0))]
fn run_scheme(scheme: &str, adversary: &str, seed: u64, rounds: usize, d: f64, trial: u64) -> PyResult<Vec<String>> {
    let mut cfg = ScenarioConfig { scheme: scheme.parse().map_err(to_py)?, seed, rounds, ..Default::default() };
    cfg.adversary = adversary.parse().map_err(to_py)?;
    cfg.geometry.d = d;
    cfg.validate().map_err(to_py)?;
    let out = runner::run_trial(&cfg, trial).map_err(to_py)?;
    Ok(out.transcripts.iter().map(|t| t.to_json_line()).collect())
}

/// Runs a full batch described by TOML text; returns the transcript stream.
#[pyfunction]
fn run_config(toml: &str) -> PyResult<Vec<String>> {
    let cfg = ScenarioConfig::from_toml(toml).map_err(to_py)?;
    let out = runner::run_batch(&cfg).map_err(to_py)?;
    Ok(out.iter().flat_map(|o| &o.transcripts).map(|t| t.to_json_line()).collect())
}

/// Aggregate statistics over JSON transcript lines, returned as JSON.
#[pyfunction]
fn transcript_stats(lines: Vec<String>) -> PyResult<String> {
    let text = lines.join("\n");
    let ts = stats::read_transcripts(text.as_bytes()).map_err(to_py)?;
    let report = stats::stats(&ts).map_err(to_py)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pyfunction]
fn nearest_neighbor_distance(z: u32) -> PyResult<f64> {
    keyauth::nearest_neighbor_distance(z).map_err(to_py)
}

/// One authentication session: returns `(message, decoded)`.
#[pyfunction]
#[pyo3(signature = (z_p, z_v, prover_key, verifier_key, seed = 0))]
fn auth_session(z_p: u32, z_v: u32, prover_key: Vec<u8>, verifier_key: Vec<u8>, seed: u64) -> PyResult<(Vec<u8>, Vec<u8>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = AuthSession::random(z_p, z_v, prover_key.len(), &mut rng).map_err(to_py)?;
    let decoded = s.run(&prover_key, &verifier_key, &mut rng).map_err(to_py)?;
    Ok((s.m, decoded))
}

#[pymodule]
fn pyqpv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStateVector>()?;
    m.add_function(wrap_pyfunction!(swap_label, m)?)?;
    m.add_function(wrap_pyfunction!(chain_label, m)?)?;
    m.add_function(wrap_pyfunction!(infer_hidden, m)?)?;
    m.add_function(wrap_pyfunction!(emit_table, m)?)?;
    m.add_function(wrap_pyfunction!(run_scheme, m)?)?;
    m.add_function(wrap_pyfunction!(run_config, m)?)?;
    m.add_function(wrap_pyfunction!(transcript_stats, m)?)?;
    m.add_function(wrap_pyfunction!(nearest_neighbor_distance, m)?)?;
    m.add_function(wrap_pyfunction!(auth_session, m)?)?;
    m.add("TRANSCRIPT_VERSION", qpvsim::protocols::TRANSCRIPT_VERSION)?;
    Ok(())
}
