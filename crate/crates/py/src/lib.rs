//! Python bindings: matrices travel as nested lists of floats, reports and
//! verdicts as dicts. Build with `cargo build -p effattn-py --release`; the
//! cdylib imports as `effattn_py` (see python/smoke_test.py).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use effattn::attention::{AttentionMatrix, HiddenStates};
use effattn::harness::{Dims, ExperimentConfig};
use effattn::linalg::Tolerance;
use effattn::matrix::Matrix;
use effattn::metrics::PredictionVector;

type PyMatrixRows = Vec<Vec<f64>>;

fn err(e: effattn::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix_from(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(err)
}

fn matrix_to(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn tolerance(rank_tol: Option<f64>, check_tol: Option<f64>) -> PyResult<Tolerance> {
    Tolerance::new(
        rank_tol.unwrap_or(Tolerance::DEFAULT_RANK_REL),
        check_tol.unwrap_or(Tolerance::DEFAULT_CHECK_ABS),
    )
    .map_err(err)
}

fn attention_pair(
    a: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    tol: &Tolerance,
) -> PyResult<(AttentionMatrix, HiddenStates)> {
    let a = AttentionMatrix::new(matrix_from(a)?, tol).map_err(err)?;
    let t = HiddenStates::new(matrix_from(t)?);
    Ok((a, t))
}

/// Project each attention row onto Im([T,1]); prediction-preserving,
/// row-stochastic, and validated unless `validate=False`.
#[pyfunction]
#[pyo3(signature = (a, t, rank_tol=None, check_tol=None, validate=true))]
fn efficient_attention(
    a: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    rank_tol: Option<f64>,
    check_tol: Option<f64>,
    validate: bool,
) -> PyResult<Vec<Vec<f64>>> {
    let tol = tolerance(rank_tol, check_tol)?;
    let (a, t) = attention_pair(a, t, &tol)?;
    let eff = if validate {
        effattn::attention::efficient_attention(&a, &t, &tol)
    } else {
        effattn::attention::efficient_attention_unvalidated(&a, &t, &tol)
    }
    .map_err(err)?;
    Ok(matrix_to(&eff))
}

/// Baseline projection onto Im(T); preserves A·T but not the probability
/// structure.
#[pyfunction]
#[pyo3(signature = (a, t, rank_tol=None, check_tol=None))]
fn effective_attention_brunner(
    a: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    rank_tol: Option<f64>,
    check_tol: Option<f64>,
) -> PyResult<Vec<Vec<f64>>> {
    let tol = tolerance(rank_tol, check_tol)?;
    let (a, t) = attention_pair(a, t, &tol)?;
    let eff = effattn::attention::effective_attention_brunner(&a, &t, &tol).map_err(err)?;
    Ok(matrix_to(&eff))
}

/// Split A into (a_perp, a_sharp) with a_perp rows in Im([T,1]) and
/// a_sharp rows in Ker([T,1]').
#[pyfunction]
#[pyo3(signature = (a, t, rank_tol=None, check_tol=None))]
fn decompose(
    a: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    rank_tol: Option<f64>,
    check_tol: Option<f64>,
) -> PyResult<(PyMatrixRows, PyMatrixRows)> {
    let tol = tolerance(rank_tol, check_tol)?;
    let (a, t) = attention_pair(a, t, &tol)?;
    let d = effattn::attention::decompose(&a, &t, &tol).map_err(err)?;
    Ok((matrix_to(&d.a_perp), matrix_to(&d.a_sharp)))
}

/// Identifiability verdict for a hidden-states matrix, as a dict.
#[pyfunction]
#[pyo3(signature = (t, d_v=None, rank_tol=None, check_tol=None))]
fn identifiability(
    py: Python<'_>,
    t: Vec<Vec<f64>>,
    d_v: Option<usize>,
    rank_tol: Option<f64>,
    check_tol: Option<f64>,
) -> PyResult<Py<PyDict>> {
    let tol = tolerance(rank_tol, check_tol)?;
    let t = HiddenStates::new(matrix_from(t)?);
    let v = effattn::attention::identifiability(&t, d_v, &tol).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("d_s", v.d_s)?;
    out.set_item("d_v", v.d_v)?;
    out.set_item("rank_t", v.rank_t)?;
    out.set_item("rank_t1", v.rank_t1)?;
    out.set_item("kernel_dim", v.kernel_dim)?;
    out.set_item("raw_identifiable", v.raw_identifiable)?;
    out.set_item("stochastic_identifiable", v.stochastic_identifiable)?;
    out.set_item(
        "dimension_sufficient_nonident",
        v.dimension_sufficient_nonident,
    )?;
    Ok(out.unbind())
}

/// Probability-constraint violations as (row, kind, magnitude) tuples.
#[pyfunction]
#[pyo3(signature = (m, check_tol=None))]
fn validate_distribution(
    m: Vec<Vec<f64>>,
    check_tol: Option<f64>,
) -> PyResult<Vec<(usize, String, f64)>> {
    let tol = tolerance(None, check_tol)?;
    let m = matrix_from(m)?;
    Ok(effattn::attention::validate_distribution(&m, &tol)
        .into_iter()
        .map(|v| {
            let kind = match v.kind {
                effattn::attention::ViolationKind::Negative => "negative",
                effattn::attention::ViolationKind::RowSum => "row_sum",
            };
            (v.row, kind.to_string(), v.magnitude)
        })
        .collect())
}

/// True iff A·T and B·T agree within check_tol.
#[pyfunction]
#[pyo3(signature = (a, b, t, rank_tol=None, check_tol=None))]
fn prediction_preserved(
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    rank_tol: Option<f64>,
    check_tol: Option<f64>,
) -> PyResult<bool> {
    let tol = tolerance(rank_tol, check_tol)?;
    let (a, t) = attention_pair(a, t, &tol)?;
    let b = matrix_from(b)?;
    effattn::attention::prediction_preserved(&a, &b, &t, &tol).map_err(err)
}

/// Seeded kernel-space adversarial sample as a dict with keys
/// `adversarial`, `lambda_used`, `kernel_direction`.
#[pyfunction]
#[pyo3(signature = (a, t, seed, rank_tol=None, check_tol=None))]
fn generate_adversarial(
    py: Python<'_>,
    a: Vec<Vec<f64>>,
    t: Vec<Vec<f64>>,
    seed: u64,
    rank_tol: Option<f64>,
    check_tol: Option<f64>,
) -> PyResult<Py<PyDict>> {
    let tol = tolerance(rank_tol, check_tol)?;
    let (a, t) = attention_pair(a, t, &tol)?;
    let sample = effattn::adversarial::generate_adversarial(&a, &t, seed, &tol).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("adversarial", matrix_to(sample.adversarial.matrix()))?;
    out.set_item("lambda_used", sample.lambda_used)?;
    out.set_item("kernel_direction", matrix_to(&sample.kernel_direction))?;
    Ok(out.unbind())
}

/// Entrywise complement 1 - A (not a distribution; rows sum to d_s - 1).
#[pyfunction]
#[pyo3(signature = (a, check_tol=None))]
fn complement_attention(a: Vec<Vec<f64>>, check_tol: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
    let tol = tolerance(None, check_tol)?;
    let a = AttentionMatrix::new(matrix_from(a)?, &tol).map_err(err)?;
    Ok(matrix_to(&effattn::adversarial::complement_attention(&a)))
}

#[pyfunction]
#[pyo3(signature = (m, rank_tol=None))]
fn rank(m: Vec<Vec<f64>>, rank_tol: Option<f64>) -> PyResult<usize> {
    let tol = tolerance(rank_tol, None)?;
    Ok(effattn::linalg::rank(&matrix_from(m)?, &tol))
}

/// Orthonormal basis of the column space, as a list of vectors.
#[pyfunction]
#[pyo3(signature = (m, rank_tol=None))]
fn column_space_basis(m: Vec<Vec<f64>>, rank_tol: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
    let tol = tolerance(rank_tol, None)?;
    Ok(effattn::linalg::column_space_basis(&matrix_from(m)?, &tol)
        .vectors()
        .to_vec())
}

/// Orthonormal basis of Ker(m') = Im(m)^perp, as a list of vectors.
#[pyfunction]
#[pyo3(signature = (m, rank_tol=None))]
fn null_space_basis(m: Vec<Vec<f64>>, rank_tol: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
    let tol = tolerance(rank_tol, None)?;
    Ok(effattn::linalg::null_space_basis(&matrix_from(m)?, &tol)
        .vectors()
        .to_vec())
}

#[pyfunction]
fn augment_ones(t: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(matrix_to(&effattn::linalg::augment_ones(&matrix_from(t)?)))
}

#[pyfunction]
fn wasserstein1_predictions(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let p = PredictionVector::new(p).map_err(err)?;
    let q = PredictionVector::new(q).map_err(err)?;
    effattn::metrics::wasserstein1_predictions(&p, &q).map_err(err)
}

#[pyfunction]
fn wasserstein1_rows(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    effattn::metrics::wasserstein1_rows(&p, &q).map_err(err)
}

#[pyfunction]
fn mean_wasserstein_matrices(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    effattn::metrics::mean_wasserstein_matrices(&matrix_from(a)?, &matrix_from(b)?).map_err(err)
}

#[pyfunction]
fn rmse(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let p = PredictionVector::new(p).map_err(err)?;
    let q = PredictionVector::new(q).map_err(err)?;
    effattn::metrics::rmse(&p, &q).map_err(err)
}

#[pyfunction]
fn pearson_r2(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    let p = PredictionVector::new(p).map_err(err)?;
    let q = PredictionVector::new(q).map_err(err)?;
    effattn::metrics::pearson_r2(&p, &q).map_err(err)
}

#[pyfunction]
fn l2_rel(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    effattn::metrics::l2_rel(&matrix_from(a)?, &matrix_from(b)?).map_err(err)
}

#[pyfunction]
fn l2_scaled(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    effattn::metrics::l2_scaled(&matrix_from(a)?, &matrix_from(b)?).map_err(err)
}

/// One synthetic forward pass: dict with `a`, `t`, `prediction`.
#[pyfunction]
fn forward_sample(
    py: Python<'_>,
    d_s: usize,
    d: usize,
    d_v: usize,
    d_q: usize,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let dims = Dims::new(d_s, d, d_v, d_q).map_err(err)?;
    let params = effattn::harness::synth_model(dims, seed).map_err(err)?;
    let out = effattn::harness::forward(&params).map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("a", matrix_to(out.a.matrix()))?;
    dict.set_item("t", matrix_to(out.t.matrix()))?;
    dict.set_item("prediction", out.prediction)?;
    Ok(dict.unbind())
}

/// Run experiment 1, 2 or 3 and return the report as a dict.
#[pyfunction]
#[pyo3(signature = (which, d_s, d, d_v, d_q, n, seed, renormalize_complement=false, label=None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    which: u8,
    d_s: usize,
    d: usize,
    d_v: usize,
    d_q: usize,
    n: usize,
    seed: u64,
    renormalize_complement: bool,
    label: Option<String>,
) -> PyResult<Py<PyDict>> {
    let dims = Dims::new(d_s, d, d_v, d_q).map_err(err)?;
    let mut cfg = ExperimentConfig::new(dims, n, seed);
    cfg.renormalize_complement = renormalize_complement;
    cfg.label = label;
    let report = match which {
        1 => effattn::harness::run_experiment1(&cfg),
        2 => effattn::harness::run_experiment2(&cfg),
        3 => effattn::harness::run_experiment3(&cfg),
        _ => return Err(PyValueError::new_err("experiment must be 1, 2 or 3")),
    }
    .map_err(err)?;
    let dict = PyDict::new(py);
    dict.set_item("dataset_label", &report.dataset_label)?;
    dict.set_item("experiment", report.experiment)?;
    dict.set_item("tool_version", &report.tool_version)?;
    dict.set_item("prng", &report.prng)?;
    dict.set_item("seed", report.seed)?;
    dict.set_item("n_samples", report.n_samples)?;
    let dims_dict = PyDict::new(py);
    dims_dict.set_item("d_s", report.dims.d_s)?;
    dims_dict.set_item("d", report.dims.d)?;
    dims_dict.set_item("d_v", report.dims.d_v)?;
    dims_dict.set_item("d_q", report.dims.d_q)?;
    dict.set_item("dims", dims_dict)?;
    let metrics = PyDict::new(py);
    for (k, v) in &report.metrics {
        metrics.set_item(k, v)?;
    }
    dict.set_item("metrics", metrics)?;
    Ok(dict.unbind())
}

#[pymodule]
fn effattn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(efficient_attention, m)?)?;
    m.add_function(wrap_pyfunction!(effective_attention_brunner, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(identifiability, m)?)?;
    m.add_function(wrap_pyfunction!(validate_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(prediction_preserved, m)?)?;
    m.add_function(wrap_pyfunction!(generate_adversarial, m)?)?;
    m.add_function(wrap_pyfunction!(complement_attention, m)?)?;
    m.add_function(wrap_pyfunction!(rank, m)?)?;
    m.add_function(wrap_pyfunction!(column_space_basis, m)?)?;
    m.add_function(wrap_pyfunction!(null_space_basis, m)?)?;
    m.add_function(wrap_pyfunction!(augment_ones, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein1_predictions, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein1_rows, m)?)?;
    m.add_function(wrap_pyfunction!(mean_wasserstein_matrices, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(pearson_r2, m)?)?;
    m.add_function(wrap_pyfunction!(l2_rel, m)?)?;
    m.add_function(wrap_pyfunction!(l2_scaled, m)?)?;
    m.add_function(wrap_pyfunction!(forward_sample, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
