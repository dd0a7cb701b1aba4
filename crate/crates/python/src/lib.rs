use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use decl::inference;
use decl::lab::{self, Algorithm, BenchConfig, ExactnessVerdict, SyntheticConfig, SyntheticData};
use decl::learning::{self, LossFn, TrainConfig, TrainReport};
use decl::model::{Assignment, Input, Instance, ScoringModel, WeightVector};
use decl::space::{ConstraintSet, LinearConstraint, Literal, OutputSpace, Relation};
use decl::Decomposition;

fn to_py(e: decl::Error) -> PyErr {
    match e {
        decl::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn labels(y: &[u8]) -> Vec<u32> {
    y.iter().map(|&l| l as u32).collect()
}

fn assignment(y: Vec<u32>) -> PyResult<Assignment> {
    y.into_iter()
        .map(|l| u8::try_from(l).map_err(|_| PyValueError::new_err(format!("label {l} does not fit in a byte"))))
        .collect::<PyResult<Vec<u8>>>()
        .map(Assignment::new)
}

fn input(model: &ScoringModel, rows: Vec<Vec<f64>>) -> PyResult<Input> {
    if rows.len() == 1 && model.n() > 1 {
        return Ok(Input::shared(rows.into_iter().next().unwrap_or_default()));
    }
    Input::per_variable(rows).map_err(to_py)
}

fn weights(w: Vec<f64>) -> PyResult<WeightVector> {
    WeightVector::new(w).map_err(to_py)
}

fn loss(name: &str) -> PyResult<LossFn> {
    name.parse().map_err(to_py)
}

fn instances(model: &ScoringModel, xs: Vec<Vec<Vec<f64>>>, ys: Vec<Vec<u32>>) -> PyResult<Vec<Instance>> {
    if xs.len() != ys.len() {
        return Err(PyValueError::new_err(format!("{} inputs but {} labelings", xs.len(), ys.len())));
    }
    xs.into_iter()
        .zip(ys)
        .map(|(x, y)| Ok(Instance::new(input(model, x)?, assignment(y)?)))
        .collect()
}

fn rows(inst: &Instance) -> Vec<Vec<f64>> {
    (0..inst.x.rows()).map(|i| inst.x.row(i).to_vec()).collect()
}

fn split(data: &[Instance]) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<u32>>) {
    (data.iter().map(rows).collect(), data.iter().map(|i| labels(&i.y)).collect())
}

/// A constrained output space over `n` variables.
#[pyclass(name = "OutputSpace", frozen, from_py_object)]
#[derive(Clone)]
struct PyOutputSpace {
    inner: OutputSpace,
}

#[pymethods]
impl PyOutputSpace {
    /// `linear` holds `(a, rel, b)` rows with `rel` one of `<=`, `>=`, `=`;
    /// `clauses` holds OR clauses of `(var, negated)` literals, 0-indexed.
    #[new]
    #[pyo3(signature = (n, alphabet = 2, linear = Vec::new(), clauses = Vec::new()))]
    fn new(
        n: usize,
        alphabet: usize,
        linear: Vec<(Vec<i64>, String, i64)>,
        clauses: Vec<Vec<(usize, bool)>>,
    ) -> PyResult<Self> {
        let mut cons = ConstraintSet::default();
        for (a, rel, b) in linear {
            let rel = match rel.as_str() {
                "<=" => Relation::Le,
                ">=" => Relation::Ge,
                "=" | "==" => Relation::Eq,
                other => return Err(PyValueError::new_err(format!("unknown relation `{other}`"))),
            };
            cons = cons.with_linear(LinearConstraint::new(a, rel, b));
        }
        for clause in clauses {
            cons = cons.with_clause(
                clause
                    .into_iter()
                    .map(|(var, neg)| if neg { Literal::neg(var) } else { Literal::pos(var) })
                    .collect(),
            );
        }
        Ok(PyOutputSpace {
            inner: OutputSpace::new(n, alphabet, cons).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn multiclass(r: usize) -> PyResult<Self> {
        Ok(PyOutputSpace {
            inner: OutputSpace::multiclass(r).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyOutputSpace {
            inner: serde_json::from_str(text).map_err(json_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn alphabet(&self) -> usize {
        self.inner.alphabet()
    }

    fn is_feasible(&self, y: Vec<u32>) -> PyResult<bool> {
        self.inner.is_feasible(&assignment(y)?).map_err(to_py)
    }

    /// Feasible labelings in lexicographic order.
    fn enumerate(&self) -> PyResult<Vec<Vec<u32>>> {
        Ok(self.inner.enumerate_feasible().map_err(to_py)?.iter().map(|y| labels(y)).collect())
    }

    fn count(&self) -> PyResult<usize> {
        self.inner.count_feasible().map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("OutputSpace(n={}, alphabet={})", self.inner.n(), self.inner.alphabet())
    }
}

#[pyclass(name = "ScoringModel", frozen, from_py_object)]
#[derive(Clone)]
struct PyScoringModel {
    inner: ScoringModel,
}

#[pymethods]
impl PyScoringModel {
    #[staticmethod]
    fn singleton(n: usize, d: usize) -> PyResult<Self> {
        Ok(PyScoringModel {
            inner: ScoringModel::singleton(n, d).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, d, alphabet = 2, tied_edges = false))]
    fn chain(n: usize, d: usize, alphabet: usize, tied_edges: bool) -> PyResult<Self> {
        Ok(PyScoringModel {
            inner: ScoringModel::chain(n, d, alphabet, tied_edges).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, d, edges, alphabet = 2, tied_edges = false))]
    fn pairwise(n: usize, d: usize, edges: Vec<(usize, usize)>, alphabet: usize, tied_edges: bool) -> PyResult<Self> {
        Ok(PyScoringModel {
            inner: ScoringModel::pairwise(n, d, alphabet, edges, tied_edges).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyScoringModel {
            inner: serde_json::from_str(text).map_err(json_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn alphabet(&self) -> usize {
        self.inner.alphabet()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn joint_feature(&self, x: Vec<Vec<f64>>, y: Vec<u32>) -> PyResult<Vec<f64>> {
        let phi = self.inner.joint_feature(&input(&self.inner, x)?, &assignment(y)?).map_err(to_py)?;
        Ok(phi.as_slice().to_vec())
    }

    fn score(&self, w: Vec<f64>, x: Vec<Vec<f64>>, y: Vec<u32>) -> PyResult<f64> {
        self.inner
            .flat_score(&weights(w)?, &input(&self.inner, x)?, &assignment(y)?)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "ScoringModel(family={:?}, n={}, d={}, alphabet={})",
            self.inner.family(),
            self.inner.n(),
            self.inner.d(),
            self.inner.alphabet()
        )
    }
}

/// Index sets over the variables, 0-indexed.
#[pyclass(name = "Decomposition", frozen, from_py_object)]
#[derive(Clone)]
struct PyDecomposition {
    inner: Decomposition,
}

#[pymethods]
impl PyDecomposition {
    #[new]
    fn new(sets: Vec<Vec<usize>>, n: usize) -> PyResult<Self> {
        Ok(PyDecomposition {
            inner: Decomposition::new(sets, n).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn decl_k(n: usize, k: usize) -> PyResult<Self> {
        Ok(PyDecomposition {
            inner: Decomposition::decl_k(n, k).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn full(n: usize) -> Self {
        PyDecomposition {
            inner: Decomposition::full(n),
        }
    }

    #[staticmethod]
    fn s_pair_blocks(gold: Vec<u32>) -> PyResult<Self> {
        Ok(PyDecomposition {
            inner: Decomposition::s_pair_blocks(&assignment(gold)?),
        })
    }

    fn sets(&self) -> Vec<Vec<usize>> {
        self.inner.to_sets()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Feasible labelings reachable from `gold` by relabelling one set.
    fn neighborhood(&self, space: &PyOutputSpace, gold: Vec<u32>) -> PyResult<Vec<Vec<u32>>> {
        let nbr = decl::neighborhood(&space.inner, &assignment(gold)?, &self.inner).map_err(to_py)?;
        Ok(nbr.iter().map(|y| labels(y)).collect())
    }
}

#[pyclass(name = "TrainReport", frozen)]
struct PyTrainReport {
    inner: TrainReport,
}

#[pymethods]
impl PyTrainReport {
    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights.as_slice().to_vec()
    }

    /// Averaged weights when averaging was on, otherwise the final ones.
    #[getter]
    fn predictor(&self) -> Vec<f64> {
        self.inner.predictor().as_slice().to_vec()
    }

    #[getter]
    fn objective(&self) -> Vec<f64> {
        self.inner.objective.clone()
    }

    #[getter]
    fn epoch_seconds(&self) -> Vec<f64> {
        self.inner.epoch_seconds.clone()
    }

    #[getter]
    fn updates(&self) -> u64 {
        self.inner.updates
    }

    #[getter]
    fn train_seconds(&self) -> f64 {
        self.inner.train_seconds()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }
}

#[pyclass(name = "SyntheticData", frozen)]
struct PySyntheticData {
    inner: SyntheticData,
}

#[pymethods]
impl PySyntheticData {
    #[getter]
    fn model(&self) -> PyScoringModel {
        PyScoringModel {
            inner: self.inner.model.clone(),
        }
    }

    #[getter]
    fn space(&self) -> PyOutputSpace {
        PyOutputSpace {
            inner: self.inner.space.clone(),
        }
    }

    #[getter]
    fn w_star(&self) -> Vec<f64> {
        self.inner.w_star.as_slice().to_vec()
    }

    /// `(xs, ys)` of the training split.
    #[getter]
    fn train(&self) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<u32>>) {
        split(&self.inner.train)
    }

    #[getter]
    fn validation(&self) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<u32>>) {
        split(&self.inner.validation)
    }

    #[getter]
    fn test(&self) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<u32>>) {
        split(&self.inner.test)
    }
}

#[pyclass(name = "ExactnessVerdict", frozen)]
struct PyExactnessVerdict {
    inner: ExactnessVerdict,
}

#[pymethods]
impl PyExactnessVerdict {
    #[getter]
    fn is_certified(&self) -> bool {
        self.inner.is_certified()
    }

    #[getter]
    fn is_counterexample(&self) -> bool {
        self.inner.is_counterexample()
    }

    #[getter]
    fn probes(&self) -> usize {
        self.inner.probes
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }
}

/// Highest-scoring feasible labeling and its score.
#[pyfunction]
fn map_exact(model: &PyScoringModel, w: Vec<f64>, x: Vec<Vec<f64>>, space: &PyOutputSpace) -> PyResult<(Vec<u32>, f64)> {
    let r = inference::map_exact(&model.inner, &weights(w)?, &input(&model.inner, x)?, &space.inner).map_err(to_py)?;
    Ok((labels(&r.argmax), r.value))
}

#[pyfunction]
#[pyo3(signature = (model, w, x, gold, space, loss = "hamming"))]
fn map_loss_augmented(
    model: &PyScoringModel,
    w: Vec<f64>,
    x: Vec<Vec<f64>>,
    gold: Vec<u32>,
    space: &PyOutputSpace,
    loss: &str,
) -> PyResult<(Vec<u32>, f64)> {
    let r = inference::map_loss_augmented(
        &model.inner,
        &weights(w)?,
        &input(&model.inner, x)?,
        &assignment(gold)?,
        &space.inner,
        self::loss(loss)?,
    )
    .map_err(to_py)?;
    Ok((labels(&r.argmax), r.value))
}

#[pyfunction]
#[pyo3(signature = (model, w, x, gold, decomposition, space, loss = "hamming", sample_sets = None, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn map_decomposed(
    model: &PyScoringModel,
    w: Vec<f64>,
    x: Vec<Vec<f64>>,
    gold: Vec<u32>,
    decomposition: &PyDecomposition,
    space: &PyOutputSpace,
    loss: &str,
    sample_sets: Option<usize>,
    seed: u64,
) -> PyResult<(Vec<u32>, f64)> {
    let mut rng = decl::rng::stream(seed, decl::rng::Stream::Sets);
    let r = inference::map_decomposed(
        &model.inner,
        &weights(w)?,
        &input(&model.inner, x)?,
        &assignment(gold)?,
        &decomposition.inner,
        &space.inner,
        self::loss(loss)?,
        sample_sets,
        &mut rng,
    )
    .map_err(to_py)?;
    Ok((labels(&r.argmax), r.value))
}

#[pyfunction]
#[pyo3(signature = (model, w, xs, ys, decomposition, space, loss = "hamming"))]
fn decl_objective(
    model: &PyScoringModel,
    w: Vec<f64>,
    xs: Vec<Vec<Vec<f64>>>,
    ys: Vec<Vec<u32>>,
    decomposition: &PyDecomposition,
    space: &PyOutputSpace,
    loss: &str,
) -> PyResult<f64> {
    let data = instances(&model.inner, xs, ys)?;
    let decomps = vec![decomposition.inner.clone(); data.len()];
    learning::decl_objective(&model.inner, &weights(w)?, &data, &decomps, &space.inner, self::loss(loss)?).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (model, w, xs, ys, space, loss = "hamming"))]
fn global_objective(
    model: &PyScoringModel,
    w: Vec<f64>,
    xs: Vec<Vec<Vec<f64>>>,
    ys: Vec<Vec<u32>>,
    space: &PyOutputSpace,
    loss: &str,
) -> PyResult<f64> {
    let data = instances(&model.inner, xs, ys)?;
    learning::global_objective(&model.inner, &weights(w)?, &data, &space.inner, self::loss(loss)?).map_err(to_py)
}

/// Trains with `algo` one of `ll`, `ll+c`, `decl-<k>` or `gl`.
#[pyfunction]
#[pyo3(signature = (model, xs, ys, space, algo = "decl-2", loss = "hamming", epochs = 50, eta = 0.1, lam = 0.0, seed = 0, averaging = false))]
#[allow(clippy::too_many_arguments)]
fn train(
    model: &PyScoringModel,
    xs: Vec<Vec<Vec<f64>>>,
    ys: Vec<Vec<u32>>,
    space: &PyOutputSpace,
    algo: &str,
    loss: &str,
    epochs: usize,
    eta: f64,
    lam: f64,
    seed: u64,
    averaging: bool,
) -> PyResult<PyTrainReport> {
    let data = instances(&model.inner, xs, ys)?;
    let config = TrainConfig {
        epochs,
        eta0: eta,
        lambda: lam,
        seed,
        averaging,
        ..TrainConfig::default()
    };
    let algorithm: Algorithm = algo.parse().map_err(to_py)?;
    let loss = self::loss(loss)?;
    let (m, s) = (&model.inner, &space.inner);
    let report = match algorithm {
        Algorithm::Ll | Algorithm::LlC => learning::train_local(m, &data, s, &config),
        Algorithm::Decl(k) => Decomposition::decl_k(m.n(), k)
            .and_then(|d| learning::train_subgradient(m, &data, &vec![d; data.len()], s, loss, &config)),
        Algorithm::Gl => learning::train_global(m, &data, s, loss, &config),
    }
    .map_err(to_py)?;
    Ok(PyTrainReport { inner: report })
}

/// Test metrics as a dict.
#[pyfunction]
#[pyo3(signature = (model, w, xs, ys, space, use_constraints = true))]
fn evaluate(
    py: Python<'_>,
    model: &PyScoringModel,
    w: Vec<f64>,
    xs: Vec<Vec<Vec<f64>>>,
    ys: Vec<Vec<u32>>,
    space: &PyOutputSpace,
    use_constraints: bool,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let data = instances(&model.inner, xs, ys)?;
    let m = lab::evaluate(&model.inner, &weights(w)?, &data, &space.inner, use_constraints).map_err(to_py)?;
    let out = pyo3::types::PyDict::new(py);
    out.set_item("instances", m.instances)?;
    out.set_item("avg_hamming", m.avg_hamming)?;
    out.set_item("avg_f1", m.avg_f1)?;
    out.set_item("per_bit_error", m.per_bit_error)?;
    out.set_item("infeasible_rate", m.infeasible_rate)?;
    Ok(out.unbind())
}

/// Generates a problem from a JSON config; keys absent from `config`
/// keep their defaults.
#[pyfunction]
#[pyo3(signature = (config = None, seed = None))]
fn gen_synthetic(config: Option<&str>, seed: Option<u64>) -> PyResult<PySyntheticData> {
    let mut cfg: SyntheticConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(json_err)?,
        None => SyntheticConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(PySyntheticData {
        inner: lab::gen_synthetic(&cfg).map_err(to_py)?,
    })
}

#[pyfunction]
#[pyo3(signature = (model, xs, ys, space, decomposition, loss = "hamming"))]
fn exactness_certificate(
    model: &PyScoringModel,
    xs: Vec<Vec<Vec<f64>>>,
    ys: Vec<Vec<u32>>,
    space: &PyOutputSpace,
    decomposition: &PyDecomposition,
    loss: &str,
) -> PyResult<PyExactnessVerdict> {
    let data = instances(&model.inner, xs, ys)?;
    let decomps = vec![decomposition.inner.clone(); data.len()];
    let v = lab::exactness_certificate_cor1(&model.inner, &data, &space.inner, &decomps, &self::loss(loss)?)
        .map_err(to_py)?;
    Ok(PyExactnessVerdict { inner: v })
}

#[pyfunction]
#[pyo3(signature = (model, xs, ys, space, decomposition, probes = 200, seed = 0))]
fn exactness_probe(
    model: &PyScoringModel,
    xs: Vec<Vec<Vec<f64>>>,
    ys: Vec<Vec<u32>>,
    space: &PyOutputSpace,
    decomposition: &PyDecomposition,
    probes: usize,
    seed: u64,
) -> PyResult<PyExactnessVerdict> {
    let data = instances(&model.inner, xs, ys)?;
    let decomps = vec![decomposition.inner.clone(); data.len()];
    let v = lab::exactness_probe_sampling(&model.inner, &data, &space.inner, &decomps, probes, seed).map_err(to_py)?;
    Ok(PyExactnessVerdict { inner: v })
}

#[pyfunction]
fn is_subadditive(loss: &str, space: &PyOutputSpace) -> PyResult<bool> {
    let report = learning::check_subadditive(&self::loss(loss)?, &space.inner, 2000, 0).map_err(to_py)?;
    Ok(report.is_subadditive())
}

/// Runs the benchmark described by a JSON config and returns its CSV.
#[pyfunction]
#[pyo3(signature = (config = None))]
fn run_benchmark(py: Python<'_>, config: Option<&str>) -> PyResult<String> {
    let cfg: BenchConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(json_err)?,
        None => BenchConfig::default(),
    };
    let result = py.detach(|| lab::run_benchmark(&cfg)).map_err(to_py)?;
    let mut out = Vec::new();
    result.write_csv(&mut out).map_err(to_py)?;
    String::from_utf8(out).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn decl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOutputSpace>()?;
    m.add_class::<PyScoringModel>()?;
    m.add_class::<PyDecomposition>()?;
    m.add_class::<PyTrainReport>()?;
    m.add_class::<PySyntheticData>()?;
    m.add_class::<PyExactnessVerdict>()?;
    m.add_function(wrap_pyfunction!(map_exact, m)?)?;
    m.add_function(wrap_pyfunction!(map_loss_augmented, m)?)?;
    m.add_function(wrap_pyfunction!(map_decomposed, m)?)?;
    m.add_function(wrap_pyfunction!(decl_objective, m)?)?;
    m.add_function(wrap_pyfunction!(global_objective, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(gen_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(exactness_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(exactness_probe, m)?)?;
    m.add_function(wrap_pyfunction!(is_subadditive, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    Ok(())
}
