//! Python bindings: profiles, offspring laws, trees, lineage traces, the limit
//! sampler and the verification experiments. Every random operation takes an
//! explicit seed and matches the Rust result for that seed.

use cannings_core::coalescent::simulate_trace as core_simulate_trace;
use cannings_core::offspring::exact_moments;
use cannings_core::profile::discretize;
use cannings_core::rng::{replicate, stream};
use cannings_core::tree::build_tree as core_build_tree;
use cannings_core::verify::{self, Population, Probe, Thresholds};
use cannings_core::{
    CanningsTree as CoreTree, ContinuousProfile as CoreContinuous,
    DiscreteProfile as CoreDiscrete, KPointTree as CoreKPoint, LimitSampler as CoreSampler,
    OffspringLaw as CoreLaw, ProfilePair as CorePair, Vertex,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Serializes through JSON into plain dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(value_error)
}

fn thresholds(obj: Option<&Bound<'_, PyAny>>) -> PyResult<Thresholds> {
    obj.map_or(Ok(Thresholds::default()), from_py)
}

/// Piecewise-linear profile given by knots `(position, value)`.
#[pyclass(module = "cannings", frozen, skip_from_py_object)]
#[derive(Clone)]
struct ContinuousProfile(CoreContinuous);

#[pymethods]
impl ContinuousProfile {
    #[new]
    fn new(knots: Vec<(f64, f64)>) -> PyResult<Self> {
        CoreContinuous::new(knots).map(Self).map_err(value_error)
    }

    #[staticmethod]
    fn constant(value: f64, h: f64) -> PyResult<Self> {
        CoreContinuous::constant(value, h).map(Self).map_err(value_error)
    }

    #[getter]
    fn knots(&self) -> Vec<(f64, f64)> {
        self.0.knots().collect()
    }

    #[getter]
    fn extinction_height(&self) -> f64 {
        self.0.extinction_height()
    }

    fn eval(&self, x: f64) -> f64 {
        self.0.eval(x)
    }

    fn integral(&self) -> f64 {
        self.0.integral()
    }

    fn integral_to(&self, x: f64) -> f64 {
        self.0.integral_to(x)
    }

    /// Inverse of the normalized integral at `u` in [0, 1].
    fn sample_height(&self, u: f64) -> f64 {
        self.0.sample_height(u)
    }

    fn discretize(&self, n: u64) -> PyResult<DiscreteProfile> {
        discretize(&self.0, n).map(DiscreteProfile).map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!("ContinuousProfile({:?})", self.knots())
    }
}

/// `(ell, sigma)` with the limit of `ell / sigma^2` at 0; `sigma` defaults to 1.
#[pyclass(module = "cannings", frozen, skip_from_py_object)]
#[derive(Clone)]
struct ProfilePair(CorePair);

#[pymethods]
impl ProfilePair {
    #[new]
    #[pyo3(signature = (ell, sigma=None, ratio_at_zero=None))]
    fn new(
        ell: &ContinuousProfile,
        sigma: Option<&ContinuousProfile>,
        ratio_at_zero: Option<f64>,
    ) -> PyResult<Self> {
        let pair = match sigma {
            Some(sigma) => CorePair::new(ell.0.clone(), sigma.0.clone(), ratio_at_zero),
            None => CorePair::unit_variance(ell.0.clone()),
        };
        pair.map(Self).map_err(value_error)
    }

    #[getter]
    fn ratio_at_zero(&self) -> f64 {
        self.0.ratio_at_zero
    }

    #[getter]
    fn extinction_height(&self) -> f64 {
        self.0.extinction_height()
    }

    fn pair_rate(&self, s: f64) -> f64 {
        self.0.pair_rate(s)
    }
}

/// Generation sizes `q(1), ..., q(h_q - 1)`.
#[pyclass(module = "cannings", frozen, skip_from_py_object)]
#[derive(Clone)]
struct DiscreteProfile(CoreDiscrete);

#[pymethods]
impl DiscreteProfile {
    #[new]
    fn new(sizes: Vec<u64>) -> PyResult<Self> {
        CoreDiscrete::new(sizes).map(Self).map_err(value_error)
    }

    #[staticmethod]
    fn constant(n: u64, generations: usize) -> PyResult<Self> {
        CoreDiscrete::constant(n, generations).map(Self).map_err(value_error)
    }

    #[getter]
    fn sizes(&self) -> Vec<u64> {
        self.0.sizes().to_vec()
    }

    #[getter]
    fn extinction(&self) -> usize {
        self.0.extinction()
    }

    #[getter]
    fn scale(&self) -> u64 {
        self.0.scale()
    }

    fn q(&self, s: usize) -> u64 {
        self.0.q(s)
    }

    fn total(&self) -> u64 {
        self.0.total()
    }
}

#[pyclass(module = "cannings", frozen, skip_from_py_object)]
#[derive(Clone)]
struct OffspringLaw(CoreLaw);

#[pymethods]
impl OffspringLaw {
    #[staticmethod]
    fn wright_fisher() -> Self {
        Self(CoreLaw::WrightFisher)
    }

    #[staticmethod]
    fn dirichlet_multinomial(theta: f64) -> PyResult<Self> {
        let law = CoreLaw::DirichletMultinomial { theta };
        law.validate().map_err(value_error)?;
        Ok(Self(law))
    }

    #[staticmethod]
    fn counterexample(alpha: f64) -> PyResult<Self> {
        let law = CoreLaw::Counterexample { alpha };
        law.validate().map_err(value_error)?;
        Ok(Self(law))
    }

    /// Parses `{"law": ..., ...}` as written in experiment configs.
    #[staticmethod]
    fn from_dict(config: &Bound<'_, PyAny>) -> PyResult<Self> {
        let law: CoreLaw = from_py(config)?;
        law.validate().map_err(value_error)?;
        Ok(Self(law))
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.name()
    }

    /// Closed-form moments of one offspring count for `q_s` parents and `q_s1` children.
    fn exact_moments<'py>(&self, py: Python<'py>, q_s: u64, q_s1: u64) -> PyResult<Bound<'py, PyAny>> {
        let report = exact_moments(&self.0, q_s, q_s1).map_err(value_error)?;
        to_py(py, &report)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    fn __repr__(&self) -> String {
        format!("OffspringLaw({:?})", self.0)
    }
}

/// Rooted ordered geometric tree on `k` leaves.
#[pyclass(module = "cannings", frozen, skip_from_py_object)]
#[derive(Clone)]
struct KPointTree(CoreKPoint);

#[pymethods]
impl KPointTree {
    #[staticmethod]
    fn from_branch_heights(leaves: Vec<f64>, branches: Vec<f64>) -> Self {
        Self(CoreKPoint::from_branch_heights(leaves, &branches))
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn leaves(&self) -> Vec<f64> {
        self.0.leaves.clone()
    }

    fn branch_heights(&self) -> Vec<f64> {
        self.0.branch_heights()
    }

    fn fidis_vector(&self) -> Vec<f64> {
        self.0.fidis_vector()
    }

    fn fidis_distance(&self, other: &KPointTree) -> f64 {
        self.0.fidis_distance(&other.0)
    }

    /// `None` when valid, else the violated invariant.
    #[pyo3(signature = (strict=true))]
    fn invariant_violation(&self, strict: bool) -> Option<String> {
        self.0.check_invariants(strict).err()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }
}

/// A realized genealogy; vertices are `(generation, index)` pairs.
#[pyclass(module = "cannings", frozen)]
struct CanningsTree(CoreTree);

#[pymethods]
impl CanningsTree {
    #[getter]
    fn vertex_count(&self) -> usize {
        self.0.vertex_count()
    }

    #[getter]
    fn extinction(&self) -> usize {
        self.0.extinction()
    }

    fn parents(&self, generation: usize) -> Vec<u32> {
        self.0.parents(generation).to_vec()
    }

    fn offspring(&self, generation: usize) -> Vec<u32> {
        self.0.offspring(generation)
    }

    fn height_function(&self) -> Vec<u32> {
        self.0.height_function().values
    }

    fn contour_function(&self) -> Vec<u32> {
        self.0.contour_function().values
    }

    fn lca_generation(&self, a: (usize, usize), b: (usize, usize)) -> usize {
        self.0.lca_generation(Vertex::new(a.0, a.1), Vertex::new(b.0, b.1))
    }

    /// Distinct ancestors at each generation `0..=generation` of the given vertices.
    fn lineage_counts(&self, generation: usize, indices: Vec<usize>) -> Vec<u64> {
        self.0.lineage_counts(generation, &indices)
    }

    fn sample_k_point_subtree(&self, k: usize, seed: u64) -> PyResult<KPointTree> {
        let mut rng = stream(seed, 0);
        self.0.sample_k_point_subtree(k, &mut rng).map(KPointTree).map_err(value_error)
    }

    /// Rows `generation,child_index,parent_index`.
    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.0.write_csv(&mut buf).map_err(value_error)?;
        String::from_utf8(buf).map_err(value_error)
    }
}

#[pyfunction]
fn build_tree(profile: &DiscreteProfile, law: &OffspringLaw, seed: u64) -> PyResult<CanningsTree> {
    let mut rng = stream(seed, 0);
    core_build_tree(&profile.0, &law.0, &mut rng).map(CanningsTree).map_err(value_error)
}

/// Lineage counts `X_j`, `j = 0..=h_star`, of `k` vertices of generation `h_star`.
#[pyfunction]
fn simulate_trace(
    profile: &DiscreteProfile,
    law: &OffspringLaw,
    h_star: usize,
    k: u64,
    seed: u64,
) -> PyResult<Vec<u64>> {
    let mut rng = stream(seed, 0);
    core_simulate_trace(&profile.0, &law.0, h_star, k, &mut rng)
        .map(|t| t.counts)
        .map_err(value_error)
}

/// Samples the limiting k-point subtree of a profile pair.
#[pyclass(module = "cannings", frozen)]
struct LimitSampler(CoreSampler);

#[pymethods]
impl LimitSampler {
    #[new]
    #[pyo3(signature = (pair, rate_multiplier=1.0))]
    fn new(pair: &ProfilePair, rate_multiplier: f64) -> PyResult<Self> {
        let sampler = CoreSampler::new(&pair.0).map_err(value_error)?;
        Ok(Self(sampler.with_rate_multiplier(rate_multiplier)))
    }

    fn rate(&self, s: f64) -> f64 {
        self.0.clock().rate(s)
    }

    fn sample(&self, k: usize, seed: u64) -> PyResult<KPointTree> {
        let mut rng = stream(seed, 0);
        self.0.sample(k, &mut rng).map(KPointTree).map_err(value_error)
    }

    /// `reps` independent draws; replicate `i` uses stream `i` of `seed`.
    fn sample_many(&self, py: Python<'_>, k: usize, reps: usize, seed: u64) -> PyResult<Vec<KPointTree>> {
        let trees = py
            .detach(|| replicate(seed, reps, |rng| self.0.sample(k, rng)))
            .map_err(value_error)?;
        Ok(trees.into_iter().map(KPointTree).collect())
    }
}

fn population(ell: Option<&ContinuousProfile>, size: Option<u64>) -> Population {
    match ell {
        Some(ell) => Population::Discretized(ell.0.clone()),
        None => Population::Constant { size },
    }
}

/// Discrete vs limiting k-point subtrees at scale `n`.
#[pyfunction]
#[pyo3(signature = (pair, law, n, k, reps, seed, thresholds=None, rate_multiplier=1.0))]
#[allow(clippy::too_many_arguments)]
fn compare_fdd<'py>(
    py: Python<'py>,
    pair: &ProfilePair,
    law: &OffspringLaw,
    n: u64,
    k: usize,
    reps: usize,
    seed: u64,
    thresholds: Option<&Bound<'py, PyAny>>,
    rate_multiplier: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let t = self::thresholds(thresholds)?;
    let report = py
        .detach(|| verify::compare_fdd(&pair.0, &law.0, n, k, reps, seed, t, rate_multiplier))
        .map_err(value_error)?;
    to_py(py, &report)
}

/// Tree-derived vs directly simulated lineage counts on a constant population.
#[pyfunction]
#[pyo3(signature = (law, q_const, h_star, k, reps, seed, thresholds=None))]
#[allow(clippy::too_many_arguments)]
fn check_transition_law<'py>(
    py: Python<'py>,
    law: &OffspringLaw,
    q_const: u64,
    h_star: usize,
    k: u64,
    reps: usize,
    seed: u64,
    thresholds: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let t = self::thresholds(thresholds)?;
    let report = py
        .detach(|| verify::check_transition_law(&law.0, q_const, h_star, k, reps, seed, t))
        .map_err(value_error)?;
    to_py(py, &report)
}

/// First merge time of `k` lineages against the truncated exponential law.
#[pyfunction]
#[pyo3(signature = (law, n, k, reps, seed, thresholds=None))]
fn appendix_a_check<'py>(
    py: Python<'py>,
    law: &OffspringLaw,
    n: u64,
    k: u64,
    reps: usize,
    seed: u64,
    thresholds: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let t = self::thresholds(thresholds)?;
    let report = py
        .detach(|| verify::appendix_a_check(&law.0, n, k, reps, seed, t))
        .map_err(value_error)?;
    to_py(py, &report)
}

/// Moment asymptotics over `n_grid`; `ell=None` means a constant population.
#[pyfunction]
#[pyo3(signature = (law, n_grid, reps, seed, ell=None, size=None, thresholds=None))]
#[allow(clippy::too_many_arguments)]
fn check_moment_asymptotics<'py>(
    py: Python<'py>,
    law: &OffspringLaw,
    n_grid: Vec<u64>,
    reps: usize,
    seed: u64,
    ell: Option<&ContinuousProfile>,
    size: Option<u64>,
    thresholds: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyAny>> {
    let t = self::thresholds(thresholds)?;
    let pop = population(ell, size);
    let report = py
        .detach(|| verify::check_moment_asymptotics(&law.0, &pop, &n_grid, reps, seed, t))
        .map_err(value_error)?;
    to_py(py, &report)
}

/// Quantile curve of a lineage-count probe (`"cdfi"` or `"x1"`) over `n_grid`.
#[pyfunction]
#[pyo3(signature = (law, n_grid, probe, quantile, reps, seed, ell=None, size=None))]
#[allow(clippy::too_many_arguments)]
fn lineage_quantiles<'py>(
    py: Python<'py>,
    law: &OffspringLaw,
    n_grid: Vec<u64>,
    probe: &Bound<'py, PyAny>,
    quantile: f64,
    reps: usize,
    seed: u64,
    ell: Option<&ContinuousProfile>,
    size: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let probe: Probe = from_py(probe)?;
    let pop = population(ell, size);
    let curve = py
        .detach(|| verify::lineage_quantiles(&law.0, &pop, &n_grid, probe, quantile, reps, seed))
        .map_err(value_error)?;
    to_py(py, &curve)
}

/// Scaled sup distance between contour and height functions, per tree and `n`.
#[pyfunction]
#[pyo3(signature = (law, n_grid, trees, seed, ell=None, size=None))]
fn discrepancy_table<'py>(
    py: Python<'py>,
    law: &OffspringLaw,
    n_grid: Vec<u64>,
    trees: usize,
    seed: u64,
    ell: Option<&ContinuousProfile>,
    size: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let pop = population(ell, size);
    let rows = py
        .detach(|| verify::discrepancy_table(&law.0, &pop, &n_grid, trees, seed))
        .map_err(value_error)?;
    to_py(py, &rows)
}

#[pymodule]
fn cannings(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ContinuousProfile>()?;
    m.add_class::<ProfilePair>()?;
    m.add_class::<DiscreteProfile>()?;
    m.add_class::<OffspringLaw>()?;
    m.add_class::<KPointTree>()?;
    m.add_class::<CanningsTree>()?;
    m.add_class::<LimitSampler>()?;
    m.add_function(wrap_pyfunction!(build_tree, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_trace, m)?)?;
    m.add_function(wrap_pyfunction!(compare_fdd, m)?)?;
    m.add_function(wrap_pyfunction!(check_transition_law, m)?)?;
    m.add_function(wrap_pyfunction!(appendix_a_check, m)?)?;
    m.add_function(wrap_pyfunction!(check_moment_asymptotics, m)?)?;
    m.add_function(wrap_pyfunction!(lineage_quantiles, m)?)?;
    m.add_function(wrap_pyfunction!(discrepancy_table, m)?)?;
    Ok(())
}
