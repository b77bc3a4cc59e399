//! Python bindings: the graph/separation layer, exact distributions and the
//! named boxes, the marginal-problem operations, the quantum realization,
//! the verification protocol, structural models, and the fine-tuning audit.

use lfkit::audit;
use lfkit::dist::{boxes, ExactDist, SettingPrior, SettingsPolicy};
use lfkit::graph::DirectedGraph;
use lfkit::io;
use lfkit::marginal;
use lfkit::quantum;
use lfkit::ratio::{format_rational, parse_rational, to_f64};
use lfkit::scm;
use lfkit::separation::{self, Criterion, SeparationStatement};
use lfkit::veronika;
use lfkit::Q;
use num_traits::Zero;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

fn err(e: lfkit::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn criterion_of(name: &str) -> PyResult<Criterion> {
    match name {
        "d" => Ok(Criterion::D),
        "sigma" => Ok(Criterion::Sigma),
        other => Err(PyValueError::new_err(format!(
            "unknown criterion `{other}`"
        ))),
    }
}

fn to_set(labels: Vec<String>) -> BTreeSet<String> {
    labels.into_iter().collect()
}

/// A directed causal graph with observed and latent nodes.
#[pyclass(name = "Graph")]
struct PyGraph {
    inner: DirectedGraph,
}

#[pymethods]
impl PyGraph {
    /// Graph(nodes, edges): nodes are (label, "observed"|"latent") pairs.
    #[new]
    fn new(nodes: Vec<(String, String)>, edges: Vec<(String, String)>) -> PyResult<Self> {
        let nodes: Vec<(String, lfkit::graph::NodeKind)> = nodes
            .into_iter()
            .map(|(label, kind)| {
                let kind = match kind.as_str() {
                    "observed" => Ok(lfkit::graph::NodeKind::Observed),
                    "latent" => Ok(lfkit::graph::NodeKind::Latent),
                    other => Err(PyValueError::new_err(format!("unknown kind `{other}`"))),
                }?;
                Ok((label, kind))
            })
            .collect::<PyResult<_>>()?;
        Ok(Self {
            inner: DirectedGraph::build(&nodes, &edges).map_err(err)?,
        })
    }

    #[staticmethod]
    fn lf() -> Self {
        Self {
            inner: lfkit::graph::lf_dag(),
        }
    }

    #[staticmethod]
    fn bell() -> Self {
        Self {
            inner: lfkit::graph::bell_dag(),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: io::graph_from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        io::graph_to_json(&self.inner)
    }

    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    fn is_acyclic(&self) -> bool {
        self.inner.is_acyclic()
    }

    fn ancestors(&self, label: &str) -> PyResult<Vec<String>> {
        Ok(self
            .inner
            .ancestors(label)
            .map_err(err)?
            .into_iter()
            .collect())
    }

    fn descendants(&self, label: &str) -> PyResult<Vec<String>> {
        Ok(self
            .inner
            .descendants(label)
            .map_err(err)?
            .into_iter()
            .collect())
    }

    fn strongly_connected_components(&self) -> Vec<Vec<String>> {
        self.inner.strongly_connected_components()
    }

    /// Setwise separation among observed nodes under "d" or "sigma".
    #[pyo3(signature = (u, v, w, criterion = "d"))]
    fn separated(
        &self,
        u: Vec<String>,
        v: Vec<String>,
        w: Vec<String>,
        criterion: &str,
    ) -> PyResult<bool> {
        let c = criterion_of(criterion)?;
        separation::separated(&self.inner, &to_set(u), &to_set(v), &to_set(w), c).map_err(err)
    }

    /// Graph-level separation; latent nodes permitted in the query.
    #[pyo3(signature = (u, v, w, criterion = "d"))]
    fn separated_nodes(
        &self,
        u: Vec<String>,
        v: Vec<String>,
        w: Vec<String>,
        criterion: &str,
    ) -> PyResult<bool> {
        let c = criterion_of(criterion)?;
        separation::separated_nodes(&self.inner, &to_set(u), &to_set(v), &to_set(w), c).map_err(err)
    }

    /// Every true separation statement as "U | V | W" text.
    #[pyo3(signature = (criterion = "d", max_conditioning = None))]
    fn enumerate_separations(
        &self,
        criterion: &str,
        max_conditioning: Option<usize>,
    ) -> PyResult<Vec<String>> {
        let c = criterion_of(criterion)?;
        Ok(
            separation::enumerate_separations(&self.inner, max_conditioning, c)
                .into_iter()
                .map(|s| s.to_text())
                .collect(),
        )
    }

    /// Audit a list of "U | V | W" independences; returns (fine_tuned,
    /// unexplained statements).
    #[pyo3(signature = (statements, criterion = "d"))]
    fn audit(&self, statements: Vec<String>, criterion: &str) -> PyResult<(bool, Vec<String>)> {
        let c = criterion_of(criterion)?;
        let cis: Vec<audit::CiStatement> = statements
            .iter()
            .map(|s| {
                let st = SeparationStatement::parse(s, Criterion::D).map_err(err)?;
                audit::CiStatement::new(st.left, st.right, st.given).map_err(err)
            })
            .collect::<PyResult<_>>()?;
        let report = audit::audit(&self.inner, &cis, c).map_err(err)?;
        let unexplained = report.unexplained().iter().map(|ci| ci.to_text()).collect();
        Ok((report.fine_tuned, unexplained))
    }
}

/// An exact-rational conditional distribution.
#[pyclass(name = "Distribution", from_py_object)]
#[derive(Clone)]
struct PyDistribution {
    inner: ExactDist,
}

#[pymethods]
impl PyDistribution {
    /// Named boxes: pr_box, white_noise, tsirelson_box, lhv_deterministic(i).
    #[staticmethod]
    fn named(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: boxes::named_box(name).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (inner, _) = io::dist_from_json(text)
            .map_err(err)?
            .into_exact(1_000_000_000)
            .map_err(err)?;
        Ok(Self { inner })
    }

    /// Perfectly correlated copy table with the given P(c) weights.
    #[staticmethod]
    fn perfect_copy(p0: &str, p1: &str) -> PyResult<Self> {
        let p0 = parse_rational(p0).map_err(err)?;
        let p1 = parse_rational(p1).map_err(err)?;
        Ok(Self {
            inner: boxes::perfect_pac(&[p0, p1]),
        })
    }

    fn to_json(&self) -> String {
        io::exact_dist_to_json(&self.inner)
    }

    fn outcomes(&self) -> Vec<(String, usize)> {
        self.inner
            .outcomes()
            .iter()
            .map(|v| (v.label.clone(), v.cardinality))
            .collect()
    }

    fn settings(&self) -> Vec<(String, usize)> {
        self.inner
            .settings()
            .iter()
            .map(|v| (v.label.clone(), v.cardinality))
            .collect()
    }

    /// Exact probability as a fraction string.
    fn prob(&self, settings: Vec<usize>, outcomes: Vec<usize>) -> String {
        format_rational(&self.inner.prob(&settings, &outcomes))
    }

    fn marginalize(&self, keep: Vec<String>) -> PyResult<Self> {
        let keep: Vec<&str> = keep.iter().map(String::as_str).collect();
        Ok(Self {
            inner: self.inner.marginalize(&keep).map_err(err)?,
        })
    }

    fn restrict_setting(&self, fixes: BTreeMap<String, usize>) -> PyResult<Self> {
        let fixes: Vec<(&str, usize)> = fixes.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        Ok(Self {
            inner: self.inner.restrict_setting(&fixes).map_err(err)?,
        })
    }

    /// Probability-form CHSH value as (fraction string, float).
    fn chsh(&self) -> PyResult<(String, f64)> {
        let v = boxes::chsh_value(&self.inner).map_err(err)?;
        Ok((format_rational(&v), to_f64(&v)))
    }

    /// Exact conditional-independence test; settings fold uniformly unless
    /// pinned in `fixes`. Returns (holds, max deviation as float).
    #[pyo3(signature = (u, v, w, fixes = None))]
    fn ci(
        &self,
        u: Vec<String>,
        v: Vec<String>,
        w: Vec<String>,
        fixes: Option<BTreeMap<String, usize>>,
    ) -> PyResult<(bool, f64)> {
        let mut policy = SettingsPolicy::uniform();
        for (var, val) in fixes.unwrap_or_default() {
            policy = policy.with(var, SettingPrior::Fixed(val));
        }
        let us: Vec<&str> = u.iter().map(String::as_str).collect();
        let vs: Vec<&str> = v.iter().map(String::as_str).collect();
        let ws: Vec<&str> = w.iter().map(String::as_str).collect();
        let verdict = self
            .inner
            .ci_holds(&us, &vs, &ws, &policy, Q::zero())
            .map_err(err)?;
        Ok((verdict.holds, to_f64(&verdict.max_deviation)))
    }
}

/// Minimal copy discrepancy: returns (gamma fraction, gamma float).
#[pyfunction]
fn min_gamma(pab: &PyDistribution) -> PyResult<(String, f64)> {
    let mg = marginal::min_gamma(&pab.inner).map_err(err)?;
    Ok((format_rational(&mg.gamma), to_f64(&mg.gamma)))
}

/// CHSH monogamy functional: returns (lhs fraction, satisfied).
#[pyfunction]
fn monogamy(pab: &PyDistribution, pac: &PyDistribution) -> PyResult<(String, bool)> {
    let (lhs, sat) = marginal::monogamy_eq2(&pab.inner, &pac.inner).map_err(err)?;
    Ok((format_rational(&lhs), sat))
}

/// Whether the marginal pair extends to a constrained joint.
#[pyfunction]
fn marginal_feasible(pab: &PyDistribution, pac: &PyDistribution) -> PyResult<bool> {
    Ok(marginal::marginal_feasible(&pab.inner, &pac.inner)
        .map_err(err)?
        .is_feasible())
}

/// Membership in "lhv", "ns", or "lf-perfect"; returns (inside, separator).
#[pyfunction]
fn member(pab: &PyDistribution, polytope: &str) -> PyResult<(bool, Option<String>)> {
    let which = match polytope {
        "lhv" => marginal::BoxPolytope::Lhv,
        "ns" => marginal::BoxPolytope::NoSignaling,
        "lf-perfect" => marginal::BoxPolytope::LfPerfect,
        other => return Err(PyValueError::new_err(format!("unknown polytope `{other}`"))),
    };
    let m = marginal::membership(&pab.inner, &which).map_err(err)?;
    Ok((m.inside, m.separator.map(|s| s.to_string())))
}

/// Runs the minimal-scenario simulator (the shipped maximal-violation
/// scenario, or a scenario JSON document). Returns a dict with the CHSH
/// value, constraint deviations, and the rationalized box.
#[pyfunction]
#[pyo3(signature = (scenario_json = None))]
fn run_minimal_lf(
    py: Python<'_>,
    scenario_json: Option<&str>,
) -> PyResult<Py<pyo3::types::PyDict>> {
    let model = match scenario_json {
        Some(text) => io::quantum_model_from_json(text).map_err(err)?,
        None => quantum::tsirelson_model(),
    };
    let out = quantum::run_minimal_lf(&model).map_err(err)?;
    let chsh = boxes::chsh_value(&out.pab).map_err(err)?;
    let agency = quantum::verify_local_agency(&out.bookkeeping, 1e-12).map_err(err)?;
    let (exact, radius) = boxes::rationalize_ns_binary(&out.pab, 1_000_000_000).map_err(err)?;
    let mut copy_exact = true;
    for a in 0..2usize {
        for c in 0..2usize {
            if a != c {
                copy_exact &= out.pac_x1.prob(&[], &[a, c]) == 0.0;
            }
        }
    }
    let dict = pyo3::types::PyDict::new(py);
    dict.set_item("chsh", chsh)?;
    dict.set_item("copy_exact", copy_exact)?;
    dict.set_item(
        "agency_deviation",
        agency.max_dev_alice_friend.max(agency.max_dev_bob_friend),
    )?;
    dict.set_item("pab", PyDistribution { inner: exact })?;
    dict.set_item("rationalization_radius", radius)?;
    Ok(dict.unbind())
}

/// Verification-protocol sweep over run counts with uniform amplitudes and
/// balanced contexts. Returns rows of (n, sequences, j, pass_probability,
/// gamma).
#[pyfunction]
fn veronika_sweep(
    m: usize,
    n_list: Vec<usize>,
    epsilon: &str,
) -> PyResult<Vec<(usize, u64, u64, f64, f64)>> {
    let eps = parse_rational(epsilon).map_err(err)?;
    let amp = num_complex::Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
    let rows = veronika::sweep(
        m,
        &vec![amp; m],
        &n_list,
        &eps,
        veronika::FrequencyTest::MaxDeviation,
    )
    .map_err(err)?;
    Ok(rows
        .into_iter()
        .map(|r| (r.n, r.sequences as u64, r.j, r.pass_probability, r.gamma))
        .collect())
}

/// A structural causal model.
#[pyclass(name = "Model")]
struct PyModel {
    inner: scm::FunctionalModel,
}

#[pymethods]
impl PyModel {
    /// Built-in models: "cyclic-ex1" (four-node cycle) or "cyclic-ex2".
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        match name {
            "cyclic-ex1" => Ok(Self {
                inner: scm::four_cycle_model(),
            }),
            "cyclic-ex2" => Ok(Self {
                inner: scm::two_cycle_xor_model(),
            }),
            other => Err(PyValueError::new_err(format!("unknown model `{other}`"))),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: io::model_from_json(text).map_err(err)?,
        })
    }

    /// Solve under a conditioning; returns (valid evaluations, invalid
    /// evaluations, counts over solution assignments).
    #[pyo3(signature = (conditioning = None))]
    fn solve(
        &self,
        conditioning: Option<BTreeMap<String, i64>>,
    ) -> PyResult<(usize, usize, BTreeMap<String, usize>)> {
        let conditioning = conditioning.unwrap_or_default();
        let sols = scm::solve(&self.inner, &conditioning).map_err(err)?;
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for (_, solutions) in &sols.evaluations {
            for s in solutions {
                let key = s
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join(",");
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        Ok((sols.valid_count(), sols.invalid_count(), counts))
    }

    #[pyo3(signature = (conditioning = None))]
    fn induced_distribution(
        &self,
        conditioning: Option<BTreeMap<String, i64>>,
    ) -> PyResult<PyDistribution> {
        let conditioning = conditioning.unwrap_or_default();
        Ok(PyDistribution {
            inner: scm::induced_distribution(&self.inner, &conditioning).map_err(err)?,
        })
    }

    /// Rows of (statement text, ci_holds, violation) for the criterion.
    #[pyo3(signature = (criterion = "d"))]
    fn separation_report(&self, criterion: &str) -> PyResult<Vec<(String, bool, bool)>> {
        let c = criterion_of(criterion)?;
        let report = scm::ci_vs_separation_report(&self.inner, c).map_err(err)?;
        Ok(report
            .rows
            .into_iter()
            .map(|r| (r.statement.to_text(), r.ci_holds, r.violation))
            .collect())
    }
}

/// Runs the no-fine-tuning derivation; returns (conclusion, trace text).
#[pyfunction]
fn nogo_derivation(pab: &PyDistribution, pac: &PyDistribution) -> PyResult<(String, String)> {
    let trace = audit::nogo_derivation(
        audit::PremiseKind::NoFineTuning,
        &audit::nft_premises(),
        &pab.inner,
        &pac.inner,
    )
    .map_err(err)?;
    Ok((trace.conclusion.to_string(), audit::trace_text(&trace)))
}

/// Exhaustive dichotomy sweep; returns (total, enforcing, capable-and-
/// fine-tuned, contradictions).
#[pyfunction]
fn dichotomy_sweep() -> PyResult<(usize, usize, usize, usize)> {
    let s = audit::dichotomy_sweep().map_err(err)?;
    Ok((
        s.total_graphs,
        s.monogamy_enforcing,
        s.violation_capable_and_fine_tuned,
        s.contradictions,
    ))
}

#[pymodule]
fn lfkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(min_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(monogamy, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(member, m)?)?;
    m.add_function(wrap_pyfunction!(run_minimal_lf, m)?)?;
    m.add_function(wrap_pyfunction!(veronika_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(nogo_derivation, m)?)?;
    m.add_function(wrap_pyfunction!(dichotomy_sweep, m)?)?;
    Ok(())
}
