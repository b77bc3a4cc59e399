//! File formats: graphs, distributions, inequalities, CI lists, quantum
//! scenarios, and protocol configs. All formats are JSON documents with the
//! exact field names below; unknown fields are rejected.

use crate::dist::{ConditionalDistribution, ExactDist, FloatDist, VariableSpec};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeKind};
use crate::marginal::{CoordKey, Inequality};
use crate::quantum::{AliceAction, EffectFamily, MinimalLfModel, StateVector, Unitary};
use crate::ratio::{format_rational, parse_rational, to_f64};
use crate::scm::{parse_expression, Endogenous, ErrorTerm, FunctionalModel};
use crate::veronika::{AmplitudeTable, FrequencyTest};
use crate::Q;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

// ---------------------------------------------------------------------------
// Graph file: {"nodes": [{"label", "kind"}], "edges": [{"from", "to"}]}
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    nodes: Vec<NodeDecl>,
    edges: Vec<EdgeDecl>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDecl {
    label: String,
    kind: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDecl {
    from: String,
    to: String,
}

pub fn graph_from_json(text: &str) -> Result<DirectedGraph> {
    let file: GraphFile = from_json(text)?;
    let nodes: Vec<(String, NodeKind)> = file
        .nodes
        .into_iter()
        .map(|n| {
            let kind = match n.kind.as_str() {
                "observed" => Ok(NodeKind::Observed),
                "latent" => Ok(NodeKind::Latent),
                other => Err(Error::Parse(format!("unknown node kind `{other}`"))),
            }?;
            Ok((n.label, kind))
        })
        .collect::<Result<_>>()?;
    let edges: Vec<(String, String)> = file.edges.into_iter().map(|e| (e.from, e.to)).collect();
    DirectedGraph::build(&nodes, &edges)
}

pub fn graph_to_json(g: &DirectedGraph) -> String {
    let file = GraphFile {
        nodes: g
            .labels()
            .iter()
            .map(|l| NodeDecl {
                label: l.clone(),
                kind: match g.kind(l).expect("own label") {
                    NodeKind::Observed => "observed".into(),
                    NodeKind::Latent => "latent".into(),
                },
            })
            .collect(),
        edges: g
            .edges()
            .into_iter()
            .map(|(from, to)| EdgeDecl { from, to })
            .collect(),
    };
    to_json(&file)
}

// ---------------------------------------------------------------------------
// Distribution file.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DistFile {
    outcomes: Vec<VarDecl>,
    settings: Vec<VarDecl>,
    #[serde(default)]
    approximate: bool,
    /// Row-major over (settings, outcomes); entries are "p/q" strings, or
    /// plain numbers when `approximate` is set.
    table: Vec<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VarDecl {
    label: String,
    cardinality: usize,
}

/// A parsed distribution: exact-rational or explicitly approximate.
pub enum DistSource {
    Exact(ExactDist),
    Approximate(FloatDist),
}

impl DistSource {
    /// Exact table, rationalizing approximate sources at the given bound.
    pub fn into_exact(self, max_den: u64) -> Result<(ExactDist, f64)> {
        match self {
            DistSource::Exact(d) => Ok((d, 0.0)),
            DistSource::Approximate(d) => d.rationalize(max_den),
        }
    }
}

pub fn dist_from_json(text: &str) -> Result<DistSource> {
    let file: DistFile = from_json(text)?;
    let outcomes: Vec<VariableSpec> = file
        .outcomes
        .iter()
        .map(|v| VariableSpec::new(v.label.clone(), v.cardinality))
        .collect();
    let settings: Vec<VariableSpec> = file
        .settings
        .iter()
        .map(|v| VariableSpec::new(v.label.clone(), v.cardinality))
        .collect();
    if file.approximate {
        let table: Vec<f64> = file
            .table
            .iter()
            .map(|v| match v {
                serde_json::Value::Number(n) => n
                    .as_f64()
                    .ok_or_else(|| Error::Parse("bad numeric entry".into())),
                serde_json::Value::String(s) => parse_rational(s).map(|q| to_f64(&q)),
                _ => Err(Error::Parse(
                    "table entries must be numbers or strings".into(),
                )),
            })
            .collect::<Result<_>>()?;
        Ok(DistSource::Approximate(FloatDist::new(
            outcomes, settings, table,
        )?))
    } else {
        let table: Vec<Q> = file
            .table
            .iter()
            .map(|v| match v {
                serde_json::Value::String(s) => parse_rational(s),
                serde_json::Value::Number(n) if n.is_i64() => {
                    Ok(Q::from_integer(n.as_i64().expect("checked").into()))
                }
                _ => Err(Error::Parse(
                    "exact tables use \"p/q\" strings (set approximate for decimals)".into(),
                )),
            })
            .collect::<Result<_>>()?;
        Ok(DistSource::Exact(ExactDist::new(
            outcomes, settings, table,
        )?))
    }
}

pub fn exact_dist_to_json(d: &ExactDist) -> String {
    let d = d.canonical_order();
    let file = DistFile {
        outcomes: d
            .outcomes()
            .iter()
            .map(|v| VarDecl {
                label: v.label.clone(),
                cardinality: v.cardinality,
            })
            .collect(),
        settings: d
            .settings()
            .iter()
            .map(|v| VarDecl {
                label: v.label.clone(),
                cardinality: v.cardinality,
            })
            .collect(),
        approximate: false,
        table: d
            .table()
            .iter()
            .map(|q| serde_json::Value::String(format_rational(q)))
            .collect(),
    };
    to_json(&file)
}

pub fn float_dist_to_json(d: &FloatDist) -> String {
    let d = d.canonical_order();
    let file = DistFile {
        outcomes: d
            .outcomes()
            .iter()
            .map(|v| VarDecl {
                label: v.label.clone(),
                cardinality: v.cardinality,
            })
            .collect(),
        settings: d
            .settings()
            .iter()
            .map(|v| VarDecl {
                label: v.label.clone(),
                cardinality: v.cardinality,
            })
            .collect(),
        approximate: true,
        table: d
            .table()
            .iter()
            .map(|&v| {
                serde_json::Number::from_f64(v)
                    .map(serde_json::Value::Number)
                    .unwrap_or(serde_json::Value::Null)
            })
            .collect(),
    };
    to_json(&file)
}

// ---------------------------------------------------------------------------
// Inequality file.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InequalityFile {
    /// Keys like "P(0,1|1,0)" or "P(0,0|x=1)"; values are rationals.
    coefficients: BTreeMap<String, String>,
    bound: String,
}

pub fn inequality_from_json(text: &str) -> Result<Inequality> {
    let file: InequalityFile = from_json(text)?;
    let mut coeffs = BTreeMap::new();
    for (key, value) in &file.coefficients {
        coeffs.insert(CoordKey::parse(key)?, parse_rational(value)?);
    }
    Ok(Inequality {
        coeffs,
        bound: parse_rational(&file.bound)?,
    })
}

pub fn inequality_to_json(ineq: &Inequality) -> String {
    let file = InequalityFile {
        coefficients: ineq
            .coeffs
            .iter()
            .map(|(k, v)| (k.to_string(), format_rational(v)))
            .collect(),
        bound: format_rational(&ineq.bound),
    };
    to_json(&file)
}

// ---------------------------------------------------------------------------
// CI list file.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CiListFile {
    statements: Vec<CiDecl>,
    #[serde(default)]
    settings_policy: BTreeMap<String, PolicyDecl>,
    #[serde(default)]
    tolerance: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CiDecl {
    u: Vec<String>,
    v: Vec<String>,
    #[serde(default)]
    w: Vec<String>,
    #[serde(default)]
    note: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PolicyDecl {
    Named(String),
    Fixed { fixed: usize },
}

/// Parsed CI list plus its declared settings policy and tolerance.
pub struct CiList {
    pub statements: Vec<crate::audit::CiStatement>,
    pub fixed_settings: BTreeMap<String, usize>,
    pub tolerance: Q,
}

pub fn ci_list_from_json(text: &str) -> Result<CiList> {
    let file: CiListFile = from_json(text)?;
    let mut statements = Vec::with_capacity(file.statements.len());
    for decl in file.statements {
        let mut st = crate::audit::CiStatement::new(decl.u, decl.v, decl.w)?;
        if let Some(note) = decl.note {
            st = st.with_note(note);
        }
        statements.push(st);
    }
    let mut fixed_settings = BTreeMap::new();
    for (label, policy) in file.settings_policy {
        match policy {
            PolicyDecl::Named(name) if name == "uniform" => {}
            PolicyDecl::Named(other) => {
                return Err(Error::Parse(format!("unknown settings policy `{other}`")))
            }
            PolicyDecl::Fixed { fixed } => {
                fixed_settings.insert(label, fixed);
            }
        }
    }
    let tolerance = match file.tolerance {
        Some(t) => parse_rational(&t)?,
        None => Q::from_integer(0.into()),
    };
    Ok(CiList {
        statements,
        fixed_settings,
        tolerance,
    })
}

// ---------------------------------------------------------------------------
// Quantum scenario file.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantumScenarioFile {
    /// Amplitudes of the (system, remote) pure state, row-major; entries are
    /// numbers or [re, im] pairs.
    initial_state: Vec<ComplexDecl>,
    /// "copy" or an explicit matrix on system ⊗ memory.
    charlie_unitary: UnitaryDecl,
    alice: Vec<AliceDecl>,
    bob_angles: Vec<f64>,
    #[serde(default)]
    tolerance: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ComplexDecl {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexDecl {
    fn to_c64(&self) -> Complex64 {
        match self {
            ComplexDecl::Real(re) => Complex64::new(*re, 0.0),
            ComplexDecl::Pair([re, im]) => Complex64::new(*re, *im),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum UnitaryDecl {
    Named(String),
    Matrix { matrix: Vec<Vec<ComplexDecl>> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AliceDecl {
    action: String,
    #[serde(default)]
    angle: Option<f64>,
}

pub fn quantum_model_from_json(text: &str) -> Result<MinimalLfModel> {
    let file: QuantumScenarioFile = from_json(text)?;
    let amps: Vec<Complex64> = file.initial_state.iter().map(ComplexDecl::to_c64).collect();
    let d = (amps.len() as f64).sqrt() as usize;
    if d * d != amps.len() {
        return Err(Error::Parse(
            "initial state must be a square (system ⊗ remote) table".into(),
        ));
    }
    let initial = StateVector::new(vec![d, d], amps)?;
    let charlie_unitary = match file.charlie_unitary {
        UnitaryDecl::Named(name) if name == "copy" => Unitary::copy_gate(d),
        UnitaryDecl::Named(other) => return Err(Error::Parse(format!("unknown gate `{other}`"))),
        UnitaryDecl::Matrix { matrix } => {
            let dim = matrix.len();
            let mut flat = Vec::with_capacity(dim * dim);
            for row in &matrix {
                if row.len() != dim {
                    return Err(Error::Parse("unitary matrix must be square".into()));
                }
                flat.extend(row.iter().map(ComplexDecl::to_c64));
            }
            Unitary::new(dim, flat)?
        }
    };
    let alice = file
        .alice
        .iter()
        .map(|a| match a.action.as_str() {
            "copy" => Ok(AliceAction::CopyMemory),
            "reverse_measure" => {
                let angle = a
                    .angle
                    .ok_or_else(|| Error::Parse("reverse_measure requires an angle".into()))?;
                Ok(AliceAction::ReverseThenMeasure(
                    EffectFamily::projective_qubit(angle),
                ))
            }
            other => Err(Error::Parse(format!("unknown action `{other}`"))),
        })
        .collect::<Result<Vec<_>>>()?;
    let bob = file
        .bob_angles
        .iter()
        .map(|&theta| EffectFamily::projective_qubit(theta))
        .collect();
    let _ = file.tolerance;
    Ok(MinimalLfModel {
        initial,
        charlie_unitary,
        charlie_reverse: None,
        alice,
        bob,
    })
}

/// The shipped default scenario as a JSON document.
pub fn tsirelson_scenario_json() -> String {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let file = QuantumScenarioFile {
        initial_state: vec![
            ComplexDecl::Real(r),
            ComplexDecl::Real(0.0),
            ComplexDecl::Real(0.0),
            ComplexDecl::Real(r),
        ],
        charlie_unitary: UnitaryDecl::Named("copy".into()),
        alice: vec![
            AliceDecl {
                action: "reverse_measure".into(),
                angle: Some(std::f64::consts::FRAC_PI_2),
            },
            AliceDecl {
                action: "copy".into(),
                angle: None,
            },
        ],
        bob_angles: vec![
            std::f64::consts::FRAC_PI_4,
            3.0 * std::f64::consts::FRAC_PI_4,
        ],
        tolerance: Some(1e-12),
    };
    to_json(&file)
}

// ---------------------------------------------------------------------------
// Verification protocol config.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProtocolFile {
    m: usize,
    epsilon: String,
    #[serde(default)]
    variant: Option<String>,
    runs: Vec<RunDecl>,
    amplitudes: AmplitudeDecl,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunDecl {
    x: usize,
    y: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AmplitudeDecl {
    Named(String),
    PerRun(Vec<Vec<ComplexDecl>>),
    Replicate { replicate: Vec<ComplexDecl> },
}

/// Parsed protocol configuration.
pub struct ProtocolConfig {
    pub table: AmplitudeTable,
    pub epsilon: Q,
    pub variant: FrequencyTest,
}

pub fn protocol_from_json(text: &str) -> Result<ProtocolConfig> {
    let file: ProtocolFile = from_json(text)?;
    let settings: Vec<(usize, usize)> = file.runs.iter().map(|r| (r.x, r.y)).collect();
    let table = match &file.amplitudes {
        AmplitudeDecl::Named(name) if name == "uniform" => {
            AmplitudeTable::uniform(file.m, settings)?
        }
        AmplitudeDecl::Named(other) => {
            return Err(Error::Parse(format!("unknown amplitude source `{other}`")))
        }
        AmplitudeDecl::Replicate { replicate } => AmplitudeTable::replicated(
            file.m,
            replicate.iter().map(ComplexDecl::to_c64).collect(),
            settings,
        )?,
        AmplitudeDecl::PerRun(rows) => AmplitudeTable::new(
            file.m,
            rows.iter()
                .map(|row| row.iter().map(ComplexDecl::to_c64).collect())
                .collect(),
            settings,
        )?,
    };
    let variant = match file.variant.as_deref() {
        None | Some("max") => FrequencyTest::MaxDeviation,
        Some("mean-context") => FrequencyTest::MeanContextDeviation,
        Some(other) => return Err(Error::Parse(format!("unknown variant `{other}`"))),
    };
    Ok(ProtocolConfig {
        table,
        epsilon: parse_rational(&file.epsilon)?,
        variant,
    })
}

// ---------------------------------------------------------------------------
// Functional model file.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    variables: Vec<ModelVarDecl>,
    errors: Vec<ErrorDecl>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelVarDecl {
    label: String,
    domain: Vec<i64>,
    equation: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ErrorDecl {
    label: String,
    domain: Vec<i64>,
    prior: Vec<String>,
}

pub fn model_from_json(text: &str) -> Result<FunctionalModel> {
    let file: ModelFile = from_json(text)?;
    let endogenous = file
        .variables
        .into_iter()
        .map(|v| {
            Ok(Endogenous {
                label: v.label,
                domain: v.domain,
                equation: parse_expression(&v.equation)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let errors = file
        .errors
        .into_iter()
        .map(|e| {
            Ok(ErrorTerm {
                label: e.label,
                domain: e.domain,
                prior: e
                    .prior
                    .iter()
                    .map(|p| parse_rational(p))
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FunctionalModel::new(endogenous, errors)
}

/// Serializes an exact distribution generically for report output.
pub fn dist_report<S: crate::dist::Scalar>(d: &ConditionalDistribution<S>) -> String {
    let d = d.canonical_order();
    let mut out = String::new();
    let labels: Vec<&str> = d
        .settings()
        .iter()
        .chain(d.outcomes())
        .map(|v| v.label.as_str())
        .collect();
    out.push_str(&format!("# variables: {}\n", labels.join(", ")));
    for (ctx_i, ctx) in crate::dist::assignments(d.settings()).enumerate() {
        for (o_i, outcome) in crate::dist::assignments(d.outcomes()).enumerate() {
            let _ = (ctx_i, o_i);
            let p = d.prob(&ctx, &outcome);
            let ctx_s: Vec<String> = ctx.iter().map(|v| v.to_string()).collect();
            let out_s: Vec<String> = outcome.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "P({} | {}) = {:.12}\n",
                out_s.join(","),
                ctx_s.join(","),
                p.to_f64_lossy()
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::boxes::pr_box;
    use crate::graph::lf_dag;

    #[test]
    fn graph_round_trip_and_unknown_fields() {
        let g = lf_dag();
        let json = graph_to_json(&g);
        let back = graph_from_json(&json).unwrap();
        assert_eq!(g, back);
        let bad = r#"{"nodes": [{"label": "A", "kind": "observed", "extra": 1}], "edges": []}"#;
        assert!(graph_from_json(bad).is_err());
        let bad_kind = r#"{"nodes": [{"label": "A", "kind": "hidden"}], "edges": []}"#;
        assert!(graph_from_json(bad_kind).is_err());
    }

    #[test]
    fn dist_round_trip() {
        let d = pr_box();
        let json = exact_dist_to_json(&d);
        match dist_from_json(&json).unwrap() {
            DistSource::Exact(back) => assert_eq!(back, d.canonical_order()),
            _ => panic!("expected exact"),
        }
    }

    #[test]
    fn approximate_dist_requires_flag() {
        let text = r#"{
            "outcomes": [{"label": "A", "cardinality": 2}],
            "settings": [],
            "table": [0.5, 0.5]
        }"#;
        assert!(dist_from_json(text).is_err());
        let flagged = r#"{
            "outcomes": [{"label": "A", "cardinality": 2}],
            "settings": [],
            "approximate": true,
            "table": [0.5, 0.5]
        }"#;
        assert!(matches!(
            dist_from_json(flagged).unwrap(),
            DistSource::Approximate(_)
        ));
    }

    #[test]
    fn inequality_round_trip() {
        let ineq = crate::marginal::monogamy_inequality();
        let json = inequality_to_json(&ineq);
        let back = inequality_from_json(&json).unwrap();
        assert_eq!(back, ineq);
    }

    #[test]
    fn ci_list_parsing() {
        let text = r#"{
            "statements": [
                {"u": ["A"], "v": ["Y"], "w": ["X"], "note": "no-signaling"},
                {"u": ["X"], "v": ["Y"]}
            ],
            "settings_policy": {"X": "uniform", "Y": {"fixed": 1}},
            "tolerance": "0"
        }"#;
        let list = ci_list_from_json(text).unwrap();
        assert_eq!(list.statements.len(), 2);
        assert_eq!(list.fixed_settings.get("Y"), Some(&1));
        assert!(list.tolerance.is_zero());
    }

    #[test]
    fn quantum_scenario_default_parses() {
        let json = tsirelson_scenario_json();
        let model = quantum_model_from_json(&json).unwrap();
        let out = crate::quantum::run_minimal_lf(&model).unwrap();
        let chsh = crate::dist::boxes::chsh_value(&out.pab).unwrap();
        assert!((chsh - (2.0 + std::f64::consts::SQRT_2)).abs() < 1e-9);
    }

    #[test]
    fn protocol_config_parses() {
        let text = r#"{
            "m": 2,
            "epsilon": "1/4",
            "runs": [{"x": 0, "y": 0}, {"x": 0, "y": 0}, {"x": 1, "y": 1}, {"x": 1, "y": 1}],
            "amplitudes": "uniform"
        }"#;
        let cfg = protocol_from_json(text).unwrap();
        assert_eq!(cfg.table.run_count(), 4);
        let p =
            crate::veronika::partition_sequences(&cfg.table, &cfg.epsilon, cfg.variant).unwrap();
        assert_eq!(p.j, 6);
    }

    #[test]
    fn model_file_parses() {
        let text = r#"{
            "variables": [
                {"label": "A", "domain": [0, 1], "equation": "D * E_A"},
                {"label": "B", "domain": [0, 1], "equation": "A + E_B"},
                {"label": "C", "domain": [0, 1], "equation": "B * E_C"},
                {"label": "D", "domain": [0, 1], "equation": "C + E_D"}
            ],
            "errors": [
                {"label": "E_A", "domain": [0, 1], "prior": ["1/2", "1/2"]},
                {"label": "E_B", "domain": [0, 1], "prior": ["1/2", "1/2"]},
                {"label": "E_C", "domain": [0, 1], "prior": ["1/2", "1/2"]},
                {"label": "E_D", "domain": [0, 1], "prior": ["1/2", "1/2"]}
            ]
        }"#;
        let model = model_from_json(text).unwrap();
        let sols = crate::scm::solve(
            &model,
            &[("A".to_string(), 0i64), ("C".to_string(), 0)]
                .into_iter()
                .collect(),
        )
        .unwrap();
        assert_eq!(sols.invalid_count(), 7);
    }

    use num_traits::Zero;
}
