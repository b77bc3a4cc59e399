//! The No-Fine-Tuning machinery.
//!
//! A causal model is fine-tuned relative to a list of conditional
//! independence relations when at least one of them has no corresponding
//! graphical-separation relation. The auditor checks a (graph, CI list)
//! pair; the derivation runner turns the premise independences into a
//! machine-checked chain ending at the marginal problem; the sweep
//! exhaustively classifies every candidate graph on the five scenario
//! variables plus at most one latent common cause.

use crate::dist::{ExactDist, SettingsPolicy};
use crate::error::{Error, Result};
use crate::graph::{lf_dag, DirectedGraph, NodeKind};
use crate::linprog::Verdict;
use crate::marginal::{marginal_feasible, min_gamma, monogamy_eq2};
use crate::ratio::format_rational;
use crate::separation::{compose_closure, separated, Criterion, SeparationStatement};
use crate::Q;
use num_traits::Zero;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::fmt;

/// A conditional independence statement over observed variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CiStatement {
    pub u: BTreeSet<String>,
    pub v: BTreeSet<String>,
    pub w: BTreeSet<String>,
    pub note: Option<String>,
}

impl CiStatement {
    pub fn new<I, J, K>(u: I, v: J, w: K) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<String>,
        J: IntoIterator,
        J::Item: Into<String>,
        K: IntoIterator,
        K::Item: Into<String>,
    {
        let u: BTreeSet<String> = u.into_iter().map(Into::into).collect();
        let v: BTreeSet<String> = v.into_iter().map(Into::into).collect();
        let w: BTreeSet<String> = w.into_iter().map(Into::into).collect();
        if u.is_empty() || v.is_empty() {
            return Err(Error::BadStatement("U and V must be nonempty".into()));
        }
        for x in &u {
            if v.contains(x) || w.contains(x) {
                return Err(Error::OverlappingSets(x.clone()));
            }
        }
        for x in &v {
            if w.contains(x) {
                return Err(Error::OverlappingSets(x.clone()));
            }
        }
        // Canonical orientation, mirroring separation statements.
        let (u, v) = if u <= v { (u, v) } else { (v, u) };
        Ok(Self {
            u,
            v,
            w,
            note: None,
        })
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn separation(&self, criterion: Criterion) -> Result<SeparationStatement> {
        SeparationStatement::new(
            self.u.iter().cloned(),
            self.v.iter().cloned(),
            self.w.iter().cloned(),
            criterion,
        )
    }

    pub fn to_text(&self) -> String {
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(",");
        format!("{} | {} | {}", join(&self.u), join(&self.v), join(&self.w))
    }
}

impl fmt::Display for CiStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// Verdict for one audited independence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CiExplanation {
    /// The independence corresponds to a separation that holds.
    ExplainedBySeparation(SeparationStatement),
    /// No separation backs the independence: fine-tuning.
    FineTuned,
}

/// Outcome of auditing a (graph, CI list) pair.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub criterion: Criterion,
    pub rows: Vec<(CiStatement, CiExplanation)>,
    pub fine_tuned: bool,
}

impl AuditReport {
    pub fn unexplained(&self) -> Vec<&CiStatement> {
        self.rows
            .iter()
            .filter(|(_, e)| *e == CiExplanation::FineTuned)
            .map(|(c, _)| c)
            .collect()
    }
}

/// Audits each independence against the graph: explained iff the matching
/// separation holds under the criterion.
pub fn audit(g: &DirectedGraph, cis: &[CiStatement], criterion: Criterion) -> Result<AuditReport> {
    let mut rows = Vec::with_capacity(cis.len());
    let mut fine_tuned = false;
    for ci in cis {
        for label in ci.u.iter().chain(&ci.v).chain(&ci.w) {
            if g.kind(label)? != NodeKind::Observed {
                return Err(Error::LatentInQuery(label.clone()));
            }
        }
        let holds = separated(g, &ci.u, &ci.v, &ci.w, criterion)?;
        let explanation = if holds {
            CiExplanation::ExplainedBySeparation(ci.separation(criterion)?)
        } else {
            fine_tuned = true;
            CiExplanation::FineTuned
        };
        rows.push((ci.clone(), explanation));
    }
    Ok(AuditReport {
        criterion,
        rows,
        fine_tuned,
    })
}

/// All conditional independences that hold exactly in a distribution, as
/// setwise statements among its variables (conditioning sets up to
/// `max_w`). Used by the full-distribution audit mode.
pub fn enumerate_cis(dist: &ExactDist, max_w: Option<usize>) -> Result<Vec<CiStatement>> {
    let labels: Vec<String> = dist.outcomes().iter().map(|v| v.label.clone()).collect();
    let k = labels.len();
    let bound = max_w
        .unwrap_or(k.saturating_sub(2))
        .min(k.saturating_sub(2));
    let mut out = Vec::new();
    let policy = SettingsPolicy::uniform();
    let indices: Vec<usize> = (0..k).collect();
    for w_bits in 0usize..(1 << k) {
        let w: Vec<usize> = indices
            .iter()
            .copied()
            .filter(|i| w_bits & (1 << i) != 0)
            .collect();
        if w.len() > bound {
            continue;
        }
        let rest: Vec<usize> = indices
            .iter()
            .copied()
            .filter(|i| w_bits & (1 << i) == 0)
            .collect();
        for u_bits in 1usize..(1 << rest.len()) {
            for v_bits in (u_bits + 1)..(1 << rest.len()) {
                if u_bits & v_bits != 0 {
                    continue;
                }
                let pick = |bits: usize| -> Vec<&str> {
                    rest.iter()
                        .enumerate()
                        .filter(|(j, _)| bits & (1 << j) != 0)
                        .map(|(_, &i)| labels[i].as_str())
                        .collect()
                };
                let u = pick(u_bits);
                let v = pick(v_bits);
                let wl: Vec<&str> = w.iter().map(|&i| labels[i].as_str()).collect();
                let verdict = dist.ci_holds(&u, &v, &wl, &policy, Q::zero())?;
                if verdict.holds {
                    out.push(CiStatement::new(
                        u.into_iter().map(str::to_owned),
                        v.into_iter().map(str::to_owned),
                        wl.into_iter().map(str::to_owned),
                    )?);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// The four premise independences of the No-Fine-Tuning argument: the two
/// operational no-signaling relations plus the friend-outcome independence
/// split into its two conditional forms.
pub fn nft_premises() -> Vec<CiStatement> {
    vec![
        CiStatement::new(["A"], ["Y"], ["X"])
            .unwrap()
            .with_note("P(a|xy) = P(a|x)"),
        CiStatement::new(["B"], ["X"], ["Y"])
            .unwrap()
            .with_note("P(b|xy) = P(b|y)"),
        CiStatement::new(["C"], ["X"], ["Y"])
            .unwrap()
            .with_note("P(c|xy) = P(c|y)"),
        CiStatement::new(["C"], ["Y"], ["X"])
            .unwrap()
            .with_note("P(c|xy) = P(c|x)"),
    ]
}

/// The five unconditional separations forced by the relativistic
/// causal-order constraints together with setting exogeneity.
pub fn relativistic_premises() -> Vec<CiStatement> {
    vec![
        CiStatement::new(["B"], ["X"], Vec::<String>::new()).unwrap(),
        CiStatement::new(["C"], ["X"], Vec::<String>::new()).unwrap(),
        CiStatement::new(["A"], ["Y"], Vec::<String>::new()).unwrap(),
        CiStatement::new(["C"], ["Y"], Vec::<String>::new()).unwrap(),
        CiStatement::new(["X"], ["Y"], Vec::<String>::new()).unwrap(),
    ]
}

/// Premise family selecting which derivation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PremiseKind {
    /// Conditional premises; closure targets AC ⟂ Y | X and BC ⟂ X | Y.
    NoFineTuning,
    /// Unconditional premises; closure targets ACX ⟂ Y and BCY ⟂ X.
    Relativistic,
}

/// One verified step of the derivation trace.
#[derive(Debug, Clone)]
pub enum DerivationStep {
    PremisesLifted {
        separations: Vec<SeparationStatement>,
    },
    ClosureComputed {
        targets: Vec<SeparationStatement>,
        closure_size: usize,
    },
    StatisticalConstraints {
        description: String,
    },
    MarginalProblem {
        feasible: bool,
        gamma: Option<Q>,
        monogamy_lhs: Q,
    },
}

/// The full machine-checked chain from premise independences to the
/// marginal-problem verdict.
#[derive(Debug, Clone)]
pub struct DerivationTrace {
    pub kind: PremiseKind,
    pub steps: Vec<DerivationStep>,
    pub conclusion: DerivationOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivationOutcome {
    /// The supplied pair admits a constrained joint: no contradiction.
    FeasibleNoContradiction,
    /// The pair is refuted: any model reproducing it must be fine-tuned
    /// (or violate the causal-order assumptions).
    InfeasibleFineTuningRequired,
}

impl fmt::Display for DerivationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FeasibleNoContradiction => write!(f, "feasible: no contradiction"),
            Self::InfeasibleFineTuningRequired => write!(f, "infeasible: fine-tuning required"),
        }
    }
}

fn expected_premises(kind: PremiseKind) -> Vec<CiStatement> {
    match kind {
        PremiseKind::NoFineTuning => nft_premises(),
        PremiseKind::Relativistic => relativistic_premises(),
    }
}

fn closure_targets(kind: PremiseKind) -> Vec<SeparationStatement> {
    match kind {
        PremiseKind::NoFineTuning => vec![
            SeparationStatement::new(["A", "C"], ["Y"], ["X"], Criterion::D).unwrap(),
            SeparationStatement::new(["B", "C"], ["X"], ["Y"], Criterion::D).unwrap(),
        ],
        PremiseKind::Relativistic => vec![
            SeparationStatement::new(["A", "C", "X"], ["Y"], Vec::<String>::new(), Criterion::D)
                .unwrap(),
            SeparationStatement::new(["B", "C", "Y"], ["X"], Vec::<String>::new(), Criterion::D)
                .unwrap(),
        ],
    }
}

/// Runs the derivation: premises lift to separations, the compositional
/// closure produces the joint statements, those impose the statistical
/// constraints, and the marginal problem delivers the verdict on the
/// supplied pair. Each step re-verifies through the corresponding module.
pub fn nogo_derivation(
    kind: PremiseKind,
    cis: &[CiStatement],
    pab: &ExactDist,
    pac: &ExactDist,
) -> Result<DerivationTrace> {
    let required = expected_premises(kind);
    for needed in &required {
        let found = cis
            .iter()
            .any(|c| c.u == needed.u && c.v == needed.v && c.w == needed.w);
        if !found {
            return Err(Error::MissingPremise(needed.to_text()));
        }
    }
    let separations: Vec<SeparationStatement> = cis
        .iter()
        .map(|c| c.separation(Criterion::D))
        .collect::<Result<_>>()?;
    let mut steps = vec![DerivationStep::PremisesLifted {
        separations: separations.clone(),
    }];

    let closure = compose_closure(&separations)?;
    let targets = closure_targets(kind);
    for t in &targets {
        if !closure.contains(t) {
            return Err(Error::BadStatement(format!(
                "closure failed to produce required statement {t}"
            )));
        }
    }
    steps.push(DerivationStep::ClosureComputed {
        targets: targets.clone(),
        closure_size: closure.len(),
    });

    steps.push(DerivationStep::StatisticalConstraints {
        description: "separation rule: P(ac|xy) = P(ac|x) and P(bc|xy) = P(bc|y)".into(),
    });

    let verdict = marginal_feasible(pab, pac)?;
    let feasible = verdict.is_feasible();
    let gamma = min_gamma(pab).ok().map(|g| g.gamma);
    let (monogamy_lhs, _) = monogamy_eq2(pab, pac)?;
    steps.push(DerivationStep::MarginalProblem {
        feasible,
        gamma: gamma.clone(),
        monogamy_lhs,
    });
    let conclusion = if feasible {
        DerivationOutcome::FeasibleNoContradiction
    } else {
        // The infeasibility certificate was already substitution-checked by
        // the solver; cross-check coherence with the γ bound.
        if let Some(g) = &gamma {
            if g.is_zero() {
                return Err(Error::MalformedSystem(
                    "internal error: infeasible pair but zero minimal discrepancy".into(),
                ));
            }
        }
        DerivationOutcome::InfeasibleFineTuningRequired
    };
    match &verdict {
        Verdict::Feasible { .. } | Verdict::Infeasible { .. } => {}
    }
    Ok(DerivationTrace {
        kind,
        steps,
        conclusion,
    })
}

pub fn trace_text(trace: &DerivationTrace) -> String {
    let mut out = String::new();
    out.push_str(&format!("derivation ({:?})\n", trace.kind));
    for (i, step) in trace.steps.iter().enumerate() {
        match step {
            DerivationStep::PremisesLifted { separations } => {
                out.push_str(&format!(
                    "{}. premises lifted to required separations:\n",
                    i + 1
                ));
                for s in separations {
                    out.push_str(&format!("   {s}\n"));
                }
            }
            DerivationStep::ClosureComputed {
                targets,
                closure_size,
            } => {
                out.push_str(&format!(
                    "{}. compositional closure ({} statements) contains:\n",
                    i + 1,
                    closure_size
                ));
                for t in targets {
                    out.push_str(&format!("   {t}\n"));
                }
            }
            DerivationStep::StatisticalConstraints { description } => {
                out.push_str(&format!("{}. {description}\n", i + 1));
            }
            DerivationStep::MarginalProblem {
                feasible,
                gamma,
                monogamy_lhs,
            } => {
                out.push_str(&format!(
                    "{}. marginal problem: {}; monogamy lhs = {}{}\n",
                    i + 1,
                    if *feasible {
                        "feasible"
                    } else {
                        "infeasible (certificate verified)"
                    },
                    format_rational(monogamy_lhs),
                    match gamma {
                        Some(g) => format!("; minimal discrepancy = {}", format_rational(g)),
                        None => String::new(),
                    }
                ));
            }
        }
    }
    out.push_str(&format!("conclusion: {}\n", trace.conclusion));
    out
}

// ---------------------------------------------------------------------------
// Candidate classification and the exhaustive sweep.
// ---------------------------------------------------------------------------

/// Classification of one candidate causal structure.
#[derive(Debug, Clone)]
pub struct CandidateRow {
    pub name: String,
    /// At least one premise separation fails, so the graph imposes fewer
    /// constraints than the monogamy derivation needs.
    pub violation_capable: bool,
    /// The audit found an unexplained premise independence.
    pub fine_tuned: bool,
}

/// Classifies candidate graphs against the premise independences. The two
/// columns come from independent routes (closure-target derivability versus
/// the audit); the dichotomy says they must always agree.
pub fn classify_candidates(
    graphs: &[(String, DirectedGraph)],
    cis: &[CiStatement],
) -> Result<Vec<CandidateRow>> {
    let mut rows = Vec::with_capacity(graphs.len());
    for (name, g) in graphs {
        rows.push(CandidateRow {
            name: name.clone(),
            violation_capable: violation_capable(g, cis)?,
            fine_tuned: audit(g, cis, Criterion::D)?.fine_tuned,
        });
    }
    Ok(rows)
}

/// A graph can host a monogamy violation iff the compositional closure of
/// the premise separations *that hold in the graph* fails to reach the two
/// joint statements of the derivation.
fn violation_capable(g: &DirectedGraph, cis: &[CiStatement]) -> Result<bool> {
    let mut holding = Vec::new();
    for ci in cis {
        if separated(g, &ci.u, &ci.v, &ci.w, Criterion::D)? {
            holding.push(ci.separation(Criterion::D)?);
        }
    }
    let closure = compose_closure(&holding)?;
    let targets = closure_targets(PremiseKind::NoFineTuning);
    Ok(!targets.iter().all(|t| closure.contains(t)))
}

/// The three representative alternative structures: a direct setting-to-
/// remote-outcome influence, a common cause onto a setting, and an
/// outcome-to-latent (retrocausal-style) arrow. Representatives, not
/// uniquely determined wirings.
pub fn alternative_structures() -> Vec<(String, DirectedGraph)> {
    let lf = lf_dag();
    let nodes: Vec<(String, NodeKind)> = lf
        .labels()
        .iter()
        .map(|l| (l.clone(), lf.kind(l).unwrap()))
        .collect();
    let with_edge = |extra: (&str, &str)| -> DirectedGraph {
        let mut edges = lf.edges();
        edges.push((extra.0.to_string(), extra.1.to_string()));
        DirectedGraph::build(&nodes, &edges).expect("valid representative")
    };
    vec![
        ("superluminal-influence".to_string(), with_edge(("X", "B"))),
        ("superdeterminism".to_string(), with_edge(("L", "X"))),
        ("retrocausality".to_string(), with_edge(("A", "L"))),
    ]
}

/// Summary of the exhaustive dichotomy sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSummary {
    pub total_graphs: usize,
    pub monogamy_enforcing: usize,
    pub violation_capable_and_fine_tuned: usize,
    /// Graphs that can violate the monogamy relations without fine-tuning.
    /// The dichotomy says this must be zero.
    pub contradictions: usize,
}

/// Exhaustively sweeps every DAG on {A, B, C, X, Y} with at most one latent
/// root node (any subset of outgoing edges) and classifies each against the
/// premise independences. The one-latent cap is a stated limitation of the
/// sweep, not of the theorem.
pub fn dichotomy_sweep() -> Result<SweepSummary> {
    let labels = ["A", "B", "C", "X", "Y"];
    // Ordered pairs (i, j), i ≠ j, as edge slots.
    let pairs: Vec<(usize, usize)> = (0..5)
        .flat_map(|i| (0..5).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    debug_assert_eq!(pairs.len(), 20);
    let acyclic = |mask: u32| -> bool {
        // Kahn's algorithm on the 5-node adjacency induced by the mask.
        let mut indeg = [0u8; 5];
        let mut children: [u8; 5] = [0; 5];
        for (slot, &(i, j)) in pairs.iter().enumerate() {
            if mask & (1 << slot) != 0 {
                indeg[j] += 1;
                children[i] |= 1 << j;
            }
        }
        let mut removed = 0;
        let mut queue: Vec<usize> = (0..5).filter(|&i| indeg[i] == 0).collect();
        while let Some(i) = queue.pop() {
            removed += 1;
            for j in 0..5 {
                if children[i] & (1 << j) != 0 {
                    indeg[j] -= 1;
                    if indeg[j] == 0 {
                        queue.push(j);
                    }
                }
            }
        }
        removed == 5
    };
    let dag_masks: Vec<u32> = (0u32..(1 << 20)).filter(|&m| acyclic(m)).collect();
    let premises = nft_premises();

    let summaries: Vec<SweepSummary> = dag_masks
        .par_iter()
        .map(|&mask| {
            let mut local = SweepSummary {
                total_graphs: 0,
                monogamy_enforcing: 0,
                violation_capable_and_fine_tuned: 0,
                contradictions: 0,
            };
            for latent_children in 0u32..32 {
                let mut nodes: Vec<(String, NodeKind)> = labels
                    .iter()
                    .map(|l| (l.to_string(), NodeKind::Observed))
                    .collect();
                let mut edges: Vec<(String, String)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(slot, _)| mask & (1 << slot) != 0)
                    .map(|(_, &(i, j))| (labels[i].to_string(), labels[j].to_string()))
                    .collect();
                if latent_children != 0 {
                    nodes.push(("L".to_string(), NodeKind::Latent));
                    for (j, label) in labels.iter().enumerate() {
                        if latent_children & (1 << j) != 0 {
                            edges.push(("L".to_string(), label.to_string()));
                        }
                    }
                }
                let g = DirectedGraph::build(&nodes, &edges).expect("sweep graph");
                let capable = violation_capable(&g, &premises).expect("sweep separation");
                let fine_tuned = audit(&g, &premises, Criterion::D)
                    .expect("sweep audit")
                    .fine_tuned;
                local.total_graphs += 1;
                if !capable {
                    local.monogamy_enforcing += 1;
                }
                if capable && fine_tuned {
                    local.violation_capable_and_fine_tuned += 1;
                }
                if capable && !fine_tuned {
                    local.contradictions += 1;
                }
            }
            local
        })
        .collect();
    let mut total = SweepSummary {
        total_graphs: 0,
        monogamy_enforcing: 0,
        violation_capable_and_fine_tuned: 0,
        contradictions: 0,
    };
    for s in summaries {
        total.total_graphs += s.total_graphs;
        total.monogamy_enforcing += s.monogamy_enforcing;
        total.violation_capable_and_fine_tuned += s.violation_capable_and_fine_tuned;
        total.contradictions += s.contradictions;
    }
    Ok(total)
}
