//! Directed causal graphs with observed/latent node kinds.
//!
//! Cycles are permitted; acyclicity is a queryable property, not an
//! invariant. Self-loops are rejected at construction. Graphs are immutable
//! after construction and all queries are read-only, so values can be shared
//! freely across threads.

use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt;

/// Node classification: observed nodes carry measured classical variables,
/// latent nodes are unmeasured explanatory systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Observed,
    Latent,
}

/// A directed graph over labeled nodes. Node identity is the string label;
/// indices are an internal detail and never leak into serialized formats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    labels: Vec<String>,
    kinds: Vec<NodeKind>,
    /// Sorted child lists per node index.
    children: Vec<Vec<usize>>,
    /// Sorted parent lists per node index.
    parents: Vec<Vec<usize>>,
}

impl DirectedGraph {
    /// Builds a graph from `(label, kind)` declarations and `(from, to)` edges.
    pub fn build<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
        nodes: &[(S, NodeKind)],
        edges: &[(T, U)],
    ) -> Result<Self> {
        let mut labels = Vec::with_capacity(nodes.len());
        let mut kinds = Vec::with_capacity(nodes.len());
        for (label, kind) in nodes {
            let label = label.as_ref().to_owned();
            if labels.contains(&label) {
                return Err(Error::DuplicateLabel(label));
            }
            labels.push(label);
            kinds.push(*kind);
        }
        let index_of = |l: &str| -> Result<usize> {
            labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::DanglingEndpoint(l.to_owned()))
        };
        let n = labels.len();
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        for (from, to) in edges {
            let (from, to) = (from.as_ref(), to.as_ref());
            let f = index_of(from)?;
            let t = index_of(to)?;
            if f == t {
                return Err(Error::SelfLoop(from.to_owned()));
            }
            if children[f].contains(&t) {
                continue; // duplicate edges collapse
            }
            children[f].push(t);
            parents[t].push(f);
        }
        for list in children.iter_mut().chain(parents.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Self {
            labels,
            kinds,
            children,
            parents,
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownNode(label.to_owned()))
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }

    pub fn kind(&self, label: &str) -> Result<NodeKind> {
        Ok(self.kinds[self.index_of(label)?])
    }

    pub fn kind_by_index(&self, idx: usize) -> NodeKind {
        self.kinds[idx]
    }

    pub fn observed_labels(&self) -> Vec<String> {
        self.labels
            .iter()
            .zip(&self.kinds)
            .filter(|(_, k)| **k == NodeKind::Observed)
            .map(|(l, _)| l.clone())
            .collect()
    }

    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (f, cs) in self.children.iter().enumerate() {
            for &t in cs {
                out.push((self.labels[f].clone(), self.labels[t].clone()));
            }
        }
        out
    }

    pub fn parents_of(&self, idx: usize) -> &[usize] {
        &self.parents[idx]
    }

    pub fn children_of(&self, idx: usize) -> &[usize] {
        &self.children[idx]
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.children[from].binary_search(&to).is_ok()
    }

    fn closure(&self, start: usize, step: impl Fn(usize) -> Vec<usize>) -> BTreeSet<usize> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = step(start);
        let mut out = BTreeSet::new();
        while let Some(u) = stack.pop() {
            if std::mem::replace(&mut seen[u], true) {
                continue;
            }
            out.insert(u);
            stack.extend(step(u));
        }
        out
    }

    /// Transitive closure of the parent relation. `n` itself is included
    /// exactly when it lies on a directed cycle through itself.
    pub fn ancestors(&self, label: &str) -> Result<BTreeSet<String>> {
        let idx = self.index_of(label)?;
        Ok(self
            .closure(idx, |u| self.parents[u].clone())
            .into_iter()
            .map(|i| self.labels[i].clone())
            .collect())
    }

    /// Transitive closure of the child relation, dual to [`Self::ancestors`].
    pub fn descendants(&self, label: &str) -> Result<BTreeSet<String>> {
        let idx = self.index_of(label)?;
        Ok(self
            .closure(idx, |u| self.children[u].clone())
            .into_iter()
            .map(|i| self.labels[i].clone())
            .collect())
    }

    pub(crate) fn descendant_indices(&self, idx: usize) -> BTreeSet<usize> {
        self.closure(idx, |u| self.children[u].clone())
    }

    /// Tarjan's algorithm; returns the partition into maximal mutually
    /// reachable node sets. On acyclic graphs every component is a singleton.
    pub fn strongly_connected_components(&self) -> Vec<Vec<String>> {
        self.scc_ids()
            .1
            .into_iter()
            .map(|comp| comp.into_iter().map(|i| self.labels[i].clone()).collect())
            .collect()
    }

    /// Returns `(component id per node, components)`.
    pub(crate) fn scc_ids(&self) -> (Vec<usize>, Vec<Vec<usize>>) {
        let n = self.node_count();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut comp_id = vec![usize::MAX; n];
        let mut counter = 0usize;

        // Iterative Tarjan to avoid recursion limits on long cycles.
        enum Frame {
            Enter(usize),
            Resume(usize, usize),
        }
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut call = vec![Frame::Enter(root)];
            while let Some(frame) = call.pop() {
                match frame {
                    Frame::Enter(v) => {
                        index[v] = counter;
                        low[v] = counter;
                        counter += 1;
                        stack.push(v);
                        on_stack[v] = true;
                        call.push(Frame::Resume(v, 0));
                    }
                    Frame::Resume(v, mut child_pos) => {
                        let mut descended = false;
                        while child_pos < self.children[v].len() {
                            let w = self.children[v][child_pos];
                            child_pos += 1;
                            if index[w] == usize::MAX {
                                call.push(Frame::Resume(v, child_pos));
                                call.push(Frame::Enter(w));
                                descended = true;
                                break;
                            } else if on_stack[w] {
                                low[v] = low[v].min(index[w]);
                            }
                        }
                        if descended {
                            continue;
                        }
                        if low[v] == index[v] {
                            let mut comp = Vec::new();
                            loop {
                                let w = stack.pop().expect("tarjan stack invariant");
                                on_stack[w] = false;
                                comp.push(w);
                                if w == v {
                                    break;
                                }
                            }
                            comp.sort_unstable();
                            for &w in &comp {
                                comp_id[w] = comps.len();
                            }
                            comps.push(comp);
                        }
                        // Propagate lowlink to the parent frame.
                        if let Some(Frame::Resume(p, _)) = call.last() {
                            let p = *p;
                            low[p] = low[p].min(low[v]);
                        }
                    }
                }
            }
        }
        (comp_id, comps)
    }

    pub fn is_acyclic(&self) -> bool {
        self.scc_ids().1.iter().all(|c| c.len() == 1)
    }
}

impl fmt::Display for DirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, label) in self.labels.iter().enumerate() {
            let kind = match self.kinds[i] {
                NodeKind::Observed => "observed",
                NodeKind::Latent => "latent",
            };
            let children: Vec<&str> = self.children[i]
                .iter()
                .map(|&c| self.labels[c].as_str())
                .collect();
            writeln!(f, "{label} [{kind}] -> {{{}}}", children.join(", "))?;
        }
        Ok(())
    }
}

/// Causal-order constraints: a forbidden-cause relation ("S may not be an
/// ancestor of T") plus an exogenous set (nodes required to have no parents
/// and no latent ancestor shared with any other node).
#[derive(Debug, Clone, Default)]
pub struct CausalOrderConstraints {
    pub forbidden: Vec<(String, String)>,
    pub exogenous: Vec<String>,
}

/// A single compliance violation found by [`check_assumption_compliance`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ComplianceViolation {
    ForbiddenAncestry {
        cause: String,
        effect: String,
    },
    ExogenousHasParent {
        node: String,
        parent: String,
    },
    SharedLatentAncestor {
        node: String,
        other: String,
        latent: String,
    },
}

impl fmt::Display for ComplianceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ForbiddenAncestry { cause, effect } => {
                write!(f, "forbidden ancestry: {cause} is an ancestor of {effect}")
            }
            Self::ExogenousHasParent { node, parent } => {
                write!(f, "exogenous node {node} has parent {parent}")
            }
            Self::SharedLatentAncestor {
                node,
                other,
                latent,
            } => {
                write!(
                    f,
                    "exogenous node {node} shares latent ancestor {latent} with {other}"
                )
            }
        }
    }
}

/// Checks a graph against causal-order constraints. The empty report is
/// equivalent to compliance. Adding edges never removes a violation.
pub fn check_assumption_compliance(
    g: &DirectedGraph,
    c: &CausalOrderConstraints,
) -> Result<Vec<ComplianceViolation>> {
    for (s, t) in &c.forbidden {
        g.index_of(s)?;
        g.index_of(t)?;
    }
    let mut violations = Vec::new();
    for (s, t) in &c.forbidden {
        let anc = g.ancestors(t)?;
        if anc.contains(s) {
            violations.push(ComplianceViolation::ForbiddenAncestry {
                cause: s.clone(),
                effect: t.clone(),
            });
        }
    }
    for node in &c.exogenous {
        let idx = g.index_of(node)?;
        for &p in g.parents_of(idx) {
            violations.push(ComplianceViolation::ExogenousHasParent {
                node: node.clone(),
                parent: g.label(p).to_owned(),
            });
        }
        let latent_ancestors: BTreeSet<String> = g
            .ancestors(node)?
            .into_iter()
            .filter(|l| g.kind(l).map(|k| k == NodeKind::Latent).unwrap_or(false))
            .collect();
        if latent_ancestors.is_empty() {
            continue;
        }
        for other in g.labels() {
            if other == node {
                continue;
            }
            let anc = g.ancestors(other)?;
            for latent in &latent_ancestors {
                if anc.contains(latent) {
                    violations.push(ComplianceViolation::SharedLatentAncestor {
                        node: node.clone(),
                        other: other.clone(),
                        latent: latent.clone(),
                    });
                }
            }
        }
    }
    Ok(violations)
}

/// The Bell scenario graph: settings X, Y; outcomes A, B; latent common
/// cause L.
pub fn bell_dag() -> DirectedGraph {
    DirectedGraph::build(
        &[
            ("X", NodeKind::Observed),
            ("Y", NodeKind::Observed),
            ("A", NodeKind::Observed),
            ("B", NodeKind::Observed),
            ("L", NodeKind::Latent),
        ],
        &[("X", "A"), ("L", "A"), ("L", "B"), ("Y", "B")],
    )
    .expect("static graph")
}

/// The minimal Wigner's-friend graph: the Bell graph plus the friend's
/// outcome C, which is caused by L and causes A.
pub fn lf_dag() -> DirectedGraph {
    DirectedGraph::build(
        &[
            ("X", NodeKind::Observed),
            ("Y", NodeKind::Observed),
            ("A", NodeKind::Observed),
            ("B", NodeKind::Observed),
            ("C", NodeKind::Observed),
            ("L", NodeKind::Latent),
        ],
        &[
            ("X", "A"),
            ("C", "A"),
            ("L", "A"),
            ("L", "C"),
            ("L", "B"),
            ("Y", "B"),
        ],
    )
    .expect("static graph")
}

/// Constraints of the spacelike-separated minimal scenario: neither setting
/// may cause the other side, and settings are exogenous.
pub fn minimal_lf_constraints() -> CausalOrderConstraints {
    CausalOrderConstraints {
        forbidden: vec![
            ("X".into(), "B".into()),
            ("X".into(), "C".into()),
            ("X".into(), "Y".into()),
            ("Y".into(), "A".into()),
            ("Y".into(), "C".into()),
            ("Y".into(), "X".into()),
        ],
        exogenous: vec!["X".into(), "Y".into()],
    }
}

/// Four-node cycle A -> B -> C -> D -> A (all observed).
pub fn four_cycle_graph() -> DirectedGraph {
    DirectedGraph::build(
        &[
            ("A", NodeKind::Observed),
            ("B", NodeKind::Observed),
            ("C", NodeKind::Observed),
            ("D", NodeKind::Observed),
        ],
        &[("D", "A"), ("A", "B"), ("B", "C"), ("C", "D")],
    )
    .expect("static graph")
}

/// Two-node cycle A <-> B with exogenous inputs C -> A and D -> B.
pub fn two_cycle_graph() -> DirectedGraph {
    DirectedGraph::build(
        &[
            ("A", NodeKind::Observed),
            ("B", NodeKind::Observed),
            ("C", NodeKind::Observed),
            ("D", NodeKind::Observed),
        ],
        &[("A", "B"), ("B", "A"), ("C", "A"), ("D", "B")],
    )
    .expect("static graph")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn builds_bell_and_lf_graphs() {
        let bell = bell_dag();
        assert_eq!(bell.node_count(), 5);
        assert!(bell.is_acyclic());
        let lf = lf_dag();
        assert_eq!(lf.node_count(), 6);
        assert!(lf.is_acyclic());
    }

    #[test]
    fn rejects_bad_construction() {
        let err = DirectedGraph::build(
            &[("A", NodeKind::Observed), ("A", NodeKind::Latent)],
            &[] as &[(&str, &str)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel(_)));

        let err = DirectedGraph::build(&[("A", NodeKind::Observed)], &[("A", "B")]).unwrap_err();
        assert!(matches!(err, Error::DanglingEndpoint(_)));

        let err = DirectedGraph::build(&[("A", NodeKind::Observed)], &[("A", "A")]).unwrap_err();
        assert!(matches!(err, Error::SelfLoop(_)));
    }

    #[test]
    fn ancestors_on_bell_and_lf() {
        let bell = bell_dag();
        assert_eq!(bell.ancestors("A").unwrap(), set(&["X", "L"]));
        let lf = lf_dag();
        assert_eq!(lf.ancestors("A").unwrap(), set(&["X", "C", "L"]));
        assert!(matches!(lf.ancestors("Z"), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn ancestors_on_two_cycle_includes_self() {
        // Transitive closure by hand on the 4-node graph with the A<->B cycle:
        // parents(A) = {B, C}; parents(B) = {A, D}; so the closure from A is
        // {A, B, C, D}, with A included because A -> B -> A is a cycle.
        let g = two_cycle_graph();
        assert_eq!(g.ancestors("A").unwrap(), set(&["A", "B", "C", "D"]));
        assert_eq!(g.descendants("C").unwrap(), set(&["A", "B"]));
    }

    #[test]
    fn scc_partitions() {
        let bell = bell_dag();
        let comps = bell.strongly_connected_components();
        assert_eq!(comps.len(), 5);
        assert!(comps.iter().all(|c| c.len() == 1));

        // Every node reaches every other around the 4-cycle.
        let ring = four_cycle_graph();
        let comps = ring.strongly_connected_components();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].len(), 4);
        assert!(!ring.is_acyclic());

        // Only A and B are mutually reachable.
        let two = two_cycle_graph();
        let mut comps = two.strongly_connected_components();
        comps.sort();
        assert_eq!(
            comps,
            vec![
                set(&["A", "B"]).into_iter().collect::<Vec<_>>(),
                vec!["C".to_string()],
                vec!["D".to_string()]
            ]
        );
    }

    #[test]
    fn empty_graph_is_acyclic() {
        let g = DirectedGraph::build(&[] as &[(&str, NodeKind)], &[] as &[(&str, &str)]).unwrap();
        assert!(g.is_acyclic());
        assert_eq!(g.strongly_connected_components().len(), 0);
    }

    #[test]
    fn scc_matches_mutual_ancestry() {
        // Two nodes share a component iff each is an ancestor of the other.
        for g in [bell_dag(), lf_dag(), four_cycle_graph(), two_cycle_graph()] {
            let (ids, _) = g.scc_ids();
            for i in 0..g.node_count() {
                for j in 0..g.node_count() {
                    if i == j {
                        continue;
                    }
                    let li = g.label(i).to_owned();
                    let lj = g.label(j).to_owned();
                    let mutual = g.ancestors(&li).unwrap().contains(&lj)
                        && g.ancestors(&lj).unwrap().contains(&li);
                    assert_eq!(ids[i] == ids[j], mutual, "{li} vs {lj}");
                }
            }
        }
    }

    #[test]
    fn ancestor_descendant_duality() {
        for g in [bell_dag(), lf_dag(), four_cycle_graph(), two_cycle_graph()] {
            for n in g.labels() {
                for m in g.labels() {
                    let n_anc_of_m = g.ancestors(m).unwrap().contains(n);
                    let m_desc_of_n = g.descendants(n).unwrap().contains(m);
                    assert_eq!(n_anc_of_m, m_desc_of_n);
                }
            }
        }
    }

    #[test]
    fn compliance_on_minimal_lf() {
        let lf = lf_dag();
        let constraints = minimal_lf_constraints();
        assert!(check_assumption_compliance(&lf, &constraints)
            .unwrap()
            .is_empty());

        // Adding X -> B produces the forbidden-ancestry violation.
        let mut edges = lf.edges();
        edges.push(("X".into(), "B".into()));
        let nodes: Vec<(String, NodeKind)> = lf
            .labels()
            .iter()
            .map(|l| (l.clone(), g_kind(&lf, l)))
            .collect();
        let bad = DirectedGraph::build(&nodes, &edges).unwrap();
        let report = check_assumption_compliance(&bad, &constraints).unwrap();
        assert!(report.iter().any(|v| matches!(
            v,
            ComplianceViolation::ForbiddenAncestry { cause, effect } if cause == "X" && effect == "B"
        )));

        // L -> X on the Bell graph: exogenous X gains a parent.
        let bell = bell_dag();
        let mut edges = bell.edges();
        edges.push(("L".into(), "X".into()));
        let nodes: Vec<(String, NodeKind)> = bell
            .labels()
            .iter()
            .map(|l| (l.clone(), g_kind(&bell, l)))
            .collect();
        let bad = DirectedGraph::build(&nodes, &edges).unwrap();
        let report = check_assumption_compliance(
            &bad,
            &CausalOrderConstraints {
                forbidden: vec![],
                exogenous: vec!["X".into()],
            },
        )
        .unwrap();
        assert!(report.iter().any(|v| matches!(
            v,
            ComplianceViolation::ExogenousHasParent { node, .. } if node == "X"
        )));
    }

    #[test]
    fn compliance_is_monotone_under_edge_addition() {
        let lf = lf_dag();
        let constraints = minimal_lf_constraints();
        let nodes: Vec<(String, NodeKind)> = lf
            .labels()
            .iter()
            .map(|l| (l.clone(), g_kind(&lf, l)))
            .collect();
        let base_edges = lf.edges();
        let all_pairs: Vec<(String, String)> = lf
            .labels()
            .iter()
            .flat_map(|a| lf.labels().iter().map(move |b| (a.clone(), b.clone())))
            .filter(|(a, b)| a != b)
            .collect();
        for extra in &all_pairs {
            let mut edges = base_edges.clone();
            edges.push(extra.clone());
            let g1 = DirectedGraph::build(&nodes, &edges).unwrap();
            let v1 = check_assumption_compliance(&g1, &constraints).unwrap();
            for extra2 in &all_pairs {
                let mut edges2 = edges.clone();
                edges2.push(extra2.clone());
                let g2 = DirectedGraph::build(&nodes, &edges2).unwrap();
                let v2 = check_assumption_compliance(&g2, &constraints).unwrap();
                for v in &v1 {
                    assert!(v2.contains(v), "adding an edge removed violation {v:?}");
                }
            }
        }
    }

    fn g_kind(g: &DirectedGraph, l: &str) -> NodeKind {
        g.kind(l).unwrap()
    }
}
