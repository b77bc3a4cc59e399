//! Path blocking, d-separation, σ-separation, exhaustive enumeration of
//! separation statements, and compositional closure.
//!
//! Paths are simple (no repeated node), with every step tagged by its
//! orientation; on cyclic graphs both `A -> B` and `B -> A` may exist, in
//! which case the same node sequence yields distinct paths. σ-blocking
//! differs from d-blocking only at conditioned chain/fork nodes: such a node
//! blocks only if a path-adjacent edge leaving it exits the node's strongly
//! connected component, so the two criteria agree on acyclic graphs.

use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeKind};
use std::collections::BTreeSet;
use std::fmt;

/// Graphical separation criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Criterion {
    D,
    Sigma,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::D => write!(f, "d"),
            Criterion::Sigma => write!(f, "sigma"),
        }
    }
}

/// Orientation of one path step relative to the traversal direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepDir {
    /// The edge points along the traversal: `nodes[i] -> nodes[i+1]`.
    Forward,
    /// The edge points against the traversal: `nodes[i] <- nodes[i+1]`.
    Backward,
}

/// A simple path: `nodes[i]` connects to `nodes[i+1]` via an edge oriented
/// as `steps[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<String>,
    pub steps: Vec<StepDir>,
}

impl Path {
    fn validate(&self, g: &DirectedGraph) -> Result<Vec<usize>> {
        if self.nodes.len() < 2 || self.steps.len() + 1 != self.nodes.len() {
            return Err(Error::InvalidPath("length mismatch".into()));
        }
        let mut idx = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            idx.push(g.index_of(n)?);
        }
        let mut seen = BTreeSet::new();
        for &i in &idx {
            if !seen.insert(i) {
                return Err(Error::InvalidPath(format!("node `{}` repeats", g.label(i))));
            }
        }
        for (k, step) in self.steps.iter().enumerate() {
            let ok = match step {
                StepDir::Forward => g.has_edge(idx[k], idx[k + 1]),
                StepDir::Backward => g.has_edge(idx[k + 1], idx[k]),
            };
            if !ok {
                return Err(Error::InvalidPath(format!(
                    "no edge for step {} -> {}",
                    self.nodes[k],
                    self.nodes[k + 1]
                )));
            }
        }
        Ok(idx)
    }
}

/// A separation statement `left ⟂ right | given` under a criterion.
/// Orientation is canonical: the lexicographically smaller side is stored on
/// the left, so symmetric duplicates compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeparationStatement {
    pub left: BTreeSet<String>,
    pub right: BTreeSet<String>,
    pub given: BTreeSet<String>,
    pub criterion: Criterion,
}

impl SeparationStatement {
    pub fn new<I, J, K>(left: I, right: J, given: K, criterion: Criterion) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<String>,
        J: IntoIterator,
        J::Item: Into<String>,
        K: IntoIterator,
        K::Item: Into<String>,
    {
        let left: BTreeSet<String> = left.into_iter().map(Into::into).collect();
        let right: BTreeSet<String> = right.into_iter().map(Into::into).collect();
        let given: BTreeSet<String> = given.into_iter().map(Into::into).collect();
        if left.is_empty() || right.is_empty() {
            return Err(Error::BadStatement("U and V must be nonempty".into()));
        }
        for x in &left {
            if right.contains(x) || given.contains(x) {
                return Err(Error::BadStatement(format!("`{x}` appears on two sides")));
            }
        }
        for x in &right {
            if given.contains(x) {
                return Err(Error::BadStatement(format!("`{x}` appears on two sides")));
            }
        }
        let (left, right) = if left <= right {
            (left, right)
        } else {
            (right, left)
        };
        Ok(Self {
            left,
            right,
            given,
            criterion,
        })
    }

    /// Serialized form: `U | V | W` with comma-separated labels.
    pub fn to_text(&self) -> String {
        let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(",");
        format!(
            "{} | {} | {}",
            join(&self.left),
            join(&self.right),
            join(&self.given)
        )
    }

    /// Parses `U | V | W` (W may be empty).
    pub fn parse(text: &str, criterion: Criterion) -> Result<Self> {
        let parts: Vec<&str> = text.split('|').collect();
        if parts.len() != 2 && parts.len() != 3 {
            return Err(Error::BadStatement(format!(
                "expected `U | V | W`, got `{text}`"
            )));
        }
        let split = |s: &str| -> Vec<String> {
            s.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(str::to_owned)
                .collect()
        };
        let w = if parts.len() == 3 {
            split(parts[2])
        } else {
            Vec::new()
        };
        Self::new(split(parts[0]), split(parts[1]), w, criterion)
    }
}

impl fmt::Display for SeparationStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.to_text(), self.criterion)
    }
}

/// Precomputed blocking context for one graph: SCC ids plus descendant sets.
struct Blocker<'g> {
    g: &'g DirectedGraph,
    scc: Vec<usize>,
    /// Descendants per node as bitmask, excluding the node itself unless it
    /// lies on a cycle through itself.
    desc: Vec<u64>,
}

impl<'g> Blocker<'g> {
    fn new(g: &'g DirectedGraph) -> Self {
        assert!(g.node_count() <= 64, "separation engine caps at 64 nodes");
        let (scc, _) = g.scc_ids();
        let desc = (0..g.node_count())
            .map(|i| {
                g.descendant_indices(i)
                    .into_iter()
                    .fold(0u64, |m, j| m | (1 << j))
            })
            .collect();
        Self { g, scc, desc }
    }

    /// Blocking check on an internal path given as node indices + step dirs.
    fn blocked(
        &self,
        nodes: &[usize],
        steps: &[StepDir],
        w_mask: u64,
        criterion: Criterion,
    ) -> bool {
        for i in 1..nodes.len() - 1 {
            let v = nodes[i];
            let into_prev = steps[i - 1]; // orientation between nodes[i-1] and v
            let into_next = steps[i]; // orientation between v and nodes[i+1]
            let v_bit = 1u64 << v;
            let collider = into_prev == StepDir::Forward && into_next == StepDir::Backward;
            if collider {
                if w_mask & v_bit == 0 && w_mask & self.desc[v] == 0 {
                    return true;
                }
            } else if w_mask & v_bit != 0 {
                match criterion {
                    Criterion::D => return true,
                    Criterion::Sigma => {
                        // Outgoing path-adjacent edges of v; the node blocks
                        // only if one of them leaves v's SCC.
                        let mut exits = false;
                        if into_next == StepDir::Forward {
                            exits |= self.scc[nodes[i + 1]] != self.scc[v];
                        }
                        if into_prev == StepDir::Backward {
                            exits |= self.scc[nodes[i - 1]] != self.scc[v];
                        }
                        if exits {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    /// DFS over all simple paths from `u` to `v`; returns true iff every path
    /// is blocked by `w_mask`.
    fn all_paths_blocked(&self, u: usize, v: usize, w_mask: u64, criterion: Criterion) -> bool {
        let mut nodes = vec![u];
        let mut steps = Vec::new();
        self.dfs(u, v, &mut nodes, &mut steps, 1u64 << u, w_mask, criterion)
    }

    fn dfs(
        &self,
        cur: usize,
        target: usize,
        nodes: &mut Vec<usize>,
        steps: &mut Vec<StepDir>,
        visited: u64,
        w_mask: u64,
        criterion: Criterion,
    ) -> bool {
        for (next, dir) in self
            .g
            .children_of(cur)
            .iter()
            .map(|&n| (n, StepDir::Forward))
            .chain(
                self.g
                    .parents_of(cur)
                    .iter()
                    .map(|&n| (n, StepDir::Backward)),
            )
        {
            if visited & (1 << next) != 0 {
                continue;
            }
            nodes.push(next);
            steps.push(dir);
            let ok = if next == target {
                self.blocked(nodes, steps, w_mask, criterion)
            } else {
                self.dfs(
                    next,
                    target,
                    nodes,
                    steps,
                    visited | (1 << next),
                    w_mask,
                    criterion,
                )
            };
            nodes.pop();
            steps.pop();
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Whether a single path is blocked by the conditioning set `w`.
pub fn path_blocked(
    g: &DirectedGraph,
    path: &Path,
    w: &BTreeSet<String>,
    criterion: Criterion,
) -> Result<bool> {
    let idx = path.validate(g)?;
    let mut w_mask = 0u64;
    for label in w {
        w_mask |= 1 << g.index_of(label)?;
    }
    let blocker = Blocker::new(g);
    Ok(blocker.blocked(&idx, &path.steps, w_mask, criterion))
}

fn mask_of(g: &DirectedGraph, labels: &BTreeSet<String>) -> Result<u64> {
    let mut m = 0u64;
    for l in labels {
        m |= 1 << g.index_of(l)?;
    }
    Ok(m)
}

/// Graph-level setwise separation. Latent nodes are permitted in the query;
/// use [`separated`] for the observed-variable statement form.
pub fn separated_nodes(
    g: &DirectedGraph,
    u: &BTreeSet<String>,
    v: &BTreeSet<String>,
    w: &BTreeSet<String>,
    criterion: Criterion,
) -> Result<bool> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::BadStatement("U and V must be nonempty".into()));
    }
    for x in u {
        if v.contains(x) || w.contains(x) {
            return Err(Error::BadStatement(format!("`{x}` appears on two sides")));
        }
    }
    for x in v {
        if w.contains(x) {
            return Err(Error::BadStatement(format!("`{x}` appears on two sides")));
        }
    }
    let w_mask = mask_of(g, w)?;
    let blocker = Blocker::new(g);
    for a in u {
        let ai = g.index_of(a)?;
        for b in v {
            let bi = g.index_of(b)?;
            if !blocker.all_paths_blocked(ai, bi, w_mask, criterion) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Setwise separation among observed nodes. Latent nodes may appear inside
/// paths but not in `u`, `v`, or `w`.
pub fn separated(
    g: &DirectedGraph,
    u: &BTreeSet<String>,
    v: &BTreeSet<String>,
    w: &BTreeSet<String>,
    criterion: Criterion,
) -> Result<bool> {
    for label in u.iter().chain(v).chain(w) {
        if g.kind(label)? == NodeKind::Latent {
            return Err(Error::LatentInQuery(label.clone()));
        }
    }
    separated_nodes(g, u, v, w, criterion)
}

fn subsets_of_size(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(
        items: &[usize],
        size: usize,
        start: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, size, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, size, 0, &mut cur, &mut out);
    out
}

/// Enumerates every true separation statement among observed nodes with
/// conditioning sets up to `max_conditioning_size` (defaults to all of them),
/// including the full setwise closure of the singleton-pair relation.
pub fn enumerate_separations(
    g: &DirectedGraph,
    max_conditioning_size: Option<usize>,
    criterion: Criterion,
) -> Vec<SeparationStatement> {
    let observed: Vec<usize> = (0..g.node_count())
        .filter(|&i| g.kind_by_index(i) == NodeKind::Observed)
        .collect();
    if observed.len() < 2 {
        return Vec::new();
    }
    let bound = max_conditioning_size
        .unwrap_or_else(|| observed.len().saturating_sub(2))
        .min(observed.len().saturating_sub(2));
    let blocker = Blocker::new(g);
    let mut out = Vec::new();
    for w_size in 0..=bound {
        for w in subsets_of_size(&observed, w_size) {
            let w_mask = w.iter().fold(0u64, |m, &i| m | (1 << i));
            let rest: Vec<usize> = observed
                .iter()
                .copied()
                .filter(|i| !w.contains(i))
                .collect();
            if rest.len() < 2 {
                continue;
            }
            // Pairwise separation matrix under this conditioning set.
            let k = rest.len();
            let mut sep = vec![vec![false; k]; k];
            for i in 0..k {
                for j in (i + 1)..k {
                    let s = blocker.all_paths_blocked(rest[i], rest[j], w_mask, criterion);
                    sep[i][j] = s;
                    sep[j][i] = s;
                }
            }
            // Setwise closure: all (U, V) with every cross pair separated.
            let w_labels: BTreeSet<String> = w.iter().map(|&i| g.label(i).to_owned()).collect();
            let total = 1usize << k;
            for u_bits in 1..total {
                for v_bits in 1..total {
                    if u_bits & v_bits != 0 {
                        continue;
                    }
                    // Canonical orientation: keep u_bits < v_bits to skip mirrors.
                    if u_bits > v_bits {
                        continue;
                    }
                    let mut all = true;
                    'outer: for i in 0..k {
                        if u_bits & (1 << i) == 0 {
                            continue;
                        }
                        for j in 0..k {
                            if v_bits & (1 << j) != 0 && !sep[i][j] {
                                all = false;
                                break 'outer;
                            }
                        }
                    }
                    if !all {
                        continue;
                    }
                    let label_set = |bits: usize| -> BTreeSet<String> {
                        (0..k)
                            .filter(|i| bits & (1 << i) != 0)
                            .map(|i| g.label(rest[i]).to_owned())
                            .collect()
                    };
                    if let Ok(st) = SeparationStatement::new(
                        label_set(u_bits),
                        label_set(v_bits),
                        w_labels.clone(),
                        criterion,
                    ) {
                        out.push(st);
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Smallest superset of `statements` closed under composition
/// `(U ⟂ W | Z) ∧ (V ⟂ W | Z) ⟹ (U ∪ V ⟂ W | Z)` and symmetry.
pub fn compose_closure(statements: &[SeparationStatement]) -> Result<Vec<SeparationStatement>> {
    if statements.is_empty() {
        return Ok(Vec::new());
    }
    let criterion = statements[0].criterion;
    if statements.iter().any(|s| s.criterion != criterion) {
        return Err(Error::MixedCriteria);
    }
    let mut set: BTreeSet<SeparationStatement> = statements.iter().cloned().collect();
    loop {
        let mut added = Vec::new();
        let items: Vec<SeparationStatement> = set.iter().cloned().collect();
        for a in &items {
            for b in &items {
                if a.given != b.given {
                    continue;
                }
                // Oriented views (L ⟂ R | Z) of each canonical statement.
                let views_a = [(&a.left, &a.right), (&a.right, &a.left)];
                let views_b = [(&b.left, &b.right), (&b.right, &b.left)];
                for (la, ra) in views_a {
                    for (lb, rb) in views_b {
                        if ra != rb {
                            continue;
                        }
                        let merged: BTreeSet<String> = la.union(lb).cloned().collect();
                        if merged.intersection(ra).next().is_some()
                            || merged.intersection(&a.given).next().is_some()
                        {
                            continue;
                        }
                        if let Ok(st) =
                            SeparationStatement::new(merged, ra.clone(), a.given.clone(), criterion)
                        {
                            if !set.contains(&st) {
                                added.push(st);
                            }
                        }
                    }
                }
            }
        }
        if added.is_empty() {
            break;
        }
        set.extend(added);
    }
    Ok(set.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bell_dag, four_cycle_graph, lf_dag, two_cycle_graph};

    fn s(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn fork_path_open_without_conditioning() {
        let bell = bell_dag();
        let p = Path {
            nodes: vec!["A".into(), "L".into(), "B".into()],
            steps: vec![StepDir::Backward, StepDir::Forward],
        };
        assert!(!path_blocked(&bell, &p, &s(&[]), Criterion::D).unwrap());
        // A and B are not d-separated by the empty set at the observed level.
        assert!(!separated(&bell, &s(&["A"]), &s(&["B"]), &s(&[]), Criterion::D).unwrap());
    }

    #[test]
    fn collider_blocks_on_lf_graph() {
        let lf = lf_dag();
        // Y -> B <- L -> C: collider on childless B, B not conditioned.
        let p = Path {
            nodes: vec!["Y".into(), "B".into(), "L".into(), "C".into()],
            steps: vec![StepDir::Forward, StepDir::Backward, StepDir::Forward],
        };
        assert!(path_blocked(&lf, &p, &s(&["X"]), Criterion::D).unwrap());
    }

    #[test]
    fn invalid_paths_rejected() {
        let bell = bell_dag();
        let p = Path {
            nodes: vec!["A".into(), "B".into()],
            steps: vec![StepDir::Forward],
        };
        assert!(matches!(
            path_blocked(&bell, &p, &s(&[]), Criterion::D),
            Err(Error::InvalidPath(_))
        ));
    }

    #[test]
    fn lf_graph_key_separations() {
        let lf = lf_dag();
        assert!(separated(&lf, &s(&["A", "C"]), &s(&["Y"]), &s(&["X"]), Criterion::D).unwrap());
        assert!(separated(&lf, &s(&["B", "C"]), &s(&["X"]), &s(&["Y"]), Criterion::D).unwrap());
        assert!(separated(&lf, &s(&["X"]), &s(&["Y"]), &s(&[]), Criterion::D).unwrap());
        // A and B share the latent common cause: not separated.
        assert!(!separated(&lf, &s(&["A"]), &s(&["B"]), &s(&["X", "Y"]), Criterion::D).unwrap());
    }

    #[test]
    fn latent_nodes_rejected_in_observed_queries() {
        let bell = bell_dag();
        assert!(matches!(
            separated(&bell, &s(&["L"]), &s(&["X"]), &s(&[]), Criterion::D),
            Err(Error::LatentInQuery(_))
        ));
        // But graph-level queries may use them.
        assert!(
            separated_nodes(&bell, &s(&["L"]), &s(&["X", "Y"]), &s(&[]), Criterion::D).unwrap()
        );
        assert!(separated_nodes(
            &bell,
            &s(&["A", "X"]),
            &s(&["B", "Y"]),
            &s(&["L"]),
            Criterion::D
        )
        .unwrap());
    }

    #[test]
    fn two_cycle_c_and_d_are_d_separated() {
        // Every simple path between C and D passes a collider outside the
        // empty conditioning set.
        let g = two_cycle_graph();
        assert!(separated(&g, &s(&["C"]), &s(&["D"]), &s(&[]), Criterion::D).unwrap());
        assert!(separated(&g, &s(&["C"]), &s(&["D"]), &s(&[]), Criterion::Sigma).unwrap());
    }

    #[test]
    fn four_cycle_sigma_defeats_chain_blocking() {
        let g = four_cycle_graph();
        // d: both B..D paths pass through a conditioned chain node.
        assert!(separated(&g, &s(&["B"]), &s(&["D"]), &s(&["A", "C"]), Criterion::D).unwrap());
        // σ: the chain nodes stay inside the single SCC, so nothing blocks.
        assert!(!separated(
            &g,
            &s(&["B"]),
            &s(&["D"]),
            &s(&["A", "C"]),
            Criterion::Sigma
        )
        .unwrap());
    }

    #[test]
    fn enumerate_contains_expected_statements() {
        let lf = lf_dag();
        let stmts = enumerate_separations(&lf, Some(2), Criterion::D);
        for (u, v, w) in [
            (vec!["C"], vec!["Y"], vec!["X"]),
            (vec!["C"], vec!["X"], vec!["Y"]),
            (vec!["A"], vec!["Y"], vec!["X"]),
            (vec!["B"], vec!["X"], vec!["Y"]),
            (vec!["X"], vec!["Y"], vec![]),
            (vec!["A", "C"], vec!["Y"], vec!["X"]),
            (vec!["B", "C"], vec!["X"], vec!["Y"]),
        ] {
            let st =
                SeparationStatement::new(u.clone(), v.clone(), w.clone(), Criterion::D).unwrap();
            assert!(stmts.contains(&st), "missing {st}");
        }
    }

    #[test]
    fn enumerate_bell_bound_zero() {
        let bell = bell_dag();
        let stmts = enumerate_separations(&bell, Some(0), Criterion::D);
        let ay = SeparationStatement::new(vec!["A"], vec!["Y"], Vec::<String>::new(), Criterion::D)
            .unwrap();
        let xy = SeparationStatement::new(vec!["X"], vec!["Y"], Vec::<String>::new(), Criterion::D)
            .unwrap();
        assert!(stmts.contains(&ay));
        assert!(stmts.contains(&xy));
    }

    #[test]
    fn enumerate_trivial_graphs() {
        let single =
            DirectedGraph::build(&[("A", NodeKind::Observed)], &[] as &[(&str, &str)]).unwrap();
        assert!(enumerate_separations(&single, None, Criterion::D).is_empty());
    }

    #[test]
    fn closure_reproduces_derivation_steps() {
        // Conditional premises compose into the joint statements.
        let premises = vec![
            SeparationStatement::new(vec!["B"], vec!["X"], vec!["Y"], Criterion::D).unwrap(),
            SeparationStatement::new(vec!["C"], vec!["X"], vec!["Y"], Criterion::D).unwrap(),
            SeparationStatement::new(vec!["A"], vec!["Y"], vec!["X"], Criterion::D).unwrap(),
            SeparationStatement::new(vec!["C"], vec!["Y"], vec!["X"], Criterion::D).unwrap(),
        ];
        let closure = compose_closure(&premises).unwrap();
        let bc_x =
            SeparationStatement::new(vec!["B", "C"], vec!["X"], vec!["Y"], Criterion::D).unwrap();
        let ac_y =
            SeparationStatement::new(vec!["A", "C"], vec!["Y"], vec!["X"], Criterion::D).unwrap();
        assert!(closure.contains(&bc_x));
        assert!(closure.contains(&ac_y));

        // Unconditional premises compose across the symmetry of X ⟂ Y.
        let premises = vec![
            SeparationStatement::new(vec!["B"], vec!["X"], Vec::<String>::new(), Criterion::D)
                .unwrap(),
            SeparationStatement::new(vec!["C"], vec!["X"], Vec::<String>::new(), Criterion::D)
                .unwrap(),
            SeparationStatement::new(vec!["A"], vec!["Y"], Vec::<String>::new(), Criterion::D)
                .unwrap(),
            SeparationStatement::new(vec!["C"], vec!["Y"], Vec::<String>::new(), Criterion::D)
                .unwrap(),
            SeparationStatement::new(vec!["X"], vec!["Y"], Vec::<String>::new(), Criterion::D)
                .unwrap(),
        ];
        let closure = compose_closure(&premises).unwrap();
        let bcy_x = SeparationStatement::new(
            vec!["B", "C", "Y"],
            vec!["X"],
            Vec::<String>::new(),
            Criterion::D,
        )
        .unwrap();
        let acx_y = SeparationStatement::new(
            vec!["A", "C", "X"],
            vec!["Y"],
            Vec::<String>::new(),
            Criterion::D,
        )
        .unwrap();
        assert!(closure.contains(&bcy_x));
        assert!(closure.contains(&acx_y));
    }

    #[test]
    fn closure_empty_and_mixed() {
        assert!(compose_closure(&[]).unwrap().is_empty());
        let a = SeparationStatement::new(vec!["A"], vec!["B"], Vec::<String>::new(), Criterion::D)
            .unwrap();
        let b =
            SeparationStatement::new(vec!["A"], vec!["B"], Vec::<String>::new(), Criterion::Sigma)
                .unwrap();
        assert!(matches!(
            compose_closure(&[a, b]),
            Err(Error::MixedCriteria)
        ));
    }

    #[test]
    fn statement_text_round_trip() {
        let st =
            SeparationStatement::new(vec!["A", "C"], vec!["Y"], vec!["X"], Criterion::D).unwrap();
        let text = st.to_text();
        let back = SeparationStatement::parse(&text, Criterion::D).unwrap();
        assert_eq!(st, back);
    }

    #[test]
    fn symmetry_of_separated() {
        let lf = lf_dag();
        for (u, v, w) in [
            (s(&["A"]), s(&["Y"]), s(&["X"])),
            (s(&["A", "C"]), s(&["Y"]), s(&["X"])),
            (s(&["A"]), s(&["B"]), s(&[])),
        ] {
            let uv = separated(&lf, &u, &v, &w, Criterion::D).unwrap();
            let vu = separated(&lf, &v, &u, &w, Criterion::D).unwrap();
            assert_eq!(uv, vu);
        }
    }
}
