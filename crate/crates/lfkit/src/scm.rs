//! Finite-domain structural causal models, cyclic ones included.
//!
//! A model assigns each endogenous variable one structural equation over its
//! parents and a private error term. Cyclic systems are solved by exhaustive
//! enumeration: for every error evaluation, the set of simultaneous
//! solutions is collected; evaluations with no solution are discarded and
//! the surviving weight renormalized.
//!
//! Conditioning enters *before* solving: the conditioned values are
//! substituted into the system and the solution set is computed under that
//! constraint. On cyclic graphs this matters — discarding happens relative
//! to the conditioning, and the conditioned distribution is not the Bayes
//! conditional of the unconditioned one. The regression targets fix this
//! reading: it is the procedure behind the reference counts pinned for
//! the two cyclic counterexamples.

use crate::dist::{ExactDist, VariableSpec};
use crate::error::{Error, Result};
use crate::graph::{DirectedGraph, NodeKind};
use crate::ratio::q;
use crate::separation::{enumerate_separations, Criterion, SeparationStatement};
use crate::Q;
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Enumeration guard: error space × endogenous space.
const SOLVE_GUARD: u128 = 1 << 24;

// ---------------------------------------------------------------------------
// Expression grammar: +, · (or *), ⊕ (or ^), integer constants, parentheses.
// ---------------------------------------------------------------------------

/// Structural-equation expression. `+` is integer addition, `·` integer
/// multiplication, `⊕` addition mod 2. Out-of-domain values simply never
/// match an in-domain assignment, so they invalidate the evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(String),
    Const(i64),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Result<i64> {
        Ok(match self {
            Expr::Var(v) => *env
                .get(v)
                .ok_or_else(|| Error::Equation(format!("unbound variable `{v}`")))?,
            Expr::Const(k) => *k,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Xor(a, b) => (a.eval(env)? + b.eval(env)?).rem_euclid(2),
        })
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Const(_) => {}
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Xor(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Const(k) => write!(f, "{k}"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Xor(a, b) => write!(f, "({a} ⊕ {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Int(i64),
    Plus,
    Star,
    Xor,
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = s.chars().peekable();
    while let Some(&ch) = chars.peek() {
        match ch {
            ' ' | '\t' => {
                chars.next();
            }
            '+' => {
                chars.next();
                out.push(Token::Plus);
            }
            '*' | '·' => {
                chars.next();
                out.push(Token::Star);
            }
            '⊕' | '^' => {
                chars.next();
                out.push(Token::Xor);
            }
            '(' => {
                chars.next();
                out.push(Token::Open);
            }
            ')' => {
                chars.next();
                out.push(Token::Close);
            }
            c if c.is_ascii_digit() => {
                let mut num = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_ascii_digit() {
                        num.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token::Int(
                    num.parse()
                        .map_err(|_| Error::Equation(format!("bad integer in `{s}`")))?,
                ));
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        ident.push(d);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token::Ident(ident));
            }
            other => return Err(Error::Equation(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += t.is_some() as usize;
        t
    }

    // expr := term (('+' | '⊕') term)*
    fn expr(&mut self) -> Result<Expr> {
        let mut left = self.term()?;
        while let Some(op) = self.peek().cloned() {
            match op {
                Token::Plus => {
                    self.next();
                    left = Expr::Add(Box::new(left), Box::new(self.term()?));
                }
                Token::Xor => {
                    self.next();
                    left = Expr::Xor(Box::new(left), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(left)
    }

    // term := factor ('·' factor)*
    fn term(&mut self) -> Result<Expr> {
        let mut left = self.factor()?;
        while matches!(self.peek(), Some(Token::Star)) {
            self.next();
            left = Expr::Mul(Box::new(left), Box::new(self.factor()?));
        }
        Ok(left)
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Ident(v)) => Ok(Expr::Var(v)),
            Some(Token::Int(k)) => Ok(Expr::Const(k)),
            Some(Token::Open) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token::Close) => Ok(inner),
                    _ => Err(Error::Equation("missing closing parenthesis".into())),
                }
            }
            other => Err(Error::Equation(format!("unexpected token {other:?}"))),
        }
    }
}

/// Parses the minimal arithmetic grammar.
pub fn parse_expression(s: &str) -> Result<Expr> {
    let tokens = tokenize(s)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(Error::Equation(format!("trailing input in `{s}`")));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Model.
// ---------------------------------------------------------------------------

/// An endogenous variable with its finite domain and structural equation.
#[derive(Debug, Clone)]
pub struct Endogenous {
    pub label: String,
    pub domain: Vec<i64>,
    pub equation: Expr,
}

/// An error term with its finite domain and rational prior.
#[derive(Debug, Clone)]
pub struct ErrorTerm {
    pub label: String,
    pub domain: Vec<i64>,
    pub prior: Vec<Q>,
}

impl ErrorTerm {
    pub fn uniform_binary(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            domain: vec![0, 1],
            prior: vec![q(1, 2), q(1, 2)],
        }
    }
}

/// A finite functional causal model.
#[derive(Debug, Clone)]
pub struct FunctionalModel {
    pub endogenous: Vec<Endogenous>,
    pub errors: Vec<ErrorTerm>,
}

impl FunctionalModel {
    pub fn new(endogenous: Vec<Endogenous>, errors: Vec<ErrorTerm>) -> Result<Self> {
        let endo_labels: BTreeSet<&str> = endogenous.iter().map(|e| e.label.as_str()).collect();
        let err_labels: BTreeSet<&str> = errors.iter().map(|e| e.label.as_str()).collect();
        if endo_labels.len() != endogenous.len() || err_labels.len() != errors.len() {
            return Err(Error::Equation("duplicate variable label".into()));
        }
        let mut err_use: BTreeMap<String, usize> = BTreeMap::new();
        for endo in &endogenous {
            for v in endo.equation.variables() {
                if endo_labels.contains(v.as_str()) {
                    if v == endo.label {
                        return Err(Error::Equation(format!(
                            "equation for `{}` references itself",
                            endo.label
                        )));
                    }
                } else if err_labels.contains(v.as_str()) {
                    *err_use.entry(v).or_insert(0) += 1;
                } else {
                    return Err(Error::Equation(format!(
                        "equation for `{}` references undeclared `{v}`",
                        endo.label
                    )));
                }
            }
        }
        if err_use.values().any(|&n| n > 1) {
            return Err(Error::Equation(
                "an error term feeds more than one equation".into(),
            ));
        }
        for e in &errors {
            if e.domain.len() != e.prior.len() {
                return Err(Error::Equation(format!(
                    "prior length mismatch for `{}`",
                    e.label
                )));
            }
            let total: Q = e.prior.iter().cloned().fold(Q::zero(), |a, b| a + b);
            if total != Q::one() {
                return Err(Error::Equation(format!(
                    "prior for `{}` does not sum to 1",
                    e.label
                )));
            }
        }
        Ok(Self { endogenous, errors })
    }

    /// The induced causal graph: endogenous variables only, with an edge
    /// from each equation's referenced endogenous variable to its target.
    /// Error terms are private and never appear.
    pub fn induced_graph(&self) -> DirectedGraph {
        let nodes: Vec<(String, NodeKind)> = self
            .endogenous
            .iter()
            .map(|e| (e.label.clone(), NodeKind::Observed))
            .collect();
        let endo_labels: BTreeSet<&str> =
            self.endogenous.iter().map(|e| e.label.as_str()).collect();
        let mut edges = Vec::new();
        for endo in &self.endogenous {
            for v in endo.equation.variables() {
                if endo_labels.contains(v.as_str()) {
                    edges.push((v, endo.label.clone()));
                }
            }
        }
        DirectedGraph::build(&nodes, &edges).expect("validated model")
    }

    fn space_size(&self, conditioning: &BTreeMap<String, i64>) -> u128 {
        let err: u128 = self.errors.iter().map(|e| e.domain.len() as u128).product();
        let endo: u128 = self
            .endogenous
            .iter()
            .filter(|e| !conditioning.contains_key(&e.label))
            .map(|e| e.domain.len() as u128)
            .product();
        err * endo
    }
}

/// The solution sets of one model under a conditioning constraint: one entry
/// per error evaluation, carrying every endogenous assignment (conditioned
/// values included) that satisfies all equations simultaneously.
#[derive(Debug, Clone)]
pub struct SolutionSet {
    pub evaluations: Vec<(BTreeMap<String, i64>, Vec<BTreeMap<String, i64>>)>,
}

impl SolutionSet {
    pub fn valid_count(&self) -> usize {
        self.evaluations
            .iter()
            .filter(|(_, sols)| !sols.is_empty())
            .count()
    }

    pub fn invalid_count(&self) -> usize {
        self.evaluations.len() - self.valid_count()
    }
}

fn product_assignments<'a>(
    vars: &'a [(String, Vec<i64>)],
) -> Box<dyn Iterator<Item = BTreeMap<String, i64>> + 'a> {
    let total: u128 = vars.iter().map(|(_, d)| d.len() as u128).product();
    Box::new((0..total).map(move |mut idx| {
        let mut out = BTreeMap::new();
        for (label, domain) in vars.iter().rev() {
            let d = domain.len() as u128;
            out.insert(label.clone(), domain[(idx % d) as usize]);
            idx /= d;
        }
        out
    }))
}

/// Solves the system under the conditioning: conditioned values are
/// substituted before solving and every equation is checked by
/// re-substitution.
pub fn solve(model: &FunctionalModel, conditioning: &BTreeMap<String, i64>) -> Result<SolutionSet> {
    for (k, v) in conditioning {
        let endo = model
            .endogenous
            .iter()
            .find(|e| e.label == *k)
            .ok_or_else(|| Error::UnknownVariable(k.clone()))?;
        if !endo.domain.contains(v) {
            return Err(Error::Equation(format!(
                "conditioned value {v} outside domain of `{k}`"
            )));
        }
    }
    if model.space_size(conditioning) > SOLVE_GUARD {
        return Err(Error::SizeGuard("model enumeration space too large".into()));
    }
    let err_vars: Vec<(String, Vec<i64>)> = model
        .errors
        .iter()
        .map(|e| (e.label.clone(), e.domain.clone()))
        .collect();
    let free_vars: Vec<(String, Vec<i64>)> = model
        .endogenous
        .iter()
        .filter(|e| !conditioning.contains_key(&e.label))
        .map(|e| (e.label.clone(), e.domain.clone()))
        .collect();
    let mut evaluations = Vec::new();
    for err_asgn in product_assignments(&err_vars) {
        let mut solutions = Vec::new();
        for free_asgn in product_assignments(&free_vars) {
            let mut env = err_asgn.clone();
            env.extend(conditioning.iter().map(|(k, v)| (k.clone(), *v)));
            env.extend(free_asgn.iter().map(|(k, v)| (k.clone(), *v)));
            let consistent = model.endogenous.iter().try_fold(true, |acc, endo| {
                Ok::<bool, Error>(acc && endo.equation.eval(&env)? == env[&endo.label])
            })?;
            if consistent {
                let full: BTreeMap<String, i64> = model
                    .endogenous
                    .iter()
                    .map(|e| (e.label.clone(), env[&e.label]))
                    .collect();
                solutions.push(full);
            }
        }
        evaluations.push((err_asgn, solutions));
    }
    Ok(SolutionSet { evaluations })
}

/// Distribution over the non-conditioned endogenous variables: each error
/// evaluation carries its prior weight, spread uniformly across its
/// solutions; evaluations with no conditioning-consistent solution are
/// discarded and the rest renormalized.
pub fn induced_distribution(
    model: &FunctionalModel,
    conditioning: &BTreeMap<String, i64>,
) -> Result<ExactDist> {
    let sols = solve(model, conditioning)?;
    let prior_of = |asgn: &BTreeMap<String, i64>| -> Q {
        let mut w = Q::one();
        for e in &model.errors {
            let idx = e
                .domain
                .iter()
                .position(|v| v == &asgn[&e.label])
                .expect("in-domain");
            w *= e.prior[idx].clone();
        }
        w
    };
    let mut free: Vec<&Endogenous> = model
        .endogenous
        .iter()
        .filter(|e| !conditioning.contains_key(&e.label))
        .collect();
    free.sort_by(|a, b| a.label.cmp(&b.label));
    if free.is_empty() {
        return Err(Error::Equation("all variables conditioned".into()));
    }
    let specs: Vec<VariableSpec> = free
        .iter()
        .map(|e| VariableSpec::new(e.label.clone(), e.domain.len()))
        .collect();
    let size: usize = specs.iter().map(|s| s.cardinality).product();
    let mut weights = vec![Q::zero(); size];
    let mut total = Q::zero();
    for (err_asgn, solutions) in &sols.evaluations {
        if solutions.is_empty() {
            continue;
        }
        let w = prior_of(err_asgn);
        let share = w.clone() / Q::from_integer((solutions.len() as i64).into());
        total += w;
        for sol in solutions {
            let mut idx = 0usize;
            for (spec, endo) in specs.iter().zip(&free) {
                let pos = endo
                    .domain
                    .iter()
                    .position(|v| v == &sol[&endo.label])
                    .expect("solution in domain");
                idx = idx * spec.cardinality + pos;
            }
            weights[idx] += share.clone();
        }
    }
    if total.is_zero() {
        return Err(Error::EmptySupport);
    }
    for w in weights.iter_mut() {
        *w = w.clone() / total.clone();
    }
    ExactDist::new(specs, Vec::new(), weights)
}

/// One row of the separation-versus-independence comparison.
#[derive(Debug, Clone)]
pub struct CiSeparationRow {
    pub statement: SeparationStatement,
    pub ci_holds: bool,
    /// Separation holds by construction; a row is a rule violation when the
    /// independence fails.
    pub violation: bool,
}

/// Report pairing every separation statement of the induced graph with the
/// exact independence verdict on the induced distribution.
#[derive(Debug, Clone)]
pub struct CiSeparationReport {
    pub criterion: Criterion,
    pub rows: Vec<CiSeparationRow>,
}

impl CiSeparationReport {
    pub fn violations(&self) -> Vec<&CiSeparationRow> {
        self.rows.iter().filter(|r| r.violation).collect()
    }
}

pub fn ci_vs_separation_report(
    model: &FunctionalModel,
    criterion: Criterion,
) -> Result<CiSeparationReport> {
    let graph = model.induced_graph();
    let joint = induced_distribution(model, &BTreeMap::new())?;
    let statements = enumerate_separations(&graph, None, criterion);
    let mut rows = Vec::with_capacity(statements.len());
    for st in statements {
        let u: Vec<&str> = st.left.iter().map(|s| s.as_str()).collect();
        let v: Vec<&str> = st.right.iter().map(|s| s.as_str()).collect();
        let w: Vec<&str> = st.given.iter().map(|s| s.as_str()).collect();
        let verdict = joint.ci_holds(
            &u,
            &v,
            &w,
            &crate::dist::SettingsPolicy::uniform(),
            Q::zero(),
        )?;
        rows.push(CiSeparationRow {
            violation: !verdict.holds,
            ci_holds: verdict.holds,
            statement: st,
        });
    }
    Ok(CiSeparationReport { criterion, rows })
}

// ---------------------------------------------------------------------------
// Classical factorized models on acyclic graphs.
// ---------------------------------------------------------------------------

/// A classical causal network: one conditional probability table per node of
/// an acyclic graph. The joint is the product of the table rows.
#[derive(Debug, Clone)]
pub struct BayesNet {
    pub graph: DirectedGraph,
    /// Cardinality per node label.
    pub cardinalities: BTreeMap<String, usize>,
    /// Per node: rows indexed parent-assignment-major (parents in sorted
    /// label order), then the node's value.
    pub cpts: BTreeMap<String, Vec<Q>>,
}

impl BayesNet {
    /// The exact joint distribution over all nodes (latent included), with
    /// variables in sorted label order. The classical factorization
    /// P = ∏ P(n | pa(n)) is applied literally.
    pub fn joint(&self) -> Result<ExactDist> {
        if !self.graph.is_acyclic() {
            return Err(Error::Equation(
                "classical factorization needs an acyclic graph".into(),
            ));
        }
        let mut labels: Vec<String> = self.graph.labels().to_vec();
        labels.sort();
        let specs: Vec<VariableSpec> = labels
            .iter()
            .map(|l| {
                self.cardinalities
                    .get(l)
                    .map(|&c| VariableSpec::new(l.clone(), c))
                    .ok_or_else(|| Error::UnknownVariable(l.clone()))
            })
            .collect::<Result<_>>()?;
        let pos_of: BTreeMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        // Sorted parent labels per node.
        let parents_of: BTreeMap<String, Vec<String>> = labels
            .iter()
            .map(|l| {
                let idx = self.graph.index_of(l).expect("own label");
                let mut ps: Vec<String> = self
                    .graph
                    .parents_of(idx)
                    .iter()
                    .map(|&p| self.graph.label(p).to_owned())
                    .collect();
                ps.sort();
                (l.clone(), ps)
            })
            .collect();
        let size: usize = specs.iter().map(|s| s.cardinality).product();
        let mut table = Vec::with_capacity(size);
        for assignment in crate::dist::assignments(&specs) {
            let mut p = Q::one();
            for (label, spec) in labels.iter().zip(&specs) {
                let cpt = self
                    .cpts
                    .get(label)
                    .ok_or_else(|| Error::UnknownVariable(label.clone()))?;
                let parents = &parents_of[label];
                let mut row = 0usize;
                for pl in parents {
                    let pi = pos_of[pl.as_str()];
                    row = row * specs[pi].cardinality + assignment[pi];
                }
                let value = assignment[pos_of[label.as_str()]];
                let idx = row * spec.cardinality + value;
                p *= cpt
                    .get(idx)
                    .ok_or_else(|| Error::Equation(format!("CPT for `{label}` too short")))?
                    .clone();
            }
            table.push(p);
        }
        ExactDist::new(specs, Vec::new(), table)
    }

    /// Joint over the observed nodes only.
    pub fn observed_joint(&self) -> Result<ExactDist> {
        let joint = self.joint()?;
        let observed = self.graph.observed_labels();
        let keep: Vec<&str> = observed.iter().map(|s| s.as_str()).collect();
        joint.marginalize(&keep)
    }
}

// ---------------------------------------------------------------------------
// The two cyclic counterexample models.
// ---------------------------------------------------------------------------

/// Four-variable cycle with alternating product/sum equations:
/// A = D·E_A, B = A + E_B, C = B·E_C, D = C + E_D, all binary with uniform
/// error terms. `+` is integer addition; a sum landing outside the domain
/// invalidates the evaluation.
pub fn four_cycle_model() -> FunctionalModel {
    FunctionalModel::new(
        vec![
            Endogenous {
                label: "A".into(),
                domain: vec![0, 1],
                equation: parse_expression("D * E_A").unwrap(),
            },
            Endogenous {
                label: "B".into(),
                domain: vec![0, 1],
                equation: parse_expression("A + E_B").unwrap(),
            },
            Endogenous {
                label: "C".into(),
                domain: vec![0, 1],
                equation: parse_expression("B * E_C").unwrap(),
            },
            Endogenous {
                label: "D".into(),
                domain: vec![0, 1],
                equation: parse_expression("C + E_D").unwrap(),
            },
        ],
        vec![
            ErrorTerm::uniform_binary("E_A"),
            ErrorTerm::uniform_binary("E_B"),
            ErrorTerm::uniform_binary("E_C"),
            ErrorTerm::uniform_binary("E_D"),
        ],
    )
    .expect("static model")
}

/// Two-variable cycle fed by exogenous inputs: A = C ⊕ B, B = A ⊕ D, with
/// C and D uniform. Solutions exist only when C = D.
pub fn two_cycle_xor_model() -> FunctionalModel {
    FunctionalModel::new(
        vec![
            Endogenous {
                label: "A".into(),
                domain: vec![0, 1],
                equation: parse_expression("C ⊕ B").unwrap(),
            },
            Endogenous {
                label: "B".into(),
                domain: vec![0, 1],
                equation: parse_expression("A ⊕ D").unwrap(),
            },
            Endogenous {
                label: "C".into(),
                domain: vec![0, 1],
                equation: parse_expression("E_C").unwrap(),
            },
            Endogenous {
                label: "D".into(),
                domain: vec![0, 1],
                equation: parse_expression("E_D").unwrap(),
            },
        ],
        vec![
            ErrorTerm::uniform_binary("E_C"),
            ErrorTerm::uniform_binary("E_D"),
        ],
    )
    .expect("static model")
}
