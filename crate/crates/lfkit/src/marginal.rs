//! The statistical marginal problem behind the Local Friendliness argument.
//!
//! Everything here concerns the binary minimal scenario: a joint table
//! P(abc|xy) constrained by nonnegativity, per-context normalization, and
//! the two statistical constraints `P(ac|xy) = P(ac|x)` and
//! `P(bc|xy) = P(bc|y)`. Feasibility of marginal pairs, the minimal copy
//! discrepancy γ, the CHSH monogamy functional, facet enumeration of the
//! projected polytope, membership tests with separating functionals, and a
//! 2D slice scanner all reduce to exact-rational LPs and vertex enumeration
//! over that joint polytope.

use crate::dist::{boxes, ExactDist, VariableSpec};
use crate::error::{Error, Result};
use crate::linprog::{lp_feasible, lp_minimize, FarkasCertificate, LinearSystem, Verdict};
use crate::polytope::{self, AffineHull, HPolytope, LinearInequality};
use crate::ratio::{format_rational, q};
use crate::Q;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;

/// Hard guard: joint tables above this entry count are refused.
pub const JOINT_SIZE_GUARD: usize = 4096;
/// Ray-count guard for the double description runs.
const DD_GUARD: usize = 200_000;

// ---------------------------------------------------------------------------
// Public inequality type over named probability coordinates.
// ---------------------------------------------------------------------------

/// Coordinate of the projected marginal space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CoordKey {
    /// Entry P(a,b|x,y) of the Alice-Bob box.
    Pab {
        a: usize,
        b: usize,
        x: usize,
        y: usize,
    },
    /// Entry P(a,c|x=1) of the Alice-Charlie table at the copy setting.
    PacX1 { a: usize, c: usize },
}

impl fmt::Display for CoordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoordKey::Pab { a, b, x, y } => write!(f, "P({a},{b}|{x},{y})"),
            CoordKey::PacX1 { a, c } => write!(f, "P({a},{c}|x=1)"),
        }
    }
}

impl CoordKey {
    /// Parses the serialized key syntax `P(a,b|x,y)` / `P(a,c|x=1)`.
    pub fn parse(s: &str) -> Result<Self> {
        let body = s
            .trim()
            .strip_prefix("P(")
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("bad coordinate key `{s}`")))?;
        let (outs, conds) = body
            .split_once('|')
            .ok_or_else(|| Error::Parse(format!("bad coordinate key `{s}`")))?;
        let nums: Vec<&str> = outs.split(',').map(str::trim).collect();
        if nums.len() != 2 {
            return Err(Error::Parse(format!("bad coordinate key `{s}`")));
        }
        let parse_digit = |t: &str| -> Result<usize> {
            t.parse()
                .map_err(|_| Error::Parse(format!("bad coordinate key `{s}`")))
        };
        let first = parse_digit(nums[0])?;
        let second = parse_digit(nums[1])?;
        if conds.trim() == "x=1" {
            return Ok(CoordKey::PacX1 {
                a: first,
                c: second,
            });
        }
        let settings: Vec<&str> = conds.split(',').map(str::trim).collect();
        if settings.len() != 2 {
            return Err(Error::Parse(format!("bad coordinate key `{s}`")));
        }
        Ok(CoordKey::Pab {
            a: first,
            b: second,
            x: parse_digit(settings[0])?,
            y: parse_digit(settings[1])?,
        })
    }
}

/// A rational inequality `Σ coeff · coord ≤ bound` over projection coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inequality {
    pub coeffs: BTreeMap<CoordKey, Q>,
    pub bound: Q,
}

impl Inequality {
    pub fn evaluate(&self, pab: &ExactDist, pac: Option<&ExactDist>) -> Result<Q> {
        let mut total = Q::zero();
        for (key, coeff) in &self.coeffs {
            let v = match key {
                CoordKey::Pab { a, b, x, y } => pab.prob(&[*x, *y], &[*a, *b]),
                CoordKey::PacX1 { a, c } => match pac {
                    Some(t) => t.prob(&[], &[*a, *c]),
                    None => {
                        return Err(Error::Parse(
                            "inequality references P(a,c|x=1) but no table was given".into(),
                        ))
                    }
                },
            };
            total += coeff * &v;
        }
        Ok(total)
    }

    pub fn satisfied(&self, pab: &ExactDist, pac: Option<&ExactDist>) -> Result<bool> {
        Ok(self.evaluate(pab, pac)? <= self.bound)
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (key, coeff) in &self.coeffs {
            if coeff.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "{}·{key}", format_rational(coeff))?;
            first = false;
        }
        write!(f, " <= {}", format_rational(&self.bound))
    }
}

// ---------------------------------------------------------------------------
// Coordinate layouts.
// ---------------------------------------------------------------------------

/// Which projection of the joint polytope is being computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfProjection {
    /// Fix the copy to be perfect (P(a≠c|x=1) = 0) and project onto P(ab|xy).
    PabOnly,
    /// Project onto the pair (P(ab|xy), P(ac|x=1)).
    Joint,
}

fn pab_coord(a: usize, b: usize, x: usize, y: usize) -> usize {
    ((x * 2 + y) * 2 + a) * 2 + b
}

fn pac_coord(a: usize, c: usize) -> usize {
    16 + a * 2 + c
}

fn coord_keys(mode: LfProjection) -> Vec<CoordKey> {
    let mut keys = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    keys.push(CoordKey::Pab { a, b, x, y });
                }
            }
        }
    }
    if mode == LfProjection::Joint {
        for a in 0..2 {
            for c in 0..2 {
                keys.push(CoordKey::PacX1 { a, c });
            }
        }
    }
    keys
}

/// Dense coefficient vector of an [`Inequality`] in a projection layout.
pub fn inequality_to_dense(ineq: &Inequality, mode: LfProjection) -> Result<LinearInequality> {
    let dim = match mode {
        LfProjection::PabOnly => 16,
        LfProjection::Joint => 20,
    };
    let mut coeffs = vec![Q::zero(); dim];
    for (key, coeff) in &ineq.coeffs {
        let idx = match *key {
            CoordKey::Pab { a, b, x, y } => {
                if a > 1 || b > 1 || x > 1 || y > 1 {
                    return Err(Error::NotBinary);
                }
                pab_coord(a, b, x, y)
            }
            CoordKey::PacX1 { a, c } => {
                if mode == LfProjection::PabOnly {
                    return Err(Error::Parse(
                        "P(a,c|x=1) coordinate not available in this projection".into(),
                    ));
                }
                if a > 1 || c > 1 {
                    return Err(Error::NotBinary);
                }
                pac_coord(a, c)
            }
        };
        coeffs[idx] = coeff.clone();
    }
    Ok(LinearInequality {
        coeffs,
        bound: ineq.bound.clone(),
    })
}

/// Named-coordinate form of a dense inequality.
pub fn inequality_from_dense(ineq: &LinearInequality, mode: LfProjection) -> Inequality {
    let keys = coord_keys(mode);
    let mut coeffs = BTreeMap::new();
    for (k, c) in keys.into_iter().zip(&ineq.coeffs) {
        if !c.is_zero() {
            coeffs.insert(k, c.clone());
        }
    }
    Inequality {
        coeffs,
        bound: ineq.bound.clone(),
    }
}

fn require_binary_pab(pab: &ExactDist) -> Result<()> {
    let ok = pab.outcomes().len() == 2
        && pab.settings().len() == 2
        && pab.outcomes().iter().all(|v| v.cardinality == 2)
        && pab.settings().iter().all(|v| v.cardinality == 2);
    if ok {
        Ok(())
    } else {
        Err(Error::NotBinary)
    }
}

fn pab_to_vec(pab: &ExactDist) -> Result<Vec<Q>> {
    require_binary_pab(pab)?;
    let mut v = vec![Q::zero(); 16];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    v[pab_coord(a, b, x, y)] = pab.prob(&[x, y], &[a, b]);
                }
            }
        }
    }
    Ok(v)
}

fn require_binary_pac(pac: &ExactDist) -> Result<()> {
    let ok = pac.outcomes().len() == 2
        && pac.settings().is_empty()
        && pac.outcomes().iter().all(|v| v.cardinality == 2);
    if ok {
        Ok(())
    } else {
        Err(Error::NotBinary)
    }
}

/// Exact no-signaling check on a binary box; returns the first violated
/// context description, if any.
pub fn signaling_violation(pab: &ExactDist) -> Result<Option<String>> {
    require_binary_pab(pab)?;
    for a in 0..2 {
        for x in 0..2 {
            let m0 = pab.prob(&[x, 0], &[a, 0]) + pab.prob(&[x, 0], &[a, 1]);
            let m1 = pab.prob(&[x, 1], &[a, 0]) + pab.prob(&[x, 1], &[a, 1]);
            if m0 != m1 {
                return Ok(Some(format!("P(a={a}|x={x}, y) depends on y")));
            }
        }
    }
    for b in 0..2 {
        for y in 0..2 {
            let m0 = pab.prob(&[0, y], &[0, b]) + pab.prob(&[0, y], &[1, b]);
            let m1 = pab.prob(&[1, y], &[0, b]) + pab.prob(&[1, y], &[1, b]);
            if m0 != m1 {
                return Ok(Some(format!("P(b={b}|x, y={y}) depends on x")));
            }
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// The joint system P(abc|xy) with the statistical constraints.
// ---------------------------------------------------------------------------

fn joint_idx(a: usize, b: usize, c: usize, x: usize, y: usize) -> usize {
    (((x * 2 + y) * 2 + a) * 2 + b) * 2 + c
}

struct JointRows {
    /// (coeffs over the 32 joint entries, rhs kind)
    rows: Vec<(Vec<Q>, RowRhs)>,
}

#[derive(Clone)]
enum RowRhs {
    Const(Q),
    /// Value of the Alice-Bob box at dense coordinate k.
    PabEntry(usize),
    /// Value of the Alice-Charlie table at (a, c).
    PacEntry(usize, usize),
}

fn statistical_rows() -> Vec<(Vec<Q>, RowRhs)> {
    let mut rows = Vec::new();
    // Normalization per context.
    for x in 0..2 {
        for y in 0..2 {
            let mut r = vec![Q::zero(); 32];
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        r[joint_idx(a, b, c, x, y)] = Q::one();
                    }
                }
            }
            rows.push((r, RowRhs::Const(Q::one())));
        }
    }
    // P(ac|x,y=1) = P(ac|x,y=0)
    for a in 0..2 {
        for c in 0..2 {
            for x in 0..2 {
                let mut r = vec![Q::zero(); 32];
                for b in 0..2 {
                    r[joint_idx(a, b, c, x, 1)] += Q::one();
                    r[joint_idx(a, b, c, x, 0)] -= Q::one();
                }
                rows.push((r, RowRhs::Const(Q::zero())));
            }
        }
    }
    // P(bc|x=1,y) = P(bc|x=0,y)
    for b in 0..2 {
        for c in 0..2 {
            for y in 0..2 {
                let mut r = vec![Q::zero(); 32];
                for a in 0..2 {
                    r[joint_idx(a, b, c, 1, y)] += Q::one();
                    r[joint_idx(a, b, c, 0, y)] -= Q::one();
                }
                rows.push((r, RowRhs::Const(Q::zero())));
            }
        }
    }
    rows
}

fn perfect_copy_rows() -> Vec<(Vec<Q>, RowRhs)> {
    // P(a≠c | x=1) = 0, entrywise via nonnegativity.
    let mut rows = Vec::new();
    for a in 0..2 {
        for c in 0..2 {
            if a == c {
                continue;
            }
            for b in 0..2 {
                for y in 0..2 {
                    let mut r = vec![Q::zero(); 32];
                    r[joint_idx(a, b, c, 1, y)] = Q::one();
                    rows.push((r, RowRhs::Const(Q::zero())));
                }
            }
        }
    }
    rows
}

fn pab_match_rows() -> Vec<(Vec<Q>, RowRhs)> {
    let mut rows = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let mut r = vec![Q::zero(); 32];
                    for c in 0..2 {
                        r[joint_idx(a, b, c, x, y)] = Q::one();
                    }
                    rows.push((r, RowRhs::PabEntry(pab_coord(a, b, x, y))));
                }
            }
        }
    }
    rows
}

fn pac_match_rows() -> Vec<(Vec<Q>, RowRhs)> {
    // Matching at (x=1, y=0); the statistical rows force y-independence.
    let mut rows = Vec::new();
    for a in 0..2 {
        for c in 0..2 {
            let mut r = vec![Q::zero(); 32];
            for b in 0..2 {
                r[joint_idx(a, b, c, 1, 0)] = Q::one();
            }
            rows.push((r, RowRhs::PacEntry(a, c)));
        }
    }
    rows
}

impl JointRows {
    fn build(perfect: bool, with_pab: bool, with_pac: bool) -> Self {
        let mut rows = statistical_rows();
        if perfect {
            rows.extend(perfect_copy_rows());
        }
        if with_pab {
            rows.extend(pab_match_rows());
        }
        if with_pac {
            rows.extend(pac_match_rows());
        }
        Self { rows }
    }

    fn to_system(&self, pab: Option<&[Q]>, pac: Option<&ExactDist>) -> LinearSystem {
        let mut sys = LinearSystem::new(32);
        for (coeffs, rhs) in &self.rows {
            let b = match rhs {
                RowRhs::Const(v) => v.clone(),
                RowRhs::PabEntry(k) => pab.expect("pab values required")[*k].clone(),
                RowRhs::PacEntry(a, c) => pac.expect("pac values required").prob(&[], &[*a, *c]),
            };
            sys.push_eq(coeffs.clone(), b);
        }
        sys
    }

    /// Separating functional over P(ab|xy) from a Farkas certificate: the
    /// pab-matching multipliers carry the coefficients, every constant row
    /// contributes to the bound. Any member box satisfies the result; the
    /// refuted query violates it.
    fn separator(&self, cert: &FarkasCertificate, pac: Option<&ExactDist>) -> Inequality {
        let mut dense = vec![Q::zero(); 16];
        let mut constant = Q::zero();
        for ((_, rhs), y) in self.rows.iter().zip(&cert.eq_multipliers) {
            match rhs {
                RowRhs::Const(v) => constant += y * v,
                RowRhs::PacEntry(a, c) => {
                    constant += y * &pac.expect("pac values required").prob(&[], &[*a, *c])
                }
                RowRhs::PabEntry(k) => dense[*k] = -y.clone(),
            }
        }
        inequality_from_dense(
            &LinearInequality {
                coeffs: dense,
                bound: constant,
            },
            LfProjection::PabOnly,
        )
    }
}

/// The joint polytope as an H-polytope (no marginal matching), used for
/// vertex enumeration.
fn joint_polytope(perfect: bool) -> HPolytope {
    let rows = JointRows::build(perfect, false, false);
    HPolytope {
        dim: 32,
        equalities: rows
            .rows
            .into_iter()
            .map(|(c, rhs)| match rhs {
                RowRhs::Const(v) => (c, v),
                _ => unreachable!("no matching rows here"),
            })
            .collect(),
        inequalities: Vec::new(),
        nonneg: true,
    }
}

fn project_joint_vertex(v: &[Q], mode: LfProjection) -> Vec<Q> {
    let dim = match mode {
        LfProjection::PabOnly => 16,
        LfProjection::Joint => 20,
    };
    let mut out = vec![Q::zero(); dim];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        out[pab_coord(a, b, x, y)] += &v[joint_idx(a, b, c, x, y)];
                    }
                }
            }
        }
    }
    if mode == LfProjection::Joint {
        for a in 0..2 {
            for c in 0..2 {
                for b in 0..2 {
                    out[pac_coord(a, c)] += &v[joint_idx(a, b, c, 1, 0)];
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Operations.
// ---------------------------------------------------------------------------

/// Decides whether a joint P(abc|xy) exists that satisfies the statistical
/// constraints and reproduces both given marginals.
pub fn marginal_feasible(pab: &ExactDist, pac: &ExactDist) -> Result<Verdict> {
    let pab_vec = pab_to_vec(pab)?;
    require_binary_pac(pac)?;
    // Shared-marginal consistency is a precondition, not infeasibility.
    for a in 0..2 {
        let pac_marg = pac.prob(&[], &[a, 0]) + pac.prob(&[], &[a, 1]);
        for y in 0..2 {
            let pab_marg = pab.prob(&[1, y], &[a, 0]) + pab.prob(&[1, y], &[a, 1]);
            if pac_marg != pab_marg {
                return Err(Error::MarginalMismatch(format!(
                    "sum_c P(a={a},c|x=1) = {} but sum_b P(a={a},b|x=1,y={y}) = {}",
                    format_rational(&pac_marg),
                    format_rational(&pab_marg)
                )));
            }
        }
    }
    let rows = JointRows::build(false, true, true);
    let sys = rows.to_system(Some(&pab_vec), Some(pac));
    lp_feasible(&sys)
}

/// Result of the minimal-discrepancy computation.
#[derive(Debug, Clone)]
pub struct MinGamma {
    /// Least achievable copy error Σ_{a≠c} P(ac|x=1) over all consistent
    /// extensions.
    pub gamma: Q,
    /// An optimizing extension P(abc|xy).
    pub extension: ExactDist,
}

/// Minimizes the Alice-Charlie copy error over all joints consistent with
/// the statistical constraints and the given Alice-Bob box.
pub fn min_gamma(pab: &ExactDist) -> Result<MinGamma> {
    let pab_vec = pab_to_vec(pab)?;
    if let Some(violation) = signaling_violation(pab)? {
        return Err(Error::SignalingInput(violation));
    }
    let rows = JointRows::build(false, true, false);
    let mut sys = rows.to_system(Some(&pab_vec), None);
    let mut obj = vec![Q::zero(); 32];
    for a in 0..2 {
        for c in 0..2 {
            if a == c {
                continue;
            }
            for b in 0..2 {
                obj[joint_idx(a, b, c, 1, 0)] = Q::one();
            }
        }
    }
    sys.objective = Some(obj);
    match lp_minimize(&sys)? {
        Ok(opt) => {
            let outcomes = vec![
                VariableSpec::new("A", 2),
                VariableSpec::new("B", 2),
                VariableSpec::new("C", 2),
            ];
            let settings = vec![VariableSpec::new("X", 2), VariableSpec::new("Y", 2)];
            let mut table = Vec::with_capacity(32);
            for x in 0..2 {
                for y in 0..2 {
                    for a in 0..2 {
                        for b in 0..2 {
                            for c in 0..2 {
                                table.push(opt.witness[joint_idx(a, b, c, x, y)].clone());
                            }
                        }
                    }
                }
            }
            Ok(MinGamma {
                gamma: opt.value,
                extension: ExactDist::new(outcomes, settings, table)?,
            })
        }
        Err(_) => Err(Error::MalformedSystem(
            "no-signaling box admits no constrained extension; this contradicts the construction"
                .into(),
        )),
    }
}

/// The CHSH monogamy functional: `chsh(pab) + 2 Σ_{a=c} P(ac|x=1)` with
/// bound 5.
pub fn monogamy_eq2(pab: &ExactDist, pac: &ExactDist) -> Result<(Q, bool)> {
    require_binary_pac(pac)?;
    let chsh = boxes::chsh_value(pab)?;
    let agree = pac.prob(&[], &[0, 0]) + pac.prob(&[], &[1, 1]);
    let lhs = chsh + q(2, 1) * agree;
    let satisfied = lhs <= q(5, 1);
    Ok((lhs, satisfied))
}

/// The monogamy functional as an [`Inequality`] over joint coordinates.
pub fn monogamy_inequality() -> Inequality {
    let mut coeffs = BTreeMap::new();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let agree = a == b;
                    let wanted = if x == 1 && y == 1 { !agree } else { agree };
                    if wanted {
                        coeffs.insert(CoordKey::Pab { a, b, x, y }, Q::one());
                    }
                }
            }
        }
    }
    for a in 0..2 {
        coeffs.insert(CoordKey::PacX1 { a, c: a }, q(2, 1));
    }
    Inequality {
        coeffs,
        bound: q(5, 1),
    }
}

/// One of the eight CHSH symmetries in probability form (bound 3): the
/// starred context contributes its disagreement terms (or agreement terms
/// when `flip` is set).
pub fn chsh_symmetry(starred_x: usize, starred_y: usize, flip: bool) -> Inequality {
    let mut coeffs = BTreeMap::new();
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let starred = x == starred_x && y == starred_y;
                    let wanted = (a == b) ^ starred ^ flip;
                    if wanted {
                        coeffs.insert(CoordKey::Pab { a, b, x, y }, Q::one());
                    }
                }
            }
        }
    }
    Inequality {
        coeffs,
        bound: q(3, 1),
    }
}

/// All eight CHSH symmetries.
pub fn chsh_symmetries() -> Vec<Inequality> {
    let mut out = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            for flip in [false, true] {
                out.push(chsh_symmetry(x, y, flip));
            }
        }
    }
    out
}

/// The canonical CHSH functional (starred context (1,1)).
pub fn chsh_functional() -> Inequality {
    chsh_symmetry(1, 1, false)
}

/// Facet enumeration output.
#[derive(Debug, Clone)]
pub struct FacetComputation {
    pub mode: LfProjection,
    /// Projected vertices in the dense layout of the mode.
    pub vertices: Vec<Vec<Q>>,
    /// Canonicalized facets (includes positivity-type facets).
    pub facets: Vec<LinearInequality>,
    /// Facets that are not positivity facets, in named form.
    pub nontrivial: Vec<Inequality>,
    pub hull: AffineHull,
}

impl FacetComputation {
    /// Canonical form of an arbitrary inequality for comparison against the
    /// enumerated facet list.
    pub fn canonical(&self, ineq: &Inequality) -> Result<LinearInequality> {
        Ok(self
            .hull
            .canonicalize(&inequality_to_dense(ineq, self.mode)?))
    }

    /// Whether the given inequality is one of the enumerated facets.
    pub fn is_facet(&self, ineq: &Inequality) -> Result<bool> {
        let c = self.canonical(ineq)?;
        Ok(self.facets.contains(&c))
    }

    /// Whether the inequality is valid on every enumerated vertex.
    pub fn is_valid(&self, ineq: &Inequality) -> Result<bool> {
        let dense = inequality_to_dense(ineq, self.mode)?;
        Ok(self.vertices.iter().all(|v| dense.satisfied_by(v)))
    }
}

/// Enumerates the facets of the projection of the joint polytope, by vertex
/// enumeration of the joint, projection, and convex-hull facet recovery.
/// Only binary cardinalities are supported; the joint table is guarded at
/// [`JOINT_SIZE_GUARD`] entries (binary = 32).
pub fn lf_facets(mode: LfProjection) -> Result<FacetComputation> {
    if 32 > JOINT_SIZE_GUARD {
        return Err(Error::SizeGuard("joint table exceeds the guard".into()));
    }
    let perfect = mode == LfProjection::PabOnly;
    let joint = joint_polytope(perfect);
    let joint_vertices = polytope::vertices(&joint, DD_GUARD)?;
    let mut projected: Vec<Vec<Q>> = joint_vertices
        .iter()
        .map(|v| project_joint_vertex(v, mode))
        .collect();
    projected.sort();
    projected.dedup();
    // Only hull-extreme projected points matter for facet recovery, and
    // facets_of_vertices tolerates interior points, so pass them all.
    let (facets, hull) = polytope::facets_of_vertices(&projected, DD_GUARD)?;
    // Positivity facets: −coord ≤ 0 canonicalized.
    let dim = projected[0].len();
    let positivity: Vec<LinearInequality> = (0..dim)
        .map(|i| {
            let mut coeffs = vec![Q::zero(); dim];
            coeffs[i] = -Q::one();
            hull.canonicalize(&LinearInequality {
                coeffs,
                bound: Q::zero(),
            })
        })
        .collect();
    let nontrivial = facets
        .iter()
        .filter(|f| !positivity.contains(f))
        .map(|f| {
            // Present nontrivial facets in named form (un-canonicalized
            // coefficients are the canonical representative itself).
            inequality_from_dense(f, mode)
        })
        .collect();
    Ok(FacetComputation {
        mode,
        vertices: projected,
        facets,
        nontrivial,
        hull,
    })
}

// ---------------------------------------------------------------------------
// Membership with separating functionals.
// ---------------------------------------------------------------------------

/// Target set for membership queries.
#[derive(Debug, Clone)]
pub enum BoxPolytope {
    /// Convex hull of the 16 deterministic boxes.
    Lhv,
    /// No-signaling boxes (Eq.-(5)-style equalities + positivity).
    NoSignaling,
    /// Boxes admitting a constrained extension reproducing the given
    /// Alice-Charlie table.
    LfGiven(ExactDist),
    /// Boxes admitting a constrained extension with a perfect copy.
    LfPerfect,
}

/// Membership verdict; `separator` is present exactly when outside.
#[derive(Debug, Clone)]
pub struct Membership {
    pub inside: bool,
    pub separator: Option<Inequality>,
}

fn lhv_membership_vec(pab_vec: &[Q]) -> Result<Membership> {
    let det_boxes: Vec<Vec<Q>> = (0..16)
        .map(|i| pab_to_vec(&boxes::lhv_deterministic(i)))
        .collect::<Result<_>>()?;
    let mut sys = LinearSystem::new(16);
    for k in 0..16 {
        let coeffs: Vec<Q> = det_boxes.iter().map(|v| v[k].clone()).collect();
        sys.push_eq(coeffs, pab_vec[k].clone());
    }
    sys.push_eq(vec![Q::one(); 16], Q::one());
    match lp_feasible(&sys)? {
        Verdict::Feasible { .. } => Ok(Membership {
            inside: true,
            separator: None,
        }),
        Verdict::Infeasible { certificate } => {
            // Matching-row multipliers give the functional; the weight-sum
            // row gives the bound.
            let y = &certificate.eq_multipliers;
            let dense: Vec<Q> = (0..16).map(|k| -y[k].clone()).collect();
            let bound = y[16].clone();
            let sep = LinearInequality {
                coeffs: dense,
                bound,
            };
            for v in &det_boxes {
                if !sep.satisfied_by(v) {
                    return Err(Error::MalformedSystem(
                        "internal error: separator fails on a deterministic box".into(),
                    ));
                }
            }
            if sep.satisfied_by(pab_vec) {
                return Err(Error::MalformedSystem(
                    "internal error: separator does not cut off the query".into(),
                ));
            }
            Ok(Membership {
                inside: false,
                separator: Some(inequality_from_dense(&sep, LfProjection::PabOnly)),
            })
        }
    }
}

fn ns_membership(pab: &ExactDist) -> Result<Membership> {
    // Type invariants already give normalization and positivity; only the
    // no-signaling equalities can fail.
    if let Some(violation) = signaling_violation(pab)? {
        // Build the separating functional from the violated equality.
        let pab_vec = pab_to_vec(pab)?;
        for a in 0..2 {
            for x in 0..2 {
                let mut dense = vec![Q::zero(); 16];
                for b in 0..2 {
                    dense[pab_coord(a, b, x, 0)] += Q::one();
                    dense[pab_coord(a, b, x, 1)] -= Q::one();
                }
                let val = LinearInequality {
                    coeffs: dense.clone(),
                    bound: Q::zero(),
                }
                .value(&pab_vec);
                if !val.is_zero() {
                    let sep = if val.is_positive() {
                        LinearInequality {
                            coeffs: dense,
                            bound: Q::zero(),
                        }
                    } else {
                        LinearInequality {
                            coeffs: dense.iter().map(|c| -c).collect(),
                            bound: Q::zero(),
                        }
                    };
                    return Ok(Membership {
                        inside: false,
                        separator: Some(inequality_from_dense(&sep, LfProjection::PabOnly)),
                    });
                }
            }
        }
        for b in 0..2 {
            for y in 0..2 {
                let mut dense = vec![Q::zero(); 16];
                for a in 0..2 {
                    dense[pab_coord(a, b, 0, y)] += Q::one();
                    dense[pab_coord(a, b, 1, y)] -= Q::one();
                }
                let val = LinearInequality {
                    coeffs: dense.clone(),
                    bound: Q::zero(),
                }
                .value(&pab_to_vec(pab)?);
                if !val.is_zero() {
                    let sep = if val.is_positive() {
                        LinearInequality {
                            coeffs: dense,
                            bound: Q::zero(),
                        }
                    } else {
                        LinearInequality {
                            coeffs: dense.iter().map(|c| -c).collect(),
                            bound: Q::zero(),
                        }
                    };
                    return Ok(Membership {
                        inside: false,
                        separator: Some(inequality_from_dense(&sep, LfProjection::PabOnly)),
                    });
                }
            }
        }
        return Err(Error::SignalingInput(violation));
    }
    Ok(Membership {
        inside: true,
        separator: None,
    })
}

fn lf_membership_vec(pab_vec: &[Q], pac: Option<&ExactDist>) -> Result<Membership> {
    let rows = JointRows::build(pac.is_none(), true, pac.is_some());
    let sys = rows.to_system(Some(pab_vec), pac);
    match lp_feasible(&sys)? {
        Verdict::Feasible { .. } => Ok(Membership {
            inside: true,
            separator: None,
        }),
        Verdict::Infeasible { certificate } => {
            let sep = rows.separator(&certificate, pac);
            let dense = inequality_to_dense(&sep, LfProjection::PabOnly)?;
            if dense.satisfied_by(pab_vec) {
                return Err(Error::MalformedSystem(
                    "internal error: separator does not cut off the query".into(),
                ));
            }
            Ok(Membership {
                inside: false,
                separator: Some(sep),
            })
        }
    }
}

/// Exact membership of a binary box in one of the named polytopes; when the
/// box is outside, a verified separating functional comes back with it.
pub fn membership(pab: &ExactDist, which: &BoxPolytope) -> Result<Membership> {
    let pab_vec = pab_to_vec(pab)?;
    match which {
        BoxPolytope::Lhv => lhv_membership_vec(&pab_vec),
        BoxPolytope::NoSignaling => ns_membership(pab),
        BoxPolytope::LfGiven(pac) => {
            require_binary_pac(pac)?;
            lf_membership_vec(&pab_vec, Some(pac))
        }
        BoxPolytope::LfPerfect => lf_membership_vec(&pab_vec, None),
    }
}

// ---------------------------------------------------------------------------
// Slice scanner.
// ---------------------------------------------------------------------------

/// Region label of one slice grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    Lhv,
    LfOnly,
    NsOnly,
    OutsideNs,
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionLabel::Lhv => write!(f, "LHV"),
            RegionLabel::LfOnly => write!(f, "LF-only"),
            RegionLabel::NsOnly => write!(f, "NS-only"),
            RegionLabel::OutsideNs => write!(f, "outside-NS"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SlicePoint {
    pub t1: Q,
    pub t2: Q,
    pub label: RegionLabel,
}

/// Scan of the 2-plane through white noise spanned by directions dual to the
/// two functionals: at grid point (t1, t2) the box satisfies f1 = t1 and
/// f2 = t2 exactly.
pub struct SliceScan {
    pub points: Vec<SlicePoint>,
    /// The box realized at given functional values.
    box_at: Box<dyn Fn(&Q, &Q) -> Vec<Q> + Send + Sync>,
}

impl SliceScan {
    pub fn label_of_box(&self, t1: &Q, t2: &Q) -> Result<RegionLabel> {
        label_vec(&(self.box_at)(t1, t2))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t1,t2,label\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{}\n",
                format_rational(&p.t1),
                format_rational(&p.t2),
                p.label
            ));
        }
        out
    }
}

fn label_vec(v: &[Q]) -> Result<RegionLabel> {
    if v.iter().any(|x| x.is_negative()) {
        return Ok(RegionLabel::OutsideNs);
    }
    if lhv_membership_vec(v)?.inside {
        return Ok(RegionLabel::Lhv);
    }
    if lf_membership_vec(v, None)?.inside {
        return Ok(RegionLabel::LfOnly);
    }
    Ok(RegionLabel::NsOnly)
}

/// Linear basis of the no-signaling subspace (differences of NS boxes).
fn ns_direction_rows() -> Vec<Vec<Q>> {
    let mut rows = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            let mut r = vec![Q::zero(); 16];
            for a in 0..2 {
                for b in 0..2 {
                    r[pab_coord(a, b, x, y)] = Q::one();
                }
            }
            rows.push(r);
        }
    }
    for a in 0..2 {
        for x in 0..2 {
            let mut r = vec![Q::zero(); 16];
            for b in 0..2 {
                r[pab_coord(a, b, x, 0)] += Q::one();
                r[pab_coord(a, b, x, 1)] -= Q::one();
            }
            rows.push(r);
        }
    }
    for b in 0..2 {
        for y in 0..2 {
            let mut r = vec![Q::zero(); 16];
            for a in 0..2 {
                r[pab_coord(a, b, 0, y)] += Q::one();
                r[pab_coord(a, b, 1, y)] -= Q::one();
            }
            rows.push(r);
        }
    }
    rows
}

/// Scans the slice spanned by two functionals, anchored at white noise.
pub fn slice_scan(
    f1: &Inequality,
    f2: &Inequality,
    t1_range: (Q, Q),
    t2_range: (Q, Q),
    res1: usize,
    res2: usize,
) -> Result<SliceScan> {
    let d1dense = inequality_to_dense(f1, LfProjection::PabOnly)?;
    let d2dense = inequality_to_dense(f2, LfProjection::PabOnly)?;
    // The scan plane is spanned by the two functional gradients projected
    // orthogonally onto the no-signaling subspace; within that plane the
    // axes are the biorthogonal directions f_i(D_j) = δ_ij. For a facet
    // functional the projected gradient is the facet's normal direction, so
    // its axis leaves the polytope through that facet.
    let ns_basis = polytope::nullspace(&ns_direction_rows());
    let gram: Vec<Vec<Q>> = ns_basis
        .iter()
        .map(|a| ns_basis.iter().map(|b| polytope::dot(a, b)).collect())
        .collect();
    let gram_inv = polytope::invert(&gram).ok_or(Error::DegeneratePlane)?;
    let project = |g: &[Q]| -> Vec<Q> {
        // P(g) = Bᵀ (B Bᵀ)⁻¹ B g
        let bg: Vec<Q> = ns_basis.iter().map(|b| polytope::dot(b, g)).collect();
        let coeffs: Vec<Q> = gram_inv.iter().map(|row| polytope::dot(row, &bg)).collect();
        let mut out = vec![Q::zero(); 16];
        for (c, b) in coeffs.iter().zip(&ns_basis) {
            for (o, bj) in out.iter_mut().zip(b) {
                *o += c * bj;
            }
        }
        out
    };
    let g1 = project(&d1dense.coeffs);
    let g2 = project(&d2dense.coeffs);
    // Biorthogonalize inside span(g1, g2): D_i = a·g1 + b·g2.
    let m11 = d1dense.value(&g1);
    let m12 = d1dense.value(&g2);
    let m21 = d2dense.value(&g1);
    let m22 = d2dense.value(&g2);
    let det = m11.clone() * m22.clone() - m12.clone() * m21.clone();
    if det.is_zero() {
        return Err(Error::DegeneratePlane);
    }
    let combine =
        |a: &Q, b: &Q| -> Vec<Q> { g1.iter().zip(&g2).map(|(x, y)| a * x + b * y).collect() };
    let dir1 = combine(&(m22.clone() / det.clone()), &(-m21.clone() / det.clone()));
    let dir2 = combine(&(-m12.clone() / det.clone()), &(m11.clone() / det.clone()));
    debug_assert_eq!(d1dense.value(&dir1), Q::one());
    debug_assert!(d2dense.value(&dir1).is_zero());
    debug_assert!(d1dense.value(&dir2).is_zero());
    debug_assert_eq!(d2dense.value(&dir2), Q::one());
    let wn = pab_to_vec(&boxes::white_noise())?;
    let f1_wn = d1dense.value(&wn);
    let f2_wn = d2dense.value(&wn);

    let point = move |t1: &Q, t2: &Q| -> Vec<Q> {
        let s1 = t1 - &f1_wn;
        let s2 = t2 - &f2_wn;
        wn.iter()
            .zip(&dir1)
            .zip(&dir2)
            .map(|((w, d1), d2)| w + &s1 * d1 + &s2 * d2)
            .collect()
    };

    let grid_values = |range: &(Q, Q), res: usize| -> Vec<Q> {
        if res == 0 {
            return vec![range.0.clone()];
        }
        let step = (&range.1 - &range.0) / Q::from_integer(num::BigInt::from(res as i64));
        (0..=res)
            .map(|i| &range.0 + step.clone() * Q::from_integer(num::BigInt::from(i as i64)))
            .collect()
    };
    let t1s = grid_values(&t1_range, res1);
    let t2s = grid_values(&t2_range, res2);
    let tasks: Vec<(Q, Q)> = t1s
        .iter()
        .flat_map(|t1| t2s.iter().map(move |t2| (t1.clone(), t2.clone())))
        .collect();
    let points: Result<Vec<SlicePoint>> = tasks
        .into_par_iter()
        .map(|(t1, t2)| {
            let v = point(&t1, &t2);
            Ok(SlicePoint {
                label: label_vec(&v)?,
                t1,
                t2,
            })
        })
        .collect();
    Ok(SliceScan {
        points: points?,
        box_at: Box::new(point),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::boxes::*;
    use crate::ratio::qi;

    fn perfect_pac_uniform() -> ExactDist {
        perfect_pac(&[q(1, 2), q(1, 2)])
    }

    #[test]
    fn deterministic_pair_is_feasible() {
        // Always-zero box with the matching point-mass copy table.
        let pab = lhv_deterministic(0);
        let pac = perfect_pac(&[Q::one(), Q::zero()]);
        assert!(marginal_feasible(&pab, &pac).unwrap().is_feasible());
    }

    #[test]
    fn pr_box_with_perfect_copy_is_infeasible() {
        let verdict = marginal_feasible(&pr_box(), &perfect_pac_uniform()).unwrap();
        assert!(!verdict.is_feasible());
    }

    #[test]
    fn white_noise_with_uniform_pac_is_feasible() {
        let pac = ExactDist::new(
            vec![VariableSpec::new("A", 2), VariableSpec::new("C", 2)],
            vec![],
            vec![q(1, 4), q(1, 4), q(1, 4), q(1, 4)],
        )
        .unwrap();
        assert!(marginal_feasible(&white_noise(), &pac)
            .unwrap()
            .is_feasible());
    }

    #[test]
    fn inconsistent_marginals_error_not_infeasible() {
        // pac with P(a=0) = 1 against a box with P(a=0|x=1) = 1/2.
        let pac = perfect_pac(&[Q::one(), Q::zero()]);
        assert!(matches!(
            marginal_feasible(&white_noise(), &pac),
            Err(Error::MarginalMismatch(_))
        ));
    }

    #[test]
    fn gamma_values_for_named_boxes() {
        assert_eq!(min_gamma(&pr_box()).unwrap().gamma, q(1, 2));
        for i in 0..16 {
            let mg = min_gamma(&lhv_deterministic(i)).unwrap();
            assert_eq!(mg.gamma, Q::zero(), "deterministic box {i}");
        }
        assert_eq!(min_gamma(&white_noise()).unwrap().gamma, Q::zero());
    }

    #[test]
    fn gamma_rejects_signaling() {
        // A hand-built signaling table: B copies X.
        let table = pab_from_fn(|x, _y, a, b| {
            if b == x && a == 0 {
                Q::one()
            } else {
                Q::zero()
            }
        });
        assert!(matches!(min_gamma(&table), Err(Error::SignalingInput(_))));
    }

    #[test]
    fn gamma_extension_reproduces_marginal() {
        let mg = min_gamma(&pr_box()).unwrap();
        let back = mg.extension.marginalize(&["A", "B"]).unwrap();
        assert_eq!(back, pr_box());
    }

    #[test]
    fn monogamy_boundary_values() {
        // Deterministic box with CHSH = 3 and a perfect copy: boundary 5.
        let pab = lhv_deterministic(0);
        assert_eq!(boxes::chsh_value(&pab).unwrap(), qi(3));
        let pac = perfect_pac(&[Q::one(), Q::zero()]);
        let (lhs, ok) = monogamy_eq2(&pab, &pac).unwrap();
        assert_eq!(lhs, qi(5));
        assert!(ok);

        let (lhs, ok) = monogamy_eq2(&pr_box(), &perfect_pac_uniform()).unwrap();
        assert_eq!(lhs, qi(6));
        assert!(!ok);

        let pac_uniform = ExactDist::new(
            vec![VariableSpec::new("A", 2), VariableSpec::new("C", 2)],
            vec![],
            vec![q(1, 4), q(1, 4), q(1, 4), q(1, 4)],
        )
        .unwrap();
        let (lhs, ok) = monogamy_eq2(&white_noise(), &pac_uniform).unwrap();
        assert_eq!(lhs, qi(3));
        assert!(ok);
    }

    #[test]
    fn membership_named_boxes() {
        let t = tsirelson_box_rationalized(1_000_000_000);
        let m = membership(&t, &BoxPolytope::Lhv).unwrap();
        assert!(!m.inside);
        let sep = m.separator.unwrap();
        // The separator must actually cut the box off from every det box.
        let val = sep.evaluate(&t, None).unwrap();
        assert!(val > sep.bound);
        assert!(membership(&t, &BoxPolytope::NoSignaling).unwrap().inside);

        assert!(
            membership(&pr_box(), &BoxPolytope::NoSignaling)
                .unwrap()
                .inside
        );
        let m = membership(&pr_box(), &BoxPolytope::LfGiven(perfect_pac_uniform())).unwrap();
        assert!(!m.inside);
        assert!(m.separator.is_some());

        for which in [
            BoxPolytope::Lhv,
            BoxPolytope::NoSignaling,
            BoxPolytope::LfPerfect,
        ] {
            assert!(membership(&white_noise(), &which).unwrap().inside);
        }
    }

    #[test]
    fn min_gamma_zero_iff_lf_member() {
        for b in [
            white_noise(),
            pr_box(),
            lhv_deterministic(3),
            tsirelson_box_rationalized(1000),
        ] {
            let gamma_zero = min_gamma(&b).unwrap().gamma.is_zero();
            let member = membership(&b, &BoxPolytope::LfPerfect).unwrap().inside;
            assert_eq!(gamma_zero, member);
        }
    }

    #[test]
    fn coord_key_round_trip() {
        for key in [
            CoordKey::Pab {
                a: 0,
                b: 1,
                x: 1,
                y: 0,
            },
            CoordKey::PacX1 { a: 1, c: 1 },
        ] {
            let s = key.to_string();
            assert_eq!(CoordKey::parse(&s).unwrap(), key);
        }
        assert!(CoordKey::parse("P(a|b)").is_err());
    }

    #[test]
    fn chsh_functional_matches_chsh_value() {
        let f = chsh_functional();
        for b in [pr_box(), white_noise(), lhv_deterministic(9)] {
            assert_eq!(
                f.evaluate(&b, None).unwrap(),
                boxes::chsh_value(&b).unwrap()
            );
        }
    }

    #[test]
    fn deterministic_boxes_have_explicit_zero_discrepancy_extensions() {
        // Hand construction: c copies what a would be at the copy setting.
        // This witnesses γ = 0 independently of the solver.
        for i in 0..16usize {
            let a0 = i & 1;
            let a1 = (i >> 1) & 1;
            let b0 = (i >> 2) & 1;
            let b1 = (i >> 3) & 1;
            let rows = JointRows::build(false, true, false);
            let pab = pab_to_vec(&lhv_deterministic(i)).unwrap();
            let sys = rows.to_system(Some(&pab), None);
            let mut witness = vec![Q::zero(); 32];
            for x in 0..2 {
                for y in 0..2 {
                    let ax = if x == 0 { a0 } else { a1 };
                    let by = if y == 0 { b0 } else { b1 };
                    witness[joint_idx(ax, by, a1, x, y)] = Q::one();
                }
            }
            assert!(crate::linprog::satisfies(&sys, &witness), "box {i}");
            let mut discrepancy = Q::zero();
            for a in 0..2 {
                for c in 0..2 {
                    if a == c {
                        continue;
                    }
                    for b in 0..2 {
                        discrepancy += witness[joint_idx(a, b, c, 1, 0)].clone();
                    }
                }
            }
            assert!(discrepancy.is_zero());
        }
    }

    #[test]
    fn parallel_functionals_span_a_degenerate_plane() {
        let f = chsh_functional();
        assert!(matches!(
            slice_scan(&f, &f, (Q::zero(), q(4, 1)), (Q::zero(), q(4, 1)), 2, 2),
            Err(Error::DegeneratePlane)
        ));
    }
}
