//! Exact rational linear programming.
//!
//! A two-phase dense simplex over `BigRational` with Bland's anti-cycling
//! rule. Variables are nonnegative; constraints are equalities and
//! `≤`-inequalities. Feasibility verdicts carry either a witness point or a
//! Farkas certificate, and both are re-verified by substitution before being
//! returned, so no verdict depends on the solver's internal state being
//! correct.

use crate::error::{Error, Result};
use crate::Q;
use num_traits::{One, Signed, Zero};

/// Rational linear constraint system over nonnegative variables:
/// `eq_lhs · x = eq_rhs`, `ineq_lhs · x ≤ ineq_rhs`, `x ≥ 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearSystem {
    pub num_vars: usize,
    pub equalities: Vec<(Vec<Q>, Q)>,
    pub inequalities: Vec<(Vec<Q>, Q)>,
    /// Optional objective to minimize.
    pub objective: Option<Vec<Q>>,
}

impl LinearSystem {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            ..Default::default()
        }
    }

    pub fn push_eq(&mut self, coeffs: Vec<Q>, rhs: Q) {
        debug_assert_eq!(coeffs.len(), self.num_vars);
        self.equalities.push((coeffs, rhs));
    }

    pub fn push_le(&mut self, coeffs: Vec<Q>, rhs: Q) {
        debug_assert_eq!(coeffs.len(), self.num_vars);
        self.inequalities.push((coeffs, rhs));
    }

    fn check_shape(&self) -> Result<()> {
        for (c, _) in self.equalities.iter().chain(&self.inequalities) {
            if c.len() != self.num_vars {
                return Err(Error::MalformedSystem(format!(
                    "constraint has {} coefficients, expected {}",
                    c.len(),
                    self.num_vars
                )));
            }
        }
        if let Some(obj) = &self.objective {
            if obj.len() != self.num_vars {
                return Err(Error::MalformedSystem("objective length mismatch".into()));
            }
        }
        Ok(())
    }
}

/// Farkas-style infeasibility certificate. With multipliers `y` (free, one
/// per equality) and `z ≥ 0` (one per inequality), the combination satisfies
/// `Aᵀy + Gᵀz ≥ 0` componentwise while `bᵀy + hᵀz < 0`, which contradicts
/// the existence of any feasible `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct FarkasCertificate {
    pub eq_multipliers: Vec<Q>,
    pub ineq_multipliers: Vec<Q>,
}

impl FarkasCertificate {
    /// Substitution check of the certificate against the system.
    pub fn verify(&self, sys: &LinearSystem) -> bool {
        if self.eq_multipliers.len() != sys.equalities.len()
            || self.ineq_multipliers.len() != sys.inequalities.len()
        {
            return false;
        }
        if self.ineq_multipliers.iter().any(|z| z.is_negative()) {
            return false;
        }
        let mut combined = vec![Q::zero(); sys.num_vars];
        let mut rhs = Q::zero();
        for ((coeffs, b), y) in sys.equalities.iter().zip(&self.eq_multipliers) {
            for (c, co) in combined.iter_mut().zip(coeffs) {
                *c += y * co;
            }
            rhs += y * b;
        }
        for ((coeffs, h), z) in sys.inequalities.iter().zip(&self.ineq_multipliers) {
            for (c, co) in combined.iter_mut().zip(coeffs) {
                *c += z * co;
            }
            rhs += z * h;
        }
        combined.iter().all(|c| !c.is_negative()) && rhs.is_negative()
    }
}

/// Feasibility verdict with a checkable artifact either way.
#[derive(Debug, Clone)]
pub enum Verdict {
    Feasible { witness: Vec<Q> },
    Infeasible { certificate: FarkasCertificate },
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible { .. })
    }
}

/// Result of minimizing an objective over a feasible system.
#[derive(Debug, Clone)]
pub struct Optimum {
    pub value: Q,
    pub witness: Vec<Q>,
}

/// Checks that `x` satisfies every constraint of `sys` exactly.
pub fn satisfies(sys: &LinearSystem, x: &[Q]) -> bool {
    if x.len() != sys.num_vars || x.iter().any(|v| v.is_negative()) {
        return false;
    }
    let dot = |coeffs: &[Q]| -> Q {
        coeffs
            .iter()
            .zip(x)
            .map(|(c, v)| c * v)
            .fold(Q::zero(), |a, b| a + b)
    };
    sys.equalities.iter().all(|(c, b)| dot(c) == *b)
        && sys.inequalities.iter().all(|(c, h)| dot(c) <= *h)
}

/// Dense simplex tableau in standard form `Wx' = b, x' ≥ 0` where `x'`
/// stacks the original variables, the inequality slacks, and the phase-one
/// artificials.
struct Tableau {
    rows: usize,
    /// Columns: n original + s slacks + rows artificials.
    cols: usize,
    n_orig: usize,
    n_slack: usize,
    /// `a[r]` has length `cols + 1`; last entry is the rhs.
    a: Vec<Vec<Q>>,
    basis: Vec<usize>,
    /// Original row index (into eq list then ineq list) for each tableau row.
    row_source: Vec<RowSource>,
    /// Sign applied to the source row to make its rhs nonnegative.
    row_sign: Vec<Q>,
}

#[derive(Clone, Copy)]
enum RowSource {
    Eq(usize),
    Ineq(usize),
}

impl Tableau {
    fn build(sys: &LinearSystem) -> Self {
        let n = sys.num_vars;
        let s = sys.inequalities.len();
        let m = sys.equalities.len() + sys.inequalities.len();
        let cols = n + s + m;
        let mut a = Vec::with_capacity(m);
        let mut row_source = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        for (i, (coeffs, rhs)) in sys.equalities.iter().enumerate() {
            let mut row = vec![Q::zero(); cols + 1];
            row[..n].clone_from_slice(coeffs);
            row[cols] = rhs.clone();
            row_source.push(RowSource::Eq(i));
            row_sign.push(Q::one());
            a.push(row);
        }
        for (i, (coeffs, rhs)) in sys.inequalities.iter().enumerate() {
            let mut row = vec![Q::zero(); cols + 1];
            row[..n].clone_from_slice(coeffs);
            row[n + i] = Q::one();
            row[cols] = rhs.clone();
            row_source.push(RowSource::Ineq(i));
            row_sign.push(Q::one());
            a.push(row);
        }
        // Normalize rhs ≥ 0 and install the artificial basis.
        for (r, row) in a.iter_mut().enumerate() {
            if row[cols].is_negative() {
                for v in row.iter_mut() {
                    *v = -std::mem::take(v);
                }
                row_sign[r] = -Q::one();
            }
            row[n + s + r] = Q::one();
        }
        let basis = (0..m).map(|r| n + s + r).collect();
        Self {
            rows: m,
            cols,
            n_orig: n,
            n_slack: s,
            a,
            basis,
            row_source,
            row_sign,
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.a[row][col].clone();
        debug_assert!(!pivot.is_zero());
        for v in self.a[row].iter_mut() {
            *v /= &pivot;
        }
        for r in 0..self.rows {
            if r == row || self.a[r][col].is_zero() {
                continue;
            }
            let factor = self.a[r][col].clone();
            for c in 0..=self.cols {
                let delta = &factor * &self.a[row][c];
                self.a[r][c] -= delta;
            }
        }
        self.basis[row] = col;
    }

    /// Minimizes `cost` (length `cols`) with Bland's rule over the columns in
    /// `allowed`. Returns false if unbounded.
    fn minimize(&mut self, cost: &[Q], allowed: &dyn Fn(usize) -> bool) -> bool {
        loop {
            // Reduced costs: c_j - c_B B^{-1} A_j, computed from the tableau.
            let mut entering = None;
            for j in 0..self.cols {
                if !allowed(j) || self.basis.contains(&j) {
                    continue;
                }
                let mut red = cost[j].clone();
                for r in 0..self.rows {
                    red -= &cost[self.basis[r]] * &self.a[r][j];
                }
                if red.is_negative() {
                    entering = Some(j); // Bland: smallest index
                    break;
                }
            }
            let Some(j) = entering else { return true };
            // Ratio test, Bland tie-break on basis variable index.
            let mut leave: Option<(usize, Q)> = None;
            for r in 0..self.rows {
                if self.a[r][j].is_positive() {
                    let ratio = &self.a[r][self.cols] / &self.a[r][j];
                    match &leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < *lratio
                                || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, j);
        }
    }

    fn objective_value(&self, cost: &[Q]) -> Q {
        let mut v = Q::zero();
        for r in 0..self.rows {
            v += &cost[self.basis[r]] * &self.a[r][self.cols];
        }
        v
    }

    fn witness(&self) -> Vec<Q> {
        let mut x = vec![Q::zero(); self.n_orig];
        for r in 0..self.rows {
            if self.basis[r] < self.n_orig {
                x[self.basis[r]] = self.a[r][self.cols].clone();
            }
        }
        x
    }

    /// Phase-one cost vector: 1 on artificials, 0 elsewhere.
    fn phase_one_cost(&self) -> Vec<Q> {
        let mut c = vec![Q::zero(); self.cols];
        for j in (self.n_orig + self.n_slack)..self.cols {
            c[j] = Q::one();
        }
        c
    }

    /// Farkas multipliers from the phase-one optimum: `y = c_B B^{-1}` read
    /// off the artificial columns (which started as the identity), mapped
    /// back through the row normalization signs.
    fn farkas(&self, sys: &LinearSystem, cost: &[Q]) -> FarkasCertificate {
        let art0 = self.n_orig + self.n_slack;
        let mut eq_m = vec![Q::zero(); sys.equalities.len()];
        let mut ineq_m = vec![Q::zero(); sys.inequalities.len()];
        for (r0, source) in self.row_source.iter().enumerate() {
            // y_r0 = sum over basis rows of c_B * (B^{-1})[., r0]
            let mut y = Q::zero();
            for r in 0..self.rows {
                y += &cost[self.basis[r]] * &self.a[r][art0 + r0];
            }
            // Negate: the certificate convention wants Aᵀy + Gᵀz ≥ 0 with
            // bᵀy + hᵀz < 0, while phase-one duals satisfy yᵀA ≤ 0, yᵀb > 0.
            let y = -(y * &self.row_sign[r0]);
            match source {
                RowSource::Eq(i) => eq_m[*i] = y,
                RowSource::Ineq(i) => ineq_m[*i] = y,
            }
        }
        FarkasCertificate {
            eq_multipliers: eq_m,
            ineq_multipliers: ineq_m,
        }
    }
}

/// Decides feasibility and re-verifies the returned artifact by substitution.
pub fn lp_feasible(sys: &LinearSystem) -> Result<Verdict> {
    sys.check_shape()?;
    let mut t = Tableau::build(sys);
    let cost = t.phase_one_cost();
    if !t.minimize(&cost, &|_| true) {
        return Err(Error::MalformedSystem(
            "phase one cannot be unbounded".into(),
        ));
    }
    if t.objective_value(&cost).is_zero() {
        let witness = t.witness();
        if !satisfies(sys, &witness) {
            return Err(Error::MalformedSystem(
                "internal error: witness failed substitution check".into(),
            ));
        }
        Ok(Verdict::Feasible { witness })
    } else {
        let certificate = t.farkas(sys, &cost);
        if !certificate.verify(sys) {
            return Err(Error::MalformedSystem(
                "internal error: certificate failed substitution check".into(),
            ));
        }
        Ok(Verdict::Infeasible { certificate })
    }
}

/// Minimizes the system's objective; the witness is re-verified and its
/// objective value recomputed by substitution.
pub fn lp_minimize(sys: &LinearSystem) -> Result<std::result::Result<Optimum, FarkasCertificate>> {
    sys.check_shape()?;
    let objective = sys
        .objective
        .as_ref()
        .ok_or_else(|| Error::MalformedSystem("no objective".into()))?;
    let mut t = Tableau::build(sys);
    let p1 = t.phase_one_cost();
    if !t.minimize(&p1, &|_| true) {
        return Err(Error::MalformedSystem(
            "phase one cannot be unbounded".into(),
        ));
    }
    if !t.objective_value(&p1).is_zero() {
        let certificate = t.farkas(sys, &p1);
        if !certificate.verify(sys) {
            return Err(Error::MalformedSystem(
                "internal error: certificate failed substitution check".into(),
            ));
        }
        return Ok(Err(certificate));
    }
    // Drive out any artificial still in the basis at level zero.
    let art0 = t.n_orig + t.n_slack;
    for r in 0..t.rows {
        if t.basis[r] >= art0 {
            if let Some(j) = (0..art0).find(|&j| !t.a[r][j].is_zero()) {
                t.pivot(r, j);
            }
            // A fully zero row is a redundant constraint; the artificial
            // stays basic at zero and never re-enters because phase two
            // forbids artificial columns.
        }
    }
    let mut p2 = vec![Q::zero(); t.cols];
    p2[..t.n_orig].clone_from_slice(objective);
    if !t.minimize(&p2, &|j| j < art0) {
        return Err(Error::Unbounded);
    }
    let witness = t.witness();
    if !satisfies(sys, &witness) {
        return Err(Error::MalformedSystem(
            "internal error: optimum failed substitution check".into(),
        ));
    }
    let value = objective
        .iter()
        .zip(&witness)
        .map(|(c, x)| c * x)
        .fold(Q::zero(), |a, b| a + b);
    Ok(Ok(Optimum { value, witness }))
}
