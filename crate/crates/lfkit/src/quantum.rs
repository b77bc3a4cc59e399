//! Dense state-vector realization of the minimal Wigner's-friend scenario.
//!
//! Three factors: the friend's system S, the friend's memory M, and the
//! remote share B. The friend's fixed measurement is modeled unitarily as an
//! entangling copy onto M, so the superobserver can undo it exactly. The
//! copy setting (x = 1) reads M; every other setting applies the declared
//! inverse and then measures S directly.
//!
//! The run produces two kinds of tables. Operational tables — P(ab|xy),
//! P(ac|x=1), P(c|xy) — predict what the agents record. The bookkeeping
//! table P(abc|xy) assigns the friend's outcome a value on the pre-reversal
//! branch even in reversed runs; it is model bookkeeping, not operational
//! data, and it is the table the statistical constraints are checked on.

use crate::dist::{FloatDist, VariableSpec};
use crate::error::{Error, Result};
use num_complex::Complex64;

const TOL: f64 = 1e-12;

type C64 = Complex64;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Complex amplitude vector over a tensor product of declared factors.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub dims: Vec<usize>,
    pub amps: Vec<C64>,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if amps.len() != total {
            return Err(Error::QuantumInvariant(format!(
                "state has {} amplitudes for dimension {total}",
                amps.len()
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > TOL {
            return Err(Error::QuantumInvariant(format!(
                "state norm² = {norm}, expected 1"
            )));
        }
        Ok(Self { dims, amps })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn inner(&self, other: &Self) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Strides for mixed-radix indexing.
    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    /// Applies a square matrix to one factor (unnormalized result allowed).
    fn apply_one(&self, mat: &[C64], factor: usize) -> Self {
        let d = self.dims[factor];
        debug_assert_eq!(mat.len(), d * d);
        let strides = self.strides();
        let stride = strides[factor];
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        let block = stride * d;
        let mut base = 0;
        while base < self.amps.len() {
            for offset in 0..stride {
                for i in 0..d {
                    let mut acc = C64::new(0.0, 0.0);
                    for j in 0..d {
                        acc += mat[i * d + j] * self.amps[base + offset + j * stride];
                    }
                    out[base + offset + i * stride] = acc;
                }
            }
            base += block;
        }
        Self {
            dims: self.dims.clone(),
            amps: out,
        }
    }

    /// Applies a matrix acting jointly on two adjacent-declared factors.
    fn apply_two(&self, mat: &[C64], f1: usize, f2: usize) -> Self {
        let (d1, d2) = (self.dims[f1], self.dims[f2]);
        let d = d1 * d2;
        debug_assert_eq!(mat.len(), d * d);
        let strides = self.strides();
        let (s1, s2) = (strides[f1], strides[f2]);
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        // Enumerate assignments of the untouched factors.
        let total = self.amps.len();
        let mut fixed_indices = Vec::new();
        for idx in 0..total {
            let i1 = (idx / s1) % d1;
            let i2 = (idx / s2) % d2;
            if i1 == 0 && i2 == 0 {
                fixed_indices.push(idx);
            }
        }
        for &base in &fixed_indices {
            for i1 in 0..d1 {
                for i2 in 0..d2 {
                    let row = i1 * d2 + i2;
                    let mut acc = C64::new(0.0, 0.0);
                    for j1 in 0..d1 {
                        for j2 in 0..d2 {
                            let col = j1 * d2 + j2;
                            acc += mat[row * d + col] * self.amps[base + j1 * s1 + j2 * s2];
                        }
                    }
                    out[base + i1 * s1 + i2 * s2] = acc;
                }
            }
        }
        Self {
            dims: self.dims.clone(),
            amps: out,
        }
    }

    /// Zeroes every amplitude whose `factor` digit differs from `value`.
    fn project_factor(&self, factor: usize, value: usize) -> Self {
        let strides = self.strides();
        let s = strides[factor];
        let d = self.dims[factor];
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                if (idx / s) % d == value {
                    *a
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        Self {
            dims: self.dims.clone(),
            amps,
        }
    }
}

/// Square complex matrix with a unitarity invariant.
#[derive(Debug, Clone)]
pub struct Unitary {
    pub dim: usize,
    /// Row-major entries.
    pub mat: Vec<C64>,
}

impl Unitary {
    pub fn new(dim: usize, mat: Vec<C64>) -> Result<Self> {
        if mat.len() != dim * dim {
            return Err(Error::QuantumInvariant("unitary shape mismatch".into()));
        }
        let u = Self { dim, mat };
        if !u.is_unitary(TOL) {
            return Err(Error::QuantumInvariant(
                "matrix is not unitary within 1e-12".into(),
            ));
        }
        Ok(u)
    }

    fn is_unitary(&self, tol: f64) -> bool {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.mat[k * d + i].conj() * self.mat[k * d + j];
                }
                let expected = if i == j { 1.0 } else { 0.0 };
                if (acc - c(expected)).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn dagger(&self) -> Self {
        let d = self.dim;
        let mut mat = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                mat[j * d + i] = self.mat[i * d + j].conj();
            }
        }
        Self { dim: d, mat }
    }

    /// The copy gate |s, m⟩ → |s, m + s mod d⟩ on two d-dimensional factors.
    pub fn copy_gate(d: usize) -> Self {
        let dim = d * d;
        let mut mat = vec![C64::new(0.0, 0.0); dim * dim];
        for s in 0..d {
            for m in 0..d {
                let col = s * d + m;
                let row = s * d + (m + s) % d;
                mat[row * dim + col] = c(1.0);
            }
        }
        Self { dim, mat }
    }

    fn compose(&self, other: &Self) -> Vec<C64> {
        let d = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.mat[i * d + k] * other.mat[k * d + j];
                }
                out[i * d + j] = acc;
            }
        }
        out
    }
}

/// Labeled positive operators on one factor, summing to the identity.
#[derive(Debug, Clone)]
pub struct EffectFamily {
    pub dim: usize,
    /// One row-major matrix per outcome label 0..n.
    pub effects: Vec<Vec<C64>>,
}

impl EffectFamily {
    pub fn new(dim: usize, effects: Vec<Vec<C64>>) -> Result<Self> {
        for e in &effects {
            if e.len() != dim * dim {
                return Err(Error::QuantumInvariant("effect shape mismatch".into()));
            }
            if !is_psd(e, dim, TOL) {
                return Err(Error::QuantumInvariant(
                    "effect is not positive semidefinite within 1e-12".into(),
                ));
            }
        }
        // Completeness.
        for i in 0..dim {
            for j in 0..dim {
                let sum: C64 = effects.iter().map(|e| e[i * dim + j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                if (sum - c(expected)).norm() > TOL {
                    return Err(Error::QuantumInvariant(
                        "effects do not sum to the identity within 1e-12".into(),
                    ));
                }
            }
        }
        Ok(Self { dim, effects })
    }

    pub fn outcome_count(&self) -> usize {
        self.effects.len()
    }

    /// Projective qubit measurement along cos θ σ_z + sin θ σ_x; outcome 0
    /// is the +1 eigenvector.
    pub fn projective_qubit(theta: f64) -> Self {
        let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let plus = [c(ct * ct), c(ct * st), c(st * ct), c(st * st)];
        let minus = [c(st * st), c(-st * ct), c(-ct * st), c(ct * ct)];
        Self {
            dim: 2,
            effects: vec![plus.to_vec(), minus.to_vec()],
        }
    }
}

/// Hermitian + pivoted-Cholesky PSD test: H + tol·I must admit a Cholesky
/// factorization.
fn is_psd(mat: &[C64], dim: usize, tol: f64) -> bool {
    for i in 0..dim {
        for j in 0..dim {
            if (mat[i * dim + j] - mat[j * dim + i].conj()).norm() > tol {
                return false;
            }
        }
    }
    let mut a: Vec<C64> = mat.to_vec();
    for i in 0..dim {
        a[i * dim + i] += c(tol * 10.0);
    }
    let mut l = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut sum = a[i * dim + j];
            for k in 0..j {
                sum -= l[i * dim + k] * l[j * dim + k].conj();
            }
            if i == j {
                if sum.re <= 0.0 || sum.im.abs() > tol {
                    return false;
                }
                l[i * dim + i] = c(sum.re.sqrt());
            } else {
                l[i * dim + j] = sum / l[j * dim + j];
            }
        }
    }
    true
}

/// The superobserver's per-setting action.
#[derive(Debug, Clone)]
pub enum AliceAction {
    /// Read the friend's memory; the outcome is the record itself.
    CopyMemory,
    /// Undo the friend's measurement, then measure the system.
    ReverseThenMeasure(EffectFamily),
}

/// Complete description of one minimal-scenario run.
#[derive(Debug, Clone)]
pub struct MinimalLfModel {
    /// Pure state of (system S, remote share B).
    pub initial: StateVector,
    /// Friend's measurement as a unitary on (S, memory M).
    pub charlie_unitary: Unitary,
    /// Declared inverse; `None` means the adjoint.
    pub charlie_reverse: Option<Unitary>,
    /// Per-setting actions; index 1 must be the copy.
    pub alice: Vec<AliceAction>,
    /// Per-setting effect families on B.
    pub bob: Vec<EffectFamily>,
}

impl MinimalLfModel {
    fn validate(&self) -> Result<(usize, usize, usize)> {
        if self.initial.dims.len() != 2 {
            return Err(Error::QuantumInvariant(
                "initial state must have factors (S, B)".into(),
            ));
        }
        let (ds, db) = (self.initial.dims[0], self.initial.dims[1]);
        let dm = ds; // memory records one of the friend's outcomes
        if self.charlie_unitary.dim != ds * dm {
            return Err(Error::QuantumInvariant(
                "friend unitary must act on S ⊗ M".into(),
            ));
        }
        if self.alice.len() < 2 {
            return Err(Error::QuantumInvariant("need at least two settings".into()));
        }
        if !matches!(self.alice[1], AliceAction::CopyMemory) {
            return Err(Error::QuantumInvariant(
                "the x = 1 action must be the memory copy".into(),
            ));
        }
        for (i, action) in self.alice.iter().enumerate() {
            match action {
                AliceAction::CopyMemory if i != 1 => {
                    return Err(Error::QuantumInvariant(
                        "only x = 1 may copy the memory".into(),
                    ))
                }
                AliceAction::ReverseThenMeasure(f) if f.dim != ds || f.outcome_count() != dm => {
                    return Err(Error::QuantumInvariant(
                        "reversal measurement must act on S with one outcome per record value"
                            .into(),
                    ));
                }
                _ => {}
            }
        }
        if self.bob.is_empty() {
            return Err(Error::QuantumInvariant(
                "need at least one remote setting".into(),
            ));
        }
        let nb = self.bob[0].outcome_count();
        for f in &self.bob {
            if f.dim != db || f.outcome_count() != nb {
                return Err(Error::QuantumInvariant(
                    "remote effect families disagree".into(),
                ));
            }
        }
        if let Some(rev) = &self.charlie_reverse {
            if rev.dim != self.charlie_unitary.dim {
                return Err(Error::QuantumInvariant(
                    "declared inverse has wrong shape".into(),
                ));
            }
        }
        Ok((ds, dm, db))
    }

    fn reverse_unitary(&self) -> Unitary {
        self.charlie_reverse
            .clone()
            .unwrap_or_else(|| self.charlie_unitary.dagger())
    }
}

/// Output tables of one simulated scenario.
#[derive(Debug, Clone)]
pub struct MinimalLfOutput {
    /// Operational Alice-Bob box P(ab|xy).
    pub pab: FloatDist,
    /// Operational copy-setting table P(ac|x=1).
    pub pac_x1: FloatDist,
    /// Friend-outcome table P(c|xy); constant across contexts.
    pub pc: FloatDist,
    /// Bookkeeping joint P(abc|xy) with the friend's outcome defined on the
    /// pre-reversal branch. Not operational data.
    pub bookkeeping: FloatDist,
}

/// Runs the scenario and assembles all output tables.
pub fn run_minimal_lf(model: &MinimalLfModel) -> Result<MinimalLfOutput> {
    let (ds, dm, db) = model.validate()?;
    let total_dim = ds * dm * db;
    if total_dim > 1 << 12 {
        return Err(Error::SizeGuard("state space exceeds the 2^12 cap".into()));
    }
    // Embed initial (S, B) with M = |0⟩ into factors [S, M, B].
    let mut amps = vec![C64::new(0.0, 0.0); total_dim];
    for s in 0..ds {
        for b in 0..db {
            amps[(s * dm) * db + b] = model.initial.amps[s * db + b];
        }
    }
    let embedded = StateVector::new(vec![ds, dm, db], amps)?;
    // Friend's measurement happens before any setting-dependent action.
    let pre_reversal = embedded.apply_two(&model.charlie_unitary.mat, 0, 1);
    let branches: Vec<StateVector> = (0..dm).map(|m| pre_reversal.project_factor(1, m)).collect();
    let reverse = model.reverse_unitary();

    let nx = model.alice.len();
    let ny = model.bob.len();
    let na = dm;
    let nb = model.bob[0].outcome_count();
    let nc = dm;

    // bookkeeping[x][y][a][b][c]
    let mut book = vec![0.0f64; nx * ny * na * nb * nc];
    let mut operational_pab = vec![0.0f64; nx * ny * na * nb];
    let book_idx = |x: usize, y: usize, a: usize, b: usize, cc: usize| {
        (((x * ny + y) * na + a) * nb + b) * nc + cc
    };
    let pab_idx = |x: usize, y: usize, a: usize, b: usize| ((x * ny + y) * na + a) * nb + b;

    for (x, action) in model.alice.iter().enumerate() {
        for (y, bob_family) in model.bob.iter().enumerate() {
            match action {
                AliceAction::CopyMemory => {
                    for (cv, branch) in branches.iter().enumerate() {
                        for (b, eb) in bob_family.effects.iter().enumerate() {
                            let after = branch.apply_one(eb, 2);
                            let p = branch.inner(&after).re;
                            // a = c exactly: the record is the outcome.
                            book[book_idx(x, y, cv, b, cv)] = p;
                            operational_pab[pab_idx(x, y, cv, b)] = p;
                        }
                    }
                }
                AliceAction::ReverseThenMeasure(family) => {
                    // Operational: no record readout, coherent reversal.
                    let restored = pre_reversal.apply_two(&reverse.mat, 0, 1);
                    for (a, ea) in family.effects.iter().enumerate() {
                        let after_a = restored.apply_one(ea, 0);
                        for (b, eb) in bob_family.effects.iter().enumerate() {
                            let after_ab = after_a.apply_one(eb, 2);
                            operational_pab[pab_idx(x, y, a, b)] = restored.inner(&after_ab).re;
                        }
                    }
                    // Bookkeeping: the record value is set on the
                    // pre-reversal branch, then that branch is reversed.
                    for (cv, branch) in branches.iter().enumerate() {
                        let reversed = branch.apply_two(&reverse.mat, 0, 1);
                        for (a, ea) in family.effects.iter().enumerate() {
                            let after_a = reversed.apply_one(ea, 0);
                            for (b, eb) in bob_family.effects.iter().enumerate() {
                                let after_ab = after_a.apply_one(eb, 2);
                                book[book_idx(x, y, a, b, cv)] = reversed.inner(&after_ab).re;
                            }
                        }
                    }
                }
            }
        }
    }

    let clamp = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    let pab = FloatDist::new(
        vec![VariableSpec::new("A", na), VariableSpec::new("B", nb)],
        vec![VariableSpec::new("X", nx), VariableSpec::new("Y", ny)],
        operational_pab.iter().map(|&v| clamp(v)).collect(),
    )?;
    let bookkeeping = FloatDist::new(
        vec![
            VariableSpec::new("A", na),
            VariableSpec::new("B", nb),
            VariableSpec::new("C", nc),
        ],
        vec![VariableSpec::new("X", nx), VariableSpec::new("Y", ny)],
        book.iter().map(|&v| clamp(v)).collect(),
    )?;
    // P(ac|x=1): read from the copy branch at y = 0 (y-independent).
    let mut pac = vec![0.0f64; na * nc];
    for a in 0..na {
        for cv in 0..nc {
            for b in 0..nb {
                pac[a * nc + cv] += book[book_idx(1, 0, a, b, cv)];
            }
        }
    }
    let pac_x1 = FloatDist::new(
        vec![VariableSpec::new("A", na), VariableSpec::new("C", nc)],
        vec![],
        pac.iter().map(|&v| clamp(v)).collect(),
    )?;
    // P(c|xy): branch weights, identical in every context by construction.
    let weights: Vec<f64> = branches.iter().map(|br| br.norm_sqr()).collect();
    let mut pc = Vec::with_capacity(nx * ny * nc);
    for _x in 0..nx {
        for _y in 0..ny {
            pc.extend(weights.iter().copied());
        }
    }
    let pc = FloatDist::new(
        vec![VariableSpec::new("C", nc)],
        vec![VariableSpec::new("X", nx), VariableSpec::new("Y", ny)],
        pc,
    )?;
    Ok(MinimalLfOutput {
        pab,
        pac_x1,
        pc,
        bookkeeping,
    })
}

/// Deviations of the bookkeeping joint from the two statistical constraints
/// `P(ac|xy) = P(ac|x)` and `P(bc|xy) = P(bc|y)`.
#[derive(Debug, Clone)]
pub struct LocalAgencyReport {
    pub max_dev_alice_friend: f64,
    pub max_dev_bob_friend: f64,
    pub pass: bool,
    pub tolerance: f64,
}

pub fn verify_local_agency(bookkeeping: &FloatDist, tolerance: f64) -> Result<LocalAgencyReport> {
    let pac = bookkeeping.marginalize(&["A", "C"])?;
    let pbc = bookkeeping.marginalize(&["B", "C"])?;
    let nx = pac.settings()[0].cardinality;
    let ny = pac.settings()[1].cardinality;
    let na = pac.outcomes()[0].cardinality;
    let ncc = pac.outcomes()[1].cardinality;
    let nb = pbc.outcomes()[0].cardinality;
    let mut dev_ac = 0.0f64;
    for a in 0..na {
        for cv in 0..ncc {
            for x in 0..nx {
                let reference = pac.prob(&[x, 0], &[a, cv]);
                for y in 1..ny {
                    dev_ac = dev_ac.max((pac.prob(&[x, y], &[a, cv]) - reference).abs());
                }
            }
        }
    }
    let mut dev_bc = 0.0f64;
    for b in 0..nb {
        for cv in 0..ncc {
            for y in 0..ny {
                let reference = pbc.prob(&[0, y], &[b, cv]);
                for x in 1..nx {
                    dev_bc = dev_bc.max((pbc.prob(&[x, y], &[b, cv]) - reference).abs());
                }
            }
        }
    }
    Ok(LocalAgencyReport {
        max_dev_alice_friend: dev_ac,
        max_dev_bob_friend: dev_bc,
        pass: dev_ac <= tolerance && dev_bc <= tolerance,
        tolerance,
    })
}

/// Checks that the declared inverse actually undoes the friend's unitary on
/// a full basis sweep.
pub fn reversal_soundness(model: &MinimalLfModel) -> bool {
    let u = &model.charlie_unitary;
    let rev = model.reverse_unitary();
    let prod = rev.compose(u);
    let d = u.dim;
    for i in 0..d {
        for j in 0..d {
            let expected = if i == j { 1.0 } else { 0.0 };
            if (prod[i * d + j] - c(expected)).norm() > TOL {
                return false;
            }
        }
    }
    true
}

/// The shipped default: maximally entangled pair, copy-gate friend
/// measurement at angle 0, reversal setting measuring at π/2, remote
/// settings at π/4 and 3π/4. Realizes the maximal quantum violation with a
/// perfect copy at x = 1.
pub fn tsirelson_model() -> MinimalLfModel {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let initial =
        StateVector::new(vec![2, 2], vec![c(r), c(0.0), c(0.0), c(r)]).expect("static state");
    MinimalLfModel {
        initial,
        charlie_unitary: Unitary::copy_gate(2),
        charlie_reverse: None,
        alice: vec![
            AliceAction::ReverseThenMeasure(EffectFamily::projective_qubit(
                std::f64::consts::FRAC_PI_2,
            )),
            AliceAction::CopyMemory,
        ],
        bob: vec![
            EffectFamily::projective_qubit(std::f64::consts::FRAC_PI_4),
            EffectFamily::projective_qubit(3.0 * std::f64::consts::FRAC_PI_4),
        ],
    }
}

/// Same wiring but a product initial state: no violation is possible.
pub fn product_state_model() -> MinimalLfModel {
    let mut m = tsirelson_model();
    m.initial =
        StateVector::new(vec![2, 2], vec![c(1.0), c(0.0), c(0.0), c(0.0)]).expect("static state");
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::boxes;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn default_model_hits_the_quantum_maximum() {
        let out = run_minimal_lf(&tsirelson_model()).unwrap();
        let chsh = boxes::chsh_value(&out.pab).unwrap();
        assert!((chsh - (2.0 + SQRT2)).abs() < 1e-9, "chsh = {chsh}");
        // Perfect copy: P(a|c, x=1) is exactly the identity table.
        for a in 0..2 {
            for cv in 0..2 {
                let p = out.pac_x1.prob(&[], &[a, cv]);
                if a == cv {
                    assert!(p > 0.0);
                } else {
                    assert_eq!(p, 0.0);
                }
            }
        }
    }

    #[test]
    fn local_agency_holds_on_bookkeeping() {
        let out = run_minimal_lf(&tsirelson_model()).unwrap();
        let report = verify_local_agency(&out.bookkeeping, 1e-12).unwrap();
        assert!(report.pass, "deviations {report:?}");
    }

    #[test]
    fn friend_outcome_is_context_independent() {
        let out = run_minimal_lf(&tsirelson_model()).unwrap();
        for cv in 0..2 {
            let reference = out.pc.prob(&[0, 0], &[cv]);
            for x in 0..2 {
                for y in 0..2 {
                    assert!((out.pc.prob(&[x, y], &[cv]) - reference).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn product_state_stays_classical() {
        let out = run_minimal_lf(&product_state_model()).unwrap();
        let chsh = boxes::chsh_value(&out.pab).unwrap();
        assert!(chsh <= 3.0 + 1e-12, "chsh = {chsh}");
        let (exact, radius) = boxes::rationalize_ns_binary(&out.pab, 1_000_000_000).unwrap();
        assert!(radius < 1e-9);
        let m = crate::marginal::membership(&exact, &crate::marginal::BoxPolytope::Lhv).unwrap();
        assert!(m.inside);
    }

    #[test]
    fn signaling_free_outputs() {
        let out = run_minimal_lf(&tsirelson_model()).unwrap();
        for a in 0..2 {
            for x in 0..2 {
                let m0 = out.pab.prob(&[x, 0], &[a, 0]) + out.pab.prob(&[x, 0], &[a, 1]);
                let m1 = out.pab.prob(&[x, 1], &[a, 0]) + out.pab.prob(&[x, 1], &[a, 1]);
                assert!((m0 - m1).abs() < 1e-12);
            }
        }
        for b in 0..2 {
            for y in 0..2 {
                let m0 = out.pab.prob(&[0, y], &[0, b]) + out.pab.prob(&[0, y], &[1, b]);
                let m1 = out.pab.prob(&[1, y], &[0, b]) + out.pab.prob(&[1, y], &[1, b]);
                assert!((m0 - m1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hand_built_signaling_table_fails_agency_check() {
        // P(b|xy) depends on x: bookkeeping with B copying X.
        let mut table = vec![0.0f64; 32];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        for cv in 0..2 {
                            let idx = (((x * 2 + y) * 2 + a) * 2 + b) * 2 + cv;
                            table[idx] = if a == 0 && b == x && cv == 0 {
                                1.0
                            } else {
                                0.0
                            };
                        }
                    }
                }
            }
        }
        let book = FloatDist::new(
            vec![
                VariableSpec::new("A", 2),
                VariableSpec::new("B", 2),
                VariableSpec::new("C", 2),
            ],
            vec![VariableSpec::new("X", 2), VariableSpec::new("Y", 2)],
            table,
        )
        .unwrap();
        let report = verify_local_agency(&book, 1e-12).unwrap();
        assert!(!report.pass);
        assert!(report.max_dev_bob_friend > 0.5);
    }

    #[test]
    fn white_noise_bookkeeping_passes_with_zero_deviation() {
        let book = FloatDist::new(
            vec![
                VariableSpec::new("A", 2),
                VariableSpec::new("B", 2),
                VariableSpec::new("C", 2),
            ],
            vec![VariableSpec::new("X", 2), VariableSpec::new("Y", 2)],
            vec![1.0 / 8.0; 32],
        )
        .unwrap();
        let report = verify_local_agency(&book, 1e-12).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_dev_alice_friend, 0.0);
        assert_eq!(report.max_dev_bob_friend, 0.0);
    }

    #[test]
    fn reversal_soundness_checks() {
        let m = tsirelson_model();
        assert!(reversal_soundness(&m));
        // The copy gate is self-inverse on qubits.
        let mut with_explicit = m.clone();
        with_explicit.charlie_reverse = Some(Unitary::copy_gate(2));
        assert!(reversal_soundness(&with_explicit));
        // A mismatched declared inverse fails.
        let mut bad = m.clone();
        let theta = 0.3f64;
        bad.charlie_reverse = Some(
            Unitary::new(
                4,
                vec![
                    c(theta.cos()),
                    c(-theta.sin()),
                    c(0.0),
                    c(0.0),
                    c(theta.sin()),
                    c(theta.cos()),
                    c(0.0),
                    c(0.0),
                    c(0.0),
                    c(0.0),
                    c(1.0),
                    c(0.0),
                    c(0.0),
                    c(0.0),
                    c(0.0),
                    c(1.0),
                ],
            )
            .unwrap(),
        );
        assert!(!reversal_soundness(&bad));
    }

    #[test]
    fn invariants_rejected() {
        // Non-normalized state.
        assert!(StateVector::new(vec![2], vec![c(1.0), c(1.0)]).is_err());
        // Non-unitary matrix.
        assert!(Unitary::new(2, vec![c(1.0), c(1.0), c(0.0), c(1.0)]).is_err());
        // Effects not summing to identity.
        let half = vec![c(0.5), c(0.0), c(0.0), c(0.5)];
        assert!(EffectFamily::new(2, vec![half.clone(), half.clone(), half]).is_err());
        // Copy action at the wrong setting index.
        let mut m = tsirelson_model();
        m.alice.swap(0, 1);
        assert!(matches!(
            run_minimal_lf(&m),
            Err(Error::QuantumInvariant(_))
        ));
    }

    #[test]
    fn copy_branch_marginal_matches_friend_angle() {
        // Alice's copy statistics equal a direct measurement at the friend's
        // angle: E(1, y) = cos(β_y).
        let out = run_minimal_lf(&tsirelson_model()).unwrap();
        for (y, beta) in [
            (0, std::f64::consts::FRAC_PI_4),
            (1, 3.0 * std::f64::consts::FRAC_PI_4),
        ] {
            let mut e = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let p = out.pab.prob(&[1, y], &[a, b]);
                    e += if a == b { p } else { -p };
                }
            }
            assert!((e - beta.cos()).abs() < 1e-12, "y={y}: E={e}");
        }
    }
}
