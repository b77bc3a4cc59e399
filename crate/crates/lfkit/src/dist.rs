//! Discrete conditional distributions over labeled variables.
//!
//! The primary representation is exact-rational; a floating mirror exists
//! for quantum-sourced tables, with an explicit rationalization step that
//! reports its rounding radius. Tables are flat, row-major over (settings,
//! outcomes): the setting assignment varies slowest.

use crate::error::{Error, Result};
use crate::ratio::{self, rationalize_f64};
use crate::Q;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Scalar abstraction so the same table machinery runs exactly (rational)
/// or approximately (f64).
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + Zero
    + One
{
    fn from_ratio(num: i64, den: i64) -> Self;
    fn abs_val(&self) -> Self;
    fn to_f64_lossy(&self) -> f64;
    /// Slack allowed when validating normalization at construction.
    fn normalization_slack() -> Self;
}

impl Scalar for Q {
    fn from_ratio(num: i64, den: i64) -> Self {
        ratio::q(num, den)
    }
    fn abs_val(&self) -> Self {
        Signed::abs(self)
    }
    fn to_f64_lossy(&self) -> f64 {
        ratio::to_f64(self)
    }
    fn normalization_slack() -> Self {
        Q::zero()
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
    fn normalization_slack() -> Self {
        1e-9
    }
}

/// A named variable with a finite outcome range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableSpec {
    pub label: String,
    pub cardinality: usize,
}

impl VariableSpec {
    pub fn new(label: impl Into<String>, cardinality: usize) -> Self {
        assert!(cardinality >= 1, "cardinality must be at least 1");
        Self {
            label: label.into(),
            cardinality,
        }
    }
}

/// Conditional distribution P(outcomes | settings) with a dense table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution<S: Scalar> {
    outcomes: Vec<VariableSpec>,
    settings: Vec<VariableSpec>,
    table: Vec<S>,
}

pub type ExactDist = ConditionalDistribution<Q>;
pub type FloatDist = ConditionalDistribution<f64>;

fn radix_size(vars: &[VariableSpec]) -> usize {
    vars.iter().map(|v| v.cardinality).product()
}

fn index_of(vars: &[VariableSpec], assignment: &[usize]) -> usize {
    let mut idx = 0;
    for (v, &a) in vars.iter().zip(assignment) {
        debug_assert!(a < v.cardinality);
        idx = idx * v.cardinality + a;
    }
    idx
}

fn unindex(vars: &[VariableSpec], mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; vars.len()];
    for (k, v) in vars.iter().enumerate().rev() {
        out[k] = idx % v.cardinality;
        idx /= v.cardinality;
    }
    out
}

/// Iterator over all assignments of a variable list.
pub fn assignments(vars: &[VariableSpec]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total = radix_size(vars);
    (0..total).map(move |i| unindex(vars, i))
}

impl<S: Scalar> ConditionalDistribution<S> {
    /// Builds a table, validating nonnegativity and per-context normalization.
    pub fn new(
        outcomes: Vec<VariableSpec>,
        settings: Vec<VariableSpec>,
        table: Vec<S>,
    ) -> Result<Self> {
        let expected = radix_size(&outcomes) * radix_size(&settings);
        if table.len() != expected {
            return Err(Error::TableShape {
                expected,
                got: table.len(),
            });
        }
        let d = Self {
            outcomes,
            settings,
            table,
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<()> {
        let outcome_size = radix_size(&self.outcomes);
        let slack = S::normalization_slack();
        for (ctx_i, chunk) in self.table.chunks(outcome_size).enumerate() {
            let ctx = || format!("{:?}", unindex(&self.settings, ctx_i));
            let mut sum = S::zero();
            for p in chunk {
                if *p < S::zero() {
                    return Err(Error::NegativeProbability(ctx()));
                }
                sum = sum + p.clone();
            }
            let dev = (sum - S::one()).abs_val();
            if dev > slack {
                return Err(Error::NotNormalized(ctx()));
            }
        }
        Ok(())
    }

    pub fn outcomes(&self) -> &[VariableSpec] {
        &self.outcomes
    }

    pub fn settings(&self) -> &[VariableSpec] {
        &self.settings
    }

    pub fn table(&self) -> &[S] {
        &self.table
    }

    pub fn outcome_index(&self, label: &str) -> Result<usize> {
        self.outcomes
            .iter()
            .position(|v| v.label == label)
            .ok_or_else(|| Error::UnknownVariable(label.to_owned()))
    }

    pub fn setting_index(&self, label: &str) -> Result<usize> {
        self.settings
            .iter()
            .position(|v| v.label == label)
            .ok_or_else(|| Error::UnknownVariable(label.to_owned()))
    }

    /// Probability of one joint outcome in one setting context.
    pub fn prob(&self, setting: &[usize], outcome: &[usize]) -> S {
        let ctx = index_of(&self.settings, setting);
        let o = index_of(&self.outcomes, outcome);
        self.table[ctx * radix_size(&self.outcomes) + o].clone()
    }

    /// Sums out every outcome variable not in `keep`; settings unchanged.
    pub fn marginalize(&self, keep: &[&str]) -> Result<Self> {
        let mut keep_idx = Vec::new();
        for k in keep {
            keep_idx.push(self.outcome_index(k)?);
        }
        let new_outcomes: Vec<VariableSpec> =
            keep_idx.iter().map(|&i| self.outcomes[i].clone()).collect();
        let new_osize = radix_size(&new_outcomes);
        let old_osize = radix_size(&self.outcomes);
        let ctxs = radix_size(&self.settings);
        let mut table = vec![S::zero(); ctxs * new_osize];
        for ctx in 0..ctxs {
            for o in 0..old_osize {
                let full = unindex(&self.outcomes, o);
                let kept: Vec<usize> = keep_idx.iter().map(|&i| full[i]).collect();
                let no = index_of(&new_outcomes, &kept);
                let t = &mut table[ctx * new_osize + no];
                *t = t.clone() + self.table[ctx * old_osize + o].clone();
            }
        }
        Self::new(new_outcomes, self.settings.clone(), table)
    }

    /// Fixes some setting variables to given values; they disappear from the
    /// setting list of the result.
    pub fn restrict_setting(&self, fixed: &[(&str, usize)]) -> Result<Self> {
        let mut fixed_map = BTreeMap::new();
        for (label, value) in fixed {
            let idx = self.setting_index(label)?;
            let card = self.settings[idx].cardinality;
            if *value >= card {
                return Err(Error::SettingOutOfRange {
                    var: (*label).to_owned(),
                    value: *value,
                    card,
                });
            }
            fixed_map.insert(idx, *value);
        }
        let remaining: Vec<usize> = (0..self.settings.len())
            .filter(|i| !fixed_map.contains_key(i))
            .collect();
        let new_settings: Vec<VariableSpec> = remaining
            .iter()
            .map(|&i| self.settings[i].clone())
            .collect();
        let osize = radix_size(&self.outcomes);
        let mut table = Vec::with_capacity(radix_size(&new_settings) * osize);
        for new_ctx in assignments(&new_settings) {
            let mut full = vec![0usize; self.settings.len()];
            for (k, &i) in remaining.iter().enumerate() {
                full[i] = new_ctx[k];
            }
            for (&i, &v) in &fixed_map {
                full[i] = v;
            }
            let ctx = index_of(&self.settings, &full);
            table.extend(self.table[ctx * osize..(ctx + 1) * osize].iter().cloned());
        }
        Self::new(self.outcomes.clone(), new_settings, table)
    }

    /// Convex combination of distributions over identical variables.
    pub fn mixture(dists: &[Self], weights: &[S]) -> Result<Self> {
        if dists.is_empty() || dists.len() != weights.len() {
            return Err(Error::BadWeights);
        }
        let mut wsum = S::zero();
        for w in weights {
            if *w < S::zero() {
                return Err(Error::BadWeights);
            }
            wsum = wsum + w.clone();
        }
        if (wsum - S::one()).abs_val() > S::normalization_slack() {
            return Err(Error::BadWeights);
        }
        let first = &dists[0];
        for d in dists {
            if d.outcomes != first.outcomes || d.settings != first.settings {
                return Err(Error::BadWeights);
            }
        }
        let mut table = vec![S::zero(); first.table.len()];
        for (d, w) in dists.iter().zip(weights) {
            for (t, p) in table.iter_mut().zip(&d.table) {
                *t = t.clone() + w.clone() * p.clone();
            }
        }
        Self::new(first.outcomes.clone(), first.settings.clone(), table)
    }

    /// Reorders variables so labels are sorted; table is permuted to match.
    /// Serialized tables use this canonical order to stay bit-stable.
    pub fn canonical_order(&self) -> Self {
        let mut o_perm: Vec<usize> = (0..self.outcomes.len()).collect();
        o_perm.sort_by(|&a, &b| self.outcomes[a].label.cmp(&self.outcomes[b].label));
        let mut s_perm: Vec<usize> = (0..self.settings.len()).collect();
        s_perm.sort_by(|&a, &b| self.settings[a].label.cmp(&self.settings[b].label));
        let new_outcomes: Vec<VariableSpec> =
            o_perm.iter().map(|&i| self.outcomes[i].clone()).collect();
        let new_settings: Vec<VariableSpec> =
            s_perm.iter().map(|&i| self.settings[i].clone()).collect();
        let osize = radix_size(&self.outcomes);
        let mut table = Vec::with_capacity(self.table.len());
        for new_ctx in assignments(&new_settings) {
            let mut old_ctx = vec![0usize; self.settings.len()];
            for (k, &i) in s_perm.iter().enumerate() {
                old_ctx[i] = new_ctx[k];
            }
            let ctx = index_of(&self.settings, &old_ctx);
            for new_out in assignments(&new_outcomes) {
                let mut old_out = vec![0usize; self.outcomes.len()];
                for (k, &i) in o_perm.iter().enumerate() {
                    old_out[i] = new_out[k];
                }
                let o = index_of(&self.outcomes, &old_out);
                table.push(self.table[ctx * osize + o].clone());
            }
        }
        Self {
            outcomes: new_outcomes,
            settings: new_settings,
            table,
        }
    }

    /// Folds all setting variables into the outcome list as a single joint
    /// distribution, weighting each setting context by `policy`.
    fn fold_settings(&self, policy: &SettingsPolicy<S>) -> Result<ConditionalDistribution<S>> {
        let mut d = self.clone();
        // Fix any settings the policy pins to a value.
        let fixed: Vec<(String, usize)> = d
            .settings
            .iter()
            .filter_map(|v| match policy.get(&v.label) {
                Some(SettingPrior::Fixed(x)) => Some((v.label.clone(), *x)),
                _ => None,
            })
            .collect();
        if !fixed.is_empty() {
            let fixed_refs: Vec<(&str, usize)> =
                fixed.iter().map(|(l, v)| (l.as_str(), *v)).collect();
            d = d.restrict_setting(&fixed_refs)?;
        }
        // Remaining settings fold uniformly (or by explicit prior).
        let settings = d.settings.clone();
        let mut new_outcomes = settings.clone();
        new_outcomes.extend(d.outcomes.iter().cloned());
        let osize = radix_size(&d.outcomes);
        let mut table = Vec::with_capacity(radix_size(&new_outcomes));
        for (ctx_i, ctx) in assignments(&settings).enumerate() {
            let mut weight = S::one();
            for (var, &value) in settings.iter().zip(&ctx) {
                let w = match policy.get(&var.label) {
                    None => S::from_ratio(1, var.cardinality as i64),
                    Some(SettingPrior::Uniform) => S::from_ratio(1, var.cardinality as i64),
                    Some(SettingPrior::Weights(ws)) => ws[value].clone(),
                    Some(SettingPrior::Fixed(_)) => unreachable!("fixed settings were restricted"),
                };
                weight = weight * w;
            }
            for o in 0..osize {
                table.push(weight.clone() * d.table[ctx_i * osize + o].clone());
            }
        }
        ConditionalDistribution::new(new_outcomes, Vec::new(), table)
    }

    /// Conditional-independence check `U ⫫ V | W`, with settings folded into
    /// the joint according to `policy`. Returns the verdict and the maximum
    /// deviation `|P(uv|w) - P(u|w)P(v|w)|` over supported contexts.
    pub fn ci_holds(
        &self,
        u: &[&str],
        v: &[&str],
        w: &[&str],
        policy: &SettingsPolicy<S>,
        tolerance: S,
    ) -> Result<CiVerdict<S>> {
        for a in u {
            if v.contains(a) || w.contains(a) {
                return Err(Error::OverlappingSets((*a).to_owned()));
            }
        }
        for a in v {
            if w.contains(a) {
                return Err(Error::OverlappingSets((*a).to_owned()));
            }
        }
        let joint = self.fold_settings(policy)?;
        let vars = &joint.outcomes;
        let find = |l: &str| -> Result<usize> {
            vars.iter()
                .position(|x| x.label == l)
                .ok_or_else(|| Error::UnknownVariable(l.to_owned()))
        };
        let u_idx: Vec<usize> = u.iter().map(|l| find(l)).collect::<Result<_>>()?;
        let v_idx: Vec<usize> = v.iter().map(|l| find(l)).collect::<Result<_>>()?;
        let w_idx: Vec<usize> = w.iter().map(|l| find(l)).collect::<Result<_>>()?;

        let project = |full: &[usize], idx: &[usize]| -> Vec<usize> {
            idx.iter().map(|&i| full[i]).collect()
        };
        // Accumulate P(w), P(uw), P(vw), P(uvw) by direct summation.
        let mut acc: BTreeMap<(Vec<usize>, Vec<usize>, Vec<usize>), S> = BTreeMap::new();
        let mut p_w: BTreeMap<Vec<usize>, S> = BTreeMap::new();
        let mut p_uw: BTreeMap<(Vec<usize>, Vec<usize>), S> = BTreeMap::new();
        let mut p_vw: BTreeMap<(Vec<usize>, Vec<usize>), S> = BTreeMap::new();
        for (i, full) in assignments(vars).enumerate() {
            let p = joint.table[i].clone();
            if p == S::zero() {
                continue;
            }
            let ku = project(&full, &u_idx);
            let kv = project(&full, &v_idx);
            let kw = project(&full, &w_idx);
            *p_w.entry(kw.clone()).or_insert_with(S::zero) =
                p_w.get(&kw).cloned().unwrap_or_else(S::zero) + p.clone();
            let uw = (ku.clone(), kw.clone());
            *p_uw.entry(uw.clone()).or_insert_with(S::zero) =
                p_uw.get(&uw).cloned().unwrap_or_else(S::zero) + p.clone();
            let vw = (kv.clone(), kw.clone());
            *p_vw.entry(vw.clone()).or_insert_with(S::zero) =
                p_vw.get(&vw).cloned().unwrap_or_else(S::zero) + p.clone();
            let key = (ku, kv, kw);
            *acc.entry(key.clone()).or_insert_with(S::zero) =
                acc.get(&key).cloned().unwrap_or_else(S::zero) + p;
        }
        let mut max_dev = S::zero();
        let u_vars: Vec<VariableSpec> = u_idx.iter().map(|&i| vars[i].clone()).collect();
        let v_vars: Vec<VariableSpec> = v_idx.iter().map(|&i| vars[i].clone()).collect();
        for (kw, pw) in &p_w {
            if *pw == S::zero() {
                continue; // unsupported context
            }
            for ku in assignments(&u_vars) {
                for kv in assignments(&v_vars) {
                    let puvw = acc
                        .get(&(ku.clone(), kv.clone(), kw.clone()))
                        .cloned()
                        .unwrap_or_else(S::zero);
                    let puw = p_uw
                        .get(&(ku.clone(), kw.clone()))
                        .cloned()
                        .unwrap_or_else(S::zero);
                    let pvw = p_vw
                        .get(&(kv.clone(), kw.clone()))
                        .cloned()
                        .unwrap_or_else(S::zero);
                    // |P(uv|w) - P(u|w) P(v|w)|
                    let dev =
                        (puvw / pw.clone() - (puw / pw.clone()) * (pvw / pw.clone())).abs_val();
                    if dev > max_dev {
                        max_dev = dev;
                    }
                }
            }
        }
        Ok(CiVerdict {
            holds: max_dev <= tolerance,
            max_deviation: max_dev,
        })
    }
}

impl ExactDist {
    pub fn to_float(&self) -> FloatDist {
        FloatDist {
            outcomes: self.outcomes.clone(),
            settings: self.settings.clone(),
            table: self.table.iter().map(ratio::to_f64).collect(),
        }
    }
}

impl FloatDist {
    /// Rounds each entry to a rational with denominator at most `max_den`,
    /// renormalizes each context exactly, and reports the largest absolute
    /// change made to any entry.
    pub fn rationalize(&self, max_den: u64) -> Result<(ExactDist, f64)> {
        let osize = radix_size(&self.outcomes);
        let mut table = Vec::with_capacity(self.table.len());
        let mut radius = 0f64;
        for chunk in self.table.chunks(osize) {
            let rounded: Vec<Q> = chunk
                .iter()
                .map(|&x| rationalize_f64(x.max(0.0), max_den))
                .collect();
            let sum: Q = rounded.iter().fold(Q::zero(), |a, b| a + b);
            if sum.is_zero() {
                return Err(Error::NotNormalized("all-zero context".into()));
            }
            for (orig, r) in chunk.iter().zip(&rounded) {
                let fixed = r.clone() / sum.clone();
                radius = radius.max((ratio::to_f64(&fixed) - orig).abs());
                table.push(fixed);
            }
        }
        Ok((
            ExactDist::new(self.outcomes.clone(), self.settings.clone(), table)?,
            radius,
        ))
    }
}

/// Prior assigned to a setting variable when folding it into a joint.
#[derive(Debug, Clone)]
pub enum SettingPrior<S: Scalar> {
    /// Fold with uniform weight (the documented default for CI statements
    /// mixing outcomes and settings).
    Uniform,
    /// Fold with explicit weights.
    Weights(Vec<S>),
    /// Pin to one value before folding.
    Fixed(usize),
}

/// Per-variable setting policy; variables not mentioned default to uniform.
#[derive(Debug, Clone, Default)]
pub struct SettingsPolicy<S: Scalar> {
    priors: BTreeMap<String, SettingPrior<S>>,
}

impl<S: Scalar> SettingsPolicy<S> {
    pub fn uniform() -> Self {
        Self {
            priors: BTreeMap::new(),
        }
    }

    pub fn with(mut self, label: impl Into<String>, prior: SettingPrior<S>) -> Self {
        self.priors.insert(label.into(), prior);
        self
    }

    fn get(&self, label: &str) -> Option<&SettingPrior<S>> {
        self.priors.get(label)
    }
}

/// Outcome of a conditional-independence test.
#[derive(Debug, Clone)]
pub struct CiVerdict<S: Scalar> {
    pub holds: bool,
    pub max_deviation: S,
}

impl<S: Scalar> fmt::Display for CiVerdict<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (max deviation {:.3e})",
            if self.holds { "holds" } else { "fails" },
            self.max_deviation.to_f64_lossy()
        )
    }
}

pub mod boxes {
    //! The named two-party boxes of the binary scenario and the
    //! probability-form CHSH functional.

    use super::*;

    fn binary_pab_vars() -> (Vec<VariableSpec>, Vec<VariableSpec>) {
        (
            vec![VariableSpec::new("A", 2), VariableSpec::new("B", 2)],
            vec![VariableSpec::new("X", 2), VariableSpec::new("Y", 2)],
        )
    }

    /// Builds a binary box from its table in (x, y, a, b) order.
    pub fn pab_from_fn<S: Scalar>(
        f: impl Fn(usize, usize, usize, usize) -> S,
    ) -> ConditionalDistribution<S> {
        let (outcomes, settings) = binary_pab_vars();
        let mut table = Vec::with_capacity(16);
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        table.push(f(x, y, a, b));
                    }
                }
            }
        }
        ConditionalDistribution::new(outcomes, settings, table).expect("box construction")
    }

    /// The i-th of the 16 deterministic response assignments: bits of `i`
    /// are (a0, a1, b0, b1).
    pub fn lhv_deterministic(i: usize) -> ExactDist {
        assert!(i < 16, "deterministic box index out of range");
        let a0 = i & 1;
        let a1 = (i >> 1) & 1;
        let b0 = (i >> 2) & 1;
        let b1 = (i >> 3) & 1;
        pab_from_fn(|x, y, a, b| {
            let ax = if x == 0 { a0 } else { a1 };
            let by = if y == 0 { b0 } else { b1 };
            if a == ax && b == by {
                Q::one()
            } else {
                Q::zero()
            }
        })
    }

    /// Extremal no-signaling box: P(ab|xy) = 1/2 iff a ⊕ b = x·y.
    pub fn pr_box() -> ExactDist {
        pab_from_fn(|x, y, a, b| {
            if (a ^ b) == (x & y) {
                ratio::q(1, 2)
            } else {
                Q::zero()
            }
        })
    }

    /// Uniformly random outcomes.
    pub fn white_noise() -> ExactDist {
        pab_from_fn(|_, _, _, _| ratio::q(1, 4))
    }

    /// Binary box from uniform marginals and per-context correlators
    /// E(x,y) = P(a=b|xy) - P(a≠b|xy).
    pub fn box_from_correlators<S: Scalar>(e: [S; 4]) -> ConditionalDistribution<S> {
        let quarter = S::from_ratio(1, 4);
        pab_from_fn(move |x, y, a, b| {
            let exy = e[2 * x + y].clone();
            let sign = if a == b {
                S::one()
            } else {
                S::zero() - S::one()
            };
            quarter.clone() * (S::one() + sign * exy)
        })
    }

    /// The isotropic quantum box with correlators
    /// E(00) = E(01) = E(10) = -E(11) = √2/2 (floating-point table).
    pub fn tsirelson_box() -> FloatDist {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        box_from_correlators([c, c, c, -c])
    }

    /// Tsirelson box with correlators rationalized at the given denominator
    /// bound; no-signaling and normalization hold exactly by construction.
    pub fn tsirelson_box_rationalized(max_den: u64) -> ExactDist {
        let c = rationalize_f64(std::f64::consts::FRAC_1_SQRT_2, max_den);
        box_from_correlators([c.clone(), c.clone(), c.clone(), -c])
    }

    /// Rationalizes a binary box through its marginal/correlator
    /// parametrization, so normalization and no-signaling hold exactly in
    /// the result. Tiny negative entries caused by independent rounding are
    /// repaired by an exact admixture of white noise. Returns the largest
    /// absolute change made to any entry.
    pub fn rationalize_ns_binary(d: &FloatDist, max_den: u64) -> Result<(ExactDist, f64)> {
        let binary = d.outcomes().len() == 2
            && d.settings().len() == 2
            && d.outcomes().iter().all(|v| v.cardinality == 2)
            && d.settings().iter().all(|v| v.cardinality == 2);
        if !binary {
            return Err(Error::NotBinary);
        }
        let sgn = |v: usize| if v == 0 { 1.0 } else { -1.0 };
        let mut alpha = [Q::zero(), Q::zero()];
        let mut beta = [Q::zero(), Q::zero()];
        let mut corr = [Q::zero(), Q::zero(), Q::zero(), Q::zero()];
        for x in 0..2 {
            let mut v = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    v += sgn(a) * d.prob(&[x, 0], &[a, b]);
                }
            }
            alpha[x] = rationalize_f64(v, max_den);
        }
        for y in 0..2 {
            let mut v = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    v += sgn(b) * d.prob(&[0, y], &[a, b]);
                }
            }
            beta[y] = rationalize_f64(v, max_den);
        }
        for x in 0..2 {
            for y in 0..2 {
                let mut v = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        v += sgn(a) * sgn(b) * d.prob(&[x, y], &[a, b]);
                    }
                }
                corr[2 * x + y] = rationalize_f64(v, max_den);
            }
        }
        let quarter = ratio::q(1, 4);
        let entry = |x: usize, y: usize, a: usize, b: usize| -> Q {
            let sa = if a == 0 { Q::one() } else { -Q::one() };
            let sb = if b == 0 { Q::one() } else { -Q::one() };
            quarter.clone()
                * (Q::one()
                    + sa.clone() * alpha[x].clone()
                    + sb.clone() * beta[y].clone()
                    + sa * sb * corr[2 * x + y].clone())
        };
        let mut table = Vec::with_capacity(16);
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        table.push(entry(x, y, a, b));
                    }
                }
            }
        }
        let min = table.iter().min().cloned().expect("nonempty");
        if min < Q::zero() {
            // Mix in just enough white noise to lift the minimum to zero.
            let m = -min;
            let w = ratio::q(4, 1) * m.clone() / (Q::one() + ratio::q(4, 1) * m);
            let keep = Q::one() - w.clone();
            for t in table.iter_mut() {
                *t = keep.clone() * t.clone() + w.clone() * quarter.clone();
            }
        }
        let mut radius = 0f64;
        let mut k = 0;
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        radius =
                            radius.max((ratio::to_f64(&table[k]) - d.prob(&[x, y], &[a, b])).abs());
                        k += 1;
                    }
                }
            }
        }
        let exact = ExactDist::new(d.outcomes().to_vec(), d.settings().to_vec(), table)?;
        Ok((exact, radius))
    }

    /// Perfectly correlated single-context table P(ac) = δ_{a,c} pc(c).
    pub fn perfect_pac(pc: &[Q; 2]) -> ExactDist {
        let outcomes = vec![VariableSpec::new("A", 2), VariableSpec::new("C", 2)];
        let table = vec![pc[0].clone(), Q::zero(), Q::zero(), pc[1].clone()];
        ExactDist::new(outcomes, Vec::new(), table).expect("perfect correlation table")
    }

    /// Probability-form CHSH: agreement terms at contexts (0,0), (0,1),
    /// (1,0) and the disagreement term at (1,1). Algebraic range [0, 4],
    /// deterministic maximum 3, quantum maximum 2 + √2.
    pub fn chsh_value<S: Scalar>(d: &ConditionalDistribution<S>) -> Result<S> {
        let binary = d.outcomes.len() == 2
            && d.settings.len() == 2
            && d.outcomes.iter().all(|v| v.cardinality == 2)
            && d.settings.iter().all(|v| v.cardinality == 2);
        if !binary {
            return Err(Error::NotBinary);
        }
        let mut total = S::zero();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let agree = a == b;
                        let wanted = if x == 1 && y == 1 { !agree } else { agree };
                        if wanted {
                            total = total + d.prob(&[x, y], &[a, b]);
                        }
                    }
                }
            }
        }
        Ok(total)
    }

    /// Named-box dispatch used by file inputs and the CLI.
    pub fn named_box(name: &str) -> Result<ExactDist> {
        match name {
            "pr_box" => Ok(pr_box()),
            "white_noise" => Ok(white_noise()),
            "tsirelson_box" => Ok(tsirelson_box_rationalized(1_000_000_000)),
            _ => {
                if let Some(rest) = name.strip_prefix("lhv_deterministic(") {
                    let idx: usize = rest
                        .trim_end_matches(')')
                        .parse()
                        .map_err(|_| Error::UnknownBox(name.to_owned()))?;
                    if idx < 16 {
                        return Ok(lhv_deterministic(idx));
                    }
                }
                Err(Error::UnknownBox(name.to_owned()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::boxes::*;
    use super::*;
    use crate::ratio::q;

    fn uniform_abc() -> ExactDist {
        let outcomes = vec![
            VariableSpec::new("A", 2),
            VariableSpec::new("B", 2),
            VariableSpec::new("C", 2),
        ];
        let settings = vec![VariableSpec::new("X", 2), VariableSpec::new("Y", 2)];
        let table = vec![q(1, 8); 32];
        ExactDist::new(outcomes, settings, table).unwrap()
    }

    #[test]
    fn marginalize_uniform() {
        let d = uniform_abc();
        let m = d.marginalize(&["A", "B"]).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        assert_eq!(m.prob(&[x, y], &[a, b]), q(1, 4));
                    }
                }
            }
        }
        // Marginalizing out everything leaves the normalization constant.
        let all = d.marginalize(&[]).unwrap();
        assert_eq!(all.table(), &[Q::one(), Q::one(), Q::one(), Q::one()][..]);
    }

    #[test]
    fn marginalize_copy_construction() {
        // P(abc|xy) = δ_{a,c} · P_PR(ab|xy): the (A,C) marginal at any x is
        // perfectly correlated.
        let pr = pr_box();
        let outcomes = vec![
            VariableSpec::new("A", 2),
            VariableSpec::new("B", 2),
            VariableSpec::new("C", 2),
        ];
        let settings = vec![VariableSpec::new("X", 2), VariableSpec::new("Y", 2)];
        let mut table = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        for c in 0..2 {
                            table.push(if a == c {
                                pr.prob(&[x, y], &[a, b])
                            } else {
                                Q::zero()
                            });
                        }
                    }
                }
            }
        }
        let d = ExactDist::new(outcomes, settings, table).unwrap();
        let mac = d.marginalize(&["A", "C"]).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let agree = mac.prob(&[x, y], &[0, 0]) + mac.prob(&[x, y], &[1, 1]);
                assert_eq!(agree, Q::one());
            }
        }
    }

    #[test]
    fn restrict_setting_basics() {
        let d = uniform_abc();
        let r = d.restrict_setting(&[("X", 1)]).unwrap();
        assert_eq!(r.settings().len(), 1);
        assert_eq!(r.prob(&[0], &[0, 0, 0]), q(1, 8));
        // Restricting nothing is the identity.
        let same = d.restrict_setting(&[]).unwrap();
        assert_eq!(same, d);
        // Out-of-range value errors.
        assert!(matches!(
            d.restrict_setting(&[("X", 2)]),
            Err(Error::SettingOutOfRange { .. })
        ));
    }

    #[test]
    fn mixture_preserves_normalization() {
        let m = ExactDist::mixture(&[pr_box(), white_noise()], &[q(1, 3), q(2, 3)]).unwrap();
        let total: Q = m
            .table()
            .iter()
            .take(4)
            .cloned()
            .fold(Q::zero(), |a, b| a + b);
        assert_eq!(total, Q::one());
        assert!(ExactDist::mixture(&[pr_box()], &[q(1, 2)]).is_err());
    }

    #[test]
    fn chsh_named_boxes() {
        assert_eq!(chsh_value(&pr_box()).unwrap(), q(4, 1));
        assert_eq!(chsh_value(&white_noise()).unwrap(), q(2, 1));
        // Brute force over all 16 deterministic boxes: max is 3.
        let max = (0..16)
            .map(|i| chsh_value(&lhv_deterministic(i)).unwrap())
            .max()
            .unwrap();
        assert_eq!(max, q(3, 1));
        let t = chsh_value(&tsirelson_box()).unwrap();
        assert!((t - (2.0 + std::f64::consts::SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn chsh_is_affine_in_the_distribution() {
        let d1 = pr_box();
        let d2 = lhv_deterministic(5);
        for lambda in [q(1, 3), q(1, 7), q(4, 5)] {
            let mix = ExactDist::mixture(
                &[d1.clone(), d2.clone()],
                &[lambda.clone(), Q::one() - lambda.clone()],
            )
            .unwrap();
            let lhs = chsh_value(&mix).unwrap();
            let rhs = lambda.clone() * chsh_value(&d1).unwrap()
                + (Q::one() - lambda) * chsh_value(&d2).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn ci_on_product_distribution() {
        // P(ab) = P(a) P(b) with nothing conditioned.
        let outcomes = vec![VariableSpec::new("A", 2), VariableSpec::new("B", 2)];
        let table = vec![q(1, 6), q(1, 3), q(1, 6), q(1, 3)];
        let d = ExactDist::new(outcomes, Vec::new(), table).unwrap();
        let verdict = d
            .ci_holds(&["A"], &["B"], &[], &SettingsPolicy::uniform(), Q::zero())
            .unwrap();
        assert!(verdict.holds);
        assert_eq!(verdict.max_deviation, Q::zero());
    }

    #[test]
    fn ci_with_uniform_folded_settings() {
        // White noise: A is independent of the folded setting pair.
        let d = white_noise();
        let verdict = d
            .ci_holds(
                &["A"],
                &["X", "Y"],
                &[],
                &SettingsPolicy::uniform(),
                Q::zero(),
            )
            .unwrap();
        assert!(verdict.holds);
        // PR box: A and B are dependent given nothing (after folding).
        let verdict = d
            .ci_holds(&["A"], &["B"], &[], &SettingsPolicy::uniform(), Q::zero())
            .unwrap();
        assert!(verdict.holds, "white noise is fully independent");
        let verdict = pr_box()
            .ci_holds(
                &["A"],
                &["B"],
                &["X", "Y"],
                &SettingsPolicy::uniform(),
                Q::zero(),
            )
            .unwrap();
        assert!(!verdict.holds, "PR box correlates A and B given settings");
    }

    #[test]
    fn ci_rejects_overlap() {
        let d = white_noise();
        assert!(matches!(
            d.ci_holds(&["A"], &["A"], &[], &SettingsPolicy::uniform(), Q::zero()),
            Err(Error::OverlappingSets(_))
        ));
    }

    #[test]
    fn rationalize_reports_radius() {
        let t = tsirelson_box();
        let (exact, radius) = t.rationalize(1_000_000_000).unwrap();
        assert!(radius < 1e-9);
        for chunk in exact.table().chunks(4) {
            let sum: Q = chunk.iter().cloned().fold(Q::zero(), |a, b| a + b);
            assert_eq!(sum, Q::one());
        }
    }

    #[test]
    fn canonical_order_sorts_labels() {
        let outcomes = vec![VariableSpec::new("B", 2), VariableSpec::new("A", 2)];
        let table = vec![q(1, 2), q(1, 4), q(1, 8), q(1, 8)];
        let d = ExactDist::new(outcomes, Vec::new(), table).unwrap();
        let c = d.canonical_order();
        assert_eq!(c.outcomes()[0].label, "A");
        // P(b=0, a=1) must equal P'(a=1, b=0).
        assert_eq!(d.prob(&[], &[0, 1]), c.prob(&[], &[1, 0]));
    }

    #[test]
    fn named_box_dispatch() {
        assert!(named_box("pr_box").is_ok());
        assert!(named_box("lhv_deterministic(7)").is_ok());
        assert!(matches!(named_box("nonsense"), Err(Error::UnknownBox(_))));
    }

    #[test]
    fn bad_tables_rejected() {
        let outcomes = vec![VariableSpec::new("A", 2)];
        assert!(matches!(
            ExactDist::new(outcomes.clone(), Vec::new(), vec![q(1, 2), q(1, 3)]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            ExactDist::new(outcomes.clone(), Vec::new(), vec![q(3, 2), q(-1, 2)]),
            Err(Error::NegativeProbability(_))
        ));
        assert!(matches!(
            ExactDist::new(outcomes, Vec::new(), vec![Q::one()]),
            Err(Error::TableShape { .. })
        ));
    }
}
