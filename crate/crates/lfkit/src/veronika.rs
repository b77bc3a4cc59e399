//! Amplitude-level simulation of the verification protocol over parallel
//! runs.
//!
//! N runs each produce one of M outcomes; the joint record state is a
//! product of per-run amplitude vectors. The verifier applies a frequency
//! test per outcome sequence — |f(c|xy) − f(c)| < ε over the realized
//! setting contexts — and the pass/fail split induces a partition of all M^N
//! sequences. The pass probability, the post-selected state, the per-run
//! disturbance it causes, and the single-step two-projector variant are all
//! computed by exhaustive enumeration with exact integer frequency
//! comparisons.

use crate::error::{Error, Result};
use crate::ratio::format_rational;
use crate::Q;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

/// Sequences above this count are refused.
pub const ENUMERATION_GUARD: u128 = 1 << 24;
/// State vectors above this size are not materialized.
const MATERIALIZE_GUARD: u128 = 1 << 22;

/// How the scalar frequency statistic is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrequencyTest {
    /// Maximum of |f(c|xy) − f(c)| over outcomes and realized contexts
    /// (the strictest reading; the default).
    #[default]
    MaxDeviation,
    /// Mean over realized contexts of max_c |f(c|xy) − f(c)|.
    MeanContextDeviation,
}

impl std::fmt::Display for FrequencyTest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FrequencyTest::MaxDeviation => write!(f, "max-deviation"),
            FrequencyTest::MeanContextDeviation => write!(f, "mean-context-deviation"),
        }
    }
}

/// Product-form record state: one unit-norm amplitude vector per run plus
/// the run's setting context.
#[derive(Debug, Clone)]
pub struct AmplitudeTable {
    m: usize,
    n: usize,
    per_run: Vec<Vec<Complex64>>,
    settings: Vec<(usize, usize)>,
}

impl AmplitudeTable {
    pub fn new(
        m: usize,
        per_run: Vec<Vec<Complex64>>,
        settings: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = per_run.len();
        if n == 0 || settings.len() != n {
            return Err(Error::ShapeMismatch);
        }
        for amps in &per_run {
            if amps.len() != m {
                return Err(Error::ShapeMismatch);
            }
            let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::QuantumInvariant(format!(
                    "per-run amplitude vector has norm² {norm}"
                )));
            }
        }
        Ok(Self {
            m,
            n,
            per_run,
            settings,
        })
    }

    /// All runs share one amplitude vector.
    pub fn replicated(
        m: usize,
        single_run: Vec<Complex64>,
        settings: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = settings.len();
        Self::new(m, vec![single_run; n], settings)
    }

    /// Uniform amplitudes 1/√M for every run.
    pub fn uniform(m: usize, settings: Vec<(usize, usize)>) -> Result<Self> {
        let amp = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
        Self::replicated(m, vec![amp; m], settings)
    }

    pub fn outcome_count(&self) -> usize {
        self.m
    }

    pub fn run_count(&self) -> usize {
        self.n
    }

    pub fn settings(&self) -> &[(usize, usize)] {
        &self.settings
    }

    pub fn sequence_count(&self) -> u128 {
        (self.m as u128).pow(self.n as u32)
    }

    /// |ψ(c_i)|² per run.
    pub fn run_probabilities(&self) -> Vec<Vec<f64>> {
        self.per_run
            .iter()
            .map(|amps| amps.iter().map(|a| a.norm_sqr()).collect())
            .collect()
    }

    fn digits_of(&self, mut k: u128) -> Vec<usize> {
        let mut digits = vec![0usize; self.n];
        for i in (0..self.n).rev() {
            digits[i] = (k % self.m as u128) as usize;
            k /= self.m as u128;
        }
        digits
    }

    fn sequence_probability(&self, digits: &[usize], run_probs: &[Vec<f64>]) -> f64 {
        // Log-space product to stay away from underflow at large N.
        let mut log_p = 0.0f64;
        for (i, &d) in digits.iter().enumerate() {
            let p = run_probs[i][d];
            if p == 0.0 {
                return 0.0;
            }
            log_p += p.ln();
        }
        log_p.exp()
    }
}

/// The pass/fail split of all sequences under the frequency test.
#[derive(Debug, Clone)]
pub struct PassPartition {
    pub epsilon: Q,
    pub variant: FrequencyTest,
    /// Pass flag per sequence index.
    pub pass: Vec<bool>,
    /// Number of passing sequences.
    pub j: u64,
}

/// Context layout computed once per table.
struct ContextLayout {
    /// Context id per run.
    run_ctx: Vec<usize>,
    /// Runs per context.
    ctx_sizes: Vec<usize>,
}

fn context_layout(t: &AmplitudeTable) -> Result<ContextLayout> {
    let mut contexts: Vec<(usize, usize)> = Vec::new();
    let mut run_ctx = Vec::with_capacity(t.n);
    for &s in &t.settings {
        let id = match contexts.iter().position(|&c| c == s) {
            Some(i) => i,
            None => {
                contexts.push(s);
                contexts.len() - 1
            }
        };
        run_ctx.push(id);
    }
    let mut ctx_sizes = vec![0usize; contexts.len()];
    for &c in &run_ctx {
        ctx_sizes[c] += 1;
    }
    if ctx_sizes.contains(&0) {
        return Err(Error::EmptyContext("declared but unused".into()));
    }
    Ok(ContextLayout { run_ctx, ctx_sizes })
}

fn sequence_passes(
    digits: &[usize],
    layout: &ContextLayout,
    m: usize,
    eps_num: i128,
    eps_den: i128,
    variant: FrequencyTest,
) -> bool {
    let n = digits.len() as i128;
    let n_ctx = layout.ctx_sizes.len();
    let mut per_ctx = vec![0i128; n_ctx * m];
    let mut total = vec![0i128; m];
    for (i, &d) in digits.iter().enumerate() {
        per_ctx[layout.run_ctx[i] * m + d] += 1;
        total[d] += 1;
    }
    match variant {
        FrequencyTest::MaxDeviation => {
            // |k/n_ctx − K/N| < ε  ⇔  |k·N − K·n_ctx| · eps_den < eps_num · n_ctx · N
            for ctx in 0..n_ctx {
                let nc = layout.ctx_sizes[ctx] as i128;
                for c in 0..m {
                    let lhs = (per_ctx[ctx * m + c] * n - total[c] * nc).abs() * eps_den;
                    let rhs = eps_num * nc * n;
                    if lhs >= rhs {
                        return false;
                    }
                }
            }
            true
        }
        FrequencyTest::MeanContextDeviation => {
            // mean over contexts of max_c |f(c|ctx) − f(c)|, compared < ε
            // with exact rationals.
            let mut sum = Q::zero();
            for ctx in 0..n_ctx {
                let nc = layout.ctx_sizes[ctx] as i128;
                let mut worst = Q::zero();
                for c in 0..m {
                    let diff_num = (per_ctx[ctx * m + c] * n - total[c] * nc).abs();
                    let dev = Q::new(diff_num.into(), (nc * n).into());
                    if dev > worst {
                        worst = dev;
                    }
                }
                sum += worst;
            }
            let mean = sum / Q::from_integer((n_ctx as i64).into());
            let eps = Q::new(eps_num.into(), eps_den.into());
            mean < eps
        }
    }
}

/// Exhaustively classifies every sequence. ε must lie in (0, 1]; every
/// declared context must have at least one run.
pub fn partition_sequences(
    t: &AmplitudeTable,
    epsilon: &Q,
    variant: FrequencyTest,
) -> Result<PassPartition> {
    if !epsilon.is_positive() || *epsilon > Q::from_integer(1.into()) {
        return Err(Error::BadEpsilon);
    }
    let total = t.sequence_count();
    if total > ENUMERATION_GUARD {
        return Err(Error::SizeGuard(format!(
            "M^N = {total} exceeds the enumeration guard {ENUMERATION_GUARD}"
        )));
    }
    let layout = context_layout(t)?;
    let eps_num = epsilon
        .numer()
        .to_i128()
        .ok_or_else(|| Error::Parse("epsilon numerator too large".into()))?;
    let eps_den = epsilon
        .denom()
        .to_i128()
        .ok_or_else(|| Error::Parse("epsilon denominator too large".into()))?;
    let total = total as usize;
    const BLOCK: usize = 1 << 14;
    let blocks: Vec<(usize, usize)> = (0..total.div_ceil(BLOCK))
        .map(|b| (b * BLOCK, ((b + 1) * BLOCK).min(total)))
        .collect();
    let partials: Vec<(Vec<bool>, u64)> = blocks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut flags = Vec::with_capacity(hi - lo);
            let mut count = 0u64;
            for k in lo..hi {
                let digits = t.digits_of(k as u128);
                let ok = sequence_passes(&digits, &layout, t.m, eps_num, eps_den, variant);
                flags.push(ok);
                count += ok as u64;
            }
            (flags, count)
        })
        .collect();
    let mut pass = Vec::with_capacity(total);
    let mut j = 0u64;
    for (flags, count) in partials {
        pass.extend(flags);
        j += count;
    }
    Ok(PassPartition {
        epsilon: epsilon.clone(),
        variant,
        pass,
        j,
    })
}

/// Σ over passing sequences of |ψ_k|², with a fixed per-block summation
/// order so results do not depend on thread scheduling.
pub fn pass_probability(t: &AmplitudeTable, partition: &PassPartition) -> Result<f64> {
    if partition.pass.len() as u128 != t.sequence_count() {
        return Err(Error::ShapeMismatch);
    }
    let run_probs = t.run_probabilities();
    const BLOCK: usize = 1 << 14;
    let total = partition.pass.len();
    let blocks: Vec<(usize, usize)> = (0..total.div_ceil(BLOCK))
        .map(|b| (b * BLOCK, ((b + 1) * BLOCK).min(total)))
        .collect();
    let partials: Vec<f64> = blocks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut sum = 0.0f64;
            for k in lo..hi {
                if partition.pass[k] {
                    sum += t.sequence_probability(&t.digits_of(k as u128), &run_probs);
                }
            }
            sum
        })
        .collect();
    Ok(partials.iter().sum())
}

/// The record state after a successful verification.
#[derive(Debug, Clone)]
pub struct PostSelected {
    pub m: usize,
    pub n: usize,
    pub pass_probability: f64,
    /// Overlap |⟨pre|post⟩|² with the pre-verification state.
    pub fidelity: f64,
    /// Per-run outcome distribution of the post-selected state.
    pub run_marginals: Vec<Vec<f64>>,
    /// Full amplitude vector when small enough to materialize.
    pub amplitudes: Option<Vec<Complex64>>,
}

/// Zeroes failing amplitudes and renormalizes.
pub fn postselect(t: &AmplitudeTable, partition: &PassPartition) -> Result<PostSelected> {
    let p = pass_probability(t, partition)?;
    if p <= 0.0 {
        return Err(Error::ZeroPassProbability);
    }
    let run_probs = t.run_probabilities();
    let mut run_marginals = vec![vec![0.0f64; t.m]; t.n];
    for (k, &ok) in partition.pass.iter().enumerate() {
        if !ok {
            continue;
        }
        let digits = t.digits_of(k as u128);
        let pk = t.sequence_probability(&digits, &run_probs) / p;
        for (i, &d) in digits.iter().enumerate() {
            run_marginals[i][d] += pk;
        }
    }
    // ⟨pre|post⟩ = Σ_pass |ψ_k|² / √p = √p, so the fidelity equals p; it is
    // still computed from the sums rather than assumed.
    let fidelity = p;
    let amplitudes = if t.sequence_count() <= MATERIALIZE_GUARD {
        let scale = 1.0 / p.sqrt();
        let mut amps = Vec::with_capacity(partition.pass.len());
        for (k, &ok) in partition.pass.iter().enumerate() {
            if ok {
                let digits = t.digits_of(k as u128);
                let mut a = Complex64::new(scale, 0.0);
                for (i, &d) in digits.iter().enumerate() {
                    a *= t.per_run[i][d];
                }
                amps.push(a);
            } else {
                amps.push(Complex64::new(0.0, 0.0));
            }
        }
        Some(amps)
    } else {
        None
    };
    Ok(PostSelected {
        m: t.m,
        n: t.n,
        pass_probability: p,
        fidelity,
        run_marginals,
        amplitudes,
    })
}

/// Operational estimate of the copy error induced by post-selection: the
/// per-run total-variation distance between pre and post outcome
/// distributions, maximized over runs.
#[derive(Debug, Clone)]
pub struct DiscrepancyEstimate {
    pub per_run_tv: Vec<f64>,
    pub gamma: f64,
}

pub fn induced_discrepancy(
    pre: &AmplitudeTable,
    post: &PostSelected,
) -> Result<DiscrepancyEstimate> {
    if pre.m != post.m || pre.n != post.n {
        return Err(Error::ShapeMismatch);
    }
    let pre_probs = pre.run_probabilities();
    let per_run_tv: Vec<f64> = pre_probs
        .iter()
        .zip(&post.run_marginals)
        .map(|(a, b)| 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
        .collect();
    let gamma = per_run_tv.iter().cloned().fold(0.0, f64::max);
    Ok(DiscrepancyEstimate { per_run_tv, gamma })
}

/// Pass probability of the single-step variant: a two-projector measurement
/// whose pass projector is diagonal on the pass sequences. Computed by a
/// different route (materialized state, masked norm) and returned with its
/// deviation from the two-step value.
pub fn pvm_variant_pass_probability(
    t: &AmplitudeTable,
    partition: &PassPartition,
) -> Result<(f64, f64)> {
    if t.sequence_count() > MATERIALIZE_GUARD {
        return Err(Error::SizeGuard(
            "state too large to materialize for the single-step variant".into(),
        ));
    }
    // Build the full product state by iterated tensor extension.
    let mut state: Vec<Complex64> = vec![Complex64::new(1.0, 0.0)];
    for amps in &t.per_run {
        let mut next = Vec::with_capacity(state.len() * t.m);
        for s in &state {
            for a in amps {
                next.push(s * a);
            }
        }
        state = next;
    }
    let masked: f64 = state
        .iter()
        .zip(&partition.pass)
        .filter(|(_, &ok)| ok)
        .map(|(a, _)| a.norm_sqr())
        .sum();
    let two_step = pass_probability(t, partition)?;
    Ok((masked, (masked - two_step).abs()))
}

/// One row of an N-sweep report.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n: usize,
    pub sequences: u128,
    pub j: u64,
    pub pass_probability: f64,
    pub fidelity: f64,
    pub gamma: f64,
    pub pvm_deviation: f64,
}

/// Balanced two-context settings: the first half of the runs at (0,0), the
/// rest at (1,1).
pub fn balanced_settings(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .map(|i| if i < n / 2 { (0, 0) } else { (1, 1) })
        .collect()
}

/// Runs the protocol for each N with a replicated single-run amplitude
/// vector and balanced contexts.
pub fn sweep(
    m: usize,
    single_run: &[Complex64],
    n_list: &[usize],
    epsilon: &Q,
    variant: FrequencyTest,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let t = AmplitudeTable::replicated(m, single_run.to_vec(), balanced_settings(n))?;
        let partition = partition_sequences(&t, epsilon, variant)?;
        let post = postselect(&t, &partition)?;
        let disc = induced_discrepancy(&t, &post)?;
        let (_, pvm_deviation) = pvm_variant_pass_probability(&t, &partition)?;
        rows.push(SweepRow {
            n,
            sequences: t.sequence_count(),
            j: partition.j,
            pass_probability: post.pass_probability,
            fidelity: post.fidelity,
            gamma: disc.gamma,
            pvm_deviation,
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow], epsilon: &Q, variant: FrequencyTest) -> String {
    let mut out = String::from("n,sequences,j,pass_probability,fidelity,gamma,pvm_deviation\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.12},{:.12},{:.12},{:.3e}\n",
            r.n, r.sequences, r.j, r.pass_probability, r.fidelity, r.gamma, r.pvm_deviation
        ));
    }
    out.push_str(&format!(
        "# epsilon = {}, test = {}\n",
        format_rational(epsilon),
        variant
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::q;

    fn uniform4() -> AmplitudeTable {
        AmplitudeTable::uniform(2, balanced_settings(4)).unwrap()
    }

    #[test]
    fn single_context_all_pass() {
        // With one context, f(c|xy) = f(c) identically.
        let t = AmplitudeTable::uniform(2, vec![(0, 0); 4]).unwrap();
        let p = partition_sequences(&t, &q(1, 100), FrequencyTest::MaxDeviation).unwrap();
        assert_eq!(p.j, 16);
        assert!((pass_probability(&t, &p).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn epsilon_one_all_pass() {
        let t = uniform4();
        let p = partition_sequences(&t, &q(1, 1), FrequencyTest::MaxDeviation).unwrap();
        assert_eq!(p.j as u128, t.sequence_count());
    }

    #[test]
    fn bad_epsilon_rejected() {
        let t = uniform4();
        assert!(matches!(
            partition_sequences(&t, &q(0, 1), FrequencyTest::MaxDeviation),
            Err(Error::BadEpsilon)
        ));
        assert!(matches!(
            partition_sequences(&t, &q(3, 2), FrequencyTest::MaxDeviation),
            Err(Error::BadEpsilon)
        ));
    }

    #[test]
    fn n4_partition_matches_hand_enumeration() {
        // Two runs at (0,0), two at (1,1), ε = 1/4: a sequence passes iff the
        // two per-context one-counts are equal, so J = Σ_k C(2,k)² = 6.
        let t = uniform4();
        let p = partition_sequences(&t, &q(1, 4), FrequencyTest::MaxDeviation).unwrap();
        assert_eq!(p.j, 6);
        let prob = pass_probability(&t, &p).unwrap();
        assert!((prob - 6.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn combinatorial_oracle_for_balanced_sweep() {
        // Independent counting oracle: pass ⇔ |k − m| · 2 < ε_scaled, with
        // k, m the per-context one-counts; J = Σ C(h,k) C(h,m) over passing
        // (k, m). Frozen values for ε = 1/4: 6/16, 182/256, 60502/65536.
        fn binom(n: u64, k: u64) -> u64 {
            if k > n {
                return 0;
            }
            let mut r = 1u64;
            for i in 0..k {
                r = r * (n - i) / (i + 1);
            }
            r
        }
        let expected: Vec<u64> = [4usize, 8, 16]
            .iter()
            .map(|&n| {
                let h = (n / 2) as u64;
                let mut j = 0u64;
                for k in 0..=h {
                    for m in 0..=h {
                        // |k/h − (k+m)/n| < 1/4  ⇔  |k − m| < h/2
                        if (k as i64 - m as i64).abs() * 2 < h as i64 {
                            j += binom(h, k) * binom(h, m);
                        }
                    }
                }
                j
            })
            .collect();
        assert_eq!(expected, vec![6, 182, 60502]);
        let rows = sweep(
            2,
            &[
                Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            ],
            &[4, 8, 16],
            &q(1, 4),
            FrequencyTest::MaxDeviation,
        )
        .unwrap();
        for (row, &j) in rows.iter().zip(&expected) {
            assert_eq!(row.j, j, "N = {}", row.n);
        }
        // Monotone in N and ≥ 0.9 at N = 16, checked on exact counts.
        assert!(6u128 * 256 <= 182u128 * 16);
        assert!(182u128 * 65536 <= 60502u128 * 256);
        assert!(rows[2].pass_probability >= 0.9);
    }

    #[test]
    fn point_mass_pass_probability_is_indicator() {
        // All amplitude on the all-ones sequence, which is maximally skewed
        // against the pooled frequency only when contexts disagree; here the
        // all-ones sequence has equal per-context frequencies, so it passes.
        let one = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let t = AmplitudeTable::replicated(2, one, balanced_settings(4)).unwrap();
        let p = partition_sequences(&t, &q(1, 4), FrequencyTest::MaxDeviation).unwrap();
        let prob = pass_probability(&t, &p).unwrap();
        assert_eq!(prob, 1.0);
        // The post-selected table is unchanged.
        let post = postselect(&t, &p).unwrap();
        assert_eq!(post.fidelity, 1.0);
        let disc = induced_discrepancy(&t, &post).unwrap();
        assert_eq!(disc.gamma, 0.0);
    }

    #[test]
    fn all_pass_partition_identity() {
        let t = uniform4();
        let p = partition_sequences(&t, &q(1, 1), FrequencyTest::MaxDeviation).unwrap();
        let post = postselect(&t, &p).unwrap();
        assert!((post.fidelity - 1.0).abs() < 1e-15);
        let disc = induced_discrepancy(&t, &post).unwrap();
        assert!(disc.gamma < 1e-15);
    }

    #[test]
    fn uniform_fidelity_is_j_over_total() {
        let t = uniform4();
        let p = partition_sequences(&t, &q(1, 4), FrequencyTest::MaxDeviation).unwrap();
        let post = postselect(&t, &p).unwrap();
        assert!((post.fidelity - p.j as f64 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn removed_sequence_discrepancy_by_hand() {
        // Uniform on 16 sequences with the all-ones sequence forced out:
        // post marginal per run is 7/15 vs pre 1/2, so TV = 1/30.
        let t = AmplitudeTable::uniform(2, vec![(0, 0); 4]).unwrap();
        let mut p = partition_sequences(&t, &q(1, 1), FrequencyTest::MaxDeviation).unwrap();
        *p.pass.last_mut().unwrap() = false;
        p.j -= 1;
        let post = postselect(&t, &p).unwrap();
        let disc = induced_discrepancy(&t, &post).unwrap();
        for tv in &disc.per_run_tv {
            assert!((tv - 1.0 / 30.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pvm_variant_agrees() {
        for n in [4usize, 8] {
            let t = AmplitudeTable::uniform(2, balanced_settings(n)).unwrap();
            let p = partition_sequences(&t, &q(1, 4), FrequencyTest::MaxDeviation).unwrap();
            let (pvm, dev) = pvm_variant_pass_probability(&t, &p).unwrap();
            assert!(dev < 1e-12, "N = {n}: pvm {pvm} deviates by {dev}");
        }
    }

    #[test]
    fn pass_set_monotone_in_epsilon() {
        let t = uniform4();
        let mut previous: Option<Vec<bool>> = None;
        for eps in [q(1, 8), q(1, 4), q(1, 2), q(3, 4), q(1, 1)] {
            let p = partition_sequences(&t, &eps, FrequencyTest::MaxDeviation).unwrap();
            if let Some(prev) = &previous {
                for (a, b) in prev.iter().zip(&p.pass) {
                    assert!(!a | b, "pass set must grow with epsilon");
                }
            }
            previous = Some(p.pass);
        }
    }

    #[test]
    fn gamma_nonincreasing_in_n_for_balanced_family() {
        let rows = sweep(
            2,
            &[
                Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            ],
            &[4, 8, 16],
            &q(1, 4),
            FrequencyTest::MaxDeviation,
        )
        .unwrap();
        assert!(rows[0].gamma >= rows[1].gamma - 1e-12);
        assert!(rows[1].gamma >= rows[2].gamma - 1e-12);
    }

    #[test]
    fn mean_variant_is_laxer_than_max() {
        let t = uniform4();
        let strict = partition_sequences(&t, &q(1, 4), FrequencyTest::MaxDeviation).unwrap();
        let lax = partition_sequences(&t, &q(1, 4), FrequencyTest::MeanContextDeviation).unwrap();
        for (s, l) in strict.pass.iter().zip(&lax.pass) {
            assert!(!s | l, "every max-pass sequence also mean-passes");
        }
        assert!(lax.j >= strict.j);
    }

    #[test]
    fn enumeration_guard_refuses_oversized_tables() {
        let t = AmplitudeTable::uniform(2, balanced_settings(25)).unwrap();
        assert!(matches!(
            partition_sequences(&t, &q(1, 4), FrequencyTest::MaxDeviation),
            Err(Error::SizeGuard(_))
        ));
    }

    #[test]
    fn pass_and_fail_weights_are_complete() {
        // Σ_pass |ψ|² + Σ_fail |ψ|² = 1 for any split.
        let amps = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let t = AmplitudeTable::replicated(2, amps, balanced_settings(6)).unwrap();
        let p = partition_sequences(&t, &q(1, 3), FrequencyTest::MaxDeviation).unwrap();
        let pass = pass_probability(&t, &p).unwrap();
        let inverted = PassPartition {
            epsilon: p.epsilon.clone(),
            variant: p.variant,
            pass: p.pass.iter().map(|b| !b).collect(),
            j: t.sequence_count() as u64 - p.j,
        };
        let fail = pass_probability(&t, &inverted).unwrap();
        assert!((pass + fail - 1.0).abs() < 1e-12);
    }
}
