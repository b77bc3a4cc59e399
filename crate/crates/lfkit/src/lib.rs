//! Toolkit for the Local Friendliness (LF) no-go analysis.
//!
//! The crate turns the ingredients of the LF argument into computable,
//! exactly-checkable artifacts:
//!
//! - [`graph`]: directed causal graphs (cycles permitted) with observed and
//!   latent nodes, reachability, SCCs, and causal-order compliance checks.
//! - [`separation`]: path blocking, d-separation and σ-separation, exhaustive
//!   enumeration of separation statements, and compositional closure.
//! - [`dist`]: exact-rational conditional distributions, marginalization,
//!   conditional-independence tests, the named boxes (deterministic, PR,
//!   Tsirelson, white noise) and the probability-form CHSH functional.
//! - [`linprog`] / [`polytope`]: exact rational simplex with Farkas
//!   certificates, double-description vertex enumeration, and facet recovery.
//! - [`marginal`]: the LF statistical marginal problem, the minimal
//!   discrepancy γ, the CHSH monogamy functional, polytope membership and
//!   the 2D slice scanner.
//! - [`quantum`]: a dense state-vector realization of the minimal LF
//!   scenario with a reversible friend measurement.
//! - [`veronika`]: the amplitude-level verification protocol over parallel
//!   runs (frequency test, pass probability, post-selection, PVM variant).
//! - [`scm`]: finite-domain structural causal models with solution-discarding
//!   semantics for cyclic systems.
//! - [`audit`]: the No-Fine-Tuning auditor, no-go derivation traces, and the
//!   exhaustive graph dichotomy sweep.

pub mod audit;
pub mod dist;
pub mod error;
pub mod graph;
pub mod io;
pub mod linprog;
pub mod marginal;
pub mod polytope;
pub mod quantum;
pub mod ratio;
pub mod scm;
pub mod separation;
pub mod veronika;

pub use error::Error;

/// Exact rational scalar used throughout the decision paths.
pub type Q = num::BigRational;
