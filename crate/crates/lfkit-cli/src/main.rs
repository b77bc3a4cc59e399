//! `lfkit` — command-line front end for the Local Friendliness toolkit.
//!
//! Exit codes: 0 = success / property verified, 1 = property verified false
//! (an inequality violated, a set membership refuted, fine-tuning found),
//! 2 = usage or input error.

mod reproduce;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use lfkit::audit::{
    audit, nft_premises, nogo_derivation, relativistic_premises, trace_text, CiStatement,
    DerivationOutcome, PremiseKind,
};
use lfkit::dist::{boxes, ExactDist, SettingPrior, SettingsPolicy};
use lfkit::graph::DirectedGraph;
use lfkit::io;
use lfkit::marginal::{
    chsh_functional, chsh_symmetry, lf_facets, membership, min_gamma, monogamy_eq2, slice_scan,
    BoxPolytope, LfProjection,
};
use lfkit::quantum::{run_minimal_lf, tsirelson_model, verify_local_agency};
use lfkit::ratio::{format_rational, parse_rational, to_f64};
use lfkit::separation::{separated, Criterion, SeparationStatement};
use lfkit::veronika::{self, FrequencyTest};
use lfkit::Q;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "lfkit", version, about = "Local Friendliness analysis toolkit")]
struct Cli {
    /// Numeric tolerance for floating-point checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,
    /// Worker threads for parallel fan-out (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Seed for randomized sweeps; required by commands that randomize.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports and CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// d-separation query: `lfkit dsep "A,C | Y | X"`.
    Dsep {
        /// Statement as `U | V | W` with comma-separated labels.
        statement: String,
        #[arg(long, conflicts_with = "builtin")]
        graph: Option<PathBuf>,
        /// Built-in graph: lf, bell, four-cycle, two-cycle.
        #[arg(long, default_value = "lf")]
        builtin: String,
    },
    /// σ-separation query (same syntax as dsep).
    Sigmasep {
        statement: String,
        #[arg(long, conflicts_with = "builtin")]
        graph: Option<PathBuf>,
        #[arg(long, default_value = "lf")]
        builtin: String,
    },
    /// Conditional-independence test on a distribution file.
    CiTest {
        /// Statement as `U | V | W`.
        statement: String,
        #[arg(long)]
        dist: PathBuf,
        /// Pin a setting variable, e.g. `--fix X=1` (repeatable); all other
        /// settings fold uniformly.
        #[arg(long = "fix")]
        fixes: Vec<String>,
    },
    /// Decide whether a (P(ab|xy), P(ac|x=1)) pair extends to a constrained joint.
    MarginalFeasible {
        #[arg(long)]
        pab: String,
        #[arg(long)]
        pac: PathBuf,
    },
    /// Minimal copy discrepancy γ for a box.
    MinGamma {
        /// Distribution file or named box (pr_box, white_noise,
        /// tsirelson_box, lhv_deterministic(i)).
        #[arg(long)]
        pab: String,
    },
    /// The CHSH monogamy functional on a marginal pair.
    Monogamy {
        #[arg(long)]
        pab: String,
        #[arg(long)]
        pac: PathBuf,
    },
    /// Facet list of the projected constrained-joint polytope.
    LfFacets {
        /// Project onto the (P(ab|xy), P(ac|x=1)) pair instead of fixing a
        /// perfect copy.
        #[arg(long)]
        joint: bool,
    },
    /// Polytope membership with a separating functional when outside.
    Member {
        #[arg(long)]
        pab: String,
        /// One of: lhv, ns, lf-perfect, or lf:<pac-file>.
        #[arg(long)]
        polytope: String,
    },
    /// 2D slice scan through white noise; CSV columns t1,t2,label.
    Slice {
        #[arg(long, default_value = "0")]
        t1_min: String,
        #[arg(long, default_value = "4")]
        t1_max: String,
        #[arg(long, default_value = "2")]
        t2_min: String,
        #[arg(long, default_value = "2")]
        t2_max: String,
        #[arg(long, default_value_t = 200)]
        res1: usize,
        #[arg(long, default_value_t = 0)]
        res2: usize,
        /// Functional files; defaults are the two canonical CHSH expressions.
        #[arg(long)]
        f1: Option<PathBuf>,
        #[arg(long)]
        f2: Option<PathBuf>,
    },
    /// Run the minimal-scenario simulator.
    QuantumLf {
        /// Scenario file; the shipped maximal-violation scenario if omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Also sweep N random models against the quantum bound (needs --seed).
        #[arg(long)]
        sweep: Option<usize>,
    },
    /// Run the verification protocol.
    Veronika {
        /// Protocol config file.
        #[arg(long, conflicts_with_all = ["n_list", "from_quantum"])]
        config: Option<PathBuf>,
        /// Comma-separated run counts for a balanced-context sweep.
        #[arg(long, default_value = "4,8,16")]
        n_list: String,
        #[arg(long, default_value = "1/4")]
        epsilon: String,
        /// Use the friend-outcome amplitudes of a quantum scenario.
        #[arg(long)]
        from_quantum: Option<PathBuf>,
        /// Frequency test variant: max or mean-context.
        #[arg(long, default_value = "max")]
        variant: String,
    },
    /// Solve a functional causal model.
    Scm {
        #[arg(long, conflicts_with = "builtin")]
        model: Option<PathBuf>,
        /// Built-in model: cyclic-ex1 or cyclic-ex2.
        #[arg(long, default_value = "cyclic-ex1")]
        builtin: String,
        /// Conditioning like `A=0,C=0`.
        #[arg(long)]
        condition: Option<String>,
        /// Criterion for the separation report: d or sigma.
        #[arg(long, default_value = "d")]
        criterion: String,
    },
    /// Audit a (graph, CI list) pair for fine-tuning.
    Audit {
        #[arg(long, conflicts_with = "builtin")]
        graph: Option<PathBuf>,
        #[arg(long, default_value = "lf")]
        builtin: String,
        /// CI list file; the four premise independences if omitted.
        #[arg(long)]
        cis: Option<PathBuf>,
        #[arg(long, default_value = "d")]
        criterion: String,
    },
    /// Run the no-go derivation chain on a marginal pair.
    Derive {
        /// Premise family: nft or relativistic.
        #[arg(long, default_value = "nft")]
        premises: String,
        #[arg(long)]
        pab: String,
        #[arg(long)]
        pac: PathBuf,
    },
    /// Reproduce a pinned analysis; nonzero exit on mismatch.
    Reproduce {
        /// One of: eq2-boundary, thm1, thm3, thm4, fig7-slice, quantum-lf,
        /// veronika-sweep, cyclic-ex1, cyclic-ex2, table1.
        target: String,
    },
}

fn main() {
    // Die quietly when stdout closes early (e.g. piped into `head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if cli.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn load_graph(path: Option<&PathBuf>, builtin: &str) -> anyhow::Result<DirectedGraph> {
    if let Some(p) = path {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        return Ok(io::graph_from_json(&text)?);
    }
    Ok(match builtin {
        "lf" => lfkit::graph::lf_dag(),
        "bell" => lfkit::graph::bell_dag(),
        "four-cycle" => lfkit::graph::four_cycle_graph(),
        "two-cycle" => lfkit::graph::two_cycle_graph(),
        other => bail!("unknown built-in graph `{other}`"),
    })
}

/// Named box or distribution file. Approximate binary boxes rationalize
/// through the marginal/correlator parametrization so no-signaling holds
/// exactly in the result.
fn load_pab(spec: &str) -> anyhow::Result<ExactDist> {
    if Path::new(spec).exists() {
        let text = std::fs::read_to_string(spec)?;
        let (d, radius) = match io::dist_from_json(&text)? {
            io::DistSource::Exact(d) => (d, 0.0),
            io::DistSource::Approximate(f) => boxes::rationalize_ns_binary(&f, 1_000_000_000)
                .or_else(|_| f.rationalize(1_000_000_000))?,
        };
        if radius > 0.0 {
            eprintln!("# rationalized approximate table (radius {radius:.2e})");
        }
        Ok(d)
    } else {
        Ok(boxes::named_box(spec)?)
    }
}

fn load_pac(path: &PathBuf) -> anyhow::Result<ExactDist> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(io::dist_from_json(&text)?.into_exact(1_000_000_000)?.0)
}

fn parse_criterion(s: &str) -> anyhow::Result<Criterion> {
    match s {
        "d" => Ok(Criterion::D),
        "sigma" | "σ" => Ok(Criterion::Sigma),
        other => bail!("unknown criterion `{other}` (use d or sigma)"),
    }
}

fn separation_query(
    graph: Option<&PathBuf>,
    builtin: &str,
    statement: &str,
    criterion: Criterion,
) -> anyhow::Result<i32> {
    let g = load_graph(graph, builtin)?;
    let st = SeparationStatement::parse(statement, criterion)?;
    let verdict = separated(&g, &st.left, &st.right, &st.given, criterion)?;
    println!(
        "{} [{}]: {}",
        st.to_text(),
        criterion,
        if verdict {
            "separated"
        } else {
            "not separated"
        }
    );
    Ok(if verdict { 0 } else { 1 })
}

fn run(cli: &Cli) -> anyhow::Result<i32> {
    match &cli.command {
        Command::Dsep {
            statement,
            graph,
            builtin,
        } => separation_query(graph.as_ref(), builtin, statement, Criterion::D),
        Command::Sigmasep {
            statement,
            graph,
            builtin,
        } => separation_query(graph.as_ref(), builtin, statement, Criterion::Sigma),
        Command::CiTest {
            statement,
            dist,
            fixes,
        } => {
            let text = std::fs::read_to_string(dist)?;
            let source = io::dist_from_json(&text)?;
            let st = SeparationStatement::parse(statement, Criterion::D)?;
            let u: Vec<&str> = st.left.iter().map(String::as_str).collect();
            let v: Vec<&str> = st.right.iter().map(String::as_str).collect();
            let w: Vec<&str> = st.given.iter().map(String::as_str).collect();
            let holds = match source {
                io::DistSource::Exact(d) => {
                    let mut policy = SettingsPolicy::uniform();
                    for f in fixes {
                        let (var, val) = parse_fix(f)?;
                        policy = policy.with(var, SettingPrior::Fixed(val));
                    }
                    let verdict = d.ci_holds(&u, &v, &w, &policy, Q::from_integer(0.into()))?;
                    println!(
                        "CI {}: {} (max deviation {})",
                        st.to_text(),
                        if verdict.holds { "holds" } else { "fails" },
                        format_rational(&verdict.max_deviation)
                    );
                    verdict.holds
                }
                io::DistSource::Approximate(d) => {
                    let mut policy = SettingsPolicy::uniform();
                    for f in fixes {
                        let (var, val) = parse_fix(f)?;
                        policy = policy.with(var, SettingPrior::Fixed(val));
                    }
                    let verdict = d.ci_holds(&u, &v, &w, &policy, cli.tolerance)?;
                    println!(
                        "CI {}: {} (max deviation {:.3e}, tolerance {:.1e})",
                        st.to_text(),
                        if verdict.holds { "holds" } else { "fails" },
                        verdict.max_deviation,
                        cli.tolerance
                    );
                    verdict.holds
                }
            };
            Ok(if holds { 0 } else { 1 })
        }
        Command::MarginalFeasible { pab, pac } => {
            let pab = load_pab(pab)?;
            let pac = load_pac(pac)?;
            match lfkit::marginal::marginal_feasible(&pab, &pac)? {
                lfkit::linprog::Verdict::Feasible { .. } => {
                    println!("feasible: a constrained joint P(abc|xy) exists");
                    Ok(0)
                }
                lfkit::linprog::Verdict::Infeasible { certificate } => {
                    println!(
                        "infeasible: certificate with {} equality multipliers (verified)",
                        certificate.eq_multipliers.len()
                    );
                    Ok(1)
                }
            }
        }
        Command::MinGamma { pab } => {
            let pab = load_pab(pab)?;
            let mg = min_gamma(&pab)?;
            println!(
                "gamma_min = {} ≈ {:.9}",
                format_rational(&mg.gamma),
                to_f64(&mg.gamma)
            );
            std::fs::create_dir_all(&cli.out)?;
            let path = cli.out.join("min_gamma_extension.json");
            std::fs::write(&path, io::exact_dist_to_json(&mg.extension))?;
            println!("optimizing extension written to {}", path.display());
            Ok(0)
        }
        Command::Monogamy { pab, pac } => {
            let pab = load_pab(pab)?;
            let pac = load_pac(pac)?;
            let (lhs, satisfied) = monogamy_eq2(&pab, &pac)?;
            println!(
                "chsh + 2·agreement = {} ≈ {:.9}; bound 5: {}",
                format_rational(&lhs),
                to_f64(&lhs),
                if satisfied { "satisfied" } else { "violated" }
            );
            Ok(if satisfied { 0 } else { 1 })
        }
        Command::LfFacets { joint } => {
            let mode = if *joint {
                LfProjection::Joint
            } else {
                LfProjection::PabOnly
            };
            let fc = lf_facets(mode)?;
            println!(
                "{} projected vertices, hull dimension {}, {} facets ({} nontrivial)",
                fc.vertices.len(),
                fc.hull.dim,
                fc.facets.len(),
                fc.nontrivial.len()
            );
            for ineq in &fc.nontrivial {
                println!("  {ineq}");
            }
            if !*joint {
                let all_chsh = lfkit::marginal::chsh_symmetries()
                    .iter()
                    .all(|s| fc.is_facet(s).unwrap_or(false));
                println!("nontrivial facets are the 8 CHSH symmetries: {all_chsh}");
            }
            Ok(0)
        }
        Command::Member { pab, polytope } => {
            let pab = load_pab(pab)?;
            let which = match polytope.as_str() {
                "lhv" => BoxPolytope::Lhv,
                "ns" => BoxPolytope::NoSignaling,
                "lf-perfect" => BoxPolytope::LfPerfect,
                other => {
                    if let Some(path) = other.strip_prefix("lf:") {
                        BoxPolytope::LfGiven(load_pac(&PathBuf::from(path))?)
                    } else {
                        bail!("unknown polytope `{other}`");
                    }
                }
            };
            let m = membership(&pab, &which)?;
            if m.inside {
                println!("inside");
                Ok(0)
            } else {
                println!("outside");
                if let Some(sep) = m.separator {
                    println!("separating functional: {sep}");
                }
                Ok(1)
            }
        }
        Command::Slice {
            t1_min,
            t1_max,
            t2_min,
            t2_max,
            res1,
            res2,
            f1,
            f2,
        } => {
            let load_f = |p: &Option<PathBuf>,
                          default: lfkit::marginal::Inequality|
             -> anyhow::Result<lfkit::marginal::Inequality> {
                match p {
                    Some(path) => {
                        let text = std::fs::read_to_string(path)?;
                        Ok(io::inequality_from_json(&text)?)
                    }
                    None => Ok(default),
                }
            };
            let f1 = load_f(f1, chsh_functional())?;
            let f2 = load_f(f2, chsh_symmetry(0, 0, false))?;
            let scan = slice_scan(
                &f1,
                &f2,
                (parse_rational(t1_min)?, parse_rational(t1_max)?),
                (parse_rational(t2_min)?, parse_rational(t2_max)?),
                *res1,
                *res2,
            )?;
            std::fs::create_dir_all(&cli.out)?;
            let path = cli.out.join("slice.csv");
            std::fs::write(&path, scan.to_csv())?;
            println!(
                "{} grid points written to {}",
                scan.points.len(),
                path.display()
            );
            Ok(0)
        }
        Command::QuantumLf { scenario, sweep } => {
            let model = match scenario {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    io::quantum_model_from_json(&text)?
                }
                None => tsirelson_model(),
            };
            let out = run_minimal_lf(&model)?;
            let chsh = boxes::chsh_value(&out.pab)?;
            let agency = verify_local_agency(&out.bookkeeping, 1e-12)?;
            println!("chsh value: {chsh:.12}");
            println!(
                "statistical constraints on the bookkeeping joint: max deviations ({:.2e}, {:.2e})",
                agency.max_dev_alice_friend, agency.max_dev_bob_friend
            );
            std::fs::create_dir_all(&cli.out)?;
            std::fs::write(cli.out.join("pab.json"), io::float_dist_to_json(&out.pab))?;
            std::fs::write(
                cli.out.join("pac_x1.json"),
                io::float_dist_to_json(&out.pac_x1),
            )?;
            std::fs::write(cli.out.join("pc.json"), io::float_dist_to_json(&out.pc))?;
            println!("distribution tables written to {}", cli.out.display());
            if let Some(n) = sweep {
                let seed = cli
                    .seed
                    .ok_or_else(|| anyhow!("--sweep requires --seed (sweeps are evidence)"))?;
                let worst = random_model_sweep(*n, seed)?;
                println!(
                    "sweep: {} random models, max chsh = {:.9} (bound {:.9})",
                    n,
                    worst,
                    2.0 + std::f64::consts::SQRT_2
                );
                if worst > 2.0 + std::f64::consts::SQRT_2 + 1e-9 {
                    return Ok(1);
                }
            }
            Ok(0)
        }
        Command::Veronika {
            config,
            n_list,
            epsilon,
            from_quantum,
            variant,
        } => {
            let variant = match variant.as_str() {
                "max" => FrequencyTest::MaxDeviation,
                "mean-context" => FrequencyTest::MeanContextDeviation,
                other => bail!("unknown variant `{other}`"),
            };
            std::fs::create_dir_all(&cli.out)?;
            if let Some(path) = config {
                let text = std::fs::read_to_string(path)?;
                let cfg = io::protocol_from_json(&text)?;
                let partition =
                    veronika::partition_sequences(&cfg.table, &cfg.epsilon, cfg.variant)?;
                let post = veronika::postselect(&cfg.table, &partition)?;
                let disc = veronika::induced_discrepancy(&cfg.table, &post)?;
                let (pvm, dev) = veronika::pvm_variant_pass_probability(&cfg.table, &partition)?;
                println!("J = {} of {}", partition.j, cfg.table.sequence_count());
                println!(
                    "pass probability = {:.12} (single-step variant {:.12}, dev {:.2e})",
                    post.pass_probability, pvm, dev
                );
                println!("fidelity = {:.12}", post.fidelity);
                println!(
                    "induced copy-error estimate γ = {:.12} (per-run total variation, maximized over runs)",
                    disc.gamma
                );
                return Ok(0);
            }
            let single_run = match from_quantum {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    let model = io::quantum_model_from_json(&text)?;
                    let out = run_minimal_lf(&model)?;
                    (0..2)
                        .map(|c| {
                            num_complex::Complex64::new(out.pc.prob(&[0, 0], &[c]).sqrt(), 0.0)
                        })
                        .collect::<Vec<_>>()
                }
                None => vec![num_complex::Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2],
            };
            let ns: Vec<usize> = n_list
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| anyhow!("bad N `{s}`")))
                .collect::<anyhow::Result<_>>()?;
            let eps = parse_rational(epsilon)?;
            let rows = veronika::sweep(2, &single_run, &ns, &eps, variant)?;
            let csv = veronika::sweep_csv(&rows, &eps, variant);
            let path = cli.out.join("veronika_sweep.csv");
            std::fs::write(&path, &csv)?;
            print!("{csv}");
            println!("sweep written to {}", path.display());
            Ok(0)
        }
        Command::Scm {
            model,
            builtin,
            condition,
            criterion,
        } => {
            let model = match model {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    io::model_from_json(&text)?
                }
                None => match builtin.as_str() {
                    "cyclic-ex1" => lfkit::scm::four_cycle_model(),
                    "cyclic-ex2" => lfkit::scm::two_cycle_xor_model(),
                    other => bail!("unknown built-in model `{other}`"),
                },
            };
            let conditioning = match condition {
                Some(c) => parse_conditioning(c)?,
                None => Default::default(),
            };
            let sols = lfkit::scm::solve(&model, &conditioning)?;
            println!(
                "{} of {} error evaluations admit a solution",
                sols.valid_count(),
                sols.evaluations.len()
            );
            let dist = lfkit::scm::induced_distribution(&model, &conditioning)?;
            print!("{}", io::dist_report(&dist));
            let criterion = parse_criterion(criterion)?;
            let report = lfkit::scm::ci_vs_separation_report(&model, criterion)?;
            println!(
                "separation-rule check [{criterion}]: {} statements, {} violations",
                report.rows.len(),
                report.violations().len()
            );
            for row in report.violations() {
                println!(
                    "  VIOLATION: {} separated but dependence found",
                    row.statement
                );
            }
            Ok(if report.violations().is_empty() { 0 } else { 1 })
        }
        Command::Audit {
            graph,
            builtin,
            cis,
            criterion,
        } => {
            let g = load_graph(graph.as_ref(), builtin)?;
            let statements: Vec<CiStatement> = match cis {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    io::ci_list_from_json(&text)?.statements
                }
                None => nft_premises(),
            };
            let criterion = parse_criterion(criterion)?;
            let report = audit(&g, &statements, criterion)?;
            for (ci, explanation) in &report.rows {
                match explanation {
                    lfkit::audit::CiExplanation::ExplainedBySeparation(sep) => {
                        println!("{ci}: explained by {sep}");
                    }
                    lfkit::audit::CiExplanation::FineTuned => {
                        println!("{ci}: FINE-TUNED (no separation backs it)");
                    }
                }
            }
            println!(
                "verdict: {}",
                if report.fine_tuned {
                    "fine-tuned"
                } else {
                    "faithful"
                }
            );
            Ok(if report.fine_tuned { 1 } else { 0 })
        }
        Command::Derive { premises, pab, pac } => {
            let (kind, cis) = match premises.as_str() {
                "nft" => (PremiseKind::NoFineTuning, nft_premises()),
                "relativistic" => (PremiseKind::Relativistic, relativistic_premises()),
                other => bail!("unknown premise family `{other}`"),
            };
            let pab = load_pab(pab)?;
            let pac = load_pac(pac)?;
            let trace = nogo_derivation(kind, &cis, &pab, &pac)?;
            print!("{}", trace_text(&trace));
            Ok(match trace.conclusion {
                DerivationOutcome::FeasibleNoContradiction => 0,
                DerivationOutcome::InfeasibleFineTuningRequired => 1,
            })
        }
        Command::Reproduce { target } => reproduce::run(target, &cli.out),
    }
}

fn parse_fix(s: &str) -> anyhow::Result<(String, usize)> {
    let (var, val) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("expected VAR=value, got `{s}`"))?;
    Ok((var.trim().to_string(), val.trim().parse()?))
}

fn parse_conditioning(s: &str) -> anyhow::Result<std::collections::BTreeMap<String, i64>> {
    s.split(',')
        .map(|pair| {
            let (var, val) = pair
                .split_once('=')
                .ok_or_else(|| anyhow!("expected VAR=value, got `{pair}`"))?;
            Ok((var.trim().to_string(), val.trim().parse()?))
        })
        .collect()
}

fn random_model_sweep(n: usize, seed: u64) -> anyhow::Result<f64> {
    use lfkit::quantum::{AliceAction, EffectFamily, MinimalLfModel, StateVector, Unitary};
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut worst = 0f64;
    for _ in 0..n {
        let raw: Vec<num_complex::Complex64> = (0..4)
            .map(|_| {
                num_complex::Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            })
            .collect();
        let norm: f64 = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<num_complex::Complex64> = raw.iter().map(|a| a / norm).collect();
        let model = MinimalLfModel {
            initial: StateVector::new(vec![2, 2], amps)?,
            charlie_unitary: Unitary::copy_gate(2),
            charlie_reverse: None,
            alice: vec![
                AliceAction::ReverseThenMeasure(EffectFamily::projective_qubit(
                    rng.random::<f64>() * std::f64::consts::PI,
                )),
                AliceAction::CopyMemory,
            ],
            bob: vec![
                EffectFamily::projective_qubit(rng.random::<f64>() * std::f64::consts::PI),
                EffectFamily::projective_qubit(rng.random::<f64>() * std::f64::consts::PI),
            ],
        };
        let out = run_minimal_lf(&model)?;
        let chsh = boxes::chsh_value(&out.pab)?;
        worst = worst.max(chsh);
    }
    Ok(worst)
}
