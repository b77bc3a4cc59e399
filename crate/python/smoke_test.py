#!/usr/bin/env python3
"""Smoke test for the lfkit_py extension module.

Build the extension first:

    cargo build -p lfkit-py --release

then run this script from anywhere; it locates the built cdylib, stages it
under an importable name, and drives the main types and operations.
"""

import shutil
import sys
import tempfile
from fractions import Fraction
from pathlib import Path


def stage_module() -> None:
    root = Path(__file__).resolve().parent.parent
    candidates = [
        root / "target" / "release" / "liblfkit_py.so",
        root / "target" / "debug" / "liblfkit_py.so",
        root / "target" / "release" / "liblfkit_py.dylib",
        root / "target" / "debug" / "liblfkit_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not found; run `cargo build -p lfkit-py --release` first")
    stage = Path(tempfile.mkdtemp(prefix="lfkit-py-"))
    shutil.copy2(built, stage / "lfkit_py.so")
    sys.path.insert(0, str(stage))


stage_module()
import lfkit_py  # noqa: E402

checks = 0


def check(name: str, condition: bool) -> None:
    global checks
    if not condition:
        sys.exit(f"FAIL: {name}")
    checks += 1
    print(f"PASS: {name}")


# Graph layer -----------------------------------------------------------
lf = lfkit_py.Graph.lf()
check("LF graph is acyclic", lf.is_acyclic())
check("ancestors of A", set(lf.ancestors("A")) == {"X", "C", "L"})
check("AC ⟂ Y | X", lf.separated(["A", "C"], ["Y"], ["X"]))
check("BC ⟂ X | Y", lf.separated(["B", "C"], ["X"], ["Y"]))
check("A, B share the common cause", not lf.separated(["A"], ["B"], ["X", "Y"]))

bell = lfkit_py.Graph.bell()
check("latent-level: L ⟂ XY", bell.separated_nodes(["L"], ["X", "Y"], []))
check("latent-level: AX ⟂ BY | L", bell.separated_nodes(["A", "X"], ["B", "Y"], ["L"]))

fine_tuned, unexplained = lf.audit(["A | Y | X", "B | X | Y", "C | X | Y", "C | Y | X"])
check("LF graph explains the premise independences", not fine_tuned and not unexplained)

# Custom graph round-trip.
g = lfkit_py.Graph(
    [("A", "observed"), ("B", "observed"), ("C", "observed"), ("D", "observed")],
    [("D", "A"), ("A", "B"), ("B", "C"), ("C", "D")],
)
check("four-node cycle has one component", len(g.strongly_connected_components()) == 1)
check("σ defeats chain blocking on the cycle", not g.separated(["B"], ["D"], ["A", "C"], "sigma"))
check("d blocks on the cycle", g.separated(["B"], ["D"], ["A", "C"], "d"))

# Distributions and the marginal problem --------------------------------
pr = lfkit_py.Distribution.named("pr_box")
frac, chsh_float = pr.chsh()
check("CHSH of the extremal box is 4", frac == "4" and chsh_float == 4.0)
check("entry P(0,0|1,1) of the extremal box is 0", pr.prob([1, 1], [0, 0]) == "0")

gamma_frac, gamma_float = lfkit_py.min_gamma(pr)
check("γ(extremal box) = 1/2 exactly", gamma_frac == "1/2")

noise = lfkit_py.Distribution.named("white_noise")
check("white noise is deterministic-explainable", lfkit_py.member(noise, "lhv")[0])

pac = lfkit_py.Distribution.perfect_copy("1/2", "1/2")
lhs, satisfied = lfkit_py.monogamy(pr, pac)
check("monogamy lhs = 6, violated", lhs == "6" and not satisfied)
check("the violating pair is infeasible", not lfkit_py.marginal_feasible(pr, pac))

inside, separator = lfkit_py.member(pr, "lf-perfect")
check("extremal box outside the perfect-copy set, with separator", not inside and separator)

# Quantum realization ----------------------------------------------------
result = lfkit_py.run_minimal_lf()
check("simulated CHSH hits 2 + √2", abs(result["chsh"] - (2 + 2 ** 0.5)) < 1e-9)
check("copy setting exact", result["copy_exact"])
check("statistical constraints within 1e-12", result["agency_deviation"] < 1e-12)
conclusion, trace = lfkit_py.nogo_derivation(result["pab"], pac)
check("derivation concludes fine-tuning required", "fine-tuning required" in conclusion)

# Verification protocol ---------------------------------------------------
rows = lfkit_py.veronika_sweep(2, [4, 8, 16], "1/4")
js = [j for (_, _, j, _, _) in rows]
check("pass counts are 6, 182, 60502", js == [6, 182, 60502])
probs = [Fraction(j, total) for (_, total, j, _, _) in rows]
check("pass probability nondecreasing", probs == sorted(probs))
check("pass probability ≥ 0.9 at N = 16", probs[-1] >= Fraction(9, 10))

# Structural models -------------------------------------------------------
model = lfkit_py.Model.builtin("cyclic-ex1")
valid, invalid, _ = model.solve({"A": 0, "C": 0})
check("7 of 16 evaluations invalid under conditioning", (valid, invalid) == (9, 7))
conditioned = model.induced_distribution({"A": 0, "C": 0})
check("conditioned P(B=0, D=0) = 4/9", conditioned.prob([], [0, 0]) == "4/9")
d_rows = model.separation_report("d")
check("d-rule violation flagged", any(v for (_, _, v) in d_rows))
s_rows = model.separation_report("sigma")
check("no σ-rule violation", not any(v for (_, _, v) in s_rows))

model2 = lfkit_py.Model.builtin("cyclic-ex2")
joint = model2.induced_distribution()
cd = joint.marginalize(["C", "D"])
check("two-cycle inputs perfectly correlated", cd.prob([], [0, 0]) == "1/2" and cd.prob([], [0, 1]) == "0")

print(f"\nall {checks} checks passed")
