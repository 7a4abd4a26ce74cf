"""Command-line interface.

Subcommands: sample-prior, eval-density, infer, localization-study,
recovery-benchmark, selftest.  Every subcommand is deterministic given
--seed.  Exit codes: 0 success, 1 failed check, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .analysis import lecs_stationary_distribution
from .core import CommunityAssignment, SizeHistogram, TemporalNetwork, substream
from .experiments import (
    LocalizationCell,
    LocalizationPlan,
    RecoveryPlan,
    default_localization_plan,
    load_plan,
    plan_hash,
    run_localization_study,
    run_recovery_benchmark,
    write_manifest,
    write_rows_csv,
)
from .prior_density import (
    JTable,
    MonteCarloBudget,
    build_J_table,
    compute_J_digamma,
    compute_J_partial_fractions,
    compute_J_quadrature,
    log_prob_assignment,
)
from .priors import PriorModel, RetentionMode, sample_prior
from .sampler import AnnealingSchedule, SamplerConfig, run_chain, run_yang_annealing

MODEL_CHOICES = ("uniform", "nodewise", "yang", "bazzi", "lecs")


def _fmt(x):
    return f"{x:.12g}"


def _model_from_args(args):
    retention = None
    if args.model == "lecs":
        if args.retention == "random":
            retention = RetentionMode.random()
        else:
            retention = RetentionMode.fixed(float(args.retention))
    return PriorModel(args.model, args.n, args.L, args.k, retention=retention)


def _out_dir(args):
    out = args.out or os.environ.get("TEMPOCOM_OUT", ".")
    os.makedirs(out, exist_ok=True)
    return out


def cmd_sample_prior(args):
    model = _model_from_args(args)
    rng = substream(args.seed, 40)
    out = _out_dir(args)
    n, L = model.n, model.L
    per_layer = np.zeros((L, n + 1), dtype=np.int64)
    overall = np.zeros(n * L + 1, dtype=np.int64)
    assignments_fh = None
    if args.save_assignments:
        assignments_fh = open(os.path.join(out, "assignments.ndjson"), "w")
    try:
        for _ in range(args.M):
            g = sample_prior(model, rng)
            ones = g.labels == 1
            sizes = ones.sum(axis=0)
            for ell in range(L):
                per_layer[ell, sizes[ell]] += 1
            overall[int(sizes.sum())] += 1
            if assignments_fh is not None:
                assignments_fh.write(g.to_json() + "\n")
    finally:
        if assignments_fh is not None:
            assignments_fh.close()
    rows = []
    for ell in range(L):
        name = "monolayer" if L == 1 else f"layer_{ell + 1}"
        for size, c in enumerate(per_layer[ell]):
            rows.append(
                {"model": args.model, "n": n, "L": L, "k": args.k, "seed": args.seed,
                 "statistic": f"freq_{name}_{size}", "value": c / args.M, "se": ""}
            )
    if L > 1:
        for size, c in enumerate(overall):
            rows.append(
                {"model": args.model, "n": n, "L": L, "k": args.k, "seed": args.seed,
                 "statistic": f"freq_overall_{size}", "value": c / args.M, "se": ""}
            )
    csv_path = os.path.join(out, "size_histograms.csv")
    write_rows_csv(csv_path, rows)
    print(f"wrote {csv_path}")
    for ell in range(L):
        h = SizeHistogram(counts=per_layer[ell].astype(float), M=args.M)
        name = "monolayer" if L == 1 else f"layer {ell + 1}"
        print(f"IPR {name}: {_fmt(100 * h.ipr)} %")
    if L > 1:
        h = SizeHistogram(counts=overall.astype(float), M=args.M)
        print(f"IPR overall: {_fmt(100 * h.ipr)} %")
    return 0


def cmd_eval_density(args):
    with open(args.assignment) as fh:
        g = CommunityAssignment.from_json(fh.read())
    model = PriorModel(
        args.model, g.n, g.L, g.k,
        retention=RetentionMode.random() if args.model == "lecs" else None,
    )
    value = log_prob_assignment(
        g, model,
        budget=MonteCarloBudget(args.mc_draws),
        rng=substream(args.seed, 41),
    )
    print(_fmt(value))
    return 0


def cmd_infer(args):
    with open(args.network) as fh:
        A = TemporalNetwork.from_json(fh.read())
    out = _out_dir(args)
    if args.prior == "yang":
        estimate, trace = run_yang_annealing(A, args.k, AnnealingSchedule(),
                                             rng=substream(args.seed, 42))
        diagnostics = {"trace": trace}
        samples = [estimate]
    else:
        retention = RetentionMode.random() if args.prior == "lecs" else None
        prior = PriorModel(args.prior, A.n, A.L, args.k, retention=retention)
        cfg = SamplerConfig(
            prior=prior,
            sweeps=args.sweeps,
            burn_in=args.burn_in,
            thinning=args.thinning,
            swap_probability=args.swap_prob,
            mc_budget=MonteCarloBudget(args.mc_draws),
            seed=args.seed,
        )
        trace_path = os.path.join(out, "trace.ndjson") if args.trace else None
        result = run_chain(A, cfg, trace_file=trace_path)
        estimate = result.final
        samples = result.assignments()
        diagnostics = {
            "log_posterior": result.log_posterior,
            "sample_sweeps": result.sample_sweeps,
            "swap_attempts": result.swap_attempts,
            "swap_accepts": result.swap_accepts,
        }
    est_path = os.path.join(out, "estimate.json")
    with open(est_path, "w") as fh:
        fh.write(estimate.to_json())
    manifest = {
        "tool": "tempocom",
        "version": __version__,
        "command": "infer",
        "network": os.path.abspath(args.network),
        "prior": args.prior,
        "k": args.k,
        "seed": args.seed,
        "samples": len(samples),
    }
    manifest.update(diagnostics)
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
    print(f"wrote {est_path}")
    return 0


def cmd_localization_study(args):
    if args.plan:
        plan = load_plan(args.plan)
        if not isinstance(plan, LocalizationPlan):
            raise ValueError("plan file is not a localization plan")
    else:
        plan = default_localization_plan(kind=args.kind, M=args.M, seed=args.seed)
    out = _out_dir(args)
    rows, _ = run_localization_study(plan, workers=args.workers)
    csv_path = os.path.join(out, "localization.csv")
    write_rows_csv(csv_path, rows)
    write_manifest(os.path.join(out, "localization_manifest.json"), plan)
    for row in rows:
        if str(row["statistic"]).startswith("ipr_"):
            print(
                f"{row['model']} n={row['n']} L={row['L']} k={row['k']} "
                f"{row['statistic']}: {_fmt(100 * row['value'])} %"
            )
    print(f"wrote {csv_path}")
    return 0


def cmd_recovery_benchmark(args):
    if args.plan:
        plan = load_plan(args.plan)
        if not isinstance(plan, RecoveryPlan):
            raise ValueError("plan file is not a recovery plan")
    else:
        plan = RecoveryPlan(
            q_values=tuple(args.q),
            instantiations=args.instantiations,
            omega_diag=args.omega_diag,
            omega_off=args.omega_off,
            sweeps=args.sweeps,
            seed=args.seed,
        )
    out = _out_dir(args)
    rows, summary, tests = run_recovery_benchmark(plan, workers=args.workers)
    write_rows_csv(os.path.join(out, "recovery_scores.csv"), rows)
    write_rows_csv(os.path.join(out, "recovery_summary.csv"), summary)
    if tests:
        write_rows_csv(os.path.join(out, "recovery_tests.csv"), tests)
    write_manifest(os.path.join(out, "recovery_manifest.json"), plan)
    for row in summary:
        print(f"q={row['q']} {row['method']}: mean NMI {_fmt(row['mean_nmi'])}")
    for row in tests:
        print(
            f"q={row['q']} {row['greater']} > {row['lesser']}: "
            f"p = {_fmt(row['p_value'])}"
        )
    print(f"wrote {os.path.join(out, 'recovery_scores.csv')}")
    return 0


# ---------------------------------------------------------------- selftest


def _check(name, ok, detail=""):
    status = "ok" if ok else "FAIL"
    print(f"[{status}] {name}" + (f" ({detail})" if detail else ""))
    return ok


def _selftest_j_agreement(table_path=None):
    worst = 0.0
    for k2 in range(0, 21):
        for k1 in range(0, k2 + 1):
            dg = compute_J_digamma(k1, k2)
            pf = compute_J_partial_fractions(k1, k2)
            worst = max(worst, abs(dg - pf))
    quad_worst = 0.0
    for k1, k2 in ((0, 0), (0, 1), (1, 1), (2, 5), (7, 13), (20, 20), (3, 18)):
        quad_worst = max(quad_worst, abs(compute_J_digamma(k1, k2) - compute_J_quadrature(k1, k2)))
    col_worst = 0.0
    for k2 in range(0, 31):
        col = sum(compute_J_digamma(k1, k2) for k1 in range(k2 + 1))
        col_worst = max(col_worst, abs(col - 1.0))
    ok = worst < 1e-8 and quad_worst < 1e-8 and col_worst < 1e-8
    if table_path:
        table = JTable.from_file(table_path)
        sample = [(k1, k2) for k2 in range(0, min(table.n_max, 25) + 1) for k1 in (0, k2)]
        cache_worst = max(
            abs(table.value(k1, k2) - max(compute_J_digamma(k1, k2), table.floor))
            for k1, k2 in sample
        )
        ok = ok and cache_worst < 1e-10
        detail = f"methods {worst:.2e}, quadrature {quad_worst:.2e}, cache {cache_worst:.2e}"
    else:
        detail = f"methods {worst:.2e}, quadrature {quad_worst:.2e}, columns {col_worst:.2e}"
    return _check("J cross-method agreement", ok, detail)


def _enumerate_assignments(n, L, k):
    import itertools

    for flat in itertools.product(range(1, k + 1), repeat=n * L):
        yield CommunityAssignment(np.asarray(flat).reshape(n, L), k=k)


def _selftest_normalization(seed):
    ok = True
    table = build_J_table(4)
    for (n, L, k) in ((2, 2, 2), (3, 1, 2), (2, 1, 3)):
        for kind in ("uniform", "lecs"):
            model = PriorModel(kind, n, L, k,
                               retention=RetentionMode.random() if kind == "lecs" else None)
            total = sum(
                math.exp(log_prob_assignment(g, model, table=table))
                for g in _enumerate_assignments(n, L, k)
            )
            ok = _check(f"normalization {kind} (n={n}, L={L}, k={k})",
                        abs(total - 1.0) < 1e-6, f"sum = {total:.9f}") and ok
    model = PriorModel("bazzi", 2, 2, 2)
    rng = substream(seed, 43)
    total = sum(
        math.exp(log_prob_assignment(g, model, budget=MonteCarloBudget(1000), rng=rng))
        for g in _enumerate_assignments(2, 2, 2)
    )
    ok = _check("normalization bazzi (n=2, L=2, k=2)", abs(total - 1.0) < 0.01,
                f"sum = {total:.4f}") and ok
    return ok


def _selftest_tv(seed):
    # Long-horizon size distribution of the fixed-retention model vs the
    # analytic limit, at reduced scale.
    from .priors import sample_lecs_fixed_layer_sizes

    n, L, p, chains = 30, 120, 0.5, 20000
    rng = substream(seed, 44)
    sizes = sample_lecs_fixed_layer_sizes(n, L, p, chains, rng)
    freq = np.bincount(sizes, minlength=n + 1) / chains
    tv = 0.5 * np.abs(freq - lecs_stationary_distribution(n, p)).sum()
    return _check("long-horizon size distribution vs analytic limit", tv < 0.03,
                  f"TV = {tv:.4f}")


def cmd_selftest(args):
    ok = _selftest_j_agreement(args.j_table)
    ok = _selftest_normalization(args.seed) and ok
    if not args.quick:
        ok = _selftest_tv(args.seed) and ok
    print("selftest:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tempocom",
        description="Bayesian community detection in temporal networks",
    )
    parser.add_argument("--version", action="version", version=f"tempocom {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample-prior", help="draw assignments and report size histograms")
    sp.add_argument("--model", required=True, choices=MODEL_CHOICES)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--L", type=int, default=1)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--M", type=int, default=100_000)
    sp.add_argument("--retention", default="random",
                    help='"random" or a fixed probability in [0, 1] (lecs only)')
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.add_argument("--save-assignments", action="store_true")
    sp.set_defaults(func=cmd_sample_prior)

    ed = sub.add_parser("eval-density", help="log P(g) of an assignment file")
    ed.add_argument("--assignment", required=True)
    ed.add_argument("--model", required=True, choices=("uniform", "nodewise", "bazzi", "lecs"))
    ed.add_argument("--mc-draws", type=int, default=1000)
    ed.add_argument("--seed", type=int, default=0)
    ed.set_defaults(func=cmd_eval_density)

    inf = sub.add_parser("infer", help="posterior sampling on a network file")
    inf.add_argument("--network", required=True)
    inf.add_argument("--k", type=int, required=True)
    inf.add_argument("--prior", default="lecs", choices=MODEL_CHOICES)
    inf.add_argument("--sweeps", type=int, default=200)
    inf.add_argument("--burn-in", type=int, default=None)
    inf.add_argument("--thinning", type=int, default=10)
    inf.add_argument("--swap-prob", type=float, default=3e-3)
    inf.add_argument("--mc-draws", type=int, default=1000)
    inf.add_argument("--trace", action="store_true", help="stream samples to trace.ndjson")
    inf.add_argument("--seed", type=int, default=0)
    inf.add_argument("--out", default=None)
    inf.set_defaults(func=cmd_infer)

    loc = sub.add_parser("localization-study", help="size-distribution study")
    loc.add_argument("--plan", default=None, help="TOML/JSON plan file")
    loc.add_argument("--kind", default="temporal", choices=("monolayer", "temporal"))
    loc.add_argument("--M", type=int, default=100_000)
    loc.add_argument("--seed", type=int, default=0)
    loc.add_argument("--workers", type=int, default=1)
    loc.add_argument("--out", default=None)
    loc.set_defaults(func=cmd_localization_study)

    rec = sub.add_parser("recovery-benchmark", help="planted-structure recovery study")
    rec.add_argument("--plan", default=None, help="TOML/JSON plan file")
    rec.add_argument("--q", type=int, nargs="+", default=[50, 60, 70, 80, 90])
    rec.add_argument("--instantiations", type=int, default=100)
    rec.add_argument("--omega-diag", type=float, default=0.25)
    rec.add_argument("--omega-off", type=float, default=0.1)
    rec.add_argument("--sweeps", type=int, default=150)
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--workers", type=int, default=1)
    rec.add_argument("--out", default=None)
    rec.set_defaults(func=cmd_recovery_benchmark)

    st = sub.add_parser("selftest", help="fast correctness checks")
    st.add_argument("--quick", action="store_true", help="skip the slower checks (> 10 s)")
    st.add_argument("--j-table", default=None, help="validate a persisted J table cache")
    st.add_argument("--seed", type=int, default=0)
    st.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
