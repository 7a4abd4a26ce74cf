"""Declarative studies: size-distribution localization and recovery benchmarks.

Work is split into tasks keyed by (cell, chunk) or (cell, instantiation);
every task derives its random stream from the plan seed and its own key, so
results are bitwise reproducible for any worker count.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .analysis import mann_whitney_one_sided, nmi
from .core import CommunityAssignment, SizeHistogram, substream
from .likelihood import SbmParameters, generate_sbm
from .prior_density import MonteCarloBudget, build_J_table
from .priors import PriorModel, RetentionMode, sample_prior
from .sampler import AnnealingSchedule, SamplerConfig, run_chain, run_yang_annealing

__all__ = [
    "SeededStructureSpec",
    "LocalizationCell",
    "LocalizationPlan",
    "RecoveryPlan",
    "seeded_structure",
    "run_localization_study",
    "run_recovery_benchmark",
    "default_localization_plan",
    "load_plan",
    "write_rows_csv",
    "write_manifest",
    "plan_hash",
]

DEFAULT_TAU = (0, -5, -10, -5, 0)


@dataclass(frozen=True)
class SeededStructureSpec:
    """Two-community planted structure: community 1 holds the first q + tau_l
    nodes of layer l, community 2 the rest."""

    n: int
    L: int
    q: int
    tau: tuple = DEFAULT_TAU
    omega_diag: float = 0.25
    omega_off: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(int(t) for t in self.tau))
        if len(self.tau) != self.L:
            raise ValueError(f"tau must have L={self.L} entries, got {len(self.tau)}")
        for t in self.tau:
            if not 0 <= self.q + t <= self.n:
                raise ValueError(f"offset {t} pushes community size out of [0, {self.n}]")

    @property
    def omega(self) -> SbmParameters:
        return SbmParameters.two_block(self.L, self.omega_diag, self.omega_off)


def seeded_structure(spec: SeededStructureSpec) -> CommunityAssignment:
    """Deterministic planted assignment for the benchmark networks."""
    labels = np.full((spec.n, spec.L), 2, dtype=np.int64)
    for ell, t in enumerate(spec.tau):
        labels[: spec.q + t, ell] = 1
    return CommunityAssignment(labels, k=2)


# ----------------------------------------------------------------- localization


@dataclass(frozen=True)
class LocalizationCell:
    model: str
    n: int = 50
    L: int = 5
    k: int = 2
    retention: str | float = "random"  # count-splitting model only

    def prior_model(self) -> PriorModel:
        if self.model == "lecs":
            mode = (
                RetentionMode.random()
                if self.retention == "random"
                else RetentionMode.fixed(float(self.retention))
            )
            return PriorModel.lecs(self.n, self.L, self.k, retention=mode)
        if self.model == "nodewise":
            return PriorModel.nodewise(self.n, self.k)
        return PriorModel(self.model, self.n, self.L, self.k)

    def label(self):
        return f"{self.model}-n{self.n}-L{self.L}-k{self.k}"


@dataclass(frozen=True)
class LocalizationPlan:
    cells: tuple
    M: int = 100_000
    seed: int = 0
    bootstrap: int = 200
    chunk: int = 2000
    include_histograms: bool = True

    def __post_init__(self):
        cells = tuple(
            c if isinstance(c, LocalizationCell) else LocalizationCell(**c)
            for c in self.cells
        )
        object.__setattr__(self, "cells", cells)


def default_localization_plan(kind="temporal", M=100_000, seed=0) -> LocalizationPlan:
    """Cells reproducing the reference tables: monolayer (uniform/nodewise,
    k in {2, 5}) or temporal (all four layer-coupled models, k in {2, 5})."""
    if kind == "monolayer":
        cells = [
            LocalizationCell(model=m, n=50, L=1, k=k)
            for m in ("uniform", "nodewise")
            for k in (2, 5)
        ]
    elif kind == "temporal":
        cells = [
            LocalizationCell(model=m, n=50, L=5, k=k)
            for m in ("uniform", "yang", "bazzi", "lecs")
            for k in (2, 5)
        ]
    else:
        raise ValueError(f"unknown study kind: {kind!r}")
    return LocalizationPlan(cells=tuple(cells), M=M, seed=seed)


def _localization_chunk(args):
    plan_seed, cell_idx, cell, start, stop = args
    model = cell.prior_model()
    rng = substream(plan_seed, 10, cell_idx, start)
    n, L = cell.n, cell.L
    per_layer = np.zeros((L, n + 1), dtype=np.int64)
    overall = np.zeros(n * L + 1, dtype=np.int64)
    for _ in range(start, stop):
        g = sample_prior(model, rng)
        ones = g.labels == 1
        layer_sizes = ones.sum(axis=0)
        for ell in range(L):
            per_layer[ell, layer_sizes[ell]] += 1
        overall[int(layer_sizes.sum())] += 1
    return cell_idx, per_layer, overall


def _bootstrap_ipr_se(counts, M, resamples, rng):
    freqs = counts / counts.sum()
    iprs = np.empty(resamples)
    for b in range(resamples):
        f = rng.multinomial(M, freqs) / M
        iprs[b] = float(f @ f)
    return float(iprs.std(ddof=1))


def run_localization_study(plan: LocalizationPlan, workers: int = 1):
    """Draw M assignments per cell and report size histograms and IPRs.

    Returns (rows, histograms): ``rows`` are CSV-ready dicts with the cell
    parameters, statistic name, value, and standard error; ``histograms``
    maps cell labels to the raw per-layer and overall count arrays.
    """
    tasks = []
    for ci, cell in enumerate(plan.cells):
        for start in range(0, plan.M, plan.chunk):
            tasks.append((plan.seed, ci, cell, start, min(start + plan.chunk, plan.M)))
    per_layer = {ci: np.zeros((c.L, c.n + 1), dtype=np.int64) for ci, c in enumerate(plan.cells)}
    overall = {ci: np.zeros(c.n * c.L + 1, dtype=np.int64) for ci, c in enumerate(plan.cells)}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for ci, pl, ov in pool.map(_localization_chunk, tasks, chunksize=4):
                per_layer[ci] += pl
                overall[ci] += ov
    else:
        for task in tasks:
            ci, pl, ov = _localization_chunk(task)
            per_layer[ci] += pl
            overall[ci] += ov

    rows = []
    histograms = {}
    for ci, cell in enumerate(plan.cells):
        boot_rng = substream(plan.seed, 11, ci)
        base = {
            "model": cell.model,
            "n": cell.n,
            "L": cell.L,
            "k": cell.k,
            "retention": str(cell.retention),
            "M": plan.M,
            "seed": plan.seed,
        }
        histograms[cell.label()] = {
            "per_layer": per_layer[ci],
            "overall": overall[ci],
        }
        for ell in range(cell.L):
            counts = per_layer[ci][ell]
            h = SizeHistogram(counts=counts.astype(float), M=plan.M)
            name = "monolayer" if cell.L == 1 else f"layer_{ell + 1}"
            rows.append(
                dict(
                    base,
                    statistic=f"ipr_{name}",
                    value=h.ipr,
                    se=_bootstrap_ipr_se(counts, plan.M, plan.bootstrap, boot_rng),
                )
            )
        if cell.L > 1:
            counts = overall[ci]
            h = SizeHistogram(counts=counts.astype(float), M=plan.M)
            rows.append(
                dict(
                    base,
                    statistic="ipr_overall",
                    value=h.ipr,
                    se=_bootstrap_ipr_se(counts, plan.M, plan.bootstrap, boot_rng),
                )
            )
        if plan.include_histograms:
            for ell in range(cell.L):
                name = "monolayer" if cell.L == 1 else f"layer_{ell + 1}"
                for size, c in enumerate(per_layer[ci][ell]):
                    if c:
                        rows.append(
                            dict(base, statistic=f"freq_{name}_{size}", value=c / plan.M, se="")
                        )
            if cell.L > 1:
                for size, c in enumerate(overall[ci]):
                    if c:
                        rows.append(
                            dict(base, statistic=f"freq_overall_{size}", value=c / plan.M, se="")
                        )
    return rows, histograms


# -------------------------------------------------------------------- recovery

RECOVERY_METHODS = ("lecs", "lecs_noswap", "bazzi", "bazzi_noswap", "yang", "uniform")


@dataclass(frozen=True)
class RecoveryPlan:
    q_values: tuple = (50, 60, 70, 80, 90)
    methods: tuple = ("lecs", "lecs_noswap", "bazzi", "bazzi_noswap", "yang")
    instantiations: int = 100
    n: int = 100
    L: int = 5
    tau: tuple = DEFAULT_TAU
    omega_diag: float = 0.25
    omega_off: float = 0.1
    sweeps: int = 150
    burn_in: int = 50
    thinning: int = 10
    swap_probability: float = 3e-3
    mc_draws: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "q_values", tuple(int(q) for q in self.q_values))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "tau", tuple(int(t) for t in self.tau))
        for m in self.methods:
            if m not in RECOVERY_METHODS:
                raise ValueError(f"unknown method {m!r}; expected one of {RECOVERY_METHODS}")


def _task_seed(plan_seed, *key):
    return int(np.random.SeedSequence(plan_seed, spawn_key=tuple(key)).generate_state(1)[0])


def _recovery_task(args):
    plan, qi, inst, method = args
    q = plan.q_values[qi]
    spec = SeededStructureSpec(
        n=plan.n, L=plan.L, q=q, tau=plan.tau,
        omega_diag=plan.omega_diag, omega_off=plan.omega_off,
    )
    truth = seeded_structure(spec)
    net_rng = substream(plan.seed, 20, qi, inst)
    A = generate_sbm(truth, spec.omega, net_rng)
    mi = RECOVERY_METHODS.index(method)
    chain_seed = _task_seed(plan.seed, 21, qi, inst, mi)
    if method == "yang":
        est, _ = run_yang_annealing(A, 2, AnnealingSchedule(), rng=substream(plan.seed, 22, qi, inst, mi))
        score = nmi(est, truth)
    else:
        base = method.replace("_noswap", "")
        prior = PriorModel(base, plan.n, plan.L, 2,
                           retention=RetentionMode.random() if base == "lecs" else None)
        cfg = SamplerConfig(
            prior=prior,
            sweeps=plan.sweeps,
            burn_in=plan.burn_in,
            thinning=plan.thinning,
            swap_probability=0.0 if method.endswith("_noswap") else plan.swap_probability,
            mc_budget=MonteCarloBudget(plan.mc_draws),
            seed=chain_seed,
        )
        table = _shared_table(plan.n) if base == "lecs" else None
        result = run_chain(A, cfg, table=table)
        scores = [nmi(g, truth) for g in result.assignments()]
        score = float(np.mean(scores))
    return {
        "q": q,
        "method": method,
        "instantiation": inst,
        "nmi": score,
        "seed": chain_seed,
        "n": plan.n,
        "L": plan.L,
        "omega_diag": plan.omega_diag,
        "omega_off": plan.omega_off,
    }


_TABLE_CACHE = {}


def _shared_table(n):
    if n not in _TABLE_CACHE:
        _TABLE_CACHE[n] = build_J_table(n)
    return _TABLE_CACHE[n]


def run_recovery_benchmark(plan: RecoveryPlan, workers: int = 1):
    """Planted-structure recovery comparison.

    For each community-1 size q and each instantiation, one network is drawn
    and shared by all methods; each method's accuracy is the mean similarity
    of its posterior samples (or point estimate) to the planted assignment.
    Returns (rows, summary, tests): per-run scores, per-cell means, and
    one-sided rank-test p-values for the paper's comparisons.
    """
    tasks = [
        (plan, qi, inst, method)
        for qi in range(len(plan.q_values))
        for inst in range(plan.instantiations)
        for method in plan.methods
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_recovery_task, tasks, chunksize=1))
    else:
        rows = [_recovery_task(t) for t in tasks]

    by_cell = {}
    for row in rows:
        by_cell.setdefault((row["q"], row["method"]), []).append(row["nmi"])
    summary = [
        {
            "q": q,
            "method": method,
            "mean_nmi": float(np.mean(scores)),
            "instantiations": len(scores),
        }
        for (q, method), scores in sorted(by_cell.items())
    ]

    comparisons = [
        ("lecs", "lecs_noswap"),
        ("bazzi", "bazzi_noswap"),
        ("lecs", "bazzi"),
        ("lecs", "yang"),
        ("lecs", "uniform"),
    ]
    tests = []
    for q in plan.q_values:
        for better, worse in comparisons:
            if better in plan.methods and worse in plan.methods:
                x = by_cell.get((q, better))
                y = by_cell.get((q, worse))
                if x and y:
                    tests.append(
                        {
                            "q": q,
                            "greater": better,
                            "lesser": worse,
                            "p_value": mann_whitney_one_sided(x, y),
                            "mean_greater": float(np.mean(x)),
                            "mean_lesser": float(np.mean(y)),
                        }
                    )
    return rows, summary, tests


# ------------------------------------------------------------------- plumbing


def plan_hash(plan) -> str:
    doc = json.dumps(asdict(plan), sort_keys=True, default=str)
    return hashlib.sha256(doc.encode()).hexdigest()[:16]


def write_rows_csv(path, rows, fieldnames=None):
    if not rows:
        raise ValueError("no rows to write")
    fieldnames = fieldnames or list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.12g}"
    return value


def write_manifest(path, plan, extra=None):
    doc = {
        "tool": "tempocom",
        "version": __version__,
        "study": type(plan).__name__,
        "seed": plan.seed,
        "config_hash": plan_hash(plan),
        "plan": asdict(plan),
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=str)


def load_plan(path):
    """Read a study plan from a TOML or JSON file.

    The file must carry ``study = "localization" | "recovery"``; remaining
    keys are the corresponding plan fields.
    """
    text = open(path, "rb").read()
    if str(path).endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        doc = tomllib.loads(text.decode())
    else:
        doc = json.loads(text.decode())
    study = doc.pop("study", None)
    if study == "localization":
        cells = tuple(LocalizationCell(**c) for c in doc.pop("cells"))
        return LocalizationPlan(cells=cells, **doc)
    if study == "recovery":
        return RecoveryPlan(**doc)
    raise ValueError('plan file needs study = "localization" or "recovery"')
