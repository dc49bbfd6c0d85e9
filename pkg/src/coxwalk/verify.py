"""Batch verification: every structural check, fiber by fiber, with a process pool.

Each fiber is checked independently, so the pool only changes wall-clock
time; results are gathered in score order and are identical for any
``threads`` value.
"""
from __future__ import annotations

import multiprocessing
import os
from importlib import resources
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .dynamics import C_MAX, fiber_report, prepare_coupling
from .errors import CoxwalkError, LemmaViolation
from .generators import apply_generator_reversal, catalog_json
from .interchange import (Fiber, all_fibers, build_interchange_graph, check_cap, enumerate_fiber,
                          extended_network_overlap_failures, extended_networks_and_crystals, graph_metrics,
                          network_census, stable_closure_failures)
from .signed import RootType, Tournament, build_complete_graph, degree_formula
from .zframe import (build_zframe, decompose_neutral_trails, irreducible_components, irreducible_neutral_sets,
                     is_irreducible, reverse_neutral_subtournament)

# deep closure checks walk every distance-two pair in Python; keep them to small graphs
DEEP_MAX_N = 3


@dataclass
class CheckResult:
    name: str
    passed: bool
    cases: int = 0
    detail: str = ""


@dataclass
class FiberVerification:
    score: tuple[int, ...]
    vertices: int
    d: int
    checks: list[CheckResult]
    report: dict | None = None
    census: dict[str, int] = field(default_factory=dict)
    gamma: int = 0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _guard(name: str, fn) -> CheckResult:
    try:
        cases, failures = fn()
    except LemmaViolation as exc:
        return CheckResult(name, False, 0, str(exc))
    return CheckResult(name, not failures, cases, "; ".join(failures[:3]))


def check_reversals(t: Tournament, game_mask: int) -> tuple[int, list[str]]:
    """Reverse the neutral set ``game_mask`` of ``t``; check the flip and the length bound."""
    graph = t.graph
    ids = [g for g in range(graph.m) if (game_mask >> g) & 1]
    bound = sum(bin(c).count("1") - 2 for c in irreducible_components(graph, t.w, game_mask))
    moves = reverse_neutral_subtournament(t, ids)
    cur = t
    for c in moves:
        cur = apply_generator_reversal(cur, c)
    out = []
    if cur.w ^ t.w != game_mask:
        out.append(f"reversal of {ids} in {t} flipped {cur.w ^ t.w:#x}")
    if len(moves) > bound:
        out.append(f"reversal of {ids} in {t} used {len(moves)} > {bound} generators")
    return 1, out


def verify_fiber(fiber: Fiber, mixing: bool = True, deep: bool | None = None,
                 reversal_samples: int = 20, seed: int = 0) -> FiberVerification:
    """Run every per-fiber check; failures are recorded, never raised."""
    graph = fiber.graph
    deep = graph.n <= DEEP_MAX_N if deep is None else deep
    d = degree_formula(graph.root_type, graph.n, fiber.score)
    checks: list[CheckResult] = []
    try:
        g = build_interchange_graph(fiber)
    except LemmaViolation as exc:
        return FiberVerification(fiber.score, len(fiber), d, [CheckResult("degree", False, 0, str(exc))])
    checks.append(CheckResult("degree", True, len(fiber)))

    metrics = graph_metrics(g)
    ok = metrics.connected and metrics.diameter <= max(graph.m - 2, 0)
    checks.append(CheckResult("connectivity", ok, 1,
                              "" if ok else f"connected={metrics.connected} diameter={metrics.diameter}"))

    census = network_census(g)
    bad = census.unclassified + census.inconsistent
    checks.append(CheckResult("networks", bad == 0, census.pairs,
                              "" if bad == 0 else f"{census.unclassified} unclassified, "
                                                  f"{census.inconsistent} inconsistent"))

    ext = extended_networks_and_crystals(g)
    checks.append(CheckResult("crystals", not ext.failures, len(ext.stats.crystals), "; ".join(ext.failures[:3])))
    if deep:
        checks.append(_guard("closure", lambda: (len(fiber), stable_closure_failures(g))))
        checks.append(_guard("overlap", lambda: (len(fiber), extended_network_overlap_failures(g))))

    if reversal_samples and len(fiber) > 1:
        rng = np.random.default_rng([seed, *[x & 0xFFFF for x in fiber.score]])
        def run():
            cases, fails = 0, []
            for _ in range(reversal_samples):
                a, b = rng.choice(len(fiber), size=2, replace=False)
                c, f = check_reversals(fiber.tournament(int(a)), int(fiber.masks[a] ^ fiber.masks[b]))
                cases += c
                fails += f
            return cases, fails
        checks.append(_guard("reversal", run))

    report = None
    if mixing and ext.failures:
        checks.append(CheckResult("coupling", False, 0, "skipped: crystal checks failed"))
    elif mixing:
        try:
            rep = fiber_report(g, prepare_coupling(g, ext))
            report = rep.to_dict()
            ok = rep.monotone and rep.ratio <= C_MAX
            checks.append(CheckResult("coupling", True, 2 * len(g.edges())))
            checks.append(CheckResult("mixing", ok, 1, "" if ok else f"monotone={rep.monotone} ratio={rep.ratio:.3f}"))
        except LemmaViolation as exc:
            checks.append(CheckResult("coupling", False, 0, str(exc)))
    return FiberVerification(fiber.score, len(fiber), d, checks, report, census.by_class(), ext.stats.gamma)


def global_checks(root_type: RootType | str, n: int) -> list[CheckResult]:
    """Checks that do not depend on a fiber: catalog regeneration and irreducible Z-frames."""
    rt = RootType.parse(root_type)
    out = []
    golden = resources.files("coxwalk").joinpath("data/generators.json").read_text()
    same = golden == catalog_json()
    out.append(CheckResult("catalog", same, 1, "" if same else "regenerated catalog differs from data/generators.json"))
    if n <= DEEP_MAX_N:
        graph = build_complete_graph(rt, n)
        fails = []
        sets = irreducible_neutral_sets(graph)
        for w, mask in sets:
            frame = build_zframe(graph, w, [k for k in range(graph.m) if (mask >> k) & 1])
            trails = decompose_neutral_trails(frame)
            if len(trails) != 1 or any(x not in (0, 2, 4) for x in frame.degrees):
                fails.append(f"irreducible games {mask:#x} in {w:#x} give {len(trails)} trails, degrees {frame.degrees}")
            elif not is_irreducible(frame, use_degree_filter=False):
                fails.append(f"games {mask:#x} in {w:#x} disagree on irreducibility")
        out.append(CheckResult("zframes", not fails, len(sets), "; ".join(fails[:3])))
    return out


@dataclass
class SuiteReport:
    root_type: str
    n: int
    globals: list[CheckResult]
    fibers: list[FiberVerification]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.globals) and all(f.passed for f in self.fibers)

    def summary(self) -> dict[str, dict]:
        agg: dict[str, dict] = {}
        for c in self.globals + [c for f in self.fibers for c in f.checks]:
            row = agg.setdefault(c.name, {"passed": True, "cases": 0, "failures": []})
            row["cases"] += c.cases
            if not c.passed:
                row["passed"] = False
                row["failures"].append(c.detail)
        return agg

    def census(self) -> dict[str, int]:
        total: Counter = Counter()
        for f in self.fibers:
            total.update(f.census)
        return dict(sorted(total.items()))

    def max_ratio(self) -> float:
        return max((f.report["ratio"] for f in self.fibers if f.report), default=0.0)

    def to_dict(self) -> dict:
        return {
            "type": self.root_type, "n": self.n, "passed": self.passed, "fibers": len(self.fibers),
            "checks": self.summary(), "census": self.census(),
            "gamma": max((f.gamma for f in self.fibers), default=0),
            "c": round(self.max_ratio(), 6), "c_max": C_MAX,
        }


def _worker(args) -> FiberVerification:
    rt, n, score, mixing, samples, seed = args
    return verify_fiber(enumerate_fiber(rt, n, score), mixing=mixing, reversal_samples=samples, seed=seed)


def default_threads() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def verify_suite(root_type: RootType | str, n: int, threads: int | None = None, mixing: bool = True,
                 reversal_samples: int = 20, seed: int = 0, cap: int | None = None) -> SuiteReport:
    rt = RootType.parse(root_type)
    check_cap(rt, n, cap)
    fibers = all_fibers(rt, n, cap)
    threads = threads or default_threads()
    glob = global_checks(rt, n)
    if threads <= 1 or len(fibers) < 2:
        results = [verify_fiber(f, mixing=mixing, reversal_samples=reversal_samples, seed=seed) for f in fibers]
    else:
        jobs = [(rt.value, n, f.score, mixing, reversal_samples, seed) for f in fibers]
        with multiprocessing.get_context("fork").Pool(threads) as pool:
            results = pool.map(_worker, jobs, chunksize=max(1, len(jobs) // (8 * threads)))
    return SuiteReport(rt.value, n, glob, results)


__all__ = ["CheckResult", "FiberVerification", "SuiteReport", "check_reversals", "verify_fiber",
           "global_checks", "verify_suite", "default_threads", "CoxwalkError"]
