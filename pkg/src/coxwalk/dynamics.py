"""Lazy random walk, exact mixing times and the contracting path coupling.

The walk holds with probability 1/2 and otherwise follows a uniformly random
edge slot (a double edge has two slots).  Transition laws are integer
vectors scaled by ``(2d)**t``, so every probability below can be recovered
exactly.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.sparse import csgraph

from . import _kernels
from .errors import InvalidInputError, LemmaViolation
from .interchange import (CrystalStatistics, ExtendedNetworkReport, InterchangeGraph, extended_networks_and_crystals,
                          hop_distances)
from .signed import RootType

QUARTER = Fraction(1, 4)

# Ceiling for t_mix / (d log max(n, 2)) (times gamma in C fibers with crystals).
# Path coupling with contraction 1/d (or 2/(d(1+gamma))) and a weighted
# diameter below m gives t_mix <= d ln(4m) (resp. d(1+gamma)/2 ln(4m)); at the
# sizes we enumerate that ratio stays under 6, so 8 leaves headroom without
# hiding a blow-up.
C_MAX = 8


def walk_rng(seed: int, chain: int = 0) -> np.random.Generator:
    """Counter-based stream for one chain: Philox keyed by ``(seed, chain)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(chain),))))


@dataclass(frozen=True, eq=False)
class WalkKernel:
    graph: InterchangeGraph

    @property
    def degree(self) -> int:
        return self.graph.degree

    @property
    def n_states(self) -> int:
        return self.graph.n_vertices

    def step_counts(self, u: int) -> Counter:
        """One-step law from ``u`` scaled by ``2d``."""
        out = Counter({u: self.degree})
        out.update(self.graph.targets[u].tolist())
        return out

    def step_law(self, u: int) -> dict[int, Fraction]:
        if self.degree == 0:
            return {u: Fraction(1)}
        return {v: Fraction(c, 2 * self.degree) for v, c in self.step_counts(u).items()}

    def transition_matrix(self) -> np.ndarray:
        d = self.degree
        if d == 0:
            return np.eye(self.n_states)
        return (d * np.eye(self.n_states) + self.graph.dense_multiplicity) / (2 * d)


def run_walk(kernel: WalkKernel, start: int, steps: int, seed: int, chain: int = 0) -> np.ndarray:
    """Trajectory of ``steps`` lazy steps from ``start`` (length ``steps + 1``)."""
    if steps < 0:
        raise InvalidInputError("steps must be non-negative")
    if not 0 <= start < kernel.n_states:
        raise InvalidInputError(f"start vertex {start} out of range")
    rng = walk_rng(seed, chain)
    coins = rng.integers(0, 2, size=steps, dtype=np.int64)
    d = max(kernel.degree, 1)
    picks = rng.integers(0, d, size=steps, dtype=np.int64)
    return _kernels.lazy_walk(kernel.graph.targets, start, coins, picks)


def occupancy(trajectory: np.ndarray, n_states: int) -> np.ndarray:
    return np.bincount(trajectory, minlength=n_states)


# ---------------------------------------------------------------------------
# Exact total variation
# ---------------------------------------------------------------------------

def _exact_law(kernel: WalkKernel, start: int, t: int) -> list[int]:
    """``(2d)**t * P^t(start, .)`` as Python integers."""
    d = kernel.degree
    u = np.zeros(kernel.n_states, dtype=object)
    u[start] = 1
    if d == 0:
        return u.tolist()
    targets = kernel.graph.targets
    for _ in range(t):
        u = d * u + u[targets].sum(axis=1)
    return u.tolist()


def exact_tv(kernel: WalkKernel, start: int, t: int) -> Fraction:
    """Exact TV distance from uniform after ``t`` steps from ``start``."""
    f = kernel.n_states
    scale = (2 * kernel.degree) ** t if kernel.degree else 1
    law = _exact_law(kernel, start, t)
    return Fraction(sum(abs(f * x - scale) for x in law), 2 * f * scale)


@dataclass
class TVCurve:
    taus: np.ndarray
    spot_checks: list[tuple[int, Fraction, float]] = field(default_factory=list)
    max_spot_error: float = 0.0

    def monotone(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.diff(self.taus) <= tol))

    def to_csv(self) -> str:
        return "t,tau\n" + "".join(f"{t},{tau:.12g}\n" for t, tau in enumerate(self.taus.tolist()))


def _tv_rows(kernel: WalkKernel, horizon: int, block: int | None = None, stop_at_quarter: bool = False,
             tol: float = 1e-9) -> np.ndarray:
    """TV distance to uniform per start (columns) for t = 0..horizon (rows).

    With ``stop_at_quarter`` a block of starts stops once all of them are
    below ``1/4 - tol``; the array is cut at the last row any block reached
    and later entries of a stopped block are NaN.
    """
    f, d = kernel.n_states, kernel.degree
    a = kernel.graph.adjacency.astype(np.float64)
    # one block covers every start unless the dense law would exceed ~4096**2 entries
    block = block or (f if f <= 4096 else max(1, (1 << 24) // f))
    columns = []
    for lo in range(0, f, block):
        hi = min(f, lo + block)
        x = np.zeros((f, hi - lo))
        x[np.arange(lo, hi), np.arange(hi - lo)] = 1.0
        rows = []
        for t in range(horizon + 1):
            rows.append(0.5 * np.abs(x - 1.0 / f).sum(axis=0))
            if stop_at_quarter and rows[-1].max() < 0.25 - tol:
                break
            if t < horizon and d:
                x = (d * x + a @ x) / (2 * d)
        columns.append(np.array(rows))
    length = max(c.shape[0] for c in columns)
    out = np.full((length, f), np.nan)
    lo = 0
    for c in columns:
        out[: c.shape[0], lo: lo + c.shape[1]] = c
        lo += c.shape[1]
    return out


def exact_tv_curve(kernel: WalkKernel, horizon: int, spot_every: int = 10,
                   spot_budget: int = 5_000_000) -> TVCurve:
    """Worst-start TV distance to uniform for t = 0..horizon.

    Computed in double precision over all starting vertices; every
    ``spot_every`` steps the curve for start 0 is recomputed exactly in
    integers (skipped once ``states * degree * t`` exceeds ``spot_budget``).
    """
    if horizon < 0:
        raise InvalidInputError("horizon must be non-negative")
    rows = _tv_rows(kernel, horizon)
    taus = rows.max(axis=1)
    curve = TVCurve(taus)
    if spot_every:
        d = kernel.degree
        law = _IntegerLaw(kernel, 0)
        for t in range(0, horizon + 1, spot_every):
            if kernel.n_states * max(d, 1) * t > spot_budget:
                break
            exact = law.tv_at(t)
            err = abs(float(exact) - rows[t, 0])
            curve.spot_checks.append((t, exact, float(rows[t, 0])))
            curve.max_spot_error = max(curve.max_spot_error, err)
    return curve


class _IntegerLaw:
    """Incrementally advanced ``(2d)**t * P^t(start, .)``."""

    def __init__(self, kernel: WalkKernel, start: int):
        self.kernel = kernel
        self.t = 0
        self.u = np.zeros(kernel.n_states, dtype=object)
        self.u[start] = 1

    def tv_at(self, t: int) -> Fraction:
        d = self.kernel.degree
        targets = self.kernel.graph.targets
        while self.t < t:
            if d:
                self.u = d * self.u + self.u[targets].sum(axis=1)
            self.t += 1
        f = self.kernel.n_states
        scale = (2 * d) ** t if d else 1
        return Fraction(sum(abs(f * x - scale) for x in self.u.tolist()), 2 * f * scale)


@dataclass
class MixingResult:
    t_mix: int
    taus: np.ndarray
    exact_confirmations: int = 0


def coupling_horizon(d: int, alpha: Fraction | float, weighted_diameter: Fraction | float) -> int:
    """Steps after which path coupling forces TV <= 1/4: ``(1 - alpha)**t * D_w <= 1/4``."""
    if weighted_diameter <= 0:
        return 0
    alpha = float(alpha)
    if alpha <= 0:
        raise LemmaViolation("non-positive contraction rate")
    if alpha >= 1:
        return 1
    return max(0, math.ceil(math.log(4 * float(weighted_diameter)) / -math.log1p(-alpha)))


def mixing_time_exact(kernel: WalkKernel, horizon: int | None = None, tol: float = 1e-9) -> MixingResult:
    """First ``t`` with worst-start TV <= 1/4.

    Values within ``tol`` of 1/4 are settled in exact integer arithmetic.
    """
    f, d = kernel.n_states, kernel.degree
    if f == 1:
        return MixingResult(0, np.zeros(1))
    horizon = horizon or max(1000, 50 * d * kernel.graph.graph.m)
    rows = np.nan_to_num(_tv_rows(kernel, horizon, stop_at_quarter=True, tol=tol), nan=0.0)
    # a stopped block is below 1/4 for good (TV to stationarity never increases)
    taus = rows.max(axis=1)
    confirmations = 0
    for t in range(rows.shape[0]):
        if taus[t] > 0.25 + tol:
            continue
        close = np.nonzero(np.abs(rows[t] - 0.25) <= tol)[0]
        if close.size:
            confirmations += 1
            if any(exact_tv(kernel, int(x), t) > QUARTER for x in close.tolist()):
                continue
        return MixingResult(t, taus[: t + 1], confirmations)
    raise LemmaViolation(f"walk did not mix within {horizon} steps")


# ---------------------------------------------------------------------------
# Weighted metric
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeightedMetric:
    """Graph distance with weight 1 per double edge and ``1 + 1/gamma`` per single edge.

    With ``gamma == 0`` every edge has weight 1.  Distances are computed on
    integer weights ``gamma`` and ``gamma + 1`` and divided by ``gamma``.
    """

    graph: InterchangeGraph
    gamma: int

    @cached_property
    def _scaled(self) -> np.ndarray:
        a = self.graph.adjacency
        if self.gamma == 0:
            return hop_distances(self.graph)
        w = a.copy().astype(np.float64)
        w.data = np.where(a.data == 2, self.gamma, self.gamma + 1).astype(np.float64)
        if self.graph.n_vertices == 1:
            return np.zeros((1, 1))
        return csgraph.shortest_path(w, method="D", directed=False)

    @property
    def scale(self) -> int:
        return self.gamma or 1

    def scaled_distance(self, u: int, v: int) -> int:
        """``scale * distance(u, v)``, an integer."""
        x = self._scaled[u, v]
        if not np.isfinite(x):
            raise LemmaViolation(f"vertices {u} and {v} are disconnected")
        return int(round(x))

    def distance(self, u: int, v: int) -> Fraction:
        return Fraction(self.scaled_distance(u, v), self.scale)

    def edge_weight(self, u: int, v: int) -> Fraction:
        m = self.graph.multiplicity(u, v)
        if m == 0:
            raise InvalidInputError(f"{u} and {v} are not adjacent")
        if self.gamma and m == 1:
            return 1 + Fraction(1, self.gamma)
        return Fraction(1)

    @cached_property
    def diameter(self) -> Fraction:
        return Fraction(int(round(self._scaled.max())), self.gamma or 1)


# ---------------------------------------------------------------------------
# Edge pairing and coupling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CouplingContext:
    """Everything the coupling needs about one fiber."""

    graph: InterchangeGraph
    stats: CrystalStatistics | None
    metric: WeightedMetric

    @property
    def gamma(self) -> int:
        return self.stats.gamma if self.stats else 0

    @cached_property
    def edge_crystals(self) -> dict[tuple[int, int], list[int]]:
        out: dict[tuple[int, int], list[int]] = {}
        if self.stats:
            for k, c in enumerate(self.stats.crystals):
                for u, v, _ in c.edges:
                    out.setdefault((u, v), []).append(k)
        return out

    def crystals_of(self, u: int, v: int) -> list[int]:
        return self.edge_crystals.get((min(u, v), max(u, v)), [])


def prepare_coupling(g: InterchangeGraph, report: ExtendedNetworkReport | None = None) -> CouplingContext:
    """Crystal statistics (C only) and the weighted metric; ``report`` reuses a crystal scan."""
    stats = None
    if g.graph.root_type is RootType.C:
        report = report or extended_networks_and_crystals(g)
        if report.failures:
            raise LemmaViolation("; ".join(report.failures[:3]))
        stats = report.stats
    gamma = stats.gamma if stats else 0
    return CouplingContext(g, stats, WeightedMetric(g, gamma))


@dataclass(frozen=True)
class EdgePairing:
    """``psi[s]`` is the slot at ``v`` paired with slot ``s`` at ``u``."""

    u: int
    v: int
    psi: tuple[int, ...]
    fixed: frozenset[int]
    case: str
    gamma_prime: int = 0


def _slots_to(g: InterchangeGraph, x: int, y: int) -> list[int]:
    return np.nonzero(g.targets[x] == y)[0].tolist()


def _assign(psi: dict[int, int], used: set[int], src: list[int], dst: list[int], where: str) -> None:
    if len(src) != len(dst):
        raise LemmaViolation(f"{where}: cannot pair {len(src)} slots with {len(dst)}")
    for a, b in zip(src, dst):
        if a in psi or b in used:
            raise LemmaViolation(f"{where}: slot paired twice")
        psi[a] = b
        used.add(b)


def edge_pairing_psi(ctx: CouplingContext, u: int, v: int) -> EdgePairing:
    """Bijection from the edge slots at ``u`` to those at ``v`` for adjacent ``u, v``."""
    g = ctx.graph
    mult = g.multiplicity(u, v)
    if mult == 0 or u == v:
        raise InvalidInputError(f"vertices {u} and {v} are not adjacent")
    is_c = g.graph.root_type is RootType.C and ctx.gamma > 0
    crystals = ctx.crystals_of(u, v) if is_c else []
    if not is_c:
        case = "BD" if g.graph.root_type is not RootType.C else ("2" if mult == 2 else "1a")
    elif mult == 2:
        case = "2"
    elif not crystals:
        case = "1a"
    elif len(crystals) == 1:
        case = "1b"
    else:
        raise LemmaViolation(f"single edge ({u}, {v}) lies in {len(crystals)} crystals")

    psi: dict[int, int] = {}
    used: set[int] = set()
    fixed: set[int] = set()
    if case != "1b":
        src, dst = _slots_to(g, u, v), _slots_to(g, v, u)
        _assign(psi, used, src, dst, "connecting edge")
        fixed.update(src)

    def crystal_slots(x: int, k: int, want: int | None) -> list[int]:
        mult_row = g.dense_multiplicity[x]
        return [s for s, y in enumerate(g.targets[x].tolist())
                if k in ctx.crystals_of(x, y) and (want is None or mult_row[y] == want)]

    if case == "1b":
        k = crystals[0]
        _assign(psi, used, crystal_slots(u, k, 1), crystal_slots(v, k, 2), "crystal singles")
        _assign(psi, used, crystal_slots(u, k, 2), crystal_slots(v, k, 1), "crystal doubles")
    elif case == "2":
        for k in crystals:
            src = [s for s in crystal_slots(u, k, None) if g.targets[u, s] != v]
            dst = [s for s in crystal_slots(v, k, None) if g.targets[v, s] != u]
            _assign(psi, used, src, dst, f"crystal {k}")

    # opposite edges across the remaining (stable) diamonds
    groups: dict[int, list[int]] = {}
    for s, y in enumerate(g.targets[u].tolist()):
        if s not in psi:
            groups.setdefault(y, []).append(s)
    nv = set(g.targets[v].tolist())
    for y, src in groups.items():
        others = sorted((nv & set(g.targets[y].tolist())) - {u})
        if len(others) != 1:
            raise LemmaViolation(f"edge ({u}, {y}) is not opposite a unique edge at {v}: {others}")
        dst = [s for s in _slots_to(g, v, others[0]) if s not in used]
        _assign(psi, used, src, dst, f"diamond through {y}")
    if len(psi) != g.degree or len(used) != g.degree:
        raise LemmaViolation(f"edge pairing at ({u}, {v}) is not a bijection")
    return EdgePairing(u, v, tuple(psi[s] for s in range(g.degree)), frozenset(fixed), case,
                       len(crystals) if case == "2" else 0)


def coupling_counts(ctx: CouplingContext, pairing: EdgePairing) -> Counter:
    """Law of ``(u', v')`` after one coupled step, scaled by ``2d``."""
    g = ctx.graph
    u, v = pairing.u, pairing.v
    tu, tv = g.targets[u].tolist(), g.targets[v].tolist()
    law: Counter = Counter()
    for s in range(g.degree):
        if s in pairing.fixed:
            law[(u, u)] += 1
            law[(v, v)] += 1
        else:
            law[(u, v)] += 1
            law[(tu[s], tv[pairing.psi[s]])] += 1
    return law


def coupling_distribution(ctx: CouplingContext, pairing: EdgePairing) -> dict[tuple[int, int], Fraction]:
    """Exact law of ``(u', v')`` after one coupled step."""
    d2 = 2 * ctx.graph.degree
    return {pair: Fraction(c, d2) for pair, c in coupling_counts(ctx, pairing).items()}


def coupled_step(ctx: CouplingContext, pairing: EdgePairing, rng: np.random.Generator) -> tuple[int, int]:
    g = ctx.graph
    s = int(rng.integers(0, g.degree))
    r = int(rng.integers(0, 2))
    u, v = pairing.u, pairing.v
    if s in pairing.fixed:
        return (v, v) if r else (u, u)
    if not r:
        return (u, v)
    return int(g.targets[u, s]), int(g.targets[v, pairing.psi[s]])


def expected_coupled_weight(ctx: CouplingContext, pairing: EdgePairing) -> Fraction:
    metric = ctx.metric
    total = sum(c * metric.scaled_distance(x, y) for (x, y), c in coupling_counts(ctx, pairing).items())
    return Fraction(total, 2 * ctx.graph.degree * metric.scale)


def predicted_weight(case: str, d: int, gamma: int, gamma_prime: int, w: Fraction) -> Fraction:
    """Closed-form one-step expectation for each coupling case."""
    if case in ("BD", "1a"):
        return (1 - Fraction(1, d)) * w
    if case == "1b":
        return (1 - Fraction(2, d * (1 + gamma))) * w
    if gamma == 0:
        return 1 - Fraction(2, d)
    return 1 - Fraction(2 * gamma - gamma_prime, d * gamma)


@dataclass(frozen=True)
class CouplingCheck:
    u: int
    v: int
    case: str
    d: int
    gamma: int
    gamma_prime: int
    weight: Fraction
    expected: Fraction
    predicted: Fraction
    marginals_ok: bool

    @property
    def equality_ok(self) -> bool:
        return self.expected == self.predicted

    @property
    def contracts(self) -> bool:
        return self.expected <= (1 - Fraction(1, self.d)) * self.weight if self.case == "2" \
            else self.expected < self.weight

    @property
    def alpha(self) -> Fraction:
        return 1 - self.expected / self.weight

    @property
    def ok(self) -> bool:
        return self.marginals_ok and self.equality_ok and self.contracts


def verify_coupling(ctx: CouplingContext, u: int, v: int) -> CouplingCheck:
    g = ctx.graph
    pairing = edge_pairing_psi(ctx, u, v)
    law = coupling_counts(ctx, pairing)
    kernel = WalkKernel(g)
    first: Counter = Counter()
    second: Counter = Counter()
    for (x, y), c in law.items():
        first[x] += c
        second[y] += c
    marginals_ok = first == kernel.step_counts(u) and second == kernel.step_counts(v)
    w = ctx.metric.edge_weight(u, v)
    metric = ctx.metric
    expected = Fraction(sum(c * metric.scaled_distance(x, y) for (x, y), c in law.items()),
                        2 * g.degree * metric.scale)
    predicted = predicted_weight(pairing.case, g.degree, ctx.gamma, pairing.gamma_prime, w)
    return CouplingCheck(u, v, pairing.case, g.degree, ctx.gamma, pairing.gamma_prime, w, expected, predicted,
                         marginals_ok)


def verify_all_couplings(ctx: CouplingContext) -> list[CouplingCheck]:
    """Both orientations of every edge of the fiber."""
    out = []
    for u, v, _, _ in ctx.graph.edges():
        out.append(verify_coupling(ctx, u, v))
        out.append(verify_coupling(ctx, v, u))
    return out


# ---------------------------------------------------------------------------
# Per-fiber report
# ---------------------------------------------------------------------------

@dataclass
class FiberReport:
    root_type: str
    n: int
    score: tuple[int, ...]
    vertices: int
    d: int
    gamma: int
    t_mix: int
    alpha_min: Fraction | None
    diameter: int
    weighted_diameter: Fraction
    coupling_bound: int
    monotone: bool

    @property
    def scale(self) -> float:
        """``d log max(n, 2)``, times ``gamma`` for C fibers with crystals."""
        base = self.d * math.log(max(self.n, 2))
        return base * self.gamma if self.root_type == "C" and self.gamma > 0 else base

    @property
    def ratio(self) -> float:
        return self.t_mix / self.scale if self.scale else 0.0

    def to_dict(self) -> dict:
        return {
            "type": self.root_type, "n": self.n, "s": list(self.score), "vertices": self.vertices,
            "d": self.d, "gamma": self.gamma, "t_mix": self.t_mix,
            "alpha_min": None if self.alpha_min is None else str(self.alpha_min),
            "diameter": self.diameter, "weighted_diameter": str(self.weighted_diameter),
            "coupling_bound": self.coupling_bound, "ratio": round(self.ratio, 6),
        }


def fiber_report(g: InterchangeGraph, ctx: CouplingContext | None = None, check_couplings: bool = True) -> FiberReport:
    """Exact t_mix together with the contraction rate and the bound it implies."""
    ctx = ctx or prepare_coupling(g)
    kernel = WalkKernel(g)
    mix = mixing_time_exact(kernel)
    monotone = bool(np.all(np.diff(mix.taus) <= 1e-12))
    alpha = None
    if g.degree and check_couplings:
        checks = verify_all_couplings(ctx)
        bad = [c for c in checks if not c.ok]
        if bad:
            raise LemmaViolation(f"coupling fails at {bad[0]}")
        alpha = min(c.alpha for c in checks)
    hop = hop_distances(g)
    diameter = int(hop.max())
    bound = coupling_horizon(g.degree, alpha, ctx.metric.diameter) if alpha is not None else 0
    if alpha is not None and mix.t_mix > bound:
        raise LemmaViolation(f"t_mix {mix.t_mix} exceeds the path-coupling bound {bound}")
    f = g.fiber
    return FiberReport(f.root_type.value, f.n, f.score, g.n_vertices, g.degree, ctx.gamma, mix.t_mix, alpha,
                       diameter, ctx.metric.diameter, bound, monotone)
