"""Fibers, interchange multigraphs, interchange networks and crystals.

A fiber is the set of tournaments with a given score; its interchange graph
joins two tournaments whenever one is obtained from the other by reversing a
generator (a double edge for clovers).  Pairs at distance two span small
networks that come in five shapes; two of them (split and heavy diamonds)
close up into six-vertex crystals.
"""
from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from . import _kernels
from .errors import CapExceededError, InvalidInputError, LemmaViolation
from .generators import GeneratorCopy, generator_slots, slot_arrays
from .signed import (CompleteSignedGraph, GameKind, RootType, Score, Tournament, bitstring,
                     build_complete_graph, check_score, degree_formula)

# Largest n enumerated exhaustively unless a cap is given (2**16 orientations for B/C, 2**20 for D).
DEFAULT_CAPS = {RootType.A: 6, RootType.B: 4, RootType.C: 4, RootType.D: 5}


def check_cap(root_type: RootType | str, n: int, cap: int | None = None) -> None:
    rt = RootType.parse(root_type)
    limit = DEFAULT_CAPS[rt] if cap is None else cap
    if n > limit:
        raise CapExceededError(f"{rt.value}{n} exceeds the enumeration cap n <= {limit}; rerun with --cap {n}",
                               required_cap=n)


# ---------------------------------------------------------------------------
# Fibers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Fiber:
    """All tournaments with score ``score`` (half-units), as sorted bit masks."""

    graph: CompleteSignedGraph
    score: Score
    masks: np.ndarray

    @property
    def root_type(self) -> RootType:
        return self.graph.root_type

    @property
    def n(self) -> int:
        return self.graph.n

    def __len__(self) -> int:
        return int(self.masks.shape[0])

    def tournament(self, k: int) -> Tournament:
        return Tournament(self.graph, int(self.masks[k]))

    def tournaments(self) -> list[Tournament]:
        return [Tournament(self.graph, int(w)) for w in self.masks]

    def index(self, w: int) -> int:
        k = int(np.searchsorted(self.masks, w))
        if k == len(self) or int(self.masks[k]) != w:
            raise KeyError(w)
        return k

    def to_dict(self) -> dict:
        return {
            "type": self.root_type.value,
            "n": self.n,
            "score": list(self.score),
            "size": len(self),
            "tournaments": [bitstring(int(w), self.graph.m) for w in self.masks],
        }


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def enumerate_fiber(root_type: RootType | str, n: int, score, cap: int | None = None) -> Fiber:
    """Exhaustive fiber by depth-first assignment with reachable-range pruning."""
    graph = build_complete_graph(root_type, n)
    check_cap(graph.root_type, n, cap)
    s = check_score(graph, score)
    masks = _kernels.fiber_masks(graph.vectors, np.asarray(s, dtype=np.int64))
    return Fiber(graph, s, _frozen(np.asarray(masks, dtype=np.int64)))


def _score_groups(graph: CompleteSignedGraph):
    table = _kernels.score_table(graph.vectors)
    scores, inverse = np.unique(table, axis=0, return_inverse=True)
    order = np.argsort(inverse.ravel(), kind="stable")
    bounds = np.searchsorted(inverse.ravel()[order], np.arange(len(scores) + 1))
    return scores, order, bounds


def enumerate_score_set(root_type: RootType | str, n: int, cap: int | None = None) -> set[Score]:
    """Scores of all ``2**m`` tournaments on K_Phi (half-units)."""
    graph = build_complete_graph(root_type, n)
    check_cap(graph.root_type, n, cap)
    table = _kernels.score_table(graph.vectors)
    return {tuple(int(x) for x in row) for row in np.unique(table, axis=0)}


def all_fibers(root_type: RootType | str, n: int, cap: int | None = None) -> list[Fiber]:
    """Every non-empty fiber on K_Phi, ordered by score."""
    graph = build_complete_graph(root_type, n)
    check_cap(graph.root_type, n, cap)
    scores, order, bounds = _score_groups(graph)
    out = []
    for k, row in enumerate(scores):
        masks = order[bounds[k]:bounds[k + 1]].astype(np.int64)
        out.append(Fiber(graph, tuple(int(x) for x in row), _frozen(masks)))
    return out


# ---------------------------------------------------------------------------
# Interchange multigraph
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InterchangeGraph:
    """Regular multigraph on a fiber.

    ``targets[u]`` lists the ``d`` edge slots at vertex ``u`` (a clover
    reversal occupies two consecutive slots); ``slot_copy[u]`` holds the
    generator copy index (into :func:`generator_slots`) behind each slot.
    """

    fiber: Fiber
    degree: int
    targets: np.ndarray
    slot_copy: np.ndarray

    @property
    def graph(self) -> CompleteSignedGraph:
        return self.fiber.graph

    @property
    def n_vertices(self) -> int:
        return len(self.fiber)

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric multiplicity matrix."""
        f, d = self.targets.shape
        rows = np.repeat(np.arange(f), d)
        a = sparse.coo_matrix((np.ones(f * d, dtype=np.int64), (rows, self.targets.ravel())), shape=(f, f))
        return a.tocsr()

    @cached_property
    def dense_multiplicity(self) -> np.ndarray:
        return _frozen(self.adjacency.toarray())

    def multiplicity(self, u: int, v: int) -> int:
        return int(self.dense_multiplicity[u, v])

    def neighbors(self, u: int) -> list[int]:
        return sorted(set(self.targets[u].tolist()))

    def copy_at(self, u: int, slot: int) -> GeneratorCopy:
        return generator_slots(self.graph.root_type, self.graph.n)[int(self.slot_copy[u, slot])]

    def edges(self) -> list[tuple[int, int, int, int]]:
        """``(u, v, multiplicity, copy index at u)`` for ``u < v``."""
        out = []
        for u in range(self.n_vertices):
            seen = set()
            for slot, v in enumerate(self.targets[u].tolist()):
                if v > u and v not in seen:
                    seen.add(v)
                    out.append((u, v, self.multiplicity(u, v), int(self.slot_copy[u, slot])))
        return out

    def vertex_labels(self) -> list[str]:
        return [bitstring(int(w), self.graph.m) for w in self.fiber.masks]

    def to_dict(self) -> dict:
        return {
            "type": self.graph.root_type.value,
            "n": self.graph.n,
            "score": list(self.fiber.score),
            "degree": self.degree,
            "vertices": self.vertex_labels(),
            "edges": [[u, v, m] for u, v, m, _ in self.edges()],
        }

    def to_dot(self, name: str = "interchange") -> str:
        labels = self.vertex_labels()
        lines = [f"graph {name} {{", "  node [shape=circle, label=\"\"];"]
        for k, lab in enumerate(labels):
            lines.append(f'  v{k} [tooltip="{lab}"];')
        for u, v, m, _ in self.edges():
            # a double edge is written as two parallel edges
            for _ in range(m):
                lines.append(f"  v{u} -- v{v};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_interchange_graph(fiber: Fiber) -> InterchangeGraph:
    graph = fiber.graph
    d = degree_formula(graph.root_type, graph.n, fiber.score)
    f = len(fiber)
    if f == 0:
        raise InvalidInputError(f"fiber of {fiber.score} is empty")
    smask, sval, mult = slot_arrays(graph.root_type, graph.n)
    if smask.size == 0:
        counts = np.zeros(f, dtype=np.int64)
        copies = targets = np.zeros(0, dtype=np.int64)
    else:
        counts, copies, targets = _kernels.neighbor_table(fiber.masks, smask, sval)
    if np.any(targets < 0):
        raise LemmaViolation("a generator reversal left the fiber")
    reps = mult[copies] if copies.size else copies
    weighted = np.add.reduceat(reps, np.r_[0, np.cumsum(counts)[:-1]]) if copies.size else np.zeros(f, np.int64)
    weighted = np.where(counts > 0, weighted, 0)
    bad = np.nonzero(weighted != d)[0]
    if bad.size:
        u = int(bad[0])
        raise LemmaViolation(f"vertex {bitstring(int(fiber.masks[u]), graph.m)} has degree {int(weighted[u])}, expected {d}")
    tgt = np.repeat(targets, reps).reshape(f, d)
    cp = np.repeat(copies, reps).reshape(f, d)
    return InterchangeGraph(fiber, d, _frozen(tgt), _frozen(cp))


@dataclass(frozen=True)
class GraphMetrics:
    n_vertices: int
    connected: bool
    diameter: int
    regular_degree: int

    def to_dict(self) -> dict:
        return {"vertices": self.n_vertices, "connected": self.connected, "diameter": self.diameter,
                "degree": self.regular_degree}


def hop_distances(g: InterchangeGraph) -> np.ndarray:
    if g.n_vertices == 1:
        return np.zeros((1, 1))
    return csgraph.shortest_path(g.adjacency, method="D", unweighted=True, directed=False)


def graph_metrics(g: InterchangeGraph) -> GraphMetrics:
    """Connectivity, BFS diameter (-1 if disconnected) and the common degree."""
    deg = np.asarray(g.adjacency.sum(axis=1)).ravel()
    if np.any(deg != g.degree):
        raise LemmaViolation("interchange graph is not regular")
    dist = hop_distances(g)
    connected = bool(np.all(np.isfinite(dist)))
    diameter = int(dist.max()) if connected else -1
    return GraphMetrics(g.n_vertices, connected, diameter, g.degree)


# ---------------------------------------------------------------------------
# Networks
# ---------------------------------------------------------------------------

class DiamondClass(str, Enum):
    SINGLE = "single"
    DOUBLE = "double"
    QUADRUPLE = "quadruple"
    SPLIT = "split"
    HEAVY = "heavy"


class ProjectionShape(str, Enum):
    DISJOINT = "disjoint"
    SQUARE = "square"
    TENT = "tent"
    FORK = "fork"
    HANGER = "hanger"
    OTHER = "other"


# Paths u-m-w counted by (mult(u,m), mult(m,w)) in the order (1,1), (1,2), (2,1), (2,2).
SIGNATURES: dict[tuple[int, int, int, int], DiamondClass] = {
    (2, 0, 0, 0): DiamondClass.SINGLE,
    (0, 1, 1, 0): DiamondClass.DOUBLE,
    (0, 0, 0, 2): DiamondClass.QUADRUPLE,
    (2, 0, 0, 1): DiamondClass.SPLIT,
    (0, 2, 0, 0): DiamondClass.HEAVY,
    (0, 0, 2, 0): DiamondClass.HEAVY,
}

STABLE = frozenset({DiamondClass.SINGLE, DiamondClass.DOUBLE, DiamondClass.QUADRUPLE})


def signature_of(mults) -> tuple[int, int, int, int]:
    c = Counter(mults)
    return (c[(1, 1)], c[(1, 2)], c[(2, 1)], c[(2, 2)])


@dataclass(frozen=True)
class Network:
    """Union of all length-two paths between ``u`` and ``w``."""

    u: int
    w: int
    midpoints: tuple[int, ...]
    mults: tuple[tuple[int, int], ...]

    @property
    def signature(self) -> tuple[int, int, int, int]:
        return signature_of(self.mults)

    @property
    def vertices(self) -> tuple[int, ...]:
        return (self.u, self.w) + self.midpoints

    def edges(self) -> list[tuple[int, int, int]]:
        out = []
        for m, (a, b) in zip(self.midpoints, self.mults):
            out += [(self.u, m, a), (m, self.w, b)]
        return out

    def multiplicity_matrix(self) -> np.ndarray:
        """Multiplicities on the vertex order ``(u, w, *midpoints)``."""
        k = len(self.vertices)
        out = np.zeros((k, k), dtype=np.int64)
        for i, (a, b) in enumerate(self.mults, 2):
            out[0, i] = out[i, 0] = a
            out[1, i] = out[i, 1] = b
        return out


def interchange_network(g: InterchangeGraph, u: int, w: int) -> Network:
    if u == w or g.multiplicity(u, w):
        raise InvalidInputError(f"vertices {u} and {w} are not at distance two")
    nu = set(g.targets[u].tolist())
    mids = tuple(sorted(nu.intersection(g.targets[w].tolist())))
    if not mids:
        raise InvalidInputError(f"vertices {u} and {w} are not at distance two")
    mults = tuple((g.multiplicity(u, m), g.multiplicity(m, w)) for m in mids)
    return Network(u, w, mids, mults)


def difference_shape(graph: CompleteSignedGraph, diff: int) -> ProjectionShape:
    """Shape of the projection graph of the games in which two tournaments differ."""
    ids = [k for k in range(graph.m) if (diff >> k) & 1]
    if len(ids) == 6:
        return ProjectionShape.DISJOINT
    if len(ids) != 4:
        return ProjectionShape.OTHER
    kinds = Counter(graph.games[k].kind for k in ids)
    players = {p for k in ids for p in graph.games[k].players}
    pairs = kinds[GameKind.NEGATIVE] + kinds[GameKind.POSITIVE]
    if pairs == 4:
        return ProjectionShape.SQUARE if len(players) == 4 else ProjectionShape.TENT
    if pairs == 2 and kinds[GameKind.HALF] == 2:
        return ProjectionShape.FORK
    if pairs == 3 and kinds[GameKind.LOOP] == 1:
        return ProjectionShape.HANGER
    return ProjectionShape.OTHER


def expected_classes(root_type: RootType, shape: ProjectionShape, loops: int) -> frozenset[DiamondClass]:
    """Diamond classes allowed for a difference of the given shape."""
    if shape is ProjectionShape.DISJOINT:
        return frozenset({(DiamondClass.SINGLE, DiamondClass.DOUBLE, DiamondClass.QUADRUPLE)[loops]}) \
            if loops <= 2 else frozenset()
    if root_type is not RootType.C:
        return frozenset({DiamondClass.SINGLE}) if shape is not ProjectionShape.OTHER else frozenset()
    return {
        ProjectionShape.SQUARE: frozenset({DiamondClass.SINGLE}),
        ProjectionShape.TENT: frozenset({DiamondClass.SPLIT}),
        ProjectionShape.HANGER: frozenset({DiamondClass.DOUBLE, DiamondClass.HEAVY}),
    }.get(shape, frozenset())


@dataclass(frozen=True)
class NetworkClass:
    diamond: DiamondClass | None
    shape: ProjectionShape
    consistent: bool


def _loop_mask(graph: CompleteSignedGraph) -> int:
    return graph.mask_of(g.id for g in graph.games if g.kind is GameKind.LOOP)


def classify_network(g: InterchangeGraph, net: Network, strict: bool = True) -> NetworkClass:
    """Diamond class from the path signature, cross-checked against the difference shape."""
    graph = g.graph
    diamond = SIGNATURES.get(net.signature)
    diff = int(g.fiber.masks[net.u]) ^ int(g.fiber.masks[net.w])
    shape = difference_shape(graph, diff)
    loops = bin(diff & _loop_mask(graph)).count("1")
    ok = diamond is not None and diamond in expected_classes(graph.root_type, shape, loops)
    if strict and not ok:
        raise LemmaViolation(f"network {net} with signature {net.signature} and difference shape "
                             f"{shape.value} matches no diamond class")
    return NetworkClass(diamond, shape, ok)


@dataclass
class NetworkCensus:
    pairs: int = 0
    counts: Counter = field(default_factory=Counter)  # (diamond or None, shape) -> count
    unclassified: int = 0
    inconsistent: int = 0
    split_or_heavy: list[tuple[int, int]] = field(default_factory=list)

    def merge(self, other: "NetworkCensus") -> None:
        self.pairs += other.pairs
        self.counts.update(other.counts)
        self.unclassified += other.unclassified
        self.inconsistent += other.inconsistent

    def by_class(self) -> dict[str, int]:
        out: Counter = Counter()
        for (diamond, _), c in self.counts.items():
            out[diamond.value if diamond else "unclassified"] += c
        return dict(sorted(out.items()))

    def to_rows(self) -> list[dict]:
        return [{"class": d.value if d else "unclassified", "shape": s.value, "count": c}
                for (d, s), c in sorted(self.counts.items(), key=lambda kv: (str(kv[0][0]), kv[0][1].value))]


def network_census(g: InterchangeGraph, sample: int | None = None, rng: np.random.Generator | None = None,
                   keep_crystal_seeds: bool = False) -> NetworkCensus:
    """Classify every distance-two pair ``u < w`` (or a uniform sample of ``sample`` of them).

    Signatures come from products of the single- and double-edge indicator
    matrices, so no network is materialised.
    """
    graph = g.graph
    census = NetworkCensus()
    if g.n_vertices < 3 or g.degree == 0:
        return census
    a = g.adjacency
    single = (a == 1).astype(np.int64)
    double = (a == 2).astype(np.int64)
    hop = (a > 0).astype(np.int64)
    two = (hop @ hop).tocoo()
    keep = (two.row < two.col)
    us, ws = two.row[keep], two.col[keep]
    adjacent = np.asarray(a[us, ws]).ravel() > 0
    us, ws = us[~adjacent], ws[~adjacent]
    if sample is not None and us.size > sample:
        rng = rng or np.random.default_rng(0)
        pick = np.sort(rng.choice(us.size, size=sample, replace=False))
        us, ws = us[pick], ws[pick]
    if us.size == 0:
        return census
    sig = np.stack([np.asarray(p[us, ws]).ravel() for p in
                    (single @ single, single @ double, double @ single, double @ double)], axis=1)
    masks = g.fiber.masks
    diffs = masks[us] ^ masks[ws]
    loop_mask = _loop_mask(graph)
    shape_of = {}
    for dv in np.unique(diffs).tolist():
        shape_of[dv] = (difference_shape(graph, dv), bin(dv & loop_mask).count("1"))
    keys, inv = np.unique(np.concatenate([sig, diffs[:, None]], axis=1), axis=0, return_inverse=True)
    tally = np.bincount(inv.ravel(), minlength=len(keys))
    for key, cnt in zip(keys.tolist(), tally.tolist()):
        s4 = tuple(key[:4])
        shape, loops = shape_of[key[4]]
        diamond = SIGNATURES.get(s4)
        census.counts[(diamond, shape)] += cnt
        if diamond is None:
            census.unclassified += cnt
        elif diamond not in expected_classes(graph.root_type, shape, loops):
            census.inconsistent += cnt
    census.pairs = int(us.size)
    if keep_crystal_seeds:
        unstable = (sig[:, 3] == 1) | (sig[:, 1] == 2) | (sig[:, 2] == 2)
        census.split_or_heavy = list(zip(us[unstable].tolist(), ws[unstable].tolist()))
    return census


# ---------------------------------------------------------------------------
# Extended networks and crystals
# ---------------------------------------------------------------------------

CRYSTAL_LIMIT = 64


def _nbrs(g: InterchangeGraph, u: int) -> set[int]:
    return set(g.targets[u].tolist())


def extended_vertex_set(g: InterchangeGraph, u: int, w: int) -> frozenset[int]:
    """Close the network of ``(u, w)`` under adding networks of distance-two pairs inside it."""
    verts = set(interchange_network(g, u, w).vertices)
    nb = {}
    while True:
        added = set()
        for x, y in itertools.combinations(sorted(verts), 2):
            for z in (x, y):
                if z not in nb:
                    nb[z] = _nbrs(g, z)
            if y in nb[x]:
                continue
            added |= (nb[x] & nb[y]) - verts
        if not added:
            return frozenset(verts)
        verts |= added
        if len(verts) > CRYSTAL_LIMIT:
            raise LemmaViolation(f"extended network of ({u}, {w}) exceeds {CRYSTAL_LIMIT} vertices")


def extended_edges(g: InterchangeGraph, verts) -> frozenset[tuple[int, int, int]]:
    """Edges ``(x, y, mult)`` lying on a length-two path between antipodal vertices of ``verts``."""
    out = set()
    nb = {z: _nbrs(g, z) for z in verts}
    for x, y in itertools.combinations(sorted(verts), 2):
        if y in nb[x]:
            continue
        for m in nb[x] & nb[y]:
            out.add((min(x, m), max(x, m), g.multiplicity(x, m)))
            out.add((min(y, m), max(y, m), g.multiplicity(y, m)))
    return frozenset(out)


@dataclass(frozen=True)
class Crystal:
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]
    players: tuple[int, ...]

    @property
    def double_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v, m in self.edges if m == 2]

    @property
    def single_edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v, m in self.edges if m == 1]

    def multiplicity_matrix(self) -> np.ndarray:
        idx = {v: k for k, v in enumerate(self.vertices)}
        out = np.zeros((len(idx), len(idx)), dtype=np.int64)
        for u, v, m in self.edges:
            out[idx[u], idx[v]] = out[idx[v], idx[u]] = m
        return out


@dataclass
class CrystalStatistics:
    degree: int
    n: int
    crystals: list[Crystal]
    double_edge_degree: dict[tuple[int, int], int]
    single_edge_crystals: dict[tuple[int, int], list[int]]
    shared: list[tuple[int, int, tuple]]  # (crystal a, crystal b, shared edges)

    @property
    def gamma(self) -> int:
        return max(self.double_edge_degree.values(), default=0)

    def crystals_containing(self, u: int, v: int) -> list[int]:
        key = (min(u, v), max(u, v))
        return [k for k, c in enumerate(self.crystals) if any((a, b) == key for a, b, _ in c.edges)]

    def violations(self) -> list[str]:
        out = []
        for e, ks in self.single_edge_crystals.items():
            if len(ks) > 1:
                out.append(f"single edge {e} lies in crystals {ks}")
        for a, b, edges in self.shared:
            if len(edges) > 1 or any(m != 2 for _, _, m in edges):
                out.append(f"crystals {a} and {b} share {list(edges)}")
        bound = min(self.degree, 2 * self.n)
        if self.gamma > bound:
            out.append(f"crystal degree {self.gamma} exceeds min(d, 2n) = {bound}")
        empirical = max(2 * (self.n - 2), 0)
        if self.gamma > empirical:
            out.append(f"crystal degree {self.gamma} exceeds 2(n-2) = {empirical}")
        return out

    def to_csv(self) -> str:
        rows = ["u,v,crystal_degree"]
        rows += [f"{u},{v},{c}" for (u, v), c in sorted(self.double_edge_degree.items())]
        return "\n".join(rows) + "\n"


@dataclass
class ExtendedNetworkReport:
    stable_pairs: int
    crystal_pairs: int
    stats: CrystalStatistics
    failures: list[str]


def _edge_players(g: InterchangeGraph, u: int, v: int) -> set[int]:
    slot = int(np.nonzero(g.targets[u] == v)[0][0])
    return set(g.copy_at(u, slot).players)


def _make_crystal(g: InterchangeGraph, verts: frozenset[int]) -> Crystal:
    edges = tuple(sorted(extended_edges(g, verts)))
    players: set[int] = set()
    for u, v, _ in edges:
        players |= _edge_players(g, u, v)
    return Crystal(tuple(sorted(verts)), edges, tuple(sorted(players)))


def crystal_failures(g: InterchangeGraph, crystal: Crystal) -> list[str]:
    """Shape checks for one crystal: isomorphic to the reference crystal, three players,
    clovers on double edges and triangles on single edges."""
    out = []
    if find_isomorphism(crystal.multiplicity_matrix(), CRYSTAL) is None:
        out.append(f"extended network on {crystal.vertices} is not a crystal")
    if len(crystal.players) != 3:
        out.append(f"crystal on {crystal.vertices} involves players {crystal.players}")
    for u, v, m in crystal.edges:
        if len(_edge_players(g, u, v)) != (2 if m == 2 else 3):
            out.append(f"crystal edge ({u}, {v}) has the wrong generator")
    return out


def extended_networks_and_crystals(g: InterchangeGraph, check: bool = True) -> ExtendedNetworkReport:
    """Crystals of ``g`` (the closures of its split and heavy diamonds) with their statistics."""
    census = network_census(g, keep_crystal_seeds=True)
    failures = []
    if census.unclassified:
        failures.append(f"{census.unclassified} unclassified networks")
    covered: dict[tuple[int, int], int] = {}
    crystals: list[Crystal] = []
    seen_sets: dict[frozenset, int] = {}
    for u, w in census.split_or_heavy:
        if (u, w) in covered:
            continue
        verts = extended_vertex_set(g, u, w)
        if verts not in seen_sets:
            seen_sets[verts] = len(crystals)
            crystals.append(_make_crystal(g, verts))
        k = seen_sets[verts]
        for x, y in itertools.combinations(sorted(verts), 2):
            covered.setdefault((x, y), k)
    if check:
        for c in crystals:
            failures += crystal_failures(g, c)
    a = g.adjacency.tocoo()
    double_deg = {(int(u), int(v)): 0 for u, v, m in zip(a.row, a.col, a.data) if m == 2 and u < v}
    single_in: dict[tuple[int, int], list[int]] = defaultdict(list)
    edge_owner: dict[tuple[int, int], list[int]] = defaultdict(list)
    for k, c in enumerate(crystals):
        for u, v, m in c.edges:
            edge_owner[(u, v)].append(k)
            if m == 2:
                double_deg[(u, v)] += 1
            else:
                single_in[(u, v)].append(k)
    shared_map: dict[tuple[int, int], list] = defaultdict(list)
    for (u, v), ks in edge_owner.items():
        for a_, b_ in itertools.combinations(ks, 2):
            shared_map[(a_, b_)].append((u, v, g.multiplicity(u, v)))
    shared = [(a_, b_, tuple(es)) for (a_, b_), es in sorted(shared_map.items())]
    stats = CrystalStatistics(g.degree, g.graph.n, crystals, double_deg, dict(single_in), shared)
    failures += stats.violations()
    stable = sum(c for (d, _), c in census.counts.items() if d in STABLE)
    return ExtendedNetworkReport(stable, len(census.split_or_heavy), stats, failures)


def stable_closure_failures(g: InterchangeGraph, limit: int | None = None) -> list[str]:
    """Check that single, double and quadruple diamonds are closed (their extension adds nothing)
    and that every antipodal pair of an extended network regenerates it."""
    out = []
    count = 0
    for u in range(g.n_vertices):
        nu = _nbrs(g, u)
        two = set()
        for m in nu:
            two |= _nbrs(g, m)
        for w in sorted(two - nu - {u}):
            if w < u:
                continue
            net = interchange_network(g, u, w)
            cls = SIGNATURES.get(net.signature)
            verts = extended_vertex_set(g, u, w)
            if cls in STABLE and verts != frozenset(net.vertices):
                out.append(f"{cls.value} diamond ({u}, {w}) is not closed")
            for x, y in itertools.combinations(sorted(verts), 2):
                if g.multiplicity(x, y) == 0 and _nbrs(g, x) & _nbrs(g, y):
                    if extended_vertex_set(g, x, y) != verts:
                        out.append(f"antipodal pair ({x}, {y}) of the extension of ({u}, {w}) disagrees")
            count += 1
            if limit is not None and count >= limit:
                return out
    return out


def extended_network_overlap_failures(g: InterchangeGraph) -> list[str]:
    """Distinct extended networks share at most one (single or double) edge."""
    owners: dict[tuple[int, int], set[frozenset]] = defaultdict(set)
    nets = set()
    for u in range(g.n_vertices):
        nu = _nbrs(g, u)
        two = set()
        for m in nu:
            two |= _nbrs(g, m)
        for w in two - nu - {u}:
            if w > u:
                verts = extended_vertex_set(g, u, w)
                if verts in nets:
                    continue
                nets.add(verts)
                for x, y, _ in extended_edges(g, verts):
                    owners[(x, y)].add(verts)
    pair_shared: Counter = Counter()
    for e, sets in owners.items():
        for a_, b_ in itertools.combinations(sorted(sets, key=sorted), 2):
            pair_shared[(a_, b_)] += 1
    return [f"extended networks {sorted(a_)} and {sorted(b_)} share {c} edges"
            for (a_, b_), c in pair_shared.items() if c > 1]


# ---------------------------------------------------------------------------
# Isomorphism and reference graphs
# ---------------------------------------------------------------------------

def find_isomorphism(a: np.ndarray, b: np.ndarray) -> list[int] | None:
    """Vertex map ``p`` with ``a[i, j] == b[p[i], p[j]]``, by backtracking; ``None`` if none exists."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return None
    k = a.shape[0]
    inv_a = [tuple(sorted(row)) for row in a.tolist()]
    inv_b = [tuple(sorted(row)) for row in b.tolist()]
    if sorted(inv_a) != sorted(inv_b):
        return None
    # most constrained vertices first: BFS order from the vertex with the rarest invariant
    freq = Counter(inv_a)
    order = []
    seen = set()
    for start in sorted(range(k), key=lambda v: (freq[inv_a[v]], v)):
        if start in seen:
            continue
        queue = [start]
        seen.add(start)
        while queue:
            v = queue.pop(0)
            order.append(v)
            for x in np.nonzero(a[v])[0].tolist():
                if x not in seen:
                    seen.add(x)
                    queue.append(x)
    perm = [-1] * k
    used = [False] * k

    def extend(pos: int) -> bool:
        if pos == k:
            return True
        v = order[pos]
        for cand in range(k):
            if used[cand] or inv_b[cand] != inv_a[v]:
                continue
            if any(a[v, order[q]] != b[cand, perm[order[q]]] for q in range(pos)):
                continue
            perm[v] = cand
            used[cand] = True
            if extend(pos + 1):
                return True
            used[cand] = False
            perm[v] = -1
        return False

    return perm if extend(0) else None


def cartesian_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Multiplicity matrix of the Cartesian product; vertex ``(i, j)`` is ``i * len(b) + j``."""
    return np.kron(a, np.eye(len(b), dtype=np.int64)) + np.kron(np.eye(len(a), dtype=np.int64), b)


SINGLE_EDGE = np.array([[0, 1], [1, 0]], dtype=np.int64)
DOUBLE_EDGE = 2 * SINGLE_EDGE

# Interchange graph of C3 at score (2, 1, 1): two caps (vertices 0 and 1),
# each joined by double edges to opposite corners of the single-edge 4-cycle 2-3-4-5.
CRYSTAL = np.array([
    [0, 0, 2, 0, 2, 0],
    [0, 0, 0, 2, 0, 2],
    [2, 0, 0, 1, 0, 1],
    [0, 2, 1, 0, 1, 0],
    [2, 0, 0, 1, 0, 1],
    [0, 2, 1, 0, 1, 0],
], dtype=np.int64)
CRYSTAL.flags.writeable = False


def cube_of_double_edges(k: int = 3) -> np.ndarray:
    out = DOUBLE_EDGE
    for _ in range(k - 1):
        out = cartesian_product(out, DOUBLE_EDGE)
    return out


def tambourine() -> np.ndarray:
    """A single edge times the 3-cube of double edges."""
    return cartesian_product(SINGLE_EDGE, cube_of_double_edges(3))


def snare_drum() -> np.ndarray:
    """A double edge times the crystal."""
    return cartesian_product(DOUBLE_EDGE, CRYSTAL)


def reference_networks() -> dict[DiamondClass, np.ndarray]:
    """One multiplicity matrix per diamond class, on the vertex order ``(u, w, *midpoints)``."""
    out = {}
    for sig, cls in SIGNATURES.items():
        if cls in out:
            continue
        mults = [p for p, c in zip(((1, 1), (1, 2), (2, 1), (2, 2)), sig) for _ in range(c)]
        out[cls] = Network(0, 1, tuple(range(2, 2 + len(mults))), tuple(mults)).multiplicity_matrix()
    return out
