"""Z-frames, neutral trails and the generator-reversal procedure.

A Z-frame records every half-point of a sub-tournament as a charged edge
between a player and a match node.  Neutral sub-tournaments decompose into
neutral trails; an irreducible one is a single trail, and it can be reversed
by ``len - 2`` generator reversals by cutting the trail with an auxiliary
game and recursing.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cache, cached_property

import numpy as np

from . import _kernels
from .errors import InvalidInputError, LemmaViolation, NotNeutralError
from .generators import GeneratorCopy, copy_for, generator_slots
from .signed import CompleteSignedGraph, GameKind, Tournament, build_complete_graph


@dataclass(frozen=True)
class ZEdge:
    player: int
    game: int
    charge: int  # +1: directed from the player to the match


@dataclass(frozen=True)
class ZFrame:
    graph: CompleteSignedGraph
    w: int
    games: tuple[int, ...]
    edges: tuple[ZEdge, ...]

    @cached_property
    def net_charge(self) -> tuple[int, ...]:
        out = [0] * self.graph.n
        for e in self.edges:
            out[e.player - 1] += e.charge
        return tuple(out)

    @property
    def is_neutral(self) -> bool:
        return not any(self.net_charge)

    @cached_property
    def degrees(self) -> tuple[int, ...]:
        out = [0] * self.graph.n
        for e in self.edges:
            out[e.player - 1] += 1
        return tuple(out)

    @property
    def mask(self) -> int:
        return self.graph.mask_of(self.games)

    def to_dot(self, name: str = "zframe") -> str:
        lines = [f"digraph {name} {{"]
        players = sorted({e.player for e in self.edges})
        for p in players:
            lines.append(f'  p{p} [label="{p}", shape=circle, style=filled, fillcolor=black, fontcolor=white];')
        for g in self.games:
            lines.append(f'  m{g} [label="{self.graph.games[g].label()}", shape=circle];')
        for e in self.edges:
            src, dst = (f"p{e.player}", f"m{e.game}") if e.charge > 0 else (f"m{e.game}", f"p{e.player}")
            lines.append(f"  {src} -> {dst};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_zframe(graph: CompleteSignedGraph, w: int, game_ids=None) -> ZFrame:
    """Z-frame of the games ``game_ids`` (default: all) oriented as in ``w``."""
    ids = tuple(sorted(range(graph.m) if game_ids is None else set(game_ids)))
    graph.mask_of(ids)
    edges = []
    for g in ids:
        for p, c in graph.games[g].charges(bool((w >> g) & 1)):
            edges.append(ZEdge(p, g, c))
    return ZFrame(graph, w, ids, tuple(edges))


@dataclass(frozen=True)
class Trail:
    """A neutral trail through a Z-frame.

    ``edges`` lists edge indices in traversal order.  For a closed trail,
    ``games[i]`` joins ``visits[i]`` to ``visits[i + 1]`` (cyclically); for an
    open trail the two end games are final matches and ``visits[i]`` sits
    between ``games[i]`` and ``games[i + 1]``.
    """

    edges: tuple[int, ...]
    games: tuple[int, ...]
    visits: tuple[int, ...]
    closed: bool

    @property
    def length(self) -> int:
        return len(self.games)

    @property
    def final_matches(self) -> tuple[int, ...]:
        return () if self.closed else (self.games[0], self.games[-1])


def _pairings(frame: ZFrame) -> tuple[list[int], list[int | None]]:
    at_player = [-1] * len(frame.edges)
    buckets: dict[int, tuple[list[int], list[int]]] = {}
    for k, e in enumerate(frame.edges):
        plus, minus = buckets.setdefault(e.player, ([], []))
        (plus if e.charge > 0 else minus).append(k)
    for p in sorted(buckets):
        plus, minus = buckets[p]
        if len(plus) != len(minus):
            raise NotNeutralError(f"player {p} has net charge {len(plus) - len(minus)}", player=p)
        for a, b in zip(plus, minus):
            at_player[a], at_player[b] = b, a
    at_match: list[int | None] = [None] * len(frame.edges)
    first: dict[int, int] = {}
    for k, e in enumerate(frame.edges):
        if e.game in first:
            at_match[k], at_match[first[e.game]] = first[e.game], k
        else:
            first[e.game] = k
    return at_player, at_match


def decompose_neutral_trails(frame: ZFrame) -> list[Trail]:
    """Split a neutral Z-frame into edge-disjoint neutral trails.

    Opposite charges are paired at each player in index order; following
    player pairings and match adjacencies alternately then traces every trail.
    Open trails (first) are listed by their starting final match.
    """
    at_player, at_match = _pairings(frame)
    seen = [False] * len(frame.edges)
    trails = []
    for start in range(len(frame.edges)):
        if seen[start] or at_match[start] is not None:
            continue
        seq, k = [], start
        while True:
            seq.append(k)
            seq.append(at_player[k])
            nxt = at_match[at_player[k]]
            if nxt is None:
                break
            k = nxt
        for k in seq:
            seen[k] = True
        games = tuple(frame.edges[k].game for k in seq[0::2]) + (frame.edges[seq[-1]].game,)
        visits = tuple(frame.edges[k].player for k in seq[0::2])
        trails.append(Trail(tuple(seq), games, visits, closed=False))
    for start in range(len(frame.edges)):
        if seen[start]:
            continue
        seq, k = [], start
        while True:
            m = at_match[k]
            seq.extend((k, m))
            k = at_player[m]
            if k == start:
                break
        for k in seq:
            seen[k] = True
        games = tuple(frame.edges[k].game for k in seq[0::2])
        # visits[i] is the player at the start of games[i]
        visits = tuple(frame.edges[k].player for k in seq[0::2])
        trails.append(Trail(tuple(seq), games, visits, closed=True))
    return trails


def _signed_rows(graph: CompleteSignedGraph, w: int, ids) -> np.ndarray:
    vec = graph.vectors
    return np.stack([vec[g] if (w >> g) & 1 else -vec[g] for g in ids]).astype(np.int64)


def smallest_neutral_subset(graph: CompleteSignedGraph, w: int, mask: int) -> int:
    """Mask of a minimum-size neutral sub-tournament inside ``mask`` (0 if none)."""
    ids = [g for g in range(graph.m) if (mask >> g) & 1]
    if not ids:
        return 0
    local = _kernels.smallest_zero_subset(_signed_rows(graph, w, ids))
    return sum(1 << g for k, g in enumerate(ids) if (local >> k) & 1)


def irreducible_components(graph: CompleteSignedGraph, w: int, mask: int) -> list[int]:
    """Partition a neutral game set into irreducible neutral parts (by repeated minimal extraction)."""
    parts = []
    rest = mask
    while rest:
        part = smallest_neutral_subset(graph, w, rest)
        if not part:
            raise NotNeutralError("game set is not neutral")
        parts.append(part)
        rest &= ~part
    return parts


def is_irreducible(frame: ZFrame, use_degree_filter: bool = True) -> bool:
    """True iff the neutral frame has no proper non-empty neutral sub-frame.

    Neutral sub-frames are unions of whole matches, so the search runs over
    game subsets.  With ``use_degree_filter`` a frame that is not a single
    trail with player degrees in {0, 2, 4} is rejected before the search.
    """
    if not frame.is_neutral:
        raise NotNeutralError("irreducibility is only defined for neutral frames")
    if not frame.games:
        return False
    if use_degree_filter:
        if any(d not in (0, 2, 4) for d in frame.degrees):
            return False
        if len(decompose_neutral_trails(frame)) != 1:
            return False
    smallest = smallest_neutral_subset(frame.graph, frame.w, frame.mask)
    return smallest == frame.mask


# ---------------------------------------------------------------------------
# Reversal by generators
# ---------------------------------------------------------------------------

def _game_charges(graph: CompleteSignedGraph, w: int, g: int, p: int, q: int) -> tuple[int, int]:
    ch = dict(graph.games[g].charges(bool((w >> g) & 1)))
    return ch[p], ch[q]


class _Reverser:
    def __init__(self, graph: CompleteSignedGraph):
        self.graph = graph
        self.moves: list[GeneratorCopy] = []

    def run(self, w: int, imask: int) -> int:
        for part in irreducible_components(self.graph, w, imask):
            w = self._irreducible(w, part)
        return w

    def _apply(self, w: int, mask: int) -> int:
        copy = copy_for(self.graph, mask, w)
        if copy is None or not copy.present_in(w):
            raise LemmaViolation(f"three-game neutral set {mask:#x} is not a generator copy")
        self.moves.append(copy)
        return w ^ mask

    def _irreducible(self, w: int, imask: int) -> int:
        graph = self.graph
        ell = bin(imask).count("1")
        if ell == 3:
            return self._apply(w, imask)
        frame = build_zframe(graph, w, [g for g in range(graph.m) if (imask >> g) & 1])
        trails = decompose_neutral_trails(frame)
        if len(trails) != 1:
            raise LemmaViolation(f"irreducible neutral set {imask:#x} splits into {len(trails)} trails")
        trail = trails[0]
        players = sorted(set(trail.visits))
        split = self._split_open(frame, trail, imask) if not trail.closed else (
            None if len(players) <= 3 else self._split_closed(frame, trail, imask))
        if split is None:
            if len(players) > 3:
                raise LemmaViolation(f"no admissible split for trail {trail}")
            before = len(self.moves)
            w = self._small(w, imask, players)
            if len(self.moves) - before > ell - 2:
                raise LemmaViolation(f"{ell}-game trail on {len(players)} players needed "
                                     f"{len(self.moves) - before} reversals")
            return w
        first, second, aux = split
        w = self.run(w, first | (1 << aux))
        w = self.run(w, second | (1 << aux))
        return w

    def _split_open(self, frame: ZFrame, trail: Trail, imask: int):
        graph, w = self.graph, frame.w
        ell = trail.length
        # visits[k - 1] sits between games[k - 1] and games[k]
        for k in range(2, ell - 1):
            v = trail.visits[k - 1]
            h = graph.solitaire_game(v)
            if h is None or (imask >> h) & 1:
                continue
            incoming = frame.edges[trail.edges[2 * k - 2]].charge
            first = sum(1 << x for x in trail.games[:k])
            second = sum(1 << x for x in trail.games[k:])
            h_charge = dict(graph.games[h].charges(bool((w >> h) & 1)))[v]
            if h_charge != -incoming:
                first, second = second, first
            return first, second, h
        return None

    def _split_closed(self, frame: ZFrame, trail: Trail, imask: int):
        graph, w = self.graph, frame.w
        ell = trail.length
        best = None
        for i in range(ell):
            for j in range(i + 2, ell):
                if ell - (j - i) < 2:
                    continue
                p, q = trail.visits[i], trail.visits[j]
                if p == q:
                    continue
                # arc games[i:j] leaves p through edge 2i and enters q through edge 2j - 1
                out_p = frame.edges[trail.edges[2 * i]].charge
                in_q = frame.edges[trail.edges[2 * j - 1]].charge
                kind = GameKind.POSITIVE if out_p == in_q else GameKind.NEGATIVE
                g = graph.game_id(kind, p, q)
                if (imask >> g) & 1:
                    continue
                arc = sum(1 << x for x in trail.games[i:j])
                rest = imask & ~arc
                if _game_charges(graph, w, g, p, q) == (-out_p, -in_q):
                    first, second = arc, rest
                else:
                    first, second = rest, arc
                key = (bin(first).count("1"), i, j)
                if best is None or key < best[0]:
                    best = (key, first, second, g)
        return None if best is None else best[1:]

    def _small(self, w: int, imask: int, players: list[int]) -> int:
        graph = self.graph
        k = min(3, graph.n)
        local_players = list(players) + [p for p in range(1, graph.n + 1) if p not in players]
        local_players = sorted(local_players[:k])
        host_ids = _local_to_host(graph, tuple(local_players))
        local_w = sum(((w >> h) & 1) << i for i, h in enumerate(host_ids))
        local_i = sum(((imask >> h) & 1) << i for i, h in enumerate(host_ids))
        path = _local_path(graph.root_type, k, local_w, local_w ^ local_i)
        for local_mask in path:
            host_mask = sum(1 << host_ids[i] for i in range(len(host_ids)) if (local_mask >> i) & 1)
            w = self._apply(w, host_mask)
        return w


def _local_to_host(graph: CompleteSignedGraph, players: tuple[int, ...]) -> tuple[int, ...]:
    """Host game id of each game of K_Phi on ``len(players)`` players, in local game order."""
    local = build_complete_graph(graph.root_type, len(players))
    out = []
    for game in local.games:
        if game.j is None:
            out.append(graph.game_id(game.kind, players[game.i - 1]))
        else:
            out.append(graph.game_id(game.kind, players[game.i - 1], players[game.j - 1]))
    return tuple(out)


@cache
def _bfs_parents(root_type, k: int, start: int) -> dict[int, tuple[int, int]]:
    slots = generator_slots(root_type, k)
    parents = {start: (-1, 0)}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for c in slots:
            if c.present_in(x):
                y = x ^ c.mask
                if y not in parents:
                    parents[y] = (x, c.mask)
                    queue.append(y)
    return parents


def _local_path(root_type, k: int, start: int, target: int) -> list[int]:
    """Shortest sequence of generator masks turning ``start`` into ``target`` on ``k`` players."""
    parents = _bfs_parents(root_type, k, start)
    if target not in parents:
        raise LemmaViolation(f"orientation {target:#x} unreachable from {start:#x} by generators")
    path = []
    x = target
    while x != start:
        x, mask = parents[x]
        path.append(mask)
    return path[::-1]


def reverse_neutral_subtournament(t: Tournament, game_ids) -> list[GeneratorCopy]:
    """Generator copies whose successive reversal turns ``t`` into ``t`` with ``game_ids`` flipped.

    At most ``len - 2`` reversals are used on each irreducible part.
    """
    graph = t.graph
    imask = graph.mask_of(game_ids)
    ell = bin(imask).count("1")
    if ell < 3:
        raise InvalidInputError(f"a neutral set has at least 3 games, got {ell}")
    frame = build_zframe(graph, t.w, [g for g in range(graph.m) if (imask >> g) & 1])
    if not frame.is_neutral:
        bad = next(p for p, c in enumerate(frame.net_charge, 1) if c)
        raise NotNeutralError(f"games {sorted(game_ids)} are not neutral in {t} (player {bad})", player=bad)
    rev = _Reverser(graph)
    final = rev.run(t.w, imask)
    if final != t.w ^ imask:
        raise LemmaViolation("generator reversals did not reproduce the target orientation")
    return rev.moves


def irreducible_neutral_sets(graph: CompleteSignedGraph) -> list[tuple[int, int]]:
    """Every irreducible neutral sub-tournament of K_Phi as ``(orientation, games)`` masks.

    ``orientation`` only carries bits inside ``games``.  Exhaustive over the
    ``3**m`` sub-tournaments, so intended for small graphs.
    """
    m = graph.m
    size = 1 << m
    masks = np.arange(size, dtype=np.int64)
    out = []
    for w in range(size):
        signed = np.where(((w >> np.arange(m)) & 1)[:, None] == 1, graph.vectors, -graph.vectors)
        zero = ~np.any(_kernels.subset_sums(signed), axis=1)
        zero[0] = False
        # number of neutral submasks of every mask (sum over subsets)
        count = zero.astype(np.int32)
        for b in range(m):
            view = count.reshape(-1, 2, 1 << b)
            view[:, 1, :] += view[:, 0, :]
        hits = np.nonzero(zero & (count == 1) & ((w & ~masks) == 0))[0]
        out.extend((w, int(mk)) for mk in hits)
    return out
