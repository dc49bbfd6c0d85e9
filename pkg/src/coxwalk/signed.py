"""Complete signed graphs, Coxeter tournaments and score sequences.

Scores are kept in *half-units*: a score sequence ``s`` is stored as the
integer vector ``2*s``.  Every game contributes ``(2*w_e - 1) * e`` to that
vector, where ``e`` is the integer root vector of the signed edge.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import cache, cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError

Score = tuple[int, ...]


class RootType(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"

    @classmethod
    def parse(cls, value: "RootType | str") -> "RootType":
        if isinstance(value, RootType):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise InvalidInputError(f"unknown root type {value!r}; expected one of A, B, C, D") from None


class GameKind(str, Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"
    HALF = "half"
    LOOP = "loop"


@dataclass(frozen=True)
class Game:
    """One signed edge of K_Phi.

    ``i > j`` for two-player games; ``j`` is ``None`` for half edges and loops.
    Players are 1-based.
    """

    id: int
    kind: GameKind
    i: int
    j: int | None = None

    @property
    def players(self) -> tuple[int, ...]:
        return (self.i,) if self.j is None else (self.i, self.j)

    def charges(self, won: bool) -> tuple[tuple[int, int], ...]:
        """(player, charge) half-edges of the Z-frame representation.

        A loop yields two equal charges on its single player.
        """
        sign = 1 if won else -1
        if self.kind is GameKind.NEGATIVE:
            return ((self.i, sign), (self.j, -sign))
        if self.kind is GameKind.POSITIVE:
            return ((self.i, sign), (self.j, sign))
        if self.kind is GameKind.HALF:
            return ((self.i, sign),)
        return ((self.i, sign), (self.i, sign))

    def vector(self, n: int) -> np.ndarray:
        """Root vector ``e`` of the game (equal to the half-unit score of a win)."""
        v = np.zeros(n, dtype=np.int64)
        for p, c in self.charges(True):
            v[p - 1] += c
        return v

    def label(self) -> str:
        # e.g. "-21", "+31", "h2", "l1"
        if self.j is None:
            return f"{self.kind.value[0]}{self.i}"
        sign = "-" if self.kind is GameKind.NEGATIVE else "+"
        return f"{sign}{self.i},{self.j}" if self.i >= 10 else f"{sign}{self.i}{self.j}"


@dataclass(frozen=True, eq=False)
class CompleteSignedGraph:
    root_type: RootType
    n: int
    games: tuple[Game, ...]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CompleteSignedGraph):
            return NotImplemented
        return self.root_type is other.root_type and self.n == other.n

    def __hash__(self) -> int:
        return hash((self.root_type, self.n))

    def __repr__(self) -> str:
        return f"CompleteSignedGraph({self.root_type.value}, n={self.n}, games={len(self.games)})"

    @property
    def m(self) -> int:
        return len(self.games)

    @cached_property
    def vectors(self) -> np.ndarray:
        """``(m, n)`` matrix of root vectors in canonical game order."""
        if not self.games:
            return np.zeros((0, self.n), dtype=np.int64)
        out = np.stack([g.vector(self.n) for g in self.games])
        out.flags.writeable = False
        return out

    @cached_property
    def full_mask(self) -> int:
        return (1 << self.m) - 1

    @cached_property
    def _index(self) -> dict[tuple[GameKind, int, int | None], int]:
        return {(g.kind, g.i, g.j): g.id for g in self.games}

    def game_id(self, kind: GameKind, i: int, j: int | None = None) -> int:
        if j is not None and i < j:
            i, j = j, i
        try:
            return self._index[(kind, i, j)]
        except KeyError:
            raise InvalidInputError(f"no {kind.value} game ({i}, {j}) in K_{self.root_type.value}{self.n}") from None

    def games_between(self, p: int, q: int) -> tuple[int, ...]:
        """Ids of the two-player games played by ``p`` and ``q``."""
        i, j = max(p, q), min(p, q)
        return tuple(self._index[(k, i, j)] for k in (GameKind.NEGATIVE, GameKind.POSITIVE)
                     if (k, i, j) in self._index)

    def solitaire_game(self, p: int) -> int | None:
        for k in (GameKind.HALF, GameKind.LOOP):
            gid = self._index.get((k, p, None))
            if gid is not None:
                return gid
        return None

    def mask_of(self, game_ids: Iterable[int]) -> int:
        mask = 0
        for g in game_ids:
            if not 0 <= g < self.m:
                raise InvalidInputError(f"unknown game id {g} (graph has {self.m} games)")
            mask |= 1 << g
        return mask


def expected_game_count(root_type: RootType | str, n: int) -> int:
    rt = RootType.parse(root_type)
    pairs = n * (n - 1) // 2
    return {RootType.A: pairs, RootType.D: 2 * pairs, RootType.B: 2 * pairs + n, RootType.C: 2 * pairs + n}[rt]


@cache
def build_complete_graph(root_type: RootType | str, n: int) -> CompleteSignedGraph:
    """Build K_Phi with the canonical game ordering.

    Negative edges ``(i, j)``, ``i > j``, in lexicographic order, then positive
    edges in the same order, then half edges (B) or loops (C) by player.
    """
    rt = RootType.parse(root_type)
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidInputError(f"player count must be a positive integer, got {n!r}")
    n = int(n)
    pairs = [(i, j) for i in range(2, n + 1) for j in range(1, i)]
    specs: list[tuple[GameKind, int, int | None]] = [(GameKind.NEGATIVE, i, j) for i, j in pairs]
    if rt is not RootType.A:
        specs += [(GameKind.POSITIVE, i, j) for i, j in pairs]
    if rt is RootType.B:
        specs += [(GameKind.HALF, i, None) for i in range(1, n + 1)]
    elif rt is RootType.C:
        specs += [(GameKind.LOOP, i, None) for i in range(1, n + 1)]
    games = tuple(Game(k, kind, i, j) for k, (kind, i, j) in enumerate(specs))
    return CompleteSignedGraph(rt, n, games)


@dataclass(frozen=True)
class Tournament:
    """Orientation of K_Phi; bit ``k`` of ``w`` is the outcome of game ``k``."""

    graph: CompleteSignedGraph
    w: int = field(default=0)

    def __post_init__(self):
        if not 0 <= self.w <= self.graph.full_mask:
            raise InvalidInputError(f"bit vector {self.w:#x} does not fit {self.graph.m} games")

    @classmethod
    def from_bits(cls, graph: CompleteSignedGraph, bits: str | Sequence[int]) -> "Tournament":
        if isinstance(bits, str):
            if len(bits) != graph.m or set(bits) - {"0", "1"}:
                raise InvalidInputError(f"expected a {graph.m}-character 0/1 string, got {bits!r}")
            bits = [int(c) for c in bits]
        if len(bits) != graph.m:
            raise InvalidInputError(f"expected {graph.m} bits, got {len(bits)}")
        return cls(graph, sum(int(b) << k for k, b in enumerate(bits)))

    @classmethod
    def all_wins(cls, graph: CompleteSignedGraph) -> "Tournament":
        return cls(graph, graph.full_mask)

    def bit(self, game_id: int) -> int:
        return (self.w >> game_id) & 1

    @property
    def bits(self) -> str:
        return bitstring(self.w, self.graph.m)

    @property
    def reversal(self) -> "Tournament":
        return Tournament(self.graph, self.w ^ self.graph.full_mask)

    def to_json(self) -> str:
        return json.dumps({"type": self.graph.root_type.value, "n": self.graph.n, "w": self.bits})

    @classmethod
    def from_json(cls, text: str | dict) -> "Tournament":
        obj = json.loads(text) if isinstance(text, str) else text
        graph = build_complete_graph(obj["type"], int(obj["n"]))
        return cls.from_bits(graph, obj["w"])

    def __repr__(self) -> str:
        return f"Tournament({self.graph.root_type.value}{self.graph.n}, w={self.bits})"


def bitstring(mask: int, m: int) -> str:
    """Game-ordered 0/1 string: character ``k`` is bit ``k`` of ``mask``."""
    return "".join("1" if (mask >> k) & 1 else "0" for k in range(m))


def game_vector(game: Game, n: int) -> Score:
    """Root vector of ``game`` as a tuple (= half-unit score of a win)."""
    for p in game.players:
        if not 1 <= p <= n:
            raise InvalidInputError(f"player {p} out of range for n={n}")
    return tuple(int(x) for x in game.vector(n))


def subset_score(graph: CompleteSignedGraph, w: int, mask: int) -> Score:
    """Half-unit score of the games in ``mask`` oriented as in ``w``."""
    total = np.zeros(graph.n, dtype=np.int64)
    vec = graph.vectors
    k = 0
    while mask:
        if mask & 1:
            total += vec[k] if (w >> k) & 1 else -vec[k]
        mask >>= 1
        k += 1
    return tuple(int(x) for x in total)


def score(t: Tournament) -> Score:
    return subset_score(t.graph, t.w, t.graph.full_mask)


def is_neutral(graph: CompleteSignedGraph, w: int, mask: int) -> bool:
    return not any(subset_score(graph, w, mask))


def standard_score(root_type: RootType | str, n: int) -> Score:
    """Score of the all-wins tournament (the Weyl vector, in half-units)."""
    return score(Tournament.all_wins(build_complete_graph(root_type, n)))


def reverse_subset(t: Tournament, game_ids: Iterable[int]) -> Tournament:
    return Tournament(t.graph, t.w ^ t.graph.mask_of(game_ids))


def check_score(graph: CompleteSignedGraph, halves: Sequence[int]) -> Score:
    s = tuple(int(x) for x in halves)
    if len(s) != graph.n:
        raise InvalidInputError(f"score has {len(s)} entries, expected {graph.n}")
    return s


def degree_formula(root_type: RootType | str, n: int, halves: Sequence[int]) -> int:
    """Interchange-graph degree ``(|2 s_Phi|^2 - |2 s|^2) / 8`` for a half-unit score.

    Raises InvalidInputError when the result is negative or fractional, which
    certifies that ``halves`` is not a score sequence.
    """
    graph = build_complete_graph(root_type, n)
    s = check_score(graph, halves)
    top = sum(x * x for x in standard_score(graph.root_type, n))
    num = top - sum(x * x for x in s)
    if num < 0 or num % 8:
        raise InvalidInputError(f"score {s} cannot be realised: (|2s_Phi|^2 - |2s|^2) = {num} is not a non-negative multiple of 8")
    return num // 8


def parse_score(text: str) -> Score:
    """Parse a comma-separated half-unit score, e.g. ``"-2,0,2"``."""
    try:
        return tuple(int(tok) for tok in text.replace(" ", "").split(",") if tok != "")
    except ValueError:
        raise InvalidInputError(f"score must be comma-separated integers (half-units), got {text!r}") from None
