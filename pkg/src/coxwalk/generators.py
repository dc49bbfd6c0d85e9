"""Type-Phi generators: the minimum-size neutral sub-tournaments.

Templates are discovered by brute force.  Every neutral sub-tournament with
three games is irreducible (no neutral structure has fewer than three games),
and every generator lives on at most three players, so enumerating all
three-game neutral sub-tournaments of K_Phi on three players and reducing
them modulo player relabelling yields the full catalog.  The result is frozen
in ``data/generators.json``; ``tests/test_generators.py`` regenerates it.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import Enum
from functools import cache
from importlib import resources

import numpy as np

from .errors import InvalidInputError
from .signed import (CompleteSignedGraph, GameKind, RootType, Tournament, build_complete_graph,
                     subset_score)

GENERATOR_SIZE = 3


class TemplateKind(str, Enum):
    CYCLIC_TRIANGLE = "cyclic_triangle"
    BALANCED_TRIANGLE = "balanced_triangle"
    NEUTRAL_PAIR = "neutral_pair"
    NEUTRAL_CLOVER = "neutral_clover"


# A charged game: (kind, ((player, charge), ...)) with the half-edges sorted.
ChargedGame = tuple[str, tuple[tuple[int, int], ...]]


@dataclass(frozen=True)
class GeneratorTemplate:
    """An orientation class of a generator, up to relabelling of players."""

    id: str
    kind: TemplateKind
    game_kinds: tuple[str, ...]
    orientation: tuple[ChargedGame, ...]

    @property
    def multiplicity(self) -> int:
        return 2 if self.kind is TemplateKind.NEUTRAL_CLOVER else 1

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "game_kinds": list(self.game_kinds),
            "orientation": [[k, [list(hc) for hc in hcs]] for k, hcs in self.orientation],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorTemplate":
        orient = tuple((k, tuple(tuple(hc) for hc in hcs)) for k, hcs in d["orientation"])
        return cls(d["id"], TemplateKind(d["kind"]), tuple(d["game_kinds"]), orient)


@dataclass(frozen=True)
class GeneratorCopy:
    """A concrete placement of a template inside K_Phi.

    The copy is present in a tournament ``T`` iff ``T.w & mask == bits``.
    """

    template: GeneratorTemplate
    players: tuple[int, ...]
    game_ids: tuple[int, ...]
    mask: int
    bits: int

    @property
    def multiplicity(self) -> int:
        return self.template.multiplicity

    def present_in(self, w: int) -> bool:
        return (w & self.mask) == self.bits


def charged_form(graph: CompleteSignedGraph, w: int, game_ids) -> tuple[ChargedGame, ...]:
    out = []
    for g in game_ids:
        game = graph.games[g]
        out.append((game.kind.value, tuple(sorted(game.charges(bool((w >> g) & 1))))))
    return tuple(sorted(out))


def canonical_form(charged: tuple[ChargedGame, ...]) -> tuple[ChargedGame, ...]:
    """Lexicographically smallest relabelling of a charged sub-tournament onto players 1..k."""
    players = sorted({p for _, hcs in charged for p, _ in hcs})
    best = None
    for perm in itertools.permutations(range(1, len(players) + 1)):
        relabel = dict(zip(players, perm))
        cand = tuple(sorted((k, tuple(sorted((relabel[p], c) for p, c in hcs))) for k, hcs in charged))
        if best is None or cand < best:
            best = cand
    return best


def _kind_of(charged: tuple[ChargedGame, ...]) -> TemplateKind:
    kinds = [k for k, _ in charged]
    if GameKind.LOOP.value in kinds:
        return TemplateKind.NEUTRAL_CLOVER
    if GameKind.HALF.value in kinds:
        return TemplateKind.NEUTRAL_PAIR
    if kinds.count(GameKind.NEGATIVE.value) == 3:
        return TemplateKind.CYCLIC_TRIANGLE
    return TemplateKind.BALANCED_TRIANGLE


def discover_templates(root_type: RootType | str) -> list[GeneratorTemplate]:
    """Enumerate three-game neutral sub-tournaments on three players, modulo relabelling."""
    graph = build_complete_graph(root_type, 3)
    forms = set()
    for ids in itertools.combinations(range(graph.m), GENERATOR_SIZE):
        mask = graph.mask_of(ids)
        for bits in itertools.product((0, 1), repeat=GENERATOR_SIZE):
            w = sum(b << g for b, g in zip(bits, ids))
            if not any(subset_score(graph, w, mask)):
                forms.add(canonical_form(charged_form(graph, w, ids)))
    by_kind: dict[TemplateKind, list] = {}
    for form in sorted(forms):
        by_kind.setdefault(_kind_of(form), []).append(form)
    out = []
    for kind in TemplateKind:
        group = by_kind.get(kind, [])
        for idx, form in enumerate(group, 1):
            tid = kind.value if len(group) == 1 else f"{kind.value}_{idx}"
            out.append(GeneratorTemplate(tid, kind, tuple(sorted(k for k, _ in form)), form))
    return out


@cache
def generator_catalog(root_type: RootType | str) -> tuple[GeneratorTemplate, ...]:
    """Frozen catalog for ``root_type`` (loaded from the packaged golden data)."""
    rt = RootType.parse(root_type)
    data = json.loads(resources.files("coxwalk").joinpath("data/generators.json").read_text())
    return tuple(GeneratorTemplate.from_dict(d) for d in data[rt.value])


def catalog_json() -> str:
    """Regenerated catalog for all root types, in the golden-file layout."""
    blocks = []
    for rt in RootType:
        rows = ",\n".join("  " + json.dumps(t.to_dict(), sort_keys=True) for t in discover_templates(rt))
        blocks.append(f' "{rt.value}": [\n{rows}\n ]')
    return "{\n" + ",\n".join(blocks) + "\n}\n"


@cache
def generator_slots(root_type: RootType | str, n: int) -> tuple[GeneratorCopy, ...]:
    """Every possible generator copy in K_Phi on ``n`` players, ordered by (mask, bits)."""
    graph = build_complete_graph(root_type, n)
    lookup = {t.orientation: t for t in generator_catalog(graph.root_type)}
    copies = []
    for ids in itertools.combinations(range(graph.m), GENERATOR_SIZE):
        mask = graph.mask_of(ids)
        for bits in itertools.product((0, 1), repeat=GENERATOR_SIZE):
            w = sum(b << g for b, g in zip(bits, ids))
            if any(subset_score(graph, w, mask)):
                continue
            charged = charged_form(graph, w, ids)
            template = lookup.get(canonical_form(charged))
            if template is None:
                raise AssertionError(f"neutral 3-game structure {charged} missing from catalog")
            players = tuple(sorted({p for g in ids for p in graph.games[g].players}))
            copies.append(GeneratorCopy(template, players, ids, mask, w))
    copies.sort(key=lambda c: (c.mask, c.bits))
    return tuple(copies)


@cache
def slot_arrays(root_type: RootType | str, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(mask, bits, multiplicity)`` arrays over :func:`generator_slots`."""
    slots = generator_slots(root_type, n)
    masks = np.array([c.mask for c in slots], dtype=np.int64)
    bits = np.array([c.bits for c in slots], dtype=np.int64)
    mult = np.array([c.multiplicity for c in slots], dtype=np.int64)
    for a in (masks, bits, mult):
        a.flags.writeable = False
    return masks, bits, mult


@cache
def _slot_lookup(root_type: RootType, n: int) -> dict[tuple[int, int], int]:
    return {(c.mask, c.bits): k for k, c in enumerate(generator_slots(root_type, n))}


def copy_for(graph: CompleteSignedGraph, mask: int, bits: int) -> GeneratorCopy | None:
    """The generator copy on games ``mask`` oriented as ``bits``, if that is a generator."""
    k = _slot_lookup(graph.root_type, graph.n).get((mask, bits & mask))
    return None if k is None else generator_slots(graph.root_type, graph.n)[k]


def find_generator_copies(t: Tournament) -> list[GeneratorCopy]:
    return [c for c in generator_slots(t.graph.root_type, t.graph.n) if c.present_in(t.w)]


def weighted_copy_count(t: Tournament) -> int:
    return sum(c.multiplicity for c in find_generator_copies(t))


def reversed_copy(copy: GeneratorCopy, graph: CompleteSignedGraph) -> GeneratorCopy:
    out = copy_for(graph, copy.mask, copy.bits ^ copy.mask)
    assert out is not None, "the reversal of a generator is a generator"
    return out


def apply_generator_reversal(t: Tournament, copy: GeneratorCopy) -> Tournament:
    if not copy.present_in(t.w):
        raise InvalidInputError(f"generator copy on games {copy.game_ids} is not oriented as required in {t}")
    return Tournament(t.graph, t.w ^ copy.mask)
