import itertools
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coxwalk.errors import InvalidInputError
from coxwalk.generators import (TemplateKind, apply_generator_reversal, catalog_json, discover_templates,
                                find_generator_copies, generator_catalog, generator_slots, reversed_copy,
                                weighted_copy_count)
from coxwalk.interchange import enumerate_fiber
from coxwalk.signed import Tournament, build_complete_graph, degree_formula, score


def test_catalog_matches_golden_file():
    golden = resources.files("coxwalk").joinpath("data/generators.json").read_text()
    assert catalog_json() == golden


@pytest.mark.parametrize("rt,ids", [
    ("A", {"cyclic_triangle"}),
    ("D", {"cyclic_triangle", "balanced_triangle"}),
    ("B", {"cyclic_triangle", "balanced_triangle", "neutral_pair_1", "neutral_pair_2", "neutral_pair_3"}),
    ("C", {"cyclic_triangle", "balanced_triangle", "neutral_clover_1", "neutral_clover_2"}),
])
def test_catalog_contents(rt, ids):
    cat = generator_catalog(rt)
    assert {t.id for t in cat} == ids
    assert [t.id for t in discover_templates(rt)] == [t.id for t in cat]
    for t in cat:
        assert t.multiplicity == (2 if t.kind is TemplateKind.NEUTRAL_CLOVER else 1)


def test_all_wins_has_no_generator():
    for rt in "BCD":
        assert find_generator_copies(Tournament.all_wins(build_complete_graph(rt, 4))) == []


@pytest.mark.parametrize("s,count", [((0, 0, 0), 7), ((4, 2, 2), 4)])
def test_weighted_counts_in_c3_fibers(s, count):
    for t in enumerate_fiber("C", 3, s).tournaments():
        assert weighted_copy_count(t) == count


@pytest.mark.parametrize("rt,n", [(rt, n) for rt in "ABCD" for n in (1, 2, 3)] + [("D", 4), ("A", 4)])
def test_copy_count_is_degree_exhaustive(rt, n):
    g = build_complete_graph(rt, n)
    for w in range(1 << g.m):
        t = Tournament(g, w)
        assert weighted_copy_count(t) == degree_formula(rt, n, score(t))


@pytest.mark.parametrize("rt", "BC")
@given(data=st.data())
@settings(max_examples=150, deadline=None)
def test_copy_count_is_degree_n4(rt, data):
    g = build_complete_graph(rt, 4)
    t = Tournament(g, data.draw(st.integers(0, g.full_mask)))
    assert weighted_copy_count(t) == degree_formula(rt, 4, score(t))


@pytest.mark.parametrize("rt", "BCD")
def test_reversal_is_neutral_involution(rt):
    g = build_complete_graph(rt, 3)
    for w in range(0, 1 << g.m, 7):
        t = Tournament(g, w)
        for c in find_generator_copies(t):
            u = apply_generator_reversal(t, c)
            assert score(u) == score(t)
            assert apply_generator_reversal(u, reversed_copy(c, g)) == t
            with pytest.raises(InvalidInputError):
                apply_generator_reversal(u, c)


def test_generators_live_on_at_most_three_players():
    for rt in "BCD":
        for c in generator_slots(rt, 4):
            assert len(c.players) <= 3 and len(c.game_ids) == 3


@pytest.mark.parametrize("rt", "BCD")
def test_present_copies_overlap_in_at_most_one_game(rt):
    g = build_complete_graph(rt, 4)
    for w in range(0, 1 << g.m, 97):
        copies = find_generator_copies(Tournament(g, w))
        for a, b in itertools.combinations(copies, 2):
            assert bin(a.mask & b.mask).count("1") <= 1
