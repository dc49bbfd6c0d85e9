import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coxwalk.errors import InvalidInputError
from coxwalk.signed import (Game, GameKind, RootType, Tournament, build_complete_graph, degree_formula,
                            expected_game_count, game_vector, is_neutral, parse_score, reverse_subset, score,
                            standard_score)


@pytest.mark.parametrize("rt,n,count", [("C", 3, 9), ("D", 3, 6), ("B", 1, 1), ("A", 4, 6), ("B", 4, 16)])
def test_game_counts(rt, n, count):
    g = build_complete_graph(rt, n)
    assert g.m == count == expected_game_count(rt, n)


def test_c3_kinds_and_order():
    g = build_complete_graph("C", 3)
    kinds = [x.kind for x in g.games]
    assert kinds == [GameKind.NEGATIVE] * 3 + [GameKind.POSITIVE] * 3 + [GameKind.LOOP] * 3
    assert [(x.i, x.j) for x in g.games[:3]] == [(2, 1), (3, 1), (3, 2)]
    assert [x.id for x in g.games] == list(range(9))


def test_b1_is_one_half_edge():
    (game,) = build_complete_graph("B", 1).games
    assert game.kind is GameKind.HALF and game.i == 1


def test_zero_players_rejected():
    with pytest.raises(InvalidInputError):
        build_complete_graph("C", 0)
    with pytest.raises(InvalidInputError):
        RootType.parse("E")


def test_game_vectors():
    assert game_vector(Game(0, GameKind.NEGATIVE, 2, 1), 2) == (-1, 1)
    assert game_vector(Game(0, GameKind.LOOP, 1), 2) == (2, 0)
    assert game_vector(Game(0, GameKind.HALF, 3), 3) == (0, 0, 1)
    assert game_vector(Game(0, GameKind.POSITIVE, 3, 1), 3) == (1, 0, 1)
    with pytest.raises(InvalidInputError):
        game_vector(Game(0, GameKind.HALF, 3), 2)


@pytest.mark.parametrize("rt,s", [("B", (1, 3, 5)), ("C", (2, 4, 6)), ("D", (0, 2, 4)), ("A", (-2, 0, 2))])
def test_standard_scores(rt, s):
    assert standard_score(rt, 3) == s


def test_all_losses_negates():
    g = build_complete_graph("C", 3)
    assert score(Tournament(g, 0)) == (-2, -4, -6)


@pytest.mark.parametrize("rt", "ABCD")
@given(data=st.data())
@settings(max_examples=40, deadline=None)
def test_reversal_negates_score(rt, data):
    g = build_complete_graph(rt, 4)
    t = Tournament(g, data.draw(st.integers(0, g.full_mask)))
    assert score(t.reversal) == tuple(-x for x in score(t))
    assert reverse_subset(t, []) == t
    assert reverse_subset(t, range(g.m)) == t.reversal


def test_triangle_reversal_keeps_score():
    g = build_complete_graph("D", 3)
    # -21 won by 2, -32 won by 3, -31 lost by 3: the cyclic triangle 2 > 1 > 3 > 2
    t = Tournament(g, 0b101)
    tri = [0, 1, 2]
    assert is_neutral(g, t.w, g.mask_of(tri))
    assert score(reverse_subset(t, tri)) == score(t)


def test_degree_examples():
    assert degree_formula("C", 3, (0, 0, 0)) == 7
    assert degree_formula("C", 3, (4, 2, 2)) == 4
    for rt in "ABCD":
        assert degree_formula(rt, 3, standard_score(rt, 3)) == 0
    with pytest.raises(InvalidInputError):
        degree_formula("C", 3, (1, 0, 0))


@pytest.mark.parametrize("rt", "ABCD")
def test_score_parity_by_enumeration(rt):
    # which half-unit parities occur is discovered, not assumed
    g = build_complete_graph(rt, 3)
    parities = {tuple(x % 2 for x in score(Tournament(g, w))) for w in range(1 << g.m)}
    if rt == "B":
        assert parities == {(1, 1, 1)}
    else:
        assert parities == {(0, 0, 0)}


def test_json_roundtrip():
    g = build_complete_graph("B", 3)
    t = Tournament(g, 0b101100101)
    assert Tournament.from_json(t.to_json()) == t
    assert Tournament.from_bits(g, t.bits) == t
    with pytest.raises(InvalidInputError):
        Tournament.from_bits(g, "0101")


def test_parse_score():
    assert parse_score("-2, 0,2") == (-2, 0, 2)
    with pytest.raises(InvalidInputError):
        parse_score("1/2,0")


def test_vectors_match_games():
    for rt, n in itertools.product("ABCD", range(1, 5)):
        g = build_complete_graph(rt, n)
        for game in g.games:
            assert tuple(g.vectors[game.id]) == game_vector(game, n)
        assert np.array_equal(g.vectors.sum(axis=0), np.array(standard_score(rt, n)))
