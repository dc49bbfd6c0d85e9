import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coxwalk.errors import InvalidInputError, NotNeutralError
from coxwalk.generators import TemplateKind, apply_generator_reversal, generator_slots
from coxwalk.signed import GameKind, Tournament, build_complete_graph, is_neutral
from coxwalk.verify import check_reversals
from coxwalk.zframe import (ZEdge, build_zframe, decompose_neutral_trails, irreducible_components,
                            irreducible_neutral_sets, is_irreducible, reverse_neutral_subtournament)


def _slot(rt, n, kind, players=None):
    for c in generator_slots(rt, n):
        if c.template.kind is kind and (players is None or c.players == players):
            return c
    raise LookupError(kind)


def test_negative_game_frame():
    g = build_complete_graph("D", 2)
    neg = g.game_id(GameKind.NEGATIVE, 2, 1)
    f = build_zframe(g, 1 << neg, [neg])
    assert set(f.edges) == {ZEdge(2, neg, 1), ZEdge(1, neg, -1)}
    assert "p2 -> m0" in f.to_dot() and "m0 -> p1" in f.to_dot()


def test_loop_frame_and_empty_frame():
    g = build_complete_graph("C", 2)
    loop = g.game_id(GameKind.LOOP, 1)
    f = build_zframe(g, 1 << loop, [loop])
    assert f.edges == (ZEdge(1, loop, 1), ZEdge(1, loop, 1))
    assert build_zframe(g, 0, []).edges == ()


def test_clover_is_one_closed_trail_of_length_three():
    c = _slot("C", 3, TemplateKind.NEUTRAL_CLOVER)
    g = build_complete_graph("C", 3)
    (trail,) = decompose_neutral_trails(build_zframe(g, c.bits, c.game_ids))
    assert trail.closed and trail.length == 3


def test_two_disjoint_triangles_give_two_closed_trails():
    g = build_complete_graph("A", 6)
    a = _slot("A", 6, TemplateKind.CYCLIC_TRIANGLE, (1, 2, 3))
    b = _slot("A", 6, TemplateKind.CYCLIC_TRIANGLE, (4, 5, 6))
    frame = build_zframe(g, a.bits | b.bits, a.game_ids + b.game_ids)
    trails = decompose_neutral_trails(frame)
    assert len(trails) == 2 and all(t.closed and t.length == 3 for t in trails)
    assert not is_irreducible(frame)


def test_neutral_pair_is_open_trail_ending_at_half_edges():
    g = build_complete_graph("B", 3)
    c = _slot("B", 3, TemplateKind.NEUTRAL_PAIR)
    (trail,) = decompose_neutral_trails(build_zframe(g, c.bits, c.game_ids))
    assert not trail.closed and trail.length == 3
    assert {g.games[m].kind for m in trail.final_matches} == {GameKind.HALF}


def test_non_neutral_rejected():
    g = build_complete_graph("D", 2)
    with pytest.raises(NotNeutralError) as err:
        decompose_neutral_trails(build_zframe(g, 1, [0]))
    assert err.value.player in (1, 2)


@pytest.mark.parametrize("rt", "BCD")
def test_every_generator_is_irreducible(rt):
    g = build_complete_graph(rt, 3)
    for c in generator_slots(rt, 3):
        assert is_irreducible(build_zframe(g, c.bits, c.game_ids))


def test_four_regular_d_frame_is_reducible():
    # every game of K_{D_3} present: each player has degree 4
    g = build_complete_graph("D", 3)
    for w in range(1 << g.m):
        if is_neutral(g, w, g.full_mask):
            frame = build_zframe(g, w)
            assert set(frame.degrees) == {4}
            assert not is_irreducible(frame)


@pytest.mark.parametrize("rt,n", [(rt, n) for rt in "ABCD" for n in (2, 3)])
def test_irreducible_sets_are_single_trails(rt, n):
    g = build_complete_graph(rt, n)
    for w, mask in irreducible_neutral_sets(g):
        frame = build_zframe(g, w, [k for k in range(g.m) if (mask >> k) & 1])
        assert len(decompose_neutral_trails(frame)) == 1
        assert set(frame.degrees) <= {0, 2, 4}
        assert is_irreducible(frame, use_degree_filter=False)


def _neutral_masks(g, w):
    # all neutral game subsets of orientation w, via subset sums
    from coxwalk import _kernels
    signed = np.where(((w >> np.arange(g.m)) & 1)[:, None] == 1, g.vectors, -g.vectors)
    return np.nonzero(~np.any(_kernels.subset_sums(signed), axis=1))[0][1:]


@pytest.mark.parametrize("rt", "BCD")
@given(data=st.data())
@settings(max_examples=60, deadline=None)
def test_trails_partition_neutral_frames(rt, data):
    g = build_complete_graph(rt, 4)
    w = data.draw(st.integers(0, g.full_mask))
    masks = _neutral_masks(g, w)
    if masks.size == 0:
        return
    mask = int(data.draw(st.sampled_from(masks.tolist())))
    frame = build_zframe(g, w, [k for k in range(g.m) if (mask >> k) & 1])
    trails = decompose_neutral_trails(frame)
    used = [e for t in trails for e in t.edges]
    assert sorted(used) == list(range(len(frame.edges)))
    finals = [m for t in trails for m in t.final_matches]
    assert len(finals) == len(set(finals))
    for t in trails:
        net = [0] * g.n
        for e in t.edges:
            net[frame.edges[e].player - 1] += frame.edges[e].charge
        assert not any(net)


@pytest.mark.parametrize("rt", "BCD")
@given(data=st.data())
@settings(max_examples=60, deadline=None)
def test_reversal_flips_exactly_the_set(rt, data):
    g = build_complete_graph(rt, 4)
    w = data.draw(st.integers(0, g.full_mask))
    masks = _neutral_masks(g, w)
    if masks.size == 0:
        return
    mask = int(data.draw(st.sampled_from(masks.tolist())))
    _, failures = check_reversals(Tournament(g, w), mask)
    assert failures == []


def test_single_triangle_reverses_in_one_step():
    g = build_complete_graph("D", 4)
    c = _slot("D", 4, TemplateKind.CYCLIC_TRIANGLE)
    moves = reverse_neutral_subtournament(Tournament(g, c.bits), c.game_ids)
    assert moves == [c]


@pytest.mark.parametrize("rt", "BCD")
def test_irreducible_sets_on_three_players_take_ell_minus_two(rt):
    g = build_complete_graph(rt, 3)
    for w, mask in irreducible_neutral_sets(g):
        ell = bin(mask).count("1")
        moves = reverse_neutral_subtournament(Tournament(g, w), [k for k in range(g.m) if (mask >> k) & 1])
        assert len(moves) == ell - 2
        t = Tournament(g, w)
        for c in moves:
            t = apply_generator_reversal(t, c)
        assert t.w == w ^ mask


def test_components_partition_the_set():
    g = build_complete_graph("C", 4)
    rng = np.random.default_rng(5)
    for _ in range(50):
        w = int(rng.integers(0, g.full_mask + 1))
        masks = _neutral_masks(g, w)
        mask = int(masks[rng.integers(masks.size)]) if masks.size else 0
        if not mask:
            continue
        parts = irreducible_components(g, w, mask)
        assert sum(parts) == mask and all(a & b == 0 for a in parts for b in parts if a is not b)


def test_short_sets_rejected():
    g = build_complete_graph("C", 3)
    with pytest.raises(InvalidInputError):
        reverse_neutral_subtournament(Tournament(g, 0), [0, 1])
    with pytest.raises(NotNeutralError):
        reverse_neutral_subtournament(Tournament(g, 0), [0, 1, 2])
