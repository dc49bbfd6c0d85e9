from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from coxwalk.dynamics import (C_MAX, QUARTER, WalkKernel, coupled_step, coupling_distribution, coupling_horizon,
                              edge_pairing_psi, exact_tv, exact_tv_curve, expected_coupled_weight, fiber_report,
                              mixing_time_exact, occupancy, predicted_weight, prepare_coupling, run_walk,
                              verify_all_couplings, walk_rng)
from coxwalk.errors import InvalidInputError
from coxwalk.interchange import all_fibers, build_interchange_graph


def test_walk_basics(fiber_graph):
    g = fiber_graph("C", 3, (0, 0, 0))
    k = WalkKernel(g)
    assert run_walk(k, 5, 0, seed=1).tolist() == [5]
    single = WalkKernel(fiber_graph("C", 3, (2, 4, 6)))
    assert set(run_walk(single, 0, 100, seed=1).tolist()) == {0}
    with pytest.raises(InvalidInputError):
        run_walk(k, 99, 10, seed=1)


def test_walk_is_reproducible(fiber_graph):
    k = WalkKernel(fiber_graph("C", 3, (-2, 0, 2)))
    a = run_walk(k, 0, 1000, seed=11)
    assert np.array_equal(a, run_walk(k, 0, 1000, seed=11))
    assert not np.array_equal(a, run_walk(k, 0, 1000, seed=11, chain=1))
    # every move follows an edge
    moves = a[1:] != a[:-1]
    assert all(k.graph.multiplicity(int(x), int(y)) for x, y in zip(a[:-1][moves], a[1:][moves]))


def test_step_law_weights_double_edges(fiber_graph):
    g = fiber_graph("C", 3, (0, 0, 0))
    law = WalkKernel(g).step_law(0)
    assert law[0] == Fraction(1, 2) and sum(law.values()) == 1
    for v, p in law.items():
        if v != 0:
            assert p == Fraction(g.multiplicity(0, v), 2 * g.degree)


def test_tv_curve_examples(fiber_graph):
    k = WalkKernel(fiber_graph("C", 3, (0, 0, 0)))
    curve = exact_tv_curve(k, 30, spot_every=3)
    assert curve.taus[0] == pytest.approx(1 - 1 / 16)
    assert curve.monotone() and curve.taus[-1] < 0.25
    assert curve.max_spot_error < 1e-12
    assert exact_tv(k, 0, 0) == Fraction(15, 16)
    single = WalkKernel(fiber_graph("C", 3, (2, 4, 6)))
    assert not exact_tv_curve(single, 5).taus.any()


@pytest.mark.parametrize("s,t_mix", [((0, 0, 0), 5), ((-2, 0, 2), 6), ((4, 2, 2), 4), ((2, 4, 6), 0)])
def test_golden_mixing_times(fiber_graph, s, t_mix):
    k = WalkKernel(fiber_graph("C", 3, s))
    res = mixing_time_exact(k)
    assert res.t_mix == t_mix
    if t_mix:
        assert max(exact_tv(k, x, t_mix) for x in range(k.n_states)) <= QUARTER
        assert max(exact_tv(k, x, t_mix - 1) for x in range(k.n_states)) > QUARTER


def test_mixing_blocks_agree(fiber_graph):
    from coxwalk.dynamics import _tv_rows
    k = WalkKernel(fiber_graph("C", 3, (0, 0, 0)))
    assert np.allclose(_tv_rows(k, 12), _tv_rows(k, 12, block=5))


def test_coupling_horizon():
    assert coupling_horizon(4, Fraction(1, 4), 0) == 0
    assert coupling_horizon(4, Fraction(1, 4), Fraction(3)) == 9
    assert coupling_horizon(4, 1, 5) == 1


def test_bd_pairing_fixes_connecting_edge(fiber_graph):
    g = fiber_graph("D", 4, (0, 0, 0, 0))
    ctx = prepare_coupling(g)
    for u, v, _, _ in g.edges()[:40]:
        p = edge_pairing_psi(ctx, u, v)
        assert p.case == "BD" and len(p.fixed) == 1
        assert sorted(p.psi) == list(range(g.degree))
        law = coupling_distribution(ctx, p)
        coalesce = sum(q for (x, y), q in law.items() if x == y)
        assert coalesce == Fraction(1, g.degree)
        assert expected_coupled_weight(ctx, p) == 1 - Fraction(1, g.degree)


def test_case_1b_on_snare_drum(fiber_graph):
    g = fiber_graph("C", 3, (-2, 0, 2))
    ctx = prepare_coupling(g)
    assert ctx.gamma == 1
    seen = Counter()
    for c in verify_all_couplings(ctx):
        assert c.ok
        seen[c.case] += 1
        if c.case == "1b":
            p = edge_pairing_psi(ctx, c.u, c.v)
            k = ctx.crystals_of(c.u, c.v)[0]
            for s in range(g.degree):
                x, y = int(g.targets[c.u, s]), int(g.targets[c.v, p.psi[s]])
                if k in ctx.crystals_of(c.u, x) and g.multiplicity(c.u, x) == 1:
                    assert g.multiplicity(c.v, y) == 2
            law = coupling_distribution(ctx, p)
            doubles = sum(q for (x, y), q in law.items() if x != y and g.multiplicity(x, y) == 2)
            assert doubles == Fraction(2, g.degree)
            w = 1 + Fraction(1, ctx.gamma)
            assert c.expected == (1 - Fraction(2, g.degree * (1 + ctx.gamma))) * w
        if c.case == "2":
            law = coupling_distribution(ctx, edge_pairing_psi(ctx, c.u, c.v))
            assert sum(q for (x, y), q in law.items() if x == y) == Fraction(2, g.degree)
            if c.gamma_prime == ctx.gamma:
                assert c.expected == 1 - Fraction(1, g.degree)
    assert seen["1b"] and seen["2"]


def test_predicted_weights():
    assert predicted_weight("BD", 4, 0, 0, Fraction(1)) == Fraction(3, 4)
    assert predicted_weight("1b", 6, 1, 0, Fraction(2)) == (1 - Fraction(2, 12)) * 2
    assert predicted_weight("2", 6, 2, 1, Fraction(1)) == 1 - Fraction(3, 12)


def test_coupled_step_matches_exact_law(fiber_graph):
    g = fiber_graph("C", 3, (-2, 0, 2))
    ctx = prepare_coupling(g)
    u, v, _, _ = g.edges()[0]
    p = edge_pairing_psi(ctx, u, v)
    law = coupling_distribution(ctx, p)
    rng = walk_rng(4)
    draws = Counter(coupled_step(ctx, p, rng) for _ in range(20000))
    for pair, q in law.items():
        assert abs(draws[pair] / 20000 - float(q)) < 0.02
    assert set(draws) <= set(law)


@pytest.mark.parametrize("rt", "BCD")
def test_fiber_reports_n3(rt):
    for f in all_fibers(rt, 3):
        rep = fiber_report(build_interchange_graph(f))
        assert rep.monotone
        if rep.d:
            assert rep.t_mix <= rep.coupling_bound
        assert rep.ratio <= C_MAX


def test_occupancy_counts():
    assert occupancy(np.array([0, 1, 1, 3]), 5).tolist() == [1, 2, 0, 1, 0]
