import os
import subprocess
import sys

import numpy as np
import pytest

from coxwalk import _kernels as K
from coxwalk.generators import slot_arrays
from coxwalk.interchange import build_interchange_graph, enumerate_fiber
from coxwalk.signed import build_complete_graph

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba unavailable")


@needs_numba
@pytest.mark.parametrize("rt,n,s", [("C", 3, (0, 0, 0)), ("B", 4, (1, 1, 1, 1)), ("D", 4, (0, 0, 0, 0)),
                                    ("C", 2, (0, 4)), ("A", 5, (0, 0, 0, 0, 0))])
def test_fiber_masks_agree(rt, n, s):
    g = build_complete_graph(rt, n)
    a = K.fiber_masks_numpy(g.vectors, np.array(s))
    b = K.fiber_masks_numba(g.vectors, np.array(s))
    assert np.array_equal(a, b)


@needs_numba
def test_neighbor_table_agree():
    g = build_complete_graph("C", 3)
    masks = K.fiber_masks_numpy(g.vectors, np.array([-2, 0, 2]))
    smask, sval, _ = slot_arrays("C", 3)
    for x, y in zip(K.neighbor_table_numpy(masks, smask, sval), K.neighbor_table_numba(masks, smask, sval)):
        assert np.array_equal(x, y)


@needs_numba
def test_smallest_zero_subset_agree():
    rng = np.random.default_rng(7)
    for _ in range(200):
        rows = rng.integers(-2, 3, size=(rng.integers(1, 9), 4))
        assert K.smallest_zero_subset_numpy(rows) == K.smallest_zero_subset_numba(rows)


@needs_numba
def test_lazy_walk_agree():
    g = build_interchange_graph(enumerate_fiber("C", 3, (0, 0, 0)))
    rng = np.random.default_rng(1)
    coins = rng.integers(0, 2, 5000)
    picks = rng.integers(0, g.degree, 5000)
    assert np.array_equal(K.lazy_walk_numpy(g.targets, 3, coins, picks), K.lazy_walk_numba(g.targets, 3, coins, picks))


def test_empty_subset_sum_is_zero():
    assert K.smallest_zero_subset(np.zeros((0, 3), dtype=np.int64)) == 0
    assert K.smallest_zero_subset(np.array([[1, 0], [0, 1]])) == 0
    assert K.smallest_zero_subset(np.array([[1, 0], [0, 1], [-1, 0]])) == 0b101


def test_env_flag_selects_numpy():
    code = ("from coxwalk import _kernels as K; from coxwalk.interchange import enumerate_fiber;"
            "print(K.USING_NUMBA, len(enumerate_fiber('C', 3, (0, 0, 0))))")
    env = {**os.environ, "COXWALK_NO_NUMBA": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "16"]
