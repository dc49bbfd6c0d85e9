"""Hot inner loops, each with a numba and a pure-numpy implementation.

The numba path is used when numba imports cleanly and the environment
variable ``COXWALK_NO_NUMBA`` is unset (or ``0``).  Both paths are always
importable as ``<name>_numba`` / ``<name>_numpy`` so that tests and the
benchmark can compare them directly; ``<name>`` is the selected one.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("COXWALK_NO_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError("disabled by COXWALK_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

USING_NUMBA = HAVE_NUMBA


# ---------------------------------------------------------------------------
# Fiber enumeration
# ---------------------------------------------------------------------------

def subset_sums(vectors: np.ndarray) -> np.ndarray:
    """Row ``mask`` holds the sum of ``vectors[k]`` over the bits ``k`` of ``mask``."""
    m, n = vectors.shape
    dtype = np.int32 if m > 12 else np.int16
    out = np.zeros((1, n), dtype=dtype)
    for k in range(m):
        out = np.concatenate([out, out + vectors[k].astype(dtype)])
    return out


def score_table(vectors: np.ndarray) -> np.ndarray:
    """Half-unit scores of all ``2**m`` orientations, indexed by bit mask."""
    total = vectors.sum(axis=0)
    return 2 * subset_sums(vectors) - total.astype(np.int32)


def fiber_masks_numpy(vectors: np.ndarray, target: np.ndarray) -> np.ndarray:
    table = score_table(np.asarray(vectors, dtype=np.int64))
    hits = np.nonzero(np.all(table == np.asarray(target, dtype=table.dtype), axis=1))[0]
    return hits.astype(np.int64)


@njit(cache=True)
def _fiber_dfs(vectors, target):
    m, n = vectors.shape
    # reach[k, c]: largest |change| games k.. can still make in coordinate c
    reach = np.zeros((m + 1, n), dtype=np.int64)
    for k in range(m - 1, -1, -1):
        for c in range(n):
            reach[k, c] = reach[k + 1, c] + abs(vectors[k, c])
    out = np.empty(64, dtype=np.int64)
    count = 0
    partial = np.zeros(n, dtype=np.int64)
    # choice[k] in {-1 (unvisited), 0 (lost), 1 (won)}
    choice = np.full(m + 1, -1, dtype=np.int64)
    k = 0
    mask = np.int64(0)
    while k >= 0:
        if k == m:
            ok = True
            for c in range(n):
                if partial[c] != target[c]:
                    ok = False
                    break
            if ok:
                if count == out.shape[0]:
                    grown = np.empty(2 * count, dtype=np.int64)
                    grown[:count] = out
                    out = grown
                out[count] = mask
                count += 1
            k -= 1
            continue
        # undo the previous choice at depth k
        if choice[k] >= 0:
            sign = 2 * choice[k] - 1
            for c in range(n):
                partial[c] -= sign * vectors[k, c]
            if choice[k] == 1:
                mask ^= np.int64(1) << k
        if choice[k] == 1:
            choice[k] = -1
            k -= 1
            continue
        choice[k] += 1
        sign = 2 * choice[k] - 1
        for c in range(n):
            partial[c] += sign * vectors[k, c]
        if choice[k] == 1:
            mask |= np.int64(1) << k
        feasible = True
        for c in range(n):
            if abs(target[c] - partial[c]) > reach[k + 1, c]:
                feasible = False
                break
        if feasible:
            k += 1
            if k < m:
                choice[k] = -1
    res = out[:count].copy()
    res.sort()
    return res


def fiber_masks_numba(vectors: np.ndarray, target: np.ndarray) -> np.ndarray:
    v = np.ascontiguousarray(vectors, dtype=np.int64)
    if v.shape[0] == 0:
        return np.zeros(1, dtype=np.int64) if not np.any(target) else np.zeros(0, dtype=np.int64)
    return _fiber_dfs(v, np.ascontiguousarray(target, dtype=np.int64))


# ---------------------------------------------------------------------------
# Generator copies present in every tournament of a fiber
# ---------------------------------------------------------------------------

def neighbor_table_numpy(masks, slot_mask, slot_val):
    """For each tournament, the generator slots it contains and the reversed tournament index.

    Returns ``(counts, slots, targets)``: ``slots``/``targets`` are flat arrays
    grouped by tournament (row-major), ``counts[i]`` the group length.  A
    target of ``-1`` means the reversal leaves the fiber (cannot happen for
    neutral generators).
    """
    present = (masks[:, None] & slot_mask[None, :]) == slot_val[None, :]
    rows, cols = np.nonzero(present)
    flipped = masks[rows] ^ slot_mask[cols]
    pos = np.searchsorted(masks, flipped)
    pos = np.minimum(pos, len(masks) - 1)
    targets = np.where(masks[pos] == flipped, pos, -1)
    counts = present.sum(axis=1)
    return counts.astype(np.int64), cols.astype(np.int64), targets.astype(np.int64)


@njit(cache=True)
def _neighbor_table(masks, slot_mask, slot_val):
    f = masks.shape[0]
    s = slot_mask.shape[0]
    counts = np.zeros(f, dtype=np.int64)
    for i in range(f):
        for k in range(s):
            if masks[i] & slot_mask[k] == slot_val[k]:
                counts[i] += 1
    total = counts.sum()
    slots = np.empty(total, dtype=np.int64)
    targets = np.empty(total, dtype=np.int64)
    p = 0
    for i in range(f):
        for k in range(s):
            if masks[i] & slot_mask[k] == slot_val[k]:
                flipped = masks[i] ^ slot_mask[k]
                j = np.searchsorted(masks, flipped)
                slots[p] = k
                targets[p] = j if j < f and masks[j] == flipped else -1
                p += 1
    return counts, slots, targets


def neighbor_table_numba(masks, slot_mask, slot_val):
    return _neighbor_table(np.ascontiguousarray(masks, dtype=np.int64),
                           np.ascontiguousarray(slot_mask, dtype=np.int64),
                           np.ascontiguousarray(slot_val, dtype=np.int64))


# ---------------------------------------------------------------------------
# Smallest neutral subset of signed game vectors
# ---------------------------------------------------------------------------

def smallest_zero_subset_numpy(signed: np.ndarray) -> int:
    """Mask of a minimum-size non-empty subset of rows summing to zero (0 if none).

    Ties are broken by the smallest mask value.
    """
    k = signed.shape[0]
    if k == 0:
        return 0
    sums = subset_sums(signed)
    zero = np.nonzero(~np.any(sums, axis=1))[0][1:]
    if zero.size == 0:
        return 0
    pop = np.array([bin(int(z)).count("1") for z in zero])
    return int(zero[np.argmin(pop)])


@njit(cache=True)
def _smallest_zero_subset(signed):
    k, n = signed.shape
    acc = np.zeros(n, dtype=np.int64)
    for size in range(1, k + 1):
        mask = (np.int64(1) << size) - 1
        limit = np.int64(1) << k
        while mask < limit:
            for c in range(n):
                acc[c] = 0
            rest = mask
            idx = 0
            while rest:
                if rest & 1:
                    for c in range(n):
                        acc[c] += signed[idx, c]
                rest >>= 1
                idx += 1
            zero = True
            for c in range(n):
                if acc[c] != 0:
                    zero = False
                    break
            if zero:
                return mask
            # Gosper's hack: next mask with the same popcount
            low = mask & -mask
            ripple = mask + low
            mask = (((ripple ^ mask) >> 2) // low) | ripple
    return np.int64(0)


def smallest_zero_subset_numba(signed: np.ndarray) -> int:
    if signed.shape[0] == 0:
        return 0
    return int(_smallest_zero_subset(np.ascontiguousarray(signed, dtype=np.int64)))


# ---------------------------------------------------------------------------
# Lazy random walk on a regular slot table
# ---------------------------------------------------------------------------

def lazy_walk_numpy(targets: np.ndarray, start: int, coins: np.ndarray, picks: np.ndarray) -> np.ndarray:
    steps = coins.shape[0]
    traj = np.empty(steps + 1, dtype=np.int64)
    traj[0] = start
    if targets.shape[1] == 0:
        traj[:] = start
        return traj
    rows = targets.tolist()
    x = int(start)
    for t, (c, p) in enumerate(zip(coins.tolist(), picks.tolist()), 1):
        if c:
            x = rows[x][p]
        traj[t] = x
    return traj


@njit(cache=True)
def _lazy_walk(targets, start, coins, picks):
    steps = coins.shape[0]
    traj = np.empty(steps + 1, dtype=np.int64)
    traj[0] = start
    x = start
    for t in range(steps):
        if coins[t]:
            x = targets[x, picks[t]]
        traj[t + 1] = x
    return traj


def lazy_walk_numba(targets, start, coins, picks):
    if targets.shape[1] == 0:
        return np.full(coins.shape[0] + 1, start, dtype=np.int64)
    return _lazy_walk(np.ascontiguousarray(targets, dtype=np.int64), np.int64(start),
                      np.ascontiguousarray(coins, dtype=np.int64), np.ascontiguousarray(picks, dtype=np.int64))


if USING_NUMBA:
    fiber_masks = fiber_masks_numba
    neighbor_table = neighbor_table_numba
    smallest_zero_subset = smallest_zero_subset_numba
    lazy_walk = lazy_walk_numba
else:
    fiber_masks = fiber_masks_numpy
    neighbor_table = neighbor_table_numpy
    smallest_zero_subset = smallest_zero_subset_numpy
    lazy_walk = lazy_walk_numpy
