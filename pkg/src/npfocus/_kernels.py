"""Compiled kernels for the Bernoulli detector recursion.

One implementation of the per-side prune/insert/evaluate cycle serves every
execution path: the streaming classes step through `bank_step_*`, and the batch
drivers (`bank_run_*`, `bits_run_*`) loop over whole sequences without leaving
compiled code. Keeping a single source of truth makes streaming and batch
results bit-identical.

State layout per detector bank (M detectors, 2 sides, capacity C):
  ins_t[M, 2, C]    stream time at piece insertion (so tau of a piece is ins_t)
  ins_ones[M, 2, C] side-local ones count at insertion
  k[M, 2]           number of stored pieces, trailing zero piece included
  ones[M, 2]        side-local ones so far (down side counts inverted bits)
A piece's counts are implicit: a = ones - ins_ones, b = (n - ins_t) - a, which
keeps the per-observation update O(pruned) with exact integer state.

The down side of each detector runs the up-side logic on inverted bits with the
complementary null rate, which is an exact reformulation.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_F = {"cache": True, "nogil": True}


@njit(**_F)
def _side_prune_insert(ins_t, ins_ones, k, n, ones, theta0):
    """Prune newest-backward, then append the fresh zero piece. Returns (k, comparisons).

    A piece is pruned while its success ratio is <= max(theta0, predecessor's
    ratio); ties prune. Piece-vs-piece uses exact integer cross-multiplication;
    the theta0 bound uses the same float division the reference filter uses.
    """
    comps = 0
    while k > 0:
        a = ones - ins_ones[k - 1]
        m = n - ins_t[k - 1]
        comps += 1
        if k > 1:
            ap = ones - ins_ones[k - 2]
            mp = n - ins_t[k - 2]
            if a * mp <= ap * m or a / m <= theta0:
                k -= 1
                continue
        else:
            if a / m <= theta0:
                k -= 1
                continue
        break
    ins_t[k] = n
    ins_ones[k] = ones
    return k + 1, comps


@njit(**_F)
def _side_best(ins_t, ins_ones, k, n, ones, theta0):
    """Max piece value on one side and its tau; ties go to the largest tau.

    A piece evaluates at theta_hat = a/(a+b) clamped to [theta0, 1]; clamped-to-
    theta0 pieces and the zero piece are worth exactly 0.
    """
    best = 0.0
    best_tau = n  # the zero piece's candidate time
    for i in range(k):
        a = ones - ins_ones[i]
        m = n - ins_t[i]
        v = 0.0
        if m > 0 and a > 0:
            theta = a / m
            if theta > theta0:
                if a == m:
                    v = -2.0 * a * np.log(theta0)
                else:
                    b = m - a
                    v = 2.0 * (a * np.log(theta / theta0) + b * np.log((1.0 - theta) / (1.0 - theta0)))
        if v >= best:
            best = v
            best_tau = ins_t[i] if v > 0.0 else n
    return best, best_tau


@njit(**_F)
def _saturated2(s, m):
    """Twice the saturated Bernoulli log-likelihood of a segment with s ones of m."""
    if m <= 0:
        return 0.0
    v = 0.0
    if s > 0:
        v += s * np.log(s / m)
    if m - s > 0:
        v += (m - s) * np.log((m - s) / m)
    return 2.0 * v


@njit(**_F)
def _uside_prune_insert(ins_t, ins_ones, ins_c, k, n, ones, c_now):
    """Prune/insert for the null-rate-free variant (theta0 -> 0 limit of the bound)."""
    comps = 0
    while k > 0:
        a = ones - ins_ones[k - 1]
        m = n - ins_t[k - 1]
        comps += 1
        if k > 1:
            ap = ones - ins_ones[k - 2]
            mp = n - ins_t[k - 2]
            if a * mp <= ap * m:
                k -= 1
                continue
        else:
            if a == 0:
                k -= 1
                continue
        break
    ins_t[k] = n
    ins_ones[k] = ones
    ins_c[k] = c_now
    return k + 1, comps


@njit(**_F)
def _uside_best(ins_t, ins_ones, ins_c, k, n, ones, c_now):
    """Max piece value on one side in the null-rate-free variant, with its tau.

    A piece is worth offset + saturated-fit of its own counts, minus the
    current whole-prefix saturated fit; the piece inserted this step is worth
    exactly 0, so the side max is never negative.
    """
    best = -np.inf
    best_tau = n
    for i in range(k):
        a = ones - ins_ones[i]
        m = n - ins_t[i]
        v = ins_c[i] + _saturated2(a, m) - c_now
        if v >= best:
            best = v
            best_tau = ins_t[i]
    return best, best_tau


@njit(**_F)
def bank_step_known(ins_t, ins_ones, k, ones, theta0, n, xbits, stats):
    """Advance all M known-rate detectors by one already-binarized observation.

    n must already be incremented to the new stream length. Returns
    (sum_stat, max_stat, argmax_m); per-detector stats written into stats.
    """
    mcount = k.shape[0]
    ssum = 0.0
    smax = -1.0
    arg = 0
    for m in range(mcount):
        stat_m = 0.0
        for side in range(2):
            bit = xbits[m] if side == 0 else 1 - xbits[m]
            ones[m, side] += bit
            kk, _ = _side_prune_insert(ins_t[m, side], ins_ones[m, side], k[m, side], n, ones[m, side], theta0[m, side])
            k[m, side] = kk
            v, _ = _side_best(ins_t[m, side], ins_ones[m, side], kk, n, ones[m, side], theta0[m, side])
            if v > stat_m:
                stat_m = v
        stats[m] = stat_m
        ssum += stat_m
        if stat_m > smax:
            smax = stat_m
            arg = m
    return ssum, smax, arg


@njit(**_F)
def bank_step_unknown(ins_t, ins_ones, ins_c, k, ones, n, xbits, stats):
    """Advance all M null-rate-free detectors by one binarized observation."""
    mcount = k.shape[0]
    ssum = 0.0
    smax = -1.0
    arg = 0
    for m in range(mcount):
        ones_up = ones[m, 0] + xbits[m]
        c_now = _saturated2(ones_up, n)
        stat_m = 0.0
        for side in range(2):
            bit = xbits[m] if side == 0 else 1 - xbits[m]
            ones[m, side] += bit
            kk, _ = _uside_prune_insert(
                ins_t[m, side], ins_ones[m, side], ins_c[m, side], k[m, side], n, ones[m, side], c_now
            )
            k[m, side] = kk
            v, _ = _uside_best(ins_t[m, side], ins_ones[m, side], ins_c[m, side], kk, n, ones[m, side], c_now)
            if v > stat_m:
                stat_m = v
        stats[m] = stat_m
        ssum += stat_m
        if stat_m > smax:
            smax = stat_m
            arg = m
    return ssum, smax, arg


@njit(**_F)
def detector_best_known(ins_t, ins_ones, k, ones, theta0, n, m):
    """Best (value, tau) across both sides of detector m; ties toward larger tau."""
    v_up, t_up = _side_best(ins_t[m, 0], ins_ones[m, 0], k[m, 0], n, ones[m, 0], theta0[m, 0])
    v_dn, t_dn = _side_best(ins_t[m, 1], ins_ones[m, 1], k[m, 1], n, ones[m, 1], theta0[m, 1])
    if v_up > v_dn or (v_up == v_dn and t_up >= t_dn):
        return v_up, t_up
    return v_dn, t_dn


@njit(**_F)
def detector_best_unknown(ins_t, ins_ones, ins_c, k, ones, n, m):
    """Null-rate-free counterpart of detector_best_known."""
    c_now = _saturated2(ones[m, 0], n)
    v_up, t_up = _uside_best(ins_t[m, 0], ins_ones[m, 0], ins_c[m, 0], k[m, 0], n, ones[m, 0], c_now)
    v_dn, t_dn = _uside_best(ins_t[m, 1], ins_ones[m, 1], ins_c[m, 1], k[m, 1], n, ones[m, 1], c_now)
    if v_up > v_dn or (v_up == v_dn and t_up >= t_dn):
        return v_up, t_up
    return v_dn, t_dn


@njit(**_F)
def _grow3(arr):
    """Double the capacity (last axis) of a (M, 2, C) state array."""
    m, two, cap = arr.shape
    out = np.zeros((m, two, 2 * cap), dtype=arr.dtype)
    out[:, :, :cap] = arr
    return out


@njit(**_F)
def bank_run_known(ys, values, theta0, xi_sum, xi_max, sums, maxs):
    """Run the full known-rate pipeline over a sequence, stopping at the first trigger.

    Binarizes each y against the grid values, steps all detectors, and records
    per-step aggregates into sums/maxs (entries past a trigger stay 0).
    Returns (stop_t, argmax_m, tau_local) with stop_t = 0 when no trigger
    fires; tau_local is the change-time estimate of the max-achieving detector
    at the trigger. Thresholds of +inf never fire.
    """
    mcount = values.shape[0]
    cap = 64
    ins_t = np.zeros((mcount, 2, cap), dtype=np.int64)
    ins_ones = np.zeros((mcount, 2, cap), dtype=np.int64)
    k = np.ones((mcount, 2), dtype=np.int64)
    ones = np.zeros((mcount, 2), dtype=np.int64)
    xbits = np.empty(mcount, dtype=np.int64)
    stats = np.empty(mcount)
    n = 0
    for t in range(ys.shape[0]):
        y = ys[t]
        for m in range(mcount):
            xbits[m] = 1 if y <= values[m] else 0
        n += 1
        if np.max(k) + 1 >= cap:
            ins_t = _grow3(ins_t)
            ins_ones = _grow3(ins_ones)
            cap *= 2
        ssum, smax, arg = bank_step_known(ins_t, ins_ones, k, ones, theta0, n, xbits, stats)
        sums[t] = ssum
        maxs[t] = smax
        if ssum >= xi_sum or smax >= xi_max:
            _, tau = detector_best_known(ins_t, ins_ones, k, ones, theta0, n, arg)
            return t + 1, arg, tau
    return 0, -1, -1


@njit(**_F)
def bank_run_unknown(ys, values, xi_sum, xi_max, sums, maxs):
    """Null-rate-free counterpart of bank_run_known."""
    mcount = values.shape[0]
    cap = 64
    ins_t = np.zeros((mcount, 2, cap), dtype=np.int64)
    ins_ones = np.zeros((mcount, 2, cap), dtype=np.int64)
    ins_c = np.zeros((mcount, 2, cap))
    k = np.ones((mcount, 2), dtype=np.int64)
    ones = np.zeros((mcount, 2), dtype=np.int64)
    xbits = np.empty(mcount, dtype=np.int64)
    stats = np.empty(mcount)
    n = 0
    for t in range(ys.shape[0]):
        y = ys[t]
        for m in range(mcount):
            xbits[m] = 1 if y <= values[m] else 0
        n += 1
        if np.max(k) + 1 >= cap:
            ins_t = _grow3(ins_t)
            ins_ones = _grow3(ins_ones)
            ins_c = _grow3(ins_c)
            cap *= 2
        ssum, smax, arg = bank_step_unknown(ins_t, ins_ones, ins_c, k, ones, n, xbits, stats)
        sums[t] = ssum
        maxs[t] = smax
        if ssum >= xi_sum or smax >= xi_max:
            _, tau = detector_best_unknown(ins_t, ins_ones, ins_c, k, ones, n, arg)
            return t + 1, arg, tau
    return 0, -1, -1


@njit(**_F)
def bits_run_known(bits, theta0, stats_out):
    """Single known-rate detector over a bit stream; per-step stats written to stats_out."""
    cap = 64
    ins_t = np.zeros((1, 2, cap), dtype=np.int64)
    ins_ones = np.zeros((1, 2, cap), dtype=np.int64)
    k = np.ones((1, 2), dtype=np.int64)
    ones = np.zeros((1, 2), dtype=np.int64)
    th = np.empty((1, 2))
    th[0, 0] = theta0
    th[0, 1] = 1.0 - theta0
    xbits = np.empty(1, dtype=np.int64)
    stats = np.empty(1)
    n = 0
    for t in range(bits.shape[0]):
        xbits[0] = bits[t]
        n += 1
        if np.max(k) + 1 >= cap:
            ins_t = _grow3(ins_t)
            ins_ones = _grow3(ins_ones)
            cap *= 2
        _, smax, _ = bank_step_known(ins_t, ins_ones, k, ones, th, n, xbits, stats)
        stats_out[t] = smax


@njit(**_F)
def bits_run_unknown(bits, stats_out):
    """Single null-rate-free detector over a bit stream; per-step stats to stats_out."""
    cap = 64
    ins_t = np.zeros((1, 2, cap), dtype=np.int64)
    ins_ones = np.zeros((1, 2, cap), dtype=np.int64)
    ins_c = np.zeros((1, 2, cap))
    k = np.ones((1, 2), dtype=np.int64)
    ones = np.zeros((1, 2), dtype=np.int64)
    xbits = np.empty(1, dtype=np.int64)
    stats = np.empty(1)
    n = 0
    for t in range(bits.shape[0]):
        xbits[0] = bits[t]
        n += 1
        if np.max(k) + 1 >= cap:
            ins_t = _grow3(ins_t)
            ins_ones = _grow3(ins_ones)
            ins_c = _grow3(ins_c)
            cap *= 2
        _, smax, _ = bank_step_unknown(ins_t, ins_ones, ins_c, k, ones, n, xbits, stats)
        stats_out[t] = smax


@njit(**_F)
def bits_run_known_counters(bits, theta0):
    """Instrumented single-detector run: returns (final up-side piece count excluding
    the zero piece, cumulative up-side prune comparisons, cumulative down-side comparisons)."""
    cap = 64
    ins_t = np.zeros((2, cap), dtype=np.int64)
    ins_ones = np.zeros((2, cap), dtype=np.int64)
    k = np.ones(2, dtype=np.int64)
    ones = np.zeros(2, dtype=np.int64)
    th0 = np.empty(2)
    th0[0] = theta0
    th0[1] = 1.0 - theta0
    comps = np.zeros(2, dtype=np.int64)
    n = 0
    for t in range(bits.shape[0]):
        n += 1
        if max(k[0], k[1]) + 1 >= cap:
            new_t = np.zeros((2, 2 * cap), dtype=np.int64)
            new_o = np.zeros((2, 2 * cap), dtype=np.int64)
            new_t[:, :cap] = ins_t
            new_o[:, :cap] = ins_ones
            ins_t = new_t
            ins_ones = new_o
            cap *= 2
        for side in range(2):
            bit = bits[t] if side == 0 else 1 - bits[t]
            ones[side] += bit
            kk, c = _side_prune_insert(ins_t[side], ins_ones[side], k[side], n, ones[side], th0[side])
            k[side] = kk
            comps[side] += c
    return k[0] - 1, comps[0], comps[1]
