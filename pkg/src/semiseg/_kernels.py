"""Compiled forward passes and backtracks for the semi-Markov decoders.

Both decoders are written as plain loops so that their measured cost tracks
the operation counts O(TDC^2) and O(KTC^2) directly. Every kernel takes the
transposed transition matrix ``AT[c, c_prev]`` with its diagonal already set
to ``-inf``, so strictness needs no branch in the inner loop.
"""
import numba
import numpy as np

STAY = -1
START = -2
NEG_INF = -np.inf


@numba.njit(cache=True)
def _unary(run, d, cls, use_mean, prior, w1, w2):
    u = run / d if use_mean else run
    return u + prior[cls] + w1 * d + w2 * d * d


@numba.njit(cache=True)
def segviterbi_forward(S, AT, prior, max_dur, use_mean, w1, w2):
    """V[e, c]: best score of frames [0, e) whose last segment has class c."""
    T, C = S.shape
    V = np.full((T + 1, C), NEG_INF)
    best_dur = np.zeros((T + 1, C), dtype=np.int64)
    best_prev = np.full((T + 1, C), START, dtype=np.int64)
    for e in range(1, T + 1):
        dmax = min(max_dur, e)
        for c in range(C):
            row = AT[c]
            best = NEG_INF
            bd = 0
            bp = START
            run = 0.0
            for d in range(1, dmax + 1):
                start = e - d
                run += S[start, c]
                f = _unary(run, d, c, use_mean, prior, w1, w2)
                if start == 0:
                    if f > best:
                        best = f
                        bd = d
                        bp = START
                    continue
                prev = V[start]
                for cp in range(C):
                    cand = prev[cp] + row[cp] + f
                    if cand > best:
                        best = cand
                        bd = d
                        bp = cp
            V[e, c] = best
            best_dur[e, c] = bd
            best_prev[e, c] = bp
    return V, best_dur, best_prev


@numba.njit(cache=True)
def segviterbi_backtrack(best_dur, best_prev, c):
    """Return (labels, starts) of the segments, first to last."""
    T = best_dur.shape[0] - 1
    labels = np.empty(T, dtype=np.int64)
    starts = np.empty(T, dtype=np.int64)
    n = 0
    e = T
    while e > 0:
        d = best_dur[e, c]
        labels[n] = c
        starts[n] = e - d
        n += 1
        c = best_prev[e, c]
        e -= d
    return labels[:n][::-1].copy(), starts[:n][::-1].copy()


@numba.njit(cache=True)
def constrained_forward(S, AT, K):
    """Stay-or-switch forward pass for frame-decomposable segment scores.

    V[k, t, c] is the best score for frames [0, t] with exactly k + 1
    segments, the last of class c. Cells with t < k stay unreachable.
    """
    T, C = S.shape
    V = np.full((K, T, C), NEG_INF)
    bp = np.full((K, T, C), STAY, dtype=np.int64)
    for c in range(C):
        V[0, 0, c] = S[0, c]
        bp[0, 0, c] = START
    for t in range(1, T):
        for c in range(C):
            V[0, t, c] = V[0, t - 1, c] + S[t, c]
    for k in range(1, K):
        for t in range(k, T):
            prev = V[k - 1, t - 1]
            for c in range(C):
                row = AT[c]
                best = V[k, t - 1, c]
                arg = STAY
                for cp in range(C):
                    cand = prev[cp] + row[cp]
                    if cand > best:
                        best = cand
                        arg = cp
                V[k, t, c] = best + S[t, c]
                bp[k, t, c] = arg
    return V, bp


@numba.njit(cache=True)
def constrained_backtrack(bp, k, c):
    T = bp.shape[1]
    labels = np.empty(k + 1, dtype=np.int64)
    starts = np.empty(k + 1, dtype=np.int64)
    n = 0
    labels[0] = c
    for t in range(T - 1, 0, -1):
        p = bp[k, t, c]
        if p != STAY:
            starts[n] = t
            n += 1
            labels[n] = p
            k -= 1
            c = p
    starts[n] = 0
    return labels[: n + 1][::-1].copy(), starts[: n + 1][::-1].copy()


@numba.njit(cache=True)
def constrained_segment_end_forward(S, AT, prior, K, use_mean, w1, w2):
    """Exact (k, t, c) recursion where segment k ends exactly at frame t.

    Needed whenever the segment score is not a sum of per-frame terms
    (mean scores, quadratic durations).
    """
    T, C = S.shape
    V = np.full((K, T, C), NEG_INF)
    bp = np.full((K, T, C), START, dtype=np.int64)
    starts = np.zeros((K, T, C), dtype=np.int64)
    # incoming[c, s]: best score with k segments over [0, s), then a switch into c
    incoming = np.full((C, T), NEG_INF)
    incoming_arg = np.full((C, T), START, dtype=np.int64)
    for c in range(C):
        run = 0.0
        for e in range(T):
            run += S[e, c]
            V[0, e, c] = _unary(run, e + 1, c, use_mean, prior, w1, w2)
    for k in range(1, K):
        for s in range(k, T):
            prev = V[k - 1, s - 1]
            for c in range(C):
                row = AT[c]
                best = NEG_INF
                arg = START
                for cp in range(C):
                    cand = prev[cp] + row[cp]
                    if cand > best:
                        best = cand
                        arg = cp
                incoming[c, s] = best
                incoming_arg[c, s] = arg
        for e in range(k, T):
            for c in range(C):
                best = NEG_INF
                bs = e
                arg = START
                run = 0.0
                for s in range(e, k - 1, -1):
                    run += S[s, c]
                    inc = incoming[c, s]
                    if inc == NEG_INF:
                        continue
                    cand = inc + _unary(run, e - s + 1, c, use_mean, prior, w1, w2)
                    if cand > best:
                        best = cand
                        bs = s
                        arg = incoming_arg[c, s]
                V[k, e, c] = best
                starts[k, e, c] = bs
                bp[k, e, c] = arg
    return V, bp, starts


@numba.njit(cache=True)
def segment_end_backtrack(bp, starts, k, c):
    T = bp.shape[1]
    labels = np.empty(k + 1, dtype=np.int64)
    seg_starts = np.empty(k + 1, dtype=np.int64)
    e = T - 1
    n = 0
    while k >= 0:
        s = starts[k, e, c]
        labels[n] = c
        seg_starts[n] = s
        n += 1
        c = bp[k, e, c]
        e = s - 1
        k -= 1
    return labels[::-1].copy(), seg_starts[::-1].copy()
