"""Numba-compiled implementations of the inference kernels.

Contracts match numpy_backend exactly; see that module for parameter docs.
"""

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def exact_marginals(unary, esrc, edst, pair, pair_idx):
    n, c = unary.shape
    m = esrc.shape[0]
    total = 1
    for _ in range(n):
        total *= c
    digits = np.zeros(n, dtype=np.int64)
    best = -np.inf
    for a in range(total):
        rem = a
        for i in range(n - 1, -1, -1):
            digits[i] = rem % c
            rem //= c
        logp = 0.0
        for i in range(n):
            logp += unary[i, digits[i]]
        for e in range(m):
            logp += pair[pair_idx[e], digits[esrc[e]], digits[edst[e]]]
        if logp > best:
            best = logp
    z = 0.0
    node_marg = np.zeros((n, c))
    edge_marg = np.zeros((m, c, c))
    for a in range(total):
        rem = a
        for i in range(n - 1, -1, -1):
            digits[i] = rem % c
            rem //= c
        logp = 0.0
        for i in range(n):
            logp += unary[i, digits[i]]
        for e in range(m):
            logp += pair[pair_idx[e], digits[esrc[e]], digits[edst[e]]]
        w = np.exp(logp - best)
        z += w
        for i in range(n):
            node_marg[i, digits[i]] += w
        for e in range(m):
            edge_marg[e, digits[esrc[e]], digits[edst[e]]] += w
    for i in range(n):
        for l in range(c):
            node_marg[i, l] /= z
    for e in range(m):
        for l in range(c):
            for r in range(c):
                edge_marg[e, l, r] /= z
    return node_marg, edge_marg


@njit(cache=True)
def mean_field_sweeps(unary, q0, nbr_ptr, nbr_node, nbr_edge, nbr_is_src,
                      pair, pair_idx, max_iters, tol):
    n, c = unary.shape
    q = q0.copy()
    s = np.zeros(c)
    delta = 0.0
    iters = max_iters
    for it in range(1, max_iters + 1):
        delta = 0.0
        for i in range(n):
            for l in range(c):
                s[l] = unary[i, l]
            for t in range(nbr_ptr[i], nbr_ptr[i + 1]):
                j = nbr_node[t]
                k = pair_idx[nbr_edge[t]]
                if nbr_is_src[t]:
                    for l in range(c):
                        acc = 0.0
                        for r in range(c):
                            acc += pair[k, l, r] * q[j, r]
                        s[l] += acc
                else:
                    for l in range(c):
                        acc = 0.0
                        for r in range(c):
                            acc += pair[k, r, l] * q[j, r]
                        s[l] += acc
            smax = s[0]
            for l in range(1, c):
                if s[l] > smax:
                    smax = s[l]
            tot = 0.0
            for l in range(c):
                s[l] = np.exp(s[l] - smax)
                tot += s[l]
            for l in range(c):
                qi = s[l] / tot
                d = abs(qi - q[i, l])
                if d > delta:
                    delta = d
                q[i, l] = qi
        if delta < tol:
            iters = it
            break
    return q, iters, delta


@njit(cache=True)
def lbp_sweeps(unary, msg0, src, dst, rev, pair_idx_dir, is_canon, pair,
               max_iters, tol, damping):
    dm = src.shape[0]
    msg = msg0.copy()
    if dm == 0:
        return msg, 1, 0.0
    n, c = unary.shape
    new = np.zeros((dm, c))
    scores = np.zeros(c)
    delta = 0.0
    iters = max_iters
    for it in range(1, max_iters + 1):
        incoming = np.zeros((n, c))
        for e in range(dm):
            for l in range(c):
                incoming[dst[e], l] += msg[e, l]
        for e in range(dm):
            u = src[e]
            k = pair_idx_dir[e]
            canon = is_canon[e]
            for y2 in range(c):
                best = -np.inf
                for y1 in range(c):
                    p = pair[k, y1, y2] if canon else pair[k, y2, y1]
                    v = unary[u, y1] + incoming[u, y1] - msg[rev[e], y1] + p
                    scores[y1] = v
                    if v > best:
                        best = v
                tot = 0.0
                for y1 in range(c):
                    tot += np.exp(scores[y1] - best)
                new[e, y2] = best + np.log(tot)
            nmax = new[e, 0]
            for y2 in range(1, c):
                if new[e, y2] > nmax:
                    nmax = new[e, y2]
            tot = 0.0
            for y2 in range(c):
                tot += np.exp(new[e, y2] - nmax)
            norm = nmax + np.log(tot)
            for y2 in range(c):
                new[e, y2] -= norm
        delta = 0.0
        for e in range(dm):
            for y2 in range(c):
                if damping > 0.0:
                    new[e, y2] = (1.0 - damping) * new[e, y2] + damping * msg[e, y2]
                d = abs(new[e, y2] - msg[e, y2])
                if d > delta:
                    delta = d
                msg[e, y2] = new[e, y2]
        if delta < tol:
            iters = it
            break
    return msg, iters, delta
