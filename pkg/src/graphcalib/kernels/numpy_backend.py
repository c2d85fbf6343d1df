"""Pure-numpy fallback implementations of the inference kernels.

Same contracts as numba_backend; enumeration is chunked to bound memory.
"""

import numpy as np

NAME = "numpy"

_CHUNK = 1 << 15


def _logsumexp(a, axis):
    m = np.max(a, axis=axis, keepdims=True)
    return m + np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True))


def _assignment_chunks(unary, esrc, edst, pair, pair_idx):
    n, c = unary.shape
    total = c ** n
    strides = c ** np.arange(n - 1, -1, -1, dtype=np.int64)
    node_axis = np.arange(n)[None, :]
    for start in range(0, total, _CHUNK):
        ids = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = (ids[:, None] // strides[None, :]) % c
        logp = unary[node_axis, digits].sum(axis=1)
        for e in range(esrc.shape[0]):
            logp += pair[pair_idx[e], digits[:, esrc[e]], digits[:, edst[e]]]
        yield digits, logp


def exact_marginals(unary, esrc, edst, pair, pair_idx):
    """Node and edge marginals by full enumeration with max-log subtraction.

    unary: (n, c) log-potentials; esrc/edst: (m,) canonical edge endpoints;
    pair: (k, c, c) pairwise log-potentials; pair_idx: (m,) row per edge.
    Returns ((n, c), (m, c, c)) normalized marginals.
    """
    n, c = unary.shape
    m = esrc.shape[0]
    best = -np.inf
    for _, logp in _assignment_chunks(unary, esrc, edst, pair, pair_idx):
        best = max(best, float(logp.max()))
    z = 0.0
    node_marg = np.zeros((n, c))
    edge_marg = np.zeros((m, c, c))
    for digits, logp in _assignment_chunks(unary, esrc, edst, pair, pair_idx):
        w = np.exp(logp - best)
        z += float(w.sum())
        for i in range(n):
            np.add.at(node_marg[i], digits[:, i], w)
        for e in range(m):
            np.add.at(edge_marg[e], (digits[:, esrc[e]], digits[:, edst[e]]), w)
    node_marg /= z
    edge_marg /= z
    return node_marg, edge_marg


def mean_field_sweeps(unary, q0, nbr_ptr, nbr_node, nbr_edge, nbr_is_src,
                      pair, pair_idx, max_iters, tol):
    """Asynchronous coordinate-ascent sweeps in ascending node-id order.

    Adjacency is CSR-style: node i's incident half-edges live in
    [nbr_ptr[i], nbr_ptr[i+1]); nbr_is_src says whether i is the canonical
    source of that edge. Returns (q, iterations, final_delta).
    """
    n = unary.shape[0]
    q = q0.copy()
    delta = 0.0
    for it in range(1, max_iters + 1):
        delta = 0.0
        for i in range(n):
            s = unary[i].copy()
            for t in range(nbr_ptr[i], nbr_ptr[i + 1]):
                mat = pair[pair_idx[nbr_edge[t]]]
                if not nbr_is_src[t]:
                    mat = mat.T
                s += mat @ q[nbr_node[t]]
            s -= s.max()
            qi = np.exp(s)
            qi /= qi.sum()
            d = float(np.abs(qi - q[i]).max())
            if d > delta:
                delta = d
            q[i] = qi
        if delta < tol:
            return q, it, delta
    return q, max_iters, delta


def lbp_sweeps(unary, msg0, src, dst, rev, pair_idx_dir, is_canon, pair,
               max_iters, tol, damping):
    """Synchronous sum-product message passing in log space.

    Directed edge e carries the message src[e] -> dst[e]; rev[e] indexes the
    opposite direction. Messages are renormalized each round; the optional
    damping mixes in the previous message. Returns
    (messages, iterations, final_delta).
    """
    dm = src.shape[0]
    if dm == 0:
        return msg0.copy(), 1, 0.0
    n = unary.shape[0]
    mats = pair[pair_idx_dir]
    mats_dir = np.where(is_canon[:, None, None], mats,
                        np.transpose(mats, (0, 2, 1)))
    msg = msg0.copy()
    delta = 0.0
    for it in range(1, max_iters + 1):
        incoming = np.zeros((n, unary.shape[1]))
        np.add.at(incoming, dst, msg)
        pre = unary[src] + incoming[src] - msg[rev]
        new = _logsumexp(pre[:, :, None] + mats_dir, axis=1)[:, 0, :]
        new -= _logsumexp(new, axis=1)
        if damping > 0.0:
            new = (1.0 - damping) * new + damping * msg
        delta = float(np.abs(new - msg).max())
        msg = new
        if delta < tol:
            return msg, it, delta
    return msg, max_iters, delta
