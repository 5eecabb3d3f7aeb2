"""Compiled kernels for change statistics and MCMC sweeps.

All kernels work on dense uint8 adjacency matrices and integer term codes so
that numba can compile them once and release the GIL while they run. The
term codes must stay in sync with ``TermTag`` in ``statistics``.
"""

from __future__ import annotations

from numba import njit
import numpy as np

EDGES = 0
MUTUAL = 1
TRANSITIVE_TRIADS = 2
TWO_STARS_OUT = 3
TWO_STARS_IN = 4
HOMOPHILY_INFLUENCER = 5
STABILITY = 6
TRIADIC_DIRECT_LINKS = 7
TRIADIC_PATH2 = 8
TRIADIC_PATH3 = 9
INFLUENCER_TRIANGLE = 10

PROPOSAL_GIBBS = 0
PROPOSAL_TOGGLE = 1


@njit(cache=True, nogil=True)
def _transitive_triads_change(adj, u, v):
    n = adj.shape[0]
    total = 0
    for k in range(n):
        if k == u or k == v:  # noqa: PLR1714
            continue
        total += adj[v, k] * adj[u, k]  # u->v plays i->j
        total += adj[k, u] * adj[k, v]  # u->v plays j->k
        total += adj[u, k] * adj[k, v]  # u->v plays i->k
    return total


@njit(cache=True, nogil=True)
def _path2_change(adj, influencer, u, v):
    n = adj.shape[0]
    total = 0
    if influencer[u] == 1:
        for b in range(n):
            if influencer[b] == 0 and b != u:
                total += adj[v, b]
    if influencer[v] == 0:
        for r in range(n):
            if influencer[r] == 1 and r != v:
                total += adj[r, u]
    return total


@njit(cache=True, nogil=True)
def _path3_change(adj, influencer, u, v):
    # simple paths r -> a -> c -> b with r an influencer and b not
    n = adj.shape[0]
    total = 0
    if influencer[u] == 1:
        # u->v is the first arc: r=u, a=v
        for c in range(n):
            if c == u or c == v or adj[v, c] == 0:  # noqa: PLR1714
                continue
            for b in range(n):
                if influencer[b] == 0 and b != u and b != v and b != c:
                    total += adj[c, b]
    # u->v is the middle arc: a=u, c=v
    left = 0
    for r in range(n):
        if influencer[r] == 1 and r != u and r != v:
            left += adj[r, u]
    right = 0
    for b in range(n):
        if influencer[b] == 0 and b != u and b != v:
            right += adj[v, b]
    total += left * right
    if influencer[v] == 0:
        # u->v is the last arc: c=u, b=v
        for a in range(n):
            if a == u or a == v or adj[a, u] == 0:  # noqa: PLR1714
                continue
            for r in range(n):
                if influencer[r] == 1 and r != u and r != v and r != a:
                    total += adj[r, a]
    return total


@njit(cache=True, nogil=True)
def _influencer_triangle_change(adj, prev, influencer, u, v):
    # triples (r, f, x): r influencer, r->f, f->x, r->x, and r->x already in prev
    n = adj.shape[0]
    total = 0
    if influencer[u] == 1:
        for x in range(n):
            if x == u or x == v:  # noqa: PLR1714
                continue
            total += adj[v, x] * adj[u, x] * prev[u, x]
    for r in range(n):
        if influencer[r] == 1 and r != u and r != v:
            total += adj[r, u] * adj[r, v] * prev[r, v]
    if influencer[u] == 1 and prev[u, v] == 1:
        for f in range(n):
            if f == u or f == v:  # noqa: PLR1714
                continue
            total += adj[u, f] * adj[f, v]
    return total


@njit(cache=True, nogil=True)
def term_change(code, adj, prev, influencer, u, v):
    """Return g(graph with u->v) - g(graph without u->v) for one term."""
    n = adj.shape[0]
    if code == EDGES:
        return 1.0
    if code == MUTUAL:
        return float(adj[v, u])
    if code == TRANSITIVE_TRIADS:
        return float(_transitive_triads_change(adj, u, v))
    if code == TWO_STARS_OUT:
        degree = 0
        for k in range(n):
            degree += adj[u, k]
        return float(degree - adj[u, v])
    if code == TWO_STARS_IN:
        degree = 0
        for k in range(n):
            degree += adj[k, v]
        return float(degree - adj[u, v])
    if code == HOMOPHILY_INFLUENCER:
        return 1.0 if influencer[u] == influencer[v] else 0.0
    if code == STABILITY:
        return 1.0 if prev[u, v] == 1 else -1.0
    if code == TRIADIC_DIRECT_LINKS:
        return 1.0 if influencer[u] == 1 and influencer[v] == 0 else 0.0
    if code == TRIADIC_PATH2:
        return float(_path2_change(adj, influencer, u, v))
    if code == TRIADIC_PATH3:
        return float(_path3_change(adj, influencer, u, v))
    if code == INFLUENCER_TRIANGLE:
        return float(_influencer_triangle_change(adj, prev, influencer, u, v))
    return 0.0


@njit(cache=True, nogil=True)
def change_vector(codes, scales, adj, prev, influencer, u, v, out):
    """Fill ``out`` with the scaled change statistics of dyad ``(u, v)``."""
    for j in range(codes.shape[0]):
        out[j] = scales[j] * term_change(codes[j], adj, prev, influencer, u, v)


@njit(cache=True, nogil=True)
def change_matrix(codes, scales, adj, prev, influencer, out):
    """Fill ``out`` (one row per dyad, lexicographic order) with change statistics."""
    n = adj.shape[0]
    row = 0
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            for j in range(codes.shape[0]):
                out[row, j] = scales[j] * term_change(codes[j], adj, prev, influencer, u, v)
            row += 1


@njit(cache=True, nogil=True)
def _linear_predictor(codes, scales, theta, adj, prev, influencer, u, v, delta):
    eta = 0.0
    for j in range(codes.shape[0]):
        d = scales[j] * term_change(codes[j], adj, prev, influencer, u, v)
        delta[j] = d
        eta += theta[j] * d
    return eta


@njit(cache=True, nogil=True)
def _apply_toggle(adj, u, v, stats, delta, edges):
    if adj[u, v] == 1:
        adj[u, v] = 0
        edges[0] -= 1
        for j in range(stats.shape[0]):
            stats[j] -= delta[j]
    else:
        adj[u, v] = 1
        edges[0] += 1
        for j in range(stats.shape[0]):
            stats[j] += delta[j]


@njit(cache=True, nogil=True)
def gibbs_sweep(codes, scales, theta, adj, prev, influencer, uniforms, stats, delta, edges):
    """Resample every dyad in lexicographic order from its full conditional.

    Returns the number of dyads whose state changed, or -1 when a linear
    predictor is not finite.
    """
    n = adj.shape[0]
    changed = 0
    k = 0
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            eta = _linear_predictor(codes, scales, theta, adj, prev, influencer, u, v, delta)
            if not np.isfinite(eta):
                return -1
            prob = 1.0 / (1.0 + np.exp(-eta))
            target = 1 if uniforms[k] < prob else 0
            k += 1
            if target != adj[u, v]:
                _apply_toggle(adj, u, v, stats, delta, edges)
                changed += 1
    return changed


@njit(cache=True, nogil=True)
def toggle_sweep(codes, scales, theta, adj, prev, influencer, dyads, uniforms, stats, delta, edges):
    """Run one Metropolis toggle proposal per entry of ``dyads``.

    ``dyads`` holds flat dyad indices in ``[0, n(n-1))``. Returns the number of
    accepted toggles, or -1 when a linear predictor is not finite.
    """
    n = adj.shape[0]
    accepted = 0
    for k in range(dyads.shape[0]):
        index = dyads[k]
        u = index // (n - 1)
        v = index % (n - 1)
        if v >= u:
            v += 1
        eta = _linear_predictor(codes, scales, theta, adj, prev, influencer, u, v, delta)
        if not np.isfinite(eta):
            return -1
        log_ratio = -eta if adj[u, v] == 1 else eta
        if log_ratio >= 0.0 or uniforms[k] < np.exp(log_ratio):
            _apply_toggle(adj, u, v, stats, delta, edges)
            accepted += 1
    return accepted


@njit(cache=True, nogil=True)
def run_chain(
    proposal,
    codes,
    scales,
    theta,
    adj,
    prev,
    influencer,
    uniforms,
    dyads,
    record_slot,
    stats,
    edges,
    states_out,
    stats_out,
    extreme_out,
):
    """Run ``uniforms.shape[0]`` sweeps, recording states where ``record_slot >= 0``.

    ``extreme_out[s]`` is set to 1 when the graph is empty or complete after
    sweep ``s``. Returns the number of changed dyads (Gibbs) or accepted
    toggles (Metropolis), or -1 on a non-finite predictor.
    """
    n = adj.shape[0]
    n_dyads = n * (n - 1)
    delta = np.zeros(codes.shape[0])
    moves = 0
    for s in range(uniforms.shape[0]):
        if proposal == PROPOSAL_GIBBS:
            result = gibbs_sweep(codes, scales, theta, adj, prev, influencer, uniforms[s], stats, delta, edges)
        else:
            result = toggle_sweep(
                codes, scales, theta, adj, prev, influencer, dyads[s], uniforms[s], stats, delta, edges
            )
        if result < 0:
            return -1
        moves += result
        extreme_out[s] = 1 if edges[0] == 0 or edges[0] == n_dyads else 0
        slot = record_slot[s]
        if slot >= 0:
            for i in range(n):
                for j in range(n):
                    states_out[slot, i, j] = adj[i, j]
            for j in range(stats.shape[0]):
                stats_out[slot, j] = stats[j]
    return moves
