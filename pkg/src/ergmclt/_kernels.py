"""Numba kernels over bitset adjacency (``uint64[n, W]``).

Homomorphism counting is a depth-first placement of motif vertices driven by a
*plan*: a placement order of motif vertices ("levels"), and per level

* ``fixed``  -- ``-1`` for a free level, else a slot code resolved at call time
  (``0 -> fu``, ``1 -> fw``, ``2 -> fv``),
* ``nbr``    -- earlier levels adjacent in the motif (candidate set is the AND of
  their adjacency rows),
* ``forb``   -- earlier levels whose motif edge to this level must not land on the
  graph edge ``{fu, fw}``,
* ``vforb``  -- whether this level must not map to ``fv``.

Fixed levels always form a prefix of the order.  The last free level is counted
with a popcount plus explicit corrections for the (at most three) special vertices.

Plans are packed as rows of one ``int64`` table (layout given by the ``P_*``
offsets) and scratch space is one ``int64`` work vector plus a candidate bitset
matrix.  Keeping the array arguments few matters: every non-inlined call pays a
reference-count round trip per array argument.
"""

from __future__ import annotations

import numpy as np
from numba import njit

MAXV = 8

# packed plan row layout
P_NV = 0
P_WEIGHT = 1  # index into the weight vector (motif slot)
P_FIX = 2
P_NNBR = P_FIX + MAXV
P_NBR = P_NNBR + MAXV
P_NFORB = P_NBR + MAXV * MAXV
P_FORB = P_NFORB + MAXV
P_VFORB = P_FORB + MAXV * MAXV
STRIDE = P_VFORB + MAXV

# work vector layout: images then DFS cursors
W_IMG = 0
W_POS = MAXV
WORK_SIZE = 2 * MAXV

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ONE = np.uint64(1)
_ZERO = np.uint64(0)


@njit(cache=True, inline="always")
def popcount64(x):
    x = x - ((x >> _ONE) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return np.int64((x * _H01) >> np.uint64(56))


@njit(cache=True, inline="always")
def has_bit(adj, a, b):
    return (adj[a, b >> 6] >> np.uint64(b & 63)) & _ONE != _ZERO


@njit(cache=True, inline="always")
def set_edge(adj, a, b):
    adj[a, b >> 6] |= _ONE << np.uint64(b & 63)
    adj[b, a >> 6] |= _ONE << np.uint64(a & 63)


@njit(cache=True, inline="always")
def clear_edge(adj, a, b):
    adj[a, b >> 6] &= ~(_ONE << np.uint64(b & 63))
    adj[b, a >> 6] &= ~(_ONE << np.uint64(a & 63))


@njit(cache=True, inline="always")
def _slot(code, fu, fw, fv):
    if code == 0:
        return fu
    if code == 1:
        return fw
    return fv


@njit(cache=True, inline="always")
def _violates(plans, p, level, s, work, fu, fw, fv):
    if plans[p, P_VFORB + level] != 0 and s == fv:
        return True
    base = P_FORB + level * MAXV
    for k in range(plans[p, P_NFORB + level]):
        t = work[W_IMG + plans[p, base + k]]
        if (s == fu and t == fw) or (s == fw and t == fu):
            return True
    return False


@njit(cache=True, inline="always")
def _fill(plans, p, level, adj, full_mask, work, cand):
    W = adj.shape[1]
    k0 = plans[p, P_NNBR + level]
    base = P_NBR + level * MAXV
    if k0 == 0:
        for w in range(W):
            cand[level, w] = full_mask[w]
    else:
        r = work[W_IMG + plans[p, base]]
        for w in range(W):
            cand[level, w] = adj[r, w]
        for k in range(1, k0):
            r = work[W_IMG + plans[p, base + k]]
            for w in range(W):
                cand[level, w] &= adj[r, w]


@njit(cache=True)
def count_plans(adj, full_mask, plans, p0, p1, weights, fu, fw, fv, work, cand):
    """Homomorphisms admitted by plans ``p0..p1-1``.

    Returns ``(total, weighted)`` where ``weighted`` sums each plan's count times
    ``weights[plans[p, P_WEIGHT]]``.
    """
    W = adj.shape[1]
    total = 0
    weighted = 0.0
    for p in range(p0, p1):
        nvp = plans[p, P_NV]
        count = 0
        L = 0
        ok = True
        while L < nvp and plans[p, P_FIX + L] >= 0:
            s = _slot(plans[p, P_FIX + L], fu, fw, fv)
            base = P_NBR + L * MAXV
            for k in range(plans[p, P_NNBR + L]):
                if not has_bit(adj, s, work[W_IMG + plans[p, base + k]]):
                    ok = False
                    break
            if ok and _violates(plans, p, L, s, work, fu, fw, fv):
                ok = False
            if not ok:
                break
            work[W_IMG + L] = s
            L += 1
        if not ok:
            continue
        if L == nvp:
            count = 1
        else:
            level = L
            _fill(plans, p, level, adj, full_mask, work, cand)
            work[W_POS + level] = 0
            while True:
                if level == nvp - 1:
                    cnt = 0
                    for w in range(W):
                        cnt += popcount64(cand[level, w])
                    # special vertices may be excluded by constraints
                    for which in range(3):
                        s = fu if which == 0 else (fw if which == 1 else fv)
                        if s < 0:
                            continue
                        if which == 1 and s == fu:
                            continue
                        if which == 2 and (s == fu or s == fw):
                            continue
                        if (cand[level, s >> 6] >> np.uint64(s & 63)) & _ONE != _ZERO:
                            if _violates(plans, p, level, s, work, fu, fw, fv):
                                cnt -= 1
                    count += cnt
                    level -= 1
                    if level < L:
                        break
                    continue
                found = -1
                while work[W_POS + level] < W:
                    q = work[W_POS + level]
                    wv = cand[level, q]
                    if wv == _ZERO:
                        work[W_POS + level] = q + 1
                        continue
                    low = wv & (~wv + _ONE)
                    cand[level, q] = wv ^ low
                    s = q * 64 + popcount64(low - _ONE)
                    if _violates(plans, p, level, s, work, fu, fw, fv):
                        continue
                    found = s
                    break
                if found < 0:
                    level -= 1
                    if level < L:
                        break
                    continue
                work[W_IMG + level] = found
                level += 1
                _fill(plans, p, level, adj, full_mask, work, cand)
                work[W_POS + level] = 0
        total += count
        weighted += weights[plans[p, P_WEIGHT]] * count
    return total, weighted


@njit(cache=True)
def delta_count(adj, full_mask, plans, p0, p1, weights, u, w, work, cand):
    """Homomorphisms into ``x^{+uw}`` that use the edge ``uw`` (plain and weighted)."""
    present = has_bit(adj, u, w)
    if not present:
        set_edge(adj, u, w)
    total, weighted = count_plans(adj, full_mask, plans, p0, p1, weights, u, w, -1, work, cand)
    if not present:
        clear_edge(adj, u, w)
    return total, weighted


@njit(cache=True, inline="always")
def logistic(z):
    if z >= 0.0:
        return 1.0 / (1.0 + np.exp(-z))
    ez = np.exp(z)
    return ez / (1.0 + ez)


@njit(cache=True)
def local_field(adj, full_mask, plans, coef, const_field, u, w, work, cand):
    """``n^2 d_e H(x) = sum_j beta_j N_j(x, e) / n^(v_j - 2)``.

    ``plans`` holds the delta plans of every motif with ``P_WEIGHT`` pointing into
    ``coef``; single-edge motifs are folded into ``const_field``.
    """
    if plans.shape[0] == 0:
        return const_field
    _, z = delta_count(adj, full_mask, plans, 0, plans.shape[0], coef, u, w, work, cand)
    return const_field + z


@njit(cache=True)
def glauber_block(adj, deg, state, eu, ew, idx, unif, plans, coef, const_field, full_mask, lo, hi, work, cand):
    """Run ``len(idx)`` Glauber updates in place.

    ``state`` is ``int64[4]``: edge count, rejections, min and max edge count seen.
    Moves that would take the edge count outside ``[lo, hi]`` are rejected.
    """
    ecount = state[0]
    rej = state[1]
    emin = state[2]
    emax = state[3]
    P = plans.shape[0]
    for t in range(idx.shape[0]):
        k = idx[t]
        u = eu[k]
        w = ew[k]
        old = has_bit(adj, u, w)
        z = const_field
        if P > 0:
            if not old:
                set_edge(adj, u, w)
            _, dz = count_plans(adj, full_mask, plans, 0, P, coef, u, w, -1, work, cand)
            z += dz
            if not old:
                clear_edge(adj, u, w)
        new = unif[t] < logistic(z)
        if new != old:
            ne = ecount + 1 if new else ecount - 1
            if ne < lo or ne > hi:
                rej += 1
                continue
            if new:
                set_edge(adj, u, w)
                deg[u] += 1
                deg[w] += 1
            else:
                clear_edge(adj, u, w)
                deg[u] -= 1
                deg[w] -= 1
            ecount = ne
            if ecount < emin:
                emin = ecount
            if ecount > emax:
                emax = ecount
    state[0] = ecount
    state[1] = rej
    state[2] = emin
    state[3] = emax


@njit(cache=True)
def coupled_block(adj_a, adj_b, state, eu, ew, idx, unif, locs, plans, coef, const_field, full_mask, lo, hi,
                  rec_every, out, rec0, work, cand):
    """Monotonically coupled updates of two chains sharing edge choice and uniform.

    ``adj_a`` is the (initially) lower chain.  ``state`` is ``int64[8]``: edge
    counts of a and b, Hamming distance, local Hamming distance at ``locs[0]``,
    inversions (edges with a=1, b=0), boundary rejections that hit only one
    chain, local Hamming distances at ``locs[1]`` and ``locs[2]``.
    After every ``rec_every`` steps row ``r`` of ``out`` receives (d_H, d_loc at
    locs[0], inversions, d_loc at locs[1], d_loc at locs[2]), starting at
    ``rec0``; returns the next free row.
    """
    ea = state[0]
    eb = state[1]
    dh = state[2]
    dl = state[3]
    inv = state[4]
    asym = state[5]
    d1 = state[6]
    d2 = state[7]
    vloc = locs[0]
    v1 = locs[1]
    v2 = locs[2]
    r = rec0
    P = plans.shape[0]
    for t in range(idx.shape[0]):
        k = idx[t]
        u = eu[k]
        w = ew[k]
        oa = has_bit(adj_a, u, w)
        ob = has_bit(adj_b, u, w)
        za = const_field
        zb = const_field
        if P > 0:
            if not oa:
                set_edge(adj_a, u, w)
            _, dz = count_plans(adj_a, full_mask, plans, 0, P, coef, u, w, -1, work, cand)
            za += dz
            if not oa:
                clear_edge(adj_a, u, w)
            if not ob:
                set_edge(adj_b, u, w)
            _, dz = count_plans(adj_b, full_mask, plans, 0, P, coef, u, w, -1, work, cand)
            zb += dz
            if not ob:
                clear_edge(adj_b, u, w)
        na = unif[t] < logistic(za)
        nb = unif[t] < logistic(zb)
        rej_a = False
        rej_b = False
        if na != oa:
            ne = ea + 1 if na else ea - 1
            if ne < lo or ne > hi:
                rej_a = True
                na = oa
            else:
                ea = ne
                if na:
                    set_edge(adj_a, u, w)
                else:
                    clear_edge(adj_a, u, w)
        if nb != ob:
            ne = eb + 1 if nb else eb - 1
            if ne < lo or ne > hi:
                rej_b = True
                nb = ob
            else:
                eb = ne
                if nb:
                    set_edge(adj_b, u, w)
                else:
                    clear_edge(adj_b, u, w)
        if rej_a != rej_b:
            asym += 1
        before = 1 if oa != ob else 0
        after = 1 if na != nb else 0
        dh += after - before
        if u == vloc or w == vloc:
            dl += after - before
        if u == v1 or w == v1:
            d1 += after - before
        if u == v2 or w == v2:
            d2 += after - before
        inv += (1 if (na and not nb) else 0) - (1 if (oa and not ob) else 0)
        if (t + 1) % rec_every == 0:
            out[r, 0] = dh
            out[r, 1] = dl
            out[r, 2] = inv
            out[r, 3] = d1
            out[r, 4] = d2
            r += 1
    state[0] = ea
    state[1] = eb
    state[2] = dh
    state[3] = dl
    state[4] = inv
    state[5] = asym
    state[6] = d1
    state[7] = d2
    return r


@njit(cache=True)
def edge_deltas(adj, full_mask, eu, ew, sel, plans, p0, p1, weights, out_int, out_w, work, cand):
    """Delta counts for the edges ``sel`` (plain into ``out_int``, weighted into ``out_w``)."""
    for i in range(sel.shape[0]):
        k = sel[i]
        u = eu[k]
        w = ew[k]
        present = has_bit(adj, u, w)
        if not present:
            set_edge(adj, u, w)
        a, b = count_plans(adj, full_mask, plans, p0, p1, weights, u, w, -1, work, cand)
        if not present:
            clear_edge(adj, u, w)
        out_int[i] = a
        out_w[i] = b


@njit(cache=True)
def hom_count_naive(dense, medges, nvm, root, rimg, need_vertex):
    """Brute force over all ``n**v`` maps on a dense 0/1 matrix.

    ``root >= 0`` forces motif vertex ``root`` to ``rimg``; ``need_vertex >= 0``
    keeps only maps whose image contains that graph vertex.
    """
    n = dense.shape[0]
    img = np.zeros(nvm, dtype=np.int64)
    total = 0
    while True:
        ok = True
        if root >= 0 and img[root] != rimg:
            ok = False
        if ok:
            for k in range(medges.shape[0]):
                if dense[img[medges[k, 0]], img[medges[k, 1]]] == 0:
                    ok = False
                    break
        if ok and need_vertex >= 0:
            hit = False
            for i in range(nvm):
                if img[i] == need_vertex:
                    hit = True
                    break
            ok = hit
        if ok:
            total += 1
        i = 0
        while i < nvm:
            img[i] += 1
            if img[i] < n:
                break
            img[i] = 0
            i += 1
        if i == nvm:
            break
    return total
