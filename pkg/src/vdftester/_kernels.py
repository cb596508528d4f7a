"""Compiled inner loops: alias sampling, the estimator's sample-and-evaluate
pass and the walk engine.

The walk kernel implements the oracle session's rules itself: it answers
incidence and evaluation queries from the materialized graph and D, but
only for vertices marked in ``revealed``, marks every answer as revealed,
and bumps the shared counters exactly as OracleSession would.
"""
import numpy as np
from numba import njit

SAMPLE, EVAL, GRAPH, RAW_EVAL, RAW_GRAPH = 0, 1, 2, 3, 4

ST_ACCEPT, ST_REJECT, ST_NO_START, ST_LOCALITY, ST_DRAW_CAP = 0, 1, 2, 3, 4

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_ONE = np.uint64(1)


@njit(cache=True)
def build_alias(p):
    """Vose alias tables for the probability vector ``p``."""
    k = p.size
    prob = np.empty(k)
    alias = np.zeros(k, dtype=np.int64)
    scaled = p * (k / p.sum())
    small = np.empty(k, dtype=np.int64)
    large = np.empty(k, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(k):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        nl -= 1
        g = large[nl]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small[ns] = g
            ns += 1
        else:
            large[nl] = g
            nl += 1
    for i in range(nl):
        prob[large[i]] = 1.0
    for i in range(ns):
        prob[small[i]] = 1.0
    return prob, alias


@njit(cache=True, inline="always")
def _draw_index(rng, prob, alias):
    u = rng.random() * prob.size
    i = int(u)
    if i >= prob.size:
        i = prob.size - 1
    if u - i < prob[i]:
        return i
    return alias[i]


@njit(cache=True)
def draw_atoms(rng, atoms, prob, alias, k):
    out = np.empty(k, dtype=np.int64)
    for t in range(k):
        out[t] = atoms[_draw_index(rng, prob, alias)]
    return out


@njit(cache=True)
def sample_values(rng, atoms, prob, alias, p, k, revealed):
    """D-values of k samples of D; the sampled vertices become revealed."""
    out = np.empty(k)
    for t in range(k):
        v = atoms[_draw_index(rng, prob, alias)]
        revealed[v] = True
        out[t] = p[v]
    return out


@njit(cache=True)
def count_below(rng, atoms, prob, alias, p, k, revealed, thr):
    """Number of k samples of D whose D-value is below ``thr``."""
    c = 0
    for t in range(k):
        v = atoms[_draw_index(rng, prob, alias)]
        revealed[v] = True
        if p[v] < thr:
            c += 1
    return c


@njit(cache=True)
def bucket_counts(rng, atoms, prob, alias, p, k, revealed, floor, log_beta, ell):
    """Histogram over buckets 1..ell of k sampled D-values that are >= ``floor``.

    Bucket of x is max(1, ceil(-ln x / ln beta - 1e-12)); larger buckets are dropped.
    """
    counts = np.zeros(ell + 1, dtype=np.int64)
    memo = np.full(atoms.size, -1, dtype=np.int64)  # bucket per atom, 0 = dropped
    for t in range(k):
        a = _draw_index(rng, prob, alias)
        v = atoms[a]
        revealed[v] = True
        i = memo[a]
        if i < 0:
            x = p[v]
            i = 0
            if x >= floor and x > 0.0:
                i = max(1, int(np.ceil(-np.log(x) / log_beta - 1e-12)))
                if i > ell:
                    i = 0
            memo[a] = i
        if i > 0:
            counts[i] += 1
    return counts


@njit(cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def hash_label(key, a, b):
    """Keyed parity bit of the edge {a, b}: 1 means neq."""
    if a > b:
        a, b = b, a
    h = mix64(mix64(key ^ np.uint64(a)) + np.uint64(b))
    return np.int64(h & _ONE)


@njit(cache=True, inline="always")
def _pick(rng, cw, k):
    """Index j < k chosen with probability proportional to cw[j] - cw[j-1]."""
    r = rng.random() * cw[k - 1]
    j = 0
    while j < k - 1 and cw[j] <= r:
        j += 1
    return j


@njit(cache=True)
def pick_many(rng, cw, count):
    k = cw.size
    out = np.empty(count, dtype=np.int64)
    for t in range(count):
        out[t] = _pick(rng, cw, k)
    return out


@njit(cache=True)
def _ensure_row(v, slots, deg, have_row, revealed, strict, counters):
    if have_row[v]:
        return True
    if strict and not revealed[v]:
        return False
    d = slots.shape[1]
    k = 0
    for j in range(d):
        u = slots[v, j]
        if u == 0:
            break
        revealed[u] = True
        k += 1
    deg[v] = k
    counters[GRAPH] += min(k + 1, d)
    have_row[v] = True
    return True


@njit(cache=True)
def _ensure_val(v, p, threshold, val, have_val, revealed, strict, counters):
    if have_val[v]:
        return True
    if strict and not revealed[v]:
        return False
    x = p[v]
    val[v] = x if x > threshold else 0.0
    have_val[v] = True
    counters[EVAL] += 1
    return True


@njit(cache=True)
def _slot_of(x, v, slots, deg):
    for j in range(deg[x]):
        if slots[x, j] == v:
            return j
    return -1


@njit(cache=True)
def _find(x, parent, par):
    root = x
    p = 0
    while parent[root] != root:
        p ^= par[root]
        root = parent[root]
    cur = x
    pc = p
    while parent[cur] != cur:
        nxt = parent[cur]
        pn = pc ^ par[cur]
        parent[cur] = root
        par[cur] = pc
        cur = nxt
        pc = pn
    return root, p


@njit(cache=True)
def _load(v, slots, deg, p, threshold, val, have_val, have_row, revealed, strict, counters,
          loaded, cw, explored):
    """Read Γ(v) and the D-values around v, fill the cumulative step weights.

    Returns the number of positive-weight edges at v not yet explored, or -1
    if v was never revealed.
    """
    if not _ensure_row(v, slots, deg, have_row, revealed, strict, counters):
        return -1
    if not _ensure_val(v, p, threshold, val, have_val, revealed, strict, counters):
        return -1
    d = slots.shape[1]
    fresh = 0
    acc = 0.0
    for j in range(deg[v]):
        u = slots[v, j]
        _ensure_val(u, p, threshold, val, have_val, revealed, strict, counters)
        wgt = val[v] + val[u]
        acc += wgt
        cw[v, j] = acc
        if wgt > 0.0:
            h = v * d + j
            if loaded[u] and explored[u * d + _slot_of(u, v, slots, deg)]:
                explored[h] = True
            if not explored[h]:
                fresh += 1
    loaded[v] = True
    return fresh


@njit(cache=True)
def run_walks(rng, slots, p, atoms, aprob, aalias, threshold,
              starts, walkers, length, stop_when_closed, trial_cap, draw_cap,
              label_mode, label_key, label_table, strict,
              revealed, have_row, deg, have_val, val, counters,
              out, tree):
    """One tester repetition. Returns a status code; details go to ``out``:
    out[0..2] conflict edge (a, b, parity), out[3] tree edges recorded,
    out[4] explored edges, out[5] closed flag, out[6] offending vertex.
    ``tree`` (n, 3) receives the merging edges in order.

    ``open_`` counts (loaded vertex, unexplored positive-weight edge) pairs.
    With ``stop_when_closed`` both endpoints of every explored edge are kept
    loaded, so open_ == 0 means no walk inside the loaded region can reach a
    new edge and the remaining walks from a loaded start can be skipped.
    """
    n1, d = slots.shape
    loaded = np.zeros(n1, dtype=np.bool_)
    cw = np.zeros((n1, d))
    explored = np.zeros(n1 * d, dtype=np.bool_)
    parent = np.arange(n1)
    par = np.zeros(n1, dtype=np.int64)
    rank = np.zeros(n1, dtype=np.int64)
    open_ = 0
    edges = 0
    ntree = 0
    out[5] = 0

    for _st in range(starts):
        # start vertex: s <- D' by rejection from D; keep s w.p. |Γ(s)|/2d,
        # move to a uniform neighbor w.p. |Γ(s)|/2d, otherwise retry
        s = -1
        for _trial in range(trial_cap):
            c = -1
            for _dr in range(draw_cap):
                c = atoms[_draw_index(rng, aprob, aalias)]
                counters[SAMPLE] += 1
                revealed[c] = True
                _ensure_val(c, p, threshold, val, have_val, revealed, strict, counters)
                counters[RAW_EVAL] += 1
                if val[c] > 0.0:
                    break
                c = -1
            if c < 0:
                return ST_DRAW_CAP
            _ensure_row(c, slots, deg, have_row, revealed, strict, counters)
            k = deg[c]
            counters[RAW_GRAPH] += min(k + 1, d)
            r = rng.random() * 2 * d
            if r < k:
                s = c
                break
            if r < 2 * k:
                s = slots[c, int(r) - k]
                break
        if s < 0:
            return ST_NO_START
        if stop_when_closed and loaded[s] and open_ == 0:
            continue

        for _w in range(walkers):
            if stop_when_closed and open_ == 0 and loaded[s]:
                break
            counters[RAW_EVAL] += 1  # D(start)
            cur = s
            for _t in range(length):
                if not loaded[cur]:
                    f = _load(cur, slots, deg, p, threshold, val, have_val, have_row, revealed,
                              strict, counters, loaded, cw, explored)
                    if f < 0:
                        out[6] = cur
                        return ST_LOCALITY
                    open_ += f
                if stop_when_closed and open_ == 0:
                    break
                k = deg[cur]
                counters[RAW_EVAL] += k
                counters[RAW_GRAPH] += min(k + 1, d)
                if k == 0 or cw[cur, k - 1] <= 0.0:
                    break  # dead end
                j = _pick(rng, cw[cur], k)
                u = slots[cur, j]
                h = cur * d + j
                if not explored[h]:
                    if stop_when_closed and not loaded[u]:
                        f = _load(u, slots, deg, p, threshold, val, have_val, have_row, revealed,
                                  strict, counters, loaded, cw, explored)
                        if f < 0:
                            out[6] = u
                            return ST_LOCALITY
                        open_ += f
                    explored[h] = True
                    open_ -= 1
                    if loaded[u]:
                        explored[u * d + _slot_of(u, cur, slots, deg)] = True
                        open_ -= 1
                    edges += 1
                    if label_mode == 0:
                        lab = 1
                    elif label_mode == 1:
                        lab = hash_label(label_key, cur, u)
                    else:
                        lab = np.int64(label_table[cur, j])
                    ra, pa = _find(cur, parent, par)
                    rb, pb = _find(u, parent, par)
                    if ra == rb:
                        if (pa ^ pb) != lab:
                            out[0] = cur
                            out[1] = u
                            out[2] = lab
                            out[3] = ntree
                            out[4] = edges
                            return ST_REJECT
                    else:
                        if rank[ra] < rank[rb]:
                            ra, rb = rb, ra
                        parent[rb] = ra
                        par[rb] = pa ^ pb ^ lab
                        if rank[ra] == rank[rb]:
                            rank[ra] += 1
                        tree[ntree, 0] = cur
                        tree[ntree, 1] = u
                        tree[ntree, 2] = lab
                        ntree += 1
                cur = u
    out[3] = ntree
    out[4] = edges
    out[5] = 1 if (stop_when_closed and open_ == 0) else 0
    return ST_ACCEPT
