"""Compiled inner loops: cycle popping and loop-erased walks.

Each sample owns a xoshiro256** stream seeded through splitmix64 from a
64-bit per-sample seed, so results do not depend on thread scheduling.
"""
import numpy as np
from numba import njit

U = np.uint64

# alpha kinds
CONST, INC, LC, LC0, TABLE = 0, 1, 2, 3, 4

# status codes
OK, STEP_CAP, ALPHA_RANGE, RETRY_CAP = 0, 1, 2, 3


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << U(k)) | (x >> U(64 - k))


@njit(cache=True)
def seed_state(seed, state):
    z = U(seed)
    for i in range(4):
        z = z + U(0x9E3779B97F4A7C15)
        x = z
        x = (x ^ (x >> U(30))) * U(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> U(27))) * U(0x94D049BB133111EB)
        state[i] = x ^ (x >> U(31))


@njit(cache=True)
def next_double(state):
    s0, s1, s2, s3 = state[0], state[1], state[2], state[3]
    result = _rotl(s1 * U(5), 7) * U(9)
    t = s1 << U(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    state[0], state[1], state[2], state[3] = s0, s1, s2, s3
    return float(result >> U(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _step(u, adj_ptr, adj_oe, cum, state):
    r = next_double(state)
    lo, hi = adj_ptr[u], adj_ptr[u + 1]
    for k in range(lo, hi - 1):
        if r < cum[k]:
            return adj_oe[k]
    return adj_oe[hi - 1]


@njit(cache=True)
def _cycle_alpha(path_oe, i, L, kind, p, oe_cross, oe_angle, eps, zob, keys, vals, default, truncate):
    """Returns (alpha, status, offending value)."""
    if L - i == 2 and (path_oe[i] ^ 1) == path_oe[i + 1]:
        return 0.0, OK, 0.0
    if kind == CONST:
        return p, OK, 0.0
    if kind == INC:
        k = oe_cross.shape[1]
        for c in range(k):
            s = 0
            for j in range(i, L):
                s += oe_cross[path_oe[j], c]
            if s != 0:
                return p, OK, 0.0
        return 0.0, OK, 0.0
    if kind == LC or kind == LC0:
        th = 0.0
        for j in range(i, L):
            th += oe_angle[path_oe[j]]
        if kind == LC:
            a = 1.0 - np.cos(th)
        else:
            a = eps * th * th
        if a > 1.0 + 1e-12:
            if truncate:
                return 0.0, OK, 0.0
            return 0.0, ALPHA_RANGE, th
        return min(a, 1.0), OK, 0.0
    # TABLE
    key = U(0)
    for j in range(i, L):
        key ^= zob[path_oe[j]]
    lo, hi = 0, len(keys)
    while lo < hi:
        mid = (lo + hi) // 2
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < len(keys) and keys[lo] == key:
        return vals[lo], OK, 0.0
    return default, OK, 0.0


@njit(cache=True)
def sample_one(adj_ptr, adj_oe, cum, head, root_mask, order,
               kind, p, oe_cross, oe_angle, eps, zob, keys, vals, default, truncate,
               max_steps, state, parent, in_tree, pos, path_v, path_oe):
    """One run of cycle popping; fills ``parent``.  Returns (status, loops, steps, bad)."""
    n = len(parent)
    for v in range(n):
        in_tree[v] = root_mask[v]
        parent[v] = -1
        pos[v] = -1
    loops = 0
    steps = 0
    for s in order:
        if in_tree[s]:
            continue
        L = 1
        path_v[0] = s
        pos[s] = 0
        u = s
        while True:
            oe = _step(u, adj_ptr, adj_oe, cum, state)
            steps += 1
            if steps > max_steps:
                for j in range(L):
                    pos[path_v[j]] = -1
                return STEP_CAP, loops, steps, 0.0
            w = head[oe]
            path_oe[L - 1] = oe
            if in_tree[w]:
                commit = True
            elif pos[w] >= 0:
                i = pos[w]
                a, st, bad = _cycle_alpha(path_oe, i, L, kind, p, oe_cross, oe_angle, eps,
                                          zob, keys, vals, default, truncate)
                if st != OK:
                    for j in range(L):
                        pos[path_v[j]] = -1
                    return st, loops, steps, bad
                if a > 0.0 and next_double(state) < a:
                    loops += 1
                    commit = True
                else:
                    for j in range(i + 1, L):
                        pos[path_v[j]] = -1
                    L = i + 1
                    u = w
                    continue
            else:
                path_v[L] = w
                pos[w] = L
                L += 1
                u = w
                continue
            if commit:
                for j in range(L):
                    v = path_v[j]
                    parent[v] = path_oe[j]
                    in_tree[v] = True
                    pos[v] = -1
                break
    return OK, loops, steps, 0.0


@njit(cache=True, nogil=True)
def sample_batch(adj_ptr, adj_oe, cum, head, root_mask, order,
                 kind, p, oe_cross, oe_angle, eps, zob, keys, vals, default, truncate,
                 max_steps, seeds, single_loop, retry_cap, out_parent, out_loops, out_tries, out_steps):
    """Fills rows of ``out_parent``; returns (status, failing row, bad value)."""
    n = out_parent.shape[1]
    state = np.empty(4, dtype=np.uint64)
    in_tree = np.empty(n, dtype=np.bool_)
    pos = np.empty(n, dtype=np.int64)
    path_v = np.empty(n + 1, dtype=np.int64)
    path_oe = np.empty(n + 1, dtype=np.int64)
    parent = np.empty(n, dtype=np.int64)
    for r in range(len(seeds)):
        seed_state(seeds[r], state)
        tries = 0
        total = 0
        while True:
            tries += 1
            st, loops, steps, bad = sample_one(adj_ptr, adj_oe, cum, head, root_mask, order,
                                               kind, p, oe_cross, oe_angle, eps, zob, keys, vals,
                                               default, truncate, max_steps, state, parent,
                                               in_tree, pos, path_v, path_oe)
            total += steps
            if st != OK:
                return st, r, bad
            if not single_loop or loops == 1:
                break
            if tries >= retry_cap:
                return RETRY_CAP, r, float(tries)
        for v in range(n):
            out_parent[r, v] = parent[v]
        out_loops[r] = loops
        out_tries[r] = tries
        out_steps[r] = total
    return OK, -1, 0.0


@njit(cache=True, nogil=True)
def lerw_batch(adj_ptr, adj_oe, cum, head, starts, targets, seeds, max_steps, out_path, out_len):
    """Loop-erased walk from starts[r] stopped on first hitting targets[r].

    ``out_path[r, :out_len[r]]`` holds the oriented edges of the erased path.
    Returns the index of a walk that hit the step cap, or -1.
    """
    n = len(adj_ptr) - 1
    state = np.empty(4, dtype=np.uint64)
    pos = -np.ones(n, dtype=np.int64)
    path_v = np.empty(n + 1, dtype=np.int64)
    path_oe = np.empty(n + 1, dtype=np.int64)
    for r in range(len(starts)):
        seed_state(seeds[r], state)
        s, t = starts[r], targets[r]
        if s == t:
            out_len[r] = 0
            continue
        L = 1
        path_v[0] = s
        pos[s] = 0
        u = s
        steps = 0
        while True:
            oe = _step(u, adj_ptr, adj_oe, cum, state)
            steps += 1
            if steps > max_steps:
                for j in range(L):
                    pos[path_v[j]] = -1
                return r
            w = head[oe]
            path_oe[L - 1] = oe
            if w == t:
                break
            if pos[w] >= 0:
                i = pos[w]
                for j in range(i + 1, L):
                    pos[path_v[j]] = -1
                L = i + 1
            else:
                path_v[L] = w
                pos[w] = L
                L += 1
            u = w
        for j in range(L):
            out_path[r, j] = path_oe[j]
            pos[path_v[j]] = -1
        out_len[r] = L
    return -1


@njit(cache=True)
def loop_homology(head, parents, oe_cross, out_loops, out_hom):
    """Per sample: loop count and, for up to out_hom.shape[1] loops, the crossing vector.

    Loops are listed in order of discovery from vertex 0 upward; each vector is signed so its first
    nonzero entry is positive (the class up to orientation).
    """
    N, n = parents.shape
    k = oe_cross.shape[1]
    state = np.empty(n, dtype=np.int8)
    for r in range(N):
        for v in range(n):
            state[v] = 0
        loops = 0
        for s in range(n):
            if state[s]:
                continue
            u = s
            while u >= 0 and state[u] == 0:
                state[u] = 1
                oe = parents[r, u]
                u = head[oe] if oe >= 0 else -1
            if u >= 0 and state[u] == 1:
                if loops < out_hom.shape[1]:
                    for c in range(k):
                        out_hom[r, loops, c] = 0
                    w = u
                    while True:
                        oe = parents[r, w]
                        for c in range(k):
                            out_hom[r, loops, c] += oe_cross[oe, c]
                        w = head[oe]
                        if w == u:
                            break
                    sgn = 0
                    for c in range(k):
                        if sgn == 0 and out_hom[r, loops, c] != 0:
                            sgn = 1 if out_hom[r, loops, c] > 0 else -1
                    if sgn < 0:
                        for c in range(k):
                            out_hom[r, loops, c] = -out_hom[r, loops, c]
                loops += 1
            u = s
            while u >= 0 and state[u] == 1:
                state[u] = 2
                oe = parents[r, u]
                u = head[oe] if oe >= 0 else -1
        out_loops[r] = loops
