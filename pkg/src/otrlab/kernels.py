"""Hot numeric kernels, in a numba flavour and a pure-numpy flavour.

The public names at the bottom of the module (``simplex_iterate``,
``greedy_arcs``, ``bruteforce_arcs``, ``hash_uniforms``) are bound to one
flavour according to :data:`otrlab._accel.BACKEND`.  Both flavours are
importable regardless, which is what the backend-agreement tests and the
benchmark script rely on.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

STATUS_OPTIMAL = 0
STATUS_UNBOUNDED = 1
STATUS_ITERLIMIT = 2

# ---------------------------------------------------------------------------
# dense tableau simplex
#
# Tableau layout: rows 0..m-1 are constraints, row m holds the reduced costs;
# the last column is the right-hand side (T[m, -1] == -objective).  Columns
# >= n_enter (artificials during phase 2) never enter the basis.
# ---------------------------------------------------------------------------


@njit
def _simplex_iterate_nb(T, basis, n_enter, max_iter, bland_after, tol):
    m = T.shape[0] - 1
    w = T.shape[1]
    rhs = w - 1
    n_degenerate = 0
    it = 0
    while it < max_iter:
        bland = n_degenerate >= bland_after
        q = -1
        best = -tol
        for j in range(n_enter):
            d = T[m, j]
            if d < -tol:
                if bland:
                    q = j
                    break
                if d < best:
                    best = d
                    q = j
        if q < 0:
            return STATUS_OPTIMAL, it
        r = -1
        rbest = np.inf
        for i in range(m):
            a = T[i, q]
            if a > tol:
                ratio = T[i, rhs] / a
                if r < 0 or ratio < rbest - 1e-12 * (1.0 + abs(rbest)):
                    r = i
                    rbest = ratio
                elif ratio <= rbest + 1e-12 * (1.0 + abs(rbest)) and basis[i] < basis[r]:
                    r = i
                    rbest = min(ratio, rbest)
        if r < 0:
            return STATUS_UNBOUNDED, it
        if rbest <= tol:
            n_degenerate += 1
        else:
            n_degenerate = 0
        piv = T[r, q]
        for j in range(w):
            T[r, j] /= piv
        for i in range(m + 1):
            if i == r:
                continue
            f = T[i, q]
            if f != 0.0:
                for j in range(w):
                    T[i, j] -= f * T[r, j]
                T[i, q] = 0.0
        T[r, q] = 1.0
        basis[r] = q
        it += 1
    return STATUS_ITERLIMIT, it


def _simplex_iterate_np(T, basis, n_enter, max_iter, bland_after, tol):
    m = T.shape[0] - 1
    n_degenerate = 0
    it = 0
    while it < max_iter:
        d = T[m, :n_enter]
        neg = np.flatnonzero(d < -tol)
        if neg.size == 0:
            return STATUS_OPTIMAL, it
        if n_degenerate >= bland_after:
            q = int(neg[0])
        else:
            q = int(np.argmin(d))
        col = T[:m, q]
        cand = np.flatnonzero(col > tol)
        if cand.size == 0:
            return STATUS_UNBOUNDED, it
        ratios = T[cand, -1] / col[cand]
        rbest = ratios.min()
        ties = cand[ratios <= rbest + 1e-12 * (1.0 + abs(rbest))]
        r = int(ties[np.argmin(basis[ties])])
        rbest = T[r, -1] / col[r]
        if rbest <= tol:
            n_degenerate += 1
        else:
            n_degenerate = 0
        T[r] /= T[r, q]
        f = T[:, q].copy()
        f[r] = 0.0
        T -= np.outer(f, T[r])
        T[:, q] = 0.0
        T[r, q] = 1.0
        basis[r] = q
        it += 1
    return STATUS_ITERLIMIT, it


# ---------------------------------------------------------------------------
# greedy routing: lowest-index arc whose closed-window occupancy at the
# arrival instant is strictly below capacity
# ---------------------------------------------------------------------------


@njit
def _greedy_arcs_nb(tau, t, c):
    n = tau.shape[0]
    M = t.shape[0]
    arcs = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        for a in range(M):
            cnt = 0
            for j in range(k):
                if arcs[j] == a and tau[j] + t[a] >= tau[k]:
                    cnt += 1
            if cnt < c[a]:
                arcs[k] = a
                break
        if arcs[k] < 0:
            return arcs, k
    return arcs, -1


def _greedy_arcs_np(tau, t, c):
    n = tau.shape[0]
    M = t.shape[0]
    arcs = np.full(n, -1, dtype=np.int64)
    for k in range(n):
        prev = arcs[:k]
        active = tau[:k][:, None] + t[None, :] >= tau[k]
        occ = ((prev[:, None] == np.arange(M)[None, :]) & active).sum(axis=0)
        free = np.flatnonzero(occ < c)
        if free.size == 0:
            return arcs, k
        arcs[k] = free[0]
    return arcs, -1


# ---------------------------------------------------------------------------
# exhaustive integral optimum
# ---------------------------------------------------------------------------


@njit
def _bruteforce_arcs_nb(tau, theta, t, c):
    # depth-first over users in arrival order; capacity at tau_k only involves
    # users 0..k, so feasibility is checked incrementally and exactly
    n = tau.shape[0]
    M = t.shape[0]
    rem = np.zeros(n + 1)
    for i in range(n - 1, -1, -1):
        rem[i] = rem[i + 1] + theta[i] * t[0]
    best = np.inf
    best_arcs = np.full(n, -1, dtype=np.int64)
    choice = np.full(n, -1, dtype=np.int64)
    partial = np.zeros(n)
    k = 0
    while k >= 0:
        choice[k] += 1
        if choice[k] >= M:
            choice[k] = -1
            k -= 1
            continue
        a = choice[k]
        cnt = 0
        for j in range(k):
            if choice[j] == a and tau[j] + t[a] >= tau[k]:
                cnt += 1
        if cnt >= c[a]:
            continue
        base = partial[k - 1] if k > 0 else 0.0
        cost = base + theta[k] * t[a]
        if cost + rem[k + 1] >= best:
            continue
        if k == n - 1:
            best = cost
            best_arcs[:] = choice
            continue
        partial[k] = cost
        k += 1
    return best, best_arcs


def _bruteforce_arcs_np(tau, theta, t, c, chunk=1 << 16):
    n = tau.shape[0]
    M = t.shape[0]
    # window[a][k, i] = 1 iff tau_k in [tau_i, tau_i + t_a]
    windows = [
        ((tau[None, :] <= tau[:, None]) & (tau[None, :] + t[a] >= tau[:, None])).astype(np.int64)
        for a in range(M)
    ]
    radix = M ** np.arange(n - 1, -1, -1, dtype=np.int64)
    total = M**n
    best = np.inf
    best_arcs = np.full(n, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk), dtype=np.int64)
        arcs = (idx[:, None] // radix[None, :]) % M
        ok = np.ones(idx.size, dtype=bool)
        for a in range(M):
            on = (arcs == a).astype(np.int64)
            ok &= ((on @ windows[a].T) <= c[a]).all(axis=1)
        if not ok.any():
            continue
        cost = (t[arcs] * theta[None, :]).sum(axis=1)
        cost[~ok] = np.inf
        j = int(np.argmin(cost))
        if cost[j] < best:
            best = cost[j]
            best_arcs = arcs[j].copy()
    return best, best_arcs


# ---------------------------------------------------------------------------
# counter-based uniforms: u_i = unit(mix(seed, i))
# ---------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit
def _splitmix_nb(x):
    z = x + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit
def _hash_uniforms_nb(seed_mixed, n):
    out = np.empty(n)
    for i in range(n):
        h = _splitmix_nb(seed_mixed + _GOLDEN * np.uint64(i + 1))
        out[i] = np.float64(h >> _S11) * _INV53
    return out


def _splitmix_np(x):
    z = x + _GOLDEN
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def _hash_uniforms_np(seed_mixed, n):
    i = np.arange(1, n + 1, dtype=np.uint64)
    h = _splitmix_np(np.uint64(seed_mixed) + _GOLDEN * i)
    return (h >> _S11).astype(np.float64) * _INV53


if USE_NUMBA:
    simplex_iterate = _simplex_iterate_nb
    greedy_arcs = _greedy_arcs_nb
    bruteforce_arcs = _bruteforce_arcs_nb
    hash_uniforms = _hash_uniforms_nb
else:
    simplex_iterate = _simplex_iterate_np
    greedy_arcs = _greedy_arcs_np
    bruteforce_arcs = _bruteforce_arcs_np
    hash_uniforms = _hash_uniforms_np
