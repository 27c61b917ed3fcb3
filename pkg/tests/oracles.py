"""Independent reference implementations used as test oracles.

Nothing here imports the package's kernels or LP code; each oracle is a
direct, slow transcription of the definition it checks.
"""
import itertools

import mpmath
import numpy as np


def occupancy(tau, t, arcs, arc, time):
    """Users on ``arc`` at ``time``, closed windows [tau_i, tau_i + t_a]."""
    return sum(1 for ti, a in zip(tau, arcs) if a == arc and ti <= time <= ti + t[a])


def feasible(tau, t, c, arcs):
    for k in range(len(tau)):
        for a in range(len(t)):
            if occupancy(tau, t, arcs, a, tau[k]) > c[a]:
                return False
    return True


def enumerate_feasible(tau, t, c):
    """Every feasible integral assignment as a tuple of arc indices."""
    return [arcs for arcs in itertools.product(range(len(t)), repeat=len(tau)) if feasible(tau, t, c, arcs)]


def brute_opt(tau, theta, t, c):
    best = None
    for arcs in enumerate_feasible(tau, t, c):
        cost = sum(th * t[a] for th, a in zip(theta, arcs))
        if best is None or cost < best:
            best = cost
    return best


def greedy_sim(tau, t, c):
    arcs = []
    for i, ti in enumerate(tau):
        for a in range(len(t)):
            occ = sum(1 for j in range(i) if arcs[j] == a and tau[j] <= ti <= tau[j] + t[a])
            if occ < c[a]:
                arcs.append(a)
                break
        else:
            raise RuntimeError(f"user {i} blocked")
    return arcs


def vertex_enum(c, A, senses, b, ub):
    """min c.x over {A x (senses) b, 0 <= x <= ub} by enumerating vertices.

    Returns ``None`` when the region is empty.  ``ub`` must be finite so the
    region is a polytope and the optimum sits at a vertex.
    """
    c = np.asarray(c, float)
    n = c.size
    rows, rhs, is_eq = [], [], []
    for a, s, bi in zip(A, senses, b):
        if s == "==":
            rows.append(a); rhs.append(bi); is_eq.append(True)
        elif s == "<=":
            rows.append(a); rhs.append(bi); is_eq.append(False)
        else:
            rows.append(-np.asarray(a)); rhs.append(-bi); is_eq.append(False)
    for j in range(n):
        e = np.zeros(n); e[j] = -1.0
        rows.append(e); rhs.append(0.0); is_eq.append(False)
        e = np.zeros(n); e[j] = 1.0
        rows.append(e); rhs.append(ub[j]); is_eq.append(False)
    G = np.array(rows, float)
    h = np.array(rhs, float)
    eq = np.flatnonzero(is_eq)
    ineq = np.flatnonzero(~np.array(is_eq))
    need = n - eq.size
    best = None
    if need < 0:
        combos = []
    else:
        combos = itertools.combinations(ineq, need)
    for combo in combos:
        idx = np.concatenate([eq, np.array(combo, dtype=int)])
        M = G[idx]
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, h[idx])
        slack = G @ x - h
        if np.all(slack[ineq] <= 1e-8) and np.all(np.abs(slack[eq]) <= 1e-8):
            v = float(c @ x)
            if best is None or v < best:
                best = v
    return best


def risk_poly_mp(K, k, beta, t, pooled=True, dps=50):
    """The risk polynomial at ``t`` in ``dps``-digit arithmetic.

    Returns ``(value, largest term magnitude)``.
    """
    with mpmath.workdps(dps):
        t = mpmath.mpf(t)
        b = mpmath.mpf(beta)
        w1 = b / 2 if pooled else b / (2 * K)
        w2 = b / 6 if pooled else b / (6 * K)
        pos = mpmath.binomial(K, k) * t ** (K - k)
        terms = [w1 * mpmath.binomial(i, k) * t ** (i - k) for i in range(k, K)]
        terms += [w2 * mpmath.binomial(i, k) * t ** (i - k) for i in range(K + 1, 4 * K + 1)]
        value = pos - mpmath.fsum(terms)
        big = max([abs(pos)] + [abs(x) for x in terms])
        return value, big


def random_lp(rng, max_vars=6, max_rows=8, box=10.0):
    """Small integer LP inside the box ``0 <= x <= box``.

    Returns ``(c, A, senses, b, ub)``; roughly a third of draws are infeasible.
    """
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(1, max_rows + 1))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    b = rng.integers(-10, 21, size=m).astype(float)
    senses = list(rng.choice(["<=", ">=", "=="], size=m, p=[0.6, 0.3, 0.1]))
    c = rng.integers(-5, 6, size=n).astype(float)
    return c, A, senses, b, np.full(n, box)


def random_identical_vot(rng, max_users=8):
    """Two-arc identical-VOT instance with integer data.

    Integer arrival gaps make departures coincide with later arrivals, which
    exercises the closed-window convention.  Returns ``(tau, t, c)``.
    """
    n = int(rng.integers(1, max_users + 1))
    tau = np.concatenate([[0], np.cumsum(rng.integers(1, 4, size=n - 1))]).astype(float)
    t1 = int(rng.integers(1, 8))
    t = [float(t1), float(t1 + rng.integers(0, 8))]
    c = [int(rng.integers(1, 3)), int(rng.integers(1, 4))]
    return tau, t, c


def fuzz_identical_vot(n_cases=200, seed=1):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_cases:
        tau, t, c = random_identical_vot(rng)
        if enumerate_feasible(tau, t, c):
            out.append((tau, t, c))
    return out
