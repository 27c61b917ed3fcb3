"""Dense two-phase primal simplex.

Problems are stated as ``min c.x`` subject to rows ``A_i.x (<=|==|>=) b_i``
and bounds ``lb <= x <= ub``.  The pivot rule is Dantzig's (most negative
reduced cost); after ``bland_after`` consecutive degenerate pivots it falls
back to Bland's smallest-index rule until progress resumes, which rules out
cycling.  ``pivot="bland"`` uses Bland's rule throughout.

Scenario programs have few variables and a very large number of ``<=``
rows, most of them slack at the optimum.  :func:`solve_active_set` handles
that shape by solving over a working subset of the rows and adding violated
ones until none remain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels

LE, EQ, GE = -1, 0, 1
_SENSE_CODES = {"<=": LE, "<": LE, "==": EQ, "=": EQ, ">=": GE, ">": GE, LE: LE, EQ: EQ, GE: GE}
_SENSE_TEXT = {LE: "<=", EQ: "==", GE: ">="}

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
MAX_ITER = 10**6


class IterationLimitError(RuntimeError):
    """The simplex hit its hard pivot cap."""


class DimensionError(ValueError):
    pass


@dataclass
class LinearProgram:
    """``min c.x`` s.t. ``A x (senses) b``, ``lb <= x <= ub``.

    ``groups`` tags each row with an integer; rows tagged ``g >= 0`` belong
    to sample ``g`` of a scenario program, ``-1`` marks structural rows.
    """

    c: np.ndarray
    A: np.ndarray
    senses: np.ndarray
    b: np.ndarray
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    groups: np.ndarray | None = None
    names: list[str] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        A = np.asarray(self.A, dtype=float)
        if A.size and A.shape[-1] != n:
            raise DimensionError(f"rows have width {A.shape[-1]}, objective has {n}")
        self.A = A.reshape(-1, n) if A.size else np.zeros((0, n))
        m = self.A.shape[0]
        self.senses = np.array([_SENSE_CODES[s] for s in np.atleast_1d(self.senses)] if m else [], dtype=np.int8)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).ravel()
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float).ravel()
        self.groups = np.full(m, -1, dtype=np.int64) if self.groups is None else np.asarray(self.groups, dtype=np.int64).ravel()
        self.check()

    @classmethod
    def from_rows(cls, c, rows: Iterable[tuple[Sequence[float], str, float]], lb=None, ub=None, groups=None):
        rows = list(rows)
        n = len(c)
        for k, (coef, _, _) in enumerate(rows):
            if len(coef) != n:
                raise DimensionError(f"row {k} has width {len(coef)}, objective has {n}")
        A = np.array([r[0] for r in rows], dtype=float).reshape(len(rows), n)
        return cls(c, A, [r[1] for r in rows], [r[2] for r in rows], lb, ub, groups)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def check(self):
        n, m = self.c.size, self.A.shape[0]
        if self.A.shape[1] != n:
            raise DimensionError(f"constraint width {self.A.shape[1]} != objective width {n}")
        if self.b.size != m or self.senses.size != m or self.groups.size != m:
            raise DimensionError("rhs/sense/group length does not match the number of rows")
        if self.lb.size != n or self.ub.size != n:
            raise DimensionError("bound vectors do not match the number of variables")
        if not np.all(np.isfinite(self.b)):
            raise ValueError("right-hand sides must be finite")
        if not np.all(np.isfinite(self.c)):
            raise ValueError("objective must be finite")
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound above upper bound")
        if np.any(np.isposinf(self.lb)) or np.any(np.isneginf(self.ub)):
            raise ValueError("bounds must leave a nonempty range")

    def subset(self, rows) -> LinearProgram:
        rows = np.asarray(rows)
        return LinearProgram(self.c, self.A[rows], self.senses[rows], self.b[rows], self.lb, self.ub, self.groups[rows])

    def with_objective(self, c) -> LinearProgram:
        return LinearProgram(c, self.A, self.senses, self.b, self.lb, self.ub, self.groups)

    def add_rows(self, A, senses, b, groups=None) -> LinearProgram:
        A = np.asarray(A, dtype=float).reshape(-1, self.n_vars)
        s = np.array([_SENSE_CODES[x] for x in np.atleast_1d(senses)], dtype=np.int8)
        if s.size == 1 and A.shape[0] > 1:
            s = np.repeat(s, A.shape[0])
        g = np.full(A.shape[0], -1, dtype=np.int64) if groups is None else np.asarray(groups, dtype=np.int64)
        return LinearProgram(
            self.c,
            np.vstack([self.A, A]),
            np.concatenate([self.senses, s]),
            np.concatenate([self.b, np.atleast_1d(np.asarray(b, dtype=float))]),
            self.lb,
            self.ub,
            np.concatenate([self.groups, g]),
        )

    def residuals(self, x) -> np.ndarray:
        """Per-row constraint violation (0 when satisfied)."""
        ax = self.A @ x
        r = np.zeros(self.n_rows)
        le, ge, eq = self.senses == LE, self.senses == GE, self.senses == EQ
        r[le] = np.maximum(ax[le] - self.b[le], 0.0)
        r[ge] = np.maximum(self.b[ge] - ax[ge], 0.0)
        r[eq] = np.abs(ax[eq] - self.b[eq])
        return r

    def to_text(self) -> str:
        """Line format: ``min`` row, one constraint per line, then bounds."""
        fmt = lambda v: " ".join(repr(float(x)) for x in v)  # noqa: E731
        lines = [f"min {fmt(self.c)}"]
        for a, s, b in zip(self.A, self.senses, self.b):
            lines.append(f"st {fmt(a)} {_SENSE_TEXT[int(s)]} {float(b)!r}")
        lines.append(f"lb {fmt(self.lb)}")
        lines.append(f"ub {fmt(self.ub)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> LinearProgram:
        c = rows = lb = ub = None
        rows = []
        for line in text.splitlines():
            if not line.strip():
                continue
            tag, *rest = line.split()
            if tag == "min":
                c = [float(v) for v in rest]
            elif tag == "st":
                rows.append(([float(v) for v in rest[:-2]], rest[-2], float(rest[-1])))
            elif tag == "lb":
                lb = [float(v) for v in rest]
            elif tag == "ub":
                ub = [float(v) for v in rest]
        return cls.from_rows(c, rows, lb, ub)


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = np.nan
    basis: frozenset = frozenset()
    iterations: int = 0
    duals: np.ndarray | None = None
    secondary_objective: float = np.nan
    active_rows: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Standard:
    """Bookkeeping for the map between user variables and the x >= 0 form."""

    def __init__(self, lp: LinearProgram):
        n = lp.n_vars
        cols = []  # (user var, sign); free vars take two columns
        shift = np.zeros(n)
        for j in range(n):
            lo, hi = lp.lb[j], lp.ub[j]
            if np.isfinite(lo):
                shift[j] = lo
                cols.append((j, 1.0))
            elif np.isfinite(hi):
                shift[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        self.cols = cols
        self.shift = shift
        ns = len(cols)
        M = np.zeros((n, ns))
        for k, (j, s) in enumerate(cols):
            M[j, k] = s
        self.M = M  # x = shift + M y
        A = lp.A @ M
        b = lp.b - lp.A @ shift
        senses = lp.senses.copy()
        # finite two-sided bounds become explicit rows on the shifted column
        extra_A, extra_b = [], []
        for k, (j, s) in enumerate(cols):
            if s > 0 and np.isfinite(lp.lb[j]) and np.isfinite(lp.ub[j]):
                row = np.zeros(ns)
                row[k] = 1.0
                extra_A.append(row)
                extra_b.append(lp.ub[j] - lp.lb[j])
        if extra_A:
            A = np.vstack([A, extra_A])
            b = np.concatenate([b, extra_b])
            senses = np.concatenate([senses, np.full(len(extra_A), LE, dtype=np.int8)])
        flip = b < 0
        A[flip] *= -1
        b[flip] *= -1
        senses[flip] *= -1
        self.flip = np.where(flip, -1.0, 1.0)
        self.A, self.b, self.senses = A, b, senses
        self.c = lp.c @ M
        self.c0 = float(lp.c @ shift)
        self.n_user_rows = lp.n_rows


def solve(lp: LinearProgram, pivot: str = "dantzig", max_iter: int = MAX_ITER, duals: bool = False) -> LpSolution:
    """Solve ``lp`` to a vertex optimum.

    Returns status ``optimal``, ``infeasible`` or ``unbounded``; raises
    :class:`IterationLimitError` if ``max_iter`` pivots are exhausted.
    """
    lp.check()
    bland_after = 0 if pivot == "bland" else 50
    std = _Standard(lp)
    A, b, senses = std.A, std.b, std.senses
    m, ns = A.shape
    n_slack = int(np.sum(senses != EQ))
    art_rows = np.flatnonzero(senses != LE)
    n_art = art_rows.size
    width = ns + n_slack + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, :ns] = A
    T[:m, -1] = b
    basis = np.empty(m, dtype=np.int64)
    slack_of_row = np.full(m, -1, dtype=np.int64)
    art_of_row = np.full(m, -1, dtype=np.int64)
    k = ns
    for i in range(m):
        if senses[i] != EQ:
            T[i, k] = 1.0 if senses[i] == LE else -1.0
            slack_of_row[i] = k
            if senses[i] == LE:
                basis[i] = k
            k += 1
    for r, i in enumerate(art_rows):
        col = ns + n_slack + r
        T[i, col] = 1.0
        art_of_row[i] = col
        basis[i] = col
    n_real = ns + n_slack
    iters = 0

    if n_art:
        T[m, :] = 0.0
        T[m, :] -= T[art_rows].sum(axis=0)
        T[m, n_real:width] = 0.0
        status, it = kernels.simplex_iterate(T, basis, n_real, max_iter, bland_after, OPT_TOL)
        iters += it
        if status == kernels.STATUS_ITERLIMIT:
            raise IterationLimitError(f"phase 1 exceeded {max_iter} pivots")
        infeas = -T[m, -1]
        if infeas > FEAS_TOL * (1.0 + np.abs(b).max(initial=0.0)):
            return LpSolution("infeasible", iterations=iters)
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = np.ones(m + 1, dtype=bool)
        for i in range(m):
            if basis[i] >= n_real:
                cand = np.flatnonzero(np.abs(T[i, :n_real]) > 1e-9)
                if cand.size:
                    q = int(cand[np.argmax(np.abs(T[i, cand]))])
                    T[i] /= T[i, q]
                    f = T[:, q].copy()
                    f[i] = 0.0
                    T -= np.outer(f, T[i])
                    T[:, q] = 0.0
                    T[i, q] = 1.0
                    basis[i] = q
                else:
                    keep[i] = False
        if not keep.all():
            T = T[keep]
            basis = basis[keep[:-1]]
            m = basis.size
        if not duals:
            T = np.ascontiguousarray(np.delete(T, np.s_[n_real:width], axis=1))
        else:
            T = np.ascontiguousarray(T)

    cfull = np.zeros(T.shape[1] - 1)
    cfull[:ns] = std.c
    T[m, :-1] = cfull
    T[m, -1] = 0.0
    T[m, :] -= cfull[basis] @ T[:m, :]
    status, it = kernels.simplex_iterate(T, basis, n_real, max_iter - iters, bland_after, OPT_TOL)
    iters += it
    if status == kernels.STATUS_ITERLIMIT:
        raise IterationLimitError(f"phase 2 exceeded {max_iter} pivots")
    if status == kernels.STATUS_UNBOUNDED:
        return LpSolution("unbounded", iterations=iters)

    y = np.zeros(ns)
    rhs = T[:m, -1]
    struct = basis < ns
    y[basis[struct]] = np.maximum(rhs[struct], 0.0)
    x = std.shift + std.M @ y
    sol = LpSolution("optimal", x, float(lp.c @ x), frozenset(int(v) for v in basis), iters)
    if duals:
        sol.duals = _read_duals(T, std, slack_of_row, art_of_row, keep_rows=None if not n_art else keep)
    return sol


def _read_duals(T, std, slack_of_row, art_of_row, keep_rows):
    """Dual prices of the user rows, recovered from final reduced costs."""
    m_std = std.A.shape[0]
    d = T[-1, :-1]
    y = np.zeros(m_std)
    for i in range(m_std):
        if std.senses[i] == LE:
            y[i] = -d[slack_of_row[i]]
        elif std.senses[i] == GE:
            y[i] = d[slack_of_row[i]]
        else:
            y[i] = -d[art_of_row[i]]
    y *= std.flip
    return y[: std.n_user_rows]


def lexicographic_solve(lp: LinearProgram, secondary, rel_tol: float = 1e-9, **kw) -> LpSolution:
    """Minimise ``secondary`` over the optimal face of ``lp``.

    The primary optimum ``z`` is pinned by the extra row
    ``c.x <= z + rel_tol * max(1, |z|)``.
    """
    secondary = np.asarray(secondary, dtype=float)
    if secondary.size != lp.n_vars:
        raise DimensionError("secondary objective width mismatch")
    first = solve(lp, **kw)
    if not first.optimal:
        return first
    z = first.objective
    pinned = lp.add_rows(lp.c, "<=", z + rel_tol * max(1.0, abs(z))).with_objective(secondary)
    second = solve(pinned, **kw)
    if not second.optimal:  # pragma: no cover - pinned face is nonempty by construction
        raise RuntimeError(f"secondary solve returned {second.status}")
    second.secondary_objective = second.objective
    second.objective = float(lp.c @ second.x)
    second.iterations += first.iterations
    return second


def solve_active_set(
    lp: LinearProgram,
    lazy: np.ndarray,
    initial: np.ndarray | None = None,
    objective=None,
    tol: float = FEAS_TOL,
    max_rounds: int = 500,
    max_add: int | None = None,
    **kw,
) -> LpSolution:
    """Solve ``lp`` treating the ``<=`` rows flagged in ``lazy`` as a pool.

    Starts from the non-lazy rows plus ``initial``; after each solve the pool
    rows violated by more than ``tol`` (at most ``max_add`` of them, most
    violated first) join the working set.  The result is optimal for the
    full problem.  ``objective`` overrides ``lp.c``.
    """
    lazy = np.asarray(lazy, dtype=bool)
    if np.any(lp.senses[lazy] != LE):
        raise ValueError("only <= rows can be handled lazily")
    c = lp.c if objective is None else np.asarray(objective, dtype=float)
    active = ~lazy
    if initial is not None:
        active = active.copy()
        active[np.asarray(initial)] = True
    pool = np.flatnonzero(lazy)
    Ap, bp = lp.A[pool], lp.b[pool]
    iters = 0
    for _ in range(max_rounds):
        rows = np.flatnonzero(active)
        sub = LinearProgram(c, lp.A[rows], lp.senses[rows], lp.b[rows], lp.lb, lp.ub)
        sol = solve(sub, **kw)
        iters += sol.iterations
        if not sol.optimal:
            sol.iterations = iters
            return sol
        viol = (Ap @ sol.x - bp) / np.maximum(1.0, np.abs(bp))
        hit = np.flatnonzero((viol > tol) & ~active[pool])
        if max_add is not None and hit.size > max_add:
            hit = hit[np.argsort(-viol[hit], kind="stable")[:max_add]]
        new = pool[hit]
        if new.size == 0:
            sol.iterations = iters
            sol.active_rows = rows
            return sol
        active[new] = True
    raise IterationLimitError(f"active-set loop did not settle in {max_rounds} rounds")


def lexicographic_active_set(
    lp: LinearProgram,
    lazy: np.ndarray,
    secondary,
    initial: np.ndarray | None = None,
    rel_tol: float = 1e-9,
    **kw,
) -> LpSolution:
    """:func:`lexicographic_solve` on top of :func:`solve_active_set`."""
    first = solve_active_set(lp, lazy, initial, **kw)
    if not first.optimal:
        return first
    z = first.objective
    pinned = lp.add_rows(lp.c, "<=", z + rel_tol * max(1.0, abs(z)))
    lazy2 = np.concatenate([lazy, [False]])
    second = solve_active_set(pinned, lazy2, first.active_rows, objective=secondary, **kw)
    if not second.optimal:  # pragma: no cover
        raise RuntimeError(f"secondary solve returned {second.status}")
    second.secondary_objective = second.objective
    second.objective = float(lp.c @ second.x)
    second.iterations += first.iterations
    second.active_rows = second.active_rows[second.active_rows < lp.n_rows]
    return second
