"""Sparse revised simplex for bounded-variable linear programs.

This is the bounding engine for branch and bound: a two-phase primal simplex
(phase 1 minimizes total bound infeasibility of the basic variables) over a
computational form with one logical variable per row. The basis is held as a
sparse LU factorization (SuperLU) plus a product-form eta file, refreshed
periodically. Dantzig pricing switches to Bland's rule after a degeneracy
stall to guarantee progress.

Rows may be marked lazy: the solver then works on an active subset, certifies
the final point against every row, and activates violated rows in batches, so
models with many inactive constraints stay cheap.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .constants import (
    BLAND_THRESHOLD,
    COST_TOL,
    FEAS_TOL,
    PIVOT_TOL,
    REFACTOR_INTERVAL,
)

LE, EQ, GE = -1, 0, 1
INF = np.inf


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


@dataclass
class LpModel:
    """min obj . x subject to a x (<=|=|>=) rhs and lo <= x <= hi.

    ``lazy_rows`` marks rows that may be activated on demand; ``row_hint``
    suggests which lazy rows to activate up front (e.g. from a heuristic).
    """

    obj: np.ndarray
    a: sp.csr_matrix
    sense: np.ndarray
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    lazy_rows: np.ndarray | None = None
    row_hint: np.ndarray | None = None

    @property
    def ncols(self) -> int:
        return int(self.a.shape[1])

    @property
    def nrows(self) -> int:
        return int(self.a.shape[0])

    def validate(self) -> None:
        m, n = self.a.shape
        if not (len(self.obj) == n and len(self.lo) == n and len(self.hi) == n):
            raise ValueError("column arrays disagree with the constraint matrix")
        if not (len(self.sense) == m and len(self.rhs) == m):
            raise ValueError("row arrays disagree with the constraint matrix")
        if np.any(self.lo > self.hi):
            raise ValueError("some variable has lo > hi")
        if not np.all(np.isfinite(self.obj)):
            raise ValueError("objective costs must be finite")


@dataclass
class LpConfig:
    feas_tol: float = FEAS_TOL
    pivot_tol: float = PIVOT_TOL
    cost_tol: float = COST_TOL
    iter_limit: int = 200_000
    refactor_interval: int = REFACTOR_INTERVAL
    bland_threshold: int = BLAND_THRESHOLD
    lazy_batch: int = 4096
    lazy_rounds: int = 200


@dataclass
class Basis:
    """Combinatorial simplex state for warm starts; variable ids are stable
    across lazy-row activation (logical of global row g has id ncols + g)."""

    basic: np.ndarray       # extended variable ids, one per active row
    at_upper: np.ndarray    # bool per extended variable id
    active_rows: np.ndarray


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective: float
    iterations: int
    basis: Basis | None = None

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Core:
    """Simplex over a fixed active-row subset of the model."""

    def __init__(self, model: LpModel, rows: np.ndarray, cfg: LpConfig,
                 basic_ext: np.ndarray | None, at_upper_ext: np.ndarray | None):
        self.cfg = cfg
        self.rows = rows
        n = model.ncols
        m = rows.size
        self.n_struct = n
        self.m = m
        a_struct = model.a[rows].tocsc()
        eye = sp.identity(m, format="csc") if m else sp.csc_matrix((0, 0))
        self.A = sp.hstack([a_struct, eye], format="csc") if m else a_struct.tocsc()
        self.AT = self.A.T.tocsr()
        self.b = model.rhs[rows].astype(float)

        sense = model.sense[rows]
        slo = np.where(sense == GE, -INF, 0.0)
        shi = np.where(sense == LE, INF, 0.0)
        self.lo = np.concatenate([model.lo.astype(float), slo])
        self.hi = np.concatenate([model.hi.astype(float), shi])
        self.cost = np.concatenate([model.obj.astype(float), np.zeros(m)])
        self.ncols = n + m

        self.ext_ids = np.concatenate([np.arange(n), n + rows])

        if basic_ext is None:
            basic = np.arange(n, n + m)
            at_upper = np.zeros(self.ncols, dtype=bool)
        else:
            basic_ext = np.asarray(basic_ext, dtype=np.int64)
            is_struct = basic_ext < n
            basic = np.empty(basic_ext.size, dtype=np.int64)
            basic[is_struct] = basic_ext[is_struct]
            g = basic_ext[~is_struct] - n
            pos = np.searchsorted(rows, g)
            if pos.size and not np.array_equal(rows[pos], g):
                raise ValueError("warm-start basis references inactive rows")
            basic[~is_struct] = n + pos
            at_upper = at_upper_ext[self.ext_ids].copy()
        self.basic = basic
        self.at_upper = at_upper
        self.in_basis = np.zeros(self.ncols, dtype=bool)
        self.in_basis[self.basic] = True
        # a variable parked at the upper bound needs that bound finite
        self.at_upper &= np.isfinite(self.hi)

        self.lu = None
        self.etas: list[tuple[int, np.ndarray]] = []
        self.x = np.zeros(self.ncols)
        self.iterations = 0
        self._stall = 0
        self._bland = False
        self._set_nonbasic_values()
        self._refactor()

    # -- linear algebra ----------------------------------------------------

    def _refactor(self) -> None:
        self.etas = []
        if self.m == 0:
            self.lu = None
            return
        bmat = self.A[:, self.basic]
        try:
            self.lu = splu(bmat.tocsc())
        except RuntimeError:
            # singular basis: fall back to the all-logical basis
            self.in_basis[:] = False
            self.basic = np.arange(self.n_struct, self.n_struct + self.m)
            self.in_basis[self.basic] = True
            self._set_nonbasic_values()
            self.lu = splu(self.A[:, self.basic].tocsc())
        self._recompute_basics()

    def _ftran(self, v: np.ndarray) -> np.ndarray:
        x = self.lu.solve(v)
        for r, u in self.etas:
            t = x[r] / u[r]
            if t != 0.0:
                x -= u * t
            x[r] = t
        return x

    def _btran(self, c: np.ndarray) -> np.ndarray:
        w = c.copy()
        for r, u in reversed(self.etas):
            s = u @ w
            w[r] = (w[r] - s + u[r] * w[r]) / u[r]
        return self.lu.solve(w, trans="T")

    def _column(self, j: int) -> np.ndarray:
        col = np.zeros(self.m)
        sl = slice(self.A.indptr[j], self.A.indptr[j + 1])
        col[self.A.indices[sl]] = self.A.data[sl]
        return col

    def _set_nonbasic_values(self) -> None:
        nb = ~self.in_basis
        val = np.where(
            self.at_upper & np.isfinite(self.hi),
            self.hi,
            np.where(np.isfinite(self.lo), self.lo, np.where(np.isfinite(self.hi), self.hi, 0.0)),
        )
        self.x[nb] = val[nb]

    def _recompute_basics(self) -> None:
        if self.m == 0:
            return
        xnb = self.x.copy()
        xnb[self.basic] = 0.0
        r = self.b - self.A @ xnb
        self.x[self.basic] = self._ftran(r)

    # -- iteration ---------------------------------------------------------

    def _violations(self) -> tuple[np.ndarray, np.ndarray]:
        xb = self.x[self.basic]
        lob = self.lo[self.basic]
        hib = self.hi[self.basic]
        below = np.maximum(lob - xb, 0.0)
        above = np.maximum(xb - hib, 0.0)
        return below, above

    def run(self, iter_budget: int) -> LpStatus:
        tol = self.cfg.feas_tol
        confirm = 0
        while True:
            if self.iterations >= iter_budget:
                return LpStatus.ITERATION_LIMIT
            below, above = self._violations()
            phase1 = bool((below > tol).any() or (above > tol).any())
            if phase1:
                cb = np.where(above > tol, 1.0, np.where(below > tol, -1.0, 0.0))
            else:
                cb = self.cost[self.basic]
            y = self._btran(cb) if self.m else np.zeros(0)
            d = (np.zeros(self.ncols) if phase1 else self.cost) - (self.AT @ y)

            nb = ~self.in_basis
            fixed = self.lo == self.hi
            free = ~np.isfinite(self.lo) & ~np.isfinite(self.hi)
            ctol = self.cfg.cost_tol
            up_ok = nb & ~fixed & ~self.at_upper & (d < -ctol)
            dn_ok = nb & ~fixed & (self.at_upper | free) & (d > ctol)
            cand = up_ok | dn_ok
            if not cand.any():
                if phase1:
                    return LpStatus.INFEASIBLE
                if confirm == 0:
                    # confirm optimality on a fresh factorization
                    self._refactor()
                    confirm = 1
                    continue
                return LpStatus.OPTIMAL
            confirm = 0

            if self._bland:
                j = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, np.abs(d), -1.0)
                j = int(np.argmax(score))
            sigma = 1.0 if up_ok[j] else -1.0

            status = self._pivot(j, sigma, phase1)
            if status is not None:
                return status

    def _pivot(self, j: int, sigma: float, phase1: bool) -> LpStatus | None:
        tol = self.cfg.feas_tol
        ptol = self.cfg.pivot_tol
        u = self._ftran(self._column(j)) if self.m else np.zeros(0)
        delta = -sigma * u  # basic movement per unit step

        xb = self.x[self.basic]
        lob = self.lo[self.basic]
        hib = self.hi[self.basic]
        below = xb < lob - tol
        above = xb > hib + tol
        feasible = ~below & ~above

        pos = delta > ptol
        neg = delta < -ptol
        t = np.full(self.m, INF)
        to_upper = np.zeros(self.m, dtype=bool)

        mask = feasible & pos & np.isfinite(hib)
        t[mask] = (hib[mask] - xb[mask]) / delta[mask]
        to_upper[mask] = True
        mask = feasible & neg & np.isfinite(lob)
        t[mask] = (xb[mask] - lob[mask]) / (-delta[mask])
        # infeasible basics block at the bound they are approaching
        mask = below & pos
        t[mask] = (lob[mask] - xb[mask]) / delta[mask]
        mask = above & neg
        t[mask] = (xb[mask] - hib[mask]) / (-delta[mask])
        to_upper[mask] = True
        t = np.maximum(t, 0.0)

        rng = self.hi[j] - self.lo[j]
        t_own = rng if np.isfinite(rng) else INF

        t_min_rows = t.min() if self.m else INF
        t_star = min(t_min_rows, t_own)
        if not np.isfinite(t_star):
            if phase1:
                # numerically inconsistent; refresh and let the caller retry
                self._refactor()
                self.iterations += 1
                return None
            return LpStatus.UNBOUNDED

        if t_star <= 1e-12:
            self._stall += 1
            if self._stall >= self.cfg.bland_threshold:
                self._bland = True
        else:
            self._stall = 0
            self._bland = False

        if t_own <= t_min_rows - 1e-12 or (t_own <= t_min_rows and self.m == 0):
            # bound flip, no basis change
            self.x[j] = self.hi[j] if sigma > 0 else self.lo[j]
            self.at_upper[j] = sigma > 0
            if self.m:
                self.x[self.basic] += delta * t_star
            self.iterations += 1
            return None

        near = t <= t_star + 1e-12
        if self._bland:
            ids = np.where(near, self.ext_ids[self.basic], np.iinfo(np.int64).max)
            r = int(np.argmin(ids))
        else:
            mag = np.where(near, np.abs(delta), -1.0)
            r = int(np.argmax(mag))
        t_star = max(t[r], 0.0)

        self.x[self.basic] += delta * t_star
        self.x[j] += sigma * t_star
        leave = int(self.basic[r])
        self.x[leave] = self.hi[leave] if to_upper[r] else self.lo[leave]
        self.at_upper[leave] = bool(to_upper[r])
        self.in_basis[leave] = False
        self.basic[r] = j
        self.in_basis[j] = True
        self.etas.append((r, u))
        self.iterations += 1
        if len(self.etas) >= self.cfg.refactor_interval:
            self._refactor()
        return None

    # -- export ------------------------------------------------------------

    def snapshot(self, nrows_total: int) -> Basis:
        at_upper_ext = np.zeros(self.n_struct + nrows_total, dtype=bool)
        at_upper_ext[self.ext_ids[self.at_upper]] = True
        return Basis(
            basic=self.ext_ids[self.basic].copy(),
            at_upper=at_upper_ext,
            active_rows=self.rows.copy(),
        )

    def structural_x(self) -> np.ndarray:
        return self.x[: self.n_struct].copy()


def _row_violations(model: LpModel, rows: np.ndarray, x: np.ndarray, tol: float) -> np.ndarray:
    if rows.size == 0:
        return np.zeros(0)
    ax = model.a[rows] @ x
    rhs = model.rhs[rows]
    sense = model.sense[rows]
    v = np.zeros(rows.size)
    v[sense == LE] = ax[sense == LE] - rhs[sense == LE]
    v[sense == GE] = rhs[sense == GE] - ax[sense == GE]
    v[sense == EQ] = np.abs(ax[sense == EQ] - rhs[sense == EQ])
    return np.maximum(v, 0.0)


def solve_lp(model: LpModel, config: LpConfig | None = None, basis: Basis | None = None) -> LpSolution:
    """Solve the LP; when Optimal, the point is feasible for every row,
    including lazy rows that were activated along the way."""
    cfg = config or LpConfig()
    model.validate()
    n, m_all = model.ncols, model.nrows

    if np.any(model.lo > model.hi):
        return LpSolution(LpStatus.INFEASIBLE, np.zeros(n), INF, 0, None)

    if model.lazy_rows is None:
        eager = np.arange(m_all)
        lazy_pool = np.zeros(m_all, dtype=bool)
    else:
        lazy_pool = np.asarray(model.lazy_rows, dtype=bool).copy()
        eager = np.flatnonzero(~lazy_pool)

    active_mask = np.zeros(m_all, dtype=bool)
    active_mask[eager] = True
    if model.row_hint is not None:
        active_mask[np.asarray(model.row_hint, dtype=np.int64)] = True
    basic_ext = at_upper_ext = None
    if basis is not None:
        active_mask[basis.active_rows] = True
        basic_ext = basis.basic
        at_upper_ext = basis.at_upper

    covered = np.zeros(m_all, dtype=bool)  # rows the current basis accounts for
    if basis is not None:
        covered[basis.active_rows] = True

    total_iters = 0
    for _ in range(cfg.lazy_rounds):
        rows = np.flatnonzero(active_mask)
        if basic_ext is not None:
            # logicals of rows the basis has never seen join it, keeping it square
            fresh = rows[~covered[rows]]
            if fresh.size:
                basic_ext = np.concatenate([basic_ext, n + fresh])
            covered[rows] = True
        core = _Core(model, rows, cfg, basic_ext, at_upper_ext)
        status = core.run(cfg.iter_limit - total_iters)
        total_iters += core.iterations
        x = core.structural_x()
        snap = core.snapshot(m_all)
        if status is not LpStatus.OPTIMAL:
            return LpSolution(status, x, float(model.obj @ x), total_iters, snap)
        inactive = np.flatnonzero(~active_mask)
        v = _row_violations(model, inactive, x, cfg.feas_tol)
        bad = v > cfg.feas_tol
        if not bad.any():
            return LpSolution(LpStatus.OPTIMAL, x, float(model.obj @ x), total_iters, snap)
        order = np.argsort(-v[bad], kind="stable")
        add = inactive[bad][order][: cfg.lazy_batch]
        active_mask[add] = True
        basic_ext, at_upper_ext = snap.basic, snap.at_upper
        covered[rows] = True
    return LpSolution(LpStatus.ITERATION_LIMIT, x, float(model.obj @ x), total_iters, snap)


# ---------------------------------------------------------------------------
# Debug dump (CPLEX LP text format) for cross-checking against other solvers


def lp_to_text(model: LpModel, integer_cols: np.ndarray | None = None) -> str:
    def term(c, j):
        return f"{'+' if c >= 0 else '-'} {abs(c):.12g} x{j}"

    lines = ["Minimize", " obj: " + " ".join(term(c, j) for j, c in enumerate(model.obj) if c != 0.0)]
    lines.append("Subject To")
    csr = model.a
    for i in range(model.nrows):
        sl = slice(csr.indptr[i], csr.indptr[i + 1])
        body = " ".join(term(c, j) for j, c in zip(csr.indices[sl], csr.data[sl]))
        op = {LE: "<=", EQ: "=", GE: ">="}[int(model.sense[i])]
        lines.append(f" r{i}: {body} {op} {model.rhs[i]:.12g}")
    lines.append("Bounds")
    for j in range(model.ncols):
        lo = "-inf" if not np.isfinite(model.lo[j]) else f"{model.lo[j]:.12g}"
        hi = "+inf" if not np.isfinite(model.hi[j]) else f"{model.hi[j]:.12g}"
        lines.append(f" {lo} <= x{j} <= {hi}")
    if integer_cols is not None and len(integer_cols):
        lines.append("General")
        lines.append(" " + " ".join(f"x{j}" for j in integer_cols))
    lines.append("End")
    return "\n".join(lines) + "\n"
