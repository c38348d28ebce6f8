"""Dense-basis revised simplex solver.

Solves ``min c @ z`` subject to ``A_eq @ z == b_eq``, ``A_ub @ z <= b_ub`` and
``lb <= z <= ub``.  The problem is rewritten as ``A x = b, x >= 0`` with one
slack per inequality and one artificial per equality; artificials are basic
variables fixed to zero, so the starting basis is the identity.

Two phases:

* feasibility: dual simplex from the starting basis on the cost
  ``max(c, 0) + delta``, where ``delta`` is a small fixed pseudo-random
  perturbation.  This cost keeps the starting basis dual feasible and stops
  the zero-cost columns from tying in every ratio test.
* optimality: primal simplex on the true cost from the feasible basis found
  above.  For nonnegative costs this is a short clean-up.

Pricing is Dantzig's rule for the primal and dual steepest edge for the dual.
After ``STALL`` consecutive degenerate pivots both switch to Bland's
lowest-index rule until progress resumes, which rules out cycling.  All ties
break by index, so solves are deterministic.

The basis inverse is kept explicitly and updated with a rank-one correction
per pivot, then recomputed from scratch every ``refactor_every`` pivots.
Constraint matrices may be given dense or as ``scipy.sparse`` matrices; they
are held column-compressed internally, since only pricing (``A.T @ y``) and
single-column extraction touch them.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import blas

from .errors import DimensionError, InternalError, InvalidProblem

__all__ = ["LpProblem", "LpSolution", "Status", "solve", "check_feasible",
           "PIVOT_TOL", "FEAS_TOL"]

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-8
OPT_TOL = 1e-10
HARRIS_TOL = 1e-9
STALL = 50
DUAL_TOL = 1e-9
DUAL_PIVOT_TOL = 1e-9
PERTURB = 1e-6
PERTURB_SEED = 20200811


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_matrix(a, n: int, name: str):
    if a is None:
        return sp.csr_matrix((0, n))
    if sp.issparse(a):
        a = sp.csr_matrix(a, dtype=float)
        data = a.data
    else:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        data = a
        if a.size == 0:
            a = a.reshape(0, n)
    if a.shape[1] != n:
        raise InvalidProblem(f"{name} has {a.shape[1]} columns, expected {n}")
    if not np.all(np.isfinite(data)):
        raise InvalidProblem(f"{name} contains NaN or Inf")
    return a


def _as_vector(v, m: int, name: str, default=0.0, allow_inf=False):
    if v is None:
        return np.full(m, default, dtype=float)
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != m:
        raise InvalidProblem(f"{name} has length {v.shape[0]}, expected {m}")
    if np.any(np.isnan(v)) or (not allow_inf and not np.all(np.isfinite(v))):
        raise InvalidProblem(f"{name} contains NaN or Inf")
    return v


@dataclass
class LpProblem:
    """Linear program ``min c@z  s.t.  A_eq z = b_eq, A_ub z <= b_ub, lb <= z <= ub``.

    Lower bounds default to 0 and upper bounds to +inf.  ``lb`` may contain
    ``-inf`` for free variables.
    """

    c: np.ndarray
    A_eq: object = None
    b_eq: np.ndarray | None = None
    A_ub: object = None
    b_ub: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        self.c = _as_vector(self.c, np.size(self.c), "c")
        n = self.c.shape[0]
        self.A_eq = _as_matrix(self.A_eq, n, "A_eq")
        self.A_ub = _as_matrix(self.A_ub, n, "A_ub")
        self.b_eq = _as_vector(self.b_eq, self.A_eq.shape[0], "b_eq")
        self.b_ub = _as_vector(self.b_ub, self.A_ub.shape[0], "b_ub")
        self.lb = _as_vector(self.lb, n, "lb", 0.0, allow_inf=True)
        self.ub = _as_vector(self.ub, n, "ub", np.inf, allow_inf=True)
        if np.any(self.lb == np.inf) or np.any(self.ub == -np.inf):
            raise InvalidProblem("bounds must have lb < +inf and ub > -inf")

    @property
    def n(self) -> int:
        return self.c.shape[0]


@dataclass
class LpSolution:
    status: Status
    point: np.ndarray | None = None
    objective_value: float = float("nan")
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def check_feasible(p: LpProblem, z, tol: float = FEAS_TOL) -> bool:
    """True iff ``z`` satisfies every constraint and bound of ``p`` within ``tol``."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != p.n:
        raise DimensionError(f"point has length {z.shape[0]}, problem has {p.n} variables")
    if not np.all(np.isfinite(z)):
        return False
    if p.A_eq.shape[0] and np.max(np.abs(p.A_eq @ z - p.b_eq)) > tol:
        return False
    if p.A_ub.shape[0] and np.max(p.A_ub @ z - p.b_ub) > tol:
        return False
    return bool(np.all(z >= p.lb - tol) and np.all(z <= p.ub + tol))


# --- standard form ----------------------------------------------------------

@dataclass
class _StandardForm:
    A: sp.csc_matrix          # m x N; columns: structural, slack, artificial
    b: np.ndarray
    c: np.ndarray
    n_struct: int
    n_slack: int
    basis: np.ndarray          # starting basis (artificial or slack per row)
    recover: sp.csr_matrix     # z = offset + recover @ x[:n_struct]
    offset: np.ndarray
    infeasible_bounds: bool = False


def _standardize(p: LpProblem) -> _StandardForm:
    n = p.n
    lb, ub = p.lb, p.ub
    offset = np.zeros(n)
    cols_r, cols_c, cols_v = [], [], []   # recover matrix triplets
    ub_rows = []                          # (std column, bound) pairs
    k = 0
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if np.isfinite(lo) and lo == hi:
            offset[j] = lo
            continue
        if np.isfinite(lo):
            offset[j] = lo
            cols_r.append(j); cols_c.append(k); cols_v.append(1.0)
            if np.isfinite(hi):
                ub_rows.append((k, hi - lo))
            k += 1
        elif np.isfinite(hi):
            offset[j] = hi
            cols_r.append(j); cols_c.append(k); cols_v.append(-1.0)
            k += 1
        else:
            cols_r += [j, j]; cols_c += [k, k + 1]; cols_v += [1.0, -1.0]
            k += 2
    n_struct = k
    recover = sp.csr_matrix((cols_v, (cols_r, cols_c)), shape=(n, n_struct))

    A_eq = sp.csr_matrix(p.A_eq) @ recover
    b_eq = p.b_eq - p.A_eq @ offset
    A_ub = sp.csr_matrix(p.A_ub) @ recover
    b_ub = p.b_ub - p.A_ub @ offset
    if ub_rows:
        idx = np.array([r[0] for r in ub_rows])
        A_bd = sp.csr_matrix((np.ones(len(ub_rows)), (np.arange(len(ub_rows)), idx)),
                             shape=(len(ub_rows), n_struct))
        A_ub = sp.vstack([A_ub, A_bd], format="csr")
        b_ub = np.concatenate([b_ub, [r[1] for r in ub_rows]])

    m_eq, m_ub = A_eq.shape[0], A_ub.shape[0]
    m = m_eq + m_ub
    A = sp.hstack([
        sp.vstack([A_eq, A_ub]),
        sp.vstack([sp.csr_matrix((m_eq, m_ub)), sp.identity(m_ub, format="csr")]),
        sp.vstack([sp.identity(m_eq, format="csr"), sp.csr_matrix((m_ub, m_eq))]),
    ], format="csc")
    A.sort_indices()
    b = np.concatenate([b_eq, b_ub])
    basis = np.concatenate([n_struct + m_ub + np.arange(m_eq), n_struct + np.arange(m_ub)])
    c = np.zeros(A.shape[1])
    c[:n_struct] = p.c @ recover
    return _StandardForm(A, b, c, n_struct, m_ub, basis.astype(np.int64), recover, offset,
                         bool(np.any(lb > ub)))


def _equilibrate(A: sp.csc_matrix, n_struct: int, passes: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Geometric-mean row and column scale factors, rounded to powers of two.

    Only structural columns take part in the row statistics; slack and
    artificial columns are rescaled afterwards so their single entry stays 1.
    """
    m, N = A.shape
    r = np.ones(m)
    col = np.ones(N)
    S = sp.csc_matrix(abs(A[:, :n_struct]))
    if S.nnz == 0:
        return r, col
    S.eliminate_zeros()
    for _ in range(passes):
        T = sp.diags(r) @ S @ sp.diags(col[:n_struct])
        T = sp.csc_matrix(T)
        cmax = np.asarray(T.max(axis=0).todense()).ravel()
        cmin = np.asarray(_nz_min(T, axis=0)).ravel()
        ok = cmax > 0
        col[:n_struct][ok] /= np.sqrt(cmax[ok] * cmin[ok])
        T = sp.csr_matrix(sp.diags(r) @ S @ sp.diags(col[:n_struct]))
        rmax = np.asarray(T.max(axis=1).todense()).ravel()
        rmin = np.asarray(_nz_min(T, axis=1)).ravel()
        ok = rmax > 0
        r[ok] /= np.sqrt(rmax[ok] * rmin[ok])
    r = np.exp2(np.round(np.log2(r)))
    col[:n_struct] = np.exp2(np.round(np.log2(col[:n_struct])))
    # the slack/artificial column of row i has its only entry in row i
    extra = A[:, n_struct:].tocoo()
    col[n_struct + extra.col] = 1.0 / (r[extra.row] * np.abs(extra.data))
    return r, col


def _nz_min(T, axis: int) -> np.ndarray:
    """Smallest nonzero |entry| along ``axis`` (0 for empty lines)."""
    T = T.tocsc() if axis == 0 else T.tocsr()
    out = np.zeros(T.shape[1 - axis])
    for i in range(out.shape[0]):
        vals = T.data[T.indptr[i]:T.indptr[i + 1]]
        vals = vals[vals > 0]
        if vals.size:
            out[i] = vals.min()
    return out


# --- revised simplex ----------------------------------------------------------

class _Simplex:
    """Basis bookkeeping shared by the primal and dual iterations.

    Every column has lower bound 0; columns flagged in ``fixed`` (the
    artificials) also have upper bound 0 and may never enter the basis.
    ``Binv`` is stored row-major and updated in place through BLAS ``dger``
    on its transpose.  Reduced costs ``d`` for the active cost vector are
    updated from the pivot row and recomputed at every refactorization.
    """

    def __init__(self, A: sp.csc_matrix, b: np.ndarray, basis: np.ndarray, fixed: np.ndarray,
                 refactor_every: int, max_iter: int):
        self.A = A
        self.AT = sp.csr_matrix(A.T)
        self.b = b
        self.basis = basis.copy()
        self.is_basic = np.zeros(A.shape[1], dtype=bool)
        self.is_basic[self.basis] = True
        self.fixed = fixed
        self.enterable = ~fixed
        self.refactor_every = refactor_every
        self.max_iter = max_iter
        self.iterations = 0
        self.cost = np.zeros(A.shape[1])
        self.refactor()

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.A.indptr[j], self.A.indptr[j + 1]
        return self.A.indices[lo:hi], self.A.data[lo:hi]

    def set_cost(self, cost: np.ndarray):
        self.cost = cost
        self._price()

    def _price(self):
        if self.b.shape[0]:
            self.d = self.cost - self.AT @ (self.cost[self.basis] @ self.Binv)
        else:
            self.d = self.cost.copy()
        self.d[self.basis] = 0.0

    def refactor(self):
        m = self.b.shape[0]
        self.since_refactor = 0
        if m == 0:
            self.Binv = np.zeros((0, 0))
            self.x_B = np.zeros(0)
        else:
            B = self.A[:, self.basis].toarray()
            try:
                self.Binv = np.ascontiguousarray(np.linalg.inv(B))
            except np.linalg.LinAlgError as exc:
                raise InternalError("basis matrix became singular") from exc
            self.x_B = self.Binv @ self.b
        self._price()

    def ftran(self, j: int) -> np.ndarray:
        rows, vals = self.column(j)
        return self.Binv[:, rows] @ vals

    def pivot_row(self, r: int) -> np.ndarray:
        """Row ``r`` of ``Binv @ A`` over all columns."""
        return self.AT @ self.Binv[r]

    def pivot(self, r: int, q: int, alpha: np.ndarray, row: np.ndarray | None = None):
        """Basis change; the leaving variable goes nonbasic at value 0."""
        if self.iterations >= self.max_iter:
            raise InternalError(f"simplex iteration limit ({self.max_iter}) reached")
        if row is None:
            row = self.pivot_row(r)
        piv = alpha[r]
        leaving = self.basis[r]
        self.d -= (self.d[q] / row[q]) * row
        theta = self.x_B[r] / piv
        self.x_B -= theta * alpha
        self.x_B[r] = theta
        row_r = self.Binv[r] / piv
        # Binv.T is Fortran-ordered, so dger updates Binv in place
        blas.dger(-1.0, row_r, alpha, a=self.Binv.T, overwrite_a=1)
        self.Binv[r] = row_r
        self.basis[r] = q
        self.is_basic[leaving] = False
        self.is_basic[q] = True
        self.d[q] = 0.0
        self.iterations += 1
        self.since_refactor += 1
        if self.since_refactor >= self.refactor_every:
            self.refactor()

    def infeasibility(self) -> np.ndarray:
        """Bound violation of each basic variable."""
        viol = np.maximum(-self.x_B, 0.0)
        fixed = self.fixed[self.basis]
        viol[fixed] = np.abs(self.x_B[fixed])
        return viol

    # -- dual simplex --------------------------------------------------------

    def run_dual(self, cost: np.ndarray) -> Status:
        """Dual simplex from a dual-feasible basis.

        Returns OPTIMAL once the basis is primal feasible, or INFEASIBLE when
        a violated row admits no entering column (the dual is unbounded).
        """
        self.set_cost(cost)
        degenerate_run = 0
        checked = False
        while True:
            viol = self.infeasibility()
            bad = np.flatnonzero(viol > FEAS_TOL)
            if bad.size == 0:
                if self.since_refactor and not checked:
                    self.refactor()
                    checked = True
                    continue
                return Status.OPTIMAL
            checked = False
            bland = degenerate_run >= STALL
            if bland:
                r = int(bad[np.argmin(self.basis[bad])])
            else:
                sub = self.Binv[bad]
                norms = np.einsum("ij,ij->i", sub, sub)
                r = int(bad[np.argmax(viol[bad] ** 2 / norms)])
            row = self.pivot_row(r)
            d = np.maximum(self.d, 0.0)
            # x_B[r] moves by -row[j] * t when x_j enters at t >= 0; it must
            # rise when below zero and fall when above.
            a = row if self.x_B[r] > 0 else -row
            tol = DUAL_PIVOT_TOL * max(1.0, float(np.abs(row).max()))
            eligible = np.flatnonzero(self.enterable & ~self.is_basic & (a > tol))
            if eligible.size == 0:
                return Status.INFEASIBLE
            ratios = d[eligible] / a[eligible]
            if bland:
                theta = ratios.min()
                q = int(eligible[np.flatnonzero(ratios <= theta + 1e-12 * max(1.0, theta))[0]])
            else:
                bound = ((d[eligible] + DUAL_TOL) / a[eligible]).min()
                ok = eligible[ratios <= bound]
                q = int(ok[np.argmax(a[ok])])
            degenerate_run = degenerate_run + 1 if d[q] <= DUAL_TOL else 0
            self.pivot(r, q, self.ftran(q), row)

    # -- primal simplex ------------------------------------------------------

    def run_primal(self, cost: np.ndarray) -> Status:
        """Primal simplex from a primal-feasible basis."""
        self.set_cost(cost)
        degenerate_run = 0
        checked = False
        while True:
            d = np.where(self.enterable, self.d, 0.0)
            bland = degenerate_run >= STALL
            if bland:
                cand = np.flatnonzero(d < -OPT_TOL)
                q = int(cand[0]) if cand.size else -1
            else:
                q = int(np.argmin(d))
                if d[q] >= -OPT_TOL:
                    q = -1
            if q < 0:
                if self.since_refactor and not checked:
                    self.refactor()
                    checked = True
                    continue
                return Status.OPTIMAL
            checked = False
            alpha = self.ftran(q)
            r = self._primal_ratio(alpha, bland)
            if r < 0:
                return Status.UNBOUNDED
            degenerate_run = degenerate_run + 1 if abs(self.x_B[r]) <= FEAS_TOL * 1e-2 else 0
            self.pivot(r, q, alpha)

    def _primal_ratio(self, alpha: np.ndarray, bland: bool) -> int:
        tol = PIVOT_TOL * max(1.0, float(np.abs(alpha).max(initial=0.0)))
        fixed = self.fixed[self.basis]
        # basic artificials sit at zero and block in either direction
        pos = np.flatnonzero((alpha > tol) | (fixed & (alpha < -tol)))
        if pos.size == 0:
            return -1
        x = np.where(fixed[pos], 0.0, np.maximum(self.x_B[pos], 0.0))
        a = np.abs(alpha[pos])
        if bland:
            ratios = x / a
            theta = ratios.min()
            ties = pos[ratios <= theta + 1e-12 * max(1.0, theta)]
            return int(ties[np.argmin(self.basis[ties])])
        # Harris two-pass: relax the bound slightly, then take the largest
        # pivot element among rows blocking within the relaxation.
        bound = ((x + HARRIS_TOL) / a).min()
        ok = np.flatnonzero(x / a <= bound)
        return int(pos[ok[np.argmax(a[ok])]])


def solve(p: LpProblem, *, refactor_every: int | None = None,
          max_iter: int | None = None) -> LpSolution:
    """Solve ``p``; infeasibility and unboundedness are reported as statuses."""
    if not isinstance(p, LpProblem):
        raise InvalidProblem("expected an LpProblem")
    sf = _standardize(p)
    if sf.infeasible_bounds:
        return LpSolution(Status.INFEASIBLE)
    m, N = sf.A.shape
    if refactor_every is None:
        refactor_every = max(50, m // 4)
    if max_iter is None:
        max_iter = 20 * (m + N) + 1000
    fixed = np.zeros(N, dtype=bool)
    fixed[sf.n_struct + sf.n_slack:] = True

    row_scale, col_scale = _equilibrate(sf.A, sf.n_struct)
    A = sp.csc_matrix(sp.diags(row_scale) @ sf.A @ sp.diags(col_scale))
    A.sort_indices()
    b = row_scale * sf.b
    c = col_scale * sf.c
    sx = _Simplex(A, b, sf.basis, fixed, refactor_every, max_iter)
    rng = np.random.default_rng(PERTURB_SEED)
    phase_cost = np.zeros(N)
    ns = sf.n_struct
    phase_cost[:ns] = np.maximum(c[:ns], 0.0)
    phase_cost[:ns] += PERTURB * (1.0 + np.abs(c[:ns])) * rng.uniform(1.0, 2.0, ns)
    status = sx.run_dual(phase_cost)
    if status is Status.INFEASIBLE:
        return LpSolution(Status.INFEASIBLE, iterations=sx.iterations)
    log.debug("dual phase done after %d pivots", sx.iterations)
    status = sx.run_primal(c)
    if status is Status.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, iterations=sx.iterations)
    log.debug("primal phase done after %d pivots", sx.iterations)

    x = np.zeros(N)
    x[sx.basis] = np.maximum(sx.x_B, 0.0)
    x[fixed] = 0.0
    x *= col_scale
    z = sf.offset + sf.recover @ x[:sf.n_struct]
    z = np.clip(z, p.lb, p.ub)
    return LpSolution(Status.OPTIMAL, z, float(p.c @ z), sx.iterations)
