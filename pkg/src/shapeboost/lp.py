"""Dense linear programming with dual multipliers.

Self-contained two-phase simplex on a dense tableau. It exists to serve
two callers: the restricted master problem of the boosting loop and the
linearized L1 weak-learning subproblems. Both need reliable duals, so
the solver reports them for every constraint under the convention

    L(x, y) = c.x + sum_i y_i (a_i.x - b_i),   y_i >= 0 for '<=' rows,

i.e. the dual of a binding '<=' constraint in a minimization is
nonnegative.

Pivoting is deterministic: largest-coefficient (Dantzig) selection with
lowest-index tie-breaks, switching permanently to Bland's rule inside a
solve after a long degenerate streak, which restores the cycle-free
guarantee. ``pivot="bland"`` forces Bland's rule from the start.

Tall problems (many more constraints than variables, the shape of the
weak-learning LPs) are solved through their explicit dual, which has the
transposed shape; primal values are recovered from the dual's duals.
This is invisible to callers apart from speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-7
GAP_TOL = 1e-6
PIVOT_TOL = 1e-9
DEGENERATE_STREAK = 60
MAX_PIVOTS = 200_000


class LpError(RuntimeError):
    """Numerical failure inside the simplex; never returned as a status."""


@dataclass
class LinearProgram:
    """min c.x subject to rows of (a, relation, b) and box bounds on x."""

    c: np.ndarray
    a: np.ndarray
    relations: tuple
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).ravel()
        n = self.c.size
        self.a = np.asarray(self.a, dtype=np.float64)
        if self.a.ndim != 2 or self.a.shape[1] != n:
            raise ValueError(f"constraint matrix shape {self.a.shape} does not match {n} variables")
        self.b = np.asarray(self.b, dtype=np.float64).ravel()
        self.relations = tuple(self.relations)
        m = self.a.shape[0]
        if self.b.size != m or len(self.relations) != m:
            raise ValueError("constraint count mismatch between a, relations, b")
        for rel in self.relations:
            if rel not in ("<=", "="):
                raise ValueError(f"relation must be '<=' or '=', got {rel!r}")
        if m and not np.all(np.isfinite(self.b)):
            raise ValueError("rhs must be finite")
        if m and not np.all(np.isfinite(self.a)):
            raise ValueError("constraint coefficients must be finite")
        self.lower = np.asarray(self.lower, dtype=np.float64).ravel()
        self.upper = np.asarray(self.upper, dtype=np.float64).ravel()
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bounds length mismatch")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_constraints(self) -> int:
        return self.a.shape[0]


@dataclass
class LpSolution:
    status: str  # 'optimal' | 'infeasible' | 'unbounded'
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float | None = None
    dual_objective: float | None = None


def solve_lp(lp: LinearProgram, pivot: str = "auto") -> LpSolution:
    """Solve the LP, producing primal values and constraint duals.

    ``pivot`` is 'auto' (Dantzig with Bland fallback, dualized when the
    problem is much taller than wide), 'dantzig', or 'bland'. All modes
    are deterministic for identical input.
    """
    if pivot not in ("auto", "dantzig", "bland"):
        raise ValueError(f"unknown pivot mode {pivot!r}")
    mode = "dantzig" if pivot == "auto" else pivot
    if pivot == "auto" and _dual_route_pays_off(lp):
        sol = _solve_via_dual(lp, mode)
        if sol is not None:
            return sol
    return _solve_direct(lp, mode)


def _dual_route_pays_off(lp: LinearProgram) -> bool:
    # effective row count once bounds become rows
    bound_rows = int(np.sum(np.isfinite(lp.lower)) + np.sum(np.isfinite(lp.upper)))
    rows = lp.n_constraints + bound_rows
    return rows >= 3 * lp.n_vars + 20


# ---------------------------------------------------------------------------
# direct path: standardize -> two-phase tableau simplex -> extract
# ---------------------------------------------------------------------------


def _solve_direct(lp: LinearProgram, mode: str) -> LpSolution:
    n = lp.n_vars
    m = lp.n_constraints

    # Variable substitutions to reach x_std >= 0:
    #   finite lower:        x = lo + t
    #   upper only:          x = hi - t
    #   free:                x = t_pos - t_neg
    # Two-sided bounds additionally append a row  t <= hi - lo.
    col_of = []  # per original var: ('shift', k, lo) | ('neg', k, hi) | ('split', kp, kn)
    n_std = 0
    offset = np.zeros(n)
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isfinite(lo):
            col_of.append(("shift", n_std, lo))
            offset[j] = lo
            n_std += 1
        elif np.isfinite(hi):
            col_of.append(("neg", n_std, hi))
            offset[j] = hi
            n_std += 1
        else:
            col_of.append(("split", n_std, n_std + 1))
            n_std += 2

    def expand_rows(mat: np.ndarray) -> np.ndarray:
        out = np.zeros((mat.shape[0], n_std))
        for j, spec in enumerate(col_of):
            if spec[0] == "shift":
                out[:, spec[1]] = mat[:, j]
            elif spec[0] == "neg":
                out[:, spec[1]] = -mat[:, j]
            else:
                out[:, spec[1]] = mat[:, j]
                out[:, spec[2]] = -mat[:, j]
        return out

    a_std = expand_rows(lp.a) if m else np.zeros((0, n_std))
    b_std = lp.b - (lp.a @ offset if m else 0.0)
    rels = list(lp.relations)
    row_kind = ["user"] * m

    # rows for the remaining finite bound of two-sided variables
    extra_a, extra_b = [], []
    for j, spec in enumerate(col_of):
        if spec[0] == "shift" and np.isfinite(lp.upper[j]):
            row = np.zeros(n_std)
            row[spec[1]] = 1.0
            extra_a.append(row)
            extra_b.append(lp.upper[j] - lp.lower[j])
        elif spec[0] == "neg" and False:  # 'neg' vars have no second finite bound by construction
            pass
    if extra_a:
        a_std = np.vstack([a_std, np.array(extra_a)])
        b_std = np.concatenate([b_std, np.array(extra_b)])
        rels += ["<="] * len(extra_a)
        row_kind += ["bound"] * len(extra_a)

    c_std = expand_rows(lp.c.reshape(1, -1)).ravel()
    obj_shift = float(lp.c @ offset)

    res = _tableau_solve(a_std, b_std, rels, c_std, mode)
    if res["status"] != "optimal":
        return LpSolution(status=res["status"])

    x_std = res["x"]
    x = np.empty(n)
    for j, spec in enumerate(col_of):
        if spec[0] == "shift":
            x[j] = spec[2] + x_std[spec[1]]
        elif spec[0] == "neg":
            x[j] = spec[2] - x_std[spec[1]]
        else:
            x[j] = x_std[spec[1]] - x_std[spec[2]]

    y = res["y"]  # dO/db per standardized row
    duals = -y[:m]  # user rows come first; convention flip
    dual_obj = float(y @ b_std) + obj_shift
    return LpSolution(
        status="optimal",
        x=x,
        duals=duals,
        objective=float(lp.c @ x),
        dual_objective=dual_obj,
    )


def _tableau_solve(a, b, rels, c, mode):
    """Two-phase simplex on  a x (<=|=) b, x >= 0. Returns x, duals y, status."""
    m, n = a.shape
    if m == 0:
        # unconstrained over the nonnegative orthant
        if np.any(c < -PIVOT_TOL):
            return {"status": "unbounded"}
        return {"status": "optimal", "x": np.zeros(n), "y": np.zeros(0)}

    flip = np.ones(m)
    a = a.copy()
    b = b.copy()
    for i in range(m):
        if b[i] < 0:
            a[i] *= -1.0
            b[i] *= -1.0
            flip[i] = -1.0

    n_slack = sum(1 for r in rels if r == "<=")
    slack_col = {}
    cols = [a]
    s_block = np.zeros((m, n_slack))
    k = 0
    for i, r in enumerate(rels):
        if r == "<=":
            s_block[i, k] = flip[i]  # slack was added before flipping
            slack_col[i] = n + k
            k += 1
    cols.append(s_block)

    # artificials for rows whose slack cannot start the basis
    art_col = {}
    art_rows = [i for i in range(m) if not (i in slack_col and flip[i] > 0)]
    a_block = np.zeros((m, len(art_rows)))
    for k, i in enumerate(art_rows):
        a_block[i, k] = 1.0
        art_col[i] = n + n_slack + k
    cols.append(a_block)

    t_mat = np.hstack(cols)
    n_total = t_mat.shape[1]
    tab = np.hstack([t_mat, b.reshape(-1, 1)])
    basis = np.empty(m, dtype=np.int64)
    for i in range(m):
        basis[i] = art_col[i] if i in art_col else slack_col[i]

    art_mask = np.zeros(n_total, dtype=bool)
    for j in art_col.values():
        art_mask[j] = True

    row_ids = np.arange(m)
    if art_rows:
        cost1 = np.where(art_mask, 1.0, 0.0)
        status = _simplex_iterate(tab, basis, cost1, np.zeros(n_total, dtype=bool), mode)
        if status != "optimal":  # phase 1 is always bounded below by 0
            raise LpError("phase 1 terminated abnormally")
        scale = max(1.0, float(np.abs(b).max()))
        phase1_obj = float(cost1[basis] @ tab[:, -1])
        if phase1_obj > FEAS_TOL * scale:
            return {"status": "infeasible"}
        tab, basis, row_ids = _evict_artificials(tab, basis, art_mask, row_ids)

    cost2 = np.concatenate([c, np.zeros(n_total - n)])
    status = _simplex_iterate(tab, basis, cost2, art_mask, mode)
    if status != "optimal":
        return {"status": status}

    x_full = np.zeros(n_total)
    x_full[basis] = tab[:, -1]
    if np.any(x_full[art_mask] > FEAS_TOL):
        raise LpError("artificial variable positive after phase 2")

    # Reduced-cost row at the final basis gives the duals through the
    # identity columns. Returned y is dO/db for the rows as passed in:
    # a slack column carries coefficient flip_i, so the flips cancel and
    # y_i = -red[slack]; an artificial (added after flipping) carries +1
    # in the flipped system, leaving a flip factor.
    red = cost2 - cost2[basis] @ tab[:, :-1]
    y = np.zeros(len(rels))  # rows dropped as redundant keep dual 0
    surviving = set(int(i) for i in row_ids)
    for i in range(len(rels)):
        if i not in surviving:
            continue
        if i in slack_col:
            y[i] = -red[slack_col[i]]
        else:
            y[i] = -red[art_col[i]] * flip[i]
    return {"status": "optimal", "x": x_full[:n], "y": y}


def _evict_artificials(tab, basis, art_mask, row_ids):
    """Pivot zero-level artificials out of the basis; drop redundant rows."""
    keep = np.ones(tab.shape[0], dtype=bool)
    for i in range(tab.shape[0]):
        if not art_mask[basis[i]]:
            continue
        row = tab[i, :-1]
        candidates = np.flatnonzero((np.abs(row) > PIVOT_TOL) & ~art_mask)
        if candidates.size:
            _pivot(tab, i, int(candidates[0]))
            basis[i] = int(candidates[0])
        else:
            keep[i] = False  # redundant constraint
    if not np.all(keep):
        return tab[keep].copy(), basis[keep], row_ids[keep]
    return tab, basis, row_ids


def _simplex_iterate(tab, basis, cost, banned, mode):
    m = tab.shape[0]
    red = cost - cost[basis] @ tab[:, :-1]
    red[basis] = 0.0
    degenerate_streak = 0
    use_bland = mode == "bland"

    for _ in range(MAX_PIVOTS):
        if use_bland:
            elig = np.flatnonzero((red < -PIVOT_TOL) & ~banned)
            if elig.size == 0:
                return "optimal"
            pc = int(elig[0])
        else:
            masked = np.where(banned, 0.0, red)
            pc = int(np.argmin(masked))
            if masked[pc] >= -PIVOT_TOL:
                return "optimal"

        col = tab[:, pc]
        pos = np.flatnonzero(col > PIVOT_TOL)
        if pos.size == 0:
            return "unbounded"
        ratios = tab[pos, -1] / col[pos]
        best = ratios.min()
        tied = pos[ratios <= best + 1e-12]
        pr = int(tied[np.argmin(basis[tied])])

        if best < 1e-11:
            degenerate_streak += 1
            if degenerate_streak > DEGENERATE_STREAK + m and not use_bland:
                use_bland = True
        else:
            degenerate_streak = 0

        _pivot(tab, pr, pc)
        red = red - red[pc] * tab[pr, :-1]
        red[pc] = 0.0
        basis[pr] = pc
    raise LpError(f"simplex exceeded {MAX_PIVOTS} pivots")


def _pivot(tab, pr, pc):
    tab[pr] /= tab[pr, pc]
    col = tab[:, pc].copy()
    col[pr] = 0.0
    tab -= np.outer(col, tab[pr])
    tab[:, pc] = 0.0
    tab[pr, pc] = 1.0


# ---------------------------------------------------------------------------
# dual route for tall problems
# ---------------------------------------------------------------------------


def _solve_via_dual(lp: LinearProgram, mode: str) -> LpSolution | None:
    """Solve through the explicit dual; None means 'fall back to direct'."""
    n = lp.n_vars
    # pure form: all bounds become '<=' rows, variables free
    g_rows, h_vals, src = [], [], []  # src tags user '<=' rows for dual extraction
    e_rows, f_vals, e_src = [], [], []
    for i in range(lp.n_constraints):
        if lp.relations[i] == "<=":
            g_rows.append(lp.a[i])
            h_vals.append(lp.b[i])
            src.append(i)
        else:
            e_rows.append(lp.a[i])
            f_vals.append(lp.b[i])
            e_src.append(i)
    eye = np.eye(n)
    for j in range(n):
        if np.isfinite(lp.upper[j]):
            g_rows.append(eye[j])
            h_vals.append(lp.upper[j])
            src.append(-1)
        if np.isfinite(lp.lower[j]):
            g_rows.append(-eye[j])
            h_vals.append(-lp.lower[j])
            src.append(-1)

    g = np.array(g_rows) if g_rows else np.zeros((0, n))
    h = np.array(h_vals, dtype=np.float64)
    e = np.array(e_rows) if e_rows else np.zeros((0, n))
    f = np.array(f_vals, dtype=np.float64)
    p, q = g.shape[0], e.shape[0]
    if p + q == 0:
        return None

    # dual (as a min):  min h.y + f.mu  s.t.  G^T y + E^T mu = -c,  y >= 0
    d_c = np.concatenate([h, f])
    d_a = np.hstack([g.T, e.T])
    d_lp = LinearProgram(
        c=d_c,
        a=d_a,
        relations=("=",) * n,
        b=-lp.c,
        lower=np.concatenate([np.zeros(p), np.full(q, -np.inf)]),
        upper=np.full(p + q, np.inf),
    )
    d_sol = _solve_direct(d_lp, mode)
    if d_sol.status == "unbounded":
        return LpSolution(status="infeasible")
    if d_sol.status != "optimal":
        return None  # dual infeasible: primal unbounded or infeasible

    x = -d_sol.duals  # sensitivity of the dual optimum to -c
    y_user = np.zeros(lp.n_constraints)
    for k, i in enumerate(src):
        if i >= 0:
            y_user[i] = max(0.0, d_sol.x[k])
    for k, i in enumerate(e_src):
        y_user[i] = d_sol.x[p + k]
    primal_obj = float(lp.c @ x)
    dual_obj = -float(d_sol.objective)
    if not _close_enough(primal_obj, dual_obj):
        return None  # numerical disagreement: let the direct path decide
    return LpSolution(
        status="optimal", x=x, duals=y_user, objective=primal_obj, dual_objective=dual_obj
    )


def _close_enough(a: float, b: float) -> bool:
    return abs(a - b) <= GAP_TOL * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------------------
# restricted master problem of the boosting loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightDist:
    """Distribution over bags living in the capped simplex {0 <= d_i <= 1/(nu m), sum d = 1}."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def check(self, nu: float, tol: float = 1e-9) -> None:
        cap = 1.0 / (nu * len(self))
        v = self.values
        if v.min() < -tol or v.max() > cap + tol:
            raise ValueError(f"weights leave [0, {cap}]: min {v.min()}, max {v.max()}")
        if abs(v.sum() - 1.0) > tol:
            raise ValueError(f"weights sum to {v.sum()}, expected 1")


def uniform_weights(m: int) -> WeightDist:
    return WeightDist(np.full(m, 1.0 / m))


@dataclass
class MasterSolution:
    gamma: float
    d: WeightDist
    w: np.ndarray
    primal_objective: float
    dual_objective: float


def solve_restricted_master(evals: np.ndarray, nu: float) -> MasterSolution:
    """Optimal capped-simplex distribution against the hypotheses seen so far.

    ``evals[i, j]`` holds y_i * h_j(B_i). Solves

        min gamma  s.t.  sum_i evals[i, j] d_i <= gamma  for all j,
                         d in the capped simplex for nu,

    and returns gamma, the minimizing d, and the duals w of the
    hypothesis constraints, which are the ensemble weights.
    """
    evals = np.asarray(evals, dtype=np.float64)
    if evals.ndim != 2 or evals.shape[0] < 1 or evals.shape[1] < 1:
        raise ValueError(f"evals must be a nonempty (bags, hypotheses) matrix, got {evals.shape}")
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"nu must be in (0, 1], got {nu}")
    m, t = evals.shape
    cap = 1.0 / (nu * m)

    # variables: [gamma, d_1..d_m]
    c = np.zeros(1 + m)
    c[0] = 1.0
    rows = np.hstack([-np.ones((t, 1)), evals.T])
    rels = ["<="] * t + ["="]
    rows = np.vstack([rows, np.concatenate([[0.0], np.ones(m)])])
    rhs = np.concatenate([np.zeros(t), [1.0]])
    lower = np.concatenate([[-np.inf], np.zeros(m)])
    upper = np.concatenate([[np.inf], np.full(m, cap)])

    sol = solve_lp(LinearProgram(c, rows, rels, rhs, lower, upper))
    if sol.status != "optimal":
        raise LpError(f"restricted master did not solve: status {sol.status}")

    d = np.clip(sol.x[1:], 0.0, cap)
    w = np.maximum(sol.duals[:t], 0.0)
    return MasterSolution(
        gamma=float(sol.x[0]),
        d=WeightDist(d),
        w=w,
        primal_objective=float(sol.objective),
        dual_objective=float(sol.dual_objective),
    )
