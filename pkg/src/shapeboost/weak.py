"""Weak learning of shapelet coefficients by the DC algorithm.

A shapelet is represented by coefficients alpha over the instance pool:
its score against a bag is the best kernel similarity over the bag,

    score(alpha, B) = max_{x in B} sum_z alpha_z K(z, x),

and the quantity a weak learner maximizes is the d-weighted edge

    edge(alpha) = sum_i d_i y_i score(alpha, B_i).

Maximizing the edge over a norm ball is a difference-of-convex program:
the positive-bag terms are concave in the minimization direction. The
solver iteratively freezes each positive bag's maximizing instance
(linearizing the concave part) and solves the resulting convex
subproblem, an LP for the L1 ball and a ball-constrained piecewise
linear problem for the Gram-weighted L2 ball. Objective values never
increase across iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import InstancePool, Sample
from .kernels import GramMatrix, KernelSpec, kernel_columns
from .lp import LinearProgram, WeightDist, solve_lp

L1_FEAS_TOL = 1e-9
L2_FEAS_TOL = 1e-6


@dataclass(frozen=True)
class ShapeletCoeffs:
    """Coefficient vector over the pool plus the ball it must live in."""

    alpha: np.ndarray
    norm_kind: str  # 'l1' | 'l2'

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=np.float64).ravel().copy()
        if not np.all(np.isfinite(a)):
            raise ValueError("alpha contains non-finite values")
        if self.norm_kind not in ("l1", "l2"):
            raise ValueError(f"norm_kind must be 'l1' or 'l2', got {self.norm_kind!r}")
        a.flags.writeable = False
        object.__setattr__(self, "alpha", a)

    def check_feasible(self, gram: GramMatrix | None = None) -> None:
        if self.norm_kind == "l1":
            n = float(np.abs(self.alpha).sum())
            if n > 1.0 + L1_FEAS_TOL:
                raise ValueError(f"l1 norm {n} exceeds 1")
        else:
            if gram is None:
                raise ValueError("l2 feasibility needs the gram matrix")
            q = float(self.alpha @ gram.entries @ self.alpha)
            if q > 1.0 + L2_FEAS_TOL:
                raise ValueError(f"gram quadratic form {q} exceeds 1")


def _dist_values(d) -> np.ndarray:
    return np.asarray(getattr(d, "values", d), dtype=np.float64).ravel()


class BagKernels:
    """Kernel blocks of every bag against the pool, built once per run.

    mats[i][x, z] = K(pool[z], instance x of bag i). All weak-learning
    math is matrix products against these blocks.
    """

    def __init__(self, sample: Sample, pool: InstancePool, kernel: KernelSpec):
        self.sample = sample
        self.pool = pool
        self.kernel = kernel
        self.labels = sample.labels
        self.mats = [kernel_columns(kernel, pool, it.bag.instances) for it in sample]
        self.pos_idx = np.flatnonzero(self.labels == 1)
        self.neg_idx = np.flatnonzero(self.labels == -1)

    def scores(self, alpha: np.ndarray) -> np.ndarray:
        return np.array([float(np.max(m @ alpha)) for m in self.mats])


def shapelet_score(alpha: ShapeletCoeffs, bag, pool: InstancePool, kernel: KernelSpec):
    """Best similarity of the bag to the shapelet, with its attaining index.

    Ties go to the smallest within-bag index (np.argmax is first-max).
    """
    if len(bag) == 0:
        raise ValueError("bag is empty")
    mat = kernel_columns(kernel, pool, bag.instances)
    scores = mat @ alpha.alpha
    idx = int(np.argmax(scores))
    return float(scores[idx]), idx


def edge(alpha: ShapeletCoeffs, sample: Sample, d, pool: InstancePool, kernel: KernelSpec) -> float:
    """Weighted correlation of the shapelet's scores with the bag labels."""
    dv = _dist_values(d)
    if dv.size != len(sample):
        raise ValueError(f"distribution length {dv.size} != sample size {len(sample)}")
    cache = BagKernels(sample, pool, kernel)
    return _edge_cached(alpha.alpha, cache, dv)


def _edge_cached(alpha: np.ndarray, cache: BagKernels, dv: np.ndarray) -> float:
    return float(np.sum(dv * cache.labels * cache.scores(alpha)))


def _one_hot_candidates(cache: BagKernels, dv: np.ndarray):
    """Signed one-hot coefficient vectors ranked by the edge they achieve.

    edge(+e_z) needs each bag's column max, edge(-e_z) its column min.
    Returns (edges desc, pool index, sign) with ties resolved toward the
    lower pool index and +1 sign.
    """
    n_pool = len(cache.pool)
    plus = np.zeros(n_pool)
    minus = np.zeros(n_pool)
    for i, m in enumerate(cache.mats):
        wy = dv[i] * cache.labels[i]
        plus += wy * m.max(axis=0)
        minus -= wy * m.min(axis=0)
    signs = np.where(plus >= minus, 1.0, -1.0)
    best = np.maximum(plus, minus)
    order = np.argsort(-best, kind="stable")
    return [(float(best[z]), int(z), float(signs[z])) for z in order]


def init_one_hot(
    sample: Sample,
    d,
    pool: InstancePool,
    kernel: KernelSpec,
    norm_kind: str = "l1",
    gram: GramMatrix | None = None,
) -> ShapeletCoeffs:
    """Most discriminative single pool instance, as a starting shapelet.

    The sign of the single entry is chosen to maximize the edge, and the
    vector is scaled onto the requested norm ball.
    """
    if len(pool) == 0:
        raise ValueError("pool is empty")
    cache = BagKernels(sample, pool, kernel)
    dv = _dist_values(d)
    _, z, sign = _one_hot_candidates(cache, dv)[0]
    return _one_hot_vector(z, sign, len(pool), norm_kind, gram)


def _one_hot_vector(z: int, sign: float, n_pool: int, norm_kind: str, gram) -> ShapeletCoeffs:
    a = np.zeros(n_pool)
    a[z] = sign
    if norm_kind == "l2":
        kzz = float(gram.entries[z, z]) if gram is not None else 1.0
        if kzz > 1e-12:
            a[z] = sign / np.sqrt(kzz)
    return ShapeletCoeffs(a, norm_kind)


def _pos_weight_vector(mx: dict, cache: BagKernels, dv: np.ndarray) -> np.ndarray:
    """c[z] = sum over positive bags of d_k K(z, x*_k) at frozen maximizers."""
    c = np.zeros(len(cache.pool))
    for k in cache.pos_idx:
        c += dv[k] * cache.mats[k][mx[int(k)]]
    return c


def _linearized_value(alpha: np.ndarray, mx: dict, cache: BagKernels, dv) -> float:
    """F(alpha) - G_hat(alpha): negative-bag maxima minus the frozen positive part.

    Accumulated bag by bag in a fixed order so that traces compared
    across DC iterations are monotone even at float resolution.
    """
    val = 0.0
    for r in cache.neg_idx:
        val += dv[r] * float(np.max(cache.mats[r] @ alpha))
    for k in cache.pos_idx:
        val -= dv[k] * float((cache.mats[k] @ alpha)[mx[int(k)]])
    return val


def linearized_subproblem_l1(
    fixed_maximizers: dict,
    sample: Sample,
    d,
    pool: InstancePool,
    kernel: KernelSpec,
    cache: BagKernels | None = None,
) -> ShapeletCoeffs:
    """Convex piece of one DC iteration on the L1 ball, as an LP.

    With maximizers x*_k frozen for positive bags, minimizes

        sum_{neg r} d_r lambda_r - sum_{pos k} d_k k_{x*_k}.alpha

    over ||alpha||_1 <= 1 and k_x.alpha <= lambda_r for every instance x
    of every negative bag r. alpha is split into nonnegative parts to
    keep the program linear.
    """
    cache = cache or BagKernels(sample, pool, kernel)
    dv = _dist_values(d)
    c_pos = _pos_weight_vector(fixed_maximizers, cache, dv)
    n_pool = len(pool)
    neg = list(cache.neg_idx)
    n_lam = len(neg)
    n = 2 * n_pool + n_lam

    blocks = []
    for pos_r, r in enumerate(neg):
        m = cache.mats[r]
        block = np.zeros((m.shape[0], n))
        block[:, :n_pool] = m
        block[:, n_pool : 2 * n_pool] = -m
        block[:, 2 * n_pool + pos_r] = -1.0
        blocks.append(block)
    norm_row = np.zeros((1, n))
    norm_row[0, : 2 * n_pool] = 1.0
    blocks.append(norm_row)
    a_mat = np.vstack(blocks)
    rhs = np.zeros(a_mat.shape[0])
    rhs[-1] = 1.0

    c = np.concatenate([-c_pos, c_pos, dv[neg] if n_lam else np.zeros(0)])
    lower = np.concatenate([np.zeros(2 * n_pool), np.full(n_lam, -np.inf)])
    upper = np.full(n, np.inf)

    sol = solve_lp(LinearProgram(c, a_mat, ["<="] * a_mat.shape[0], rhs, lower, upper))
    if sol.status != "optimal":
        raise RuntimeError(f"L1 subproblem did not solve: status {sol.status}")
    alpha = sol.x[:n_pool] - sol.x[n_pool : 2 * n_pool]
    norm = np.abs(alpha).sum()
    if norm > 1.0:
        alpha = alpha / norm
    return ShapeletCoeffs(alpha, "l1")


def linearized_subproblem_l2(
    fixed_maximizers: dict,
    sample: Sample,
    d,
    pool: InstancePool,
    gram: GramMatrix,
    cache: BagKernels | None = None,
    warm: np.ndarray | None = None,
    iters: int = 2000,
) -> ShapeletCoeffs:
    """Convex piece of one DC iteration on the Gram-weighted L2 ball.

    Same linearized objective as the L1 variant but constrained by
    alpha' K alpha <= 1. After whitening the ball to Euclidean via the
    eigendecomposition of K, the problem is piecewise-linear convex over
    the unit ball and is solved by projected subgradient descent plus an
    active-set polish; candidate points are only ever accepted when they
    improve the objective, so a warm start can never get worse.
    """
    cache = cache or BagKernels(sample, pool, gram.kernel)
    gram.check_psd()
    dv = _dist_values(d)
    c_pos = _pos_weight_vector(fixed_maximizers, cache, dv)
    w_map, w_back = _whitening_maps(gram)
    if w_map.shape[1] == 0:
        return ShapeletCoeffs(np.zeros(len(pool)), "l2")

    c_t = -(w_map.T @ c_pos)
    neg = list(cache.neg_idx)
    neg_mats = [cache.mats[r] @ w_map for r in neg]
    neg_w = dv[neg] if neg else np.zeros(0)

    def psi(beta):
        val = float(c_t @ beta)
        for wr, mt in zip(neg_w, neg_mats):
            val += wr * float(np.max(mt @ beta))
        return val

    beta = np.zeros(w_map.shape[1]) if warm is None else w_back @ warm
    nb = np.linalg.norm(beta)
    if nb > 1.0:
        beta = beta / nb
    best_beta, best_val = beta.copy(), psi(beta)

    if not neg:
        nc = np.linalg.norm(c_t)
        if nc > 0:
            cand = -c_t / nc
            if psi(cand) < best_val:
                best_beta, best_val = cand, psi(cand)
    else:
        g_bound = np.linalg.norm(c_t) + sum(
            wr * np.max(np.linalg.norm(mt, axis=1)) for wr, mt in zip(neg_w, neg_mats)
        )
        g_bound = max(g_bound, 1e-12)
        for t in range(1, iters + 1):
            g = c_t.copy()
            for wr, mt in zip(neg_w, neg_mats):
                g += wr * mt[int(np.argmax(mt @ beta))]
            beta = beta - (2.0 / (g_bound * np.sqrt(t))) * g
            nb = np.linalg.norm(beta)
            if nb > 1.0:
                beta = beta / nb
            v = psi(beta)
            if v < best_val:
                best_beta, best_val = beta.copy(), v
        # polish: freeze active rows, minimize the resulting linear form
        for _ in range(50):
            ell = c_t.copy()
            for wr, mt in zip(neg_w, neg_mats):
                ell += wr * mt[int(np.argmax(mt @ best_beta))]
            nl = np.linalg.norm(ell)
            if nl <= 1e-14:
                break
            cand = -ell / nl
            v = psi(cand)
            if v < best_val - 1e-14:
                best_beta, best_val = cand, v
            else:
                break

    alpha = w_map @ best_beta
    q = float(alpha @ gram.entries @ alpha)
    if q > 1.0:
        alpha = alpha / np.sqrt(q)
    return ShapeletCoeffs(alpha, "l2")


def _whitening_maps(gram: GramMatrix):
    """Maps between alpha space and the whitened ball coordinates.

    Directions in the kernel null space neither change any score nor
    the constraint, so they are dropped.
    """
    vals, vecs = np.linalg.eigh(gram.entries)
    top = vals[-1] if vals.size else 0.0
    keep = vals > max(top, 1.0) * 1e-12
    vals, vecs = vals[keep], vecs[:, keep]
    w_map = vecs / np.sqrt(vals)  # alpha = w_map @ beta
    w_back = (vecs * np.sqrt(vals)).T  # beta = w_back @ alpha
    return w_map, w_back


@dataclass
class WeakLearnResult:
    alpha: ShapeletCoeffs
    objective_trace: list = field(default_factory=list)
    edge: float = 0.0


def dc_weak_learn(
    sample: Sample,
    d,
    pool: InstancePool,
    kernel: KernelSpec,
    variant: str = "l1",
    epsilon: float = 1e-4,
    max_outer: int = 50,
    alpha0: ShapeletCoeffs | None = None,
    restarts: int = 0,
    gram: GramMatrix | None = None,
    cache: BagKernels | None = None,
) -> WeakLearnResult:
    """Approximately maximize the edge over the chosen norm ball.

    Each outer iteration freezes the positive bags' maximizing instances
    at the current coefficients and solves the linearized subproblem;
    iteration stops when the objective decrease falls to ``epsilon`` or
    after ``max_outer`` rounds. Starts from the best one-hot vector
    unless ``alpha0`` is given; ``restarts`` > 1 reruns from that many
    top-ranked one-hot starts and keeps the best edge.
    """
    variant = variant.lower()
    if variant not in ("l1", "l2"):
        raise ValueError(f"variant must be 'l1' or 'l2', got {variant!r}")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if len(pool) == 0:
        raise ValueError("pool is empty")
    cache = cache or BagKernels(sample, pool, kernel)
    dv = _dist_values(d)
    if dv.size != len(sample):
        raise ValueError(f"distribution length {dv.size} != sample size {len(sample)}")
    if variant == "l2" and gram is None:
        from .kernels import gram_matrix

        gram = gram_matrix(kernel, pool)

    if alpha0 is not None:
        starts = [alpha0]
    else:
        cands = _one_hot_candidates(cache, dv)[: max(1, restarts)]
        starts = [_one_hot_vector(z, s, len(pool), variant, gram) for _, z, s in cands]

    best: WeakLearnResult | None = None
    for a0 in starts:
        res = _dc_descend(a0, cache, dv, variant, epsilon, max_outer, gram)
        if best is None or res.edge > best.edge:
            best = res
    return best


def _dc_descend(alpha0, cache, dv, variant, epsilon, max_outer, gram) -> WeakLearnResult:
    cur = np.asarray(alpha0.alpha, dtype=np.float64)
    trace = []
    f_prev = np.inf
    for _ in range(max_outer):
        mx = {int(k): int(np.argmax(cache.mats[k] @ cur)) for k in cache.pos_idx}
        if variant == "l1":
            new = linearized_subproblem_l1(mx, cache.sample, dv, cache.pool, cache.kernel, cache)
        else:
            new = linearized_subproblem_l2(
                mx, cache.sample, dv, cache.pool, gram, cache, warm=cur
            )
        f_new = _linearized_value(new.alpha, mx, cache, dv)
        f_at_cur = _linearized_value(cur, mx, cache, dv)
        if f_new > f_at_cur:  # guard against solver noise; keep the current point
            new_alpha, f_new = cur, f_at_cur
        else:
            new_alpha = new.alpha
        trace.append(f_new)
        cur = new_alpha
        if f_prev - f_new <= epsilon:
            break
        f_prev = f_new
    alpha = ShapeletCoeffs(cur, variant)
    return WeakLearnResult(alpha, trace, _edge_cached(cur, cache, dv))
