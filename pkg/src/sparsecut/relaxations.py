"""The three sparsest-cut relaxations, solved to certified tolerance.

* spectral: min over x of the ratio of Laplacian quadratic forms of the
  normalized cost and demand graphs, computed as a generalized eigenvalue
  problem after deflating the demand Laplacian's kernel;
* Leighton-Rao: linear program over semimetrics with unit demand mass;
* Goemans-Linial: semidefinite program over Gram matrices whose squared
  point distances obey the triangle inequality.

Reported values are always recomputed from the returned witness, so the
relaxation-dominance guarantees (value <= combinatorial optimum up to
solver tolerance) survive inner-solver inaccuracy.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import SolverError, ValidationError
from .graphs import InstancePair, Rank1Measure, laplacian, rank1_decompose

SOLVER_TOL = 1e-6
METRIC_TOL = 1e-6
_KERNEL_RTOL = 1e-10
_PSD_CLIP = 1e-9
LP_FULL_MAX_N = 48


@dataclass(frozen=True, eq=False)
class SemiMetric:
    """Symmetric nonnegative pairwise distances with zero diagonal."""

    d: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValidationError("distance matrix must be square")
        if not np.array_equal(d, d.T):
            raise ValidationError("distance matrix must be symmetric")
        if (d < 0).any():
            raise ValidationError("distances must be nonnegative")
        if np.abs(np.diag(d)).max(initial=0.0) != 0.0:
            raise ValidationError("distance matrix must have zero diagonal")
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def max_triangle_violation(self) -> float:
        return _max_triangle_violation(self.d)


@dataclass(frozen=True, eq=False)
class VectorEmbedding:
    """One point per vertex; induced distances are squared Euclidean."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValidationError("points must be a (n, dim) array")
        if not np.isfinite(pts).all():
            raise ValidationError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def squared_distances(self) -> np.ndarray:
        sq = (self.points ** 2).sum(axis=1)
        d = sq[:, None] + sq[None, :] - 2.0 * self.points @ self.points.T
        d = np.maximum(d, 0.0)
        d = (d + d.T) / 2.0
        np.fill_diagonal(d, 0.0)
        return d


@dataclass(frozen=True, eq=False)
class RelaxationValue:
    """Objective value with the witness it was recomputed from."""

    value: float
    kind: str  # "spectral" | "lp" | "sdp"
    witness: object  # np.ndarray | SemiMetric | VectorEmbedding
    residuals: dict


@dataclass(frozen=True)
class VerificationReport:
    kind: str
    passed: bool
    residuals: dict
    worst_name: str
    worst_value: float


def _offdiag_nbar(graph) -> np.ndarray:
    off = graph.nbar.copy()
    np.fill_diagonal(off, 0.0)
    return off


def _max_triangle_violation(d: np.ndarray) -> float:
    hop = (d[:, :, None] + d[None, :, :]).min(axis=1)
    return float((d - hop).max())


# ---------------------------------------------------------------------------
# spectral relaxation
# ---------------------------------------------------------------------------

def _mu_laplacian(mu: np.ndarray) -> np.ndarray:
    """Demand Laplacian in the product-measure form: x'Lx = 2 Var_mu(x)."""
    return 2.0 * (np.diag(mu) - np.outer(mu, mu))


def _pencil_min(lg: np.ndarray, lh: np.ndarray):
    """Minimize x'LG x / x'LH x over x with positive denominator.

    The kernel of LH is deflated explicitly; components of x inside that
    kernel affect only the numerator, so LG is replaced by its generalized
    Schur complement onto the kernel's orthogonal complement before the
    dense symmetric-definite eigensolve.
    """
    lam, u = np.linalg.eigh(lh)
    lmax = float(lam[-1])
    if lmax <= 0:
        raise ValidationError("degenerate pencil: demand graph has no off-diagonal mass")
    ker = lam <= _KERNEL_RTOL * lmax
    if ker.all():
        raise ValidationError("degenerate pencil: demand Laplacian vanishes")
    b, p = u[:, ker], u[:, ~ker]
    mh = p.T @ lh @ p
    mh = (mh + mh.T) / 2.0
    gpp = p.T @ lg @ p
    gbp = b.T @ lg @ p
    gbb = b.T @ lg @ b
    gbb = (gbb + gbb.T) / 2.0
    # pseudo-invert against the cost Laplacian's scale, not gbb's own: kernel
    # directions shared with the cost graph produce pure rounding dust here
    # and must drop out instead of being inverted
    tau, q = np.linalg.eigh(gbb)
    cost_scale = max(float(np.abs(lg).max()), 1e-300)
    live = tau > 1e-12 * cost_scale
    z = (q[:, live] / tau[live]) @ (q[:, live].T @ gbp)
    mg = gpp - gbp.T @ z
    mg = (mg + mg.T) / 2.0
    vals, vecs = scipy.linalg.eigh(mg, mh)
    y = vecs[:, 0]
    x = p @ y - b @ (z @ y)
    return x


def solve_spectral(pair: InstancePair) -> RelaxationValue:
    """Smallest generalized eigenvalue of the (cost, demand) Laplacian pencil.

    For rank-1 demand graphs the demand Laplacian is assembled directly from
    the product measure mu (denominator 2 Var_mu(x)); otherwise from the
    dense normalized matrix.  The witness is scaled to unit demand form.
    """
    lg = laplacian(pair.g)
    hb0 = _offdiag_nbar(pair.h)
    if hb0.sum() <= 0:
        raise ValidationError("demand graph has no off-diagonal mass")
    r1 = rank1_decompose(pair.h)
    lh = _mu_laplacian(r1.mu) if r1 is not None else laplacian(pair.h)
    x = _pencil_min(lg, lh)
    lh_dense = laplacian(pair.h)
    den = float(x @ lh_dense @ x)
    if den <= 0:
        raise SolverError("spectral witness has nonpositive demand form")
    x = x / math.sqrt(den)
    if x[int(np.argmax(np.abs(x)))] < 0:
        x = -x
    num = max(float(x @ lg @ x), 0.0)
    value = num / float(x @ lh_dense @ x)
    residuals = {"normalization": abs(float(x @ lh_dense @ x) - 1.0)}
    return RelaxationValue(value=value, kind="spectral", witness=x, residuals=residuals)


# ---------------------------------------------------------------------------
# Leighton-Rao relaxation
# ---------------------------------------------------------------------------

def _pair_ids(n: int):
    iu, ju = np.triu_indices(n, 1)
    pid = -np.ones((n, n), dtype=int)
    pid[iu, ju] = np.arange(len(iu))
    pid[ju, iu] = pid[iu, ju]
    return iu, ju, pid


def _triangle_rows(triples, pid, nv) -> sp.csr_matrix:
    """Rows d(u,v) - d(u,w) - d(w,v) <= 0 over the upper-triangle variables."""
    m = len(triples)
    tu = np.fromiter((t[0] for t in triples), int, m)
    tv = np.fromiter((t[1] for t in triples), int, m)
    tw = np.fromiter((t[2] for t in triples), int, m)
    rows = np.repeat(np.arange(m), 3)
    cols = np.empty(3 * m, dtype=int)
    vals = np.empty(3 * m)
    cols[0::3] = pid[tu, tv]
    vals[0::3] = 1.0
    cols[1::3] = pid[tu, tw]
    vals[1::3] = -1.0
    cols[2::3] = pid[tw, tv]
    vals[2::3] = -1.0
    return sp.coo_matrix((vals, (rows, cols)), shape=(m, nv)).tocsr()


def _all_triples(n: int):
    return [(u, v, w) for u in range(n) for v in range(u + 1, n)
            for w in range(n) if w != u and w != v]


def _minplus_closure(d: np.ndarray) -> np.ndarray:
    c = d.copy()
    for _ in range(int(math.ceil(math.log2(max(d.shape[0], 2)))) + 1):
        step = np.minimum(c, (c[:, :, None] + c[None, :, :]).min(axis=1))
        if np.array_equal(step, c):
            break
        c = step
    return c


def solve_leighton_rao(pair: InstancePair, solver_tol: float = SOLVER_TOL,
                       metric_tol: float = METRIC_TOL, max_rounds: int = 200) -> RelaxationValue:
    """Minimize the normalized cost of a semimetric with unit demand mass.

    For n <= 48 every triangle inequality is instantiated up front (one HiGHS
    solve); beyond that a cutting-plane loop separates violated triangles
    against the shortest-path closure.  Support-following separation can
    stall when the objective vanishes on many pairs, hence the generous
    desk-scale cutoff for the direct mode.
    """
    n = pair.n
    gb0 = _offdiag_nbar(pair.g)
    hb0 = _offdiag_nbar(pair.h)
    if hb0.sum() <= 0:
        raise ValidationError("demand graph has no off-diagonal mass")
    iu, ju, pid = _pair_ids(n)
    nv = len(iu)
    cost = 2.0 * gb0[iu, ju]
    a_eq = sp.csr_matrix((2.0 * hb0[iu, ju]).reshape(1, -1))

    def _solve(a_ub):
        if a_ub is None or a_ub.shape[0] == 0:
            res = linprog(cost, A_eq=a_eq, b_eq=[1.0], bounds=(0, None), method="highs")
        else:
            res = linprog(cost, A_ub=a_ub, b_ub=np.zeros(a_ub.shape[0]),
                          A_eq=a_eq, b_eq=[1.0], bounds=(0, None), method="highs")
        if res.status != 0:
            raise SolverError(f"linear program failed: {res.message}")
        return res

    if n <= LP_FULL_MAX_N:
        res = _solve(_triangle_rows(_all_triples(n), pid, nv))
        rounds = 1
    else:
        seen = set()
        triples: list = []
        rounds = 0
        while True:
            rounds += 1
            res = _solve(_triangle_rows(triples, pid, nv) if triples else None)
            d = np.zeros((n, n))
            d[iu, ju] = res.x
            d += d.T
            hop = d[:, :, None] + d[None, :, :]
            arg = np.argmin(hop, axis=1)
            vio = d - _minplus_closure(d)
            worst = float(vio.max())
            if worst <= metric_tol:
                break
            if rounds >= max_rounds:
                raise SolverError(
                    f"cutting plane did not converge after {max_rounds} rounds "
                    f"(value {float(res.fun)!r}, worst violation {worst!r})")
            order = np.argsort(vio, axis=None)[::-1]
            added = 0
            pairs_done = 0
            for flat in order:
                u, v = divmod(int(flat), n)
                if u >= v:
                    continue
                if vio[u, v] <= metric_tol:
                    break
                for w in range(n):
                    key = (u, v, w)
                    if w != u and w != v and key not in seen:
                        seen.add(key)
                        triples.append(key)
                        added += 1
                pairs_done += 1
                if pairs_done >= 4:
                    break
            if added == 0:
                for flat in order:
                    u, v = divmod(int(flat), n)
                    if u >= v:
                        continue
                    if vio[u, v] <= metric_tol:
                        break
                    key = (u, v, int(arg[u, v]))
                    if key not in seen:
                        seen.add(key)
                        triples.append(key)
                        added += 1
                if added == 0:
                    raise SolverError("separation found no triangle to add")

    x = np.maximum(res.x, 0.0)
    d = np.zeros((n, n))
    d[iu, ju] = x
    d += d.T
    metric = SemiMetric(d)
    value = float((gb0 * d).sum())
    residuals = {
        "normalization": abs(float((hb0 * d).sum()) - 1.0),
        "triangle": max(metric.max_triangle_violation(), 0.0),
        "nonnegativity": max(0.0, -float(res.x.min())),
        "objective": abs(value - float(res.fun)),
        "rounds": float(rounds),
    }
    return RelaxationValue(value=value, kind="lp", witness=metric, residuals=residuals)


# ---------------------------------------------------------------------------
# Goemans-Linial relaxation
# ---------------------------------------------------------------------------

def _extract_points(x: np.ndarray) -> np.ndarray:
    """Eigendecompose a numerically-PSD Gram matrix into point coordinates."""
    x = (x + x.T) / 2.0
    lam, v = np.linalg.eigh(x)
    scale = max(float(lam[-1]), 1.0)
    if float(lam[0]) < -_PSD_CLIP * scale:
        raise SolverError(f"Gram matrix eigenvalue {float(lam[0])!r} below PSD clip threshold")
    lam = np.maximum(lam, 0.0)
    keep = lam > 1e-12 * scale
    if not keep.any():
        raise SolverError("Gram matrix extraction produced no positive directions")
    order = np.argsort(lam[keep])[::-1]
    cols = v[:, keep][:, order] * np.sqrt(lam[keep][order])[None, :]
    for j in range(cols.shape[1]):
        lead = int(np.argmax(np.abs(cols[:, j])))
        if cols[lead, j] < 0:
            cols[:, j] = -cols[:, j]
    return cols


def solve_goemans_linial(pair: InstancePair, solver_tol: float = SOLVER_TOL,
                         metric_tol: float = METRIC_TOL, max_rounds: int = 50) -> RelaxationValue:
    """Semidefinite relaxation over Gram matrices with triangle inequalities.

    Solved by cutting-plane triangle separation around an interior-point
    conic solve of

        minimize  tr(LG X)   s.t.  tr(LH X) = 1,  X[0,0] = 0,  X >= 0 (psd)

    plus the accumulated rows d(u,v) <= d(u,w) + d(w,v) in vec(X).  The
    returned embedding is the clipped eigenfactor of X, rescaled so its
    demand mass is exactly 1; the reported value is recomputed from it.
    """
    import cvxpy as cp

    n = pair.n
    gb0 = _offdiag_nbar(pair.g)
    hb0 = _offdiag_nbar(pair.h)
    if hb0.sum() <= 0:
        raise ValidationError("demand graph has no off-diagonal mass")
    lg = laplacian(pair.g)
    lh = laplacian(pair.h)
    iu, ju, pid = _pair_ids(n)

    xvar = cp.Variable((n, n), symmetric=True)
    # X[0,0] = 0 anchors vertex 0 at the origin (PSD then zeroes its whole
    # row), removing the free translation direction without a dense row
    base = [cp.trace(lh @ xvar) == 1, xvar[0, 0] == 0, xvar >> 0]
    objective = cp.Minimize(cp.trace(lg @ xvar))

    def _vec_rows(triples):
        # same rows as the LP separation but over vec(X), column-major
        m = len(triples)
        rows, cols, vals = [], [], []
        for r, (u, v, w) in enumerate(triples):
            for a, b, sgn in ((u, v, 1.0), (u, w, -1.0), (w, v, -1.0)):
                rows += [r, r, r, r]
                cols += [a * n + a, b * n + b, a * n + b, b * n + a]
                vals += [sgn, sgn, -sgn, -sgn]
        return sp.coo_matrix((vals, (rows, cols)), shape=(m, n * n)).tocsr()

    _LEVELS = {
        "tight": dict(tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10),
        "vtight": dict(tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11,
                       max_iter=200),
        "default": {},
    }

    def _attempt(constraints, level):
        prob = cp.Problem(objective, constraints)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                prob.solve(solver=cp.CLARABEL, **_LEVELS[level])
            except cp.error.SolverError as exc:
                raise SolverError(f"conic solver failed: {exc}") from exc
        if xvar.value is None or prob.status not in ("optimal", "optimal_inaccurate"):
            raise SolverError(f"conic solver returned status {prob.status!r}")
        return float(prob.value)

    seen = set()
    triples: list = []
    rounds = 0
    while True:
        rounds += 1
        cons = list(base)
        if triples:
            cons.append(_vec_rows(triples) @ cp.vec(xvar, order="F") <= 0)
        try:
            solver_obj = _attempt(cons, "tight")
        except SolverError:
            solver_obj = _attempt(cons, "default")
        gram = np.array(xvar.value)
        gram = (gram + gram.T) / 2.0
        d = np.add.outer(np.diag(gram), np.diag(gram)) - 2.0 * gram
        hop = d[:, :, None] + d[None, :, :]
        single = hop.min(axis=1)
        arg = np.argmin(hop, axis=1)
        vio = d - single
        worst = float(vio.max())
        if worst <= metric_tol:
            break
        if rounds >= max_rounds:
            raise SolverError(
                f"triangle separation did not converge after {max_rounds} rounds "
                f"(worst violation {worst!r})")
        order = np.argsort(vio, axis=None)[::-1]
        added = 0
        for flat in order[: 6 * n]:
            u, v = divmod(int(flat), n)
            if u >= v:
                continue
            if vio[u, v] <= metric_tol:
                break
            key = (u, v, int(arg[u, v]))
            if key not in seen:
                seen.add(key)
                triples.append(key)
                added += 1
        if added == 0:
            raise SolverError("separation found no triangle to add")

    # interior-point dust can push an eigenvalue past the clip threshold at
    # one setting but not another (degenerate final geometries); re-solve the
    # final constraint set across the ladder before giving up
    points = None
    last_error = None
    for level in (None, "default", "vtight"):
        try:
            if level is not None:
                solver_obj = _attempt(cons, level)
                gram = np.array(xvar.value)
                gram = (gram + gram.T) / 2.0
            points = _extract_points(gram)
            break
        except SolverError as exc:
            last_error = exc
    if points is None:
        raise last_error
    emb = VectorEmbedding(points)
    dist = emb.squared_distances()
    demand_mass = float((hb0 * dist).sum())
    if demand_mass <= 0:
        raise SolverError("extracted embedding carries no demand mass")
    emb = VectorEmbedding(points / math.sqrt(demand_mass))
    dist = emb.squared_distances()
    value = float((gb0 * dist).sum())
    residuals = {
        "normalization": abs(float((hb0 * dist).sum()) - 1.0),
        "triangle": max(_max_triangle_violation(dist), 0.0),
        "objective": abs(value - solver_obj),
        "rounds": float(rounds),
    }
    return RelaxationValue(value=value, kind="sdp", witness=emb, residuals=residuals)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def verify_solution(pair: InstancePair, rv: RelaxationValue,
                    solver_tol: float = SOLVER_TOL) -> VerificationReport:
    """Recompute objective and feasibility residuals straight from the witness.

    Everything is evaluated with explicit double sums over the normalized
    weights, independent of any solver machinery; the report passes iff the
    worst residual is at most 10 * solver_tol.
    """
    gb = pair.g.nbar
    hb = pair.h.nbar
    residuals: dict = {}
    if rv.kind == "spectral":
        x = np.asarray(rv.witness, dtype=float)
        diff2 = (x[:, None] - x[None, :]) ** 2
        num = float((gb * diff2).sum())
        den = float((hb * diff2).sum())
        residuals["objective"] = abs(num / den - rv.value) if den > 0 else math.inf
    elif rv.kind in ("lp", "sdp"):
        if rv.kind == "lp":
            d = np.asarray(rv.witness.d, dtype=float)
            residuals["symmetry"] = float(np.abs(d - d.T).max())
            residuals["diagonal"] = float(np.abs(np.diag(d)).max())
            residuals["nonnegativity"] = max(0.0, -float(d.min()))
        else:
            d = rv.witness.squared_distances()
        residuals["normalization"] = abs(float((hb * d).sum()) - 1.0)
        residuals["triangle"] = max(_max_triangle_violation(d), 0.0)
        residuals["objective"] = abs(float((gb * d).sum()) - rv.value)
    else:
        raise ValidationError(f"unknown relaxation kind {rv.kind!r}")
    worst_name = max(residuals, key=lambda k: residuals[k])
    worst_value = residuals[worst_name]
    return VerificationReport(kind=rv.kind, passed=worst_value <= 10.0 * solver_tol,
                              residuals=residuals, worst_name=worst_name,
                              worst_value=worst_value)


# ---------------------------------------------------------------------------
# witness text serialization
# ---------------------------------------------------------------------------

def serialize_witness(rv: RelaxationValue) -> str:
    lines = [f"# kind {rv.kind}", f"# value {rv.value!r}"]
    if rv.kind == "spectral":
        x = np.asarray(rv.witness)
        lines += [f"spectral x {v} {float(x[v])!r}" for v in range(len(x))]
    elif rv.kind == "lp":
        d = rv.witness.d
        n = d.shape[0]
        lines += [f"metric {u} {v} {float(d[u, v])!r}"
                  for u in range(n) for v in range(u + 1, n)]
    elif rv.kind == "sdp":
        pts = rv.witness.points
        lines += ["points " + str(v) + " " + " ".join(repr(float(c)) for c in pts[v])
                  for v in range(pts.shape[0])]
    else:
        raise ValidationError(f"unknown relaxation kind {rv.kind!r}")
    return "\n".join(lines) + "\n"


def parse_witness(text: str, kind: str, n: int):
    rows = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    if kind == "spectral":
        x = np.zeros(n)
        for tok in rows:
            if len(tok) != 4 or tok[:2] != ["spectral", "x"]:
                raise ValidationError(f"bad spectral witness line: {' '.join(tok)!r}")
            x[int(tok[2])] = float(tok[3])
        return x
    if kind == "lp":
        d = np.zeros((n, n))
        for tok in rows:
            if len(tok) != 4 or tok[0] != "metric":
                raise ValidationError(f"bad metric witness line: {' '.join(tok)!r}")
            u, v, val = int(tok[1]), int(tok[2]), float(tok[3])
            d[u, v] = d[v, u] = val
        return SemiMetric(d)
    if kind == "sdp":
        coords = {}
        for tok in rows:
            if len(tok) < 3 or tok[0] != "points":
                raise ValidationError(f"bad points witness line: {' '.join(tok)!r}")
            coords[int(tok[1])] = [float(c) for c in tok[2:]]
        if sorted(coords) != list(range(n)):
            raise ValidationError("points witness does not cover every vertex")
        return VectorEmbedding(np.array([coords[v] for v in range(n)]))
    raise ValidationError(f"unknown relaxation kind {kind!r}")
