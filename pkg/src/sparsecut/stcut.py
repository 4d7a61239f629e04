"""Spectral Cheeger-type approximation for minimum s-t cut.

With the demand graph fixed to the single edge (s, t), the spectral
relaxation is the harmonic (electrical) potential problem with boundary
x_s = 0, x_t = 1; its energy equals the relaxation value.  A threshold
sweep of the potentials cuts at most a sqrt(energy) fraction of the
normalized edge mass, and the gradient flow 2 nbar(u,v) (x_v - x_u) is a
feasible s-t flow of value exactly the energy under edge capacities
2 nbar(u,v), giving a cut/flow ratio of at most 1/sqrt(energy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph

from .errors import SolverError, ValidationError
from .graphs import Cut, InstancePair, WeightedGraph, cut_weight, laplacian

SOLVE_TOL = 1e-10
FLOW_TOL = 1e-8
_DENSE_MAX_N = 1500
_DIRECT_MAX_N = 10_000


@dataclass(frozen=True, eq=False)
class Potentials:
    """Harmonic vertex values with x_s = 0, x_t = 1 and their energy."""

    x: np.ndarray
    s: int
    t: int
    energy: float
    disconnected: bool = False


@dataclass(frozen=True, eq=False)
class Flow:
    """Antisymmetric edge flows; f[u, v] > 0 means flow from u towards v."""

    f: np.ndarray
    value: float
    s: int
    t: int


@dataclass(frozen=True, eq=False)
class STCertificate:
    s: int
    t: int
    energy: float
    cut: Cut
    cut_fraction: float
    flow: Flow | None
    ratio: float
    ratio_bound: float
    bound_holds: bool
    disconnected: bool


def _check_terminals(g: WeightedGraph, s: int, t: int):
    if not (0 <= s < g.n and 0 <= t < g.n):
        raise ValidationError("terminal index out of range")
    if s == t:
        raise ValidationError("terminals must be distinct")


def electrical_potentials(g: WeightedGraph, s: int, t: int,
                          solve_tol: float = SOLVE_TOL) -> Potentials:
    """Solve the reduced Laplacian system with boundary x_s = 0, x_t = 1.

    If s and t are disconnected, returns the exact optimum instead of
    erroring: the component indicator with zero energy, flagged.  Vertices
    in components touching neither terminal get potential 0.  Potentials are
    asserted to obey the maximum principle exactly; a violation means the
    linear solver misbehaved and raises rather than clamps.
    """
    _check_terminals(g, s, t)
    n = g.n
    ncomp, comp = csgraph.connected_components(sp.csr_matrix(g.offdiag > 0), directed=False)
    if comp[s] != comp[t]:
        x = (comp == comp[t]).astype(float)
        return Potentials(x=x, s=s, t=t, energy=0.0, disconnected=True)
    lap = laplacian(g)
    x = np.zeros(n)
    x[t] = 1.0
    solve_mask = (comp == comp[s])
    solve_mask[s] = solve_mask[t] = False
    unknowns = np.nonzero(solve_mask)[0]
    if len(unknowns):
        a = lap[np.ix_(unknowns, unknowns)]
        b = -lap[unknowns, t]
        if n <= _DENSE_MAX_N:
            sol = np.linalg.solve(a, b)
        elif n <= _DIRECT_MAX_N:
            sol = sp.linalg.spsolve(sp.csc_matrix(a), b)
        else:
            sol, info = sp.linalg.cg(sp.csr_matrix(a), b, rtol=0.0, atol=solve_tol)
            if info != 0:
                raise SolverError(f"conjugate gradient did not converge (info={info})")
        x[unknowns] = sol
        residual = float(np.abs(a @ sol - b).max())
        if residual > solve_tol:
            raise SolverError(f"Laplacian solve residual {residual!r} exceeds {solve_tol!r}")
    if x.min() < 0.0 or x.max() > 1.0:
        raise SolverError(
            f"maximum principle violated: potentials in [{x.min()!r}, {x.max()!r}]")
    energy = float(x @ lap @ x)
    return Potentials(x=x, s=s, t=t, energy=energy, disconnected=False)


def st_sweep(g: WeightedGraph, s: int, t: int, pot: Potentials):
    """Minimum-fraction threshold cut of the potentials, separating s from t.

    The swept fraction never exceeds sqrt(energy): a uniform threshold cuts
    nbar-mass sum nbar(u,v) |x_u - x_v| in expectation, which Cauchy-Schwarz
    caps at the root energy.
    """
    _check_terminals(g, s, t)
    x = pot.x
    order = np.argsort(x, kind="stable")
    best = None
    for k in range(1, g.n):
        lo, hi = x[order[k - 1]], x[order[k]]
        if lo == hi:
            continue
        if hi <= 0.0 or lo >= 1.0:
            continue  # threshold must fall inside (0, 1) to separate s from t
        cut = Cut(frozenset(int(v) for v in order[:k]), g.n)
        frac = cut_weight(g, cut)
        small = min(len(cut.members), g.n - len(cut.members))
        key = (frac, small, cut.canonical_members())
        if best is None or key < best[0]:
            best = (key, cut, frac)
    if best is None:
        raise ValidationError("potentials admit no separating threshold")
    return best[1], best[2]


def extract_flow(g: WeightedGraph, pot: Potentials, flow_tol: float = FLOW_TOL) -> Flow:
    """Gradient flow f(u, v) = 2 nbar(u, v) (x_v - x_u) on the edge support.

    Conservation at non-terminals, capacity feasibility (|f| <= 2 nbar) and
    value = energy are all audited before returning.
    """
    nbar_off = g.nbar.copy()
    np.fill_diagonal(nbar_off, 0.0)
    x = pot.x
    f = 2.0 * nbar_off * (x[None, :] - x[:, None])
    net_in = f.sum(axis=0)
    interior = np.ones(g.n, dtype=bool)
    interior[[pot.s, pot.t]] = False
    worst = float(np.abs(net_in[interior]).max()) if interior.any() else 0.0
    if worst > flow_tol:
        raise SolverError(f"flow conservation residual {worst!r} exceeds {flow_tol!r}")
    value = float(net_in[pot.t])
    if abs(value - pot.energy) > flow_tol:
        raise SolverError(
            f"flow value {value!r} disagrees with energy {pot.energy!r}")
    over = float((np.abs(f) - 2.0 * nbar_off).max())
    if over > flow_tol:
        raise SolverError(f"flow exceeds capacity by {over!r}")
    return Flow(f=f, value=value, s=pot.s, t=pot.t)


def st_certificate(g: WeightedGraph, s: int, t: int) -> STCertificate:
    """Potentials + sweep cut + feasible flow with the cut/flow ratio report.

    The reported ratio cut_fraction / flow_value is at most 1/sqrt(energy)
    whenever the terminals are connected; for disconnected terminals the
    exact zero cut is reported with a zero flow.
    """
    pot = electrical_potentials(g, s, t)
    cut, frac = st_sweep(g, s, t, pot)
    if pot.disconnected:
        return STCertificate(s=s, t=t, energy=0.0, cut=cut, cut_fraction=frac,
                             flow=None, ratio=0.0, ratio_bound=math.inf,
                             bound_holds=True, disconnected=True)
    flow = extract_flow(g, pot)
    ratio = frac / flow.value
    ratio_bound = (1.0 / math.sqrt(pot.energy)) * (1.0 + 1e-6)
    return STCertificate(s=s, t=t, energy=pot.energy, cut=cut, cut_fraction=frac,
                         flow=flow, ratio=ratio, ratio_bound=ratio_bound,
                         bound_holds=ratio <= ratio_bound, disconnected=False)


def serialize_flow(cert: STCertificate) -> str:
    lines = [
        "flow v1",
        f"energy {cert.energy!r}",
        "cut " + " ".join(str(v) for v in cert.cut.sorted_members),
        f"cut-fraction {cert.cut_fraction!r}",
        f"ratio {cert.ratio!r}",
    ]
    if cert.flow is not None:
        f = cert.flow.f
        n = f.shape[0]
        for u in range(n):
            for v in range(u + 1, n):
                if f[u, v] != 0.0:
                    lines.append(f"flow {u} {v} {float(f[u, v])!r}")
    return "\n".join(lines) + "\n"
