"""Pseudo-metrics on graph windows and intrinsic-metric verification.

A pseudo-metric is carried in one of three representations: a dense
symmetric table, a coordinate rule ``scale * f(|x - y|)`` with profile
``f(t) = t`` or ``f(t) = min(t^beta, t)``, or shortest-path distances
under per-edge Lipschitz budgets.  Verification against a window has two
routes: the complete row-sum criterion (sufficient) and sampled checks of
the defining cutoff-energy inequality (a counterexample hunter).  Float
tables of true metrics carry one-ulp triangle noise, so exactness claims
are settled by exact rational (or integer) confirmation of suspects.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from . import graphs as _graphs
from .energy import energy_measure
from .graphs import GraphForm, ModelSpec, build_model, degree_measure

__all__ = [
    "PseudoMetric",
    "IntrinsicWitness",
    "EdgeBudgetSet",
    "RowsumReport",
    "DefinitionalReport",
    "CutoffBoundsReport",
    "JumpMomentReport",
    "dist_to_set",
    "cutoff",
    "ball",
    "annulus",
    "truncate",
    "intrinsic_rowsum_check",
    "definitional_check",
    "budgets_m1",
    "budgets_m2",
    "budget_metric",
    "graph_distance",
    "jump_size",
    "jump_size_trend",
    "max_combine",
    "lipschitz_sample",
    "roundtrip_check",
    "cutoff_energy_bounds",
    "cutoff_decay_fit",
    "jump_moment_check",
    "rowsum_scale",
    "scaled_euclidean",
    "three_point_metrics",
    "dump_metric",
    "parse_metric",
    "build_metric",
]

IDENTITY_REL_TOL = 1e-12
TRIANGLE_SAMPLE_TRIPLES = 100_000
TRIANGLE_EXHAUSTIVE_LIMIT = 300


def _profile(t: np.ndarray, beta: float | None) -> np.ndarray:
    if beta is None:
        return t
    return np.minimum(np.power(t, beta), t)


class PseudoMetric:
    """Symmetric, triangle-inequality map on a window of ``n`` vertices."""

    def __init__(self, n: int, kind: str, *, table=None, coords=None,
                 scale: float = 1.0, beta: float | None = None, budgets=None):
        self.n = n
        self.kind = kind
        self._table = table
        self.coords = coords
        self.scale = float(scale)
        self.beta = beta
        self.budgets = budgets
        self._rows: dict[int, np.ndarray] = {}

    # -- constructors ------------------------------------------------

    @classmethod
    def from_table(cls, table, validate: bool = True, rng=None) -> "PseudoMetric":
        T = np.asarray(table, dtype=np.float64)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError("metric table must be square")
        rho = cls(T.shape[0], "table", table=T)
        if validate:
            rho.validate(rng=rng)
        return rho

    @classmethod
    def from_coords(cls, coords, scale: float = 1.0,
                    beta: float | None = None) -> "PseudoMetric":
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim != 2:
            raise ValueError("coords must be (n, d)")
        if scale < 0.0:
            raise ValueError("scale must be nonnegative")
        if beta is not None and not 0.0 < beta <= 1.0:
            raise ValueError("profile exponent must lie in (0, 1]")
        return cls(coords.shape[0], "coordinate", coords=coords, scale=scale,
                   beta=beta)

    @classmethod
    def from_budgets(cls, budgets: "EdgeBudgetSet") -> "PseudoMetric":
        W = budgets.weights
        return cls(W.shape[0], "path", budgets=W.tocsr())

    # -- evaluation ---------------------------------------------------

    def pairwise(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        if self.kind == "table":
            return self._table[xs, ys]
        if self.kind == "coordinate":
            t = np.linalg.norm(self.coords[xs] - self.coords[ys], axis=-1)
            return self.scale * _profile(t, self.beta)
        out = np.empty(xs.shape, dtype=np.float64)
        for src in np.unique(xs):
            sel = xs == src
            out[sel] = self.row(int(src))[ys[sel]]
        return out

    def row(self, x: int) -> np.ndarray:
        if self.kind == "table":
            return self._table[x]
        if self.kind == "coordinate":
            t = np.linalg.norm(self.coords - self.coords[x], axis=1)
            return self.scale * _profile(t, self.beta)
        if x not in self._rows:
            self._rows[x] = dijkstra(self.budgets, directed=False, indices=x)
        return self._rows[x]

    def table(self) -> np.ndarray:
        if self._table is None:
            if self.kind == "coordinate":
                diff = self.coords[:, None, :] - self.coords[None, :, :]
                t = np.linalg.norm(diff, axis=2)
                self._table = self.scale * _profile(t, self.beta)
            else:
                self._table = dijkstra(self.budgets, directed=False)
        return self._table

    def dist_to_set(self, A) -> np.ndarray:
        A = np.asarray(A, dtype=np.int64).reshape(-1)
        if A.size == 0:
            raise ValueError("distance to the empty set is undefined")
        if self.kind == "path":
            return dijkstra(self.budgets, directed=False, indices=A,
                            min_only=True)
        if self.kind == "coordinate":
            d = np.linalg.norm(self.coords[:, None, :] - self.coords[A][None],
                               axis=2)
            return (self.scale * _profile(d, self.beta)).min(axis=1)
        return self._table[A].min(axis=0)

    # -- invariants ---------------------------------------------------

    def validate(self, rng=None, rel_tol: float = IDENTITY_REL_TOL) -> None:
        """Check symmetry, zero diagonal, nonnegativity, triangle inequality.

        Exhaustive for n <= 300, sampled (1e5 triples) beyond.  Violations
        beyond roundoff (relative ``rel_tol``) raise ValueError.
        """
        if self.kind != "table":
            return  # guaranteed by construction
        T = self._table
        if np.any(np.diagonal(T) != 0.0):
            raise ValueError("metric table must have zero diagonal")
        if np.any(T < 0.0):
            raise ValueError("metric table must be nonnegative")
        finite = T[np.isfinite(T)]
        scale = float(finite.max()) if finite.size else 1.0
        if not np.array_equal(T, T.T):
            raise ValueError("metric table must be symmetric")
        tol = rel_tol * max(scale, 1.0)
        n = self.n
        if n <= TRIANGLE_EXHAUSTIVE_LIMIT:
            for z in range(n):
                with np.errstate(invalid="ignore"):
                    excess = T - (T[:, [z]] + T[[z], :])
                worst = np.nanmax(excess) if excess.size else 0.0
                if worst > tol:
                    x, y = np.unravel_index(np.nanargmax(excess), excess.shape)
                    raise ValueError(
                        f"triangle inequality fails at ({x}, {z}, {y}) "
                        f"by {worst:g}")
        else:
            rng = np.random.default_rng(0) if rng is None else rng
            idx = rng.integers(0, n, size=(TRIANGLE_SAMPLE_TRIPLES, 3))
            with np.errstate(invalid="ignore"):
                excess = (T[idx[:, 0], idx[:, 1]]
                          - T[idx[:, 0], idx[:, 2]] - T[idx[:, 2], idx[:, 1]])
            worst = np.nanmax(excess)
            if worst > tol:
                raise ValueError(f"triangle inequality fails by {worst:g}")


@dataclass(frozen=True)
class IntrinsicWitness:
    """Per-vertex budget pair certifying the cutoff-energy inequality.

    ``m_b`` bounds the jump energy density of distance functions, ``m_c``
    the local part (identically zero on graph windows); their sum may not
    exceed the vertex masses.
    """

    m_b: np.ndarray
    m_c: np.ndarray

    @classmethod
    def full(cls, G: GraphForm) -> "IntrinsicWitness":
        return cls(m_b=G.m.copy(), m_c=np.zeros(G.n))

    def validate(self, G: GraphForm) -> None:
        if self.m_b.shape != (G.n,) or self.m_c.shape != (G.n,):
            raise ValueError("witness shape mismatch")
        if np.any(self.m_b < 0.0) or np.any(self.m_c < 0.0):
            raise ValueError("witness measures must be nonnegative")
        if np.any(self.m_b + self.m_c > G.m * (1.0 + 1e-15)):
            raise ValueError("witness measures must satisfy m_b + m_c <= m")


@dataclass(frozen=True)
class EdgeBudgetSet:
    """Symmetric nonnegative per-edge Lipschitz budgets on the jump support."""

    weights: sp.csr_array

    def __post_init__(self):
        if np.any(self.weights.data < 0.0):
            raise ValueError("edge budgets must be nonnegative")

    @classmethod
    def ones(cls, G: GraphForm) -> "EdgeBudgetSet":
        rows, cols, _ = G.jump_pairs
        data = np.ones(rows.size)
        w = sp.coo_array((data, (rows, cols)), shape=(G.n, G.n)).tocsr()
        return cls(weights=w)


# ---------------------------------------------------------------------------
# distance functions, cutoffs, balls


def dist_to_set(rho: PseudoMetric, A) -> np.ndarray:
    """rho_A(x) = min over a in A of rho(x, a)."""
    return rho.dist_to_set(A)


def cutoff(rho: PseudoMetric, E, a: float) -> np.ndarray:
    """(1 - rho_E/a)^+ : equals 1 on E, vanishes outside the a-ball of E."""
    if a <= 0.0:
        raise ValueError("cutoff range must be positive")
    with np.errstate(invalid="ignore"):
        eta = 1.0 - rho.dist_to_set(E) / a
    return np.maximum(eta, 0.0)


def ball(rho: PseudoMetric, E, r: float) -> np.ndarray:
    """Boolean mask of {x : rho_E(x) <= r}."""
    return rho.dist_to_set(E) <= r


def annulus(rho: PseudoMetric, E, r: float) -> np.ndarray:
    """Metric collar around the boundary of E: B_r(E) intersect B_r(E^c)."""
    maskE = np.zeros(rho.n, dtype=bool)
    maskE[np.asarray(E, dtype=np.int64).reshape(-1)] = True
    comp = np.nonzero(~maskE)[0]
    if comp.size == 0:
        return np.zeros(rho.n, dtype=bool)
    return ball(rho, np.nonzero(maskE)[0], r) & ball(rho, comp, r)


def truncate(rho: PseudoMetric, T: float) -> PseudoMetric:
    """Pointwise cap min(rho, T); caps of pseudo-metrics stay pseudo-metrics."""
    return PseudoMetric.from_table(np.minimum(rho.table(), T), validate=False)


# ---------------------------------------------------------------------------
# intrinsic verification


@dataclass(frozen=True)
class RowsumReport:
    slack: np.ndarray
    verdict: bool
    interior_min_slack: float
    boundary_min_slack: float | None
    tol_rel: float

    def worst_vertex(self) -> int:
        return int(np.argmin(self.slack))


def intrinsic_rowsum_check(G: GraphForm, rho: PseudoMetric,
                           tol_rel: float = IDENTITY_REL_TOL) -> RowsumReport:
    """Complete sufficient criterion: s(x) = m(x) - sum_y rho(x,y)^2 j(x,y) >= 0.

    The verdict is decided on interior vertices only; boundary rows lose
    truncated jump mass, so their slack is reported separately with the
    window's tail bounds as the caveat.
    """
    rows, cols, vals = G.jump_pairs
    d = rho.pairwise(rows, cols)
    rowsum = np.bincount(rows, weights=d * d * vals, minlength=G.n)
    slack = G.m - rowsum
    inter = G.interior
    ok = bool(np.all(slack[inter] >= -tol_rel * G.m[inter])) if inter.any() else True
    bmin = float(np.min(slack[~inter])) if (~inter).any() else None
    imin = float(np.min(slack[inter])) if inter.any() else np.inf
    return RowsumReport(slack=slack, verdict=ok, interior_min_slack=imin,
                        boundary_min_slack=bmin, tol_rel=tol_rel)


@dataclass(frozen=True)
class DefinitionalReport:
    worst_violation: float
    worst_vertex: int
    worst_set: tuple
    worst_cap: float
    verdict: bool
    n_samples: int


def default_sample_sets(G: GraphForm, rho: PseudoMetric, rng=None,
                        n_random: int = 50):
    """Singletons, random subsets, and a small/median/no truncation grid."""
    rng = np.random.default_rng(0) if rng is None else rng
    sets = [np.array([x]) for x in range(G.n)]
    for _ in range(n_random):
        size = int(rng.integers(1, max(2, G.n // 2 + 1)))
        sets.append(rng.choice(G.n, size=size, replace=False))
    rows, cols, _ = G.jump_pairs
    if rows.size:
        d = rho.pairwise(rows, cols)
        pos = d[d > 0]
        med = float(np.median(pos)) if pos.size else 1.0
        small = 0.5 * float(np.min(pos)) if pos.size else 0.5
    else:
        med, small = 1.0, 0.5
    caps = [np.inf, med, small]
    return [(A, T) for A in sets for T in caps]


def definitional_check(G: GraphForm, rho: PseudoMetric,
                       witness: IntrinsicWitness, samples=None, rng=None,
                       tol_rel: float = IDENTITY_REL_TOL,
                       chunk: int = 256) -> DefinitionalReport:
    """Hunt for cutoff-distance functions whose jump energy exceeds the witness.

    For each sampled (A, T) the vector u = rho_A ^ T is formed and the
    per-vertex jump density of u is compared against m_b.  Passing the
    sampled check is necessary evidence, not proof; the row-sum criterion
    is the complete sufficient route.  Samples are evaluated in batches
    through a pair-incidence matrix.
    """
    witness.validate(G)
    if samples is None:
        samples = default_sample_sets(G, rho, rng=rng)
    tol = tol_rel * max(1.0, float(np.max(witness.m_b, initial=0.0)))

    rows, cols, vals = G.jump_pairs
    npairs = rows.size
    arange = np.arange(npairs)
    ones = np.ones(npairs)
    inc = sp.coo_array((np.concatenate([ones, -ones]),
                        (np.tile(arange, 2), np.concatenate([rows, cols]))),
                       shape=(npairs, G.n)).tocsr()
    weight_rows = sp.coo_array((vals, (rows, arange)),
                               shape=(G.n, npairs)).tocsr()

    dist_cache: dict[tuple, np.ndarray] = {}

    def dist_for(A) -> np.ndarray:
        key = tuple(int(t) for t in np.asarray(A).reshape(-1))
        if key not in dist_cache:
            d = rho.dist_to_set(A)
            if not np.all(np.isfinite(d)):
                top = np.max(d[np.isfinite(d)], initial=0.0)
                d = np.where(np.isfinite(d), d, top)
            dist_cache[key] = d
        return dist_cache[key]

    worst = -np.inf
    argv, args, argT = -1, (), np.inf
    for lo in range(0, len(samples), chunk):
        batch = samples[lo:lo + chunk]
        U = np.stack([np.minimum(dist_for(A), T) for A, T in batch], axis=1)
        du = inc @ U
        dens = weight_rows @ (du * du)
        viol = dens - witness.m_b[:, None]
        flat = int(np.argmax(viol))
        x, ci = np.unravel_index(flat, viol.shape)
        if viol[x, ci] > worst:
            worst = float(viol[x, ci])
            A, T = batch[ci]
            argv = int(x)
            args = tuple(int(t) for t in np.asarray(A).reshape(-1))
            argT = T
    return DefinitionalReport(worst_violation=worst, worst_vertex=argv,
                              worst_set=args, worst_cap=float(argT),
                              verdict=worst <= tol, n_samples=len(samples))


# ---------------------------------------------------------------------------
# budget metrics


def budgets_m1(G: GraphForm) -> EdgeBudgetSet:
    """Edge budgets from the vertex rule min(1, m/m'), symmetrized over endpoints."""
    mprime = degree_measure(G)
    with np.errstate(divide="ignore"):
        cap = np.minimum(1.0, np.where(mprime > 0, G.m / mprime, 1.0))
    rows, cols, _ = G.jump_pairs
    w = np.sqrt(np.minimum(cap[rows], cap[cols]))
    ws = sp.coo_array((w, (rows, cols)), shape=(G.n, G.n)).tocsr()
    return EdgeBudgetSet(weights=ws)


def budgets_m2(G: GraphForm) -> EdgeBudgetSet:
    """Edge budgets from the per-edge rule min(1, m/(j * deg)), symmetrized."""
    deg = G.degree
    rows, cols, vals = G.jump_pairs
    cap = np.minimum(1.0, G.m[rows] / (vals * deg[rows]))
    oriented = sp.coo_array((cap, (rows, cols)), shape=(G.n, G.n)).tocsr()
    sym = oriented.minimum(oriented.T).tocoo()
    return EdgeBudgetSet(weights=sp.coo_array(
        (np.sqrt(sym.data), (sym.row, sym.col)), shape=(G.n, G.n)).tocsr())


def budget_metric(G: GraphForm, budgets: EdgeBudgetSet) -> PseudoMetric:
    """Shortest-path metric under per-edge budgets.

    This equals the supremum metric of the function set cut out by the
    budget constraints: the supremum of f(x) over budget-Lipschitz f
    vanishing at y relaxes along paths, and the tightest relaxation is the
    shortest-path distance.  Disconnected budget supports yield infinite
    distances, which downstream ops treat as "outside every ball".
    """
    if budgets.weights.shape != (G.n, G.n):
        raise ValueError("budget shape mismatch")
    return PseudoMetric.from_budgets(budgets)


def graph_distance(G: GraphForm) -> PseudoMetric:
    return budget_metric(G, EdgeBudgetSet.ones(G))


# ---------------------------------------------------------------------------
# jump size


def jump_size(G: GraphForm, rho: PseudoMetric) -> float:
    """Largest metric length of a pair carrying jump weight within the window."""
    rows, cols, vals = G.jump_pairs
    if rows.size == 0:
        return 0.0
    return float(np.max(rho.pairwise(rows, cols)))


def jump_size_trend(spec: ModelSpec, metric_spec: dict, radii) -> dict:
    """Jump sizes over growing windows with a stabilization flag.

    Finite-range kernels stabilize; long-range kernels with unbounded
    metrics keep growing, flagged as "infinite".
    """
    values = []
    for r in radii:
        G = build_model(dataclasses.replace(spec, R=int(r)))
        rho = build_metric(G, metric_spec)
        values.append(jump_size(G, rho))
    stable = len(values) >= 2 and values[-1] <= values[-2] * (1 + 1e-12)
    return {"radii": list(int(r) for r in radii), "values": values,
            "verdict": "finite" if stable else "infinite"}


def max_combine(rho1: PseudoMetric, rho2: PseudoMetric) -> PseudoMetric:
    """Pointwise maximum; always a pseudo-metric again (asserted on build)."""
    if rho1.n != rho2.n:
        raise ValueError("metrics live on different windows")
    return PseudoMetric.from_table(np.maximum(rho1.table(), rho2.table()),
                                   validate=True)


# ---------------------------------------------------------------------------
# Lipschitz extension and round trip


def lipschitz_sample(rho: PseudoMetric, anchors=None, seed=None,
                     n_anchors: int = 4) -> np.ndarray:
    """Minimal 1-Lipschitz extension of anchor values.

    ``anchors`` is a list of (vertex, value) pairs whose gaps must be
    admissible (|g_i - g_j| <= rho(p_i, p_j)); when omitted, admissible
    anchors are drawn from ``seed`` as signed combinations of distance
    functions.  Returns u(x) = min_i (g_i + rho(x, p_i)).
    """
    if anchors is None:
        rng = np.random.default_rng(seed)
        pts = rng.choice(rho.n, size=min(n_anchors, rho.n), replace=False)
        qs = rng.choice(rho.n, size=2, replace=False)
        t = rng.uniform(-1.0, 1.0, size=2)
        s = np.sum(np.abs(t))
        if s > 1.0:
            t /= s
        base = np.zeros(rho.n)
        for coef, q in zip(t, qs):
            base += coef * rho.row(int(q))
        anchors = [(int(p), float(base[p])) for p in pts]
    pts = np.array([p for p, _ in anchors], dtype=np.int64)
    gs = np.array([g for _, g in anchors], dtype=np.float64)
    gaps = np.abs(gs[:, None] - gs[None, :])
    dd = rho.pairwise(*np.meshgrid(pts, pts, indexing="ij"))
    tol = IDENTITY_REL_TOL * max(1.0, float(np.max(np.abs(gs), initial=0.0)))
    if np.any(gaps > dd + tol):
        raise ValueError("anchor values are not admissible for this metric")
    cand = gs[:, None] + np.stack([rho.row(int(p)) for p in pts])
    return cand.min(axis=0)


def _confirm_excess_exact(rho: PseudoMetric, T: np.ndarray, triples) -> float:
    """Largest exceedance of sup_z (rho(x,z) - rho(y,z)) over rho(x,y).

    Suspects come from float arithmetic; each is confirmed exactly.  For
    integer-coordinate metrics with the identity profile the comparison
    reduces to integer arithmetic on squared distances; otherwise the
    stored float values are compared as exact rationals.
    """
    integer_coords = (
        rho.kind == "coordinate" and rho.beta is None and rho.coords is not None
        and np.all(rho.coords == np.round(rho.coords)))
    worst = 0.0
    for x, y, z in triples:
        if integer_coords:
            # scale * (sqrt(a) - sqrt(b)) > scale * sqrt(g)  with integer a, b, g
            cx, cy, cz = (rho.coords[i].astype(np.int64) for i in (x, y, z))
            a = int(np.sum((cx - cz) ** 2))
            b = int(np.sum((cy - cz) ** 2))
            g = int(np.sum((cx - cy) ** 2))
            lhs = a - b - g
            real = lhs > 0 and lhs * lhs > 4 * b * g
        else:
            real = (Fraction(float(T[x, z])) - Fraction(float(T[y, z]))
                    > Fraction(float(T[x, y])))
        if real:
            worst = max(worst, float(T[x, z] - T[y, z] - T[x, y]))
    return worst


def roundtrip_check(rho: PseudoMetric, suspect_cap: int = 500_000) -> float:
    """Deviation of the reconstructed supremum metric from rho itself.

    The supremum of f(x) over 1-Lipschitz f with f(y) = 0 is attained by
    f = rho(., y), so reconstruction can only fail through a triangle
    exceedance; float-level suspects are confirmed exactly and 0.0 is
    returned when none is real.
    """
    T = rho.table()
    n = T.shape[0]
    triples = []
    for z in range(n):
        col = T[:, z]
        with np.errstate(invalid="ignore"):
            excess = (col[:, None] - col[None, :]) - T
        xs, ys = np.nonzero(excess > 0.0)
        for x, y in zip(xs, ys):
            triples.append((int(x), int(y), int(z)))
            if len(triples) > suspect_cap:
                return float(np.max(excess))
    return _confirm_excess_exact(rho, T, triples)


# ---------------------------------------------------------------------------
# cutoff energy bounds


@dataclass(frozen=True)
class CutoffBoundsReport:
    eta: np.ndarray
    density: np.ndarray
    global_ok: bool
    localized_ok: bool
    support_ok: bool
    global_margin: float
    localized_margin: float


def cutoff_energy_bounds(G: GraphForm, rho: PseudoMetric, E, a: float,
                         s: float,
                         tol_rel: float = IDENTITY_REL_TOL) -> CutoffBoundsReport:
    """Verify the two cutoff energy estimates at interior vertices.

    Global: the jump density of eta = (1 - rho_E/a)^+ is at most m/a^2.
    Localized: a^2 * density is supported on, and dominated by m on, the
    (s+a)-collar of E, where s is the jump size.
    """
    eta = cutoff(rho, E, a)
    dens = energy_measure(G, eta, "b").values
    inter = G.interior
    tol = tol_rel * max(1.0, float(np.max(G.m)))
    g_slack = G.m / a**2 - dens
    coll = annulus(rho, E, s + a)
    l_slack = np.where(coll, G.m, 0.0) - a**2 * dens
    outside = inter & ~coll
    return CutoffBoundsReport(
        eta=eta,
        density=dens,
        global_ok=bool(np.all(g_slack[inter] >= -tol)),
        localized_ok=bool(np.all(l_slack[inter] >= -tol)),
        support_ok=bool(np.all(dens[outside] == 0.0)),
        global_margin=float(np.min(g_slack[inter], initial=np.inf)),
        localized_margin=float(np.min(l_slack[inter], initial=np.inf)),
    )


def cutoff_decay_fit(G: GraphForm, rho: PseudoMetric, E, a: float):
    """Least-squares slope of log cutoff-energy density against distance.

    Fits over interior vertices strictly beyond the cutoff support (with a
    unit gap), where the density decays like the far field of the kernel.
    Returns (slope, intercept, deltas, log_density).
    """
    if G.coords is None:
        raise ValueError("decay fit needs vertex coordinates")
    E = np.asarray(E, dtype=np.int64).reshape(-1)
    eta = cutoff(rho, E, a)
    dens = energy_measure(G, eta, "b").values
    delta = np.min(np.linalg.norm(G.coords[:, None, :] - G.coords[E][None],
                                  axis=2), axis=1)
    reach = float(np.max(delta[eta > 0.0], initial=0.0))
    sel = G.interior & (eta == 0.0) & (dens > 0.0) & (delta >= reach + 1.0)
    if np.count_nonzero(sel) < 3:
        raise ValueError("not enough far-field vertices for a decay fit")
    slope, intercept = np.polyfit(delta[sel], np.log(dens[sel]), 1)
    return float(slope), float(intercept), delta[sel], np.log(dens[sel])


@dataclass(frozen=True)
class JumpMomentReport:
    lhs: float
    rhs: float
    verdict: bool


def jump_moment_check(G: GraphForm, rho: PseudoMetric,
                      witness: IntrinsicWitness, E,
                      tol_rel: float = IDENTITY_REL_TOL) -> JumpMomentReport:
    """Squared-distance jump mass emitted by a set against its witness mass.

    lhs = sum_{x in E} sum_y rho(x,y)^2 j(x,y), rhs = sum_{x in E} m_b(x);
    the inequality lhs <= rhs holds whenever rho passes the witness checks.
    """
    E = np.asarray(E, dtype=np.int64).reshape(-1)
    if E.size == 0:
        return JumpMomentReport(0.0, 0.0, True)
    mask = np.zeros(G.n, dtype=bool)
    mask[E] = True
    rows, cols, vals = G.jump_pairs
    keep = mask[rows]
    d = rho.pairwise(rows[keep], cols[keep])
    lhs = float(np.sum(d * d * vals[keep]))
    rhs = float(np.sum(witness.m_b[E]))
    tol = tol_rel * max(1.0, rhs)
    return JumpMomentReport(lhs=lhs, rhs=rhs, verdict=lhs <= rhs + tol)


# ---------------------------------------------------------------------------
# scaling helpers and the metric factory


def rowsum_scale(G: GraphForm, beta: float | None = None) -> float:
    """Largest c with sum_y (c f(|x-y|))^2 j(x,y) <= m(x) on interior vertices."""
    if G.coords is None:
        raise ValueError("row-sum scaling needs vertex coordinates")
    rows, cols, vals = G.jump_pairs
    t = np.linalg.norm(G.coords[rows] - G.coords[cols], axis=1)
    f = _profile(t, beta)
    sums = np.bincount(rows, weights=f * f * vals, minlength=G.n)
    sel = G.interior if G.interior.any() else np.ones(G.n, dtype=bool)
    ratio = sums[sel] / G.m[sel]
    top = float(np.max(ratio))
    if top <= 0.0:
        return np.inf
    return 1.0 / np.sqrt(top)


def scaled_euclidean(G: GraphForm, scale: float) -> PseudoMetric:
    if G.coords is None:
        raise ValueError("coordinate metric needs vertex coordinates")
    return PseudoMetric.from_coords(G.coords, scale=scale)


def three_point_metrics() -> tuple[PseudoMetric, PseudoMetric]:
    """The two 0/1 metrics of the three-vertex path counterexample.

    The first charges pairs touching the third vertex, the second pairs
    touching the first; each is intrinsic for the path, their pointwise
    maximum is not.
    """
    rho1 = PseudoMetric.from_table(
        np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]]))
    rho2 = PseudoMetric.from_table(
        np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))
    return rho1, rho2


def dump_metric(rho: PseudoMetric) -> str:
    """Dense lower-triangular text dump, 17 significant digits per entry."""
    T = rho.table()
    lines = [str(rho.n)]
    for i in range(1, rho.n):
        lines.append(" ".join(f"{T[i, j]:.17g}" for j in range(i)))
    return "\n".join(lines) + "\n"


def parse_metric(text: str) -> PseudoMetric:
    lines = text.splitlines()
    n = int(lines[0].strip())
    T = np.zeros((n, n))
    for i in range(1, n):
        vals = [float(t) for t in lines[i].split()]
        T[i, :i] = vals
        T[:i, i] = vals
    return PseudoMetric.from_table(T)


def build_metric(G: GraphForm, spec: dict) -> PseudoMetric:
    """Construct a metric from a config-style description."""
    kind = spec.get("kind")
    if kind == "scaled_euclidean":
        scale = spec.get("scale", "auto")
        if scale == "auto":
            d = G.coords.shape[1]
            scale = 1.0 / np.sqrt(2.0 * d)
        elif scale == "rowsum":
            scale = rowsum_scale(G)
        return scaled_euclidean(G, float(scale))
    if kind == "powercap":
        beta = float(spec["beta"])
        scale = spec.get("scale", "rowsum")
        if scale == "rowsum":
            scale = rowsum_scale(G, beta=beta)
        return PseudoMetric.from_coords(G.coords, scale=float(scale), beta=beta)
    if kind == "budget":
        name = spec.get("set", "M1")
        if name == "M1":
            return budget_metric(G, budgets_m1(G))
        if name == "M2":
            return budget_metric(G, budgets_m2(G))
        if name == "ones":
            return graph_distance(G)
        raise ValueError(f"unknown budget set {name!r}")
    if kind == "graph_distance":
        return graph_distance(G)
    if kind == "table":
        return PseudoMetric.from_table(np.asarray(spec["values"], dtype=float))
    if kind == "named":
        name = spec.get("name")
        rho1, rho2 = three_point_metrics()
        named = {"three_point_rho1": rho1, "three_point_rho2": rho2,
                 "three_point_max": max_combine(rho1, rho2)}
        if name not in named:
            raise ValueError(f"unknown named metric {name!r}")
        if G.n != 3:
            raise ValueError("three-point metrics need the three-point model")
        return named[name]
    if kind == "max":
        parts = [build_metric(G, s) for s in spec["of"]]
        out = parts[0]
        for p in parts[1:]:
            out = max_combine(out, p)
        return out
    raise ValueError(f"unknown metric kind {kind!r}")
