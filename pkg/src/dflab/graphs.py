"""Finite windows of weighted jump-form graphs.

A window is a finite vertex set carrying positive masses ``m``, symmetric
nonnegative jump weights ``j`` (empty diagonal), nonnegative killing
weights ``k`` and a boolean interior flag per vertex.  ``tail_bound``
estimates, per vertex, how much jump mass the window truncates away; a
vertex counts as interior when that loss is below a configured tolerance
(or, for short-range kernels, when its full neighbourhood is present).

The model catalog covers nearest-neighbour lattices, long-range power-law
and exponential kernels (1-d power law, exponential in d <= 3), a
two-hub/spoke family whose budget metrics degenerate as it grows, a
three-vertex path used as a counterexample, and a mirror-coupled grid on
[-1, 1] whose product energies diverge logarithmically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

__all__ = [
    "GraphForm",
    "ModelSpec",
    "build_model",
    "degree_measure",
    "validate",
    "dump_graph",
    "parse_graph",
]

DEFAULT_INTERIOR_TOL = 1e-8

MODEL_KINDS = (
    "lattice",
    "powerlaw",
    "exponential",
    "topo_example",
    "three_point",
    "mirror",
    "explicit",
)


@dataclass(frozen=True)
class GraphForm:
    """Immutable finite window of a weighted graph with killing.

    Attributes
    ----------
    m : (n,) positive vertex masses.
    j : (n, n) sparse symmetric nonnegative jump weights, zero diagonal.
    k : (n,) nonnegative killing weights.
    interior : (n,) bool, vertices unaffected by window truncation.
    tail_bound : (n,) nonnegative truncated-jump-mass estimates.
    coords : optional (n, d) vertex positions (integer-valued for
        lattice models, grid positions for the mirror model).
    """

    m: np.ndarray
    j: sp.csr_array
    k: np.ndarray
    interior: np.ndarray
    tail_bound: np.ndarray
    coords: np.ndarray | None = None
    interior_tol: float = DEFAULT_INTERIOR_TOL

    def __post_init__(self):
        n = self.m.shape[0]
        for name in ("m", "k", "tail_bound"):
            arr = getattr(self, name)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
        if self.interior.shape != (n,):
            raise ValueError("interior flag shape mismatch")
        if self.j.shape != (n, n):
            raise ValueError("jump weight matrix shape mismatch")
        if self.coords is not None and self.coords.shape[0] != n:
            raise ValueError("coords row count mismatch")
        for arr in (self.m, self.k, self.tail_bound, self.interior, self.coords):
            if arr is not None:
                arr.setflags(write=False)
        self.j.data.setflags(write=False)

    @property
    def n(self) -> int:
        return self.m.shape[0]

    @cached_property
    def jump_pairs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Ordered-pair view (rows, cols, weights); each unordered pair twice."""
        coo = self.j.tocoo()
        keep = coo.data != 0.0
        return coo.row[keep], coo.col[keep], coo.data[keep]

    @cached_property
    def degree(self) -> np.ndarray:
        """Structural neighbour counts (number of vertices with j(x, y) > 0)."""
        rows, _, _ = self.jump_pairs
        return np.bincount(rows, minlength=self.n).astype(np.int64)


@dataclass(frozen=True)
class ModelSpec:
    """Parameter carrier for the model catalog.

    ``R`` is the window radius for lattice-like kinds, ``n`` is the size
    parameter for ``topo_example`` (number of spokes) and ``mirror``
    (grid refinement).  ``interior_margin`` drives the lattice interior
    rule, ``interior_tol`` the tail-bound rule of long-range kernels.
    """

    kind: str
    d: int = 1
    R: int = 1
    n: int = 0
    alpha: float = 1.0
    beta: float = 1.0
    C: float = 1.0
    edge_weight: float = 1.0
    mass: float = 1.0
    interior_margin: int = 1
    interior_tol: float = DEFAULT_INTERIOR_TOL
    explicit: dict | None = None

    def validate(self) -> None:
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind in ("lattice", "powerlaw", "exponential"):
            if self.d not in (1, 2, 3):
                raise ValueError("dimension must be 1, 2 or 3")
            if self.R < 1:
                raise ValueError("window radius must be >= 1")
        if self.kind == "powerlaw" and self.d != 1:
            raise ValueError("power-law windows are 1-d only")
        if self.kind in ("powerlaw", "exponential") and not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if self.kind == "exponential" and self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if self.kind in ("topo_example", "mirror") and self.n < 2:
            raise ValueError("size parameter n must be >= 2")
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if self.edge_weight < 0.0 or self.C < 0.0:
            raise ValueError("kernel weights must be nonnegative")
        if self.kind == "explicit" and not self.explicit:
            raise ValueError("explicit model needs a payload")

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        return cls(**data)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "d": self.d, "R": self.R, "n": self.n,
               "alpha": self.alpha, "beta": self.beta, "C": self.C,
               "edge_weight": self.edge_weight, "mass": self.mass,
               "interior_margin": self.interior_margin,
               "interior_tol": self.interior_tol}
        if self.explicit is not None:
            out["explicit"] = self.explicit
        return out


def _symmetric_csr(n, xs, ys, ws) -> sp.csr_array:
    """Build a symmetric csr from one orientation per unordered pair."""
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    ws = np.asarray(ws, dtype=np.float64)
    rows = np.concatenate([xs, ys])
    cols = np.concatenate([ys, xs])
    data = np.concatenate([ws, ws])
    a = sp.coo_array((data, (rows, cols)), shape=(n, n))
    return a.tocsr()


def _lattice_coords(d: int, R: int) -> np.ndarray:
    pts = np.array(list(itertools.product(range(-R, R + 1), repeat=d)),
                   dtype=np.float64)
    return pts


def _build_lattice(spec: ModelSpec) -> GraphForm:
    coords = _lattice_coords(spec.d, spec.R)
    n = coords.shape[0]
    index = {tuple(int(c) for c in row): i for i, row in enumerate(coords)}
    xs, ys = [], []
    for i, row in enumerate(coords):
        for axis in range(spec.d):
            nb = list(int(c) for c in row)
            nb[axis] += 1
            if tuple(nb) in index:
                xs.append(i)
                ys.append(index[tuple(nb)])
    j = _symmetric_csr(n, xs, ys, np.full(len(xs), spec.edge_weight))
    missing = np.zeros(n)
    g = spec.interior_margin
    inner = np.all(np.abs(coords) <= spec.R - g, axis=1)
    for i, row in enumerate(coords):
        cnt = 0
        for axis in range(spec.d):
            for step in (-1, 1):
                nb = list(int(c) for c in row)
                nb[axis] += step
                if tuple(nb) not in index:
                    cnt += 1
        missing[i] = cnt * spec.edge_weight
    return GraphForm(
        m=np.full(n, spec.mass),
        j=j,
        k=np.zeros(n),
        interior=inner,
        tail_bound=missing,
        coords=coords,
        interior_tol=spec.interior_tol,
    )


def _powerlaw_tail_one_side(T: np.ndarray, alpha: float) -> np.ndarray:
    # sum_{t >= T} t^(-1-alpha) <= T^(-1-alpha) + T^(-alpha)/alpha
    T = np.maximum(T, 1.0)
    return T ** (-1.0 - alpha) + T ** (-alpha) / alpha


def _build_powerlaw(spec: ModelSpec) -> GraphForm:
    R, alpha = spec.R, spec.alpha
    xs = np.arange(-R, R + 1, dtype=np.float64)
    n = xs.size
    ii, jj = np.triu_indices(n, k=1)
    dist = np.abs(xs[jj] - xs[ii])
    w = dist ** (-1.0 - alpha)
    j = _symmetric_csr(n, ii, jj, w)
    tail = _powerlaw_tail_one_side(R + 1 - xs, alpha) + _powerlaw_tail_one_side(
        R + 1 + xs, alpha)
    return GraphForm(
        m=np.full(n, spec.mass),
        j=j,
        k=np.zeros(n),
        interior=tail <= spec.interior_tol,
        tail_bound=tail,
        coords=xs[:, None],
        interior_tol=spec.interior_tol,
    )


def _exponential_tail(coords: np.ndarray, R: int, d: int, beta: float,
                      C: float) -> np.ndarray:
    if d == 1:
        xs = coords[:, 0]
        geo = 1.0 / (1.0 - math.exp(-beta))
        return C * geo * (np.exp(-beta * (R + 1 - xs)) + np.exp(-beta * (R + 1 + xs)))
    # d >= 2: bound |y - x|_2 from below by the sup-norm shell index and sum
    # shell counts until the increment is negligible.
    T0 = (R + 1 - np.max(np.abs(coords), axis=1)).astype(np.int64)
    out = np.zeros(coords.shape[0])
    for i, T in enumerate(T0):
        total = 0.0
        ell = max(int(T), 1)
        while True:
            count = (2 * ell + 1) ** d - (2 * ell - 1) ** d
            term = count * math.exp(-beta * ell)
            total += term
            if term < 1e-18 * max(total, 1e-300):
                break
            ell += 1
        out[i] = C * total
    return out


def _build_exponential(spec: ModelSpec) -> GraphForm:
    coords = _lattice_coords(spec.d, spec.R)
    n = coords.shape[0]
    ii, jj = np.triu_indices(n, k=1)
    dist = np.linalg.norm(coords[jj] - coords[ii], axis=1)
    w = np.where(dist <= 1.0, spec.C, spec.C * np.exp(-spec.beta * dist))
    j = _symmetric_csr(n, ii, jj, w)
    tail = _exponential_tail(coords, spec.R, spec.d, spec.beta, spec.C)
    return GraphForm(
        m=np.full(n, spec.mass),
        j=j,
        k=np.zeros(n),
        interior=tail <= spec.interior_tol,
        tail_bound=tail,
        coords=coords,
        interior_tol=spec.interior_tol,
    )


def topo_indices(N: int) -> dict:
    """Vertex layout of the two-hub model: hubs a1, a2 then b_1..b_N, c_1..c_N."""
    return {"a1": 0, "a2": 1,
            "b": lambda i: 1 + i,            # i = 1..N
            "c": lambda i: 1 + N + i}


def _build_topo(spec: ModelSpec) -> GraphForm:
    N = spec.n
    n = 2 + 2 * N
    xs, ys, ws = [], [], []
    for i in range(1, N + 1):
        b = 1 + i
        c = 1 + N + i
        for a in (0, 1):
            xs.append(a)
            ys.append(b)
            ws.append(1.0 / i**2)
        xs.append(b)
        ys.append(c)
        ws.append(float(i))
    j = _symmetric_csr(n, xs, ys, ws)
    tail = np.zeros(n)
    # hubs lose the spokes beyond N; exact remainder of sum 1/i^2
    from scipy.special import polygamma
    tail[0] = tail[1] = float(polygamma(1, N + 1))
    return GraphForm(
        m=np.full(n, spec.mass),
        j=j,
        k=np.zeros(n),
        interior=tail <= spec.interior_tol,
        tail_bound=tail,
        coords=None,
        interior_tol=spec.interior_tol,
    )


def _build_three_point(spec: ModelSpec) -> GraphForm:
    j = _symmetric_csr(3, [0, 1], [1, 2], [spec.edge_weight, spec.edge_weight])
    return GraphForm(
        m=np.full(3, spec.mass),
        j=j,
        k=np.zeros(3),
        interior=np.ones(3, dtype=bool),
        tail_bound=np.zeros(3),
        coords=np.array([[1.0], [2.0], [3.0]]),
        interior_tol=spec.interior_tol,
    )


def _build_mirror(spec: ModelSpec) -> GraphForm:
    N = spec.n
    # (2i - N)/N is exactly antisymmetric under i -> N - i
    idx = np.arange(N + 1)
    pos = (2.0 * idx - N) / N
    keep = pos != 0.0              # no vertex at the kernel singularity
    pos, idx = pos[keep], idx[keep]
    n = pos.size
    order = {int(i): slot for slot, i in enumerate(idx)}
    xs, ys, ws = [], [], []
    for slot, (i, p) in enumerate(zip(idx, pos)):
        if p > 0:
            jdx = order[int(N - i)]
            # one-sided quadrature weight: spacing (2/N) covers the pair once,
            # the ordered-pair energy sum counts it twice
            xs.append(jdx)
            ys.append(slot)
            ws.append(abs(p) ** (-2.5) / N)
    j = _symmetric_csr(n, xs, ys, ws)
    return GraphForm(
        m=np.full(n, spec.mass),
        j=j,
        k=np.zeros(n),
        interior=np.ones(n, dtype=bool),
        tail_bound=np.zeros(n),
        coords=pos[:, None],
        interior_tol=spec.interior_tol,
    )


def _build_explicit(spec: ModelSpec) -> GraphForm:
    data = spec.explicit
    m = np.asarray(data["m"], dtype=np.float64)
    n = m.size
    k = np.asarray(data.get("k", np.zeros(n)), dtype=np.float64)
    edges = data.get("edges", [])
    if edges:
        xs, ys, ws = zip(*[(int(e[0]), int(e[1]), float(e[2])) for e in edges])
    else:
        xs, ys, ws = [], [], []
    j = _symmetric_csr(n, xs, ys, ws)
    interior = np.asarray(data.get("interior", np.ones(n, dtype=bool)), dtype=bool)
    tail = np.asarray(data.get("tail_bound", np.zeros(n)), dtype=np.float64)
    coords = data.get("coords")
    coords = None if coords is None else np.asarray(coords, dtype=np.float64)
    return GraphForm(m=m, j=j, k=k, interior=interior, tail_bound=tail,
                     coords=coords, interior_tol=spec.interior_tol)


_BUILDERS = {
    "lattice": _build_lattice,
    "powerlaw": _build_powerlaw,
    "exponential": _build_exponential,
    "topo_example": _build_topo,
    "three_point": _build_three_point,
    "mirror": _build_mirror,
    "explicit": _build_explicit,
}


def build_model(spec: ModelSpec) -> GraphForm:
    """Construct the window described by ``spec``; raises on invalid parameters."""
    spec.validate()
    G = _BUILDERS[spec.kind](spec)
    if spec.kind in ("powerlaw", "exponential") and not np.any(G.interior):
        raise ValueError(
            "window too small: no vertex meets the interior tail tolerance "
            f"{spec.interior_tol:g}")
    return G


def degree_measure(G: GraphForm) -> np.ndarray:
    """Weighted degrees m'(x) = sum_y j(x, y)."""
    return np.asarray(G.j.sum(axis=1)).reshape(-1)


def validate(G: GraphForm, interior_tol: float | None = None) -> list[dict]:
    """Collect invariant violations; an empty list means the window is valid."""
    tol = G.interior_tol if interior_tol is None else interior_tol
    issues: list[dict] = []
    bad = np.nonzero(~(G.m > 0.0))[0]
    for x in bad:
        issues.append({"kind": "mass_nonpositive", "vertex": int(x),
                       "value": float(G.m[x])})
    bad = np.nonzero(G.k < 0.0)[0]
    for x in bad:
        issues.append({"kind": "killing_negative", "vertex": int(x),
                       "value": float(G.k[x])})
    coo = G.j.tocoo()
    neg = coo.data < 0.0
    for r, c, v in zip(coo.row[neg], coo.col[neg], coo.data[neg]):
        issues.append({"kind": "jump_negative", "pair": (int(r), int(c)),
                       "value": float(v)})
    diag = G.j.diagonal()
    for x in np.nonzero(diag != 0.0)[0]:
        issues.append({"kind": "jump_diagonal", "vertex": int(x),
                       "value": float(diag[x])})
    asym = (G.j - G.j.T).tocoo()
    seen = set()
    for r, c, v in zip(asym.row, asym.col, asym.data):
        if v != 0.0 and (c, r) not in seen:
            seen.add((r, c))
            issues.append({"kind": "jump_asymmetric", "pair": (int(r), int(c)),
                           "value": float(v)})
    mprime = degree_measure(G)
    for x in np.nonzero(~np.isfinite(mprime))[0]:
        issues.append({"kind": "degree_nonfinite", "vertex": int(x)})
    bad = np.nonzero(G.interior & (G.tail_bound > tol))[0]
    for x in bad:
        issues.append({"kind": "interior_tail", "vertex": int(x),
                       "value": float(G.tail_bound[x])})
    return issues


def dump_graph(G: GraphForm) -> str:
    """Line-oriented text dump: header, vertex lines, edge lines (x < y)."""
    rows, cols, vals = G.jump_pairs
    upper = rows < cols
    lines = [f"{G.n} {int(np.sum(upper))}"]
    for x in range(G.n):
        parts = [str(x), f"{G.m[x]:.17g}", f"{G.k[x]:.17g}",
                 "1" if G.interior[x] else "0"]
        if G.coords is not None:
            parts.extend(f"{c:.17g}" for c in G.coords[x])
        lines.append(" ".join(parts))
    for r, c, v in zip(rows[upper], cols[upper], vals[upper]):
        lines.append(f"{r} {c} {v:.17g}")
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> GraphForm:
    """Inverse of :func:`dump_graph` (tail bounds are not round-tripped)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    n, n_edges = (int(t) for t in lines[0].split())
    m = np.zeros(n)
    k = np.zeros(n)
    interior = np.zeros(n, dtype=bool)
    coords_rows: list[list[float]] = []
    has_coords = None
    for ln in lines[1:1 + n]:
        parts = ln.split()
        x = int(parts[0])
        m[x] = float(parts[1])
        k[x] = float(parts[2])
        interior[x] = parts[3] == "1"
        rest = [float(t) for t in parts[4:]]
        if has_coords is None:
            has_coords = bool(rest)
        coords_rows.append(rest)
    xs, ys, ws = [], [], []
    for ln in lines[1 + n:1 + n + n_edges]:
        a, b, w = ln.split()
        xs.append(int(a))
        ys.append(int(b))
        ws.append(float(w))
    coords = np.array(coords_rows) if has_coords else None
    return GraphForm(
        m=m,
        j=_symmetric_csr(n, xs, ys, ws),
        k=k,
        interior=interior,
        tail_bound=np.zeros(n),
        coords=coords,
    )
