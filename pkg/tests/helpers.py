"""Shared oracles for the test suite.

Everything here is deliberately independent of the library's vectorized
paths: plain double loops, heap-based shortest paths, grid searches.
"""

import heapq

import numpy as np

from dflab.graphs import GraphForm, ModelSpec, build_model


def energy_oracle(G, nu, u, v=None):
    """Ordered-pair double loop over the dense jump table."""
    v = u if v is None else v
    J = G.j.toarray()
    n = G.n
    nu = np.zeros(n) if nu is None else np.asarray(nu, dtype=float)
    total = 0.0
    for x in range(n):
        for y in range(n):
            if x != y:
                total += J[x, y] * (u[x] - u[y]) * (v[x] - v[y])
    for x in range(n):
        total += u[x] * v[x] * (G.k[x] + nu[x])
    return total


def jump_density_oracle(G, u):
    J = G.j.toarray()
    out = np.zeros(G.n)
    for x in range(G.n):
        for y in range(G.n):
            if x != y:
                out[x] += J[x, y] * (u[x] - u[y]) ** 2
    return out


def dijkstra_oracle(weights, src):
    """Heap Dijkstra over a dense symmetric nonnegative weight table."""
    n = weights.shape[0]
    dist = np.full(n, np.inf)
    dist[src] = 0.0
    heap = [(0.0, src)]
    done = np.zeros(n, dtype=bool)
    while heap:
        d, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        for y in range(n):
            w = weights[x, y]
            if w > 0.0 and not done[y] and d + w < dist[y]:
                dist[y] = d + w
                heapq.heappush(heap, (dist[y], y))
    return dist


def random_graph_form(rng, n, density=0.3, with_killing=False):
    """Connected random window with unit-free masses; interior everywhere."""
    edges = []
    order = rng.permutation(n)
    for i in range(1, n):
        a, b = int(order[i - 1]), int(order[i])
        edges.append([min(a, b), max(a, b), float(rng.uniform(0.1, 1.0))])
    seen = {(e[0], e[1]) for e in edges}
    for a in range(n):
        for b in range(a + 1, n):
            if (a, b) not in seen and rng.random() < density:
                edges.append([a, b, float(rng.uniform(0.1, 1.0))])
    payload = {
        "m": rng.uniform(0.5, 2.0, size=n).tolist(),
        "k": (rng.uniform(0.0, 0.3, size=n) if with_killing
              else np.zeros(n)).tolist(),
        "edges": edges,
    }
    return build_model(ModelSpec(kind="explicit", explicit=payload))


def lattice(d, R, **kw):
    return build_model(ModelSpec(kind="lattice", d=d, R=R, **kw))
