"""Communication topologies for the robot network.

The inter-robot protocol assumes a strongly connected, weight-balanced
digraph: entry ``weights[i, j] > 0`` means robot j can send to robot i,
and every robot's weighted in-degree equals its weighted out-degree.
Balance is what makes the tracker variables mean-conserving, so the
generator only produces symmetric (bidirected) graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GraphGenerationError

BALANCE_TOL = 0.0  # generated weights are symmetric, so balance is exact


@dataclass(frozen=True, eq=False)
class CommGraph:
    """Weighted digraph over ``n`` agents.

    ``weights[i, j] = a_ij`` is the weight robot i applies to data received
    from robot j (positive iff the edge j -> i exists). Immutable after
    construction; safe to share across trial workers.
    """

    n: int
    weights: np.ndarray
    in_neighbors: tuple = field(init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.n, self.n):
            raise ValueError(f"weights must be {self.n}x{self.n}, got {w.shape}")
        if np.any(w < 0):
            raise ValueError("edge weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise ValueError("self-loops are not allowed (diagonal must be zero)")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        nbrs = tuple(np.flatnonzero(w[i]) for i in range(self.n))
        object.__setattr__(self, "in_neighbors", nbrs)

    def out_neighbors(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.weights[:, j])

    def edges(self) -> list:
        """Edge list as [i, j, a_ij] triples (j -> i), for trace serialization."""
        ii, jj = np.nonzero(self.weights)
        return [[int(i), int(j), float(self.weights[i, j])] for i, j in zip(ii, jj)]


@dataclass(frozen=True)
class GraphReport:
    connected: bool
    balanced: bool


def _reachable_all(adj_bool: np.ndarray) -> bool:
    """Iterative DFS from node 0 over boolean adjacency (adj[i, j]: j -> i read as i -> j here)."""
    n = adj_bool.shape[0]
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for u in np.flatnonzero(adj_bool[v]):
            if not seen[u]:
                seen[u] = True
                stack.append(int(u))
    return bool(seen.all())


def validate(g: CommGraph) -> GraphReport:
    """Check strong connectivity (DFS in both orientations) and weight balance."""
    a = g.weights > 0
    # weights[i, j] > 0 means j -> i; rows of a.T are forward edges from each node
    connected = _reachable_all(a.T) and _reachable_all(a)
    deg_in = g.weights.sum(axis=1)
    deg_out = g.weights.sum(axis=0)
    balanced = bool(np.all(np.abs(deg_in - deg_out) <= BALANCE_TOL))
    return GraphReport(connected=connected, balanced=balanced)


def laplacian(g: CommGraph) -> np.ndarray:
    """In-degree Laplacian D_in - A. Rows always sum to zero; columns too iff balanced."""
    return np.diag(g.weights.sum(axis=1)) - g.weights


def metropolis_weights(adj: np.ndarray) -> np.ndarray:
    """Symmetric Metropolis-Hastings weights 1 / (1 + max(deg_i, deg_j)) on an undirected adjacency.

    Keeps every Laplacian eigenvalue strictly below 2, which is what the
    fixed-step integrator needs when the consensus gain times the step
    equals one (see sim defaults).
    """
    deg = adj.sum(axis=1)
    w = np.zeros_like(adj, dtype=float)
    ii, jj = np.nonzero(adj)
    w[ii, jj] = 1.0 / (1.0 + np.maximum(deg[ii], deg[jj]))
    return w


def generate_er(
    n: int,
    p: float,
    seed,
    max_tries: int = 1000,
    weight_scheme: str = "metropolis",
) -> CommGraph:
    """Sample a connected Erdos-Renyi graph, used bidirectionally.

    Redraws until connected (at most ``max_tries``). ``weight_scheme`` is
    either ``"metropolis"`` (default, keeps the consensus flow Euler-stable
    at the default step) or ``"unit"`` (a_ij = 1 on every edge).
    """
    if n < 2:
        raise ValueError("need at least 2 agents")
    if not 0.0 < p <= 1.0:
        raise ValueError("edge probability must be in (0, 1]")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        draw = rng.random((n, n)) < p
        adj = np.triu(draw, k=1)
        adj = (adj | adj.T).astype(float)
        if _reachable_all(adj > 0):
            if weight_scheme == "metropolis":
                w = metropolis_weights(adj)
            elif weight_scheme == "unit":
                w = adj
            else:
                raise ValueError(f"unknown weight scheme {weight_scheme!r}")
            return CommGraph(n=n, weights=w)
    raise GraphGenerationError(
        f"could not generate connected graph (n={n}, p={p}) in {max_tries} tries"
    )
