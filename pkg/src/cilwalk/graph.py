"""Benchmark topologies and Metropolis-Hastings transition matrices.

Node identifiers are 1-based throughout the public API; the adversarial
node defaults to node 1.  Matrices are dense numpy arrays where row/column
``u - 1`` corresponds to node ``u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from .errors import NumericalError
from .rng import stream

TOPOLOGIES = ("complete", "random_regular", "ring", "erdos_renyi")

ROW_SUM_TOL = 1e-12
STATIONARY_TOL = 1e-10


@dataclass(frozen=True)
class GraphSpec:
    """A connected undirected graph plus the target sampling distribution.

    ``edges`` holds unordered pairs ``(u, v)`` with ``u < v``, 1-based.
    ``pi`` is strictly positive and sums to one.
    """

    node_count: int
    edges: tuple[tuple[int, int], ...]
    topology_tag: str
    pi: np.ndarray
    resamples: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = self.node_count
        if n < 2:
            raise ValueError("graph needs at least 2 nodes")
        for u, v in self.edges:
            if not (1 <= u < v <= n):
                raise ValueError(f"edge ({u}, {v}) out of range for {n} nodes")
        pi = np.asarray(self.pi, dtype=float)
        if pi.shape != (n,):
            raise ValueError("pi length must equal node_count")
        if np.any(pi <= 0.0):
            raise ValueError("pi must be strictly positive")
        if abs(pi.sum() - 1.0) > ROW_SUM_TOL:
            raise ValueError("pi must sum to 1")
        object.__setattr__(self, "pi", pi)

    @property
    def degree(self) -> np.ndarray:
        deg = np.zeros(self.node_count, dtype=int)
        for u, v in self.edges:
            deg[u - 1] += 1
            deg[v - 1] += 1
        return deg


def neighbor_lists(g: GraphSpec) -> list[list[int]]:
    """Adjacency as 1-based sorted neighbor lists, index 0 unused."""
    adj: list[list[int]] = [[] for _ in range(g.node_count + 1)]
    for u, v in g.edges:
        adj[u].append(v)
        adj[v].append(u)
    for lst in adj:
        lst.sort()
    return adj


def is_connected(n: int, edges, skip: int | None = None) -> bool:
    """BFS connectivity over nodes 1..n, optionally deleting one node."""
    adj: list[list[int]] = [[] for _ in range(n + 1)]
    for u, v in edges:
        if u == skip or v == skip:
            continue
        adj[u].append(v)
        adj[v].append(u)
    targets = [u for u in range(1, n + 1) if u != skip]
    if not targets:
        return True
    seen = {targets[0]}
    queue = [targets[0]]
    while queue:
        u = queue.pop()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == len(targets)


def is_robustly_connected(g: GraphSpec, pacman_node: int = 1) -> bool:
    """Benign nodes stay mutually reachable when the adversary is removed."""
    return is_connected(g.node_count, g.edges, skip=pacman_node)


def _ring_edges(n: int) -> list[tuple[int, int]]:
    edges = [(u, u + 1) for u in range(1, n)]
    edges.append((1, n))
    return edges


def generate_topology(
    tag: str,
    n: int,
    seed: int,
    *,
    degree: int | None = None,
    edge_probability: float | None = None,
    pi: np.ndarray | None = None,
    pacman_node: int = 1,
    resample_budget: int = 1000,
) -> GraphSpec:
    """Sample a connected, robustly connected benchmark graph.

    Random families (``random_regular``, ``erdos_renyi``) are resampled
    with fresh sub-seeds until both the full graph and the benign subgraph
    (adversary removed) are connected.
    """
    if tag not in TOPOLOGIES:
        raise ValueError(f"unknown topology {tag!r}; choose from {TOPOLOGIES}")
    if n < 3:
        raise ValueError("need n >= 3")
    if pi is None:
        pi_arr = np.full(n, 1.0 / n)
    else:
        pi_arr = np.asarray(pi, dtype=float)

    params: dict = {}
    if tag == "complete":
        edges = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
        return GraphSpec(n, tuple(edges), tag, pi_arr, 0, params)
    if tag == "ring":
        return GraphSpec(n, tuple(sorted(_ring_edges(n))), tag, pi_arr, 0, params)

    if tag == "random_regular":
        if degree is None:
            degree = 8
        if degree >= n:
            raise ValueError(f"degree {degree} must be < n {n}")
        if (n * degree) % 2 != 0:
            raise ValueError("n * degree must be even for a regular graph")
        params["degree"] = degree
    else:  # erdos_renyi
        if edge_probability is None:
            edge_probability = 0.1
        if not (0.0 < edge_probability <= 1.0):
            raise ValueError("edge_probability must be in (0, 1]")
        params["edge_probability"] = edge_probability

    rng = stream(seed, "graph")
    for attempt in range(resample_budget):
        sub_seed = int(rng.integers(0, 2**31 - 1))
        if tag == "random_regular":
            gx = nx.random_regular_graph(degree, n, seed=sub_seed)
        else:
            gx = nx.gnp_random_graph(n, edge_probability, seed=sub_seed)
        edges = tuple(sorted((min(u, v) + 1, max(u, v) + 1) for u, v in gx.edges()))
        if is_connected(n, edges) and is_connected(n, edges, skip=pacman_node):
            return GraphSpec(n, edges, tag, pi_arr, attempt, params)
    raise NumericalError(
        f"no connected + robustly connected {tag} graph found in "
        f"{resample_budget} samples (n={n}, params={params})"
    )


def metropolis_hastings(g: GraphSpec) -> np.ndarray:
    """Transition matrix with stationary distribution ``g.pi``.

    The proposal at node u is uniform over u and its neighbors (the node
    itself included, so every row has a positive self-loop and the chain
    is aperiodic on any topology).  A proposal u -> v is accepted with
    probability min(1, pi_v |prop(u)| / (pi_u |prop(v)|)); rejected mass
    stays on the diagonal.
    """
    n = g.node_count
    adj = neighbor_lists(g)
    prop_size = np.array([0] + [len(adj[u]) + 1 for u in range(1, n + 1)])
    pi = g.pi
    P = np.zeros((n, n))
    for u in range(1, n + 1):
        off = 0.0
        for v in adj[u]:
            a = min(1.0, (pi[v - 1] * prop_size[u]) / (pi[u - 1] * prop_size[v]))
            p = a / prop_size[u]
            P[u - 1, v - 1] = p
            off += p
        P[u - 1, u - 1] = 1.0 - off
    return P


def stationary_check(P: np.ndarray, pi: np.ndarray) -> float:
    """Max residual of the stationarity equation pi^T P = pi^T."""
    pi = np.asarray(pi, dtype=float)
    if P.shape != (pi.size, pi.size):
        raise ValueError("shape mismatch between P and pi")
    return float(np.max(np.abs(pi @ P - pi)))


def check_transition_matrix(
    P: np.ndarray, g: GraphSpec | None = None, tol: float = ROW_SUM_TOL
) -> None:
    """Validate row-stochasticity and, when a graph is given, sparsity."""
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError("transition matrix must be square")
    if np.any(P < 0):
        raise ValueError("negative transition probability")
    rows = P.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > tol:
        raise ValueError("rows must sum to 1")
    if g is not None:
        allowed = np.eye(g.node_count, dtype=bool)
        for u, v in g.edges:
            allowed[u - 1, v - 1] = True
            allowed[v - 1, u - 1] = True
        if np.any((P > 0) & ~allowed):
            raise ValueError("positive entry outside the edge set")


def save_graph(g: GraphSpec, path: str | Path) -> None:
    """Edge-list text format: first line N, then one 'u v' pair per line."""
    lines = [str(g.node_count)]
    lines += [f"{u} {v}" for u, v in g.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def load_graph(path: str | Path, pi: np.ndarray | None = None) -> GraphSpec:
    lines = Path(path).read_text().split()
    n = int(lines[0])
    nums = [int(x) for x in lines[1:]]
    if len(nums) % 2 != 0:
        raise ValueError("edge list must contain pairs")
    edges = tuple(
        sorted((min(a, b), max(a, b)) for a, b in zip(nums[::2], nums[1::2]))
    )
    pi_arr = np.full(n, 1.0 / n) if pi is None else np.asarray(pi, dtype=float)
    return GraphSpec(n, edges, "loaded", pi_arr)


def save_distribution(pi: np.ndarray, path: str | Path) -> None:
    """One decimal per line; ``repr`` round-trips doubles exactly."""
    Path(path).write_text("\n".join(repr(float(x)) for x in pi) + "\n")


def load_distribution(path: str | Path) -> np.ndarray:
    return np.array([float(s) for s in Path(path).read_text().split()])
