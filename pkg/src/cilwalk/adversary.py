"""Absorbing-chain view of a graph with adversarial terminator nodes.

A "Pac-Man" node terminates each arriving walk independently with
probability zeta.  Appending a death state and folding the termination
coin into the transition matrix yields an absorbing chain whose transient
block drives all the survival-conditioned analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NumericalError
from .graph import ROW_SUM_TOL

CONSERVATION_TOL = 1e-12


@dataclass(frozen=True)
class AdversaryConfig:
    """Adversarial nodes and their per-node termination probabilities."""

    pacman_nodes: tuple[int, ...] = (1,)
    zeta: float | tuple[float, ...] = 1.0

    def __post_init__(self) -> None:
        if len(self.pacman_nodes) == 0:
            raise ValueError("need at least one adversarial node")
        if len(set(self.pacman_nodes)) != len(self.pacman_nodes):
            raise ValueError("duplicate adversarial nodes")
        zetas = self.zetas()
        for z in zetas:
            if not (0.0 < z <= 1.0):
                raise ValueError(f"termination probability {z} not in (0, 1]")

    def zetas(self) -> tuple[float, ...]:
        """Per-node termination probabilities, scalar broadcast if needed."""
        if isinstance(self.zeta, (int, float)):
            return tuple(float(self.zeta) for _ in self.pacman_nodes)
        if len(self.zeta) != len(self.pacman_nodes):
            raise ValueError("zeta list must match pacman_nodes")
        return tuple(float(z) for z in self.zeta)

    def zeta_of(self, node: int) -> float:
        return dict(zip(self.pacman_nodes, self.zetas()))[node]


@dataclass(frozen=True)
class AugmentedChain:
    """Transition structure after adjoining the death state.

    ``transient_states`` lists surviving node ids (1-based) in the order
    used by ``q_sub`` rows/columns.  Adversarial nodes with zeta = 1 are
    merged into the death state, so they are absent from the transient
    set; with zeta < 1 they stay transient with their row scaled by
    (1 - zeta) and a zeta-edge to death.  ``p_prime`` is the full
    (T+1)x(T+1) matrix with the absorbing state last.
    """

    p_prime: np.ndarray
    q_sub: np.ndarray
    r_vec: np.ndarray
    transient_states: tuple[int, ...]
    pacman_nodes: tuple[int, ...]
    zetas: tuple[float, ...]
    n_nodes: int

    @property
    def n_transient(self) -> int:
        return len(self.transient_states)

    def transient_index(self, node: int) -> int:
        """Position of a (1-based) node inside the transient block."""
        return self.transient_states.index(node)


def augment(P: np.ndarray, adv: AdversaryConfig) -> AugmentedChain:
    """Build the absorbing chain for one or more adversarial nodes.

    Pure function: identical inputs give identical output arrays.
    """
    n = P.shape[0]
    if P.shape != (n, n):
        raise ValueError("P must be square")
    for u in adv.pacman_nodes:
        if not (1 <= u <= n):
            raise ValueError(f"adversarial node {u} outside 1..{n}")
    if len(adv.pacman_nodes) >= n:
        raise ValueError("adversary cannot cover every node")

    zetas = adv.zetas()
    zeta_by_node = dict(zip(adv.pacman_nodes, zetas))
    merged = {u for u, z in zeta_by_node.items() if z == 1.0}
    transient = tuple(u for u in range(1, n + 1) if u not in merged)
    tix = {u: i for i, u in enumerate(transient)}
    t = len(transient)

    Q = np.zeros((t, t))
    R = np.zeros(t)
    cols = np.array([u - 1 for u in transient])
    for u in transient:
        i = tix[u]
        z = zeta_by_node.get(u, 0.0)
        scale = 1.0 - z
        row = P[u - 1, cols]
        Q[i, :] = scale * row
        merged_mass = sum(P[u - 1, k - 1] for k in merged)
        R[i] = z + scale * merged_mass

    p_prime = np.zeros((t + 1, t + 1))
    p_prime[:t, :t] = Q
    p_prime[:t, t] = R
    p_prime[t, t] = 1.0

    chain = AugmentedChain(p_prime, Q, R, transient, adv.pacman_nodes, zetas, n)
    _validate(chain)
    return chain


def _validate(chain: AugmentedChain) -> None:
    rows = chain.p_prime.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > ROW_SUM_TOL:
        raise NumericalError("augmented rows do not sum to 1")
    cons = chain.q_sub.sum(axis=1) + chain.r_vec
    if np.max(np.abs(cons - 1.0)) > CONSERVATION_TOL:
        raise NumericalError("Q row sums plus absorption column must equal 1")


def hitting_constants(chain: AugmentedChain) -> tuple[int, float]:
    """Worst-case steps d and minimal d_u-step adversary-hitting mass c.

    For each surviving non-adversarial node u, d_u is the smallest k such
    that a walk from u has positive probability of having reached an
    adversarial node within k steps; c is the smallest such probability
    taken at each node's own d_u.  Computed by iterated matrix-vector
    products against the adversary/death indicator.
    """
    t = chain.n_transient
    pac_set = set(chain.pacman_nodes)
    benign = [i for i, u in enumerate(chain.transient_states) if u not in pac_set]
    if not benign:
        raise ValueError("no benign transient nodes")

    # Indicator over "at an adversary node or already absorbed".
    target = np.zeros(t + 1)
    target[t] = 1.0
    for i, u in enumerate(chain.transient_states):
        if u in pac_set:
            target[i] = 1.0

    x = target.copy()
    d_u = np.full(t + 1, -1, dtype=int)
    c_u = np.zeros(t + 1)
    remaining = set(benign)
    for step in range(1, t + 2):
        x = chain.p_prime @ x
        hit = [i for i in remaining if x[i] > 0.0]
        for i in hit:
            d_u[i] = step
            c_u[i] = x[i]
            remaining.discard(i)
        if not remaining:
            break
    if remaining:
        bad = [chain.transient_states[i] for i in sorted(remaining)]
        raise NumericalError(
            f"nodes {bad} cannot reach the adversary; graph is not connected"
        )
    d = int(max(d_u[i] for i in benign))
    c = float(min(c_u[i] for i in benign))
    return d, c


def save_chain_matrix(chain: AugmentedChain, path: str | Path) -> None:
    """Dense text format: one row of the augmented matrix per line."""
    lines = [" ".join(repr(float(x)) for x in row) for row in chain.p_prime]
    Path(path).write_text("\n".join(lines) + "\n")


def load_chain_matrix(path: str | Path) -> np.ndarray:
    rows = [
        [float(x) for x in line.split()]
        for line in Path(path).read_text().strip().splitlines()
    ]
    return np.array(rows)
