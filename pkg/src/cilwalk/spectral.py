"""Survival-conditioned spectral analysis of the absorbing chain.

The long-run occupancy of a walk conditioned on survival is the
normalized leading left eigenvector of the transient block Q.  Row
normalizing Q gives the transition matrix of the survival-conditioned
chain; its spectral gap enters the constant-step error bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adversary import AugmentedChain
from .errors import NumericalError

EIGEN_RESIDUAL_TOL = 1e-10
YAGLOM_RENORM_EVERY = 25


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


@dataclass(frozen=True)
class QsdResult:
    """Leading eigenpair of Q plus the conditioned-chain quantities.

    ``nu`` lives on the transient states; ``pi_chain`` is the same vector
    embedded in the full 1..N node space (zeros at merged adversary
    nodes).  ``spectral_gap`` is 1 - |second eigenvalue| of ``p_chain``.
    """

    alpha: float
    nu: np.ndarray
    pi_chain: np.ndarray
    p_chain: np.ndarray
    spectral_gap: float
    residual: float
    iterations: int


def _power_left(M: np.ndarray, tol: float, max_iters: int) -> tuple[np.ndarray, float, int]:
    """Leading left eigenpair of a nonnegative matrix by power iteration.

    Deterministic uniform start; L1 normalization each step so the norm
    ratio converges to the dominant eigenvalue.
    """
    t = M.shape[0]
    v = np.full(t, 1.0 / t)
    alpha = 0.0
    for k in range(1, max_iters + 1):
        w = v @ M
        s = w.sum()
        if s <= 0.0:
            raise NumericalError("matrix drove the iterate to zero")
        w /= s
        diff = float(np.abs(w - v).sum())
        v = w
        alpha = s
        if diff < tol:
            return v, alpha, k
    raise NumericalError(
        f"power iteration did not converge in {max_iters} steps "
        f"(last successive-iterate L1 change {diff:.3e}); the dominant "
        "eigenvalue may be degenerate"
    )


def qsd(chain: AugmentedChain, tol: float = 1e-12, max_iters: int = 500_000) -> QsdResult:
    """Survival-conditioned occupancy distribution and chain matrix."""
    Q = chain.q_sub
    nu, alpha, iters = _power_left(Q, tol, max_iters)
    residual = float(np.max(np.abs(nu @ Q - alpha * nu)))
    if residual > EIGEN_RESIDUAL_TOL:
        raise NumericalError(
            f"eigen-residual {residual:.3e} exceeds {EIGEN_RESIDUAL_TOL:.0e}"
        )

    row_sums = Q.sum(axis=1)
    if np.any(row_sums <= 0.0):
        raise NumericalError("a transient state has no surviving transition")
    p_chain = Q / row_sums[:, None]

    pi_chain = np.zeros(chain.n_nodes)
    for i, u in enumerate(chain.transient_states):
        pi_chain[u - 1] = nu[i]

    gap = spectral_gap(p_chain, max_iters=max_iters)
    return QsdResult(float(alpha), nu, pi_chain, p_chain, gap, residual, iters)


def spectral_gap(p_chain: np.ndarray, tol: float = 1e-11, max_iters: int = 500_000) -> float:
    """1 - |lambda_2| of a row-stochastic irreducible matrix.

    Deflates the known leading eigenpair (eigenvalue 1, right eigenvector
    of ones, left eigenvector = stationary distribution) and estimates the
    remaining dominant modulus from the geometric mean of norm growth over
    a trailing window, which stays valid when lambda_2 is a complex pair.
    """
    t = p_chain.shape[0]
    if t == 1:
        return 1.0
    w = chain_stationary(p_chain, tol=1e-14, max_iters=max_iters)
    B = p_chain - np.outer(np.ones(t), w)

    v = np.zeros(t)
    v[0] = 1.0
    v -= w  # remove any leading-eigenvector component
    norm = np.linalg.norm(v)
    if norm == 0.0:
        v = np.arange(1.0, t + 1.0)
        v -= v @ np.ones(t) / t
        norm = np.linalg.norm(v)
    v /= norm

    window = 64
    logs: list[float] = []
    prev_est = -1.0
    for k in range(1, max_iters + 1):
        v = B @ v
        n = np.linalg.norm(v)
        if n < 1e-300:
            return 1.0  # lambda_2 numerically zero
        v /= n
        logs.append(np.log(n))
        if k % window == 0:
            est = float(np.exp(np.mean(logs[-window:])))
            if prev_est >= 0.0 and abs(est - prev_est) < tol:
                return 1.0 - est
            prev_est = est
    raise NumericalError(
        f"spectral gap estimate did not stabilize in {max_iters} steps "
        f"(last estimate {prev_est:.6e})"
    )


def yaglom_oracle(chain: AugmentedChain, start: int, t: int) -> np.ndarray:
    """Exact survival-conditioned occupancy after t steps from one node.

    Row vector e_start @ Q^t renormalized to sum one; renormalizes every
    few steps so long horizons cannot underflow.  Serves as the
    independent brute-force check for ``qsd``.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    i = chain.transient_index(start)
    v = np.zeros(chain.n_transient)
    v[i] = 1.0
    for k in range(1, t + 1):
        v = v @ chain.q_sub
        if k % YAGLOM_RENORM_EVERY == 0:
            s = v.sum()
            if s <= 0.0:
                raise NumericalError("survival mass vanished")
            v /= s
    s = v.sum()
    if s <= 0.0:
        raise NumericalError("survival mass vanished")
    return v / s


def chain_stationary(
    p_chain: np.ndarray, tol: float = 1e-12, max_iters: int = 500_000
) -> np.ndarray:
    """Stationary distribution of the conditioned chain by power iteration."""
    v, alpha, _ = _power_left(p_chain, tol, max_iters)
    if abs(alpha - 1.0) > 1e-8:
        raise NumericalError(f"leading eigenvalue {alpha} of a stochastic matrix != 1")
    return v
