"""Perturbed Laplacian of the normal-agent candidate graph and its
smallest eigenpair."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import ConvergenceError, StructureError, UnknownNodeError
from .graph import DirectedGraph, build_laplacian

MAX_ITERS = 10_000
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class PerturbedLaplacian:
    nodes: tuple[int, ...]
    base: np.ndarray
    leader: int
    leader_weights: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        return self.base + np.diag(self.leader_weights)


@dataclass(frozen=True)
class Eigenpair:
    nodes: tuple[int, ...]
    lambda1: float
    v1: np.ndarray
    residual: float
    iterations: int

    def entry(self, node: int) -> float:
        return float(self.v1[self.nodes.index(node)])

    def as_dict(self) -> dict[int, float]:
        return {v: float(x) for v, x in zip(self.nodes, self.v1)}


def perturbed_laplacian(pre_subgraph: DirectedGraph, leader: int) -> PerturbedLaplacian:
    """Laplacian of ``pre_subgraph`` with a unit bump on the leader's diagonal."""
    if leader not in pre_subgraph:
        raise UnknownNodeError(leader)
    bump = np.zeros(len(pre_subgraph))
    bump[pre_subgraph.index(leader)] = 1.0
    return PerturbedLaplacian(pre_subgraph.nodes, build_laplacian(pre_subgraph), leader, bump)


def smallest_eigenpair(
    m: PerturbedLaplacian | np.ndarray,
    max_iters: int = MAX_ITERS,
    tol: float = RESIDUAL_TOL,
) -> Eigenpair:
    """Inverse power iteration with zero shift, started from the ones vector.

    The matrix is symmetric positive definite whenever the underlying
    subgraph is connected, so a Cholesky factorization is computed once and
    reused. A failed factorization or an eigenvector that is not strictly
    positive means the connectivity precondition was violated.
    """
    if isinstance(m, PerturbedLaplacian):
        mat, nodes = m.matrix, m.nodes
    else:
        mat = np.asarray(m, dtype=float)
        nodes = tuple(range(1, mat.shape[0] + 1))
    n = mat.shape[0]
    try:
        factor = cho_factor(mat, lower=True, check_finite=True)
    except LinAlgError as exc:
        raise StructureError(f"perturbed Laplacian is not positive definite: {exc}") from None

    v = np.ones(n) / np.sqrt(n)
    residual = np.inf
    lam = float(v @ mat @ v)
    for it in range(1, max_iters + 1):
        y = cho_solve(factor, v)
        v = y / np.linalg.norm(y)
        lam = float(v @ mat @ v)
        residual = float(np.linalg.norm(mat @ v - lam * v))
        if residual <= tol:
            break
    else:
        raise ConvergenceError(max_iters, residual)

    if v.sum() < 0:
        v = -v
    if not np.all(v > 0):
        raise StructureError(
            f"smallest eigenvector has non-positive entry {v.min():.3e}; "
            "the candidate subgraph is probably disconnected"
        )
    if not lam > 0:
        raise StructureError(f"smallest eigenvalue {lam:.3e} is not positive")
    return Eigenpair(tuple(nodes), lam, v, residual, it)
