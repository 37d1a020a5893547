"""Spectral decomposition into distinct eigenvalues and orthogonal projectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_core import is_symmetric

CLUSTER_TOL = 1e-8
SUPPORT_TOL = 1e-8


class SpectralError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Distinct eigenvalues ``theta_1 < ... < theta_d`` with projectors ``F_j``.

    ``blocks[j]`` holds an orthonormal basis (as columns) of the ``theta_j``
    eigenspace, so ``F_j = blocks[j] @ blocks[j].T``.
    """

    eigenvalues: np.ndarray
    blocks: tuple
    cluster_tol: float

    @property
    def projectors(self) -> list[np.ndarray]:
        return [V @ V.T for V in self.blocks]

    @property
    def order(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def diameter(self) -> float:
        return float(self.eigenvalues[-1] - self.eigenvalues[0])

    def multiplicities(self) -> list[int]:
        return [V.shape[1] for V in self.blocks]

    def components(self, x: np.ndarray) -> np.ndarray:
        """Rows are ``F_j x``."""
        x = np.asarray(x)
        return np.array([V @ (V.T @ x) for V in self.blocks])

    def overlaps(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``y^T F_j x`` for each j."""
        return np.array([(V.T @ y) @ (V.T @ x) for V in self.blocks])

    def reconstruct(self) -> np.ndarray:
        return sum(t * V @ V.T for t, V in zip(self.eigenvalues, self.blocks))


def eigendecompose(m: np.ndarray, cluster_tol: float = CLUSTER_TOL) -> SpectralDecomposition:
    """Cluster the eigenvalues of symmetric ``m`` and build the projectors.

    Eigenvalues closer than ``cluster_tol * max(1, spectral diameter)`` are
    merged. A gap between ``tol`` and ``10 * tol`` is ambiguous and raises
    rather than being silently split or merged.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise SpectralError(f"expected a square matrix, got shape {m.shape}")
    if not is_symmetric(m):
        raise SpectralError("matrix is not symmetric")
    m = (m + m.T) / 2
    vals, vecs = np.linalg.eigh(m)
    tol = cluster_tol * max(1.0, float(vals[-1] - vals[0]))
    groups = [[0]]
    for i in range(1, len(vals)):
        gap = vals[i] - vals[i - 1]
        if gap <= tol:
            groups[-1].append(i)
        else:
            if gap <= 10 * tol:
                raise SpectralError(
                    f"ambiguous eigenvalue cluster: gap {gap:.3e} within 10x of tolerance {tol:.3e}"
                )
            groups.append([i])
    eigenvalues = np.array([vals[g].mean() for g in groups])
    blocks = tuple(vecs[:, g] for g in groups)
    return SpectralDecomposition(eigenvalues, blocks, cluster_tol)


def transition_matrix(d: SpectralDecomposition, t: float) -> np.ndarray:
    """``U(t) = exp(itM) = sum_j exp(i t theta_j) F_j``."""
    n = d.order
    U = np.zeros((n, n), dtype=complex)
    for theta, V in zip(d.eigenvalues, d.blocks):
        U += np.exp(1j * t * theta) * (V @ V.T)
    return U


def evolve(d: SpectralDecomposition, x: np.ndarray, t: float) -> np.ndarray:
    """``U(t) x`` without forming ``U``."""
    comps = d.components(x)
    return np.exp(1j * t * d.eigenvalues) @ comps


def eigenvalue_support(d: SpectralDecomposition, x, support_tol: float = SUPPORT_TOL) -> list[float]:
    x = getattr(x, "vector", x)
    norms = np.linalg.norm(d.components(x), axis=1)
    return [float(t) for t, s in zip(d.eigenvalues, norms) if s > support_tol]


def support_mask(d: SpectralDecomposition, x, support_tol: float = SUPPORT_TOL) -> np.ndarray:
    x = getattr(x, "vector", x)
    return np.linalg.norm(d.components(x), axis=1) > support_tol


def is_fixed_state(d: SpectralDecomposition, x, support_tol: float = SUPPORT_TOL) -> bool:
    return len(eigenvalue_support(d, x, support_tol)) == 1
