"""
Dense linear algebra and deterministic random streams.

Matrices are float64 ``numpy.ndarray`` values; random streams are
``numpy.random.Generator`` instances over the PCG64 bit generator, which
produces the same stream for the same seed on every platform.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config.settings import config
from hypersphere.exceptions import DimensionError, NonFiniteError
from utils.logger import logger

Matrix = np.ndarray


def make_rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator."""
    return np.random.Generator(np.random.PCG64(seed))


def as_matrix(values, name: str = "matrix") -> Matrix:
    """Coerce to a 2-D float64 array."""
    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {matrix.shape}")
    return matrix


def ensure_finite(values: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{what} contains NaN or Inf")
    return values


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Matrix product with a shape check and a finiteness check on the result."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return ensure_finite(a @ b, "matmul result")


def l2_norm(v: np.ndarray, eps: Optional[float] = None) -> float:
    """sqrt(sum v_i^2 + eps)."""
    eps = config.NORM_EPSILON if eps is None else eps
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise DimensionError("l2_norm of an empty vector")
    return float(np.sqrt(np.dot(v, v) + eps))


def jacobi_eigh(symmetric: Matrix, tol: float = 1e-14, max_sweeps: int = 100) -> Tuple[np.ndarray, Matrix]:
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns eigenvalues in descending order and the matching unit eigenvectors
    as columns. Each eigenvector's largest-magnitude entry is made positive so
    the result is deterministic.
    """
    a = as_matrix(symmetric, "symmetric matrix").copy()
    size = a.shape[0]
    if a.shape[1] != size:
        raise DimensionError(f"expected a square matrix, got {a.shape}")
    a = 0.5 * (a + a.T)
    vectors = np.eye(size)
    scale = max(np.linalg.norm(a), np.finfo(np.float64).tiny)

    for sweep in range(max_sweeps):
        off_diagonal = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off_diagonal <= tol * scale:
            break
        for p in range(size - 1):
            for q in range(p + 1, size):
                a_pq = a[p, q]
                if abs(a_pq) <= tol * scale * 1e-3:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * a_pq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q

                vec_p, vec_q = vectors[:, p].copy(), vectors[:, q].copy()
                vectors[:, p] = c * vec_p - s * vec_q
                vectors[:, q] = s * vec_p + c * vec_q
    else:
        logger.warning(f"Jacobi eigendecomposition stopped after {max_sweeps} sweeps")

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(size)])
    signs[signs == 0] = 1.0
    return eigenvalues, vectors * signs


@dataclass(frozen=True)
class PcaModel:
    """Mean-centering plus projection onto the leading covariance eigenvectors (no whitening)."""
    mean: np.ndarray
    components: Matrix
    eigenvalues: np.ndarray
    requested: int

    @property
    def n_components(self) -> int:
        return self.components.shape[1]


def pca_fit(data: Matrix, keep: int, rank_tol: float = 1e-12) -> PcaModel:
    data = as_matrix(data, "PCA data")
    rows, cols = data.shape
    if rows < 2:
        raise DimensionError(f"PCA needs at least 2 rows, got {rows}")
    if not 1 <= keep <= cols:
        raise DimensionError(f"keep must be in [1, {cols}], got {keep}")

    mean = data.mean(axis=0)
    centered = data - mean
    covariance = centered.T @ centered / (rows - 1)
    eigenvalues, vectors = jacobi_eigh(covariance)

    top = max(eigenvalues[0], 0.0)
    available = int(np.sum(eigenvalues > rank_tol * max(top, np.finfo(np.float64).tiny)))
    kept = min(keep, available)
    if kept < keep:
        logger.warning(f"PCA: covariance has rank {available}; returning {kept} of {keep} requested components")
    return PcaModel(mean=mean, components=vectors[:, :kept], eigenvalues=eigenvalues[:kept], requested=keep)


def pca_apply(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Project a vector or a batch of row vectors."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.mean.shape[0]:
        raise DimensionError(f"expected {model.mean.shape[0]} features, got {x.shape[-1]}")
    return (x - model.mean) @ model.components
