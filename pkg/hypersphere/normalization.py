"""
L2 normalization layer: forward map onto the unit hypersphere and its exact backward rule.

The same code path serves feature batches (normalize each row, ``axis=-1``)
and agent matrices (normalize each column, ``axis=0``).
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.settings import config


@dataclass(frozen=True)
class NormContext:
    """Input, its norm(s), and the normalized output, kept for the backward pass."""
    input: np.ndarray
    norm: np.ndarray
    output: np.ndarray
    axis: int = -1


def normalize_forward(x: np.ndarray, axis: int = -1, eps: Optional[float] = None) -> NormContext:
    """x / sqrt(sum x_i^2 + eps) along ``axis``."""
    eps = config.NORM_EPSILON if eps is None else eps
    x = np.asarray(x, dtype=np.float64)
    norm = np.sqrt(np.sum(x * x, axis=axis, keepdims=True) + eps)
    return NormContext(input=x, norm=norm, output=x / norm, axis=axis)


def normalize_backward(ctx: NormContext, grad_out: np.ndarray) -> np.ndarray:
    """(g - x_hat <g, x_hat>) / ||x||: the incoming gradient projected onto the tangent space."""
    grad_out = np.asarray(grad_out, dtype=np.float64)
    radial = np.sum(grad_out * ctx.output, axis=ctx.axis, keepdims=True)
    return (grad_out - ctx.output * radial) / ctx.norm


def vector_norm(ctx: NormContext) -> float:
    """Scalar norm of a single-vector context."""
    return float(ctx.norm.ravel()[0])
