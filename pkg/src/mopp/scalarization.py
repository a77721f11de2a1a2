"""Linear scalarization <F(x), z> and weight handling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, WeightError
from .model import DominanceRelation, dominates, evaluate


def normalize_weights(w) -> np.ndarray:
    """Scale a nonnegative, nonzero weight vector to unit Euclidean norm."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if not np.all(np.isfinite(w)):
        raise WeightError(f"weights must be finite, got {w}")
    if np.any(w < 0):
        raise WeightError(f"weights must be nonnegative, got {w}")
    norm = np.linalg.norm(w)
    if norm == 0.0:
        raise WeightError("weight vector must not be identically zero")
    return w / norm


def check_weights(z, m=None, tol=1e-12) -> np.ndarray:
    """Validate an already-normalized weight vector and return it as an array."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if m is not None and z.shape[0] != m:
        raise ContractError(f"weight vector has length {z.shape[0]}, expected {m}")
    if np.any(z < 0) or not np.any(z > 0):
        raise WeightError(f"weights must be nonnegative and not all zero, got {z}")
    if abs(np.linalg.norm(z) - 1.0) > tol:
        raise WeightError(f"weight vector must have unit norm, got {np.linalg.norm(z)}")
    return z


def scalarize(f, z) -> float:
    f = np.asarray(f, dtype=float)
    z = np.asarray(z, dtype=float)
    if f.shape != z.shape:
        raise ContractError(f"length mismatch {f.shape} vs {z.shape}")
    return float(f @ z)


@dataclass(frozen=True)
class RepresentationViolation:
    x: np.ndarray
    y: np.ndarray
    relation: DominanceRelation
    lhs: float
    rhs: float


def strict_representation_check(problem, z, pairs, tol=0.0):
    """Check that ``<F(.), z>`` preserves the vector order on given pairs.

    For each ``(x, y)`` with ``F(x)`` weakly dominating ``F(y)`` the scalar
    values must satisfy ``<F(x),z> <= <F(y),z> + tol``; for strict dominance
    the margin must exceed ``tol``. Returns the list of violations.
    """
    z = np.asarray(z, dtype=float)
    out = []
    for x, y in pairs:
        fx, fy = evaluate(problem, x), evaluate(problem, y)
        rel = dominates(fx, fy, 0.0)
        sx, sy = scalarize(fx, z), scalarize(fy, z)
        if rel is DominanceRelation.STRICTLY_DOMINATES:
            bad = not (sx < sy - tol)
        elif rel.is_weak:
            bad = sx > sy + tol
        else:
            bad = False
        if bad:
            out.append(RepresentationViolation(np.asarray(x, float), np.asarray(y, float), rel, sx, sy))
    return out
