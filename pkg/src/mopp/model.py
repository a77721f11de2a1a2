"""Problem representation, vector-order predicates and Jacobians."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ContractError, EvaluationError

Array = np.ndarray

CONVEXITY_CLASSES = ("quasiconvex", "convex", "unknown")


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A vector objective ``F: R^n -> R^m`` plus the metadata solvers need.

    ``evaluator`` maps a length-``n`` array to a length-``m`` array. The
    optional ``batch_evaluator`` maps an ``(N, n)`` array to ``(N, m)`` and is
    only used by brute-force oracles. ``abs_terms`` describes problems of the
    form ``F_i(x) = c_i + sum_j sum_l W[i,j,l] |x_j - B[i,j,l]|`` as a tuple
    ``(B, W, c)``; when present the convex prox is computed exactly.
    """

    n: int
    m: int
    evaluator: Callable[[Array], Array]
    jacobian: Optional[Callable[[Array], Array]] = None
    subgradient: Optional[Callable[[Array, int], Array]] = None
    bounds: Optional[Array] = None
    convexity_class: str = "unknown"
    weak_sharp_tau: Optional[float] = None
    known_pareto_points: tuple = ()
    name: str = "custom"
    smooth: bool = True
    batch_evaluator: Optional[Callable[[Array], Array]] = None
    abs_terms: Optional[tuple] = None
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ContractError("dimensions must be positive")
        if self.convexity_class not in CONVEXITY_CLASSES:
            raise ContractError(f"unknown convexity class {self.convexity_class!r}")
        if self.bounds is not None:
            b = np.array(self.bounds, dtype=float).reshape(self.n, 2)
            if np.any(b[:, 0] > b[:, 1]):
                raise ContractError("bounds must satisfy lower <= upper")
            b.setflags(write=False)
            object.__setattr__(self, "bounds", b)
        if self.weak_sharp_tau is not None and self.weak_sharp_tau <= 0:
            raise ContractError("weak_sharp_tau must be positive")
        pts = tuple(np.array(p, dtype=float) for p in self.known_pareto_points)
        object.__setattr__(self, "known_pareto_points", pts)

    @property
    def differentiable(self):
        return self.smooth


class DominanceRelation(enum.Enum):
    """Outcome of comparing two objective vectors ``a`` against ``b``."""

    WEAKLY_DOMINATES = "weakly_dominates"
    STRICTLY_DOMINATES = "strictly_dominates"
    INCOMPARABLE = "incomparable"
    EQUAL = "equal"

    @property
    def is_weak(self):
        return self is not DominanceRelation.INCOMPARABLE


def _as_point(problem: ProblemSpec, x) -> Array:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != problem.n:
        raise ContractError(f"expected a point of length {problem.n}, got shape {x.shape}")
    return x


def in_bounds(problem: ProblemSpec, x, slack: float = 1e-12) -> bool:
    if problem.bounds is None:
        return True
    x = np.asarray(x, dtype=float)
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    return bool(np.all(x >= lo - slack) and np.all(x <= hi + slack))


def project_to_bounds(problem: ProblemSpec, x) -> Array:
    if problem.bounds is None:
        return np.asarray(x, dtype=float)
    return np.clip(x, problem.bounds[:, 0], problem.bounds[:, 1])


def _raw_eval(problem: ProblemSpec, x: Array) -> Array:
    f = np.asarray(problem.evaluator(x), dtype=float).reshape(-1)
    if f.shape[0] != problem.m:
        raise ContractError(f"evaluator returned {f.shape[0]} values, expected {problem.m}")
    if not np.all(np.isfinite(f)):
        raise EvaluationError(f"non-finite objective value {f} at x={x}")
    return f


def evaluate(problem: ProblemSpec, x) -> Array:
    """Return ``F(x)`` as a float array of length ``m``.

    Raises:
        ContractError: ``x`` has the wrong length or lies outside the bounds.
        EvaluationError: some component of ``F(x)`` is not finite.
    """
    x = _as_point(problem, x)
    if not in_bounds(problem, x):
        raise ContractError(f"point {x} lies outside the problem bounds")
    return _raw_eval(problem, x)


def evaluate_many(problem: ProblemSpec, X) -> Array:
    """Evaluate ``F`` on the rows of an ``(N, n)`` array (no bounds check)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if problem.batch_evaluator is not None:
        out = np.asarray(problem.batch_evaluator(X), dtype=float)
    else:
        out = np.array([problem.evaluator(x) for x in X], dtype=float).reshape(len(X), problem.m)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("non-finite objective value in batch evaluation")
    return out


def fd_jacobian(problem: ProblemSpec, x) -> Array:
    """Central differences with step ``1e-6 * max(1, |x_j|)`` per coordinate."""
    x = _as_point(problem, x)
    J = np.empty((problem.m, problem.n))
    for j in range(problem.n):
        h = 1e-6 * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (_raw_eval(problem, xp) - _raw_eval(problem, xm)) / (2.0 * h)
    return J


def jacobian(problem: ProblemSpec, x, allow_fd: bool = True) -> Array:
    """Return the ``m x n`` Jacobian; row ``i`` is the gradient of ``F_i``."""
    x = _as_point(problem, x)
    if problem.jacobian is not None:
        J = np.asarray(problem.jacobian(x), dtype=float).reshape(problem.m, problem.n)
    elif allow_fd:
        J = fd_jacobian(problem, x)
    else:
        raise ContractError(f"problem {problem.name!r} has no analytic jacobian")
    if not np.all(np.isfinite(J)):
        raise EvaluationError(f"non-finite jacobian entry at x={x}")
    return J


def dominates(a, b, tol: float = 0.0) -> DominanceRelation:
    """Classify objective vector ``a`` against ``b`` under tolerance ``tol``.

    ``EQUAL`` is tested first, then strict, then weak dominance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ContractError(f"length mismatch {a.shape} vs {b.shape}")
    if tol < 0:
        raise ContractError("tolerance must be non-negative")
    if np.all(np.abs(a - b) <= tol):
        return DominanceRelation.EQUAL
    if np.all(a < b - tol):
        return DominanceRelation.STRICTLY_DOMINATES
    if np.all(a <= b + tol):
        return DominanceRelation.WEAKLY_DOMINATES
    return DominanceRelation.INCOMPARABLE


def nondominated_mask(values: Sequence) -> Array:
    """Mask of rows not Pareto-dominated (weakly everywhere, strictly somewhere)."""
    V = np.atleast_2d(np.asarray(values, dtype=float))
    keep = np.ones(len(V), dtype=bool)
    for p in range(len(V)):
        others = np.delete(V, p, axis=0)
        if len(others) == 0:
            continue
        beaten = np.all(others <= V[p], axis=1) & np.any(others < V[p], axis=1)
        keep[p] = not beaten.any()
    return keep
