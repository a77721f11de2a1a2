"""Pareto-criticality certificates, descent directions and brute-force oracles.

A point ``x`` is Pareto critical when no direction ``v`` makes every
``<grad F_i(x), v>`` negative. By convex-hull separation this holds exactly
when zero lies in the convex hull of the gradients, so the certificate is the
min-norm point of that hull, computed by Frank-Wolfe with away steps.

If ``w = sum_i lambda_i grad F_i`` is the exact min-norm point then
``<grad F_i, w> >= ||w||^2`` for every ``i``; with ``v = -w/||w||`` each
directional derivative is at most ``-||w||``. The Frank-Wolfe gap ``g``
weakens this to ``-(||w||^2 - g)/||w||``, and since the solver stops at
``g <= tol^2/10`` a reported descent direction always satisfies
``max_i <grad F_i, v> <= -residual/2`` (that is, ``c = 1/(2 residual)`` in
``-c residual^2``). If the iteration cap cuts the solve short, an exact
solve on the active support is tried, and a descent direction is only
reported after its inner products have been checked.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .errors import ContractError, OracleError
from .model import evaluate, evaluate_many

GRID_CHUNK = 1 << 18


@dataclass(frozen=True)
class CriticalityCertificate:
    lam: np.ndarray
    residual: float
    relative_residual: float
    is_critical: bool
    descent: Optional[np.ndarray] = None
    gap: float = 0.0
    iterations: int = 0

    def to_dict(self):
        return {
            "lambda": [float(v) for v in self.lam],
            "residual": float(self.residual),
            "relative_residual": float(self.relative_residual),
            "is_critical": bool(self.is_critical),
            "descent": None if self.descent is None else [float(v) for v in self.descent],
        }


def criticality_certificate(
    J, tol: float = 1e-6, max_iter: Optional[int] = None, normalize: bool = False
) -> CriticalityCertificate:
    """Min-norm certificate for the rows of the Jacobian ``J`` (shape ``m x n``).

    Args:
        J: Matrix whose rows are objective gradients at the point of interest.
        tol: Residual below which the point is declared critical.
        max_iter: Frank-Wolfe iteration cap; defaults to ``10 * m * n``.
        normalize: Scale nonzero rows to unit length first. Criticality is
            invariant under this, but the residual no longer shrinks with a
            flat objective; a zero row still certifies criticality.
    """
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if not np.all(np.isfinite(J)):
        raise ContractError("jacobian contains non-finite entries")
    if normalize:
        norms = np.linalg.norm(J, axis=1)
        J = J / np.where(norms > 0, norms, 1.0)[:, None]
    m, n = J.shape
    if max_iter is None:
        max_iter = 10 * m * n
    gap_tol = tol * tol / 10.0
    lam, gap, it = _kernels.minnorm_simplex(J, max_iter, gap_tol)
    if gap > gap_tol:
        lam, gap = _polish(J, lam, gap)
    w = J.T @ lam
    residual = float(np.linalg.norm(w))
    scale = float(np.max(np.linalg.norm(J, axis=1)))
    relative = residual / scale if scale > 0 else 0.0
    descent = None
    critical = residual < tol
    if not critical:
        v = -w / residual
        # a truncated solve may leave w short of the hull's min-norm point
        if np.max(J @ v) < 0.0:
            descent = v
    return CriticalityCertificate(lam, residual, relative, critical, descent, gap, it)


def _fw_gap(Q, lam):
    grad = Q @ lam
    return float(lam @ grad - np.min(grad))


def _polish(J, lam, gap):
    """Fully corrective step: exact min-norm point on the affine hull of the support.

    Used when Frank-Wolfe stops at its iteration cap; kept only if the
    result stays in the simplex and lowers the duality gap.
    """
    Q = J @ J.T
    support = np.flatnonzero(lam > 0.0)
    k = support.size
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = Q[np.ix_(support, support)]
    K[:k, k] = K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0][:k]
    if np.any(sol < 0.0) or abs(sol.sum() - 1.0) > 1e-9:
        return lam, gap
    cand = np.zeros_like(lam)
    cand[support] = sol / sol.sum()
    cand_gap = _fw_gap(Q, cand)
    return (cand, cand_gap) if cand_gap < gap else (lam, gap)


def descent_direction(J, v_cap: float = 1.0, tol: float = 1e-6):
    """Common descent direction with ``||v||_inf <= v_cap``, or ``None`` if critical."""
    cert = criticality_certificate(J, tol)
    if cert.is_critical:
        return None
    v = cert.descent
    return v * (v_cap / np.max(np.abs(v)))


def _grid_axes(problem, box, resolution):
    if resolution <= 0:
        raise ContractError("resolution must be positive")
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    if box.shape[0] == 1 and problem.n > 1:
        box = np.repeat(box, problem.n, axis=0)
    if box.shape[0] != problem.n:
        raise ContractError(f"box has {box.shape[0]} intervals, expected {problem.n}")
    if problem.n > 4:
        raise OracleError(f"grid oracle is exponential in n; refusing n={problem.n}")
    if problem.bounds is not None:
        b = problem.bounds
        if np.any(box[:, 0] < b[:, 0] - 1e-12) or np.any(box[:, 1] > b[:, 1] + 1e-12):
            raise ContractError("grid box must lie within the problem bounds")
    return [np.linspace(lo, hi, int(round((hi - lo) / resolution)) + 1) for lo, hi in box]


def iter_grid(problem, box, resolution, chunk: int = GRID_CHUNK):
    """Yield ``(points, values)`` chunks covering a regular grid over ``box``."""
    axes = _grid_axes(problem, box, resolution)
    sizes = [len(a) for a in axes]
    total = int(np.prod(sizes))
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), sizes)
        pts = np.column_stack([axes[d][idx[d]] for d in range(len(axes))])
        yield pts, evaluate_many(problem, pts)


def grid_witness(problem, box, resolution, x_star, tol: float = 0.0, kind: str = "weak"):
    """Return a grid point beating ``F(x_star)`` or ``None``.

    ``kind="weak"`` looks for strict improvement in every component by more
    than ``tol``; ``kind="pareto"`` looks for a point no worse (within ``tol``)
    everywhere and better by more than ``tol`` somewhere.
    """
    ref = evaluate(problem, x_star)
    scan = _kernels.first_strict_dominator if kind == "weak" else _kernels.first_pareto_dominator
    for pts, vals in iter_grid(problem, box, resolution):
        hit = scan(vals, ref, tol)
        if hit >= 0:
            return pts[hit]
    return None


def weak_pareto_grid_oracle(problem, box, resolution, x_star, tol: float = 0.0) -> bool:
    """True unless some grid point strictly improves every objective by > ``tol``."""
    return grid_witness(problem, box, resolution, x_star, tol, "weak") is None


def pareto_grid_oracle(problem, box, resolution, x_star, tol: float = 0.0) -> bool:
    """True unless some grid point Pareto-dominates ``F(x_star)`` beyond ``tol``."""
    return grid_witness(problem, box, resolution, x_star, tol, "pareto") is None


def fejer_check(trajectory, anchor, slack: float = 0.0) -> bool:
    """Check ``||x^{k+1} - a|| <= ||x^k - a|| + slack`` along a trajectory."""
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in trajectory]
    if not pts:
        raise ContractError("trajectory must be non-empty")
    anchor = np.atleast_1d(np.asarray(anchor, dtype=float))
    for p in pts:
        if p.shape != anchor.shape:
            raise ContractError(f"point shape {p.shape} differs from anchor {anchor.shape}")
    dist = [float(np.linalg.norm(p - anchor)) for p in pts]
    return all(b <= a + slack for a, b in itertools.pairwise(dist))
