"""Proximal subproblem solvers.

The smooth subproblem is

    minimize  phi(x) = <F(x), z> + alpha/2 ||x - x_k||^2
    subject to F(x) <= F(x_k) componentwise   (constrained mode)

solved by projected gradient descent with Armijo backtracking on a shifted
quadratic penalty

    phi(x) + rho * sum_i max(0, s_i c_i + mu_i / (2 rho))^2,   c_i = F_i(x) - F_i(x_k)

With ``mu = 0`` and ``s = 1`` this is the plain quadratic penalty. The
scales ``s_i = 1 / ||grad F_i(x_k)||`` make every constraint gradient unit
length at the centre. After each inner solve the shifts are updated,
``mu_i <- max(0, mu_i + 2 rho s_i c_i)``, and ``rho`` walks through
``InnerConfig.rhos`` while feasibility stalls. The vector
``nu = sum_i mu_i s_i grad F_i`` is the multiplier (normal-cone) estimate.

The convex prox ``argmin g(x) + alpha/2 ||x - x_k||^2`` is exact for
problems written as weighted sums of absolute values, and otherwise runs a
subgradient loop whose residual ``||s + alpha (x - x_k)||`` is a certified
bound on the distance of the subdifferential from zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ContractError, EvaluationError, InnerSolveError
from .model import evaluate, jacobian, project_to_bounds

ARMIJO_C1 = 1e-4
# absorbs rounding in phi once the gradient is ~sqrt(eps)
ARMIJO_ROUNDOFF = 1e-15
MIN_CONSTRAINT_GRAD = 1e-6


@dataclass(frozen=True)
class InnerConfig:
    inner_tol: float = 1e-9
    feas_tol: float = 1e-10
    max_inner: int = 5000
    rhos: tuple = (10.0, 1e2, 1e3, 1e4)
    max_rounds: int = 25
    stall_ratio: float = 0.25
    max_subgradient: int = 20000

    def __post_init__(self):
        if self.inner_tol <= 0 or self.feas_tol < 0:
            raise ContractError("inner_tol must be positive and feas_tol nonnegative")


@dataclass
class SubproblemSolution:
    x_next: np.ndarray
    inner_iterations: int
    phi_value: float
    stationarity_residual: float
    feasibility_violation: float
    epsilon_achieved: float
    nu_norm: float
    f_next: np.ndarray = field(default=None, repr=False)
    rho: float = 0.0


def penalty_objective(problem, x, x_k, z, alpha, rho, shift=None, scale=None, f_k=None):
    """Value and gradient of the (shifted, scaled) quadratic-penalty objective.

    ``value = <F(x),z> + alpha/2 ||x-x_k||^2 + rho * sum_i max(0, s_i c_i + mu_i/(2 rho))^2
    - sum_i mu_i^2/(4 rho)`` with ``c_i = F_i(x) - F_i(x_k)``, shifts ``mu``
    (default 0) and constraint scales ``s`` (default 1).

    Returns:
        ``(value, gradient)``.
    """
    x = np.asarray(x, dtype=float)
    x_k = np.asarray(x_k, dtype=float)
    if f_k is None:
        f_k = evaluate(problem, x_k)
    obj = _Objective(problem, x_k, np.asarray(z, dtype=float), alpha, f_k, scale)
    shift = np.zeros(problem.m) if shift is None else np.asarray(shift, dtype=float)
    val, grad, *_ = obj(x, rho, shift)
    return val, grad


class _Objective:
    """Penalized subproblem objective; returns value, gradient and by-products."""

    def __init__(self, problem, x_k, z, alpha, f_k, scale=None):
        self.problem, self.x_k, self.z, self.alpha, self.f_k = problem, x_k, z, alpha, f_k
        self.scale = np.ones(problem.m) if scale is None else np.asarray(scale, dtype=float)

    def phi(self, x, f):
        d = x - self.x_k
        return float(f @ self.z + 0.5 * self.alpha * (d @ d))

    def __call__(self, x, rho, shift):
        f = evaluate(self.problem, x)
        J = jacobian(self.problem, x)
        c = f - self.f_k
        viol = float(np.max(np.maximum(c, 0.0)))
        val = self.phi(x, f)
        if rho > 0:
            mult = np.maximum(0.0, shift + 2.0 * rho * self.scale * c)
            val += float((mult @ mult - shift @ shift) / (4.0 * rho))
            mult = mult * self.scale
        else:
            mult = np.zeros_like(c)
        grad = J.T @ (self.z + mult) + self.alpha * (x - self.x_k)
        return val, grad, f, J, mult, viol


def _projected_residual(problem, x, g):
    return float(np.linalg.norm(x - project_to_bounds(problem, x - g)))


def _descend(problem, obj, x, rho, shift, tol, max_iter):
    """Projected gradient descent with Barzilai-Borwein trial steps and Armijo backtracking."""
    val, g, *_ = obj(x, rho, shift)
    t = 1.0 / max(1.0, float(np.linalg.norm(g)))
    it = 0
    for it in range(1, max_iter + 1):
        if _projected_residual(problem, x, g) <= tol:
            return x, it - 1
        for _ in range(60):
            x_new = project_to_bounds(problem, x - t * g)
            step = x_new - x
            try:
                val_new, g_new, *_ = obj(x_new, rho, shift)
            except EvaluationError:
                t *= 0.5
                continue
            if val_new <= val + ARMIJO_C1 * float(g @ step) + ARMIJO_ROUNDOFF * (1.0 + abs(val)):
                break
            t *= 0.5
        else:
            return x, it
        s, y = step, g_new - g
        sy = float(s @ y)
        t = float(s @ s) / sy if sy > 0 else 2.0 * t
        t = min(max(t, 1e-12), 1e12)
        x, val, g = x_new, val_new, g_new
    return x, it


def solve_subproblem(problem, x_k, z, alpha, mode="constrained", cfg=None, tol=None):
    """Solve one proximal subproblem of the scalarized method.

    Args:
        problem: A differentiable ``ProblemSpec`` (or a convex one with a
            subgradient-valued jacobian).
        x_k: Current iterate; also the inner starting point.
        z: Unit nonnegative weight vector.
        alpha: Proximal parameter, ``alpha > 0``.
        mode: ``"constrained"`` (sublevel-set constraint ``F(x) <= F(x_k)``)
            or ``"unconstrained"``.
        cfg: ``InnerConfig``.
        tol: Overrides ``cfg.inner_tol`` for this call.

    Raises:
        InnerSolveError: stationarity or feasibility tolerances were not met;
            ``err.best`` holds the best feasible point found.
    """
    cfg = cfg or InnerConfig()
    tol = cfg.inner_tol if tol is None else tol
    if alpha <= 0:
        raise ContractError("alpha must be positive")
    if mode not in ("constrained", "unconstrained"):
        raise ContractError(f"unknown constraint mode {mode!r}")
    if not problem.smooth and problem.convexity_class != "convex":
        raise ContractError("nonsmooth nonconvex objectives need a subgradient-based method")
    if problem.jacobian is None and not problem.smooth:
        raise ContractError("nonsmooth problem without a subgradient-valued jacobian")
    x_k = np.asarray(x_k, dtype=float)
    z = np.asarray(z, dtype=float)
    f_k = evaluate(problem, x_k)
    # unit-gradient constraint scaling keeps penalty curvature O(rho) on flat objectives
    scale = 1.0 / np.maximum(np.linalg.norm(jacobian(problem, x_k), axis=1), MIN_CONSTRAINT_GRAD)
    obj = _Objective(problem, x_k, z, alpha, f_k, scale)
    constrained = mode == "constrained"
    m = problem.m

    phi_k = obj.phi(x_k, f_k)
    start = obj(x_k, 0.0, np.zeros(m))
    best = SubproblemSolution(
        x_k.copy(), 0, phi_k, _projected_residual(problem, x_k, start[1]), 0.0, 0.0, 0.0, f_k, 0.0
    )
    x = x_k.copy()
    shift = np.zeros(m)
    total_it = 0
    last = None
    rhos = cfg.rhos if constrained else (0.0,)
    for rho in rhos:
        prev_viol = np.inf
        for _ in range(cfg.max_rounds if constrained else 1):
            x, it = _descend(problem, obj, x, rho, shift, tol, cfg.max_inner)
            total_it += it
            _, g, f, J, mult, viol = obj(x, rho, shift)
            res = _projected_residual(problem, x, g)
            nu = J.T @ mult
            last = SubproblemSolution(
                x.copy(), total_it, obj.phi(x, f), res, viol, res, float(np.linalg.norm(nu)), f, rho
            )
            if (viol <= cfg.feas_tol or not constrained) and last.phi_value <= best.phi_value + 1e-12:
                best = last
            converged = res <= tol and (viol <= cfg.feas_tol or not constrained)
            if converged or not constrained:
                break
            shift = mult / scale
            if viol > cfg.stall_ratio * prev_viol:
                prev_viol = viol
                break
            prev_viol = viol
        if last.stationarity_residual <= tol and (last.feasibility_violation <= cfg.feas_tol or not constrained):
            break
    best.inner_iterations = total_it
    if best.stationarity_residual > tol:
        raise InnerSolveError(
            f"subproblem residual {best.stationarity_residual:.3e} above tolerance {tol:.3e}"
            f" (last violation {last.feasibility_violation:.3e})",
            best=best,
        )
    return best


# ----------------------------------------------------------------------------
# convex prox
# ----------------------------------------------------------------------------


def _abs_prox_data(problem, z):
    B, W, _ = problem.abs_terms
    m, n, L = B.shape
    breaks = np.transpose(B, (1, 0, 2)).reshape(n, m * L)
    weights = np.transpose(W * z[:, None, None], (1, 0, 2)).reshape(n, m * L)
    return breaks, weights


def prox_convex(problem, x_k, z, alpha, cfg=None, e_budget=0.0):
    """Prox of ``<F(.), z>`` for convex ``F``.

    Returns ``(x_next, e_norm)`` where ``e_norm`` bounds the norm of an element
    of ``partial(<F,z> + alpha/2||. - x_k||^2)(x_next)``; it is exactly zero
    when the problem exposes ``abs_terms``.
    """
    cfg = cfg or InnerConfig()
    if problem.convexity_class != "convex":
        raise ContractError("prox_convex requires a convex problem")
    if alpha <= 0:
        raise ContractError("alpha must be positive")
    x_k = np.asarray(x_k, dtype=float)
    z = np.asarray(z, dtype=float)
    if problem.abs_terms is not None:
        breaks, weights = _abs_prox_data(problem, z)
        return _kernels.pwl_prox(x_k, alpha, breaks, weights), 0.0
    if problem.subgradient is None:
        raise ContractError("prox_convex needs a subgradient oracle")

    def sub(x):
        return sum(z[i] * np.asarray(problem.subgradient(x, i), dtype=float) for i in range(problem.m))

    def g(x):
        d = x - x_k
        return float(evaluate(problem, x) @ z + 0.5 * alpha * (d @ d))

    x = x_k.copy()
    best_x, best_e = x.copy(), np.inf
    t = 1.0 / alpha
    for j in range(cfg.max_subgradient):
        d = sub(x) + alpha * (x - x_k)
        e = float(np.linalg.norm(d))
        if e < best_e:
            best_x, best_e = x.copy(), e
        if e <= e_budget:
            return x, e
        gx = g(x)
        trial = t
        for _ in range(40):
            x_new = x - trial * d
            if g(x_new) <= gx - ARMIJO_C1 * trial * e * e:
                break
            trial *= 0.5
        else:
            # no sufficient decrease: classic diminishing subgradient step
            x_new = x - d / (alpha * (j + 1))
        t = min(2.0 * trial, 1.0 / alpha)
        x = x_new
    raise InnerSolveError(f"prox residual {best_e:.3e} above budget {e_budget:.3e}", best=(best_x, best_e))
