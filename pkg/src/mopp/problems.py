"""Built-in test problems, a name registry and sampling-based validators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractError
from .model import ProblemSpec, evaluate_many

QUASICONVEX_SLACK = 1e-8
NONNEG_SLACK = 1e-12


def paper_example() -> ProblemSpec:
    """Gaussian well at the origin against a paraboloid centred at (1, 2).

    ``F1 = 1 - exp(-x1^2 - x2^2)``, ``F2 = (x1 - 1)^2 + (x2 - 2)^2``. Both
    minimizers, (0, 0) and (1, 2), are Pareto points; the Pareto set is the
    segment joining them.
    """
    a = np.array([1.0, 2.0])

    def F(x):
        return np.array([1.0 - np.exp(-(x @ x)), (x - a) @ (x - a)])

    def J(x):
        return np.vstack([2.0 * x * np.exp(-(x @ x)), 2.0 * (x - a)])

    def batch(X):
        return np.column_stack([1.0 - np.exp(-np.sum(X * X, axis=1)), np.sum((X - a) ** 2, axis=1)])

    return ProblemSpec(
        n=2,
        m=2,
        evaluator=F,
        jacobian=J,
        bounds=[[-10.0, 10.0], [-10.0, 10.0]],
        convexity_class="quasiconvex",
        known_pareto_points=((0.0, 0.0), (1.0, 2.0)),
        name="paper_example",
        batch_evaluator=batch,
    )


def _abs_problem(name, B, W, c, bounds, pareto=(), tau=None):
    """Problem whose objectives are sums of weighted absolute values."""
    B = np.asarray(B, dtype=float)
    W = np.asarray(W, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n, _ = B.shape

    def F(x):
        return c + np.sum(W * np.abs(x[None, :, None] - B), axis=(1, 2))

    def batch(X):
        return c + np.sum(W[None] * np.abs(X[:, None, :, None] - B[None]), axis=(2, 3))

    def sub(x, i):
        return np.sum(W[i] * np.sign(x[:, None] - B[i]), axis=1)

    def J(x):
        return np.vstack([sub(x, i) for i in range(m)])

    return ProblemSpec(
        n=n,
        m=m,
        evaluator=F,
        jacobian=J,
        subgradient=sub,
        bounds=bounds,
        convexity_class="convex",
        weak_sharp_tau=tau,
        known_pareto_points=pareto,
        name=name,
        smooth=False,
        batch_evaluator=batch,
        abs_terms=(B, W, c),
    )


def polyhedral_convex_example() -> ProblemSpec:
    """``F1 = |x1| + |x2|``, ``F2 = |x1 - 2| + |x2|``.

    Pareto set is the segment ``{(t, 0): 0 <= t <= 2}``. ``weak_sharp_tau``
    is set to 1 as metadata only; it is not verified globally.
    """
    B = [[[0.0], [0.0]], [[2.0], [0.0]]]
    W = np.ones((2, 2, 1))
    return _abs_problem(
        "polyhedral",
        B,
        W,
        [0.0, 0.0],
        [[-10.0, 10.0], [-10.0, 10.0]],
        pareto=((0.0, 0.0), (1.0, 0.0), (2.0, 0.0)),
        tau=1.0,
    )


def absolute_value_1d() -> ProblemSpec:
    """Degenerate 1-D convex pair ``F = (|x|, |x|)`` on ``[-3, 3]``."""
    return _abs_problem("abs_1d", [[[0.0]], [[0.0]]], np.ones((2, 1, 1)), [0.0, 0.0], [[-3.0, 3.0]], pareto=((0.0,),))


def two_parabolas_1d() -> ProblemSpec:
    """``F = ((x - 1)^2, (x + 1)^2)`` on ``[-3, 3]``; Pareto set ``[-1, 1]``."""

    def F(x):
        return np.array([(x[0] - 1.0) ** 2, (x[0] + 1.0) ** 2])

    def J(x):
        return np.array([[2.0 * (x[0] - 1.0)], [2.0 * (x[0] + 1.0)]])

    def batch(X):
        return np.column_stack([(X[:, 0] - 1.0) ** 2, (X[:, 0] + 1.0) ** 2])

    return ProblemSpec(
        n=1,
        m=2,
        evaluator=F,
        jacobian=J,
        subgradient=lambda x, i: J(x)[i],
        bounds=[[-3.0, 3.0]],
        convexity_class="convex",
        known_pareto_points=((-1.0,), (1.0,)),
        name="parabolas_1d",
        batch_evaluator=batch,
    )


def smooth_convex_example(anchor=(1.0, 2.0)) -> ProblemSpec:
    """``F = (||x||^2, ||x - anchor||^2)``: convex but without weak sharpness."""
    a = np.asarray(anchor, dtype=float)
    n = a.shape[0]

    def F(x):
        return np.array([x @ x, (x - a) @ (x - a)])

    def J(x):
        return np.vstack([2.0 * x, 2.0 * (x - a)])

    def batch(X):
        return np.column_stack([np.sum(X * X, axis=1), np.sum((X - a) ** 2, axis=1)])

    return ProblemSpec(
        n=n,
        m=2,
        evaluator=F,
        jacobian=J,
        subgradient=lambda x, i: J(x)[i],
        bounds=np.tile([-10.0, 10.0], (n, 1)),
        convexity_class="convex",
        known_pareto_points=(np.zeros(n), a),
        name="smooth_convex",
        batch_evaluator=batch,
    )


def cobb_douglas_demand(exponents=((0.6, 0.4), (0.3, 0.7)), box=((0.1, 2.0), (0.1, 2.0))) -> ProblemSpec:
    """Consumers with Cobb-Douglas utilities ``mu_i(x) = prod_j x_j^a_ij``.

    Maximizing all utilities is recast as minimizing ``F_i = M_i - mu_i``
    with ``M_i`` the utility at the upper corner of ``box``, so ``F >= 0`` on
    the box.
    """
    A = np.atleast_2d(np.asarray(exponents, dtype=float))
    m, n = A.shape
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    if box.shape[0] != n:
        raise ConfigError(f"box has {box.shape[0]} intervals for {n} goods", key="box")
    if np.any(A < 0) or np.any(A.sum(axis=1) == 0):
        raise ConfigError("exponent rows must be nonnegative and nonzero", key="exponents")
    if np.any(box[:, 0] <= 0):
        raise ConfigError("box must be strictly positive (utility gradient is singular at 0)", key="box")
    top = box[:, 1]
    M = np.prod(top[None, :] ** A, axis=1)

    def mu(x):
        return np.prod(x[None, :] ** A, axis=1)

    def F(x):
        return M - mu(x)

    def J(x):
        return -(mu(x)[:, None] * A / x[None, :])

    def batch(X):
        return M[None, :] - np.prod(X[:, None, :] ** A[None], axis=2)

    return ProblemSpec(
        n=n,
        m=m,
        evaluator=F,
        jacobian=J,
        bounds=box,
        convexity_class="quasiconvex",
        known_pareto_points=(top,),
        name="cobb_douglas",
        batch_evaluator=batch,
    )


REGISTRY = {
    "paper_example": paper_example,
    "polyhedral": polyhedral_convex_example,
    "cobb_douglas": cobb_douglas_demand,
    "abs_1d": absolute_value_1d,
    "parabolas_1d": two_parabolas_1d,
    "smooth_convex": smooth_convex_example,
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return REGISTRY[name]()
    except KeyError:
        raise ConfigError(f"unknown problem {name!r}; choose from {sorted(REGISTRY)}", key="problem") from None


@dataclass
class Diagnostics:
    problem: str
    samples: int
    quasiconvex_violations: list = field(default_factory=list)
    nonneg_violations: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.quasiconvex_violations and not self.nonneg_violations

    def to_dict(self):
        return {
            "problem": self.problem,
            "samples": self.samples,
            "quasiconvex_violations": len(self.quasiconvex_violations),
            "nonneg_violations": len(self.nonneg_violations),
            "ok": self.ok,
        }


def validate_problem(problem: ProblemSpec, samples: int = 10_000, rng_seed: int = 42) -> Diagnostics:
    """Sample quasiconvexity and nonnegativity of every objective.

    Draws ``samples`` triples ``(x, y, t)`` uniformly in the bounds. A
    violation of quasiconvexity is ``F_i(t x + (1-t) y) > max(F_i(x), F_i(y))
    + 1e-8``; a nonnegativity violation is any sampled ``F_i < -1e-12``. A
    clean report is evidence, not proof.

    Each violation is recorded as a tuple ``(objective_index, x, y, t)`` or
    ``(objective_index, x)``.
    """
    if problem.bounds is None:
        raise ContractError("validation samples inside the bounds; problem has none")
    rng = np.random.default_rng(rng_seed)
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    X = rng.uniform(lo, hi, size=(samples, problem.n))
    Y = rng.uniform(lo, hi, size=(samples, problem.n))
    t = rng.uniform(0.0, 1.0, size=(samples, 1))
    Z = t * X + (1.0 - t) * Y
    FX, FY, FZ = evaluate_many(problem, X), evaluate_many(problem, Y), evaluate_many(problem, Z)
    diag = Diagnostics(problem.name, samples)
    bad = FZ > np.maximum(FX, FY) + QUASICONVEX_SLACK
    for p, i in zip(*np.nonzero(bad)):
        diag.quasiconvex_violations.append((int(i), X[p], Y[p], float(t[p, 0])))
    neg = np.vstack([FX, FY, FZ]) < -NONNEG_SLACK
    pts = np.vstack([X, Y, Z])
    for p, i in zip(*np.nonzero(neg)):
        diag.nonneg_violations.append((int(i), pts[p]))
    return diag
