"""Outer proximal-point iterations: exact (SPP), inexact (ISPP) and convex (CISPP).

Record ``k`` of a run stores the iterate ``x^k``. Its ``step_norm``,
``residual_g`` and ``alpha`` refer to the step that produced it, i.e.
``residual_g = alpha_{k-1} (x^{k-1} - x^k)``; record 0 carries zeros.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np

from .criticality import CriticalityCertificate, criticality_certificate
from .errors import BudgetError, ConfigError, ContractError, InnerSolveError
from .inner_solver import InnerConfig, prox_convex, solve_subproblem
from .model import evaluate, in_bounds, jacobian
from .scalarization import check_weights, normalize_weights, scalarize

VARIANTS = ("SPP", "ISPP", "CISPP")
TERMINATIONS = ("step_tol", "critical_point", "max_outer", "inner_failure")


@dataclass(frozen=True)
class SummableSequence:
    """``scale / (k + 1) ** power``; summable iff ``power > 1`` or ``scale == 0``."""

    scale: float
    power: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale >= 0):
            raise ConfigError(f"budget scale must be finite and >= 0, got {self.scale}", key="budget")
        if self.scale > 0 and not self.power > 1:
            raise ConfigError(f"budget {self.scale}/(k+1)^{self.power} is not summable", key="budget")

    def __call__(self, k: int) -> float:
        return self.scale / (k + 1) ** self.power

    def partial_sum(self, k: int) -> float:
        return float(sum(self(j) for j in range(k + 1)))

    def describe(self):
        return {"scale": self.scale, "power": self.power}


@dataclass(frozen=True)
class AlphaSchedule:
    """Proximal parameters: ``const`` alpha, ``harmonic`` alpha0/(k+1) or an explicit ``list``."""

    kind: str = "const"
    value: float = 1.0
    values: tuple = ()
    alpha_bar: float = math.inf

    def __post_init__(self):
        if self.kind not in ("const", "harmonic", "list"):
            raise ConfigError(f"unknown alpha schedule {self.kind!r}", key="alpha")
        vals = self.values if self.kind == "list" else (self.value,)
        if not vals:
            raise ConfigError("alpha list is empty", key="alpha")
        for a in vals:
            if not (math.isfinite(a) and a > 0):
                raise ConfigError(f"alpha must be positive, got {a}", key="alpha")
            if not a < self.alpha_bar:
                raise ConfigError(f"alpha {a} must be below alpha_bar {self.alpha_bar}", key="alpha")

    def __call__(self, k: int) -> float:
        if self.kind == "const":
            return self.value
        if self.kind == "harmonic":
            return self.value / (k + 1)
        return self.values[min(k, len(self.values) - 1)]

    def describe(self):
        if self.kind == "list":
            return {"kind": "list", "values": list(self.values)}
        return {"kind": self.kind, "value": self.value}


WeightSchedule = Union[np.ndarray, Callable[[int, np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class SolverConfig:
    """Everything an outer run needs besides the problem.

    ``z`` is either a constant weight (normalized on construction) or a
    callback ``z(k, x_k)`` returning a nonnegative nonzero vector, normalized
    at each use. ``constraint_mode`` defaults to ``sublevel`` for SPP/ISPP and
    ``unconstrained`` for CISPP.
    """

    variant: str = "SPP"
    x0: tuple = ()
    z: WeightSchedule = None
    alpha: AlphaSchedule = field(default_factory=AlphaSchedule)
    constraint_mode: Optional[str] = None
    stop_step_tol: float = 1e-4
    stop_criticality_tol: float = 1e-6
    max_outer: int = 200
    delta_budget: SummableSequence = field(default_factory=lambda: SummableSequence(0.1, 2.0))
    e_budget: SummableSequence = field(default_factory=lambda: SummableSequence(1e-6, 2.0))
    inner: InnerConfig = field(default_factory=InnerConfig)
    rng_seed: int = 0
    criticality_measure: str = "normalized"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}", key="variant")
        x0 = np.asarray(self.x0, dtype=float).reshape(-1)
        if x0.size == 0 or not np.all(np.isfinite(x0)):
            raise ConfigError("starting point must be a non-empty finite vector", key="x0")
        object.__setattr__(self, "x0", tuple(float(v) for v in x0))
        if self.z is None:
            raise ConfigError("a weight vector or weight callback is required", key="z")
        if not callable(self.z):
            try:
                z = normalize_weights(self.z)
            except ValueError as err:
                raise ConfigError(str(err), key="z") from None
            object.__setattr__(self, "z", z)
        mode = self.constraint_mode
        if mode is None:
            mode = "unconstrained" if self.variant == "CISPP" else "sublevel"
            object.__setattr__(self, "constraint_mode", mode)
        if mode not in ("sublevel", "unconstrained"):
            raise ConfigError(f"unknown constraint mode {mode!r}", key="mode")
        if self.variant == "CISPP":
            if mode != "unconstrained":
                raise ConfigError("CISPP runs unconstrained", key="mode")
            if callable(self.z):
                raise ConfigError("CISPP needs a fixed weight vector", key="z")
        if not self.stop_step_tol > 0:
            raise ConfigError("must be positive", key="step_tol")
        if not self.stop_criticality_tol > 0:
            raise ConfigError("must be positive", key="crit_tol")
        if self.criticality_measure not in ("normalized", "absolute"):
            raise ConfigError("must be 'normalized' or 'absolute'", key="crit_measure")
        if self.max_outer < 0:
            raise ConfigError("must be nonnegative", key="max_outer")

    def weight(self, k: int, x: np.ndarray) -> np.ndarray:
        if callable(self.z):
            return normalize_weights(self.z(k, x))
        return self.z

    def to_dict(self):
        return {
            "variant": self.variant,
            "x0": list(self.x0),
            "z": "callable" if callable(self.z) else [float(v) for v in self.z],
            "alpha": self.alpha.describe(),
            "constraint_mode": self.constraint_mode,
            "stop_step_tol": self.stop_step_tol,
            "stop_criticality_tol": self.stop_criticality_tol,
            "max_outer": self.max_outer,
            "delta_budget": self.delta_budget.describe(),
            "e_budget": self.e_budget.describe(),
            "inner_tol": self.inner.inner_tol,
            "feas_tol": self.inner.feas_tol,
            "rng_seed": self.rng_seed,
            "criticality_measure": self.criticality_measure,
        }


@dataclass
class IterationRecord:
    k: int
    x: np.ndarray
    f: np.ndarray
    z: np.ndarray
    scalarized: float
    alpha: float = 0.0
    step_norm: float = 0.0
    residual_g: np.ndarray = None
    residual_g_norm: float = 0.0
    delta_k: float = 0.0
    delta_sum: float = 0.0
    e_norm: float = 0.0
    inner_iterations: int = 0
    feasibility_violation: float = 0.0
    criticality_residual: float = math.nan

    def to_dict(self):
        return {
            "k": self.k,
            "x": [float(v) for v in self.x],
            "f": [float(v) for v in self.f],
            "z": [float(v) for v in self.z],
            "scalarized": self.scalarized,
            "alpha": self.alpha,
            "step_norm": self.step_norm,
            "residual_g": [float(v) for v in self.residual_g],
            "residual_g_norm": self.residual_g_norm,
            "delta_k": self.delta_k,
            "delta_sum": self.delta_sum,
            "e_norm": self.e_norm,
            "inner_iterations": self.inner_iterations,
            "feasibility_violation": self.feasibility_violation,
            "criticality_residual": self.criticality_residual,
        }


@dataclass
class RunReport:
    problem: str
    records: list
    termination: str
    final_certificate: Optional[CriticalityCertificate]
    config_echo: SolverConfig
    wall_time: float = 0.0
    message: str = ""

    @property
    def iterations(self) -> int:
        return self.records[-1].k

    @property
    def x_final(self) -> np.ndarray:
        return self.records[-1].x

    @property
    def trajectory(self):
        return [r.x for r in self.records]


def step_residual(x_k, x_next, alpha) -> np.ndarray:
    """``alpha * (x_k - x_next)``, the proximal residual of one step."""
    x_k = np.asarray(x_k, dtype=float)
    x_next = np.asarray(x_next, dtype=float)
    if x_k.shape != x_next.shape:
        raise ContractError("points must have equal length")
    if not alpha > 0:
        raise ContractError("alpha must be positive")
    return alpha * (x_k - x_next)


def delta_k(epsilon: float, nu_norm: float, alpha: float) -> float:
    """Inexactness measure ``max(epsilon / alpha, nu_norm / alpha)``."""
    if not alpha > 0:
        raise ContractError("alpha must be positive")
    if epsilon < 0 or nu_norm < 0:
        raise ContractError("epsilon and nu_norm must be nonnegative")
    return max(epsilon / alpha, nu_norm / alpha)


def check_stop(record: IterationRecord, certificate, config: SolverConfig, use_criticality: bool = True):
    """Return ``"critical_point"``, ``"step_tol"`` or ``None`` (continue).

    The criticality certificate takes precedence over the step test.
    """
    if use_criticality and certificate is not None and certificate.residual < config.stop_criticality_tol:
        return "critical_point"
    if record.k > 0 and record.step_norm < config.stop_step_tol:
        return "step_tol"
    return None


def _certificates(problem, x, config):
    """Return ``(reported, stopping)`` certificates at ``x``.

    The reported one is the plain min-norm certificate; the stopping one uses
    unit-normalized gradients unless ``criticality_measure == "absolute"``.
    """
    if problem.jacobian is None and not problem.smooth:
        return None, None
    J = jacobian(problem, x)
    tol = config.stop_criticality_tol
    raw = criticality_certificate(J, tol)
    if config.criticality_measure == "absolute":
        return raw, raw
    return raw, criticality_certificate(J, tol, normalize=True)


def _check_start(problem, config):
    x0 = np.asarray(config.x0, dtype=float)
    if x0.shape[0] != problem.n:
        raise ConfigError(f"x0 has length {x0.shape[0]}, problem needs {problem.n}", key="x0")
    if not in_bounds(problem, x0):
        raise ConfigError("x0 lies outside the problem bounds", key="x0")
    if not callable(config.z) and len(config.z) != problem.m:
        raise ConfigError(f"z has length {len(config.z)}, problem has {problem.m} objectives", key="z")
    return x0


def _initial_record(problem, x0, config):
    f0 = evaluate(problem, x0)
    z0 = check_weights(config.weight(0, x0), problem.m)
    return IterationRecord(0, x0.copy(), f0, z0, scalarize(f0, z0), residual_g=np.zeros_like(x0))


def _run(problem, config, step_fn, use_criticality=True):
    t0 = time.perf_counter()
    x = _check_start(problem, config)
    rec = _initial_record(problem, x, config)
    cert, stop_cert = _certificates(problem, x, config)
    if stop_cert is not None:
        rec.criticality_residual = stop_cert.residual
    records = [rec]
    termination = "max_outer"
    message = ""
    if use_criticality and stop_cert is not None and stop_cert.is_critical:
        termination = "critical_point"
    else:
        for k in range(config.max_outer):
            alpha = config.alpha(k)
            z = check_weights(config.weight(k, x), problem.m)
            try:
                x_next, info = step_fn(k, x, z, alpha, records[-1])
            except BudgetError as err:
                err.report = _finish(problem, records, "inner_failure", cert, config, t0, str(err))
                raise
            except InnerSolveError as err:
                termination, message = "inner_failure", str(err)
                break
            f_next = evaluate(problem, x_next)
            g = step_residual(x, x_next, alpha)
            step = float(np.linalg.norm(x_next - x))
            rec = IterationRecord(
                k + 1,
                x_next,
                f_next,
                z,
                scalarize(f_next, z),
                alpha=alpha,
                step_norm=step,
                residual_g=g,
                residual_g_norm=alpha * step,
                **info,
            )
            cert, stop_cert = _certificates(problem, x_next, config)
            if stop_cert is not None:
                rec.criticality_residual = stop_cert.residual
            records.append(rec)
            x = x_next
            decision = check_stop(rec, stop_cert, config, use_criticality)
            if decision is not None:
                termination = decision
                break
    return _finish(problem, records, termination, cert, config, t0, message)


def _finish(problem, records, termination, cert, config, t0, message):
    return RunReport(problem.name, records, termination, cert, config, time.perf_counter() - t0, message)


def run_spp(problem, config: SolverConfig) -> RunReport:
    """Exact scalarized proximal point method.

    Each step solves the sublevel-constrained proximal subproblem to the
    inner tolerance. An inner failure ends the run with
    ``termination="inner_failure"`` and the partial trajectory.
    """
    if config.variant != "SPP":
        config = replace(config, variant="SPP")
    if not problem.smooth and problem.convexity_class != "convex":
        raise ContractError("SPP needs a differentiable or convex problem")
    mode = "constrained" if config.constraint_mode == "sublevel" else "unconstrained"

    def step(k, x, z, alpha, prev):
        sol = solve_subproblem(problem, x, z, alpha, mode, config.inner)
        return sol.x_next, {
            "inner_iterations": sol.inner_iterations,
            "feasibility_violation": sol.feasibility_violation,
        }

    return _run(problem, config, step)


def run_ispp(problem, config: SolverConfig) -> RunReport:
    """Inexact variant with a summable error budget ``delta_budget``.

    The inner tolerance at step ``k`` is ``alpha_k * delta_budget(k)`` (never
    tighter than ``config.inner.inner_tol``). The achieved
    ``delta_k = max(eps_k, ||nu_k||) / alpha_k`` must not exceed the budget;
    ``eps_k`` is the inner stationarity residual, taken as zero when it is
    within ``inner_tol`` (the accuracy SPP treats as exact), and ``nu_k`` the
    multiplier estimate of the sublevel constraints.

    Raises:
        BudgetError: the achieved ``delta_k`` exceeds ``delta_budget(k)``;
            ``err.report`` holds the partial run.
    """
    if config.variant != "ISPP":
        config = replace(config, variant="ISPP")
    if not problem.smooth:
        raise ContractError("ISPP needs a differentiable problem")
    mode = "constrained" if config.constraint_mode == "sublevel" else "unconstrained"
    budget = config.delta_budget

    def step(k, x, z, alpha, prev):
        tol = max(alpha * budget(k), config.inner.inner_tol)
        try:
            sol = solve_subproblem(problem, x, z, alpha, mode, config.inner, tol=tol)
        except InnerSolveError as err:
            if err.best is None:
                raise
            sol = err.best
        # residuals within the exact-solve tolerance count as exact, as in SPP
        eps = sol.epsilon_achieved if sol.epsilon_achieved > config.inner.inner_tol else 0.0
        d = delta_k(eps, sol.nu_norm, alpha)
        if d > budget(k):
            raise BudgetError(f"delta_{k} = {d:.3e} exceeds budget {budget(k):.3e}", k, d, budget(k), best=sol)
        return sol.x_next, {
            "inner_iterations": sol.inner_iterations,
            "feasibility_violation": sol.feasibility_violation,
            "delta_k": d,
            "delta_sum": prev.delta_sum + d,
        }

    return _run(problem, config, step)


def run_cispp(problem, config: SolverConfig) -> RunReport:
    """Convex inexact variant: unconstrained prox of ``<F(.), z>`` with fixed ``z``.

    Stops once the step falls below ``stop_step_tol``; on weak-sharp problems
    solved with the exact prox the iterates become stationary after finitely
    many steps.
    """
    if config.variant != "CISPP":
        config = replace(config, variant="CISPP", constraint_mode="unconstrained")
    if problem.convexity_class != "convex":
        raise ContractError("CISPP needs a convex problem")
    budget = config.e_budget

    def step(k, x, z, alpha, prev):
        try:
            x_next, e = prox_convex(problem, x, z, alpha, config.inner, e_budget=budget(k))
        except InnerSolveError as err:
            best_e = err.best[1] if err.best else math.inf
            raise BudgetError(str(err), k, best_e, budget(k), best=err.best) from None
        return x_next, {"e_norm": e, "feasibility_violation": 0.0}

    return _run(problem, config, step, use_criticality=False)


def run(problem, config: SolverConfig) -> RunReport:
    """Dispatch on ``config.variant``."""
    return {"SPP": run_spp, "ISPP": run_ispp, "CISPP": run_cispp}[config.variant](problem, config)
