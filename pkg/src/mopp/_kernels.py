"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``MOPP_USE_NUMBA`` is not set to ``0``/``false``/``no``. Both paths
are always importable as :data:`numpy_impl` and :data:`numba_impl` (the
latter is ``None`` without numba) so they can be compared directly.

Kernels:

* ``minnorm_simplex`` -- Frank-Wolfe with away steps for
  ``min_{lambda in simplex} 1/2 ||G^T lambda||^2``.
* ``first_strict_dominator`` / ``first_pareto_dominator`` -- linear scans of an
  ``(N, m)`` array of objective vectors for a point that beats a reference.
* ``pwl_prox`` -- exact prox of a coordinate-separable sum of weighted
  absolute values, by enumeration of kinks and per-piece stationary points.
"""

import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _flag_enabled():
    raw = os.environ.get("MOPP_USE_NUMBA", "1").strip().lower()
    return raw not in ("0", "false", "no", "off")


# ----------------------------------------------------------------------------
# Frank-Wolfe min-norm point over the simplex (shared by both paths; the
# algorithm is sequential so the numpy path is the same code, un-jitted).
# ----------------------------------------------------------------------------


def _minnorm_simplex(G, max_iter, gap_tol):
    m = G.shape[0]
    Q = G @ G.T
    lam = np.zeros(m)
    start = 0
    for i in range(1, m):
        if Q[i, i] < Q[start, start]:
            start = i
    lam[start] = 1.0
    gap = 0.0
    it = 0
    while it < max_iter:
        grad = Q @ lam
        lg = lam @ grad
        s = 0
        for i in range(1, m):
            if grad[i] < grad[s]:
                s = i
        gap = lg - grad[s]
        if gap <= gap_tol:
            break
        a = -1
        for i in range(m):
            if lam[i] > 0.0 and (a < 0 or grad[i] > grad[a]):
                a = i
        away = grad[a] - lg > gap and lam[a] < 1.0
        if away:
            d = lam.copy()
            d[a] -= 1.0
            gmax = lam[a] / (1.0 - lam[a])
        else:
            d = -lam
            d[s] += 1.0
            gmax = 1.0
        curv = d @ (Q @ d)
        gamma = gmax
        if curv > 0.0:
            gamma = min(max(-(d @ grad) / curv, 0.0), gmax)
        it += 1
        if gamma <= 0.0:
            break
        lam = lam + gamma * d
        if away and gamma == gmax:
            lam[a] = 0.0  # drop step
        for i in range(m):
            if lam[i] < 0.0:
                lam[i] = 0.0
        lam /= lam.sum()
    return lam, gap, it


# ----------------------------------------------------------------------------
# Dominance scans
# ----------------------------------------------------------------------------


def _first_strict_dominator_loop(values, ref, tol):
    N, m = values.shape
    for p in range(N):
        ok = True
        for i in range(m):
            if not values[p, i] < ref[i] - tol:
                ok = False
                break
        if ok:
            return p
    return -1


def _first_pareto_dominator_loop(values, ref, tol):
    N, m = values.shape
    for p in range(N):
        weak = True
        strict = False
        for i in range(m):
            v = values[p, i]
            if v > ref[i] + tol:
                weak = False
                break
            if v < ref[i] - tol:
                strict = True
        if weak and strict:
            return p
    return -1


def _first_strict_dominator_np(values, ref, tol):
    hit = np.flatnonzero(np.all(values < ref - tol, axis=1))
    return int(hit[0]) if hit.size else -1


def _first_pareto_dominator_np(values, ref, tol):
    weak = np.all(values <= ref + tol, axis=1)
    strict = np.any(values < ref - tol, axis=1)
    hit = np.flatnonzero(weak & strict)
    return int(hit[0]) if hit.size else -1


# ----------------------------------------------------------------------------
# Separable piecewise-linear prox
# ----------------------------------------------------------------------------


def _pwl_prox_loop(center, alpha, breaks, weights):
    n, L = breaks.shape
    out = np.empty(n)
    for j in range(n):
        c = center[j]
        order = np.argsort(breaks[j])
        b = breaks[j][order]
        w = weights[j][order]
        total = w.sum()
        best_t = c
        best_v = np.inf
        left = 0.0
        # candidates in order: kink l, then the stationary point of the
        # piece to the right of every kink (piece 0 is left of all kinks)
        for q in range(2 * L + 1):
            if q < L:
                t = breaks[j, q]
            else:
                p = q - L
                lo = b[p - 1] if p > 0 else -np.inf
                hi = b[p] if p < L else np.inf
                t = c - (2.0 * left - total) / alpha
                if p < L:
                    left += w[p]
                if t < lo or t > hi:
                    continue
            v = 0.5 * alpha * (t - c) * (t - c)
            for l in range(L):
                v += weights[j, l] * abs(t - breaks[j, l])
            if v < best_v:
                best_v = v
                best_t = t
        out[j] = best_t
    return out


def _pwl_prox_np(center, alpha, breaks, weights):
    n, L = breaks.shape
    order = np.argsort(breaks, axis=1, kind="stable")
    b = np.take_along_axis(breaks, order, axis=1)
    w = np.take_along_axis(weights, order, axis=1)
    # slope on piece p = (weight of kinks left of it) - (weight right of it)
    left = np.concatenate([np.zeros((n, 1)), np.cumsum(w, axis=1)], axis=1)
    slopes = 2.0 * left - left[:, -1:]
    lo = np.concatenate([np.full((n, 1), -np.inf), b], axis=1)
    hi = np.concatenate([b, np.full((n, 1), np.inf)], axis=1)
    stat = center[:, None] - slopes / alpha
    stat = np.where((stat >= lo) & (stat <= hi), stat, np.nan)
    cand = np.concatenate([breaks, stat], axis=1)
    vals = 0.5 * alpha * (cand - center[:, None]) ** 2 + np.sum(
        weights[:, None, :] * np.abs(cand[:, :, None] - breaks[:, None, :]), axis=2
    )
    vals = np.where(np.isnan(cand), np.inf, vals)
    idx = np.argmin(vals, axis=1)
    return cand[np.arange(n), idx]


numpy_impl = SimpleNamespace(
    name="numpy",
    minnorm_simplex=_minnorm_simplex,
    first_strict_dominator=_first_strict_dominator_np,
    first_pareto_dominator=_first_pareto_dominator_np,
    pwl_prox=_pwl_prox_np,
)

if numba is not None:
    numba_impl = SimpleNamespace(
        name="numba",
        minnorm_simplex=numba.njit(cache=True)(_minnorm_simplex),
        first_strict_dominator=numba.njit(cache=True)(_first_strict_dominator_loop),
        first_pareto_dominator=numba.njit(cache=True)(_first_pareto_dominator_loop),
        pwl_prox=numba.njit(cache=True)(_pwl_prox_loop),
    )
else:  # pragma: no cover
    numba_impl = None

USE_NUMBA = numba_impl is not None and _flag_enabled()
active = numba_impl if USE_NUMBA else numpy_impl


def minnorm_simplex(G, max_iter, gap_tol):
    """Return ``(lambda, fw_gap, iterations)`` for the min-norm hull point."""
    G = np.ascontiguousarray(G, dtype=np.float64)
    lam, gap, it = active.minnorm_simplex(G, int(max_iter), float(gap_tol))
    return lam, float(gap), int(it)


def first_strict_dominator(values, ref, tol=0.0):
    values = np.ascontiguousarray(values, dtype=np.float64)
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    return int(active.first_strict_dominator(values, ref, float(tol)))


def first_pareto_dominator(values, ref, tol=0.0):
    values = np.ascontiguousarray(values, dtype=np.float64)
    ref = np.ascontiguousarray(ref, dtype=np.float64)
    return int(active.first_pareto_dominator(values, ref, float(tol)))


def pwl_prox(center, alpha, breaks, weights):
    center = np.ascontiguousarray(center, dtype=np.float64)
    breaks = np.ascontiguousarray(breaks, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    return active.pwl_prox(center, float(alpha), breaks, weights)
