"""Decay-constant extraction: least-squares fit of ``exp(-(t/T2)^beta)``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ValidationError
from .gksl import CoherenceProfile

BETA_BOUNDS = (0.5, 3.0)
MAX_ITER = 2000
XTOL_REL = 1e-10


@dataclass(frozen=True)
class FitResult:
    T2_ms: float
    beta: float
    rmse: float
    converged: bool
    iterations: int = 0


def stretched_exp(t, T2, beta):
    return np.exp(-np.power(np.asarray(t, dtype=float) / T2, beta))


def nelder_mead(
    fn: Callable[[np.ndarray], float],
    x0,
    xtol_rel: float = XTOL_REL,
    max_iter: int = MAX_ITER,
    initial_step: float = 0.05,
) -> tuple[np.ndarray, float, bool, int]:
    """Minimize ``fn`` with the Nelder-Mead simplex.

    Stops when every vertex lies within ``xtol_rel`` (relative, per
    coordinate) of the best vertex. Returns ``(x, f(x), converged, iterations)``.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    simplex = [x0.copy()]
    for k in range(n):
        v = x0.copy()
        v[k] = v[k] * (1.0 + initial_step) if v[k] != 0 else initial_step
        simplex.append(v)
    simplex = np.array(simplex)
    fvals = np.array([fn(v) for v in simplex])

    converged = False
    it = 0
    while it < max_iter:
        order = np.argsort(fvals, kind="stable")
        simplex, fvals = simplex[order], fvals[order]
        scale = np.maximum(np.abs(simplex[0]), 1e-300)
        if np.max(np.abs(simplex[1:] - simplex[0]) / scale) < xtol_rel:
            converged = True
            break
        it += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = fn(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = fn(xe)
            if fe < fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-2]:
            simplex[-1], fvals[-1] = xr, fr
            continue
        if fr < fvals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = fn(xc)
            if fc <= fr:
                simplex[-1], fvals[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = fn(xc)
            if fc < fvals[-1]:
                simplex[-1], fvals[-1] = xc, fc
                continue
        # shrink towards the best vertex
        simplex[1:] = simplex[0] + 0.5 * (simplex[1:] - simplex[0])
        fvals[1:] = [fn(v) for v in simplex[1:]]

    best = int(np.argmin(fvals))
    return simplex[best], float(fvals[best]), converged, it


def fit_stretched_exp(profile: CoherenceProfile) -> FitResult:
    """Fit ``L(t) = exp(-(t/T2)^beta)`` to a coherence profile.

    The search starts from beta = 1 and T2 at the first grid time where
    L drops below 1/e (the last grid time if it never does). beta is held
    to [0.5, 3]; T2 is capped at 1e6 times the grid length, so a profile
    that never decays reports a very long but finite T2. Fit failures are
    reported through ``converged`` rather than raised.
    """
    t = profile.t_ms
    y = profile.values
    if t.size < 10:
        raise ValidationError("need at least 10 points to fit")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise ValidationError("profile contains non-finite values")

    below = np.nonzero(y < math.exp(-1.0))[0]
    T2_0 = float(t[below[0]]) if below.size else float(t[-1])
    t_cap = 1e6 * float(t[-1])

    def clip(x):
        return min(max(x[0], 1e-12 * t_cap), t_cap), min(max(x[1], BETA_BOUNDS[0]), BETA_BOUNDS[1])

    def objective(x):
        T2, beta = clip(x)
        r = stretched_exp(t, T2, beta) - y
        return float(np.mean(r * r))

    x, fval, converged, iters = nelder_mead(objective, [T2_0, 1.0])
    T2, beta = clip(x)
    return FitResult(float(T2), float(beta), math.sqrt(fval), converged, iters)
