"""Unconstrained linear-model trust-region minimiser in the style of COBYLA.

The method keeps a simplex of ``n + 1`` evaluated points and interpolates a
linear model of the objective through them. Each iteration either

* takes a trust-region step of length ``rho`` along the model's steepest
  descent direction, or
* replaces a badly placed vertex to restore the simplex geometry, or
* halves ``rho`` once the model stops predicting progress,

until ``rho`` would fall below ``rho_end`` or the evaluation budget is spent.
Simplex acceptability, vertex dropping and the rho schedule follow Powell's
COBYLA with no constraint functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# Powell's COBYLA constants
_ALPHA = 0.25  # minimum relative vertex distance from the opposite face
_BETA = 2.1  # maximum relative edge length
_GAMMA = 0.5  # geometry step length factor
_DELTA = 1.1  # edge length beyond which a vertex is preferred for dropping
_ETA = 0.1  # minimum ratio of actual to predicted reduction


class NonFiniteCostError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizerConfig:
    max_evals: int = 100
    rho_begin: float = 0.5
    rho_end: float = 1e-4
    seed: int | None = None

    def __post_init__(self):
        if self.max_evals < 1:
            raise ValueError("max_evals must be >= 1")
        if not self.rho_begin > self.rho_end > 0:
            raise ValueError("need rho_begin > rho_end > 0")


@dataclass
class OptimizeResult:
    x: np.ndarray
    fun: float
    nfev: int
    log: list[tuple[np.ndarray, float]] = field(repr=False)
    message: str = ""


class _BudgetExhausted(Exception):
    pass


def minimize(cost_fn: Callable[[np.ndarray], float], x0, config: OptimizerConfig) -> OptimizeResult:
    """Minimise ``cost_fn`` starting from ``x0``.

    Never calls ``cost_fn`` more than ``config.max_evals`` times and returns
    the best point among all evaluations (earliest on ties). ``log`` holds
    every ``(x, f)`` pair in call order.

    Raises:
        NonFiniteCostError: if ``cost_fn`` returns NaN or infinity.
    """
    x0 = np.array(x0, dtype=float).ravel()
    n = x0.size
    log: list[tuple[np.ndarray, float]] = []
    best = [x0.copy(), math.inf]

    def evaluate(x: np.ndarray) -> float:
        if len(log) >= config.max_evals:
            raise _BudgetExhausted
        f = float(cost_fn(x.copy()))
        if not math.isfinite(f):
            raise NonFiniteCostError(f"cost function returned {f} at evaluation {len(log) + 1}")
        log.append((x.copy(), f))
        if f < best[1]:
            best[0], best[1] = x.copy(), f
        return f

    message = "rho reached rho_end"
    try:
        _run(evaluate, x0, n, config)
    except _BudgetExhausted:
        message = "evaluation budget exhausted"
    return OptimizeResult(best[0], best[1], len(log), log, message)


def _run(evaluate, x0: np.ndarray, n: int, config: OptimizerConfig) -> None:
    rho = config.rho_begin
    X = np.empty((n + 1, n))
    fx = np.empty(n + 1)
    X[0] = x0
    fx[0] = evaluate(x0)
    if n == 0:
        return
    for j in range(n):
        X[j + 1] = x0
        X[j + 1, j] += rho
        fx[j + 1] = evaluate(X[j + 1])

    pole = 0
    after_geometry = False
    poor_step = False
    while True:
        # the best vertex becomes the pole; earlier vertex wins ties
        k = int(np.argmin(fx))
        if fx[k] < fx[pole]:
            pole = k
        others = [j for j in range(n + 1) if j != pole]
        D = X[others] - X[pole]  # rows are edge vectors
        try:
            Dinv = np.linalg.inv(D)  # columns dual to the edges
        except np.linalg.LinAlgError:
            Dinv = None

        if Dinv is not None:
            veta = np.sqrt((D * D).sum(axis=1))
            vsig = 1.0 / np.sqrt((Dinv * Dinv).sum(axis=0))
            acceptable = veta.max() <= _BETA * rho and vsig.min() >= _ALPHA * rho
        else:
            acceptable = False

        if poor_step and acceptable:
            poor_step = False
            if rho <= config.rho_end:
                return
            rho *= 0.5
            if rho <= 1.5 * config.rho_end:
                rho = config.rho_end
            continue

        if not acceptable and not after_geometry:
            poor_step = False
            after_geometry = True
            _geometry_step(evaluate, X, fx, pole, others, D, Dinv, rho)
            continue
        after_geometry = False

        g = np.linalg.solve(D, fx[others] - fx[pole]) if Dinv is not None else None
        gnorm = float(np.linalg.norm(g)) if g is not None else 0.0
        if not gnorm > 0.0:
            # flat model: no step to take at this radius
            poor_step = True
            continue
        dx = -rho * g / gnorm
        predicted = rho * gnorm
        x_new = X[pole] + dx
        f_new = evaluate(x_new)
        reduction = fx[pole] - f_new

        lam = Dinv.T @ dx if Dinv is not None else np.zeros(n)  # barycentric weights of x_new
        edge_max = _DELTA * rho
        scores = np.empty(n + 1)
        dist = np.sqrt(((X - x_new) ** 2).sum(axis=1))
        weight = np.maximum(1.0, dist / edge_max)
        scores[:n] = np.abs(lam) * weight[others]
        if reduction > 0:
            scores[n] = abs(1.0 - lam.sum()) * weight[pole]
            drop = int(np.argmax(scores))
        else:
            scores[n] = -1.0
            drop = int(np.argmax(scores[:n]))
            if scores[drop] <= 1.0:
                drop = -1
        if drop == n:
            X[pole], fx[pole] = x_new, f_new
        elif drop >= 0:
            j = others[drop]
            X[j], fx[j] = x_new, f_new
        poor_step = not (reduction > 0 and reduction >= _ETA * predicted)


def _geometry_step(evaluate, X, fx, pole, others, D, Dinv, rho) -> None:
    """Replace the worst-placed vertex by a point on the dual direction of its edge."""
    n = len(others)
    if Dinv is None:
        # degenerate simplex: rebuild one coordinate step from the pole
        j = others[0]
        dx = np.zeros(n)
        dx[0] = rho
    else:
        veta = np.linalg.norm(D, axis=1)
        vsig = 1.0 / np.linalg.norm(Dinv, axis=0)
        if veta.max() > _BETA * rho:
            drop = int(np.argmax(veta))
        else:
            drop = int(np.argmin(vsig))
        j = others[drop]
        dx = _GAMMA * rho * vsig[drop] * Dinv[:, drop]
        # point the new vertex downhill according to the current model
        g = Dinv @ (fx[others] - fx[pole])
        if g @ dx > 0:
            dx = -dx
    x_new = X[pole] + dx
    X[j] = x_new
    fx[j] = evaluate(x_new)
