"""Derivative-free trust-region minimizer over a linear simplex model.

This is an unconstrained variant of Powell's COBYLA scheme. The state is a
simplex of n + 1 points: a pole (the incumbent) plus n offset vertices. Each
iteration interpolates a linear model of the objective through the simplex,
steps the trust-region radius ``rho`` along the model's steepest descent
direction, and absorbs the evaluated point back into the simplex when doing
so keeps the geometry healthy. When a step fails to achieve a tenth of the
predicted decrease, the simplex is first repaired if it has degenerated
(vertex too far from the pole, or too close to the span of the others), and
``rho`` is halved only once the geometry is sound, so model failures are
never misread as convergence. Termination: a reduction request arriving with
``rho`` already at ``rhoend``.

The objective is treated as deterministic. Callers with a stochastic
objective should fix the noise realization per run (common random numbers)
so that repeated evaluations of nearby points are consistent; fresh noise on
every call makes any simplex-model method chase phantom gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["CobylaResult", "OptimizerError", "minimize_cobyla"]

# Simplex-quality and step-control constants (Powell's published values).
_ALPHA = 0.25  # vertex width below alpha*rho marks the simplex too flat
_BETA = 2.1  # vertex farther than beta*rho from the pole marks it too long
_GAMMA = 0.5  # geometry-repair steps have length gamma*rho
_DELTA = 1.1  # absorbing a step retires vertices farther than delta*rho
_POOR = 0.1  # actual/predicted decrease below this ratio is a poor step


class OptimizerError(ValueError):
    """Raised when the optimizer is configured inconsistently."""


class _BudgetExhausted(Exception):
    pass


@dataclass(frozen=True)
class CobylaResult:
    """Outcome of a minimization run.

    ``x`` and ``fun`` are the best point ever evaluated, which is not
    necessarily the final pole. ``converged`` is True when the trust region
    contracted to ``rhoend``; False means the evaluation budget ran out.
    """

    x: np.ndarray
    fun: float
    nfev: int
    converged: bool
    rho_final: float


def minimize_cobyla(
    func: Callable[[np.ndarray], float],
    x0: np.ndarray,
    rhobeg: float = 0.5,
    rhoend: float = 1e-3,
    maxfun: int = 500,
) -> CobylaResult:
    """Minimize ``func`` from ``x0`` without derivatives.

    ``rhobeg`` is both the initial trust-region radius and the edge length
    of the initial axis-aligned simplex; ``rhoend`` is the resolution at
    which the search stops. ``maxfun`` caps objective evaluations.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.ndim != 1 or x0.size < 1:
        raise OptimizerError("x0 must be a nonempty 1-d array")
    if not (0.0 < rhoend < rhobeg):
        raise OptimizerError("need 0 < rhoend < rhobeg")
    n = x0.size
    if maxfun < n + 2:
        raise OptimizerError(f"maxfun must be at least n + 2 = {n + 2}")

    nfev = 0
    best_x = x0.copy()
    best_f = np.inf

    def call(x: np.ndarray) -> float:
        nonlocal nfev, best_x, best_f
        if nfev >= maxfun:
            raise _BudgetExhausted
        f = float(func(x.copy()))
        nfev += 1
        if f < best_f:
            best_f = f
            best_x = x.copy()
        return f

    rho = float(rhobeg)
    converged = False

    try:
        # Initial simplex: pole plus one offset vertex per axis. The pole
        # tracks the best point seen so far during the build, so later
        # vertices are probed from the most promising corner.
        pole = x0.copy()
        fpole = call(pole)
        sim = np.zeros((n, n))  # row j = offset of vertex j from the pole
        fsim = np.zeros(n)
        for j in range(n):
            step = np.zeros(n)
            step[j] = rhobeg
            f_new = call(pole + step)
            if f_new < fpole:
                sim[: j + 1] -= step
                sim[j] = -step
                fsim[j] = fpole
                pole = pole + step
                fpole = f_new
            else:
                sim[j] = step
                fsim[j] = f_new

        # In trust-region mode a model step is taken even when the simplex
        # geometry is degraded; the flag drops only after a poor step, which
        # is the one moment repairing geometry is worth an evaluation.
        tr_mode = True

        while True:
            # Keep the incumbent at the pole.
            j_min = int(np.argmin(fsim))
            if fsim[j_min] < fpole:
                shift = sim[j_min].copy()
                pole = pole + shift
                fpole, fsim[j_min] = fsim[j_min], fpole
                sim -= shift
                sim[j_min] = -shift

            # Dual vectors (columns of the inverse offset matrix) give each
            # vertex's width: its distance from the span of the others. A
            # nearly flat simplex shows up as an exploding dual, hence a
            # width near zero, and is caught by the acceptability test.
            try:
                simi = np.linalg.inv(sim)
            except np.linalg.LinAlgError:
                simi = None
            if simi is None or not np.isfinite(simi).all():
                _repair_singular(call, pole, fpole, sim, fsim, rho)
                tr_mode = False
                continue
            widths = 1.0 / np.linalg.norm(simi, axis=0)
            spreads = np.linalg.norm(sim, axis=1)
            acceptable = (
                widths.min() >= _ALPHA * rho and spreads.max() <= _BETA * rho
            )

            if not tr_mode and not acceptable:
                # Geometry repair: rebuild the worst vertex half a radius
                # from the pole along its own dual direction, signed downhill
                # on the current model.
                if spreads.max() > _BETA * rho:
                    j_bad = int(np.argmax(spreads))
                else:
                    j_bad = int(np.argmin(widths))
                dx = (_GAMMA * rho * widths[j_bad]) * simi[:, j_bad]
                grad = simi @ (fsim - fpole)
                if grad @ dx > 0.0:
                    dx = -dx
                fsim[j_bad] = call(pole + dx)
                sim[j_bad] = dx
                continue

            tr_mode = True
            grad = simi @ (fsim - fpole)
            gnorm = float(np.linalg.norm(grad))
            if not np.isfinite(gnorm) or gnorm <= 1e-15 * max(1.0, abs(fpole)):
                # Flat model: nothing to step along. Repair or resolve.
                if not acceptable:
                    tr_mode = False
                    continue
                if rho > rhoend:
                    rho = _shrink(rho, rhoend)
                    continue
                converged = True
                break

            dx = (-rho / gnorm) * grad
            predicted = rho * gnorm
            f_new = call(pole + dx)
            actual = fpole - f_new

            # Absorb the step. A non-improving point gets in only where it
            # grows the simplex volume; either way prefer retiring a distant
            # vertex whose replacement keeps the vertex widths adequate.
            coeffs = np.abs(dx @ simi)
            threshold = 0.0 if actual > 0.0 else 1.0
            j_drop = int(np.argmax(coeffs)) if coeffs.max() > threshold else -1
            new_widths = coeffs * widths
            eligible = (new_widths >= _ALPHA * rho) | (new_widths >= widths)
            dists = (
                np.linalg.norm(sim - dx, axis=1) if actual > 0.0 else spreads
            )
            far = eligible & (dists > _DELTA * rho)
            if np.any(far):
                masked = np.where(far, dists, -np.inf)
                j_drop = int(np.argmax(masked))
            if j_drop >= 0:
                sim[j_drop] = dx
                fsim[j_drop] = f_new

            if actual > 0.0 and actual >= _POOR * predicted:
                continue
            if not acceptable:
                tr_mode = False
                continue
            if rho > rhoend:
                rho = _shrink(rho, rhoend)
                continue
            converged = True
            break
    except _BudgetExhausted:
        converged = False

    return CobylaResult(
        x=best_x, fun=best_f, nfev=nfev, converged=converged, rho_final=rho
    )


def _shrink(rho: float, rhoend: float) -> float:
    rho *= 0.5
    # Snap to rhoend rather than straddling it with one more halving.
    return rhoend if rho <= 1.5 * rhoend else rho


def _repair_singular(call, pole, fpole, sim, fsim, rho) -> None:
    """Rebuild one vertex of an exactly singular simplex.

    Numerically this is almost unreachable (the acceptability test repairs
    near-flat simplices first), but an exact rank drop would make ``inv``
    fail, so restore volume along the lost direction.
    """
    u_mat, svals, vt = np.linalg.svd(sim)
    lost = vt[-1]
    # The vertex contributing least to the surviving directions is rebuilt.
    j_bad = int(np.argmin(np.abs(u_mat[:, : max(1, np.count_nonzero(svals > 0))]).sum(axis=1)))
    dx = (_GAMMA * rho) * lost
    duals = np.linalg.pinv(sim)
    grad = duals @ (fsim - fpole)
    if grad @ dx > 0.0:
        dx = -dx
    fsim[j_bad] = call(pole + dx)
    sim[j_bad] = dx
