"""Analytic leakage-probability model and the optimal blockade shift.

The relative probability of exciting harmful leakage states during the gate,

    P(b) = 1/((n+1)^3 (D1+b)^2) + 1/((n-1)^3 (D1-b)^2)
         + 1/(n'^3 (D2-b)^2)    + 1/(n''^3 (D2+b)^2)    + 1/(n^3 b^2),

combines the 1/n^3 matrix-element scaling with the 1/detuning^2 excitation
probability of each channel; b is the blockade shift.  D1 and D2 are effective
detunings formed from magnitudes of the tabulated values (the raw signed
averages would nearly cancel), so both are positive and the poles sit at
b = D1 and b = D2.  The model is relative: it locates optima, never absolute
error magnitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BlockadeError, ConfigError
from .params import PhysicalSetting


@dataclass(frozen=True)
class LeakModel:
    n: int
    n_prime: int
    n_dprime: int
    delta1: float  # mean |detuning| of the (n +/- 1)p states (rad/ns)
    delta2: float  # mean |detuning| of the n'p and n''p states (rad/ns)


def leak_model(setting: PhysicalSetting) -> LeakModel:
    delta1 = 0.5 * (abs(setting.delta_plus) + abs(setting.delta_minus))
    delta2 = 0.25 * (abs(setting.delta_p1_half) + abs(setting.delta_p3_half)
                     + abs(setting.delta_pp1_half) + abs(setting.delta_pp3_half))
    return LeakModel(setting.n, setting.n_prime, setting.n_dprime, delta1, delta2)


def _check_pole(model: LeakModel, b0: float) -> None:
    if b0 <= 0.0:
        raise BlockadeError("blockade shift must be positive")
    scale = min(model.delta1, model.delta2)
    if abs(b0 - model.delta1) < 1e-12 * scale:
        raise BlockadeError(
            f"b0 = {b0:.6g} rad/ns hits the (n-1)p resonance at Delta1; "
            "that leakage transition would be driven resonantly"
        )
    if abs(b0 - model.delta2) < 1e-12 * scale:
        raise BlockadeError(
            f"b0 = {b0:.6g} rad/ns hits the n'p resonance at Delta2; "
            "that leakage transition would be driven resonantly"
        )


def leak_probability(model: LeakModel, b0: float) -> float:
    """Relative leakage probability at blockade shift b0 (arbitrary units)."""
    _check_pole(model, b0)
    n, np_, ndp = model.n, model.n_prime, model.n_dprime
    d1, d2 = model.delta1, model.delta2
    return (
        1.0 / ((n + 1) ** 3 * (d1 + b0) ** 2)
        + 1.0 / ((n - 1) ** 3 * (d1 - b0) ** 2)
        + 1.0 / (np_**3 * (d2 - b0) ** 2)
        + 1.0 / (ndp**3 * (d2 + b0) ** 2)
        + 1.0 / (n**3 * b0**2)
    )


def leak_derivative(model: LeakModel, b0: float) -> float:
    """Analytic d P / d b0."""
    _check_pole(model, b0)
    n, np_, ndp = model.n, model.n_prime, model.n_dprime
    d1, d2 = model.delta1, model.delta2
    return (
        -2.0 / ((n + 1) ** 3 * (d1 + b0) ** 3)
        + 2.0 / ((n - 1) ** 3 * (d1 - b0) ** 3)
        + 2.0 / (np_**3 * (d2 - b0) ** 3)
        - 2.0 / (ndp**3 * (d2 + b0) ** 3)
        - 2.0 / (n**3 * b0**3)
    )


def optimal_blockade(model: LeakModel, bracket: tuple[float, float] | None = None,
                     scan_points: int = 512) -> float:
    """Interior minimizer of the leakage probability.

    Bisects the analytic derivative inside ``bracket`` (default: well inside
    (0, min(D1, D2)), away from both poles), then cross-checks against a dense
    scan.  Raises BlockadeError when the derivative has no sign change in the
    bracket.
    """
    upper = min(model.delta1, model.delta2)
    if bracket is None:
        bracket = (0.02 * upper, 0.98 * upper)
    lo, hi = bracket
    if not (0.0 < lo < hi < min(model.delta1, model.delta2)):
        raise ConfigError("bracket must lie inside (0, min(Delta1, Delta2))")
    d_lo, d_hi = leak_derivative(model, lo), leak_derivative(model, hi)
    if d_lo >= 0.0 or d_hi <= 0.0:
        grid = np.linspace(lo, hi, scan_points)
        values = [leak_probability(model, b) for b in grid]
        b_scan = grid[int(np.argmin(values))]
        raise BlockadeError(
            f"dP/db has no sign change in [{lo:.6g}, {hi:.6g}] "
            f"(d(lo) = {d_lo:.3e}, d(hi) = {d_hi:.3e}); "
            f"dense scan puts the minimum near b0 = {b_scan:.6g} rad/ns"
        )
    while hi - lo > 1e-15 * hi:
        mid = 0.5 * (lo + hi)
        if leak_derivative(model, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    b_star = 0.5 * (lo + hi)

    grid = np.linspace(bracket[0], bracket[1], scan_points)
    p_star = leak_probability(model, b_star)
    p_grid = np.array([leak_probability(model, b) for b in grid])
    if p_star > p_grid.min() * (1.0 + 1e-9):
        raise BlockadeError(
            f"bisection result b0 = {b_star:.6g} is not the scan minimum "
            f"(scan min at {grid[int(np.argmin(p_grid))]:.6g})"
        )
    return b_star


def flatness_window(model: LeakModel, b_star: float, factor: float = 1.1,
                    bracket: tuple[float, float] | None = None,
                    scan_points: int = 2048) -> tuple[float, float]:
    """Contiguous region around the optimum where P <= factor * P(b*)."""
    upper = min(model.delta1, model.delta2)
    if bracket is None:
        bracket = (0.02 * upper, 0.98 * upper)
    grid = np.linspace(bracket[0], bracket[1], scan_points)
    p = np.array([leak_probability(model, b) for b in grid])
    threshold = factor * leak_probability(model, b_star)
    inside = p <= threshold
    i_star = int(np.argmin(np.abs(grid - b_star)))
    lo = i_star
    while lo > 0 and inside[lo - 1]:
        lo -= 1
    hi = i_star
    while hi < scan_points - 1 and inside[hi + 1]:
        hi += 1
    return float(grid[lo]), float(grid[hi])
