"""Closed-form stability thresholds of the square and triangular lattices for LJ-type potentials.

For ``V(r) = a2 r^-t2 - a1 r^-t1`` the sign of the Hessian entries at the two
symmetric lattices reduces to ratios of a few fixed lattice sums:

    S1(s) = sum m^4 / (m^2 + mn + n^2)^s
    S2(s) = sum m^2 / (m^2 + n^2)^s
    S3(s) = sum m^2 n^2 / (m^2 + n^2)^s
    S4(s) = sum (n^2 - m^2)^2 / (m^2 + n^2)^s
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .derivatives import triangular_moment_sums
from .lattice_core import (
    DEFAULT_TOL,
    SQRT3_2,
    ConvergenceError,
    LJParams,
    Term,
    epstein_zeta,
    epstein_zeta_row,
    inverse_power,
    weighted_sums,
)

# square lattice integer weights; |m|, |n| <= |p| at unit area
_SQUARE_WEIGHTS = {
    "m2": Term(0, lambda m, n, a, b: m * m, 1.0, 2),
    "n2": Term(0, lambda m, n, a, b: n * n, 1.0, 2),
    "m2n2": Term(0, lambda m, n, a, b: m * m * n * n, 0.25, 4),
    "m4": Term(0, lambda m, n, a, b: m ** 4, 1.0, 4),
    "n4": Term(0, lambda m, n, a, b: n ** 4, 1.0, 4),
    "s4": Term(0, lambda m, n, a, b: (n * n - m * m) ** 2, 1.0, 4),
}


def square_moments(s: float, names, tol: float = DEFAULT_TOL) -> dict:
    """``sum w(m, n) / (m^2 + n^2)^s`` for the named weights of ``_SQUARE_WEIGHTS``."""
    terms = [_SQUARE_WEIGHTS[k] for k in names]
    vals, _, tails = weighted_sums(inverse_power(s), terms, [0.0], 1.0, 1.0, tol)
    return {k: float(v) for k, v in zip(names, vals[:, 0])}


def S1(s, tol=DEFAULT_TOL):
    if not s > 3:
        raise ValueError(f"S1(s) needs s > 3, got {s}")
    return float(triangular_moment_sums(s, {"m4": (lambda m, n: m ** 4, 4, 0)}, tol)["m4"])


def S2(s, tol=DEFAULT_TOL):
    if not s > 2:
        raise ValueError(f"S2(s) needs s > 2, got {s}")
    return square_moments(s, ["m2"], tol)["m2"]


def S3(s, tol=DEFAULT_TOL):
    if not s > 3:
        raise ValueError(f"S3(s) needs s > 3, got {s}")
    return square_moments(s, ["m2n2"], tol)["m2n2"]


def S4(s, tol=DEFAULT_TOL):
    if not s > 3:
        raise ValueError(f"S4(s) needs s > 3, got {s}")
    return square_moments(s, ["s4"], tol)["s4"]


@dataclass(frozen=True)
class SSumTable:
    s: float
    S1: float
    S2: float
    S3: float
    S4: float
    tail_bound: float


def s_sums(s: float, tol: float = DEFAULT_TOL) -> SSumTable:
    if not s > 3:
        raise ValueError(f"the S-sums need s > 3, got {s}")
    sq = square_moments(s, ["m2", "m2n2", "s4"], tol)
    return SSumTable(s, S1(s, tol), sq["m2"], sq["m2n2"], sq["s4"], tol)


def g_and_k(s: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """``g(s) = S2(s+1) - 2(s+1) S3(s+2)`` and ``k(s) = (s+1) S4(s+2) - 2 S2(s+1)``."""
    if not s > 1:
        raise ValueError(f"g and k are defined for s > 1, got {s}")
    s2 = S2(s + 1, tol)
    hi = square_moments(s + 2, ["m2n2", "s4"], tol)
    return s2 - 2 * (s + 1) * hi["m2n2"], (s + 1) * hi["s4"] - 2 * s2


def h_identity_residual(s: float, tol: float = DEFAULT_TOL) -> float:
    """``|sum m^2 / q^(s+1) - S1(s+2)|`` with ``q = m^2 + mn + n^2``; zero in exact arithmetic."""
    lhs = triangular_moment_sums(s + 1, {"m2": (lambda m, n: m * m, 2, 0)}, tol)["m2"]
    return abs(float(lhs) - S1(s + 2, tol))


def _require_attractive(params: LJParams):
    if params.a1 <= 0:
        raise ValueError("thresholds need a1 > 0 (an attractive part)")


def threshold_A0(params: LJParams = LJParams(), tol: float = DEFAULT_TOL) -> float:
    """Area below which the triangular lattice is a local minimizer (local maximizer above)."""
    _require_attractive(params)
    a1, a2, t1, t2 = params.a1, params.a2, params.t1, params.t2
    ratio = a2 * t2 * (t2 - 1) * S1(t2 + 2, tol) / (a1 * t1 * (t1 - 1) * S1(t1 + 2, tol))
    return SQRT3_2 * ratio ** (1.0 / (t2 - t1))


def thresholds_A1_A2(params: LJParams = LJParams(), tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """Areas bounding the window where the square lattice is a local minimizer."""
    _require_attractive(params)
    a1, a2, t1, t2 = params.a1, params.a2, params.t1, params.t2
    g1, k1 = g_and_k(t1, tol)
    g2, k2 = g_and_k(t2, tol)
    e = 1.0 / (t2 - t1)
    A1 = (a2 * t2 * g2 / (a1 * t1 * g1)) ** e
    A2 = (a2 * t2 * k2 / (a1 * t1 * k1)) ** e
    if not A1 < A2:
        warnings.warn(f"A1={A1:.8g} >= A2={A2:.8g}: the square lattice is never a local minimizer")
    return A1, A2


def global_triangular_condition(params: LJParams) -> bool:
    """``pi^-t2 Gamma(t2) t2 <= pi^-t1 Gamma(t1) t1``: sufficient for a unique triangular global minimizer."""
    lhs = math.pi ** -params.t2 * math.gamma(params.t2) * params.t2
    rhs = math.pi ** -params.t1 * math.gamma(params.t1) * params.t1
    return lhs <= rhs


# ---------------------------------------------------------------------------
# A_BZ: largest area with the triangular lattice as global minimizer


@dataclass(frozen=True)
class ABZResult:
    value: float
    x: float
    y: float
    boundary_min: float  # smallest ratio found on the y = y_max edge


class _Ratio:
    """``(a2 dZ(2 t2) / (a1 dZ(2 t1)))^(1/(t2-t1))`` with ``dZ = zeta_L - zeta_triangular`` at unit area."""

    def __init__(self, params: LJParams, tol: float):
        self.p = params
        self.tol = tol
        tri = (0.5, SQRT3_2, 1.0)
        self.z1 = epstein_zeta(tri, 2 * params.t1, tol).value
        self.z2 = epstein_zeta(tri, 2 * params.t2, tol).value
        self.e = 1.0 / (params.t2 - params.t1)

    def _combine(self, z1, z2):
        d1, d2 = z1 - self.z1, z2 - self.z2
        with np.errstate(divide="ignore", invalid="ignore"):
            r = self.p.a2 * d2 / (self.p.a1 * d1)
        return np.where((d1 > 0) & (r > 0), np.abs(r) ** self.e, np.inf)

    def __call__(self, x, y):
        z1 = epstein_zeta((x, y, 1.0), 2 * self.p.t1, self.tol).value
        z2 = epstein_zeta((x, y, 1.0), 2 * self.p.t2, self.tol).value
        return float(self._combine(z1, z2))

    def row(self, xs, y, tol=None):
        tol = tol or self.tol
        z1 = epstein_zeta_row(xs, y, 2 * self.p.t1, 1.0, tol)
        z2 = epstein_zeta_row(xs, y, 2 * self.p.t2, 1.0, tol)
        return self._combine(z1, z2)


def _near_triangle(x, y, radius):
    return math.hypot(x - 0.5, y - SQRT3_2) < radius


def threshold_A_BZ(
    params: LJParams = LJParams(),
    tol: float = 1e-11,
    y_max: float = 4.0,
    grid: int = 41,
    n_starts: int = 5,
    exclusion: float = 1e-3,
) -> ABZResult:
    """Infimum over unit-area lattices ``L != triangular`` of the zeta-difference ratio.

    Coarse grid over ``D`` cut at ``y_max``, then bounded Nelder-Mead from the
    best grid cells in coordinates ``(x, y - sqrt(1 - x^2))``.
    """
    _require_attractive(params)
    ratio = _Ratio(params, tol)
    xs = np.linspace(0.0, 0.5, grid)
    cells = []
    for y in np.linspace(SQRT3_2, y_max, grid):
        ok = xs * xs + y * y >= 1.0
        ok &= np.hypot(xs - 0.5, y - SQRT3_2) >= 10 * exclusion
        if not ok.any():
            continue
        vals = ratio.row(xs[ok], y, max(tol, 1e-9))
        cells += [(v, x, y) for v, x in zip(vals, xs[ok])]
    # arc points are where rhombic minimizers live; sample them explicitly
    for th in np.linspace(np.pi / 3, np.pi / 2, grid)[1:]:
        x, y = math.cos(th), math.sin(th)
        if not _near_triangle(x, y, 10 * exclusion):
            cells.append((ratio(x, y), x, y))
    cells.sort(key=lambda c: (c[0], c[1], c[2]))

    def objective(z):
        x, s = z
        y = math.sqrt(max(1.0 - x * x, 0.0)) + s
        if _near_triangle(x, y, exclusion):
            return math.inf
        return ratio(x, y)

    best = None
    for v0, x0, y0 in cells[:n_starts]:
        s0 = y0 - math.sqrt(1.0 - x0 * x0)
        res = minimize(
            objective,
            [x0, s0],
            method="Nelder-Mead",
            bounds=[(0.0, 0.5), (0.0, y_max - 1.0)],
            options={"xatol": 1e-9, "fatol": 1e-15, "maxiter": 2000, "initial_simplex": _simplex(x0, s0)},
        )
        if best is None or res.fun < best.fun:
            best = res
    x, s = best.x
    y = math.sqrt(1.0 - x * x) + s
    if _near_triangle(x, y, 1e-2):
        raise ConvergenceError(f"A_BZ minimizer ({x:.6g}, {y:.6g}) collapsed onto the triangular lattice")
    edge = ratio.row(xs[xs * xs + y_max ** 2 >= 1.0], y_max)
    edge_min = float(np.min(edge))
    if edge_min <= best.fun:
        raise ConvergenceError(f"ratio on y={y_max} ({edge_min:.8g}) undercuts the interior minimum")
    return ABZResult(float(best.fun), float(x), float(y), edge_min)


def _simplex(x0, s0, h=0.01):
    x0 = min(max(x0, 0.0), 0.5)
    dx = -h if x0 + h > 0.5 else h
    return np.array([[x0, s0], [x0 + dx, s0], [x0, s0 + h]])


@dataclass(frozen=True)
class ThresholdSet:
    A0: float
    A1: float
    A2: float
    params: LJParams
    A_BZ: float | None = None
    abz: ABZResult | None = field(default=None, repr=False)
    tol: float = DEFAULT_TOL

    @property
    def ordered(self) -> bool:
        return self.A1 < self.A2


def compute_thresholds(params: LJParams = LJParams(), tol: float = DEFAULT_TOL, with_abz: bool = True) -> ThresholdSet:
    A0 = threshold_A0(params, tol)
    A1, A2 = thresholds_A1_A2(params, tol)
    abz = threshold_A_BZ(params, max(tol, 1e-11)) if with_abz else None
    return ThresholdSet(A0, A1, A2, params, abz.value if abz else None, abz, tol)
