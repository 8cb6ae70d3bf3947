"""Energy minimization over the half modular domain at fixed area.

Restricted searches run along the rhombic arc ``x^2 + y^2 = 1`` and the
rectangular edge ``x = 0``; the full search seeds a grid over ``D`` capped at
``y_cap``, polishes the best cells with bounded Nelder-Mead and compares them
with the structured candidates.
"""
from __future__ import annotations

import enum
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .derivatives import grad_energy, grad_x_row
from .lattice_core import (
    SQRT3_2,
    LatticePoint2D,
    LJParams,
    Potential,
    Term,
    epstein_zeta,
    lattice_sum,
    weighted_sums,
)

log = logging.getLogger(__name__)

SHAPE_TOL = 1e-6
Y_CAP_FALLBACK = 50.0
N_SCAN = 200
CLASSICAL = LJParams(2.0, 1.0, 3.0, 6.0)


class Shape(str, enum.Enum):
    Triangular = "Triangular"
    Square = "Square"
    Rectangular = "Rectangular"
    Rhombic = "Rhombic"
    Generic = "Generic"


# lower rank wins ties in energy
_PRECEDENCE = {s: i for i, s in enumerate(Shape)}


class Certainty(str, enum.Enum):
    GridPolished = "GridPolished"
    BoundaryCapped = "BoundaryCapped"


def classify_shape(x: float, y: float, tol: float = SHAPE_TOL) -> Shape:
    if abs(x - 0.5) < tol and abs(y - SQRT3_2) < tol:
        return Shape.Triangular
    if abs(x) < tol and abs(y - 1.0) < tol:
        return Shape.Square
    if abs(x) < tol and y > 1.0 + tol:
        return Shape.Rectangular
    if abs(x * x + y * y - 1.0) < tol:
        return Shape.Rhombic
    return Shape.Generic


@dataclass(frozen=True)
class Candidate:
    x: float
    y: float
    energy: float
    origin: str

    @property
    def shape(self) -> Shape:
        return classify_shape(self.x, self.y)


@dataclass(frozen=True)
class PhasePoint:
    area: float
    minimizer: LatticePoint2D
    shape: Shape
    energy: float
    certainty: Certainty = Certainty.GridPolished
    stationarity: float = 0.0
    candidates: tuple = field(default=(), repr=False, compare=False)

    @property
    def theta_deg(self) -> float | None:
        if self.shape is not Shape.Rhombic:
            return None
        return math.degrees(math.atan2(self.minimizer.y, self.minimizer.x))


# ---------------------------------------------------------------------------
# energy models


class EnergyModel:
    """``(x, y, A) -> E_f(x, y, A)`` for a fixed potential, certified to ``tol``."""

    def __init__(self, potential: Potential, tol: float = 1e-10):
        self.potential = potential
        self.tol = tol

    def energy(self, x: float, y: float, area: float) -> float:
        return lattice_sum(self.potential, (x, y, area), self.tol).value

    def energy_row(self, xs, y: float, area: float, tol: float) -> np.ndarray:
        vals, _, _ = weighted_sums(self.potential, [Term()], xs, y, area, tol)
        return vals[0]

    def gradient(self, x, y, area):
        return grad_energy(self.potential, (x, y, area), self.tol)

    def y_cap(self, area: float) -> float:
        return Y_CAP_FALLBACK


class LJModel(EnergyModel):
    """Lennard-Jones model; screening rows reuse unit-area zeta values through
    ``zeta_{L_A}(s) = A^(-s/2) zeta_{L_1}(s)``."""

    def __init__(self, params: LJParams, tol: float = 1e-10):
        super().__init__(params.potential, tol)
        self.params = params
        self._rows: dict = {}

    def energy_row(self, xs, y, area, tol):
        p = self.params
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        key = (xs.tobytes(), float(y), tol)
        if key not in self._rows:
            z1 = weighted_sums(_inv(p.t1), [Term()], xs, y, 1.0, tol)[0][0]
            z2 = weighted_sums(_inv(p.t2), [Term()], xs, y, 1.0, tol)[0][0]
            if len(self._rows) > 20000:
                self._rows.clear()
            self._rows[key] = (z1, z2)
        z1, z2 = self._rows[key]
        return p.a2 * area ** -p.t2 * z2 - p.a1 * area ** -p.t1 * z1

    def y_cap(self, area):
        if self.params == CLASSICAL:
            b = degeneracy_bounds(area)
            if b.valid:
                return b.X2 ** (1.0 / 3.0) + 1.0
        return Y_CAP_FALLBACK


@functools.lru_cache(maxsize=None)
def _inv(t):
    from .lattice_core import inverse_power

    return inverse_power(t)


ModelLike = Union[LJParams, Potential, EnergyModel]


def as_model(source: ModelLike, tol: float = 1e-10) -> EnergyModel:
    if isinstance(source, EnergyModel):
        return source
    if isinstance(source, LJParams):
        return _lj_model(source, tol)
    if isinstance(source, Potential):
        return EnergyModel(source, tol)
    raise TypeError(f"cannot build an energy model from {type(source).__name__}")


@functools.lru_cache(maxsize=32)
def _lj_model(params, tol):
    return LJModel(params, tol)


# ---------------------------------------------------------------------------
# degeneracy bounds for the classical potential


@functools.lru_cache(maxsize=None)
def square_zetas(tol: float = 1e-12) -> tuple[float, float]:
    """``(zeta_Z2(6), zeta_Z2(12))``."""
    sq = (0.0, 1.0, 1.0)
    return epstein_zeta(sq, 6, tol).value, epstein_zeta(sq, 12, tol).value


@dataclass(frozen=True)
class DegeneracyBounds:
    area: float
    X1: float
    X2: float
    valid: bool
    discriminant: float

    def residuals(self) -> tuple[float, float]:
        return R_poly(self.area, self.X1), R_poly(self.area, self.X2)


def R_poly(area: float, X: float) -> float:
    """``R_A(X) = -2X^2 + 2 zeta(6) A^3 X + zeta(12) A^2 - 4 A^4``."""
    z6, z12 = square_zetas()
    return -2 * X * X + 2 * z6 * area ** 3 * X + z12 * area ** 2 - 4 * area ** 4


def degeneracy_bounds(area: float, tol: float = 1e-12) -> DegeneracyBounds:
    """Roots ``X1 <= X2`` of ``R_A``; the rectangular minimizer satisfies ``X1 <= y_A^3 <= X2`` once valid."""
    if not area > 0:
        raise ValueError(f"area must be positive, got {area}")
    z6, z12 = square_zetas(tol)
    A = float(area)
    disc = 4 * z6 ** 2 * A ** 6 + 8 * (z12 * A ** 2 - 4 * A ** 4)
    if disc <= 0:
        return DegeneracyBounds(A, math.nan, math.nan, False, disc)
    X2 = (2 * z6 * A ** 3 + math.sqrt(disc)) / 4
    # product of the roots; avoids cancellation in the small root
    X1 = (2 * A ** 4 - z12 * A ** 2 / 2) / X2
    return DegeneracyBounds(A, X1, X2, bool(X1 >= 1.0), disc)


# ---------------------------------------------------------------------------
# one-dimensional searches

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section(f, lo, hi, xtol=1e-10, max_iter=200):
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= xtol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _scan_and_refine(f, samples, values, xtol, slack=0.0, n_refine=2):
    """Refine the ``n_refine`` lowest local minima of a sampled curve, endpoints included."""
    values = np.asarray(values)
    k = len(samples)
    local = [
        i
        for i in range(k)
        if (i == 0 or values[i] <= values[i - 1]) and (i == k - 1 or values[i] <= values[i + 1])
    ]
    local.sort(key=lambda i: values[i])
    best = None
    for i in local[:n_refine]:
        lo, hi = samples[max(i - 1, 0)], samples[min(i + 1, k - 1)]
        x, fx = golden_section(f, lo, hi, xtol)
        for end in (samples[0], samples[-1]):
            # critical endpoints: keep them exact when they are at least as good
            if lo <= end <= hi:
                fe = f(end)
                if fe <= fx + slack:
                    x, fx = end, fe
        if best is None or fx < best[1]:
            best = (x, fx)
    return best


def _arc_point(theta_deg):
    t = math.radians(theta_deg)
    if theta_deg == 90.0:
        return 0.0, 1.0
    if theta_deg == 60.0:
        return 0.5, SQRT3_2
    return math.cos(t), math.sin(t)


def minimize_rhombic(source: ModelLike, area: float, tol: float = 1e-10) -> tuple[float, float]:
    """Best angle (degrees, in [60, 90]) among rhombic lattices of the given area, and its energy."""
    model = as_model(source, tol)
    thetas = np.linspace(60.0, 90.0, N_SCAN)
    screen = [model.energy_row([_arc_point(t)[0]], _arc_point(t)[1], area, 1e-8)[0] for t in thetas]
    f = lambda t: model.energy(*_arc_point(t), area)
    th, e = _scan_and_refine(f, thetas, screen, xtol=1e-7, slack=2 * tol)
    return float(th), float(e)


def minimize_rectangular(source: ModelLike, area: float, tol: float = 1e-10, y_cap: float | None = None):
    """Best ``y`` in ``[1, y_cap]`` among rectangular lattices; returns ``(y, energy, capped)``."""
    model = as_model(source, tol)
    cap = model.y_cap(area) if y_cap is None else y_cap
    ys = np.linspace(1.0, cap, N_SCAN)
    screen = [model.energy_row([0.0], y, area, 1e-8)[0] for y in ys]
    f = lambda y: model.energy(0.0, y, area)
    y, e = _scan_and_refine(f, ys, screen, xtol=1e-9, slack=2 * tol)
    return float(y), float(e), bool(y >= cap - 1e-6)


# ---------------------------------------------------------------------------
# full search


def _grid_rows(cap, n):
    # geometric spacing in y resolves the small-y region where the phases live
    return np.geomspace(SQRT3_2, cap, n)


def _polish(model, area, cap, x0, y0):
    s0 = max(y0 - math.sqrt(max(1.0 - x0 * x0, 0.0)), 0.0)
    smax = cap - 1.0

    def obj(z):
        x, s = z
        return model.energy(x, math.sqrt(max(1.0 - x * x, 0.0)) + s, area)

    h = 0.02
    simplex = np.array([[x0, s0], [x0 - h if x0 + h > 0.5 else x0 + h, s0], [x0, s0 + h if s0 + h <= smax else s0 - h]])
    res = minimize(
        obj,
        [x0, s0],
        method="Nelder-Mead",
        bounds=[(0.0, 0.5), (0.0, smax)],
        options={"xatol": 1e-9, "fatol": 1e-14, "maxiter": 800, "initial_simplex": simplex},
    )
    x, s = res.x
    return float(x), float(math.sqrt(max(1.0 - x * x, 0.0)) + s), float(res.fun)


_EXACT = ("triangular", "square")


def _select(cands: Sequence[Candidate], tol: float) -> Candidate:
    # energies are certified to tol each, so closer candidates are tied
    emin = min(c.energy for c in cands)
    eps = 2.0 * tol + 64 * np.finfo(float).eps * max(1.0, abs(emin))
    close = [c for c in cands if c.energy <= emin + eps]
    # exact structured points beat polished copies of themselves
    return min(close, key=lambda c: (_PRECEDENCE[c.shape], c.origin not in _EXACT, c.energy, c.x, c.y))


def _stationarity(model, c: Candidate, area) -> float:
    g = model.gradient(c.x, c.y, area)
    if c.shape is Shape.Rhombic:
        # tangential derivative along the arc
        return abs(-c.y * g.dE_dx + c.x * g.dE_dy)
    if c.shape is Shape.Generic:
        gx = g.dE_dx if 0.0 < c.x < 0.5 else 0.0
        return math.hypot(gx, g.dE_dy)
    return abs(g.dE_dy) if c.shape is Shape.Rectangular else g.norm()


def minimize_full(source: ModelLike, area: float, tol: float = 1e-10, grid: int = 60, n_polish: int = 3) -> PhasePoint:
    """Global minimizer of ``(x, y) -> E(x, y, A)`` over ``D`` with ``y <= y_cap``."""
    if not area > 0:
        raise ValueError(f"area must be positive, got {area}")
    model = as_model(source, tol)
    cap = model.y_cap(area)

    cands = [
        Candidate(0.5, SQRT3_2, model.energy(0.5, SQRT3_2, area), "triangular"),
        Candidate(0.0, 1.0, model.energy(0.0, 1.0, area), "square"),
    ]
    yr, er, _ = minimize_rectangular(model, area, tol, cap)
    cands.append(Candidate(0.0, yr, er, "rectangular"))
    th, eh = minimize_rhombic(model, area, tol)
    cands.append(Candidate(*_arc_point(th), eh, "rhombic"))

    xs = np.linspace(0.0, 0.5, grid)
    cells = []
    for y in _grid_rows(cap, grid):
        ok = xs * xs + y * y >= 1.0
        if ok.any():
            e = model.energy_row(xs[ok], y, area, 1e-8)
            cells += list(zip(e, xs[ok], np.full(ok.sum(), y)))
    cells.sort(key=lambda c: (c[0], c[1], c[2]))
    for _, x0, y0 in cells[:n_polish]:
        x, y, e = _polish(model, area, cap, x0, y0)
        cands.append(Candidate(x, y, e, "polished"))

    best = _select(cands, tol)
    stat = _stationarity(model, best, area)
    if stat > 1e-7 * max(1.0, abs(best.energy)):
        log.warning("A=%g: gradient check %.3g at (%.9g, %.9g)", area, stat, best.x, best.y)
    capped = best.y >= cap - 1e-6
    return PhasePoint(
        area=float(area),
        minimizer=LatticePoint2D(best.x, best.y, area),
        shape=best.shape,
        energy=best.energy,
        certainty=Certainty.BoundaryCapped if capped else Certainty.GridPolished,
        stationarity=stat,
        candidates=tuple(cands),
    )


def verify_global_min_at_unit_area(source: ModelLike = CLASSICAL, tol: float = 1e-10, area: float = 1.0) -> bool:
    """True iff the triangular lattice beats every other polished local minimum at ``area``."""
    pp = minimize_full(source, area, tol)
    if pp.shape is not Shape.Triangular:
        return False
    others = [c for c in pp.candidates if math.hypot(c.x - 0.5, c.y - SQRT3_2) > 1e-4]
    return all(c.energy > pp.energy + tol for c in others)


# ---------------------------------------------------------------------------
# large-area sign check


@dataclass(frozen=True)
class RankinReport:
    area: float
    min_value: float
    argmin: tuple[float, float]
    n_points: int
    n_negative: int  # points with dE/dx < -tol
    tol: float

    @property
    def nonnegative(self) -> bool:
        return self.n_negative == 0


def rankin_sign_check(area: float, grid: int = 100, source: ModelLike = CLASSICAL, tol: float = 1e-13) -> RankinReport:
    """Sign of ``dE/dx`` on a grid of ``D`` with ``0 < x <= 1/2`` and ``y <= y_cap``."""
    model = as_model(source)
    cap = model.y_cap(area)
    xs = np.arange(1, grid + 1) / (2.0 * grid)
    best, arg, count, neg = math.inf, (math.nan, math.nan), 0, 0
    for y in _grid_rows(cap, grid):
        ok = xs * xs + y * y >= 1.0
        if not ok.any():
            continue
        g = grad_x_row(model.potential, xs[ok], y, area, tol)
        count += len(g)
        neg += int(np.sum(g < -tol))
        i = int(np.argmin(g))
        if g[i] < best:
            best, arg = float(g[i]), (float(xs[ok][i]), float(y))
    return RankinReport(float(area), best, arg, count, neg, tol)


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRow:
    area: float
    point: PhasePoint | None
    error: str | None = None


def phase_sweep(source: ModelLike, areas: Sequence[float], tol: float = 1e-10) -> list[SweepRow]:
    """One ``minimize_full`` per area; failures are recorded per row instead of raised."""
    if len(areas) == 0:
        raise ValueError("empty area list")
    rows = []
    for A in areas:
        try:
            rows.append(SweepRow(float(A), minimize_full(source, A, tol)))
        except Exception as exc:  # noqa: BLE001 - per-row failures are part of the contract
            log.error("A=%g failed: %s", A, exc)
            rows.append(SweepRow(float(A), None, f"{type(exc).__name__}: {exc}"))
    return rows


def sweep_diagnostics(rows: Sequence[SweepRow]) -> dict:
    """Monotonicity of theta_A within the rhombic band and of y_A within the rectangular band."""
    pts = sorted((r.point for r in rows if r.point is not None), key=lambda p: p.area)
    th = [p.theta_deg for p in pts if p.shape is Shape.Rhombic]
    yr = [p.minimizer.y for p in pts if p.shape is Shape.Rectangular]
    order = []
    for p in pts:
        if not order or order[-1] != p.shape.value:
            order.append(p.shape.value)
    return {
        "theta_nondecreasing": all(b >= a - 1e-6 for a, b in zip(th, th[1:])),
        "y_nondecreasing": all(b >= a - 1e-6 for a, b in zip(yr, yr[1:])),
        "phase_order": order,
    }


def locate_transition(source: ModelLike, lo: float, hi: float, tol: float = 1e-10, dA: float = 1e-5):
    """Bisect on the shape label between two areas with different minimizer shapes."""
    s_lo = minimize_full(source, lo, tol).shape
    s_hi = minimize_full(source, hi, tol).shape
    if s_lo == s_hi:
        raise ValueError(f"same shape {s_lo.value} at both ends of [{lo}, {hi}]")
    while hi - lo > dA:
        mid = 0.5 * (lo + hi)
        if minimize_full(source, mid, tol).shape == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), s_lo, s_hi
