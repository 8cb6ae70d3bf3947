"""First and second derivatives of ``(x, y) -> E_f(x, y, A)`` and stability at the two symmetric lattices.

All derivative sums are truncated and certified on their own, term by term,
rather than obtained by differentiating a truncated energy.  In Cartesian
coordinates ``a = sqrt(A/y)(m + x n)``, ``b = sqrt(A y) n`` of a lattice vector:

    dE/dx   = (2/y)    sum a b f'
    dE/dy   = -(1/y)   sum (a^2 - b^2) f'
    d2E/dx2 = (2/y^2)  sum b^2 f'  + (4/y^2) sum a^2 b^2 f''
    d2E/dy2 = (2/y^2)  sum a^2 f'  + (1/y^2) sum (b^2 - a^2)^2 f''
    d2E/dxy = -(2/y^2) sum a b f'  + (2/y^2) sum a b (b^2 - a^2) f''
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .lattice_core import (
    DEFAULT_TOL,
    SQRT3_2,
    LatticePoint2D,
    PointLike,
    Potential,
    Term,
    _coords,
    inverse_power,
    weighted_sums,
)

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class Gradient2:
    dE_dx: float
    dE_dy: float

    def norm(self) -> float:
        return math.hypot(self.dE_dx, self.dE_dy)


@dataclass(frozen=True)
class Hessian2:
    dxx: float
    dyy: float
    dxy: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.dxx, self.dxy], [self.dxy, self.dyy]])

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix())


class Verdict(str, enum.Enum):
    LocalMin = "LocalMin"
    LocalMax = "LocalMax"
    Saddle = "Saddle"
    Degenerate = "Degenerate"


class Special(str, enum.Enum):
    Square = "Square"
    Triangular = "Triangular"


@dataclass(frozen=True)
class StabilityReport:
    point: LatticePoint2D
    hessian: Hessian2
    verdict: Verdict
    margin: float


# weights in terms of Cartesian coordinates; |w| <= coef * |p|**degree
_AB = Term(1, lambda m, n, a, b: a * b, 0.5, 2)
_A2_B2 = Term(1, lambda m, n, a, b: a * a - b * b, 1.0, 2)
_B2 = Term(1, lambda m, n, a, b: b * b, 1.0, 2)
_A2 = Term(1, lambda m, n, a, b: a * a, 1.0, 2)
_A2B2 = Term(2, lambda m, n, a, b: a * a * b * b, 0.25, 4)
_B2_A2_SQ = Term(2, lambda m, n, a, b: (b * b - a * a) ** 2, 1.0, 4)
_AB_MIX = Term(2, lambda m, n, a, b: a * b * (b * b - a * a), 0.25, 4)
_AB_F2 = Term(1, lambda m, n, a, b: a * b, 0.5, 2)


def grad_energy(f: Potential, p: PointLike, tol: float = DEFAULT_TOL, radius: float | None = None) -> Gradient2:
    """Gradient of the lattice energy in the modular coordinates.

    A fixed ``radius`` overrides the certified truncation (used for finite-difference stencils).
    """
    x, y, area = _coords(p)
    (sab, sa2b2), _, _ = weighted_sums(f, [_AB, _A2_B2], [x], y, area, tol * y / 2.0, radius=radius)
    return Gradient2(2.0 / y * sab[0], -sa2b2[0] / y)


def grad_x_row(f: Potential, xs, y: float, area: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``dE/dx`` for many ``x`` sharing ``y`` and the area."""
    vals, _, _ = weighted_sums(f, [_AB], xs, y, area, tol * y / 2.0)
    return 2.0 / y * vals[0]


_HESS_TERMS = [_B2, _A2B2, _A2, _B2_A2_SQ, _AB_F2, _AB_MIX]


def hessian_energy(f: Potential, p: PointLike, tol: float = DEFAULT_TOL, radius: float | None = None) -> Hessian2:
    x, y, area = _coords(p)
    s, _, _ = weighted_sums(f, _HESS_TERMS, [x], y, area, tol * y * y / 8.0, radius=radius)
    s = s[:, 0]
    y2 = y * y
    return Hessian2(
        dxx=(2.0 * s[0] + 4.0 * s[1]) / y2,
        dyy=(2.0 * s[2] + s[3]) / y2,
        dxy=(-2.0 * s[4] + 2.0 * s[5]) / y2,
    )


def square_hessian_diagonal(f: Potential, area: float, tol: float = DEFAULT_TOL) -> tuple[float, float]:
    """``(K1, K2)`` with ``d2E/dx2(0,1,A) = 2A K1`` and ``d2E/dy2(0,1,A) = A K2``.

    Evaluated directly as integer-weighted sums over ``m^2 + n^2``.
    """
    A = float(area)
    terms = [
        Term(1, lambda m, n, a, b: n * n, 1.0 / A, 2),
        Term(2, lambda m, n, a, b: m * m * n * n, 0.25 / A ** 2, 4),
        Term(1, lambda m, n, a, b: m * m, 1.0 / A, 2),
        Term(2, lambda m, n, a, b: (n * n - m * m) ** 2, 1.0 / A ** 2, 4),
    ]
    s, _, _ = weighted_sums(f, terms, [0.0], 1.0, A, tol / (4.0 * max(1.0, A)))
    s = s[:, 0]
    return s[0] + 2.0 * A * s[1], 2.0 * s[2] + A * s[3]


def triangular_hessian_entry(f: Potential, area: float, tol: float = DEFAULT_TOL) -> float:
    """``T_f(A) = d2E/dx2 = d2E/dy2`` at ``(1/2, sqrt(3)/2)``, as integer sums over ``m^2 + mn + n^2``."""
    A = float(area)
    ay = A * SQRT3_2
    terms = [
        Term(1, lambda m, n, a, b: n * n, 1.0 / ay, 2),
        Term(2, lambda m, n, a, b: n ** 4, 1.0 / ay ** 2, 4),
    ]
    c1, c2 = 4.0 * A / SQRT3, 4.0 * A * A / 3.0
    s, _, _ = weighted_sums(f, terms, [0.5], SQRT3_2, A, tol / (2.0 * max(c1, c2, 1.0)))
    return c1 * s[0, 0] + c2 * s[1, 0]


def _verdict(h: Hessian2, tol: float) -> tuple[Verdict, float]:
    ev = h.eigenvalues()
    margin = float(np.min(np.abs(ev)))
    scale = abs(h.dxx) + abs(h.dyy)
    if margin < max(1e-9 * scale, 10.0 * tol):
        return Verdict.Degenerate, margin
    if ev[0] > 0:
        return Verdict.LocalMin, margin
    if ev[1] < 0:
        return Verdict.LocalMax, margin
    return Verdict.Saddle, margin


def classify_point(f: Potential, which: Special | str, area: float, tol: float = DEFAULT_TOL) -> StabilityReport:
    """Local nature of the square or triangular lattice of the given area."""
    which = Special(which)
    if which is Special.Square:
        p = LatticePoint2D.square(area)
    else:
        p = LatticePoint2D.triangular(area)
    h = hessian_energy(f, p, tol)
    verdict, margin = _verdict(h, tol)
    return StabilityReport(p, h, verdict, margin)


def area_sign_change(f: Potential, which: str, bracket=(0.5, 2.0), tol: float = 1e-11, xtol: float = 1e-12) -> float:
    """Area where ``T_f`` (``which='T'``), ``K1`` or ``K2`` changes sign inside ``bracket``."""
    if which == "T":
        fn = lambda A: triangular_hessian_entry(f, A, tol)
    elif which == "K1":
        fn = lambda A: square_hessian_diagonal(f, A, tol)[0]
    elif which == "K2":
        fn = lambda A: square_hessian_diagonal(f, A, tol)[1]
    else:
        raise ValueError(f"unknown quantity {which!r}")
    lo, hi = bracket
    if np.sign(fn(lo)) == np.sign(fn(hi)):
        raise ValueError(f"{which} has no sign change on [{lo}, {hi}]")
    return brentq(fn, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)


# lattice of q(m, n) = m^2 + mn + n^2: x = 1/2, y = sqrt(3)/2, A = sqrt(3)/2
_CN = 1.0 / math.sqrt(0.75)
_CM = 1.0 + 0.5 * _CN


def triangular_moment_sums(s: float, weights: dict, tol: float = DEFAULT_TOL) -> dict:
    """``sum w(m, n) q(m, n)**-s`` over ``(m, n) != 0`` for integer-polynomial weights.

    ``weights`` maps a label to ``(callable(m, n), m_degree, n_degree)``.
    """
    terms = [
        Term(0, lambda m, n, a, b, w=w: w(m, n), _CM ** dm * _CN ** dn, dm + dn)
        for w, dm, dn in weights.values()
    ]
    vals, _, _ = weighted_sums(inverse_power(s), terms, [0.5], SQRT3_2, SQRT3_2, tol)
    return dict(zip(weights, vals[:, 0]))


def check_latsum_identities(s: float, tol: float = DEFAULT_TOL) -> tuple[float, float, float]:
    """Residuals of the three moment identities of ``q = m^2 + mn + n^2`` with ``F(q) = q^-s``::

        sum mn F     = -1/2 sum n^2 F
        sum n^3 m F  = -1/2 sum n^4 F
        sum m^2n^2 F =  1/2 sum n^4 F
    """
    if not s > 3:
        raise ValueError(f"the quartic moments need s > 3, got {s}")
    t = triangular_moment_sums(
        s,
        {
            "mn": (lambda m, n: m * n, 1, 1),
            "n2": (lambda m, n: n * n, 0, 2),
            "n3m": (lambda m, n: n ** 3 * m, 1, 3),
            "n4": (lambda m, n: n ** 4, 0, 4),
            "m2n2": (lambda m, n: m * m * n * n, 2, 2),
        },
        tol,
    )
    return (
        abs(t["mn"] + 0.5 * t["n2"]),
        abs(t["n3m"] + 0.5 * t["n4"]),
        abs(t["m2n2"] - 0.5 * t["n4"]),
    )


def finite_difference_errors(f: Potential, p: PointLike, h: float = 1e-5, tol: float = 1e-9) -> tuple[float, float]:
    """Mixed errors ``|analytic - fd| / (1 + |fd|)``, maximized over components, for the gradient and the Hessian.

    Every evaluation shares one truncation radius (certified for ``tol`` on the
    whole stencil), so the truncated energy is a smooth function of ``(x, y)``
    and the differences see no truncation noise. The Hessian stencil
    differentiates the analytic gradient.
    """
    x, y, area = _coords(p)
    hx, hy = h * max(1.0, abs(x)), h * max(1.0, abs(y))
    # the stencil point with the largest cell radius sets the truncation
    _, radius, _ = weighted_sums(f, _HESS_TERMS, [x + hx], y + hy, area, tol * (y - hy) ** 2 / 8.0)
    E = lambda u, v: weighted_sums(f, [Term()], [u], v, area, radius=radius)[0][0, 0]
    G = lambda u, v: grad_energy(f, (u, v, area), radius=radius)
    fd_g = ((E(x + hx, y) - E(x - hx, y)) / (2 * hx), (E(x, y + hy) - E(x, y - hy)) / (2 * hy))
    gxp, gxm, gyp, gym = G(x + hx, y), G(x - hx, y), G(x, y + hy), G(x, y - hy)
    fd_h = (
        (gxp.dE_dx - gxm.dE_dx) / (2 * hx),
        (gyp.dE_dy - gym.dE_dy) / (2 * hy),
        0.5 * ((gxp.dE_dy - gxm.dE_dy) / (2 * hx) + (gyp.dE_dx - gym.dE_dx) / (2 * hy)),
    )
    g = G(x, y)
    H = hessian_energy(f, p, radius=radius)
    mixed = lambda a, b: abs(a - b) / (1.0 + abs(b))
    eg = max(mixed(a, b) for a, b in zip((g.dE_dx, g.dE_dy), fd_g))
    eh = max(mixed(a, b) for a, b in zip((H.dxx, H.dyy, H.dxy), fd_h))
    return eg, eh
