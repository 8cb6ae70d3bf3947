"""Lattice quadratic forms and certified lattice sums over the half modular domain.

A Bravais lattice of area ``A`` is identified, up to rotation, with a point
``(x, y)`` of

    D = {0 <= x <= 1/2, y > 0, x**2 + y**2 >= 1}

through the generators ``u = sqrt(A/y) * (1, 0)`` and
``v = sqrt(A/y) * (x, y)``, so that ``|m u + n v|**2 = A*((m + x n)**2/y + y n**2)``.

Every sum is truncated to the disk ``|p| <= R`` and carries a rigorous bound on
the omitted tail, obtained by comparing each omitted term with an integral over
its (centered) primitive cell.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial

DEFAULT_TOL = 1e-12
REDUCTION_CAP = 64
MAX_TERMS = 4e8
# points x lattice-vectors processed per vectorised block
_BLOCK = 1_500_000

SQRT3_2 = math.sqrt(3.0) / 2.0


class ConvergenceError(RuntimeError):
    """A sum or search could not be certified within its iteration cap."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class LatticePoint2D:
    """Point ``(x, y)`` of the half modular domain together with the cell area."""

    x: float
    y: float
    area: float = 1.0

    def __post_init__(self):
        _check_xy(self.x, self.y, self.area)
        eps = 1e-9
        if not (-eps <= self.x <= 0.5 + eps and self.x * self.x + self.y * self.y >= 1.0 - eps):
            raise ValueError(
                f"({self.x}, {self.y}) is outside the half modular domain; "
                "use LatticePoint2D.reduced to map it in"
            )

    @classmethod
    def reduced(cls, x: float, y: float, area: float = 1.0) -> "LatticePoint2D":
        xr, yr = reduce_to_domain(x, y)
        return cls(xr, yr, area)

    @classmethod
    def square(cls, area: float = 1.0) -> "LatticePoint2D":
        return cls(0.0, 1.0, area)

    @classmethod
    def triangular(cls, area: float = 1.0) -> "LatticePoint2D":
        return cls(0.5, SQRT3_2, area)

    def with_area(self, area: float) -> "LatticePoint2D":
        return LatticePoint2D(self.x, self.y, area)

    def generators(self) -> tuple[np.ndarray, np.ndarray]:
        s = math.sqrt(self.area / self.y)
        return np.array([s, 0.0]), np.array([s * self.x, s * self.y])


# (x, y, area) triples are accepted wherever a point is expected; they skip the
# domain check so unreduced or mirrored coordinates can be summed directly.
PointLike = Union[LatticePoint2D, Sequence[float]]


def _coords(p: PointLike) -> tuple[float, float, float]:
    if isinstance(p, LatticePoint2D):
        return p.x, p.y, p.area
    x, y, area = (float(v) for v in p)
    _check_xy(x, y, area)
    return x, y, area


def _check_xy(x, y, area):
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(area)):
        raise ValueError("lattice coordinates must be finite")
    if y <= 0:
        raise ValueError(f"y must be positive, got {y}")
    if area <= 0:
        raise ValueError(f"area must be positive, got {area}")


@dataclass(frozen=True)
class Potential:
    """Radial interaction ``f`` evaluated at squared distances, with two derivatives.

    ``bounds[k]`` is a tuple of ``(C, p)`` pairs such that
    ``|f^(k)(r)| <= sum(C * r**-p)`` for every ``r > 0``. These majorants drive
    the tail certificates, and fix the decay orders ``eta_k = min(p) - k``.
    """

    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    d2f: Callable[[np.ndarray], np.ndarray]
    bounds: tuple
    name: str = "f"

    def __post_init__(self):
        if len(self.bounds) != 3:
            raise ValueError("bounds must give majorants for f, f' and f''")
        for k, eta in enumerate(self.decay_exponents):
            if not eta > 1:
                raise ValueError(
                    f"{self.name}: derivative {k} decays like r^-{eta + k}, need eta_k > 1"
                )

    @property
    def decay_exponents(self) -> tuple[float, float, float]:
        return tuple(min(p for _, p in b) - k for k, b in enumerate(self.bounds))

    def derivative(self, order: int) -> Callable[[np.ndarray], np.ndarray]:
        return (self.f, self.df, self.d2f)[order]


def inverse_power(s: float, coef: float = 1.0) -> Potential:
    """``f(r) = coef * r**-s`` (so the lattice energy is ``coef * zeta(2s)``)."""
    if s <= 1:
        raise ValueError(f"inverse power r^-{s} is not summable on a 2d lattice")
    c = abs(coef)
    return Potential(
        f=lambda r: coef * r ** -s,
        df=lambda r: -coef * s * r ** (-s - 1),
        d2f=lambda r: coef * s * (s + 1) * r ** (-s - 2),
        bounds=(((c, s),), ((c * s, s + 1),), ((c * s * (s + 1), s + 2),)),
        name=f"{coef:g}*r^-{s:g}",
    )


def exponential(alpha: float, power: float = 10.0) -> Potential:
    """``f(r) = exp(-pi * alpha * r)``, the Gaussian behind theta functions.

    Majorants use ``exp(-c r) <= (power / (c e))**power * r**-power``.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    c = math.pi * alpha
    K = (power / (c * math.e)) ** power
    return Potential(
        f=lambda r: np.exp(-c * r),
        df=lambda r: -c * np.exp(-c * r),
        d2f=lambda r: c * c * np.exp(-c * r),
        bounds=(((K, power),), ((c * K, power + 1),), ((c * c * K, power + 2),)),
        name=f"exp(-pi*{alpha:g}*r)",
    )


@dataclass(frozen=True)
class LJParams:
    """Lennard-Jones type potential ``a2 r^-t2 - a1 r^-t1`` with ``1 < t1 < t2``."""

    a1: float = 2.0
    a2: float = 1.0
    t1: float = 3.0
    t2: float = 6.0

    def __post_init__(self):
        # a1 == 0 is kept as the degenerate purely repulsive case
        if not (self.a1 >= 0 and self.a2 > 0):
            raise ValueError(f"need a1 >= 0 and a2 > 0, got a=({self.a1}, {self.a2})")
        if not (1 < self.t1 < self.t2):
            raise ValueError(f"need 1 < t1 < t2, got t=({self.t1}, {self.t2})")

    @property
    def potential(self) -> Potential:
        return lennard_jones(self)


def lennard_jones(params: LJParams) -> Potential:
    a1, a2, t1, t2 = params.a1, params.a2, params.t1, params.t2
    return Potential(
        f=lambda r: a2 * r ** -t2 - a1 * r ** -t1,
        df=lambda r: -a2 * t2 * r ** (-t2 - 1) + a1 * t1 * r ** (-t1 - 1),
        d2f=lambda r: a2 * t2 * (t2 + 1) * r ** (-t2 - 2) - a1 * t1 * (t1 + 1) * r ** (-t1 - 2),
        bounds=(
            ((a2, t2), (a1, t1)),
            ((a2 * t2, t2 + 1), (a1 * t1, t1 + 1)),
            ((a2 * t2 * (t2 + 1), t2 + 2), (a1 * t1 * (t1 + 1), t1 + 2)),
        ),
        name=f"LJ(a=({a1:g},{a2:g}),t=({t1:g},{t2:g}))",
    )


@dataclass(frozen=True)
class SumResult:
    value: float
    truncation_radius: float
    tail_bound: float

    def __float__(self):
        return self.value


# ---------------------------------------------------------------------------
# elementary operations


def quadratic_form(m: int, n: int, p: PointLike) -> float:
    """Squared norm ``|m u_A + n v_A|**2 = A*((m + x n)**2 / y + y n**2)``."""
    if m == 0 and n == 0:
        raise ValueError("(m, n) = (0, 0) is the lattice origin")
    x, y, area = _coords(p)
    return area * ((m + x * n) ** 2 / y + y * n * n)


def reduce_to_domain(x: float, y: float, max_iter: int = REDUCTION_CAP) -> tuple[float, float]:
    """Map ``(x, y)``, ``y > 0``, to the point of D describing the same lattice shape."""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("coordinates must be finite")
    if y <= 0:
        raise ValueError(f"y must be positive, got {y}")
    for _ in range(max_iter):
        x -= math.floor(x + 0.5)
        r2 = x * x + y * y
        if r2 < 1.0 - 1e-15:
            x, y = -x / r2, y / r2
            continue
        x = abs(x)
        # x = 1/2 and x = -1/2 are the same lattice; floor() above keeps x in [-1/2, 1/2)
        return x, y
    raise ConvergenceError(f"modular reduction did not terminate in {max_iter} steps")


# ---------------------------------------------------------------------------
# the summation engine


@dataclass(frozen=True)
class Term:
    """One weighted sum ``sum w(m, n, a, b) * f^(order)(|p|**2)`` over the lattice.

    ``a = sqrt(A/y) (m + x n)`` and ``b = sqrt(A y) n`` are the Cartesian
    coordinates of the lattice vector, so ``|p|**2 = a**2 + b**2``. The weight
    must satisfy ``|w| <= coef * |p|**degree`` and be even under
    ``(m, n) -> (-m, -n)``.
    """

    order: int = 0
    weight: Callable | None = None
    coef: float = 1.0
    degree: int = 0


def _tail_coefficients(pot: Potential, term: Term, area: float, rho: float):
    """``[(k, e)]`` with ``tail(R) = sum k * (R - 2 rho)**e``."""
    poly = Polynomial([2.0 * rho, 1.0]) ** term.degree * Polynomial([rho, 1.0])
    scale = 2.0 * math.pi * term.coef / area
    out = []
    for C, p in pot.bounds[term.order]:
        for j, cj in enumerate(poly.coef):
            e = j + 1 - 2.0 * p
            out.append((scale * C * cj / (-e), e))
    return out


def _eval_tail(coefs, rho, radius):
    r0 = radius - 2.0 * rho
    if r0 <= 0:
        return math.inf
    return sum(k * r0 ** e for k, e in coefs)


def _tail_bound(pot: Potential, term: Term, area: float, rho: float, radius: float) -> float:
    return _eval_tail(_tail_coefficients(pot, term, area, rho), rho, radius)


def _cell_radius(xs: np.ndarray, y: float, area: float) -> float:
    xm = float(np.max(np.abs(xs)))
    return 0.5 * math.sqrt(area / y * (1.0 + xm) ** 2 + area * y)


def _choose_radius(pot, terms, area, rho, tol):
    for term in terms:
        if 2.0 * min(p for _, p in pot.bounds[term.order]) <= term.degree + 2:
            raise ValueError(
                f"{pot.name}: weighted sum of degree {term.degree} with derivative "
                f"{term.order} does not converge"
            )

    coefs = [_tail_coefficients(pot, t, area, rho) for t in terms]

    def worst(r):
        return max(_eval_tail(c, rho, r) for c in coefs)

    hi = 2.0 * rho + max(1.0, rho)
    for _ in range(200):
        if worst(hi) <= tol:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("tail bound never reached the requested tolerance")
    lo = 2.0 * rho
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if worst(mid) <= tol:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-3 * hi:
            break
    if math.pi * hi * hi / area > MAX_TERMS:
        raise ConvergenceError(
            f"certifying tol={tol:g} needs radius {hi:.4g} "
            f"(~{math.pi * hi * hi / area:.3g} lattice points)"
        )
    return hi


def _row_blocks(xs, y, area, radius, block):
    """Yield (m, n) index arrays covering one half plane for every x in ``xs``."""
    R2A = radius * radius / area
    nmax = int(math.floor(radius / math.sqrt(area * y)))
    xmin, xmax = float(np.min(xs)), float(np.max(xs))
    ns = np.arange(0, nmax + 1, dtype=np.int64)
    w = np.sqrt(np.maximum(y * (R2A - y * ns.astype(float) ** 2), 0.0))
    lo = np.ceil(-np.maximum(xmax * ns, xmin * ns) - w).astype(np.int64)
    hi = np.floor(-np.minimum(xmax * ns, xmin * ns) + w).astype(np.int64)
    lo[0] = 1
    counts = np.maximum(hi - lo + 1, 0)
    per_block = max(1, block // max(1, len(xs)))
    start = 0
    while start < len(ns):
        csum = np.cumsum(counts[start:])
        stop = start + max(1, int(np.searchsorted(csum, per_block, side="right")))
        c = counts[start:stop]
        total = int(c.sum())
        if total:
            offs = np.repeat(np.cumsum(c) - c, c)
            m = np.repeat(lo[start:stop], c) + (np.arange(total) - offs)
            n = np.repeat(ns[start:stop], c)
            yield m, n
        start = stop


def weighted_sums(
    pot: Potential,
    terms: Sequence[Term],
    xs,
    y: float,
    area: float,
    tol: float = DEFAULT_TOL,
    radius: float | None = None,
    block: int = _BLOCK,
):
    """Evaluate several weighted lattice sums for all ``x`` in ``xs`` at once.

    Returns ``(values, radius, tails)`` where ``values`` has shape
    ``(len(terms), len(xs))`` and ``tails[i]`` bounds the truncation error of
    every entry of ``values[i]``.
    """
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    _check_xy(float(xs[0]), y, area)
    rho = _cell_radius(xs, y, area)
    if radius is None:
        radius = _choose_radius(pot, terms, area, rho, tol)
    tails = np.array([_tail_bound(pot, t, area, rho, radius) for t in terms])

    orders = sorted({t.order for t in terms})
    sa, sb = math.sqrt(area / y), math.sqrt(area * y)
    partial = [[[] for _ in xs] for _ in terms]
    for m, n in _row_blocks(xs, y, area, radius, block):
        mf, nf = m.astype(float), n.astype(float)
        a = (mf[None, :] + xs[:, None] * nf[None, :]) * sa
        b = (nf * sb)[None, :]
        q = a * a + b * b
        fk = {k: pot.derivative(k)(q) for k in orders}
        for i, t in enumerate(terms):
            vals = fk[t.order] if t.weight is None else t.weight(mf, nf, a, b) * fk[t.order]
            for j, s in enumerate(np.broadcast_to(vals, q.shape).sum(axis=1)):
                partial[i][j].append(s)
    values = np.array([[2.0 * math.fsum(p) for p in row] for row in partial])
    return values, radius, tails


def _sum(pot, term, p, tol):
    x, y, area = _coords(p)
    vals, radius, tails = weighted_sums(pot, [term], [x], y, area, tol)
    return SumResult(float(vals[0, 0]), radius, float(tails[0]))


# ---------------------------------------------------------------------------
# public sums


def lattice_sum(g: Potential, p: PointLike, tol: float = DEFAULT_TOL) -> SumResult:
    """``E_g(x, y, A) = sum over (m, n) != 0 of g(|m u_A + n v_A|**2)``."""
    if not isinstance(g, Potential):
        raise TypeError("lattice_sum needs a Potential carrying decay majorants")
    return _sum(g, Term(), p, tol)


def epstein_zeta(p: PointLike, s: float, tol: float = DEFAULT_TOL) -> SumResult:
    """``zeta_L(s) = sum |p|**-s`` over the nonzero lattice vectors, ``s > 2``."""
    if not s > 2:
        raise ValueError(f"Epstein zeta diverges for s <= 2, got s={s}")
    return _sum(inverse_power(s / 2.0), Term(), p, tol)


def epstein_zeta_row(xs, y: float, s: float, area: float = 1.0, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Vectorised ``epstein_zeta`` over many ``x`` sharing the same ``y`` and area."""
    if not s > 2:
        raise ValueError(f"Epstein zeta diverges for s <= 2, got s={s}")
    vals, _, _ = weighted_sums(inverse_power(s / 2.0), [Term()], xs, y, area, tol)
    return vals[0]


def theta_function(p: PointLike, alpha: float, tol: float = DEFAULT_TOL) -> SumResult:
    """``theta_L(alpha) = sum over all p in L of exp(-pi alpha |p|**2)`` (origin included)."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    r = _sum(exponential(alpha), Term(), p, tol)
    return SumResult(1.0 + r.value, r.truncation_radius, r.tail_bound)


def lj_energy(params: LJParams, p: PointLike, tol: float = DEFAULT_TOL) -> float:
    """``a2 zeta_L(2 t2) - a1 zeta_L(2 t1)``, certified to ``tol``."""
    return _sum(lennard_jones(params), Term(), p, tol).value
