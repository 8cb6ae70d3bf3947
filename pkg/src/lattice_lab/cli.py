"""Command-line front end: ``lattice-lab {thresholds,classify,minimize,sweep,selftest}``."""
from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import minimizer as mz
from .derivatives import (
    check_latsum_identities,
    classify_point,
    finite_difference_errors,
    grad_energy,
    hessian_energy,
)
from .lattice_core import SQRT3_2, ConvergenceError, LatticePoint2D, LJParams, exponential, inverse_power
from .lj_thresholds import compute_thresholds, g_and_k, h_identity_residual

DEFAULT_CLI_TOL = 1e-10
CSV_HEADER = "A,phase,x,y,theta_deg,energy,certainty"
COMMANDS = ("thresholds", "classify", "minimize", "sweep", "selftest")


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: LJParams = LJParams()
    area: float | None = None
    area_min: float | None = None
    area_max: float | None = None
    step: float | None = None
    tol: float = DEFAULT_CLI_TOL
    fmt: str = "csv"
    out: str | None = None
    plot: str | None = None
    family: str = "full"
    jobs: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if not (0 < self.tol <= 1e-4):
            raise ValueError(f"tolerance must lie in (0, 1e-4], got {self.tol}")
        if self.step is not None and not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.area is not None and not self.area > 0:
            raise ValueError(f"area must be positive, got {self.area}")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.fmt!r}")
        if self.family not in ("full", "rhombic", "rectangular"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def areas(self) -> list[float]:
        if self.area is not None and self.area_min is None:
            return [self.area]
        if self.area_min is None or self.area_max is None or self.step is None:
            raise ValueError("a sweep needs --area-min, --area-max and --step (or --area)")
        if not 0 < self.area_min <= self.area_max:
            raise ValueError("need 0 < area-min <= area-max")
        n = int(math.floor((self.area_max - self.area_min) / self.step + 1e-9))
        # rounding keeps grid values like 1.1 instead of 1.1000000000000003
        return [round(self.area_min + i * self.step, 12) for i in range(n + 1)]


# ---------------------------------------------------------------------------
# rows


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return "%.12g" % v


def phase_row(A: float, pp: mz.PhasePoint | None, error: str | None = None) -> dict:
    if pp is None:
        return {"A": A, "phase": "ERROR", "x": None, "y": None, "theta_deg": None, "energy": None, "certainty": error}
    return {
        "A": A,
        "phase": pp.shape.value,
        "x": pp.minimizer.x,
        "y": pp.minimizer.y,
        "theta_deg": pp.theta_deg,
        "energy": pp.energy,
        "certainty": pp.certainty.value,
    }


def render_rows(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in rows:
        cert = r["certainty"] if r["phase"] != "ERROR" else ""
        cells = [_fmt(r["A"]), r["phase"], _fmt(r["x"]), _fmt(r["y"]), _fmt(r["theta_deg"]), _fmt(r["energy"]), cert]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# SVG


def _polyline(pts, sx, sy, color):
    coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in pts)
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>'


_PHASE_LEVEL = {"Triangular": 0, "Rhombic": 1, "Square": 2, "Rectangular": 3, "Generic": 4}


def sweep_svg(rows: list[dict]) -> str:
    """Two stacked panels: phase label against A, and theta_A (rhombic) / y_A (rectangular)."""
    ok = [r for r in rows if r["phase"] != "ERROR"]
    W, H, pad = 640, 480, 50
    As = [r["A"] for r in ok] or [0.0, 1.0]
    a0, a1 = min(As), max(As)
    if a1 == a0:
        a1 = a0 + 1.0
    sx = lambda a: pad + (a - a0) / (a1 - a0) * (W - 2 * pad)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
    ]
    # phase panel
    top, bot = 20, 200
    sy1 = lambda lvl: bot - lvl / 4.0 * (bot - top)
    pts = [(r["A"], _PHASE_LEVEL[r["phase"]]) for r in ok]
    parts.append(_polyline(pts, sx, sy1, "black"))
    for name, lvl in _PHASE_LEVEL.items():
        parts.append(f'<text x="2" y="{sy1(lvl) + 4:.1f}">{name}</text>')
    # theta / y panel
    top2, bot2 = 250, 440
    th = [(r["A"], r["theta_deg"]) for r in ok if r["theta_deg"] is not None]
    yy = [(r["A"], r["y"]) for r in ok if r["phase"] == "Rectangular"]
    if th:
        sy2 = lambda t: bot2 - (t - 60.0) / 30.0 * (bot2 - top2)
        parts.append(_polyline(th, sx, sy2, "blue"))
        parts.append(f'<text x="{W - pad + 4}" y="{top2 + 10}" fill="blue">theta (60-90 deg)</text>')
    if yy:
        ymax = max(v for _, v in yy)
        sy3 = lambda v: bot2 - (v - 1.0) / max(ymax - 1.0, 1e-9) * (bot2 - top2)
        parts.append(_polyline(yy, sx, sy3, "red"))
        parts.append(f'<text x="{W - pad + 4}" y="{top2 + 24}" fill="red">y (1-{ymax:.3g})</text>')
    for yax in (bot, bot2):
        parts.append(f'<line x1="{pad}" y1="{yax}" x2="{W - pad}" y2="{yax}" stroke="gray"/>')
    parts.append(f'<text x="{pad}" y="{H - 15}">A = {a0:.6g}</text>')
    parts.append(f'<text x="{W - pad - 60}" y="{H - 15}">A = {a1:.6g}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_thresholds(cfg: RunConfig) -> int:
    try:
        ts = compute_thresholds(cfg.params, cfg.tol)
    except (ConvergenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    abz = ts.abz
    print(f"A_BZ={ts.A_BZ:.10f} at x={abz.x:.8f} y={abz.y:.8f} theta={math.degrees(math.atan2(abz.y, abz.x)):.4f}deg")
    print(f"A0={ts.A0:.10f}±{cfg.tol:.1e}")
    print(f"A1={ts.A1:.10f}±{cfg.tol:.1e}")
    print(f"A2={ts.A2:.10f}±{cfg.tol:.1e}")
    print(f"A1<A2={ts.ordered} tail_tol={cfg.tol:.1e}")
    return 0


def cmd_classify(cfg: RunConfig) -> int:
    if cfg.area is None:
        print("error: classify needs --area", file=sys.stderr)
        return 2
    try:
        reports = [classify_point(cfg.params.potential, w, cfg.area, cfg.tol) for w in ("Square", "Triangular")]
    except (ConvergenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rows = [
        {"point": w, "verdict": r.verdict.value, "dxx": r.hessian.dxx, "dyy": r.hessian.dyy, "dxy": r.hessian.dxy, "margin": r.margin}
        for w, r in zip(("Square", "Triangular"), reports)
    ]
    if cfg.fmt == "json":
        _emit(json.dumps({"A": cfg.area, "points": rows}, indent=1) + "\n", cfg.out)
    else:
        text = "point,verdict,dxx,dyy,dxy,margin\n" + "".join(
            f"{r['point']},{r['verdict']},{_fmt(r['dxx'])},{_fmt(r['dyy'])},{_fmt(r['dxy'])},{_fmt(r['margin'])}\n" for r in rows
        )
        _emit(text, cfg.out)
    return 0


def _minimize_one(args):
    params, A, tol = args
    try:
        return phase_row(A, mz.minimize_full(params, A, tol))
    except Exception as exc:  # noqa: BLE001 - reported as an ERROR row
        return phase_row(A, None, f"{type(exc).__name__}: {exc}")


def cmd_minimize(cfg: RunConfig) -> int:
    if cfg.area is None:
        print("error: minimize needs --area", file=sys.stderr)
        return 2
    A = cfg.area
    try:
        if cfg.family == "full":
            row = phase_row(A, mz.minimize_full(cfg.params, A, cfg.tol))
        elif cfg.family == "rhombic":
            th, e = mz.minimize_rhombic(cfg.params, A, cfg.tol)
            x, y = mz._arc_point(th)
            row = {"A": A, "phase": mz.classify_shape(x, y).value, "x": x, "y": y, "theta_deg": th, "energy": e, "certainty": "GridPolished"}
            if row["phase"] != "Rhombic":
                row["theta_deg"] = None
        else:
            y, e, capped = mz.minimize_rectangular(cfg.params, A, cfg.tol)
            row = {"A": A, "phase": mz.classify_shape(0.0, y).value, "x": 0.0, "y": y, "theta_deg": None, "energy": e,
                   "certainty": "BoundaryCapped" if capped else "GridPolished"}
    except (ConvergenceError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(render_rows([row], cfg.fmt), cfg.out)
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    try:
        areas = cfg.areas()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    work = [(cfg.params, A, cfg.tol) for A in areas]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(_minimize_one, work))  # map keeps A order
    else:
        rows = [_minimize_one(w) for w in work]
    _emit(render_rows(rows, cfg.fmt), cfg.out)
    if cfg.plot:
        with open(cfg.plot, "w", newline="\n") as fh:
            fh.write(sweep_svg(rows))
    good = sum(r["phase"] != "ERROR" for r in rows)
    return 0 if good >= 0.9 * len(rows) else 3


def selftest_checks(tol: float = DEFAULT_CLI_TOL, seed: int = 0) -> list[tuple[str, bool, str]]:
    """The invariant battery: ``(name, passed, detail)`` per check."""
    out = []
    for s in (5.0, 8.0):
        r = max(check_latsum_identities(s, 1e-13))
        out.append((f"latsum identities s={s:g}", r <= 1e-10, f"max residual {r:.2e}"))
    for s in (3.0, 6.0):
        r = h_identity_residual(s, 1e-13)
        out.append((f"h identity s={s:g}", r <= 1e-10, f"residual {r:.2e}"))
    for s in (1.5, 2.0, 3.0, 4.5, 6.0, 8.0):
        gtol = 1e-2 if s < 2 else (1e-4 if s < 3 else 1e-10)
        g, k = g_and_k(s, gtol)
        out.append((f"g, k > 0 at s={s:g}", g > gtol and k > gtol, f"g={g:.6g} k={k:.6g}"))
    battery = {"LJ(2,1,3,6)": LJParams().potential, "r^-3": inverse_power(3.0), "exp(-pi r)": exponential(1.0)}
    for name, f in battery.items():
        worst_g, worst_h = 0.0, 0.0
        for A in (0.8, 1.0, 1.2, 1.5, 2.0):
            for p in (LatticePoint2D.square(A), LatticePoint2D.triangular(A)):
                h = hessian_energy(f, p, 1e-9)
                scale = 1.0 + abs(h.dxx) + abs(h.dyy)
                worst_g = max(worst_g, grad_energy(f, p, 1e-9).norm() / scale)
                worst_h = max(worst_h, abs(h.dxy) / scale)
        out.append((f"critical points {name}", worst_g <= 1e-9, f"scaled |grad| {worst_g:.2e}"))
        out.append((f"diagonal Hessian {name}", worst_h <= 1e-10, f"relative |dxy| {worst_h:.2e}"))
    rng = np.random.default_rng(seed)
    worst = 0.0
    f = LJParams().potential
    for _ in range(20):
        x = rng.uniform(0.02, 0.48)
        y = math.sqrt(1 - x * x) + rng.uniform(0.02, 1.5)
        A = rng.uniform(0.8, 2.0)
        worst = max(worst, *finite_difference_errors(f, (x, y, A)))
    out.append(("finite differences at 20 random points", worst <= 1e-5, f"max mixed error {worst:.2e}"))
    return out


def cmd_selftest(cfg: RunConfig) -> int:
    ok = True
    for name, passed, detail in selftest_checks(cfg.tol):
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    return 0 if ok else 1


_DISPATCH = {
    "thresholds": cmd_thresholds,
    "classify": cmd_classify,
    "minimize": cmd_minimize,
    "sweep": cmd_sweep,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    env_tol = os.environ.get("LATTICE_LAB_TOL")
    default_tol = float(env_tol) if env_tol else DEFAULT_CLI_TOL
    common = argparse.ArgumentParser(add_help=False)
    d = LJParams()
    common.add_argument("--a1", type=float, default=d.a1)
    common.add_argument("--a2", type=float, default=d.a2)
    common.add_argument("--t1", type=float, default=d.t1)
    common.add_argument("--t2", type=float, default=d.t2)
    common.add_argument("--area", type=float)
    common.add_argument("--area-min", type=float)
    common.add_argument("--area-max", type=float)
    common.add_argument("--step", type=float)
    common.add_argument("--tol", type=float, default=default_tol)
    common.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    common.add_argument("--out")
    common.add_argument("--plot")
    common.add_argument("--family", choices=("full", "rhombic", "rectangular"), default="full")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    parser = argparse.ArgumentParser(prog="lattice-lab", description="2D lattice energies, thresholds and phase sweeps")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=ns.command,
        params=LJParams(ns.a1, ns.a2, ns.t1, ns.t2),
        area=ns.area,
        area_min=ns.area_min,
        area_max=ns.area_max,
        step=ns.step,
        tol=ns.tol,
        fmt=ns.fmt,
        out=ns.out,
        plot=ns.plot,
        family=ns.family,
        jobs=ns.jobs,
    )


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except ValueError as exc:
        parser.error(str(exc))
    return _DISPATCH[cfg.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
