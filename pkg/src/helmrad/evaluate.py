"""Solution reconstruction, residual diagnostics and energy quantities."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import assembly, green
from .assembly import CoefficientVector
from .problem import ProblemSpec
from .specfun import (FundamentalPair, eval_limit_at_origin, fundamental_eval,
                      fundamental_eval_d2)

#: surface measure factor |Y_{0,0}| = (4 pi)^{-1/2} for d=3
Y00_3D = 1.0 / math.sqrt(4.0 * math.pi)

#: default Gauss-Legendre order per layer; doubled until 1e-10 agreement
_QUAD_ORDER = 32
_QUAD_TOL = 1e-10
_QUAD_MAX_ORDER = 4096


class UnsupportedMode(Exception):
    """Operation restricted to d=3, m=0."""


@dataclass(frozen=True)
class RadialSolution:
    """A solved problem: the spec plus its layer coefficients."""

    spec: ProblemSpec
    coeffs: CoefficientVector

    @property
    def pair(self) -> FundamentalPair:
        return FundamentalPair(self.spec.dimension, self.spec.mode)


def solve(spec: ProblemSpec) -> RadialSolution:
    """Solve through the recursion representation (production path)."""
    return RadialSolution(spec=spec, coeffs=green.layer_coefficients(spec))


def solve_direct(spec: ProblemSpec) -> tuple[RadialSolution, float]:
    """Solve through banded elimination; returns the relative residual."""
    coeffs, resid = assembly.solve_spec(spec)
    return RadialSolution(spec=spec, coeffs=coeffs), resid


def _eval_in_layer(sol: RadialSolution, j: int, r: float):
    """Ansatz value/derivative on layer j at radius r (r > 0)."""
    spec = sol.spec
    k = spec.omega / spec.speed(j)
    a, b = sol.coeffs.a(j), sol.coeffs.b(j)
    x = k * r
    val = 0.0 + 0.0j
    der = 0.0 + 0.0j
    if a != 0.0:
        f1, df1 = fundamental_eval(sol.pair, 1, x)
        val += a * f1
        der += a * k * df1
    f2, df2 = fundamental_eval(sol.pair, 2, x)
    val += b * f2
    der += b * k * df2
    return val, der


def eval_radial(sol: RadialSolution, r: float):
    """(u(r), u'(r)); left limit at jump points, exact limit at the origin."""
    spec = sol.spec
    if not 0.0 <= r <= 1.0:
        raise ValueError("radius must lie in [0, 1]")
    if r == 0.0:
        b1 = sol.coeffs.b(1)
        val = b1 * eval_limit_at_origin(sol.pair, 2)
        # regular-branch slope at 0: zero except for the m=1 spherical mode
        if spec.dimension == 3 and spec.mode == 1:
            der = b1 * spec.omega / (3.0 * spec.speed(1))
        else:
            der = 0.0 + 0.0j
        return val, der
    return _eval_in_layer(sol, spec.profile.layer_of(r), r)


def eval_radial_many(sol: RadialSolution, rs: np.ndarray) -> np.ndarray:
    return np.array([eval_radial(sol, float(r))[0] for r in rs])


def interface_residuals(sol: RadialSolution) -> list:
    """Per-interface (|[u]|, |[u']|), scaled by max(1, |u|) there."""
    spec = sol.spec
    out = []
    for j in range(1, spec.n + 1):
        xj = spec.profile.jump_points[j]
        vl, dl = _eval_in_layer(sol, j, xj)
        vr, dr = _eval_in_layer(sol, j + 1, xj)
        scale = max(1.0, abs(vl))
        out.append((abs(vl - vr) / scale, abs(dl - dr) / scale))
    return out


def ode_residual(sol: RadialSolution, samples_per_layer: int = 8) -> float:
    """Max scaled collocation residual of the radial equation.

    The fundamental solutions satisfy the equation identically, so the
    residual measures only the rounding of the special-function
    recurrences.  Normalisation uses the magnitude of the two ansatz terms
    separately, which keeps the measure meaningful at zeros of u.
    """
    if samples_per_layer < 3:
        raise ValueError("need at least 3 samples per layer")
    spec = sol.spec
    d = spec.dimension
    lam = np.longdouble(spec.angular_eigenvalue)
    worst = 0.0
    # Chebyshev nodes in the open interior of each layer
    theta = (2.0 * np.arange(samples_per_layer) + 1.0) \
        / (2.0 * samples_per_layer) * math.pi
    unit = 0.5 * (1.0 - np.cos(theta))
    # the equation's terms grow like lam/x^2 relative to the solution near
    # the origin, so the collocation runs in extended precision to keep the
    # evaluator's own floor well under the acceptance tolerance
    cdt = np.clongdouble
    for j in range(1, spec.profile.num_layers + 1):
        x0, x1 = spec.profile.jump_points[j - 1], spec.profile.jump_points[j]
        k = np.longdouble(spec.omega) / np.longdouble(spec.speed(j))
        a, b = cdt(sol.coeffs.a(j)), cdt(sol.coeffs.b(j))
        if a == 0.0 and b == 0.0:
            continue
        for t in unit:
            r = np.longdouble(x0) + (np.longdouble(x1) - np.longdouble(x0)) \
                * np.longdouble(t)
            if r <= 0.0:
                continue
            x = k * r
            val = der = dd = cdt(0.0)
            mag = np.longdouble(0.0)
            for coef, which in ((a, 1), (b, 2)):
                if coef == 0.0:
                    continue
                f, df, d2f = fundamental_eval_d2(sol.pair, which, x,
                                                 dtype=np.longdouble)
                val += coef * f
                der += coef * k * df
                dd += coef * k * k * d2f
                mag += abs(coef * f)
            resid = -dd - (d - 1) / r * der + (lam / r**2 - k * k) * val
            worst = max(worst, float(abs(resid) / (k * k * max(mag, 1e-300))))
    return worst


def dtn_residual(sol: RadialSolution) -> float:
    """Scaled defect of the radiating boundary condition at r = 1."""
    spec = sol.spec
    kN = spec.omega / spec.speed(spec.profile.num_layers)
    f1, df1 = fundamental_eval(sol.pair, 1, kN)
    val, der = eval_radial(sol, 1.0)
    g = complex(spec.boundary_coefficient)
    defect = der - kN * (df1 / f1) * val - g
    return abs(defect) / max(1.0, abs(g))


def _layer_quad(sol: RadialSolution, j: int, order: int) -> float:
    """Energy-density integral over layer j at a fixed quadrature order."""
    spec = sol.spec
    x0, x1 = spec.profile.jump_points[j - 1], spec.profile.jump_points[j]
    nodes, weights = np.polynomial.legendre.leggauss(order)
    r = 0.5 * (x1 - x0) * nodes + 0.5 * (x0 + x1)
    w = 0.5 * (x1 - x0) * weights
    d, lam = spec.dimension, spec.angular_eigenvalue
    kj = spec.omega / spec.speed(j)
    total = 0.0
    for ri, wi in zip(r, w):
        val, der = _eval_in_layer(sol, j, ri)
        dens = (abs(der) ** 2 + (kj * abs(val)) ** 2) * ri ** (d - 1)
        if lam != 0.0:
            dens += lam * abs(val) ** 2 * ri ** (d - 3)
        total += wi * dens
    return total


def energy_norm(sol: RadialSolution, quad_order: int = _QUAD_ORDER) -> float:
    """Gauss-Legendre energy norm, order doubled until 1e-10 agreement."""
    if quad_order < 8:
        raise ValueError("quadrature order must be at least 8")
    N = sol.spec.profile.num_layers
    prev = None
    order = quad_order
    while order <= _QUAD_MAX_ORDER:
        total = sum(_layer_quad(sol, j, order) for j in range(1, N + 1))
        if prev is not None and abs(total - prev) <= _QUAD_TOL * max(prev, 1.0):
            return math.sqrt(total)
        prev = total
        order *= 2
    return math.sqrt(prev)


def energy_upper_bound(sol: RadialSolution) -> float:
    """Closed-form energy bound from the per-layer integral estimates.

    Only available for d=3, m=0.  The first layer's outgoing term is
    skipped (its coefficient is identically zero and the bound would
    otherwise divide by z_0 = 0).
    """
    spec = sol.spec
    if spec.dimension != 3 or spec.mode != 0:
        raise UnsupportedMode("closed-form energy bound needs d=3, m=0")
    total = 0.0
    h = spec.profile.widths
    z = spec.z
    for j in range(1, spec.profile.num_layers + 1):
        cj = spec.speed(j)
        scale = (cj / spec.omega) ** 2 * h[j - 1]
        aj, bj = abs(sol.coeffs.a(j)), abs(sol.coeffs.b(j))
        kfac = (spec.omega / cj) ** 2
        if aj > 0.0:
            h_sq = scale
            dh_sq = (1.0 + (cj / z[j - 1]) ** 2) * scale
            total += kfac * aj ** 2 * (h_sq + dh_sq)
        j_sq = (2.0 * z[j] / (cj + z[j])) ** 2 * scale
        dj_sq = 16.0 * z[j] ** 4 / (2.0 * cj ** 2 + z[j] ** 2) ** 2 * scale
        total += kfac * bj ** 2 * (j_sq + dj_sq)
    return math.sqrt(2.0 * total)


def energy_lower_bound(sol: RadialSolution) -> float:
    """Closed-form lower bound from the innermost layer alone (d=3, m=0).

    On the first layer u = B_1 sin(k r)/(k r), so the (omega/c)|u| part of
    the energy integrates exactly: ||u||^2 >= |B_1|^2 * (x_1/2 -
    sin(2 k x_1)/(4 k)).  For the critical construction (k x_1 = pi/2) this
    is |B_1|^2 * pi c_1 / (4 omega) and grows like the interference rate
    ((1+q)/(1-q))^ceil(n/2) in the number of jumps.
    """
    spec = sol.spec
    if spec.dimension != 3 or spec.mode != 0:
        raise UnsupportedMode("closed-form energy bound needs d=3, m=0")
    k = spec.omega / spec.speed(1)
    x1 = spec.profile.jump_points[1]
    integral = x1 / 2.0 - math.sin(2.0 * k * x1) / (4.0 * k)
    return abs(sol.coeffs.b(1)) * math.sqrt(max(integral, 0.0))


def sup_radial(sol: RadialSolution, samples_per_layer: int = 512) -> float:
    """sup |u| over a dense radial grid (including r = 0 and all jumps)."""
    spec = sol.spec
    best = abs(eval_radial(sol, 0.0)[0])
    x = spec.profile.jump_points
    for j in range(1, spec.profile.num_layers + 1):
        rs = np.linspace(x[j - 1], x[j], samples_per_layer, endpoint=True)
        for r in rs:
            if r == 0.0:
                continue
            best = max(best, abs(_eval_in_layer(sol, j, float(r))[0]))
    return best


def sup_scaled(sol: RadialSolution, samples_per_layer: int = 512) -> float:
    """sup |u * Y| for the radial m=0 mode in d=3."""
    if sol.spec.dimension != 3 or sol.spec.mode != 0:
        raise UnsupportedMode("scaled sup norm needs d=3, m=0")
    return sup_radial(sol, samples_per_layer) * Y00_3D


def disc_slice(sol: RadialSolution, grid: int):
    """|u * Y| on a grid x grid lattice over the equatorial disc.

    Returns (x, y, field, sup); lattice points outside the unit disc carry
    NaN.  Restricted to the radial mode (d=3, m=0).
    """
    spec = sol.spec
    if spec.dimension != 3 or spec.mode != 0:
        raise UnsupportedMode("disc rendering needs d=3, m=0")
    axis = np.linspace(-1.0, 1.0, grid)
    field = np.full((grid, grid), np.nan)
    # radial lookup table: the mode is radially symmetric
    radii = np.unique(np.hypot(*np.meshgrid(axis, axis)).ravel())
    radii = radii[radii <= 1.0]
    table = {float(r): abs(eval_radial(sol, float(r))[0]) * Y00_3D
             for r in radii}
    for iy, y in enumerate(axis):
        for ix, x in enumerate(axis):
            r = float(np.hypot(x, y))
            if r <= 1.0:
                field[iy, ix] = table[r]
    sup = float(np.nanmax(field)) if np.any(np.isfinite(field)) else 0.0
    return axis, axis, field, sup


@dataclass
class DiagnosticsReport:
    """Flat bundle of residuals and norms for one solve."""

    interface_residuals: list
    ode_residual: float
    dtn_residual: float
    energy_norm: float
    energy_upper_bound: float | None
    energy_lower_bound: float | None
    sup_norm: float | None
    max_green_magnitude: float | None = None

    @property
    def max_interface_residual(self) -> float:
        if not self.interface_residuals:
            return 0.0
        return max(max(pair) for pair in self.interface_residuals)

    def passes(self, tol: float = 1e-9) -> bool:
        return (self.max_interface_residual <= tol
                and self.ode_residual <= tol and self.dtn_residual <= tol)

    def to_dict(self) -> dict:
        return {
            "interface_residuals": [list(p) for p in self.interface_residuals],
            "max_interface_residual": self.max_interface_residual,
            "ode_residual": self.ode_residual,
            "dtn_residual": self.dtn_residual,
            "energy_norm": self.energy_norm,
            "energy_upper_bound": self.energy_upper_bound,
            "energy_lower_bound": self.energy_lower_bound,
            "sup_norm": self.sup_norm,
            "max_green_magnitude": self.max_green_magnitude,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def diagnostics(sol: RadialSolution, quad_order: int = _QUAD_ORDER
                ) -> DiagnosticsReport:
    spec = sol.spec
    radial_mode = spec.dimension == 3 and spec.mode == 0
    return DiagnosticsReport(
        interface_residuals=interface_residuals(sol),
        ode_residual=ode_residual(sol),
        dtn_residual=dtn_residual(sol),
        energy_norm=energy_norm(sol, quad_order),
        energy_upper_bound=energy_upper_bound(sol) if radial_mode else None,
        energy_lower_bound=energy_lower_bound(sol) if radial_mode else None,
        sup_norm=sup_scaled(sol) if radial_mode else None,
    )


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_radial_csv(sol: RadialSolution, path, samples: int = 1024):
    rs = np.linspace(0.0, 1.0, samples)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["r", "re_u", "im_u", "abs_u"])
        for r in rs:
            v = eval_radial(sol, float(r))[0]
            wr.writerow([_fmt(r), _fmt(v.real), _fmt(v.imag), _fmt(abs(v))])


def write_disc_csv(sol: RadialSolution, path, grid: int = 64):
    xs, ys, field, _ = disc_slice(sol, grid)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "y", "abs_u"])
        for iy, y in enumerate(ys):
            for ix, x in enumerate(xs):
                v = field[iy, ix]
                wr.writerow([_fmt(x), _fmt(y),
                             "nan" if math.isnan(v) else _fmt(v)])
