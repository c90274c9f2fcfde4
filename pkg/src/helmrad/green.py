"""Recursive representation of the last Green's-operator column.

The inverse of the normalised interface matrix is never formed; its last
column is expressed through a complex scalar recursion (beta below).  The
recursion is real-linear in (beta, conj beta), so it can be advanced on the
unit circle while the modulus is accumulated in log space — configurations
with strong localisation reach moduli like 3^(n/2), which overflow doubles
long before the recursion itself loses accuracy.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .assembly import CoefficientVector, rhs_scale
from .problem import ProblemSpec
from .specfun import FundamentalPair, fundamental_eval, wronskian_w

#: |beta_n| below this is treated as a resonance of the denominator
NEAR_RESONANCE_FLOOR = 1e-250

#: agreement required between the general and the d=3, m=0 recursion paths
_M0_CHECK_TOL = 1e-12

# The recursion step u + q*conj(u) can cancel to ~1e-12 of its operands at
# near-critical interfaces; the chain therefore runs in extended precision
# (the problem data are exact doubles, so the extra bits are all signal).
_EXT = np.longdouble
_CEXT = np.clongdouble
_IU = _CEXT(1j)


def _cexp(t) -> complex:
    """exp(i t) in extended precision for a real extended scalar t."""
    return np.exp(_IU * _EXT(t))


class GammaDegenerate(Exception):
    """The reflection normaliser gamma-plus vanished (invalid profile)."""


class NearResonantDenominator(Exception):
    """|beta_n| fell below the representable floor."""

    def __init__(self, log_magnitude: float):
        self.log_magnitude = log_magnitude
        super().__init__(
            f"denominator near resonance: log10|beta_n| = "
            f"{log_magnitude / math.log(10.0):.3f}")


@dataclass(frozen=True)
class GammaData:
    """Interface reflection quantities at a single jump point."""

    gamma_tilde_plus: complex
    gamma_tilde_minus: complex
    q_tilde: complex
    gamma_plus: complex
    gamma_minus: complex
    q: complex


def _gamma_core(spec: ProblemSpec, ell: int):
    """Extended-precision (gt_plus, gt_minus, g_plus, g_minus, q, loss).

    ``loss`` is the decimal-digit cancellation inside gt_plus (its operands
    can exceed the difference by orders of magnitude at stiff interfaces).
    """
    if not 1 <= ell <= spec.n:
        raise ValueError(f"interface index out of range: {ell}")
    pair = FundamentalPair(spec.dimension, spec.mode)
    c_l, c_r = _EXT(spec.speed(ell)), _EXT(spec.speed(ell + 1))
    z = _EXT(spec.omega) * _EXT(spec.profile.jump_points[ell])
    f1l, df1l = fundamental_eval(pair, 1, z / c_l, _EXT)
    f1r, df1r = fundamental_eval(pair, 1, z / c_r, _EXT)
    t1 = f1r * np.conj(df1l) / c_l
    t2 = df1r * np.conj(f1l) / c_r
    gt_plus = t1 - t2
    gt_minus = df1l * f1r / c_l - df1r * f1l / c_r
    if abs(gt_plus) < 1e-300:
        raise GammaDegenerate(f"gamma-plus vanished at interface {ell}")
    loss = max(0.0, float(np.log10(max(abs(t1), abs(t2)) / abs(gt_plus))))
    g_plus = _IU * _cexp(z / c_l - z / c_r) * gt_plus
    g_minus = _IU * _cexp(-z / c_l - z / c_r) * gt_minus
    return gt_plus, gt_minus, g_plus, g_minus, g_minus / g_plus, loss


def gamma_q(spec: ProblemSpec, ell: int) -> GammaData:
    """Reflection quantities at interface ell (1-based)."""
    gt_plus, gt_minus, g_plus, g_minus, q, _ = _gamma_core(spec, ell)
    return GammaData(
        gamma_tilde_plus=complex(gt_plus),
        gamma_tilde_minus=complex(gt_minus),
        q_tilde=complex(gt_minus / gt_plus),
        gamma_plus=complex(g_plus),
        gamma_minus=complex(g_minus),
        q=complex(q),
    )


@dataclass(frozen=True)
class BetaSequence:
    """Both scalar recursions in log-modulus + unit-phase form.

    ``log_moduli[ell]`` and ``phases[ell]`` describe beta_ell (the
    phase-adjusted sequence entering the Green-column formulas);
    ``tilde_log_moduli``/``tilde_phases`` the companion sequence that feeds
    the determinant identities.
    """

    n: int
    log_moduli: np.ndarray      # (n+1,)
    phases: np.ndarray          # (n+1,) complex, unit modulus
    tilde_log_moduli: np.ndarray
    tilde_phases: np.ndarray
    q: np.ndarray               # (n,) relative reflection strengths
    loss_digits: float = 0.0    # decimal digits lost to step cancellation
    # log magnitude and sign of Im(e^{i z_ell / c_{ell+1}} beta_ell): the
    # imaginary part can sit many digits below |beta_ell|, so it is
    # extracted at the working precision of the recursion itself
    rot_im_log: np.ndarray | None = None
    rot_im_sign: np.ndarray | None = None

    @property
    def beta(self) -> np.ndarray:
        """beta_0..beta_n as complex values (may overflow for huge n)."""
        return np.exp(self.log_moduli) * self.phases

    @property
    def beta_tilde(self) -> np.ndarray:
        return np.exp(self.tilde_log_moduli) * self.tilde_phases

    @property
    def moduli(self) -> np.ndarray:
        return np.exp(self.log_moduli)


def _advance(log_mod, step_value):
    """Fold a recursion step (applied to a unit phase) into log form."""
    mag = abs(step_value)
    if mag == 0.0:
        return -_EXT(np.inf), _CEXT(1.0)
    return log_mod + np.log(mag), step_value / mag


#: escalate to arbitrary precision beyond this many lost decimal digits;
#: extended precision carries ~19, so this leaves a dozen good digits
_LOSS_LIMIT = 6.0


def _to_longdouble(v) -> np.longdouble:
    import mpmath as mp
    return np.longdouble(mp.nstr(v, 25))


def _to_clongdouble(v) -> np.clongdouble:
    return np.clongdouble(_to_longdouble(v.real)) \
        + _IU * np.clongdouble(_to_longdouble(v.imag))


def _beta_mp(spec: ProblemSpec, digits: float, data=None):
    """Arbitrary-precision rerun of both recursions in log/phase form.

    ``data``, when given, is a callable ``spec -> (omega, jump_points)``
    evaluated inside the high-precision context; it lets callers substitute
    idealised problem data (e.g. exactly-critical phases) for the
    double-rounded values stored on the spec.
    """
    import mpmath as mp
    from .specfun import fundamental_eval_mp
    n = spec.n
    pair = FundamentalPair(spec.dimension, spec.mode)
    with mp.workdps(30 + int(math.ceil(digits))):
        log_mod, phases = [mp.mpf(0)], [mp.mpc(1)]
        tlog, tphases = [mp.mpf(0)], [mp.mpc(1)]
        if data is None:
            omega = mp.mpf(spec.omega)
            x = [mp.mpf(v) for v in spec.profile.jump_points]
        else:
            omega, x = data(spec)
        for ell in range(1, n + 1):
            c_l, c_r = mp.mpf(spec.speed(ell)), mp.mpf(spec.speed(ell + 1))
            z = omega * x[ell]
            f1l, df1l = fundamental_eval_mp(pair, 1, z / c_l)
            f1r, df1r = fundamental_eval_mp(pair, 1, z / c_r)
            f2r, df2r = fundamental_eval_mp(pair, 2, z / c_r)
            gt_plus = f1r * mp.conj(df1l) / c_l - df1r * mp.conj(f1l) / c_r
            gt_minus = df1l * f1r / c_l - df1r * f1l / c_r
            if gt_plus == 0:
                raise GammaDegenerate(
                    f"gamma-plus vanished at interface {ell}")
            g_plus = 1j * mp.exp(1j * (z / c_l - z / c_r)) * gt_plus
            g_minus = 1j * mp.exp(1j * (-z / c_l - z / c_r)) * gt_minus
            q = g_minus / g_plus
            w12 = f1r * df2r / c_r - df1r * f2r / c_r
            pref = g_plus / (2j * w12)
            u = mp.exp(-1j * omega * (x[ell] - x[ell - 1]) / c_l) * phases[-1]
            step = pref * (u + q * mp.conj(u))
            mag = abs(step)
            log_mod.append(log_mod[-1] + mp.log(mag))
            phases.append(step / mag)
            tstep = gt_plus / 2 * (tphases[-1] - (-1) ** ell
                                   * (gt_minus / gt_plus)
                                   * mp.conj(tphases[-1]))
            tmag = abs(tstep)
            tlog.append(tlog[-1] + mp.log(tmag))
            tphases.append(tstep / tmag)
        im_log = [mp.mpf('-inf')]
        im_sign = [mp.mpf(0)]
        for ell in range(1, n + 1):
            c_r = mp.mpf(spec.speed(ell + 1))
            im = (mp.exp(1j * omega * x[ell] / c_r) * phases[ell]).imag
            if im == 0:
                im_log.append(mp.mpf('-inf'))
                im_sign.append(mp.mpf(0))
            else:
                im_log.append(mp.log(abs(im)) + log_mod[ell])
                im_sign.append(mp.sign(im))
        return (np.array([_to_longdouble(v) for v in log_mod], dtype=_EXT),
                np.array([_to_clongdouble(v) for v in phases], dtype=_CEXT),
                np.array([_to_longdouble(v) for v in tlog], dtype=_EXT),
                np.array([_to_clongdouble(v) for v in tphases], dtype=_CEXT),
                np.array([_to_longdouble(v) for v in im_log], dtype=_EXT),
                np.array([float(v) for v in im_sign]))


def beta_sequence(spec: ProblemSpec, check_m0: bool = True) -> BetaSequence:
    """Run both recursions; for d=3, m=0 the simplified form is cross-checked.

    The chain runs in extended precision while accumulating an estimate of
    the decimal digits lost to cancellation (inside gamma-plus and in the
    interference step u + q*conj(u)); past ``_LOSS_LIMIT`` digits the whole
    sequence is recomputed in arbitrary precision sized to the loss.

    The d=3, m=0 cross-check asserts that the general (Wronskian-built)
    step and the jump-ratio step agree to 1e-12 in phase and log-modulus.
    """
    n = spec.n
    pair = FundamentalPair(spec.dimension, spec.mode)
    log_mod = np.zeros(n + 1, dtype=_EXT)
    phases = np.ones(n + 1, dtype=_CEXT)
    tlog = np.zeros(n + 1, dtype=_EXT)
    tphases = np.ones(n + 1, dtype=_CEXT)
    qs = np.zeros(n, dtype=complex)
    m0_path = spec.dimension == 3 and spec.mode == 0 and check_m0
    omega = _EXT(spec.omega)
    x = [_EXT(v) for v in spec.profile.jump_points]
    loss = 0.0
    for ell in range(1, n + 1):
        gt_plus, gt_minus, g_plus, _, q, gamma_loss = _gamma_core(spec, ell)
        qs[ell - 1] = complex(q)
        c_l, c_r = _EXT(spec.speed(ell)), _EXT(spec.speed(ell + 1))
        w12 = wronskian_w(pair, 1, 2, spec.speed(ell + 1),
                          spec.speed(ell + 1), spec.z[ell], dtype=_EXT)
        pref = g_plus / (2 * _IU * w12)
        delta = omega * (x[ell] - x[ell - 1]) / c_l
        u = _cexp(-delta) * phases[ell - 1]
        core = u + q * np.conj(u)
        if abs(core) > 0.0:
            loss += gamma_loss + max(
                0.0, float(np.log10((1.0 + abs(q)) / abs(core))))
        step = pref * core
        log_mod[ell], phases[ell] = _advance(log_mod[ell - 1], step)
        tstep = gt_plus / 2 * (
            tphases[ell - 1] - _EXT((-1.0) ** ell) * (gt_minus / gt_plus)
            * np.conj(tphases[ell - 1]))
        tlog[ell], tphases[ell] = _advance(tlog[ell - 1], tstep)
        if m0_path:
            q0 = (c_r - c_l) / (c_r + c_l)
            step0 = (u + q0 * np.conj(u)) / (1 + q0)
            dphase = abs(step0 / abs(step0) - phases[ell]) if step0 != 0 else 0
            dlog = abs(np.log(abs(step0)) + log_mod[ell - 1] - log_mod[ell])
            if dphase > _M0_CHECK_TOL or dlog > _M0_CHECK_TOL:
                raise AssertionError(
                    f"m=0 recursion paths diverged at ell={ell}: "
                    f"phase {dphase:.3e}, log-modulus {dlog:.3e}")
    im_log, im_sign, im_loss = _rotated_im(spec, log_mod, phases)
    if loss > _LOSS_LIMIT or im_loss > _LOSS_LIMIT:
        (log_mod, phases, tlog, tphases,
         im_log, im_sign) = _beta_mp(spec, 1.2 * (loss + im_loss) + 10.0)
    return BetaSequence(n=n, log_moduli=log_mod, phases=phases,
                        tilde_log_moduli=tlog, tilde_phases=tphases, q=qs,
                        loss_digits=loss, rot_im_log=im_log,
                        rot_im_sign=im_sign)


def _rotated_im(spec: ProblemSpec, log_mod, phases):
    """Extended-precision Im(e^{i z_ell/c_{ell+1}} beta_ell) in log/sign form.

    Also returns the decimal digits the column entries would lose to this
    extraction: the imaginary part can cancel far below the unit-modulus
    rotated phase, and the loss is weighted by how close the affected entry
    sits to the column's largest one (cancellation inside an entry that is
    itself negligible cannot surface in the assembled coefficients).
    """
    n = spec.n
    omega = _EXT(spec.omega)
    x = spec.profile.jump_points
    im_log = np.full(n + 1, -np.inf, dtype=_EXT)
    im_sign = np.zeros(n + 1)
    for ell in range(1, n + 1):
        im = (_cexp(omega * _EXT(x[ell]) / _EXT(spec.speed(ell + 1)))
              * phases[ell]).imag
        if im != 0.0:
            im_log[ell] = np.log(np.abs(im)) + log_mod[ell]
            im_sign[ell] = 1.0 if im > 0.0 else -1.0
    top = max(float(np.max(log_mod[:n])),
              float(np.max(im_log[1:], initial=-np.inf)))
    im_loss = 0.0
    for ell in range(1, n + 1):
        if im_sign[ell] != 0.0:
            depth = float(log_mod[ell] - im_log[ell]) \
                - max(0.0, top - float(im_log[ell]))
            im_loss = max(im_loss, depth / math.log(10.0))
        elif np.isfinite(log_mod[ell]):
            # an exact extended-precision zero may mask a tiny true value
            im_loss = max(im_loss, 19.0 - max(
                0.0, top - float(log_mod[ell])) / math.log(10.0))
    return im_log, im_sign, im_loss


def beta_real_recursion(spec: ProblemSpec) -> np.ndarray:
    """(Re beta_ell, Im beta_ell) via the 2x2 real one-step matrices."""
    n = spec.n
    pair = FundamentalPair(spec.dimension, spec.mode)
    out = np.zeros((n + 1, 2))
    out[0] = [1.0, 0.0]
    delta = spec.delta
    for ell in range(1, n + 1):
        g = gamma_q(spec, ell)
        w12 = wronskian_w(pair, 1, 2, spec.speed(ell + 1), spec.speed(ell + 1),
                          spec.z[ell])
        base = g.gamma_plus / (2j * w12)
        theta = base * cmath.exp(-1j * delta[ell - 1])
        phi = base * g.q * cmath.exp(1j * delta[ell - 1])
        M = np.array([
            [theta.real + phi.real, phi.imag - theta.imag],
            [theta.imag + phi.imag, theta.real - phi.real],
        ])
        out[ell] = M @ out[ell - 1]
    return out


@dataclass(frozen=True)
class GreenColumn:
    """Last column of the Green's operator, odd/even rows separated.

    ``odd_entries[ell-1]`` is row 2*ell-1 (the B_ell slot) and
    ``even_entries[ell-1]`` row 2*ell (the A_{ell+1} slot).  ``odd_log_mag``
    and ``even_log_mag`` carry the magnitudes in log space for
    configurations whose entries overflow doubles.
    """

    odd_entries: np.ndarray
    even_entries: np.ndarray
    odd_log_mag: np.ndarray
    even_log_mag: np.ndarray

    @property
    def n(self) -> int:
        return len(self.odd_entries)

    def max_abs(self) -> float:
        return float(np.exp(max(np.max(self.odd_log_mag),
                                np.max(self.even_log_mag, initial=-np.inf))))


def green_last_column(spec: ProblemSpec, beta: BetaSequence | None = None,
                      resonance_floor: float = NEAR_RESONANCE_FLOOR
                      ) -> GreenColumn:
    """Evaluate the closed-form last-column entries from the beta sequence."""
    if beta is None:
        beta = beta_sequence(spec)
    n = beta.n
    omega = _EXT(spec.omega)
    x = [_EXT(v) for v in spec.profile.jump_points]
    if beta.log_moduli[n] < math.log(resonance_floor):
        raise NearResonantDenominator(float(beta.log_moduli[n]))
    denom_phase = _cexp(omega * x[n] / _EXT(spec.speed(n + 1))) \
        * beta.phases[n]
    denom_log = beta.log_moduli[n]
    odd = np.zeros(n, dtype=complex)
    even = np.zeros(n, dtype=complex)
    odd_log = np.full(n, -np.inf)
    even_log = np.full(n, -np.inf)
    for ell in range(1, n + 1):
        num_phase = _cexp(omega * x[ell - 1] / _EXT(spec.speed(ell))) \
            * beta.phases[ell - 1]
        odd_log[ell - 1] = float(beta.log_moduli[ell - 1] - denom_log)
        odd[ell - 1] = complex(num_phase / denom_phase) * math.exp(
            min(odd_log[ell - 1], 700.0))
        if beta.rot_im_log is not None:
            im_log, sign = beta.rot_im_log[ell], beta.rot_im_sign[ell]
        else:
            im = (_cexp(omega * x[ell] / _EXT(spec.speed(ell + 1)))
                  * beta.phases[ell]).imag
            im_log = np.log(np.abs(im)) + beta.log_moduli[ell] \
                if im != 0.0 else -np.inf
            sign = float(np.sign(im))
        if sign != 0.0:
            even_log[ell - 1] = float(im_log - denom_log)
            # the scalar products feeding the companion sequence are purely
            # imaginary, so conjugation contributes the factor -i here
            even[ell - 1] = complex(-_IU * _EXT(sign) / denom_phase) \
                * math.exp(min(even_log[ell - 1], 700.0))
    return GreenColumn(odd_entries=odd, even_entries=even,
                       odd_log_mag=odd_log, even_log_mag=even_log)


def layer_coefficients(spec: ProblemSpec,
                       column: GreenColumn | None = None) -> CoefficientVector:
    """Recover (A_j, B_j) by scaling the Green column with the boundary data.

    For d=3, m=0 the outer coefficient satisfies |B_N| = |g| exactly (the
    scaled outgoing solution has unit modulus on the boundary); this is
    asserted as a cheap sanity check.
    """
    if column is None:
        column = green_last_column(spec)
    scale = rhs_scale(spec)
    n = column.n
    entries = np.zeros(2 * n, dtype=complex)
    entries[0::2] = column.odd_entries * scale    # B_1..B_n
    entries[1::2] = column.even_entries * scale   # A_2..A_{n+1}
    if spec.dimension == 3 and spec.mode == 0:
        g_abs = abs(complex(spec.boundary_coefficient))
        if abs(abs(scale) - g_abs) > 1e-12 * max(1.0, g_abs):
            raise AssertionError("outer coefficient magnitude drifted from |g|")
    return CoefficientVector(entries=entries, b_last=scale)
