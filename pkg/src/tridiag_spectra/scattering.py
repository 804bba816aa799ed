"""Scattering phase shift by direct integration of the radial equation.

The regular solution of

    u'' + [eps + 2C (exp(-rho) - gamma)/(exp(rho) - 1) - l(l+1)/rho**2] u = 0

is started from its Frobenius series (the 1/rho part of the potential enters
through the first correction ``-C(1-gamma) rho/(l+1)``), propagated by Numerov
and matched to Riccati-Bessel functions beyond the range of the potential.
Many energies are integrated together on a common grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit
from scipy.special import bernoulli, factorial, spherical_jn, spherical_yn

from .basis import PotentialParams
from .errors import AccuracyError, DomainError, FitError, RangeError

DEFAULT_STEP = 1e-3
SERIES_TERMS = 40
PHASE_TOL = 1e-6
MAX_HALVINGS = 4
TAIL_TOL = 1e-9
_BIG = 1e100


def default_rho_max(eps) -> float:
    return float(max(40.0, 15.0 / np.sqrt(np.min(eps))))


def default_rho_start(params: PotentialParams, l: int, eps) -> float:
    z = abs(params.C * (1.0 - params.gamma)) + abs(params.C)
    return float(min(0.05, 1.0 / (1.0 + z + np.sqrt(np.max(eps)) + l)))


def _potential_taylor(C, gamma, J):
    """Taylor coefficients of ``rho * 2C (exp(-rho) - gamma)/(exp(rho) - 1)``."""
    j = np.arange(J + 1)
    ber = bernoulli(J) / factorial(j)
    shifted = (-1.0) ** j / factorial(j)
    shifted[0] -= gamma
    return 2.0 * C * np.convolve(shifted, ber)[: J + 1]


def series_coefficients(params: PotentialParams, l: int, eps, J: int = SERIES_TERMS):
    """``c_j`` of the regular solution ``u = sum_j c_j rho**(j+l+1)``, ``c_0 = 1``."""
    eps = np.asarray(eps, dtype=float)
    q = _potential_taylor(params.C, params.gamma, J)
    c = np.zeros((J + 1,) + eps.shape)
    c[0] = 1.0
    for j in range(1, J + 1):
        s = sum(q[k] * c[j - 1 - k] for k in range(j))
        if j >= 2:
            s = s + eps * c[j - 2]
        c[j] = -s / (j * (j + 2 * l + 1))
    return c


def _series_value(c, l, rho):
    """Sum of the series at ``rho`` (scalar or 1-D); shape ``rho.shape + c.shape[1:]``."""
    p = np.arange(c.shape[0]) + l + 1
    return np.tensordot(np.power.outer(np.asarray(rho, dtype=float), p), c, axes=1)


def _reduced_potential(params: PotentialParams, l: int, rho):
    em = np.exp(-rho)
    return 2.0 * params.C * (em - params.gamma) * em / (-np.expm1(-rho)) - l * (l + 1) / rho**2


@dataclass
class _Run:
    rho: np.ndarray
    snaps: np.ndarray      # (n_snap, n_eps)
    zeros: np.ndarray      # sign changes of u over the whole integration
    full: np.ndarray | None = None


def _numerov(params, l, eps, h, rho_start, rho_max, snap_idx, keep_full=False):
    """Integrate for every energy in ``eps``; ``snap_idx`` has shape (n_snap, n_eps)."""
    n = int(round((rho_max - rho_start) / h))
    rho = rho_start + h * np.arange(n + 1)
    g = _reduced_potential(params, l, rho)
    c = series_coefficients(params, l, eps)
    u0 = _series_value(c, l, rho[0])
    u1 = _series_value(c, l, rho[1])
    # sign changes of the seed series on (0, rho_start]
    fine = np.linspace(rho_start / 400, rho[0], 400)
    seed_vals = _series_value(c, l, fine)
    zeros = np.sum(np.signbit(seed_vals[1:]) != np.signbit(seed_vals[:-1]), axis=0)
    zeros += np.signbit(u1) != np.signbit(u0)
    w = h * h / 12.0
    f0 = eps + g[0]
    f1 = eps + g[1]
    snaps = np.full(snap_idx.shape, np.nan)
    wanted = {}
    for s in range(snap_idx.shape[0]):
        for k in range(snap_idx.shape[1]):
            wanted.setdefault(int(snap_idx[s, k]), []).append((s, k))
    full = np.empty((n + 1, eps.size)) if keep_full else None
    if keep_full:
        full[0], full[1] = u0, u1
    for i in (0, 1):
        for s, k in wanted.get(i, ()):
            snaps[s, k] = (u0, u1)[i][k]
    # summed form: y = (1 + w f) u and its first difference are propagated,
    # which keeps roundoff growth linear in the number of steps
    y1 = (1.0 + w * f1) * u1
    dy = y1 - (1.0 + w * f0) * u0
    hh = h * h
    for i in range(1, n):
        dy = dy - hh * f1 * u1
        y1 = y1 + dy
        f1 = eps + g[i + 1]
        u2 = y1 / (1.0 + w * f1)
        zeros += np.signbit(u2) != np.signbit(u1)
        u1 = u2
        if keep_full:
            full[i + 1] = u2
        hits = wanted.get(i + 1)
        if hits:
            for s, k in hits:
                snaps[s, k] = u2[k]
        big = np.abs(u1) > _BIG
        if big.any():
            u1 = np.where(big, u1 / _BIG, u1)
            y1 = np.where(big, y1 / _BIG, y1)
            dy = np.where(big, dy / _BIG, dy)
            snaps[:, big] /= _BIG
            if keep_full:
                full[: i + 2, big] /= _BIG
    return _Run(rho=rho, snaps=snaps, zeros=zeros, full=full)


def radial_solution(params: PotentialParams, l: int, eps: float, rho_max: float | None = None,
                    step: float = DEFAULT_STEP, rho_start: float | None = None):
    """``(rho, u)`` of the regular solution normalized as ``u ~ rho**(l+1)`` at the origin."""
    if eps <= 0:
        raise DomainError("scattering energies must be positive")
    e = np.array([float(eps)])
    rho_max = default_rho_max(e) if rho_max is None else rho_max
    rho_start = default_rho_start(params, l, e) if rho_start is None else rho_start
    run = _numerov(params, l, e, step, rho_start, rho_max, np.zeros((0, 1), dtype=int), keep_full=True)
    return run.rho, run.full[:, 0]


def _riccati(l, x):
    return x * spherical_jn(l, x), x * spherical_yn(l, x)


def _tan_match(l, k, ra, rb, ua, ub):
    ja, ya = _riccati(l, k * ra)
    jb, yb = _riccati(l, k * rb)
    return np.arctan((ua * jb - ub * ja) / (ua * yb - ub * ya))


def _free_zero_count(l, x_end):
    """Zeros of ``x j_l(x)`` on (0, x_end]."""
    out = np.empty(x_end.shape, dtype=int)
    for k, xe in enumerate(x_end):
        x = np.linspace(1e-3, xe, max(int(xe / 0.05), 10))
        v = spherical_jn(l, x)
        out[k] = int(np.sum(np.signbit(v[1:]) != np.signbit(v[:-1])))
    return out


def _phases_once(params, l, eps, h, rho_start, rho_max):
    k = np.sqrt(eps)
    n = int(round((rho_max - rho_start) / h))
    quarter = np.maximum(np.round(0.5 * np.pi / k / h).astype(int), 1)
    idx = np.vstack([np.full(eps.size, n), n - quarter, n - 2 * quarter, np.full(eps.size, n - 1)])
    if np.any(idx < 2):
        raise RangeError("matching radii fall inside the integration start region")
    run = _numerov(params, l, eps, h, rho_start, rho_max, idx)
    rho = run.rho
    r = rho[idx]
    u = run.snaps
    # the neglected tail shifts delta by about |W(rho)| / k at the inner radius
    tail = np.abs(_reduced_potential(params, 0, r[2])) / k
    if np.max(tail) > TAIL_TOL:
        raise RangeError(f"matching radius rho={r[2].min():.3g} lies inside the range of the potential "
                         f"(tail phase {np.max(tail):.1e})")
    d1 = _tan_match(l, k, r[0], r[1], u[0], u[1])
    d2 = _tan_match(l, k, r[1], r[2], u[1], u[2])
    diff = np.abs(np.angle(np.exp(2j * (d1 - d2)))) / 2
    # branch from Pruefer angles of u and of the free solution at rho_max
    du = (u[0] - u[3]) / h
    s = np.where(run.zeros % 2 == 0, 1.0, -1.0)
    theta_u = np.pi * run.zeros + np.arctan2(s * u[0], s * du / k)
    jr, _ = _riccati(l, k * r[0])
    jdr = (jr - _riccati(l, k * r[3])[0]) / h
    zf = _free_zero_count(l, k * r[0])
    sf = np.where(zf % 2 == 0, 1.0, -1.0)
    theta_f = np.pi * zf + np.arctan2(sf * jr, sf * jdr / k)
    branch = np.round((theta_u - theta_f - d1) / np.pi).astype(int)
    return d1, branch, diff


@dataclass
class PhaseShift:
    """Phase shift ``delta`` in (-pi/2, pi/2] with the branch ``n``; the
    continuous (Levinson) phase is ``delta + n pi``."""

    eps: np.ndarray
    delta: np.ndarray
    branch: np.ndarray
    error: np.ndarray
    match_error: np.ndarray

    @property
    def unwrapped(self) -> np.ndarray:
        return self.delta + np.pi * self.branch


def phase_shift(params: PotentialParams, l: int, eps, step: float | None = None, tol: float = PHASE_TOL,
                rho_max: float | None = None, rho_start: float | None = None) -> PhaseShift:
    """Phase shifts at one or many energies.

    The step is halved until successive results agree to ``tol`` (Richardson
    estimate for a fourth-order scheme); failing that after a few halvings
    raises :class:`AccuracyError`.
    """
    if int(l) != l or l < 0:
        raise DomainError("angular momentum must be a non-negative integer")
    scalar = np.ndim(eps) == 0
    e = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any(e <= 0):
        raise DomainError("scattering energies must be positive")
    if params.C == 0:
        # no potential: the regular solution is the free one
        z = np.zeros(e.size)
        out = PhaseShift(eps=e, delta=z, branch=z.astype(int), error=z, match_error=z)
        return _scalar(out) if scalar else out
    rho_max = default_rho_max(e) if rho_max is None else float(rho_max)
    rho_start = default_rho_start(params, l, e) if rho_start is None else float(rho_start)
    h0 = min(DEFAULT_STEP, 0.05 / np.sqrt(e.max())) if step is None else float(step)
    d, b, m = _phases_once(params, l, e, h0, rho_start, rho_max)
    err = np.full(e.size, np.inf)
    active = np.arange(e.size)
    h = h0
    for _ in range(MAX_HALVINGS):
        h /= 2
        dn, bn, mn = _phases_once(params, l, e[active], h, rho_start, rho_max)
        # Richardson estimate of the remaining error for a fourth-order scheme
        err[active] = np.abs(np.angle(np.exp(2j * (dn - d[active]))) / 2) / 15.0
        d[active], b[active], m[active] = dn, bn, mn
        active = active[err[active] > tol]
        if active.size == 0:
            break
    else:
        raise AccuracyError(f"phase shift not converged: step-halving estimate {err.max():.2e} > {tol:g}")
    # keep delta in (-pi/2, pi/2]
    wrap = d <= -0.5 * np.pi
    d = np.where(wrap, d + np.pi, d)
    b = np.where(wrap, b - 1, b)
    out = PhaseShift(eps=e, delta=d, branch=b, error=err, match_error=m)
    return _scalar(out) if scalar else out


def _scalar(ps: PhaseShift) -> PhaseShift:
    return PhaseShift(*(np.asarray(getattr(ps, f)[0]) for f in ("eps", "delta", "branch", "error", "match_error")))


@dataclass
class PhaseShiftCurve:
    l: int
    eps: np.ndarray
    delta: np.ndarray
    params: PotentialParams | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.eps = np.asarray(self.eps, dtype=float)
        self.delta = np.asarray(self.delta, dtype=float)
        if self.eps.size > 1 and not np.all(np.diff(self.eps) > 0):
            raise DomainError("curve energies must be strictly increasing")


def phase_shift_curve(params: PotentialParams, l: int, eps_range, n_samples: int = 200,
                      max_jump: float = 0.05, max_rounds: int = 8, **kwargs) -> PhaseShiftCurve:
    """Continuous ``delta(eps)`` on ``eps_range``, densified where it varies fast."""
    lo, hi = map(float, eps_range)
    if not 0 < lo < hi:
        raise DomainError("energy range must satisfy 0 < eps_min < eps_max")
    eps = np.linspace(lo, hi, n_samples)
    res = phase_shift(params, l, eps, **kwargs)
    delta = res.unwrapped
    for _ in range(max_rounds):
        gap = np.abs(np.diff(delta)) > max_jump
        if not gap.any():
            break
        new = 0.5 * (eps[:-1][gap] + eps[1:][gap])
        extra = phase_shift(params, l, new, **kwargs).unwrapped
        eps = np.concatenate([eps, new])
        delta = np.concatenate([delta, extra])
        order = np.argsort(eps)
        eps, delta = eps[order], delta[order]
    delta = np.unwrap(delta, period=np.pi)
    return PhaseShiftCurve(l=l, eps=eps, delta=delta, params=params, meta={"n_samples": int(eps.size)})


@dataclass(frozen=True)
class ResonanceFit:
    eps_res: float
    width: float
    background: tuple
    residual: float

    @property
    def pole(self) -> complex:
        return complex(self.eps_res, -0.5 * self.width)


def _bw_model(e, a, b, er, width):
    return a + b * (e - er) + 0.5 * np.pi - np.arctan(2.0 * (er - e) / width)


def locate_resonance(curve: PhaseShiftCurve, contrast: float = 10.0, window: float = 8.0):
    """Fit a resonant rise plus a linear background; ``None`` if no resonance."""
    e, d = curve.eps, curve.delta
    if e.size < 8:
        raise FitError("curve has too few samples to look for a resonance")
    slope = np.diff(d) / np.diff(e)
    mid = 0.5 * (e[1:] + e[:-1])
    k = int(np.argmax(slope))
    background = np.median(np.abs(slope))
    if slope[k] <= 0 or slope[k] < contrast * max(background, 1e-300):
        return None
    width0 = 2.0 / slope[k]
    er0 = mid[k]
    sel = np.abs(e - er0) < window * width0
    if sel.sum() < 8:
        raise FitError("too few samples across the resonance; densify the curve")
    ee, dd = e[sel], d[sel]
    a0 = dd[0] - _bw_model(ee[0], 0.0, 0.0, er0, width0)
    try:
        p, _ = curve_fit(_bw_model, ee, dd, p0=[a0, 0.0, er0, width0], maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"resonance fit did not converge: {exc}") from exc
    a, b, er, width = p
    if width <= 0:
        raise FitError("fitted width is not positive")
    resid = float(np.sqrt(np.mean((_bw_model(ee, *p) - dd) ** 2)))
    return ResonanceFit(eps_res=float(er), width=float(width), background=(float(a), float(b)), residual=resid)
