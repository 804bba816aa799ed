"""Parameter spectra, critical strengths and the energy spectrum.

At a fixed energy the C-parameter spectrum is ``-1/chi`` for the eigenvalues
``chi`` of ``T_gamma``; the gamma-parameter spectrum is ``(1 - t)/2`` for the
eigenvalues ``t`` of ``T_C``.  The energy spectrum for given ``(gamma, C)`` is
obtained by inverting the traces ``C_n(eps)``: a Thiele continued fraction
through the sampled trace gives ``eps_n(C)``, which is then polished by a
bracketed root solve on the exact trace.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares

from .errors import DegenerateStrengthError, DomainError, FitError, TraceError
from .tridiag import build_T_C, build_T_gamma, eigen_sym_tridiag, q_polynomial_zeros

#: eigenvalues of T_gamma below this fraction of the largest are C = infinity levels
CHI_MIN_REL = 1e-12

DEFAULT_N = 200


def mu_of_eps(eps: float) -> float:
    if eps > 0:
        raise DomainError(f"bound-state basis requires eps <= 0, got {eps}")
    return 2.0 * np.sqrt(-eps)


def eps_of_mu(mu):
    return -0.25 * np.asarray(mu) ** 2


@dataclass
class ParameterSpectrum:
    """Discrete set of strengths (``kind="C"``) or shapes (``kind="gamma"``)
    admitting an exact solution at energy ``eps``.

    For the C kind, ``positive`` is ascending and ``negative`` descending, so
    index ``n`` on either branch is level ``n``.  For the gamma kind,
    ``values`` is ascending and ``admissible`` marks ``0 <= gamma <= 1``.
    """

    eps: float
    kind: str
    positive: np.ndarray = field(default_factory=lambda: np.empty(0))
    negative: np.ndarray = field(default_factory=lambda: np.empty(0))
    values: np.ndarray = field(default_factory=lambda: np.empty(0))
    admissible: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=bool))

    def branch(self, sign: float) -> np.ndarray:
        if self.kind != "C":
            raise DomainError("branches exist only for the C spectrum")
        return self.positive if sign > 0 else self.negative

    @property
    def levels(self):
        if self.kind == "C":
            return [(+1, n, v) for n, v in enumerate(self.positive)] + [
                (-1, n, v) for n, v in enumerate(self.negative)
            ]
        return list(enumerate(self.values))

    @property
    def empty(self) -> bool:
        if self.kind == "C":
            return self.positive.size == 0 and self.negative.size == 0
        return self.values.size == 0


def _split_chi(chi: np.ndarray):
    chi = np.asarray(chi)
    if chi.size == 0:
        return np.empty(0), np.empty(0)
    cut = CHI_MIN_REL * np.max(np.abs(chi))
    keep = np.abs(chi) > cut
    C = -1.0 / chi[keep]
    return np.sort(C[C > 0]), np.sort(C[C < 0])[::-1]


def c_spectrum(eps: float, gamma: float, N: int = DEFAULT_N, method: str = "lapack") -> ParameterSpectrum:
    """C-parameter spectrum at energy ``eps`` for shape ``gamma``."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"C spectrum is defined here for 0 <= gamma <= 1, got {gamma}")
    chi = eigen_sym_tridiag(build_T_gamma(mu_of_eps(eps), gamma, N), method=method)
    pos, neg = _split_chi(chi)
    return ParameterSpectrum(eps=eps, kind="C", positive=pos, negative=neg)


def gamma_spectrum(eps: float, C: float, N: int = DEFAULT_N) -> ParameterSpectrum:
    """gamma-parameter spectrum at energy ``eps`` for strength ``C``."""
    if C == 0:
        raise DegenerateStrengthError("gamma spectrum needs C != 0")
    t = eigen_sym_tridiag(build_T_C(mu_of_eps(eps), C, N))
    g = np.sort((1.0 - t) / 2.0)
    return ParameterSpectrum(eps=eps, kind="gamma", values=g, admissible=(g >= 0) & (g <= 1))


def critical_strengths(eps: float, N: int = DEFAULT_N):
    """``(C_n^+(eps), C_n^-(eps))``: thresholds from gamma = 0 and gamma = 1."""
    if eps > 0:
        raise DomainError("critical strengths are defined for eps <= 0")
    return c_spectrum(eps, 0.0, N).positive, c_spectrum(eps, 1.0, N).negative


def zero_energy_thresholds(gamma: float, sign: float, N: int = DEFAULT_N) -> np.ndarray:
    """``C-hat_n(gamma)`` on the branch with the sign of ``sign``."""
    return c_spectrum(0.0, gamma, N).branch(sign)


def bound_state_count(gamma: float, C: float, N: int = DEFAULT_N) -> int:
    """Number of S-wave bound states: thresholds strictly below ``|C|``."""
    if C == 0:
        return 0
    thresholds = zero_energy_thresholds(gamma, C, N)
    return int(np.sum(np.abs(thresholds) < abs(C)))


def spectrum_via_polynomial_zeros(mu: float, gamma: float, N: int) -> np.ndarray:
    """C values at the zeros of ``Q_N`` (ordered by ascending ``-1/C``)."""
    if N < 2:
        raise DomainError("N must be >= 2")
    chi = q_polynomial_zeros(mu, gamma, N)
    with np.errstate(divide="ignore"):
        return -1.0 / chi


class ThieleInterpolant:
    """Continued-fraction interpolant through the points ``(x_i, y_i)``

        f(x) = a_0 + (x - x_0) / (a_1 + (x - x_1) / (a_2 + ...)),

    with the ``a_j`` from inverse differences (point-wise Pade / Schlessinger
    form).  The fit order is ``M = len(x) - 1``.
    """

    def __init__(self, max_perturb: int = 8):
        self.max_perturb = max_perturb

    def fit(self, x, y):
        x = np.asarray(x, dtype=float).copy()
        y = np.asarray(y, dtype=float).copy()
        if x.size != y.size or x.size < 1:
            raise FitError("need matching non-empty sample arrays")
        if np.unique(x).size != x.size:
            raise FitError("abscissae must be distinct")
        for _ in range(self.max_perturb + 1):
            coef, bad = self._inverse_differences(x, y)
            if bad is None:
                self.x_, self.coef_ = x, coef
                return self
            # degenerate reciprocal difference: nudge that sample by one ulp
            y[bad] = np.nextafter(y[bad], np.inf)
        raise FitError("reciprocal differences stay degenerate after perturbation")

    @staticmethod
    def _inverse_differences(x, y):
        n = x.size
        cur = y.copy()
        coef = np.empty(n)
        coef[0] = cur[0]
        for j in range(1, n):
            den = cur[j:] - cur[j - 1]
            if np.any(den == 0):
                return None, j + int(np.argmax(den == 0))
            cur[j:] = (x[j:] - x[j - 1]) / den
            if not np.all(np.isfinite(cur[j:])):
                return None, j
            coef[j] = cur[j]
        return coef, None

    @property
    def order(self) -> int:
        return self.coef_.size - 1

    def predict(self, t):
        t = np.asarray(t, dtype=float)
        a, x = self.coef_, self.x_
        v = np.full(t.shape, a[-1])
        for j in range(a.size - 2, -1, -1):
            # at a node the tail drops out exactly, even when it is 0 or inf
            with np.errstate(divide="ignore", invalid="ignore"):
                v = np.where(t == x[j], a[j], a[j] + (t - x[j]) / v)
        return v[()] if v.ndim == 0 else v

    def derivative(self, t, h=None):
        t = float(t)
        h = h or 1e-6 * max(1.0, abs(t))
        return (self.predict(t + h) - self.predict(t - h)) / (2 * h)


@dataclass
class SpectrumTrace:
    """Samples ``(eps_k, C_n(eps_k))`` of level ``n`` on one sign branch."""

    n: int
    sign: int
    gamma: float
    eps: np.ndarray
    C: np.ndarray
    N: int = DEFAULT_N

    def __post_init__(self):
        dC = np.diff(self.C)
        if self.C.size > 1 and not (np.all(dC > 0) or np.all(dC < 0)):
            raise TraceError(f"trace of level {self.n} is not monotone in eps")
        if self.eps.size > 1 and not np.all(np.diff(self.eps) < 0):
            raise TraceError("eps samples must be strictly decreasing")

    def reaches(self, C: float) -> bool:
        return min(self.C[0], self.C[-1]) <= C <= max(self.C[0], self.C[-1])

    def window(self, C: float, M: int) -> np.ndarray:
        """Indices of the ``M + 1`` contiguous samples centred on ``C``."""
        if M + 1 > self.C.size:
            raise FitError(f"fit order M={M} exceeds the {self.C.size} available samples")
        k = int(np.searchsorted(np.abs(self.C), abs(C)))
        lo = min(max(k - (M + 1) // 2, 0), self.C.size - (M + 1))
        return np.arange(lo, lo + M + 1)

    def fit(self, C: float, M: int) -> ThieleInterpolant:
        idx = self.window(C, M)
        return ThieleInterpolant().fit(self.C[idx], self.eps[idx])

    def level_value(self, eps: float) -> float:
        """Exact trace value ``C_n(eps)`` from a fresh eigen solve."""
        branch = c_spectrum(eps, self.gamma, self.N).branch(self.sign)
        if branch.size <= self.n:
            return np.inf * self.sign
        return branch[self.n]


def default_eps_grid(gamma: float, C: float, N: int = DEFAULT_N, points: int = 60) -> np.ndarray:
    """``eps = 0`` followed by log-spaced energies from -1e-3 down past the ground level."""
    sign = 1 if C > 0 else -1
    deep = -10.0
    for _ in range(60):
        branch = c_spectrum(deep, gamma, N).branch(sign)
        if branch.size and abs(branch[0]) > abs(C):
            break
        deep *= 4.0
    else:
        raise TraceError("could not find an energy deep enough to bracket C")
    grid = -np.logspace(-3, np.log10(-deep * 1.5), points - 1)
    return np.concatenate([[0.0], grid])


def spectrum_traces(gamma: float, C: float, eps_grid=None, N: int = DEFAULT_N):
    """Traces ``C_n(eps)`` of every level that is bound at zero energy."""
    if C == 0:
        raise DegenerateStrengthError("energy spectrum needs C != 0")
    if not 0.0 < gamma < 1.0:
        raise DomainError("energy spectrum is computed for 0 < gamma < 1")
    sign = 1 if C > 0 else -1
    eps = np.asarray(default_eps_grid(gamma, C, N) if eps_grid is None else eps_grid, dtype=float)
    eps = np.sort(eps)[::-1]
    nlev = bound_state_count(gamma, C, N)
    table = np.full((eps.size, nlev), np.nan)
    for k, e in enumerate(eps):
        br = c_spectrum(e, gamma, N).branch(sign)[:nlev]
        table[k, : br.size] = br
    traces = []
    for n in range(nlev):
        ok = np.isfinite(table[:, n])
        traces.append(SpectrumTrace(n=n, sign=sign, gamma=gamma, eps=eps[ok], C=table[ok, n], N=N))
    return traces


@dataclass
class EnergyLevel:
    n: int
    eps: float
    eps_fit: float
    M: int


def _refine(trace: SpectrumTrace, C: float, eps_guess: float) -> float:
    """Solve ``C_n(eps) = C`` in ``mu``, bracketing from the trace samples."""
    mus = 2.0 * np.sqrt(-trace.eps)
    absC = np.abs(trace.C)
    k = int(np.searchsorted(absC, abs(C)))
    lo_mu = mus[max(k - 1, 0)]
    hi_mu = mus[min(k, mus.size - 1)]

    def f(mu):
        return abs(trace.level_value(eps_of_mu(mu))) - abs(C)

    guess = 2.0 * np.sqrt(max(-eps_guess, 0.0))
    # tighten the bracket around the continued-fraction estimate when possible
    if lo_mu < guess < hi_mu:
        d = 1e-6 * max(guess, 1e-3)
        a, b = max(lo_mu, guess - d), min(hi_mu, guess + d)
        fa, fb = f(a), f(b)
        if fa * fb <= 0:
            lo_mu, hi_mu = a, b
    fa, fb = f(lo_mu), f(hi_mu)
    if fa == 0:
        return float(eps_of_mu(lo_mu))
    if fb == 0:
        return float(eps_of_mu(hi_mu))
    if fa * fb > 0:
        raise TraceError(f"level {trace.n} is not bracketed by its samples")
    mu = brentq(f, lo_mu, hi_mu, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return float(eps_of_mu(mu))


def energy_levels(gamma: float, C: float, M: int = 20, eps_grid=None, N: int = DEFAULT_N, refine: bool = True):
    """Bound levels with both the continued-fraction and refined energies."""
    if M < 4:
        raise FitError("continued-fraction order M must be >= 4")
    out = []
    for tr in spectrum_traces(gamma, C, eps_grid, N):
        if not tr.reaches(C):
            continue
        e_fit = float(tr.fit(C, M).predict(C))
        e = _refine(tr, C, e_fit) if refine else e_fit
        out.append(EnergyLevel(n=tr.n, eps=e, eps_fit=e_fit, M=M))
    return out


def energy_spectrum(gamma: float, C: float, eps_grid=None, M: int = 20, N: int = DEFAULT_N, refine: bool = True) -> np.ndarray:
    """S-wave bound-state energies ``eps_0 < eps_1 < ...`` (may be empty)."""
    levels = energy_levels(gamma, C, M=M, eps_grid=eps_grid, N=N, refine=refine)
    return np.sort(np.array([lv.eps for lv in levels], dtype=float))


def recover_parameters(target_minus_eps, sign: int = 1, gamma0=None, C0=None, M: int = 20, N: int = DEFAULT_N):
    """Exploratory search for ``(gamma, C)`` reproducing a list of ``-eps_n``.

    Scans a coarse grid for the starting point (unless given) and polishes
    with least squares in the relative level error.  Returns
    ``(gamma, C, residual_norm)``.
    """
    target = np.sort(np.asarray(target_minus_eps, dtype=float))[::-1]
    nt = target.size

    def levels(g, c):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            e = energy_spectrum(g, c, M=M, N=N)
        return -e

    def resid(p):
        g, c = p
        if not 0 < g < 1 or c * sign <= 0:
            return np.full(nt, 1e3)
        try:
            e = levels(g, c)
        except Exception:
            return np.full(nt, 1e3)
        if e.size < nt:
            e = np.concatenate([e, np.zeros(nt - e.size)])
        return (e[:nt] - target) / np.maximum(target, 1e-3)

    if gamma0 is None or C0 is None:
        best = None
        for g in np.linspace(0.05, 0.95, 10):
            for c in sign * np.geomspace(1, 2000, 16):
                if bound_state_count(g, c, N) < nt:
                    continue
                r = np.linalg.norm(resid((g, c)))
                if best is None or r < best[0]:
                    best = (r, g, c)
        if best is None:
            raise FitError("no (gamma, C) on the scan grid binds enough levels")
        _, gamma0, C0 = best
    sol = least_squares(resid, x0=[gamma0, C0], x_scale=[0.1, abs(C0)], xtol=1e-14, ftol=1e-14)
    return float(sol.x[0]), float(sol.x[1]), float(np.linalg.norm(sol.fun))
