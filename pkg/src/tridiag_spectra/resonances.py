"""Bound states and resonances for any angular momentum by complex rotation.

The radial Hamiltonian (in ``rho = lam r`` and ``eps = 2E/lam**2``)

    h = -d2/drho2 + l(l+1)/rho**2 + 2 V(rho)/lam**2

is rotated, ``rho -> rho exp(i theta)``, and represented in the Laguerre basis

    xi_n(rho) = a_n x**(l+1) exp(-x/2) L_n^(2l+1)(x),   x = eta rho / lam,

in which the overlap and the free part are tridiagonal in closed form and
``<xi_n|1/rho|xi_m>`` is diagonal.  The potential matrix is evaluated by Gauss
quadrature against ``x**(2l+1) exp(-x)`` applied to the regular function
``rho V(rho exp(i theta))``, so the Coulomb singularity is integrated exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np
from scipy.linalg import cholesky, eigvals, solve_triangular

from .basis import PotentialParams, gauss_laguerre
from .errors import AccuracyError, DomainError

DEFAULT_THETA = 1.0
DEFAULT_SIZE = 120
CUT_ANGLE_TOL = 0.05
BOUND_IMAG_RTOL = 1e-6
STABILITY_RTOL = 2e-5
STABILIZE_RTOL = 1e-4


def default_eta(params: PotentialParams) -> float:
    """Basis scale tuned to the Coulomb depth of the potential."""
    return params.lam * max(1.0, 2.0 * np.sqrt(abs(params.C)))


@dataclass(frozen=True)
class RotationConfig:
    """Numerical (non-physical) parameters of a complex-rotation run."""

    l: int = 0
    theta: float = DEFAULT_THETA
    eta: float = 1.0
    N: int = DEFAULT_SIZE
    K: int | None = None

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 0:
            raise DomainError("angular momentum must be a non-negative integer")
        if not 0.0 <= self.theta < 0.5 * np.pi:
            raise DomainError("rotation angle must lie in [0, pi/2)")
        if self.eta <= 0:
            raise DomainError("basis scale eta must be positive")
        if self.N < 2:
            raise DomainError("basis size must be >= 2")
        if self.K is not None and self.K < 2 * self.N:
            raise DomainError("quadrature order K must be >= 2N")

    @property
    def quad_order(self) -> int:
        return 2 * self.N if self.K is None else self.K

    @classmethod
    def for_params(cls, params: PotentialParams, l: int = 0, theta: float = DEFAULT_THETA,
                   N: int = DEFAULT_SIZE, eta: float | None = None, K: int | None = None):
        return cls(l=l, theta=theta, eta=default_eta(params) if eta is None else eta, N=N, K=K)


def _rotated_rho_potential(params: PotentialParams, rho, theta):
    """``rho * 2 V(rho e^{i theta}) / lam**2``; finite at rho = 0."""
    z = rho * np.exp(1j * theta)
    em = np.exp(-z)
    small = np.abs(z) < 1e-8
    with np.errstate(invalid="ignore", divide="ignore"):
        val = -2.0 * params.C * rho * (em - params.gamma) * em / (-np.expm1(-z))
    lim = -2.0 * params.C * (1.0 - params.gamma) * np.exp(-1j * theta)
    return np.where(small, lim, val)


def laguerre_matrices(l: int, N: int, eta_rho: float):
    """Overlap ``S`` and free operator ``T`` (``-d2 + l(l+1)/rho**2``)."""
    n = np.arange(N, dtype=float)
    diag = 2.0 * (n + l + 1)
    off = -np.sqrt(n[1:] * (n[1:] + 2 * l + 1))
    S = (np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)) / eta_rho
    T = 0.25 * eta_rho * (np.diag(diag) - np.diag(off, 1) - np.diag(off, -1))
    return S, T


def _potential_matrix(params, config, K=None):
    l, N = config.l, config.N
    K = config.quad_order if K is None else K
    eta_rho = config.eta / params.lam
    x, _, v = gauss_laguerre(K, 2 * l + 1, return_vectors=True)
    g = _rotated_rho_potential(params, x / eta_rho, config.theta)
    P = v[:N]
    return (P * g) @ P.T


def build_complex_hamiltonian(params: PotentialParams, config: RotationConfig, check_quadrature: bool = False):
    """Complex-symmetric matrix of the rotated Hamiltonian in the orthonormalized
    basis; its eigenvalues are ``eps`` directly."""
    eta_rho = config.eta / params.lam
    S, T = laguerre_matrices(config.l, config.N, eta_rho)
    V = _potential_matrix(params, config)
    if check_quadrature:
        V2 = _potential_matrix(params, config, K=2 * config.quad_order)
        err = np.max(np.abs(V2 - V)) / max(np.max(np.abs(V2)), 1e-300)
        if err > 1e-10:
            raise AccuracyError(f"potential quadrature not converged (K-doubling change {err:.2e})")
    H = np.exp(-2j * config.theta) * T + V
    L = cholesky(S, lower=True)
    A = solve_triangular(L, H, lower=True)
    A = solve_triangular(L, A.T, lower=True).T
    A = 0.5 * (A + A.T)
    if config.theta == 0:
        A = A.real.astype(complex)
    return A


@dataclass
class ComplexSpectrum:
    """Classified eigenvalues of one rotated Hamiltonian."""

    eigenvalues: np.ndarray
    kinds: np.ndarray
    drift: np.ndarray
    theta: float
    l: int

    def _of(self, kind):
        sel = self.kinds == kind
        return self.eigenvalues[sel]

    @property
    def bound(self) -> np.ndarray:
        return np.sort(self._of("bound").real)

    @property
    def resonances(self) -> np.ndarray:
        r = self._of("resonance")
        return r[np.argsort(-r.imag)]

    @property
    def cut(self) -> np.ndarray:
        return self._of("cut")

    @property
    def unclassified(self) -> np.ndarray:
        return self._of("unclassified")

    def rows(self):
        order = np.lexsort((self.eigenvalues.real, self.kinds))
        for i in order:
            yield self.kinds[i], self.eigenvalues[i], self.drift[i]


def classify_point(e: complex, theta: float) -> str:
    """Geometric class of one eigenvalue (before any stability test)."""
    if e.real < 0 and abs(e.imag) < BOUND_IMAG_RTOL * max(1.0, abs(e.real)):
        return "bound"
    if abs(e) > 0 and abs(np.angle(e) + 2 * theta) < CUT_ANGLE_TOL:
        return "cut"
    return "resonance"


def _nearest_rel(points, ref):
    if ref.size == 0:
        return np.full(points.shape, np.inf)
    d = np.abs(points[:, None] - ref[None, :]).min(axis=1)
    return d / np.maximum(np.abs(points), 1.0)


def complex_spectrum(params: PotentialParams, config: RotationConfig | None = None,
                     stability_rtol: float = STABILITY_RTOL, check_quadrature: bool = False) -> ComplexSpectrum:
    """Eigenvalues of the rotated Hamiltonian, each tagged bound / resonance /
    cut / unclassified.

    Non-cut points are re-computed with a perturbed basis (larger ``N`` and
    ``eta``); a point whose relative drift exceeds ``stability_rtol`` is not a
    physical pole and is tagged ``unclassified``.
    """
    config = RotationConfig.for_params(params) if config is None else config
    ev = eigvals(build_complex_hamiltonian(params, config, check_quadrature=check_quadrature))
    alt = replace(config, N=config.N + max(config.N // 4, 8), eta=1.2 * config.eta,
                  K=None if config.K is None else 2 * (config.N + max(config.N // 4, 8)))
    ev_alt = eigvals(build_complex_hamiltonian(params, alt))
    kinds = np.array([classify_point(e, config.theta) for e in ev], dtype=object)
    drift = _nearest_rel(ev, ev_alt)
    unstable = (kinds != "cut") & (drift > stability_rtol)
    kinds[unstable] = "unclassified"
    return ComplexSpectrum(eigenvalues=ev, kinds=kinds.astype(str), drift=drift, theta=config.theta, l=config.l)


@dataclass
class StablePoint:
    value: complex
    drift: float
    kind: str


@dataclass
class StabilizedSpectrum:
    points: list
    diagnostics: dict = field(default_factory=dict)

    @property
    def bound(self):
        return np.sort([p.value.real for p in self.points if p.kind == "bound"])

    @property
    def resonances(self):
        r = np.array([p.value for p in self.points if p.kind == "resonance"])
        return r[np.argsort(-r.imag)] if r.size else r


def stabilize(params: PotentialParams, l: int, theta_grid, N_grid, eta_grid, rtol: float = STABILIZE_RTOL) -> StabilizedSpectrum:
    """Eigenvalues that stay put across every (theta, N, eta) combination.

    The drift of a point is the largest relative distance to its nearest
    neighbour in any other run.  Points sitting on the rotated cut of the
    reference run are never reported.
    """
    configs = [RotationConfig(l=l, theta=t, N=n, eta=e) for t, n, e in product(theta_grid, N_grid, eta_grid)]
    if not configs:
        raise DomainError("grids must be non-empty")
    runs = [eigvals(build_complex_hamiltonian(params, c)) for c in configs]
    ref, ref_cfg = runs[0], configs[0]
    cand = np.array([e for e in ref if classify_point(e, ref_cfg.theta) != "cut"])
    drift = np.zeros(cand.shape)
    for ev in runs[1:]:
        drift = np.maximum(drift, _nearest_rel(cand, ev))
    pts = [StablePoint(value=complex(e), drift=float(d), kind=classify_point(e, ref_cfg.theta))
           for e, d in zip(cand, drift) if d < rtol]
    diag = {"runs": len(configs), "candidates": int(cand.size), "min_drift": float(drift.min()) if drift.size else np.inf}
    return StabilizedSpectrum(points=pts, diagnostics=diag)
