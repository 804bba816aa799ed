"""Potential, Jacobi polynomials, the energy-dependent L2 basis and quadrature.

Lengths are measured in units of ``1/lam`` wherever the dimensionless radius
``rho = lam * r`` appears.  The basis used throughout is

    phi_n(r) = c_n exp(-mu*rho/2) (1 - exp(-rho)) P_n^(mu,1)(1 - 2 exp(-rho)),
    c_n = sqrt((n+mu+1)(2n+mu+2)/(n+1)),

with ``mu = 2 sqrt(-eps)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import betaln, gammaln

from .errors import DomainError, NoExtremumError, NonNormalizableError


@dataclass(frozen=True)
class PotentialParams:
    """Screened Coulomb potential with a barrier,
    ``V(r) = V0 (exp(-lam r) - gamma) / (exp(lam r) - 1)`` with ``V0 = -lam**2 C``.

    Outside ``0 < gamma < 1`` only the bound-state mode ``gamma * V0 > 0`` is
    admitted.
    """

    lam: float
    C: float
    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise DomainError(f"lam must be a positive inverse length, got {self.lam}")
        if not (np.isfinite(self.C) and np.isfinite(self.gamma)):
            raise DomainError("C and gamma must be finite")
        if not 0.0 < self.gamma < 1.0 and not self.gamma * self.V0 > 0:
            raise DomainError(
                f"gamma={self.gamma} is outside the main solvability class 0 < gamma < 1 "
                f"and gamma*V0 = {self.gamma * self.V0:g} is not positive"
            )

    @property
    def V0(self) -> float:
        return -self.lam**2 * self.C

    @property
    def D(self) -> float:
        return self.C * (2.0 * self.gamma - 1.0)

    @property
    def Z_eff(self) -> float:
        """Coefficient of the Coulomb singularity, ``lim r V(r)``."""
        return self.V0 * (1.0 - self.gamma) / self.lam

    @property
    def in_main_class(self) -> bool:
        return 0.0 < self.gamma < 1.0


@dataclass(frozen=True)
class BasisSpec:
    """Parameters of the basis ``phi_n``; only the ``nu = alpha = 1`` family exists."""

    mu: float
    N: int
    nu: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.mu < 0 or not np.isfinite(self.mu):
            raise DomainError(f"mu must be non-negative, got {self.mu}")
        if self.nu != 1.0 or self.alpha != 1.0:
            raise DomainError("only the nu = 1, alpha = 1 basis is supported")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"basis size must be a positive integer, got {self.N}")

    @property
    def beta(self) -> float:
        return self.mu / 2.0

    @classmethod
    def from_energy(cls, eps: float, N: int) -> "BasisSpec":
        if eps > 0:
            raise DomainError("the basis is real only for eps <= 0")
        return cls(mu=2.0 * np.sqrt(-eps), N=N)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss rule for the weight ``(1-y)**a (1+y)**b`` on ``(-1, 1)``."""

    nodes: np.ndarray
    weights: np.ndarray
    a: float
    b: float

    def integrate(self, values) -> float:
        return np.tensordot(np.asarray(values), self.weights, axes=([-1], [0]))


class Landmarks(NamedTuple):
    r0: float
    r1: float
    V_extremum: float
    Z_eff: float


def _one_minus_exp(x):
    return -np.expm1(-x)


def potential_value(params: PotentialParams, r):
    """Potential at radius ``r > 0`` (scalar or array)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("potential is singular at the origin; r must be > 0")
    x = params.lam * r
    em = np.exp(-x)
    out = params.V0 * (em - params.gamma) * em / _one_minus_exp(x)
    return out[()] if out.ndim == 0 else out


def potential_landmarks(params: PotentialParams) -> Landmarks:
    """Zero crossing ``r0``, extremum ``(r1, V(r1))`` and effective charge."""
    g = params.gamma
    if not 0.0 < g < 1.0:
        raise NoExtremumError(f"potential has no finite extremum for gamma={g}")
    t = 1.0 - np.sqrt(1.0 - g)
    return Landmarks(
        r0=-np.log(g) / params.lam,
        r1=-np.log(t) / params.lam,
        V_extremum=-params.V0 * t * t,
        Z_eff=params.Z_eff,
    )


def _check_jacobi_exponents(mu, nu):
    if mu <= -1 or nu <= -1:
        raise DomainError(f"Jacobi exponents must exceed -1, got ({mu}, {nu})")


def jacobi_table(N: int, mu: float, nu: float, y) -> np.ndarray:
    """``P_0 .. P_{N-1}`` of type ``(mu, nu)`` at ``y``; shape ``(N,) + y.shape``.

    Forward three-term recursion in the degree.
    """
    _check_jacobi_exponents(mu, nu)
    y = np.asarray(y, dtype=float)
    out = np.empty((N,) + y.shape)
    if N == 0:
        return out
    out[0] = 1.0
    if N > 1:
        out[1] = 0.5 * ((mu + nu + 2.0) * y + (mu - nu))
    s = mu + nu
    for n in range(2, N):
        c0 = 2.0 * n * (n + s) * (2 * n + s - 2)
        c1 = (2 * n + s - 1) * ((2 * n + s) * (2 * n + s - 2) * y + mu * mu - nu * nu)
        c2 = 2.0 * (n + mu - 1) * (n + nu - 1) * (2 * n + s)
        out[n] = (c1 * out[n - 1] - c2 * out[n - 2]) / c0
    return out


def jacobi_eval(n: int, mu: float, nu: float, y):
    """Jacobi polynomial ``P_n^(mu,nu)(y)``."""
    if n < 0:
        raise DomainError("degree must be non-negative")
    return jacobi_table(n + 1, mu, nu, y)[n]


def jacobi_norm_sq(n, mu: float, nu: float):
    """``int (1-y)^mu (1+y)^nu P_n^2 dy`` over [-1, 1]."""
    n = np.asarray(n, dtype=float)
    s = mu + nu
    with np.errstate(divide="ignore", invalid="ignore"):
        log_h = (
            (s + 1) * np.log(2.0)
            - np.log(2 * n + s + 1)
            + gammaln(n + mu + 1)
            + gammaln(n + nu + 1)
            - gammaln(n + s + 1)
            - gammaln(n + 1)
        )
    h = np.exp(log_h)
    # n = 0 with mu + nu = -1 hits 0 * inf above; the limit is the Beta mass
    zero = (n == 0)
    if np.any(zero):
        h = np.where(zero, np.exp((s + 1) * np.log(2.0) + betaln(mu + 1, nu + 1)), h)
    return h[()] if h.ndim == 0 else h


def basis_norm(n, mu: float):
    """Prefactor ``c_n`` of the basis element."""
    n = np.asarray(n, dtype=float)
    return np.sqrt((n + mu + 1) * (2 * n + mu + 2) / (n + 1))


def basis_element(n: int, spec: BasisSpec, lam: float, r):
    """Basis function ``phi_n(r)`` for the energy encoded in ``spec.mu``."""
    if n < 0:
        raise DomainError("index must be non-negative")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("r must be >= 0")
    x = lam * r
    em = np.exp(-x)
    y = 1.0 - 2.0 * em
    out = basis_norm(n, spec.mu) * np.exp(-0.5 * spec.mu * x) * _one_minus_exp(x) * jacobi_eval(n, spec.mu, 1.0, y)
    return out[()] if out.ndim == 0 else out


def _golub_welsch(diag, off, log_mass):
    x, v = eigh_tridiagonal(diag, off)
    w = np.exp(log_mass) * v[0] ** 2
    return x, w, v


def jacobi_recurrence(K: int, a: float, b: float):
    """Diagonal and off-diagonal of the orthonormal Jacobi-matrix for weight (a, b)."""
    k = np.arange(K, dtype=float)
    s = a + b
    diag = np.empty(K)
    with np.errstate(divide="ignore", invalid="ignore"):
        diag[:] = (b * b - a * a) / ((2 * k + s) * (2 * k + s + 2))
    diag[0] = (b - a) / (s + 2)
    kk = k[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        off2 = 4 * kk * (kk + a) * (kk + b) * (kk + s) / ((2 * kk + s) ** 2 * (2 * kk + s + 1) * (2 * kk + s - 1))
    if K > 1:
        off2[0] = 4 * (1 + a) * (1 + b) / ((2 + s) ** 2 * (3 + s))
    return diag, np.sqrt(off2)


def gauss_jacobi(K: int, a: float, b: float) -> QuadratureRule:
    """``K``-node Gauss rule for ``(1-y)**a (1+y)**b``, exact to degree ``2K-1``."""
    if K < 1:
        raise DomainError("need at least one node")
    _check_jacobi_exponents(a, b)
    diag, off = jacobi_recurrence(K, a, b)
    log_mass = (a + b + 1) * np.log(2.0) + betaln(a + 1, b + 1)
    x, w, _ = _golub_welsch(diag, off, log_mass)
    return QuadratureRule(nodes=x, weights=w, a=a, b=b)


def gauss_laguerre(K: int, alpha: float, return_vectors: bool = False):
    """``K``-node Gauss rule for ``x**alpha exp(-x)`` on ``(0, inf)``.

    With ``return_vectors`` the orthonormal eigenvector matrix ``V`` is also
    returned; ``V[n, k] = sqrt(w_k) L~_n(x_k)`` where ``L~_n`` are the
    orthonormal Laguerre polynomials with the standard sign convention.  This
    avoids evaluating high-degree polynomials at large nodes.
    """
    if K < 1:
        raise DomainError("need at least one node")
    if alpha <= -1:
        raise DomainError("alpha must exceed -1")
    k = np.arange(K, dtype=float)
    diag = 2 * k + alpha + 1
    off = np.sqrt(k[1:] * (k[1:] + alpha))
    x, w, v = _golub_welsch(diag, off, gammaln(alpha + 1))
    if not return_vectors:
        return x, w
    # positive off-diagonals generate (-1)^n L~_n.  Column signs are fixed on
    # the largest entry of each column (the n = 0 entry underflows at large
    # nodes), using the sign of the polynomial from a ratio recursion.
    cols = np.arange(K)
    peak = np.argmax(np.abs(v), axis=0)
    sign_p = np.ones(K)
    neg = np.zeros(K, dtype=bool)
    ratio = np.ones(K)
    for n in range(1, K):
        if n == 1:
            ratio = (x - diag[0]) / off[0]
        else:
            prev = np.where(ratio == 0, np.finfo(float).tiny, ratio)
            ratio = ((x - diag[n - 1]) - off[n - 2] / prev) / off[n - 1]
        neg ^= ratio < 0
        sign_p = np.where(peak == n, np.where(neg, -1.0, 1.0), sign_p)
    v = v * (sign_p * np.sign(v[peak, cols]))[None, :]
    v = v * ((-1.0) ** k)[:, None]
    return x, w, v


def overlap_matrix(spec: BasisSpec, K: int | None = None) -> np.ndarray:
    """Gram matrix ``Theta_nm = lam * int phi_n phi_m dr``.

    In ``y = 1 - 2 exp(-rho)`` the integrand is a polynomial of degree
    ``2N - 2`` against ``(1-y)**(mu-1) (1+y)**2``; ``K = N + 2`` nodes make it
    exact up to rounding.
    """
    mu = spec.mu
    if mu <= 0:
        raise NonNormalizableError("overlap diverges at mu = 0 (zero energy)")
    N = spec.N
    K = N + 2 if K is None else K
    if K < N:
        raise DomainError("quadrature order must be at least N for an exact overlap")
    _check_jacobi_exponents(mu - 1.0, 2.0)
    diag, off = jacobi_recurrence(K, mu - 1.0, 2.0)
    # weight mass divided by 2^(mu+2) from the change of variables
    log_mass = betaln(mu, 3.0)
    y, w, _ = _golub_welsch(diag, off, log_mass)
    P = jacobi_table(N, mu, 1.0, y) * basis_norm(np.arange(N), mu)[:, None]
    theta = (P * w) @ P.T
    return 0.5 * (theta + theta.T)
