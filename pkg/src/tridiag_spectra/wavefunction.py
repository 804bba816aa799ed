"""Normalized S-wave bound states from the recursion polynomials.

On the spectrum, ``f_n = omega P_n(gamma)`` with ``omega = 1/sqrt(K)`` and
``K = sum_nm Theta_nm P_n P_m``.  Run forward, the recursion picks up the
dominant solution, so the truncated sum is only stable for a modest number of
terms (default ``N = 15``; :func:`truncation_diagnostic` shows where the
plateau ends).  For deep levels even that is too many, so by default the
coefficients are taken from the minimal solution instead, which agrees with
the forward recursion wherever the latter is stable.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import BasisSpec, PotentialParams, jacobi_table, overlap_matrix
from .errors import DomainError, NonNormalizableError, OffShellWarning, DivergenceWarning
from .spectra import DEFAULT_N, c_spectrum, energy_spectrum, mu_of_eps
from .tridiag import build_T_gamma, eigen_sym_tridiag, p_polynomials, q_polynomials, recursion_coefficients

DEFAULT_TRUNCATION = 15
OFF_SHELL_RTOL = 1e-6


def on_shell_mismatch(mu: float, gamma: float, C: float, N: int = DEFAULT_N) -> float:
    """Relative distance of ``C`` from the nearest C-spectrum point at ``mu``."""
    spec = c_spectrum(-0.25 * mu * mu, gamma, N)
    branch = spec.branch(C)
    if branch.size == 0:
        return np.inf
    return float(np.min(np.abs(branch - C)) / abs(C))


def kernel(mu: float, gamma: float, C: float, N: int = DEFAULT_TRUNCATION, check: bool = True):
    """``(K, tail)``: the kernel ``sum Theta_nm P_n P_m`` over ``n, m < N`` and
    the contribution of the last ring ``K_N - K_{N-1}``."""
    if mu <= 0:
        raise NonNormalizableError("kernel diverges at mu = 0 (zero energy)")
    if check and on_shell_mismatch(mu, gamma, C) > OFF_SHELL_RTOL:
        warnings.warn(
            f"(gamma={gamma}, C={C}) is off the parameter spectrum at mu={mu:.12g}",
            OffShellWarning,
            stacklevel=2,
        )
    P = p_polynomials(mu, gamma, C, N)[:N]
    theta = overlap_matrix(BasisSpec(mu=mu, N=N))
    K = float(P @ theta @ P)
    if N > 1:
        K_prev = float(P[:-1] @ theta[:-1, :-1] @ P[:-1])
    else:
        K_prev = 0.0
    return K, K - K_prev


def _partial_kernels(mu, gamma, C, N_max):
    P = p_polynomials(mu, gamma, C, N_max)[:N_max]
    theta = overlap_matrix(BasisSpec(mu=mu, N=N_max))
    M = theta * np.outer(P, P)
    # K_N is the sum of the leading N x N block
    return np.cumsum(np.cumsum(M, axis=0), axis=1).diagonal().copy()


@dataclass
class BoundStateSolution:
    """An S-wave bound state ``psi(r) = omega sum_m P_m phi_m(r)``."""

    params: PotentialParams
    eps: float
    N: int
    Q: np.ndarray
    P: np.ndarray
    kernel: float
    tail: float
    sign: float = 1.0

    @property
    def mu(self) -> float:
        return mu_of_eps(self.eps)

    @property
    def omega(self) -> float:
        return 1.0 / np.sqrt(self.kernel)

    @property
    def energy(self) -> float:
        """Physical energy ``E = eps lam**2 / 2``."""
        return 0.5 * self.eps * self.params.lam**2

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        x = self.params.lam * r
        mu = self.mu
        em = np.exp(-x)
        m = np.arange(self.N)
        coef = np.sqrt(m + 1 + 0.5 * mu) / (m + 1) * self.Q[: self.N]
        series = np.tensordot(coef, jacobi_table(self.N, mu, 1.0, 1.0 - 2.0 * em), axes=1)
        pref = self.sign * np.sqrt(2.0 * (mu + 1) / self.kernel)
        return pref * (-np.expm1(-x)) * np.exp(-0.5 * mu * x) * series

    def nodes(self, r_max: float | None = None, points: int = 20001, rel_floor: float = 1e-8) -> int:
        """Sign changes of ``psi`` on ``(0, r_max]``, ignoring the numerical tail."""
        lam = self.params.lam
        r_max = r_max if r_max is not None else (40.0 + 60.0 / max(self.mu, 1e-3)) / lam
        r = np.linspace(r_max / points, r_max, points)
        psi = self(r)
        keep = np.abs(psi) > rel_floor * np.max(np.abs(psi))
        s = np.sign(psi[keep])
        return int(np.sum(s[1:] != s[:-1]))


def _slope_sign(mu, Q, N):
    # psi'(0+) is proportional to sum_m sqrt(m+1+mu/2)/(m+1) Q_m P_m(-1),
    # and P_m^(mu,1)(-1) = (-1)^m (m+1)
    m = np.arange(N)
    s = np.sum(np.sqrt(m + 1 + 0.5 * mu) * (-1.0) ** m * Q[:N])
    return 1.0 if s >= 0 else -1.0


def minimal_solution(mu: float, gamma: float, C: float, N: int, N_big: int = DEFAULT_N):
    """``(Q_0..Q_N, P_0..P_N)`` from the ``T_gamma`` eigenvector nearest ``-1/C``.

    Unlike the forward recursion this follows the decaying solution, so it
    stays stable for any ``N < N_big``.
    """
    N_big = max(N_big, 2 * (N + 1))
    w, v = eigen_sym_tridiag(build_T_gamma(mu, gamma, N_big), vectors=True)
    g = v[:, int(np.argmin(np.abs(w + 1.0 / C)))]
    if g[0] == 0:
        raise DomainError("eigenvector has a vanishing leading component")
    Q = g[: N + 1] / g[0]
    a, _, _ = recursion_coefficients(mu, np.arange(N + 1))
    return Q, np.sqrt(a[0] / a) * Q


def eigenfunction_solution(params: PotentialParams, eps_n: float, N: int = DEFAULT_TRUNCATION,
                           method: str = "eigenvector") -> BoundStateSolution:
    """Build the normalized bound state at level energy ``eps_n``.

    ``method="eigenvector"`` (default) takes the coefficients from the minimal
    solution; ``method="recursion"`` runs the three-term recursion forward,
    which is stable only up to moderate ``N`` and fails early for deep levels.
    """
    if N < 1:
        raise DomainError("truncation N must be >= 1")
    mu = mu_of_eps(eps_n)
    if mu <= 0:
        raise NonNormalizableError("zero-energy state is not normalizable")
    gamma, C = params.gamma, params.C
    mismatch = on_shell_mismatch(mu, gamma, C)
    if method == "recursion":
        Q = q_polynomials(mu, gamma, C, N)
        P = p_polynomials(mu, gamma, C, N)
    elif method == "eigenvector":
        Q, P = minimal_solution(mu, gamma, C, N)
    else:
        raise DomainError(f"unknown method {method!r}")
    if mismatch > OFF_SHELL_RTOL:
        growth = float(np.max(np.abs(P[N // 2:])) / np.max(np.abs(P[: max(N // 2, 1)])))
        warnings.warn(
            f"eps={eps_n:.12g} is off the energy spectrum (relative C mismatch {mismatch:.2e}); "
            f"expansion coefficients grow by {growth:.2e} over the second half of the sum",
            DivergenceWarning,
            stacklevel=2,
        )
    theta = overlap_matrix(BasisSpec(mu=mu, N=N))
    Pn = P[:N]
    K = float(Pn @ theta @ Pn)
    tail = K - float(Pn[:-1] @ theta[:-1, :-1] @ Pn[:-1]) if N > 1 else K
    return BoundStateSolution(
        params=params, eps=float(eps_n), N=N, Q=Q, P=P, kernel=K, tail=tail, sign=_slope_sign(mu, Q, N)
    )


def eigenfunction(params: PotentialParams, eps_n: float, r_grid, N: int = DEFAULT_TRUNCATION,
                  method: str = "eigenvector") -> np.ndarray:
    """Sampled normalized ``psi(r, eps_n)`` with ``psi'(0+) > 0``."""
    return eigenfunction_solution(params, eps_n, N, method)(r_grid)


def bound_states(params: PotentialParams, N: int = DEFAULT_TRUNCATION, M: int = 20, method: str = "eigenvector"):
    """All S-wave bound states of ``params``, ground state first."""
    levels = energy_spectrum(params.gamma, params.C, M=M)
    return [eigenfunction_solution(params, e, N, method) for e in levels]


@dataclass
class TruncationRow:
    N: int
    kernel: float
    norm: float
    deviation: float


def truncation_diagnostic(params: PotentialParams, eps: float, N_range=range(1, 31), N_ref: int = DEFAULT_TRUNCATION):
    """Partial-sum norms ``omega**2 K_N`` for each ``N`` in ``N_range``.

    ``omega`` is fixed from the reference truncation ``N_ref``; on the
    spectrum the deviation ``|omega**2 K_N - 1|`` plateaus near zero up to the
    reference and then blows up, off the spectrum there is no plateau.
    """
    mu = mu_of_eps(eps)
    if mu <= 0:
        raise NonNormalizableError("zero-energy state is not normalizable")
    Ns = list(N_range)
    N_max = max(max(Ns), N_ref)
    Ks = _partial_kernels(mu, params.gamma, params.C, N_max)
    omega2 = 1.0 / Ks[N_ref - 1]
    return [TruncationRow(N=n, kernel=float(Ks[n - 1]), norm=float(omega2 * Ks[n - 1]),
                          deviation=float(abs(omega2 * Ks[n - 1] - 1.0))) for n in Ns]
