"""Three-term recursion of the S-wave problem and its tridiagonal matrices.

For fixed ``mu`` the expansion coefficients ``f_n`` satisfy

    (1 - 2 gamma) f_n = (a_n / C - d_n) f_n + b_{n-1} f_{n-1} + b_n f_{n+1},

i.e. ``T_C f = (1 - 2 gamma) f``.  Rescaling ``g_n = sqrt(a_n / a_0) f_n`` gives
``T_gamma g = -C**-1 g`` whose entries decay like ``n**-2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DegenerateStrengthError, DomainError, NumericError


@dataclass(frozen=True)
class SymTridiag:
    """Real symmetric tridiagonal matrix stored as its two bands."""

    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float).ravel()
        e = np.asarray(self.offdiag, dtype=float).ravel()
        if d.size < 1 or e.size != d.size - 1:
            raise DomainError(f"inconsistent band lengths {d.size} and {e.size}")
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    def __len__(self):
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def matvec(self, v):
        v = np.asarray(v)
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out


def recursion_coefficients(mu: float, n):
    """``(a_n, d_n, b_n)`` of the recursion; ``n`` may be an array."""
    n = np.asarray(n, dtype=float)
    a = (n + 1) * (n + mu + 1)
    d = (mu * mu - 1) / ((2 * n + mu + 1) * (2 * n + mu + 3))
    b = 2 / (2 * n + mu + 3) * np.sqrt(
        (n + 1) * (n + 2) * (n + mu + 1) * (n + mu + 2) / ((2 * n + mu + 2) * (2 * n + mu + 4))
    )
    return a, d, b


def scaled_coefficients(mu: float, gamma: float, n):
    """``(A_n, B_n) = ((2 gamma - 1 - d_n) / a_n, b_n / sqrt(a_n a_{n+1}))``."""
    n = np.asarray(n, dtype=float)
    a, d, b = recursion_coefficients(mu, n)
    a1 = (n + 2) * (n + mu + 2)
    return (2 * gamma - 1 - d) / a, b / np.sqrt(a * a1)


def build_T_gamma(mu: float, gamma: float, N: int) -> SymTridiag:
    """Matrix whose eigenvalues are ``-1/C`` on the C-parameter spectrum."""
    if N < 1:
        raise DomainError("N must be >= 1")
    A, B = scaled_coefficients(mu, gamma, np.arange(N))
    return SymTridiag(A, B[:-1])


def build_T_C(mu: float, C: float, N: int) -> SymTridiag:
    """Matrix whose eigenvalues are ``1 - 2 gamma`` on the gamma-parameter spectrum."""
    if C == 0:
        raise DegenerateStrengthError("T_C needs C != 0")
    if N < 1:
        raise DomainError("N must be >= 1")
    a, d, b = recursion_coefficients(mu, np.arange(N))
    return SymTridiag(a / C - d, b[:-1])


def _ql_implicit(d, e, vectors):
    """Implicit-shift QL with Wilkinson shifts (in place on copies)."""
    d = np.array(d, dtype=float)
    n = d.size
    e = np.concatenate([np.asarray(e, dtype=float), [0.0]])
    z = np.eye(n) if vectors else None
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= np.finfo(float).eps * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                raise NumericError("QL iteration failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0 else -r))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = np.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if vectors:
                    zi1 = z[:, i + 1].copy()
                    z[:, i + 1] = s * z[:, i] + c * zi1
                    z[:, i] = c * z[:, i] - s * zi1
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    order = np.argsort(d, kind="stable")
    return d[order], (z[:, order] if vectors else None)


def _fix_signs(v):
    # first component with non-negligible magnitude made positive
    idx = np.argmax(np.abs(v) > 1e-12 * np.abs(v).max(axis=0), axis=0)
    s = np.sign(v[idx, np.arange(v.shape[1])])
    s[s == 0] = 1.0
    return v * s


def eigen_sym_tridiag(T: SymTridiag, vectors: bool = False, method: str = "lapack", select=None):
    """Eigenvalues (ascending) and optionally unit eigenvectors of ``T``.

    ``method`` is ``"lapack"`` (MRRR via scipy), ``"ql"`` (implicit QL,
    pure Python) or ``"bisect"`` (Sturm bisection; honours ``select``, an
    inclusive index range ``(lo, hi)``).  Eigenvector signs are fixed so
    the first significant component is positive.
    """
    d, e = T.diag, T.offdiag
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
        raise NumericError("matrix has non-finite entries")
    if method == "ql":
        w, v = _ql_implicit(d, e, vectors)
        if select is not None:
            lo, hi = select
            w = w[lo:hi + 1]
            v = v[:, lo:hi + 1] if vectors else None
    elif method in ("lapack", "bisect"):
        kwargs = {}
        if select is not None:
            kwargs = dict(select="i", select_range=tuple(select))
        if method == "bisect":
            kwargs["lapack_driver"] = "stebz"
        if len(d) == 1:
            w = d.copy()
            v = np.ones((1, 1))
            if select is not None:
                w, v = w[select[0]:select[1] + 1], v[:, select[0]:select[1] + 1]
        elif vectors:
            w, v = eigh_tridiagonal(d, e, **kwargs)
        else:
            w = eigh_tridiagonal(d, e, eigvals_only=True, **kwargs)
            v = None
    else:
        raise DomainError(f"unknown eigensolver method {method!r}")
    if vectors:
        return w, _fix_signs(v)
    return w


def q_polynomials(mu: float, gamma: float, C, N: int) -> np.ndarray:
    """``Q_0 .. Q_N`` at strength ``C`` (polynomials of degree n in ``1/C``).

    ``C`` may be an array; the result then has shape ``(N+1,) + C.shape``.
    """
    C = np.asarray(C, dtype=float)
    if np.any(C == 0):
        raise DegenerateStrengthError("Q polynomials need C != 0")
    x = 1.0 / C
    A, B = scaled_coefficients(mu, gamma, np.arange(max(N, 1)))
    Q = np.empty((N + 1,) + C.shape)
    Q[0] = 1.0
    if N >= 1:
        Q[1] = -(x + A[0]) / B[0]
    for n in range(2, N + 1):
        Q[n] = -((x + A[n - 1]) * Q[n - 1] + B[n - 2] * Q[n - 2]) / B[n - 1]
    return Q


def p_polynomials(mu: float, gamma: float, C, N: int) -> np.ndarray:
    """``P_n = sqrt(a_0 / a_n) Q_n``; these solve the unscaled recursion."""
    Q = q_polynomials(mu, gamma, C, N)
    a, _, _ = recursion_coefficients(mu, np.arange(N + 1))
    scale = np.sqrt(a[0] / a)
    return Q * scale.reshape((-1,) + (1,) * (Q.ndim - 1))


def sturm_count(mu: float, gamma: float, N: int, chi) -> np.ndarray:
    """Number of zeros of ``Q_N`` (as a function of ``chi = -1/C``) above ``chi``.

    The recursion is run on successive ratios ``Q_n / Q_{n-1}`` so nothing
    overflows; the count is the number of negative ratios.
    """
    chi = np.asarray(chi, dtype=float)
    A, B = scaled_coefficients(mu, gamma, np.arange(N))
    tiny = np.finfo(float).tiny ** 0.5
    count = np.zeros(chi.shape, dtype=int)
    ratio = (chi - A[0]) / B[0]
    count += ratio < 0
    for n in range(2, N + 1):
        prev = np.where(ratio == 0, tiny, ratio)
        ratio = ((chi - A[n - 1]) - B[n - 2] / prev) / B[n - 1]
        count += ratio < 0
    return count


def q_polynomial_zeros(mu: float, gamma: float, N: int, max_iter: int = 2000) -> np.ndarray:
    """Zeros of ``Q_N`` in ``chi = -1/C``, ascending, by Sturm bisection."""
    if N < 1:
        raise DomainError("N must be >= 1")
    A, B = scaled_coefficients(mu, gamma, np.arange(N))
    Bp = np.concatenate([[0.0], B[:N - 1], [0.0]])
    rad = np.abs(Bp[:-1]) + np.abs(Bp[1:])
    lo0, hi0 = np.min(A - rad), np.max(A + rad)
    span = max(hi0 - lo0, 1.0)
    lo = np.full(N, lo0 - 1e-3 * span)
    hi = np.full(N, hi0 + 1e-3 * span)
    need = N - np.arange(N)  # k-th smallest zero has N - k zeros at or above it
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        above = sturm_count(mu, gamma, N, mid) >= need
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        width = hi - lo
        if np.all(width <= 2 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi)) + 1e-300):
            break
    return 0.5 * (lo + hi)
