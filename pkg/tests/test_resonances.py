import numpy as np
import pytest

from reference_data import ROTATION_LEVELS
from tridiag_spectra.basis import PotentialParams
from tridiag_spectra.errors import AccuracyError, DomainError
from tridiag_spectra.resonances import (
    RotationConfig,
    build_complex_hamiltonian,
    classify_point,
    complex_spectrum,
    default_eta,
    laguerre_matrices,
    stabilize,
)
from tridiag_spectra.spectra import energy_spectrum

P80 = PotentialParams(lam=1.0, C=80.0, gamma=0.5)


@pytest.fixture(scope="module")
def rotation_runs():
    out = {}
    for (g, C, l) in ROTATION_LEVELS:
        p = PotentialParams(1.0, C, g)
        out[(g, C, l)] = complex_spectrum(p, RotationConfig.for_params(p, l=l), check_quadrature=True)
    return out


def nearest(values, x):
    values = np.asarray(values)
    k = int(np.argmin(np.abs(values - x)))
    return values[k], k


# -- configuration ---------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(theta=-0.1), dict(theta=np.pi / 2), dict(eta=0.0), dict(N=1),
                                dict(N=10, K=15), dict(l=-1), dict(l=0.5)])
def test_config_validation(kw):
    with pytest.raises(DomainError):
        RotationConfig(**kw)


def test_config_defaults():
    cfg = RotationConfig.for_params(P80, l=2)
    assert cfg.N == 120 and cfg.quad_order == 240 and cfg.theta == 1.0
    assert cfg.eta == default_eta(P80) == pytest.approx(2 * np.sqrt(80.0))
    assert default_eta(PotentialParams(3.0, 0.1, 0.5)) == 3.0


# -- matrix --------------------------------------------------------------------------

def test_laguerre_matrices_known_forms():
    S, T = laguerre_matrices(1, 6, 2.0)
    assert np.allclose(S, S.T) and np.allclose(T, T.T)
    assert np.all(np.linalg.eigvalsh(S) > 0)
    # S and T are tridiagonal
    assert np.count_nonzero(np.triu(S, 2)) == 0 and np.count_nonzero(np.triu(T, 2)) == 0


def test_free_operator_matches_numerical_matrix_elements():
    from scipy.integrate import quad
    from scipy.special import eval_genlaguerre, gammaln

    l, eta = 1, 1.7
    S, T = laguerre_matrices(l, 4, eta)

    def xi(n, rho, d=0):
        a = np.exp(0.5 * (gammaln(n + 1) - gammaln(n + 2 * l + 2)))
        x = eta * rho
        f = lambda x: x ** (l + 1) * np.exp(-x / 2) * eval_genlaguerre(n, 2 * l + 1, x)
        if d == 0:
            return a * f(x)
        h = 1e-4
        return a * eta * (f(x + h) - f(x - h)) / (2 * h)

    for n, m in [(0, 0), (1, 2), (3, 3), (0, 1)]:
        s = quad(lambda r: xi(n, r) * xi(m, r), 0, 80 / eta)[0]
        t = quad(lambda r: xi(n, r, 1) * xi(m, r, 1) + l * (l + 1) / r**2 * xi(n, r) * xi(m, r), 0, 80 / eta)[0]
        assert S[n, m] == pytest.approx(s, rel=1e-8, abs=1e-10)
        assert T[n, m] == pytest.approx(t, rel=1e-6, abs=1e-8)


def test_matrix_is_complex_symmetric():
    H = build_complex_hamiltonian(P80, RotationConfig.for_params(P80, l=1))
    assert np.array_equal(H, H.T)
    assert np.max(np.abs(H - H.conj().T)) > 1.0


def test_unrotated_matrix_is_real_symmetric():
    cfg = RotationConfig.for_params(P80, theta=0.0)
    H = build_complex_hamiltonian(P80, cfg)
    assert np.max(np.abs(H.imag)) <= 1e-13 * np.max(np.abs(H))
    assert np.array_equal(H, H.T)
    w = np.linalg.eigvalsh(H.real)
    for e in ROTATION_LEVELS[(0.5, 80.0, 0)][0]:
        assert np.min(np.abs(w - e)) / abs(e) < 1e-6


def test_quadrature_check_detects_undersampling():
    with pytest.raises(AccuracyError):
        build_complex_hamiltonian(P80, RotationConfig(l=0, theta=0.5, eta=1.0, N=10, K=20), check_quadrature=True)


def test_quadrature_converged_at_default():
    build_complex_hamiltonian(P80, RotationConfig.for_params(P80, l=2), check_quadrature=True)


# -- free particle ----------------------------------------------------------------------

@pytest.mark.parametrize("l", [0, 2])
@pytest.mark.parametrize("theta", [0.3, 1.0])
def test_free_particle_lies_on_rotated_ray(l, theta):
    p = PotentialParams(lam=1.0, C=0.0, gamma=0.5)
    cs = complex_spectrum(p, RotationConfig(l=l, theta=theta, eta=1.0, N=60))
    assert np.max(np.abs(np.angle(cs.eigenvalues) + 2 * theta)) < 1e-8
    assert np.all(cs.kinds == "cut")
    assert cs.bound.size == 0 and cs.resonances.size == 0


# -- classification --------------------------------------------------------------------

def test_classify_point():
    assert classify_point(-5.0 + 1e-8j, 0.5) == "bound"
    assert classify_point(10 * np.exp(-1.0j), 0.5) == "cut"
    assert classify_point(4.0 - 0.1j, 0.5) == "resonance"


@pytest.mark.parametrize("key", list(ROTATION_LEVELS))
def test_reference_levels(rotation_runs, key):
    bound, res = ROTATION_LEVELS[key]
    cs = rotation_runs[key]
    for e in bound:
        v, k = nearest(cs.eigenvalues, e)
        assert abs(v - e) / abs(e) < 1e-5
        assert cs.kinds[k] == "bound"
    for e in res:
        v, k = nearest(cs.eigenvalues, e)
        assert abs(v - e) / abs(e) < 1e-3
        assert cs.kinds[k] == "resonance"
        assert v.imag < 0 and np.angle(v) > -2 * cs.theta


def test_bound_states_tight(rotation_runs):
    for key in [(0.5, 80.0, 0), (0.5, 80.0, 1), (0.7, 100.0, 0), (0.3, 50.0, 1)]:
        cs = rotation_runs[key]
        assert np.allclose(cs.bound, ROTATION_LEVELS[key][0], rtol=1e-6, atol=0)


def test_resonance_ordering_and_cut(rotation_runs):
    cs = rotation_runs[(0.5, 80.0, 0)]
    assert cs.resonances[0] == pytest.approx(14.78518500 - 1.61589438j, rel=1e-6)
    assert np.all(np.diff(-cs.resonances.imag) >= 0)
    assert cs.cut.size > 20
    assert np.all(np.abs(np.angle(cs.cut) + 2 * cs.theta) < 0.05)
    kinds = [k for k, _, _ in cs.rows()]
    assert set(kinds) <= {"bound", "cut", "resonance", "unclassified"}


def test_swave_agrees_with_parameter_spectrum(rotation_runs):
    for key in [(0.5, 80.0, 0), (0.3, 50.0, 0)]:
        g, C, _ = key
        eps = energy_spectrum(g, C)
        bound = rotation_runs[key].bound
        assert bound.size == eps.size
        assert np.allclose(bound, eps, rtol=1e-6, atol=0)


@pytest.mark.parametrize("C,count", [(3.0, 0), (10.0, 1), (20.0, 2)])
def test_swave_bound_count(C, count):
    p = PotentialParams(1.0, C, 0.4)
    assert complex_spectrum(p).bound.size == count


def test_lambda_invariance():
    for l in (0, 1):
        a = complex_spectrum(P80, RotationConfig.for_params(P80, l=l))
        p2 = PotentialParams(lam=2.0, C=80.0, gamma=0.5)
        b = complex_spectrum(p2, RotationConfig.for_params(p2, l=l))
        assert np.allclose(np.sort_complex(a.eigenvalues), np.sort_complex(b.eigenvalues), rtol=1e-10, atol=1e-10)


# -- stability ----------------------------------------------------------------------------

def test_bound_states_independent_of_angle():
    eta = default_eta(P80)
    st = stabilize(P80, 0, theta_grid=[0.2, 0.4, 0.6], N_grid=[120], eta_grid=[eta], rtol=1e-8)
    assert np.allclose(st.bound, ROTATION_LEVELS[(0.5, 80.0, 0)][0], rtol=1e-6)
    assert all(p.drift < 1e-8 for p in st.points if p.kind == "bound")
    assert st.diagnostics["runs"] == 3


def test_resonance_stable_once_exposed():
    eta = default_eta(P80)
    target = 14.78518500 - 1.61589438j
    assert -2 * 0.3 < np.angle(target)
    st = stabilize(P80, 0, theta_grid=[0.3, 0.6, 1.0], N_grid=[120, 150], eta_grid=[eta, 1.2 * eta])
    v, k = nearest(st.resonances, target)
    assert abs(v - target) / abs(target) < 1e-6
    assert st.points[[p.value for p in st.points].index(v)].drift < 1e-4


def test_cut_rotates_with_angle():
    p = PotentialParams(1.0, 0.0, 0.5)
    a = complex_spectrum(p, RotationConfig(theta=0.4, eta=1.0, N=40)).eigenvalues
    b = complex_spectrum(p, RotationConfig(theta=0.6, eta=1.0, N=40)).eigenvalues
    # same moduli, argument shifted by -2 * (0.6 - 0.4)
    assert np.allclose(np.sort(np.abs(b)), np.sort(np.abs(a)), rtol=1e-10)
    assert np.allclose(np.angle(b), np.angle(a) - 0.4, atol=1e-8)


def test_stabilize_needs_grids():
    with pytest.raises(DomainError):
        stabilize(P80, 0, [], [100], [1.0])


def test_spurious_points_flagged(rotation_runs):
    for cs in rotation_runs.values():
        res = cs.kinds == "resonance"
        assert np.all(cs.drift[res] < 2e-5)
        assert np.all(cs.drift[cs.kinds == "unclassified"] > 2e-5)
