"""Spectra, bound states, resonances and phase shifts of the screened Coulomb
potential with a barrier, ``V(r) = V0 (exp(-lam r) - gamma) / (exp(lam r) - 1)``,
solved in an energy-dependent basis where the wave operator is tridiagonal."""

from .basis import (
    BasisSpec,
    Landmarks,
    PotentialParams,
    QuadratureRule,
    basis_element,
    gauss_jacobi,
    gauss_laguerre,
    jacobi_eval,
    overlap_matrix,
    potential_landmarks,
    potential_value,
)
from .errors import (
    AccuracyError,
    DegenerateStrengthError,
    DivergenceWarning,
    DomainError,
    FitError,
    NoExtremumError,
    NonNormalizableError,
    NumericError,
    OffShellWarning,
    RangeError,
    TraceError,
    TridiagError,
)
from .resonances import ComplexSpectrum, RotationConfig, build_complex_hamiltonian, complex_spectrum, stabilize
from .scattering import PhaseShiftCurve, ResonanceFit, locate_resonance, phase_shift, phase_shift_curve, radial_solution
from .spectra import (
    ParameterSpectrum,
    SpectrumTrace,
    ThieleInterpolant,
    bound_state_count,
    c_spectrum,
    critical_strengths,
    energy_levels,
    energy_spectrum,
    gamma_spectrum,
    spectrum_via_polynomial_zeros,
)
from .tridiag import (
    SymTridiag,
    build_T_C,
    build_T_gamma,
    eigen_sym_tridiag,
    p_polynomials,
    q_polynomials,
    recursion_coefficients,
    scaled_coefficients,
)
from .wavefunction import BoundStateSolution, bound_states, eigenfunction, eigenfunction_solution, kernel, truncation_diagnostic

__version__ = "0.1.0"
