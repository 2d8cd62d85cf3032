"""Phase-plane (Fermi) curves of 1D wave functions and the quantization rules they obey."""

from .errors import DomainError, FermiCurveError, InputError
from .fermi_map import (
    FermiFunction,
    PhaseCurve,
    QuadraticFermiForm,
    curve_area,
    curve_from_fermi,
    factor_unimodular,
    fermi_from_wavefunction,
    gaussian_fermi_closed_form,
    hermite_fermi_closed_form,
    verify_fermi_operator,
)
from .inverse_map import (
    CurvePotentialBundle,
    check_quantization,
    fg_from_curve,
    potential_from_curve,
    reconstruct_wavefunction,
)
from .numerics import ToleranceConfig
from .quantization import (
    Spectrum,
    action_integral,
    find_turning_points,
    maxu_rule_evaluate,
    numerov_eigensolve,
    qian_dong_solve,
    spectrum,
    wkb_energy,
)
from .states import (
    Grid,
    PhysicalConstants,
    Potential,
    SampledWavefunction,
    make_hermite_state,
    make_squeezed_gaussian,
    polar_decompose,
)
from .wigner import PhaseSpaceGrid, wigner_gaussian_closed, wigner_numeric

__version__ = "0.1.0"
