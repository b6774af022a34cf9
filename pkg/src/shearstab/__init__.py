"""Long-wave linear stability of periodic shear flows in a truncated Fourier basis."""

from .errors import (
    ConfigError,
    NumericalError,
    RegimeError,
    ShearStabError,
    SingularUpdateError,
)
from .estimators import DenseEigensolver, GrowthRateModel, KatoEigensolver, NormalFormReducer
from .fourier import (
    FourierFunction,
    ShearProfile,
    inner_product,
    instability_margin,
    kolmogorov,
    parse_profile,
    partial_y_inverse,
    project,
    sin_plus_cos5,
    sobolev_norm,
)
from .normal_form import (
    BlockOperator,
    DecoupledForm,
    assemble_Q_remainder,
    block_decay_norm,
    block_diagonalize,
    decouple,
    homological_solve,
    quadratic_fixed_point,
    solve_horizontal_X,
    solve_vertical_Y,
)
from .operators import (
    OperatorMatrix,
    assemble_A,
    assemble_D,
    assemble_L,
    assemble_M,
    assemble_R,
    assemble_T_taylor,
)
from .resolvent import (
    Contour,
    RieszProjection,
    kato_isomorphism_check,
    kato_unstable_eigenpair,
    reference_vector,
    resolvent_M,
    riesz_projection,
    sherman_morrison_solve,
    stable_block_eigenvalues_kato,
)
from .spectrum import (
    SpectralReport,
    asymptotic_prediction,
    cross_validate,
    dense_spectrum,
    eigenfunction_field,
    linear_spectrum,
    scaling_study,
    taylor_dispersion_eigenvalue,
    taylor_scaling_study,
)

__version__ = "0.1.0"
