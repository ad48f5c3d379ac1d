"""Far-field synthesis and factorization-method imaging for 2D penetrable media."""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateInputError,
    DegenerateSpectrumError,
    DomainError,
    FarscopeError,
    FormatError,
    GeometryError,
    NumericError,
    OracleError,
    SingularSystemError,
)
from .factorization import (
    EigenSystem,
    IndicatorField,
    hermitian_eig,
    hermitian_parts,
    indicator,
    indicator_field,
    operator_abs,
    sharp,
    test_function,
    verify_factorization,
)
from .farfield import (
    FarFieldMatrix,
    NoiseSpec,
    add_noise,
    assemble_F,
    directions,
    load_F,
    reciprocity_defect,
    save_F,
)
from .forward import (
    assemble_ls,
    far_field,
    mie_far_field,
    mie_interior_field,
    self_cell_integral,
    solve_incidence,
)
from .scene import (
    BoundaryCurve,
    RefractiveScene,
    SolverGrid,
    build_curve,
    contains,
    default_window,
    discretize,
    refractive_index,
)
from .special import bessel_j, bessel_y, hankel1
