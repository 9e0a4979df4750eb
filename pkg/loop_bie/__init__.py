from .__about__ import __version__

from .config import (
    Formulation,
    QuadratureConfig,
    LboConfig,
    SystemConfig,
    FmmConfig,
)

from .job_report import (
    JobReport,
    JobReportBuilder,
    JobState,
    ErrorGroup,
)

from .mesh import (
    ControlMesh,
    load_control_mesh,
    dump_control_mesh,
    loop_subdivide,
    MeshFormatError,
    DegenerateFaceError,
    NonManifoldError,
    OrientationError,
    TopologyError,
)

from .surface import (
    LimitSurface,
    SurfaceQuadrature,
)

from .spectral import (
    SpectralBasis,
    assemble_lbo,
    solve_mhb,
    EigensolverError,
    ZeroEigenvalueError,
)

from .operators import (
    Wavenumber,
    wavenumber,
    OperatorSet,
    assemble_operators,
    CoincidentPointsError,
    QuadratureError,
    DimensionError,
    ContainerFormatError,
)

from .fmm import (
    fmm_apply,
    fmm_operator_set,
    IllSeparatedError,
    PrecisionError,
)

from .solver import (
    PlaneWave,
    plane_wave,
    SolveResult,
    solve_scattering,
    PolarizationError,
    ConvergenceError,
    GramSolveError,
)

from .postproc import (
    FarFieldPattern,
    far_field,
    far_field_error,
    mie_reference,
    GridMismatchError,
)
