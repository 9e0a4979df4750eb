from .excitation import (
    PlaneWave,
    plane_wave,
    assemble_rhs,
    PolarizationError,
)

from .gmres import (
    GmresResult,
    gmres,
    ConvergenceError,
)

from .gram import (
    GramSolver,
    GramSolveError,
)

from .calderon import (
    CalderonSystem,
)

from .compression import (
    ReducedSystem,
    compress_mh,
)

from .result import (
    SolveResult,
)

from .solve import (
    solve_cc_cfier,
    solve_cfie,
    solve_efie,
    solve_mfie,
    solve_mh,
    solve_system,
    solve_scattering,
)
