from .tree import (
    FmmTree,
    build_tree,
    IllSeparatedError,
)

from .engine import (
    FmmEngine,
    direct_potentials,
    PrecisionError,
)

from .apply import (
    FmmOperator,
    fmm_apply,
    fmm_operator_set,
)

from .study import (
    OrderError,
    patch_interaction_error,
    error_vs_order,
    error_vs_order_report,
)
