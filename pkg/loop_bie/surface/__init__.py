from .limit_surface import (
    LimitSurface,
    SurfaceSample,
    SurfaceSamples,
    evaluate_patch,
    current_basis_at,
    mean_curvature_max,
)

from .quadrature import (
    QuadratureRule,
    SurfaceQuadrature,
    composite_rule,
    build_quadrature,
    surface_area,
)
