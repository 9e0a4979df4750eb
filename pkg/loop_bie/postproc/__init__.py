from .far_field import (
    DirectionGrid,
    FarFieldPattern,
    phi_cut,
    far_field,
    far_field_error,
    GridMismatchError,
)

from .mie import (
    mie_reference,
    efficiencies,
    rayleigh_backscatter,
)
