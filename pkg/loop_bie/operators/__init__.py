from .constants import (
    Wavenumber,
    wavenumber,
    wavelength,
    complexified,
    ETA_0,
    SPEED_OF_LIGHT,
)

from .greens import (
    greens,
    CoincidentPointsError,
)

from .singular import (
    QuadratureError,
)

from .near_field import (
    NearField,
    NearBlocks,
)

from .assembly import (
    OperatorSet,
    assemble_operators,
    assemble_T,
    assemble_K,
    assemble_gram,
    apply_operator,
    stacked,
    split,
    DimensionError,
)

from .container import (
    Container,
    dump_container,
    load_container,
    write_container,
    read_container,
    ContainerFormatError,
)
