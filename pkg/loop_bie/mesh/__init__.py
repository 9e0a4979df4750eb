from .control_mesh import (
    ControlMesh,
    TopologyReport,
    MeshFormat,
    load_control_mesh,
    dump_control_mesh,
    validate_topology,
    MeshFormatError,
    DegenerateFaceError,
    NonManifoldError,
    OrientationError,
    TopologyError,
)

from .subdivision import (
    PatchTable,
    PatchParameterization,
    loop_subdivide,
    build_patches,
    limit_position_matrix,
    limit_normals,
)

from .shapes import (
    tetrahedron,
    octahedron,
    icosahedron,
    icosphere,
    limit_sphere,
    fitted_radius,
    cube,
    bumpy_cube,
)
