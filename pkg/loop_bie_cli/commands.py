"""Command pipelines. Each command is a generator of job reports and writes its artifacts as it goes."""

from __future__ import annotations

from typing import (
    Callable,
    Dict,
    Iterator,
    List,
    Optional,
    Tuple
)

import logging

import numpy as np

from loop_bie.__about__ import __name_public__
from loop_bie.fmm.engine import PrecisionError
from loop_bie.fmm.study import (
    error_vs_order_report,
    patch_interaction_error
)
from loop_bie.job_report import (
    ErrorGroup,
    JobReport,
    JobReportBuilder
)
from loop_bie.mesh.control_mesh import (
    ControlMesh,
    dump_control_mesh,
    load_control_mesh
)
from loop_bie.mesh.shapes import (
    bumpy_cube,
    cube,
    fitted_radius,
    icosahedron,
    icosphere,
    limit_sphere,
    octahedron
)
from loop_bie.mesh.subdivision import loop_subdivide
from loop_bie.operators.constants import (
    Wavenumber,
    wavelength,
    wavenumber
)
from loop_bie.operators.container import read_container
from loop_bie.postproc.far_field import (
    FarFieldPattern,
    far_field,
    far_field_error,
    phi_cut,
    sample_currents
)
from loop_bie.postproc.mie import mie_reference
from loop_bie.solver.excitation import (
    PlaneWave,
    assemble_rhs,
    plane_wave
)
from loop_bie.solver.solve import (
    solve_scattering,
    solve_system
)
from loop_bie.spectral.laplace_beltrami import (
    GalerkinMatrices,
    SpectralBasis,
    assemble_lbo,
    current_mht,
    current_mht_inverse,
    orthonormality_defect,
    reconstruction_error,
    sign_changes,
    solve_mhb
)
from loop_bie.surface.limit_surface import LimitSurface
from loop_bie.surface.quadrature import SurfaceQuadrature

from .config import (
    GeometryConfig,
    RunConfig
)
from .outputs import (
    OutputDirectory,
    SummaryRow,
    emit_summary,
    summary_row
)

_logger = logging.getLogger(f"{__name_public__}:cli")

SPHERES = ("limit-sphere", "icosphere")


class CoefficientsMismatchError(ValueError):
    """Saved coefficients do not belong to the configured control mesh"""
    pass


def build_control_mesh(geometry: GeometryConfig, *, refine: bool = True) -> ControlMesh:
    """
    Raises:
        FileNotFoundError:
        MeshFormatError:
        NonManifoldError:
        OrientationError:
        TopologyError:
    """

    if geometry.mesh_path is not None:
        mesh = load_control_mesh(geometry.mesh_path)
    elif geometry.shape == "limit-sphere":
        mesh = limit_sphere(geometry.level, geometry.size)
    elif geometry.shape == "icosphere":
        mesh = icosphere(geometry.level, geometry.size)
    elif geometry.shape == "icosahedron":
        mesh = icosahedron().scaled(geometry.size)
    elif geometry.shape == "octahedron":
        mesh = octahedron().scaled(geometry.size)
    elif geometry.shape == "cube":
        mesh = cube(max(geometry.level, 1), geometry.size)
    else:
        mesh = bumpy_cube(max(geometry.level, 1), geometry.size)

    for _ in range(geometry.refine if refine else 0):
        mesh = loop_subdivide(mesh)

    return mesh


def electrical_size(mesh: ControlMesh, frequency: float) -> Tuple[float, float]:
    """`(bounding box diagonal, mean edge length)` in wavelengths."""
    wl = wavelength(frequency)
    return (mesh.bounding_box_diagonal / wl, mesh.mean_edge_length / wl)


def _surface(config: RunConfig, mesh: ControlMesh) -> LimitSurface:
    return LimitSurface(mesh, clamp=config.quadrature.corner_clamp)


def _samples(config: RunConfig, surface: LimitSurface) -> SurfaceQuadrature:
    return SurfaceQuadrature(surface, config.quadrature.regular_depth, config.quadrature.regular_rule)


def _lbo(config: RunConfig, surface: LimitSurface) -> GalerkinMatrices:
    return assemble_lbo(SurfaceQuadrature(surface, config.lbo.quad_depth, config.lbo.base_rule))


def _eigenpairs(config: RunConfig, mats: GalerkinMatrices, M: int) -> SpectralBasis:
    return solve_mhb(mats, min(M, mats.A.shape[0]), dense_limit=config.lbo.dense_limit, band_size=config.lbo.band_size)


def _wave(config: RunConfig, k: Wavenumber) -> PlaneWave:
    return plane_wave(
        config.incidence.direction,
        config.incidence.polarization,
        k.real,
        config.incidence.amplitude,
    )


def _reference(
    config: RunConfig,
    samples: SurfaceQuadrature,
    wave: PlaneWave,
    pattern: FarFieldPattern
) -> Optional[FarFieldPattern]:
    if config.geometry is None or config.geometry.shape not in SPHERES:
        return None

    (radius, _) = fitted_radius(samples.points)
    return mie_reference(radius, wave, pattern.grid)


def _pattern_metadata(config: RunConfig, k: Wavenumber, label: str) -> Dict[str, str]:
    return {
        "pattern": label,
        "frequency": f"{config.frequency!r}",
        "kappa": f"{k.real:.9g}",
        "cut_phi": f"{config.study.cut_phi!r}",
    }


def _harmonic_count(M: int, available: int) -> int:
    return available if M == -1 else M


def validate(config: RunConfig, output: OutputDirectory) -> Iterator[JobReport]:
    report = JobReportBuilder("validate")

    yield report.progress("Reading control mesh")
    mesh = build_control_mesh(config.geometry)
    topology = mesh.topology()

    lines = [topology.to_text()]
    if config.frequency is not None:
        (diagonal, edge) = electrical_size(mesh, config.frequency)
        lines.append(f"electrical_size = {diagonal:.6g}")
        lines.append(f"mean_edge_length = {edge:.6g}")
    output.write_text("topology.txt", "\n".join(lines) + "\n")

    yield report.complete(f"{topology.V} vertices, {topology.F} faces, chi={topology.chi}")


def subdivide(config: RunConfig, output: OutputDirectory) -> Iterator[JobReport]:
    report = JobReportBuilder("subdivide")

    mesh = build_control_mesh(config.geometry, refine=False)
    for level in range(1, max(config.geometry.refine, 1) + 1):
        yield report.progress(f"Loop subdivision {level} ({mesh.n_faces} faces)")
        mesh = loop_subdivide(mesh)

    output.write_text("refined.obj", dump_control_mesh(mesh, "obj").split("\n", 1)[1])

    yield report.complete(f"{mesh.n_vertices} vertices, {mesh.n_faces} faces")


def eigs(config: RunConfig, output: OutputDirectory) -> Iterator[JobReport]:
    report = JobReportBuilder("eigs")

    surface = _surface(config, build_control_mesh(config.geometry))
    mesh = surface.mesh

    yield report.progress(f"Laplace-Beltrami matrices ({mesh.n_vertices} vertices)")
    mats = _lbo(config, surface)

    yield report.progress(f"{min(config.study.n_eigs, mesh.n_vertices)} smallest eigenpairs")
    basis = _eigenpairs(config, mats, config.study.n_eigs)
    output.write_text("eigenvalues.csv", basis.to_csv())

    selected = [m for m in config.study.eigenvectors if 0 <= m < basis.size]
    rows = ["vertex,x,y,z," + ",".join(f"h{m}" for m in selected)]
    for (v, (position, values)) in enumerate(zip(mesh.vertices, basis.coefficients[:, selected])):
        rows.append(f"{v}," + ",".join(f"{value:.12e}" for value in (*position, *values)))
    output.write_text("eigenvectors.csv", "\n".join(rows) + "\n")

    (mass, stiffness) = orthonormality_defect(basis, mats)
    changes = [sign_changes(basis.coefficients[:, m], mesh.edges) for m in selected]
    output.write_text("eigs.txt", "\n".join([
        f"eigenpairs = {basis.size}",
        f"includes_constant = {str(basis.includes_constant).lower()}",
        f"mass_defect = {mass:.3e}",
        f"stiffness_defect = {stiffness:.3e}",
        *(f"sign_changes_h{m} = {count}" for (m, count) in zip(selected, changes)),
    ]) + "\n")

    yield report.complete(f"{basis.size} eigenpairs up to lambda={basis.eigenvalues[-1]:.6g}")


def _solve(
    config: RunConfig,
    surface: LimitSurface,
    samples: SurfaceQuadrature,
    k: Wavenumber,
    wave: PlaneWave
):
    return solve_scattering(
        surface, wave, k,
        system=config.system,
        quadrature=config.quadrature,
        fmm=config.fmm if config.backend == "fmm" else None,
        samples=samples,
    )


def mht_study(config: RunConfig, output: OutputDirectory) -> Iterator[JobReport]:
    """Harmonic reconstruction of the induced current for each entry of the harmonics sweep."""

    report = JobReportBuilder("mht-study")

    surface = _surface(config, build_control_mesh(config.geometry))
    mesh = surface.mesh
    samples = _samples(config, surface)
    k = wavenumber(config.frequency)
    wave = _wave(config, k)

    yield report.progress(f"Induced current ({2 * mesh.n_vertices} Loop unknowns)")
    (result, _) = _solve(config, surface, samples, k, wave)
    (a1, a2) = result.currents()

    yield report.progress(f"Full manifold-harmonic basis ({mesh.n_vertices} vertices)")
    mats = _lbo(config, surface)
    basis = _eigenpairs(config, mats, mesh.n_vertices).without_constant()

    rows = ["M,error"]
    errors: Dict[str, BaseException] = {}
    for M in config.study.harmonics:
        M = _harmonic_count(M, basis.size)
        yield report.progress(f"Reconstruction with M={M}")
        try:
            error = reconstruction_error(a1, a2, M, basis, mats)
        except ValueError as failure:
            errors[f"M={M}"] = failure
            yield report.fail(failure)
            continue

        rows.append(f"{M},{error:.6e}")
        spectrum = current_mht(a1, a2, basis.truncated(M), mats)
        (r1, r2) = current_mht_inverse(spectrum.v, spectrum.w, basis.truncated(M))
        magnitude = np.linalg.norm(sample_currents(np.concatenate([r1, r2]), samples), axis=1)
        output.write_text(f"current_M{M}.csv", "\n".join([
            "x,y,z,magnitude",
            *(f"{x:.9e},{y:.9e},{z:.9e},{m:.9e}" for ((x, y, z), m) in zip(samples.points, magnitude)),
        ]) + "\n")

    output.write_text("mht.csv", "\n".join(rows) + "\n")

    if errors:
        raise ErrorGroup(f"{len(errors)} reconstructions failed", errors=errors)

    yield report.complete(f"{len(rows) - 1} reconstructions")


def solve(config: RunConfig, output: OutputDirectory) -> Iterator[JobReport]:
    """Loop-space solve and, for each entry of the harmonics list, the compressed solve on the same operators."""

    report = JobReportBuilder("solve")

    surface = _surface(config, build_control_mesh(config.geometry))
    mesh = surface.mesh
    samples = _samples(config, surface)
    k = wavenumber(config.frequency)
    wave = _wave(config, k)
    grid = phi_cut(config.study.cut_step, config.study.cut_phi)
    (diagonal, _) = electrical_size(mesh, config.frequency)

    yield report.progress(
        f"{config.system.formulation} on {2 * mesh.n_vertices} Loop unknowns ({diagonal:.3g} wavelengths, {config.backend})"
    )
    (result, ops) = _solve(config, surface, samples, k, wave)
    pattern = far_field(result.coefficients, samples, grid, k.real, incident_amplitude=config.incidence.amplitude)
    reference = _reference(config, samples, wave, pattern)

    rows: List[SummaryRow] = []
    if reference is not None:
        output.write_text("mie.csv", reference.to_csv(_pattern_metadata(config, k, "mie")))
        rows.append(summary_row("loop", result, far_field_error(pattern, reference), "mie"))
    else:
        rows.append(summary_row("loop", result))

    output.write_text("pattern.csv", pattern.to_csv(_pattern_metadata(config, k, "loop")))
    output.write_text("history.csv", result.history_csv())
    output.write_text("result.txt", result.to_text())
    output.write_arrays(
        "coefficients.lbie",
        {"coefficients": result.coefficients},
        kappa=k.real,
        frequency=config.frequency,
        formulation=result.formulation,
        n_vertices=mesh.n_vertices,
    )

    if config.study.harmonics:
        yield report.progress(f"Manifold-harmonic basis ({mesh.n_vertices} vertices)")
        mats = _lbo(config, surface)
        full = _eigenpairs(config, mats, mesh.n_vertices).without_constant()
        rhs = assemble_rhs(wave, samples)

        for M in config.study.harmonics:
            M = _harmonic_count(M, full.size)
            yield report.progress(f"Compressed system with M={M} per component")
            compressed = solve_system(ops, rhs, config.system, basis=full.truncated(M))
            compressed_pattern = far_field(
                compressed.coefficients, samples, grid, k.real, incident_amplitude=config.incidence.amplitude
            )
            output.write_text(f"pattern_M{M}.csv", compressed_pattern.to_csv(_pattern_metadata(config, k, f"M={M}")))
            if reference is not None:
                rows.append(summary_row(f"M={M}", compressed, far_field_error(compressed_pattern, reference), "mie"))
            else:
                rows.append(summary_row(f"M={M}", compressed, far_field_error(compressed_pattern, pattern), "loop"))

    (text, summary, timings) = emit_summary(rows)
    output.write_text("summary.txt", text)
    output.write_text("summary.csv", summary)
    output.write_text("timings.csv", timings)

    first = rows[0]
    yield report.complete(
        f"{first.iterations} iterations"
        + ("" if first.far_field_error is None else f", far-field error {first.far_field_error:.3e}")
    )


def rcs(config: RunConfig, output: OutputDirectory) -> Iterator[JobReport]:
    """Recomputes the pattern cut from saved coefficients.

    Raises:
        CoefficientsMismatchError:
        ContainerFormatError:
    """

    report = JobReportBuilder("rcs")

    container = read_container(config.study.coefficients)
    coefficients = container.entries.get("coefficients")
    surface = _surface(config, build_control_mesh(config.geometry))
    if coefficients is None or coefficients.shape != (2 * surface.n_vertices,):
        raise CoefficientsMismatchError(
            f"{config.study.coefficients} holds no coefficients for a {surface.n_vertices} vertex control mesh"
        )

    k = wavenumber(config.frequency)
    saved = container.metadata.get("kappa")
    if saved is not None and not np.isclose(saved, k.real, rtol=1e-9):
        _logger.warning(f"Coefficients were solved at kappa={saved:.9g}, pattern computed at kappa={k.real:.9g}")

    yield report.progress(f"Pattern from {len(coefficients)} coefficients")
    samples = _samples(config, surface)
    grid = phi_cut(config.study.cut_step, config.study.cut_phi)
    pattern = far_field(coefficients, samples, grid, k.real, incident_amplitude=config.incidence.amplitude)
    output.write_text("pattern.csv", pattern.to_csv(_pattern_metadata(config, k, "loop")))

    reference = _reference(config, samples, _wave(config, k), pattern)
    if reference is None:
        yield report.complete(f"{len(grid)} directions")
        return

    output.write_text("mie.csv", reference.to_csv(_pattern_metadata(config, k, "mie")))
    yield report.complete(f"{len(grid)} directions, far-field error {far_field_error(pattern, reference):.3e}")


def fmm_study(config: RunConfig, output: OutputDirectory) -> Iterator[JobReport]:
    report = JobReportBuilder("fmm-study")

    rows = []
    errors: Dict[str, BaseException] = {}
    for leaf_size in config.study.leaf_sizes:
        for digits in config.study.digits:
            yield report.progress(f"Two-patch test, leaf {leaf_size} wavelengths, {digits} digits")
            try:
                rows.append(patch_interaction_error(leaf_size, digits))
            except PrecisionError as error:
                errors[f"leaf={leaf_size} digits={digits}"] = error
                yield report.fail(error)

    output.write_text("fmm_study.csv", error_vs_order_report(rows))

    if errors:
        raise ErrorGroup(f"{len(errors)} accuracy runs failed", errors=errors)

    yield report.complete(f"{len(rows)} runs, best error {min(row.error for row in rows):.3e}")


COMMANDS: Dict[str, Callable[[RunConfig, OutputDirectory], Iterator[JobReport]]] = {
    "validate": validate,
    "subdivide": subdivide,
    "eigs": eigs,
    "mht-study": mht_study,
    "solve": solve,
    "rcs": rcs,
    "fmm-study": fmm_study,
}


def run(config: RunConfig) -> Iterator[JobReport]:
    """Runs the configured command. The manifest lists whatever was written, even when the command fails."""

    output = OutputDirectory(config)
    output.echo_config()

    try:
        yield from COMMANDS[config.command](config, output)
    finally:
        output.write_manifest()
