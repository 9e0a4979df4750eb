from __future__ import annotations

from typing import (
    BinaryIO,
    Dict,
    List,
    Literal,
    NamedTuple,
    Optional,
    Tuple,
    Union
)

import io
import os
import logging
from functools import cached_property

import numpy as np

from ..__about__ import __name_public__

_logger = logging.getLogger(f"{__name_public__}:mesh")

MeshFormat = Literal["obj", "off"]


class MeshFormatError(ValueError):
    """The mesh stream does not parse as the declared format (or holds non triangular faces)"""
    pass


class DegenerateFaceError(ValueError):
    """A triangle repeats one of its vertex indices"""
    pass


class NonManifoldError(ValueError):
    """An edge is not shared by exactly two triangles, or a vertex link is not a single cycle"""
    pass


class OrientationError(ValueError):
    """Neighbouring triangles traverse their shared edge in the same direction"""
    pass


class TopologyError(ValueError):
    """The surface is not simply connected"""

    _euler_characteristic: int

    @property
    def euler_characteristic(self) -> int:
        return self._euler_characteristic

    def __init__(self, *args: object, euler_characteristic: int):
        super().__init__(*args)
        self._euler_characteristic = euler_characteristic


class HalfEdges(NamedTuple):
    """Half-edge adjacency. Half-edge `3 * f + i` leaves corner `i` of face `f`."""

    origin: np.ndarray
    target: np.ndarray
    twin: np.ndarray
    next: np.ndarray
    face: np.ndarray


class TopologyReport(NamedTuple):
    V: int
    E: int
    F: int
    chi: int
    genus: Optional[int]
    orientable: bool
    manifold: bool

    @property
    def supported(self) -> bool:
        return self.manifold and self.orientable and self.chi == 2

    def to_text(self) -> str:
        return "\n".join(f"{key} = {value}" for (key, value) in [
            *self._asdict().items(),
            ("supported", self.supported)
        ])


def _undirected_edges(triangles: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    directed = np.concatenate([
        triangles[:, [0, 1]],
        triangles[:, [1, 2]],
        triangles[:, [2, 0]],
    ])
    undirected = np.sort(directed, axis=1)
    edges, inverse, counts = np.unique(undirected, axis=0, return_inverse=True, return_counts=True)
    return (edges, inverse.reshape(-1), counts)


def validate_topology(vertices: np.ndarray, triangles: np.ndarray) -> TopologyReport:
    """Counts V, E, F and checks the manifold and orientation conditions. Never raises."""

    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    n_vertices = len(vertices)
    n_faces = len(triangles)

    if n_faces == 0:
        return TopologyReport(V=n_vertices, E=0, F=0, chi=n_vertices, genus=None, orientable=True, manifold=False)

    (edges, _, counts) = _undirected_edges(triangles)

    directed = np.concatenate([
        triangles[:, [0, 1]],
        triangles[:, [1, 2]],
        triangles[:, [2, 0]],
    ])
    orientable = len(np.unique(directed, axis=0)) == len(directed)

    manifold = bool(np.all(counts == 2)) and _has_disk_links(triangles, n_vertices)

    chi = n_vertices - len(edges) + n_faces
    genus = (2 - chi) // 2 if manifold and orientable else None

    return TopologyReport(
        V=n_vertices,
        E=len(edges),
        F=n_faces,
        chi=chi,
        genus=genus,
        orientable=orientable,
        manifold=manifold,
    )


def _has_disk_links(triangles: np.ndarray, n_vertices: int) -> bool:
    incident = np.zeros(n_vertices, dtype=np.int64)
    np.add.at(incident, triangles.reshape(-1), 1)

    if np.any(incident < 3):
        return False

    corner_next: Dict[Tuple[int, int], int] = {}
    for (a, b, c) in triangles.tolist():
        for (p, q, r) in ((a, b, c), (b, c, a), (c, a, b)):
            if (p, q) in corner_next:
                return False
            corner_next[(p, q)] = r

    start: Dict[int, int] = {}
    for (p, q) in corner_next.keys():
        start.setdefault(p, q)

    for (v, u) in start.items():
        steps = 0
        w = u
        while True:
            w = corner_next.get((v, w), -1)
            steps += 1
            if w == -1 or steps > incident[v]:
                return False
            if w == u:
                break
        if steps != incident[v]:
            return False

    return True


class ControlMesh():
    """A closed, consistently oriented, genus 0 triangle mesh. The subdivision control net.

    Instances are immutable once validated.
    """

    _vertices: np.ndarray
    _triangles: np.ndarray
    _metadata: Dict[str, Union[int, float, str]]

    def __init__(
        self,
        vertices: np.ndarray,
        triangles: np.ndarray,
        *,
        metadata: Optional[Dict[str, Union[int, float, str]]] = None,
        validate: bool = True,
    ):
        """
        Raises:
            DegenerateFaceError:
            NonManifoldError:
            OrientationError:
            TopologyError: Euler characteristic differs from 2
        """
        self._vertices = np.array(vertices, dtype=np.float64).reshape(-1, 3)
        self._triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        self._vertices.setflags(write=False)
        self._triangles.setflags(write=False)
        self._metadata = dict(metadata or {})

        if validate:
            self.validate()

    def validate(self):
        triangles = self._triangles

        if np.any(triangles < 0) or np.any(triangles >= len(self._vertices)):
            raise MeshFormatError("Triangle references a vertex index out of range")

        degenerate = (
            (triangles[:, 0] == triangles[:, 1])
            | (triangles[:, 1] == triangles[:, 2])
            | (triangles[:, 2] == triangles[:, 0])
        )
        if np.any(degenerate):
            raise DegenerateFaceError(f"Degenerate triangles {np.flatnonzero(degenerate)[:10].tolist()}")

        (edges, _, counts) = _undirected_edges(triangles)
        if np.any(counts != 2):
            bad = edges[counts != 2][:10].tolist()
            raise NonManifoldError(f"Edges not shared by exactly two triangles : {bad}")

        report = validate_topology(self._vertices, triangles)

        if not report.orientable:
            raise OrientationError("Inconsistent triangle orientation")

        if not report.manifold:
            raise NonManifoldError("Vertex neighbourhoods are not disks")

        if report.chi != 2:
            raise TopologyError(
                f"Only simply connected surfaces are supported (chi = {report.chi}, genus = {report.genus})",
                euler_characteristic=report.chi
            )

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def triangles(self) -> np.ndarray:
        return self._triangles

    @property
    def metadata(self) -> Dict[str, Union[int, float, str]]:
        return dict(self._metadata)

    @property
    def n_vertices(self) -> int:
        return len(self._vertices)

    @property
    def n_faces(self) -> int:
        return len(self._triangles)

    @cached_property
    def edges(self) -> np.ndarray:
        """Sorted undirected edges `(i, j)` with `i < j`, in lexicographic order."""
        (edges, _, _) = _undirected_edges(self._triangles)
        return edges

    @cached_property
    def half_edges(self) -> HalfEdges:
        triangles = self._triangles
        n_faces = len(triangles)

        origin = triangles.reshape(-1)
        target = triangles[:, [1, 2, 0]].reshape(-1)
        face = np.repeat(np.arange(n_faces), 3)
        corner = np.tile(np.arange(3), n_faces)
        next_ = 3 * face + (corner + 1) % 3

        key = origin * self.n_vertices + target
        twin_key = target * self.n_vertices + origin
        order = np.argsort(key)
        twin = order[np.searchsorted(key[order], twin_key)]

        return HalfEdges(origin=origin, target=target, twin=twin, next=next_, face=face)

    @cached_property
    def valence(self) -> np.ndarray:
        valence = np.zeros(self.n_vertices, dtype=np.int64)
        np.add.at(valence, self.edges.reshape(-1), 1)
        return valence

    @cached_property
    def corner_next(self) -> Dict[Tuple[int, int], int]:
        """Maps the directed edge `(v, u)` of a triangle `(v, u, w)` to its third vertex `w`."""
        corner_next: Dict[Tuple[int, int], int] = {}
        for (a, b, c) in self._triangles.tolist():
            corner_next[(a, b)] = c
            corner_next[(b, c)] = a
            corner_next[(c, a)] = b
        return corner_next

    def fan(self, v: int, start: int) -> List[int]:
        """Neighbours of `v` in counterclockwise order (seen from outside), starting at `start`."""
        corner_next = self.corner_next
        ring = [start]
        w = corner_next[(v, start)]
        while w != start:
            ring.append(w)
            w = corner_next[(v, w)]
        return ring

    @cached_property
    def rings(self) -> List[List[int]]:
        """Counterclockwise one-rings of every vertex, each starting at its lowest neighbour."""
        neighbours: List[int] = [-1] * self.n_vertices
        for (i, j) in self.edges.tolist():
            if neighbours[i] == -1 or j < neighbours[i]:
                neighbours[i] = j
            if neighbours[j] == -1 or i < neighbours[j]:
                neighbours[j] = i
        return [self.fan(v, start) for (v, start) in enumerate(neighbours)]

    @cached_property
    def bounding_box_diagonal(self) -> float:
        return float(np.linalg.norm(self._vertices.max(axis=0) - self._vertices.min(axis=0)))

    @cached_property
    def mean_edge_length(self) -> float:
        (i, j) = self.edges.T
        return float(np.mean(np.linalg.norm(self._vertices[i] - self._vertices[j], axis=1)))

    def topology(self) -> TopologyReport:
        return validate_topology(self._vertices, self._triangles)

    def with_vertices(self, vertices: np.ndarray) -> ControlMesh:
        """Same connectivity, new control points (no revalidation needed)."""
        return ControlMesh(vertices, self._triangles, metadata=self._metadata, validate=False)

    def scaled(self, factor: float) -> ControlMesh:
        return self.with_vertices(self._vertices * factor)


def _parse_obj(text: str) -> Tuple[np.ndarray, np.ndarray]:
    vertices: List[List[float]] = []
    triangles: List[List[int]] = []

    for (line_number, line) in enumerate(text.splitlines(), start=1):
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue

        try:
            if tokens[0] == "v":
                vertices.append([float(token) for token in tokens[1:4]])
                if len(vertices[-1]) != 3:
                    raise ValueError("expected three coordinates")
            elif tokens[0] == "f":
                if len(tokens) != 4:
                    raise MeshFormatError(f"Non triangular face (line {line_number})")
                face = []
                for token in tokens[1:]:
                    index = int(token.split("/", 1)[0])
                    face.append(index - 1 if index > 0 else len(vertices) + index)
                triangles.append(face)
        except MeshFormatError:
            raise
        except ValueError as error:
            raise MeshFormatError(f"Bad OBJ record (line {line_number}). {str(error)}") from error

    return (np.array(vertices, dtype=np.float64).reshape(-1, 3), np.array(triangles, dtype=np.int64).reshape(-1, 3))


def _parse_off(text: str) -> Tuple[np.ndarray, np.ndarray]:
    records = [
        (line_number, line.split("#", 1)[0].split())
        for (line_number, line) in enumerate(text.splitlines(), start=1)
    ]
    records = [(line_number, tokens) for (line_number, tokens) in records if tokens]

    if not records or not records[0][1][0].endswith("OFF"):
        raise MeshFormatError("Missing OFF header")

    header_tokens = records[0][1][1:]
    body = records[1:]
    if not header_tokens:
        if not body:
            raise MeshFormatError("Missing OFF counts")
        (_, header_tokens) = body[0]
        body = body[1:]

    try:
        (n_vertices, n_faces) = (int(header_tokens[0]), int(header_tokens[1]))
    except (ValueError, IndexError) as error:
        raise MeshFormatError(f"Bad OFF counts. {str(error)}") from error

    if len(body) < n_vertices + n_faces:
        raise MeshFormatError(f"OFF body truncated ({len(body)} records, {n_vertices + n_faces} expected)")

    vertices: List[List[float]] = []
    triangles: List[List[int]] = []

    try:
        for (line_number, tokens) in body[:n_vertices]:
            vertices.append([float(token) for token in tokens[:3]])
        for (line_number, tokens) in body[n_vertices:n_vertices + n_faces]:
            if int(tokens[0]) != 3:
                raise MeshFormatError(f"Non triangular face (line {line_number})")
            triangles.append([int(token) for token in tokens[1:4]])
    except MeshFormatError:
        raise
    except (ValueError, IndexError) as error:
        raise MeshFormatError(f"Bad OFF record (line {line_number}). {str(error)}") from error

    return (np.array(vertices, dtype=np.float64).reshape(-1, 3), np.array(triangles, dtype=np.int64).reshape(-1, 3))


def load_control_mesh(
    source: Union[BinaryIO, str, os.PathLike],
    format: Optional[MeshFormat] = None
) -> ControlMesh:
    """Reads an ASCII OBJ or OFF control mesh.

    The format is guessed from the file extension when unspecified.

    Raises:
        FileNotFoundError:
        MeshFormatError:
        DegenerateFaceError:
        NonManifoldError:
        OrientationError:
        TopologyError:
    """

    if isinstance(source, (str, os.PathLike)):
        if format is None:
            format = "off" if os.fspath(source).lower().endswith(".off") else "obj"
        with open(source, "rb") as stream:
            data = stream.read()
    else:
        if format is None:
            raise MeshFormatError("Format must be given when reading from a stream")
        data = source.read()

    try:
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    except UnicodeDecodeError as error:
        raise MeshFormatError(f"Mesh is not ASCII text. {str(error)}") from error

    if format == "obj":
        (vertices, triangles) = _parse_obj(text)
    elif format == "off":
        (vertices, triangles) = _parse_off(text)
    else:
        raise MeshFormatError(f"Unsupported format {format}")

    if len(triangles) == 0:
        raise MeshFormatError("Mesh has no faces")

    mesh = ControlMesh(vertices, triangles)

    _logger.info(f"Loaded control mesh ({mesh.n_vertices} vertices, {mesh.n_faces} faces)")

    return mesh


def dump_control_mesh(mesh: ControlMesh, format: MeshFormat = "obj") -> str:
    """Writes an ASCII mesh. Coordinates are written with `repr` so they read back bit-exactly."""

    stream = io.StringIO()

    if format == "obj":
        stream.write(f"# {__name_public__} control mesh\n")
        for (x, y, z) in mesh.vertices.tolist():
            stream.write(f"v {x!r} {y!r} {z!r}\n")
        for (a, b, c) in (mesh.triangles + 1).tolist():
            stream.write(f"f {a} {b} {c}\n")
    elif format == "off":
        stream.write(f"OFF\n{mesh.n_vertices} {mesh.n_faces} {len(mesh.edges)}\n")
        for (x, y, z) in mesh.vertices.tolist():
            stream.write(f"{x!r} {y!r} {z!r}\n")
        for (a, b, c) in mesh.triangles.tolist():
            stream.write(f"3 {a} {b} {c}\n")
    else:
        raise MeshFormatError(f"Unsupported format {format}")

    return stream.getvalue()
