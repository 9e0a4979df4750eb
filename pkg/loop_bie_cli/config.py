from __future__ import annotations

from typing import (
    Any,
    Dict,
    List,
    Literal,
    Optional,
    Tuple
)

import os
import re

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PrivateAttr,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator
)

from tomlkit import parse as load_toml

from loop_bie.config import (
    FmmConfig,
    LboConfig,
    QuadratureConfig,
    SystemConfig
)

Command = Literal["validate", "subdivide", "eigs", "mht-study", "solve", "rcs", "fmm-study"]
Shape = Literal["limit-sphere", "icosphere", "icosahedron", "octahedron", "cube", "bumpy-cube"]
Backend = Literal["dense", "fmm"]

THREADS_VARIABLE = "LOOP_BIE_THREADS"


class ConfigError(ValueError):
    """The run file does not parse or does not validate"""

    _file: str
    _line: Optional[int]

    @property
    def file(self) -> str:
        return self._file

    @property
    def line(self) -> Optional[int]:
        return self._line

    def __init__(self, *args: object, file: str, line: Optional[int] = None):
        super().__init__(*args)
        self._file = file
        self._line = line

    def __str__(self) -> str:
        where = self._file if self._line is None else f"{self._file}:{self._line}"
        return f"{super().__str__()} ({where})"


def _resolve(path: Optional[str], info: ValidationInfo) -> Optional[str]:
    if path is None:
        return None
    base = (info.context or {}).get("base", "")
    path = os.path.expanduser(path)
    return path if os.path.isabs(path) else os.path.normpath(os.path.join(base, path))


class GeometryConfig(BaseModel):
    """Either a control mesh file or a generated shape."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    mesh_path: Optional[str] = None
    shape: Optional[Shape] = None
    level: int = Field(
        default=2,
        ge=0,
        le=6,
        description="Icosphere level, or cells per cube edge for the cubes"
    )
    size: float = Field(
        default=1.0,
        gt=0.0,
        description="Sphere radius or cube half edge (m)"
    )
    refine: int = Field(
        default=0,
        ge=0,
        le=4,
        description="Loop subdivisions applied to the control mesh before use"
    )

    @field_validator("mesh_path")
    @classmethod
    def resolve_mesh_path(cls, value: Optional[str], info: ValidationInfo) -> Optional[str]:
        value = _resolve(value, info)
        if value is not None and not os.path.isfile(value):
            raise ValueError(f"Mesh file {value} does not exist")
        return value

    @model_validator(mode="after")
    def validate_source(self):
        if (self.mesh_path is None) == (self.shape is None):
            raise ValueError("Exactly one of mesh_path and shape must be given")

        return self


class IncidenceConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    direction: Tuple[float, float, float] = (0.0, 0.0, -1.0)
    polarization: Tuple[float, float, float] = (1.0, 0.0, 0.0)
    amplitude: float = Field(default=1.0, gt=0.0, description="Incident field amplitude (V/m)")


class StudyConfig(BaseModel):
    """Parameters of the eigenanalysis, reconstruction, pattern and FMM accuracy studies."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    harmonics: List[int] = Field(
        default=[],
        description=(
            "Harmonics per Helmholtz component. mht-study sweeps the list, solve compresses onto the"
            " first entry. -1 stands for the full basis."
        )
    )
    n_eigs: int = Field(default=20, ge=1)
    eigenvectors: List[int] = Field(
        default=[1, 2, 3],
        description="Indices (from 0) of the eigenvectors exported per vertex"
    )
    cut_step: float = Field(default=1.0, gt=0.0, le=90.0, description="Pattern cut step (degrees)")
    cut_phi: float = Field(default=0.0, description="Azimuth of the pattern cut (degrees)")
    coefficients: Optional[str] = Field(
        default=None,
        description="Coefficients container read by rcs"
    )
    leaf_sizes: List[float] = Field(default=[0.125, 0.0625], min_length=1)
    digits: List[int] = Field(default=[1, 2, 3, 4, 5, 6, 7, 8], min_length=1)

    @field_validator("harmonics")
    @classmethod
    def validate_harmonics(cls, value: List[int]) -> List[int]:
        if any(M == 0 or M < -1 for M in value):
            raise ValueError(f"Harmonic counts must be positive or -1 ({value})")
        return value

    @field_validator("coefficients")
    @classmethod
    def resolve_coefficients(cls, value: Optional[str], info: ValidationInfo) -> Optional[str]:
        return _resolve(value, info)


class RunConfig(BaseModel):
    """A batch run: one command, its geometry, the excitation and every solver setting."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Command
    output_dir: str = Field(default="out", validate_default=True)
    frequency: Optional[float] = Field(default=None, gt=0.0, description="Hz")
    threads: Optional[int] = Field(default=None, ge=1)
    backend: Backend = "dense"
    geometry: Optional[GeometryConfig] = None
    incidence: IncidenceConfig = IncidenceConfig()
    study: StudyConfig = StudyConfig()
    system: SystemConfig = SystemConfig()
    quadrature: QuadratureConfig = QuadratureConfig()
    fmm: FmmConfig = FmmConfig()
    lbo: LboConfig = LboConfig()

    _source: str = PrivateAttr(default="")
    _file: Optional[str] = PrivateAttr(default=None)

    @field_validator("output_dir")
    @classmethod
    def resolve_output_dir(cls, value: str, info: ValidationInfo) -> str:
        return _resolve(value, info)

    @model_validator(mode="after")
    def validate_command(self):
        if self.command != "fmm-study" and self.geometry is None:
            raise ValueError(f"Command {self.command} needs a [geometry] section")

        if self.command in ("mht-study", "solve", "rcs") and self.frequency is None:
            raise ValueError(f"Command {self.command} needs a frequency")

        if self.command == "mht-study" and not self.study.harmonics:
            raise ValueError("mht-study needs a harmonics sweep")

        if self.command == "rcs":
            if self.study.coefficients is None:
                raise ValueError("rcs needs study.coefficients")
            if not os.path.isfile(self.study.coefficients):
                raise ValueError(f"Coefficients file {self.study.coefficients} does not exist")

        return self

    @property
    def source(self) -> str:
        """The run file text, echoed into the outputs."""
        return self._source

    @property
    def file(self) -> Optional[str]:
        return self._file

    @property
    def effective_threads(self) -> Optional[int]:
        variable = os.environ.get(THREADS_VARIABLE)
        if variable:
            return int(variable)
        return self.threads

    @classmethod
    def parse(
        cls,
        text: str,
        *,
        file: str = "<string>",
        base: str = "",
        command: Optional[Command] = None
    ) -> RunConfig:
        """`command`, when given, takes precedence over the command of the run file.

        Raises:
            ConfigError:
        """

        try:
            document = load_toml(text)
        except Exception as error:
            raise ConfigError(f"Bad TOML. {str(error)}", file=file, line=getattr(error, "line", None)) from error

        try:
            data = document.unwrap()
            if command is not None:
                data["command"] = command
            config = cls.model_validate(data, context={"base": base})
        except ValidationError as error:
            first = error.errors()[0]
            location = ".".join(str(part) for part in first["loc"])
            raise ConfigError(
                f"{location}: {first['msg']}" if location else first["msg"],
                file=file,
                line=_locate(text.splitlines(), first["loc"]),
            ) from error

        config._source = text
        config._file = file
        return config

    @classmethod
    def load(cls, file: str, *, command: Optional[Command] = None) -> RunConfig:
        """
        Raises:
            ConfigError:
        """

        try:
            with open(file, "r") as config_stream:
                text = config_stream.read()
        except OSError as error:
            raise ConfigError(f"Cannot read run file. {str(error)}", file=file) from error

        return cls.parse(text, file=file, base=os.path.dirname(os.path.abspath(file)), command=command)

    def canonical(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _locate(lines: List[str], loc: Tuple[Any, ...]) -> Optional[int]:
    """Line (from 1) of the key a validation error points to, found by scanning the run file."""

    keys = [part for part in loc if isinstance(part, str)]
    if not keys:
        return None

    def find_key(key: str, start: int) -> Optional[int]:
        pattern = re.compile(rf"^\s*\"?{re.escape(key)}\"?\s*=")
        for i in range(start, len(lines)):
            if lines[i].lstrip().startswith("["):
                return None
            if pattern.match(lines[i]):
                return i + 1
        return None

    def find_section(name: str) -> Optional[int]:
        header = re.compile(rf"^\s*\[\s*{re.escape(name)}\s*\]")
        return next((i + 1 for (i, line) in enumerate(lines) if header.match(line)), None)

    section = find_section(keys[0])
    if section is None:
        return find_key(keys[0], 0)
    if len(keys) == 1:
        return section

    return find_key(keys[1], section) or section
