from __future__ import annotations

from typing import (
    Any,
    Dict,
    Iterable,
    List,
    NamedTuple,
    Optional,
    Tuple
)

import hashlib
import os

import numpy as np
import orjson

from loop_bie import __version__
from loop_bie.__about__ import __name_public__
from loop_bie.operators.container import write_container
from loop_bie.solver.result import SolveResult

from .config import RunConfig

SUMMARY_COLUMNS = (
    "label",
    "formulation",
    "space",
    "unknowns",
    "iterations",
    "inner_iterations",
    "residual",
    "far_field_error",
    "reference",
)


def config_hash(config: RunConfig) -> str:
    """Digest of the validated config, serialized with sorted keys."""
    canonical = orjson.dumps(config.canonical(), option=orjson.OPT_SORT_KEYS)
    return hashlib.sha256(canonical).hexdigest()[:16]


class SummaryRow(NamedTuple):
    label: str
    formulation: str
    space: str
    unknowns: int
    iterations: int
    inner_iterations: int
    residual: float
    far_field_error: Optional[float]
    reference: str
    assembly_time: float
    solve_time: float

    def values(self) -> Tuple[str, ...]:
        return (
            self.label,
            self.formulation,
            self.space,
            str(self.unknowns),
            str(self.iterations),
            str(self.inner_iterations),
            f"{self.residual:.6e}",
            "" if self.far_field_error is None else f"{self.far_field_error:.6e}",
            self.reference,
        )


def summary_row(
    label: str,
    result: SolveResult,
    far_field_error: Optional[float] = None,
    reference: str = ""
) -> SummaryRow:
    return SummaryRow(
        label=label,
        formulation=result.formulation,
        space="manifold-harmonic" if result.reduced is not None else "loop",
        unknowns=result.n_unknowns,
        iterations=result.iterations,
        inner_iterations=result.inner_iterations,
        residual=result.residual,
        far_field_error=far_field_error,
        reference=reference if far_field_error is not None else "",
        assembly_time=float(result.metadata.get("assembly_time", 0.0)),
        solve_time=result.wall_time,
    )


def emit_summary(rows: Iterable[SummaryRow]) -> Tuple[str, str, str]:
    """`(text, summary_csv, timings_csv)` for a set of solves.

    The summary holds only reproducible columns, wall times go to the separate timings table.
    """

    rows = list(rows)

    summary = [",".join(SUMMARY_COLUMNS)]
    summary.extend(",".join(row.values()) for row in rows)

    timings = ["label,assembly_time,solve_time"]
    timings.extend(f"{row.label},{row.assembly_time:.3f},{row.solve_time:.3f}" for row in rows)

    widths = [
        max([len(column), *(len(row.values()[i]) for row in rows)])
        for (i, column) in enumerate(SUMMARY_COLUMNS)
    ]
    text = ["  ".join(column.ljust(width) for (column, width) in zip(SUMMARY_COLUMNS, widths))]
    text.extend(
        "  ".join(value.ljust(width) for (value, width) in zip(row.values(), widths))
        for row in rows
    )

    return ("\n".join(text) + "\n", "\n".join(summary) + "\n", "\n".join(timings) + "\n")


class OutputDirectory():
    """Artifacts of one run. Every text file opens with a provenance comment line."""

    _config: RunConfig
    _path: str
    _hash: str
    _written: List[str]

    def __init__(self, config: RunConfig):
        self._config = config
        self._path = config.output_dir
        self._hash = config_hash(config)
        self._written = []

        os.makedirs(self._path, exist_ok=True)

    @property
    def path(self) -> str:
        return self._path

    @property
    def written(self) -> List[str]:
        return list(self._written)

    @property
    def provenance(self) -> Dict[str, Any]:
        return {
            "version": __version__,
            "config": self._hash,
            "threads": self._config.effective_threads or "default",
        }

    def header(self, comment: str = "#") -> str:
        return f"{comment} {__name_public__} " + " ".join(f"{key}={value}" for (key, value) in self.provenance.items())

    def write_text(self, name: str, text: str, *, comment: str = "#") -> str:
        file = os.path.join(self._path, name)
        with open(file, "w") as stream:
            stream.write(self.header(comment) + "\n")
            stream.write(text)
        self._written.append(name)
        return file

    def write_arrays(self, name: str, entries: Dict[str, np.ndarray], **metadata: Any) -> str:
        file = os.path.join(self._path, name)
        write_container(file, entries, **self.provenance, **metadata)
        self._written.append(name)
        return file

    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        """JSON artifacts carry the provenance as a top-level member instead of a comment line."""

        file = os.path.join(self._path, name)
        with open(file, "wb") as stream:
            stream.write(orjson.dumps(
                {"provenance": self.provenance, **payload},
                option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2,
            ))
        self._written.append(name)
        return file

    def echo_config(self):
        """Copies the run file verbatim (after the provenance line) together with the resolved settings."""
        self.write_text("run.toml", self._config.source)
        self.write_json("resolved.json", {"config": self._config.canonical()})

    def write_manifest(self) -> str:
        return self.write_json("manifest.json", {"outputs": sorted(self._written)})
