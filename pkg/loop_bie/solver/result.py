from __future__ import annotations

from typing import (
    Any,
    Dict,
    List,
    NamedTuple,
    Optional,
    Tuple
)

import numpy as np

from ..config import Formulation
from ..operators.assembly import split


class SolveResult(NamedTuple):
    """Loop-space current coefficients `(a1, a2)` stacked, with the solver record.

    `reduced` holds the manifold-harmonic coefficients `(v, w)` when the compressed system was
    solved. `wall_time` covers the iterative solve only.
    """

    formulation: Formulation
    coefficients: np.ndarray
    iterations: int
    residuals: List[float]
    wall_time: float
    converged: bool = True
    reduced: Optional[np.ndarray] = None
    inner_iterations: int = 0
    metadata: Dict[str, Any] = {}

    @property
    def n_unknowns(self) -> int:
        return len(self.reduced) if self.reduced is not None else len(self.coefficients)

    @property
    def residual(self) -> float:
        return self.residuals[-1]

    def currents(self) -> Tuple[np.ndarray, np.ndarray]:
        return split(self.coefficients)

    def to_text(self) -> str:
        lines = [
            f"formulation={self.formulation}",
            f"space={'manifold-harmonic' if self.reduced is not None else 'loop'}",
            f"unknowns={self.n_unknowns}",
            f"iterations={self.iterations}",
            f"inner_iterations={self.inner_iterations}",
            f"residual={self.residual:.6e}",
            f"converged={str(self.converged).lower()}",
            f"wall_time={self.wall_time:.3f}",
        ]
        lines.extend(f"{key}={value}" for (key, value) in sorted(self.metadata.items()))
        return "\n".join(lines) + "\n"

    def history_csv(self) -> str:
        rows = ["iteration,residual"]
        rows.extend(f"{i},{r:.6e}" for (i, r) in enumerate(self.residuals))
        return "\n".join(rows) + "\n"
