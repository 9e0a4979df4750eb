from __future__ import annotations

from typing import (
    Literal,
    Optional
)

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    model_validator
)

Formulation = Literal["cc-cfier", "cfie", "efie", "mfie"]


class QuadratureConfig(BaseModel):
    """Quadrature of the operator integrals. Distances are in wavelengths."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    regular_depth: int = Field(
        default=1,
        ge=0,
        le=4,
        description="Uniform subdivision depth of the rule used for every patch pair"
    )
    regular_rule: Literal[1, 3, 6, 7] = Field(
        default=3,
        description="Points per subtriangle of the regular rule"
    )
    near_obs_depth: int = Field(
        default=1,
        ge=0,
        le=3,
        description="Observation rule depth for near patch pairs"
    )
    near_obs_rule: Literal[1, 3, 6, 7] = 6
    near_max_depth: int = Field(
        default=4,
        ge=0,
        le=8,
        description="Deepest source subdivision for near patch pairs"
    )
    near_rule: Literal[1, 3, 6, 7] = 6
    near_tolerance: Optional[float] = Field(
        default=1e-2,
        gt=0.0,
        description="Relative error of the near rules on the flat 1/R kernel, None keeps the deepest rule unchecked"
    )
    duffy_order: int = Field(
        default=8,
        ge=2,
        le=40,
        description="Gauss-Legendre points per direction of the Duffy rules"
    )
    near_distance: float = Field(
        default=0.15,
        ge=0.0,
        description="Patch pairs with centers closer than this are integrated accurately (wavelengths)"
    )
    corner_clamp: float = Field(
        default=1e-12,
        gt=0.0,
        lt=1e-3
    )


class LboConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    quad_depth: int = Field(default=1, ge=0, le=4)
    base_rule: Literal[1, 3, 6, 7] = 6
    dense_limit: int = Field(
        default=4000,
        ge=1,
        description="Largest vertex count solved with the dense generalized eigensolver"
    )
    band_size: int = Field(default=200, ge=8)


class SystemConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    formulation: Formulation = "cc-cfier"
    gmres_tol_outer: float = Field(default=1e-5, gt=0.0, lt=1.0)
    gmres_tol_gram: float = Field(default=1e-11, gt=0.0, lt=1.0)
    gram_preconditioner: Literal["diagonal", "none"] = "diagonal"
    localization_radius: Optional[float] = Field(
        default=1.25,
        gt=0.0,
        description="Interactions of the regularizing operator beyond this distance are dropped (wavelengths)"
    )
    alpha: float = Field(
        default=0.5,
        gt=0.0,
        lt=1.0,
        description="CFIE weight of the electric field operator"
    )
    restart: int = Field(default=200, ge=1)
    max_iter: int = Field(default=1000, ge=1)
    mh_scaled: bool = Field(
        default=True,
        description="Scale manifold harmonics by 1/sqrt(lambda) so the reduced Gram is the identity"
    )


class FmmConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    leaf_size: float = Field(
        default=0.125,
        gt=0.0,
        description="Leaf box edge (wavelengths)"
    )
    order: Optional[int] = Field(
        default=None,
        ge=0,
        description="Expansion order; derived from `digits` when unset"
    )
    digits: int = Field(default=6, ge=1, le=14)
    regime_split: float = Field(
        default=0.2,
        gt=0.0,
        description="Boxes at least this large use plane-wave expansions (wavelengths)"
    )
    max_order: int = Field(default=40, ge=1)

    @model_validator(mode="after")
    def validate_order(self):
        if self.order is not None and self.order > self.max_order:
            raise ValueError(f"FMM order {self.order} above max_order {self.max_order}")

        return self
