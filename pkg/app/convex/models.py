from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.common.errors import InvalidBodySpec
from app.common.linalg import normalize
from app.convex.bodies import ConvexBody, Polytope, SmoothBody


class BodyType(str, Enum):
    polytope = "polytope"
    ellipsoid = "ellipsoid"
    ball = "ball"
    perturbed_ball = "perturbed_ball"


class HarmonicSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    quadratic: Optional[List[List[float]]] = Field(
        default=None, description="Symmetric matrix C of the quadratic term u^T C u."
    )
    quartic: Optional[List[float]] = Field(
        default=None, description="Coefficients a_i of the quartic term sum a_i u_i^4."
    )


class BodySpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    type: BodyType
    name: Optional[str] = Field(default=None, description="Free-form label echoed in reports.")
    vertices: Optional[List[List[float]]] = Field(default=None, description="Polytope vertices.")
    Q: Optional[List[List[float]]] = Field(
        default=None, description="Ellipsoid matrix: body is {x : x^T Q x <= 1}."
    )
    radius: Optional[float] = Field(default=None, description="Ball radius.")
    eps: Optional[float] = Field(default=None, description="Perturbation size of a perturbed ball.")
    harmonic: Optional[HarmonicSpec] = None
    dim: Optional[int] = Field(default=None, description="Dimension for ball / perturbed_ball (default 2).")
    center: Optional[List[float]] = Field(default=None, description="Translation applied last.")
    linear: Optional[List[List[float]]] = Field(
        default=None, description="Linear map applied before the translation."
    )

    @model_validator(mode="after")
    def _check_fields(self) -> "BodySpec":
        required = {
            BodyType.polytope: "vertices",
            BodyType.ellipsoid: "Q",
            BodyType.perturbed_ball: "eps",
        }
        field = required.get(self.type)
        if field is not None and getattr(self, field) is None:
            raise ValueError(f"'{field}' is required for type '{self.type.value}'")
        if self.type == BodyType.ball and self.radius is None:
            self.radius = 1.0
        if self.dim is not None and self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        return self

    @classmethod
    def parse(cls, data: Dict[str, Any]) -> "BodySpec":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise InvalidBodySpec(f"invalid body spec: {e.errors()[0]['msg']}") from e

    def to_body(self) -> ConvexBody:
        dim = self.dim or 2
        if self.type == BodyType.polytope:
            body: ConvexBody = Polytope.from_vertices(self.vertices)
        elif self.type == BodyType.ellipsoid:
            body = SmoothBody.ellipsoid(self.Q)
        elif self.type == BodyType.ball:
            if self.radius <= 0:
                raise InvalidBodySpec("ball radius must be positive")
            body = SmoothBody.ball(dim, self.radius)
        else:
            harmonic = self.harmonic or HarmonicSpec()
            body = SmoothBody.perturbed_ball(
                dim, self.eps, quadratic=harmonic.quadratic, quartic=harmonic.quartic
            )

        if self.linear is not None:
            body = body.linear_map(np.asarray(self.linear, dtype=float))
        if self.center is not None:
            body = body.translate(np.asarray(self.center, dtype=float))
        return body


@dataclass(frozen=True, eq=False)
class LinearHyperplane:
    """Hyperplane through the origin; ``normal`` and ``-normal`` name the same plane.

    The stored normal is canonicalized so its first non-negligible coordinate
    is positive.
    """

    normal: np.ndarray

    def __post_init__(self) -> None:
        nu = normalize(self.normal)
        lead = nu[np.argmax(np.abs(nu) > 1e-12)]
        if lead < 0:
            nu = -nu
        nu.setflags(write=False)
        object.__setattr__(self, "normal", nu)

    @property
    def dim(self) -> int:
        return int(self.normal.shape[0])

    def same_as(self, other: "LinearHyperplane", tol: float = 1e-9) -> bool:
        return bool(np.allclose(self.normal, other.normal, atol=tol))


@dataclass(frozen=True, eq=False)
class SurfaceAreaMeasure:
    """Push-forward of boundary measure to hyperplane directions.

    Atomic for polytopes (one entry per unoriented facet direction);
    a weighted quadrature on the whole sphere for smooth bodies.
    """

    normals: np.ndarray
    weights: np.ndarray
    atomic: bool

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())
