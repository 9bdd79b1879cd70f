import json
import math
from enum import Enum
from typing import Any, Dict, List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app import __version__
from app.common.errors import InvalidConfig
from app.settings import S

BodyRef = Union[str, Dict[str, Any]]

CLASSICAL = "euclid-classical"


class Command(str, Enum):
    santalo = "santalo"
    first_variation = "first-variation-check"
    checks = "checks"
    nonunique = "nonunique-demo"
    ht_area = "ht-area"
    isoperimetric = "isoperimetric-check"
    equiaffine = "equiaffine-check"


class Suite(str, Enum):
    anchors = "anchors"
    duality = "duality"
    crofton = "crofton-2d"
    classical = "classical"
    isoperimetric = "isoperimetric"
    convexity = "convexity"
    equivariance = "equivariance"
    properness = "properness"
    equiaffine = "equiaffine"
    continuity = "continuity"
    first_variation = "first-variation"


# Names accepted by --tol name=value. "solver" is the stopping tolerance of
# santalo_point; the rest are thresholds of recorded comparisons.
DEFAULT_TOLERANCES: Dict[str, float] = {
    "solver": S.tol,
    "anchor_area_disc": 1e-6,
    "anchor_area_square": 1e-9,
    "anchor_volume_disc": 1e-12,
    "duality_polytope": 1e-9,
    "duality_smooth": 1e-5,
    "duality_smooth_3d": 2e-3,
    "crofton": 1e-3,
    "crofton_exact": 1e-9,
    "classical_gradient": 1e-6,
    "classical_point": 1e-4,
    "first_variation": 1e-2,
    "equiaffine": 1e-6,
    "symmetry": 1e-10,
    "scaling": 1e-10,
    "mu_independence": 1e-6,
    "convexity": 1e-10,
    "strict": 1e-6,
    "flatness": 1e-10,
    "isoperimetric": 1e-9,
    "equivariance": 1e-6,
    "invariance": 1e-9,
    "properness_growth": 10.0,
}


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", use_enum_values=True)

    command: Command
    k: Optional[BodyRef] = Field(default=None, description="Body K: preset name, JSON file path or inline spec.")
    b: Optional[BodyRef] = Field(
        default=None, description=f"Body B (same forms); '{CLASSICAL}' selects the classical functional."
    )
    resolution: Optional[int] = Field(
        default=None, gt=0, description="Circle nodes (n = 2) or icosphere level (n = 3)."
    )
    seed: int = Field(default_factory=lambda: S.seed, ge=0)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    out: Optional[str] = Field(default=None, description="Report path; stdout when omitted.")
    timing: bool = Field(default=False, description="Record runtime_ms in the report.")
    suites: List[Suite] = Field(default_factory=list, description="Suites for 'checks'; empty means all.")
    count: Optional[int] = Field(default=None, gt=0, description="Random instances per suite.")
    directions: Optional[List[List[float]]] = Field(
        default=None, description="Variation directions v for first-variation-check (default ±e_i)."
    )
    eps0: float = Field(default=0.2, gt=0, lt=0.5, description="Half-length of the non-unique segment.")

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, v: Dict[str, float]) -> Dict[str, float]:
        unknown = sorted(set(v) - set(DEFAULT_TOLERANCES))
        if unknown:
            raise ValueError(f"unknown tolerance names {unknown}; known: {sorted(DEFAULT_TOLERANCES)}")
        bad = [name for name, value in v.items() if not (value > 0 and math.isfinite(value))]
        if bad:
            raise ValueError(f"tolerances must be positive and finite: {bad}")
        return v

    @model_validator(mode="after")
    def _check_bodies(self) -> "ExperimentConfig":
        if self.k == CLASSICAL:
            raise ValueError(f"'{CLASSICAL}' is only valid for --b")
        if self.directions is not None and not self.directions:
            raise ValueError("directions must be non-empty when given")
        return self

    @classmethod
    def parse(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            err = e.errors()[0]
            where = ".".join(str(p) for p in err.get("loc", ()))
            raise InvalidConfig(f"invalid configuration ({where}): {err['msg']}") from e

    def tolerance(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    @property
    def classical(self) -> bool:
        return self.b == CLASSICAL

    def echo(self) -> Dict[str, Any]:
        """Config as recorded in the report and hashed for the report cache."""
        return self.model_dump(mode="json", exclude={"out", "timing"})


def to_jsonable(value: Any) -> Any:
    """numpy scalars/arrays to plain floats and lists; non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, Enum):
        return value.value
    return value


class CheckRecord(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    name: str
    computed: Any = None
    expected: Any = None
    bound: Optional[float] = None
    tolerance: Optional[float] = None
    passed: bool = Field(alias="pass")

    @classmethod
    def close(cls, name: str, computed: float, expected: float, tol: float, relative: bool = True) -> "CheckRecord":
        scale = max(abs(expected), 1e-300) if relative else 1.0
        err = abs(computed - expected) / scale
        return cls(name=name, computed=computed, expected=expected, tolerance=tol, passed=bool(err <= tol))

    @classmethod
    def at_most(cls, name: str, computed: float, bound: float, tol: Optional[float] = None) -> "CheckRecord":
        return cls(name=name, computed=computed, bound=bound, tolerance=tol, passed=bool(computed <= bound))

    @classmethod
    def at_least(cls, name: str, computed: float, bound: float, tol: float = 0.0) -> "CheckRecord":
        return cls(name=name, computed=computed, bound=bound, tolerance=tol, passed=bool(computed >= bound - tol))

    @classmethod
    def holds(cls, name: str, ok: bool, computed: Any = None) -> "CheckRecord":
        return cls(name=name, computed=computed, passed=bool(ok))


class ReportStatus(str, Enum):
    ok = "ok"
    max_iter = "max_iter"
    check_failed = "check_failed"


class Report(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    command: str
    version: str = __version__
    config: Dict[str, Any]
    values: Dict[str, Any] = Field(default_factory=dict)
    checks: List[CheckRecord] = Field(default_factory=list)
    passed: bool = Field(default=True, alias="pass")
    status: ReportStatus = ReportStatus.ok
    runtime_ms: Optional[int] = None

    @classmethod
    def build(
        cls,
        config: ExperimentConfig,
        values: Dict[str, Any],
        checks: List[CheckRecord],
        max_iter: bool = False,
    ) -> "Report":
        passed = all(c.passed for c in checks)
        if max_iter:
            status = ReportStatus.max_iter
        elif not passed:
            status = ReportStatus.check_failed
        else:
            status = ReportStatus.ok
        return cls(
            command=str(config.command),
            config=config.echo(),
            values=to_jsonable(values),
            checks=[c.model_copy(update={"computed": to_jsonable(c.computed), "expected": to_jsonable(c.expected)}) for c in checks],
            passed=passed,
            status=status,
        )

    @property
    def exit_code(self) -> int:
        if self.status == ReportStatus.max_iter:
            return 3
        if self.status == ReportStatus.check_failed:
            return 4
        return 0

    def to_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True, exclude_none=False, exclude={"runtime_ms"} if self.runtime_ms is None else None)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=True)
