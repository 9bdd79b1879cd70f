from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from app.convex.bodies import Polytope


class SolveStatus(str, Enum):
    converged = "Converged"
    max_iter = "MaxIter"
    flat_region = "FlatRegion"


@dataclass(frozen=True, eq=False)
class SolveResult:
    point: np.ndarray
    value: float
    gradient_norm: float
    iterations: int
    status: SolveStatus
    trace: Optional[List[Tuple[np.ndarray, float]]] = None
    method: str = ""

    @property
    def segment(self) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        if self.status != SolveStatus.flat_region or not self.trace:
            return None
        return self.trace[0][0], self.trace[-1][0]


@dataclass(frozen=True, eq=False)
class NonuniqueExample:
    K: Polytope
    B: Polytope
    segment: Tuple[np.ndarray, np.ndarray]
    facet_directions: np.ndarray
    facet_defects: List[float] = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class PropernessProbe:
    origin: np.ndarray
    direction: np.ndarray
    interior_value: float
    samples: List[Tuple[float, float]]

    @property
    def increasing(self) -> bool:
        values = [v for _, v in self.samples]
        return all(b > a for a, b in zip(values, values[1:]))

    @property
    def growth(self) -> float:
        return self.samples[-1][1] / self.interior_value
