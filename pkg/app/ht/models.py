from dataclasses import dataclass
from math import factorial

from app.common.linalg import unit_ball_volume


class HTConstants:
    @staticmethod
    def eps(k: int) -> float:
        """Volume of the k-dimensional Euclidean unit ball."""
        return unit_ball_volume(k)

    @staticmethod
    def isoperimetric_bound(n: int) -> float:
        return (4.0 * n) ** n / (factorial(n) * unit_ball_volume(n))


@dataclass(frozen=True)
class DualityRoutes:
    """Both sides of A_{B°}(∂K°) = A_K(∂B)."""

    k_side: float
    polar_side: float

    @property
    def relative_error(self) -> float:
        return abs(self.k_side - self.polar_side) / max(abs(self.k_side), 1e-300)


@dataclass(frozen=True)
class IsoperimetricResult:
    ratio: float
    bound: float
    area: float
    volume: float

    @property
    def holds(self) -> bool:
        return self.ratio >= self.bound - 1e-9
