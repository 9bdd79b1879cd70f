from dataclasses import dataclass

import numpy as np

from app.common.errors import GeometryError


@dataclass(frozen=True, eq=False)
class TangentFrame:
    """Boundary point ``x`` with outer normal ``u`` and tangent basis (columns of ``basis``)."""

    x: np.ndarray
    u: np.ndarray
    basis: np.ndarray

    def __post_init__(self) -> None:
        n = self.u.shape[0]
        if self.basis.shape != (n, n - 1):
            raise GeometryError(f"tangent basis must be {n}x{n - 1}, got {self.basis.shape}")
        scale = np.linalg.norm(self.basis, axis=0)
        if np.any(scale == 0) or np.max(np.abs(self.u @ self.basis) / scale) > 1e-8:
            raise GeometryError("frame vectors are not tangent to the boundary")
        if np.linalg.cond(self.basis / scale) > 1e8:
            raise GeometryError("frame vectors are linearly dependent")

    @property
    def dim(self) -> int:
        return int(self.u.shape[0])

    def scaled(self, factors) -> "TangentFrame":
        return TangentFrame(x=self.x, u=self.u, basis=self.basis * np.asarray(factors, dtype=float))


@dataclass(frozen=True, eq=False)
class EquiaffineData:
    """Blaschke normal, equiaffine metric and area density at one boundary point."""

    frame: TangentFrame
    Xi: np.ndarray
    g: np.ndarray
    alpha_density: float
    curvature_power: float


@dataclass(frozen=True)
class EquiaffineResiduals:
    tangency: float
    volume_condition: float
    transversality: float
    collinearity: float
    metric_min_eigenvalue: float
