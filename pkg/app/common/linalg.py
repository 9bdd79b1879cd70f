from math import lgamma, log, exp, pi

import numpy as np
from scipy.linalg import null_space

from app.common.errors import ZeroDirection


def unit_ball_volume(k: int) -> float:
    """Euclidean volume of the k-dimensional unit ball, pi^{k/2} / Gamma(k/2 + 1)."""
    if k < 0:
        raise ValueError("dimension must be non-negative")
    return exp(0.5 * k * log(pi) - lgamma(0.5 * k + 1.0))


def normalize(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    r = np.linalg.norm(u)
    if not np.isfinite(r) or r == 0.0:
        raise ZeroDirection("direction vector must be non-zero")
    return u / r


def normalize_rows(u: np.ndarray) -> np.ndarray:
    u = np.atleast_2d(np.asarray(u, dtype=float))
    r = np.linalg.norm(u, axis=1, keepdims=True)
    if np.any(r == 0.0):
        raise ZeroDirection("direction vectors must be non-zero")
    return u / r


def hyperplane_basis(normal: np.ndarray) -> np.ndarray:
    """Orthonormal basis of normal^perp as the columns of an (n, n-1) matrix.

    Deterministic: the basis is a continuous function of ``normal`` away
    from the coordinate switch, which is all projections need.
    """
    nu = normalize(normal)
    n = nu.shape[0]
    if n == 2:
        return np.array([[-nu[1]], [nu[0]]])
    basis = null_space(nu[None, :])
    # fix orientation so that det(basis, nu) > 0
    if np.linalg.det(np.column_stack([basis, nu])) < 0:
        basis[:, -1] *= -1.0
    return basis


def tangent_frames(u: np.ndarray) -> np.ndarray:
    """Batched orthonormal frames of u_k^perp, shape (m, n, n-1)."""
    u = normalize_rows(u)
    m, n = u.shape
    if n == 2:
        return np.stack([-u[:, 1], u[:, 0]], axis=1)[:, :, None]
    # Householder-free construction: cross with the least aligned axis
    axis = np.zeros_like(u)
    axis[np.arange(m), np.argmin(np.abs(u), axis=1)] = 1.0
    e1 = np.cross(u, axis)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(u, e1)
    return np.stack([e1, e2], axis=2)


def tangential_operator(hess: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Restriction of hess(u) to u^perp in the frames of ``tangent_frames``.

    For a 1-homogeneous support function the Hessian annihilates u, and the
    restricted operator equals h*I + Hess_S h (the reciprocal curvature map).
    """
    frames = tangent_frames(u)
    return np.einsum("mai,mab,mbj->mij", frames, hess, frames)


def gauss_jacobian(hess: np.ndarray, u: np.ndarray) -> np.ndarray:
    """det(hess + u u^T) per node; the surface density relative to sphere measure."""
    u = normalize_rows(u)
    return np.linalg.det(hess + np.einsum("mi,mj->mij", u, u))


def tangential_pinv(hess: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Pseudo-inverse of the tangential operator, embedded as an (n, n) matrix."""
    uu = np.einsum("mi,mj->mij", u, u)
    return np.linalg.inv(hess + uu) - uu


def min_tangential_eigenvalue(hess: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(tangential_operator(hess, u))[:, 0]


def det_with_frame(xi: np.ndarray, frame: np.ndarray) -> float:
    """det(xi, frame_1, ..., frame_{n-1}) with frame vectors as columns."""
    return float(np.linalg.det(np.column_stack([xi, frame])))
