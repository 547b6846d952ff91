"""Class-region geometries used by the synthetic datasets and analytic predictors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CrossGeometry:
    """Axis-aligned cross: union of a horizontal and a vertical arm."""

    half_length: float = 1.4
    half_width: float = 0.35
    center: tuple[float, float] = (0.0, 0.0)
    bounds: tuple[tuple[float, float], tuple[float, float]] = ((-2.0, 2.0), (-2.0, 2.0))

    def __post_init__(self):
        if not 0 < self.half_width < self.half_length:
            raise ValueError("cross geometry needs 0 < half_width < half_length")

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.center)
        ax, ay = np.abs(p[:, 0]), np.abs(p[:, 1])
        L, W = self.half_length, self.half_width
        return ((ax <= L) & (ay <= W)) | ((ax <= W) & (ay <= L))

    def vertices(self) -> np.ndarray:
        L, W = self.half_length, self.half_width
        cx, cy = self.center
        v = [(L, -W), (L, W), (W, W), (W, L), (-W, L), (-W, W),
             (-L, W), (-L, -W), (-W, -W), (-W, -L), (W, -L), (W, -W)]
        return np.asarray(v) + np.asarray([cx, cy])

    def signed_distance(self, points) -> np.ndarray:
        """Euclidean distance to the cross outline, positive inside."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        a = self.vertices()
        b = np.roll(a, -1, axis=0)
        ab = b - a
        # point-to-segment distance for all (point, edge) pairs
        ap = p[:, None, :] - a[None, :, :]
        t = np.clip((ap * ab).sum(-1) / (ab * ab).sum(-1), 0.0, 1.0)
        closest = a[None] + t[..., None] * ab[None]
        dist = np.sqrt(((p[:, None, :] - closest) ** 2).sum(-1)).min(axis=1)
        return np.where(self.contains(p), dist, -dist)


@dataclass(frozen=True)
class EllipsoidGeometry:
    """Axis-aligned ellipsoid centred at ``center``."""

    radii: tuple[float, float, float] = (3.0, 1.0, 1.0)
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    bounds: tuple[tuple[float, float], ...] = ((-4.0, 4.0), (-2.0, 2.0), (-2.0, 2.0))

    def quadratic_form(self, points) -> np.ndarray:
        p = (np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.center)) / np.asarray(self.radii)
        return (p * p).sum(axis=1)

    def contains(self, points) -> np.ndarray:
        return self.quadratic_form(points) <= 1.0

    def signed_distance(self, points) -> np.ndarray:
        """First-order distance estimate to the surface, positive inside.

        Uses (1 - q) / |grad q|; exact on the surface and monotone along rays
        from the centre, which is all the analytic predictor relies on.
        """
        p = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.center)
        r2 = np.asarray(self.radii, dtype=float) ** 2
        q = (p * p / r2).sum(axis=1)
        grad = np.sqrt(((2.0 * p / r2) ** 2).sum(axis=1))
        return (1.0 - q) / np.maximum(grad, 1e-12)
