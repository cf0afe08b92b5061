"""Planar regions described by a level function (negative inside).

Quadrature only needs to know where a ray from the center leaves the region, so
every region exposes ``level(x)`` evaluated on arrays of shape ``(..., 2)``.
Regions may also report angles at which the ray structure is known to change
(tangent directions, directions toward a chart origin); these become panel
breakpoints for the angular rule.
"""

from __future__ import annotations

import numpy as np


class Region:
    name = "region"

    def level(self, x):
        raise NotImplementedError

    def contains(self, x):
        return self.level(np.asarray(x, dtype=float)) < 0.0

    def special_angles(self, z0, r):
        return ()


class WholePlane(Region):
    name = "plane"

    def level(self, x):
        x = np.asarray(x, dtype=float)
        return -np.ones(x.shape[:-1])


class HalfPlane(Region):
    """The flat-chart domain {x_2 < 0}; the chart origin is the boundary point 0."""

    name = "half_plane"

    def phi(self, xp):
        return np.zeros_like(np.asarray(xp, dtype=float))

    def dphi(self, xp):
        return np.zeros_like(np.asarray(xp, dtype=float))

    def level(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 1]

    def special_angles(self, z0, r):
        # rays along the boundary line are grazing when the center sits on it
        if abs(z0[1]) <= 1e-14 * max(r, 1e-300):
            return (0.0, np.pi)
        return ()


class Disk(Region):
    name = "disk"

    def __init__(self, center=(0.0, 0.0), radius=1.0):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def level(self, x):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.center, axis=-1) - self.radius


class TransformedRegion(Region):
    """Image of ``base`` under the affine map of a normalization frame."""

    name = "transformed"

    def __init__(self, base, frame):
        self.base = base
        self.frame = frame

    def level(self, y):
        return self.base.level(self.frame.inverse(y))

    def special_angles(self, z0, r):
        x0 = self.frame.inverse(np.asarray(z0, dtype=float))
        out = []
        for th in self.base.special_angles(x0, r / np.sqrt(max(self.frame.lambda_z0, 1e-300))):
            d = self.frame.Sinv @ np.array([np.cos(th), np.sin(th)])
            out.append(float(np.arctan2(d[1], d[0])))
        return tuple(out)
