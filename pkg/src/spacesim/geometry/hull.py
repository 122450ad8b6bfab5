"""Convex pieces: the collision representation shared by physics and raycasting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

SPHERE = 0
POLYTOPE = 1


@dataclass(frozen=True)
class ConvexPiece:
    """A convex collision primitive.

    Spheres are a core point with a radius margin; polytopes carry hull
    vertices and polygonal faces (vertex loops counter-clockwise about the
    outward normal, with plane ``dot(normal, x) = offset``).
    """

    kind: int
    vertices: np.ndarray
    radius: float = 0.0
    faces: tuple = ()
    normals: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    offsets: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def center(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @property
    def bounding_radius(self) -> float:
        c = self.center
        return float(np.max(np.linalg.norm(self.vertices - c, axis=1)) + self.radius)

    def support(self, direction) -> np.ndarray:
        d = np.asarray(direction, dtype=float)
        norm = np.linalg.norm(d)
        if norm == 0.0:
            raise ValueError("support direction must be non-zero")
        dots = self.vertices @ d
        i = int(np.argmax(dots))
        return self.vertices[i] + self.radius * d / norm

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        points = np.atleast_2d(points)
        if self.kind == SPHERE:
            return np.linalg.norm(points - self.vertices[0], axis=1) <= self.radius + tol
        return np.all(points @ self.normals.T - self.offsets <= tol, axis=1)

    def translated(self, offset) -> "ConvexPiece":
        offset = np.asarray(offset, dtype=float)
        return ConvexPiece(self.kind, self.vertices + offset, self.radius, self.faces,
                           self.normals, self.offsets + self.normals @ offset)

    def transformed(self, rotation: np.ndarray, translation) -> "ConvexPiece":
        translation = np.asarray(translation, dtype=float)
        normals = self.normals @ rotation.T
        verts = self.vertices @ rotation.T + translation
        return ConvexPiece(self.kind, verts, self.radius, self.faces,
                           normals, self.offsets + normals @ translation)


def sphere_piece(center, radius: float) -> ConvexPiece:
    return ConvexPiece(SPHERE, np.asarray(center, dtype=float).reshape(1, 3), float(radius))


def polytope(points, plane_tol: float = 1e-9) -> ConvexPiece:
    """Convex hull of ``points`` with coplanar triangles merged into polygons."""
    points = np.asarray(points, dtype=float)
    hull = ConvexHull(points)
    keep = np.sort(hull.vertices)
    remap = -np.ones(len(points), dtype=int)
    remap[keep] = np.arange(len(keep))
    verts = points[keep]

    groups: list[tuple[np.ndarray, float, set]] = []
    for simplex, eq in zip(hull.simplices, hull.equations):
        n, d = eq[:3], -eq[3]
        for gn, gd, members in groups:
            if np.dot(gn, n) > 1.0 - plane_tol and abs(gd - d) < 1e-7:
                members.update(remap[simplex])
                break
        else:
            groups.append((n, d, set(remap[simplex])))

    faces, normals, offsets = [], [], []
    for n, _, members in groups:
        idx = np.array(sorted(members))
        # Recompute the plane from the merged vertex set for a consistent offset.
        n = n / np.linalg.norm(n)
        d = float(np.max(verts[idx] @ n))
        faces.append(_ccw_loop(verts, idx, n))
        normals.append(n)
        offsets.append(d)

    order = sorted(range(len(faces)), key=lambda i: tuple(np.round(normals[i], 9)))
    return ConvexPiece(
        POLYTOPE,
        verts,
        0.0,
        tuple(faces[i] for i in order),
        np.array([normals[i] for i in order]),
        np.array([offsets[i] for i in order]),
    )


def _ccw_loop(verts: np.ndarray, idx: np.ndarray, normal: np.ndarray) -> np.ndarray:
    pts = verts[idx]
    c = pts.mean(axis=0)
    # In-plane basis
    a = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(normal, a)
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    ang = np.arctan2((pts - c) @ v, (pts - c) @ u)
    loop = idx[np.argsort(ang, kind="stable")]
    start = int(np.argmin(loop))
    return np.roll(loop, -start)
