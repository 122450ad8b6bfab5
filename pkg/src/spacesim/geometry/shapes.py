"""The seven object classes: specs, meshes, convex pieces and mass properties.

Shape frames: sphere, cube, cylinders and torus are centered at the origin;
the cone has its base disk at z=0 and apex at z=h, the inverted cone its apex
at z=0 and base at z=h. Orientation variants are baked into the geometry, so
every class spawns with the identity orientation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .hull import ConvexPiece, polytope, sphere_piece


class InvalidShapeError(ValueError):
    pass


class ShapeClass(str, Enum):
    CYLINDER = "cylinder"
    CONE = "cone"
    INVERTED_CONE = "inverted_cone"
    CUBE = "cube"
    TORUS = "torus"
    SPHERE = "sphere"
    FLIPPED_CYLINDER = "flipped_cylinder"


# Order used by the sampler.
OBJECT_CLASSES = tuple(ShapeClass)


@dataclass(frozen=True)
class ShapeSpec:
    def __post_init__(self):
        for name, value in self.dims().items():
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidShapeError(f"{self.shape_class.value}.{name} must be positive, got {value!r}")

    shape_class = None

    def dims(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class Sphere(ShapeSpec):
    radius: float
    shape_class = ShapeClass.SPHERE


@dataclass(frozen=True)
class Cube(ShapeSpec):
    half_extent: float
    shape_class = ShapeClass.CUBE


@dataclass(frozen=True)
class Cylinder(ShapeSpec):
    radius: float
    height: float
    shape_class = ShapeClass.CYLINDER


@dataclass(frozen=True)
class FlippedCylinder(ShapeSpec):
    """Cylinder lying on its side: axis along y."""

    radius: float
    height: float
    shape_class = ShapeClass.FLIPPED_CYLINDER


@dataclass(frozen=True)
class Cone(ShapeSpec):
    radius: float
    height: float
    shape_class = ShapeClass.CONE


@dataclass(frozen=True)
class InvertedCone(ShapeSpec):
    """Apex-down cone."""

    radius: float
    height: float
    shape_class = ShapeClass.INVERTED_CONE


@dataclass(frozen=True)
class Torus(ShapeSpec):
    major_radius: float
    minor_radius: float
    shape_class = ShapeClass.TORUS

    def __post_init__(self):
        super().__post_init__()
        if self.minor_radius >= self.major_radius:
            raise InvalidShapeError("torus minor radius must be smaller than its major radius")


def shape_from_config(shape_class: ShapeClass | str, sizes) -> ShapeSpec:
    """Canonical spec for a class from the size table (``config.ShapeSizes``)."""
    c = ShapeClass(shape_class)
    if c is ShapeClass.SPHERE:
        return Sphere(sizes.sphere_radius)
    if c is ShapeClass.CUBE:
        return Cube(sizes.cube_half_extent)
    if c is ShapeClass.CYLINDER:
        return Cylinder(sizes.cylinder_radius, sizes.cylinder_height)
    if c is ShapeClass.FLIPPED_CYLINDER:
        return FlippedCylinder(sizes.cylinder_radius, sizes.cylinder_height)
    if c is ShapeClass.CONE:
        return Cone(sizes.cone_radius, sizes.cone_height)
    if c is ShapeClass.INVERTED_CONE:
        return InvertedCone(sizes.cone_radius, sizes.cone_height)
    return Torus(sizes.torus_major_radius, sizes.torus_minor_radius)


@dataclass(frozen=True)
class MassProps:
    mass: float
    center_of_mass: np.ndarray
    inertia: np.ndarray


@dataclass(frozen=True)
class ShapeMesh:
    """Triangle mesh plus convex collision pieces, both in the shape frame."""

    spec: ShapeSpec
    vertices: np.ndarray
    triangles: np.ndarray
    pieces: tuple[ConvexPiece, ...]


# x -> x, y -> -z, z -> y : turns the upright cylinder onto its side.
_ROT_X90 = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])


def _ring(radius: float, n: int, z: float) -> np.ndarray:
    # Vertices at odd multiples of pi/n so face normals include +-x and +-y.
    ang = (2 * np.arange(n) + 1) * np.pi / n
    return np.column_stack([radius * np.cos(ang), radius * np.sin(ang), np.full(n, z)])


def _prism_mesh(bottom: np.ndarray, top: np.ndarray, zb: float, zt: float):
    n = len(bottom)
    verts = np.vstack([bottom, top, [[0, 0, zb]], [[0, 0, zt]]])
    cb, ct = 2 * n, 2 * n + 1
    tris = []
    for i in range(n):
        j = (i + 1) % n
        tris += [(i, j, n + j), (i, n + j, n + i), (cb, j, i), (ct, n + i, n + j)]
    return verts, np.array(tris)


def _cone_mesh(radius: float, height: float, n: int):
    rim = _ring(radius, n, 0.0)
    verts = np.vstack([rim, [[0, 0, 0.0]], [[0, 0, height]]])
    c, apex = n, n + 1
    tris = []
    for i in range(n):
        j = (i + 1) % n
        tris += [(c, j, i), (i, j, apex)]
    return verts, np.array(tris)


def _sphere_mesh(radius: float, n: int):
    m = max(4, n // 2)
    verts = [[0.0, 0.0, radius]]
    for j in range(1, m):
        phi = np.pi * j / m
        for i in range(n):
            th = 2 * np.pi * i / n
            verts.append([radius * np.sin(phi) * np.cos(th), radius * np.sin(phi) * np.sin(th),
                          radius * np.cos(phi)])
    verts.append([0.0, 0.0, -radius])
    south = len(verts) - 1
    tris = []
    for i in range(n):
        tris.append((0, 1 + i, 1 + (i + 1) % n))
    for j in range(m - 2):
        a0, b0 = 1 + j * n, 1 + (j + 1) * n
        for i in range(n):
            i1 = (i + 1) % n
            tris += [(a0 + i, b0 + i, b0 + i1), (a0 + i, b0 + i1, a0 + i1)]
    last = 1 + (m - 2) * n
    for i in range(n):
        tris.append((south, last + (i + 1) % n, last + i))
    return np.array(verts), np.array(tris)


def _cube_mesh(a: float):
    verts = np.array([[x, y, z] for x in (-a, a) for y in (-a, a) for z in (-a, a)])
    # index = 4*ix + 2*iy + iz
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    tris = []
    for a0, b, c, d in quads:
        tris += [(a0, b, c), (a0, c, d)]
    return verts, np.array(tris)


def _torus_rings(major: float, minor: float, n: int, m: int) -> np.ndarray:
    psi = (2 * np.arange(m) + 1) * np.pi / m - np.pi / 2
    rings = np.empty((n, m, 3))
    for i in range(n):
        phi = 2 * np.pi * i / n
        rad = major + minor * np.cos(psi)
        rings[i, :, 0] = rad * np.cos(phi)
        rings[i, :, 1] = rad * np.sin(phi)
        rings[i, :, 2] = minor * np.sin(psi)
    return rings


def _torus_mesh(rings: np.ndarray):
    n, m, _ = rings.shape
    verts = rings.reshape(-1, 3)
    tris = []
    for i in range(n):
        i1 = (i + 1) % n
        for j in range(m):
            j1 = (j + 1) % m
            a, b, c, d = i * m + j, i1 * m + j, i1 * m + j1, i * m + j1
            tris += [(a, b, c), (a, c, d)]
    return verts, np.array(tris)


def make_shape(spec: ShapeSpec, tessellation: int = 16) -> ShapeMesh:
    if tessellation < 8:
        raise InvalidShapeError("tessellation must be at least 8 segments")
    n = int(tessellation)
    if isinstance(spec, Sphere):
        verts, tris = _sphere_mesh(spec.radius, n)
        pieces = (sphere_piece(np.zeros(3), spec.radius),)
    elif isinstance(spec, Cube):
        verts, tris = _cube_mesh(spec.half_extent)
        pieces = (polytope(verts),)
    elif isinstance(spec, (Cylinder, FlippedCylinder)):
        h2 = 0.5 * spec.height
        verts, tris = _prism_mesh(_ring(spec.radius, n, -h2), _ring(spec.radius, n, h2), -h2, h2)
        if isinstance(spec, FlippedCylinder):
            verts = verts @ _ROT_X90.T
        pieces = (polytope(verts),)
    elif isinstance(spec, (Cone, InvertedCone)):
        verts, tris = _cone_mesh(spec.radius, spec.height, n)
        if isinstance(spec, InvertedCone):
            # Mirror through z = h/2; flip winding to keep normals outward.
            verts = verts * np.array([1.0, 1.0, -1.0]) + np.array([0.0, 0.0, spec.height])
            tris = tris[:, ::-1]
        pieces = (polytope(verts),)
    elif isinstance(spec, Torus):
        m = max(8, n // 2)
        rings = _torus_rings(spec.major_radius, spec.minor_radius, n, m)
        verts, tris = _torus_mesh(rings)
        pieces = tuple(polytope(np.vstack([rings[i], rings[(i + 1) % n]])) for i in range(n))
    else:
        raise InvalidShapeError(f"unknown shape spec {spec!r}")
    return ShapeMesh(spec, np.asarray(verts, dtype=float), np.asarray(tris, dtype=np.int64), pieces)


def mass_properties(spec: ShapeSpec, density: float) -> MassProps:
    """Closed-form mass, centroid and inertia (about the centroid) in the shape frame."""
    if not density > 0:
        raise InvalidShapeError("density must be positive")
    com = np.zeros(3)
    if isinstance(spec, Sphere):
        r = spec.radius
        m = density * 4.0 / 3.0 * math.pi * r ** 3
        diag = [0.4 * m * r * r] * 3
    elif isinstance(spec, Cube):
        s = 2.0 * spec.half_extent
        m = density * s ** 3
        diag = [m * s * s / 6.0] * 3
    elif isinstance(spec, (Cylinder, FlippedCylinder)):
        r, h = spec.radius, spec.height
        m = density * math.pi * r * r * h
        side = m * (3 * r * r + h * h) / 12.0
        axial = 0.5 * m * r * r
        diag = [side, side, axial] if isinstance(spec, Cylinder) else [side, axial, side]
    elif isinstance(spec, (Cone, InvertedCone)):
        r, h = spec.radius, spec.height
        m = density * math.pi * r * r * h / 3.0
        side = m * (3.0 / 20.0 * r * r + 3.0 / 80.0 * h * h)
        diag = [side, side, 0.3 * m * r * r]
        com = np.array([0.0, 0.0, 0.25 * h if isinstance(spec, Cone) else 0.75 * h])
    elif isinstance(spec, Torus):
        big, r = spec.major_radius, spec.minor_radius
        m = density * 2.0 * math.pi ** 2 * big * r * r
        axial = m * (big * big + 0.75 * r * r)
        side = m * (0.5 * big * big + 0.625 * r * r)
        diag = [side, side, axial]
    else:
        raise InvalidShapeError(f"unknown shape spec {spec!r}")
    return MassProps(float(m), com, np.diag(diag).astype(float))


def bounding_radius(spec: ShapeSpec, tessellation: int = 16) -> float:
    """Radius of the smallest sphere about the centroid enclosing the shape."""
    mesh = make_shape(spec, tessellation)
    com = mass_properties(spec, 1.0).center_of_mass
    if isinstance(spec, Sphere):
        return spec.radius
    return float(np.max(np.linalg.norm(mesh.vertices - com, axis=1)))


def rest_height(spec: ShapeSpec, tessellation: int = 16) -> float:
    """Height of the centroid when resting on z=0 in the canonical orientation."""
    if isinstance(spec, Sphere):
        return spec.radius
    mesh = make_shape(spec, tessellation)
    com = mass_properties(spec, 1.0).center_of_mass
    return float(com[2] - mesh.vertices[:, 2].min())


def support_point(shape: ShapeMesh, direction, pose=None) -> np.ndarray:
    """Mesh vertex maximizing dot(vertex, direction).

    Ties (within 1e-12 relative) resolve to the lexicographically smallest
    vertex. ``pose`` optionally places the shape in the world.
    """
    d = np.asarray(direction, dtype=float)
    if not np.any(d):
        raise ValueError("support direction must be non-zero")
    verts = shape.vertices if pose is None else pose.apply(shape.vertices)
    dots = verts @ d
    best = dots.max()
    tol = 1e-12 * max(1.0, float(np.abs(verts).max()) * float(np.linalg.norm(d)))
    ties = verts[dots >= best - tol]
    order = np.lexsort((ties[:, 2], ties[:, 1], ties[:, 0]))
    return ties[order[0]].copy()
