"""Containment holders: static convex-piece meshes plus cavity descriptors.

Every holder stands on the ground plane centered at the origin. Round walls
are rings of ``k`` convex wall segments whose inner faces are tangent to the
nominal cavity circle, so the circular cavity test is conservative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .hull import ConvexPiece, polytope
from .shapes import InvalidShapeError


class HolderKind(str, Enum):
    WINE_GLASS = "wine_glass"
    GLASS = "glass"
    MUG = "mug"
    POT = "pot"
    BOX = "box"


HOLDER_KINDS = tuple(HolderKind)


@dataclass(frozen=True)
class HolderSpec:
    """Interior cavity dimensions (meters).

    ``radius`` is the opening radius (the bowl top for the wine glass);
    ``bottom_radius`` only differs from it for the wine glass frustum. Box
    holders use ``half_x``/``half_y`` instead of radii.
    """

    kind: HolderKind
    depth: float
    wall: float
    floor: float
    radius: float = 0.0
    bottom_radius: float = 0.0
    half_x: float = 0.0
    half_y: float = 0.0
    handle_reach: float = 0.0
    stem_height: float = 0.0
    stem_radius: float = 0.0
    base_radius: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", HolderKind(self.kind))
        if self.depth <= 0 or self.wall <= 0 or self.floor <= 0:
            raise InvalidShapeError("holder depth, wall and floor must be positive")
        if self.kind is HolderKind.BOX:
            if self.half_x <= 0 or self.half_y <= 0:
                raise InvalidShapeError("box holder needs positive half extents")
        elif self.radius <= 0 or self.bottom_radius <= 0:
            raise InvalidShapeError("round holder needs positive radii")
        if self.kind is HolderKind.WINE_GLASS and (
                self.stem_height <= 0 or self.stem_radius <= 0 or self.base_radius <= 0):
            raise InvalidShapeError("wine glass needs a stem and base")

    def to_dict(self) -> dict:
        out = {k: float(v) for k, v in self.__dict__.items() if k != "kind"}
        out["kind"] = self.kind.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "HolderSpec":
        return cls(**data)


def holder_from_config(kind: HolderKind | str, sizes) -> HolderSpec:
    kind = HolderKind(kind)
    f = sizes.floor_thickness
    if kind is HolderKind.BOX:
        return HolderSpec(kind, sizes.box_depth, sizes.box_wall, f,
                          half_x=sizes.box_half_x, half_y=sizes.box_half_y)
    if kind is HolderKind.GLASS:
        r = sizes.glass_radius
        return HolderSpec(kind, sizes.glass_depth, sizes.glass_wall, f, radius=r, bottom_radius=r)
    if kind is HolderKind.MUG:
        r = sizes.mug_radius
        return HolderSpec(kind, sizes.mug_depth, sizes.mug_wall, f, radius=r, bottom_radius=r,
                          handle_reach=sizes.mug_handle_reach)
    if kind is HolderKind.POT:
        r = sizes.pot_radius
        return HolderSpec(kind, sizes.pot_depth, sizes.pot_wall, f, radius=r, bottom_radius=r)
    return HolderSpec(kind, sizes.wine_bowl_depth, sizes.wine_wall, f,
                      radius=sizes.wine_bowl_top_radius,
                      bottom_radius=sizes.wine_bowl_bottom_radius,
                      stem_height=sizes.wine_stem_height, stem_radius=sizes.wine_stem_radius,
                      base_radius=sizes.wine_base_radius)


@dataclass(frozen=True)
class Cavity:
    """Open-topped cavity: a box or a (possibly conical) frustum about the z axis."""

    floor_z: float
    opening_z: float
    bottom_radius: float = 0.0
    top_radius: float = 0.0
    half_x: float = 0.0
    half_y: float = 0.0
    center: tuple = (0.0, 0.0)

    @property
    def is_box(self) -> bool:
        return self.half_x > 0

    @property
    def opening_center(self) -> np.ndarray:
        return np.array([self.center[0], self.center[1], self.opening_z])

    def radius_at(self, z):
        t = (np.asarray(z) - self.floor_z) / (self.opening_z - self.floor_z)
        return self.bottom_radius + t * (self.top_radius - self.bottom_radius)

    def contains(self, points) -> np.ndarray:
        """Strictly below the opening plane, above the floor, within the lateral bounds."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        dx, dy, z = p[:, 0] - self.center[0], p[:, 1] - self.center[1], p[:, 2]
        vertical = (z < self.opening_z) & (z > self.floor_z)
        if self.is_box:
            lateral = (np.abs(dx) < self.half_x) & (np.abs(dy) < self.half_y)
        else:
            lateral = np.hypot(dx, dy) < self.radius_at(z)
        return vertical & lateral

    def volume(self) -> float:
        h = self.opening_z - self.floor_z
        if self.is_box:
            return 4.0 * self.half_x * self.half_y * h
        r0, r1 = self.bottom_radius, self.top_radius
        return math.pi * h * (r0 * r0 + r0 * r1 + r1 * r1) / 3.0

    def to_dict(self) -> dict:
        return {"floor_z": self.floor_z, "opening_z": self.opening_z,
                "bottom_radius": self.bottom_radius, "top_radius": self.top_radius,
                "half_x": self.half_x, "half_y": self.half_y, "center": list(self.center)}


@dataclass(frozen=True)
class Holder:
    spec: HolderSpec
    pieces: tuple[ConvexPiece, ...]
    cavity: Cavity


def _box_piece(lo, hi) -> ConvexPiece:
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    corners = np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
    return polytope(corners)


def _disk(radius: float, k: int, z0: float, z1: float) -> ConvexPiece:
    rr = radius / math.cos(math.pi / k)
    ang = 2 * np.pi * np.arange(k) / k
    ring = np.column_stack([rr * np.cos(ang), rr * np.sin(ang)])
    pts = np.vstack([np.column_stack([ring, np.full(k, z0)]), np.column_stack([ring, np.full(k, z1)])])
    return polytope(pts)


def _wall_ring(r_bottom: float, r_top: float, wall: float, k: int, z0: float, z1: float):
    """Ring of k wall segments; inner faces tangent to the cone r(z) = lerp(r_bottom, r_top)."""
    sec = 1.0 / math.cos(math.pi / k)
    pieces = []
    for i in range(k):
        a0 = 2 * math.pi * (i - 0.5) / k
        a1 = 2 * math.pi * (i + 0.5) / k
        pts = []
        for a in (a0, a1):
            c, s = math.cos(a), math.sin(a)
            for r, z in ((r_bottom, z0), (r_top, z1)):
                for rr in (r * sec, (r + wall) * sec):
                    pts.append((rr * c, rr * s, z))
        pieces.append(polytope(np.array(pts)))
    return pieces


def make_holder(spec: HolderSpec, tessellation: int = 24) -> Holder:
    k = int(tessellation)
    if k < 8:
        raise InvalidShapeError("holder tessellation must be at least 8")
    f, w = spec.floor, spec.wall
    if spec.kind is HolderKind.BOX:
        hx, hy, top = spec.half_x, spec.half_y, f + spec.depth
        pieces = [
            _box_piece((-hx - w, -hy - w, 0.0), (hx + w, hy + w, f)),
            _box_piece((-hx - w, -hy - w, 0.0), (-hx, hy + w, top)),
            _box_piece((hx, -hy - w, 0.0), (hx + w, hy + w, top)),
            _box_piece((-hx, -hy - w, 0.0), (hx, -hy, top)),
            _box_piece((-hx, hy, 0.0), (hx, hy + w, top)),
        ]
        cavity = Cavity(f, top, half_x=hx, half_y=hy)
        return Holder(spec, tuple(pieces), cavity)

    if spec.kind is HolderKind.WINE_GLASS:
        base_t = 0.02
        stem_top = base_t + spec.stem_height
        floor_z = stem_top + f
        top = floor_z + spec.depth
        pieces = [
            _disk(spec.base_radius, k, 0.0, base_t),
            _disk(spec.stem_radius, max(8, k // 2), base_t, stem_top + 0.5 * f),
            _disk(spec.bottom_radius + w, k, stem_top, floor_z),
        ]
        pieces += _wall_ring(spec.bottom_radius, spec.radius, w, k, stem_top, top)
        cavity = Cavity(floor_z, top, spec.bottom_radius, spec.radius)
        return Holder(spec, tuple(pieces), cavity)

    r = spec.radius
    top = f + spec.depth
    pieces = [_disk(r + w, k, 0.0, f)]
    pieces += _wall_ring(r, r, w, k, 0.0, top)
    if spec.kind is HolderKind.MUG:
        # Handle on the +x side: two arms and an upright grip.
        x0 = (r + w) * math.cos(math.pi / k) - 0.01
        x1 = x0 + spec.handle_reach
        t = 0.03
        zl, zh = f + 0.2 * spec.depth, f + 0.8 * spec.depth
        pieces += [
            _box_piece((x0, -t, zl), (x1, t, zl + t)),
            _box_piece((x0, -t, zh - t), (x1, t, zh)),
            _box_piece((x1 - t, -t, zl), (x1, t, zh)),
        ]
    cavity = Cavity(f, top, r, r)
    return Holder(spec, tuple(pieces), cavity)
