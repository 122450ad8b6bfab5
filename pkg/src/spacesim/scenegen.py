"""Procedural scenario sampling for the containment, stability and contact tasks.

Spawn poses are center-of-mass poses in the world frame. Holders stand at the
origin. Every function draws from the supplied ``Rng`` in a fixed order, so a
(task, seed, config) triple fully determines the resulting spec.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .config import PROBE_SPEED, RunConfig
from .geometry.holders import HOLDER_KINDS, HolderSpec, holder_from_config, make_holder
from .geometry.rng import Rng, mix
from .geometry.shapes import OBJECT_CLASSES, ShapeClass, bounding_radius, rest_height, shape_from_config
from .geometry.transforms import Pose


class TaskKind(str, Enum):
    CONTAINMENT = "containment"
    STABILITY = "stability"
    CONTACT = "contact"


TASKS = tuple(TaskKind)


class PlacementError(RuntimeError):
    """Placement could not satisfy the no-overlap rules."""


@dataclass(frozen=True)
class ObjectSpec:
    shape_class: ShapeClass
    spawn_pose: Pose
    angular_velocity: tuple = (0.0, 0.0, 0.0)

    def to_dict(self) -> dict:
        return {"class": self.shape_class.value, "pose": self.spawn_pose.to_list(),
                "angular_velocity": [float(v) for v in self.angular_velocity]}

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectSpec":
        return cls(ShapeClass(d["class"]), Pose.from_list(d["pose"]),
                   tuple(float(v) for v in d.get("angular_velocity", (0.0, 0.0, 0.0))))


@dataclass(frozen=True)
class ProbeSpec:
    start: tuple
    velocity: tuple
    radius: float

    def to_dict(self) -> dict:
        return {"start": [float(v) for v in self.start],
                "velocity": [float(v) for v in self.velocity], "radius": float(self.radius)}

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeSpec":
        return cls(tuple(d["start"]), tuple(d["velocity"]), float(d["radius"]))


@dataclass(frozen=True)
class ScenarioSpec:
    task: TaskKind
    seed: int
    objects: tuple[ObjectSpec, ...]
    holder: HolderSpec | None = None
    probe: ProbeSpec | None = None
    height_step: float = 0.0

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "seed": int(self.seed),
            "objects": [o.to_dict() for o in self.objects],
            "holder": None if self.holder is None else self.holder.to_dict(),
            "probe": None if self.probe is None else self.probe.to_dict(),
            "height_step": float(self.height_step),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        return cls(
            TaskKind(d["task"]), int(d["seed"]),
            tuple(ObjectSpec.from_dict(o) for o in d["objects"]),
            None if d.get("holder") is None else HolderSpec.from_dict(d["holder"]),
            None if d.get("probe") is None else ProbeSpec.from_dict(d["probe"]),
            float(d.get("height_step", 0.0)),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def classes(self) -> list[ShapeClass]:
        return [o.shape_class for o in self.objects]


@lru_cache(maxsize=None)
def _class_geometry(shape_class: ShapeClass, config: RunConfig):
    spec = shape_from_config(shape_class, config.shapes)
    n = config.shapes.tessellation
    return bounding_radius(spec, n), rest_height(spec, n)


@lru_cache(maxsize=None)
def _holder_cavity(spec: HolderSpec, tessellation: int):
    return make_holder(spec, tessellation).cavity


def _spin(rng: Rng, scale: float) -> tuple:
    if scale <= 0:
        return (0.0, 0.0, 0.0)
    return tuple(rng.uniform(-scale, scale) for _ in range(3))


def _check_stack(classes, heights, config: RunConfig):
    radii = [_class_geometry(c, config)[0] for c in classes]
    for i in range(len(classes)):
        for j in range(i + 1, len(classes)):
            if abs(heights[i] - heights[j]) < radii[i] + radii[j]:
                raise PlacementError(f"objects {i} and {j} overlap at spawn")


def place_containment(classes, holder: HolderSpec, rng: Rng, config: RunConfig):
    """Objects stacked above the opening center with one signed height step per scene.

    Returns (objects, step).
    """
    cfg = config.scenegen
    cavity = _holder_cavity(holder, config.holders.tessellation)
    step = cfg.height_step if rng.random() < 0.5 else -cfg.height_step
    cx, cy, oz = cavity.opening_center
    heights = [cfg.containment_base_height + i * step for i in range(len(classes))]
    _check_stack(classes, heights, config)
    objects = tuple(
        ObjectSpec(c, Pose(np.array([cx, cy, oz + h])), _spin(rng, cfg.release_spin))
        for c, h in zip(classes, heights))
    return objects, step


def place_stability(classes, rng: Rng, config: RunConfig):
    """Objects above (x, y) offsets from the fixed value set, stacked from the base height."""
    cfg = config.scenegen
    objects = []
    heights = [cfg.stability_base_height + i * cfg.height_step for i in range(len(classes))]
    _check_stack(classes, heights, config)
    for c, h in zip(classes, heights):
        x = rng.choice(cfg.stability_offsets)
        y = rng.choice(cfg.stability_offsets)
        objects.append(ObjectSpec(c, Pose(np.array([x, y, h])), _spin(rng, cfg.release_spin)))
    return tuple(objects)


def grid_centers(config: RunConfig) -> np.ndarray:
    """Cell-center coordinates along one axis of the centered contact grid."""
    cfg = config.scenegen
    return (np.arange(cfg.grid_cells) - 0.5 * (cfg.grid_cells - 1)) * cfg.grid_pitch


def place_contact(classes, rng: Rng, config: RunConfig):
    """Objects at rest in distinct grid cells plus a probe ball entering from -x.

    Returns (objects, probe).
    """
    cfg = config.scenegen
    centers = grid_centers(config)
    n_cells = cfg.grid_cells * cfg.grid_cells
    cells = []
    for _ in range(len(classes)):
        for _ in range(cfg.max_placement_tries):
            cell = rng.randbelow(n_cells)
            if cell not in cells:
                cells.append(cell)
                break
        else:
            raise PlacementError("could not find a free grid cell")
    objects = []
    for c, cell in zip(classes, cells):
        col, row = divmod(cell, cfg.grid_cells)
        z = _class_geometry(c, config)[1]
        objects.append(ObjectSpec(c, Pose(np.array([centers[col], centers[row], z]))))
    if rng.random() < cfg.probe_lane_occupied_probability:
        lane = objects[rng.randbelow(len(objects))].spawn_pose.position[1]
    else:
        lane = centers[rng.randbelow(cfg.grid_cells)]
    r = cfg.probe_radius
    x0 = centers[0] - 0.5 * cfg.grid_pitch - r
    probe = ProbeSpec((float(x0), float(lane), float(r)), (PROBE_SPEED, 0.0, 0.0), r)
    return tuple(objects), probe


def sample_scenario(task: TaskKind | str, rng: Rng, config: RunConfig | None = None) -> ScenarioSpec:
    """Draw N, the classes, the holder (containment) and the task placement.

    Placement failures are resampled up to ``max_placement_tries`` times.
    """
    config = config or RunConfig.default()
    task = TaskKind(task)
    seed = rng.seed
    for _ in range(config.scenegen.max_placement_tries):
        n = 1 + rng.randbelow(3)
        classes = [rng.choice(OBJECT_CLASSES) for _ in range(n)]
        try:
            if task is TaskKind.CONTAINMENT:
                holder = holder_from_config(rng.choice(HOLDER_KINDS), config.holders)
                objects, step = place_containment(classes, holder, rng, config)
                spec = ScenarioSpec(task, seed, objects, holder=holder, height_step=step)
            elif task is TaskKind.STABILITY:
                spec = ScenarioSpec(task, seed, place_stability(classes, rng, config))
            else:
                objects, probe = place_contact(classes, rng, config)
                spec = ScenarioSpec(task, seed, objects, probe=probe)
        except PlacementError:
            continue
        return spec
    raise PlacementError(f"no valid {task.value} placement after "
                         f"{config.scenegen.max_placement_tries} tries")


def scene_seed(dataset_seed: int, task: TaskKind | str, index: int) -> int:
    """Seed of the ``index``-th scene of ``task`` in a dataset."""
    return mix(mix(dataset_seed, TASKS.index(TaskKind(task))), index)


def validate_spec(spec: ScenarioSpec, config: RunConfig | None = None) -> list[str]:
    """All invariant violations of ``spec`` (empty list when valid)."""
    config = config or RunConfig.default()
    cfg = config.scenegen
    out = []
    n = len(spec.objects)
    if not 1 <= n <= 3:
        out.append(f"N out of range: {n} objects")
    for i, o in enumerate(spec.objects):
        if not isinstance(o.shape_class, ShapeClass):
            out.append(f"object {i}: unknown class {o.shape_class!r}")
        q = np.asarray(o.spawn_pose.orientation)
        if abs(float(q @ q) - 1.0) > 1e-9:
            out.append(f"object {i}: orientation not unit")
        if not np.allclose(q, [1.0, 0.0, 0.0, 0.0]):
            out.append(f"object {i}: spawn orientation is not canonical")

    if spec.task is TaskKind.CONTAINMENT:
        if spec.holder is None:
            out.append("holder missing")
        if spec.probe is not None:
            out.append("probe present in a containment scene")
    elif spec.task is TaskKind.CONTACT:
        if spec.probe is None:
            out.append("probe missing")
        if spec.holder is not None:
            out.append("holder present in a contact scene")
    else:
        if spec.holder is not None:
            out.append("holder present in a stability scene")
        if spec.probe is not None:
            out.append("probe present in a stability scene")

    positions = [np.asarray(o.spawn_pose.position) for o in spec.objects]
    if spec.task is TaskKind.CONTAINMENT and spec.holder is not None:
        cavity = _holder_cavity(spec.holder, config.holders.tessellation)
        cx, cy, oz = cavity.opening_center
        if abs(abs(spec.height_step) - cfg.height_step) > 1e-12:
            out.append(f"height step {spec.height_step} is not ±{cfg.height_step}")
        for i, p in enumerate(positions):
            if abs(p[0] - cx) > 1e-9 or abs(p[1] - cy) > 1e-9:
                out.append(f"object {i}: not above the opening center")
            want = oz + cfg.containment_base_height + i * spec.height_step
            if abs(p[2] - want) > 1e-9:
                out.append(f"object {i}: spawn height {p[2]:.6f} != {want:.6f}")
    elif spec.task is TaskKind.STABILITY:
        allowed = np.asarray(cfg.stability_offsets)
        for i, p in enumerate(positions):
            for axis in (0, 1):
                if np.min(np.abs(allowed - p[axis])) > 1e-12:
                    out.append(f"object {i}: offset {p[axis]} not in the offset set")
            want = cfg.stability_base_height + i * cfg.height_step
            if abs(p[2] - want) > 1e-9:
                out.append(f"object {i}: spawn height {p[2]:.6f} != {want:.6f}")
    elif spec.task is TaskKind.CONTACT:
        centers = grid_centers(config)
        cells = set()
        for i, (o, p) in enumerate(zip(spec.objects, positions)):
            ix = np.flatnonzero(np.abs(centers - p[0]) < 1e-9)
            iy = np.flatnonzero(np.abs(centers - p[1]) < 1e-9)
            if len(ix) != 1 or len(iy) != 1:
                out.append(f"object {i}: position ({p[0]}, {p[1]}) outside the grid cells")
                continue
            cell = (int(ix[0]), int(iy[0]))
            if cell in cells:
                out.append(f"object {i}: grid cell {cell} already occupied")
            cells.add(cell)
            if isinstance(o.shape_class, ShapeClass):
                rest = _class_geometry(o.shape_class, config)[1]
                if abs(p[2] - rest) > 1e-9:
                    out.append(f"object {i}: not at rest height")
        if spec.probe is not None:
            v = np.asarray(spec.probe.velocity, dtype=float)
            if float(np.linalg.norm(v)) != PROBE_SPEED:
                out.append(f"probe speed {np.linalg.norm(v)} != {PROBE_SPEED}")
            edge = centers[0] - 0.5 * cfg.grid_pitch
            if spec.probe.start[0] + spec.probe.radius > edge + 1e-9:
                out.append("probe does not start outside the grid")
            if np.min(np.abs(centers - spec.probe.start[1])) > 1e-9:
                out.append("probe lane is not a grid row")
    return out
