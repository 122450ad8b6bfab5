"""Scene directories: manifest.json, traj.spct and optional per-frame maps."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..annotate import Camera, analytic_flow, render_frame, set_state
from ..config import FPS, FRAME_COUNT, FRAME_DT, RunConfig
from ..geometry.rng import Rng
from ..labeler import EventLabels, label_scene
from ..physics import build_world, simulate
from ..physics.world import Trajectory
from ..scenegen import ScenarioSpec, TaskKind, sample_scenario, scene_seed, validate_spec
from . import formats as F

SCHEMA_VERSION = 1
MANIFEST = "manifest.json"
TRAJECTORY = "traj.spct"
MAP_PATTERNS = {
    "segmentation": "maps/seg_%04d.pgm",
    "depth": "maps/depth_%04d.pfm",
    "normals": "maps/norm_%04d.pfm",
    "flow": "maps/flow_%04d.flo",
}
FLOW_CONVENTION = "forward flow t -> t+1 of the surface point visible at t; no occlusion handling"


def scene_dir_name(global_index: int) -> str:
    return f"scene_{global_index:05d}"


def dumps_manifest(manifest: dict) -> str:
    return json.dumps(manifest, sort_keys=True, indent=2) + "\n"


def build_manifest(spec: ScenarioSpec, config: RunConfig, labels: EventLabels, *,
                   scene_index: int, dataset_seed: int, maps: bool, body_names) -> dict:
    cfg = config.as_dict()
    return {
        "schema_version": SCHEMA_VERSION,
        "task": spec.task.value,
        "seed": int(spec.seed),
        "dataset_seed": int(dataset_seed),
        "scene_index": int(scene_index),
        "scenario": spec.to_dict(),
        "solver": cfg["solver"],
        "label_config": cfg["labels"],
        "camera": cfg["camera"],
        "config_text": config.text,
        "labels": labels.to_dict(),
        "body_names": list(body_names),
        "frame_count": FRAME_COUNT,
        "fps": FPS,
        "files": {
            "trajectory": TRAJECTORY,
            "maps": dict(MAP_PATTERNS) if maps else None,
            "map_frames": FRAME_COUNT if maps else 0,
            "flow_frames": FRAME_COUNT - 1 if maps else 0,
        },
        "flow_convention": FLOW_CONVENTION,
    }


_REQUIRED = {
    "schema_version": int, "task": str, "seed": int, "scenario": dict, "solver": dict,
    "label_config": dict, "camera": dict, "config_text": str, "labels": dict,
    "frame_count": int, "fps": int, "files": dict, "body_names": list,
}


def check_manifest(manifest: dict, source: str = MANIFEST) -> None:
    """Raise VersionError or SchemaError for a malformed manifest."""
    if not isinstance(manifest, dict):
        raise F.SchemaError(f"{source}: manifest is not a JSON object")
    version = manifest.get("schema_version")
    if version != SCHEMA_VERSION:
        raise F.VersionError(f"{source}: unknown schema_version {version!r}, "
                             f"expected {SCHEMA_VERSION}")
    for key, kind in _REQUIRED.items():
        if key not in manifest:
            raise F.SchemaError(f"{source}: missing key {key!r}")
        if not isinstance(manifest[key], kind):
            raise F.SchemaError(f"{source}: {key!r} must be {kind.__name__}")
    if manifest["frame_count"] != FRAME_COUNT or manifest["fps"] != FPS:
        raise F.SchemaError(f"{source}: expected {FRAME_COUNT} frames at {FPS} fps")
    if manifest["task"] not in {t.value for t in TaskKind}:
        raise F.SchemaError(f"{source}: unknown task {manifest['task']!r}")
    try:
        spec = ScenarioSpec.from_dict(manifest["scenario"])
        labels = EventLabels.from_dict(manifest["labels"])
    except (KeyError, TypeError, ValueError) as exc:
        raise F.SchemaError(f"{source}: malformed scenario or labels: {exc}") from exc
    if spec.task.value != manifest["task"] or labels.task != manifest["task"]:
        raise F.SchemaError(f"{source}: task fields disagree")
    if len(labels.objects) != len(spec.objects):
        raise F.SchemaError(f"{source}: {len(labels.objects)} labels for {len(spec.objects)} objects")
    if any(v not in (0, 1) for v in labels.labels):
        raise F.SchemaError(f"{source}: labels must be 0 or 1")
    expect_bodies = len(spec.objects) + (1 if spec.probe is not None else 0)
    if len(manifest["body_names"]) != expect_bodies:
        raise F.SchemaError(f"{source}: body_names does not match the scenario")


class LazyFrames:
    """Per-frame maps loaded on access."""

    def __init__(self, root: Path, manifest: dict):
        self.root = root
        files = manifest["files"]
        self.patterns = files.get("maps") or {}
        self.frame_count = int(files.get("map_frames", 0))
        self.flow_count = int(files.get("flow_frames", 0))

    def __len__(self):
        return self.frame_count

    def _path(self, kind: str, i: int) -> Path:
        if kind not in self.patterns:
            raise FileNotFoundError(f"{self.root}: scene has no {kind} maps")
        limit = self.flow_count if kind == "flow" else self.frame_count
        if not 0 <= i < limit:
            raise IndexError(f"{kind} frame {i} out of range [0, {limit})")
        return self.root / (self.patterns[kind] % i)

    def segmentation(self, i: int) -> np.ndarray:
        return F.read_pgm(self._path("segmentation", i))

    def depth(self, i: int) -> np.ndarray:
        return F.read_pfm(self._path("depth", i))

    def normals(self, i: int) -> np.ndarray:
        return F.read_pfm(self._path("normals", i))

    def flow(self, i: int) -> np.ndarray:
        return F.read_flo(self._path("flow", i))


def write_scene(scene_dir, manifest: dict, trajectory: Trajectory, frames=None) -> Path:
    """Write a scene directory. ``frames`` yields (FrameBuffers, flow or None) per frame."""
    scene_dir = Path(scene_dir)
    try:
        scene_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"{scene_dir}: {exc.strerror or exc}") from exc
    F.write_trajectory(scene_dir / TRAJECTORY, trajectory)
    if frames is not None:
        (scene_dir / "maps").mkdir(exist_ok=True)
        for i, (fb, flow) in enumerate(frames):
            F.write_pgm(scene_dir / (MAP_PATTERNS["segmentation"] % i), fb.segmentation)
            F.write_pfm(scene_dir / (MAP_PATTERNS["depth"] % i), fb.depth)
            F.write_pfm(scene_dir / (MAP_PATTERNS["normals"] % i), fb.normals)
            if flow is not None:
                F.write_flo(scene_dir / (MAP_PATTERNS["flow"] % i), flow)
    path = scene_dir / MANIFEST
    try:
        path.write_text(dumps_manifest(manifest))
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    return scene_dir


def read_manifest(scene_dir) -> dict:
    path = Path(scene_dir) / MANIFEST
    try:
        manifest = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise F.SchemaError(f"{path}: invalid JSON: {exc}") from exc
    check_manifest(manifest, str(path))
    return manifest


def read_scene(scene_dir):
    """(manifest, trajectory, LazyFrames); validates magic, version, sizes and schema."""
    scene_dir = Path(scene_dir)
    manifest = read_manifest(scene_dir)
    traj = F.read_trajectory(scene_dir / manifest["files"]["trajectory"])
    if traj.frame_count != manifest["frame_count"]:
        raise F.SchemaError(f"{scene_dir}: trajectory has {traj.frame_count} frames, "
                            f"manifest says {manifest['frame_count']}")
    if traj.body_count != len(manifest["body_names"]):
        raise F.SchemaError(f"{scene_dir}: trajectory has {traj.body_count} bodies, "
                            f"manifest lists {len(manifest['body_names'])}")
    if traj.dt != float(np.float32(FRAME_DT)):
        raise F.SchemaError(f"{scene_dir}: trajectory dt {traj.dt} is not 1/{FPS} s")
    return manifest, traj, LazyFrames(scene_dir, manifest)


def config_from_manifest(manifest: dict) -> RunConfig:
    return RunConfig.from_toml(manifest["config_text"])


def render_maps(spec: ScenarioSpec, traj: Trajectory, config: RunConfig):
    """Yield (FrameBuffers, flow) for every frame; the last frame has no flow."""
    world = build_world(spec, config)
    camera = Camera.from_config(config.camera)
    for f in range(traj.frame_count):
        set_state(world, traj.positions[f], traj.orientations[f])
        fb = render_frame(world, camera)
        flow = None
        if f + 1 < traj.frame_count:
            flow = analytic_flow((traj.positions[f], traj.orientations[f]),
                                 (traj.positions[f + 1], traj.orientations[f + 1]), camera, fb)
        yield fb, flow


def body_names(spec: ScenarioSpec) -> list[str]:
    names = [o.shape_class.value for o in spec.objects]
    return names + (["probe"] if spec.probe is not None else [])


def run_scene(spec: ScenarioSpec, config: RunConfig):
    """Simulate and label; labels are computed from the stored float32 trajectory."""
    traj = simulate(spec, config).as_float32()
    labels = label_scene(spec, traj, config.labels, (0.0, 0.0, config.solver.gravity),
                         config.holders.tessellation)
    return traj, labels


def generate_scene(task, dataset_seed: int, index: int, global_index: int, config: RunConfig,
                   out_dir, maps: bool = False) -> Path:
    """Sample, simulate, label and write one scene; returns its directory."""
    task = TaskKind(task)
    seed = scene_seed(dataset_seed, task, index)
    spec = sample_scenario(task, Rng(seed), config)
    violations = validate_spec(spec, config)
    if violations:
        raise F.SchemaError(f"sampled spec violates invariants: {violations}")
    traj, labels = run_scene(spec, config)
    manifest = build_manifest(spec, config, labels, scene_index=global_index,
                              dataset_seed=dataset_seed, maps=maps, body_names=body_names(spec))
    frames = render_maps(spec, traj, config) if maps else None
    return write_scene(Path(out_dir) / scene_dir_name(global_index), manifest, traj, frames)


def scene_dirs(root) -> list[Path]:
    root = Path(root)
    return sorted(p for p in root.glob("scene_*") if p.is_dir())
