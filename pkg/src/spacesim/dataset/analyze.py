"""Dataset statistics (object-count histogram, per-class success rates) and validation."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..geometry.shapes import OBJECT_CLASSES
from ..labeler import EventLabels, label_scene
from ..scenegen import TASKS, ScenarioSpec, validate_spec
from . import formats as F
from .scene import config_from_manifest, read_manifest, read_scene, scene_dirs


class EmptyDatasetError(RuntimeError):
    """No readable scene under the dataset root."""


@dataclass
class TaskStats:
    scene_count: int = 0
    n_histogram: dict = field(default_factory=lambda: {1: 0, 2: 0, 3: 0})
    class_counts: dict = field(default_factory=Counter)
    class_successes: dict = field(default_factory=Counter)

    def success_rate(self, shape_class: str) -> float | None:
        n = self.class_counts.get(shape_class, 0)
        return None if n == 0 else self.class_successes.get(shape_class, 0) / n

    def to_dict(self) -> dict:
        return {
            "scene_count": self.scene_count,
            "n_histogram": {str(k): v for k, v in sorted(self.n_histogram.items())},
            "class_counts": {c.value: self.class_counts.get(c.value, 0) for c in OBJECT_CLASSES},
            "success_rate": {c.value: self.success_rate(c.value) for c in OBJECT_CLASSES},
        }


@dataclass
class StatsReport:
    """Per-task statistics; tasks with no scenes are absent rather than zero."""

    tasks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {t: s.to_dict() for t, s in self.tasks.items()}

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["task", "metric", "key", "count", "successes", "success_rate"])
            for task, s in self.tasks.items():
                w.writerow([task, "scenes", "", s.scene_count, "", ""])
                for n, c in sorted(s.n_histogram.items()):
                    w.writerow([task, "n_objects", n, c, "", ""])
                for cls in OBJECT_CLASSES:
                    k = s.class_counts.get(cls.value, 0)
                    rate = s.success_rate(cls.value)
                    w.writerow([task, "class", cls.value, k, s.class_successes.get(cls.value, 0),
                                "" if rate is None else f"{rate:.6f}"])


def analyze_dataset(root, csv_path=None) -> StatsReport:
    """Aggregate scene manifests under ``root``."""
    report = StatsReport()
    for d in scene_dirs(root):
        m = read_manifest(d)
        spec = ScenarioSpec.from_dict(m["scenario"])
        labels = EventLabels.from_dict(m["labels"])
        s = report.tasks.setdefault(spec.task.value, TaskStats())
        s.scene_count += 1
        s.n_histogram[len(spec.objects)] = s.n_histogram.get(len(spec.objects), 0) + 1
        for cls, lab in zip(spec.classes, labels.labels):
            s.class_counts[cls.value] += 1
            s.class_successes[cls.value] += lab
    if not report.tasks:
        raise EmptyDatasetError(f"{root}: no scenes found")
    # stable task order
    report.tasks = {t.value: report.tasks[t.value] for t in TASKS if t.value in report.tasks}
    if csv_path is not None:
        report.write_csv(csv_path)
    return report


def validate_scene(scene_dir, check_maps: bool = True) -> list[dict]:
    """All problems found in one scene directory, as machine-readable records."""
    scene_dir = Path(scene_dir)
    problems = []

    def bad(code, message, **extra):
        problems.append({"scene": scene_dir.name, "code": code, "message": message, **extra})

    try:
        manifest, traj, frames = read_scene(scene_dir)
    except F.DatasetError as exc:
        bad(type(exc).__name__, str(exc))
        return problems
    config = config_from_manifest(manifest)
    spec = ScenarioSpec.from_dict(manifest["scenario"])
    for v in validate_spec(spec, config):
        bad("spec_violation", v)
    if traj.frame_count != 150:
        bad("frame_count", f"{traj.frame_count} frames")
    if not np.all(np.isfinite(traj.positions)):
        bad("non_finite", "trajectory contains non-finite positions")
    if spec.probe is not None:
        v = traj.linear_velocities[:, -1]
        if not np.allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-6):
            bad("probe_speed", "probe speed deviates from 1 m/s")
    stored = EventLabels.from_dict(manifest["labels"])
    again = label_scene(spec, traj, config.labels, (0.0, 0.0, config.solver.gravity),
                        config.holders.tessellation)
    if again.labels != stored.labels:
        bad("label_mismatch", f"recomputed labels {again.labels} != stored {stored.labels}")
    if check_maps and len(frames):
        n_ids = traj.body_count + 1
        for i in range(len(frames)):
            try:
                seg = frames.segmentation(i)
                depth = frames.depth(i)
                normals = frames.normals(i)
                flow = frames.flow(i) if i < frames.flow_count else None
            except (F.DatasetError, OSError) as exc:
                bad("map_format", str(exc), frame=i)
                continue
            if seg.max() > n_ids:
                bad("segmentation_id", f"id {int(seg.max())} exceeds {n_ids}", frame=i)
            hit = np.isfinite(depth)
            norm = np.linalg.norm(normals[hit], axis=-1)
            if hit.any() and np.max(np.abs(norm - 1.0)) > 1e-4:
                bad("normal_length", "non-unit normal on a finite-depth pixel", frame=i)
            if flow is not None and flow.shape[:2] != seg.shape:
                bad("flow_shape", "flow size differs from segmentation", frame=i)
    return problems


def validate_dataset(root, check_maps: bool = True) -> tuple[int, list[dict]]:
    """(scenes checked, problems)."""
    dirs = scene_dirs(root)
    problems = []
    for d in dirs:
        problems += validate_scene(d, check_maps)
    return len(dirs), problems
