"""Binary event labels for the three tasks, computed from a trajectory alone."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .config import LabelConfig
from .geometry.holders import Cavity, Holder, HolderSpec, make_holder
from .physics.world import Trajectory

# Linear-velocity deviation from free fall (m/s) that marks the first contact.
FREE_FALL_TOLERANCE = 1e-3


class TaskMismatchError(ValueError):
    """The trajectory lacks what the requested task needs (holder or probe)."""


@dataclass(frozen=True)
class ObjectLabel:
    label: int
    final_com: tuple
    total_angular_deviation: float = 0.0
    displacement: float = 0.0
    reference_frame: int = 0
    flags: tuple = ()

    def to_dict(self) -> dict:
        return {"label": int(self.label), "final_com": [float(v) for v in self.final_com],
                "total_angular_deviation": float(self.total_angular_deviation),
                "displacement": float(self.displacement),
                "reference_frame": int(self.reference_frame), "flags": list(self.flags)}

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectLabel":
        return cls(int(d["label"]), tuple(d["final_com"]), float(d["total_angular_deviation"]),
                   float(d["displacement"]), int(d["reference_frame"]), tuple(d["flags"]))


@dataclass(frozen=True)
class EventLabels:
    task: str
    objects: tuple[ObjectLabel, ...] = field(default_factory=tuple)

    @property
    def labels(self) -> list[int]:
        return [o.label for o in self.objects]

    def to_dict(self) -> dict:
        return {"task": self.task, "objects": [o.to_dict() for o in self.objects]}

    @classmethod
    def from_dict(cls, d: dict) -> "EventLabels":
        return cls(d["task"], tuple(ObjectLabel.from_dict(o) for o in d["objects"]))


def _unit(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = math.sqrt(float(q @ q))
    if abs(n - 1.0) > 1e-6:
        warnings.warn(f"quaternion norm {n:.8f} deviates from 1; normalizing", RuntimeWarning,
                      stacklevel=3)
    return q / n


def angular_deviation(q0, q1) -> float:
    """Geodesic angle between two orientations, in [0, pi].

    Evaluated as 2·atan2(|vec(q0* q1)|, |<q0, q1>|), which equals
    2·acos(|<q0, q1>|) but stays accurate near zero.
    """
    a, b = _unit(q0), _unit(q1)
    w = abs(float(a @ b))
    # vector part of conj(a) * b
    v = a[0] * b[1:] - b[0] * a[1:] - np.cross(a[1:], b[1:])
    return 2.0 * math.atan2(float(np.linalg.norm(v)), w)


def _objects(trajectory: Trajectory, n_objects: int | None) -> int:
    return trajectory.body_count if n_objects is None else int(n_objects)


def _cavity(holder) -> Cavity:
    if holder is None:
        raise TaskMismatchError("containment labels need a holder")
    if isinstance(holder, Cavity):
        return holder
    if isinstance(holder, Holder):
        return holder.cavity
    if isinstance(holder, HolderSpec):
        return make_holder(holder).cavity
    raise TypeError(f"unsupported holder description {type(holder).__name__}")


def label_containment(trajectory: Trajectory, holder, n_objects: int | None = None) -> EventLabels:
    """1 iff the object's final center of mass lies inside the holder cavity."""
    cavity = _cavity(holder)
    out = []
    last = trajectory.frame_count - 1
    for i in range(_objects(trajectory, n_objects)):
        com = trajectory.positions[last, i]
        inside = bool(cavity.contains(com)[0])
        out.append(ObjectLabel(int(inside), tuple(float(v) for v in com), reference_frame=last))
    return EventLabels("containment", tuple(out))


def first_contact_frame(trajectory: Trajectory, body: int, gravity=(0.0, 0.0, -9.81)) -> int | None:
    """First frame whose linear velocity departs from free fall, or None."""
    g = np.asarray(gravity, dtype=float) * trajectory.dt
    v = trajectory.linear_velocities[:, body]
    for f in range(1, trajectory.frame_count):
        if np.max(np.abs(v[f] - (v[f - 1] + g))) > FREE_FALL_TOLERANCE:
            return f
    return None


def label_stability(trajectory: Trajectory, config: LabelConfig | None = None,
                    n_objects: int | None = None, gravity=(0.0, 0.0, -9.81)) -> EventLabels:
    """1 iff the orientation stays within the angle threshold of the settle frame
    for the rest of the scene and the final height is within tolerance of the
    settle height."""
    config = config or LabelConfig()
    delay = int(round(config.settle_delay / trajectory.dt))
    last = trajectory.frame_count - 1
    out = []
    for i in range(_objects(trajectory, n_objects)):
        flags = []
        contact = first_contact_frame(trajectory, i, gravity)
        if contact is None:
            settle = 0
            flags.append("no_contact")
        else:
            settle = min(contact + delay, last)
        q_ref = trajectory.orientations[settle, i]
        dev = max((angular_deviation(q_ref, trajectory.orientations[f, i])
                   for f in range(settle, last + 1)), default=0.0)
        h_ref = float(trajectory.positions[settle, i, 2])
        h_end = float(trajectory.positions[last, i, 2])
        steady = abs(h_end - h_ref) <= config.height_tolerance * abs(h_ref)
        label = int(dev < config.stability_angle_threshold and steady)
        out.append(ObjectLabel(label, tuple(float(v) for v in trajectory.positions[last, i]),
                               total_angular_deviation=dev, reference_frame=settle,
                               flags=tuple(flags)))
    return EventLabels("stability", tuple(out))


def label_contact(trajectory: Trajectory, probe, config: LabelConfig | None = None,
                  n_objects: int | None = None) -> EventLabels:
    """1 iff the object moved strictly more than the displacement threshold
    between the settle frame and the final frame. The probe is the last body."""
    if probe is None:
        raise TaskMismatchError("contact labels need a probe")
    config = config or LabelConfig()
    n = trajectory.body_count - 1 if n_objects is None else int(n_objects)
    ref = min(config.contact_settle_frame, trajectory.frame_count - 1)
    last = trajectory.frame_count - 1
    out = []
    for i in range(n):
        d = float(np.linalg.norm(trajectory.positions[last, i] - trajectory.positions[ref, i]))
        out.append(ObjectLabel(int(d > config.contact_displacement_threshold),
                               tuple(float(v) for v in trajectory.positions[last, i]),
                               displacement=d, reference_frame=ref))
    return EventLabels("contact", tuple(out))


def label_scene(spec, trajectory: Trajectory, config: LabelConfig | None = None,
                gravity=(0.0, 0.0, -9.81), holder_tessellation: int = 24) -> EventLabels:
    """Dispatch on the scenario's task."""
    task = spec.task.value
    n = len(spec.objects)
    if task == "containment":
        if spec.holder is None:
            raise TaskMismatchError("containment scene without a holder")
        return label_containment(trajectory, make_holder(spec.holder, holder_tessellation), n)
    if task == "stability":
        return label_stability(trajectory, config, n, gravity)
    return label_contact(trajectory, spec.probe, config, n)
