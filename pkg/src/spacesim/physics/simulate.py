"""Scenario to World construction and the fixed-length simulation loop."""

from __future__ import annotations

import numpy as np

from ..config import FRAME_COUNT, RunConfig
from ..geometry.holders import make_holder
from ..geometry.shapes import Sphere, make_shape, mass_properties, shape_from_config
from ..geometry.transforms import Pose
from ..scenegen import ScenarioSpec, validate_spec
from .engine import current_contact_pairs, step
from .world import Material, RigidBody, Trajectory, World


class SpecValidationError(ValueError):
    def __init__(self, violations):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


def make_body(spec, pose: Pose, material: Material, config: RunConfig, **kw) -> RigidBody:
    """Rigid body for a shape spec with its frame origin at the center of mass."""
    mesh = make_shape(spec, config.shapes.tessellation)
    mp = mass_properties(spec, config.shapes.density)
    pieces = tuple(p.translated(-mp.center_of_mass) for p in mesh.pieces)
    return RigidBody(pieces, mp, pose, material=material, **kw)


def build_world(spec: ScenarioSpec, config: RunConfig | None = None) -> World:
    """Objects in spawn order, then the probe ball (if any) as the last body."""
    config = config or RunConfig.default()
    mats = config.materials
    obj_mat = Material(mats.friction, mats.restitution)
    bodies = []
    for o in spec.objects:
        shape = shape_from_config(o.shape_class, config.shapes)
        bodies.append(make_body(shape, o.spawn_pose, obj_mat, config,
                                angular_velocity=np.asarray(o.angular_velocity, dtype=float),
                                name=o.shape_class.value))
    if spec.probe is not None:
        bodies.append(make_body(Sphere(spec.probe.radius), Pose(np.asarray(spec.probe.start, float)),
                                obj_mat, config, kinematic=True,
                                linear_velocity=np.asarray(spec.probe.velocity, float), name="probe"))
    statics = ()
    if spec.holder is not None:
        statics = make_holder(spec.holder, config.holders.tessellation).pieces
    s = config.solver
    return World(bodies, statics, gravity=(0.0, 0.0, s.gravity), solver=s,
                 ground_material=Material(mats.ground_friction, mats.ground_restitution),
                 static_material=Material(mats.holder_friction, mats.holder_restitution))


def run_world(world: World, frames: int = FRAME_COUNT) -> Trajectory:
    """Record ``frames`` frames; frame 0 is the state before any step."""
    traj = Trajectory.empty(world.n_bodies, frames)
    for f in range(frames):
        if f > 0:
            step(world)
        traj.positions[f] = world.pos
        traj.orientations[f] = world.quat
        traj.linear_velocities[f] = world.vel
        traj.angular_velocities[f] = world.omega
        traj.contact_pairs[f] = current_contact_pairs(world) if f > 0 else []
    return traj


def simulate(spec: ScenarioSpec, config: RunConfig | None = None) -> Trajectory:
    """Simulate a scenario for the fixed 150-frame scene length."""
    config = config or RunConfig.default()
    violations = validate_spec(spec, config)
    if violations:
        raise SpecValidationError(violations)
    return run_world(build_world(spec, config))
