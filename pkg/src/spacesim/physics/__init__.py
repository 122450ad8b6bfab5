"""Deterministic rigid-body engine: GJK/EPA contacts, sequential impulses, fixed substeps."""

from .engine import (
    broadphase_pairs,
    current_contact_pairs,
    integrate_step,
    narrowphase_manifold,
    penetration,
    solve_contacts,
    step,
)
from .world import ContactManifold, DegenerateContactError, Material, RigidBody, Trajectory, World
from .simulate import SpecValidationError, build_world, make_body, run_world, simulate
