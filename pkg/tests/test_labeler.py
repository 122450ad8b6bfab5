import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from label_oracles import oracle_suite, run_oracle
from spacesim.config import LabelConfig
from spacesim.dataset.scene import run_scene
from spacesim.geometry.holders import holder_from_config, make_holder
from spacesim.geometry.rng import Rng
from spacesim.geometry.transforms import quat_from_axis_angle, quat_mul, quat_to_matrix
from spacesim.labeler import (
    EventLabels,
    TaskMismatchError,
    angular_deviation,
    first_contact_frame,
    label_contact,
    label_containment,
    label_stability,
)
from spacesim.physics.world import Trajectory
from spacesim.scenegen import TaskKind, sample_scenario

DT = 1.0 / 50
G = -9.81

unit_quats = st.lists(st.floats(-1, 1), min_size=4, max_size=4).filter(
    lambda q: 0.1 < np.linalg.norm(q)).map(lambda q: np.asarray(q) / np.linalg.norm(q))


def trace_angle(q0, q1):
    """Rotation angle of R0^T R1: cosine from the trace, sine from the skew part.

    acos of the trace alone loses ~1e-8 near zero angle.
    """
    r = quat_to_matrix(q0).T @ quat_to_matrix(q1)
    skew = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    return math.atan2(0.5 * np.linalg.norm(skew), 0.5 * (np.trace(r) - 1.0))


def falling_then_resting(frames=150, bodies=1, rest_at=30, height=1.0):
    """Free fall from ``height`` until ``rest_at``, then at rest on the ground."""
    traj = Trajectory.empty(bodies, frames)
    traj.orientations[:] = [1.0, 0.0, 0.0, 0.0]
    for f in range(frames):
        t = min(f, rest_at) * DT
        traj.positions[f, :, 2] = height + 0.5 * G * t * t if f < rest_at else 0.1
        traj.linear_velocities[f, :, 2] = G * t if f < rest_at else 0.0
    return traj


# -- angular deviation -------------------------------------------------------

def test_deviation_identity_and_quarter_turn():
    q = np.array([1.0, 0.0, 0.0, 0.0])
    assert angular_deviation(q, q) == 0.0
    assert angular_deviation(q, quat_from_axis_angle([0, 0, 1], math.pi / 2)) == pytest.approx(
        math.pi / 2, abs=1e-12)


@given(unit_quats, unit_quats)
def test_deviation_matches_trace_formula(q0, q1):
    assert angular_deviation(q0, q1) == pytest.approx(trace_angle(q0, q1), abs=1e-9)


@given(unit_quats)
def test_double_cover(q):
    assert angular_deviation(q, -q) == pytest.approx(0.0, abs=1e-12)


@given(unit_quats, unit_quats, unit_quats)
def test_deviation_is_left_invariant(q0, q1, r):
    a = angular_deviation(q0, q1)
    b = angular_deviation(quat_mul(r, q0), quat_mul(r, q1))
    assert a == pytest.approx(b, abs=1e-9)
    assert 0.0 <= a <= math.pi + 1e-12


def test_deviation_accurate_for_tiny_angles():
    q1 = quat_from_axis_angle([1, 0, 0], 1e-9)
    assert angular_deviation([1, 0, 0, 0], q1) == pytest.approx(1e-9, rel=1e-6)


def test_non_unit_input_warns_and_normalizes():
    with pytest.warns(RuntimeWarning):
        d = angular_deviation([2.0, 0, 0, 0], quat_from_axis_angle([0, 1, 0], 0.3))
    assert d == pytest.approx(0.3, abs=1e-12)


# -- stability ---------------------------------------------------------------

def test_first_contact_frame_of_free_fall():
    traj = falling_then_resting(rest_at=30)
    assert first_contact_frame(traj, 0) == 30


def test_resting_object_is_stable():
    labels = label_stability(falling_then_resting())
    o = labels.objects[0]
    assert o.label == 1 and o.total_angular_deviation == 0.0
    assert o.reference_frame == 30 + 10


def test_topple_after_settle_is_unstable():
    traj = falling_then_resting()
    for f in range(60, 150):
        traj.orientations[f, 0] = quat_from_axis_angle([1, 0, 0], min(1.0, (f - 60) * 0.05))
    o = label_stability(traj).objects[0]
    assert o.label == 0
    assert o.total_angular_deviation == pytest.approx(1.0, abs=1e-9)


def test_rotation_before_settle_frame_is_ignored():
    traj = falling_then_resting()
    q = quat_from_axis_angle([0, 1, 0], 0.5)
    traj.orientations[:35, 0] = [1, 0, 0, 0]
    traj.orientations[35:, 0] = q
    assert label_stability(traj).objects[0].label == 1


def test_deviation_at_threshold_is_unstable():
    theta = LabelConfig().stability_angle_threshold
    traj = falling_then_resting()
    traj.orientations[100:, 0] = quat_from_axis_angle([0, 0, 1], theta)
    assert label_stability(traj).objects[0].label == 0


def test_height_drop_after_settle_is_unstable():
    traj = falling_then_resting()
    traj.positions[120:, 0, 2] = 0.05
    assert label_stability(traj).objects[0].label == 0


def test_never_touching_object_is_flagged():
    traj = Trajectory.empty(1, 150)
    traj.orientations[:] = [1, 0, 0, 0]
    for f in range(150):
        traj.linear_velocities[f, 0, 2] = G * f * DT
    o = label_stability(traj).objects[0]
    assert "no_contact" in o.flags and o.reference_frame == 0


# -- contact -----------------------------------------------------------------

def contact_traj(displacement):
    traj = Trajectory.empty(2, 150)
    traj.orientations[:] = [1, 0, 0, 0]
    traj.positions[:, 0] = [0.0, 0.0, 0.1]
    traj.positions[100:, 0, 0] = displacement
    return traj


def test_contact_threshold_is_strict():
    delta = LabelConfig().contact_displacement_threshold
    assert label_contact(contact_traj(delta), probe=True).labels == [0]
    assert label_contact(contact_traj(np.nextafter(delta, 1.0)), probe=True).labels == [1]


def test_contact_ignores_motion_before_reference_frame():
    traj = contact_traj(0.0)
    traj.positions[:10, 0, 2] = 0.5
    assert label_contact(traj, probe=True).labels == [0]


@given(st.floats(0.0, 0.5), st.floats(1e-4, 0.3), st.floats(1e-4, 0.3))
def test_raising_delta_never_creates_contact(d, delta_a, delta_b):
    lo, hi = sorted((delta_a, delta_b))
    traj = contact_traj(d)
    a = label_contact(traj, True, LabelConfig(contact_displacement_threshold=lo)).labels[0]
    b = label_contact(traj, True, LabelConfig(contact_displacement_threshold=hi)).labels[0]
    assert b <= a


def test_contact_needs_probe():
    with pytest.raises(TaskMismatchError):
        label_contact(contact_traj(0.0), probe=None)


# -- containment -------------------------------------------------------------

def test_containment_interior_and_far_points(config):
    holder = make_holder(holder_from_config("box", config.holders), config.holders.tessellation)
    traj = Trajectory.empty(2, 150)
    traj.positions[-1, 0] = [0.0, 0.0, holder.cavity.floor_z + 0.1]
    traj.positions[-1, 1] = [1.0, 0.0, 0.15]
    labels = label_containment(traj, holder)
    assert labels.labels == [1, 0]
    assert labels.objects[1].final_com == (1.0, 0.0, 0.15)


def test_containment_needs_holder():
    with pytest.raises(TaskMismatchError):
        label_containment(Trajectory.empty(1, 150), None)


def test_labels_round_trip():
    labels = label_stability(falling_then_resting(bodies=2))
    assert EventLabels.from_dict(labels.to_dict()) == labels


# -- simulated oracles -------------------------------------------------------

ORACLES = [(t, name, spec, label) for t, items in oracle_suite().items()
           for name, spec, label in items]


@pytest.mark.parametrize("task,name,spec,expected", ORACLES,
                         ids=[f"{t.value}-{n}" for t, n, _, _ in ORACLES])
def test_oracle_scene(config, task, name, spec, expected):
    assert run_oracle(spec, config).label == expected


@pytest.mark.parametrize("task", list(TaskKind), ids=lambda t: t.value)
def test_resimulation_relabels_identically(config, task):
    spec = sample_scenario(task, Rng(2024), config)
    _, a = run_scene(spec, config)
    _, b = run_scene(spec, config)
    assert a == b


def test_labels_depend_on_thresholds_only_through_config(config):
    spec = sample_scenario(TaskKind.CONTACT, Rng(5), config)
    traj, labels = run_scene(spec, config)
    loose = replace(config.labels, contact_displacement_threshold=100.0)
    assert label_contact(traj, spec.probe, loose, len(spec.objects)).labels == [0] * len(spec.objects)
    assert label_contact(traj, spec.probe, config.labels, len(spec.objects)) == labels
