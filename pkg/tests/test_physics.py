import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from physics_helpers import (
    CONFIG,
    body,
    energy,
    momentum,
    unit_ball_directions,
    world,
    world_vertices,
)
from spacesim.config import FRAME_DT, SolverConfig
from spacesim.geometry.shapes import (
    OBJECT_CLASSES,
    Cone,
    Cube,
    Sphere,
    rest_height,
    shape_from_config,
)
from spacesim.geometry.transforms import quat_from_axis_angle
from spacesim.physics import (
    Material,
    broadphase_pairs,
    integrate_step,
    narrowphase_manifold,
    penetration,
    run_world,
    solve_contacts,
    step,
)
from spacesim.physics.world import Trajectory

SUB_DT = FRAME_DT / CONFIG.solver.substeps


# -- integration -------------------------------------------------------------

def test_single_free_fall_step():
    w = world([body(Sphere(0.15), (0, 0, 2))], ground=False)
    integrate_step(w, 0.005)
    assert w.vel[0, 2] == pytest.approx(-0.04905, abs=1e-12)
    assert w.pos[0, 2] == pytest.approx(2 - 0.000245250, abs=1e-9)


def test_full_turn_returns_to_identity():
    w = world([body(Cube(0.14), (0, 0, 5), omega=(0, 0, 2 * math.pi))], gravity=(0, 0, 0),
              ground=False)
    for _ in range(200):
        integrate_step(w, 0.005)
    q = w.quat[0]
    assert abs(abs(q[0]) - 1.0) < 1e-9
    assert np.allclose(w.omega[0], [0, 0, 2 * math.pi])


def test_torque_free_spin_keeps_unit_quaternion():
    shape = shape_from_config("cone", CONFIG.shapes)
    w = world([body(shape, (0, 0, 5), omega=(3.0, -1.0, 7.0))], gravity=(0, 0, 0), ground=False)
    for _ in range(150):
        step(w)
    assert abs(np.linalg.norm(w.quat[0]) - 1.0) < 1e-12


def test_empty_world_steps():
    w = world([])
    step(w)
    assert w.n_bodies == 0 and w.time == pytest.approx(FRAME_DT)


def test_integrate_step_rejects_bad_dt():
    w = world([body(Sphere(0.1), (0, 0, 1))])
    with pytest.raises(ValueError):
        integrate_step(w, 0.0)
    with pytest.raises(ValueError):
        step(w, 0.03)


# -- narrowphase ---------------------------------------------------------------

def test_sphere_sphere_depth():
    w = world([body(Sphere(0.5), (0, 0, 2)), body(Sphere(0.5), (0.8, 0, 2))])
    m = narrowphase_manifold(w, 0, 1)
    assert len(m) == 1
    assert m.depths[0] == pytest.approx(0.2)
    assert np.allclose(m.normals[0], [1, 0, 0])


def test_sphere_plane_depth():
    w = world([body(Sphere(0.5), (0, 0, 0.49))])
    m = narrowphase_manifold(w, 0, w.n_bodies)
    assert m.depths[0] == pytest.approx(0.01)
    assert np.allclose(m.normals[0], [0, 0, -1])


def test_separated_bodies_have_no_manifold():
    w = world([body(Sphere(0.5), (0, 0, 2)), body(Cube(0.2), (1.0, 0, 2))])
    assert narrowphase_manifold(w, 0, 1) is None
    assert narrowphase_manifold(w, 0, w.n_bodies) is None


def brute_force_depth(a: np.ndarray, b: np.ndarray, dirs: np.ndarray) -> float:
    """Minimum translation distance: min over n of h_A(n) + h_B(-n)."""
    overlap = (a @ dirs.T).max(axis=0) + (-(b @ dirs.T)).max(axis=0)
    return float(overlap.min())


def polished_depth(a: np.ndarray, b: np.ndarray) -> float:
    """Lattice search followed by Nelder-Mead polish of the best 20 directions.

    The lattice alone is too coarse: the overlap function is only Lipschitz
    with the body diameter as constant.
    """
    dirs = unit_ball_directions(100_000)
    overlap = (a @ dirs.T).max(axis=0) + (-(b @ dirs.T)).max(axis=0)

    def f(x):
        n = x / np.linalg.norm(x)
        return float((a @ n).max() + (-(b @ n)).max())

    best = float(overlap.min())
    for i in np.argsort(overlap)[:20]:
        r = minimize(f, dirs[i], method="Nelder-Mead",
                     options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        best = min(best, float(r.fun))
    return best


@pytest.mark.parametrize("offset", [(0.0, 0.0, 0.30), (0.12, 0.05, 0.25), (0.2, -0.1, 0.1)])
def test_polytope_depth_matches_brute_force(offset):
    cube = body(Cube(0.14), (0, 0, 2), orientation=quat_from_axis_angle([1, 1, 0], 0.3))
    cone = body(Cone(0.15, 0.3), np.add((0, 0, 2), offset),
                orientation=quat_from_axis_angle([0, 1, 1], 2.5))
    w = world([cube, cone], ground=False)
    depth, normal = penetration(w, 0, 1)
    oracle = polished_depth(world_vertices(w, 0), world_vertices(w, 1))
    assert depth == pytest.approx(oracle, abs=1e-6)
    assert brute_force_depth(world_vertices(w, 0), world_vertices(w, 1),
                             normal[None, :]) == pytest.approx(depth, abs=1e-9)
    assert narrowphase_manifold(w, 0, 1) is not None


def test_separation_distance_of_disjoint_pieces():
    w = world([body(Cube(0.14), (0, 0, 2)), body(Cube(0.14), (0.5, 0, 2))], ground=False)
    depth, normal = penetration(w, 0, 1)
    assert depth == pytest.approx(-0.22)
    assert np.allclose(normal, [1, 0, 0])


def test_cube_on_ground_manifold_has_four_corners():
    w = world([body(Cube(0.14), (0, 0, 0.139))])
    m = narrowphase_manifold(w, 0, w.n_bodies)
    assert len(m) == 4
    assert np.allclose(m.depths, 0.001)
    assert np.allclose(np.abs(m.points[:, :2]), 0.14)


# -- contact solver ------------------------------------------------------------

def point_velocity(w, i, p):
    return w.vel[i] + np.cross(w.omega[i], p - w.pos[i])


def test_resting_cube_solve_removes_approach_velocity():
    w = world([body(Cube(0.14), (0, 0, 0.1395), velocity=(0.05, 0, -0.5), omega=(0.3, 0, 0))])
    m = narrowphase_manifold(w, 0, w.n_bodies)
    solve_contacts(w, [m], SUB_DT)
    for p, n in zip(m.points, m.normals):
        # normals point from the cube to the ground: separation is -v.n
        assert -point_velocity(w, 0, p) @ n >= -1e-4


def test_restitution_bounce_speed():
    w = world([body(Sphere(0.15), (0, 0, 0.1499), velocity=(0, 0, -2), restitution=0.5)],
              ground_restitution=0.5)
    m = narrowphase_manifold(w, 0, w.n_bodies)
    solve_contacts(w, [m], SUB_DT)
    assert w.vel[0, 2] == pytest.approx(1.0, abs=0.05)


def test_frictionless_contact_keeps_tangential_velocity():
    w = world([body(Sphere(0.15), (0, 0, 0.1499), velocity=(1.0, 0.3, -2), friction=0.0)],
              ground_friction=0.0)
    m = narrowphase_manifold(w, 0, w.n_bodies)
    solve_contacts(w, [m], SUB_DT)
    assert w.vel[0, 0] == 1.0 and w.vel[0, 1] == 0.3
    assert w.vel[0, 2] >= 0.0


def test_friction_impulse_inside_cone():
    w = world([body(Sphere(0.15), (0, 0, 0.1499), velocity=(3.0, 0, -1.0), friction=0.2)],
              ground_friction=0.2)
    m = narrowphase_manifold(w, 0, w.n_bodies)
    mass = w.bodies[0].mass_props.mass
    before = w.vel[0].copy()
    acc = solve_contacts(w, [m], SUB_DT)
    dv = w.vel[0] - before
    jt = mass * math.hypot(dv[0], dv[1])
    assert jt <= 0.2 * acc.sum() * (1 + 1e-9)


# -- whole-scene oracles -------------------------------------------------------

def drop_apex(drop=1.0, e=0.5, r=0.15):
    w = world([body(Sphere(r), (0, 0, r + drop), restitution=e)], ground_restitution=e)
    lowest_seen = False
    apex = 0.0
    for _ in range(150):
        step(w)
        z = w.pos[0, 2] - r
        if w.vel[0, 2] > 0:
            lowest_seen = True
        if lowest_seen:
            apex = max(apex, z)
            if w.vel[0, 2] < 0:
                break
    return apex


def test_drop_rebound_apex():
    assert drop_apex() == pytest.approx(0.25, rel=0.05)


@pytest.mark.parametrize("shape_class", OBJECT_CLASSES, ids=lambda c: c.value)
def test_resting_drift(shape_class):
    shape = shape_from_config(shape_class, CONFIG.shapes)
    z = rest_height(shape, CONFIG.shapes.tessellation)
    w = world([body(shape, (0.3, -0.2, z))])
    traj = run_world(w, 150)
    drift = np.linalg.norm(traj.positions[:, 0] - traj.positions[0, 0], axis=1).max()
    assert drift < 2e-3


def test_zero_gravity_collision_conserves_momentum():
    a = body(Sphere(0.15), (-1.0, 0.0, 2.0), velocity=(2.0, 0.0, 0.0), friction=0.0)
    b = body(Sphere(0.1), (0.5, 0.06, 2.0), velocity=(-1.0, 0.0, 0.0), friction=0.0)
    w = world([a, b], gravity=(0, 0, 0), ground=False)
    p0 = momentum(w)
    hit = False
    for _ in range(100):
        step(w)
        hit |= abs(w.vel[0, 0] - 2.0) > 1e-6
        assert np.allclose(momentum(w), p0, atol=1e-6)
    assert hit


def inelastic_world(seed):
    rng = np.random.default_rng(seed)
    bodies = []
    for i, cls in enumerate(rng.choice(len(OBJECT_CLASSES), size=3)):
        shape = shape_from_config(OBJECT_CLASSES[cls], CONFIG.shapes)
        pos = (rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 1.0 + 0.5 * i)
        bodies.append(body(shape, pos, restitution=0.0,
                           omega=tuple(rng.uniform(-0.5, 0.5, 3))))
    return world(bodies, ground_restitution=0.0)


@pytest.mark.parametrize("seed", range(20))
def test_energy_non_increasing_without_restitution(seed):
    w = inelastic_world(seed)
    e_prev = energy(w)
    for _ in range(149):
        step(w)
        e = energy(w)
        assert e <= e_prev + 1e-3
        e_prev = e


def max_manifold_depth(w):
    k = int(w.c_count[0])
    return float(w.c_depth[:k].max()) if k else 0.0


@pytest.mark.parametrize("seed", range(6))
def test_penetration_bound_per_frame(seed):
    w = inelastic_world(seed)
    smallest = min(b.bounding_radius for b in w.bodies)
    bound = max(w.solver.slop, 0.01 * smallest)
    for f in range(1, 150):
        step(w)
        depth = max_manifold_depth(w)
        # impacts between spinning bodies may briefly exceed the resting bound
        assert depth <= 5e-3
        if f >= 120:
            assert depth <= bound + 1e-9


def test_woken_body_keeps_its_ground_support():
    cube = body(Cube(0.14), (0, 0, 0.14))
    w = world([cube])
    for _ in range(30):
        step(w)
    assert w.asleep[0]
    z = w.pos[0, 2]
    # a slow ball rolls onto the sleeping cube and wakes it
    w2 = world([body(Cube(0.14), (0, 0, z)),
                body(Sphere(0.1), (-0.5, 0, 0.1), velocity=(1.5, 0, 0))])
    w2.asleep[0] = True
    for _ in range(40):
        step(w2)
        assert w2.pos[0, 2] > z - 2e-4


def test_simulation_is_deterministic():
    def run():
        w = inelastic_world(3)
        traj = run_world(w, 150)
        return traj.positions.tobytes() + traj.orientations.tobytes()
    assert run() == run()


def test_fast_sphere_does_not_tunnel_through_ground():
    w = world([body(Sphere(0.1), (0, 0, 3.0), velocity=(0, 0, -30.0))])
    for _ in range(50):
        step(w)
        assert w.pos[0, 2] > 0.1 - 0.02
    assert w.pos[0, 2] == pytest.approx(0.1, abs=0.01)


def test_fast_sphere_does_not_tunnel_through_wall():
    from spacesim.geometry.holders import _box_piece
    wall = _box_piece((0.5, -1.0, 0.0), (0.55, 1.0, 1.0))
    w = world([body(Sphere(0.1), (0, 0, 0.5), velocity=(20.0, 0, 0))], gravity=(0, 0, 0),
              ground=False, statics=[wall])
    for _ in range(20):
        step(w)
        assert w.pos[0, 0] < 0.5


def test_stack_penetration_bounded():
    shape = Cube(0.14)
    w = world([body(shape, (0, 0, 0.14 + 0.3 * i)) for i in range(3)])
    for _ in range(150):
        step(w)
    z = w.pos[:, 2]
    assert np.all(np.diff(z) > 0.28 - 0.005)
    assert z[0] == pytest.approx(0.14, abs=0.005)


def test_kinematic_body_follows_closed_form_path():
    probe = body(Sphere(0.15), (-3.15, 0, 0.15), velocity=(1.0, 0, 0), kinematic=True)
    blocker = body(Cube(0.14), (-1.0, 0, 0.14))
    w = world([blocker, probe])
    traj = run_world(w, 150)
    t = np.arange(150) * FRAME_DT
    assert np.allclose(traj.positions[:, 1, 0], -3.15 + t, atol=1e-12, rtol=0)
    assert np.all(traj.positions[:, 1, 1:] == [0, 0.15])
    assert traj.positions[-1, 0, 0] > -1.0 + 0.5


def test_trajectory_float32_view():
    w = world([body(Sphere(0.1), (0, 0, 1.0))])
    traj = run_world(w, 10)
    f = traj.as_float32()
    assert f.positions.dtype == np.float64
    assert np.array_equal(f.positions, traj.positions.astype(np.float32))
    assert Trajectory.empty(2, 5).orientations[..., 0].sum() == 10


# -- broadphase ----------------------------------------------------------------

positions = st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.0, 1.5)),
                     min_size=2, max_size=8)


@settings(max_examples=30)
@given(positions)
def test_broadphase_reports_every_overlapping_pair(pts):
    bodies = [body(Sphere(0.15), p) for p in pts]
    w = world(bodies, solver=SolverConfig())
    pairs = set(broadphase_pairs(w))
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(np.subtract(pts[i], pts[j])) <= 0.3:
                assert (i, j) in pairs
        if pts[i][2] <= 0.15:
            assert (i, n) in pairs
    assert list(sorted(pairs)) == broadphase_pairs(w)


def test_broadphase_ignores_distant_pairs():
    w = world([body(Sphere(0.1), (0, 0, 5)), body(Sphere(0.1), (3, 0, 5))])
    assert broadphase_pairs(w) == []


def test_material_validation():
    with pytest.raises(ValueError):
        Material(friction=-0.1)
    with pytest.raises(ValueError):
        Material(restitution=1.5)
