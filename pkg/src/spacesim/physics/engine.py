"""Public engine operations on a :class:`World`.

``step`` is the production path: it runs whole substeps inside compiled code.
The finer-grained operations expose the same kernels for inspection and tests.
"""

from __future__ import annotations

import logging

import numpy as np

from ..config import FPS, FRAME_DT
from . import _kernels as K
from .world import ContactManifold, DegenerateContactError, World

log = logging.getLogger(__name__)


def _refresh_geometry(world: World, dt: float | None = None):
    dt = world.solver.dt if dt is None else dt
    K.update_geometry(world.bodies_tuple(), world.pieces_tuple(), world.scratch_tuple(), dt,
                      world.solver.slop, float(np.linalg.norm(world.gravity)))


def broadphase_pairs(world: World) -> list[tuple[int, int]]:
    """Candidate body pairs from inflated AABBs, sorted by (i, j).

    Ground is reported as id ``n_bodies`` and the holder as ``n_bodies + 1``.
    """
    _refresh_geometry(world)
    pairs = K.broadphase(world.bodies_tuple(), world.pieces_tuple(), world.scratch_tuple())
    out = set()
    for pa, pb in pairs:
        a = world.static_id(int(world.piece_body[pa]), int(pa))
        b = world.static_id(int(world.piece_body[pb]), int(pb))
        out.add((min(a, b), max(a, b)))
    if world.ground:
        for p, b in enumerate(world.piece_body):
            if b >= 0 and world.aabb[p, 2] <= world.sweep[p] + world.solver.slop:
                out.add((int(b), world.n_bodies))
    return sorted(out)


def _body_pieces(world: World, body: int) -> list[int]:
    if body < world.n_bodies:
        return [int(p) for p in np.flatnonzero(world.piece_body == body)]
    if body == world.n_bodies + 1:
        return [int(p) for p in np.flatnonzero(world.piece_body < 0)]
    return []


def narrowphase_manifold(world: World, body_a: int, body_b: int) -> ContactManifold | None:
    """Contact manifold between two bodies (or a body and static geometry).

    Returns None when the bodies are separated. Raises DegenerateContactError
    if EPA does not converge for any piece pair.
    """
    if body_a > body_b:
        body_a, body_b = body_b, body_a
    _refresh_geometry(world)
    world.c_count[:] = 0
    contacts = world.contacts_tuple()
    params = world.params()
    # Only touching/overlapping geometry: no speculative margin here.
    saved = world.sweep.copy()
    world.sweep[:] = 0.0
    params[3] = 0.0
    try:
        if body_b == world.n_bodies:
            if not world.ground:
                return None
            for p in _body_pieces(world, body_a):
                K.collide_ground(p, world.bodies_tuple(), world.pieces_tuple(),
                                 world.scratch_tuple(), contacts, params)
        else:
            for pa in _body_pieces(world, body_a):
                for pb in _body_pieces(world, body_b):
                    lo, hi = min(pa, pb), max(pa, pb)
                    fail = K.collide_pair(lo, hi, world.bodies_tuple(), world.pieces_tuple(),
                                          world.scratch_tuple(), contacts, params,
                                          world.solver.epa_max_iterations)
                    if fail:
                        raise DegenerateContactError(f"EPA did not converge for pieces {lo}, {hi}")
    finally:
        world.sweep[:] = saved
    k = int(world.c_count[0])
    if k == 0:
        return None
    pts = world.c_point[:k].copy()
    nrm = world.c_normal[:k].copy()
    dep = world.c_depth[:k].copy()
    # orient every normal from body_a to body_b
    for i in range(k):
        a = world.static_id(int(world.c_ids[i, 0]), int(world.c_ids[i, 2]))
        if a != body_a:
            nrm[i] = -nrm[i]
    keep = dep >= 0.0
    if not keep.any():
        return None
    pts, nrm, dep = pts[keep], nrm[keep], dep[keep]
    if len(dep) > 4:
        idx = K.reduce_points(pts, dep, len(dep), nrm.mean(axis=0))
        pts, nrm, dep = pts[idx], nrm[idx], dep[idx]
    return ContactManifold(body_a, body_b, pts, nrm, dep)


def penetration(world: World, piece_a: int, piece_b: int):
    """GJK/EPA between two collision pieces (indices into the packed piece table).

    Returns (depth, normal a -> b): depth is negative (the separation distance)
    for disjoint pieces. Sphere margins are included.
    """
    _refresh_geometry(world)
    W, SA, SB = np.zeros((4, 3)), np.zeros((4, 3)), np.zeros((4, 3))
    lam = np.zeros(4)
    pieces, scratch = world.pieces_tuple(), world.scratch_tuple()
    margin = world.piece_radius[piece_a] + world.piece_radius[piece_b]
    n, dist, pa, pb, overlap = K.gjk(piece_a, piece_b, pieces, scratch, W, SA, SB, lam)
    if not overlap:
        normal = (pb - pa) / dist if dist > 0 else np.array([0.0, 0.0, 1.0])
        return margin - dist, normal
    ok, depth, normal, _, _ = K.epa(piece_a, piece_b, pieces, scratch, W, SA, SB, n,
                                    world.solver.epa_max_iterations)
    if not ok:
        raise DegenerateContactError(f"EPA did not converge for pieces {piece_a}, {piece_b}")
    return depth + margin, normal


def integrate_step(world: World, dt: float) -> World:
    """Semi-implicit Euler: gravity into velocity, then velocity into pose."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    params = world.params(dt)
    K.integrate_velocities(world.bodies_tuple(), params, world.inertia)
    world.time += dt
    K.integrate_positions(world.bodies_tuple(), params, world.time)
    return world


def solve_contacts(world: World, manifolds, dt: float) -> np.ndarray:
    """Sequential-impulse solve of the given manifolds; updates velocities in place.

    Manifolds are processed in sorted (body_a, body_b) order. Returns the
    accumulated normal impulse of every contact point in that order.
    """
    nb = world.n_bodies
    k = 0
    for m in sorted(manifolds, key=lambda m: (m.body_a, m.body_b)):
        ba = m.body_a if m.body_a < nb else -1
        bb = m.body_b if m.body_b < nb else -1

        def mat(b, static_id):
            if b >= 0:
                return world.friction[b], world.restitution[b]
            g = world.ground_material if static_id == nb else world.static_material
            return g.friction, g.restitution

        mua, ea = mat(ba, m.body_a)
        mub, eb = mat(bb, m.body_b)
        for i in range(len(m)):
            world.c_ids[k] = (ba, bb, -2 if m.body_a == nb else -1, -2 if m.body_b == nb else -1)
            world.c_point[k] = m.points[i]
            world.c_normal[k] = m.normals[i]
            world.c_depth[k] = m.depths[i]
            world.c_mu[k] = np.sqrt(mua * mub)
            world.c_e[k] = max(ea, eb)
            k += 1
    world.c_count[0] = k
    world.p_count[0] = 0
    return K.solve_contacts(world.bodies_tuple(), world.contacts_tuple(), world.pending_tuple(),
                            world.params(dt), world.iparams())


def step(world: World, frame_dt: float = FRAME_DT) -> World:
    """Advance one frame by ``solver.substeps`` fixed substeps."""
    if abs(frame_dt - FRAME_DT) > 1e-15:
        raise ValueError(f"frame_dt must be 1/{FPS} s")
    n = world.solver.substeps
    fails = K.advance(n, world.substep_count, float(FPS * n), world.bodies_tuple(),
                      world.pieces_tuple(), world.scratch_tuple(), world.contacts_tuple(),
                      world.pending_tuple(), world.params(), world.iparams(), world.inertia)
    world.substep_count += n
    world.time = world.substep_count / float(FPS * n)
    if world.c_count[1]:
        log.warning("contact buffer overflow: %d contacts dropped", int(world.c_count[1]))
    if fails:
        world.degenerate_contacts += int(fails)
        log.warning("degenerate contact: EPA did not converge for %d piece pairs", int(fails))
    return world


def current_contact_pairs(world: World) -> list[tuple[int, int]]:
    """Body pairs in touching contact after the last substep."""
    k = int(world.c_count[0])
    out = set()
    for i in range(k):
        if world.c_depth[i] < 0.0:
            continue
        a = world.static_id(int(world.c_ids[i, 0]), int(world.c_ids[i, 2]))
        b = world.static_id(int(world.c_ids[i, 1]), int(world.c_ids[i, 3]))
        out.add((min(a, b), max(a, b)))
    return sorted(out)
