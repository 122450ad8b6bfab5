"""Software raycaster over convex pieces plus analytic forward flow."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..physics import _kernels as K
from ..physics.world import World
from .camera import Camera

SKY_DEPTH = np.inf


@dataclass
class FrameBuffers:
    segmentation: np.ndarray  # (H, W) uint8; 0 ground or sky, body index + 1, holder n + 1
    depth: np.ndarray         # (H, W) float32 meters along the ray; +inf for sky
    normals: np.ndarray       # (H, W, 3) float32 camera frame; zero for sky


@njit(cache=True, nogil=True)
def _raycast(origin, dirs, pbody, kind, v0, nv, f0, nf, radius, w_verts, w_fn, w_fd,
             n_bodies, ground, seg, depth, normal, hit_piece):
    h, w = dirs.shape[0], dirs.shape[1]
    npieces = pbody.shape[0]
    # bounding spheres for early rejection
    bc = np.zeros((npieces, 3))
    br = np.zeros(npieces)
    for p in range(npieces):
        for i in range(v0[p], v0[p] + nv[p]):
            bc[p] += w_verts[i]
        bc[p] /= nv[p]
        r = 0.0
        for i in range(v0[p], v0[p] + nv[p]):
            ex = w_verts[i, 0] - bc[p, 0]
            ey = w_verts[i, 1] - bc[p, 1]
            ez = w_verts[i, 2] - bc[p, 2]
            r = max(r, np.sqrt(ex * ex + ey * ey + ez * ez))
        br[p] = r + radius[p] + 1e-9
    o0 = origin[0]
    o1 = origin[1]
    o2 = origin[2]
    for y in range(h):
        for x in range(w):
            d = dirs[y, x]
            best = np.inf
            bid = 0
            bp = -1
            n0 = 0.0
            n1 = 0.0
            n2 = 0.0
            if ground and d[2] < 0.0:
                t = -o2 / d[2]
                if t > 0.0:
                    best = t
                    n2 = 1.0
            d0 = d[0]
            d1 = d[1]
            d2 = d[2]
            for p in range(npieces):
                ox = o0 - bc[p, 0]
                oy = o1 - bc[p, 1]
                oz = o2 - bc[p, 2]
                b = ox * d0 + oy * d1 + oz * d2
                c = ox * ox + oy * oy + oz * oz - br[p] * br[p]
                disc = b * b - c
                if disc < 0.0:
                    continue
                if -b - np.sqrt(disc) >= best:
                    continue
                if kind[p] == 0:
                    i0 = v0[p]
                    ox = o0 - w_verts[i0, 0]
                    oy = o1 - w_verts[i0, 1]
                    oz = o2 - w_verts[i0, 2]
                    b = ox * d0 + oy * d1 + oz * d2
                    c = ox * ox + oy * oy + oz * oz - radius[p] * radius[p]
                    disc = b * b - c
                    if disc < 0.0:
                        continue
                    t = -b - np.sqrt(disc)
                    if t <= 0.0 or t >= best:
                        continue
                    best = t
                    bp = p
                    hx = ox + t * d0
                    hy = oy + t * d1
                    hz = oz + t * d2
                    ln = np.sqrt(hx * hx + hy * hy + hz * hz)
                    n0 = hx / ln
                    n1 = hy / ln
                    n2 = hz / ln
                else:
                    tin = -np.inf
                    tout = np.inf
                    fin = -1
                    miss = False
                    for f in range(f0[p], f0[p] + nf[p]):
                        dn = w_fn[f, 0] * d0 + w_fn[f, 1] * d1 + w_fn[f, 2] * d2
                        dist = w_fd[f] - (w_fn[f, 0] * o0 + w_fn[f, 1] * o1 + w_fn[f, 2] * o2)
                        if dn == 0.0:
                            if dist < 0.0:
                                miss = True
                                break
                            continue
                        t = dist / dn
                        if dn < 0.0:
                            if t > tin:
                                tin = t
                                fin = f
                        elif t < tout:
                            tout = t
                        if tin > tout:
                            miss = True
                            break
                    if miss or fin < 0 or tin <= 0.0 or tin >= best:
                        continue
                    best = tin
                    bp = p
                    n0 = w_fn[fin, 0]
                    n1 = w_fn[fin, 1]
                    n2 = w_fn[fin, 2]
            if best < np.inf:
                depth[y, x] = best
                normal[y, x, 0] = n0
                normal[y, x, 1] = n1
                normal[y, x, 2] = n2
                hit_piece[y, x] = bp
                if bp >= 0:
                    bid = pbody[bp] + 1 if pbody[bp] >= 0 else n_bodies + 1
                seg[y, x] = bid
            else:
                depth[y, x] = np.inf
                hit_piece[y, x] = -1
                seg[y, x] = 0


def render_frame(world: World, camera: Camera) -> FrameBuffers:
    """Segmentation, depth and camera-frame normals for the world's current state."""
    K.update_geometry(world.bodies_tuple(), world.pieces_tuple(), world.scratch_tuple(),
                      world.solver.dt, world.solver.slop, 0.0)
    h, w = camera.height, camera.width
    seg = np.zeros((h, w), dtype=np.uint8)
    depth = np.zeros((h, w))
    normal = np.zeros((h, w, 3))
    hit = np.zeros((h, w), dtype=np.int64)
    if world.n_bodies + 1 >= 255:
        raise ValueError("too many bodies for 8-bit segmentation ids")
    _raycast(camera.position, camera.ray_directions(), world.piece_body, world.piece_kind,
             world.piece_v0, world.piece_nv, world.piece_f0, world.piece_nf, world.piece_radius,
             world.w_verts, world.w_fn, world.w_fd, world.n_bodies, world.ground,
             seg, depth, normal, hit)
    ncam = normal @ camera.rotation.T
    return FrameBuffers(seg, depth.astype(np.float32), ncam.astype(np.float32))


def set_state(world: World, positions, orientations):
    world.pos[:] = positions
    world.quat[:] = orientations


def analytic_flow(state_t, state_t1, camera: Camera, frame: FrameBuffers) -> np.ndarray:
    """Forward flow (H, W, 2) in pixels from frame t to t+1, without occlusion handling.

    ``state_*`` are (positions (B, 3), orientations (B, 4)). Pixels on ground,
    sky, static geometry, or a body whose pose is unchanged get exactly (0, 0).
    """
    from ..geometry.transforms import quat_to_matrix

    pos0, q0 = (np.asarray(a, dtype=float) for a in state_t)
    pos1, q1 = (np.asarray(a, dtype=float) for a in state_t1)
    n_bodies = pos0.shape[0]
    h, w = frame.segmentation.shape
    flow = np.zeros((h, w, 2), dtype=np.float32)
    dirs = camera.ray_directions()
    depth = frame.depth.astype(float)
    for b in range(n_bodies):
        if np.array_equal(pos0[b], pos1[b]) and np.array_equal(q0[b], q1[b]):
            continue
        mask = frame.segmentation == b + 1
        if not mask.any():
            continue
        pts = camera.position + dirs[mask] * depth[mask][:, None]
        r0, r1 = quat_to_matrix(q0[b]), quat_to_matrix(q1[b])
        local = (pts - pos0[b]) @ r0
        moved = local @ r1.T + pos1[b]
        flow[mask] = (camera.project(moved) - camera.project(pts)).astype(np.float32)
    return flow
