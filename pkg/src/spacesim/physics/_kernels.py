"""Compiled inner loops of the engine: geometry update, broadphase, GJK/EPA
narrowphase, manifold clipping, sequential-impulse solver and integration.

State is passed as tuples of arrays (see ``world.World._pack``):

  bodies = (pos, quat, vel, omega, inv_mass, inv_inertia, friction,
            restitution, kinematic, asleep, sleep_timer, kin_start, bound)
  pieces = (body, kind, v0, nv, f0, nf, radius, friction, restitution,
            local_verts, local_fn, local_fd, face_i0, face_ni, face_idx)
  scratch = (w_verts, w_fn, w_fd, aabb, sweep)
  contacts = (c_ids, c_point, c_normal, c_depth, c_mu, c_e, c_count)
  pending = (p_ids, p_val, p_count)
  params = (gravity_z, dt, baumgarte, slop, restitution_threshold,
            sleep_linear, sleep_angular, sleep_time, ground_mu, ground_e,
            ground_on, gravity_x, gravity_y)
  iparams = (iterations, epa_max_iterations)

All loops run in a fixed order (piece index, sorted pair index) so results are
bit-reproducible. No fastmath.
"""

import math

import numpy as np
from numba import njit

SPHERE = 0
POLYTOPE = 1
STATIC = -1
GROUND = -2
MAX_CLIP = 64
EPA_MAXV = 160
EPA_MAXF = 320

_JIT = dict(cache=True, nogil=True)


# --------------------------------------------------------------------------
# small vector helpers
# --------------------------------------------------------------------------

@njit(inline="always", **_JIT)
def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(inline="always", **_JIT)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(inline="always", **_JIT)
def _norm(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


@njit(**_JIT)
def quat_to_mat(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    m = np.empty((3, 3))
    m[0, 0] = 1.0 - 2.0 * (y * y + z * z)
    m[0, 1] = 2.0 * (x * y - w * z)
    m[0, 2] = 2.0 * (x * z + w * y)
    m[1, 0] = 2.0 * (x * y + w * z)
    m[1, 1] = 1.0 - 2.0 * (x * x + z * z)
    m[1, 2] = 2.0 * (y * z - w * x)
    m[2, 0] = 2.0 * (x * z - w * y)
    m[2, 1] = 2.0 * (y * z + w * x)
    m[2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return m


@njit(**_JIT)
def _mat_vec(m, v):
    out = np.empty(3)
    for i in range(3):
        out[i] = m[i, 0] * v[0] + m[i, 1] * v[1] + m[i, 2] * v[2]
    return out


@njit(**_JIT)
def _mat_t_vec(m, v):
    out = np.empty(3)
    for i in range(3):
        out[i] = m[0, i] * v[0] + m[1, i] * v[1] + m[2, i] * v[2]
    return out


@njit(**_JIT)
def _tangents(n):
    # Deterministic orthonormal basis around n.
    if abs(n[0]) < 0.57735:
        a = np.array([1.0, 0.0, 0.0])
    else:
        a = np.array([0.0, 1.0, 0.0])
    t1 = _cross(n, a)
    t1 /= _norm(t1)
    t2 = _cross(n, t1)
    return t1, t2


@njit(**_JIT)
def world_inv_inertia(quat, inv_inertia_diag):
    r = quat_to_mat(quat)
    out = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            s = 0.0
            for k in range(3):
                s += r[i, k] * inv_inertia_diag[k] * r[j, k]
            out[i, j] = s
    return out


# --------------------------------------------------------------------------
# geometry update and broadphase
# --------------------------------------------------------------------------

@njit(**_JIT)
def update_geometry(bodies, pieces, scratch, dt, slop, gmag):
    pos, quat, vel, omega, inv_mass, inv_inertia, friction, restitution, \
        kinematic, asleep, sleep_timer, kin_start, bound = bodies
    pbody, kind, v0, nv, f0, nf, radius, pmu, pe, lverts, lfn, lfd, fi0, fni, fidx = pieces
    w_verts, w_fn, w_fd, aabb, sweep = scratch
    npieces = pbody.shape[0]
    for p in range(npieces):
        b = pbody[p]
        if b < 0:
            # static geometry is stored in world frame already
            lo0 = 1e300
            lo1 = 1e300
            lo2 = 1e300
            hi0 = -1e300
            hi1 = -1e300
            hi2 = -1e300
            for i in range(v0[p], v0[p] + nv[p]):
                w_verts[i, 0] = lverts[i, 0]
                w_verts[i, 1] = lverts[i, 1]
                w_verts[i, 2] = lverts[i, 2]
                lo0 = min(lo0, lverts[i, 0])
                lo1 = min(lo1, lverts[i, 1])
                lo2 = min(lo2, lverts[i, 2])
                hi0 = max(hi0, lverts[i, 0])
                hi1 = max(hi1, lverts[i, 1])
                hi2 = max(hi2, lverts[i, 2])
            for f in range(f0[p], f0[p] + nf[p]):
                w_fn[f, 0] = lfn[f, 0]
                w_fn[f, 1] = lfn[f, 1]
                w_fn[f, 2] = lfn[f, 2]
                w_fd[f] = lfd[f]
            sweep[p] = 0.0
            r = radius[p]
            aabb[p, 0] = lo0 - r
            aabb[p, 1] = lo1 - r
            aabb[p, 2] = lo2 - r
            aabb[p, 3] = hi0 + r
            aabb[p, 4] = hi1 + r
            aabb[p, 5] = hi2 + r
            continue
        rot = quat_to_mat(quat[b])
        x = pos[b]
        lo0 = 1e300
        lo1 = 1e300
        lo2 = 1e300
        hi0 = -1e300
        hi1 = -1e300
        hi2 = -1e300
        for i in range(v0[p], v0[p] + nv[p]):
            for k in range(3):
                w_verts[i, k] = rot[k, 0] * lverts[i, 0] + rot[k, 1] * lverts[i, 1] \
                    + rot[k, 2] * lverts[i, 2] + x[k]
            lo0 = min(lo0, w_verts[i, 0])
            lo1 = min(lo1, w_verts[i, 1])
            lo2 = min(lo2, w_verts[i, 2])
            hi0 = max(hi0, w_verts[i, 0])
            hi1 = max(hi1, w_verts[i, 1])
            hi2 = max(hi2, w_verts[i, 2])
        for f in range(f0[p], f0[p] + nf[p]):
            for k in range(3):
                w_fn[f, k] = rot[k, 0] * lfn[f, 0] + rot[k, 1] * lfn[f, 1] + rot[k, 2] * lfn[f, 2]
            w_fd[f] = lfd[f] + w_fn[f, 0] * x[0] + w_fn[f, 1] * x[1] + w_fn[f, 2] * x[2]
        if asleep[b]:
            s = 0.0
        else:
            # speculative margin: the farthest any surface point can move this substep
            s = (_norm(vel[b]) + _norm(omega[b]) * bound[b]) * dt
            if not kinematic[b]:
                s += gmag * dt * dt
        sweep[p] = s
        r = radius[p] + s + 0.5 * slop
        aabb[p, 0] = lo0 - r
        aabb[p, 1] = lo1 - r
        aabb[p, 2] = lo2 - r
        aabb[p, 3] = hi0 + r
        aabb[p, 4] = hi1 + r
        aabb[p, 5] = hi2 + r


@njit(**_JIT)
def _pair_allowed(ba, bb, kinematic, asleep):
    if ba == bb:
        return False
    if ba < 0 and bb < 0:
        return False
    sa = ba < 0 or asleep[ba] or kinematic[ba]
    sb = bb < 0 or asleep[bb] or kinematic[bb]
    if sa and sb:
        # a kinematic body touching a sleeper must still wake it
        ka = ba >= 0 and kinematic[ba]
        kb = bb >= 0 and kinematic[bb]
        if ka and bb >= 0 and asleep[bb]:
            return True
        if kb and ba >= 0 and asleep[ba]:
            return True
        return False
    return True


@njit(**_JIT)
def broadphase(bodies, pieces, scratch):
    """Sort-and-sweep on x. Returns candidate piece pairs sorted by (a, b), a < b."""
    kinematic = bodies[8]
    asleep = bodies[9]
    pbody = pieces[0]
    aabb = scratch[3]
    n = pbody.shape[0]
    order = np.argsort(aabb[:, 0], kind="mergesort")
    cap = 64
    pairs = np.empty((cap, 2), dtype=np.int64)
    count = 0
    for ii in range(n):
        i = order[ii]
        for jj in range(ii + 1, n):
            j = order[jj]
            if aabb[j, 0] > aabb[i, 3]:
                break
            if aabb[j, 1] > aabb[i, 4] or aabb[i, 1] > aabb[j, 4]:
                continue
            if aabb[j, 2] > aabb[i, 5] or aabb[i, 2] > aabb[j, 5]:
                continue
            if not _pair_allowed(pbody[i], pbody[j], kinematic, asleep):
                continue
            if count == cap:
                grown = np.empty((cap * 2, 2), dtype=np.int64)
                grown[:cap] = pairs
                pairs = grown
                cap *= 2
            pairs[count, 0] = min(i, j)
            pairs[count, 1] = max(i, j)
            count += 1
    pairs = pairs[:count]
    keys = pairs[:, 0] * n + pairs[:, 1]
    srt = np.argsort(keys, kind="mergesort")
    return pairs[srt]


# --------------------------------------------------------------------------
# support mapping and GJK
# --------------------------------------------------------------------------

@njit(**_JIT)
def _support_core(p, d, kind, v0, nv, w_verts):
    """Support of the piece's core (sphere: its center; polytope: hull vertex)."""
    start = v0[p]
    best = start
    if kind[p] == POLYTOPE:
        bv = w_verts[start, 0] * d[0] + w_verts[start, 1] * d[1] + w_verts[start, 2] * d[2]
        for i in range(start + 1, start + nv[p]):
            s = w_verts[i, 0] * d[0] + w_verts[i, 1] * d[1] + w_verts[i, 2] * d[2]
            if s > bv:
                bv = s
                best = i
    return w_verts[best].copy()


@njit(**_JIT)
def _closest_segment(a, b, lam):
    ab = b - a
    den = _dot(ab, ab)
    t = 0.0
    if den > 0.0:
        t = -_dot(a, ab) / den
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    lam[0] = 1.0 - t
    lam[1] = t
    return a + t * ab


@njit(**_JIT)
def _closest_triangle(a, b, c, lam):
    """Closest point of triangle abc to the origin; barycentric weights in lam."""
    ab = b - a
    ac = c - a
    d1 = -_dot(ab, a)
    d2 = -_dot(ac, a)
    if d1 <= 0.0 and d2 <= 0.0:
        lam[0], lam[1], lam[2] = 1.0, 0.0, 0.0
        return a.copy()
    d3 = -_dot(ab, b)
    d4 = -_dot(ac, b)
    if d3 >= 0.0 and d4 <= d3:
        lam[0], lam[1], lam[2] = 0.0, 1.0, 0.0
        return b.copy()
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        lam[0], lam[1], lam[2] = 1.0 - v, v, 0.0
        return a + v * ab
    d5 = -_dot(ab, c)
    d6 = -_dot(ac, c)
    if d6 >= 0.0 and d5 <= d6:
        lam[0], lam[1], lam[2] = 0.0, 0.0, 1.0
        return c.copy()
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        lam[0], lam[1], lam[2] = 1.0 - w, 0.0, w
        return a + w * ac
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        lam[0], lam[1], lam[2] = 0.0, 1.0 - w, w
        return b + w * (c - b)
    den = va + vb + vc
    if den == 0.0:
        lam[0], lam[1], lam[2] = 1.0, 0.0, 0.0
        return a.copy()
    v = vb / den
    w = vc / den
    lam[0], lam[1], lam[2] = 1.0 - v - w, v, w
    return a + v * ab + w * ac


@njit(**_JIT)
def _reduce_simplex(W, SA, SB, n):
    """Closest point of the simplex to the origin; shrinks it to the support set.

    Returns (v, n, inside) where inside means the origin is in the tetrahedron.
    """
    lam = np.zeros(4)
    if n == 1:
        lam[0] = 1.0
        v = W[0].copy()
    elif n == 2:
        v = _closest_segment(W[0], W[1], lam)
    elif n == 3:
        v = _closest_triangle(W[0], W[1], W[2], lam)
    else:
        faces = ((0, 1, 2, 3), (0, 2, 3, 1), (0, 3, 1, 2), (1, 3, 2, 0))
        best = 1e300
        v = np.zeros(3)
        any_out = False
        tl = np.zeros(3)
        for fi in range(4):
            i, j, k, o = faces[fi]
            nrm = _cross(W[j] - W[i], W[k] - W[i])
            sp = -_dot(W[i], nrm)
            so = _dot(W[o] - W[i], nrm)
            if sp * so < 0.0 or abs(so) < 1e-18:
                any_out = True
                q = _closest_triangle(W[i], W[j], W[k], tl)
                dq = _dot(q, q)
                if dq < best:
                    best = dq
                    v = q
                    lam[:] = 0.0
                    lam[i] = tl[0]
                    lam[j] = tl[1]
                    lam[k] = tl[2]
        if not any_out:
            return np.zeros(3), 4, True
    m = 0
    for i in range(n):
        if lam[i] > 0.0:
            W[m] = W[i]
            SA[m] = SA[i]
            SB[m] = SB[i]
            lam[m] = lam[i]
            m += 1
    if m == 0:
        m = 1
    return v, m, False


@njit(**_JIT)
def gjk(pa, pb, pieces, scratch, W, SA, SB, LAM):
    """GJK distance between the cores of two pieces.

    Returns (n, dist, point_a, point_b, intersecting). On exit W/SA/SB hold
    the final simplex (n vertices) and LAM its barycentric weights.
    """
    kind, v0, nv = pieces[1], pieces[2], pieces[3]
    w_verts = scratch[0]
    d = w_verts[v0[pa]] - w_verts[v0[pb]]
    if _dot(d, d) < 1e-24:
        d = np.array([1.0, 0.0, 0.0])
    sa = _support_core(pa, -d, kind, v0, nv, w_verts)
    sb = _support_core(pb, d, kind, v0, nv, w_verts)
    W[0] = sa - sb
    SA[0] = sa
    SB[0] = sb
    n = 1
    v = W[0].copy()
    inside = False
    for _ in range(64):
        vv = _dot(v, v)
        if vv < 1e-20:
            inside = True
            break
        sa = _support_core(pa, -v, kind, v0, nv, w_verts)
        sb = _support_core(pb, v, kind, v0, nv, w_verts)
        w = sa - sb
        if vv - _dot(v, w) <= 1e-12 * vv + 1e-20:
            break
        dup = False
        for i in range(n):
            e = W[i] - w
            if _dot(e, e) < 1e-24:
                dup = True
        if dup:
            break
        W[n] = w
        SA[n] = sa
        SB[n] = sb
        n += 1
        v, n, inside = _reduce_simplex(W, SA, SB, n)
        if inside:
            break
    # barycentric weights of v on the final simplex
    lam = np.zeros(4)
    if inside:
        pa_pt = np.zeros(3)
        pb_pt = np.zeros(3)
        return n, 0.0, pa_pt, pb_pt, True
    if n == 1:
        lam[0] = 1.0
    elif n == 2:
        _closest_segment(W[0], W[1], lam)
    elif n == 3:
        _closest_triangle(W[0], W[1], W[2], lam)
    pa_pt = np.zeros(3)
    pb_pt = np.zeros(3)
    for i in range(n):
        pa_pt += lam[i] * SA[i]
        pb_pt += lam[i] * SB[i]
        LAM[i] = lam[i]
    dist = _norm(pa_pt - pb_pt)
    return n, dist, pa_pt, pb_pt, dist < 1e-10


# --------------------------------------------------------------------------
# EPA
# --------------------------------------------------------------------------

@njit(**_JIT)
def _epa_face(V, faces, fn, fd, f, i, j, k, interior):
    a = V[i]
    nrm = _cross(V[j] - a, V[k] - a)
    ln = _norm(nrm)
    if _dot(nrm, a - interior) < 0.0:
        t = j
        j = k
        k = t
        nrm = -nrm
    faces[f, 0] = i
    faces[f, 1] = j
    faces[f, 2] = k
    if ln < 1e-14:
        fn[f] = 0.0
        fd[f] = 1e300
        return
    fn[f] = nrm / ln
    fd[f] = _dot(fn[f], a)


@njit(**_JIT)
def _epa_support(pa, pb, d, pieces, scratch):
    kind, v0, nv = pieces[1], pieces[2], pieces[3]
    w_verts = scratch[0]
    sa = _support_core(pa, d, kind, v0, nv, w_verts)
    sb = _support_core(pb, -d, kind, v0, nv, w_verts)
    return sa, sb


@njit(**_JIT)
def epa(pa, pb, pieces, scratch, W, SA, SB, n_simplex, max_iter):
    """Penetration depth and normal (from piece a to piece b) of two overlapping cores.

    Returns (ok, depth, normal, point_a, point_b).
    """
    V = np.zeros((EPA_MAXV, 3))
    VA = np.zeros((EPA_MAXV, 3))
    VB = np.zeros((EPA_MAXV, 3))
    nv_ = 0
    for i in range(n_simplex):
        V[i] = W[i]
        VA[i] = SA[i]
        VB[i] = SB[i]
    nv_ = n_simplex
    fail = (False, 0.0, np.zeros(3), np.zeros(3), np.zeros(3))
    axes = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
                     [0.0, -1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])

    # Blow a degenerate simplex up to a full-dimensional polytope.
    if nv_ == 1:
        for ai in range(6):
            sa, sb = _epa_support(pa, pb, axes[ai], pieces, scratch)
            w = sa - sb
            e = w - V[0]
            if _dot(e, e) > 1e-16:
                V[1] = w
                VA[1] = sa
                VB[1] = sb
                nv_ = 2
                break
        if nv_ < 2:
            return fail
    if nv_ == 2:
        dseg = V[1] - V[0]
        ax = 0
        if abs(dseg[1]) < abs(dseg[ax]):
            ax = 1
        if abs(dseg[2]) < abs(dseg[ax]):
            ax = 2
        e = np.zeros(3)
        e[ax] = 1.0
        u = _cross(dseg, e)
        u /= _norm(u)
        dn = dseg / _norm(dseg)
        uu = _cross(dn, u)
        for r in range(6):
            ang = r * math.pi / 3.0
            dirv = math.cos(ang) * u + math.sin(ang) * uu
            sa, sb = _epa_support(pa, pb, dirv, pieces, scratch)
            w = sa - sb
            area = _cross(V[1] - V[0], w - V[0])
            if _dot(area, area) > 1e-20:
                V[2] = w
                VA[2] = sa
                VB[2] = sb
                nv_ = 3
                break
        if nv_ < 3:
            return fail
    faces = np.zeros((EPA_MAXF, 3), dtype=np.int64)
    fn = np.zeros((EPA_MAXF, 3))
    fd = np.zeros(EPA_MAXF)
    alive = np.zeros(EPA_MAXF, dtype=np.bool_)
    nf = 0
    if nv_ == 3:
        nrm = _cross(V[1] - V[0], V[2] - V[0])
        ln = _norm(nrm)
        if ln < 1e-14:
            return fail
        nrm /= ln
        sa, sb = _epa_support(pa, pb, nrm, pieces, scratch)
        w1 = sa - sb
        V[3] = w1
        VA[3] = sa
        VB[3] = sb
        sa, sb = _epa_support(pa, pb, -nrm, pieces, scratch)
        w2 = sa - sb
        V[4] = w2
        VA[4] = sa
        VB[4] = sb
        h1 = _dot(w1 - V[0], nrm)
        h2 = _dot(w2 - V[0], nrm)
        if h1 < 1e-10 or h2 > -1e-10:
            # The triangle lies on the boundary of the Minkowski difference:
            # a touching contact whose normal is the flat side's normal.
            if h1 < 1e-10:
                side = nrm
            else:
                side = -nrm
            lam = np.zeros(3)
            _closest_triangle(V[0], V[1], V[2], lam)
            pa_pt = lam[0] * VA[0] + lam[1] * VA[1] + lam[2] * VA[2]
            pb_pt = lam[0] * VB[0] + lam[1] * VB[1] + lam[2] * VB[2]
            return True, max(_dot(side, V[0]), 0.0), side, pa_pt, pb_pt
        nv_ = 5
        interior = (V[0] + V[1] + V[2] + V[3] + V[4]) / 5.0
        tri = ((0, 1, 3), (1, 2, 3), (2, 0, 3), (0, 1, 4), (1, 2, 4), (2, 0, 4))
        for t in range(6):
            _epa_face(V, faces, fn, fd, nf, tri[t][0], tri[t][1], tri[t][2], interior)
            alive[nf] = True
            nf += 1
    else:
        vol = _dot(V[3] - V[0], _cross(V[1] - V[0], V[2] - V[0]))
        if abs(vol) < 1e-18:
            return fail
        interior = (V[0] + V[1] + V[2] + V[3]) / 4.0
        tri = ((0, 1, 2), (0, 3, 1), (0, 2, 3), (1, 3, 2))
        for t in range(4):
            _epa_face(V, faces, fn, fd, nf, tri[t][0], tri[t][1], tri[t][2], interior)
            alive[nf] = True
            nf += 1

    edges = np.zeros((EPA_MAXF * 3, 2), dtype=np.int64)
    best = -1
    converged = False
    for _ in range(max_iter):
        best = -1
        bd = 1e300
        for f in range(nf):
            if alive[f] and fd[f] < bd:
                bd = fd[f]
                best = f
        if best < 0 or bd >= 1e299:
            return fail
        nrm = fn[best].copy()
        sa, sb = _epa_support(pa, pb, nrm, pieces, scratch)
        w = sa - sb
        if _dot(w, nrm) - bd < 1e-7:
            converged = True
            break
        if nv_ >= EPA_MAXV:
            return fail
        V[nv_] = w
        VA[nv_] = sa
        VB[nv_] = sb
        nw = nv_
        nv_ += 1
        ne = 0
        removed = 0
        for f in range(nf):
            if not alive[f]:
                continue
            if _dot(fn[f], w) - fd[f] > 1e-12:
                alive[f] = False
                removed += 1
                for e in range(3):
                    a = faces[f, e]
                    b = faces[f, (e + 1) % 3]
                    found = -1
                    for q in range(ne):
                        if edges[q, 0] == b and edges[q, 1] == a:
                            found = q
                            break
                    if found >= 0:
                        edges[found, 0] = edges[ne - 1, 0]
                        edges[found, 1] = edges[ne - 1, 1]
                        ne -= 1
                    else:
                        edges[ne, 0] = a
                        edges[ne, 1] = b
                        ne += 1
        if removed == 0:
            converged = True
            break
        # compact dead faces to keep the face table small
        m = 0
        for f in range(nf):
            if alive[f]:
                faces[m] = faces[f]
                fn[m] = fn[f]
                fd[m] = fd[f]
                alive[m] = True
                m += 1
        nf = m
        if nf + ne > EPA_MAXF:
            return fail
        for q in range(ne):
            _epa_face(V, faces, fn, fd, nf, edges[q, 0], edges[q, 1], nw, interior)
            alive[nf] = True
            nf += 1
    if not converged:
        return fail
    depth = fd[best]
    nrm = fn[best].copy()
    i, j, k = faces[best, 0], faces[best, 1], faces[best, 2]
    lam = np.zeros(3)
    # barycentric of the origin's projection onto the best face
    p = nrm * depth
    a, b, c = V[i], V[j], V[k]
    v0_ = b - a
    v1_ = c - a
    v2_ = p - a
    d00 = _dot(v0_, v0_)
    d01 = _dot(v0_, v1_)
    d11 = _dot(v1_, v1_)
    d20 = _dot(v2_, v0_)
    d21 = _dot(v2_, v1_)
    den = d00 * d11 - d01 * d01
    if abs(den) < 1e-30:
        lam[0] = 1.0
    else:
        lv = (d11 * d20 - d01 * d21) / den
        lw = (d00 * d21 - d01 * d20) / den
        lam[0] = 1.0 - lv - lw
        lam[1] = lv
        lam[2] = lw
    for q in range(3):
        if lam[q] < 0.0:
            lam[q] = 0.0
    s = lam[0] + lam[1] + lam[2]
    lam /= s
    pa_pt = lam[0] * VA[i] + lam[1] * VA[j] + lam[2] * VA[k]
    pb_pt = lam[0] * VB[i] + lam[1] * VB[j] + lam[2] * VB[k]
    return True, max(depth, 0.0), nrm, pa_pt, pb_pt


# --------------------------------------------------------------------------
# contact manifolds
# --------------------------------------------------------------------------

@njit(**_JIT)
def _emit(contacts, ba, bb, pa, pb, point, normal, depth, mu, e):
    c_ids, c_point, c_normal, c_depth, c_mu, c_e, c_count = contacts
    k = c_count[0]
    if k >= c_ids.shape[0]:
        c_count[1] += 1  # overflow counter
        return
    c_ids[k, 0] = ba
    c_ids[k, 1] = bb
    c_ids[k, 2] = pa
    c_ids[k, 3] = pb
    c_point[k, 0] = point[0]
    c_point[k, 1] = point[1]
    c_point[k, 2] = point[2]
    c_normal[k, 0] = normal[0]
    c_normal[k, 1] = normal[1]
    c_normal[k, 2] = normal[2]
    c_depth[k] = depth
    c_mu[k] = mu
    c_e[k] = e
    c_count[0] = k + 1


@njit(**_JIT)
def reduce_points(pts, depths, k, normal):
    """Choose at most four representative points of a manifold (indices)."""
    if k <= 4:
        return np.arange(k)
    i0 = 0
    for i in range(1, k):
        if depths[i] > depths[i0]:
            i0 = i
    i1 = -1
    best = -1.0
    for i in range(k):
        e = pts[i] - pts[i0]
        dd = _dot(e, e)
        if dd > best:
            best = dd
            i1 = i
    i2 = -1
    best = -1.0
    sign = 1.0
    for i in range(k):
        a = _dot(_cross(pts[i1] - pts[i0], pts[i] - pts[i0]), normal)
        if abs(a) > best:
            best = abs(a)
            i2 = i
            sign = 1.0 if a >= 0.0 else -1.0
    i3 = -1
    best = 0.0
    for i in range(k):
        if i == i0 or i == i1 or i == i2:
            continue
        a01 = sign * _dot(_cross(pts[i1] - pts[i0], pts[i] - pts[i0]), normal)
        a12 = sign * _dot(_cross(pts[i2] - pts[i1], pts[i] - pts[i1]), normal)
        a20 = sign * _dot(_cross(pts[i0] - pts[i2], pts[i] - pts[i2]), normal)
        out = -min(a01, min(a12, a20))
        if out > best:
            best = out
            i3 = i
    if i3 < 0:
        idx = np.empty(3, dtype=np.int64)
        idx[0], idx[1], idx[2] = i0, i1, i2
        return idx
    idx = np.empty(4, dtype=np.int64)
    idx[0], idx[1], idx[2], idx[3] = i0, i1, i2, i3
    return idx


@njit(**_JIT)
def _clip_manifold(pa, pb, n, margin, pieces, scratch, out_pts, out_dep):
    """Face-clipping manifold for two polytopes with contact normal n (a -> b).

    Fills out_pts/out_dep; returns (count, normal) or (0, n) when the contact is
    edge-like and the caller should fall back to a single point.
    """
    f0, nf, fi0, fni, fidx = pieces[4], pieces[5], pieces[12], pieces[13], pieces[14]
    w_verts, w_fn, w_fd = scratch[0], scratch[1], scratch[2]
    best_a = f0[pa]
    sa = -2.0
    for f in range(f0[pa], f0[pa] + nf[pa]):
        s = _dot(w_fn[f], n)
        if s > sa:
            sa = s
            best_a = f
    best_b = f0[pb]
    sb = -2.0
    for f in range(f0[pb], f0[pb] + nf[pb]):
        s = -_dot(w_fn[f], n)
        if s > sb:
            sb = s
            best_b = f
    if max(sa, sb) < 0.9:
        return 0, n
    if sb > sa + 1e-3:
        ref = best_b
        inc_piece = pa
        flip = True
    else:
        ref = best_a
        inc_piece = pb
        flip = False
    nr = w_fn[ref].copy()
    inc = f0[inc_piece]
    si = 2.0
    for f in range(f0[inc_piece], f0[inc_piece] + nf[inc_piece]):
        s = _dot(w_fn[f], nr)
        if s < si:
            si = s
            inc = f
    buf_a = np.zeros((MAX_CLIP, 3))
    buf_b = np.zeros((MAX_CLIP, 3))
    m = fni[inc]
    if m > MAX_CLIP // 2:
        return 0, n
    for q in range(m):
        buf_a[q] = w_verts[fidx[fi0[inc] + q]]
    rn = fni[ref]
    for e in range(rn):
        va = w_verts[fidx[fi0[ref] + e]]
        vb = w_verts[fidx[fi0[ref] + (e + 1) % rn]]
        side = _cross(vb - va, nr)
        off = _dot(side, va)
        k = 0
        for q in range(m):
            p1 = buf_a[q]
            p2 = buf_a[(q + 1) % m]
            d1 = _dot(side, p1) - off
            d2 = _dot(side, p2) - off
            if d1 <= 0.0:
                if k < MAX_CLIP:
                    buf_b[k] = p1
                    k += 1
            if (d1 < 0.0 and d2 > 0.0) or (d1 > 0.0 and d2 < 0.0):
                t = d1 / (d1 - d2)
                if k < MAX_CLIP:
                    buf_b[k] = p1 + t * (p2 - p1)
                    k += 1
        m = k
        for q in range(m):
            buf_a[q] = buf_b[q]
        if m == 0:
            break
    cnt = 0
    dref = w_fd[ref]
    for q in range(m):
        sep = _dot(nr, buf_a[q]) - dref
        if sep <= margin:
            out_pts[cnt] = buf_a[q] - nr * (0.5 * sep)
            out_dep[cnt] = -sep
            cnt += 1
    if flip:
        return cnt, -nr
    return cnt, nr


@njit(**_JIT)
def _material(p, pbody, pmu, pe, friction, restitution):
    b = pbody[p]
    if b < 0:
        return pmu[p], pe[p]
    return friction[b], restitution[b]


@njit(**_JIT)
def _emit_points(contacts, ba, bb, pa, pb, pts, deps, k, normal, mu, e):
    # The solver takes the full clipped set; reporting reduces to four points.
    for i in range(k):
        _emit(contacts, ba, bb, pa, pb, pts[i], normal, deps[i], mu, e)


@njit(**_JIT)
def collide_ground(p, bodies, pieces, scratch, contacts, params):
    slop = params[3]
    ground_mu, ground_e = params[8], params[9]
    friction, restitution = bodies[6], bodies[7]
    pbody, kind, v0, nv, pmu, pe, radius = pieces[0], pieces[1], pieces[2], pieces[3], pieces[7], pieces[8], pieces[6]
    w_verts, sweep = scratch[0], scratch[4]
    margin = sweep[p] + slop
    b = pbody[p]
    mu = math.sqrt(ground_mu * friction[b])
    e = max(ground_e, restitution[b])
    up = np.array([0.0, 0.0, 1.0])
    if kind[p] == SPHERE:
        c = w_verts[v0[p]]
        sep = c[2] - radius[p]
        if sep <= margin:
            pt = np.array([c[0], c[1], 0.5 * sep])
            _emit(contacts, STATIC, b, GROUND, p, pt, up, -sep, mu, e)
        return
    k = 0
    cnt = nv[p]
    pts = np.zeros((cnt, 3))
    deps = np.zeros(cnt)
    for i in range(v0[p], v0[p] + cnt):
        z = w_verts[i, 2]
        if z <= margin:
            pts[k, 0] = w_verts[i, 0]
            pts[k, 1] = w_verts[i, 1]
            pts[k, 2] = 0.5 * z
            deps[k] = -z
            k += 1
    # every vertex within the margin: after a spin-up any of them can lead
    for i in range(k):
        _emit(contacts, STATIC, b, GROUND, p, pts[i], up, deps[i], mu, e)


@njit(**_JIT)
def collide_pair(pa, pb, bodies, pieces, scratch, contacts, params, max_epa):
    """Contact points between two pieces, speculative within the swept margin.

    Returns 1 if EPA failed to converge (pair skipped), else 0.
    """
    slop = params[3]
    friction, restitution = bodies[6], bodies[7]
    pbody, kind, v0, nv, f0, nf, radius, pmu, pe = pieces[:9]
    w_verts, w_fn, w_fd, aabb, sweep = scratch
    ba = pbody[pa]
    bb = pbody[pb]
    margin = sweep[pa] + sweep[pb] + slop
    mua, ea = _material(pa, pbody, pmu, pe, friction, restitution)
    mub, eb = _material(pb, pbody, pmu, pe, friction, restitution)
    mu = math.sqrt(mua * mub)
    e = max(ea, eb)
    ra = radius[pa]
    rb = radius[pb]

    if kind[pa] == SPHERE and kind[pb] == SPHERE:
        ca = w_verts[v0[pa]]
        cb = w_verts[v0[pb]]
        d = cb - ca
        dist = _norm(d)
        sep = dist - ra - rb
        if sep > margin:
            return 0
        if dist > 1e-12:
            n = d / dist
        else:
            n = np.array([0.0, 0.0, 1.0])
        pt = 0.5 * (ca + cb) + n * (0.5 * (ra - rb))
        _emit(contacts, ba, bb, pa, pb, pt, n, -sep, mu, e)
        return 0

    W = np.zeros((4, 3))
    SA = np.zeros((4, 3))
    SB = np.zeros((4, 3))
    LAM = np.zeros(4)
    ns, dist, wa, wb, overlap = gjk(pa, pb, pieces, scratch, W, SA, SB, LAM)
    pts = np.zeros((MAX_CLIP, 3))
    deps = np.zeros(MAX_CLIP)

    if not overlap:
        sep = dist - ra - rb
        if sep > margin:
            return 0
        n = (wb - wa) / dist
        if kind[pa] == POLYTOPE and kind[pb] == POLYTOPE:
            k, nrm = _clip_manifold(pa, pb, n, margin, pieces, scratch, pts, deps)
            if k > 0:
                _emit_points(contacts, ba, bb, pa, pb, pts, deps, k, nrm, mu, e)
                return 0
        sa_pt = wa + n * ra
        sb_pt = wb - n * rb
        _emit(contacts, ba, bb, pa, pb, 0.5 * (sa_pt + sb_pt), n, -sep, mu, e)
        return 0

    if kind[pa] == SPHERE or kind[pb] == SPHERE:
        # sphere core inside the polytope: nearest face plane is exact
        if kind[pa] == SPHERE:
            sp, pp, r = pa, pb, ra
        else:
            sp, pp, r = pb, pa, rb
        c = w_verts[v0[sp]]
        bf = f0[pp]
        bs = -1e300
        for f in range(f0[pp], f0[pp] + nf[pp]):
            s = _dot(w_fn[f], c) - w_fd[f]
            if s > bs:
                bs = s
                bf = f
        nface = w_fn[bf].copy()
        pt = c - nface * (0.5 * (r + bs))
        depth = r - bs
        if kind[pa] == SPHERE:
            _emit(contacts, ba, bb, pa, pb, pt, -nface, depth, mu, e)
        else:
            _emit(contacts, ba, bb, pa, pb, pt, nface, depth, mu, e)
        return 0

    ok, depth, n, wa, wb = epa(pa, pb, pieces, scratch, W, SA, SB, ns, max_epa)
    if not ok:
        return 1
    k, nrm = _clip_manifold(pa, pb, n, margin, pieces, scratch, pts, deps)
    if k > 0:
        _emit_points(contacts, ba, bb, pa, pb, pts, deps, k, nrm, mu, e)
    else:
        _emit(contacts, ba, bb, pa, pb, 0.5 * (wa + wb), n, depth, mu, e)
    return 0


@njit(**_JIT)
def narrowphase(pairs, bodies, pieces, scratch, contacts, params, iparams):
    """Generate all contacts for this substep. Returns the EPA failure count."""
    kinematic, asleep = bodies[8], bodies[9]
    pbody = pieces[0]
    contacts[6][0] = 0
    contacts[6][1] = 0
    fails = 0
    ground_on = params[10] > 0.5
    for p in range(pbody.shape[0]):
        b = pbody[p]
        if ground_on and b >= 0 and not kinematic[b] and not asleep[b]:
            if scratch[3][p, 2] <= scratch[4][p] + params[3]:
                collide_ground(p, bodies, pieces, scratch, contacts, params)
    for q in range(pairs.shape[0]):
        fails += collide_pair(pairs[q, 0], pairs[q, 1], bodies, pieces, scratch, contacts,
                              params, iparams[1])
    return fails


# --------------------------------------------------------------------------
# sleeping / waking
# --------------------------------------------------------------------------

@njit(**_JIT)
def _moving(b, bodies, params):
    vel, omega, kinematic, asleep = bodies[2], bodies[3], bodies[8], bodies[9]
    if b < 0 or asleep[b]:
        return False
    if kinematic[b]:
        return _dot(vel[b], vel[b]) > 0.0
    return _norm(vel[b]) > params[5] or _norm(omega[b]) > params[6]


@njit(**_JIT)
def wake_touched(bodies, contacts, params):
    """Wake sleepers touched by a moving body; returns how many woke."""
    asleep, sleep_timer = bodies[9], bodies[10]
    c_ids = contacts[0]
    k = contacts[6][0]
    woke = 0
    for i in range(k):
        ba = c_ids[i, 0]
        bb = c_ids[i, 1]
        if bb >= 0 and asleep[bb] and _moving(ba, bodies, params):
            asleep[bb] = False
            sleep_timer[bb] = 0.0
            woke += 1
        if ba >= 0 and asleep[ba] and _moving(bb, bodies, params):
            asleep[ba] = False
            sleep_timer[ba] = 0.0
            woke += 1
    return woke


# --------------------------------------------------------------------------
# integration
# --------------------------------------------------------------------------

@njit(**_JIT)
def integrate_velocities(bodies, params, inertia):
    """Gravity on linear velocity; implicit gyroscopic update on angular velocity."""
    pos, quat, vel, omega, inv_mass, inv_inertia = bodies[:6]
    kinematic, asleep = bodies[8], bodies[9]
    gz, dt = params[0], params[1]
    for b in range(pos.shape[0]):
        if kinematic[b] or asleep[b] or inv_mass[b] == 0.0:
            continue
        vel[b, 0] += params[11] * dt
        vel[b, 1] += params[12] * dt
        vel[b, 2] += gz * dt
        w = omega[b]
        if w[0] == 0.0 and w[1] == 0.0 and w[2] == 0.0:
            continue
        r = quat_to_mat(quat[b])
        wb = _mat_t_vec(r, w)
        ib = inertia[b]
        iw = np.array([ib[0] * wb[0], ib[1] * wb[1], ib[2] * wb[2]])
        f = dt * _cross(wb, iw)
        # J = I + dt * (skew(wb) I - skew(I wb))
        J = np.zeros((3, 3))
        for i in range(3):
            J[i, i] = ib[i]
        sk = np.array([[0.0, -wb[2], wb[1]], [wb[2], 0.0, -wb[0]], [-wb[1], wb[0], 0.0]])
        si = np.array([[0.0, -iw[2], iw[1]], [iw[2], 0.0, -iw[0]], [-iw[1], iw[0], 0.0]])
        for i in range(3):
            for j in range(3):
                J[i, j] += dt * (sk[i, j] * ib[j] - si[i, j])
        dw = np.linalg.solve(J, f)
        wb = wb - dw
        omega[b] = _mat_vec(r, wb)


@njit(**_JIT)
def quat_exp_mul(q, w, dt):
    """exp(w*dt) composed on the left of q, renormalized."""
    ang = _norm(w) * dt
    if ang < 1e-15:
        return q.copy()
    s = math.sin(0.5 * ang) / (ang / dt) if ang > 0.0 else 0.0
    dw = math.cos(0.5 * ang)
    dx = w[0] * s
    dy = w[1] * s
    dz = w[2] * s
    out = np.empty(4)
    out[0] = dw * q[0] - dx * q[1] - dy * q[2] - dz * q[3]
    out[1] = dw * q[1] + dx * q[0] + dy * q[3] - dz * q[2]
    out[2] = dw * q[2] - dx * q[3] + dy * q[0] + dz * q[1]
    out[3] = dw * q[3] + dx * q[2] - dy * q[1] + dz * q[0]
    nrm = math.sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2] + out[3] * out[3])
    return out / nrm


@njit(**_JIT)
def integrate_positions(bodies, params, time_next):
    pos, quat, vel, omega = bodies[:4]
    kinematic, asleep, kin_start = bodies[8], bodies[9], bodies[11]
    dt = params[1]
    for b in range(pos.shape[0]):
        if asleep[b]:
            continue
        if kinematic[b]:
            # scripted: evaluated in closed form so it never accumulates drift
            for k in range(3):
                pos[b, k] = kin_start[b, k] + vel[b, k] * time_next
            quat[b] = quat_exp_mul(quat[b], omega[b], dt)
            continue
        for k in range(3):
            pos[b, k] += vel[b, k] * dt
        quat[b] = quat_exp_mul(quat[b], omega[b], dt)


@njit(**_JIT)
def update_sleep(bodies, params):
    vel, omega = bodies[2], bodies[3]
    kinematic, asleep, sleep_timer = bodies[8], bodies[9], bodies[10]
    dt, lin, ang, tsleep = params[1], params[5], params[6], params[7]
    for b in range(vel.shape[0]):
        if kinematic[b] or asleep[b]:
            continue
        if _norm(vel[b]) < lin and _norm(omega[b]) < ang:
            sleep_timer[b] += dt
            if sleep_timer[b] >= tsleep:
                asleep[b] = True
                vel[b, :] = 0.0
                omega[b, :] = 0.0
        else:
            sleep_timer[b] = 0.0


# --------------------------------------------------------------------------
# solver
# --------------------------------------------------------------------------

@njit(**_JIT)
def _body_vel(b, vel, omega, r):
    if b < 0:
        return np.zeros(3)
    return vel[b] + _cross(omega[b], r)


@njit(**_JIT)
def solve_contacts(bodies, contacts, pending, params, iparams):
    """Projected Gauss-Seidel on the contact constraints (sequential impulses).

    Returns the accumulated normal impulses. Updates ``pending`` with bounces
    that must be applied on the next substep (speculative contacts closing
    this substep).
    """
    pos, quat, vel, omega, inv_mass, inv_inertia = bodies[:6]
    kinematic, asleep = bodies[8], bodies[9]
    c_ids, c_point, c_normal, c_depth, c_mu, c_e, c_count = contacts
    p_ids, p_val, p_count = pending
    gz, dt, beta, slop, rthresh = params[0], params[1], params[2], params[3], params[4]
    iters = iparams[0]
    k = c_count[0]
    nb = pos.shape[0]

    im = np.zeros(nb)
    iinv = np.zeros((nb, 3, 3))
    for b in range(nb):
        if kinematic[b] or asleep[b]:
            continue
        im[b] = inv_mass[b]
        iinv[b] = world_inv_inertia(quat[b], inv_inertia[b])

    ra = np.zeros((k, 3))
    rb = np.zeros((k, 3))
    t1 = np.zeros((k, 3))
    t2 = np.zeros((k, 3))
    kn = np.zeros(k)
    kt1 = np.zeros(k)
    kt2 = np.zeros(k)
    target = np.zeros(k)
    acc_n = np.zeros(k)
    acc_t1 = np.zeros(k)
    acc_t2 = np.zeros(k)

    # bounces scheduled by the previous substep
    n_prev = p_count[0]
    prev_ids = p_ids[:n_prev].copy()
    prev_val = p_val[:n_prev].copy()
    p_count[0] = 0

    for i in range(k):
        ba = c_ids[i, 0]
        bb = c_ids[i, 1]
        n = c_normal[i]
        p = c_point[i]
        if ba >= 0:
            ra[i] = p - pos[ba]
        if bb >= 0:
            rb[i] = p - pos[bb]
        a, b2 = _tangents(n)
        t1[i] = a
        t2[i] = b2
        ima = im[ba] if ba >= 0 else 0.0
        imb = im[bb] if bb >= 0 else 0.0
        for axis in range(3):
            if axis == 0:
                d = n
            elif axis == 1:
                d = t1[i]
            else:
                d = t2[i]
            kk = ima + imb
            if ba >= 0 and ima > 0.0:
                rc = _cross(ra[i], d)
                kk += _dot(_cross(_mat_vec(iinv[ba], rc), ra[i]), d)
            if bb >= 0 and imb > 0.0:
                rc = _cross(rb[i], d)
                kk += _dot(_cross(_mat_vec(iinv[bb], rc), rb[i]), d)
            inv_k = 1.0 / kk if kk > 0.0 else 0.0
            if axis == 0:
                kn[i] = inv_k
            elif axis == 1:
                kt1[i] = inv_k
            else:
                kt2[i] = inv_k
        vrel = _body_vel(bb, vel, omega, rb[i]) - _body_vel(ba, vel, omega, ra[i])
        vn = _dot(vrel, n)
        depth = c_depth[i]
        e = c_e[i]
        bounce = 0.0
        for q in range(n_prev):
            if prev_ids[q, 0] == c_ids[i, 2] and prev_ids[q, 1] == c_ids[i, 3]:
                bounce = prev_val[q]
        if depth < 0.0:
            tgt = depth / dt
            if e > 0.0 and vn < tgt and -vn > rthresh:
                # closes this substep: land on the surface now, bounce next substep
                found = False
                for q in range(p_count[0]):
                    if p_ids[q, 0] == c_ids[i, 2] and p_ids[q, 1] == c_ids[i, 3]:
                        found = True
                        p_val[q] = max(p_val[q], -e * vn)
                if not found and p_count[0] < p_ids.shape[0]:
                    q = p_count[0]
                    p_ids[q, 0] = c_ids[i, 2]
                    p_ids[q, 1] = c_ids[i, 3]
                    p_val[q] = -e * vn
                    p_count[0] = q + 1
        else:
            tgt = beta * max(0.0, depth - slop) / dt
            if e > 0.0 and -vn > rthresh:
                tgt = max(tgt, -e * vn)
        target[i] = max(tgt, bounce) if bounce > 0.0 else tgt

    for _ in range(iters):
        for i in range(k):
            ba = c_ids[i, 0]
            bb = c_ids[i, 1]
            n = c_normal[i]
            # friction (circular cone), then the normal constraint
            vrel = _body_vel(bb, vel, omega, rb[i]) - _body_vel(ba, vel, omega, ra[i])
            lim = c_mu[i] * acc_n[i]
            l1 = -_dot(vrel, t1[i]) * kt1[i]
            l2 = -_dot(vrel, t2[i]) * kt2[i]
            n1 = acc_t1[i] + l1
            n2 = acc_t2[i] + l2
            mag = math.sqrt(n1 * n1 + n2 * n2)
            if mag > lim:
                if mag > 0.0:
                    n1 *= lim / mag
                    n2 *= lim / mag
            l1 = n1 - acc_t1[i]
            l2 = n2 - acc_t2[i]
            acc_t1[i] = n1
            acc_t2[i] = n2
            imp = l1 * t1[i] + l2 * t2[i]
            _apply(ba, bb, imp, ra[i], rb[i], im, iinv, vel, omega)

            vrel = _body_vel(bb, vel, omega, rb[i]) - _body_vel(ba, vel, omega, ra[i])
            vn = _dot(vrel, n)
            lam = -(vn - target[i]) * kn[i]
            new = max(acc_n[i] + lam, 0.0)
            lam = new - acc_n[i]
            acc_n[i] = new
            _apply(ba, bb, lam * n, ra[i], rb[i], im, iinv, vel, omega)
    return acc_n


@njit(**_JIT)
def _apply(ba, bb, imp, ra, rb, im, iinv, vel, omega):
    if ba >= 0 and im[ba] > 0.0:
        vel[ba] -= im[ba] * imp
        omega[ba] -= _mat_vec(iinv[ba], _cross(ra, imp))
    if bb >= 0 and im[bb] > 0.0:
        vel[bb] += im[bb] * imp
        omega[bb] += _mat_vec(iinv[bb], _cross(rb, imp))


# --------------------------------------------------------------------------
# one substep
# --------------------------------------------------------------------------

@njit(**_JIT)
def substep(bodies, pieces, scratch, contacts, pending, params, iparams, inertia, time_next):
    dt, slop = params[1], params[3]
    gmag = math.sqrt(params[0] ** 2 + params[11] ** 2 + params[12] ** 2)
    update_geometry(bodies, pieces, scratch, dt, slop, gmag)
    pairs = broadphase(bodies, pieces, scratch)
    fails = narrowphase(pairs, bodies, pieces, scratch, contacts, params, iparams)
    if wake_touched(bodies, contacts, params) > 0:
        # sleepers had no ground or static contacts; regenerate with them awake
        update_geometry(bodies, pieces, scratch, dt, slop, gmag)
        pairs = broadphase(bodies, pieces, scratch)
        fails = narrowphase(pairs, bodies, pieces, scratch, contacts, params, iparams)
    integrate_velocities(bodies, params, inertia)
    solve_contacts(bodies, contacts, pending, params, iparams)
    integrate_positions(bodies, params, time_next)
    update_sleep(bodies, params)
    return fails


@njit(**_JIT)
def advance(nsteps, step0, steps_per_second, bodies, pieces, scratch, contacts, pending,
            params, iparams, inertia):
    """Run ``nsteps`` substeps starting at global substep index ``step0``."""
    fails = 0
    for s in range(nsteps):
        t_next = (step0 + s + 1) / steps_per_second
        fails += substep(bodies, pieces, scratch, contacts, pending, params, iparams, inertia, t_next)
    return fails
