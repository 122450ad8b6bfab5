"""Simulation state: rigid bodies, static geometry and the packed arrays the
compiled kernels operate on."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..config import FRAME_COUNT, FRAME_DT, SolverConfig
from ..geometry.hull import ConvexPiece
from ..geometry.shapes import MassProps
from ..geometry.transforms import Pose

log = logging.getLogger(__name__)

CONTACT_CAPACITY = 8192
PENDING_CAPACITY = 1024


class DegenerateContactError(RuntimeError):
    """EPA failed to converge for a piece pair."""


@dataclass(frozen=True)
class Material:
    friction: float = 0.5
    restitution: float = 0.1

    def __post_init__(self):
        if self.friction < 0:
            raise ValueError("friction coefficient must be non-negative")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError("restitution must lie in [0, 1]")


@dataclass
class RigidBody:
    """A body whose frame origin is its center of mass.

    ``pieces`` are convex collision pieces expressed in that frame. Kinematic
    bodies follow ``linear_velocity`` from their initial pose and ignore contacts.
    """

    pieces: tuple[ConvexPiece, ...]
    mass_props: MassProps
    pose: Pose = field(default_factory=Pose)
    linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    material: Material = field(default_factory=Material)
    kinematic: bool = False
    name: str = ""

    def __post_init__(self):
        self.linear_velocity = np.asarray(self.linear_velocity, dtype=float).reshape(3)
        self.angular_velocity = np.asarray(self.angular_velocity, dtype=float).reshape(3)
        if not self.kinematic and not self.mass_props.mass > 0:
            raise ValueError("dynamic bodies need a positive finite mass")

    @property
    def bounding_radius(self) -> float:
        return max(float(np.max(np.linalg.norm(p.vertices, axis=1)) + p.radius) for p in self.pieces)


@dataclass(frozen=True)
class ContactManifold:
    """Up to four contact points between bodies ``body_a`` and ``body_b``.

    Static geometry uses ids after the dynamic bodies: ``n_bodies`` is the
    ground plane and ``n_bodies + 1`` the holder. Normals point from A to B.
    """

    body_a: int
    body_b: int
    points: np.ndarray
    normals: np.ndarray
    depths: np.ndarray

    def __len__(self):
        return len(self.depths)


@dataclass
class Trajectory:
    """Per-frame state of every body. Frame 0 is the spawn state."""

    positions: np.ndarray          # (F, B, 3)
    orientations: np.ndarray       # (F, B, 4) wxyz
    linear_velocities: np.ndarray  # (F, B, 3)
    angular_velocities: np.ndarray  # (F, B, 3)
    contact_pairs: list = field(default_factory=list)
    dt: float = FRAME_DT

    @property
    def frame_count(self) -> int:
        return self.positions.shape[0]

    @property
    def body_count(self) -> int:
        return self.positions.shape[1]

    def pose(self, frame: int, body: int) -> Pose:
        return Pose(self.positions[frame, body], self.orientations[frame, body])

    def as_float32(self) -> "Trajectory":
        """The trajectory as stored on disk (values rounded to float32)."""
        f = lambda a: np.asarray(a, dtype=np.float32).astype(np.float64)
        return Trajectory(f(self.positions), f(self.orientations), f(self.linear_velocities),
                          f(self.angular_velocities), list(self.contact_pairs), self.dt)

    @classmethod
    def empty(cls, bodies: int, frames: int = FRAME_COUNT) -> "Trajectory":
        z3 = np.zeros((frames, bodies, 3))
        q = np.zeros((frames, bodies, 4))
        q[..., 0] = 1.0
        return cls(z3.copy(), q, z3.copy(), z3.copy(), [[] for _ in range(frames)])


class World:
    """Ordered dynamic/kinematic bodies, a ground plane at z=0 and static pieces.

    Body order is fixed at construction. After construction the packed arrays
    are the source of truth; ``body_pose`` and friends read from them.
    """

    def __init__(self, bodies, statics=(), *, ground: bool = True,
                 gravity=(0.0, 0.0, -9.81), solver: SolverConfig | None = None,
                 ground_material: Material = Material(), static_material: Material = Material()):
        self.bodies = list(bodies)
        self.statics = tuple(statics)
        self.ground = bool(ground)
        self.gravity = np.asarray(gravity, dtype=float).reshape(3)
        self.solver = solver or SolverConfig()
        self.ground_material = ground_material
        self.static_material = static_material
        self.substep_count = 0
        self.time = 0.0
        self.degenerate_contacts = 0
        self._pack()

    # -- packing -----------------------------------------------------------
    def _pack(self):
        n = len(self.bodies)
        self.pos = np.zeros((n, 3))
        self.quat = np.zeros((n, 4))
        self.vel = np.zeros((n, 3))
        self.omega = np.zeros((n, 3))
        self.inv_mass = np.zeros(n)
        self.inv_inertia = np.zeros((n, 3))
        self.inertia = np.zeros((n, 3))
        self.friction = np.zeros(n)
        self.restitution = np.zeros(n)
        self.kinematic = np.zeros(n, dtype=np.bool_)
        self.asleep = np.zeros(n, dtype=np.bool_)
        self.sleep_timer = np.zeros(n)
        self.kin_start = np.zeros((n, 3))
        self.bound = np.zeros(n)
        for i, b in enumerate(self.bodies):
            self.pos[i] = b.pose.position
            self.quat[i] = b.pose.orientation
            self.vel[i] = b.linear_velocity
            self.omega[i] = b.angular_velocity
            self.friction[i] = b.material.friction
            self.restitution[i] = b.material.restitution
            self.kinematic[i] = b.kinematic
            self.kin_start[i] = b.pose.position
            self.bound[i] = b.bounding_radius
            inertia = np.diag(np.asarray(b.mass_props.inertia, dtype=float))
            if not np.allclose(b.mass_props.inertia, np.diag(inertia), atol=1e-12):
                raise ValueError("body inertia must be diagonal in the body frame")
            self.inertia[i] = inertia
            if not b.kinematic:
                self.inv_mass[i] = 1.0 / b.mass_props.mass
                self.inv_inertia[i] = 1.0 / inertia

        pieces = []
        for i, b in enumerate(self.bodies):
            pieces += [(i, p, b.material) for p in b.pieces]
        pieces += [(-1, p, self.static_material) for p in self.statics]
        self.piece_body = np.array([p[0] for p in pieces], dtype=np.int64)
        npc = len(pieces)
        self.piece_kind = np.zeros(npc, dtype=np.int64)
        self.piece_v0 = np.zeros(npc, dtype=np.int64)
        self.piece_nv = np.zeros(npc, dtype=np.int64)
        self.piece_f0 = np.zeros(npc, dtype=np.int64)
        self.piece_nf = np.zeros(npc, dtype=np.int64)
        self.piece_radius = np.zeros(npc)
        self.piece_mu = np.zeros(npc)
        self.piece_e = np.zeros(npc)
        verts, fns, fds, fi0, fni, fidx = [], [], [], [], [], []
        nverts = nfaces = nidx = 0
        for k, (_, piece, mat) in enumerate(pieces):
            self.piece_kind[k] = piece.kind
            self.piece_v0[k] = nverts
            self.piece_nv[k] = len(piece.vertices)
            self.piece_f0[k] = nfaces
            self.piece_nf[k] = len(piece.faces)
            self.piece_radius[k] = piece.radius
            self.piece_mu[k] = mat.friction
            self.piece_e[k] = mat.restitution
            verts.append(piece.vertices)
            if len(piece.faces):
                fns.append(piece.normals)
                fds.append(piece.offsets)
            for face in piece.faces:
                fi0.append(nidx)
                fni.append(len(face))
                fidx.extend(int(v) + nverts for v in face)
                nidx += len(face)
            nverts += len(piece.vertices)
            nfaces += len(piece.faces)
        self.local_verts = np.vstack(verts) if verts else np.zeros((0, 3))
        self.local_fn = np.vstack(fns) if fns else np.zeros((0, 3))
        self.local_fd = np.concatenate(fds) if fds else np.zeros(0)
        self.face_i0 = np.array(fi0, dtype=np.int64)
        self.face_ni = np.array(fni, dtype=np.int64)
        self.face_idx = np.array(fidx, dtype=np.int64)

        self.w_verts = np.zeros_like(self.local_verts)
        self.w_fn = np.zeros_like(self.local_fn)
        self.w_fd = np.zeros_like(self.local_fd)
        self.aabb = np.zeros((npc, 6))
        self.sweep = np.zeros(npc)

        self.c_ids = np.zeros((CONTACT_CAPACITY, 4), dtype=np.int64)
        self.c_point = np.zeros((CONTACT_CAPACITY, 3))
        self.c_normal = np.zeros((CONTACT_CAPACITY, 3))
        self.c_depth = np.zeros(CONTACT_CAPACITY)
        self.c_mu = np.zeros(CONTACT_CAPACITY)
        self.c_e = np.zeros(CONTACT_CAPACITY)
        self.c_count = np.zeros(2, dtype=np.int64)
        self.p_ids = np.zeros((PENDING_CAPACITY, 2), dtype=np.int64)
        self.p_val = np.zeros(PENDING_CAPACITY)
        self.p_count = np.zeros(1, dtype=np.int64)

    def bodies_tuple(self):
        return (self.pos, self.quat, self.vel, self.omega, self.inv_mass, self.inv_inertia,
                self.friction, self.restitution, self.kinematic, self.asleep, self.sleep_timer,
                self.kin_start, self.bound)

    def pieces_tuple(self):
        return (self.piece_body, self.piece_kind, self.piece_v0, self.piece_nv, self.piece_f0,
                self.piece_nf, self.piece_radius, self.piece_mu, self.piece_e, self.local_verts,
                self.local_fn, self.local_fd, self.face_i0, self.face_ni, self.face_idx)

    def scratch_tuple(self):
        return (self.w_verts, self.w_fn, self.w_fd, self.aabb, self.sweep)

    def contacts_tuple(self):
        return (self.c_ids, self.c_point, self.c_normal, self.c_depth, self.c_mu, self.c_e,
                self.c_count)

    def pending_tuple(self):
        return (self.p_ids, self.p_val, self.p_count)

    def params(self, dt: float | None = None) -> np.ndarray:
        s = self.solver
        return np.array([
            self.gravity[2], s.dt if dt is None else dt, s.baumgarte, s.slop,
            s.restitution_threshold, s.sleep_linear, s.sleep_angular, s.sleep_time,
            self.ground_material.friction, self.ground_material.restitution,
            1.0 if self.ground else 0.0, self.gravity[0], self.gravity[1],
        ])

    def iparams(self) -> np.ndarray:
        return np.array([self.solver.velocity_iterations, self.solver.epa_max_iterations],
                        dtype=np.int64)

    # -- views -------------------------------------------------------------
    @property
    def n_bodies(self) -> int:
        return len(self.bodies)

    def body_pose(self, i: int) -> Pose:
        return Pose(self.pos[i].copy(), self.quat[i].copy())

    def static_id(self, piece_body: int, piece: int) -> int:
        """Public id for static geometry referenced by a contact."""
        if piece_body >= 0:
            return piece_body
        return self.n_bodies if piece == -2 else self.n_bodies + 1

    def state_hash(self) -> bytes:
        return b"".join(a.tobytes() for a in (self.pos, self.quat, self.vel, self.omega))
