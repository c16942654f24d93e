"""Rigid-body pose math: quaternions, dual quaternions, ScLERP, scene state.

All rotations are unit quaternions in (w, x, y, z) order.  A rigid transform
is either a Pose (position + rotation) or its dual-quaternion form; the two
representations round-trip exactly.  Everything here is a pure value
transformation and safe to call from any thread.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from typing import Optional

TICK_SECONDS = 0.02  # fixed 50 Hz simulation tick

UNIT_TOL = 1e-6
POS_QUANTUM = 1e-4  # meters
ROT_QUANTUM = 1e-4  # quaternion units

OBJECT_TAGS = frozenset(
    {"interactable", "tool", "storyteller_trigger", "ar_visible", "ik_chain"}
)


class InvalidInputError(ValueError):
    """Raised when an operation receives a value violating its preconditions."""


@dataclass(frozen=True)
class Vec3:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scale(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross(self, other: "Vec3") -> "Vec3":
        return Vec3(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def normalized(self) -> "Vec3":
        n = self.norm()
        if n == 0.0:
            raise InvalidInputError("cannot normalize zero vector")
        return self.scale(1.0 / n)


@dataclass(frozen=True)
class UnitQuat:
    w: float = 1.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @staticmethod
    def identity() -> "UnitQuat":
        return UnitQuat(1.0, 0.0, 0.0, 0.0)

    @staticmethod
    def from_axis_angle(axis: Vec3, angle_deg: float) -> "UnitQuat":
        half = math.radians(angle_deg) * 0.5
        if axis.norm() == 0.0:
            if angle_deg % 360.0 != 0.0:
                raise InvalidInputError("zero axis with nonzero angle")
            return UnitQuat.identity()
        u = axis.normalized()
        s = math.sin(half)
        return UnitQuat(math.cos(half), u.x * s, u.y * s, u.z * s)

    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z)

    def normalized(self) -> "UnitQuat":
        n = self.norm()
        return UnitQuat(self.w / n, self.x / n, self.y / n, self.z / n)

    def conj(self) -> "UnitQuat":
        return UnitQuat(self.w, -self.x, -self.y, -self.z)

    def neg(self) -> "UnitQuat":
        return UnitQuat(-self.w, -self.x, -self.y, -self.z)

    def dot(self, other: "UnitQuat") -> float:
        return (
            self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
        )

    def mul(self, other: "UnitQuat") -> "UnitQuat":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return UnitQuat(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )

    def rotate(self, v: Vec3) -> Vec3:
        p = UnitQuat(0.0, v.x, v.y, v.z)
        r = self.mul(p).mul(self.conj())
        return Vec3(r.x, r.y, r.z)


@dataclass(frozen=True)
class Pose:
    position: Vec3 = field(default_factory=Vec3)
    rotation: UnitQuat = field(default_factory=UnitQuat.identity)

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    def compose(self, child: "Pose") -> "Pose":
        """Parent-then-child composition: apply child in this pose's frame."""
        return Pose(
            self.position + self.rotation.rotate(child.position),
            self.rotation.mul(child.rotation).normalized(),
        )

    def inverse(self) -> "Pose":
        inv_rot = self.rotation.conj()
        return Pose(inv_rot.rotate(self.position).scale(-1.0), inv_rot)


@dataclass(frozen=True)
class DualQuat:
    """Unit dual quaternion: real part unit-norm, real . dual = 0."""

    real: UnitQuat
    dual: UnitQuat  # a plain quaternion; UnitQuat reused as 4-tuple storage

    def check_unit(self, tol: float = UNIT_TOL) -> None:
        if abs(self.real.norm() - 1.0) > tol:
            raise InvalidInputError("dual quaternion real part is not unit-norm")
        if abs(self.real.dot(self.dual)) > tol:
            raise InvalidInputError("dual quaternion real and dual parts not orthogonal")

    def normalized(self) -> "DualQuat":
        n = self.real.norm()
        real = UnitQuat(self.real.w / n, self.real.x / n, self.real.y / n, self.real.z / n)
        dual = UnitQuat(self.dual.w / n, self.dual.x / n, self.dual.y / n, self.dual.z / n)
        # remove any residual real/dual coupling
        d = real.dot(dual)
        dual = UnitQuat(dual.w - d * real.w, dual.x - d * real.x,
                        dual.y - d * real.y, dual.z - d * real.z)
        return DualQuat(real, dual)

    def neg(self) -> "DualQuat":
        return DualQuat(self.real.neg(), self.dual.neg())

    def to_list(self) -> list[float]:
        return [
            self.real.w, self.real.x, self.real.y, self.real.z,
            self.dual.w, self.dual.x, self.dual.y, self.dual.z,
        ]

    @staticmethod
    def from_list(vals: list[float]) -> "DualQuat":
        if len(vals) != 8:
            raise InvalidInputError("dual quaternion needs 8 components")
        return DualQuat(UnitQuat(*vals[:4]), UnitQuat(*vals[4:]))


def dq_from_pose(p: Pose) -> DualQuat:
    """Encode a pose: real = rotation, dual = half translation times rotation."""
    if abs(p.rotation.norm() - 1.0) > UNIT_TOL:
        raise InvalidInputError("pose rotation is not unit-norm")
    qr = p.rotation
    t = UnitQuat(0.0, p.position.x, p.position.y, p.position.z)
    tq = t.mul(qr)
    qd = UnitQuat(0.5 * tq.w, 0.5 * tq.x, 0.5 * tq.y, 0.5 * tq.z)
    return DualQuat(qr, qd)


def dq_to_pose(q: DualQuat) -> Pose:
    """Decode: position is the vector part of 2 * dual * conj(real)."""
    q.check_unit()
    t = q.dual.mul(q.real.conj())
    return Pose(Vec3(2.0 * t.x, 2.0 * t.y, 2.0 * t.z), q.real)


def dq_mul(a: DualQuat, b: DualQuat) -> DualQuat:
    """Dual-quaternion product; applies b in a's frame (parent-then-child)."""
    real = a.real.mul(b.real)
    d1 = a.real.mul(b.dual)
    d2 = a.dual.mul(b.real)
    dual = UnitQuat(d1.w + d2.w, d1.x + d2.x, d1.y + d2.y, d1.z + d2.z)
    return DualQuat(real, dual).normalized()


def dq_conj(q: DualQuat) -> DualQuat:
    return DualQuat(q.real.conj(), q.dual.conj())


def _screw_power(q: DualQuat, t: float) -> DualQuat:
    """Raise a unit dual quaternion to power t via its screw parameters."""
    w = q.real.w
    vec = Vec3(q.real.x, q.real.y, q.real.z)
    sin_half = vec.norm()
    theta = 2.0 * math.atan2(sin_half, w)

    if theta < 1e-6:
        # near-zero rotation: pure translation, interpolate linearly
        d = q.dual
        return DualQuat(
            UnitQuat.identity(),
            UnitQuat(0.0, t * d.x, t * d.y, t * d.z),
        )

    axis = vec.scale(1.0 / sin_half)
    trans_q = q.dual.mul(q.real.conj())
    trans = Vec3(2.0 * trans_q.x, 2.0 * trans_q.y, 2.0 * trans_q.z)
    pitch_d = trans.dot(axis)
    # screw moment of the axis line
    half = theta * 0.5
    moment = (
        trans.cross(axis)
        + (trans - axis.scale(pitch_d)).scale(1.0 / math.tan(half))
    ).scale(0.5)

    theta_t = theta * t
    d_t = pitch_d * t
    half_t = theta_t * 0.5
    s, c = math.sin(half_t), math.cos(half_t)
    real = UnitQuat(c, axis.x * s, axis.y * s, axis.z * s)
    dv = moment.scale(s) + axis.scale(0.5 * d_t * c)
    dual = UnitQuat(-0.5 * d_t * s, dv.x, dv.y, dv.z)
    return DualQuat(real, dual)


def dq_sclerp(a: DualQuat, b: DualQuat, t: float) -> DualQuat:
    """Screw linear interpolation a * (a^-1 b)^t; constant-velocity screw motion."""
    if not 0.0 <= t <= 1.0:
        raise InvalidInputError(f"interpolation parameter {t} outside [0, 1]")
    a.check_unit()
    b.check_unit()
    if a.real.dot(b.real) < 0.0:
        b = b.neg()
    if t == 0.0:
        return a
    diff = dq_mul(dq_conj(a), b)
    return dq_mul(a, _screw_power(diff, t)).normalized()


def rot_angle_between(q1: UnitQuat, q2: UnitQuat) -> float:
    """Rotation angle between two orientations, in degrees, in [0, 180].

    Equivalent to 2*acos(|q1.q2|) but computed through the relative rotation
    with atan2, which stays accurate near 0 and 180 degrees.
    """
    r = q1.conj().mul(q2)
    vec_norm = math.sqrt(r.x * r.x + r.y * r.y + r.z * r.z)
    return math.degrees(2.0 * math.atan2(vec_norm, abs(r.w)))


@dataclass
class SceneObject:
    id: str
    pose: Pose
    initial_pose: Pose
    tags: frozenset[str] = frozenset()
    held_by: Optional[tuple[str, str]] = None  # (client id, hand id)
    tint: Optional[tuple[str, int]] = None  # (color, expiry tick)

    def copy(self) -> "SceneObject":
        return replace(self)


@dataclass
class SceneState:
    tick: int = 0
    objects: dict[str, SceneObject] = field(default_factory=dict)
    hands: dict[tuple[str, str], Pose] = field(default_factory=dict)

    def copy(self) -> "SceneState":
        return SceneState(
            tick=self.tick,
            objects={k: v.copy() for k, v in self.objects.items()},
            hands=dict(self.hands),
        )


_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a(data: bytes, h: int = _FNV_OFFSET) -> int:
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def _quantize(value: float, quantum: float) -> int:
    return int(round(value / quantum))


def canonical_pose_bytes(pose: Pose) -> bytes:
    """Quantized, sign-normalized serialization of a pose."""
    q = pose.rotation
    if q.w < 0.0:
        q = q.neg()
    return struct.pack(
        "<7q",
        _quantize(pose.position.x, POS_QUANTUM),
        _quantize(pose.position.y, POS_QUANTUM),
        _quantize(pose.position.z, POS_QUANTUM),
        _quantize(q.w, ROT_QUANTUM),
        _quantize(q.x, ROT_QUANTUM),
        _quantize(q.y, ROT_QUANTUM),
        _quantize(q.z, ROT_QUANTUM),
    )


def state_hash(s: SceneState) -> int:
    """FNV-1a over a canonical serialization; hands and tick excluded."""
    h = _FNV_OFFSET
    for obj_id in sorted(s.objects):
        obj = s.objects[obj_id]
        h = _fnv1a(obj_id.encode("utf-8") + b"\x00", h)
        h = _fnv1a(canonical_pose_bytes(obj.pose), h)
        if obj.held_by is not None:
            h = _fnv1a(f"held:{obj.held_by[0]}/{obj.held_by[1]}".encode(), h)
        if obj.tint is not None:
            h = _fnv1a(f"tint:{obj.tint[0]}:{obj.tint[1]}".encode(), h)
        h = _fnv1a(b"\x01", h)
    return h


def poses_hash(poses: dict[str, Pose]) -> int:
    """Hash of quantized poses only; used to compare client replicas to the server."""
    h = _FNV_OFFSET
    for obj_id in sorted(poses):
        h = _fnv1a(obj_id.encode("utf-8") + b"\x00", h)
        h = _fnv1a(canonical_pose_bytes(poses[obj_id]), h)
    return h
