"""Grab mechanics, hologram insertion checks, sweep tracking, and two-bone IK.

Grabbing supports two attachment modes: rigid parenting and NewtonVR-style
velocity servoing toward the hand-relative target.  All functions mutate the
SceneState they are given and must only be called from the engine-owning
execution context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    InvalidInputError,
    Pose,
    SceneState,
    UnitQuat,
    Vec3,
    rot_angle_between,
)

DEFAULT_GAIN = 20.0       # 1/s
DEFAULT_V_MAX = 10.0      # m/s
DEFAULT_EPS_POS = 0.05    # m
DEFAULT_EPS_ROT = 15.0    # degrees
THROW_TICKS = 10          # post-release coast with linear damping

WORLD_UP = Vec3(0.0, 1.0, 0.0)


class GrabRejected(Exception):
    """Grab attempt refused; `warn` says whether the user should be notified."""

    def __init__(self, reason: str, warn: bool):
        self.reason = reason
        self.warn = warn
        super().__init__(reason)


@dataclass
class GrabBinding:
    object_id: str
    hand: tuple[str, str]  # (client id, hand id)
    mode: str              # "velocity" | "parenting"
    offset: Pose           # object pose in the hand frame at grab time
    gain: float = DEFAULT_GAIN
    v_max: float = DEFAULT_V_MAX


@dataclass(frozen=True)
class InsertTolerance:
    eps_pos: float = DEFAULT_EPS_POS
    eps_rot: float = DEFAULT_EPS_ROT


def grab_attach(scene: SceneState, hand: tuple[str, str], object_id: str,
                mode: str = "velocity") -> GrabBinding:
    """Bind an interactable object to a hand, recording the grab-time offset."""
    obj = scene.objects.get(object_id)
    if obj is None:
        raise GrabRejected(f"no such object '{object_id}'", warn=False)
    if "interactable" not in obj.tags:
        raise GrabRejected(f"object '{object_id}' is not interactable", warn=False)
    if obj.held_by is not None:
        raise GrabRejected(f"object '{object_id}' is already held", warn=True)
    hand_pose = scene.hands.get(hand)
    if hand_pose is None:
        raise GrabRejected(f"no pose known for hand {hand}", warn=False)
    offset = hand_pose.inverse().compose(obj.pose)
    obj.held_by = hand
    return GrabBinding(object_id=object_id, hand=hand, mode=mode, offset=offset)


def grab_release(scene: SceneState, binding: GrabBinding) -> None:
    obj = scene.objects.get(binding.object_id)
    if obj is not None and obj.held_by == binding.hand:
        obj.held_by = None


def grab_step(scene: SceneState, bindings: list[GrabBinding], dt: float) -> None:
    """Advance every held object one tick toward its hand-relative target."""
    for binding in bindings:
        obj = scene.objects.get(binding.object_id)
        hand_pose = scene.hands.get(binding.hand)
        if obj is None or hand_pose is None:
            continue
        target = hand_pose.compose(binding.offset)
        if binding.mode == "parenting":
            obj.pose = target
            continue
        # velocity servo: clamp speed, never overshoot
        delta = target.position - obj.pose.position
        dist = delta.norm()
        if dist > 0.0:
            speed = min(binding.gain * dist, binding.v_max)
            step = min(speed * dt, dist)
            new_pos = obj.pose.position + delta.scale(step / dist)
        else:
            new_pos = obj.pose.position
        theta = rot_angle_between(obj.pose.rotation, target.rotation)
        if theta > 1e-12:
            frac = min(binding.gain * dt * theta, theta) / theta
            new_rot = _quat_step(obj.pose.rotation, target.rotation, frac)
        else:
            new_rot = target.rotation
        obj.pose = Pose(new_pos, new_rot)


def _quat_step(a: UnitQuat, b: UnitQuat, t: float) -> UnitQuat:
    """Rotate from a toward b by fraction t along the shortest arc."""
    dot = a.dot(b)
    if dot < 0.0:
        b, dot = b.neg(), -dot
    dot = min(1.0, dot)
    theta0 = math.acos(dot)
    if theta0 < 1e-9:
        return b
    s1 = math.sin((1 - t) * theta0) / math.sin(theta0)
    s2 = math.sin(t * theta0) / math.sin(theta0)
    return UnitQuat(
        s1 * a.w + s2 * b.w, s1 * a.x + s2 * b.x,
        s1 * a.y + s2 * b.y, s1 * a.z + s2 * b.z,
    ).normalized()


def check_insert(object_pose: Pose, target: Pose,
                 tol: InsertTolerance = InsertTolerance()) -> bool:
    """Inside both the position and rotation tolerance of the hologram target."""
    if (object_pose.position - target.position).norm() > tol.eps_pos:
        return False
    return rot_angle_between(object_pose.rotation, target.rotation) <= tol.eps_rot


@dataclass
class IkChain:
    base: Vec3
    l1: float
    l2: float
    shoulder_azimuth_deg: float = 0.0
    shoulder_elevation_deg: float = 0.0
    elbow_flexion_deg: float = 0.0
    elbow_bend_sign: int = -1  # side of the first link the forearm rotates toward

    def __post_init__(self):
        if self.l1 <= 0 or self.l2 <= 0:
            raise InvalidInputError("ik link lengths must be positive")


def _rotate_about(v: Vec3, axis: Vec3, angle_rad: float) -> Vec3:
    # Rodrigues rotation
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    return (v.scale(c)
            + axis.cross(v).scale(s)
            + axis.scale(axis.dot(v) * (1.0 - c)))


def _bend_normal(direction: Vec3) -> Vec3:
    n = direction.cross(WORLD_UP)
    if n.norm() < 1e-9:
        # target straight up or down: any horizontal bend plane works
        n = Vec3(0.0, 0.0, 1.0)
    return n.normalized()


def solve_two_bone_ik(chain: IkChain, target: Vec3) -> IkChain:
    """Law-of-cosines two-bone solve; the elbow bends in the plane containing
    the world up axis.  Unreachable targets clamp to the closest reachable
    distance along the target direction."""
    for comp in (target.x, target.y, target.z):
        if not math.isfinite(comp):
            raise InvalidInputError("ik target must be finite")
    l1, l2 = chain.l1, chain.l2
    delta = target - chain.base
    raw_d = delta.norm()
    if raw_d < 1e-12:
        direction = Vec3(1.0, 0.0, 0.0)
    else:
        direction = delta.scale(1.0 / raw_d)
    d = min(max(raw_d, abs(l1 - l2)), l1 + l2)

    cos_interior = (l1 * l1 + l2 * l2 - d * d) / (2.0 * l1 * l2)
    cos_interior = min(1.0, max(-1.0, cos_interior))
    flexion = 180.0 - math.degrees(math.acos(cos_interior))

    cos_alpha = (l1 * l1 + d * d - l2 * l2) / (2.0 * l1 * d)
    cos_alpha = min(1.0, max(-1.0, cos_alpha))
    alpha = math.acos(cos_alpha)

    normal = _bend_normal(direction)
    u1 = _rotate_about(direction, normal, alpha)
    u2 = (direction.scale(d) - u1.scale(l1)).scale(1.0 / l2)
    link_normal = _bend_normal_for_link(u1)
    signed = math.atan2(u1.cross(u2).dot(link_normal), u1.dot(u2))
    chain.shoulder_elevation_deg = math.degrees(math.asin(min(1.0, max(-1.0, u1.y))))
    chain.shoulder_azimuth_deg = math.degrees(math.atan2(u1.z, u1.x))
    chain.elbow_flexion_deg = flexion
    chain.elbow_bend_sign = -1 if signed < 0 else 1
    return chain


def ik_forward(chain: IkChain) -> tuple[Vec3, Vec3]:
    """Elbow and end-effector positions from the chain's joint angles."""
    el = math.radians(chain.shoulder_elevation_deg)
    az = math.radians(chain.shoulder_azimuth_deg)
    u1 = Vec3(math.cos(el) * math.cos(az), math.sin(el), math.cos(el) * math.sin(az))
    normal = _bend_normal_for_link(u1)
    u2 = _rotate_about(
        u1, normal, chain.elbow_bend_sign * math.radians(chain.elbow_flexion_deg))
    elbow = chain.base + u1.scale(chain.l1)
    end = elbow + u2.scale(chain.l2)
    return elbow, end


def _bend_normal_for_link(u1: Vec3) -> Vec3:
    n = u1.cross(WORLD_UP)
    if n.norm() < 1e-9:
        n = Vec3(0.0, 0.0, 1.0)
    return n.normalized()


@dataclass
class SweepRegion:
    center: Vec3
    radius: float


def sweep_accumulate(progress: float, prev: Vec3, cur: Vec3,
                     region: SweepRegion) -> float:
    """Add stroke length only when the whole stroke stays inside the region."""
    if progress < 0.0:
        raise InvalidInputError("sweep progress cannot be negative")
    inside_prev = (prev - region.center).norm() <= region.radius
    inside_cur = (cur - region.center).norm() <= region.radius
    if inside_prev and inside_cur:
        return progress + (cur - prev).norm()
    return progress


@dataclass
class ThrowState:
    object_id: str
    velocity: Vec3
    ticks_left: int = THROW_TICKS
    initial_ticks: int = THROW_TICKS


def throw_step(scene: SceneState, throws: list[ThrowState], dt: float) -> list[ThrowState]:
    """Coast released objects with linearly damped velocity, then freeze."""
    survivors: list[ThrowState] = []
    for throw in throws:
        obj = scene.objects.get(throw.object_id)
        if obj is None or obj.held_by is not None or throw.ticks_left <= 0:
            continue
        damp = throw.ticks_left / throw.initial_ticks
        obj.pose = Pose(
            obj.pose.position + throw.velocity.scale(damp * dt), obj.pose.rotation)
        throw.ticks_left -= 1
        if throw.ticks_left > 0:
            survivors.append(throw)
    return survivors
