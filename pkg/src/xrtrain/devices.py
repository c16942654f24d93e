"""Device profiles and the mapping from raw AR/VR input to canonical events.

An AR profile interacts through gaze + gestures + voice; a VR profile through
per-hand controllers.  Both are reduced to one device-independent event
vocabulary so the engine never sees hardware specifics.  The AR "hand" is a
single virtual hand riding the gaze ray at a fixed depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .core import Pose, SceneState, UnitQuat, Vec3

AR_FOV_DEG = 35.0
AR_HAND_DEPTH_M = 0.6
VR_GRAB_RADIUS_M = 0.15
AR_HAND_ID = "gaze"
HEAD_HAND_ID = "head"
VOICE_WORDS = {"use"}
QUIZ_CHOICE_PREFIX = "quiz:"

FORWARD = Vec3(0.0, 0.0, 1.0)  # +z is the head's forward axis

AR_CAPABILITIES = frozenset({"gesture_tap", "gesture_pinch", "voice"})
VR_CAPABILITIES = frozenset({"controller_grip", "controller_trigger"})


class ProtocolError(Exception):
    """A client sent an event outside its declared capabilities."""


@dataclass(frozen=True)
class DeviceProfile:
    kind: str  # "AR" | "VR"
    fov_deg: float = AR_FOV_DEG
    capabilities: frozenset[str] = frozenset()

    @staticmethod
    def ar() -> "DeviceProfile":
        return DeviceProfile(kind="AR", fov_deg=AR_FOV_DEG, capabilities=AR_CAPABILITIES)

    @staticmethod
    def vr() -> "DeviceProfile":
        return DeviceProfile(kind="VR", fov_deg=110.0, capabilities=VR_CAPABILITIES)

    @staticmethod
    def of(kind: str) -> "DeviceProfile":
        if kind == "AR":
            return DeviceProfile.ar()
        if kind == "VR":
            return DeviceProfile.vr()
        raise ProtocolError(f"unknown device profile '{kind}'")


@dataclass(frozen=True)
class RawEvent:
    kind: str       # ARTapDown, ARTapUp, ARPinchStart, ARPinchEnd, ARHeadPose,
                    # ARVoice, VRGripDown, VRGripUp, VRTriggerDown, VRTriggerUp,
                    # VRHandPose
    client: str
    tick: int
    hand: Optional[str] = None   # VR events
    pose: Optional[Pose] = None  # pose events
    word: Optional[str] = None   # ARVoice


RAW_KINDS_AR = {"ARTapDown", "ARTapUp", "ARPinchStart", "ARPinchEnd",
                "ARHeadPose", "ARVoice"}
RAW_KINDS_VR = {"VRGripDown", "VRGripUp", "VRTriggerDown", "VRTriggerUp",
                "VRHandPose"}


@dataclass(frozen=True)
class CanonicalEvent:
    kind: str       # GrabStart, Release, Activate, ToolActivate, QuizSelect,
                    # HandMoved, VoiceCommand
    client: str
    tick: int
    object_id: Optional[str] = None
    hand: Optional[str] = None
    choice: Optional[int] = None
    pose: Optional[Pose] = None
    word: Optional[str] = None


def gaze_pick(scene: SceneState, head: Pose, fov_deg: float) -> Optional[str]:
    """Nearest interactable (by gaze angle) within half the field of view.

    Ties on angle break by Euclidean distance, then lexicographic id.
    """
    if not 0.0 < fov_deg < 180.0:
        raise ValueError("fov must be in (0, 180) degrees")
    forward = head.rotation.rotate(FORWARD)
    half = fov_deg / 2.0
    best: Optional[tuple[float, float, str]] = None
    for obj_id in sorted(scene.objects):
        obj = scene.objects[obj_id]
        if "interactable" not in obj.tags:
            continue
        to_obj = obj.pose.position - head.position
        dist = to_obj.norm()
        if dist < 1e-9:
            continue
        cos_angle = min(1.0, max(-1.0, forward.dot(to_obj) / dist))
        angle = math.degrees(math.acos(cos_angle))
        if angle > half:
            continue
        key = (round(angle, 9), dist, obj_id)
        if best is None or key < best:
            best = key
    return None if best is None else best[2]


def _held_object(scene: SceneState, client: str,
                 hand: Optional[str] = None) -> Optional[tuple[str, str]]:
    """(object id, hand id) of something this client holds, if anything."""
    for obj in scene.objects.values():
        if obj.held_by is not None and obj.held_by[0] == client:
            if hand is None or obj.held_by[1] == hand:
                return obj.id, obj.held_by[1]
    return None


def _hand_holding(scene: SceneState, client: str, hand: str) -> bool:
    return _held_object(scene, client, hand) is not None


def _nearest_interactable(scene: SceneState, pos: Vec3,
                          radius: float) -> Optional[str]:
    best: Optional[tuple[float, str]] = None
    for obj_id in sorted(scene.objects):
        obj = scene.objects[obj_id]
        if "interactable" not in obj.tags or obj.held_by is not None:
            continue
        dist = (obj.pose.position - pos).norm()
        if dist > radius:
            continue
        if best is None or (dist, obj_id) < best:
            best = (dist, obj_id)
    return None if best is None else best[1]


def ar_hand_pose(head: Pose) -> Pose:
    forward = head.rotation.rotate(FORWARD)
    return Pose(head.position + forward.scale(AR_HAND_DEPTH_M), head.rotation)


def map_raw_input(profile: DeviceProfile, raw: RawEvent,
                  scene: SceneState) -> list[CanonicalEvent]:
    """Translate one raw device event into zero or more canonical events."""
    if profile.kind == "AR" and raw.kind not in RAW_KINDS_AR:
        raise ProtocolError(f"{raw.kind} not supported by an AR profile")
    if profile.kind == "VR" and raw.kind not in RAW_KINDS_VR:
        raise ProtocolError(f"{raw.kind} not supported by a VR profile")

    if profile.kind == "AR":
        return _map_ar(profile, raw, scene)
    return _map_vr(raw, scene)


def _map_ar(profile: DeviceProfile, raw: RawEvent,
            scene: SceneState) -> list[CanonicalEvent]:
    client = raw.client
    head = scene.hands.get((client, HEAD_HAND_ID))

    if raw.kind == "ARHeadPose":
        assert raw.pose is not None
        hand = ar_hand_pose(raw.pose)
        return [
            CanonicalEvent("HandMoved", client, raw.tick, hand=HEAD_HAND_ID,
                           pose=raw.pose),
            CanonicalEvent("HandMoved", client, raw.tick, hand=AR_HAND_ID, pose=hand),
        ]

    if raw.kind == "ARPinchStart":
        if head is None or _hand_holding(scene, client, AR_HAND_ID):
            return []
        picked = gaze_pick(scene, head, profile.fov_deg)
        if picked is None:
            return []
        return [CanonicalEvent("GrabStart", client, raw.tick,
                               object_id=picked, hand=AR_HAND_ID)]

    if raw.kind == "ARPinchEnd":
        if not _hand_holding(scene, client, AR_HAND_ID):
            return []
        return [CanonicalEvent("Release", client, raw.tick, hand=AR_HAND_ID)]

    if raw.kind == "ARTapUp":
        if head is None:
            return []
        picked = gaze_pick(scene, head, profile.fov_deg)
        if picked is None:
            return []
        if picked.startswith(QUIZ_CHOICE_PREFIX):
            choice = int(picked[len(QUIZ_CHOICE_PREFIX):])
            return [CanonicalEvent("QuizSelect", client, raw.tick, choice=choice)]
        return [CanonicalEvent("Activate", client, raw.tick, object_id=picked)]

    if raw.kind == "ARTapDown":
        return []

    if raw.kind == "ARVoice":
        if raw.word in VOICE_WORDS:
            held = _held_object(scene, client)
            if held is not None:
                return [CanonicalEvent("ToolActivate", client, raw.tick, hand=held[1])]
        return [CanonicalEvent("VoiceCommand", client, raw.tick, word=raw.word)]

    return []


def _map_vr(raw: RawEvent, scene: SceneState) -> list[CanonicalEvent]:
    client = raw.client

    if raw.kind == "VRHandPose":
        assert raw.pose is not None and raw.hand is not None
        return [CanonicalEvent("HandMoved", client, raw.tick, hand=raw.hand,
                               pose=raw.pose)]

    if raw.kind == "VRGripDown":
        hand_pose = scene.hands.get((client, raw.hand))
        if hand_pose is None or _hand_holding(scene, client, raw.hand):
            return []
        picked = _nearest_interactable(scene, hand_pose.position, VR_GRAB_RADIUS_M)
        if picked is None:
            return []
        return [CanonicalEvent("GrabStart", client, raw.tick,
                               object_id=picked, hand=raw.hand)]

    if raw.kind == "VRGripUp":
        if not _hand_holding(scene, client, raw.hand):
            return []
        return [CanonicalEvent("Release", client, raw.tick, hand=raw.hand)]

    if raw.kind == "VRTriggerDown":
        held = _held_object(scene, client, raw.hand)
        if held is not None:
            obj = scene.objects[held[0]]
            if "tool" in obj.tags:
                return [CanonicalEvent("ToolActivate", client, raw.tick, hand=raw.hand)]
            return []
        # empty hand: trigger near a quiz choice selects it
        hand_pose = scene.hands.get((client, raw.hand))
        if hand_pose is None:
            return []
        for obj_id in sorted(scene.objects):
            if not obj_id.startswith(QUIZ_CHOICE_PREFIX):
                continue
            obj = scene.objects[obj_id]
            if (obj.pose.position - hand_pose.position).norm() <= VR_GRAB_RADIUS_M:
                choice = int(obj_id[len(QUIZ_CHOICE_PREFIX):])
                return [CanonicalEvent("QuizSelect", client, raw.tick, choice=choice)]
        return []

    if raw.kind == "VRTriggerUp":
        return []

    return []
