"""Builders for scripted raw-event logs.

One semantic plan can be lowered to either an AR gesture script or a VR
controller script.  Both lowerings drive the hand through identical pose
waypoints at identical ticks, so a deterministic engine reaches the same
final state hash from either - the cross-reality equivalence the engine
promises.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .core import Pose, UnitQuat, Vec3
from .devices import AR_HAND_DEPTH_M, FORWARD, RawEvent


def look_rotation(direction: Vec3) -> UnitQuat:
    """Rotation taking the +z forward axis onto the given direction."""
    d = direction.normalized()
    dot = max(-1.0, min(1.0, FORWARD.dot(d)))
    if dot > 1.0 - 1e-12:
        return UnitQuat.identity()
    if dot < -1.0 + 1e-12:
        return UnitQuat.from_axis_angle(Vec3(0, 1, 0), 180.0)
    axis = FORWARD.cross(d)
    angle = math.degrees(math.acos(dot))
    return UnitQuat.from_axis_angle(axis, angle)


def head_pose_for_hand(hand: Pose) -> Pose:
    """Head pose whose gaze-ray virtual hand lands exactly on `hand`."""
    back = hand.rotation.rotate(FORWARD).scale(-AR_HAND_DEPTH_M)
    return Pose(hand.position + back, hand.rotation)


@dataclass
class ScriptBuilder:
    """Emits raw events for one client; `profile` selects the lowering."""

    profile: str  # "AR" | "VR"
    client: str = "c1"
    vr_hand: str = "right"
    tick: int = 0
    events: list[RawEvent] = field(default_factory=list)

    def wait(self, ticks: int) -> "ScriptBuilder":
        self.tick += ticks
        return self

    def _raw(self, kind: str, **kwargs) -> None:
        self.events.append(RawEvent(kind=kind, client=self.client,
                                    tick=self.tick, **kwargs))

    def move_hand(self, pose: Pose) -> "ScriptBuilder":
        if self.profile == "AR":
            self._raw("ARHeadPose", pose=head_pose_for_hand(pose))
        else:
            self._raw("VRHandPose", hand=self.vr_hand, pose=pose)
        return self

    def grab(self) -> "ScriptBuilder":
        if self.profile == "AR":
            self._raw("ARPinchStart")
        else:
            self._raw("VRGripDown", hand=self.vr_hand)
        return self

    def release(self) -> "ScriptBuilder":
        if self.profile == "AR":
            self._raw("ARPinchEnd")
        else:
            self._raw("VRGripUp", hand=self.vr_hand)
        return self

    def activate_tool(self) -> "ScriptBuilder":
        if self.profile == "AR":
            self._raw("ARVoice", word="use")
        else:
            self._raw("VRTriggerDown", hand=self.vr_hand)
        return self

    def select_quiz(self, choice_pose: Pose) -> "ScriptBuilder":
        if self.profile == "AR":
            head = Pose(choice_pose.position - Vec3(0, 0, 1.0),
                        look_rotation(Vec3(0, 0, 1.0)))
            self._raw("ARHeadPose", pose=head)
            self._raw("ARTapUp")
        else:
            self._raw("VRHandPose", hand=self.vr_hand, pose=choice_pose)
            self._raw("VRTriggerDown", hand=self.vr_hand)
        return self

    # composite steps

    def carry(self, from_pose: Pose, to_pose: Pose,
              settle_ticks: int = 80) -> "ScriptBuilder":
        """Grab at one pose, move the hand, let the servo settle, release."""
        self.move_hand(from_pose)
        self.wait(1)
        self.grab()
        self.move_hand(to_pose)
        self.wait(settle_ticks)
        self.release()
        return self

    def run_tool(self, tool_pose: Pose, region_center: Vec3,
                 active_ticks: int, settle_ticks: int = 80) -> "ScriptBuilder":
        self.move_hand(tool_pose)
        self.wait(1)
        self.grab()
        self.move_hand(Pose(region_center, tool_pose.rotation))
        self.wait(settle_ticks)
        self.activate_tool()
        self.wait(active_ticks)
        self.release()
        return self


def pose_to_json(pose: Pose) -> dict:
    q = pose.rotation
    return {"p": [pose.position.x, pose.position.y, pose.position.z],
            "q": [q.w, q.x, q.y, q.z]}


def pose_from_json(data: dict) -> Pose:
    return Pose(Vec3(*data["p"]), UnitQuat(*data["q"]))


def raw_to_json(ev: RawEvent) -> dict:
    data: dict = {"kind": ev.kind}
    if ev.hand is not None:
        data["hand"] = ev.hand
    if ev.pose is not None:
        data["pose"] = pose_to_json(ev.pose)
    if ev.word is not None:
        data["word"] = ev.word
    return data


def raw_from_json(data: dict, client: str, tick: int) -> RawEvent:
    return RawEvent(
        kind=data["kind"], client=client, tick=tick,
        hand=data.get("hand"),
        pose=pose_from_json(data["pose"]) if "pose" in data else None,
        word=data.get("word"),
    )


def write_script(path: str, events: list[RawEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in sorted(events, key=lambda e: e.tick):
            fh.write(json.dumps({"tick": ev.tick, "client": ev.client,
                                 "raw": raw_to_json(ev)},
                                separators=(",", ":")) + "\n")


def read_script(path: str) -> list[RawEvent]:
    events: list[RawEvent] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            data = json.loads(line)
            events.append(raw_from_json(data["raw"], data["client"], data["tick"]))
    return events
