"""Server-authoritative session replication over a JSON-lines protocol.

Clients send raw inputs; the single server engine simulates and broadcasts
reliable outputs plus an unreliable pose stream (periodic keyframes and
delta-thresholded per-object updates).  Replicas smooth remote poses with
dual-quaternion ScLERP behind a jitter buffer.  A seeded simulator injects
latency, jitter, and loss for tests.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field, fields
from typing import Optional

from .core import (
    DualQuat,
    Pose,
    TICK_SECONDS,
    dq_from_pose,
    dq_sclerp,
    dq_to_pose,
    poses_hash,
    state_hash,
)
from .devices import DeviceProfile, RawEvent, map_raw_input
from .dsl import RuntimeProgram
from .runtime import (
    EngineState,
    OutputEvent,
    add_client,
    drain_outputs,
    engine_handle,
    engine_new,
    engine_tick,
    remove_client,
)
from .scripting import raw_from_json, raw_to_json

KEYFRAME_INTERVAL_TICKS = 10
HASH_INTERVAL_TICKS = 250
INTERPOLATION_DELAY_MS = 100.0
MAX_CLIENTS = 8
DELTA_POS_M = 1e-3
DELTA_ROT_DEG = 0.5

TICK_MS = TICK_SECONDS * 1000.0

RELIABLE_TAGS = {"hello", "welcome", "input", "act", "out", "hash", "bye"}
UNRELIABLE_TAGS = {"pose", "key"}


class MessageError(ValueError):
    """Malformed or invariant-violating wire message."""


@dataclass(frozen=True)
class WireMessage:
    t: str
    session: Optional[str] = None
    profile: Optional[str] = None
    client: Optional[str] = None
    snapshot: Optional[dict] = None
    digest: Optional[str] = None
    tick: Optional[int] = None
    raw: Optional[dict] = None
    id: Optional[str] = None
    dq: Optional[tuple[float, ...]] = None
    poses: Optional[dict] = None
    path: Optional[str] = None
    status: Optional[str] = None
    event: Optional[dict] = None
    hash: Optional[int] = None
    reason: Optional[str] = None

    @property
    def reliable(self) -> bool:
        return self.t in RELIABLE_TAGS


_FIELD_NAMES = [f.name for f in fields(WireMessage)]

_REQUIRED = {
    "hello": ["session", "profile"],
    "welcome": ["client", "snapshot", "digest"],
    "input": ["client", "tick", "raw"],
    "pose": ["id", "dq", "tick"],
    "key": ["tick", "poses"],
    "act": ["path", "status"],
    "out": ["tick", "event"],
    "hash": ["tick", "hash"],
    "bye": [],
}


def encode(msg: WireMessage) -> bytes:
    """One LF-terminated JSON object per message."""
    data: dict = {"t": msg.t}
    for name in _FIELD_NAMES[1:]:
        value = getattr(msg, name)
        if value is not None:
            data[name] = list(value) if isinstance(value, tuple) else value
    return (json.dumps(data, separators=(",", ":"), sort_keys=True) + "\n").encode()


def decode(line: bytes | str) -> WireMessage:
    if isinstance(line, bytes):
        line = line.decode("utf-8", errors="replace")
    line = line.strip()
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MessageError(f"malformed JSON: {exc}") from exc
    if not isinstance(data, dict) or "t" not in data:
        raise MessageError("missing variant tag 't'")
    tag = data["t"]
    if tag not in _REQUIRED:
        raise MessageError(f"unknown variant tag '{tag}'")
    for key in _REQUIRED[tag]:
        if key not in data:
            raise MessageError(f"'{tag}' message missing field '{key}'")
    unknown = set(data) - set(_FIELD_NAMES)
    if unknown:
        raise MessageError(f"unknown field '{sorted(unknown)[0]}'")
    if "dq" in data:
        dq_vals = data["dq"]
        if not isinstance(dq_vals, list) or len(dq_vals) != 8:
            raise MessageError("field 'dq' must hold 8 reals")
        data["dq"] = tuple(float(v) for v in dq_vals)
        _check_unit_dq(data["dq"])
    if "poses" in data and isinstance(data["poses"], dict):
        for obj_id, vals in data["poses"].items():
            if not isinstance(vals, list) or len(vals) != 8:
                raise MessageError(f"field 'poses[{obj_id}]' must hold 8 reals")
            _check_unit_dq(vals)
    return WireMessage(**data)


def _check_unit_dq(vals) -> None:
    dq = DualQuat.from_list(list(vals))
    if abs(dq.real.norm() - 1.0) > 1e-6 or abs(dq.real.dot(dq.dual)) > 1e-6:
        raise MessageError("field 'dq' is non-unit")


def pose_wire(pose: Pose) -> list[float]:
    return dq_from_pose(pose).to_list()


def pose_unwire(vals) -> Pose:
    return dq_to_pose(DualQuat.from_list(list(vals)))


def output_to_json(out: OutputEvent) -> dict:
    data: dict = {"kind": out.kind}
    for name in ("object_id", "text", "level", "color", "duration_ticks",
                 "path", "tick", "choice", "correct"):
        value = getattr(out, name)
        if value is not None:
            data[name] = value
    if out.pose is not None:
        data["pose"] = pose_wire(out.pose)
    if out.anchor is not None:
        data["anchor"] = [out.anchor.x, out.anchor.y, out.anchor.z]
    return data


def output_from_json(data: dict) -> OutputEvent:
    from .core import Vec3
    kwargs = {k: data[k] for k in ("object_id", "text", "level", "color",
                                   "duration_ticks", "path", "tick", "choice",
                                   "correct") if k in data}
    if "pose" in data:
        kwargs["pose"] = pose_unwire(data["pose"])
    if "anchor" in data:
        kwargs["anchor"] = Vec3(*data["anchor"])
    return OutputEvent(kind=data["kind"], **kwargs)


@dataclass(frozen=True)
class NetSimConfig:
    latency_ms: float = 0.0
    jitter_ms: float = 0.0
    loss: float = 0.0
    seed: int = 0


class NetSim:
    """Deterministic latency/jitter/loss simulator.

    Reliable-class messages are never dropped and keep per-link order;
    unreliable messages may be dropped and arrive jittered.
    """

    def __init__(self, cfg: NetSimConfig):
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self._queue: list[tuple[float, int, str, WireMessage]] = []
        self._seq = 0
        self._last_reliable: dict[str, float] = {}

    def send(self, link: str, msg: WireMessage, now_ms: float) -> None:
        if msg.reliable:
            due = now_ms + self.cfg.latency_ms
            due = max(due, self._last_reliable.get(link, -1.0))
            self._last_reliable[link] = due
        else:
            if self.rng.random() < self.cfg.loss:
                return
            jitter = self.rng.uniform(-self.cfg.jitter_ms, self.cfg.jitter_ms) \
                if self.cfg.jitter_ms > 0 else 0.0
            due = now_ms + self.cfg.latency_ms + jitter
        heapq.heappush(self._queue, (due, self._seq, link, msg))
        self._seq += 1

    def poll(self, now_ms: float) -> list[tuple[str, WireMessage]]:
        due: list[tuple[str, WireMessage]] = []
        while self._queue and self._queue[0][0] <= now_ms:
            _, _, link, msg = heapq.heappop(self._queue)
            due.append((link, msg))
        return due


class SessionFullError(Exception):
    pass


class ServerSession:
    """Owns the authoritative engine; turns inputs into broadcast traffic."""

    def __init__(self, program: RuntimeProgram, seed: int,
                 max_clients: int = MAX_CLIENTS,
                 keyframe_interval: int = KEYFRAME_INTERVAL_TICKS,
                 hash_interval: int = HASH_INTERVAL_TICKS):
        self.program = program
        self.state: EngineState = engine_new(program, seed)
        self.max_clients = max_clients
        self.keyframe_interval = keyframe_interval
        self.hash_interval = hash_interval
        self.profiles: dict[str, DeviceProfile] = {}
        self._next_client = 1
        # joiners receive a snapshot, so deltas are relative to the start
        self._last_sent: dict[str, Pose] = {
            oid: obj.pose for oid, obj in self.state.scene.objects.items()}
        self._last_statuses: list[str] = list(self.state.statuses)
        self._startup_outputs = drain_outputs(self.state)
        self._pending_broadcast: list[WireMessage] = []
        self.input_log: list[WireMessage] = []

    def hello(self, msg: WireMessage) -> WireMessage:
        """Join: returns Welcome, or a refusing Bye when at capacity."""
        if len(self.profiles) >= self.max_clients:
            return WireMessage(t="bye", reason="session full")
        client_id = f"c{self._next_client}"
        self._next_client += 1
        self.profiles[client_id] = DeviceProfile.of(msg.profile)
        add_client(self.state, client_id)
        self._pending_broadcast.append(WireMessage(
            t="out", tick=self.state.scene.tick,
            event={"kind": "Notification", "level": "info",
                   "text": f"{client_id} joined ({msg.profile})"}))
        return WireMessage(t="welcome", client=client_id,
                           snapshot=self.snapshot(), digest=self.program.digest)

    def goodbye(self, client_id: str) -> None:
        if client_id in self.profiles:
            del self.profiles[client_id]
            remove_client(self.state, client_id)
            self._pending_broadcast.append(WireMessage(
                t="out", tick=self.state.scene.tick,
                event={"kind": "Notification", "level": "info",
                       "text": f"{client_id} left"}))

    def snapshot(self) -> dict:
        return {
            "tick": self.state.scene.tick,
            "objects": {oid: pose_wire(obj.pose)
                        for oid, obj in self.state.scene.objects.items()},
        }

    def handle_input(self, msg: WireMessage) -> None:
        """Queue-less application: caller delivers inputs in receive order."""
        client = msg.client
        profile = self.profiles.get(client)
        if profile is None:
            raise MessageError(f"input from unknown client '{client}'")
        self.input_log.append(msg)
        raw = raw_from_json(msg.raw, client, min(msg.tick, self.state.scene.tick))
        for canonical in map_raw_input(profile, raw, self.state.scene):
            engine_handle(self.state, canonical)

    def step(self) -> list[WireMessage]:
        """Advance one tick and produce the broadcast batch for this tick."""
        engine_tick(self.state, 1)
        tick = self.state.scene.tick
        batch: list[WireMessage] = []

        batch.extend(self._pending_broadcast)
        self._pending_broadcast = []
        outputs = self._startup_outputs + drain_outputs(self.state)
        self._startup_outputs = []
        for out in outputs:
            batch.append(WireMessage(t="out", tick=tick, event=output_to_json(out)))

        for i, status in enumerate(self.state.statuses):
            if status != self._last_statuses[i]:
                batch.append(WireMessage(t="act",
                                         path=self.program.actions[i].path,
                                         status=status))
        self._last_statuses = list(self.state.statuses)

        objects = self.state.scene.objects
        if tick % self.keyframe_interval == 0:
            poses = {oid: pose_wire(obj.pose) for oid, obj in objects.items()}
            batch.append(WireMessage(t="key", tick=tick, poses=poses))
            self._last_sent = {oid: obj.pose for oid, obj in objects.items()}
        else:
            from .core import rot_angle_between
            for oid in sorted(objects):
                obj = objects[oid]
                last = self._last_sent.get(oid)
                moved = (last is None
                         or (obj.pose.position - last.position).norm() > DELTA_POS_M
                         or rot_angle_between(obj.pose.rotation,
                                              last.rotation) > DELTA_ROT_DEG)
                if moved:
                    batch.append(WireMessage(
                        t="pose", id=oid, dq=tuple(pose_wire(obj.pose)), tick=tick))
                    self._last_sent[oid] = obj.pose

        if tick % self.hash_interval == 0:
            batch.append(WireMessage(t="hash", tick=tick,
                                     hash=state_hash(self.state.scene)))
        return batch

    def object_poses(self) -> dict[str, Pose]:
        return {oid: obj.pose for oid, obj in self.state.scene.objects.items()}

    def poses_digest(self) -> int:
        return poses_hash(self.object_poses())


class ClientReplica:
    """Jitter-buffered view of the replicated scene on one client."""

    def __init__(self, interpolation_delay_ms: float = INTERPOLATION_DELAY_MS):
        self.delay_ms = interpolation_delay_ms
        self.buffers: dict[str, list[tuple[int, DualQuat]]] = {}
        self.last_rendered: dict[str, Pose] = {}
        self.last_rendered_tick: float = -1.0

    def apply(self, msg: WireMessage) -> None:
        if msg.t == "welcome":
            tick = msg.snapshot["tick"]
            for oid, vals in msg.snapshot["objects"].items():
                self._insert(oid, tick, DualQuat.from_list(list(vals)))
        elif msg.t == "pose":
            self._insert(msg.id, msg.tick, DualQuat.from_list(list(msg.dq)))
        elif msg.t == "key":
            for oid in list(self.buffers):
                if oid not in msg.poses:
                    del self.buffers[oid]
                    self.last_rendered.pop(oid, None)
            for oid, vals in msg.poses.items():
                self._insert(oid, msg.tick, DualQuat.from_list(list(vals)))

    def _insert(self, oid: str, tick: int, dq: DualQuat) -> None:
        buf = self.buffers.setdefault(oid, [])
        # a sample is stale only if something newer is already buffered AND
        # the render position has moved past it; the newest sample is always
        # kept, since hold-at-newest needs it even when latency exceeds the
        # interpolation delay
        if buf and tick < buf[-1][0] and tick < self.last_rendered_tick:
            return
        for i, (t, _) in enumerate(buf):
            if t == tick:
                return  # duplicate delivery is idempotent
            if t > tick:
                buf.insert(i, (tick, dq))
                return
        buf.append((tick, dq))

    def render(self, now_ms: float) -> dict[str, Pose]:
        """Interpolated poses at now minus the interpolation delay."""
        render_tick = (now_ms - self.delay_ms) / TICK_MS
        out: dict[str, Pose] = {}
        for oid, buf in self.buffers.items():
            if not buf:
                if oid in self.last_rendered:
                    out[oid] = self.last_rendered[oid]
                continue
            pose = self._sample(buf, render_tick)
            if pose is None:
                pose = self.last_rendered.get(oid, dq_to_pose(buf[0][1]))
            out[oid] = pose
            self.last_rendered[oid] = pose
        if render_tick > self.last_rendered_tick:
            self.last_rendered_tick = render_tick
            for oid, buf in self.buffers.items():
                # keep the newest sample at-or-before render time (the left
                # bracket for the next frame) plus everything newer
                cut = 0
                for i, (t, _) in enumerate(buf):
                    if t <= render_tick:
                        cut = i
                self.buffers[oid] = buf[cut:]
        return out

    @staticmethod
    def _sample(buf: list[tuple[int, DualQuat]], render_tick: float) -> Optional[Pose]:
        if render_tick >= buf[-1][0]:
            return dq_to_pose(buf[-1][1])  # hold newest; no extrapolation
        if len(buf) < 2 or render_tick < buf[0][0]:
            return None
        for (t0, q0), (t1, q1) in zip(buf, buf[1:]):
            if t0 <= render_tick <= t1:
                span = t1 - t0
                frac = 0.0 if span == 0 else (render_tick - t0) / span
                return dq_to_pose(dq_sclerp(q0, q1, frac))
        return None

    def poses_digest(self) -> int:
        return poses_hash(dict(self.last_rendered))


@dataclass
class SimClient:
    profile: str
    events: list[RawEvent] = field(default_factory=list)
    client_id: Optional[str] = None
    start_tick: Optional[int] = None
    refused: bool = False
    cursor: int = 0
    replica: ClientReplica = field(default_factory=ClientReplica)
    delta_counts: dict[str, int] = field(default_factory=dict)
    keyframes: int = 0


@dataclass
class SimResult:
    session: ServerSession
    clients: dict[str, SimClient]
    ticks_run: int

    @property
    def complete(self) -> bool:
        return self.session.state.scenario_complete


def simulate_session(program: RuntimeProgram, clients: dict[str, SimClient],
                     cfg: NetSimConfig, seed: int = 0,
                     max_ticks: int = 5000,
                     trailing_ticks: int = 150) -> SimResult:
    """Drive a full server session over the simulated network.

    `clients` maps a local label to a SimClient carrying a device profile and
    a raw-event script; scripts start once the Welcome arrives.  Each entry's
    replica and traffic counters are filled in.  Deterministic for a fixed
    (program, clients, cfg, seed).
    """
    sim = NetSim(cfg)
    session = ServerSession(program, seed)
    for label in sorted(clients):
        sim.send(f"up:{label}", WireMessage(t="hello", session=program.name,
                                            profile=clients[label].profile), 0.0)
    complete_at: Optional[int] = None
    tick = 0
    while tick < max_ticks:
        tick += 1
        now = tick * TICK_MS
        for link, msg in sim.poll(now):
            kind, label = link.split(":", 1)
            if kind == "up":
                if msg.t == "hello":
                    reply = session.hello(msg)
                    if reply.t == "bye":
                        clients[label].refused = True
                    sim.send(f"down:{label}", reply, now)
                elif msg.t == "input":
                    session.handle_input(msg)
                elif msg.t == "bye":
                    session.goodbye(msg.client)
            else:
                sc = clients[label]
                if msg.t == "welcome":
                    sc.client_id = msg.client
                sc.replica.apply(msg)
                if msg.t == "pose":
                    sc.delta_counts[msg.id] = sc.delta_counts.get(msg.id, 0) + 1
                elif msg.t == "key":
                    sc.keyframes += 1
        for label in sorted(clients):
            sc = clients[label]
            if sc.client_id is None or sc.refused:
                continue
            if sc.start_tick is None:
                sc.start_tick = tick
            while (sc.cursor < len(sc.events)
                   and sc.events[sc.cursor].tick + sc.start_tick <= tick):
                ev = sc.events[sc.cursor]
                sc.cursor += 1
                sim.send(f"up:{label}",
                         WireMessage(t="input", client=sc.client_id, tick=tick,
                                     raw=raw_to_json(ev)), now)
        batch = session.step()
        for label, sc in clients.items():
            if sc.client_id is not None and not sc.refused:
                for msg in batch:
                    sim.send(f"down:{label}", msg, now)
        for sc in clients.values():
            if sc.client_id is not None and not sc.refused:
                sc.replica.render(now)
        if complete_at is None:
            scripts_done = all(sc.refused or sc.cursor >= len(sc.events)
                               for sc in clients.values())
            if session.state.scenario_complete or (scripts_done
                                                   and not sim._queue):
                complete_at = tick
        elif tick - complete_at >= trailing_ticks:
            break
    return SimResult(session=session, clients=clients, ticks_run=tick)
