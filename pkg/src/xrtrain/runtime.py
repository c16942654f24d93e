"""The action state machine driving a compiled scenario program.

Actions run strictly in program order.  The engine consumes canonical events,
mutates the scene through the interaction layer on a fixed 50 Hz tick, and
emits output events (holograms, aidlines, notifications, tints, narration,
quiz feedback, completions).  All mutation goes through engine_handle and
engine_tick on a single owning execution context.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .core import (
    InvalidInputError,
    Pose,
    SceneObject,
    SceneState,
    TICK_SECONDS,
    UnitQuat,
    Vec3,
    state_hash,
)
from .devices import CanonicalEvent, ProtocolError, QUIZ_CHOICE_PREFIX
from .dsl import ActionDef, RuntimeProgram
from .interaction import (
    GrabBinding,
    GrabRejected,
    InsertTolerance,
    SweepRegion,
    ThrowState,
    check_insert,
    grab_attach,
    grab_step,
    sweep_accumulate,
    throw_step,
)

TINT_DURATION_TICKS = 50  # 1 s of "temporarily red"
INSERT_ERROR_REGION_SCALE = 2.0  # inflated hologram region that triggers the red tint

QUIZ_CHOICE_SPACING_M = 0.6
QUIZ_CHOICE_HEIGHT_M = 1.5
QUIZ_CHOICE_DEPTH_M = 2.0


@dataclass(frozen=True)
class OutputEvent:
    kind: str  # HologramShown, AidlineShown, Notification, TintApplied,
               # ActionCompleted, ScenarioCompleted, NarrationStarted,
               # NarrationLine, QuizShown, QuizChoice, QuizFeedback
    object_id: Optional[str] = None
    pose: Optional[Pose] = None
    text: Optional[str] = None
    anchor: Optional[Vec3] = None
    level: Optional[str] = None        # info | warning | error
    color: Optional[str] = None
    duration_ticks: Optional[int] = None
    path: Optional[str] = None
    tick: Optional[int] = None
    choice: Optional[int] = None
    correct: Optional[bool] = None


@dataclass
class ActionProgress:
    tool_active_s: float = 0.0
    tool_engaged: bool = False
    sweep_m: float = 0.0
    insert_latched: bool = False
    quiz_answered: bool = False


def quiz_choice_pose(index: int, count: int) -> Pose:
    x = QUIZ_CHOICE_SPACING_M * (index - (count - 1) / 2.0)
    return Pose(Vec3(x, QUIZ_CHOICE_HEIGHT_M, QUIZ_CHOICE_DEPTH_M),
                UnitQuat.identity())


@dataclass
class EngineState:
    program: RuntimeProgram
    rng_seed: int
    scene: SceneState = field(default_factory=SceneState)
    current_action: int = 0
    statuses: list[str] = field(default_factory=list)
    bindings: dict[str, GrabBinding] = field(default_factory=dict)
    progress: ActionProgress = field(default_factory=ActionProgress)
    throws: list[ThrowState] = field(default_factory=list)
    clients: set[str] = field(default_factory=set)
    tolerance: InsertTolerance = field(default_factory=InsertTolerance)
    narration_due: list[tuple[int, str, str]] = field(default_factory=list)
    narration_active: set[str] = field(default_factory=set)
    completed_log: list[tuple[str, int]] = field(default_factory=list)
    scenario_complete: bool = False
    _prev_positions: dict[str, Vec3] = field(default_factory=dict)
    _outputs: list[OutputEvent] = field(default_factory=list)

    @property
    def active_action(self) -> Optional[ActionDef]:
        if self.current_action >= len(self.program.actions):
            return None
        return self.program.actions[self.current_action].action

    @property
    def active_path(self) -> Optional[str]:
        if self.current_action >= len(self.program.actions):
            return None
        return self.program.actions[self.current_action].path

    def quiz_payload(self) -> Optional[dict]:
        act = self.active_action
        if act is None or act.kind != "quiz":
            return None
        return {"question": act.question, "choices": list(act.choices)}


def engine_new(program: RuntimeProgram, seed: int) -> EngineState:
    """Build the initial scene from the asset table and activate action 0."""
    if not program.actions:
        raise InvalidInputError("program has no actions")
    scene = SceneState()
    for asset_id, asset in program.assets.items():
        scene.objects[asset_id] = SceneObject(
            id=asset_id, pose=asset.initial_pose, initial_pose=asset.initial_pose,
            tags=asset.tags)
    state = EngineState(program=program, rng_seed=seed, scene=scene,
                        statuses=["pending"] * len(program.actions))
    _activate(state, 0)
    return state


def add_client(state: EngineState, client_id: str) -> None:
    state.clients.add(client_id)


def remove_client(state: EngineState, client_id: str) -> None:
    """Drop a client; anything it held is released in place."""
    state.clients.discard(client_id)
    for obj_id, binding in list(state.bindings.items()):
        if binding.hand[0] == client_id:
            del state.bindings[obj_id]
            obj = state.scene.objects.get(obj_id)
            if obj is not None:
                obj.held_by = None
    for key in [k for k in state.scene.hands if k[0] == client_id]:
        del state.scene.hands[key]


def _emit(state: EngineState, event: OutputEvent) -> None:
    state._outputs.append(event)


def _activate(state: EngineState, index: int) -> None:
    state.current_action = index
    state.statuses[index] = "active"
    state.progress = ActionProgress()
    act = state.program.actions[index].action
    if act.kind == "insert":
        _emit(state, OutputEvent("HologramShown", object_id=act.hologram,
                                 pose=act.final))
        if act.aidline is not None:
            _emit(state, OutputEvent("AidlineShown", text=act.aidline,
                                     anchor=act.final.position))
    elif act.kind == "quiz":
        _emit(state, OutputEvent("QuizShown", text=act.question))
        for i in range(len(act.choices)):
            pose = quiz_choice_pose(i, len(act.choices))
            obj_id = f"{QUIZ_CHOICE_PREFIX}{i}"
            state.scene.objects[obj_id] = SceneObject(
                id=obj_id, pose=pose, initial_pose=pose,
                tags=frozenset({"interactable"}))
            _emit(state, OutputEvent("QuizChoice", choice=i,
                                     text=act.choices[i]))


def _complete_current(state: EngineState) -> None:
    path = state.active_path
    act = state.active_action
    if act.kind == "quiz":
        for i in range(len(act.choices)):
            state.scene.objects.pop(f"{QUIZ_CHOICE_PREFIX}{i}", None)
    state.statuses[state.current_action] = "completed"
    state.completed_log.append((path, state.scene.tick))
    _emit(state, OutputEvent("ActionCompleted", path=path, tick=state.scene.tick))
    nxt = state.current_action + 1
    if nxt >= len(state.program.actions):
        state.current_action = nxt
        state.scenario_complete = True
        _emit(state, OutputEvent("ScenarioCompleted", tick=state.scene.tick))
    else:
        _activate(state, nxt)


def _owning_action(state: EngineState, object_id: str) -> Optional[int]:
    return state.program.action_for_asset(object_id)


def _start_narration(state: EngineState, asset_id: str) -> None:
    asset = state.program.assets.get(asset_id)
    if asset is None or asset.narration is None:
        return
    if asset_id in state.narration_active:
        return
    state.narration_active.add(asset_id)
    _emit(state, OutputEvent("NarrationStarted", object_id=asset_id,
                             tick=state.scene.tick))
    for delay_s, text in asset.narration:
        due = state.scene.tick + int(round(delay_s / TICK_SECONDS))
        state.narration_due.append((due, asset_id, text))
    state.narration_due.sort(key=lambda item: item[0])


def _handle_grab_start(state: EngineState, ev: CanonicalEvent) -> None:
    obj = state.scene.objects.get(ev.object_id)
    if obj is None:
        _emit(state, OutputEvent("Notification", level="warning",
                                 text=f"nothing to grab: {ev.object_id}"))
        return
    if ev.object_id.startswith(QUIZ_CHOICE_PREFIX):
        return  # quiz flags are gaze/point targets, not carriables
    owner = _owning_action(state, ev.object_id)
    if owner is not None and owner > state.current_action:
        _emit(state, OutputEvent(
            "Notification", level="warning",
            text=f"'{ev.object_id}' belongs to a later step"))
        return
    try:
        binding = grab_attach(state.scene, (ev.client, ev.hand), ev.object_id)
    except GrabRejected as rejected:
        if rejected.warn:
            _emit(state, OutputEvent("Notification", level="warning",
                                     text=rejected.reason))
        return
    state.bindings[ev.object_id] = binding
    if "storyteller_trigger" in obj.tags:
        _start_narration(state, ev.object_id)


def _handle_release(state: EngineState, ev: CanonicalEvent) -> None:
    hand = (ev.client, ev.hand)
    released_id = None
    for obj_id, binding in list(state.bindings.items()):
        if binding.hand == hand:
            released_id = obj_id
            del state.bindings[obj_id]
            obj = state.scene.objects.get(obj_id)
            if obj is not None:
                obj.held_by = None
            break
    if released_id is None:
        return
    obj = state.scene.objects.get(released_id)
    if obj is None:
        return

    act = state.active_action
    if act is not None and act.kind == "insert" and released_id == act.interactable:
        if check_insert(obj.pose, act.final, state.tolerance):
            obj.pose = act.final  # settle onto the hologram target
            state.progress.insert_latched = True
            _complete_current(state)
            return
        offset = (obj.pose.position - act.final.position).norm()
        if offset <= INSERT_ERROR_REGION_SCALE * state.tolerance.eps_pos:
            obj.tint = ("red", state.scene.tick + TINT_DURATION_TICKS)
            _emit(state, OutputEvent("TintApplied", object_id=released_id,
                                     color="red",
                                     duration_ticks=TINT_DURATION_TICKS))
            _emit(state, OutputEvent(
                "Notification", level="error",
                text=f"'{released_id}' is wrongly placed"))

    # released objects coast briefly with their last-tick velocity
    prev = state._prev_positions.get(released_id)
    if prev is not None:
        velocity = (obj.pose.position - prev).scale(1.0 / TICK_SECONDS)
        if velocity.norm() > 1e-9:
            state.throws.append(ThrowState(object_id=released_id, velocity=velocity))

    if act is not None and act.kind == "tool" and released_id == act.tool:
        state.progress.tool_engaged = False


def _handle_tool_activate(state: EngineState, ev: CanonicalEvent) -> None:
    act = state.active_action
    if act is None or act.kind != "tool":
        return
    tool = state.scene.objects.get(act.tool)
    if tool is None or tool.held_by is None or tool.held_by[0] != ev.client:
        return
    state.progress.tool_engaged = True


def _handle_quiz_select(state: EngineState, ev: CanonicalEvent) -> None:
    act = state.active_action
    if act is None or act.kind != "quiz":
        return
    correct = ev.choice == act.correct
    _emit(state, OutputEvent("QuizFeedback", choice=ev.choice, correct=correct))
    if correct:
        state.progress.quiz_answered = True
        _complete_current(state)


def engine_handle(state: EngineState, ev: CanonicalEvent) -> list[OutputEvent]:
    """Feed one canonical event; returns the outputs it produced."""
    if ev.client not in state.clients:
        raise ProtocolError(f"event from unknown client '{ev.client}'")
    if ev.tick > state.scene.tick:
        raise InvalidInputError(
            f"event tick {ev.tick} is ahead of engine tick {state.scene.tick}")
    mark = len(state._outputs)

    if ev.kind == "HandMoved":
        state.scene.hands[(ev.client, ev.hand)] = ev.pose
    elif ev.kind == "GrabStart":
        _handle_grab_start(state, ev)
    elif ev.kind == "Release":
        _handle_release(state, ev)
    elif ev.kind == "ToolActivate":
        _handle_tool_activate(state, ev)
    elif ev.kind == "QuizSelect":
        _handle_quiz_select(state, ev)
    elif ev.kind == "Activate":
        obj = state.scene.objects.get(ev.object_id)
        if obj is not None and "storyteller_trigger" in obj.tags:
            _start_narration(state, ev.object_id)
    elif ev.kind == "VoiceCommand":
        pass  # unrecognized words are inert
    else:
        raise ProtocolError(f"unknown canonical event kind '{ev.kind}'")

    return state._outputs[mark:]


def _tick_once(state: EngineState) -> None:
    state.scene.tick += 1
    tick = state.scene.tick

    # remember pre-step positions for throw velocities and sweep strokes
    prev_positions = {oid: obj.pose.position
                      for oid, obj in state.scene.objects.items()}

    grab_step(state.scene, list(state.bindings.values()), TICK_SECONDS)
    state.throws = throw_step(state.scene, state.throws, TICK_SECONDS)

    # tint expiry
    for obj in state.scene.objects.values():
        if obj.tint is not None and obj.tint[1] <= tick:
            obj.tint = None

    # narration lines falling due
    while state.narration_due and state.narration_due[0][0] <= tick:
        due, asset_id, text = state.narration_due.pop(0)
        _emit(state, OutputEvent("NarrationLine", object_id=asset_id,
                                 text=text, tick=tick))
        if not any(a == asset_id for _, a, _ in state.narration_due):
            state.narration_active.discard(asset_id)

    act = state.active_action
    if act is not None and not state.scenario_complete:
        if act.kind == "remove":
            target = state.scene.objects.get(act.target)
            if target is not None:
                moved = (target.pose.position
                         - target.initial_pose.position).norm()
                if moved > act.clearance_m:
                    _complete_current(state)
        elif act.kind == "tool":
            tool = state.scene.objects.get(act.tool)
            if (state.progress.tool_engaged and tool is not None
                    and tool.held_by is not None
                    and (tool.pose.position - act.region.center).norm()
                    <= act.region.radius):
                state.progress.tool_active_s += TICK_SECONDS
                if state.progress.tool_active_s >= act.required_active_s - 1e-9:
                    _complete_current(state)
        elif act.kind == "use":
            implement = state.scene.objects.get(act.implement)
            if implement is not None and implement.held_by is not None:
                prev = prev_positions.get(act.implement)
                if prev is not None:
                    region = SweepRegion(act.region.center, act.region.radius)
                    state.progress.sweep_m = sweep_accumulate(
                        state.progress.sweep_m, prev,
                        implement.pose.position, region)
                    if state.progress.sweep_m >= act.required_sweep_m - 1e-9:
                        _complete_current(state)

    state._prev_positions = {oid: obj.pose.position
                             for oid, obj in state.scene.objects.items()}


def engine_tick(state: EngineState, n: int = 1) -> list[OutputEvent]:
    """Advance the fixed clock n ticks; returns the outputs produced."""
    if n < 1:
        raise InvalidInputError("tick count must be >= 1")
    mark = len(state._outputs)
    for _ in range(n):
        _tick_once(state)
    return state._outputs[mark:]


def drain_outputs(state: EngineState) -> list[OutputEvent]:
    out = state._outputs
    state._outputs = []
    return out


def engine_hash(state: EngineState) -> int:
    return state_hash(state.scene)
