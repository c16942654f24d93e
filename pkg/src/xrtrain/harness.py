"""Headless script runner: raw events -> device mapping -> engine."""

from __future__ import annotations

from dataclasses import dataclass, field

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
)


@dataclass
class RunResult:
    state: EngineState
    outputs: list[OutputEvent] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return self.state.scenario_complete


def run_script(program: RuntimeProgram, events: list[RawEvent],
               profiles: dict[str, str], seed: int = 0,
               trailing_ticks: int = 50) -> RunResult:
    """Replay raw events in tick order through a fresh engine.

    `profiles` maps client id to "AR" or "VR".  The engine is advanced to each
    event's tick before the event is applied, and runs `trailing_ticks` more
    ticks after the last event so throws and tints settle.
    """
    state = engine_new(program, seed)
    outputs = drain_outputs(state)
    resolved = {client: DeviceProfile.of(kind) for client, kind in profiles.items()}
    for client in resolved:
        add_client(state, client)

    for ev in sorted(events, key=lambda e: e.tick):
        if ev.client not in resolved:
            raise KeyError(f"no profile declared for client '{ev.client}'")
        if ev.tick > state.scene.tick:
            outputs.extend(engine_tick(state, ev.tick - state.scene.tick))
        for canonical in map_raw_input(resolved[ev.client], ev, state.scene):
            outputs.extend(engine_handle(state, canonical))
    if trailing_ticks > 0:
        outputs.extend(engine_tick(state, trailing_ticks))
    return RunResult(state=state, outputs=outputs)
