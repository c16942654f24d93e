"""Record one observer's server traffic for a full flow playthrough.

A VR driver plays the scenario over a 100 ms link while an AR observer
watches.  Every message the observer receives is written with its arrival
time, followed by an expectation line carrying the server's final quantized
pose hash.  The web console's replica tests replay this file and must
converge to the same hash.
"""

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))

from conftest import FLOW_SCENARIO, build_flow_script
from xrtrain.core import TICK_SECONDS
from xrtrain.dsl import load_program
from xrtrain.netsync import (
    NetSim,
    NetSimConfig,
    ServerSession,
    WireMessage,
    encode,
)
from xrtrain.scripting import raw_to_json

LATENCY_MS = 100.0
TICK_MS = TICK_SECONDS * 1000.0


def main() -> None:
    program = load_program(FLOW_SCENARIO)
    session = ServerSession(program, seed=1)
    sim = NetSim(NetSimConfig(latency_ms=LATENCY_MS, seed=0))
    script = build_flow_script("VR").events

    sim.send("up:driver", WireMessage(t="hello", session=program.name,
                                      profile="VR"), 0.0)
    sim.send("up:watcher", WireMessage(t="hello", session=program.name,
                                       profile="AR"), 0.0)
    recorded: dict[str, list[dict]] = {"driver": [], "watcher": []}
    driver_id = None
    start_tick = None
    cursor = 0
    complete_at = None
    tick = 0
    while True:
        tick += 1
        now = tick * TICK_MS
        for link, msg in sim.poll(now):
            kind, label = link.split(":", 1)
            if kind == "up":
                if msg.t == "hello":
                    reply = session.hello(msg)
                    sim.send(f"down:{label}", reply, now)
                elif msg.t == "input":
                    session.handle_input(msg)
            else:
                if msg.t == "welcome" and label == "driver":
                    driver_id = msg.client
                    start_tick = tick
                recorded[label].append(
                    {"at_ms": now, "msg": json.loads(encode(msg))})
        if driver_id is not None:
            while (cursor < len(script)
                   and script[cursor].tick + start_tick <= tick):
                ev = script[cursor]
                cursor += 1
                up = WireMessage(t="input", client=driver_id, tick=tick,
                                 raw=raw_to_json(ev))
                recorded["driver"].append(
                    {"at_ms": now, "sent": json.loads(encode(up))})
                sim.send("up:driver", up, now)
        for msg in session.step():
            sim.send("down:driver", msg, now)
            sim.send("down:watcher", msg, now)
        if complete_at is None and session.state.scenario_complete:
            complete_at = tick
        if complete_at is not None and tick - complete_at >= 150:
            break
        if tick > 5000:
            raise SystemExit("session did not complete")

    out_dir = os.path.join(os.path.dirname(__file__), "..", "frontend",
                           "tests", "fixtures")
    os.makedirs(out_dir, exist_ok=True)
    footer = {"t": "expect", "final_tick": session.state.scene.tick,
              "poses_hash": str(session.poses_digest())}
    for label, lines in recorded.items():
        path = os.path.join(out_dir, f"session_traffic_{label}.jsonl")
        with open(path, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(json.dumps(line, separators=(",", ":"),
                                    sort_keys=True) + "\n")
            fh.write(json.dumps(footer, separators=(",", ":"),
                                sort_keys=True) + "\n")
        print(f"wrote {path}: {len(lines)} messages, "
              f"hash {session.poses_digest()}")


if __name__ == "__main__":
    main()
