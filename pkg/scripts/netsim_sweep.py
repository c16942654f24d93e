"""Sweep network conditions and report completion, convergence, and traffic.

Runs the flow scenario end to end through the simulated network at each
latency/jitter/loss point and prints one row per condition: whether the
scenario completed, whether every replica's rendered poses match the server
bit-for-bit after quantization, and how many pose deltas and keyframes each
client received.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))

from conftest import FLOW_SCENARIO, build_flow_script
from xrtrain.dsl import load_program
from xrtrain.netsync import NetSimConfig, SimClient, simulate_session

CONDITIONS = [
    (0, 0, 0.0),
    (50, 10, 0.0),
    (120, 30, 0.05),
    (200, 50, 0.10),
    (300, 80, 0.25),
]


def main() -> None:
    program = load_program(FLOW_SCENARIO)
    print(f"{'latency':>8} {'jitter':>7} {'loss':>5} {'done':>5} "
          f"{'converged':>9} {'deltas':>7} {'keyframes':>9} {'ticks':>6}")
    for latency, jitter, loss in CONDITIONS:
        script = build_flow_script("VR")
        clients = {
            "driver": SimClient(profile="VR", events=list(script.events)),
            "watcher": SimClient(profile="AR"),
        }
        sim = simulate_session(
            program, clients,
            NetSimConfig(latency_ms=latency, jitter_ms=jitter, loss=loss,
                         seed=7),
            seed=1)
        server = sim.session.poses_digest()
        converged = all(sc.replica.poses_digest() == server
                        for sc in sim.clients.values())
        watcher = sim.clients["watcher"]
        deltas = sum(watcher.delta_counts.values())
        print(f"{latency:>8} {jitter:>7} {loss:>5.2f} {str(sim.complete):>5} "
              f"{str(converged):>9} {deltas:>7} {watcher.keyframes:>9} "
              f"{sim.ticks_run:>6}")


if __name__ == "__main__":
    main()
