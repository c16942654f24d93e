"""Command-line entry points: validate, run, replay, serve.

Exit codes: 0 success, 1 scenario-level failure (invalid scenario, playthrough
did not complete, replay mismatch), 2 environment failure (missing file,
unreadable input, bad options).
"""

from __future__ import annotations

import asyncio
import json
import os
import signal
import sys
import time

import click

from .core import state_hash
from .dsl import DslError, RuntimeProgram, Severity, load_program, parse_scenario, validate
from .harness import run_script
from .netsync import (
    MessageError,
    NetSimConfig,
    ServerSession,
    SimClient,
    WireMessage,
    decode,
    encode,
    simulate_session,
)
from .scripting import raw_to_json, read_script

EXIT_OK = 0
EXIT_SCENARIO = 1
EXIT_ENV = 2


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc.strerror}", err=True)
        sys.exit(EXIT_ENV)


def _load(path: str) -> RuntimeProgram:
    source = _read_text(path)
    try:
        return load_program(source)
    except DslError as exc:
        for diag in exc.diagnostics:
            click.echo(f"{path}:{diag.format()}", err=True)
        sys.exit(EXIT_SCENARIO)


@click.group()
def main() -> None:
    """Deterministic cross-reality training-scenario engine."""


@main.command("validate")
@click.argument("scenario", type=click.Path())
def cmd_validate(scenario: str) -> None:
    """Parse and validate a scenario file; print diagnostics."""
    source = _read_text(scenario)
    try:
        doc = parse_scenario(source)
    except DslError as exc:
        for diag in exc.diagnostics:
            click.echo(f"{scenario}:{diag.format()}", err=True)
        sys.exit(EXIT_SCENARIO)
    diags = validate(doc)
    for diag in diags:
        click.echo(f"{scenario}:{diag.format()}", err=True)
    if any(d.severity is Severity.ERROR for d in diags):
        sys.exit(EXIT_SCENARIO)
    click.echo(f"{scenario}: ok")


def _run_report(program: RuntimeProgram, state, seed: int) -> dict:
    return {
        "scenario": program.name,
        "digest": program.digest,
        "seed": seed,
        "completed": state.scenario_complete,
        "ticks": state.scene.tick,
        "final_hash": state_hash(state.scene),
        "actions": [{"path": ca.path, "status": status}
                    for ca, status in zip(program.actions, state.statuses)],
    }


def _parse_net(spec: str) -> NetSimConfig:
    try:
        parts = [float(p) for p in spec.split(",")]
        if len(parts) not in (3, 4):
            raise ValueError
    except ValueError:
        click.echo("error: --net expects latency_ms,jitter_ms,loss[,seed]",
                   err=True)
        sys.exit(EXIT_ENV)
    seed = int(parts[3]) if len(parts) == 4 else 0
    return NetSimConfig(latency_ms=parts[0], jitter_ms=parts[1],
                        loss=parts[2], seed=seed)


@main.command("run")
@click.argument("scenario", type=click.Path())
@click.option("--script", "script_path", required=True, type=click.Path(),
              help="JSONL raw-event script to drive the run.")
@click.option("--seed", default=0, show_default=True, help="Engine RNG seed.")
@click.option("--profile", default="VR", show_default=True,
              type=click.Choice(["AR", "VR"]),
              help="Device profile for every client in the script.")
@click.option("--net", "net_spec", default=None,
              help="Simulate the network: latency_ms,jitter_ms,loss[,seed].")
@click.option("--record", "record_path", default=None, type=click.Path(),
              help="Write a replayable recording of this run.")
def cmd_run(scenario: str, script_path: str, seed: int, profile: str,
            net_spec: str, record_path: str) -> None:
    """Run a scripted playthrough headlessly and print a JSON report."""
    program = _load(scenario)
    try:
        events = read_script(script_path)
    except OSError as exc:
        click.echo(f"error: cannot read {script_path}: {exc.strerror}", err=True)
        sys.exit(EXIT_ENV)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        click.echo(f"error: malformed script {script_path}: {exc}", err=True)
        sys.exit(EXIT_ENV)
    clients = sorted({ev.client for ev in events})

    if net_spec is not None:
        cfg = _parse_net(net_spec)
        sims = {c: SimClient(profile=profile,
                             events=[ev for ev in events if ev.client == c])
                for c in clients}
        result = simulate_session(program, sims, cfg, seed=seed)
        state = result.session.state
    else:
        run = run_script(program, events, {c: profile for c in clients},
                         seed=seed)
        state = run.state

    report = _run_report(program, state, seed)
    if record_path is not None:
        _write_recording(record_path, program, seed, profile, events, report)
    click.echo(json.dumps(report, indent=2, sort_keys=True))
    sys.exit(EXIT_OK if report["completed"] else EXIT_SCENARIO)


def _write_recording(path: str, program: RuntimeProgram, seed: int,
                     profile: str, events, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"t": "header", "scenario": program.name,
                  "digest": program.digest, "seed": seed, "profile": profile}
        fh.write(json.dumps(header, separators=(",", ":"), sort_keys=True) + "\n")
        for ev in sorted(events, key=lambda e: e.tick):
            line = {"t": "input", "client": ev.client, "tick": ev.tick,
                    "raw": raw_to_json(ev)}
            fh.write(json.dumps(line, separators=(",", ":"), sort_keys=True) + "\n")
        footer = {"t": "hash", "tick": report["ticks"],
                  "hash": report["final_hash"]}
        fh.write(json.dumps(footer, separators=(",", ":"), sort_keys=True) + "\n")


@main.command("replay")
@click.argument("scenario", type=click.Path())
@click.argument("recording", type=click.Path())
def cmd_replay(scenario: str, recording: str) -> None:
    """Re-run a recording and verify the final state hash matches."""
    program = _load(scenario)
    lines = [ln for ln in _read_text(recording).splitlines() if ln.strip()]
    if not lines:
        click.echo("error: empty recording", err=True)
        sys.exit(EXIT_ENV)
    try:
        header = json.loads(lines[0])
        body = [json.loads(ln) for ln in lines[1:]]
    except json.JSONDecodeError as exc:
        click.echo(f"error: malformed recording: {exc}", err=True)
        sys.exit(EXIT_ENV)
    if header.get("t") != "header":
        click.echo("error: recording missing header line", err=True)
        sys.exit(EXIT_ENV)
    if header["digest"] != program.digest:
        click.echo("replay: scenario digest mismatch "
                   f"(recorded {header['digest'][:12]}, "
                   f"loaded {program.digest[:12]})", err=True)
        sys.exit(EXIT_SCENARIO)

    from .scripting import raw_from_json
    events = [raw_from_json(e["raw"], e["client"], e["tick"])
              for e in body if e.get("t") == "input"]
    recorded = next((e for e in body if e.get("t") == "hash"), None)
    if recorded is None:
        click.echo("error: recording missing final hash line", err=True)
        sys.exit(EXIT_ENV)

    clients = sorted({ev.client for ev in events})
    run = run_script(program, events,
                     {c: header["profile"] for c in clients},
                     seed=header["seed"])
    replayed = state_hash(run.state.scene)
    if replayed != recorded["hash"]:
        click.echo(f"replay: hash mismatch (recorded {recorded['hash']}, "
                   f"replayed {replayed})")
        sys.exit(EXIT_SCENARIO)
    click.echo(f"replay: ok (hash {replayed})")


@main.command("serve")
@click.argument("scenario", type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--max-ticks", default=0, show_default=True,
              help="Stop after this many ticks (0 = run until interrupted).")
def cmd_serve(scenario: str, host: str, port: int, seed: int,
              max_ticks: int) -> None:
    """Serve a session over WebSocket, one tick per 20 ms of wall time."""
    program = _load(scenario)
    try:
        asyncio.run(_serve(program, host, port, seed, max_ticks))
    except KeyboardInterrupt:
        pass


async def _serve(program: RuntimeProgram, host: str, port: int, seed: int,
                 max_ticks: int) -> None:
    import websockets

    session = ServerSession(program, seed)
    sockets: dict[str, object] = {}
    stop = asyncio.Event()

    async def handler(ws) -> None:
        client_id = None
        try:
            async for raw in ws:
                try:
                    msg = decode(raw)
                except MessageError as exc:
                    await ws.send(encode(WireMessage(
                        t="bye", reason=str(exc))).decode())
                    continue
                if msg.t == "hello":
                    reply = session.hello(msg)
                    await ws.send(encode(reply).decode())
                    if reply.t == "welcome":
                        client_id = reply.client
                        sockets[client_id] = ws
                    else:
                        break
                elif msg.t == "input" and client_id is not None:
                    try:
                        session.handle_input(msg)
                    except (MessageError, ValueError) as exc:
                        await ws.send(encode(WireMessage(
                            t="bye", reason=str(exc))).decode())
                elif msg.t == "bye":
                    break
        finally:
            if client_id is not None:
                sockets.pop(client_id, None)
                session.goodbye(client_id)

    async def tick_loop() -> None:
        next_at = time.monotonic()
        ticks = 0
        while not stop.is_set():
            next_at += 0.02
            batch = session.step()
            if batch:
                payload = "".join(encode(m).decode() for m in batch)
                for ws in list(sockets.values()):
                    try:
                        await ws.send(payload)
                    except Exception:
                        pass
            ticks += 1
            if max_ticks and ticks >= max_ticks:
                stop.set()
                break
            await asyncio.sleep(max(0.0, next_at - time.monotonic()))

    loop = asyncio.get_running_loop()
    try:
        loop.add_signal_handler(signal.SIGINT, stop.set)
        loop.add_signal_handler(signal.SIGTERM, stop.set)
    except NotImplementedError:
        pass

    async with websockets.serve(handler, host, port):
        click.echo(f"serving {program.name} on ws://{host}:{port}")
        ticker = asyncio.create_task(tick_loop())
        await stop.wait()
        ticker.cancel()
    _write_input_log(program, seed, session)


def _write_input_log(program: RuntimeProgram, seed: int,
                     session: ServerSession) -> None:
    log_dir = os.environ.get("SCN_LOG_DIR", ".")
    os.makedirs(log_dir, exist_ok=True)
    path = os.path.join(log_dir, f"session-{int(time.time())}.jsonl")
    with open(path, "w", encoding="utf-8") as fh:
        header = {"t": "header", "scenario": program.name,
                  "digest": program.digest, "seed": seed,
                  "profile": "VR"}
        fh.write(json.dumps(header, separators=(",", ":"), sort_keys=True) + "\n")
        for msg in session.input_log:
            fh.write(encode(msg).decode())
        footer = {"t": "hash", "tick": session.state.scene.tick,
                  "hash": state_hash(session.state.scene)}
        fh.write(json.dumps(footer, separators=(",", ":"), sort_keys=True) + "\n")
    click.echo(f"session log written to {path}")


if __name__ == "__main__":
    main()
