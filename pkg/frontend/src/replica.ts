/**
 * Jitter-buffered replica of the replicated scene, mirroring the server's
 * reference client: samples keyed by server tick, rendered 100 ms in the
 * past with ScLERP between brackets, holding the newest sample rather than
 * extrapolating.
 */

import { DualQuat, Pose, dqFromList, dqSclerp, dqToPose, posesHash } from "./dq.js";
import { KeyframeMsg, PoseDeltaMsg, WelcomeMsg } from "./protocol.js";

export const TICK_MS = 20;
export const INTERPOLATION_DELAY_MS = 100;

interface Sample {
  tick: number;
  dq: DualQuat;
}

export class ClientReplica {
  readonly delayMs: number;
  private buffers = new Map<string, Sample[]>();
  private lastRendered = new Map<string, Pose>();
  private lastRenderedTick = -1;

  constructor(delayMs: number = INTERPOLATION_DELAY_MS) {
    this.delayMs = delayMs;
  }

  apply(msg: WelcomeMsg | PoseDeltaMsg | KeyframeMsg): void {
    if (msg.t === "welcome") {
      for (const [id, vals] of Object.entries(msg.snapshot.objects)) {
        this.insert(id, msg.snapshot.tick, dqFromList(vals));
      }
    } else if (msg.t === "pose") {
      this.insert(msg.id, msg.tick, dqFromList(msg.dq));
    } else {
      for (const id of [...this.buffers.keys()]) {
        if (!(id in msg.poses)) {
          this.buffers.delete(id);
          this.lastRendered.delete(id);
        }
      }
      for (const [id, vals] of Object.entries(msg.poses)) {
        this.insert(id, msg.tick, dqFromList(vals));
      }
    }
  }

  private insert(id: string, tick: number, dq: DualQuat): void {
    let buf = this.buffers.get(id);
    if (buf === undefined) {
      buf = [];
      this.buffers.set(id, buf);
    }
    // stale only if something newer is buffered AND the render position has
    // moved past it; the newest sample is always kept for hold-at-newest
    const newest = buf.length > 0 ? buf[buf.length - 1]!.tick : -Infinity;
    if (tick < newest && tick < this.lastRenderedTick) return;
    for (let i = 0; i < buf.length; i++) {
      if (buf[i]!.tick === tick) return; // duplicate delivery is idempotent
      if (buf[i]!.tick > tick) {
        buf.splice(i, 0, { tick, dq });
        return;
      }
    }
    buf.push({ tick, dq });
  }

  /** Interpolated poses at `nowMs` minus the interpolation delay. */
  render(nowMs: number): Map<string, Pose> {
    const renderTick = (nowMs - this.delayMs) / TICK_MS;
    const out = new Map<string, Pose>();
    for (const [id, buf] of this.buffers) {
      if (buf.length === 0) {
        const held = this.lastRendered.get(id);
        if (held !== undefined) out.set(id, held);
        continue;
      }
      const pose = this.sample(buf, renderTick) ??
        this.lastRendered.get(id) ?? dqToPose(buf[0]!.dq);
      out.set(id, pose);
      this.lastRendered.set(id, pose);
    }
    if (renderTick > this.lastRenderedTick) {
      this.lastRenderedTick = renderTick;
      for (const [id, buf] of this.buffers) {
        // keep the newest sample at-or-before render time plus all newer
        let cut = 0;
        for (let i = 0; i < buf.length; i++) {
          if (buf[i]!.tick <= renderTick) cut = i;
        }
        this.buffers.set(id, buf.slice(cut));
      }
    }
    return out;
  }

  private sample(buf: Sample[], renderTick: number): Pose | null {
    const last = buf[buf.length - 1]!;
    if (renderTick >= last.tick) {
      return dqToPose(last.dq); // hold newest; no extrapolation
    }
    if (buf.length < 2 || renderTick < buf[0]!.tick) return null;
    for (let i = 0; i + 1 < buf.length; i++) {
      const a = buf[i]!;
      const b = buf[i + 1]!;
      if (a.tick <= renderTick && renderTick <= b.tick) {
        const span = b.tick - a.tick;
        const frac = span === 0 ? 0 : (renderTick - a.tick) / span;
        return dqToPose(dqSclerp(a.dq, b.dq, frac));
      }
    }
    return null;
  }

  posesDigest(): bigint {
    return posesHash(this.lastRendered);
  }

  objectIds(): string[] {
    return [...this.buffers.keys()];
  }
}
