import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { WireMessage, decode } from "../src/protocol.js";

const HERE = dirname(fileURLToPath(import.meta.url));

export interface TrafficLine {
  atMs: number;
  /** server -> client message, if this line is one */
  msg: WireMessage | null;
  /** client -> server message the driver sent, if this line is one */
  sent: WireMessage | null;
}

export interface Traffic {
  lines: TrafficLine[];
  finalTick: number;
  posesHash: bigint;
}

export function readJsonl(path: string): unknown[] {
  return readFileSync(path, "utf-8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line));
}

export function fixturePath(...parts: string[]): string {
  return join(HERE, "fixtures", ...parts);
}

/** The package-level protocol vectors shared with the server's tests. */
export function protocolVectorsPath(): string {
  return join(HERE, "..", "..", "tests", "fixtures", "protocol_vectors.jsonl");
}

export function loadTraffic(name: string): Traffic {
  const lines: TrafficLine[] = [];
  let finalTick = -1;
  let posesHash = 0n;
  for (const entry of readJsonl(fixturePath(name))) {
    const rec = entry as Record<string, unknown>;
    if (rec["t"] === "expect") {
      finalTick = rec["final_tick"] as number;
      posesHash = BigInt(rec["poses_hash"] as string);
      continue;
    }
    lines.push({
      atMs: rec["at_ms"] as number,
      msg: "msg" in rec ? decode(JSON.stringify(rec["msg"])) : null,
      sent: "sent" in rec ? decode(JSON.stringify(rec["sent"])) : null,
    });
  }
  if (finalTick < 0) throw new Error(`${name} lacks an expect footer`);
  return { lines, finalTick, posesHash };
}
