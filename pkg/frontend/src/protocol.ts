/**
 * The JSON-lines wire protocol, mirrored from the server.  One LF-terminated
 * JSON object per message; the `t` field selects the variant.
 */

import { dqFromList, isUnit } from "./dq.js";

export type PoseJson = { p: [number, number, number];
                         q: [number, number, number, number] };

/** Device-level raw event, exactly as the server's input mapper expects. */
export interface RawEventJson {
  kind: string;
  hand?: string;
  pose?: PoseJson;
  word?: string;
}

export interface HelloMsg { t: "hello"; session: string; profile: "AR" | "VR" }
export interface WelcomeMsg {
  t: "welcome";
  client: string;
  snapshot: { tick: number; objects: Record<string, number[]> };
  digest: string;
}
export interface InputMsg {
  t: "input";
  client: string;
  tick: number;
  raw: RawEventJson;
}
export interface PoseDeltaMsg { t: "pose"; id: string; dq: number[]; tick: number }
export interface KeyframeMsg { t: "key"; tick: number; poses: Record<string, number[]> }
export interface ActMsg { t: "act"; path: string; status: string }
export interface OutMsg { t: "out"; tick: number; event: Record<string, unknown> }
export interface HashMsg { t: "hash"; tick: number; hash: number | bigint }
export interface ByeMsg { t: "bye"; client?: string; reason?: string }

export type WireMessage =
  | HelloMsg | WelcomeMsg | InputMsg | PoseDeltaMsg | KeyframeMsg
  | ActMsg | OutMsg | HashMsg | ByeMsg;

export class MessageError extends Error {}

const REQUIRED: Record<string, string[]> = {
  hello: ["session", "profile"],
  welcome: ["client", "snapshot", "digest"],
  input: ["client", "tick", "raw"],
  pose: ["id", "dq", "tick"],
  key: ["tick", "poses"],
  act: ["path", "status"],
  out: ["tick", "event"],
  hash: ["tick", "hash"],
  bye: [],
};

export function encode(msg: WireMessage): string {
  // field order is irrelevant to the server; it re-canonicalizes on output
  return JSON.stringify(msg) + "\n";
}

function checkDq(vals: unknown, name: string): void {
  if (!Array.isArray(vals) || vals.length !== 8 ||
      !vals.every((v) => typeof v === "number")) {
    throw new MessageError(`field '${name}' must hold 8 reals`);
  }
  if (!isUnit(dqFromList(vals))) {
    throw new MessageError(`field '${name}' is non-unit`);
  }
}

export function decode(line: string): WireMessage {
  let data: unknown;
  try {
    data = JSON.parse(line);
  } catch (err) {
    throw new MessageError(`malformed JSON: ${(err as Error).message}`);
  }
  if (typeof data !== "object" || data === null || !("t" in data)) {
    throw new MessageError("missing variant tag 't'");
  }
  const record = data as Record<string, unknown>;
  const tag = record["t"];
  if (typeof tag !== "string" || !(tag in REQUIRED)) {
    throw new MessageError(`unknown variant tag '${String(tag)}'`);
  }
  for (const key of REQUIRED[tag]!) {
    if (!(key in record)) {
      throw new MessageError(`'${tag}' message missing field '${key}'`);
    }
  }
  if ("dq" in record) {
    checkDq(record["dq"], "dq");
  }
  if (tag === "key") {
    const poses = record["poses"] as Record<string, unknown>;
    for (const [id, vals] of Object.entries(poses)) {
      checkDq(vals, `poses[${id}]`);
    }
  }
  return record as unknown as WireMessage;
}

/** Split a frame that may carry several newline-separated messages. */
export function decodeFrame(frame: string): WireMessage[] {
  return frame
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map(decode);
}
