import { describe, expect, it } from "vitest";

import {
  MessageError,
  WireMessage,
  decode,
  decodeFrame,
  encode,
} from "../src/protocol.js";
import { readJsonl, protocolVectorsPath } from "./helpers.js";

describe("codec round trips", () => {
  const samples: WireMessage[] = [
    { t: "hello", session: "CulturalHeritage", profile: "AR" },
    {
      t: "welcome",
      client: "c1",
      snapshot: { tick: 3, objects: { Obj: [1, 0, 0, 0, 0, 0.5, 1, 1.5] } },
      digest: "9f2c",
    },
    {
      t: "input",
      client: "c1",
      tick: 42,
      raw: { kind: "VRGripDown", hand: "right" },
    },
    { t: "pose", id: "Obj", dq: [1, 0, 0, 0, 0, 0.5, 1, 1.5], tick: 7 },
    { t: "key", tick: 10, poses: { Obj: [1, 0, 0, 0, 0, 0, 0, 0] } },
    { t: "act", path: "Lesson/Stage/grab", status: "completed" },
    { t: "out", tick: 9, event: { kind: "Notification", level: "info", text: "x" } },
    { t: "hash", tick: 250, hash: 123456 },
    { t: "bye", client: "c1" },
    { t: "bye", reason: "session full" },
  ];

  it.each(samples.map((m) => [m.t, m] as const))(
    "round trips a '%s' message", (_tag, msg) => {
      expect(decode(encode(msg))).toEqual(msg);
    });

  it("decodes every shared protocol vector", () => {
    const vectors = readJsonl(protocolVectorsPath());
    expect(vectors.length).toBeGreaterThanOrEqual(10);
    for (const vector of vectors) {
      const line = JSON.stringify(vector);
      const msg = decode(line);
      // re-encoding must preserve meaning even if key order differs
      expect(decode(encode(msg))).toEqual(msg);
    }
  });

  it("splits multi-message frames", () => {
    const frame = encode(samples[0]!) + encode(samples[3]!);
    const msgs = decodeFrame(frame);
    expect(msgs).toHaveLength(2);
    expect(msgs[0]!.t).toBe("hello");
    expect(msgs[1]!.t).toBe("pose");
  });
});

describe("decode rejections", () => {
  const bad: [string, string][] = [
    ["not json at all", "malformed JSON"],
    ["[1,2,3]", "missing variant tag"],
    ['{"x":1}', "missing variant tag"],
    ['{"t":"warp"}', "unknown variant tag 'warp'"],
    ['{"t":"pose","id":"A","tick":1}', "missing field 'dq'"],
    ['{"t":"pose","id":"A","tick":1,"dq":[1,0,0]}', "8 reals"],
    ['{"t":"pose","id":"A","tick":1,"dq":[2,0,0,0,0,0,0,0]}', "non-unit"],
    ['{"t":"key","tick":1,"poses":{"A":[1,0,0,0,1,0,0,0]}}', "non-unit"],
    ['{"t":"input","client":"c1","tick":1}', "missing field 'raw'"],
  ];

  it.each(bad)("rejects %s", (line, fragment) => {
    expect(() => decode(line)).toThrowError(MessageError);
    expect(() => decode(line)).toThrowError(fragment);
  });
});
