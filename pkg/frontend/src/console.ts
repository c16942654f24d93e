/**
 * The console's view model and gesture mapping.
 *
 * Thin-client by construction: every user interaction is lowered to a raw
 * device event and sent as an `input` wire message; the view model mutates
 * only on server-confirmed messages.  Nothing here predicts action
 * completion.
 */

import {
  Pose,
  QUAT_IDENTITY,
  Quat,
  Vec3,
  dqFromList,
  dqToPose,
  vnorm,
  vsub,
} from "./dq.js";
import {
  PoseJson,
  RawEventJson,
  WireMessage,
  encode,
} from "./protocol.js";
import { ClientReplica } from "./replica.js";

export const AR_HAND_DEPTH_M = 0.6;
export const NOTIFICATION_RING = 50;

export type Profile = "AR" | "VR";

export interface Notification {
  level: string;
  text: string;
  tick: number;
}

export interface QuizPanel {
  question: string;
  choices: string[];
  feedback: { choice: number; correct: boolean } | null;
}

export interface Hologram {
  id: string;
  pose: Pose;
}

export interface Aidline {
  text: string;
  anchor: Vec3;
}

export interface Caption {
  objectId: string;
  text: string;
  tick: number;
}

export interface Tint {
  objectId: string;
  color: string;
  untilTick: number;
}

const AR_CAPABILITIES = ["gesture_tap", "gesture_pinch", "voice"] as const;
const VR_CAPABILITIES = ["controller_grip", "controller_trigger"] as const;

/** Rotation taking +z onto the given direction (mirrors the server). */
export function lookRotation(direction: Vec3): Quat {
  const n = vnorm(direction);
  if (n === 0) return { ...QUAT_IDENTITY };
  const d = { x: direction.x / n, y: direction.y / n, z: direction.z / n };
  const dot = Math.max(-1, Math.min(1, d.z));
  if (dot > 1 - 1e-12) return { ...QUAT_IDENTITY };
  if (dot < -1 + 1e-12) return { w: 0, x: 0, y: 1, z: 0 };
  const axis = { x: -d.y, y: d.x, z: 0 }; // forward x d
  const axisNorm = vnorm(axis);
  const half = Math.acos(dot) / 2;
  const s = Math.sin(half) / axisNorm;
  return { w: Math.cos(half), x: axis.x * s, y: axis.y * s, z: axis.z * s };
}

function poseJson(position: Vec3, rotation: Quat): PoseJson {
  return {
    p: [position.x, position.y, position.z],
    q: [rotation.w, rotation.x, rotation.y, rotation.z],
  };
}

/** Head pose whose 0.6 m gaze-ray virtual hand lands exactly on `hand`. */
export function headPoseForHand(hand: Vec3, eye: Vec3): PoseJson {
  const rot = lookRotation(vsub(hand, eye));
  // the head sits back along its own forward axis so the virtual hand,
  // projected AR_HAND_DEPTH_M down the gaze ray, lands on the target
  const d = vsub(hand, eye);
  const n = vnorm(d) || 1;
  const back = {
    x: hand.x - (d.x / n) * AR_HAND_DEPTH_M,
    y: hand.y - (d.y / n) * AR_HAND_DEPTH_M,
    z: hand.z - (d.z / n) * AR_HAND_DEPTH_M,
  };
  return poseJson(back, rot);
}

export class ConsoleViewModel {
  readonly profile: Profile;
  readonly replica = new ClientReplica();
  clientId: string | null = null;
  digest: string | null = null;
  refusedReason: string | null = null;
  lastServerTick = 0;
  notifications: Notification[] = [];
  holograms = new Map<string, Hologram>();
  aidlines: Aidline[] = [];
  quiz: QuizPanel | null = null;
  captions: Caption[] = [];
  tints: Tint[] = [];
  completed: string[] = [];
  actionStatuses = new Map<string, string>();
  peers = new Set<string>();
  scenarioComplete = false;

  private readonly send: (line: string) => void;
  /** A fixed virtual eye for AR gaze emulation; scene content sits near z=0..2. */
  private readonly eye: Vec3 = { x: 0, y: 1.6, z: -2 };
  private pinching = false;
  private gripping = false;

  constructor(profile: Profile, send: (line: string) => void) {
    this.profile = profile;
    this.send = send;
  }

  get joined(): boolean {
    return this.clientId !== null;
  }

  capabilities(): readonly string[] {
    return this.profile === "AR" ? AR_CAPABILITIES : VR_CAPABILITIES;
  }

  hello(session: string): void {
    this.send(encode({ t: "hello", session, profile: this.profile }));
  }

  // --- server messages; the only mutation path for session state ---

  handleMessage(msg: WireMessage): void {
    switch (msg.t) {
      case "welcome":
        this.clientId = msg.client;
        this.digest = msg.digest;
        this.lastServerTick = msg.snapshot.tick;
        this.replica.apply(msg);
        break;
      case "pose":
        this.lastServerTick = Math.max(this.lastServerTick, msg.tick);
        this.replica.apply(msg);
        break;
      case "key":
        this.lastServerTick = Math.max(this.lastServerTick, msg.tick);
        this.replica.apply(msg);
        break;
      case "act":
        this.actionStatuses.set(msg.path, msg.status);
        break;
      case "out":
        this.lastServerTick = Math.max(this.lastServerTick, msg.tick);
        this.handleOutput(msg.event, msg.tick);
        break;
      case "bye":
        if (!this.joined && msg.reason !== undefined) {
          this.refusedReason = msg.reason;
        }
        break;
      case "hash":
      case "hello":
      case "input":
        break;
    }
  }

  private handleOutput(event: Record<string, unknown>, tick: number): void {
    const kind = event["kind"] as string;
    switch (kind) {
      case "Notification": {
        const text = String(event["text"] ?? "");
        this.pushNotification(String(event["level"] ?? "info"), text, tick);
        const joined = /^(c\d+) joined/.exec(text);
        const left = /^(c\d+) left/.exec(text);
        if (joined) this.peers.add(joined[1]!);
        if (left) this.peers.delete(left[1]!);
        break;
      }
      case "HologramShown": {
        const id = String(event["id"] ?? event["object_id"]);
        this.holograms.set(id, { id, pose: wirePoseToPose(event["pose"]) });
        break;
      }
      case "AidlineShown": {
        const [x, y, z] = event["anchor"] as [number, number, number];
        this.aidlines.push({ text: String(event["text"]), anchor: { x, y, z } });
        break;
      }
      case "QuizShown":
        this.quiz = { question: String(event["text"]), choices: [],
                      feedback: null };
        break;
      case "QuizChoice":
        if (this.quiz !== null) {
          this.quiz.choices[event["choice"] as number] = String(event["text"]);
        }
        break;
      case "QuizFeedback":
        if (this.quiz !== null) {
          this.quiz.feedback = {
            choice: event["choice"] as number,
            correct: event["correct"] as boolean,
          };
        }
        break;
      case "TintApplied":
        this.tints.push({
          objectId: String(event["object_id"]),
          color: String(event["color"]),
          untilTick: tick + ((event["duration_ticks"] as number) ?? 0),
        });
        break;
      case "NarrationStarted":
      case "NarrationLine":
        if (event["text"] !== undefined) {
          this.captions.push({ objectId: String(event["object_id"] ?? ""),
                               text: String(event["text"]), tick });
        }
        break;
      case "ActionCompleted": {
        const path = String(event["path"]);
        this.completed.push(path);
        this.actionStatuses.set(path, "completed");
        // server-confirmed transition: the completed action's own hints end
        this.holograms.clear();
        this.aidlines = [];
        if (this.quiz !== null && this.quiz.feedback?.correct) {
          this.quiz = null;
        }
        break;
      }
      case "ScenarioCompleted":
        this.scenarioComplete = true;
        break;
    }
  }

  private pushNotification(level: string, text: string, tick: number): void {
    this.notifications.push({ level, text, tick });
    if (this.notifications.length > NOTIFICATION_RING) {
      this.notifications.splice(0,
        this.notifications.length - NOTIFICATION_RING);
    }
  }

  activeTints(): Tint[] {
    return this.tints.filter((t) => t.untilTick > this.lastServerTick);
  }

  // --- gestures; each lowers to one or two raw-event input messages ---

  private sendRaw(raw: RawEventJson): void {
    if (this.clientId === null) return;
    this.send(encode({
      t: "input",
      client: this.clientId,
      tick: this.lastServerTick,
      raw,
    }));
  }

  /** AR: aim the gaze at a world point and tap. */
  tapAt(target: Vec3): void {
    if (this.profile !== "AR") return;
    this.sendRaw({ kind: "ARHeadPose",
                   pose: poseJson(this.eye, lookRotation(vsub(target, this.eye))) });
    this.sendRaw({ kind: "ARTapUp" });
  }

  /** AR: gaze so the virtual hand lands on the target, then pinch. */
  pinchStartAt(target: Vec3): void {
    if (this.profile !== "AR" || this.pinching) return;
    this.pinching = true;
    this.sendRaw({ kind: "ARHeadPose", pose: headPoseForHand(target, this.eye) });
    this.sendRaw({ kind: "ARPinchStart" });
  }

  /** AR: drag the pinched hand (head follows so the hand tracks the cursor). */
  dragTo(target: Vec3): void {
    if (this.profile !== "AR" || !this.pinching) return;
    this.sendRaw({ kind: "ARHeadPose", pose: headPoseForHand(target, this.eye) });
  }

  pinchEnd(): void {
    if (this.profile !== "AR" || !this.pinching) return;
    this.pinching = false;
    this.sendRaw({ kind: "ARPinchEnd" });
  }

  voiceUse(): void {
    if (this.profile !== "AR") return;
    this.sendRaw({ kind: "ARVoice", word: "use" });
  }

  /** VR: move the right hand to a world point. */
  moveHandTo(target: Vec3): void {
    if (this.profile !== "VR") return;
    this.sendRaw({ kind: "VRHandPose", hand: "right",
                   pose: poseJson(target, QUAT_IDENTITY) });
  }

  gripDownAt(target: Vec3): void {
    if (this.profile !== "VR" || this.gripping) return;
    this.gripping = true;
    this.moveHandTo(target);
    this.sendRaw({ kind: "VRGripDown", hand: "right" });
  }

  gripUp(): void {
    if (this.profile !== "VR" || !this.gripping) return;
    this.gripping = false;
    this.sendRaw({ kind: "VRGripUp", hand: "right" });
  }

  triggerDown(): void {
    if (this.profile !== "VR") return;
    this.sendRaw({ kind: "VRTriggerDown", hand: "right" });
  }
}

function wirePoseToPose(vals: unknown): Pose {
  // holograms ride the out-event pose field as an 8-real dual quaternion
  return dqToPose(dqFromList(vals as number[]));
}
