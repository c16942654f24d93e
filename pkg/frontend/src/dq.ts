/**
 * Minimal pose math mirroring the server: quaternions, unit dual
 * quaternions, ScLERP, and the quantized FNV-1a pose hash used to compare a
 * replica against the server bit-for-bit.
 */

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

export interface Quat {
  w: number;
  x: number;
  y: number;
  z: number;
}

export interface Pose {
  position: Vec3;
  rotation: Quat;
}

export interface DualQuat {
  real: Quat;
  dual: Quat;
}

export const QUAT_IDENTITY: Quat = { w: 1, x: 0, y: 0, z: 0 };

export function vec3(x: number, y: number, z: number): Vec3 {
  return { x, y, z };
}

export function vsub(a: Vec3, b: Vec3): Vec3 {
  return { x: a.x - b.x, y: a.y - b.y, z: a.z - b.z };
}

export function vnorm(v: Vec3): number {
  return Math.hypot(v.x, v.y, v.z);
}

export function qmul(a: Quat, b: Quat): Quat {
  return {
    w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
    x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
    y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
    z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
  };
}

export function qconj(q: Quat): Quat {
  return { w: q.w, x: -q.x, y: -q.y, z: -q.z };
}

export function qdot(a: Quat, b: Quat): number {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

export function dqFromList(vals: readonly number[]): DualQuat {
  if (vals.length !== 8) {
    throw new Error("dual quaternion needs 8 components");
  }
  return {
    real: { w: vals[0]!, x: vals[1]!, y: vals[2]!, z: vals[3]! },
    dual: { w: vals[4]!, x: vals[5]!, y: vals[6]!, z: vals[7]! },
  };
}

export function dqToList(q: DualQuat): number[] {
  return [q.real.w, q.real.x, q.real.y, q.real.z,
          q.dual.w, q.dual.x, q.dual.y, q.dual.z];
}

export function dqToPose(q: DualQuat): Pose {
  const t = qmul(q.dual, qconj(q.real));
  return {
    position: { x: 2 * t.x, y: 2 * t.y, z: 2 * t.z },
    rotation: q.real,
  };
}

export function dqFromPose(p: Pose): DualQuat {
  const t: Quat = { w: 0, x: p.position.x, y: p.position.y, z: p.position.z };
  const tq = qmul(t, p.rotation);
  return {
    real: p.rotation,
    dual: { w: 0.5 * tq.w, x: 0.5 * tq.x, y: 0.5 * tq.y, z: 0.5 * tq.z },
  };
}

export function isUnit(q: DualQuat, tol = 1e-6): boolean {
  const n = Math.hypot(q.real.w, q.real.x, q.real.y, q.real.z);
  return Math.abs(n - 1) <= tol && Math.abs(qdot(q.real, q.dual)) <= tol;
}

function dqNormalized(q: DualQuat): DualQuat {
  const n = Math.hypot(q.real.w, q.real.x, q.real.y, q.real.z);
  const real: Quat = { w: q.real.w / n, x: q.real.x / n,
                       y: q.real.y / n, z: q.real.z / n };
  let dual: Quat = { w: q.dual.w / n, x: q.dual.x / n,
                     y: q.dual.y / n, z: q.dual.z / n };
  const d = qdot(real, dual);
  dual = { w: dual.w - d * real.w, x: dual.x - d * real.x,
           y: dual.y - d * real.y, z: dual.z - d * real.z };
  return { real, dual };
}

function dqMul(a: DualQuat, b: DualQuat): DualQuat {
  const real = qmul(a.real, b.real);
  const d1 = qmul(a.real, b.dual);
  const d2 = qmul(a.dual, b.real);
  return dqNormalized({
    real,
    dual: { w: d1.w + d2.w, x: d1.x + d2.x, y: d1.y + d2.y, z: d1.z + d2.z },
  });
}

function dqConj(q: DualQuat): DualQuat {
  return { real: qconj(q.real), dual: qconj(q.dual) };
}

function screwPower(q: DualQuat, t: number): DualQuat {
  const vec = vec3(q.real.x, q.real.y, q.real.z);
  const sinHalf = vnorm(vec);
  const theta = 2 * Math.atan2(sinHalf, q.real.w);

  if (theta < 1e-6) {
    // near-zero rotation: pure translation, interpolate linearly
    return {
      real: { ...QUAT_IDENTITY },
      dual: { w: 0, x: t * q.dual.x, y: t * q.dual.y, z: t * q.dual.z },
    };
  }

  const axis = vec3(vec.x / sinHalf, vec.y / sinHalf, vec.z / sinHalf);
  const tq = qmul(q.dual, qconj(q.real));
  const trans = vec3(2 * tq.x, 2 * tq.y, 2 * tq.z);
  const pitch = trans.x * axis.x + trans.y * axis.y + trans.z * axis.z;
  const cot = 1 / Math.tan(theta / 2);
  const cross = vec3(
    trans.y * axis.z - trans.z * axis.y,
    trans.z * axis.x - trans.x * axis.z,
    trans.x * axis.y - trans.y * axis.x,
  );
  const moment = vec3(
    0.5 * (cross.x + (trans.x - pitch * axis.x) * cot),
    0.5 * (cross.y + (trans.y - pitch * axis.y) * cot),
    0.5 * (cross.z + (trans.z - pitch * axis.z) * cot),
  );

  const halfT = (theta * t) / 2;
  const dT = pitch * t;
  const s = Math.sin(halfT);
  const c = Math.cos(halfT);
  return {
    real: { w: c, x: axis.x * s, y: axis.y * s, z: axis.z * s },
    dual: {
      w: -0.5 * dT * s,
      x: moment.x * s + 0.5 * dT * c * axis.x,
      y: moment.y * s + 0.5 * dT * c * axis.y,
      z: moment.z * s + 0.5 * dT * c * axis.z,
    },
  };
}

/** Screw linear interpolation a * (a^-1 b)^t. */
export function dqSclerp(a: DualQuat, b: DualQuat, t: number): DualQuat {
  if (t < 0 || t > 1) {
    throw new Error(`interpolation parameter ${t} outside [0, 1]`);
  }
  if (qdot(a.real, b.real) < 0) {
    b = {
      real: { w: -b.real.w, x: -b.real.x, y: -b.real.y, z: -b.real.z },
      dual: { w: -b.dual.w, x: -b.dual.x, y: -b.dual.y, z: -b.dual.z },
    };
  }
  if (t === 0) return a;
  const diff = dqMul(dqConj(a), b);
  return dqNormalized(dqMul(a, screwPower(diff, t)));
}

// --- quantized pose hashing, bit-identical to the server ---

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;
const MASK64 = 0xffffffffffffffffn;
const POS_QUANTUM = 1e-4;
const ROT_QUANTUM = 1e-4;

function fnv1a(data: Uint8Array, h: bigint): bigint {
  for (const byte of data) {
    h ^= BigInt(byte);
    h = (h * FNV_PRIME) & MASK64;
  }
  return h;
}

/** Round half to even, matching the server's quantization exactly. */
function quantize(value: number, quantum: number): bigint {
  const scaled = value / quantum;
  const floor = Math.floor(scaled);
  const frac = scaled - floor;
  let rounded: number;
  if (frac > 0.5) rounded = floor + 1;
  else if (frac < 0.5) rounded = floor;
  else rounded = floor % 2 === 0 ? floor : floor + 1;
  return BigInt(rounded);
}

export function canonicalPoseBytes(pose: Pose): Uint8Array {
  let q = pose.rotation;
  if (q.w < 0) {
    q = { w: -q.w, x: -q.x, y: -q.y, z: -q.z };
  }
  const buf = new ArrayBuffer(56);
  const view = new DataView(buf);
  const values = [
    quantize(pose.position.x, POS_QUANTUM),
    quantize(pose.position.y, POS_QUANTUM),
    quantize(pose.position.z, POS_QUANTUM),
    quantize(q.w, ROT_QUANTUM),
    quantize(q.x, ROT_QUANTUM),
    quantize(q.y, ROT_QUANTUM),
    quantize(q.z, ROT_QUANTUM),
  ];
  values.forEach((v, i) => view.setBigInt64(i * 8, v, true));
  return new Uint8Array(buf);
}

/** FNV-1a over sorted ids and quantized poses; compares against the server. */
export function posesHash(poses: ReadonlyMap<string, Pose>): bigint {
  const encoder = new TextEncoder();
  let h = FNV_OFFSET;
  for (const id of [...poses.keys()].sort()) {
    const idBytes = encoder.encode(id);
    const withNul = new Uint8Array(idBytes.length + 1);
    withNul.set(idBytes);
    h = fnv1a(withNul, h);
    h = fnv1a(canonicalPoseBytes(poses.get(id)!), h);
  }
  return h;
}
