/**
 * Schematic 2.5-D renderer: top-down (world x/z onto canvas x/y) with the
 * height as a cue (marker radius and a label offset).  Pure read-side: it
 * draws from the view model and the replica's interpolated poses and never
 * mutates either.
 */

import { ConsoleViewModel } from "./console.js";
import { Pose } from "./dq.js";

/** The slice of CanvasRenderingContext2D the renderer needs; tests stub it. */
export interface DrawContext {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(segments: number[]): void;
}

export interface Viewport {
  width: number;
  height: number;
  /** world metres per canvas unit */
  scale: number;
  /** world origin in canvas coordinates */
  originX: number;
  originY: number;
}

export function defaultViewport(width: number, height: number): Viewport {
  return { width, height, scale: width / 8, originX: width / 2,
           originY: height / 2 };
}

export function project(vp: Viewport, x: number, z: number): [number, number] {
  return [vp.originX + x * vp.scale, vp.originY - z * vp.scale];
}

function markerRadius(vp: Viewport, y: number): number {
  return Math.max(4, 0.08 * vp.scale * (1 + 0.25 * y));
}

function drawObject(ctx: DrawContext, vp: Viewport, id: string, pose: Pose,
                    tinted: boolean, ghost: boolean): void {
  const [cx, cy] = project(vp, pose.position.x, pose.position.z);
  const r = markerRadius(vp, pose.position.y);
  ctx.beginPath();
  ctx.arc(cx, cy, r, 0, Math.PI * 2);
  if (ghost) {
    ctx.setLineDash([4, 4]);
    ctx.strokeStyle = "#8aa";
    ctx.stroke();
    ctx.setLineDash([]);
  } else {
    ctx.fillStyle = tinted ? "#d33" : id.startsWith("quiz:") ? "#fb3" : "#69c";
    ctx.fill();
  }
  ctx.fillStyle = "#333";
  ctx.fillText(id, cx + r + 2, cy - r - 2);
}

export function renderFrame(ctx: DrawContext, vp: Viewport,
                            vm: ConsoleViewModel, nowMs: number): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  const poses = vm.replica.render(nowMs);
  const tinted = new Set(vm.activeTints().map((t) => t.objectId));

  for (const holo of vm.holograms.values()) {
    drawObject(ctx, vp, holo.id, holo.pose, false, true);
  }
  for (const [id, pose] of poses) {
    drawObject(ctx, vp, id, pose, tinted.has(id), false);
  }
  for (const aid of vm.aidlines) {
    const [ax, ay] = project(vp, aid.anchor.x, aid.anchor.z);
    ctx.strokeStyle = "#2a2";
    ctx.beginPath();
    ctx.moveTo(ax - 20, ay + 20);
    ctx.lineTo(ax, ay);
    ctx.stroke();
    ctx.fillStyle = "#2a2";
    ctx.fillText(aid.text, ax - 60, ay + 34);
  }
  let px = 8;
  for (const peer of [...vm.peers].sort()) {
    if (peer === vm.clientId) continue;
    ctx.fillStyle = "#96c";
    ctx.beginPath();
    ctx.arc(px + 5, 12, 5, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = "#333";
    ctx.fillText(peer, px + 14, 16);
    px += 60;
  }
  const caption = vm.captions[vm.captions.length - 1];
  if (caption !== undefined) {
    ctx.fillStyle = "#000";
    ctx.fillText(caption.text, 8, vp.height - 10);
  }
}
