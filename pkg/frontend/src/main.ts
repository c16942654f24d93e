/**
 * Browser entry point: connect, wire DOM controls to gestures, pump the
 * replica into the canvas at the display rate.
 */

import { ConsoleViewModel, Profile } from "./console.js";
import { Vec3 } from "./dq.js";
import { MessageError, decodeFrame } from "./protocol.js";
import { DrawContext, defaultViewport, renderFrame } from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

function canvasToWorld(canvas: HTMLCanvasElement, ev: MouseEvent,
                       height: number): Vec3 {
  const vp = defaultViewport(canvas.width, canvas.height);
  const rect = canvas.getBoundingClientRect();
  const cx = ((ev.clientX - rect.left) / rect.width) * canvas.width;
  const cy = ((ev.clientY - rect.top) / rect.height) * canvas.height;
  return {
    x: (cx - vp.originX) / vp.scale,
    y: height,
    z: (vp.originY - cy) / vp.scale,
  };
}

function refreshPanels(vm: ConsoleViewModel): void {
  el("status").textContent = vm.refusedReason !== null
    ? `refused: ${vm.refusedReason}`
    : vm.joined
      ? `joined as ${vm.clientId} (${vm.profile})`
      : "connecting...";
  el("banner").style.display = vm.refusedReason !== null ? "block" : "none";

  const quiz = el("quiz");
  if (vm.quiz === null) {
    quiz.style.display = "none";
  } else {
    quiz.style.display = "block";
    el("quiz-question").textContent = vm.quiz.question;
    const list = el("quiz-choices");
    list.innerHTML = "";
    vm.quiz.choices.forEach((choice, i) => {
      const btn = document.createElement("button");
      btn.textContent = choice;
      btn.onclick = () => {
        // selection goes through the scene, like a headset user gazing at
        // the i-th flag; the flags straddle x=0 with 0.6 m spacing
        const n = vm.quiz?.choices.length ?? 1;
        const target = { x: 0.6 * (i - (n - 1) / 2), y: 1.5, z: 2.0 };
        if (vm.profile === "AR") vm.tapAt(target);
        else {
          vm.moveHandTo(target);
          vm.triggerDown();
        }
      };
      list.appendChild(btn);
    });
    el("quiz-feedback").textContent = vm.quiz.feedback === null
      ? ""
      : vm.quiz.feedback.correct ? "correct!" : "try again";
  }

  el("notifications").innerHTML = vm.notifications
    .slice(-8)
    .map((n) => `<li class="${n.level}">${n.text}</li>`)
    .join("");
  el("actions").innerHTML = [...vm.actionStatuses.entries()]
    .map(([path, status]) => `<li>${path}: ${status}</li>`)
    .join("");
}

export function start(): void {
  const params = new URLSearchParams(window.location.search);
  const profile = (params.get("profile") === "VR" ? "VR" : "AR") as Profile;
  const url = params.get("server") ?? "ws://127.0.0.1:8765";
  const socket = new WebSocket(url);
  const vm = new ConsoleViewModel(profile, (line) => socket.send(line));

  socket.onopen = () => vm.hello("console");
  socket.onmessage = (ev) => {
    try {
      for (const msg of decodeFrame(String(ev.data))) {
        vm.handleMessage(msg);
      }
    } catch (err) {
      if (!(err instanceof MessageError)) throw err;
    }
    refreshPanels(vm);
  };

  const canvas = el<HTMLCanvasElement>("scene");
  const ctx = canvas.getContext("2d") as unknown as DrawContext;
  const vp = defaultViewport(canvas.width, canvas.height);

  // capability-gated controls
  el("ar-controls").style.display = profile === "AR" ? "block" : "none";
  el("vr-controls").style.display = profile === "VR" ? "block" : "none";
  el("voice-use").onclick = () => vm.voiceUse();
  el("vr-trigger").onclick = () => vm.triggerDown();

  let dragging = false;
  canvas.onmousedown = (ev) => {
    const target = canvasToWorld(canvas, ev, 1.0);
    dragging = true;
    if (profile === "AR") vm.pinchStartAt(target);
    else vm.gripDownAt(target);
  };
  canvas.onmousemove = (ev) => {
    if (!dragging) return;
    const target = canvasToWorld(canvas, ev, 1.0);
    if (profile === "AR") vm.dragTo(target);
    else vm.moveHandTo(target);
  };
  canvas.onmouseup = () => {
    dragging = false;
    if (profile === "AR") vm.pinchEnd();
    else vm.gripUp();
  };
  canvas.onclick = (ev) => {
    if (profile === "AR") vm.tapAt(canvasToWorld(canvas, ev, 1.5));
  };

  const frame = (): void => {
    renderFrame(ctx, vp, vm, performance.now());
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.addEventListener("DOMContentLoaded", start);
}
