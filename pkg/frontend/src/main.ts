// Cockpit wire-up: run creation, stream subscription, canvas loop, guidance.

import { control, createRun, getRun, listScenarios, postGuidance, setSpeed } from "./api.js";
import { renderScene } from "./render.js";
import { connectStream, type StreamHandle } from "./sse.js";
import type { MapLane } from "./types.js";
import {
  applyEvent,
  initialViewModel,
  recordSubmission,
  resolveSubmission,
  solverBadge,
  type ViewModel,
} from "./viewmodel.js";

const $ = <T extends HTMLElement>(id: string): T => document.getElementById(id) as T;

let vm: ViewModel = initialViewModel();
let lanes: MapLane[] = [];
let stream: StreamHandle | null = null;
let currentRunId: string | null = null;

async function boot(): Promise<void> {
  const select = $<HTMLSelectElement>("scenario");
  for (const name of await listScenarios()) {
    const opt = document.createElement("option");
    opt.value = name;
    opt.textContent = name;
    if (name === "open_door") opt.selected = true;
    select.appendChild(opt);
  }
  $<HTMLButtonElement>("start").onclick = startRun;
  $<HTMLButtonElement>("send").onclick = sendGuidance;
  $<HTMLInputElement>("guidance-text").addEventListener("keydown", (e) => {
    if (e.key === "Enter") sendGuidance();
  });
  $<HTMLInputElement>("guidance-text").addEventListener("input", updateSendEnabled);
  $<HTMLButtonElement>("pause").onclick = () => currentRunId && control(currentRunId, "pause");
  $<HTMLButtonElement>("resume").onclick = () => currentRunId && control(currentRunId, "resume");
  $<HTMLSelectElement>("speed").onchange = () => {
    if (currentRunId) setSpeed(currentRunId, Number($<HTMLSelectElement>("speed").value));
  };
  updateSendEnabled();
  requestAnimationFrame(paint);
}

async function startRun(): Promise<void> {
  stream?.close();
  vm = initialViewModel();
  const scenario = $<HTMLSelectElement>("scenario").value;
  const recovery = $<HTMLSelectElement>("recovery").value;
  const speed = Number($<HTMLSelectElement>("speed").value);
  try {
    const { run_id } = await createRun(scenario, { recovery, speed });
    currentRunId = run_id;
  } catch (err) {
    banner(`run creation failed: ${err}`);
    return;
  }
  const info = await getRun(currentRunId);
  lanes = (info as unknown as { map: MapLane[] }).map ?? [];
  subscribe();
}

function subscribe(): void {
  if (!currentRunId) return;
  const factory = (url: string) => new EventSource(url);
  stream = connectStream(
    `/runs/${currentRunId}/stream`,
    {
      onEvent(ev) {
        applyEvent(vm, ev);
        syncPanels();
      },
      onStateChange(state) {
        if (state === "live") banner("");
        else if (state === "reconnecting") banner("connection lost, reconnecting...");
        vm.connection = state === "closed" ? "ended" : state === "live" ? "live" : "reconnecting";
      },
    },
    factory,
  );
}

function banner(text: string): void {
  const el = $<HTMLDivElement>("banner");
  el.textContent = text;
  el.style.display = text ? "block" : "none";
}

function updateSendEnabled(): void {
  const text = $<HTMLInputElement>("guidance-text").value.trim();
  $<HTMLButtonElement>("send").disabled = text.length === 0 || !currentRunId;
}

async function sendGuidance(): Promise<void> {
  const input = $<HTMLInputElement>("guidance-text");
  const text = input.value.trim();
  if (!text || !currentRunId) return;
  const entry = recordSubmission(vm, text, vm.frame?.t ?? 0);
  syncPanels();
  const result = await postGuidance(currentRunId, text);
  resolveSubmission(entry, result.ok, result.detail);
  if (result.ok) input.value = "";
  updateSendEnabled();
  syncPanels();
}

function syncPanels(): void {
  $<HTMLSpanElement>("badge").textContent = solverBadge(vm);
  $<HTMLSpanElement>("tick").textContent = vm.frame ? `t=${vm.frame.t.toFixed(2)} s  v=${vm.frame.ego.speed.toFixed(2)} m/s` : "";

  const timeline = $<HTMLUListElement>("timeline");
  timeline.replaceChildren(
    ...vm.reasoning.map((rec) => {
      const li = document.createElement("li");
      const head = document.createElement("div");
      const verdict = rec.output
        ? `plan: ${rec.output.behavior_plan.join(" -> ")}${rec.output.route_replanning ? " (replanning)" : ""}`
        : rec.error
          ? `error: ${rec.error}`
          : `none (${rec.analysis?.cause ?? "?"})`;
      head.textContent = `[tick ${rec.request_tick}] ${rec.branch}: ${verdict}`;
      li.appendChild(head);
      const pre = document.createElement("pre");
      pre.textContent = rec.observation_text + (rec.guidance_text ? `\nguidance: ${rec.guidance_text}` : "");
      li.appendChild(pre);
      return li;
    }),
  );

  const history = $<HTMLUListElement>("history");
  history.replaceChildren(
    ...vm.guidance.map((g) => {
      const li = document.createElement("li");
      const linked = g.consumedByTick !== undefined ? ` -> reasoning @ tick ${g.consumedByTick}` : "";
      li.textContent = `"${g.text}" [${g.status}${g.detail ? `: ${g.detail}` : ""}]${linked}`;
      li.className = g.status;
      return li;
    }),
  );
}

function paint(): void {
  const canvas = $<HTMLCanvasElement>("scene");
  const ctx = canvas.getContext("2d");
  if (ctx) {
    renderScene(ctx, canvas.width, canvas.height, lanes, vm.frame, vm.replannedRoute !== null);
  }
  requestAnimationFrame(paint);
}

boot();
