// Pure view-model reducer: everything the cockpit renders derives from the
// event stream plus guidance submissions. No sim state lives here, so a
// reload + resubscribe reproduces the view.

import type {
  FinalMetrics,
  Frame,
  GuidanceEcho,
  ReasoningRecord,
  StreamEvent,
} from "./types.js";

export type ConnectionState = "connecting" | "live" | "reconnecting" | "ended";

export interface GuidanceEntry {
  text: string;
  submittedAt: number;
  status: "pending" | "accepted" | "rejected";
  detail?: string;
  consumedByTick?: number;
}

export interface ViewModel {
  runId: string | null;
  frame: Frame | null;
  reasoning: ReasoningRecord[];
  guidance: GuidanceEntry[];
  connection: ConnectionState;
  finalMetrics: FinalMetrics | null;
  replannedRoute: [number, number][] | null;
  reasoningSince: number | null; // tick when the solver entered "reasoning"
  droppedStale: number;
}

export function initialViewModel(): ViewModel {
  return {
    runId: null,
    frame: null,
    reasoning: [],
    guidance: [],
    connection: "connecting",
    finalMetrics: null,
    replannedRoute: null,
    reasoningSince: null,
    droppedStale: 0,
  };
}

/** Apply one stream event. Returns the same object mutated (single consumer). */
export function applyEvent(vm: ViewModel, ev: StreamEvent): ViewModel {
  switch (ev.kind) {
    case "hello":
      vm.runId = ev.data.run_id;
      vm.connection = "live";
      break;
    case "frame": {
      // rendered tick never decreases: stale frames are discarded
      if (vm.frame !== null && ev.data.tick <= vm.frame.tick) {
        vm.droppedStale += 1;
        break;
      }
      const was = vm.frame?.solver;
      vm.frame = ev.data;
      if (ev.data.solver === "reasoning" && was !== "reasoning") {
        vm.reasoningSince = ev.data.tick;
      } else if (ev.data.solver !== "reasoning") {
        vm.reasoningSince = null;
      }
      break;
    }
    case "reasoning": {
      vm.reasoning.push(ev.data);
      linkGuidance(vm, ev.data);
      break;
    }
    case "plan": {
      // plan events repeat the reasoning record that carried a plan; remember
      // the route highlight for replanning plans
      if (ev.data.output && ev.data.output.route_replanning && vm.frame) {
        vm.replannedRoute = vm.frame.route;
      }
      break;
    }
    case "guidance":
      // server echo of an accepted message (possibly from another client)
      markAccepted(vm, ev.data);
      break;
    case "metrics_final":
      vm.finalMetrics = ev.data;
      vm.connection = "ended";
      break;
  }
  return vm;
}

function linkGuidance(vm: ViewModel, rec: ReasoningRecord): void {
  if (!rec.guidance_text) return;
  for (let i = vm.guidance.length - 1; i >= 0; i--) {
    const entry = vm.guidance[i];
    if (entry.text === rec.guidance_text && entry.consumedByTick === undefined) {
      entry.consumedByTick = rec.request_tick;
      break;
    }
  }
}

function markAccepted(vm: ViewModel, echo: GuidanceEcho): void {
  for (let i = vm.guidance.length - 1; i >= 0; i--) {
    const entry = vm.guidance[i];
    if (entry.text === echo.text && entry.status === "pending") {
      entry.status = "accepted";
      return;
    }
  }
  // message from another client: still show it in the history
  vm.guidance.push({ text: echo.text, submittedAt: echo.sim_time, status: "accepted" });
}

export function recordSubmission(vm: ViewModel, text: string, simTime: number): GuidanceEntry {
  const entry: GuidanceEntry = { text, submittedAt: simTime, status: "pending" };
  vm.guidance.push(entry);
  return entry;
}

export function resolveSubmission(
  entry: GuidanceEntry,
  ok: boolean,
  detail?: string,
): void {
  entry.status = ok ? "accepted" : "rejected";
  if (detail) entry.detail = detail;
}

export function solverBadge(vm: ViewModel): string {
  if (vm.finalMetrics) {
    const m = vm.finalMetrics;
    if (m.error) return `failed: ${m.error}`;
    return `finished: ${m.success ? "success" : m.end_reason} (DS ${fmt(m.ds)})`;
  }
  const solver = vm.frame?.solver ?? "off";
  if (solver === "reasoning" && vm.reasoningSince !== null && vm.frame) {
    const elapsed = (vm.frame.tick - vm.reasoningSince) * 0.05;
    return `reasoning (${elapsed.toFixed(1)} s)`;
  }
  return solver;
}

function fmt(x: number | undefined): string {
  return x === undefined ? "?" : (100 * x).toFixed(1);
}
