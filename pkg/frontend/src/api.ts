// REST calls to the simulator service.

import type { RunInfo } from "./types.js";

export interface GuidanceResult {
  ok: boolean;
  status: number;
  detail?: string;
  simTime?: number;
}

export async function listScenarios(base = ""): Promise<string[]> {
  const resp = await fetch(`${base}/scenarios`);
  const body = await resp.json();
  return body.scenarios ?? [];
}

export async function createRun(
  scenario: string,
  opts: { recovery?: string; speed?: number; seed?: number } = {},
  base = "",
): Promise<{ run_id: string }> {
  const resp = await fetch(`${base}/runs`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ scenario, recovery: opts.recovery ?? "oracle", speed: opts.speed ?? 1.0, seed: opts.seed ?? 7 }),
  });
  if (!resp.ok) {
    const body = await resp.json().catch(() => ({}));
    throw new Error(body.error ?? `run creation failed (${resp.status})`);
  }
  return resp.json();
}

export async function getRun(runId: string, base = ""): Promise<RunInfo> {
  const resp = await fetch(`${base}/runs/${runId}`);
  if (!resp.ok) throw new Error(`run lookup failed (${resp.status})`);
  return resp.json();
}

export async function postGuidance(runId: string, text: string, base = ""): Promise<GuidanceResult> {
  const resp = await fetch(`${base}/runs/${runId}/guidance`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ text }),
  });
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const detail =
      resp.status === 410 ? "run ended" : resp.status === 422 ? "message must be 1..500 chars" : body.error;
    return { ok: false, status: resp.status, detail };
  }
  return { ok: true, status: resp.status, simTime: body.sim_time };
}

export async function control(runId: string, action: "pause" | "resume", base = ""): Promise<void> {
  await fetch(`${base}/runs/${runId}/${action}`, { method: "POST" });
}

export async function setSpeed(runId: string, factor: number, base = ""): Promise<void> {
  await fetch(`${base}/runs/${runId}/speed`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ factor }),
  });
}
