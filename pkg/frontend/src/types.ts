// Wire types mirrored from the simulator service.

export interface FrameActor {
  id: string;
  kind: "vehicle" | "pedestrian" | "static_obstacle";
  x: number;
  y: number;
  heading: number;
  speed: number;
  half_extent: [number, number];
  door_open: boolean;
  traversable: boolean;
}

export interface FrameLight {
  id: string;
  lane: string;
  s: number;
  color: "red" | "yellow" | "green";
}

export interface Frame {
  type: "frame";
  run_id: string;
  tick: number;
  t: number;
  ego: {
    x: number;
    y: number;
    heading: number;
    speed: number;
    behavior: string;
    lane: string;
  };
  actors: FrameActor[];
  lights: FrameLight[];
  route: [number, number][];
  solver: "off" | "idle" | "detecting" | "reasoning" | "plan_active";
  remaining_m: number;
}

export interface ReasoningRecord {
  type: "reasoning";
  request_tick: number;
  applied_tick: number | null;
  branch: "guided" | "autonomous";
  observation_text: string;
  guidance_text: string | null;
  analysis: { immobilized: 0 | 1; cause: string } | null;
  output: RecoveryPlanJson | null;
  error: string | null;
  latency_ticks: number;
  backend: string;
  stale_rejected: boolean;
}

export interface RecoveryPlanJson {
  behavior_plan: string[];
  reason: string;
  route_replanning: boolean;
  route_start_point?: { lane: string; s: number };
}

export interface GuidanceEcho {
  text: string;
  sim_time: number;
}

export interface FinalMetrics {
  ds?: number;
  rc?: number;
  success?: boolean;
  end_reason?: string;
  error?: string;
}

export type StreamEvent =
  | { kind: "frame"; data: Frame }
  | { kind: "reasoning"; data: ReasoningRecord }
  | { kind: "plan"; data: ReasoningRecord }
  | { kind: "guidance"; data: GuidanceEcho }
  | { kind: "metrics_final"; data: FinalMetrics }
  | { kind: "hello"; data: { run_id: string } };

export interface RunInfo {
  run_id: string;
  scenario: string;
  status: "running" | "finished" | "failed";
  sim_time: number;
  final_metrics: FinalMetrics | null;
}

export interface MapLane {
  id: string;
  centerline: [number, number][];
  width: number;
}
