// Top-down canvas renderer for the live run.

import type { Frame, FrameActor, MapLane } from "./types.js";

export interface Transform {
  scale: number;
  ox: number;
  oy: number;
}

export interface Bounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export function laneBounds(lanes: MapLane[]): Bounds {
  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const lane of lanes) {
    const half = lane.width / 2;
    for (const [x, y] of lane.centerline) {
      minX = Math.min(minX, x - half);
      maxX = Math.max(maxX, x + half);
      minY = Math.min(minY, y - half);
      maxY = Math.max(maxY, y + half);
    }
  }
  if (!Number.isFinite(minX)) return { minX: 0, minY: 0, maxX: 1, maxY: 1 };
  return { minX, minY, maxX, maxY };
}

/** Fit world bounds into a canvas, preserving aspect, world y pointing up. */
export function fitTransform(bounds: Bounds, width: number, height: number, margin = 20): Transform {
  const spanX = Math.max(1e-6, bounds.maxX - bounds.minX);
  const spanY = Math.max(1e-6, bounds.maxY - bounds.minY);
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  const ox = margin - bounds.minX * scale + (width - 2 * margin - spanX * scale) / 2;
  const oy = height - margin + bounds.minY * scale - (height - 2 * margin - spanY * scale) / 2;
  return { scale, ox, oy };
}

export function worldToScreen(t: Transform, x: number, y: number): [number, number] {
  return [t.ox + x * t.scale, t.oy - y * t.scale];
}

export const ACTOR_COLORS: Record<FrameActor["kind"], string> = {
  vehicle: "#5b8dd9",
  pedestrian: "#e8a33d",
  static_obstacle: "#9c6f4a",
};

export const LIGHT_COLORS: Record<string, string> = {
  red: "#e05555",
  yellow: "#e8c84d",
  green: "#57c26b",
};

export function routeStyle(replanned: boolean): { color: string; width: number } {
  // the replanned trajectory is highlighted in bright green
  return replanned ? { color: "#3ddc68", width: 3.0 } : { color: "#3a6ea5", width: 1.5 };
}

function drawBox(
  ctx: CanvasRenderingContext2D,
  t: Transform,
  x: number,
  y: number,
  heading: number,
  halfLen: number,
  halfWid: number,
  fill: string,
  dashed = false,
): void {
  const [sx, sy] = worldToScreen(t, x, y);
  ctx.save();
  ctx.translate(sx, sy);
  ctx.rotate(-heading);
  if (dashed) ctx.setLineDash([4, 3]);
  ctx.fillStyle = fill;
  ctx.strokeStyle = "#111";
  const w = 2 * halfLen * t.scale;
  const h = 2 * halfWid * t.scale;
  ctx.fillRect(-w / 2, -h / 2, w, h);
  ctx.strokeRect(-w / 2, -h / 2, w, h);
  ctx.restore();
}

export function renderScene(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  lanes: MapLane[],
  frame: Frame | null,
  replannedActive: boolean,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#1b1e24";
  ctx.fillRect(0, 0, width, height);
  if (lanes.length === 0) return;
  const t = fitTransform(laneBounds(lanes), width, height);

  for (const lane of lanes) {
    ctx.beginPath();
    lane.centerline.forEach(([x, y], i) => {
      const [sx, sy] = worldToScreen(t, x, y);
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    ctx.lineCap = "round";
    ctx.strokeStyle = "#3c424d";
    ctx.lineWidth = lane.width * t.scale;
    ctx.stroke();
    ctx.strokeStyle = "#575f6d";
    ctx.lineWidth = 1;
    ctx.setLineDash([6, 6]);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  if (!frame) return;

  if (frame.route.length > 1) {
    const style = routeStyle(replannedActive);
    ctx.beginPath();
    frame.route.forEach(([x, y], i) => {
      const [sx, sy] = worldToScreen(t, x, y);
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    ctx.strokeStyle = style.color;
    ctx.lineWidth = style.width;
    ctx.stroke();
  }

  for (const light of frame.lights) {
    const lane = lanes.find((l) => l.id === light.lane);
    if (!lane) continue;
    const pos = pointAt(lane.centerline, light.s);
    const [sx, sy] = worldToScreen(t, pos[0], pos[1]);
    ctx.beginPath();
    ctx.arc(sx, sy, 5, 0, 2 * Math.PI);
    ctx.fillStyle = LIGHT_COLORS[light.color] ?? "#888";
    ctx.fill();
    ctx.strokeStyle = "#111";
    ctx.stroke();
  }

  for (const actor of frame.actors) {
    drawBox(
      ctx,
      t,
      actor.x,
      actor.y,
      actor.heading,
      actor.half_extent[0],
      actor.half_extent[1],
      ACTOR_COLORS[actor.kind],
      actor.traversable,
    );
    if (actor.door_open) {
      const off = actor.half_extent[1] + 0.45;
      const dx = actor.x - off * Math.sin(actor.heading);
      const dy = actor.y + off * Math.cos(actor.heading);
      drawBox(ctx, t, dx, dy, actor.heading, 0.55, 0.45, "#d9d9d9");
    }
  }

  const ego = frame.ego;
  drawBox(ctx, t, ego.x, ego.y, ego.heading, 2.4, 1.0, "#f2f2f2");
  // heading wedge
  const tip = worldToScreen(t, ego.x + 2.0 * Math.cos(ego.heading), ego.y + 2.0 * Math.sin(ego.heading));
  const [cx, cy] = worldToScreen(t, ego.x, ego.y);
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(tip[0], tip[1]);
  ctx.strokeStyle = "#e05555";
  ctx.lineWidth = 2;
  ctx.stroke();
}

export function pointAt(line: [number, number][], s: number): [number, number] {
  let acc = 0;
  for (let i = 0; i + 1 < line.length; i++) {
    const [x0, y0] = line[i];
    const [x1, y1] = line[i + 1];
    const seg = Math.hypot(x1 - x0, y1 - y0);
    if (acc + seg >= s || i + 2 === line.length) {
      const t = seg > 0 ? Math.min(1, Math.max(0, (s - acc) / seg)) : 0;
      return [x0 + t * (x1 - x0), y0 + t * (y1 - y0)];
    }
    acc += seg;
  }
  return line[line.length - 1];
}
