/** Top-down trajectory projection and drawing (north up) plus the altitude
 * strip chart.  The geometry is pure so tests can verify projections
 * without a canvas.
 */

import { GeoFence, TelemetrySample } from "./types";

export interface Viewport {
  width: number;
  height: number;
  scale: number; // canvas pixels per metre
  centerNorth: number;
  centerEast: number;
}

/** Fit the geofence box (plus margin) into a canvas, preserving aspect. */
export function fenceViewport(
  fence: GeoFence,
  width: number,
  height: number,
  marginPx = 20,
): Viewport {
  const spanNorth = fence.x_max - fence.x_min;
  const spanEast = fence.y_max - fence.y_min;
  const scale = Math.min(
    (width - 2 * marginPx) / spanEast,
    (height - 2 * marginPx) / spanNorth,
  );
  return {
    width,
    height,
    scale,
    centerNorth: (fence.x_min + fence.x_max) / 2,
    centerEast: (fence.y_min + fence.y_max) / 2,
  };
}

/** NED → canvas: east grows right, north grows up (canvas y decreases). */
export function project(
  view: Viewport,
  north: number,
  east: number,
): { x: number; y: number } {
  return {
    x: view.width / 2 + (east - view.centerEast) * view.scale,
    y: view.height / 2 - (north - view.centerNorth) * view.scale,
  };
}

export function fenceRect(view: Viewport, fence: GeoFence) {
  const topLeft = project(view, fence.x_max, fence.y_min);
  const bottomRight = project(view, fence.x_min, fence.y_max);
  return {
    x: topLeft.x,
    y: topLeft.y,
    w: bottomRight.x - topLeft.x,
    h: bottomRight.y - topLeft.y,
  };
}

const TRAIL_COLOR = "#4aa3ff";
const FENCE_COLOR = "#d08770";
const HEADING_COLOR = "#e5e9f0";

export function drawTopDown(
  ctx: CanvasRenderingContext2D,
  fence: GeoFence | null,
  trail: TelemetrySample[],
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#11151c";
  ctx.fillRect(0, 0, width, height);
  if (fence === null) return;
  const view = fenceViewport(fence, width, height);

  const rect = fenceRect(view, fence);
  ctx.strokeStyle = FENCE_COLOR;
  ctx.setLineDash([6, 4]);
  ctx.strokeRect(rect.x, rect.y, rect.w, rect.h);
  ctx.setLineDash([]);

  if (trail.length === 0) return;
  ctx.strokeStyle = TRAIL_COLOR;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  trail.forEach((sample, i) => {
    const p = project(view, sample.position.x_val, sample.position.y_val);
    if (i === 0) ctx.moveTo(p.x, p.y);
    else ctx.lineTo(p.x, p.y);
  });
  ctx.stroke();

  // current pose: dot plus heading arrow (yaw 0 = north = up)
  const last = trail[trail.length - 1];
  const pose = project(view, last.position.x_val, last.position.y_val);
  ctx.fillStyle = TRAIL_COLOR;
  ctx.beginPath();
  ctx.arc(pose.x, pose.y, 4, 0, 2 * Math.PI);
  ctx.fill();
  const yawRad = (last.yaw * Math.PI) / 180;
  const tip = {
    x: pose.x + 14 * Math.sin(yawRad),
    y: pose.y - 14 * Math.cos(yawRad),
  };
  ctx.strokeStyle = HEADING_COLOR;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(pose.x, pose.y);
  ctx.lineTo(tip.x, tip.y);
  ctx.stroke();
}

export function drawAltitudeStrip(
  ctx: CanvasRenderingContext2D,
  trail: TelemetrySample[],
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#11151c";
  ctx.fillRect(0, 0, width, height);
  if (trail.length < 2) return;
  const altitudes = trail.map((s) => -s.position.z_val);
  const maxAltitude = Math.max(10, ...altitudes);
  const t0 = trail[0].sim_time;
  const t1 = trail[trail.length - 1].sim_time;
  const span = Math.max(t1 - t0, 1e-9);
  ctx.strokeStyle = "#a3be8c";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  trail.forEach((sample, i) => {
    const x = ((sample.sim_time - t0) / span) * (width - 8) + 4;
    const y = height - 4 - (-sample.position.z_val / maxAltitude) * (height - 8);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
}
