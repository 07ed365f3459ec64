/**
 * Scripted cursor trajectories: a deterministic stand-in for the human when
 * tests (or the autopilot demo) drive an interactive session.
 */

import { TargetSpec } from './protocol.js';

export interface PosePoint {
  t_us: number;
  x: number;
  y: number;
  z: number;
}

export const POSE_STEP_US = 8333;

function round3(v: number): number {
  return Math.round(v * 1000) / 1000;
}

/** Exponential approach from home to the target, then a steady hold at the
 * center long enough for the success dwell to fire. */
export function approachAndHold(
  target: TargetSpec,
  opts: { approachTicks?: number; holdMs?: number; rate?: number } = {},
): PosePoint[] {
  const approachTicks = opts.approachTicks ?? 150;
  const holdMs = opts.holdMs ?? 750;
  const rate = opts.rate ?? 0.06;
  const points: PosePoint[] = [];
  let t = 0;
  let x = 0;
  let y = 0;
  let z = 200;
  for (let i = 0; i < approachTicks; i++) {
    x += (target.x - x) * rate;
    y += (target.y - y) * rate;
    z += (target.z - z) * rate;
    points.push({ t_us: t, x: round3(x), y: round3(y), z: round3(z) });
    t += POSE_STEP_US;
  }
  const holdTicks = Math.ceil((holdMs * 1000) / POSE_STEP_US);
  for (let i = 0; i < holdTicks; i++) {
    points.push({ t_us: t, x: target.x, y: target.y, z: target.z });
    t += POSE_STEP_US;
  }
  return points;
}

/** Hold a fixed offset from the target (e.g. to park 5 mm right). */
export function holdAtOffset(
  target: TargetSpec,
  offset: { x?: number; y?: number; z?: number },
  durationMs: number,
  startT = 0,
): PosePoint[] {
  const points: PosePoint[] = [];
  const ticks = Math.ceil((durationMs * 1000) / POSE_STEP_US);
  let t = startT;
  for (let i = 0; i < ticks; i++) {
    points.push({
      t_us: t,
      x: round3(target.x + (offset.x ?? 0)),
      y: round3(target.y + (offset.y ?? 0)),
      z: round3(target.z + (offset.z ?? 0)),
    });
    t += POSE_STEP_US;
  }
  return points;
}

export function endTime(points: PosePoint[]): number {
  return points.length ? points[points.length - 1].t_us + POSE_STEP_US : 0;
}
