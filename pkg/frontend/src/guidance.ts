/**
 * Interactive guidance controller: pointer x/y moves the tool laterally and
 * vertically, wheel (or W/S keys) moves depth, Enter declares alignment.
 * Poses stream on the animation loop, capped to 120 Hz by the session
 * client; engine time is microseconds since the trial started.
 */

import { SessionClient } from './session.js';
import { DEFAULT_LAYOUT, SceneLayout } from './scene.js';

export const DEPTH_WHEEL_MM = 1.0;   // per wheel notch
export const DEPTH_KEY_MM = 2.0;     // per key press

export class GuidanceController {
  readonly client: SessionClient;
  private readonly layout: SceneLayout;
  private startedAtMs: number | null = null;
  tool = { x: 0, y: 0, z: 200 };
  done = false;

  constructor(client: SessionClient, layout: SceneLayout = DEFAULT_LAYOUT) {
    this.client = client;
    this.layout = layout;
  }

  /** Engine-time microseconds for a wall-clock sample. */
  trialTime(nowMs: number): number {
    if (this.startedAtMs === null) {
      this.startedAtMs = nowMs;
    }
    return Math.max(0, Math.round((nowMs - this.startedAtMs) * 1000));
  }

  pointerMoved(canvasX: number, canvasY: number): void {
    const frontW = this.layout.width - 90;
    this.tool.x = (canvasX - frontW / 2) / this.layout.mmToPx;
    this.tool.y = (this.layout.height / 2 - canvasY) / this.layout.mmToPx;
  }

  wheel(deltaY: number): void {
    this.tool.z += deltaY < 0 ? DEPTH_WHEEL_MM : -DEPTH_WHEEL_MM;
  }

  depthKey(forward: boolean): void {
    this.tool.z += forward ? DEPTH_KEY_MM : -DEPTH_KEY_MM;
  }

  /** Animation-loop tick: stream the current pose. */
  tick(nowMs: number): void {
    if (this.done) return;
    const t = this.trialTime(nowMs);
    this.client.sendPose(t, round3(this.tool.x), round3(this.tool.y), round3(this.tool.z));
  }

  declare(nowMs: number): void {
    if (this.done) return;
    this.done = true;
    this.client.declare(this.trialTime(nowMs));
  }

  abort(nowMs: number): void {
    if (this.done) return;
    this.done = true;
    this.client.abort(this.trialTime(nowMs));
  }
}

function round3(v: number): number {
  return Math.round(v * 1000) / 1000;
}
