/**
 * Wristband display model: six motor indicators whose brightness mirrors
 * the latest command frame, nothing else. All cue logic lives server-side;
 * this model is a dumb readout of the frame stream.
 */

import { FrameMessage } from './protocol.js';

export const DEFAULT_ANGLES = [0, 60, 120, 180, 240, 300];

export class BandModel {
  readonly angles: number[];
  intensity: number[];
  lastFrame: FrameMessage | null = null;

  constructor(angles: number[] = DEFAULT_ANGLES) {
    if (angles.length !== 6) {
      throw new Error(`band needs 6 motors, got ${angles.length}`);
    }
    this.angles = [...angles];
    this.intensity = [0, 0, 0, 0, 0, 0];
  }

  applyFrame(frame: FrameMessage): void {
    if (frame.intensity.length !== this.angles.length) {
      throw new Error('frame channel count does not match the band');
    }
    this.intensity = [...frame.intensity];
    this.lastFrame = frame;
  }

  /** Indicator brightness in [0, 1]; 0 <-> silent, 1 <-> intensity 255. */
  brightness(channel: number): number {
    return this.intensity[channel] / 255;
  }

  /** True while every motor runs at full intensity (the success burst). */
  isFullBurst(): boolean {
    return this.intensity.every((v) => v === 255);
  }

  isSilent(): boolean {
    return this.intensity.every((v) => v === 0);
  }
}

/** Draw the band as a ring of indicator dots. Angle 0 is the wearer's
 * right, counterclockwise positive (dorsal view). */
export function drawBand(
  ctx: CanvasRenderingContext2D,
  band: BandModel,
  cx: number,
  cy: number,
  radius: number,
): void {
  ctx.save();
  ctx.strokeStyle = '#555';
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(cx, cy, radius, 0, Math.PI * 2);
  ctx.stroke();
  band.angles.forEach((angleDeg, ch) => {
    const a = (angleDeg * Math.PI) / 180;
    const x = cx + radius * Math.cos(a);
    const y = cy - radius * Math.sin(a);
    const b = band.brightness(ch);
    ctx.beginPath();
    ctx.arc(x, y, 9 + 4 * b, 0, Math.PI * 2);
    ctx.fillStyle = `rgba(255, ${Math.round(140 + 60 * b)}, 40, ${0.15 + 0.85 * b})`;
    ctx.fill();
    ctx.strokeStyle = '#888';
    ctx.lineWidth = 1;
    ctx.stroke();
  });
  ctx.restore();
}
