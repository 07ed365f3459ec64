/**
 * Task scene rendering. A 2-D desk-scale stand-in for the headset view:
 * front view (x/y) plus a side depth gauge, with the target sphere also
 * scaled by depth proximity. What gets drawn depends on the condition:
 * the haptic-only condition shows a depth-reference ruler and never the
 * target; the visual conditions show an opaque target and the tool mesh.
 */

import { Condition, TargetSpec } from './protocol.js';

export interface SceneElements {
  drawTarget: boolean;
  drawToolMesh: boolean;
  drawDepthRuler: boolean;
}

export function sceneElements(condition: Condition): SceneElements {
  if (condition === 'haptic') {
    return { drawTarget: false, drawToolMesh: true, drawDepthRuler: true };
  }
  return { drawTarget: true, drawToolMesh: true, drawDepthRuler: true };
}

export interface Tool {
  x: number;
  y: number;
  z: number;
}

export interface SceneLayout {
  width: number;
  height: number;
  mmToPx: number;      // front-view scale
  depthMinMm: number;  // side-gauge range
  depthMaxMm: number;
}

export const DEFAULT_LAYOUT: SceneLayout = {
  width: 560,
  height: 420,
  mmToPx: 7,
  depthMinMm: 150,
  depthMaxMm: 450,
};

function depthToY(z: number, layout: SceneLayout): number {
  const f = (z - layout.depthMinMm) / (layout.depthMaxMm - layout.depthMinMm);
  return layout.height - 30 - f * (layout.height - 60);
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  condition: Condition,
  target: TargetSpec,
  tool: Tool,
  layout: SceneLayout = DEFAULT_LAYOUT,
): void {
  const el = sceneElements(condition);
  const frontW = layout.width - 90;
  const cx = frontW / 2;
  const cy = layout.height / 2;
  ctx.clearRect(0, 0, layout.width, layout.height);
  ctx.save();

  // Front view (x right, y up).
  ctx.strokeStyle = '#333';
  ctx.strokeRect(0.5, 0.5, frontW - 1, layout.height - 1);
  if (el.drawTarget) {
    // Depth proximity scales the sphere, a stand-in for stereo depth.
    const depthGap = Math.abs(target.z - tool.z);
    const scale = Math.max(0.35, 1 - depthGap / 300);
    const r = target.visual_radius * layout.mmToPx * scale;
    ctx.beginPath();
    ctx.arc(cx + target.x * layout.mmToPx, cy - target.y * layout.mmToPx, r, 0, Math.PI * 2);
    ctx.fillStyle = '#2d7dd2';
    ctx.fill();
  }
  if (el.drawToolMesh) {
    const tx = cx + tool.x * layout.mmToPx;
    const ty = cy - tool.y * layout.mmToPx;
    ctx.strokeStyle = '#e8e8e8';
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(tx - 10, ty);
    ctx.lineTo(tx + 10, ty);
    ctx.moveTo(tx, ty - 10);
    ctx.lineTo(tx, ty + 10);
    ctx.stroke();
  }

  // Side depth gauge.
  const gx = layout.width - 60;
  ctx.strokeStyle = '#555';
  ctx.beginPath();
  ctx.moveTo(gx, 30);
  ctx.lineTo(gx, layout.height - 30);
  ctx.stroke();
  if (el.drawDepthRuler) {
    ctx.fillStyle = '#777';
    ctx.font = '10px sans-serif';
    for (let z = layout.depthMinMm; z <= layout.depthMaxMm; z += 50) {
      const y = depthToY(z, layout);
      ctx.fillRect(gx - 4, y, 8, 1);
      ctx.fillText(String(z), gx + 8, y + 3);
    }
  }
  if (el.drawTarget) {
    ctx.fillStyle = '#2d7dd2';
    ctx.fillRect(gx - 9, depthToY(target.z, layout) - 2, 18, 4);
  }
  ctx.fillStyle = '#e8e8e8';
  ctx.fillRect(gx - 7, depthToY(tool.z, layout) - 1, 14, 2);
  ctx.restore();
}
