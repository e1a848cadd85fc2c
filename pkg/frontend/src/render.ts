/**
 * Minimal canvas renderer: orthographic projection with a turntable
 * camera, painter-sorted faces tinted by their case color.
 */

import { SessionStore } from "./state.js";

export interface Camera {
  yaw: number;
  pitch: number;
  zoom: number;
}

function project(
  v: number[],
  cam: Camera,
): { x: number; y: number; depth: number } {
  const cy = Math.cos(cam.yaw);
  const sy = Math.sin(cam.yaw);
  const cp = Math.cos(cam.pitch);
  const sp = Math.sin(cam.pitch);
  const x1 = cy * v[0] + sy * v[1];
  const y1 = -sy * v[0] + cy * v[1];
  const z1 = v[2];
  const y2 = cp * y1 + sp * z1;
  const z2 = -sp * y1 + cp * z1;
  return { x: x1 * cam.zoom, y: -z2 * cam.zoom, depth: y2 };
}

export function drawMesh(
  ctx: CanvasRenderingContext2D,
  store: SessionStore,
  cam: Camera,
): void {
  const mesh = store.rendered;
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (!mesh) return;
  const pts = mesh.vertices.map((v) => project(v, cam));
  const order = mesh.faces
    .map((face, fid) => ({
      fid,
      depth:
        face.reduce((acc, vid) => acc + pts[vid].depth, 0) / face.length,
    }))
    .sort((a, b) => a.depth - b.depth);
  const cx = width / 2;
  const cy = height / 2;
  for (const { fid } of order) {
    const face = mesh.faces[fid];
    ctx.beginPath();
    face.forEach((vid, i) => {
      const p = pts[vid];
      if (i === 0) ctx.moveTo(cx + p.x, cy + p.y);
      else ctx.lineTo(cx + p.x, cy + p.y);
    });
    ctx.closePath();
    ctx.fillStyle = store.faceColor(fid) + "cc";
    ctx.fill();
    ctx.strokeStyle = "#222";
    ctx.stroke();
  }
}

/** Invert the projection at a fixed view depth: screen drag to target. */
export function dragTarget(
  source: number[],
  dxScreen: number,
  dyScreen: number,
  cam: Camera,
): number[] {
  const cy = Math.cos(cam.yaw);
  const sy = Math.sin(cam.yaw);
  const cp = Math.cos(cam.pitch);
  const sp = Math.sin(cam.pitch);
  const dx = dxScreen / cam.zoom;
  const dz = -dyScreen / cam.zoom;
  // move within the screen plane (right and up vectors of the camera)
  return [
    source[0] + cy * dx + sy * sp * dz,
    source[1] - sy * dx + cy * sp * dz,
    source[2] + cp * dz,
  ];
}
