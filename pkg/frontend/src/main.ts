/**
 * Browser entry point: wires the canvas, tool buttons, and sliders to
 * the session store. All geometry comes from service responses.
 */

import { ServiceClient, fetchTransport, CaseName } from "./client.js";
import { Camera, dragTarget, drawMesh } from "./render.js";
import { SessionStore, Tool } from "./state.js";

const SERVICE_URL = "http://localhost:8000";

// a unit cube as the starter mesh; real meshes arrive via file upload
const CUBE_VERTICES = [
  [-1, -1, -1], [-1, -1, 1], [-1, 1, -1], [-1, 1, 1],
  [1, -1, -1], [1, -1, 1], [1, 1, -1], [1, 1, 1],
];
const CUBE_FACES = [
  [0, 1, 3, 2], [4, 6, 7, 5], [0, 4, 5, 1],
  [2, 3, 7, 6], [0, 2, 6, 4], [1, 5, 7, 3],
];

export async function start(root: Document): Promise<void> {
  const canvas = root.getElementById("view") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas unavailable");

  const store = new SessionStore(new ServiceClient(fetchTransport(SERVICE_URL)));
  const cam: Camera = { yaw: 0.6, pitch: 0.4, zoom: 90 };
  const redraw = () => drawMesh(ctx, store, cam);
  store.onChange(redraw);

  await store.open(CUBE_VERTICES, CUBE_FACES);

  for (const tool of ["paint", "bandpass", "handles", "dual"] as Tool[]) {
    root.getElementById(`tool-${tool}`)?.addEventListener("click", () => {
      store.state.tool = tool;
      if (tool === "dual") void store.toggleDual();
    });
  }

  for (const name of ["affine", "parallel", "vertical"] as CaseName[]) {
    root.getElementById(`case-${name}`)?.addEventListener("click", () => {
      if (store.state.selectedFaces.length) {
        void store.paintCase(store.state.selectedFaces, name);
      }
    });
  }

  const sliders = ["low", "high", "gain"].map(
    (id) => root.getElementById(`slider-${id}`) as HTMLInputElement,
  );
  for (const slider of sliders) {
    slider?.addEventListener("input", () => {
      const [low, high, gain] = sliders.map((s) => Number(s.value));
      store.setSlider(low, high, gain);
    });
  }

  let dragging: number | null = null;
  canvas.addEventListener("pointerdown", (ev) => {
    if (store.state.tool === "handles" && store.rendered) {
      dragging = nearestVertex(store, ev.offsetX, ev.offsetY, cam, canvas);
    }
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (dragging !== null && store.rendered) {
      const src = store.rendered.vertices[dragging];
      void store.dragHandle(
        dragging,
        dragTarget(src, ev.movementX, ev.movementY, cam),
      );
    }
  });
  canvas.addEventListener("pointerup", () => {
    dragging = null;
  });

  redraw();
}

function nearestVertex(
  store: SessionStore,
  px: number,
  py: number,
  cam: Camera,
  canvas: HTMLCanvasElement,
): number {
  const mesh = store.rendered;
  if (!mesh) return 0;
  let best = 0;
  let bestDist = Infinity;
  mesh.vertices.forEach((v, i) => {
    const cy = Math.cos(cam.yaw);
    const sy = Math.sin(cam.yaw);
    const cp = Math.cos(cam.pitch);
    const sp = Math.sin(cam.pitch);
    const x = (cy * v[0] + sy * v[1]) * cam.zoom + canvas.width / 2;
    const z2 = -sp * (-sy * v[0] + cy * v[1]) + cp * v[2];
    const y = -z2 * cam.zoom + canvas.height / 2;
    const dist = (x - px) ** 2 + (y - py) ** 2;
    if (dist < bestDist) {
      bestDist = dist;
      best = i;
    }
  });
  return best;
}

if (typeof document !== "undefined") {
  void start(document);
}
