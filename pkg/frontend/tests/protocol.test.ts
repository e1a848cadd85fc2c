/**
 * Protocol tests against a scripted in-memory service: recompute
 * counting, zero-gain echo, debounce, and stale-response handling.
 */

import { describe, expect, it } from "vitest";

import { MeshPayload, ServiceClient, Transport } from "../src/client.js";
import { Scheduler, SessionStore } from "../src/state.js";

const CUBE_VERTICES = [
  [-1, -1, -1], [-1, -1, 1], [-1, 1, -1], [-1, 1, 1],
  [1, -1, -1], [1, -1, 1], [1, 1, -1], [1, 1, 1],
];
const CUBE_FACES = [
  [0, 1, 3, 2], [4, 6, 7, 5], [0, 4, 5, 1],
  [2, 3, 7, 6], [0, 2, 6, 4], [1, 5, 7, 3],
];

/** Scripted service double; mirrors the revision protocol. */
class FakeService {
  revision = 0;
  ready = true;
  recomputeCount = 0;
  bandpassCalls: Array<{ gain: number; revision: number }> = [];
  /** Pending deferred responses, released by the test. */
  deferred: Array<(mesh: MeshPayload) => void> = [];
  deferNext = false;

  transport: Transport = async (method, path, body) => {
    if (method === "POST" && path === "/sessions") {
      return { id: "s1", revision: this.revision, ready: this.ready };
    }
    if (path.endsWith("/status")) {
      return { revision: this.revision, ready: this.ready };
    }
    if (path.endsWith("/cases")) {
      this.revision += 1;
      this.recomputeCount += 1;
      return { revision: this.revision, ready: true };
    }
    if (path.endsWith("/bandpass")) {
      const req = body as { gain: number; revision: number };
      this.bandpassCalls.push({ gain: req.gain, revision: req.revision });
      if (req.revision !== this.revision) {
        throw new Error("stale");
      }
      const mesh = this.meshFor(req.gain, req.revision);
      if (this.deferNext) {
        this.deferNext = false;
        return new Promise<MeshPayload>((resolve) => {
          this.deferred.push(resolve);
        });
      }
      return mesh;
    }
    if (path.endsWith("/deform")) {
      const req = body as { revision: number };
      if (req.revision !== this.revision) throw new Error("stale");
      return this.meshFor(0.5, req.revision);
    }
    throw new Error(`unhandled ${method} ${path}`);
  };

  meshFor(gain: number, revision: number): MeshPayload {
    const vertices =
      gain === 0
        ? CUBE_VERTICES
        : CUBE_VERTICES.map((v) => [v[0] + gain, v[1], v[2]]);
    return { vertices, faces: CUBE_FACES, revision, ready: true };
  }
}

/** Runs scheduled callbacks only when the test advances time. */
function manualScheduler(): {
  schedule: Scheduler;
  flush: () => void;
} {
  let queue: Array<() => void> = [];
  return {
    schedule: (fn) => {
      queue.push(fn);
      return () => {
        queue = queue.filter((f) => f !== fn);
      };
    },
    flush: () => {
      const run = queue;
      queue = [];
      for (const fn of run) fn();
    },
  };
}

/** Let pending promise chains settle. */
function settle(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

async function openStore(): Promise<{
  service: FakeService;
  store: SessionStore;
  flush: () => void;
}> {
  const service = new FakeService();
  const { schedule, flush } = manualScheduler();
  const store = new SessionStore(new ServiceClient(service.transport), schedule);
  await store.open(CUBE_VERTICES, CUBE_FACES);
  return { service, store, flush };
}

describe("case painting", () => {
  it("produces exactly one recompute per revision", async () => {
    const { service, store } = await openStore();
    expect(service.recomputeCount).toBe(0);

    await store.paintCase([0, 1, 2], "parallel");
    expect(service.recomputeCount).toBe(1);
    expect(store.state.revision).toBe(1);

    await store.paintCase([3], "vertical");
    expect(service.recomputeCount).toBe(2);
    expect(store.state.revision).toBe(2);

    // revisions and recomputes stay in lockstep
    expect(service.recomputeCount).toBe(service.revision);
  });

  it("recolors painted faces with the blue/red/green code", async () => {
    const { store } = await openStore();
    await store.paintCase([2], "parallel");
    await store.paintCase([4], "vertical");
    expect(store.faceColor(0)).toBe("#3b6fd4");
    expect(store.faceColor(2)).toBe("#d4453b");
    expect(store.faceColor(4)).toBe("#3bb25a");
  });
});

describe("band-pass slider", () => {
  it("renders the source mesh at gain 0", async () => {
    const { store, flush } = await openStore();
    store.setSlider(0, 5, 0);
    flush();
    await settle();
    expect(store.rendered?.vertices).toEqual(CUBE_VERTICES);
  });

  it("debounces: only the last value in the window is submitted", async () => {
    const { service, store, flush } = await openStore();
    const before = service.bandpassCalls.length;
    store.setSlider(0, 5, 0.1);
    store.setSlider(0, 5, 0.2);
    store.setSlider(0, 5, 0.3);
    flush();
    await settle();
    const calls = service.bandpassCalls.slice(before);
    expect(calls).toHaveLength(1);
    expect(calls[0].gain).toBe(0.3);
  });
});

describe("revision safety", () => {
  it("never lets a stale response overwrite a newer revision", async () => {
    const { service, store } = await openStore();

    // a slow response is issued at revision 0 and arrives late
    service.deferNext = true;
    const slow = store.runBandpass();

    // meanwhile the user paints, advancing to revision 1 and rendering
    await store.paintCase([0], "parallel");
    store.state.sliders = { low: 0, high: 5, gain: 0.4 };
    await store.runBandpass();
    const fresh = store.rendered;
    expect(fresh?.revision).toBe(1);
    expect(fresh?.vertices[0][0]).toBeCloseTo(-0.6);

    // now the revision-0 payload lands; it must be discarded
    service.deferred.pop()?.(service.meshFor(0.9, 0));
    const applied = await slow;
    expect(applied).toBe(false);
    expect(store.rendered).toBe(fresh);
    expect(store.rendered?.revision).toBe(1);
  });

  it("keeps the rendered revision nondecreasing across drags", async () => {
    const { store } = await openStore();
    const seen: number[] = [];
    store.onChange(() => {
      if (store.rendered) seen.push(store.rendered.revision);
    });
    await store.dragHandle(7, [1.5, 1, 1]);
    await store.paintCase([1], "vertical");
    store.state.sliders = { low: 0, high: 5, gain: 0 };
    await store.runBandpass();
    for (let i = 1; i < seen.length; i++) {
      expect(seen[i]).toBeGreaterThanOrEqual(seen[i - 1]);
    }
  });
});
