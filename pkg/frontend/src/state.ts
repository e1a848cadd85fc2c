/**
 * View state and protocol logic for the session UI.
 *
 * The store never mutates geometry locally: the rendered mesh always
 * comes from an acknowledged service response, stale responses are
 * dropped, and the rendered revision is nondecreasing.
 */

import {
  CaseName,
  CasesBody,
  HandleBody,
  MeshPayload,
  ServiceClient,
} from "./client.js";

export type Tool = "paint" | "bandpass" | "handles" | "dual";

/** Face color code: blue = affine, red = parallel, green = vertical. */
export const CASE_COLORS: Record<CaseName, string> = {
  affine: "#3b6fd4",
  parallel: "#d4453b",
  vertical: "#3bb25a",
};

export interface RenderedMesh {
  vertices: number[][];
  faces: number[][];
  revision: number;
}

export interface ViewState {
  sessionId: string | null;
  revision: number;
  tool: Tool;
  selectedFaces: number[];
  selectedVertices: number[];
  sliders: { low: number; high: number; gain: number };
  pendingRequest: boolean;
  dualVisible: boolean;
}

/** Schedules a callback after a delay; returns a cancel function. */
export type Scheduler = (fn: () => void, ms: number) => () => void;

const timeoutScheduler: Scheduler = (fn, ms) => {
  const handle = setTimeout(fn, ms);
  return () => clearTimeout(handle);
};

export const SLIDER_DEBOUNCE_MS = 100;

export class SessionStore {
  readonly state: ViewState = {
    sessionId: null,
    revision: 0,
    tool: "paint",
    selectedFaces: [],
    selectedVertices: [],
    sliders: { low: 0, high: 0, gain: 0 },
    pendingRequest: false,
    dualVisible: false,
  };

  /** Geometry on screen; null until the first acknowledged response. */
  rendered: RenderedMesh | null = null;

  private defaultCase: CaseName = "affine";
  private faceCases: Record<string, CaseName> = {};
  private cancelSlider: (() => void) | null = null;
  private dragInFlight = false;
  private queuedDrag: HandleBody | null = null;
  private listeners: Array<() => void> = [];

  constructor(
    private readonly client: ServiceClient,
    private readonly schedule: Scheduler = timeoutScheduler,
  ) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  faceColor(faceId: number): string {
    return CASE_COLORS[this.faceCases[String(faceId)] ?? this.defaultCase];
  }

  /** Accept a mesh response unless it is stale for the current view. */
  private applyMesh(mesh: MeshPayload): boolean {
    if (mesh.revision !== this.state.revision) return false;
    if (this.rendered && mesh.revision < this.rendered.revision) return false;
    this.rendered = {
      vertices: mesh.vertices,
      faces: mesh.faces,
      revision: mesh.revision,
    };
    this.notify();
    return true;
  }

  async open(vertices: number[][], faces: number[][]): Promise<void> {
    const created = await this.client.createSession(vertices, faces);
    this.state.sessionId = created.id;
    this.state.revision = created.revision;
    await this.waitReady();
    // the initial render shows the source via a zero-gain filter pass
    const echo = await this.client.bandpass(
      created.id,
      0,
      0,
      0,
      this.state.revision,
    );
    this.applyMesh(echo);
  }

  async waitReady(pollMs = 20, maxPolls = 500): Promise<void> {
    const id = this.requireSession();
    this.state.pendingRequest = true;
    try {
      for (let i = 0; i < maxPolls; i++) {
        const status = await this.client.status(id);
        this.state.revision = status.revision;
        if (status.ready) return;
        await new Promise<void>((resolve) => this.schedule(resolve, pollMs));
      }
      throw new Error("basis recompute did not finish");
    } finally {
      this.state.pendingRequest = false;
    }
  }

  /**
   * Paint a case onto faces.  One service call, hence exactly one
   * recompute, per invocation; the revision advances by one.
   */
  async paintCase(faceIds: number[], name: CaseName): Promise<void> {
    const id = this.requireSession();
    for (const fid of faceIds) this.faceCases[String(fid)] = name;
    const body: CasesBody = { default: this.defaultCase, faces: {} };
    for (const [fid, c] of Object.entries(this.faceCases)) {
      body.faces[fid] = c;
    }
    const ack = await this.client.setCases(id, body);
    this.state.revision = ack.revision;
    await this.waitReady();
  }

  /** Debounced band slider; only the last value within the window runs. */
  setSlider(low: number, high: number, gain: number): void {
    this.state.sliders = { low, high, gain };
    if (this.cancelSlider) this.cancelSlider();
    this.cancelSlider = this.schedule(() => {
      void this.runBandpass();
    }, SLIDER_DEBOUNCE_MS);
  }

  async runBandpass(): Promise<boolean> {
    const id = this.requireSession();
    const { low, high, gain } = this.state.sliders;
    const revision = this.state.revision;
    const mesh = await this.client.bandpass(id, low, high, gain, revision);
    return this.applyMesh(mesh);
  }

  /**
   * Handle drags are serialized: at most one in flight, and only the
   * newest queued target is submitted when the current one resolves.
   */
  async dragHandle(vertex: number, target: number[]): Promise<void> {
    const handle: HandleBody = { vertex, target, mode: "soft" };
    if (this.dragInFlight) {
      this.queuedDrag = handle;
      return;
    }
    this.dragInFlight = true;
    try {
      let next: HandleBody | null = handle;
      while (next) {
        const id = this.requireSession();
        const mesh = await this.client.deform(
          id,
          [next],
          this.state.revision,
        );
        this.applyMesh(mesh);
        next = this.queuedDrag;
        this.queuedDrag = null;
      }
    } finally {
      this.dragInFlight = false;
    }
  }

  async toggleDual(): Promise<void> {
    const id = this.requireSession();
    this.state.dualVisible = !this.state.dualVisible;
    const mesh = await this.client.dualView(
      id,
      this.state.dualVisible,
      this.state.revision,
    );
    this.applyMesh(mesh);
  }

  private requireSession(): string {
    if (!this.state.sessionId) throw new Error("no session open");
    return this.state.sessionId;
  }
}
