/**
 * Typed client for the subspace session service.
 *
 * The transport is injectable so tests can drive the protocol without
 * a server; the default uses fetch against a base URL.
 */

export interface MeshPayload {
  vertices: number[][];
  faces: number[][];
  revision: number;
  ready: boolean;
  energy?: number[];
  dual_residuals?: number[];
}

export interface StatusPayload {
  revision: number;
  ready: boolean;
  error?: ErrorPayload | null;
}

export interface AnalysisPayload {
  revision: number;
  ready: boolean;
  counts: Record<string, number>;
  ndof: number;
  min_ndof_bound: number;
  decoupled: boolean;
  frequencies: number[];
}

export interface ErrorPayload {
  code: string;
  message: string;
  faces?: number[];
  vertices?: number[];
}

export type CaseName = "affine" | "parallel" | "vertical";

export interface CasesBody {
  default: CaseName;
  faces: Record<string, CaseName | { normal: number[] }>;
}

export interface HandleBody {
  vertex: number;
  target: number[];
  mode?: "hard" | "soft";
}

/** One HTTP round trip; rejects with ServiceError on non-2xx. */
export interface Transport {
  (method: string, path: string, body?: unknown): Promise<unknown>;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly payload: ErrorPayload,
  ) {
    super(payload.message ?? payload.code);
  }
}

export function fetchTransport(baseUrl: string): Transport {
  return async (method, path, body) => {
    const resp = await fetch(baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await resp.json()) as ErrorPayload;
    if (!resp.ok) {
      throw new ServiceError(resp.status, payload);
    }
    return payload;
  };
}

export class ServiceClient {
  constructor(private readonly transport: Transport) {}

  async createSession(
    vertices: number[][],
    faces: number[][],
  ): Promise<{ id: string; revision: number; ready: boolean }> {
    return (await this.transport("POST", "/sessions", {
      vertices,
      faces,
    })) as { id: string; revision: number; ready: boolean };
  }

  async setCases(id: string, cases: CasesBody): Promise<StatusPayload> {
    return (await this.transport(
      "PUT",
      `/sessions/${id}/cases`,
      cases,
    )) as StatusPayload;
  }

  async status(id: string): Promise<StatusPayload> {
    return (await this.transport(
      "GET",
      `/sessions/${id}/status`,
    )) as StatusPayload;
  }

  async analysis(id: string): Promise<AnalysisPayload> {
    return (await this.transport(
      "GET",
      `/sessions/${id}/analysis`,
    )) as AnalysisPayload;
  }

  async bandpass(
    id: string,
    low: number,
    high: number,
    gain: number,
    revision: number,
  ): Promise<MeshPayload> {
    return (await this.transport("POST", `/sessions/${id}/bandpass`, {
      low,
      high,
      gain,
      revision,
    })) as MeshPayload;
  }

  async deform(
    id: string,
    handles: HandleBody[],
    revision: number,
    energy: "arap" | "asap" = "arap",
  ): Promise<MeshPayload> {
    return (await this.transport("POST", `/sessions/${id}/deform`, {
      handles,
      energy,
      revision,
    })) as MeshPayload;
  }

  async dualView(
    id: string,
    on: boolean,
    revision: number,
    shapeIndex = 0,
    amplitude = 0,
  ): Promise<MeshPayload> {
    return (await this.transport("POST", `/sessions/${id}/dual`, {
      on,
      shape_index: shapeIndex,
      amplitude,
      revision,
    })) as MeshPayload;
  }

  async exportSession(
    id: string,
  ): Promise<{ obj: string; cases: CasesBody; revision: number }> {
    return (await this.transport("GET", `/sessions/${id}/export`)) as {
      obj: string;
      cases: CasesBody;
      revision: number;
    };
  }
}
