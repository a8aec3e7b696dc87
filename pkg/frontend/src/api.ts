/** Thin client over the engine's HTTP API. */

import type { FlowDoc, PaletteEntry, RunStatus, Transcript, ValidationIssue } from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export interface SubmitResult {
  flowId: string | null;
  issues: ValidationIssue[];
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchFn(`${this.base}${path}`, init);
    const body = await response.json();
    if (!response.ok && response.status !== 422) {
      const detail = (body as { error?: string }).error ?? response.statusText;
      throw new ApiError(detail, response.status);
    }
    return body;
  }

  async components(): Promise<PaletteEntry[]> {
    return (await this.request("/components")) as PaletteEntry[];
  }

  /** Validate-on-submit: a 422 comes back as issues, not an exception. */
  async submitFlow(doc: FlowDoc): Promise<SubmitResult> {
    const response = await this.fetchFn(`${this.base}/flows`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    });
    const body = (await response.json()) as { flow_id?: string; issues?: ValidationIssue[] };
    if (response.status === 201) {
      return { flowId: body.flow_id ?? null, issues: [] };
    }
    if (response.status === 422) {
      return { flowId: null, issues: body.issues ?? [] };
    }
    throw new ApiError(`submit failed with ${response.status}`, response.status);
  }

  async startRun(flowId: string, workers: number, mode: string): Promise<string> {
    const body = (await this.request(`/flows/${flowId}/runs`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ workers, mode }),
    })) as { run_id: string };
    return body.run_id;
  }

  async runStatus(runId: string): Promise<RunStatus> {
    return (await this.request(`/runs/${runId}`)) as RunStatus;
  }

  async results(runId: string, nodeId: string, offset = 0, limit = 10): Promise<{
    columns: { name: string; dtype: string; role: string }[];
    rows: Record<string, unknown>[];
    row_count: number;
    next_offset: number | null;
  }> {
    return (await this.request(
      `/runs/${runId}/results/${nodeId}?offset=${offset}&limit=${limit}`,
    )) as never;
  }

  async createSession(tables: Record<string, string>, runId?: string): Promise<string> {
    const body = (await this.request("/agent/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(runId ? { tables, run_id: runId } : { tables }),
    })) as { session_id: string };
    return body.session_id;
  }

  async ask(
    sessionId: string,
    question: string,
    script?: { completion: string; expect?: string }[],
  ): Promise<{ answer: string; transcript: Transcript }> {
    return (await this.request(`/agent/sessions/${sessionId}/ask`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(script ? { question, script } : { question }),
    })) as never;
  }
}
