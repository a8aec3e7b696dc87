/** Run console view-model: per-node state chips derived from run status. */

import type { RunStatus } from "./types.js";

export type ChipState = "pending" | "running" | "ok" | "failed" | "skipped";

export interface NodeChip {
  nodeId: string;
  state: ChipState;
  error: string;
}

export function buildChips(nodeIds: string[], status: RunStatus | null): NodeChip[] {
  return nodeIds.map((nodeId) => {
    if (!status) {
      return { nodeId, state: "pending", error: "" };
    }
    const task = status.record?.tasks?.[nodeId];
    if (task) {
      return {
        nodeId,
        state: task.status === "failed" ? "failed" : "ok",
        error: task.error,
      };
    }
    if (status.state === "running" || status.state === "queued") {
      return { nodeId, state: status.state === "running" ? "running" : "pending", error: "" };
    }
    // the run settled without this node executing: its wave was skipped
    return { nodeId, state: status.state === "failed" ? "skipped" : "pending", error: "" };
  });
}

export function runSettled(status: RunStatus | null): boolean {
  return status !== null && (status.state === "finished" || status.state === "failed");
}

/** Poll the status endpoint until the run settles. */
export async function pollRun(
  fetchStatus: () => Promise<RunStatus>,
  onUpdate: (status: RunStatus) => void,
  intervalMs = 1000,
  maxPolls = 600,
): Promise<RunStatus> {
  let last: RunStatus | null = null;
  for (let i = 0; i < maxPolls; i++) {
    last = await fetchStatus();
    onUpdate(last);
    if (runSettled(last)) {
      return last;
    }
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
  throw new Error("run did not settle within the polling budget");
}
