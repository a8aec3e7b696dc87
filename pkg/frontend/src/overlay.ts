/**
 * Validation overlay view-model: the service's issue list mapped onto node
 * badges. The client adds no judgement of its own; issues with no node ids
 * land in the flow-level list.
 */

import type { ValidationIssue } from "./types.js";

export interface OverlayModel {
  /** node id -> issues badged on that node */
  badges: Map<string, ValidationIssue[]>;
  /** issues that name no node (e.g. NO_ENDPOINT) */
  flowLevel: ValidationIssue[];
  valid: boolean;
}

export function buildOverlay(issues: ValidationIssue[]): OverlayModel {
  const badges = new Map<string, ValidationIssue[]>();
  const flowLevel: ValidationIssue[] = [];
  for (const issue of issues) {
    if (issue.node_ids.length === 0) {
      flowLevel.push(issue);
      continue;
    }
    for (const nodeId of issue.node_ids) {
      const bucket = badges.get(nodeId) ?? [];
      bucket.push(issue);
      badges.set(nodeId, bucket);
    }
  }
  return { badges, flowLevel, valid: issues.length === 0 };
}

export function badgedNodeIds(model: OverlayModel): string[] {
  return [...model.badges.keys()].sort();
}
