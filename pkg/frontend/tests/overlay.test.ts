import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { badgedNodeIds, buildOverlay } from "../src/overlay.js";
import type { ValidationIssue } from "../src/types.js";

interface ValidatorFixture {
  flow: unknown;
  issues: ValidationIssue[];
}

const fixtures: Record<string, ValidatorFixture> = JSON.parse(
  readFileSync(new URL("../fixtures/validator_issues.json", import.meta.url), "utf-8"),
);

describe("validation overlay", () => {
  it("badges exactly the issue's node ids for each validator fixture", () => {
    for (const [name, fixture] of Object.entries(fixtures)) {
      const model = buildOverlay(fixture.issues);
      const expected = [...new Set(fixture.issues.flatMap((i) => i.node_ids))].sort();
      expect(badgedNodeIds(model), name).toEqual(expected);
      expect(model.valid, name).toBe(false);
    }
  });

  it("param_missing badges the tokenizer node only", () => {
    const model = buildOverlay(fixtures["param_missing"].issues);
    expect(badgedNodeIds(model)).toEqual(["t"]);
    expect(model.badges.get("t")![0].code).toBe("PARAM_MISSING");
  });

  it("no_endpoint issues land in the flow-level list", () => {
    const model = buildOverlay(fixtures["no_endpoint"].issues);
    expect(badgedNodeIds(model)).toEqual([]);
    expect(model.flowLevel).toHaveLength(2);
    expect(model.flowLevel.every((i) => i.code === "NO_ENDPOINT")).toBe(true);
  });

  it("cycle badges every node on the cycle", () => {
    const model = buildOverlay(fixtures["cycle"].issues);
    expect(badgedNodeIds(model)).toEqual(["a"]);
  });

  it("stage_order badges both endpoints of the offending edge", () => {
    const model = buildOverlay(fixtures["stage_order"].issues);
    expect(badgedNodeIds(model)).toEqual(["fit", "sc"]);
  });

  it("an empty issue list is the green state", () => {
    const model = buildOverlay([]);
    expect(model.valid).toBe(true);
    expect(model.flowLevel).toHaveLength(0);
    expect(badgedNodeIds(model)).toEqual([]);
  });

  it("a node collecting several issues shows them all", () => {
    const issues: ValidationIssue[] = [
      { code: "PARAM_MISSING", node_ids: ["x"], message: "missing p" },
      { code: "STAGE_ORDER", node_ids: ["x", "y"], message: "order" },
    ];
    const model = buildOverlay(issues);
    expect(model.badges.get("x")).toHaveLength(2);
    expect(model.badges.get("y")).toHaveLength(1);
  });
});
