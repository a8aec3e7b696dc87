/**
 * DOM wiring for the designer: palette on the left, SVG canvas in the
 * middle, inspector/run/chat on the right. All semantics live in the
 * view-model modules; this file only renders and forwards events.
 */

import { ApiClient } from "./api.js";
import { buildChat } from "./chat.js";
import {
  addNode,
  connect,
  loadDoc,
  moveNode,
  newDoc,
  portsFor,
  removeNode,
  saveDoc,
  setParam,
  stripLayout,
} from "./document.js";
import { buildOverlay, type OverlayModel } from "./overlay.js";
import { buildPalette } from "./palette.js";
import { buildChips, pollRun } from "./runview.js";
import type { PaletteEntry, UiFlowDoc, ValidationIssue } from "./types.js";

const NODE_W = 132;
const NODE_H = 44;

interface AppState {
  doc: UiFlowDoc;
  manifest: Map<string, PaletteEntry>;
  selected: string | null;
  pendingPort: string | null; // "node.port" chosen as an edge source
  overlay: OverlayModel;
  flowId: string | null;
  runId: string | null;
  sessionId: string | null;
}

const api = new ApiClient("");
const state: AppState = {
  doc: newDoc("untitled"),
  manifest: new Map(),
  selected: null,
  pendingPort: null,
  overlay: buildOverlay([]),
  flowId: null,
  runId: null,
  sessionId: null,
};

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  return node;
}

// -- palette -------------------------------------------------------------

async function renderPalette(): Promise<void> {
  const container = el<HTMLDivElement>("palette");
  container.textContent = "";
  try {
    const manifest = await api.components();
    for (const entry of manifest) state.manifest.set(entry.kind, entry);
    const model = buildPalette(manifest);
    for (const warning of model.warnings) console.warn(warning);
    for (const group of model.groups) {
      const heading = document.createElement("h3");
      heading.textContent = group.phase;
      container.appendChild(heading);
      for (const entry of group.entries) {
        const card = document.createElement("button");
        card.className = "palette-card";
        card.textContent = entry.kind;
        card.title = entry.doc;
        card.addEventListener("click", () => addFromPalette(entry));
        container.appendChild(card);
      }
    }
  } catch (err) {
    banner(`cannot reach the engine service: ${String(err)}`);
  }
}

function addFromPalette(entry: PaletteEntry): void {
  let seq = state.doc.nodes.length;
  let id = `${entry.kind}_${seq}`;
  while (state.doc.nodes.some((n) => n.id === id)) {
    seq += 1;
    id = `${entry.kind}_${seq}`;
  }
  const params: Record<string, never> = {};
  const position = { x: 40 + (seq % 5) * 150, y: 40 + Math.floor(seq / 5) * 90 };
  const result = addNode(state.doc, id, entry.kind, params, position);
  if (!result.ok) {
    banner(result.reason);
    return;
  }
  state.selected = id;
  renderCanvas();
  renderInspector();
}

// -- canvas ----------------------------------------------------------------

function renderCanvas(): void {
  const svg = el<HTMLElement>("canvas") as unknown as SVGSVGElement;
  svg.textContent = "";
  for (const edge of state.doc.edges) {
    const [srcId] = edge.src.split(".");
    const [dstId] = edge.dst.split(".");
    const from = state.doc.layout[srcId];
    const to = state.doc.layout[dstId];
    if (!from || !to) continue;
    svg.appendChild(
      svgEl("line", {
        x1: String(from.x + NODE_W),
        y1: String(from.y + NODE_H / 2),
        x2: String(to.x),
        y2: String(to.y + NODE_H / 2),
        class: "edge",
      }),
    );
  }
  for (const node of state.doc.nodes) {
    const position = state.doc.layout[node.id] ?? { x: 20, y: 20 };
    const group = svgEl("g", {
      transform: `translate(${position.x},${position.y})`,
      "data-node": node.id,
    });
    const badge = state.overlay.badges.get(node.id);
    const classes = ["node"];
    if (badge) classes.push("node-error");
    if (state.selected === node.id) classes.push("node-selected");
    group.appendChild(
      svgEl("rect", {
        width: String(NODE_W),
        height: String(NODE_H),
        rx: "6",
        class: classes.join(" "),
      }),
    );
    const label = svgEl("text", { x: "8", y: "18", class: "node-label" });
    label.textContent = node.id;
    group.appendChild(label);
    const kindLabel = svgEl("text", { x: "8", y: "34", class: "node-kind" });
    kindLabel.textContent = node.kind;
    group.appendChild(kindLabel);
    if (badge) {
      const badgeText = svgEl("text", { x: String(NODE_W - 16), y: "16", class: "badge" });
      badgeText.textContent = "!";
      const title = svgEl("title", {});
      title.textContent = badge.map((issue) => `${issue.code}: ${issue.message}`).join("\n");
      badgeText.appendChild(title);
      group.appendChild(badgeText);
    }
    attachPortHandles(group, node.id);
    group.addEventListener("mousedown", (event) => beginDrag(event as MouseEvent, node.id));
    group.addEventListener("click", () => {
      state.selected = node.id;
      renderInspector();
      renderCanvas();
    });
    svg.appendChild(group);
  }
}

function attachPortHandles(group: SVGElement, nodeId: string): void {
  const node = state.doc.nodes.find((n) => n.id === nodeId);
  const entry = node ? state.manifest.get(node.kind) : undefined;
  if (!node || !entry) return;
  const { inPorts, outPorts } = portsFor(entry, node.params);
  inPorts.forEach((port, index) => {
    const handle = svgEl("circle", {
      cx: "0",
      cy: String(12 + index * 12),
      r: "5",
      class: "port port-in",
    });
    handle.addEventListener("click", (event) => {
      event.stopPropagation();
      finishEdge(`${nodeId}.${port}`);
    });
    group.appendChild(handle);
  });
  outPorts.forEach((port, index) => {
    const handle = svgEl("circle", {
      cx: String(NODE_W),
      cy: String(12 + index * 12),
      r: "5",
      class: "port port-out",
    });
    handle.addEventListener("click", (event) => {
      event.stopPropagation();
      state.pendingPort = `${nodeId}.${port}`;
      banner(`connecting from ${state.pendingPort}; click an input port`);
    });
    group.appendChild(handle);
  });
}

function finishEdge(dst: string): void {
  if (!state.pendingPort) {
    banner("click an output port first");
    return;
  }
  const result = connect(state.doc, state.pendingPort, dst);
  banner(result.ok ? "" : result.reason);
  state.pendingPort = null;
  renderCanvas();
}

let dragging: { nodeId: string; offsetX: number; offsetY: number } | null = null;

function beginDrag(event: MouseEvent, nodeId: string): void {
  const position = state.doc.layout[nodeId];
  if (!position) return;
  dragging = { nodeId, offsetX: event.clientX - position.x, offsetY: event.clientY - position.y };
}

function onCanvasMove(event: MouseEvent): void {
  if (!dragging) return;
  moveNode(state.doc, dragging.nodeId, event.clientX - dragging.offsetX, event.clientY - dragging.offsetY);
  renderCanvas();
}

function endDrag(): void {
  dragging = null;
}

// -- inspector ----------------------------------------------------------------

function renderInspector(): void {
  const panel = el<HTMLDivElement>("inspector");
  panel.textContent = "";
  const node = state.doc.nodes.find((n) => n.id === state.selected);
  if (!node) {
    panel.textContent = "select a node to edit its parameters";
    return;
  }
  const entry = state.manifest.get(node.kind);
  const heading = document.createElement("h3");
  heading.textContent = `${node.id} (${node.kind})`;
  panel.appendChild(heading);
  for (const spec of entry?.params ?? []) {
    const row = document.createElement("label");
    row.className = "param-row";
    row.textContent = `${spec.name}${spec.required ? " *" : ""}`;
    const input = document.createElement("input");
    const current = node.params[spec.name];
    input.value = current === undefined ? "" : JSON.stringify(current);
    input.placeholder = spec.default === null ? spec.type : JSON.stringify(spec.default);
    input.addEventListener("change", () => {
      if (input.value === "") {
        delete node.params[spec.name];
        return;
      }
      try {
        setParam(state.doc, node.id, spec.name, JSON.parse(input.value));
      } catch {
        setParam(state.doc, node.id, spec.name, input.value);
      }
    });
    row.appendChild(input);
    panel.appendChild(row);
  }
  const remove = document.createElement("button");
  remove.textContent = "delete node";
  remove.addEventListener("click", () => {
    removeNode(state.doc, node.id);
    state.selected = null;
    renderCanvas();
    renderInspector();
  });
  panel.appendChild(remove);
}

// -- validate / run --------------------------------------------------------------

function renderIssues(issues: ValidationIssue[]): void {
  state.overlay = buildOverlay(issues);
  const list = el<HTMLUListElement>("issues");
  list.textContent = "";
  for (const issue of issues) {
    const item = document.createElement("li");
    item.textContent = `${issue.code} [${issue.node_ids.join(", ")}] ${issue.message}`;
    list.appendChild(item);
  }
  el<HTMLButtonElement>("run").disabled = !state.overlay.valid || state.flowId === null;
  renderCanvas();
}

async function validateAndMaybeSubmit(): Promise<void> {
  const result = await api.submitFlow(stripLayout(state.doc));
  state.flowId = result.flowId;
  renderIssues(result.issues);
  banner(result.flowId ? `flow accepted as ${result.flowId}` : "flow has issues");
}

async function startRun(): Promise<void> {
  if (!state.flowId) return;
  state.runId = await api.startRun(state.flowId, 4, "optimized");
  const chipsHost = el<HTMLDivElement>("chips");
  const nodeIds = state.doc.nodes.map((n) => n.id);
  await pollRun(
    () => api.runStatus(state.runId as string),
    (status) => {
      chipsHost.textContent = "";
      for (const chip of buildChips(nodeIds, status)) {
        const span = document.createElement("span");
        span.className = `chip chip-${chip.state}`;
        span.textContent = chip.nodeId;
        span.title = chip.error;
        chipsHost.appendChild(span);
      }
      if (status.state === "failed") banner(`run failed: ${status.error}`);
    },
  ).catch((err) => banner(String(err)));
  await renderResults();
}

async function renderResults(): Promise<void> {
  if (!state.runId) return;
  const terminals = terminalNodes();
  const host = el<HTMLDivElement>("results");
  host.textContent = "";
  for (const nodeId of terminals) {
    try {
      const page = await api.results(state.runId, nodeId, 0, 10);
      const table = document.createElement("table");
      const head = document.createElement("tr");
      for (const column of page.columns) {
        const th = document.createElement("th");
        th.textContent = column.name;
        head.appendChild(th);
      }
      table.appendChild(head);
      for (const row of page.rows) {
        const tr = document.createElement("tr");
        for (const column of page.columns) {
          const td = document.createElement("td");
          td.textContent = JSON.stringify(row[column.name]);
          tr.appendChild(td);
        }
        table.appendChild(tr);
      }
      const caption = document.createElement("caption");
      caption.textContent = `${nodeId} (${page.row_count} rows)`;
      table.appendChild(caption);
      host.appendChild(table);
    } catch {
      // nodes without frame outputs simply have no results page
    }
  }
}

function terminalNodes(): string[] {
  const withSuccessor = new Set(state.doc.edges.map((e) => e.src.split(".")[0]));
  return state.doc.nodes.filter((n) => !withSuccessor.has(n.id)).map((n) => n.id);
}

// -- chat -----------------------------------------------------------------------

async function askAgent(): Promise<void> {
  const question = el<HTMLInputElement>("question").value;
  if (!state.sessionId) {
    if (!state.runId) {
      banner("run a flow first, then chat over its tables");
      return;
    }
    state.sessionId = await api.createSession({}, state.runId);
  }
  const { transcript } = await api.ask(state.sessionId, question);
  const model = buildChat(transcript);
  const host = el<HTMLDivElement>("chat");
  for (const step of model.steps) {
    const details = document.createElement("details");
    details.open = !step.collapsible;
    const summary = document.createElement("summary");
    summary.textContent = step.thought || "(step)";
    details.appendChild(summary);
    if (step.action) {
      const pre = document.createElement("pre");
      pre.textContent = `${step.action}(${step.actionInput ?? ""})\n-> ${step.observation ?? ""}`;
      details.appendChild(pre);
    }
    host.appendChild(details);
  }
  const bubble = document.createElement("p");
  bubble.className = "answer";
  bubble.textContent = model.answer;
  host.appendChild(bubble);
}

// -- misc -------------------------------------------------------------------------

function banner(message: string): void {
  el<HTMLDivElement>("banner").textContent = message;
}

function saveToFile(): void {
  const blob = new Blob([saveDoc(state.doc)], { type: "application/json" });
  const anchor = document.createElement("a");
  anchor.href = URL.createObjectURL(blob);
  anchor.download = `${state.doc.name || "flow"}.json`;
  anchor.click();
  URL.revokeObjectURL(anchor.href);
}

async function loadFromFile(event: Event): Promise<void> {
  const input = event.target as HTMLInputElement;
  const file = input.files?.[0];
  if (!file) return;
  state.doc = loadDoc(await file.text());
  state.flowId = null;
  renderIssues([]);
  renderCanvas();
}

export function boot(): void {
  void renderPalette();
  renderCanvas();
  renderInspector();
  el<HTMLButtonElement>("validate").addEventListener("click", () => void validateAndMaybeSubmit());
  el<HTMLButtonElement>("run").addEventListener("click", () => void startRun());
  el<HTMLButtonElement>("save").addEventListener("click", saveToFile);
  el<HTMLInputElement>("load").addEventListener("change", (e) => void loadFromFile(e));
  el<HTMLButtonElement>("ask").addEventListener("click", () => void askAgent());
  const svg = el<HTMLElement>("canvas");
  svg.addEventListener("mousemove", (e) => onCanvasMove(e as MouseEvent));
  svg.addEventListener("mouseup", endDrag);
  svg.addEventListener("mouseleave", endDrag);
}

if (typeof document !== "undefined" && document.getElementById("canvas")) {
  boot();
}
