/**
 * The canvas document model. Every edit keeps the document serializable;
 * the engine format is recovered by stripping the layout sidecar. The one
 * piece of validation the client owns is input-port occupancy (an edge into
 * a taken input port is rejected inline); everything else comes from the
 * service.
 */

import type { FlowDoc, ParamValue, PaletteEntry, UiFlowDoc } from "./types.js";

export type EditResult = { ok: true } | { ok: false; reason: string };

export function newDoc(name: string): UiFlowDoc {
  return { name, nodes: [], edges: [], layout: {} };
}

export function portsFor(entry: PaletteEntry, params: Record<string, ParamValue>): {
  inPorts: string[];
  outPorts: string[];
} {
  let inPorts = entry.in_ports;
  let outPorts = entry.out_ports;
  if (entry.variadic_in) {
    const arity = Number(params["arity"] ?? defaultOf(entry, "arity") ?? 2);
    inPorts = Array.from({ length: arity }, (_, i) => `in${i}`);
  }
  if (entry.variadic_out) {
    const ways = Number(params["ways"] ?? defaultOf(entry, "ways") ?? 2);
    outPorts = Array.from({ length: ways }, (_, i) => `out${i}`);
  }
  return { inPorts, outPorts };
}

function defaultOf(entry: PaletteEntry, name: string): ParamValue | null {
  const spec = entry.params.find((p) => p.name === name);
  return spec ? spec.default : null;
}

export function addNode(
  doc: UiFlowDoc,
  id: string,
  kind: string,
  params: Record<string, ParamValue>,
  position: { x: number; y: number },
): EditResult {
  if (!/^[A-Za-z_][A-Za-z0-9_]*$/.test(id)) {
    return { ok: false, reason: `node id ${id} is not a valid identifier` };
  }
  if (doc.nodes.some((n) => n.id === id)) {
    return { ok: false, reason: `node id ${id} already exists` };
  }
  doc.nodes.push({ id, kind, params: { ...params } });
  doc.layout[id] = { ...position };
  return { ok: true };
}

export function occupiedInputs(doc: UiFlowDoc): Set<string> {
  return new Set(doc.edges.map((e) => e.dst));
}

/** Wire src "node.port" -> dst "node.port"; occupied input ports refuse. */
export function connect(doc: UiFlowDoc, src: string, dst: string): EditResult {
  const srcId = src.split(".")[0];
  const dstId = dst.split(".")[0];
  if (!doc.nodes.some((n) => n.id === srcId)) {
    return { ok: false, reason: `unknown source node ${srcId}` };
  }
  if (!doc.nodes.some((n) => n.id === dstId)) {
    return { ok: false, reason: `unknown destination node ${dstId}` };
  }
  if (occupiedInputs(doc).has(dst)) {
    return { ok: false, reason: `input port ${dst} is already connected` };
  }
  if (doc.edges.some((e) => e.src === src && e.dst === dst)) {
    return { ok: false, reason: "edge already exists" };
  }
  doc.edges.push({ src, dst });
  return { ok: true };
}

export function setParam(doc: UiFlowDoc, nodeId: string, name: string, value: ParamValue): EditResult {
  const node = doc.nodes.find((n) => n.id === nodeId);
  if (!node) {
    return { ok: false, reason: `unknown node ${nodeId}` };
  }
  node.params[name] = value;
  return { ok: true };
}

export function removeNode(doc: UiFlowDoc, nodeId: string): EditResult {
  const index = doc.nodes.findIndex((n) => n.id === nodeId);
  if (index < 0) {
    return { ok: false, reason: `unknown node ${nodeId}` };
  }
  doc.nodes.splice(index, 1);
  doc.edges = doc.edges.filter(
    (e) => e.src.split(".")[0] !== nodeId && e.dst.split(".")[0] !== nodeId,
  );
  delete doc.layout[nodeId];
  return { ok: true };
}

export function removeEdge(doc: UiFlowDoc, src: string, dst: string): EditResult {
  const before = doc.edges.length;
  doc.edges = doc.edges.filter((e) => !(e.src === src && e.dst === dst));
  return before === doc.edges.length
    ? { ok: false, reason: "no such edge" }
    : { ok: true };
}

export function moveNode(doc: UiFlowDoc, nodeId: string, x: number, y: number): void {
  doc.layout[nodeId] = { x, y };
}

/** The engine document: everything except the layout sidecar. */
export function stripLayout(doc: UiFlowDoc): FlowDoc {
  return {
    name: doc.name,
    nodes: doc.nodes.map((n) => ({ id: n.id, kind: n.kind, params: { ...n.params } })),
    edges: doc.edges.map((e) => ({ ...e })),
  };
}

export function saveDoc(doc: UiFlowDoc): string {
  return JSON.stringify(doc, null, 2) + "\n";
}

export function loadDoc(text: string): UiFlowDoc {
  const raw = JSON.parse(text) as Partial<UiFlowDoc>;
  return {
    name: raw.name ?? "",
    nodes: (raw.nodes ?? []).map((n) => ({ id: n.id, kind: n.kind, params: { ...(n.params ?? {}) } })),
    edges: (raw.edges ?? []).map((e) => ({ ...e })),
    layout: { ...(raw.layout ?? {}) },
  };
}
