/** Wire types shared with the engine's HTTP API. */

export type ParamValue = string | number | boolean | string[] | Record<string, unknown>;

export interface FlowNode {
  id: string;
  kind: string;
  params: Record<string, ParamValue>;
}

export interface FlowEdge {
  src: string; // "nodeId.port"
  dst: string;
}

/** The engine's flow document: exactly what POST /flows accepts. */
export interface FlowDoc {
  name: string;
  nodes: FlowNode[];
  edges: FlowEdge[];
}

export interface NodePosition {
  x: number;
  y: number;
}

/** Engine doc plus the layout sidecar the engine ignores. */
export interface UiFlowDoc extends FlowDoc {
  layout: Record<string, NodePosition>;
}

export interface ParamSpec {
  name: string;
  type: string;
  required: boolean;
  default: ParamValue | null;
  doc: string;
}

/** One entry of GET /components. */
export interface PaletteEntry {
  kind: string;
  phase: string;
  params: ParamSpec[];
  in_ports: string[];
  out_ports: string[];
  variadic_in: boolean;
  variadic_out: boolean;
  doc: string;
}

export interface ValidationIssue {
  code: string;
  node_ids: string[];
  message: string;
}

export interface TaskInfo {
  node_id: string;
  status: string; // "ok" | "failed"
  error: string;
  started_ms: number;
  finished_ms: number;
}

export interface RunStatus {
  run_id: string;
  flow_id: string;
  mode: string;
  state: string; // queued | running | finished | failed
  error: string;
  record?: {
    status: string;
    failed_node: string;
    wall_time_ms: number;
    tasks: Record<string, TaskInfo>;
  };
}

export interface TranscriptStep {
  thought: string;
  action: string | null;
  action_input: string | null;
  observation: string | null;
}

export interface Transcript {
  question: string;
  scratchpad: TranscriptStep[];
  final_answer: string | null;
  budget_exhausted: boolean;
  answer?: string;
}
