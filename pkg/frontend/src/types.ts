// Payload shapes of the dialogue service API.

export interface SystemAct {
  turn: number;
  speaker: string;
  listener: string;
  act_type: string;
  canonical_text: string;
  lf: string;
}

export interface UtteranceResponse {
  turn: number;
  system_acts: SystemAct[];
  graph_delta: { created: number[] };
  diagnostics: string[];
}

export interface PlanNode {
  id: number;
  kind: string;
  agent: string;
  status: string;
  probability: string;
  formula: string;
  verbalization: string;
  color: string;
}

export interface PlanEdge {
  type: string;
  from: number;
  to: number | null;
}

export interface PlanResponse {
  legend: Record<string, string>;
  nodes: PlanNode[];
  edges: PlanEdge[];
}

export interface TranscriptEntry {
  turn: number;
  speaker: string;
  listener: string;
  act_type: string;
  lf: string;
  text: string;
}

export interface ExplainResponse {
  reason: string | null;
  notes: string[];
}
