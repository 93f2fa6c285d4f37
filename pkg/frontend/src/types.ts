// Payload shapes of the proxy's consent API.

export interface BoundSide {
  class: string;
  guard: string | null;
}

export interface BoundaryView {
  input: BoundSide;
  output: BoundSide;
  taint: string[];
  effects: string[];
}

export interface OptionView {
  index: number;
  label: string;
  durable: boolean;
  action: "ALLOW" | "DENY";
  boundary: BoundaryView;
}

export interface PendingAskView {
  ask_id: number;
  issued_at: number;
  degraded: boolean;
  call: { step: number; tool_ref: string; params: Record<string, unknown> };
  boundary: BoundaryView;
  options: OptionView[];
}

export interface RuleView {
  id: string;
  action: string;
  origin: string;
  created_at: number;
  boundary: BoundaryView;
}

export interface PolicyView {
  invariants: RuleView[];
  rules: RuleView[];
}

export interface AuditRecordView {
  step: number;
  tool_ref: string;
  boundary: BoundaryView;
  verdict: "ALLOW" | "DENY" | "ASK";
  matched: string[];
  latency_ms: number;
  option: string | null;
}

export interface DecideResult {
  outcomes: { step: number; tool_ref: string; kind: string }[];
}

export interface InvariantDiagnostics {
  error: string;
  offset: number;
  expected: string[];
  line: number | null;
}
