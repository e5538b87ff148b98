// Payload types mirroring the study server's HTTP API.
//
// Test items deliberately have no correct-answer field: the client cannot
// know, store, or leak an answer that the server never sends.

export type Phase =
  | "consent"
  | "instructions"
  | "comprehension"
  | "training"
  | "test"
  | "exit_survey"
  | "done";

export interface AdviceEntry {
  trait: string;
  value: number;
}

export interface MeasurementEntry {
  trait: string;
  value: number;
}

export interface TestItemPayload {
  item_id: string;
  index: number;
  total: number;
  measurements: MeasurementEntry[];
  advice: AdviceEntry[];
  decision_labels: string[];
  prediction?: number; // present for auditing tasks
}

export interface TrainingItemPayload extends TestItemPayload {
  correct_answer: number;
}

export interface TimerPayload {
  total_seconds: number;
  remaining_seconds: number;
  recommended_seconds: number;
}

export interface ComprehensionQuestion {
  id: string;
  text: string;
  options: string[];
  advice?: AdviceEntry[];
}

export interface SurveyQuestion {
  id: string;
  kind: string;
  text: string;
  options?: string[];
  scale?: number;
}

export interface PhasePayload {
  phase: Phase;
  kind: string;
  screened_out: boolean;
  detail?: string;
  consent?: string;
  scenario?: string;
  instructions?: string;
  traits?: string[];
  questions?: ComprehensionQuestion[] | SurveyQuestion[];
  item?: TrainingItemPayload | TestItemPayload;
  timer?: TimerPayload;
  summary?: { responses: number; test_items: number };
  attempts_used?: number;
  attempts_allowed?: number;
}

export interface SessionCreated {
  session_id: string;
  phase: Phase;
}

export interface ComprehensionResult {
  passed: boolean;
  phase?: Phase;
  screened_out?: boolean;
  correct: Record<string, boolean>;
  attempts_used?: number;
  attempts_allowed?: number;
}

export interface ResponseAck {
  accepted: boolean;
  phase: Phase;
}

export function isTrainingItem(
  item: TrainingItemPayload | TestItemPayload,
): item is TrainingItemPayload {
  return "correct_answer" in item;
}
