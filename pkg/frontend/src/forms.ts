/**
 * Pure form-state logic for the three rating views. Keeping this free of DOM
 * concerns makes the gating rules (submit only when complete / in range)
 * directly testable.
 */

import { countSentences, type Script } from "./sentences.js";

export const DQ_CRITERIA = [
  "consistency",
  "naturalness",
  "relevance",
  "emotion_appropriateness",
  "norm_appropriateness",
  "scenario_coherence",
] as const;

export type DqCriterion = (typeof DQ_CRITERIA)[number];
export type DqState = Partial<Record<DqCriterion, number>>;

export const DQ_LABELS: Record<DqCriterion, string> = {
  consistency: "Consistency",
  naturalness: "Naturalness",
  relevance: "Relevance",
  emotion_appropriateness: "Emotional appropriateness",
  norm_appropriateness: "Social norm appropriateness",
  scenario_coherence: "Scenario coherence",
};

export function setScore(state: DqState, criterion: DqCriterion, value: number): DqState {
  if (!Number.isInteger(value) || value < 1 || value > 5) {
    return state; // out-of-range input leaves the form untouched
  }
  return { ...state, [criterion]: value };
}

export function dqComplete(state: DqState): boolean {
  return DQ_CRITERIA.every((criterion) => typeof state[criterion] === "number");
}

export function missingCriteria(state: DqState): DqCriterion[] {
  return DQ_CRITERIA.filter((criterion) => typeof state[criterion] !== "number");
}

export function dqPayload(state: DqState): { scores: Record<DqCriterion, number> } {
  if (!dqComplete(state)) {
    throw new Error(`form incomplete: ${missingCriteria(state).join(", ")}`);
  }
  const scores = {} as Record<DqCriterion, number>;
  for (const criterion of DQ_CRITERIA) scores[criterion] = state[criterion] as number;
  return { scores };
}

// -- A/B choice ---------------------------------------------------------------

export type AbChoice = "A" | "B";

/** Keyboard parity: the A/B keys produce the same record as clicking. */
export function abKeyToChoice(key: string): AbChoice | null {
  if (key === "a" || key === "A") return "A";
  if (key === "b" || key === "B") return "B";
  return null;
}

export function abPayload(choice: AbChoice | null): { choice: AbChoice } {
  if (choice !== "A" && choice !== "B") throw new Error("choose A or B first");
  return { choice };
}

// -- exemplar editor ------------------------------------------------------------

export const SCENARIO_RANGE: readonly [number, number] = [1, 2];
export const SITUATION_RANGE: readonly [number, number] = [3, 5];

export interface ExemplarDraft {
  scenario: string;
  situation: string;
}

export interface ExemplarGate {
  scenarioCount: number;
  situationCount: number;
  scenarioOk: boolean;
  situationOk: boolean;
  ok: boolean;
}

export function exemplarGate(draft: ExemplarDraft, script: Script): ExemplarGate {
  const scenarioCount = countSentences(draft.scenario, script);
  const situationCount = countSentences(draft.situation, script);
  const scenarioOk =
    scenarioCount >= SCENARIO_RANGE[0] && scenarioCount <= SCENARIO_RANGE[1];
  const situationOk =
    situationCount >= SITUATION_RANGE[0] && situationCount <= SITUATION_RANGE[1];
  return { scenarioCount, situationCount, scenarioOk, situationOk, ok: scenarioOk && situationOk };
}

// -- submission guard --------------------------------------------------------------

/**
 * Wrap an async submit so rapid double-clicks collapse into one in-flight
 * call (the service also rejects duplicates; this keeps the UI quiet).
 */
export function singleFlight<T extends unknown[]>(
  action: (...args: T) => Promise<void>,
): (...args: T) => Promise<void> {
  let pending = false;
  return async (...args: T) => {
    if (pending) return;
    pending = true;
    try {
      await action(...args);
    } finally {
      pending = false;
    }
  };
}
