/**
 * DOM construction for the three rating views. Views render blinded item
 * payloads verbatim and surface submit gating from forms.ts; they never see
 * system identities because the service never serves them.
 */

import {
  DQ_CRITERIA,
  DQ_LABELS,
  type AbChoice,
  type DqState,
  type ExemplarDraft,
  dqComplete,
  exemplarGate,
} from "./forms.js";
import { type Script } from "./sentences.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderProgress(served: number, total: number): HTMLElement {
  const bar = el("div", "progress", `item ${served} of ${total}`);
  return bar;
}

function renderTurns(turns: Array<{ speaker: string; utterance: string }>): HTMLElement {
  const list = el("div", "dialogue");
  for (const turn of turns) {
    const row = el("div", "turn");
    row.append(el("span", "speaker", `${turn.speaker}: `), el("span", "utterance", turn.utterance));
    list.append(row);
  }
  return list;
}

export interface DqViewHandlers {
  onChange(criterion: (typeof DQ_CRITERIA)[number], value: number): void;
  onSubmit(): void;
}

export function renderDqView(
  item: Record<string, unknown>,
  state: DqState,
  handlers: DqViewHandlers,
): HTMLElement {
  const root = el("section", "dq-view");
  root.append(el("h2", undefined, "Rate this dialogue"));
  root.append(el("p", "context", `Scenario: ${String(item.scenario ?? "")}`));
  root.append(el("p", "context", `Situation: ${String(item.situation ?? "")}`));
  root.append(renderTurns((item.turns as Array<{ speaker: string; utterance: string }>) ?? []));

  for (const criterion of DQ_CRITERIA) {
    const row = el("fieldset", "likert-row");
    row.append(el("legend", undefined, DQ_LABELS[criterion]));
    for (let value = 1; value <= 5; value += 1) {
      const label = el("label");
      const input = el("input") as HTMLInputElement;
      input.type = "radio";
      input.name = criterion;
      input.value = String(value);
      input.checked = state[criterion] === value;
      input.addEventListener("change", () => handlers.onChange(criterion, value));
      label.append(input, document.createTextNode(String(value)));
      row.append(label);
    }
    root.append(row);
  }

  const submit = el("button", "submit", "Submit rating") as HTMLButtonElement;
  submit.disabled = !dqComplete(state);
  submit.addEventListener("click", () => handlers.onSubmit());
  root.append(submit);
  return root;
}

export interface AbViewHandlers {
  onChoice(choice: AbChoice): void;
}

export function renderAbView(
  item: Record<string, unknown>,
  handlers: AbViewHandlers,
): HTMLElement {
  const root = el("section", "ab-view");
  root.append(el("h2", undefined, "Which continuation is better?"));
  root.append(el("pre", "context", String(item.context ?? "")));

  const sides = el("div", "ab-sides");
  for (const side of ["A", "B"] as const) {
    const card = el("div", "ab-card");
    card.append(el("h3", undefined, `Response ${side}`));
    card.append(el("pre", undefined, String(item[side === "A" ? "response_a" : "response_b"] ?? "")));
    const pick = el("button", "choose", `Choose ${side} (${side.toLowerCase()})`) as HTMLButtonElement;
    pick.addEventListener("click", () => handlers.onChoice(side));
    card.append(pick);
    sides.append(card);
  }
  root.append(sides);
  root.append(el("p", "hint", "Keyboard: press a or b."));
  return root;
}

export interface ExemplarViewHandlers {
  onChange(draft: ExemplarDraft): void;
  onSubmit(): void;
}

export function renderExemplarView(
  item: Record<string, unknown>,
  draft: ExemplarDraft,
  script: Script,
  handlers: ExemplarViewHandlers,
): HTMLElement {
  const root = el("section", "exemplar-view");
  root.append(
    el("h2", undefined, `Curate exemplar ${String(item.exemplar_id ?? "")} (v${String(item.version ?? "")})`),
  );

  const gate = exemplarGate(draft, script);

  const scenarioBox = el("textarea", "editor") as HTMLTextAreaElement;
  scenarioBox.value = draft.scenario;
  scenarioBox.rows = 3;
  scenarioBox.addEventListener("input", () =>
    handlers.onChange({ ...draft, scenario: scenarioBox.value }),
  );
  const scenarioCounter = el(
    "p",
    gate.scenarioOk ? "counter ok" : "counter bad",
    `scenario: ${gate.scenarioCount} sentence(s), need 1-2`,
  );

  const situationBox = el("textarea", "editor") as HTMLTextAreaElement;
  situationBox.value = draft.situation;
  situationBox.rows = 6;
  situationBox.addEventListener("input", () =>
    handlers.onChange({ ...draft, situation: situationBox.value }),
  );
  const situationCounter = el(
    "p",
    gate.situationOk ? "counter ok" : "counter bad",
    `situation: ${gate.situationCount} sentence(s), need 3-5`,
  );

  const submit = el("button", "submit", "Submit revision") as HTMLButtonElement;
  submit.disabled = !gate.ok;
  submit.addEventListener("click", () => handlers.onSubmit());

  root.append(
    el("h3", undefined, "Scenario"),
    scenarioBox,
    scenarioCounter,
    el("h3", undefined, "Situation"),
    situationBox,
    situationCounter,
    submit,
  );
  return root;
}

export function renderDone(total: number): HTMLElement {
  const root = el("section", "done");
  root.append(el("h2", undefined, "Queue complete"));
  root.append(el("p", undefined, `All ${total} items rated. Thank you.`));
  return root;
}

export function renderError(message: string, onRetry: () => void): HTMLElement {
  const root = el("section", "error");
  root.append(el("h2", undefined, "Something went wrong"));
  root.append(el("p", undefined, message));
  const retry = el("button", "retry", "Retry") as HTMLButtonElement;
  retry.addEventListener("click", onRetry);
  root.append(retry);
  return root;
}
