import { describe, expect, it } from "vitest";

import {
  DQ_CRITERIA,
  abKeyToChoice,
  abPayload,
  dqComplete,
  dqPayload,
  exemplarGate,
  missingCriteria,
  setScore,
  singleFlight,
  type DqState,
} from "../src/forms.js";

function fullState(value = 5): DqState {
  const state: DqState = {};
  for (const criterion of DQ_CRITERIA) state[criterion] = value;
  return state;
}

describe("dq form gating", () => {
  it("submit blocked until all six criteria are set", () => {
    let state: DqState = {};
    expect(dqComplete(state)).toBe(false);
    for (const criterion of DQ_CRITERIA.slice(0, 5)) {
      state = setScore(state, criterion, 4);
    }
    expect(dqComplete(state)).toBe(false);
    expect(missingCriteria(state)).toEqual(["scenario_coherence"]);
    state = setScore(state, "scenario_coherence", 5);
    expect(dqComplete(state)).toBe(true);
  });

  it("accepts all six set to 5", () => {
    expect(dqPayload(fullState(5)).scores.norm_appropriateness).toBe(5);
  });

  it("ignores out-of-range values", () => {
    let state: DqState = {};
    state = setScore(state, "consistency", 0);
    state = setScore(state, "consistency", 6);
    state = setScore(state, "consistency", 2.5);
    expect(state.consistency).toBeUndefined();
  });

  it("refuses to build an incomplete payload", () => {
    expect(() => dqPayload({ consistency: 3 })).toThrow(/form incomplete/);
  });
});

describe("A/B choice", () => {
  it("keyboard parity with clicks", () => {
    expect(abKeyToChoice("a")).toBe("A");
    expect(abKeyToChoice("B")).toBe("B");
    expect(abKeyToChoice("x")).toBeNull();
    expect(abPayload(abKeyToChoice("a"))).toEqual({ choice: "A" });
  });

  it("blocks submission without a choice", () => {
    expect(() => abPayload(null)).toThrow(/choose A or B/);
  });
});

describe("exemplar editor gating", () => {
  const scenario = "Alex and Jordan are talking at the office.";

  it("four-sentence situation enables submit", () => {
    const situation = "One here. Two here. Three here. Four here.";
    const gate = exemplarGate({ scenario, situation }, "latin");
    expect(gate.situationCount).toBe(4);
    expect(gate.ok).toBe(true);
  });

  it("six-sentence situation blocks submit with a red counter", () => {
    const situation = "S1. S2. S3. S4. S5. S6.";
    const gate = exemplarGate({ scenario, situation }, "latin");
    expect(gate.situationCount).toBe(6);
    expect(gate.situationOk).toBe(false);
    expect(gate.ok).toBe(false);
  });

  it("three-sentence scenario blocks submit", () => {
    const gate = exemplarGate(
      { scenario: "One. Two. Three.", situation: "A one. A two. A three." },
      "latin",
    );
    expect(gate.scenarioOk).toBe(false);
    expect(gate.ok).toBe(false);
  });

  it("counts hangul sentence endings for KR exemplars", () => {
    const gate = exemplarGate(
      {
        scenario: "사무실에서 두 사람이 이야기를 나눈다.",
        situation: "두 사람은 오랜 친구다. 분위기가 무겁다. 대화가 곧 시작된다.",
      },
      "hangul",
    );
    expect(gate.scenarioCount).toBe(1);
    expect(gate.situationCount).toBe(3);
    expect(gate.ok).toBe(true);
  });
});

describe("singleFlight", () => {
  it("collapses rapid double submissions into one in-flight call", async () => {
    let calls = 0;
    let release: () => void = () => {};
    const blocked = new Promise<void>((resolve) => {
      release = resolve;
    });
    const submit = singleFlight(async () => {
      calls += 1;
      await blocked;
    });
    const first = submit();
    const second = submit(); // double-click while the first is pending
    release();
    await Promise.all([first, second]);
    expect(calls).toBe(1);
    await submit(); // a later, separate submission goes through
    expect(calls).toBe(2);
  });
});
