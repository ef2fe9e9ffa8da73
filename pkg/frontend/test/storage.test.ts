import { describe, expect, it } from "vitest";

import { MemoryKV, clearDraft, loadDraft, saveDraft } from "../src/storage.js";

describe("draft persistence", () => {
  it("round-trips form state per (session, item)", () => {
    const kv = new MemoryKV();
    saveDraft(kv, "s1", "item-1", { consistency: 4 });
    saveDraft(kv, "s1", "item-2", { consistency: 2 });
    expect(loadDraft(kv, "s1", "item-1")).toEqual({ consistency: 4 });
    expect(loadDraft(kv, "s1", "item-2")).toEqual({ consistency: 2 });
    expect(loadDraft(kv, "s2", "item-1")).toBeNull();
  });

  it("clears drafts after submission", () => {
    const kv = new MemoryKV();
    saveDraft(kv, "s1", "item-1", { choice: "A" });
    clearDraft(kv, "s1", "item-1");
    expect(loadDraft(kv, "s1", "item-1")).toBeNull();
  });

  it("treats corrupt drafts as absent", () => {
    const kv = new MemoryKV();
    kv.setItem("normforge-console:draft:s1:item-1", "{broken");
    expect(loadDraft(kv, "s1", "item-1")).toBeNull();
  });
});
