import { describe, expect, it } from "vitest";

import { countSentences, scriptForLanguage, splitSentences } from "../src/sentences.js";

describe("scriptForLanguage", () => {
  it("maps known codes and defaults to latin", () => {
    expect(scriptForLanguage("EN")).toBe("latin");
    expect(scriptForLanguage("KR")).toBe("hangul");
    expect(scriptForLanguage("ZH")).toBe("han");
    expect(scriptForLanguage("MS")).toBe("latin");
  });
});

describe("latin splitting", () => {
  it("counts plain sentences", () => {
    expect(countSentences("She arrived late. She apologized at once! Everyone moved on.", "latin")).toBe(3);
  });

  it("guards abbreviations", () => {
    expect(countSentences("Mr. Lee thanked Dr. Park for the report. They shook hands.", "latin")).toBe(2);
  });

  it("guards single initials", () => {
    expect(countSentences("A. Kim waved hello. Everyone smiled.", "latin")).toBe(2);
  });

  it("handles question marks and ellipses", () => {
    expect(countSentences("Really? I had no idea… Thanks for telling me.", "latin")).toBe(3);
  });

  it("preserves text across the split", () => {
    expect(splitSentences("First part. Second part! Third?", "latin")).toEqual([
      "First part.",
      "Second part!",
      "Third?",
    ]);
  });
});

describe("han splitting", () => {
  it("splits on full-width terminators without spaces", () => {
    expect(countSentences("她迟到了。她马上道歉！大家都释然了。", "han")).toBe(3);
    expect(countSentences("真的很抱歉。下次我请客。", "han")).toBe(2);
  });
});

describe("hangul splitting", () => {
  it("splits on terminal punctuation", () => {
    expect(countSentences("그녀는 늦었다. 바로 사과했다. 모두 괜찮다고 했다.", "hangul")).toBe(3);
  });

  it("splits on sentence-final endings before newlines", () => {
    expect(countSentences("정말 죄송합니다\n제가 보상할게요\n", "hangul")).toBe(2);
  });

  it("does not split clause-final endings mid-sentence", () => {
    expect(countSentences("늦었다 그리고 사과했다.", "hangul")).toBe(1);
  });
});

describe("empty input", () => {
  it("counts zero", () => {
    expect(countSentences("", "latin")).toBe(0);
    expect(countSentences("   \n ", "hangul")).toBe(0);
  });
});
