/**
 * Sentence counting for live editor feedback, mirroring the server's
 * segmentation rules: scenario fields must hold 1-2 sentences and situation
 * fields 3-5, so the counter has to agree with the service's validator.
 *
 * - latin: terminal punctuation (. ! ? …) followed by whitespace/end, with a
 *   small abbreviation guard (Mr., Dr., e.g., single initials).
 * - han: full-width terminators (。！？…) anywhere, plus the latin rule.
 * - hangul: the latin rule, plus a sentence-final ending (다/요/죠/까/네)
 *   immediately followed by a newline.
 */

export type Script = "latin" | "hangul" | "han";

const SCRIPT_BY_LANGUAGE: Record<string, Script> = {
  EN: "latin",
  KR: "hangul",
  ZH: "han",
};

export function scriptForLanguage(code: string): Script {
  return SCRIPT_BY_LANGUAGE[code] ?? "latin";
}

const ABBREVIATIONS = new Set([
  "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "no",
  "e.g", "i.e", "cf", "al",
]);

function isAbbreviation(prefix: string): boolean {
  const tail = prefix.replace(/\.+$/, "");
  const match = /([A-Za-z][A-Za-z.]*)$/.exec(tail);
  if (!match) return false;
  const token = match[1];
  if (token.length === 1 && token === token.toUpperCase()) return true;
  return ABBREVIATIONS.has(token.toLowerCase());
}

function splitLatin(text: string): string[] {
  const out: string[] = [];
  const boundary = /[.!?…]+(?=\s|$)/g;
  let start = 0;
  for (const match of text.matchAll(boundary)) {
    const index = match.index ?? 0;
    if (text[index] === "." && isAbbreviation(text.slice(start, index))) continue;
    out.push(text.slice(start, index + match[0].length));
    start = index + match[0].length;
  }
  if (start < text.length) out.push(text.slice(start));
  return out;
}

function splitHan(text: string): string[] {
  const out: string[] = [];
  const boundary = /[。！？…]+|[.!?]+(?=\s|$)/g;
  let start = 0;
  for (const match of text.matchAll(boundary)) {
    const index = match.index ?? 0;
    out.push(text.slice(start, index + match[0].length));
    start = index + match[0].length;
  }
  if (start < text.length) out.push(text.slice(start));
  return out;
}

function splitHangul(text: string): string[] {
  const chunks = text.split(/(?<=[다요죠까네])\n/);
  return chunks.flatMap(splitLatin);
}

export function splitSentences(text: string, script: Script): string[] {
  const raw =
    script === "han" ? splitHan(text) : script === "hangul" ? splitHangul(text) : splitLatin(text);
  return raw.map((chunk) => chunk.trim()).filter((chunk) => chunk.length > 0);
}

export function countSentences(text: string, script: Script): number {
  return splitSentences(text, script).length;
}
