/**
 * Draft persistence so raters working through long queues never lose form
 * state to a tab reload or a failed submit. The backend is injectable
 * (window.localStorage in the app, a plain map in tests).
 */

export interface KV {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const PREFIX = "normforge-console";

export function draftKey(sessionId: string, itemId: string): string {
  return `${PREFIX}:draft:${sessionId}:${itemId}`;
}

export function saveDraft(kv: KV, sessionId: string, itemId: string, state: unknown): void {
  kv.setItem(draftKey(sessionId, itemId), JSON.stringify(state));
}

export function loadDraft<T>(kv: KV, sessionId: string, itemId: string): T | null {
  const raw = kv.getItem(draftKey(sessionId, itemId));
  if (raw === null) return null;
  try {
    return JSON.parse(raw) as T;
  } catch {
    return null; // a corrupt draft is treated as absent
  }
}

export function clearDraft(kv: KV, sessionId: string, itemId: string): void {
  kv.removeItem(draftKey(sessionId, itemId));
}

export class MemoryKV implements KV {
  private map = new Map<string, string>();

  getItem(key: string): string | null {
    return this.map.has(key) ? (this.map.get(key) as string) : null;
  }

  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }

  removeItem(key: string): void {
    this.map.delete(key);
  }
}
