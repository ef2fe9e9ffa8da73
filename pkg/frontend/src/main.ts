/**
 * App bootstrap: connect, open a session, then loop next -> render -> submit.
 * Form state is mirrored into localStorage per (session, item) so a reload
 * or a failed submit never loses work; the service stays the arbiter of
 * duplicates.
 */

import { ApiError, createClient, type Client, type SessionSpec } from "./api.js";
import {
  abKeyToChoice,
  abPayload,
  dqPayload,
  exemplarGate,
  setScore,
  singleFlight,
  type AbChoice,
  type DqCriterion,
  type DqState,
  type ExemplarDraft,
} from "./forms.js";
import { scriptForLanguage } from "./sentences.js";
import { clearDraft, loadDraft, saveDraft, type KV } from "./storage.js";
import {
  renderAbView,
  renderDone,
  renderDqView,
  renderError,
  renderExemplarView,
  renderProgress,
} from "./views.js";

interface AppState {
  client: Client;
  kv: KV;
  sessionId: string;
  taskKind: SessionSpec["task_kind"];
  total: number;
}

function mount(): HTMLElement {
  const root = document.getElementById("app");
  if (!root) throw new Error("#app container missing");
  return root;
}

function show(...nodes: HTMLElement[]): void {
  const root = mount();
  root.replaceChildren(...nodes);
}

async function runQueue(app: AppState): Promise<void> {
  const next = await app.client.nextItem(app.sessionId);
  if (next.done || next.item === null) {
    show(renderDone(next.total));
    return;
  }
  const item = next.item;
  const itemId = String(item.item_id);
  const progress = renderProgress(next.served, next.total);

  const advance = async () => {
    clearDraft(app.kv, app.sessionId, itemId);
    await runQueue(app);
  };

  const submitPayload = singleFlight(async (payload: Record<string, unknown>) => {
    try {
      await app.client.submitRating(app.sessionId, itemId, payload);
      await advance();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // already rated (double-click raced the debounce): move on
        await advance();
        return;
      }
      const message = err instanceof Error ? err.message : String(err);
      show(progress, renderError(message, () => void renderItem()));
    }
  });

  const renderItem = async () => {
    if (app.taskKind === "dq_rating") {
      let state: DqState = loadDraft<DqState>(app.kv, app.sessionId, itemId) ?? {};
      const paint = () => {
        show(
          progress,
          renderDqView(item, state, {
            onChange(criterion: DqCriterion, value: number) {
              state = setScore(state, criterion, value);
              saveDraft(app.kv, app.sessionId, itemId, state);
              paint();
            },
            onSubmit() {
              void submitPayload(dqPayload(state));
            },
          }),
        );
      };
      paint();
    } else if (app.taskKind === "ab_preference") {
      const choose = (choice: AbChoice) => void submitPayload(abPayload(choice));
      const onKey = (event: KeyboardEvent) => {
        const choice = abKeyToChoice(event.key);
        if (choice) {
          document.removeEventListener("keydown", onKey);
          choose(choice);
        }
      };
      document.addEventListener("keydown", onKey);
      show(progress, renderAbView(item, { onChoice: choose }));
    } else {
      const script = scriptForLanguage(String(item.language ?? "EN"));
      let draft: ExemplarDraft = loadDraft<ExemplarDraft>(app.kv, app.sessionId, itemId) ?? {
        scenario: String(item.scenario ?? ""),
        situation: String(item.situation ?? ""),
      };
      const paint = () => {
        show(
          progress,
          renderExemplarView(item, draft, script, {
            onChange(updated: ExemplarDraft) {
              draft = updated;
              saveDraft(app.kv, app.sessionId, itemId, draft);
              paint();
            },
            onSubmit() {
              if (!exemplarGate(draft, script).ok) return;
              void submitPayload({ scenario: draft.scenario, situation: draft.situation });
            },
          }),
        );
      };
      paint();
    }
  };

  await renderItem();
}

function launchForm(): void {
  const root = mount();
  const form = document.createElement("form");
  form.className = "launch";
  form.innerHTML = `
    <h1>normforge rater console</h1>
    <label>Service URL <input name="base" value="${location.origin}" /></label>
    <label>Rater token <input name="token" type="password" required /></label>
    <label>Task
      <select name="task">
        <option value="dq_rating">Dialogue rating (six criteria)</option>
        <option value="ab_preference">A/B preference</option>
        <option value="exemplar_curation">Exemplar curation</option>
      </select>
    </label>
    <label>Language filter <input name="language" placeholder="optional, e.g. KR" /></label>
    <label>Sample size <input name="sample" type="number" min="1" placeholder="all" /></label>
    <label>Seed <input name="seed" type="number" value="0" /></label>
    <button type="submit">Start session</button>
  `;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const client = createClient(String(data.get("base")), String(data.get("token")));
    const spec: SessionSpec = {
      task_kind: String(data.get("task")) as SessionSpec["task_kind"],
      seed: Number(data.get("seed") || 0),
    };
    const language = String(data.get("language") || "").trim();
    if (language) spec.language = language;
    const sample = Number(data.get("sample") || 0);
    if (sample > 0) spec.sample_size = sample;
    void client
      .createSession(spec)
      .then((session) =>
        runQueue({
          client,
          kv: window.localStorage,
          sessionId: session.session_id,
          taskKind: spec.task_kind,
          total: session.size,
        }),
      )
      .catch((err: unknown) => {
        const message = err instanceof Error ? err.message : String(err);
        show(renderError(message, launchForm));
      });
  });
  root.replaceChildren(form);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  launchForm();
}
