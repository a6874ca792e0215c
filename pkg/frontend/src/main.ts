/**
 * Entry point: claims tasks for the annotator named in the query string
 * (?annotator=...) against the service that serves these assets.
 */

import { ApiClient } from "./api.js";
import { MemoryStorage, TaskViewState } from "./state.js";
import { installKeyboardShortcuts, render, ViewContext } from "./view.js";

function annotatorId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("annotator");
  if (fromQuery) return fromQuery;
  const stored = window.localStorage.getItem("dqa-annotator");
  if (stored) return stored;
  const generated = `annotator-${Math.random().toString(36).slice(2, 8)}`;
  window.localStorage.setItem("dqa-annotator", generated);
  return generated;
}

async function start(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const client = new ApiClient("", fetch.bind(window));
  const storage = window.localStorage ?? new MemoryStorage();

  const ctx: ViewContext = {
    root,
    client,
    annotator: annotatorId(),
    state: null,
    loadNext: async () => {
      try {
        const task = await client.claimNextTask(ctx.annotator);
        if (task === null) {
          ctx.state = null;
        } else {
          const dialog = await client.getDialog(task.dialog_id);
          ctx.state = new TaskViewState(task, dialog, storage);
        }
        render(ctx);
      } catch (err) {
        root.textContent = "";
        const retry = document.createElement("button");
        retry.textContent = "Retry";
        retry.addEventListener("click", () => void ctx.loadNext());
        const message = document.createElement("p");
        message.textContent = `Could not reach the annotation service: ${err}`;
        root.append(message, retry);
      }
    },
  };

  installKeyboardShortcuts(ctx);
  await ctx.loadNext();
}

void start();
