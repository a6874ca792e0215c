/**
 * DOM rendering for the annotation flow: the full dialog stays visible while
 * the annotator works through turn ratings, the dialog-level questions, a
 * review step, and submit. Digit keys 1-5 rate the first unrated turn.
 */

import { ApiClient, ApiError } from "./api.js";
import { DIALOG_QUESTIONS, TURN_QUESTION, TURN_SCALE_LABELS } from "./questions.js";
import { TaskViewState } from "./state.js";
import { DialogAnswerField } from "./types.js";

export interface ViewContext {
  root: HTMLElement;
  client: ApiClient;
  annotator: string;
  state: TaskViewState | null;
  loadNext: () => Promise<void>;
}

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function banner(root: HTMLElement, message: string, kind: "error" | "info"): void {
  const existing = root.querySelector(".banner");
  existing?.remove();
  if (!message) return;
  const node = el("div", `banner banner-${kind}`, message);
  root.prepend(node);
}

function renderTurns(ctx: ViewContext, container: HTMLElement): void {
  const state = ctx.state as TaskViewState;
  const list = el("ol", "turns");
  state.dialog.turns.forEach((turn, i) => {
    const item = el("li", "turn");
    const user = el("p", "user-text");
    user.append(el("span", "speaker", "User: "), turn.user_text);
    const system = el("p", "system-text");
    system.append(el("span", "speaker", "System: "), turn.system_text);
    item.append(user, system);

    const rater = el("fieldset", "turn-rating");
    rater.append(el("legend", undefined, TURN_QUESTION));
    for (let rating = 1; rating <= 5; rating += 1) {
      const label = el("label", "rating-option");
      const input = document.createElement("input");
      input.type = "radio";
      input.name = `turn-${turn.index}`;
      input.value = String(rating);
      input.checked = state.turnRatings[i] === rating;
      input.disabled = state.phase === "submitted";
      input.addEventListener("change", () => {
        state.rateTurn(turn.index, rating);
        render(ctx);
      });
      label.append(input, ` ${TURN_SCALE_LABELS[rating]}`);
      rater.append(label);
    }
    item.append(rater);
    list.append(item);
  });
  container.append(list);
}

function renderDialogQuestions(ctx: ViewContext, container: HTMLElement): void {
  const state = ctx.state as TaskViewState;
  const section = el("section", "dialog-questions");
  section.append(el("h2", undefined, "Dialog-level questions"));
  for (const question of DIALOG_QUESTIONS) {
    const block = el("fieldset", "dialog-question");
    block.append(el("legend", undefined, `[${question.heading}] ${question.prompt}`));
    for (const option of question.options) {
      const label = el("label", "rating-option");
      const input = document.createElement("input");
      input.type = "radio";
      input.name = question.field;
      input.value = option.value;
      input.checked = state.answers[question.field] === option.value;
      input.disabled = state.phase === "submitted" || state.phase === "review";
      input.addEventListener("change", () => {
        const result = state.answerDialogQuestion(
          question.field as DialogAnswerField,
          option.value,
        );
        if (!result.ok) banner(ctx.root, result.error ?? "", "error");
      });
      label.append(input, ` ${option.label}`);
      block.append(label);
    }
    section.append(block);
  }
  container.append(section);
}

function renderControls(ctx: ViewContext, container: HTMLElement): void {
  const state = ctx.state as TaskViewState;
  const controls = el("div", "controls");
  if (state.phase === "dialog_questions" || state.phase === "review") {
    const backButton = el("button", "back", "Back") as HTMLButtonElement;
    backButton.addEventListener("click", () => {
      state.back();
      render(ctx);
    });
    controls.append(backButton);
  }
  if (state.phase === "rating_turns" || state.phase === "dialog_questions") {
    const nextButton = el("button", "next", "Continue") as HTMLButtonElement;
    nextButton.addEventListener("click", () => {
      const result = state.advance();
      banner(ctx.root, result.ok ? "" : result.error ?? "", "error");
      render(ctx);
    });
    controls.append(nextButton);
  }
  if (state.phase === "review") {
    const submitButton = el("button", "submit", "Submit annotation") as HTMLButtonElement;
    submitButton.disabled = !state.canSubmit();
    submitButton.addEventListener("click", () => {
      void submit(ctx);
    });
    controls.append(submitButton);
  }
  container.append(controls);
}

async function submit(ctx: ViewContext): Promise<void> {
  const state = ctx.state as TaskViewState;
  try {
    await ctx.client.submitAnnotation(state.task.task_id, state.buildPayload());
    state.markSubmitted();
    banner(ctx.root, "Submitted. Loading the next task...", "info");
    await ctx.loadNext();
  } catch (err) {
    // server rejections and network failures both leave the draft intact
    const message = err instanceof ApiError ? err.message : `network error: ${err}`;
    banner(ctx.root, message, "error");
    render(ctx);
  }
}

export function render(ctx: ViewContext): void {
  const { root, state } = ctx;
  root.textContent = "";
  if (state === null) {
    root.append(el("p", "idle", "No tasks are waiting. Check back later."));
    return;
  }
  const header = el("header");
  header.append(
    el("h1", undefined, `Dialog ${state.dialog.dialog_id}`),
    el(
      "p",
      "phase",
      `Step: ${state.phase.replace("_", " ")} (task ${state.task.task_id})`,
    ),
  );
  root.append(header);
  renderTurns(ctx, root);
  if (state.phase !== "rating_turns") {
    renderDialogQuestions(ctx, root);
  }
  renderControls(ctx, root);
}

export function installKeyboardShortcuts(ctx: ViewContext): void {
  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    const state = ctx.state;
    if (!state || state.phase !== "rating_turns") return;
    if (event.key >= "1" && event.key <= "5") {
      const turn = state.firstUnratedTurn();
      if (turn !== null) {
        state.rateTurn(turn, Number(event.key));
        render(ctx);
        event.preventDefault();
      }
    }
  });
}
