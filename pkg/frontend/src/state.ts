/**
 * Per-task view state machine.
 *
 * Phases advance rating_turns -> dialog_questions -> review -> submitted.
 * Dialog-level answers are only collectible after every turn has a rating,
 * and the submit payload is built only when every field validates, so the
 * client cannot produce a payload the service rejects for structural
 * reasons. Drafts persist through an injectable storage so annotator work
 * survives a page refresh.
 */

import {
  DialogAnswerField,
  DialogPayload,
  Questionnaire,
  QuestionnaireSchema,
  Task,
} from "./types.js";

export type Phase =
  | "rating_turns"
  | "dialog_questions"
  | "review"
  | "submitted";

export interface DraftStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class MemoryStorage implements DraftStorage {
  private store = new Map<string, string>();
  getItem(key: string): string | null {
    return this.store.has(key) ? (this.store.get(key) as string) : null;
  }
  setItem(key: string, value: string): void {
    this.store.set(key, value);
  }
  removeItem(key: string): void {
    this.store.delete(key);
  }
}

export interface StepResult {
  ok: boolean;
  error?: string;
}

interface Draft {
  phase: Phase;
  turnRatings: (number | null)[];
  answers: Partial<Record<DialogAnswerField, string>>;
}

const ANSWER_FIELDS: DialogAnswerField[] = [
  "user_satisfaction",
  "goal_count",
  "goal_progression",
  "goal_completion",
  "goal_friction",
  "coherence",
  "sentiment",
];

export class TaskViewState {
  readonly task: Task;
  readonly dialog: DialogPayload;
  phase: Phase = "rating_turns";
  turnRatings: (number | null)[];
  answers: Partial<Record<DialogAnswerField, string>> = {};

  private storage?: DraftStorage;

  constructor(task: Task, dialog: DialogPayload, storage?: DraftStorage) {
    this.task = task;
    this.dialog = dialog;
    this.turnRatings = dialog.turns.map(() => null);
    this.storage = storage;
    this.restoreDraft();
  }

  private draftKey(): string {
    return `dqa-draft-${this.task.task_id}`;
  }

  private restoreDraft(): void {
    if (!this.storage) return;
    const raw = this.storage.getItem(this.draftKey());
    if (raw === null) return;
    try {
      const draft = JSON.parse(raw) as Draft;
      if (
        Array.isArray(draft.turnRatings) &&
        draft.turnRatings.length === this.dialog.turns.length &&
        draft.phase !== "submitted"
      ) {
        this.turnRatings = draft.turnRatings;
        this.answers = draft.answers ?? {};
        this.phase = draft.phase;
      }
    } catch {
      this.storage.removeItem(this.draftKey());
    }
  }

  private saveDraft(): void {
    if (!this.storage) return;
    const draft: Draft = {
      phase: this.phase,
      turnRatings: this.turnRatings,
      answers: this.answers,
    };
    this.storage.setItem(this.draftKey(), JSON.stringify(draft));
  }

  clearDraft(): void {
    this.storage?.removeItem(this.draftKey());
  }

  allTurnsRated(): boolean {
    return this.turnRatings.every((r) => r !== null);
  }

  firstUnratedTurn(): number | null {
    const at = this.turnRatings.findIndex((r) => r === null);
    return at === -1 ? null : at + 1;
  }

  rateTurn(turnIndex: number, rating: number): StepResult {
    if (this.phase === "submitted") {
      return { ok: false, error: "annotation already submitted" };
    }
    if (turnIndex < 1 || turnIndex > this.dialog.turns.length) {
      return { ok: false, error: `no turn ${turnIndex}` };
    }
    if (!Number.isInteger(rating) || rating < 1 || rating > 5) {
      return { ok: false, error: "turn ratings use the 1-5 scale" };
    }
    this.turnRatings[turnIndex - 1] = rating;
    this.saveDraft();
    return { ok: true };
  }

  answerDialogQuestion(field: DialogAnswerField, value: string): StepResult {
    if (this.phase === "rating_turns") {
      return {
        ok: false,
        error: "rate every turn before the dialog-level questions",
      };
    }
    if (this.phase === "submitted") {
      return { ok: false, error: "annotation already submitted" };
    }
    this.answers[field] = value;
    this.saveDraft();
    return { ok: true };
  }

  missingAnswers(): DialogAnswerField[] {
    return ANSWER_FIELDS.filter((f) => this.answers[f] === undefined);
  }

  advance(): StepResult {
    switch (this.phase) {
      case "rating_turns": {
        const unrated = this.firstUnratedTurn();
        if (unrated !== null) {
          return { ok: false, error: `turn ${unrated} still needs a rating` };
        }
        this.phase = "dialog_questions";
        break;
      }
      case "dialog_questions": {
        const missing = this.missingAnswers();
        if (missing.length > 0) {
          return { ok: false, error: `unanswered: ${missing.join(", ")}` };
        }
        this.phase = "review";
        break;
      }
      case "review":
        return { ok: false, error: "use submit from the review step" };
      case "submitted":
        return { ok: false, error: "annotation already submitted" };
    }
    this.saveDraft();
    return { ok: true };
  }

  back(): StepResult {
    if (this.phase === "dialog_questions") {
      this.phase = "rating_turns";
    } else if (this.phase === "review") {
      this.phase = "dialog_questions";
    } else {
      return { ok: false, error: "cannot go back from here" };
    }
    this.saveDraft();
    return { ok: true };
  }

  canSubmit(): boolean {
    return (
      this.phase === "review" &&
      this.allTurnsRated() &&
      this.missingAnswers().length === 0
    );
  }

  buildPayload(): Questionnaire {
    if (!this.allTurnsRated()) {
      throw new Error("payload requires a rating for every turn");
    }
    const missing = this.missingAnswers();
    if (missing.length > 0) {
      throw new Error(`payload requires answers for: ${missing.join(", ")}`);
    }
    return QuestionnaireSchema.parse({
      turn_ratings: this.turnRatings as number[],
      user_satisfaction: Number(this.answers.user_satisfaction),
      goal_count: this.answers.goal_count,
      goal_progression: this.answers.goal_progression,
      goal_completion: this.answers.goal_completion,
      goal_friction: this.answers.goal_friction,
      coherence: this.answers.coherence,
      sentiment: this.answers.sentiment,
    });
  }

  markSubmitted(): void {
    this.phase = "submitted";
    this.clearDraft();
  }
}
