import { describe, expect, it } from "vitest";

import { MemoryStorage, TaskViewState } from "../src/state.js";
import { DialogPayload, Task } from "../src/types.js";

function task(id = "t000001"): Task {
  return {
    task_id: id,
    dialog_id: "d0",
    annotator_id: "a1",
    status: "claimed",
    is_dual_copy: false,
  };
}

function dialog(nTurns = 3): DialogPayload {
  return {
    dialog_id: "d0",
    user_id: "u0",
    use_case: "music",
    turns: Array.from({ length: nTurns }, (_, i) => ({
      index: i + 1,
      turn_id: `d0-t${i + 1}`,
      timestamp: i * 10,
      user_text: `utterance ${i + 1}`,
      system_text: `response ${i + 1}`,
    })),
  };
}

function answerEverything(state: TaskViewState): void {
  state.answerDialogQuestion("user_satisfaction", "4");
  state.answerDialogQuestion("goal_count", "One");
  state.answerDialogQuestion("goal_progression", "FullProgress");
  state.answerDialogQuestion("goal_completion", "AllCompleted");
  state.answerDialogQuestion("goal_friction", "NoFriction");
  state.answerDialogQuestion("coherence", "AllMadeSense");
  state.answerDialogQuestion("sentiment", "Positive");
}

describe("turn-first phase gating", () => {
  it("blocks advancing while any turn is unrated", () => {
    const state = new TaskViewState(task(), dialog(3));
    state.rateTurn(1, 4);
    state.rateTurn(3, 5);
    const result = state.advance();
    expect(result.ok).toBe(false);
    expect(result.error).toContain("turn 2");
    expect(state.phase).toBe("rating_turns");
  });

  it("rejects dialog-level answers before all turns are rated", () => {
    const state = new TaskViewState(task(), dialog(2));
    const result = state.answerDialogQuestion("goal_count", "One");
    expect(result.ok).toBe(false);
    expect(state.answers.goal_count).toBeUndefined();
  });

  it("reveals dialog questions once every turn is rated", () => {
    const state = new TaskViewState(task(), dialog(2));
    state.rateTurn(1, 4);
    state.rateTurn(2, 4);
    expect(state.advance().ok).toBe(true);
    expect(state.phase).toBe("dialog_questions");
  });

  it("requires every dialog-level answer before review", () => {
    const state = new TaskViewState(task(), dialog(1));
    state.rateTurn(1, 3);
    state.advance();
    state.answerDialogQuestion("user_satisfaction", "2");
    const result = state.advance();
    expect(result.ok).toBe(false);
    expect(result.error).toContain("goal_count");
  });

  it("allows backward navigation before submit", () => {
    const state = new TaskViewState(task(), dialog(1));
    state.rateTurn(1, 3);
    state.advance();
    expect(state.back().ok).toBe(true);
    expect(state.phase).toBe("rating_turns");
  });

  it("freezes the state after submit", () => {
    const state = new TaskViewState(task(), dialog(1));
    state.rateTurn(1, 3);
    state.advance();
    answerEverything(state);
    state.advance();
    state.markSubmitted();
    expect(state.rateTurn(1, 5).ok).toBe(false);
    expect(state.answerDialogQuestion("goal_count", "Many").ok).toBe(false);
    expect(state.advance().ok).toBe(false);
  });

  it("rejects out-of-scale turn ratings", () => {
    const state = new TaskViewState(task(), dialog(1));
    expect(state.rateTurn(1, 0).ok).toBe(false);
    expect(state.rateTurn(1, 6).ok).toBe(false);
    expect(state.rateTurn(2, 3).ok).toBe(false);
  });
});

describe("payload construction", () => {
  it("builds a payload with one rating per turn", () => {
    const state = new TaskViewState(task(), dialog(3));
    [4, 2, 5].forEach((r, i) => state.rateTurn(i + 1, r));
    state.advance();
    answerEverything(state);
    state.advance();
    expect(state.canSubmit()).toBe(true);
    const payload = state.buildPayload();
    expect(payload.turn_ratings).toEqual([4, 2, 5]);
    expect(payload.user_satisfaction).toBe(4);
    expect(payload.goal_friction).toBe("NoFriction");
  });

  it("refuses to build an incomplete payload", () => {
    const state = new TaskViewState(task(), dialog(2));
    state.rateTurn(1, 4);
    expect(() => state.buildPayload()).toThrow(/rating for every turn/);
    state.rateTurn(2, 4);
    expect(() => state.buildPayload()).toThrow(/requires answers/);
  });
});

describe("draft persistence", () => {
  it("restores ratings and phase for the same task", () => {
    const storage = new MemoryStorage();
    const first = new TaskViewState(task(), dialog(2), storage);
    first.rateTurn(1, 5);
    first.rateTurn(2, 4);
    first.advance();
    first.answerDialogQuestion("goal_count", "One");

    const resumed = new TaskViewState(task(), dialog(2), storage);
    expect(resumed.turnRatings).toEqual([5, 4]);
    expect(resumed.phase).toBe("dialog_questions");
    expect(resumed.answers.goal_count).toBe("One");
  });

  it("does not leak drafts across tasks", () => {
    const storage = new MemoryStorage();
    const first = new TaskViewState(task("t1"), dialog(2), storage);
    first.rateTurn(1, 5);
    const other = new TaskViewState(task("t2"), dialog(2), storage);
    expect(other.turnRatings).toEqual([null, null]);
  });

  it("drops the draft after submit", () => {
    const storage = new MemoryStorage();
    const state = new TaskViewState(task(), dialog(1), storage);
    state.rateTurn(1, 3);
    state.advance();
    answerEverything(state);
    state.advance();
    state.markSubmitted();
    const fresh = new TaskViewState(task(), dialog(1), storage);
    expect(fresh.phase).toBe("rating_turns");
    expect(fresh.turnRatings).toEqual([null]);
  });
});
