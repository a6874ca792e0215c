import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { DIALOG_QUESTIONS } from "../src/questions.js";
import { TaskViewState } from "../src/state.js";
import { DialogPayload, QuestionnaireSchema, Task } from "../src/types.js";

function task(): Task {
  return {
    task_id: "t000000",
    dialog_id: "d0",
    annotator_id: "a1",
    status: "claimed",
    is_dual_copy: false,
  };
}

function dialog(nTurns: number): DialogPayload {
  return {
    dialog_id: "d0",
    user_id: "u0",
    use_case: "shopping",
    turns: Array.from({ length: nTurns }, (_, i) => ({
      index: i + 1,
      turn_id: `d0-t${i + 1}`,
      timestamp: i * 30,
      user_text: `utterance ${i + 1}`,
      system_text: `response ${i + 1}`,
    })),
  };
}

describe("questionnaire contract", () => {
  it("every option offered by the form is schema-valid", () => {
    for (let nTurns = 1; nTurns <= 4; nTurns += 1) {
      for (const satisfaction of ["1", "2", "3", "4", "5"]) {
        const state = new TaskViewState(task(), dialog(nTurns));
        for (let i = 1; i <= nTurns; i += 1) state.rateTurn(i, ((i + 2) % 5) + 1);
        state.advance();
        for (const question of DIALOG_QUESTIONS) {
          const value =
            question.field === "user_satisfaction"
              ? satisfaction
              : question.options[nTurns % question.options.length].value;
          expect(state.answerDialogQuestion(question.field, value).ok).toBe(true);
        }
        state.advance();
        const payload = state.buildPayload();
        const parsed = QuestionnaireSchema.parse(payload);
        expect(parsed.turn_ratings).toHaveLength(nTurns);
      }
    }
  });

  it("the client validates payloads before sending", async () => {
    let sent = false;
    const fetchStub: typeof fetch = async () => {
      sent = true;
      return new Response("{}", { status: 200 });
    };
    const client = new ApiClient("http://service", fetchStub);
    const broken = {
      turn_ratings: [9],
      user_satisfaction: 4,
      goal_count: "One",
      goal_progression: "FullProgress",
      goal_completion: "AllCompleted",
      goal_friction: "NoFriction",
      coherence: "AllMadeSense",
      sentiment: "Positive",
    };
    await expect(
      client.submitAnnotation("t0", broken as never),
    ).rejects.toThrow();
    expect(sent).toBe(false);
  });

  it("server error codes surface verbatim", async () => {
    const fetchStub: typeof fetch = async () =>
      new Response(JSON.stringify({ code: "already_submitted", detail: "t0" }), {
        status: 409,
        headers: { "content-type": "application/json" },
      });
    const client = new ApiClient("http://service", fetchStub);
    const state = new TaskViewState(task(), dialog(1));
    state.rateTurn(1, 4);
    state.advance();
    for (const question of DIALOG_QUESTIONS) {
      state.answerDialogQuestion(
        question.field,
        question.field === "user_satisfaction" ? "4" : question.options[0].value,
      );
    }
    state.advance();
    await expect(
      client.submitAnnotation("t0", state.buildPayload()),
    ).rejects.toMatchObject({ status: 409, code: "already_submitted" });
    // a rejected submit leaves the draft intact (state not marked submitted)
    expect(state.phase).toBe("review");
  });
});
