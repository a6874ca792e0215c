/**
 * The DQA form content: the per-turn rating scale and the seven dialog-level
 * questions, with display labels for each stored option token.
 */

import {
  COHERENCE_OPTIONS,
  DialogAnswerField,
  GOAL_COMPLETION_OPTIONS,
  GOAL_COUNT_OPTIONS,
  GOAL_FRICTION_OPTIONS,
  GOAL_PROGRESSION_OPTIONS,
  SENTIMENT_OPTIONS,
} from "./types.js";

export const TURN_QUESTION =
  "Provide an overall rating for the System's response in the current turn";

export const TURN_SCALE_LABELS: Record<number, string> = {
  1: "1-Terrible",
  2: "2-Bad",
  3: "3-Ok",
  4: "4-Good",
  5: "5-Excellent",
};

export interface DialogQuestion {
  field: DialogAnswerField;
  heading: string;
  prompt: string;
  kind: "scale" | "choice";
  options: { value: string; label: string }[];
}

const SATISFACTION_LABELS: Record<number, string> = {
  1: "1-Very Dissatisfied",
  2: "2-Dissatisfied",
  3: "3-Normal",
  4: "4-Satisfied",
  5: "5-Very Satisfied",
};

function spaced(token: string): string {
  // "LotsOfFriction" -> "Lots Of Friction" -> fix the lowercase joiners
  return token
    .replace(/([a-z])([A-Z])/g, "$1 $2")
    .replace(" Of ", " of ");
}

function choices(tokens: readonly string[]): { value: string; label: string }[] {
  return tokens.map((t) => ({ value: t, label: spaced(t) }));
}

export const DIALOG_QUESTIONS: DialogQuestion[] = [
  {
    field: "user_satisfaction",
    heading: "User Satisfaction",
    prompt:
      "Rate the overall user satisfaction based on their interaction in the dialog",
    kind: "scale",
    options: [1, 2, 3, 4, 5].map((v) => ({
      value: String(v),
      label: SATISFACTION_LABELS[v],
    })),
  },
  {
    field: "goal_count",
    heading: "Goal Count",
    prompt: "How many goals are in the dialog?",
    kind: "choice",
    options: choices(GOAL_COUNT_OPTIONS),
  },
  {
    field: "goal_progression",
    heading: "Goal Progression",
    prompt: "Did the user make progress towards achieving their goals?",
    kind: "choice",
    options: choices(GOAL_PROGRESSION_OPTIONS),
  },
  {
    field: "goal_completion",
    heading: "Goal Completion",
    prompt: "How many goals did the user complete in the dialog?",
    kind: "choice",
    options: choices(GOAL_COMPLETION_OPTIONS),
  },
  {
    field: "goal_friction",
    heading: "Goal Friction",
    prompt:
      "Did the user encounter friction trying to achieve their goals in the dialog?",
    kind: "choice",
    options: choices(GOAL_FRICTION_OPTIONS),
  },
  {
    field: "coherence",
    heading: "Coherence",
    prompt: "How often did the System say something which did NOT make sense?",
    kind: "choice",
    options: choices(COHERENCE_OPTIONS),
  },
  {
    field: "sentiment",
    heading: "Sentiment",
    prompt: "Describe the user's sentiment in the conversation with the System",
    kind: "choice",
    options: choices(SENTIMENT_OPTIONS),
  },
];
