/**
 * Wire types shared with the annotation service, plus zod schemas so every
 * outgoing payload is validated against the service contract before it is
 * sent.
 */

import { z } from "zod";

export const GOAL_COUNT_OPTIONS = ["Zero", "One", "Many"] as const;
export const GOAL_PROGRESSION_OPTIONS = [
  "NoProgress",
  "SomeProgress",
  "FullProgress",
] as const;
export const GOAL_COMPLETION_OPTIONS = [
  "NoneCompleted",
  "SomeCompleted",
  "AllCompleted",
] as const;
export const GOAL_FRICTION_OPTIONS = [
  "LotsOfFriction",
  "SomeFriction",
  "NoFriction",
] as const;
export const COHERENCE_OPTIONS = [
  "NeverMadeSense",
  "SomeMadeSense",
  "AllMadeSense",
] as const;
export const SENTIMENT_OPTIONS = ["Negative", "Neutral", "Positive"] as const;

const rating = z.number().int().min(1).max(5);

export const QuestionnaireSchema = z.object({
  turn_ratings: z.array(rating).min(1),
  user_satisfaction: rating,
  goal_count: z.enum(GOAL_COUNT_OPTIONS),
  goal_progression: z.enum(GOAL_PROGRESSION_OPTIONS),
  goal_completion: z.enum(GOAL_COMPLETION_OPTIONS),
  goal_friction: z.enum(GOAL_FRICTION_OPTIONS),
  coherence: z.enum(COHERENCE_OPTIONS),
  sentiment: z.enum(SENTIMENT_OPTIONS),
});

export type Questionnaire = z.infer<typeof QuestionnaireSchema>;

export const TaskSchema = z.object({
  task_id: z.string(),
  dialog_id: z.string(),
  annotator_id: z.string().nullable(),
  status: z.enum(["pending", "claimed", "submitted"]),
  is_dual_copy: z.boolean(),
});

export type Task = z.infer<typeof TaskSchema>;

export const TurnSchema = z.object({
  index: z.number().int().min(1),
  turn_id: z.string(),
  timestamp: z.number().int(),
  user_text: z.string(),
  system_text: z.string(),
});

export const DialogSchema = z.object({
  dialog_id: z.string(),
  user_id: z.string(),
  use_case: z.string(),
  turns: z.array(TurnSchema).min(1),
});

export type DialogPayload = z.infer<typeof DialogSchema>;

export interface ExportRow {
  dialog: DialogPayload;
  rating: number;
  defect: boolean;
}

export type DialogAnswerField =
  | "user_satisfaction"
  | "goal_count"
  | "goal_progression"
  | "goal_completion"
  | "goal_friction"
  | "coherence"
  | "sentiment";
