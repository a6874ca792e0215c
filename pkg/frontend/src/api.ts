/**
 * Typed client for the annotation service HTTP API. Responses are parsed
 * with the shared schemas; error bodies surface their machine-readable code.
 */

import {
  DialogPayload,
  DialogSchema,
  ExportRow,
  Questionnaire,
  QuestionnaireSchema,
  Task,
  TaskSchema,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

async function errorFrom(response: Response): Promise<ApiError> {
  let code = "http_error";
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (body && typeof body.code === "string") code = body.code;
    if (body && body.detail !== undefined) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body; keep defaults
  }
  return new ApiError(response.status, code, detail);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw await errorFrom(response);
    }
    return response.json();
  }

  async claimNextTask(annotator: string): Promise<Task | null> {
    const body = (await this.request(
      `/tasks/next?annotator=${encodeURIComponent(annotator)}`,
    )) as { task: unknown };
    return body.task === null ? null : TaskSchema.parse(body.task);
  }

  async getDialog(dialogId: string): Promise<DialogPayload> {
    const body = await this.request(`/dialogs/${encodeURIComponent(dialogId)}`);
    return DialogSchema.parse(body);
  }

  async submitAnnotation(
    taskId: string,
    questionnaire: Questionnaire,
  ): Promise<void> {
    // never send a structurally invalid payload
    const payload = QuestionnaireSchema.parse(questionnaire);
    await this.request(`/tasks/${encodeURIComponent(taskId)}/annotation`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async createBatch(
    dialogs: DialogPayload[],
    dualFraction: number,
    seed: number,
  ): Promise<Task[]> {
    const body = (await this.request(`/batches`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        dialogs,
        dual_fraction: dualFraction,
        seed,
      }),
    })) as { tasks: unknown[] };
    return body.tasks.map((t) => TaskSchema.parse(t));
  }

  async exportTraining(): Promise<ExportRow[]> {
    const body = (await this.request(`/export/training`)) as {
      rows: ExportRow[];
    };
    return body.rows;
  }
}
