"""HTTP JSON API over the annotation store.

Endpoints: POST /batches, GET /tasks/next, GET /dialogs/{id},
POST /tasks/{id}/annotation, GET /reports/agreement, GET /export/training.
Errors carry machine-readable codes. When a UI asset directory is supplied it
is served at the root path, after the API routes.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .annotation import AnnotationError, AnnotationStore, DqaQuestionnaire
from .dialogs import Dialog, RawUtteranceEvent, Turn, dialog_to_dict


class TurnPayload(BaseModel):
    index: int
    turn_id: str
    timestamp: int
    user_text: str
    system_text: str


class DialogPayload(BaseModel):
    dialog_id: str
    user_id: str
    use_case: str = ""
    turns: list[TurnPayload] = Field(min_length=1)

    def to_dialog(self) -> Dialog:
        return Dialog(
            dialog_id=self.dialog_id,
            user_id=self.user_id,
            use_case=self.use_case,
            turns=tuple(
                Turn(
                    index=t.index,
                    event=RawUtteranceEvent(
                        user_id=self.user_id,
                        timestamp=t.timestamp,
                        turn_id=t.turn_id,
                        user_text=t.user_text,
                        system_text=t.system_text,
                        use_case=self.use_case,
                        dialog_id=self.dialog_id,
                    ),
                )
                for t in self.turns
            ),
        )


class BatchRequest(BaseModel):
    dialogs: list[DialogPayload]
    dual_fraction: float = 0.2
    seed: int = 0


class QuestionnairePayload(BaseModel):
    turn_ratings: list[int]
    user_satisfaction: int
    goal_count: str
    goal_progression: str
    goal_completion: str
    goal_friction: str
    coherence: str
    sentiment: str


_ERROR_STATUS = {
    "task_not_found": 404,
    "dialog_not_found": 404,
    "already_submitted": 409,
}


def create_app(store: AnnotationStore, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="dialog-quality annotation service")

    @app.exception_handler(AnnotationError)
    async def _annotation_error(request: Request, exc: AnnotationError):
        return JSONResponse(
            status_code=_ERROR_STATUS.get(exc.code, 400),
            content={"code": exc.code, "detail": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"code": "invalid_payload", "detail": exc.errors()},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/batches")
    def create_batch(body: BatchRequest):
        dialogs = [d.to_dialog() for d in body.dialogs]
        tasks = store.create_batch(dialogs, body.dual_fraction, body.seed)
        return {"tasks": [t.to_dict() for t in tasks]}

    @app.get("/tasks/next")
    def claim_next(annotator: str = Query(...)):
        task = store.claim_next_task(annotator)
        return {"task": task.to_dict() if task is not None else None}

    @app.get("/dialogs/{dialog_id}")
    def get_dialog(dialog_id: str):
        return dialog_to_dict(store.get_dialog(dialog_id))

    @app.post("/tasks/{task_id}/annotation")
    def submit(task_id: str, body: QuestionnairePayload):
        questionnaire = DqaQuestionnaire.from_dict(body.model_dump())
        record = store.submit_annotation(task_id, questionnaire)
        return {"record": record.to_dict()}

    @app.get("/reports/agreement")
    def agreement():
        report = store.agreement_report()
        return {
            "overall_within_one": report.overall_within_one,
            "dual_pairs": report.dual_pairs,
            "per_annotator": report.per_annotator,
        }

    @app.get("/export/training")
    def export_training():
        rows = store.export_training_set()
        return {
            "rows": [
                {
                    "dialog": dialog_to_dict(dialog),
                    "rating": rating,
                    "defect": label,
                }
                for dialog, rating, label in rows
            ]
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
