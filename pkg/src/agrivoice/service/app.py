"""HTTP/JSON API (versioned under /v1) in front of the store, the engines,
and the job queue.

Every endpoint except login and health requires a bearer session token.
Role rules: farmers upload, edit, submit, and delete their own data;
support personnel read submissions and set priorities; requirements
engineers read submissions and may delete any recording (administrative
role for data-removal requests).
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
from contextlib import asynccontextmanager
from dataclasses import asdict
from pathlib import Path

from fastapi import Depends, FastAPI, Query, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ..domain import (
    BaselineText,
    CaptureModule,
    FeedbackMode,
    FeedbackRecording,
    Language,
    NoiseSetting,
    Role,
    ValidationError,
    validate_recording,
)
from ..nlp import AnalysisResult, HttpEmotionEngine, Translator, analyze
from ..report import MissingBaseline, TranscribedRecording, build_report, serialize
from ..stt import EngineUnavailable, HttpEngine, MockEngine, TranscriptionEngine
from .config import ServiceConfig
from .jobs import JobRunner
from .store import Session, Store

log = logging.getLogger(__name__)

DEFAULT_RUN = "default"

JOB_TRANSCRIBE = "transcribe"
JOB_ANALYZE_TEXT = "analyze_text"
JOB_EMOTION = "emotion"

# WAV and OGG per the interface contract, plus the WebM container browser
# recorders produce. The loudness heuristic reads PCM WAV only; the rest is
# stored and forwarded to external engines untouched.
ACCEPTED_MEDIA_TYPES = frozenset(
    {"audio/wav", "audio/x-wav", "audio/wave", "audio/ogg", "audio/webm"}
)


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str = ""):
        super().__init__(detail or code)
        self.status = status
        self.code = code
        self.detail = detail or code


class LoginRequest(BaseModel):
    name: str
    credential: str


class UploadRequest(BaseModel):
    id: str
    audio_b64: str
    media_type: str = "audio/wav"
    duration_seconds: float = 0.0
    language: str = "en"
    mode: str = "free_form"
    capture: str = "speech_to_text"
    setting: str | None = None
    run: str | None = None


class TranscriptEdit(BaseModel):
    text: str


class SubmissionRequest(BaseModel):
    recording_id: str
    choice: str  # "transcript" or "audio"
    edited_text: str | None = None


class PriorityRequest(BaseModel):
    priority: int = 1


def _analysis_payload(result: AnalysisResult) -> str:
    data = {
        "recording_id": result.recording_id,
        "keywords": list(result.keywords),
        "summary": result.summary,
        "sentiment": asdict(result.sentiment) if result.sentiment else None,
        "emotion": asdict(result.emotion) if result.emotion else None,
        "translation": asdict(result.translation) if result.translation else None,
        "status": dict(result.status),
    }
    return json.dumps(data, sort_keys=True, ensure_ascii=False)


def build_engine(config: ServiceConfig) -> TranscriptionEngine:
    if config.engine == "http":
        if not config.engine_url:
            raise ValueError("engine 'http' requires engine_url")
        return HttpEngine(config.engine_url)
    sidecar = {}
    if config.sidecar_path:
        sidecar = json.loads(Path(config.sidecar_path).read_text("utf-8"))
    return MockEngine(seed=config.engine_seed, sidecar=sidecar)


class ServiceState:
    """Everything the handlers share: store, engines, queue, baseline."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.store = Store(config.store_path)
        self.engine = build_engine(config)
        self.emotion_engine = (
            HttpEmotionEngine(config.emotion_engine_url) if config.emotion_engine_url else None
        )
        self.translator = Translator()
        self.baseline: BaselineText | None = None
        if config.baseline_path:
            self.baseline = BaselineText.from_text(
                Path(config.baseline_path).read_text("utf-8")
            )
        for seed in config.accounts:
            self.store.ensure_account(
                seed.name, seed.credential, Role(seed.role), Language(seed.language)
            )
        self.runner = JobRunner(
            self.store,
            {
                JOB_TRANSCRIBE: self._handle_transcribe,
                JOB_ANALYZE_TEXT: self._handle_analyze_text,
                JOB_EMOTION: self._handle_emotion,
            },
            workers=config.workers,
        )

    def start(self) -> None:
        self.store.purge_expired(self.config.retention)
        self.runner.start()

    def stop(self) -> None:
        self.runner.stop(drain=True)
        self.store.close()

    # -- job handlers ------------------------------------------------------

    def _handle_transcribe(self, job: dict) -> None:
        stored = self.store.get_recording(job["recording_id"])
        if stored is None:
            self.store.finish_job(job["id"], "done")
            return
        transcript = self.engine.transcribe(stored.recording)
        self.store.store_transcript(transcript, job_id=job["id"])
        self.store.enqueue_job(JOB_ANALYZE_TEXT, stored.recording.id)

    def _handle_analyze_text(self, job: dict) -> None:
        transcript = self.store.get_transcript(job["recording_id"])
        if transcript is None:
            stored = self.store.get_recording(job["recording_id"])
            if stored is None:
                self.store.finish_job(job["id"], "done")
                return
            raise RuntimeError("transcript not ready")
        result = analyze(transcript, None, translator=self.translator)
        self.store.store_analysis(
            job["recording_id"], _analysis_payload(result), "ok", job_id=job["id"]
        )

    def _handle_emotion(self, job: dict) -> None:
        stored = self.store.get_recording(job["recording_id"])
        if stored is None:
            self.store.finish_job(job["id"], "done")
            return
        result = analyze(None, stored.recording, emotion_engine=self.emotion_engine)
        if result.status["emotion"] == "pending":
            raise EngineUnavailable("emotion engine unreachable")
        self.store.store_analysis(
            job["recording_id"], _analysis_payload(result), "ok", job_id=job["id"]
        )


def create_app(config: ServiceConfig) -> FastAPI:
    state = ServiceState(config)

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        state.start()
        yield
        state.stop()

    app = FastAPI(title="agrivoice feedback service", version="1", lifespan=lifespan)
    app.state.service = state

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(
            status_code=exc.status, content={"error": exc.code, "detail": exc.detail}
        )

    def current_session(request: Request) -> Session:
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise ApiError(401, "Unauthenticated", "missing bearer token")
        session = state.store.get_session(header[7:].strip())
        if session is None:
            raise ApiError(401, "Unauthenticated", "invalid or expired session")
        return session

    def require_role(session: Session, *roles: Role) -> None:
        if session.account.role not in roles:
            raise ApiError(403, "Forbidden", "role not allowed for this operation")

    # -- endpoints ---------------------------------------------------------

    @app.get("/v1/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/v1/login")
    def login(body: LoginRequest) -> dict:
        account = state.store.verify_login(body.name, body.credential)
        if account is None:
            # Unknown accounts and wrong passwords are indistinguishable.
            raise ApiError(401, "InvalidCredentials", "name or credential incorrect")
        session = state.store.create_session(account, config.session_ttl_seconds)
        return {
            "token": session.token,
            "role": account.role.value,
            "language": account.language.value,
            "expires_at": session.expires_at,
        }

    @app.post("/v1/recordings", status_code=201)
    def upload_recording(
        body: UploadRequest, response: Response, session: Session = Depends(current_session)
    ) -> dict:
        require_role(session, Role.FARMER)
        try:
            audio = base64.b64decode(body.audio_b64, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise ApiError(422, "ValidationError", f"audio_b64 is not valid base64: {exc}")
        if len(audio) > config.max_audio_bytes:
            raise ApiError(
                413, "PayloadTooLarge",
                f"audio exceeds the {config.max_audio_bytes} byte cap",
            )
        media_type = body.media_type.split(";", 1)[0].strip().lower()
        if media_type not in ACCEPTED_MEDIA_TYPES:
            raise ApiError(
                422, "UnsupportedMediaType",
                f"media type {body.media_type!r} not accepted (WAV, OGG, or WebM)",
            )
        try:
            rec = FeedbackRecording(
                id=body.id,
                speaker=session.account.name,
                audio=audio,
                media_type=body.media_type,
                duration_seconds=body.duration_seconds,
                language=body.language,
                mode=FeedbackMode(body.mode),
                capture=CaptureModule(body.capture),
                setting=NoiseSetting(body.setting) if body.setting else None,
            )
        except ValueError as exc:
            raise ApiError(422, "ValidationError", str(exc))
        try:
            validate_recording(rec)
        except ValidationError as exc:
            raise ApiError(422, exc.code, str(exc))
        run_id = None
        if rec.mode is FeedbackMode.BASELINE:
            if state.baseline is None:
                raise ApiError(422, "MissingBaseline", "no baseline text configured")
            run_id = body.run or DEFAULT_RUN
        created = state.store.insert_recording(rec, run_id)
        if created:
            kind = JOB_TRANSCRIBE if rec.capture is CaptureModule.SPEECH_TO_TEXT else JOB_EMOTION
            state.store.enqueue_job(kind, rec.id)
        else:
            response.status_code = 200
        stored = state.store.get_recording(rec.id)
        return {"id": rec.id, "status": stored.status, "created": created}

    @app.get("/v1/recordings")
    def list_recordings(session: Session = Depends(current_session)) -> dict:
        if session.account.role is Role.FARMER:
            rows = state.store.list_recordings(speaker=session.account.name)
        else:
            rows = state.store.list_recordings()
        return {"recordings": rows}

    def _owned_recording(session: Session, recording_id: str, *, allow_readers: bool = False):
        stored = state.store.get_recording(recording_id)
        if stored is None:
            raise ApiError(404, "NotFound", f"recording {recording_id} does not exist")
        reader_roles = (Role.SUPPORT_PERSONNEL, Role.REQUIREMENTS_ENGINEER)
        if stored.recording.speaker != session.account.name:
            if not (allow_readers and session.account.role in reader_roles):
                raise ApiError(403, "Forbidden", "not the owner of this recording")
        return stored

    @app.get("/v1/recordings/{recording_id}/transcript")
    def get_transcript(
        recording_id: str, session: Session = Depends(current_session)
    ) -> dict:
        stored = _owned_recording(session, recording_id, allow_readers=True)
        transcript = state.store.get_transcript(recording_id)
        if transcript is None:
            return {"status": stored.status}
        return {
            "status": "ready",
            "transcript": {
                "recording_id": transcript.recording_id,
                "text": transcript.text,
                "language": transcript.language.value,
                "engine_id": transcript.engine_id,
                "edited": transcript.edited,
            },
        }

    @app.put("/v1/recordings/{recording_id}/transcript")
    def edit_transcript(
        recording_id: str, body: TranscriptEdit, session: Session = Depends(current_session)
    ) -> dict:
        require_role(session, Role.FARMER)
        _owned_recording(session, recording_id)
        if not state.store.update_transcript_text(recording_id, body.text):
            raise ApiError(409, "MissingTranscript", "no transcript to edit yet")
        return {"status": "ok", "edited": True}

    @app.get("/v1/recordings/{recording_id}/analysis")
    def get_analysis(
        recording_id: str, session: Session = Depends(current_session)
    ) -> dict:
        _owned_recording(session, recording_id, allow_readers=True)
        row = state.store.get_analysis(recording_id)
        if row is None:
            return {"status": "pending"}
        payload, status = row
        return {"status": status, "analysis": json.loads(payload)}

    @app.post("/v1/submissions", status_code=201)
    def submit_feedback(
        body: SubmissionRequest, session: Session = Depends(current_session)
    ) -> dict:
        require_role(session, Role.FARMER)
        _owned_recording(session, body.recording_id)
        if body.choice not in ("transcript", "audio"):
            raise ApiError(422, "ValidationError", "choice must be transcript or audio")
        if body.choice == "transcript":
            if state.store.get_transcript(body.recording_id) is None:
                raise ApiError(409, "MissingTranscript", "no transcript for this recording")
            if body.edited_text is not None:
                state.store.update_transcript_text(body.recording_id, body.edited_text)
        submission_id = state.store.add_submission(
            body.recording_id, body.choice, session.account.name
        )
        return {"id": submission_id, "recording_id": body.recording_id, "choice": body.choice}

    @app.get("/v1/submissions")
    def list_submissions(session: Session = Depends(current_session)) -> dict:
        require_role(session, Role.SUPPORT_PERSONNEL, Role.REQUIREMENTS_ENGINEER)
        return {"submissions": state.store.list_submissions()}

    @app.post("/v1/submissions/{submission_id}/priority")
    def set_priority(
        submission_id: str, body: PriorityRequest,
        session: Session = Depends(current_session),
    ) -> dict:
        require_role(session, Role.SUPPORT_PERSONNEL)
        if not state.store.set_submission_priority(submission_id, body.priority):
            raise ApiError(404, "NotFound", f"submission {submission_id} does not exist")
        return {"id": submission_id, "priority": body.priority}

    @app.get("/v1/reports/{run_id}")
    def get_report(
        run_id: str,
        format: str = Query(default="json"),
        session: Session = Depends(current_session),
    ) -> Response:
        if format not in ("json", "csv"):
            raise ApiError(422, "ValidationError", "format must be json or csv")
        rows = state.store.baseline_rows(run_id)
        if not rows:
            stray = state.store.get_recording(run_id)
            if stray is not None and stray.recording.mode is FeedbackMode.FREE_FORM:
                raise ApiError(
                    403, "ForbiddenForFreeForm",
                    "free-form feedback has no baseline report; fetch the analysis instead",
                )
            if state.store.run_exists(run_id):
                raise ApiError(409, "ReportPending", "no transcribed recordings in this run yet")
            raise ApiError(404, "NotFound", f"run {run_id} does not exist")
        # One row per (participant, setting); a re-recorded cell keeps the
        # latest transcript, which baseline_rows orders last.
        deduped: dict[tuple[str, NoiseSetting], TranscribedRecording] = {}
        for participant, setting, text in rows:
            deduped[(participant, setting)] = TranscribedRecording(
                participant=participant, setting=setting, text=text
            )
        try:
            report = build_report(deduped.values(), state.baseline)
        except MissingBaseline:
            raise ApiError(409, "MissingBaseline", "no baseline text configured")
        body = serialize(report, format)
        media = "application/json" if format == "json" else "text/csv"
        return Response(
            content=body,
            media_type=media,
            headers={"Content-Disposition": f'attachment; filename="report-{run_id}.{format}"'},
        )

    @app.delete("/v1/data")
    def delete_data(
        scope: str = Query(...), session: Session = Depends(current_session)
    ) -> dict:
        if scope == "all":
            ids = state.store.recordings_of_speaker(session.account.name)
            return {"scope": scope, "deleted": state.store.delete_recordings(ids)}
        if scope.startswith("recording:"):
            recording_id = scope.split(":", 1)[1]
            stored = state.store.get_recording(recording_id)
            if stored is None:
                raise ApiError(404, "NotFound", f"recording {recording_id} does not exist")
            owner = stored.recording.speaker == session.account.name
            admin = session.account.role is Role.REQUIREMENTS_ENGINEER
            if not (owner or admin):
                raise ApiError(403, "Forbidden", "only the owner or an administrator may delete")
            return {"scope": scope, "deleted": state.store.delete_recordings([recording_id])}
        raise ApiError(422, "ValidationError", "scope must be 'all' or 'recording:<id>'")

    return app
