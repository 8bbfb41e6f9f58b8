"""HTTP stylization service.

Images travel as base64 PNG inside JSON. Inference endpoints are stateless
and always serve from the newest completed checkpoint; finetune requests
become jobs on a single-worker queue, so job execution is serialized and
never blocks inference. Errors use one envelope: {code, message, detail}
with codes bad_request, not_found, conflict and internal.
"""

from __future__ import annotations

import base64
import binascii
import io
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from PIL import Image
from pydantic import BaseModel

from .net import TextEffectModel, destylize, load_checkpoint, save_checkpoint, stylize
from .train import finetune_supervised, finetune_unsupervised, interpolate_images

MAX_FINETUNE_ITERATIONS = 5000


class ApiError(Exception):
    STATUS = {"bad_request": 400, "not_found": 404, "conflict": 409, "internal": 500}

    def __init__(self, code: str, message: str, detail: Optional[dict] = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail or {}

    def response(self) -> JSONResponse:
        return JSONResponse(
            status_code=self.STATUS[self.code],
            content={"code": self.code, "message": self.message, "detail": self.detail},
        )


# --- image codecs ---------------------------------------------------------------


def decode_image(b64: str) -> np.ndarray:
    try:
        raw = base64.b64decode(b64, validate=True)
        with Image.open(io.BytesIO(raw)) as img:
            rgb = np.asarray(img.convert("RGB"), dtype=np.float32)
    except (binascii.Error, OSError, ValueError) as err:
        raise ApiError("bad_request", f"undecodable image: {err}") from err
    planes = np.moveaxis(rgb, -1, 0) / 255.0
    if planes.shape[-2] % 8 or planes.shape[-1] % 8:
        raise ApiError(
            "bad_request", f"image sides must be divisible by 8, got {planes.shape[-2:]}"
        )
    return planes


def encode_image(planes: np.ndarray) -> str:
    quantized = np.clip(np.round(planes * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(np.moveaxis(quantized, 0, -1), mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_mask(b64: str) -> tuple[np.ndarray, np.ndarray]:
    """Split a stroke mask image into (foreground, background) binary planes.

    Red pixels are glyph strokes, blue pixels background strokes; a pixel
    that is both is rejected.
    """
    planes = decode_image(b64)
    fg = (planes[0] >= 0.5) & (planes[2] < 0.5)
    bg = (planes[2] >= 0.5) & (planes[0] < 0.5)
    both = (planes[0] >= 0.5) & (planes[2] >= 0.5)
    if both.any():
        raise ApiError("bad_request", "mask has overlapping foreground and background strokes")
    return fg.astype(np.float32), bg.astype(np.float32)


# --- checkpoints and jobs -------------------------------------------------------


class CheckpointStore:
    """Append-only directory of checkpoints; the newest one serves inference."""

    def __init__(self, directory: Path | str):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._cache: tuple[str, TextEffectModel] | None = None

    def listing(self) -> list[dict]:
        rows = []
        for path in sorted(self.dir.glob("*.pt"), key=lambda p: (p.stat().st_mtime, p.name)):
            rows.append(
                {
                    "id": path.stem,
                    "created_at": path.stat().st_mtime,
                    "size_bytes": path.stat().st_size,
                }
            )
        if rows:
            rows[-1]["active"] = True
        return rows

    def active_id(self) -> str:
        rows = self.listing()
        if not rows:
            raise ApiError("not_found", "no checkpoints available")
        return rows[-1]["id"]

    def model(self) -> tuple[str, TextEffectModel]:
        with self._lock:
            active = self.active_id()
            if self._cache is None or self._cache[0] != active:
                self._cache = (active, load_checkpoint(self.dir / f"{active}.pt"))
            return self._cache

    def add(self, model: TextEffectModel, tag: str) -> str:
        with self._lock:
            ckpt_id = f"{tag}_{time.strftime('%Y%m%d%H%M%S')}_{uuid.uuid4().hex[:6]}"
            save_checkpoint(model, self.dir / f"{ckpt_id}.pt")
            self._cache = (ckpt_id, model)
            return ckpt_id


@dataclass
class JobRecord:
    job_id: str
    kind: str
    status: str = "queued"  # queued | running | done | failed
    created_at: float = field(default_factory=time.time)
    started_at: Optional[float] = None
    finished_at: Optional[float] = None
    iterations: int = 0
    loss_samples: list[dict] = field(default_factory=list)
    result_checkpoint: Optional[str] = None
    error: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "status": self.status,
            "created_at": self.created_at,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "iterations": self.iterations,
            "loss_samples": self.loss_samples,
            "result_checkpoint": self.result_checkpoint,
            "error": self.error,
        }


class JobManager:
    """FIFO finetune queue executed by one worker thread."""

    def __init__(self, store: CheckpointStore, queue_jobs: bool = False):
        self.store = store
        self.queue_jobs = queue_jobs
        self.jobs: dict[str, JobRecord] = {}
        self._queue: list[tuple[JobRecord, dict]] = []
        self._lock = threading.Lock()
        self._wake = threading.Condition(self._lock)
        self._worker = threading.Thread(target=self._run, daemon=True)
        self._worker.start()

    def submit(self, kind: str, payload: dict) -> JobRecord:
        with self._lock:
            busy = any(j.status in ("queued", "running") for j in self.jobs.values())
            if busy and not self.queue_jobs:
                raise ApiError("conflict", "a finetune job is already in progress")
            record = JobRecord(job_id=uuid.uuid4().hex[:12], kind=kind)
            self.jobs[record.job_id] = record
            self._queue.append((record, payload))
            self._wake.notify()
            return record

    def get(self, job_id: str) -> JobRecord:
        record = self.jobs.get(job_id)
        if record is None:
            raise ApiError("not_found", f"no job {job_id!r}")
        return record

    def _run(self) -> None:
        while True:
            with self._wake:
                while not self._queue:
                    self._wake.wait()
                record, payload = self._queue.pop(0)
            record.status = "running"
            record.started_at = time.time()
            try:
                record.result_checkpoint = self._execute(record, payload)
                record.status = "done"
            except Exception as err:  # a failed job must not kill the worker
                record.status = "failed"
                record.error = str(err)
            record.finished_at = time.time()

    def _execute(self, record: JobRecord, payload: dict) -> str:
        _, base = self.store.model()
        iterations = payload["iterations"]

        def note(history: list[dict]) -> None:
            step = max(1, iterations // 20)
            record.loss_samples = [
                {k: row[k] for k in row if k != "wall_time"}
                for row in history
                if row["iteration"] % step == 0 or row["iteration"] == iterations
            ]
            record.iterations = history[-1]["iteration"] if history else 0

        if record.kind == "finetune_supervised":
            result = finetune_supervised(
                base, payload["x"], payload["y"], iterations=iterations, seed=payload["seed"]
            )
        else:
            result = finetune_unsupervised(
                base,
                payload["y"],
                iterations=iterations,
                masks=payload.get("masks"),
                seed=payload["seed"],
            )
        note(result.history)
        return self.store.add(result.model, "finetune")


# --- request schemas ------------------------------------------------------------


class StylizeRequest(BaseModel):
    glyph_image: str
    style_image: str


class DestylizeRequest(BaseModel):
    style_image: str


class WeightedStyle(BaseModel):
    image: str
    weight: float


class InterpolateRequest(BaseModel):
    glyph_image: str
    styles: list[WeightedStyle]


class FinetuneRequest(BaseModel):
    style_image: str
    glyph_image: Optional[str] = None
    mask: Optional[str] = None
    iterations: int = 300
    seed: int = 0


@dataclass
class ServiceConfig:
    checkpoint_dir: Path
    queue_jobs: bool = False


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="textfx service")
    # single-user desk tool: the browser client is served from its own origin
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = CheckpointStore(config.checkpoint_dir)
    jobs = JobManager(store, queue_jobs=config.queue_jobs)
    app.state.store = store
    app.state.jobs = jobs

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, err: ApiError) -> JSONResponse:
        return err.response()

    @app.exception_handler(Exception)
    async def _internal(_request: Request, err: Exception) -> JSONResponse:
        return ApiError("internal", f"{type(err).__name__}: {err}").response()

    @app.post("/v1/stylize")
    def stylize_endpoint(req: StylizeRequest) -> dict:
        ckpt_id, model = store.model()
        glyph = decode_image(req.glyph_image)
        style = decode_image(req.style_image)
        if glyph.shape != style.shape:
            raise ApiError(
                "bad_request", f"image shapes differ: {glyph.shape} vs {style.shape}"
            )
        return {"image": encode_image(stylize(model, glyph, style)), "checkpoint": ckpt_id}

    @app.post("/v1/destylize")
    def destylize_endpoint(req: DestylizeRequest) -> dict:
        ckpt_id, model = store.model()
        return {
            "image": encode_image(destylize(model, decode_image(req.style_image))),
            "checkpoint": ckpt_id,
        }

    @app.post("/v1/interpolate")
    def interpolate_endpoint(req: InterpolateRequest) -> dict:
        if not 1 <= len(req.styles) <= 8:
            raise ApiError("bad_request", "interpolation takes between 1 and 8 styles")
        ckpt_id, model = store.model()
        glyph = decode_image(req.glyph_image)
        styles = [(decode_image(s.image), s.weight) for s in req.styles]
        for img, _ in styles:
            if img.shape != styles[0][0].shape:
                raise ApiError("bad_request", "style images must share a shape")
        try:
            out = interpolate_images(model, glyph, styles)
        except ValueError as err:
            raise ApiError("bad_request", str(err)) from err
        return {"image": encode_image(out), "checkpoint": ckpt_id}

    @app.post("/v1/finetune")
    def finetune_endpoint(req: FinetuneRequest) -> dict:
        if not 1 <= req.iterations <= MAX_FINETUNE_ITERATIONS:
            raise ApiError(
                "bad_request", f"iterations must be in [1, {MAX_FINETUNE_ITERATIONS}]"
            )
        if req.glyph_image is not None and req.mask is not None:
            raise ApiError("bad_request", "mask applies to unsupervised finetune only")
        store.active_id()  # 404 before queueing when no checkpoint exists
        y = decode_image(req.style_image)
        payload: dict = {"y": y, "iterations": req.iterations, "seed": req.seed}
        if req.glyph_image is not None:
            payload["x"] = decode_image(req.glyph_image)
            if payload["x"].shape != y.shape:
                raise ApiError("bad_request", "glyph and style image shapes differ")
            kind = "finetune_supervised"
        else:
            kind = "finetune_unsupervised"
            if req.mask is not None:
                fg, bg = decode_mask(req.mask)
                if fg.shape != y.shape[-2:]:
                    raise ApiError("bad_request", "mask extent does not match the style image")
                payload["masks"] = (fg, bg)
        record = jobs.submit(kind, payload)
        return {"job_id": record.job_id, "status": record.status}

    @app.get("/v1/jobs/{job_id}")
    def job_endpoint(job_id: str) -> dict:
        return jobs.get(job_id).to_json()

    @app.get("/v1/checkpoints")
    def checkpoints_endpoint() -> dict:
        return {"checkpoints": store.listing()}

    return app
