"""HTTP service: style registry, enhancement sessions, slider re-rendering.

Style and mapping inference run once per registered style; slider edits only
re-render cached curves, never the CNN. Counters for both are exposed on
/healthz so clients (and tests) can verify the no-inference contract.
"""

from __future__ import annotations

import base64
import threading
import uuid
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import torch
from fastapi import FastAPI, File, Form, HTTPException, Request, UploadFile
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field

from . import nn as snn
from .enhancer import CurveSet, SliderSettings, apply_sliders, enhance, set_knot
from .imgio import Image, decode_image, encode_png
from .style import StyleLatent, average_latent
from .training import downsample

PREVIEW_MAX_W = 1280
PREVIEW_MAX_H = 720
SESSION_CAPACITY = 32


class StyleInfo(BaseModel):
    id: str
    provenance: str
    dim: int


class StyleResponse(BaseModel):
    id: str
    latent: list[float]
    provenance: str


class EnhanceResponse(BaseModel):
    session_id: str
    preview_png: str  # base64
    curves: dict


class KnotOverride(BaseModel):
    input: str = Field(pattern="^[rgbxy]$")
    output: str = Field(pattern="^[rgb]$")
    index: int = Field(ge=0)
    value: float


class SliderRequest(BaseModel):
    sliders: dict[str, float] = {}
    knots: list[KnotOverride] = []


class ExportRequest(BaseModel):
    apply_sliders: bool = True


class HealthResponse(BaseModel):
    status: str
    model_loaded: bool
    encoder_inferences: int
    mapping_forwards: int
    sessions: int


@dataclass
class Session:
    image: Image
    curves: CurveSet
    sliders: SliderSettings
    knot_overrides: list = field(default_factory=list)
    preview_size: tuple = (0, 0)
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass
class RegistryEntry:
    latent: StyleLatent
    codes: list | None = None  # cached mapping-network output


class AppState:
    def __init__(self, bundle: snn.ModelBundle):
        self.bundle = bundle
        self.registry: dict[str, RegistryEntry] = {}
        self.sessions: OrderedDict[str, Session] = OrderedDict()
        self.lock = threading.Lock()
        self.encoder_inferences = 0
        self.mapping_forwards = 0

    def codes_for(self, style_id: str):
        entry = self.registry[style_id]
        if entry.codes is None:
            with torch.no_grad():
                entry.codes = self.bundle.mapping(torch.from_numpy(entry.latent.values).float())
            self.mapping_forwards += 1
        return entry.codes

    def put_session(self, session: Session) -> str:
        sid = uuid.uuid4().hex[:12]
        with self.lock:
            self.sessions[sid] = session
            while len(self.sessions) > SESSION_CAPACITY:
                self.sessions.popitem(last=False)
        return sid

    def get_session(self, sid: str) -> Session:
        with self.lock:
            if sid not in self.sessions:
                raise HTTPException(404, "unknown session")
            self.sessions.move_to_end(sid)
            return self.sessions[sid]


def _preview_shape(h: int, w: int) -> tuple[int, int]:
    scale = min(1.0, PREVIEW_MAX_W / w, PREVIEW_MAX_H / h)
    return max(1, round(h * scale)), max(1, round(w * scale))


def _session_curves(session: Session) -> CurveSet:
    curves = apply_sliders(session.curves, session.sliders)
    for ov in session.knot_overrides:
        curves = set_knot(curves, ov.input, ov.output, ov.index, ov.value)
    return curves


def _render_preview(session: Session) -> bytes:
    ph, pw = session.preview_size
    img = session.image.data
    if (ph, pw) != (img.shape[1], img.shape[2]):
        small = downsample_rect(img, ph, pw)
    else:
        small = img
    out = enhance(small, _session_curves(session), clamp=True)
    return encode_png(out, bit_depth=8)


def downsample_rect(image: np.ndarray, h: int, w: int) -> np.ndarray:
    import cv2

    hwc = np.transpose(image, (1, 2, 0))
    small = cv2.resize(hwc, (w, h), interpolation=cv2.INTER_LINEAR)
    return np.ascontiguousarray(np.transpose(small, (2, 0, 1)))


def create_app(bundle: snn.ModelBundle | None = None) -> FastAPI:
    if bundle is None:
        bundle = snn.fixup_init(snn.ModelConfig(), seed=0)
    app = FastAPI(title="starenh")
    state = AppState(bundle)
    app.state.enh = state

    @app.exception_handler(HTTPException)
    async def _http_error(_req: Request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={"code": exc.status_code, "message": str(exc.detail)})

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        return HealthResponse(
            status="ok",
            model_loaded=True,
            encoder_inferences=state.encoder_inferences,
            mapping_forwards=state.mapping_forwards,
            sessions=len(state.sessions),
        )

    @app.get("/styles", response_model=list[StyleInfo])
    def list_styles():
        return [
            StyleInfo(id=sid, provenance=e.latent.provenance, dim=len(e.latent.values))
            for sid, e in state.registry.items()
        ]

    @app.post("/styles", response_model=StyleResponse)
    async def post_style(images: list[UploadFile] = File(...), name: str = Form(None)):
        embeddings = []
        k = state.bundle.config.downsample_size
        for upload in images:
            buf = await upload.read()
            try:
                img = decode_image(buf)
            except ValueError:
                continue
            with torch.no_grad():
                low = torch.from_numpy(downsample(img.data, k)).unsqueeze(0)
                embeddings.append(state.bundle.style_encoder(low)[0].numpy().astype(np.float64))
        if not embeddings:
            raise HTTPException(400, "no decodable images")
        style_id = name or f"style-{len(state.registry)}"
        try:
            latent = average_latent(embeddings, provenance=f"user gallery ({len(embeddings)} images)")
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        state.registry[style_id] = RegistryEntry(latent)
        return StyleResponse(id=style_id, latent=latent.values.tolist(), provenance=latent.provenance)

    @app.post("/enhance", response_model=EnhanceResponse)
    async def post_enhance(
        image: UploadFile = File(...),
        source: str = Form(...),
        target: str = Form(...),
        preview: bool = Form(True),
    ):
        for sid in (source, target):
            if sid not in state.registry:
                raise HTTPException(404, f"unknown style {sid!r}")
        try:
            img = decode_image(await image.read())
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        cfg = state.bundle.config
        codes_a = state.codes_for(source)
        codes_b = state.codes_for(target)
        low = torch.from_numpy(downsample(img.data, cfg.downsample_size)).unsqueeze(0)
        with torch.no_grad():
            u = state.bundle.curve_encoder(low, codes_a, codes_b)[0].numpy()
        state.encoder_inferences += 1
        curves = CurveSet.from_vector(u, cfg.color_knots, cfg.coord_knots)
        size = _preview_shape(img.height, img.width) if preview else (img.height, img.width)
        session = Session(image=img, curves=curves, sliders=SliderSettings.ones(), preview_size=size)
        sid = state.put_session(session)
        png = _render_preview(session)
        return EnhanceResponse(
            session_id=sid,
            preview_png=base64.b64encode(png).decode("ascii"),
            curves={"json": curves.to_json()},
        )

    @app.post("/sessions/{sid}/sliders")
    def post_sliders(sid: str, req: SliderRequest):
        session = state.get_session(sid)
        try:
            sliders = SliderSettings.from_dict(req.sliders)
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        with session.lock:
            session.sliders = sliders
            session.knot_overrides = list(req.knots)
            try:
                png = _render_preview(session)
            except ValueError as exc:
                raise HTTPException(422, str(exc))
        return Response(content=png, media_type="image/png")

    @app.post("/sessions/{sid}/export")
    def export(sid: str, req: ExportRequest | None = None):
        session = state.get_session(sid)
        with session.lock:
            curves = (
                _session_curves(session)
                if req is None or req.apply_sliders
                else session.curves
            )
            out = enhance(session.image.data.astype(np.float64), curves, clamp=True)
            png = encode_png(out, bit_depth=session.image.bit_depth)
        return Response(content=png, media_type="image/png")

    return app
