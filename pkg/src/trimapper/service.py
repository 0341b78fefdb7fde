"""Local HTTP session service for the interactive click loop.

Sessions are held in memory.  Every mutation recomputes the trimap and
alpha from the full click list (replay), so the served state can never go
stale; predictors that carry state through their previous output are
replayed click by click.  Optional ground truth uploads enable live
metrics and the simulator-driven "suggest next click" endpoint.
"""

from __future__ import annotations

import base64
import json
import secrets
import shutil
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, UploadFile
from fastapi.responses import JSONResponse, Response

from .core import (
    Click,
    LabelClass,
    SimulationConfig,
    alpha_from_png_bytes,
    alpha_to_png_bytes,
    as_trimap,
    image_from_png_bytes,
    image_to_png_bytes,
    trimap_from_png_bytes,
    trimap_to_png_bytes,
    trimap_to_rle,
)
from .matting import compute_metrics, estimate_alpha
from .predictors import make_predictor, predict_trimap
from .rasterops import warmup
from .simulation import Policy, simulate_step


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class ServiceConfig:
    predictor: str = "geodesic"
    working_size: int = 448
    session_ttl_seconds: float = 3600.0
    max_megapixels: float = 16.0
    sim: SimulationConfig = field(default_factory=SimulationConfig)
    persist_dir: str | None = None  # optional crash-recovery storage


@dataclass
class Session:
    id: str
    image: np.ndarray
    clicks: list[Click]
    trimap: np.ndarray
    alpha: np.ndarray
    gt_alpha: np.ndarray | None
    gt_trimap: np.ndarray | None
    created_at: float
    updated_at: float
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _derive_trimap_from_alpha(alpha: np.ndarray) -> np.ndarray:
    t = np.full(alpha.shape, np.uint8(LabelClass.UNKNOWN))
    t[alpha >= 0.995] = np.uint8(LabelClass.FOREGROUND)
    t[alpha <= 0.005] = np.uint8(LabelClass.BACKGROUND)
    return as_trimap(t)


class SessionStore:
    """Thread-safe session registry; one lock per session serializes its
    mutations, independent sessions proceed in parallel.

    With ``persist_dir`` set, every mutation writes the session's inputs
    (image, ground truth, click list) to disk and a fresh store replays
    them on startup, so a crash loses at most nothing but derived state.
    """

    def __init__(self, cfg: ServiceConfig):
        self.cfg = cfg
        self._sessions: dict[str, Session] = {}
        self._registry_lock = threading.Lock()
        self._predictor = None
        if not cfg.predictor.startswith("oracle"):
            self._predictor = make_predictor(cfg.predictor)
        if cfg.persist_dir:
            self._restore_persisted()

    # -- internals ---------------------------------------------------------

    def _predictor_for(self, session: Session):
        if self._predictor is not None:
            return self._predictor
        if session.gt_trimap is None:
            raise ApiError(400, "no_ground_truth", "oracle predictor needs a ground-truth trimap")
        return make_predictor("oracle", gt_trimap=session.gt_trimap)

    def _session_dir(self, session_id: str) -> Path:
        return Path(self.cfg.persist_dir) / session_id

    def _persist(self, session: Session) -> None:
        if not self.cfg.persist_dir:
            return
        root = self._session_dir(session.id)
        root.mkdir(parents=True, exist_ok=True)
        image_path = root / "image.png"
        if not image_path.exists():
            image_path.write_bytes(image_to_png_bytes(session.image))
            if session.gt_alpha is not None:
                (root / "gt_alpha.png").write_bytes(alpha_to_png_bytes(session.gt_alpha))
            if session.gt_trimap is not None:
                (root / "gt_trimap.png").write_bytes(trimap_to_png_bytes(session.gt_trimap))
        (root / "manifest.json").write_text(
            json.dumps({"id": session.id, "clicks": [c.to_json() for c in session.clicks]})
        )

    def _remove_persisted(self, session_id: str) -> None:
        if not self.cfg.persist_dir:
            return
        shutil.rmtree(self._session_dir(session_id), ignore_errors=True)

    def _restore_persisted(self) -> None:
        root = Path(self.cfg.persist_dir)
        if not root.exists():
            return
        now = time.monotonic()
        for entry in sorted(root.iterdir()):
            manifest_path = entry / "manifest.json"
            if not manifest_path.exists():
                continue
            manifest = json.loads(manifest_path.read_text())
            gt_alpha = gt_trimap = None
            if (entry / "gt_alpha.png").exists():
                gt_alpha = alpha_from_png_bytes((entry / "gt_alpha.png").read_bytes())
            if (entry / "gt_trimap.png").exists():
                gt_trimap = trimap_from_png_bytes((entry / "gt_trimap.png").read_bytes())
            session = Session(
                id=manifest["id"],
                image=image_from_png_bytes((entry / "image.png").read_bytes()),
                clicks=[Click.from_json(c) for c in manifest["clicks"]],
                trimap=np.zeros((1, 1), np.uint8),
                alpha=np.zeros((1, 1)),
                gt_alpha=gt_alpha,
                gt_trimap=gt_trimap,
                created_at=now,
                updated_at=now,
            )
            with session.lock:
                self._recompute(session)
            self._sessions[session.id] = session

    def _evict_expired(self) -> None:
        deadline = time.monotonic() - self.cfg.session_ttl_seconds
        with self._registry_lock:
            expired = [sid for sid, s in self._sessions.items() if s.updated_at < deadline]
            for sid in expired:
                del self._sessions[sid]
        for sid in expired:
            self._remove_persisted(sid)

    def _get(self, session_id: str) -> Session:
        self._evict_expired()
        with self._registry_lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise ApiError(404, "not_found", f"no session {session_id!r}")
        return session

    def _recompute(self, session: Session) -> None:
        predictor = self._predictor_for(session)
        cfg = self.cfg
        if predictor.uses_previous:
            previous = None
            result = predict_trimap(predictor, session.image, [], cfg.working_size,
                                    cfg.sim.click_radius, previous)
            previous = result.trimap_working
            for k in range(1, len(session.clicks) + 1):
                result = predict_trimap(predictor, session.image, session.clicks[:k],
                                        cfg.working_size, cfg.sim.click_radius, previous)
                previous = result.trimap_working
        else:
            result = predict_trimap(predictor, session.image, session.clicks,
                                    cfg.working_size, cfg.sim.click_radius, None)
        session.trimap = result.trimap
        session.alpha = estimate_alpha(session.image, result.trimap)
        session.updated_at = time.monotonic()

    def _metrics(self, session: Session) -> dict | None:
        if session.gt_alpha is None and session.gt_trimap is None:
            return None
        if session.gt_alpha is not None:
            report = compute_metrics(
                session.alpha, session.gt_alpha, session.trimap, session.gt_trimap
            )
            return {
                "mse": report.mse,
                "sad": report.sad,
                "mad": report.mad,
                "pixel_err": report.pixel_err,
            }
        pixel_err = float(np.mean(session.trimap != session.gt_trimap))
        return {"mse": None, "sad": None, "mad": None, "pixel_err": pixel_err}

    def snapshot(self, session: Session, include_rle: bool = False) -> dict:
        h, w = session.image.shape[:2]
        payload = {
            "id": session.id,
            "width": w,
            "height": h,
            "working_size": self.cfg.working_size,
            "predictor": self.cfg.predictor,
            "clicks": [c.to_json() for c in session.clicks],
            "trimap_png": base64.b64encode(trimap_to_png_bytes(session.trimap)).decode("ascii"),
            "alpha_png": base64.b64encode(alpha_to_png_bytes(session.alpha)).decode("ascii"),
            "metrics": self._metrics(session),
            "has_gt": session.gt_trimap is not None or session.gt_alpha is not None,
            "created_at": session.created_at,
            "updated_at": session.updated_at,
        }
        if include_rle:
            payload["trimap_rle"] = trimap_to_rle(session.trimap)
        return payload

    # -- operations ----------------------------------------------------------

    def create(
        self,
        image_bytes: bytes,
        gt_alpha_bytes: bytes | None = None,
        gt_trimap_bytes: bytes | None = None,
    ) -> Session:
        self._evict_expired()
        try:
            image = image_from_png_bytes(image_bytes)
        except Exception:
            raise ApiError(400, "undecodable", "image payload could not be decoded") from None
        h, w = image.shape[:2]
        if w * h > self.cfg.max_megapixels * 1e6:
            raise ApiError(
                413, "too_large",
                f"image is {w}x{h}; limit is {self.cfg.max_megapixels} megapixels",
            )
        gt_alpha = gt_trimap = None
        try:
            if gt_alpha_bytes:
                gt_alpha = alpha_from_png_bytes(gt_alpha_bytes)
            if gt_trimap_bytes:
                gt_trimap = trimap_from_png_bytes(gt_trimap_bytes)
        except Exception:
            raise ApiError(400, "undecodable", "ground-truth payload could not be decoded") from None
        if gt_alpha is not None and gt_alpha.shape != image.shape[:2]:
            raise ApiError(400, "bad_request", "ground-truth alpha dimensions do not match image")
        if gt_trimap is not None and gt_trimap.shape != image.shape[:2]:
            raise ApiError(400, "bad_request", "ground-truth trimap dimensions do not match image")
        if gt_trimap is None and gt_alpha is not None:
            gt_trimap = _derive_trimap_from_alpha(gt_alpha)
        now = time.monotonic()
        session = Session(
            id=secrets.token_urlsafe(16),
            image=image,
            clicks=[],
            trimap=np.zeros((1, 1), np.uint8),
            alpha=np.zeros((1, 1)),
            gt_alpha=gt_alpha,
            gt_trimap=gt_trimap,
            created_at=now,
            updated_at=now,
        )
        with session.lock:
            self._recompute(session)
        with self._registry_lock:
            self._sessions[session.id] = session
        self._persist(session)
        return session

    def add_click(self, session_id: str, x: int, y: int, label: str) -> Session:
        session = self._get(session_id)
        h, w = session.image.shape[:2]
        if not (0 <= x < w and 0 <= y < h):
            raise ApiError(400, "out_of_bounds", f"click at ({x}, {y}) is outside the {w}x{h} image")
        try:
            label_class = LabelClass.from_letter(label)
        except ValueError as exc:
            raise ApiError(400, "bad_request", str(exc)) from None
        with session.lock:
            session.clicks.append(Click(x=x, y=y, label=label_class, ordinal=len(session.clicks)))
            self._recompute(session)
            self._persist(session)
        return session

    def undo(self, session_id: str) -> Session:
        session = self._get(session_id)
        with session.lock:
            if session.clicks:
                session.clicks.pop()
                self._recompute(session)
                self._persist(session)
        return session

    def reset(self, session_id: str) -> Session:
        session = self._get(session_id)
        with session.lock:
            session.clicks.clear()
            self._recompute(session)
            self._persist(session)
        return session

    def get(self, session_id: str) -> Session:
        return self._get(session_id)

    def suggest(self, session_id: str) -> dict:
        session = self._get(session_id)
        if session.gt_trimap is None:
            raise ApiError(400, "no_ground_truth", "suggest needs an uploaded ground-truth trimap")
        with session.lock:
            decision = simulate_step(
                session.trimap, session.gt_trimap, self.cfg.sim, Policy.CUPS,
                ordinal=len(session.clicks),
            )
        if decision.converged:
            return {"converged": True, "click": None}
        return {"converged": False, "click": decision.click.to_json()}


def build_app(cfg: ServiceConfig | None = None) -> FastAPI:
    cfg = cfg or ServiceConfig()
    app = FastAPI(title="trimapper session service")
    store = SessionStore(cfg)
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(ValueError)
    async def _value_error(_req: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"code": "bad_request", "message": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "predictor": cfg.predictor}

    @app.post("/sessions")
    async def create_session(
        image: UploadFile,
        gt_alpha: UploadFile | None = None,
        gt_trimap: UploadFile | None = None,
    ):
        image_bytes = await image.read()
        gt_alpha_bytes = await gt_alpha.read() if gt_alpha is not None else None
        gt_trimap_bytes = await gt_trimap.read() if gt_trimap is not None else None
        session = store.create(image_bytes, gt_alpha_bytes, gt_trimap_bytes)
        return store.snapshot(session, include_rle=True)

    @app.post("/sessions/{session_id}/clicks")
    async def add_click(session_id: str, payload: dict):
        for key in ("x", "y", "label"):
            if key not in payload:
                raise ApiError(400, "bad_request", f"click payload is missing {key!r}")
        session = store.add_click(
            session_id, int(payload["x"]), int(payload["y"]), str(payload["label"])
        )
        return store.snapshot(session, include_rle=True)

    @app.post("/sessions/{session_id}/undo")
    def undo(session_id: str):
        return store.snapshot(store.undo(session_id), include_rle=True)

    @app.post("/sessions/{session_id}/reset")
    def reset(session_id: str):
        return store.snapshot(store.reset(session_id), include_rle=True)

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str, rle: bool = False):
        return store.snapshot(store.get(session_id), include_rle=rle)

    @app.get("/sessions/{session_id}/suggest")
    def suggest(session_id: str):
        return store.suggest(session_id)

    @app.get("/sessions/{session_id}/trimap.png")
    def trimap_png(session_id: str):
        return Response(content=trimap_to_png_bytes(store.get(session_id).trimap),
                        media_type="image/png")

    @app.get("/sessions/{session_id}/alpha.png")
    def alpha_png(session_id: str):
        return Response(content=alpha_to_png_bytes(store.get(session_id).alpha),
                        media_type="image/png")

    return app


def serve(cfg: ServiceConfig, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    warmup()  # compile the raster kernels before the first request
    uvicorn.run(build_app(cfg), host=host, port=port, log_level="info")
