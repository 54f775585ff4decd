"""HTTP remixing service built around precomputed sessions.

A client uploads a mixture once, together with either a mask-set file or the
individual stems (from which oracle masks are built). The service runs the
forward transform a single time at ingest, smooths the masks, and keeps the
complex spectrogram in memory. Every remix request after that is just a gain
field, a multiply, and an inverse transform -- no analysis work on the hot
path, which is what makes slider-driven interfaces feel instant.

Endpoints:

* POST   /sessions              multipart upload -> 201 + session metadata
* GET    /sessions/{id}         metadata, last gains, magnitude thumbnail
* POST   /sessions/{id}/remix   {"gains": [0..1,...]} -> WAV bytes
* DELETE /sessions/{id}         drop the session

Gains travel in slider units (0 mute, 0.5 untouched, 1 doubled). Sessions
idle past the configured TTL are evicted lazily. Errors: 400 malformed
input, 404 unknown session, 413 over the duration cap, 415 unsupported
format or rate, 422 invalid gain vector.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, File, HTTPException, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .audio_io import AudioClip, read_wav_bytes, wav_bytes
from .errors import MalformedFile, UnsupportedFormat, VamixError
from .masking import (
    DEFAULT_ALPHA,
    MaskSet,
    ideal_binary_masks,
    read_mask_set_bytes,
    smooth_mask_set,
)
from .remix import RemixSpec, apply_gain_field
from .spectral import ComplexSpectrogram, StftParams, istft, magnitude, stft

THUMBNAIL_MAX = 128


@dataclass(frozen=True)
class ServiceConfig:
    alpha: float = DEFAULT_ALPHA
    smoothing: bool = True
    max_duration_s: float = 120.0
    session_ttl_s: float = 3600.0
    cors_origin: str = "*"
    stft_params: StftParams = field(default_factory=StftParams)


@dataclass
class _Session:
    id: str
    spectrogram: ComplexSpectrogram
    mask_set: MaskSet
    n_samples: int
    sample_rate: int
    last_gains: list[float]
    thumbnail: list[list[float]]
    last_used: float

    lock: threading.Lock = field(default_factory=threading.Lock)


def _max_pool_thumbnail(mag: np.ndarray, limit: int = THUMBNAIL_MAX) -> list[list[float]]:
    """Shrink a magnitude matrix below limit x limit by max-pooling blocks."""
    bins, frames = mag.shape
    fb = -(-bins // limit)  # ceil division
    ff = -(-frames // limit)
    pad_b = fb * -(-bins // fb) - bins
    pad_f = ff * -(-frames // ff) - frames
    padded = np.pad(mag, ((0, pad_b), (0, pad_f)), mode="constant")
    pooled = padded.reshape(
        padded.shape[0] // fb, fb, padded.shape[1] // ff, ff
    ).max(axis=(1, 3))
    return [[float(f"{v:.5g}") for v in row] for row in pooled]


class _GainsBody(BaseModel):
    gains: list[float]


def create_app(config: ServiceConfig | None = None, static_dir: str | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="vamix remix service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[config.cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    sessions: dict[str, _Session] = {}
    store_lock = threading.Lock()

    def _evict_idle() -> None:
        deadline = time.monotonic() - config.session_ttl_s
        with store_lock:
            for sid in [s for s, sess in sessions.items() if sess.last_used < deadline]:
                del sessions[sid]

    def _get_session(session_id: str) -> _Session:
        _evict_idle()
        with store_lock:
            sess = sessions.get(session_id)
        if sess is None:
            raise HTTPException(status_code=404, detail="unknown session")
        sess.last_used = time.monotonic()
        return sess

    def _decode_upload(upload: UploadFile, what: str) -> AudioClip:
        try:
            return read_wav_bytes(upload.file.read())
        except UnsupportedFormat as exc:
            raise HTTPException(status_code=415, detail=f"{what}: {exc}") from exc
        except MalformedFile as exc:
            raise HTTPException(status_code=400, detail=f"{what}: {exc}") from exc

    def _session_meta(sess: _Session) -> dict:
        return {
            "id": sess.id,
            "labels": list(sess.mask_set.labels),
            "n_sources": len(sess.mask_set),
            "duration_s": sess.n_samples / sess.sample_rate,
            "sample_rate": sess.sample_rate,
            "bins": sess.spectrogram.bins,
            "frames": sess.spectrogram.frames,
            "last_gains": list(sess.last_gains),
        }

    @app.post("/sessions", status_code=201)
    def create_session(
        mix: UploadFile = File(...),
        masks: UploadFile | None = File(default=None),
        stems: list[UploadFile] = File(default=[]),
    ) -> dict:
        if (masks is None) == (not stems):
            raise HTTPException(
                status_code=400,
                detail="provide either a mask-set file or stem files, not both",
            )
        clip = _decode_upload(mix, "mix")
        params = config.stft_params
        if clip.sample_rate != params.sample_rate:
            raise HTTPException(
                status_code=415,
                detail=f"mix: expected {params.sample_rate} Hz, got {clip.sample_rate}",
            )
        if clip.duration > config.max_duration_s:
            raise HTTPException(
                status_code=413,
                detail=f"mix runs {clip.duration:.1f}s; the cap is {config.max_duration_s:.0f}s",
            )

        try:
            X = stft(clip, params)
            if masks is not None:
                mask_set = read_mask_set_bytes(masks.file.read(), origin=masks.filename or "masks")
                if mask_set.params.sample_rate != params.sample_rate:
                    raise HTTPException(
                        status_code=415,
                        detail=f"masks assume {mask_set.params.sample_rate} Hz",
                    )
                if (mask_set.params.window_size, mask_set.params.hop) != (
                    params.window_size,
                    params.hop,
                ):
                    raise HTTPException(
                        status_code=400,
                        detail="mask analysis grid does not match the service grid",
                    )
            else:
                if len(stems) < 2:
                    raise HTTPException(
                        status_code=400, detail="need at least two stems to build masks"
                    )
                stem_clips = [_decode_upload(s, s.filename or "stem") for s in stems]
                for s in stem_clips:
                    if s.sample_rate != clip.sample_rate:
                        raise HTTPException(
                            status_code=415, detail="stems must match the mix sample rate"
                        )
                    if len(s) != len(clip):
                        raise HTTPException(
                            status_code=400, detail="stems must match the mix length"
                        )
                labels = [
                    (s.filename or f"source_{i}").rsplit(".", 1)[0]
                    for i, s in enumerate(stems)
                ]
                mask_set = ideal_binary_masks(
                    [magnitude(stft(s, params)) for s in stem_clips], labels=labels
                )
            if (mask_set.bins, mask_set.frames) != (X.bins, X.frames):
                raise HTTPException(
                    status_code=400,
                    detail=(
                        f"masks cover {mask_set.bins}x{mask_set.frames} bins but the mix "
                        f"analyzes to {X.bins}x{X.frames}"
                    ),
                )
            if config.smoothing:
                mask_set = smooth_mask_set(mask_set, "zlbm", alpha=config.alpha)
        except HTTPException:
            raise
        except MalformedFile as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except VamixError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

        sess = _Session(
            id=uuid.uuid4().hex,
            spectrogram=X,
            mask_set=mask_set,
            n_samples=len(clip),
            sample_rate=clip.sample_rate,
            last_gains=[0.5] * len(mask_set),
            thumbnail=_max_pool_thumbnail(np.abs(X.data)),
            last_used=time.monotonic(),
        )
        _evict_idle()
        with store_lock:
            sessions[sess.id] = sess
        return _session_meta(sess)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        sess = _get_session(session_id)
        return {**_session_meta(sess), "thumbnail": sess.thumbnail}

    @app.post("/sessions/{session_id}/remix")
    def remix_session(session_id: str, body: _GainsBody) -> Response:
        sess = _get_session(session_id)
        gains = body.gains
        if len(gains) != len(sess.mask_set):
            raise HTTPException(
                status_code=422,
                detail=f"expected {len(sess.mask_set)} gains, got {len(gains)}",
            )
        for v in gains:
            if not np.isfinite(v) or not 0.0 <= v <= 1.0:
                raise HTTPException(
                    status_code=422, detail=f"gain {v} outside the slider range [0, 1]"
                )
        offsets = tuple(2.0 * v - 1.0 for v in gains)
        with sess.lock:
            spec = RemixSpec(mask_set=sess.mask_set, gains=offsets)
            Y, _ = apply_gain_field(sess.spectrogram, spec)
            out = istft(Y, target_length=sess.n_samples)
            sess.last_gains = list(gains)
        return Response(content=wav_bytes(out, format="float32"), media_type="audio/wav")

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str) -> Response:
        _evict_idle()
        with store_lock:
            if session_id not in sessions:
                raise HTTPException(status_code=404, detail="unknown session")
            del sessions[session_id]
        return Response(status_code=204)

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app
