"""HTTP service over the shared compression pipeline.

JSON in/out with base64 PNG images.  Error mapping: 400 invalid
payload, 404 unknown route/model, 409 model/config mismatch, 503
backend unavailable.  Every response names the model it used.
"""

import base64
import io
import threading

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from PIL import Image
from pydantic import BaseModel

from .bitstream import Bitstream, BitstreamError
from .coder import DecodeError
from .config import CodecConfig, LAMBDA_TABLE
from .metrics import bpp as bpp_of
from .metrics import psnr
from .model import load_checkpoint
from .pipeline import RoiCodec
from .tma import (BackendUnavailableError, DEFAULT_ETA, DEFAULT_PROMPT,
                  DEFAULT_SIGMA, GroundTruthBackend, PretrainedBackend,
                  SyntheticBackend)


class SimilarityRequest(BaseModel):
    image: str
    text: str = DEFAULT_PROMPT


class MaskRequest(BaseModel):
    image: str
    text: str = DEFAULT_PROMPT
    eta: float = DEFAULT_ETA
    sigma: float = DEFAULT_SIGMA


class CompressRequest(BaseModel):
    image: str
    text: str = DEFAULT_PROMPT
    eta: float = DEFAULT_ETA
    sigma: float = DEFAULT_SIGMA
    lambda_index: int = 1


class DecompressRequest(BaseModel):
    container: str


def _decode_image(b64):
    try:
        raw = base64.b64decode(b64)
        with Image.open(io.BytesIO(raw)) as img:
            return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    except Exception as exc:
        raise ValueError(f"undecodable image payload: {exc}") from exc


def _encode_png(arr):
    arr = (np.clip(np.asarray(arr, dtype=np.float64), 0, 1) * 255).round()
    img = Image.fromarray(arr.astype(np.uint8))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _error(code, status):
    return JSONResponse(status_code=status,
                        content={"code": status, "message": code})


class _PadStub:
    """Mask endpoints need only the padding multiple from the model config."""

    cfg = CodecConfig.desk(0)


def make_backend(name):
    return {
        "synthetic": lambda: SyntheticBackend("brightness"),
        "synthetic-hue": lambda: SyntheticBackend("hue-band"),
        "gt": GroundTruthBackend,
        "pretrained": PretrainedBackend,
    }[name]()


def create_app(model_dir=None, backend_name="synthetic", backend=None,
               models=None):
    """Build the service; models load once and stay immutable while serving."""
    backend = backend or make_backend(backend_name)
    registry = {}
    if models:
        for model in models:
            registry[(model.cfg.config_id, model.cfg.lambda_index)] = model
    elif model_dir is not None:
        from pathlib import Path
        for path in sorted(Path(model_dir).glob("*.pt")):
            try:
                model = load_checkpoint(path)
            except Exception:
                continue
            registry[(model.cfg.config_id, model.cfg.lambda_index)] = model

    app = FastAPI(title="croi", version="1")
    app.state.registry = registry
    app.state.backend = backend
    app.state.counters = {"similarity": 0, "mask": 0, "compress": 0,
                          "decompress": 0}
    lock = threading.Lock()

    def _count(name):
        with lock:
            app.state.counters[name] += 1

    def _model_for(lambda_index, config_id=None):
        if config_id is not None:
            return registry.get((config_id, lambda_index))
        for (cid, lidx), model in sorted(registry.items()):
            if lidx == lambda_index:
                return model
        return None

    @app.exception_handler(RequestValidationError)
    async def _validation(_req: Request, exc):
        return JSONResponse(status_code=400,
                            content={"code": 400, "message": str(exc)})

    @app.get("/v1/models")
    def list_models():
        return {
            "models": [
                {"config_id": cid, "lambda_index": lidx,
                 "lambda": LAMBDA_TABLE[lidx],
                 "channels_n": model.cfg.channels_n,
                 "channels_m": model.cfg.channels_m}
                for (cid, lidx), model in sorted(registry.items())
            ],
            "lambda_table": list(LAMBDA_TABLE),
            "backend": getattr(backend, "kind", "unknown"),
        }

    @app.post("/v1/similarity")
    def similarity(req: SimilarityRequest):
        _count("similarity")
        try:
            x = _decode_image(req.image)
        except ValueError as exc:
            return _error(str(exc), 400)
        codec = RoiCodec(_PadStub(), backend)
        try:
            result = codec.make_mask(x, prompt=req.text)
        except BackendUnavailableError as exc:
            return _error(str(exc), 503)
        except ValueError as exc:
            return _error(str(exc), 400)
        return {"similarity_png": _encode_png(result.similarity),
                "height": result.similarity.shape[0],
                "width": result.similarity.shape[1]}

    @app.post("/v1/mask")
    def mask(req: MaskRequest):
        _count("mask")
        try:
            x = _decode_image(req.image)
        except ValueError as exc:
            return _error(str(exc), 400)
        codec = RoiCodec(_PadStub(), backend)
        try:
            result = codec.make_mask(x, prompt=req.text, eta=req.eta,
                                     sigma=req.sigma)
        except BackendUnavailableError as exc:
            return _error(str(exc), 503)
        except ValueError as exc:
            return _error(str(exc), 400)
        return {"mask_png": _encode_png(result.mask),
                "roi_pixel_fraction": result.roi_fraction,
                "eta": req.eta, "sigma": req.sigma, "text": req.text}

    @app.post("/v1/compress")
    def compress(req: CompressRequest):
        _count("compress")
        try:
            x = _decode_image(req.image)
        except ValueError as exc:
            return _error(str(exc), 400)
        model = _model_for(req.lambda_index)
        if model is None:
            return _error(f"no model loaded for lambda index {req.lambda_index}",
                          409)
        codec = RoiCodec(model, backend)
        try:
            outcome = codec.compress_image(x, prompt=req.text,
                                           sigma=req.sigma, eta=req.eta)
        except BackendUnavailableError as exc:
            return _error(str(exc), 503)
        except ValueError as exc:
            return _error(str(exc), 400)
        data = outcome.bitstream.to_bytes()
        return {
            "container": base64.b64encode(data).decode("ascii"),
            "bpp": bpp_of(len(data), x.shape[:2]),
            "psnr": _json_db(outcome.psnr),
            "roi_psnr": _json_db(outcome.roi_psnr),
            "mask_png": _encode_png(outcome.mask),
            "reconstruction_png": _encode_png(outcome.x_hat),
            "config_id": model.cfg.config_id,
            "lambda_index": model.cfg.lambda_index,
        }

    @app.post("/v1/decompress")
    def decompress(req: DecompressRequest):
        _count("decompress")
        try:
            stream = Bitstream.from_bytes(base64.b64decode(req.container))
        except (BitstreamError, ValueError) as exc:
            return _error(f"corrupt container: {exc}", 400)
        model = registry.get((stream.config_id, stream.lambda_index))
        if model is None:
            return _error(
                f"no model loaded for config id {stream.config_id} / "
                f"lambda index {stream.lambda_index}", 409)
        try:
            x_hat = model.decompress(stream)
        except BitstreamError as exc:
            return _error(str(exc), 409)
        except DecodeError as exc:
            return _error(f"corrupt container: {exc}", 400)
        return {"reconstruction_png": _encode_png(x_hat),
                "height": stream.height, "width": stream.width,
                "psnr": None,
                "config_id": model.cfg.config_id,
                "lambda_index": stream.lambda_index}

    return app


def _json_db(value):
    """JSON has no Infinity; the inf PSNR sentinel travels as a string."""
    if value is None:
        return None
    return "inf" if value == float("inf") else value
