"""HTTP adapters for real model backends.

Wire contract (all JSON bodies, images as base64 PNG):

  POST {endpoint}/embed_text   {"text": str}                          -> {"embedding": [float]}
  POST {endpoint}/embed_image  {"image_png_b64": str}                 -> {"embedding": [float]}
  POST {endpoint}/generate     {"prompt": str, "seed": int}           -> {"views": [b64 x9], "mesh_ref": str|null}
  POST {endpoint}/retrieve     {"prompt": str, "k": int}              -> {"results": [{"prompt": str, "views": [b64 x9]}]}
  POST {endpoint}/judge        {"template_text": str, "images": [b64 x2], "metric": str} -> {"text": str}
  POST {endpoint}/suggest      {"base": str, "modifiers": [str], "n": int, "seed": int}  -> {"prompts": [str]}
  POST {endpoint}/segment      {"image_png_b64": str}                 -> {"mask": [[0|1]]}
  POST {endpoint}/attention    {"keyword": str, "image_png_b64": str} -> {"map": [[float]]}
  GET  {endpoint}/healthz                                             -> 200

Retries use exponential backoff (base 250 ms, factor 2); request-level
concurrency per provider is bounded by a semaphore.
"""

from __future__ import annotations

import base64
import os
import threading
import time

import httpx
import numpy as np

from ..errors import ProviderError
from ..imaging import BinaryMask, RasterImage
from .base import (
    GenerationResult,
    JudgeRequest,
    ProviderConfig,
    ProviderHealth,
    RETRY_BASE_MS,
    RETRY_FACTOR,
)


def _b64_png(img: RasterImage) -> str:
    return base64.b64encode(img.to_png_bytes()).decode("ascii")


def _decode_views(items: list[str]) -> tuple[RasterImage, ...]:
    return tuple(RasterImage.from_bytes(base64.b64decode(item)) for item in items)


class HttpProviderBase:
    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        headers = {}
        if config.auth_env:
            token = os.environ.get(config.auth_env)
            if token:
                headers["Authorization"] = f"Bearer {token}"
        self._client = httpx.Client(
            base_url=config.endpoint or "",
            timeout=config.timeout_ms / 1000.0,
            headers=headers,
            transport=transport,
        )
        self._slots = threading.Semaphore(max(1, config.in_flight_limit))

    def _post(self, path: str, payload: dict) -> dict:
        attempts = self.config.retries + 1
        last_error: Exception | None = None
        for attempt in range(attempts):
            if attempt > 0:
                time.sleep(RETRY_BASE_MS / 1000.0 * (RETRY_FACTOR ** (attempt - 1)))
            try:
                with self._slots:
                    response = self._client.post(path, json=payload)
                response.raise_for_status()
                return response.json()
            except (httpx.HTTPError, ValueError) as exc:
                last_error = exc
        raise ProviderError(f"{path} failed after {attempts} attempts: {last_error}", attempts=attempts)

    def close(self) -> None:
        self._client.close()


class HttpEmbeddingProvider(HttpProviderBase):
    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None):
        super().__init__(config, transport)
        self.dimension = config.embedding_dim

    def embed_text(self, text: str) -> np.ndarray:
        data = self._post("/embed_text", {"text": text})
        return np.asarray(data["embedding"], dtype=np.float64)

    def embed_image(self, img: RasterImage) -> np.ndarray:
        data = self._post("/embed_image", {"image_png_b64": _b64_png(img)})
        return np.asarray(data["embedding"], dtype=np.float64)


class HttpGenerationProvider(HttpProviderBase):
    def generate(self, prompt: str, seed: int) -> GenerationResult:
        data = self._post("/generate", {"prompt": prompt, "seed": seed})
        return GenerationResult(
            prompt=prompt,
            branch="generation",
            views=_decode_views(data["views"]),
            mesh_ref=data.get("mesh_ref"),
        )


class HttpRetrievalProvider(HttpProviderBase):
    def retrieve(self, prompt: str, k: int) -> list[GenerationResult]:
        data = self._post("/retrieve", {"prompt": prompt, "k": k})
        return [
            GenerationResult(
                prompt=item["prompt"],
                branch="retrieval",
                views=_decode_views(item["views"]),
                mesh_ref=item.get("mesh_ref"),
            )
            for item in data["results"]
        ]


class HttpJudgeProvider(HttpProviderBase):
    def evaluate(self, request: JudgeRequest) -> str:
        data = self._post(
            "/judge",
            {
                "template_text": request.template_text,
                "images": [_b64_png(request.image_a), _b64_png(request.image_b)],
                "metric": request.metric,
            },
        )
        return data["text"]


class HttpLLMProvider(HttpProviderBase):
    def suggest_prompts(self, base: str, modifiers: list[str], n: int, seed: int) -> list[str]:
        data = self._post("/suggest", {"base": base, "modifiers": modifiers, "n": n, "seed": seed})
        return list(data["prompts"])


class HttpSegmentationProvider(HttpProviderBase):
    def segment(self, img: RasterImage) -> BinaryMask:
        data = self._post("/segment", {"image_png_b64": _b64_png(img)})
        return BinaryMask(np.asarray(data["mask"], dtype=bool))


class HttpAttentionProvider(HttpProviderBase):
    def attention(self, keyword: str, img: RasterImage) -> np.ndarray:
        data = self._post("/attention", {"keyword": keyword, "image_png_b64": _b64_png(img)})
        return np.asarray(data["map"], dtype=np.float64)


def http_health(config: ProviderConfig, name: str, transport: httpx.BaseTransport | None = None) -> ProviderHealth:
    """Probe an HTTP provider; 'down' after timeout * (retries + 1)."""
    start = time.monotonic()
    attempts = config.retries + 1
    with httpx.Client(
        base_url=config.endpoint or "", timeout=config.timeout_ms / 1000.0, transport=transport
    ) as client:
        for attempt in range(attempts):
            try:
                response = client.get("/healthz")
                if response.status_code < 500:
                    latency = (time.monotonic() - start) * 1000.0
                    return ProviderHealth(name=name, status="ok", latency_ms=latency)
            except httpx.HTTPError:
                pass
    latency = (time.monotonic() - start) * 1000.0
    return ProviderHealth(name=name, status="down", latency_ms=latency, detail="unreachable")
