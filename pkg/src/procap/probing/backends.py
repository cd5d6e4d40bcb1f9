"""Zero-shot VQA backends.

Every backend answers a :class:`VQARequest`. The HTTP protocol is::

    POST {base}/v1/vqa
    {"image_b64": str, "prompt": str, "length_penalty": float, "max_new_tokens": int}
    -> 200 {"answer": str}

Any other status is a protocol error.
"""

from __future__ import annotations

import base64
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import BackendError, BackendProtocolError, BackendTimeoutError
from ..preprocess import check_image, encode_png

log = logging.getLogger(__name__)

BACKEND_URL_ENV = "PROCAP_BACKEND_URL"


@dataclass(frozen=True)
class VQARequest:
    image: Optional[np.ndarray]
    prompt: str
    length_penalty: float
    max_new_tokens: int
    meme_id: Optional[str] = None
    focus: Optional[str] = None


class VQABackend:
    name = "vqa"
    needs_image = True

    def answer(self, request: VQARequest) -> str:
        raise NotImplementedError

    def __str__(self):
        return f"{self.__class__.__name__}({self.name})"


class HTTPVQABackend(VQABackend):
    def __init__(self, url: str, timeout: float = 60.0, session=None):
        import requests

        self.url = url.rstrip("/") + "/v1/vqa"
        self.name = url
        self.timeout = timeout
        self.session = session or requests.Session()

    def answer(self, request):
        import requests

        payload = {
            "image_b64": base64.b64encode(encode_png(check_image(request.image))).decode("ascii"),
            "prompt": request.prompt,
            "length_penalty": float(request.length_penalty),
            "max_new_tokens": int(request.max_new_tokens),
        }
        try:
            resp = self.session.post(self.url, json=payload, timeout=self.timeout)
        except requests.Timeout as exc:
            raise BackendTimeoutError(f"VQA backend timed out after {self.timeout}s",
                                      request.meme_id, request.focus) from exc
        except requests.RequestException as exc:
            raise BackendProtocolError(f"VQA backend unreachable: {exc}", request.meme_id, request.focus) from exc
        if resp.status_code != 200:
            raise BackendProtocolError(f"VQA backend returned HTTP {resp.status_code}",
                                       request.meme_id, request.focus)
        try:
            answer = resp.json()["answer"]
        except (ValueError, KeyError, TypeError):
            raise BackendProtocolError("VQA backend response has no 'answer' field",
                                       request.meme_id, request.focus) from None
        if not isinstance(answer, str):
            raise BackendProtocolError("VQA backend 'answer' is not a string", request.meme_id, request.focus)
        return answer


class FixtureVQABackend(VQABackend):
    """Canned answers ``{meme_id: {focus: answer}}``.

    An answer may also be a mapping from length penalty (``"1"``, ``"2"``,
    ...) to text, so decode settings can change the output.
    """

    name = "fixture"
    needs_image = False

    def __init__(self, answers):
        if isinstance(answers, (str, Path)):
            self.name = f"fixture:{answers}"
            answers = json.loads(Path(answers).read_text(encoding="utf-8"))
        self.answers = {str(k): dict(v) for k, v in answers.items()}
        self.calls = 0

    def answer(self, request):
        self.calls += 1
        try:
            value = self.answers[str(request.meme_id)][request.focus]
        except KeyError:
            raise BackendProtocolError("fixture has no answer", request.meme_id, request.focus) from None
        if isinstance(value, dict):
            key = format(float(request.length_penalty), "g")
            if key not in value:
                raise BackendProtocolError(f"fixture has no answer for length penalty {key}",
                                           request.meme_id, request.focus)
            value = value[key]
        return value


class CacheOnlyBackend(VQABackend):
    """Refuses every request; used to rebuild Pro-Caps strictly from a cache."""

    name = "cache-only"
    needs_image = False

    def answer(self, request):
        raise BackendError("answer not in cache", request.meme_id, request.focus)


class LocalVQABackend(VQABackend):
    """In-process BLIP-2 style model loaded through ``transformers``."""

    def __init__(self, model_id: str, device: str = "cpu", num_beams: int = 5):
        self.name = f"local:{model_id}"
        self.model_id = model_id
        self.device = device
        self.num_beams = num_beams
        self._model = None
        self._processor = None

    def _load(self):
        if self._model is None:
            try:
                from transformers import Blip2ForConditionalGeneration, Blip2Processor
            except ImportError as exc:
                raise BackendError(f"transformers is required for {self.name}") from exc
            log.info("loading %s", self.model_id)
            self._processor = Blip2Processor.from_pretrained(self.model_id)
            self._model = Blip2ForConditionalGeneration.from_pretrained(self.model_id).to(self.device).eval()
        return self._model, self._processor

    def answer(self, request):
        import torch

        model, processor = self._load()
        inputs = processor(images=check_image(request.image), text=request.prompt, return_tensors="pt")
        inputs = {k: v.to(self.device) for k, v in inputs.items()}
        with torch.no_grad():
            out = model.generate(**inputs, num_beams=self.num_beams,
                                 length_penalty=float(request.length_penalty),
                                 max_new_tokens=int(request.max_new_tokens))
        return processor.batch_decode(out, skip_special_tokens=True)[0]


def make_backend(spec: Optional[str]) -> VQABackend:
    """``http(s)://...``, ``fixture:<answers.json>`` or ``local:<model-id>``.

    ``PROCAP_BACKEND_URL`` overrides the given spec when set.
    """
    spec = os.environ.get(BACKEND_URL_ENV) or spec
    if not spec:
        raise BackendError("no VQA backend configured")
    if spec.startswith("fixture:"):
        return FixtureVQABackend(spec[len("fixture:"):])
    if spec.startswith("local:"):
        return LocalVQABackend(spec[len("local:"):])
    if spec.startswith(("http://", "https://")):
        return HTTPVQABackend(spec)
    raise BackendError(f"unrecognised backend {spec!r}")
