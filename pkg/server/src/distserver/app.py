"""HTTP surface: the wire protocol shared with the codec's adapter."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .backend import ContextTooLong, ModelBackend


class DistributionRequest(BaseModel):
    model: str | None = None
    context_ids: list[int] = Field(min_length=1)
    top_k: int = Field(default=100, ge=1)


class DistributionResponse(BaseModel):
    token_ids: list[int]
    probs: list[str]


class TokenizeRequest(BaseModel):
    text: str


class TokenizeResponse(BaseModel):
    ids: list[int]


class DetokenizeRequest(BaseModel):
    ids: list[int]


class DetokenizeResponse(BaseModel):
    text: str


class HealthResponse(BaseModel):
    model: str
    determinism_mode: str


def create_app(backend: ModelBackend) -> FastAPI:
    app = FastAPI(title="shimer distribution server", docs_url=None, redoc_url=None)

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(
            model=backend.model_name,
            determinism_mode=backend.config.determinism_mode,
        )

    @app.post("/v1/distribution", response_model=DistributionResponse)
    def distribution(request: DistributionRequest) -> DistributionResponse:
        if request.model is not None and request.model != backend.model_name:
            raise HTTPException(
                status_code=404,
                detail=f"model {request.model!r} is not served here ({backend.model_name!r})",
            )
        try:
            token_ids, probs = backend.distribution(request.context_ids, request.top_k)
        except ContextTooLong as exc:
            raise HTTPException(status_code=413, detail=str(exc)) from exc
        return DistributionResponse(token_ids=token_ids, probs=probs)

    @app.post("/v1/tokenize", response_model=TokenizeResponse)
    def tokenize(request: TokenizeRequest) -> TokenizeResponse:
        return TokenizeResponse(ids=backend.tokenize(request.text))

    @app.post("/v1/detokenize", response_model=DetokenizeResponse)
    def detokenize(request: DetokenizeRequest) -> DetokenizeResponse:
        return DetokenizeResponse(text=backend.detokenize(request.ids))

    return app


__all__ = ["create_app"]
