"""FastAPI application wrapping the service handlers."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..ensemble import EnsembleError, EvolutionInstabilityError
from ..integrators import IntegrationError
from ..lattice import LatticeError
from ..matching import MatchingError
from ..series_sums import SeriesError
from . import handlers
from . import schemas as sc

_DOMAIN_ERRORS = (LatticeError, SeriesError, MatchingError, EnsembleError,
                  IntegrationError, ValueError)


def create_app() -> FastAPI:
    app = FastAPI(title="ketlab", version=__version__,
                  description="Stochastic-to-deterministic lattice evolution "
                              "laboratory: moment sums, coefficient matching, "
                              "integrators, and ensemble averaging.")

    @app.exception_handler(EvolutionInstabilityError)
    async def _instability(request: Request, exc: EvolutionInstabilityError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    for error_type in _DOMAIN_ERRORS:
        @app.exception_handler(error_type)
        async def _domain(request: Request, exc: Exception):
            return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/v1/health", response_model=sc.HealthResponse)
    def health():
        return handlers.handle_health()

    @app.post("/v1/sums", response_model=sc.SumsResponse)
    def sums(req: sc.SumsRequest):
        return handlers.handle_sums(req)

    @app.post("/v1/moments", response_model=sc.MomentsResponse)
    def moments(req: sc.MomentsRequest):
        return handlers.handle_moments(req)

    @app.post("/v1/match", response_model=sc.MatchResponse)
    def match(req: sc.MatchRequest):
        return handlers.handle_match(req)

    @app.post("/v1/evolve", response_model=sc.EvolveResponse)
    def evolve(req: sc.EvolveRequest):
        return handlers.handle_evolve(req)

    @app.post("/v1/dispersion", response_model=sc.DispersionResponse)
    def dispersion(req: sc.DispersionRequest):
        return handlers.handle_dispersion(req)

    @app.post("/v1/remainder-study", response_model=sc.RemainderStudyResponse)
    def remainder(req: sc.RemainderStudyRequest):
        return handlers.handle_remainder_study(req)

    @app.post("/v1/compare", response_model=sc.CompareResponse)
    def compare(req: sc.CompareRequest):
        return handlers.handle_compare(req)

    @app.post("/v1/ensemble", response_model=sc.EnsembleResponse)
    def ensemble(req: sc.EnsembleRequest):
        return handlers.handle_ensemble(req)

    return app
