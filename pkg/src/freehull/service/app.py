"""HTTP front end.  Run with ``freehull serve`` or ``uvicorn freehull.service.app:app``."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from . import handlers as H
from . import schemas as S

app = FastAPI(title="freehull", version=__version__,
              description="Moment relaxations and hull membership for free semialgebraic sets.")


@app.exception_handler(H.UsageError)
async def _usage(_: Request, exc: H.UsageError):
    return JSONResponse(status_code=400, content={"kind": "usage", "detail": str(exc)})


@app.exception_handler(H.NumericalFailure)
async def _numerical(_: Request, exc: H.NumericalFailure):
    return JSONResponse(status_code=500, content={"kind": "numerical", "detail": str(exc)})


_errors = {400: {"model": S.ErrorResponse}, 500: {"model": S.ErrorResponse}}


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


# plain ``def`` routes: the solves are CPU bound and run in the threadpool
@app.post("/member", response_model=S.MemberResponse, responses=_errors)
def member(req: S.MemberRequest):
    return H.member(req)


@app.post("/separate", response_model=S.SeparateResponse, responses=_errors)
def separate(req: S.MemberRequest):
    return H.separate_point(req)


@app.post("/gns", response_model=S.GnsResponse, responses=_errors)
def gns(req: S.GnsRequest):
    return H.gns(req)


@app.post("/soscheck", response_model=S.SosCheckResponse, responses=_errors)
def soscheck(req: S.SosCheckRequest):
    return H.soscheck(req)


@app.post("/arch-verify", response_model=S.ArchVerifyResponse, responses=_errors)
def arch_verify(req: S.ArchVerifyRequest):
    return H.arch_verify(req)


@app.post("/eval", response_model=S.EvalResponse, responses=_errors)
def evaluate(req: S.EvalRequest):
    return H.evaluate(req)


@app.post("/scenario/{scenario_id}", responses=_errors)
def scenario(scenario_id: str, req: S.ScenarioRequest | None = None):
    return H.scenario(scenario_id, req or S.ScenarioRequest())
