"""Operations behind every endpoint.  Pure functions of validated request models."""

from __future__ import annotations

import numpy as np

from .. import sdpcore
from ..gns import reconstruct
from ..moments import MomentSequence
from ..ncpoly import MatrixTuple, eval_poly, format_poly, infer_g, parse_poly
from ..relax import (RelaxConfig, archimedean_residual, membership, quad_module_membership,
                     separate)
from ..scenarios import ScenarioConfig, run_scenario
from . import schemas as S


class UsageError(ValueError):
    """Bad input: maps to HTTP 400 and CLI exit 2."""


class NumericalFailure(RuntimeError):
    """The numerics broke down: maps to HTTP 500 and CLI exit 3."""


def _point(pm: S.PointModel) -> MatrixTuple:
    try:
        return MatrixTuple.from_json(pm.model_dump())
    except ValueError as e:
        raise UsageError(str(e)) from e


def _poly(text: str, g: int):
    try:
        return parse_poly(text, g)
    except ValueError as e:
        raise UsageError(str(e)) from e


def _guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (UsageError, NumericalFailure):
        raise
    except (FloatingPointError, np.linalg.LinAlgError, RuntimeError) as e:
        raise NumericalFailure(str(e)) from e
    except KeyError as e:
        raise UsageError(e.args[0] if e.args else str(e)) from e
    except ValueError as e:
        raise UsageError(str(e)) from e


def _relax_config(req: S.MemberRequest) -> RelaxConfig:
    solver = sdpcore.SolverConfig()
    if req.tol is not None:
        solver.eps_feas = req.tol
    return RelaxConfig(arch_constant=req.arch_constant, box_radius=req.box, solver=solver)


def _member(req: S.MemberRequest):
    X = _point(req.point)
    p = _poly(req.poly, X.g)
    return X, p, _guard(membership, p, X, req.level, _relax_config(req))


def member(req: S.MemberRequest) -> S.MemberResponse:
    _, _, res = _member(req)
    v = res.verdict
    cert = None
    if v.certificate is not None:
        c = v.certificate
        cert = S.CertificateModel(multipliers=[M.tolist() for M in c.multipliers],
                                  lam_plus=c.lam_plus.tolist(), lam_minus=c.lam_minus.tolist(),
                                  gap=c.gap,
                                  verified=sdpcore.verify_certificate(c, res.problem, 1e-6))
    return S.MemberResponse(
        status=v.status.value, margin=v.margin, level=req.level, n=res.relaxation.n,
        box_radius=res.problem.box_radius, iterations=v.iterations, certificate=cert,
        witness=res.witness.to_json() if (req.include_witness and res.witness) else None,
        diagnostics=v.diagnostics)


def separate_point(req: S.MemberRequest) -> S.SeparateResponse:
    X, p, res = _member(req)
    if res.status is not sdpcore.Status.INFEASIBLE:
        raise UsageError(f"point is not separated: verdict {res.status.value}")
    fun = _guard(separate, p, X, req.level, _relax_config(req), res)
    return S.SeparateResponse(c0=fun.c0, C=[c.tolist() for c in fun.C],
                              provenance=fun.provenance, level=fun.level,
                              value_at_point=fun(X))


def gns(req: S.GnsRequest) -> S.GnsResponse:
    Y = _guard(MomentSequence.from_json, req.moments)
    p = _poly(req.poly, Y.g) if req.poly else None
    return S.GnsResponse(**_guard(reconstruct, Y, req.degree, req.rank_tol, p).to_json())


def soscheck(req: S.SosCheckRequest) -> S.SosCheckResponse:
    g = max(infer_g(req.poly), infer_g(req.target))
    q, p = _poly(req.target, g), _poly(req.poly, g)
    out = _guard(quad_module_membership, q, p, req.alpha, req.beta, req.box)
    if not out:
        return S.SosCheckResponse(found=False, reason=out.reason)
    return S.SosCheckResponse(found=True, certificate=out.to_json())


def arch_verify(req: S.ArchVerifyRequest) -> S.ArchVerifyResponse:
    g = max(infer_g(t) for t in [req.poly, *req.sos, *req.loc])
    p = _poly(req.poly, g)
    res = archimedean_residual(req.k_squared, p, [_poly(t, g) for t in req.sos],
                               [_poly(t, g) for t in req.loc])
    if res is None:
        raise UsageError("the certificate terms are not scalar")
    return S.ArchVerifyResponse(valid=res.is_zero(tol=0.0), residual_terms=len(res.support()))


def evaluate(req: S.EvalRequest) -> S.EvalResponse:
    X = _point(req.point)
    p = _poly(req.poly, X.g)
    val = _guard(eval_poly, p, X)
    lam = float(np.linalg.eigvalsh(0.5 * (val + val.T))[0])
    return S.EvalResponse(canonical=format_poly(p), value=val.tolist(), min_eig=lam,
                          psd=lam >= -1e-9)


def scenario(scenario_id: str, req: S.ScenarioRequest) -> dict:
    cfg = ScenarioConfig(seed=req.seed, grid=req.grid, samples=req.samples,
                         per_side=req.per_side)
    return _guard(run_scenario, scenario_id, cfg).to_json(timing=req.timing)
