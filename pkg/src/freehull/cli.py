"""``freehull`` command line.

Every subcommand builds a request model and hands it to the service handlers, either
in-process (default) or over HTTP with ``--server URL``.  Exit codes: 0 success or
feasible, 1 infeasible / not found / check failed, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from pydantic import BaseModel, ValidationError

from .service import handlers as H
from .service import schemas as S

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _Usage(Exception):
    pass


def _text_or_file(arg: str) -> str:
    p = Path(arg)
    if len(arg) < 4096 and p.is_file():
        return p.read_text().strip()
    return arg


def _json_arg(arg: str, what: str) -> dict:
    text = arg if arg.lstrip().startswith("{") else None
    if text is None:
        p = Path(arg)
        if not p.is_file():
            raise _Usage(f"{what} file not found: {arg}")
        text = p.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise _Usage(f"{what} is not valid JSON: {e}") from e


def _point(args) -> S.PointModel:
    pm = S.PointModel(**_json_arg(args.point, "point"))
    if args.n is not None and args.n != pm.n:
        raise _Usage(f"--n {args.n} does not match the point size {pm.n}")
    return pm


def _member_request(args) -> S.MemberRequest:
    return S.MemberRequest(poly=_text_or_file(args.poly), point=_point(args), level=args.level,
                           box=args.box, arch_constant=args.arch, tol=args.tol,
                           include_witness=bool(args.witness))


# ---------------------------------------------------------------------------
# transport

def _call(args, route: str, handler, req: BaseModel | None, *extra) -> dict:
    if args.server:
        import httpx
        url = args.server.rstrip("/") + route
        body = req.model_dump() if req is not None else {}
        try:
            r = httpx.post(url, json=body, timeout=None)
        except httpx.HTTPError as e:
            raise _Usage(f"cannot reach {url}: {e}") from e
        if r.status_code == 400 or r.status_code == 422:
            raise H.UsageError(r.json().get("detail", r.text))
        if r.status_code >= 500:
            raise H.NumericalFailure(r.json().get("detail", r.text))
        return r.json()
    out = handler(*extra, req) if extra else handler(req)
    return out.model_dump() if isinstance(out, BaseModel) else out


def _emit(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2)
    if args.json:
        Path(args.json).write_text(text + "\n")
    print(text)


# ---------------------------------------------------------------------------
# subcommands

def cmd_member(args) -> int:
    out = _call(args, "/member", H.member, _member_request(args))
    if args.witness and out.get("witness") is not None:
        Path(args.witness).write_text(json.dumps(out.pop("witness")))
        out["witness_file"] = args.witness
    _emit(args, out)
    return EXIT_OK if out["status"] == "StrictlyFeasible" else EXIT_NO


def cmd_separate(args) -> int:
    _emit(args, _call(args, "/separate", H.separate_point, _member_request(args)))
    return EXIT_OK


def cmd_gns(args) -> int:
    req = S.GnsRequest(moments=_json_arg(args.moments, "moments"), degree=args.degree,
                       rank_tol=args.tol or 1e-8,
                       poly=_text_or_file(args.poly) if args.poly else None)
    _emit(args, _call(args, "/gns", H.gns, req))
    return EXIT_OK


def cmd_soscheck(args) -> int:
    req = S.SosCheckRequest(target=_text_or_file(args.target), poly=_text_or_file(args.poly),
                            alpha=args.alpha, beta=args.beta, box=args.box or 100.0)
    out = _call(args, "/soscheck", H.soscheck, req)
    _emit(args, out)
    return EXIT_OK if out["found"] else EXIT_NO


def cmd_arch_verify(args) -> int:
    req = S.ArchVerifyRequest(poly=_text_or_file(args.poly), k_squared=args.k2,
                              sos=args.sos or [], loc=args.loc or [])
    out = _call(args, "/arch-verify", H.arch_verify, req)
    _emit(args, out)
    return EXIT_OK if out["valid"] else EXIT_NO


def cmd_eval(args) -> int:
    req = S.EvalRequest(poly=_text_or_file(args.poly), point=_point(args))
    _emit(args, _call(args, "/eval", H.evaluate, req))
    return EXIT_OK


def cmd_scenario(args) -> int:
    from .scenarios import SCENARIOS
    ids = list(SCENARIOS) if args.id == "all" else [args.id]
    req = S.ScenarioRequest(seed=args.seed, grid=args.grid, samples=args.samples,
                            per_side=args.per_side, timing=args.timing)
    reports = [_call(args, f"/scenario/{sid}", H.scenario, req, sid) for sid in ids]
    _emit(args, reports[0] if len(reports) == 1 else {"reports": reports})
    return EXIT_OK if all(r["pass"] for r in reports) else EXIT_NO


def cmd_serve(args) -> int:
    import uvicorn
    uvicorn.run("freehull.service.app:app", host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freehull", description=__doc__.splitlines()[0])
    ap.add_argument("--server", help="send requests to a running freehull service")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, point=True):
        p.add_argument("--poly", required=True, help="polynomial text or a file holding it")
        if point:
            p.add_argument("--point", required=True, help="point JSON file (or inline JSON)")
            p.add_argument("--n", type=int, help="expected matrix size of the point")
        p.add_argument("--json", help="also write the JSON report here")

    for name, fn, hlp in [("member", cmd_member, "relaxation membership"),
                          ("separate", cmd_separate, "separating functional")]:
        p = sub.add_parser(name, help=hlp)
        common(p)
        p.add_argument("--level", type=int, default=0)
        p.add_argument("--box", type=float, help="box radius for the free moments")
        p.add_argument("--arch", type=float, help="archimedean constant C (sets the box)")
        p.add_argument("--tol", type=float, help="strict-feasibility threshold")
        p.add_argument("--witness", help="write the witness moments here (member only)")
        p.set_defaults(fn=fn)

    p = sub.add_parser("gns", help="representation from flat moments")
    p.add_argument("--moments", required=True)
    p.add_argument("--degree", "--level", dest="degree", type=int, required=True)
    p.add_argument("--poly")
    p.add_argument("--tol", type=float, help="relative rank tolerance")
    p.add_argument("--json")
    p.set_defaults(fn=cmd_gns)

    p = sub.add_parser("soscheck", help="truncated quadratic module membership")
    common(p, point=False)
    p.add_argument("--target", required=True)
    p.add_argument("--alpha", type=int, required=True)
    p.add_argument("--beta", type=int, required=True)
    p.add_argument("--box", type=float)
    p.set_defaults(fn=cmd_soscheck)

    p = sub.add_parser("arch-verify", help="exact archimedean identity check")
    common(p, point=False)
    p.add_argument("--k2", type=float, required=True, help="K^2")
    p.add_argument("--sos", action="append", help="an s_j (repeatable)")
    p.add_argument("--loc", action="append", help="an f_j (repeatable)")
    p.set_defaults(fn=cmd_arch_verify)

    p = sub.add_parser("eval", help="evaluate a polynomial at a point")
    common(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("scenario", help="run a canned reproduction")
    p.add_argument("id", help="scenario id or 'all'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=20)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--per-side", type=int, default=30)
    p.add_argument("--timing", action="store_true")
    p.add_argument("--json")
    p.set_defaults(fn=cmd_scenario)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(fn=cmd_serve)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (_Usage, H.UsageError, ValidationError) as e:
        print(f"freehull: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except H.NumericalFailure as e:
        print(f"freehull: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
