"""HTTP service exposing the workbench: typechecking, evaluation, the CPS
transform, both differential loops, and the MiniLang pipeline.

The CLI is a thin client over these endpoints; they are also usable as a
long-running playground service via uvicorn.
"""

from __future__ import annotations

from typing import Literal, Optional

from fastapi import FastAPI
from pydantic import BaseModel, Field

from . import __version__
from .ast import Lit, Unit
from .cps import TransformError, transform_free, translate_type
from .difftest import difftest_calculus, difftest_mini
from .evaluator import (
    Configuration,
    Finished,
    OutOfFuel,
    Stuck,
    SuspendedAtTop,
    evaluate,
)
from .syntax import SyntaxError_, parse_term, print_term
from .typecheck import EMPTY_CTX
from .target import (
    TFinished,
    TOutOfFuel,
    TStuck,
    TargetError,
    eval_target,
    parse_target,
    print_target,
    typecheck_target,
)
from .typecheck import NonBottomYield, TypeError_, check_user_program


class TypecheckRequest(BaseModel):
    source: str
    subtyping: bool = False


class TypecheckResponse(BaseModel):
    ok: bool
    type: Optional[str] = None
    error: Optional[str] = None


class EvalRequest(BaseModel):
    source: str
    fuel: int = 10_000
    trace: bool = False
    subtyping: bool = False


class EvalResponse(BaseModel):
    ok: bool
    status: Literal["finished", "suspended", "stuck", "out-of-fuel", "error"]
    value: Optional[str] = None
    steps: int = 0
    trace: list[str] = Field(default_factory=list)
    error: Optional[str] = None


class TransformRequest(BaseModel):
    source: str


class TransformResponse(BaseModel):
    ok: bool
    target: Optional[str] = None
    target_type: Optional[str] = None
    error: Optional[str] = None


class EvalTargetRequest(BaseModel):
    source: str
    fuel: int = 400_000


class DifftestRequest(BaseModel):
    seed: int = 42
    count: int = 200
    fuel: int = 10_000


class DiffFailureModel(BaseModel):
    program: str
    source_outcome: str
    target_outcome: str
    divergence: str


class DiffReportModel(BaseModel):
    ok: bool
    kind: str
    seed: int
    count: int
    discarded: int
    failures: list[DiffFailureModel]


class MiniCompileRequest(BaseModel):
    source: str
    coroutine: str
    dump: Literal["cfg", "segments", "entries"] = "entries"
    no_opt: bool = False


class MiniCompileResponse(BaseModel):
    ok: bool
    dump: Optional[str] = None
    error: Optional[str] = None


class MiniRunRequest(BaseModel):
    source: str
    coroutine: str
    args: str = ""  # comma-separated ints and [..] lists
    snapshot_at: Optional[int] = None
    no_opt: bool = False


class MiniRunResponse(BaseModel):
    ok: bool
    yields: list[str] = Field(default_factory=list)
    result: Optional[str] = None
    exception: Optional[str] = None
    snapshot_yields: Optional[list[str]] = None
    snapshot_result: Optional[str] = None
    snapshot_exception: Optional[str] = None
    error: Optional[str] = None


class MiniDifftestRequest(BaseModel):
    seed: int = 7
    count: int = 300


app = FastAPI(title="corolab", version=__version__)


@app.get("/health")
def health() -> dict:
    return {"ok": True, "version": __version__}


@app.post("/typecheck", response_model=TypecheckResponse)
def typecheck(req: TypecheckRequest) -> TypecheckResponse:
    mode = "subtyping" if req.subtyping else "base"
    try:
        ty = check_user_program(parse_term(req.source), mode)
    except (SyntaxError_, TypeError_, NonBottomYield) as e:
        return TypecheckResponse(ok=False, error=str(e))
    return TypecheckResponse(ok=True, type=str(ty))


@app.post("/eval", response_model=EvalResponse)
def eval_endpoint(req: EvalRequest) -> EvalResponse:
    mode = "subtyping" if req.subtyping else "base"
    try:
        t = parse_term(req.source)
        check_user_program(t, mode)
    except (SyntaxError_, TypeError_, NonBottomYield) as e:
        return EvalResponse(ok=False, status="error", error=str(e))
    trace: list[str] = []
    on_step = (lambda rule, term: trace.append(f"{rule} |- {print_term(term)}")) if req.trace else None
    res = evaluate(Configuration(t), req.fuel, on_step)
    if isinstance(res.outcome, Finished):
        return EvalResponse(
            ok=True, status="finished", value=print_term(res.outcome.value),
            steps=res.steps, trace=trace,
        )
    if isinstance(res.outcome, SuspendedAtTop):
        return EvalResponse(
            ok=False, status="suspended", value=print_term(res.outcome.value),
            steps=res.steps, trace=trace,
        )
    if isinstance(res.outcome, Stuck):
        return EvalResponse(
            ok=False, status="stuck", error=res.outcome.reason, steps=res.steps, trace=trace
        )
    return EvalResponse(ok=False, status="out-of-fuel", steps=res.steps, trace=trace)


@app.post("/transform", response_model=TransformResponse)
def transform_endpoint(req: TransformRequest) -> TransformResponse:
    try:
        t = parse_term(req.source)
        check_user_program(t)
        tt = transform_free(EMPTY_CTX, t)
        tty = typecheck_target(tt)
    except (SyntaxError_, TypeError_, NonBottomYield, TransformError, TargetError) as e:
        return TransformResponse(ok=False, error=str(e))
    return TransformResponse(ok=True, target=print_target(tt), target_type=str(tty))


@app.post("/eval-target", response_model=EvalResponse)
def eval_target_endpoint(req: EvalTargetRequest) -> EvalResponse:
    try:
        t = parse_target(req.source)
        typecheck_target(t)
    except TargetError as e:
        return EvalResponse(ok=False, status="error", error=str(e))
    res = eval_target(t, req.fuel)
    if isinstance(res, TFinished):
        return EvalResponse(ok=True, status="finished", value=print_target(res.value), steps=res.steps)
    if isinstance(res, TStuck):
        return EvalResponse(ok=False, status="stuck", error=res.reason)
    return EvalResponse(ok=False, status="out-of-fuel")


@app.post("/difftest", response_model=DiffReportModel)
def difftest_endpoint(req: DifftestRequest) -> DiffReportModel:
    r = difftest_calculus(req.seed, req.count, req.fuel)
    return DiffReportModel(ok=r.ok, **r.to_dict())


@app.post("/mini/compile", response_model=MiniCompileResponse)
def mini_compile(req: MiniCompileRequest) -> MiniCompileResponse:
    from .mini.cfg import ALL_RULES, analyze, build_cfg, dump_cfg, dump_segments, split_segments
    from .mini.codegen import dump_entries, generate_entry_points
    from .mini.frontend import MiniError, normalize, parse_mini

    try:
        prog = parse_mini(req.source)
        norm = normalize(prog)
        if req.coroutine not in norm.coroutines:
            return MiniCompileResponse(ok=False, error=f"unknown coroutine {req.coroutine!r}")
        c = norm.coroutines[req.coroutine]
        if req.dump == "cfg":
            return MiniCompileResponse(ok=True, dump=dump_cfg(build_cfg(c)))
        segments, pc_of = split_segments(c)
        if req.dump == "segments":
            return MiniCompileResponse(ok=True, dump=dump_segments(segments))
        rules = frozenset() if req.no_opt else ALL_RULES
        report = analyze(segments, pc_of, rules)
        cc = generate_entry_points(segments, report, c)
        return MiniCompileResponse(ok=True, dump=dump_entries(cc))
    except MiniError as e:
        return MiniCompileResponse(ok=False, error=str(e))


@app.post("/mini/run", response_model=MiniRunResponse)
def mini_run(req: MiniRunRequest) -> MiniRunResponse:
    from .mini.cfg import ALL_RULES
    from .mini.codegen import compile_program
    from .mini.frontend import MiniError, parse_mini, show_value
    from .mini.runtime import collect_run

    try:
        prog = parse_mini(req.source)
        args = parse_args(req.args)
        rules = frozenset() if req.no_opt else ALL_RULES
        compiled = compile_program(prog, rules)
        if req.coroutine not in compiled.coroutines:
            return MiniRunResponse(ok=False, error=f"unknown coroutine {req.coroutine!r}")
        outcome, tail = collect_run(compiled, req.coroutine, args, snapshot_at=req.snapshot_at)
    except MiniError as e:
        return MiniRunResponse(ok=False, error=str(e))
    resp = MiniRunResponse(
        ok=True,
        yields=[show_value(v) for v in outcome.yields],
        result=show_value(outcome.result) if outcome.result is not None else None,
        exception=show_value(outcome.exception) if outcome.exception is not None else None,
    )
    if tail is not None:
        resp.snapshot_yields = [show_value(v) for v in tail.yields]
        resp.snapshot_result = show_value(tail.result) if tail.result is not None else None
        resp.snapshot_exception = (
            show_value(tail.exception) if tail.exception is not None else None
        )
    return resp


@app.post("/mini/difftest", response_model=DiffReportModel)
def mini_difftest_endpoint(req: MiniDifftestRequest) -> DiffReportModel:
    r = difftest_mini(req.seed, req.count)
    return DiffReportModel(ok=r.ok, **r.to_dict())


def parse_args(text: str) -> list:
    """Comma-separated argument values: ints, true/false, (), and nested
    [..] integer lists (lists of lists allowed)."""
    from .mini.frontend import MiniError, MiniList, UNIT_V

    out: list = []
    s = text.strip()
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(s) and s[pos] in " \t":
            pos += 1

    def value():
        nonlocal pos
        skip_ws()
        if pos >= len(s):
            raise MiniError("expected an argument value")
        c = s[pos]
        if c == "[":
            pos += 1
            items = []
            skip_ws()
            if pos < len(s) and s[pos] == "]":
                pos += 1
            else:
                while True:
                    items.append(value())
                    skip_ws()
                    if pos < len(s) and s[pos] == ",":
                        pos += 1
                        continue
                    if pos < len(s) and s[pos] == "]":
                        pos += 1
                        break
                    raise MiniError("malformed list argument")
            return MiniList(tuple(items))
        if s.startswith("()", pos):
            pos += 2
            return UNIT_V
        if s.startswith("true", pos):
            pos += 4
            return True
        if s.startswith("false", pos):
            pos += 5
            return False
        j = pos
        if s[j] == "-":
            j += 1
        while j < len(s) and s[j].isdigit():
            j += 1
        if j == pos or (j == pos + 1 and s[pos] == "-"):
            raise MiniError(f"cannot parse argument at {s[pos:]!r}")
        v = int(s[pos:j])
        pos = j
        return v

    if not s:
        return out
    while True:
        out.append(value())
        skip_ws()
        if pos < len(s) and s[pos] == ",":
            pos += 1
            continue
        break
    skip_ws()
    if pos != len(s):
        raise MiniError(f"trailing argument text: {s[pos:]!r}")
    return out
