"""Entry-point generation: turns segments plus the liveness report into the
dispatcher table of a compiled coroutine.

Entry bodies stay structured (the runtime interprets them); every yield/call
exit carries its store set and resume target, and terminal exits write the
result and pop the frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .cfg import ALL_RULES, LivenessReport, Segment, analyze, split_segments
from .frontend import (
    Block,
    CallE,
    CoroutineDef,
    DeclS,
    MiniError,
    MiniProgram,
    YieldE,
    normalize,
    print_block,
)


@dataclass(eq=False)
class EntryPoint:
    pc: int
    kind: str  # method-entry | after-yield | after-call
    loads: tuple
    body: Block
    stores: dict  # id(exit stmt) -> tuple of variable names
    resume_pc: dict  # id(exit stmt) -> pc
    unwind_handler: bool
    run: Optional[Callable] = None  # installed by the runtime compiler


@dataclass(eq=False)
class CompiledCoroutine:
    name: str
    params: tuple
    slot_index: dict
    slot_count: int
    dispatch: dict  # pc -> EntryPoint
    defn: CoroutineDef
    program: "CompiledProgram" = None

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(eq=False)
class CompiledProgram:
    coroutines: dict  # name -> CompiledCoroutine
    source: MiniProgram  # normalized

    def __getitem__(self, name: str) -> CompiledCoroutine:
        return self.coroutines[name]


def generate_entry_points(
    segments: list, report: LivenessReport, coroutine: CoroutineDef
) -> CompiledCoroutine:
    """One entry point per segment: prologue loads, structured body, and
    per-exit store sets; the dispatcher is the dense pc table."""
    slot_names: list = [n for n, _ in coroutine.params]
    seen = set(slot_names)

    def collect(b: Block):
        from .frontend import TryS

        for s in b.stmts:
            if isinstance(s, DeclS) and s.name not in seen:
                seen.add(s.name)
                slot_names.append(s.name)
            if isinstance(s, TryS) and s.var not in seen:
                seen.add(s.var)
                slot_names.append(s.var)
            for sub in _sub_blocks(s):
                collect(sub)

    collect(coroutine.body)
    slot_index = {n: i for i, n in enumerate(slot_names)}

    dispatch: dict = {}
    for seg in segments:
        stores: dict = {}
        resume_pc: dict = {}
        for (pc, nid), names in report.stores.items():
            if pc != seg.pc:
                continue
            node = seg.graph.nodes[nid]
            stores[id(node.stmt)] = tuple(sorted(names))
            resume_pc[id(node.stmt)] = report.exit_resume[(pc, nid)]
        ep = EntryPoint(
            pc=seg.pc,
            kind=seg.entry_kind,
            loads=tuple(sorted(report.loads[seg.pc])),
            body=seg.body,
            stores=stores,
            resume_pc=resume_pc,
            unwind_handler=seg.entry_kind == "after-call",
        )
        dispatch[seg.pc] = ep

    return CompiledCoroutine(
        coroutine.name,
        tuple(n for n, _ in coroutine.params),
        slot_index,
        len(slot_names),
        dispatch,
        coroutine,
    )


def _sub_blocks(s) -> list:
    from .frontend import BlockS, IfS, TryS, WhileS

    if isinstance(s, WhileS):
        return [s.body]
    if isinstance(s, IfS):
        return [s.then, s.els]
    if isinstance(s, TryS):
        return [s.body, s.handler]
    if isinstance(s, BlockS):
        return [s.block]
    return []


def compile_program(
    program: MiniProgram, rules: frozenset = ALL_RULES, pre_normalized: bool = False
) -> CompiledProgram:
    """Normalize, split, analyze, and generate every coroutine, then install
    the executable closures."""
    from .runtime import install_closures

    norm = program if pre_normalized else normalize(program)
    compiled: dict = {}
    for name, c in norm.coroutines.items():
        segments, pc_of = split_segments(c)
        report = analyze(segments, pc_of, rules)
        compiled[name] = generate_entry_points(segments, report, c)
    prog = CompiledProgram(compiled, norm)
    for cc in compiled.values():
        cc.program = prog
        install_closures(cc)
    return prog


def dump_entries(cc: CompiledCoroutine) -> str:
    parts = []
    for pc in sorted(cc.dispatch):
        ep = cc.dispatch[pc]
        parts.append(f"entry {pc} ({ep.kind}):")
        parts.append(f"  loads: {{{', '.join(ep.loads)}}}")
        if ep.unwind_handler:
            parts.append("  unwinding handler: present")
        for sid, names in sorted(ep.stores.items(), key=lambda kv: kv[1]):
            parts.append(
                f"  exit -> pc {ep.resume_pc[sid]} stores {{{', '.join(names)}}}"
            )
        parts.append(print_block(ep.body, 1))
    return "\n".join(parts)
