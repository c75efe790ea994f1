"""Control-flow pipeline: CFG construction, yield/call-site splitting,
dominance, and the load/store elimination analyses.

Splitting reconstructs each segment as a structured statement tree sliced
from the resume point onward: the remainder of every enclosing block is kept
(orphaned loop ends become an explicit block exit) and each enclosing loop is
restarted fresh after the repaired block, so one iteration is effectively
unrolled. Enclosing try handlers are replicated around the remainder.
Analyses run on a per-segment graph built from that tree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .frontend import (
    AssignS,
    Block,
    BlockS,
    BoolE,
    CallE,
    CoroutineDef,
    DeclS,
    Expr,
    IfS,
    IntE,
    ListE,
    MiniError,
    NilE,
    RethrowPendingS,
    SelE,
    Stmt,
    TakeResultE,
    ThrowS,
    TryS,
    UnitE,
    VarE,
    WhileS,
    YieldE,
    is_normalized,
    print_expr,
    print_stmt,
)

CONTROL_KINDS = ("Y", "C", "T", "Ws", "We", "Is", "Ie", "Bs", "Be", "Es", "Ee")


@dataclass(eq=False)
class CfgNode:
    id: int
    kind: str  # stmt | Y | C | T | R | Ws | We | Is | Ie | Bs | Be | Es | Ee
    stmt: object  # payload: statement, condition expr, or result atom
    succ: list = field(default_factory=list)
    scope: frozenset = frozenset()
    reads: frozenset = frozenset()
    writes: frozenset = frozenset()
    declares: frozenset = frozenset()
    partner: Optional[int] = None  # matched structural node


@dataclass(eq=False)
class CfgGraph:
    nodes: dict  # id -> CfgNode
    entry: Optional[int]
    node_of: dict  # id(stmt) -> node id, for Y/C/T bookkeeping
    _dom: Optional[dict] = None

    def kind_census(self) -> dict:
        out: dict = {}
        for n in self.nodes.values():
            if n.kind in CONTROL_KINDS:
                out[n.kind] = out.get(n.kind, 0) + 1
        return out

    def preds(self) -> dict:
        out = {i: [] for i in self.nodes}
        for n in self.nodes.values():
            for s in n.succ:
                out[s].append(n.id)
        return out

    def reachable(self) -> set:
        if self.entry is None:
            return set()
        seen = {self.entry}
        work = [self.entry]
        while work:
            n = work.pop()
            for s in self.nodes[n].succ:
                if s not in seen:
                    seen.add(s)
                    work.append(s)
        return seen


def _expr_reads(e: Expr) -> frozenset:
    if isinstance(e, VarE):
        return frozenset((e.name,))
    if isinstance(e, (IntE, BoolE, UnitE, NilE, TakeResultE)):
        return frozenset()
    if isinstance(e, SelE):
        return _expr_reads(e.target)
    if isinstance(e, YieldE):
        return _expr_reads(e.arg)
    if isinstance(e, CallE):
        out = frozenset()
        for a in e.args:
            out |= _expr_reads(a)
        return out
    if isinstance(e, ListE):
        out = frozenset()
        for a in e.items:
            out |= _expr_reads(a)
        return out
    # normalized binary operators have atomic operands
    out = frozenset()
    for sub in (getattr(e, "lhs", None), getattr(e, "rhs", None)):
        if sub is not None:
            out |= _expr_reads(sub)
    return out


class _Builder:
    """Shared by the whole-coroutine graph and the per-segment graphs.

    In split mode, yield/call nodes are exits (no successors); otherwise they
    chain like plain statements.
    """

    def __init__(self, split_mode: bool):
        self.split_mode = split_mode
        self.nodes: dict = {}
        self.node_of: dict = {}
        self.next_id = 0
        self.handler_stack: list = []  # node ids of enclosing handler heads

    def new(self, kind: str, stmt, scope: set, reads=frozenset(), writes=frozenset(), declares=frozenset()) -> CfgNode:
        n = CfgNode(self.next_id, kind, stmt, [], frozenset(scope), reads, writes, declares)
        self.nodes[n.id] = n
        self.next_id += 1
        return n

    def connect(self, tails: list, head: int) -> None:
        for t in tails:
            self.nodes[t].succ.append(head)

    def walk_block(self, block: Block, scope: set, with_result: bool):
        """Returns (head id or None, open tail ids)."""
        head: Optional[int] = None
        tails: list = []
        started = False
        inner = set(scope)
        for s in block.stmts:
            h, t = self.walk_stmt(s, inner)
            if h is None:
                continue
            if not started:
                head = h
                started = True
            else:
                self.connect(tails, h)
            tails = t
            if not t and self._always_exits(s):
                # anything after an unconditional exit in this block is dead
                break
        if with_result:
            reads = _expr_reads(block.result) if block.result is not None else frozenset()
            r = self.new("R", block.result, inner, reads)
            if not started:
                head = r.id
            else:
                self.connect(tails, r.id)
            tails = []
        return head, tails

    def _always_exits(self, s: Stmt) -> bool:
        if isinstance(s, ThrowS):
            return True
        if self.split_mode and isinstance(s, DeclS) and isinstance(s.init, (YieldE, CallE)):
            return True
        return False

    def walk_stmt(self, s: Stmt, scope: set):
        if isinstance(s, DeclS):
            if isinstance(s.init, YieldE):
                n = self.new("Y", s, scope, _expr_reads(s.init), frozenset((s.name,)), frozenset((s.name,)))
            elif isinstance(s.init, CallE):
                n = self.new("C", s, scope, _expr_reads(s.init), frozenset((s.name,)), frozenset((s.name,)))
            else:
                reads = _expr_reads(s.init) if s.init is not None else frozenset()
                n = self.new("stmt", s, scope, reads, frozenset((s.name,)), frozenset((s.name,)))
            self.node_of[id(s)] = n.id
            scope.add(s.name)
            if isinstance(s.init, (YieldE, CallE)) and self.split_mode:
                return n.id, []
            return n.id, [n.id]
        if isinstance(s, AssignS):
            n = self.new("stmt", s, scope, _expr_reads(s.expr), frozenset((s.name,)))
            return n.id, [n.id]
        if isinstance(s, RethrowPendingS):
            n = self.new("stmt", s, scope)
            self.node_of[id(s)] = n.id
            if self.handler_stack:
                n.succ.append(self.handler_stack[-1])
            return n.id, [n.id]
        if isinstance(s, ThrowS):
            n = self.new("T", s, scope, _expr_reads(s.expr))
            self.node_of[id(s)] = n.id
            if self.handler_stack:
                n.succ.append(self.handler_stack[-1])
            return n.id, []
        if isinstance(s, WhileS):
            ws = self.new("Ws", s.cond, scope, _expr_reads(s.cond))
            bh, bt = self.walk_block(s.body, set(scope), with_result=False)
            we = self.new("We", None, scope)
            ws.partner, we.partner = we.id, ws.id
            ws.succ.append(bh if bh is not None else we.id)
            if bh is not None:
                ws.succ.append(we.id)
            self.connect(bt, we.id)
            we.succ.append(ws.id)
            return ws.id, [we.id]
        if isinstance(s, IfS):
            isn = self.new("Is", s.cond, scope, _expr_reads(s.cond))
            th, tt = self.walk_block(s.then, set(scope), with_result=False)
            eh, et = self.walk_block(s.els, set(scope), with_result=False)
            ie = self.new("Ie", None, scope)
            isn.partner, ie.partner = ie.id, isn.id
            isn.succ.append(th if th is not None else ie.id)
            isn.succ.append(eh if eh is not None else ie.id)
            self.connect(tt, ie.id)
            self.connect(et, ie.id)
            return isn.id, [ie.id]
        if isinstance(s, TryS):
            es = self.new("Es", s, scope)
            ee = self.new("Ee", None, scope)
            es.partner, ee.partner = ee.id, es.id
            hscope = set(scope)
            hscope.add(s.var)
            hh, ht = self.walk_block(s.handler, hscope, with_result=False)
            handler_head = hh if hh is not None else ee.id
            self.connect(ht, ee.id)
            self.handler_stack.append(handler_head)
            bh, bt = self.walk_block(s.body, set(scope), with_result=False)
            self.handler_stack.pop()
            es.succ.append(bh if bh is not None else ee.id)
            self.connect(bt, ee.id)
            return es.id, [ee.id]
        if isinstance(s, BlockS):
            bs = self.new("Bs", None, scope)
            be = self.new("Be", None, scope)
            bs.partner, be.partner = be.id, bs.id
            h, t = self.walk_block(s.block, set(scope), with_result=False)
            bs.succ.append(h if h is not None else be.id)
            self.connect(t, be.id)
            return bs.id, [be.id]
        raise MiniError(f"cannot build CFG for {type(s).__name__}")


def build_cfg(coroutine: CoroutineDef, split_mode: bool = False, entry_scope=None) -> CfgGraph:
    """One node per canonical statement; structured pairs for loops, branches,
    blocks, and try regions; a single return node carrying the result atom."""
    if not is_normalized(_single(coroutine)):
        raise MiniError(f"coroutine {coroutine.name!r} is not in canonical form")
    b = _Builder(split_mode)
    scope = set(entry_scope) if entry_scope is not None else {n for n, _ in coroutine.params}
    head, _tails = b.walk_block(coroutine.body, scope, with_result=True)
    return CfgGraph(b.nodes, head, b.node_of)


def _single(c: CoroutineDef):
    from .frontend import MiniProgram

    return MiniProgram({c.name: c})


# ---------------------------------------------------------------------------
# Splitting


@dataclass(eq=False)
class Segment:
    pc: int
    entry_kind: str  # method-entry | after-yield | after-call
    origin: object  # the Y/C statement this segment resumes after (None for entry)
    body: Block
    graph: CfgGraph
    entry_scope: frozenset
    coroutine: CoroutineDef


def _find_path(body: Block, target: Stmt):
    """Path from the coroutine body to the block holding `target`:
    a list of (block, index, role) frames, innermost last."""

    def search(block: Block, frames: list):
        for i, s in enumerate(block.stmts):
            if s is target:
                return frames + [(block, i, "here")]
            if isinstance(s, WhileS):
                r = search(s.body, frames + [(block, i, "while-body")])
                if r:
                    return r
            elif isinstance(s, IfS):
                r = search(s.then, frames + [(block, i, "if-then")])
                if r:
                    return r
                r = search(s.els, frames + [(block, i, "if-else")])
                if r:
                    return r
            elif isinstance(s, TryS):
                r = search(s.body, frames + [(block, i, "try-body")])
                if r:
                    return r
                r = search(s.handler, frames + [(block, i, "try-handler")])
                if r:
                    return r
            elif isinstance(s, BlockS):
                r = search(s.block, frames + [(block, i, "block")])
                if r:
                    return r
        return None

    found = search(body, [])
    if not found:
        raise MiniError("resume point not found in coroutine body")
    return found


def _emit_stmts(stmts: list):
    """Copy a statement list, truncating after an unconditional exit."""
    out: list = []
    for s in stmts:
        out.append(_emit_stmt(s))
        if isinstance(s, ThrowS):
            return out, True
        if isinstance(s, DeclS) and isinstance(s.init, (YieldE, CallE)):
            return out, True
    return out, False


def _emit_stmt(s: Stmt) -> Stmt:
    if isinstance(s, WhileS):
        return WhileS(s.cond, _emit_block(s.body))
    if isinstance(s, IfS):
        return IfS(s.cond, _emit_block(s.then), _emit_block(s.els))
    if isinstance(s, TryS):
        return TryS(_emit_block(s.body), s.var, _emit_block(s.handler))
    if isinstance(s, BlockS):
        return BlockS(_emit_block(s.block))
    return s  # plain statements keep their identity (resume bookkeeping)


def _emit_block(b: Block) -> Block:
    stmts, truncated = _emit_stmts(b.stmts)
    return Block(stmts, None if truncated else b.result)


def _reconstruct(coroutine: CoroutineDef, resume_at: Stmt, resume_stmts: list) -> Block:
    frames = _find_path(coroutine.body, resume_at)
    blk, idx, _ = frames[-1]
    remainder, truncated = _emit_stmts(blk.stmts[idx + 1 :])
    cur_stmts = resume_stmts + remainder
    cur_result = None if truncated else blk.result

    for oblk, oidx, role in reversed(frames[:-1]):
        construct = oblk.stmts[oidx]
        inner = Block(cur_stmts, cur_result)
        if role == "while-body":
            assert isinstance(construct, WhileS)
            wrapped: list = [BlockS(inner), WhileS(construct.cond, _emit_block(construct.body))]
        elif role in ("if-then", "if-else", "block", "try-handler"):
            wrapped = [BlockS(inner)]
        elif role == "try-body":
            assert isinstance(construct, TryS)
            wrapped = [TryS(inner, construct.var, _emit_block(construct.handler))]
        else:
            raise MiniError(f"unexpected path role {role}")
        remainder, truncated = _emit_stmts(oblk.stmts[oidx + 1 :])
        cur_stmts = wrapped + remainder
        cur_result = None if truncated else oblk.result

    return Block(cur_stmts, cur_result)


def split_segments(coroutine: CoroutineDef) -> list:
    """Worklist from the method entry; every yield and call node spawns one
    resumption segment, numbered in discovery order."""
    unsplit = build_cfg(coroutine)
    params = frozenset(n for n, _ in coroutine.params)

    # scope before each Y/C statement in the original graph
    orig_scope = {nid: n.scope for nid, n in unsplit.nodes.items()}

    pending: list = [("method-entry", None)]
    pc_of: dict = {}  # id(stmt) -> pc
    segments: list = []
    seen: set = set()

    while pending:
        kind, origin = pending.pop(0)
        pc = len(segments)
        if origin is not None:
            pc_of[id(origin)] = pc
        if kind == "method-entry":
            body = _emit_block(coroutine.body)
            entry_scope = params
        elif kind == "after-yield":
            binding = DeclS(origin.name, UnitE())
            body = _reconstruct(coroutine, origin, [binding])
            entry_scope = orig_scope[unsplit.node_of[id(origin)]]
        else:  # after-call
            resume = [RethrowPendingS(), DeclS(origin.name, TakeResultE())]
            body = _reconstruct(coroutine, origin, resume)
            entry_scope = orig_scope[unsplit.node_of[id(origin)]]
        seg_def = CoroutineDef(coroutine.name, list(coroutine.params), coroutine.ret, coroutine.yld, body)
        graph = build_cfg(seg_def, split_mode=True, entry_scope=set(entry_scope))
        seg = Segment(pc, kind, origin, body, graph, frozenset(entry_scope), coroutine)
        segments.append(seg)

        reachable = graph.reachable()
        exits = [
            graph.nodes[nid]
            for nid in sorted(reachable)
            if graph.nodes[nid].kind in ("Y", "C")
        ]
        for n in exits:
            if id(n.stmt) not in seen:
                seen.add(id(n.stmt))
                pending.append(("after-yield" if n.kind == "Y" else "after-call", n.stmt))

    return segments, pc_of


# ---------------------------------------------------------------------------
# Dominance


def _dominators(g: CfgGraph) -> dict:
    """Standard iterative dominator sets over the reachable subgraph."""
    if g._dom is not None:
        return g._dom
    reach = g.reachable()
    preds = g.preds()
    dom = {n: set(reach) for n in reach}
    if g.entry is not None:
        dom[g.entry] = {g.entry}
    changed = True
    while changed:
        changed = False
        for n in sorted(reach):
            if n == g.entry:
                continue
            ps = [p for p in preds[n] if p in reach]
            new = set(reach)
            for p in ps:
                new &= dom[p]
            new.add(n)
            if new != dom[n]:
                dom[n] = new
                changed = True
    g._dom = dom
    return dom


def dominates(g: CfgGraph, d: int, n: int) -> bool:
    """d dominates n: every path from the entry to n goes through d."""
    dom = _dominators(g)
    if n not in dom:
        raise MiniError(f"node {n} unreachable")
    return d in dom[n]


# ---------------------------------------------------------------------------
# Liveness analyses


ALL_RULES = frozenset({"must-load", "was-changed", "is-needed"})


@dataclass
class LivenessReport:
    loads: dict  # pc -> frozenset of variables loaded in the prologue
    stores: dict  # (pc, node id) -> frozenset stored at that exit
    was_changed: dict  # (pc, node id) -> frozenset, intermediate
    is_needed: dict  # (pc, node id) -> frozenset, intermediate
    exit_resume: dict  # (pc, node id) -> pc resumed at
    rules: frozenset


def _must_load_set(seg: Segment) -> frozenset:
    g = seg.graph
    reach = g.reachable()
    out = set()
    for v in seg.entry_scope:
        for nid in reach:
            n = g.nodes[nid]
            if v in n.reads:
                # a read counts unless some write strictly dominates it
                dominated = False
                for wid in reach:
                    if wid == nid:
                        continue
                    w = g.nodes[wid]
                    if v in w.writes and dominates(g, wid, nid):
                        dominated = True
                        break
                if not dominated:
                    out.add(v)
                    break
    return frozenset(out)


def _live_path_nodes(seg: Segment, v: str, sources: list) -> set:
    """Nodes reachable from `sources` along paths where v stays in scope and
    is not redeclared (a declaration starts a new instance of the name)."""
    g = seg.graph
    reach = g.reachable()
    seen: set = set()
    work = [s for s in sources if s in reach]
    while work:
        nid = work.pop()
        for s in g.nodes[nid].succ:
            if s not in reach or s in seen:
                continue
            n = g.nodes[s]
            if v not in n.scope and v not in n.writes:
                continue
            seen.add(s)
            if v in n.declares:
                continue  # the old value dies here
            work.append(s)
    return seen


def _exit_nodes(seg: Segment) -> list:
    reach = seg.graph.reachable()
    return [seg.graph.nodes[nid] for nid in sorted(reach) if seg.graph.nodes[nid].kind in ("Y", "C")]


def analyze(segments: list, pc_of: dict, rules: frozenset = ALL_RULES) -> LivenessReport:
    """Per entry point, the variables to load; per yield/call exit, the
    variables to store, filtered by the scope, was-changed, and is-needed
    rules (whichever are enabled)."""
    loads: dict = {}
    stores: dict = {}
    was_changed_d: dict = {}
    is_needed_d: dict = {}
    exit_resume: dict = {}

    must_load_cache: dict = {}
    for seg in segments:
        if "must-load" in rules:
            must_load_cache[seg.pc] = _must_load_set(seg)
        else:
            must_load_cache[seg.pc] = frozenset(seg.entry_scope)
        loads[seg.pc] = must_load_cache[seg.pc]

    seg_by_pc = {s.pc: s for s in segments}
    for seg in segments:
        for n in _exit_nodes(seg):
            exit_resume[(seg.pc, n.id)] = pc_of[id(n.stmt)]

    # was-changed: per exit, variables with an in-scope path from a write
    def was_changed(seg: Segment, exit_node: CfgNode, v: str) -> bool:
        g = seg.graph
        reach = g.reachable()
        writers = [nid for nid in reach if v in g.nodes[nid].writes]
        if not writers:
            return False
        if exit_node.id in writers:
            return True
        return exit_node.id in _live_path_nodes(seg, v, writers)

    # is-needed: the recursive relation with a least-fixpoint memo
    memo: dict = {}

    def needed(pc: int, node_id: int, v: str) -> bool:
        key = (pc, node_id, v)
        if key in memo:
            return memo[key]
        memo[key] = False  # assume not needed on cycles
        e = exit_resume[(pc, node_id)]
        if v in must_load_cache[e]:
            memo[key] = True
            return True
        seg2 = seg_by_pc[e]
        if v in seg2.entry_scope:
            live = _live_path_nodes(seg2, v, [seg2.graph.entry]) | {seg2.graph.entry}
            for n2 in _exit_nodes(seg2):
                if n2.id in live and needed(e, n2.id, v):
                    memo[key] = True
                    return True
        return memo[key]

    for seg in segments:
        for n in _exit_nodes(seg):
            candidates = frozenset(n.scope)
            wc = frozenset(v for v in candidates if was_changed(seg, n, v))
            was_changed_d[(seg.pc, n.id)] = wc
            nd = frozenset(v for v in candidates if needed(seg.pc, n.id, v))
            is_needed_d[(seg.pc, n.id)] = nd
            store = candidates
            if "was-changed" in rules:
                store &= wc
            if "is-needed" in rules:
                store &= nd
            stores[(seg.pc, n.id)] = store

    return LivenessReport(loads, stores, was_changed_d, is_needed_d, exit_resume, rules)


# ---------------------------------------------------------------------------
# Dump helpers


def dump_cfg(g: CfgGraph) -> str:
    lines = []
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        label = n.kind
        if n.kind in ("stmt", "Y", "C", "T") and n.stmt is not None:
            label += " " + print_stmt(n.stmt).strip()
        elif n.kind in ("Ws", "Is") and n.stmt is not None:
            label += f" ({print_expr(n.stmt)})"
        elif n.kind == "R":
            label += f" ({print_expr(n.stmt)})" if n.stmt is not None else " (unit)"
        succ = ", ".join(str(s) for s in n.succ)
        lines.append(f"  {nid}: {label} -> [{succ}]")
    return "\n".join(lines)


def dump_segments(segments: list) -> str:
    from .frontend import print_block

    parts = []
    for seg in segments:
        origin = ""
        if seg.origin is not None:
            origin = f" after {print_stmt(seg.origin).strip()}"
        parts.append(f"segment {seg.pc} ({seg.entry_kind}{origin}):")
        parts.append(print_block(seg.body, 1))
    return "\n".join(parts)
