"""Text format for calculus programs: lexer, parser, and pretty-printer.

Grammar (right-associative arrows, `;` desugars to unit-lambda application,
`let` to immediate application):

    type := "Unit" | "Int" | "Bot" | "Top" | atom "->" type
          | atom "~" atom "~>" type | atom "<~>" type | "(" type ")"
    term := "fun" "(" x ":" type ")" "=>" term
          | "cor" "(" x ":" type ")" "yields" type "=>" term
          | "yield" "(" term ")" | "start" "(" term "," term ")"
          | "resume" "(" term "," term "," term "," term ")"
          | "snapshot" "(" term ")" | "fix" "(" term ")"
          | "let" x ":" type "=" term "in" term
          | term ";" term | term "(" term ")" | term "+" term
          | INT | "()" | x

Line comments start with `--`. Runtime terms print as `#inst<n>`,
`<| t , v , v , v |>#n`, `[[ t ]]^v` and `%empty`; none of them parse.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ast import (
    BOT,
    INT_T,
    TOP,
    UNIT,
    UNIT_T,
    Abs,
    Add,
    App,
    Cor,
    CorT,
    Empty,
    Fix,
    FunT,
    InstT,
    Label,
    Lit,
    Resume,
    Resumption,
    Snapshot,
    Start,
    Suspension,
    Term,
    Type,
    Unit,
    Var,
    Yield,
    free_vars,
)


class SyntaxError_(Exception):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class SourceProgram:
    text: str
    origin: str = "<inline>"


KEYWORDS = {
    "fun", "cor", "yields", "yield", "start", "resume", "snapshot",
    "fix", "let", "in", "Unit", "Int", "Bot", "Top",
}

_PUNCT = ["<~>", "~>", "->", "=>", "()", "(", ")", ":", ",", ";", "+", "~", "="]


@dataclass
class _Tok:
    kind: str  # 'ident' | 'int' | 'kw' | punctuation literal | 'eof'
    text: str
    line: int
    col: int


def _lex(src: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("--", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        matched = False
        for p in _PUNCT:
            if src.startswith(p, i):
                toks.append(_Tok(p, p, line, col))
                i += len(p)
                col += len(p)
                matched = True
                break
        if matched:
            continue
        if c.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(_Tok("int", src[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            word = src[i:j]
            kind = "kw" if word in KEYWORDS else "ident"
            toks.append(_Tok(kind, word, line, col))
            col += j - i
            i = j
            continue
        raise SyntaxError_(f"unexpected character {c!r}", line, col)
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> _Tok:
        t = self.peek()
        if t.kind != kind:
            raise SyntaxError_(f"expected {kind!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def expect_kw(self, word: str) -> _Tok:
        t = self.peek()
        if not (t.kind == "kw" and t.text == word):
            raise SyntaxError_(f"expected {word!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def err(self, msg: str) -> SyntaxError_:
        t = self.peek()
        return SyntaxError_(msg, t.line, t.col)

    # types -----------------------------------------------------------------

    def type_atom(self) -> Type:
        t = self.peek()
        if t.kind == "kw" and t.text in ("Unit", "Int", "Bot", "Top"):
            self.next()
            return {"Unit": UNIT_T, "Int": INT_T, "Bot": BOT, "Top": TOP}[t.text]
        if t.kind == "(":
            self.next()
            inner = self.type_()
            self.expect(")")
            return inner
        raise self.err(f"expected a type, found {t.text or 'end of input'!r}")

    def type_(self) -> Type:
        left = self.type_atom()
        t = self.peek()
        if t.kind == "->":
            self.next()
            return FunT(left, self.type_())
        if t.kind == "~":
            self.next()
            yld = self.type_atom()
            self.expect("~>")
            return CorT(left, yld, self.type_())
        if t.kind == "<~>":
            self.next()
            return InstT(left, self.type_())
        return left

    # terms -----------------------------------------------------------------

    def term(self) -> Term:
        left = self.term_add()
        if self.peek().kind == ";":
            self.next()
            rest = self.term()
            u = _fresh_unused(rest, "u")
            return App(Abs(u, UNIT_T, rest), left)
        return left

    def term_add(self) -> Term:
        left = self.term_app()
        while self.peek().kind == "+":
            self.next()
            left = Add(left, self.term_app())
        return left

    def term_app(self) -> Term:
        left = self.term_atom()
        while self.peek().kind == "(":
            self.next()
            arg = self.term()
            self.expect(")")
            left = App(left, arg)
        return left

    def term_atom(self) -> Term:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return Lit(int(t.text))
        if t.kind == "()":
            self.next()
            return UNIT
        if t.kind == "(":
            self.next()
            inner = self.term()
            self.expect(")")
            return inner
        if t.kind == "ident":
            self.next()
            return Var(t.text)
        if t.kind == "kw":
            return self.keyword_form(t.text)
        raise self.err(f"expected a term, found {t.text or 'end of input'!r}")

    def keyword_form(self, word: str) -> Term:
        if word == "fun":
            self.next()
            self.expect("(")
            x = self.expect("ident").text
            self.expect(":")
            ty = self.type_()
            self.expect(")")
            self.expect("=>")
            return Abs(x, ty, self.term())
        if word == "cor":
            self.next()
            self.expect("(")
            x = self.expect("ident").text
            self.expect(":")
            ty = self.type_()
            self.expect(")")
            self.expect_kw("yields")
            yld = self.type_()
            self.expect("=>")
            return Cor(x, ty, yld, self.term())
        if word == "yield":
            self.next()
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return Yield(arg)
        if word == "start":
            self.next()
            self.expect("(")
            c = self.term()
            self.expect(",")
            a = self.term()
            self.expect(")")
            return Start(c, a)
        if word == "resume":
            self.next()
            self.expect("(")
            parts = [self.term()]
            for _ in range(3):
                self.expect(",")
                parts.append(self.term())
            self.expect(")")
            return Resume(*parts)
        if word == "snapshot":
            self.next()
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return Snapshot(arg)
        if word == "fix":
            self.next()
            self.expect("(")
            arg = self.term()
            self.expect(")")
            return Fix(arg)
        if word == "let":
            self.next()
            x = self.expect("ident").text
            self.expect(":")
            ty = self.type_()
            self.expect("=")
            bound = self.term()
            self.expect_kw("in")
            body = self.term()
            return App(Abs(x, ty, body), bound)
        raise self.err(f"unexpected keyword {word!r}")


def _fresh_unused(t: Term, base: str) -> str:
    fv = free_vars(t)
    if base not in fv:
        return base
    i = 0
    while f"{base}{i}" in fv:
        i += 1
    return f"{base}{i}"


def parse_term(src: SourceProgram | str) -> Term:
    text = src.text if isinstance(src, SourceProgram) else src
    p = _Parser(_lex(text))
    t = p.term()
    tok = p.peek()
    if tok.kind != "eof":
        raise SyntaxError_(f"trailing input starting at {tok.text!r}", tok.line, tok.col)
    return t


def parse_type(text: str) -> Type:
    p = _Parser(_lex(text))
    ty = p.type_()
    tok = p.peek()
    if tok.kind != "eof":
        raise SyntaxError_(f"trailing input starting at {tok.text!r}", tok.line, tok.col)
    return ty


# ---------------------------------------------------------------------------
# Printing

# precedence levels: 0 atom, 1 application, 2 addition, 3 full (binders reach here)


def print_term(t: Term) -> str:
    return _pp(t, 3)


def _wrap(s: str, level: int, limit: int) -> str:
    return s if level <= limit else f"({s})"


def _pp(t: Term, limit: int) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Unit):
        return "()"
    if isinstance(t, Lit):
        return str(t.value)
    if isinstance(t, Empty):
        return "%empty"
    if isinstance(t, Label):
        return f"#inst<{t.id}>"
    if isinstance(t, Abs):
        return _wrap(f"fun ({t.var}: {t.annot}) => {_pp(t.body, 3)}", 3, limit)
    if isinstance(t, Cor):
        return _wrap(
            f"cor ({t.var}: {t.annot}) yields {t.yld} => {_pp(t.body, 3)}", 3, limit
        )
    if isinstance(t, App):
        return _wrap(f"{_pp(t.fn, 1)}({_pp(t.arg, 3)})", 1, limit)
    if isinstance(t, Add):
        return _wrap(f"{_pp(t.lhs, 2)} + {_pp(t.rhs, 1)}", 2, limit)
    if isinstance(t, Yield):
        return f"yield({_pp(t.arg, 3)})"
    if isinstance(t, Start):
        return f"start({_pp(t.coroutine, 3)}, {_pp(t.arg, 3)})"
    if isinstance(t, Resume):
        args = ", ".join(
            _pp(s, 3) for s in (t.target, t.ret_handler, t.yield_handler, t.dead_handler)
        )
        return f"resume({args})"
    if isinstance(t, Snapshot):
        return f"snapshot({_pp(t.target, 3)})"
    if isinstance(t, Fix):
        return f"fix({_pp(t.arg, 3)})"
    if isinstance(t, Suspension):
        return f"[[ {_pp(t.body, 3)} ]]^{_pp(t.pending, 0)}"
    if isinstance(t, Resumption):
        parts = ", ".join(
            _pp(s, 3) for s in (t.body, t.ret_handler, t.yield_handler, t.dead_handler)
        )
        return f"<| {parts} |>#{t.label}"
    raise TypeError(f"unknown term: {t!r}")
