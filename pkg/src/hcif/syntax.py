"""Reader and writer for the ``.hcif`` surface syntax.

Example::

    cont T
    disc n

    automaton Thermostat {
      location Off {
        init T = 25 and n = 0
        tcp T' = -T + 15
        edge T < 20 : switch-on : n+ = n + 1 -> On
      }
      location On {
        tcp T' = -T + 25
        edge n <= 1000 : switch-off : true -> Off
      }
    }

Dotted variables are written ``x'`` and stepped ones ``x+`` (the ``+`` must
touch the name and must not touch the following operand, so ``n+1`` is an
addition while ``n+ = 1`` assigns the stepped ``n``).  Omitted location
predicates default to ``init false``, ``tcp true`` and ``term false``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .errors import HcifError, HcifSyntaxError
from .expr import (
    FALSE,
    TRUE,
    And,
    BinOp,
    Call,
    Cmp,
    Const,
    Expr,
    Neg,
    Not,
    Or,
    Var,
    format_expr,
    format_number,
)
from .model import (
    Automaton,
    Composition,
    Diagnostic,
    Edge,
    Location,
    Model,
    Parallel,
    Postfix,
    VarDecl,
    augment_entry_resets,
    validate,
)

KEYWORDS = {
    "automaton",
    "location",
    "init",
    "tcp",
    "term",
    "sub",
    "edge",
    "disc",
    "cont",
    "const",
    "and",
    "or",
    "not",
    "true",
    "false",
    "exp",
}

_NAME = r"[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*"
_TOKEN = re.compile(
    rf"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<name>{_NAME})(?P<dot>')?(?P<step>\+(?![A-Za-z0-9_(.]))?
  | (?P<punct>->|\|\||!=|<=|>=|[{{}}(),:=<>+\-*/])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "number", "name", "var", "punct", keyword text, or "eof"
    text: str
    start: int
    end: int
    line: int
    col: int
    dotted: bool = False
    stepped: bool = False


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise HcifSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        if m.group("ws") is not None:
            pass
        elif m.group("number") is not None:
            tokens.append(Token("number", m.group(), pos, m.end(), line, col))
        elif m.group("name") is not None:
            name = m.group("name")
            dotted, stepped = m.group("dot") is not None, m.group("step") is not None
            if name in KEYWORDS and not (dotted or stepped):
                tokens.append(Token(name, name, pos, m.end(), line, col))
            else:
                tokens.append(Token("name", name, pos, m.end(), line, col, dotted, stepped))
        else:
            tokens.append(Token("punct", m.group(), pos, m.end(), line, col))
        chunk = m.group()
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", pos, pos, line, pos - line_start + 1))
    return tokens


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise HcifSyntaxError(f"{message} (found {found!r})", tok.line, tok.col)

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.tok
        if kind == "punct":
            return t.kind == "punct" and t.text == text
        return t.kind == kind

    def accept(self, kind: str, text: Optional[str] = None) -> Optional[Token]:
        if self.at(kind, text):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, kind: str, text: Optional[str] = None) -> Token:
        t = self.accept(kind, text)
        if t is None:
            self.error(f"expected {text or kind}")
        return t

    def plain_name(self) -> str:
        t = self.expect("name")
        if t.dotted or t.stepped:
            self.error("expected a plain identifier", t)
        return t.text

    def label(self) -> str:
        """Action label; hyphens are allowed between touching name parts."""
        first = self.expect("name")
        parts = [first.text]
        end = first.end
        while (
            self.at("punct", "-")
            and self.tok.start == end
            and self.peek().kind == "name"
            and self.peek().start == self.tok.end
        ):
            self.i += 1
            t = self.expect("name")
            parts.append(t.text)
            end = t.end
        return "-".join(parts)

    # -- model ---------------------------------------------------------------

    def model(self) -> Model:
        decls = []
        while self.tok.kind in ("disc", "cont", "const"):
            decls.extend(self.decl())
        comp = self.comp()
        if not self.at("eof"):
            self.error("expected end of input")
        return Model(tuple(decls), comp)

    def decl(self) -> list[VarDecl]:
        kw = self.tok.kind
        self.i += 1
        if kw == "const":
            name = self.plain_name()
            self.expect("punct", "=")
            start = self.tok
            value = self.expr()
            if not (isinstance(value, Const) and not isinstance(value.value, bool)):
                self.error("constant value must be a number", start)
            return [VarDecl(name, "constant", value.value)]
        kind = "discrete" if kw == "disc" else "continuous"
        names = [self.plain_name()]
        while self.accept("punct", ","):
            names.append(self.plain_name())
        return [VarDecl(n, kind) for n in names]

    def comp(self) -> Composition:
        left = self.comp_primary()
        while self.accept("punct", "||"):
            self.expect("punct", "{")
            sync = []
            if not self.at("punct", "}"):
                sync.append(self.label())
                while self.accept("punct", ","):
                    sync.append(self.label())
            self.expect("punct", "}")
            right = self.comp_primary()
            left = Parallel(left, frozenset(sync), right)
        return left

    def comp_primary(self) -> Composition:
        if self.accept("punct", "("):
            inner = self.comp()
            self.expect("punct", ")")
            return inner
        if self.at("automaton"):
            return self.automaton()
        self.error("expected an automaton or a parenthesized composition")

    def automaton(self) -> Automaton:
        self.expect("automaton")
        name = self.plain_name()
        self.expect("punct", "{")
        locations: list[Location] = []
        edges: list[Edge] = []
        if not self.at("location"):
            self.error("expected at least one location")
        while self.at("location"):
            loc, loc_edges = self.location()
            locations.append(loc)
            edges.extend(loc_edges)
        self.expect("punct", "}")
        return Automaton(name, tuple(locations), tuple(edges))

    def location(self):
        self.expect("location")
        name = self.plain_name()
        self.expect("punct", "{")
        clauses: dict[str, object] = {}
        for kw in ("init", "tcp", "term", "sub"):
            if self.at(kw):
                t = self.tok
                self.i += 1
                clauses[kw] = self.comp() if kw == "sub" else self.expr()
                if self.at(kw):
                    self.error(f"duplicate {kw} clause", t)
        edges = []
        while self.at("edge"):
            edges.append(self.edge(name))
        if self.tok.kind in ("init", "tcp", "term", "sub"):
            self.error("location clauses must appear in the order init, tcp, term, sub, edge")
        self.expect("punct", "}")
        loc = Location(
            name,
            clauses.get("init", FALSE),
            clauses.get("tcp", TRUE),
            clauses.get("term", FALSE),
            clauses.get("sub"),
        )
        return loc, edges

    def edge(self, source: str) -> Edge:
        self.expect("edge")
        guard = self.expr()
        self.expect("punct", ":")
        action = self.label()
        self.expect("punct", ":")
        reset = self.expr()
        self.expect("punct", "->")
        target = self.plain_name()
        return Edge(source, guard, action, reset, target)

    # -- expressions ---------------------------------------------------------

    def expr(self) -> Expr:
        left = self.and_expr()
        while self.accept("or"):
            left = Or(left, self.and_expr())
        return left

    def and_expr(self) -> Expr:
        left = self.not_expr()
        while self.accept("and"):
            left = And(left, self.not_expr())
        return left

    def not_expr(self) -> Expr:
        if self.accept("not"):
            return Not(self.not_expr())
        return self.cmp_expr()

    def cmp_expr(self) -> Expr:
        left = self.add_expr()
        t = self.tok
        if t.kind == "punct" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            self.i += 1
            return Cmp(t.text, left, self.add_expr())
        return left

    def add_expr(self) -> Expr:
        left = self.mul_expr()
        while self.tok.kind == "punct" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.mul_expr())
        return left

    def mul_expr(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "punct" and self.tok.text in ("*", "/"):
            op = self.tok.text
            self.i += 1
            right = self.unary()
            if (
                op == "/"
                and isinstance(left, Const)
                and isinstance(right, Const)
                and not isinstance(left.value, bool)
                and not isinstance(right.value, bool)
                and right.value != 0
            ):
                left = Const(left.value / right.value)
            else:
                left = BinOp(op, left, right)
        return left

    def unary(self) -> Expr:
        if self.accept("punct", "-"):
            if self.at("number"):
                return Const(-Fraction(self.expect("number").text))
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "number":
            self.i += 1
            return Const(Fraction(t.text))
        if t.kind in ("true", "false"):
            self.i += 1
            return TRUE if t.kind == "true" else FALSE
        if t.kind == "exp":
            self.i += 1
            self.expect("punct", "(")
            arg = self.expr()
            self.expect("punct", ")")
            return Call("exp", arg)
        if t.kind == "name":
            self.i += 1
            return Var(t.text, t.dotted, t.stepped)
        if self.accept("punct", "("):
            inner = self.expr()
            self.expect("punct", ")")
            return inner
        self.error("expected an expression")


def parse(text: str) -> Model:
    return Parser(text).model()


def parse_expr(text: str) -> Expr:
    p = Parser(text)
    e = p.expr()
    if not p.at("eof"):
        p.error("expected end of expression")
    return e


# --------------------------------------------------------------------------
# printing


def format_decl(d: VarDecl) -> str:
    if d.kind == "constant":
        return f"const {d.name} = {format_number(d.value)}"
    return f"{'disc' if d.kind == 'discrete' else 'cont'} {d.name}"


def format_comp(p: Composition, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(p, Parallel):
        sync = ", ".join(sorted(p.sync))
        left = format_comp(p.left, indent)
        right = format_comp(p.right, indent)
        if isinstance(p.right, Parallel):
            right = f"{pad}(\n{format_comp(p.right, indent + 1)}\n{pad})"
        return f"{left}\n{pad}||{{{sync}}}\n{right}"
    if isinstance(p, Postfix):
        raise HcifError("the postfix operator is auxiliary and has no surface syntax")
    lines = [f"{pad}automaton {p.name} {{"]
    for loc in p.locations:
        lines.append(f"{pad}  location {loc.name} {{")
        inner = pad + "    "
        if loc.init != FALSE:
            lines.append(f"{inner}init {format_expr(loc.init)}")
        if loc.tcp != TRUE:
            lines.append(f"{inner}tcp {format_expr(loc.tcp)}")
        if loc.term != FALSE:
            lines.append(f"{inner}term {format_expr(loc.term)}")
        if loc.sub is not None:
            sub = format_comp(loc.sub, indent + 3).lstrip()
            if isinstance(loc.sub, Parallel):
                sub = "(\n" + format_comp(loc.sub, indent + 3) + f"\n{inner})"
            lines.append(f"{inner}sub {sub}")
        for e in p.outgoing(loc.name):
            lines.append(
                f"{inner}edge {format_expr(e.guard)} : {e.action} : {format_expr(e.reset)} -> {e.target}"
            )
        lines.append(f"{pad}  }}")
    lines.append(f"{pad}}}")
    return "\n".join(lines)


def format_model(m: Model) -> str:
    head = "\n".join(format_decl(d) for d in m.decls)
    body = format_comp(m.comp)
    return f"{head}\n\n{body}\n" if head else f"{body}\n"


# --------------------------------------------------------------------------
# loading


class ValidationError(HcifError):
    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


def load_text(text: str, augment: bool = True) -> Model:
    """Parse and validate model text.

    With ``augment`` the edges entering a location with a substructure also
    establish the substructure's ``x = k`` init bindings (see
    :func:`hcif.model.augment_entry_resets`).
    """
    model = parse(text)
    diags = validate(model.comp, model.decls)
    if diags:
        raise ValidationError(diags)
    if augment:
        model = Model(model.decls, augment_entry_resets(model.comp))
    return model


def load_model(path, augment: bool = True) -> Model:
    return load_text(Path(path).read_text(encoding="utf-8"), augment)
