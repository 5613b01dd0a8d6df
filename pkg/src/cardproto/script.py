"""Reader and writer for ``.cardp`` protocol scripts.

A script is line oriented.  A header names the protocol, its inputs, the
deck size, the target function and the initial layout; statements follow.
``branch`` blocks are brace delimited and ``#`` starts a comment.  The
README documents the grammar; ``scripts/five_card_trick.cardp`` is the
canonical example.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, NamedTuple, Optional

from .analyzer import Explorer
from .deck import Permutation, Scheme, Suit
from .errors import BudgetExceeded, DomainError, ProtocolError, UncoveredBranch
from .protocol import FUNCTIONS, CompileError, FunctionSpec, Protocol, patterns_overlap
from . import steps as st


class Diagnostic(NamedTuple):
    line: int
    column: int
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.code}: {self.message}"


class ScriptError(DomainError):
    """Parsing failed; ``diagnostics`` is never empty."""

    def __init__(self, diagnostics):
        self.diagnostics = sorted(diagnostics)
        super().__init__("\n".join(map(str, self.diagnostics)))


class ElaborationError(ProtocolError):
    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        super().__init__("\n".join(f"line {ln}: {msg}" if ln else msg for ln, msg in problems))


@dataclass(frozen=True)
class ScriptDocument:
    name: str
    params: tuple[tuple[str, Any], ...]
    arity: int
    modulus: int
    cards: int
    function: str
    table: Optional[tuple[int, ...]]
    layout: tuple
    body: tuple
    header_lines: dict = field(default_factory=dict, compare=False, hash=False, repr=False)


HEADERS = ("protocol", "params", "inputs", "cards", "function", "layout")
REQUIRED = ("protocol", "inputs", "cards", "function")
_NAME_RE = re.compile(r"[A-Za-z_][\w.-]*$")
_INT_RE = re.compile(r"\d+$")
_CYCLE_RE = re.compile(r"\s*\(([^()]*)\)")


class _Src(NamedTuple):
    no: int
    col: int  # 1-based column of ``text[0]``
    text: str


def _split(src: _Src) -> tuple[str, str, int]:
    """Keyword, rest of line and the rest's column."""
    m = re.match(r"(\S+)\s*(.*)", src.text)
    return m.group(1), m.group(2), src.col + m.start(2)


class _Parser:
    def __init__(self, text: str):
        self.diags: list[Diagnostic] = []
        self.lines: list[_Src] = []
        for no, raw in enumerate(text.splitlines(), 1):
            body = raw.split("#", 1)[0].rstrip()
            stripped = body.lstrip()
            if stripped:
                self.lines.append(_Src(no, len(body) - len(stripped) + 1, stripped))
        self.i = 0
        self.cards: Optional[int] = None
        self.arity: Optional[int] = None

    def err(self, line: int, col: int, code: str, message: str):
        self.diags.append(Diagnostic(line, col, code, message))

    # ------------------------------------------------------------ small pieces

    def integer(self, text: str, line: int, col: int, what: str) -> Optional[int]:
        if not _INT_RE.match(text):
            self.err(line, col, "bad-argument", f"{what} must be a non-negative integer, got {text!r}")
            return None
        return int(text)

    def in_range(self, p: int, line: int, col: int) -> bool:
        if self.cards is not None and not 1 <= p <= self.cards:
            self.err(line, col, "position-range", f"position {p} outside 1..{self.cards}")
            return False
        return True

    def positions(self, text: str, line: int, col: int) -> Optional[tuple[int, ...]]:
        """Comma-separated positions; ``a..b`` is an ascending run."""
        if not text.strip():
            self.err(line, col, "bad-argument", "expected a position list")
            return None
        out, ok = [], True
        for m in re.finditer(r"[^,]+", text):
            item = m.group().strip()
            c = col + m.start() + (len(m.group()) - len(m.group().lstrip()))
            r = re.match(r"(\d+)(?:\.\.(\d+))?$", item)
            if not r:
                self.err(line, c, "bad-argument", f"malformed position {item!r}")
                ok = False
                continue
            lo = int(r.group(1))
            hi = int(r.group(2)) if r.group(2) else lo
            if hi < lo:
                self.err(line, c, "bad-argument", f"descending range {item!r}")
                ok = False
                continue
            ok &= self.in_range(lo, line, c) and self.in_range(hi, line, c)
            out.extend(range(lo, hi + 1))
        if text.strip().endswith(",") or ",," in text.replace(" ", ""):
            self.err(line, col, "bad-argument", "empty entry in position list")
            ok = False
        return tuple(out) if ok else None

    def perm(self, text: str, line: int, col: int) -> Optional[Permutation]:
        lead = len(text) - len(text.lstrip())
        text, col = text.strip(), col + lead
        if self.cards is None:
            return None
        if text == "id":
            return Permutation.identity(self.cards)
        cycles, pos, ok = [], 0, True
        while pos < len(text):
            m = _CYCLE_RE.match(text, pos)
            if not m:
                self.err(line, col + pos + (len(text[pos:]) - len(text[pos:].lstrip())), "bad-cycle",
                         f"malformed cycle notation {text!r}")
                return None
            cycle = []
            for n in re.finditer(r"\S+", m.group(1)):
                c = col + m.start(1) + n.start()
                if not _INT_RE.match(n.group()):
                    self.err(line, c, "bad-cycle", f"non-integer {n.group()!r} in cycle")
                    return None
                ok &= self.in_range(int(n.group()), line, c)
                cycle.append(int(n.group()))
            if not cycle:
                self.err(line, col + m.start(), "bad-cycle", "empty cycle")
                return None
            cycles.append(tuple(cycle))
            pos = m.end()
        if not cycles:
            self.err(line, col, "bad-cycle", "expected cycle notation or 'id'")
            return None
        if not ok:
            return None
        try:
            return Permutation.from_cycles(cycles, self.cards)
        except DomainError as exc:
            self.err(line, col, "bad-cycle", str(exc))
            return None

    def pattern(self, text: str, line: int, col: int, alphabet: str = "CH") -> Optional[str]:
        if not text or set(text) - set(alphabet):
            self.err(line, col, "bad-pattern", f"pattern {text!r} may only use {', '.join(alphabet)}")
            return None
        return text

    # ------------------------------------------------------------ header

    def header(self) -> dict:
        seen: dict[str, Any] = {}
        lines: dict[str, int] = {}
        layout: list = []
        if not self.lines:
            self.err(1, 1, "missing-header", "missing header: a script starts with 'protocol NAME'")
            return seen
        first = self.lines[0]
        if _split(first)[0] != "protocol":
            self.err(first.no, first.col, "missing-header",
                     "missing header: a script starts with 'protocol NAME'")
        while self.i < len(self.lines):
            src = self.lines[self.i]
            kw, rest, col = _split(src)
            if kw not in HEADERS:
                break
            self.i += 1
            if kw in seen and kw != "layout":
                self.err(src.no, src.col, "duplicate-header", f"{kw!r} given twice")
                continue
            lines.setdefault(kw, src.no)
            value = getattr(self, "h_" + kw)(rest, src.no, col)
            if kw == "layout":
                if value is not None:
                    layout.append(value)
                seen["layout"] = True
            elif value is not None:
                seen[kw] = value
        at = self.lines[self.i] if self.i < len(self.lines) else None
        for kw in REQUIRED:
            if kw not in lines:
                line, col = (at.no, at.col) if at else (self.lines[-1].no + 1, 1)
                self.err(line, col, "missing-header", f"missing header line {kw!r}")
        seen["layout"] = tuple(layout)
        seen["lines"] = lines
        return seen

    def h_protocol(self, rest, line, col):
        if not _NAME_RE.match(rest):
            self.err(line, col, "bad-header", f"invalid protocol name {rest!r}")
            return None
        return rest

    def h_params(self, rest, line, col):
        out = []
        for m in re.finditer(r"\S+", rest):
            key, eq, value = m.group().partition("=")
            c = col + m.start()
            if not eq or not _NAME_RE.match(key) or not re.match(r"\d+(,\d+)*,?$", value):
                self.err(line, c, "bad-header", f"parameter {m.group()!r} is not key=int or key=int,int,...")
                continue
            if "," in value:
                out.append((key, tuple(int(v) for v in value.split(",") if v)))
            else:
                out.append((key, int(value)))
        return tuple(out)

    def h_inputs(self, rest, line, col):
        m = re.match(r"(\d+)\s+(?:bits|mod\s+(\d+))$", rest)
        if not m or int(m.group(1)) < 1 or (m.group(2) and int(m.group(2)) < 2):
            self.err(line, col, "bad-header", "expected 'inputs N bits' or 'inputs N mod K' (N>=1, K>=2)")
            return None
        self.arity = int(m.group(1))
        return self.arity, int(m.group(2) or 2)

    def h_cards(self, rest, line, col):
        n = self.integer(rest, line, col, "card count")
        if n is not None and n < 1:
            self.err(line, col, "bad-header", "a deck needs at least one card")
            return None
        self.cards = n
        return n

    def h_function(self, rest, line, col):
        parts = rest.split()
        if not parts or len(parts) > 2:
            self.err(line, col, "bad-header", "expected 'function NAME [v0,v1,...]'")
            return None
        if parts[0] not in FUNCTIONS:
            self.err(line, col, "unknown-function",
                     f"unknown function {parts[0]!r}; choose from {', '.join(FUNCTIONS)}")
            return None
        table = None
        if len(parts) == 2:
            if not re.match(r"\d+(,\d+)*$", parts[1]):
                self.err(line, col + rest.index(parts[1]), "bad-header", f"malformed table {parts[1]!r}")
                return None
            table = tuple(int(v) for v in parts[1].split(","))
        return parts[0], table

    def h_layout(self, rest, line, col):
        m = re.match(r"(commit|encode|card)\s+(\S+)(?:\s+(\S+))?$", rest)
        if not m:
            self.err(line, col, "bad-header", "expected 'layout commit I[.J]', 'layout encode I C|H' or 'layout card C|H'")
            return None
        kind, arg, extra = m.groups()
        acol = col + m.start(2)
        if kind == "card":
            if arg not in ("C", "H") or extra:
                self.err(line, acol, "bad-header", "a free card is C or H")
                return None
            return st.FreeCard(Suit(arg))
        r = re.match(r"(\d+)(?:\.(\d+))?$", arg)
        if not r or (kind == "encode" and r.group(2)):
            self.err(line, acol, "bad-header", f"malformed input reference {arg!r}")
            return None
        idx = int(r.group(1))
        if self.arity is not None and not 1 <= idx <= self.arity:
            self.err(line, acol, "input-range", f"input {idx} outside 1..{self.arity}")
            return None
        if kind == "commit":
            if extra:
                self.err(line, col + m.start(3), "bad-header", "unexpected text after commitment")
                return None
            return st.CommitInput(idx, None if r.group(2) is None else int(r.group(2)))
        if extra not in ("C", "H"):
            self.err(line, acol, "bad-header", "an encoded input names its scheme, C or H")
            return None
        return ("encode", idx, Scheme(extra))

    # ------------------------------------------------------------ statements

    def block(self, depth: int, opener: Optional[tuple[int, int]] = None) -> tuple:
        body: list = []
        while self.i < len(self.lines):
            src = self.lines[self.i]
            if src.text == "}":
                if depth:
                    self.i += 1
                    return tuple(body)
                self.err(src.no, src.col, "unbalanced-brace", "'}' without a matching branch")
                self.i += 1
                continue
            kw = _split(src)[0]
            if kw == "branch":
                group = self.branch_group(depth)
                if group is not None:
                    body.append(group)
                continue
            self.i += 1
            if kw in HEADERS:
                self.err(src.no, src.col, "misplaced-header", f"header line {kw!r} after the first statement")
                continue
            stmt = self.statement(src)
            if stmt is not None:
                body.append(stmt)
        if depth and opener:
            self.err(opener[0], opener[1], "unbalanced-brace", "branch block is never closed")
        return tuple(body)

    def branch_group(self, depth: int) -> Optional[st.BranchGroup]:
        arms: list[st.Arm] = []
        first = self.lines[self.i].no
        ok = True
        while self.i < len(self.lines) and _split(self.lines[self.i])[0] == "branch":
            src = self.lines[self.i]
            self.i += 1
            _, rest, col = _split(src)
            m = re.match(r"(\S+?)\s*\{\s*(\})?$", rest)
            if not m:
                self.err(src.no, col + len(rest), "unbalanced-brace", "expected 'branch PATTERN {'")
                ok = False
                continue
            pat = self.pattern(m.group(1), src.no, col, "CH*")
            body = () if m.group(2) else self.block(depth + 1, (src.no, col + m.start() + rest.index("{")))
            if pat is None:
                ok = False
                continue
            for other in arms:
                if patterns_overlap(pat, other.pattern):
                    self.err(src.no, col, "overlapping-patterns",
                             f"pattern {pat} overlaps {other.pattern} (line {other.line})")
                    ok = False
                    break
            arms.append(st.Arm(pat, body, src.no))
        return st.BranchGroup(tuple(arms), first) if ok and arms else None

    def statement(self, src: _Src):
        kw, rest, col = _split(src)
        handler = getattr(self, "s_" + kw, None)
        if handler is None:
            self.err(src.no, src.col, "unknown-statement", f"unknown statement {kw!r}")
            return None
        return handler(rest, src.no, col)

    def _opt_positions(self, rest, line, col):
        return None if not rest else self.positions(rest, line, col)

    def _lead_int(self, rest, line, col, what):
        m = re.match(r"(\S+)\s*(.*)", rest)
        if not m:
            self.err(line, col, "bad-argument", f"expected {what}")
            return None, None, False
        value = self.integer(m.group(1), line, col, what)
        tail, tcol = m.group(2), col + m.start(2)
        ps = self._opt_positions(tail, line, tcol)
        return value, ps, value is not None and (not tail or ps is not None)

    def s_perm(self, rest, line, col):
        p = self.perm(rest, line, col)
        return None if p is None else st.Perm(p, line)

    def s_shuffle(self, rest, line, col):
        m = re.match(r"\{(.*)\}$", rest)
        if not m:
            self.err(line, col, "bad-argument", "expected 'shuffle {PERM, PERM, ...}'")
            return None
        perms = []
        for part in re.finditer(r"[^,]+", m.group(1)):
            p = self.perm(part.group(), line, col + 1 + part.start())
            if p is None:
                return None
            perms.append(p)
        if not perms:
            self.err(line, col, "bad-argument", "a shuffle needs at least one permutation")
            return None
        return st.Shuffle(tuple(perms), line)

    def _shift(self, rest, line, col, left):
        r, ps, ok = self._lead_int(rest, line, col, "shift amount")
        return st.Shift(r, left, ps, line) if ok else None

    def s_lshift(self, rest, line, col):
        return self._shift(rest, line, col, True)

    def s_rshift(self, rest, line, col):
        return self._shift(rest, line, col, False)

    def s_rcut(self, rest, line, col):
        ps = self._opt_positions(rest, line, col)
        return None if rest and ps is None else st.RandomCut(ps, line)

    def s_xorall(self, rest, line, col):
        ps = self._opt_positions(rest, line, col)
        return None if rest and ps is None else st.XorAll(ps, line)

    def s_ksec(self, rest, line, col):
        k, ps, ok = self._lead_int(rest, line, col, "section count")
        return st.SectionCut(k, ps, line) if ok else None

    def s_pcut(self, rest, line, col):
        ps = self.positions(rest, line, col)
        return None if ps is None else st.PartialCut(ps, line)

    def s_reveal(self, rest, line, col):
        ps = self.positions(rest, line, col)
        return None if ps is None else st.Reveal(ps, line)

    def s_conceal(self, rest, line, col):
        ps = self.positions(rest, line, col)
        return None if ps is None else st.Conceal(ps, line)

    def s_output(self, rest, line, col):
        words = rest.split()
        if words[:1] == ["committed"]:
            pair = self.pair(words[1:], line, col + len("committed "))
            return None if pair is None else st.OutputCommitted(pair, line)
        if words[:1] == ["encoded"] and len(words) == 3 and words[1] in ("C", "H"):
            ps = self.positions(words[2], line, col + rest.index(words[2], len("encoded ")))
            return None if ps is None else st.OutputEncoded(Scheme(words[1]), ps, line)
        if words[:2] == ["public", "bit"]:
            pair = self.pair(words[2:], line, col + len("public bit "))
            return None if pair is None else st.OutputBit(pair, line)
        if words[:2] == ["public", "cyclic"] and len(words) == 4:
            pcol = col + rest.index(words[2], len("public cyclic"))
            pat = self.pattern(words[2], line, pcol)
            ps = self.positions(words[3], line, col + rest.rindex(words[3]))
            return None if pat is None or ps is None else st.OutputCyclic(pat, ps, line)
        m = re.match(r"public\s+index\s+([CH])\s+(\S+)\s*->\s*(\d+(?:,\d+)*)$", rest)
        if m:
            ps = self.positions(m.group(2), line, col + m.start(2))
            table = tuple(int(v) for v in m.group(3).split(","))
            return None if ps is None else st.OutputIndex(Suit(m.group(1)), ps, table, line)
        self.err(line, col, "bad-output",
                 "expected 'output committed P Q', 'output encoded C|H POS', 'output public bit P Q', "
                 "'output public cyclic PATTERN POS' or 'output public index C|H POS -> TABLE'")
        return None

    def pair(self, words, line, col) -> Optional[tuple[int, int]]:
        if len(words) != 2 or not all(_INT_RE.match(w) for w in words):
            self.err(line, col, "bad-argument", "expected two positions 'P Q'")
            return None
        ps = tuple(int(w) for w in words)
        ok = all(self.in_range(p, line, col) for p in ps)
        return ps if ok else None


def parse(text: str) -> ScriptDocument:
    """Parse script text; raises ``ScriptError`` listing every diagnostic."""
    parser = _Parser(text)
    head = parser.header()
    body = parser.block(0)
    if not parser.diags and not body:
        line = parser.lines[-1].no + 1 if parser.lines else 1
        parser.err(line, 1, "empty-body", "the script has no statements")
    if parser.diags:
        raise ScriptError(parser.diags)
    arity, modulus = head["inputs"]
    fname, table = head["function"]
    layout = tuple(
        st.EncodeInput(item[1], item[2], modulus) if isinstance(item, tuple) else item
        for item in head["layout"]
    )
    return ScriptDocument(head["protocol"], head.get("params", ()), arity, modulus, head["cards"],
                          fname, table, layout, body, head["lines"])


def diagnostics(text: str) -> list[Diagnostic]:
    """Every diagnostic for ``text``; empty when it parses."""
    try:
        parse(text)
    except ScriptError as exc:
        return exc.diagnostics
    return []


def _param_text(value) -> str:
    if isinstance(value, (tuple, list)):
        text = ",".join(map(str, value))
        return text + "," if len(value) == 1 else text
    return str(value)


def serialize(doc: ScriptDocument) -> str:
    lines = [f"protocol {doc.name}"]
    if doc.params:
        lines.append("params " + " ".join(f"{k}={_param_text(v)}" for k, v in doc.params))
    lines.append(f"inputs {doc.arity} bits" if doc.modulus == 2 else f"inputs {doc.arity} mod {doc.modulus}")
    lines.append(f"cards {doc.cards}")
    fn = f"function {doc.function}"
    if doc.table is not None:
        fn += " " + ",".join(map(str, doc.table))
    lines.append(fn)
    lines += ["layout " + item.to_text() for item in doc.layout]
    lines.append("")
    lines += st.render_body(doc.body)
    return "\n".join(lines) + "\n"


def document_from_protocol(protocol: Protocol) -> ScriptDocument:
    if protocol.function.modulus != protocol.modulus:
        raise DomainError("scripts tie the function's modulus to the input modulus")
    return ScriptDocument(protocol.name, protocol.params, protocol.arity, protocol.modulus,
                          protocol.card_count, protocol.function.name, protocol.function.table,
                          protocol.layout, protocol.body)


def to_script(protocol: Protocol) -> str:
    return serialize(document_from_protocol(protocol))


def elaborate(doc: ScriptDocument) -> Protocol:
    """Turn a parsed document into a checked protocol.

    Beyond compilation this runs every input once, so a branch group that
    misses a reachable observation is reported here rather than mid-analysis.
    """
    lines = doc.header_lines
    problems: list[tuple[int, str]] = []
    width = sum(item.width for item in doc.layout)
    if width != doc.cards:
        problems.append((lines.get("cards", 0), f"layout places {width} cards but the deck declares {doc.cards}"))
    try:
        spec = FunctionSpec(doc.function, doc.arity, doc.modulus, doc.table)
    except DomainError as exc:
        problems.append((lines.get("function", 0), str(exc)))
    if problems:
        raise ElaborationError(problems)
    protocol = Protocol(doc.name, doc.params, doc.arity, doc.modulus, doc.layout, doc.body, spec,
                        f"script {doc.name}")
    try:
        protocol.program
        protocol.outputs_visible
    except CompileError as exc:
        raise ElaborationError(exc.problems) from None
    except ProtocolError as exc:
        raise ElaborationError([(0, str(exc))]) from None
    explorer = Explorer(protocol)
    for inputs in protocol.domain():
        try:
            explorer.outcomes(inputs)
        except UncoveredBranch as exc:
            raise ElaborationError([(exc.origin or 0, f"no branch covers the reachable observation "
                                                      f"{exc.pattern} (input {','.join(map(str, inputs))})")]) from None
        except DomainError as exc:
            raise ElaborationError([(0, str(exc))]) from None
        except BudgetExceeded:
            raise
        except ProtocolError as exc:
            raise ElaborationError([(0, f"input {','.join(map(str, inputs))}: {exc}")]) from None
    return protocol


def load(text: str) -> Protocol:
    return elaborate(parse(text))


def reference_script(name: str) -> str:
    """Text of a packaged reference script, e.g. ``five_card_trick``."""
    return resources.files("cardproto").joinpath("scripts", f"{name}.cardp").read_text(encoding="utf-8")
