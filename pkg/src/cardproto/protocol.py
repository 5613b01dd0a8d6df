"""Protocol descriptions, target functions, and compilation to a flat program.

A protocol body is a structured list of statements (see ``steps``).  Before
execution it is compiled into a list of instructions with explicit jump
targets, so the analyzer can key memo tables on ``(pc, deck)``.  Compilation
also runs the static checks: card bounds, orientation of every card touched
by a reveal/conceal/shuffle/output, branch arity and reachability of an
output on every path.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, NamedTuple, Optional, Sequence

from .deck import Card, CardSequence, Permutation, Scheme, Suit, decode_int, encode_bit, encode_int
from .errors import DomainError, ProtocolError
from .shuffles import k_section_cut_for, partial_random_cut, random_bit_xor, random_cut
from . import steps as st


# ---------------------------------------------------------------- target functions


def _f_and(a, spec):
    return int(all(a))


def _f_equality(a, spec):
    return int(len(set(a)) == 1)


def _f_symmetric(a, spec):
    return spec.table[sum(a)]


def _f_add(a, spec):
    return sum(a) % spec.modulus


def _f_sum(a, spec):
    return sum(a)


FUNCTIONS = {
    "and": _f_and,
    "equality": _f_equality,
    "symmetric": _f_symmetric,
    "add": _f_add,
    "sum": _f_sum,
}


@dataclass(frozen=True)
class FunctionSpec:
    """Target function over ``(Z/modulus Z)^arity``.

    For ``symmetric`` the value is ``table[sum(inputs)]``, ``table`` being the
    reduced function on ``0..arity``.
    """

    name: str
    arity: int
    modulus: int = 2
    table: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise DomainError(f"unknown function {self.name!r}")
        if self.name == "symmetric":
            if self.table is None or len(self.table) != self.arity + 1:
                raise DomainError(f"symmetric table needs {self.arity + 1} values")
            if self.modulus != 2:
                raise DomainError("symmetric functions take bit inputs")

    def __call__(self, inputs: Sequence[int]) -> int:
        return FUNCTIONS[self.name](tuple(inputs), self)

    def domain(self):
        return itertools.product(range(self.modulus), repeat=self.arity)

    def is_symmetric(self) -> bool:
        return all(self(a) == self(sorted(a)) for a in self.domain())

    def is_doubly_symmetric(self) -> bool:
        if self.modulus != 2 or not self.is_symmetric():
            return False
        return all(self(a) == self(tuple(1 - x for x in a)) for a in self.domain())

    def reduced(self) -> tuple[int, ...]:
        """The table ``g`` with ``f(a) = g(sum(a))``; bits only."""
        if self.modulus != 2 or not self.is_symmetric():
            raise DomainError(f"{self.name} is not a symmetric Boolean-input function")
        return tuple(self((1,) * t + (0,) * (self.arity - t)) for t in range(self.arity + 1))

    def to_json(self) -> dict:
        out = {"name": self.name, "arity": self.arity, "modulus": self.modulus}
        if self.table is not None:
            out["table"] = list(self.table)
        return out


def preimages(table: Sequence[int]) -> dict[int, tuple[int, ...]]:
    """``{b: (a : table[a] == b)}`` ordered by ``b``."""
    out: dict[int, list[int]] = {}
    for a, b in enumerate(table):
        out.setdefault(b, []).append(a)
    return {b: tuple(out[b]) for b in sorted(out)}


# ---------------------------------------------------------------- compiled program

PERM, SHUFFLE, REVEAL, CONCEAL, BRANCH, JUMP, OUTPUT, HALT = range(8)


class Instr(NamedTuple):
    op: int
    arg: Any
    origin: int  # source line, 0 for built-ins
    label: str


class CompileError(ProtocolError):
    def __init__(self, problems: list[tuple[int, str]]):
        self.problems = problems
        text = "; ".join(f"line {ln}: {msg}" if ln else msg for ln, msg in problems)
        super().__init__(text)


def pattern_matches(pattern: str, suits: str) -> bool:
    return all(p == "*" or p == s for p, s in zip(pattern, suits))


def patterns_overlap(a: str, b: str) -> bool:
    return len(a) == len(b) and all(x == y or "*" in (x, y) for x, y in zip(a, b))


class _Compiler:
    def __init__(self, size: int):
        self.size = size
        self.code: list[Instr] = []
        self.problems: list[tuple[int, str]] = []

    def fail(self, line: int, msg: str):
        self.problems.append((line, msg))

    def emit(self, op, arg, line, label) -> int:
        self.code.append(Instr(op, arg, line, label))
        return len(self.code) - 1

    def positions(self, stmt, positions, min_count=1) -> Optional[tuple[int, ...]]:
        ps = tuple(range(1, self.size + 1)) if positions is None else tuple(positions)
        if len(ps) < min_count:
            self.fail(stmt.line, f"{stmt.to_text()!r} needs at least {min_count} position(s)")
            return None
        bad = [p for p in ps if not 1 <= p <= self.size]
        if bad:
            self.fail(stmt.line, f"position {bad[0]} outside 1..{self.size}")
            return None
        if len(set(ps)) != len(ps):
            self.fail(stmt.line, "repeated position")
            return None
        return ps

    def perm(self, perm: Permutation, up: frozenset, line: int, label: str) -> frozenset:
        if not perm.is_identity():
            self.emit(PERM, perm.images, line, label)
        return frozenset(perm.images[p] for p in up)

    def shuffle(self, perms, kind, up, line, label):
        moved = frozenset(i for p in perms for i, j in enumerate(p.images) if i != j)
        if moved & up:
            self.fail(line, f"{label!r} would shuffle face-up cards")
        self.emit(SHUFFLE, (tuple(p.images for p in perms), kind), line, label)

    def body(self, body, up: frozenset) -> tuple[frozenset, bool]:
        """Compile a block; return the face-up set after it and whether it outputs."""
        prev = None
        for idx, stmt in enumerate(body):
            line = stmt.line
            if prev is not None and isinstance(prev, st.OUTPUTS):
                self.fail(line, "statement after output is unreachable")
                return up, True
            if isinstance(stmt, st.BranchGroup):
                if not isinstance(prev, st.Reveal):
                    self.fail(line, "branch blocks must directly follow a reveal")
                    prev = stmt
                    continue
                up, done = self.branch(stmt, tuple(sorted(p - 1 for p in prev.positions)), up)
                if done:
                    if idx + 1 < len(body):
                        self.fail(body[idx + 1].line, "statement after exhaustive outputs is unreachable")
                    return up, True
                prev = stmt
                continue
            up = self.action(stmt, up)
            prev = stmt
        if prev is not None and isinstance(prev, st.OUTPUTS):
            return up, True
        return up, False

    def action(self, stmt, up: frozenset) -> frozenset:
        label = stmt.to_text() if not isinstance(stmt, st.BranchGroup) else "branch"
        line = stmt.line
        n = self.size
        if isinstance(stmt, st.Perm):
            if stmt.perm.size != n:
                self.fail(line, f"permutation acts on {stmt.perm.size} positions, deck has {n}")
                return up
            return self.perm(stmt.perm, up, line, label)
        if isinstance(stmt, st.Shuffle):
            if any(p.size != n for p in stmt.perms):
                self.fail(line, f"shuffle permutations must act on {n} positions")
                return up
            self.shuffle(tuple(dict.fromkeys(stmt.perms)), "shuffle", up, line, label)
            return up
        if isinstance(stmt, st.Shift):
            ps = self.positions(stmt, stmt.positions)
            if ps is None:
                return up
            r = stmt.amount if stmt.left else -stmt.amount
            return self.perm(Permutation.rotation(ps, r % len(ps), n), up, line, label)
        if isinstance(stmt, st.RandomCut):
            ps = self.positions(stmt, stmt.positions)
            if ps is not None:
                self.shuffle(random_cut(len(ps)).embed(ps, n).perms, "rcut", up, line, label)
            return up
        if isinstance(stmt, st.SectionCut):
            ps = self.positions(stmt, stmt.positions)
            if ps is not None:
                try:
                    cut = k_section_cut_for(stmt.sections, len(ps))
                except DomainError as exc:
                    self.fail(line, str(exc))
                    return up
                self.shuffle(cut.embed(ps, n).perms, "ksec", up, line, label)
            return up
        if isinstance(stmt, st.PartialCut):
            ps = self.positions(stmt, stmt.positions, min_count=2)
            if ps is not None:
                self.shuffle(partial_random_cut(n, ps).perms, "pcut", up, line, label)
            return up
        if isinstance(stmt, st.XorAll):
            ps = self.positions(stmt, stmt.positions, min_count=2)
            if ps is None:
                return up
            if len(ps) % 2:
                self.fail(line, "xorall needs whole commitments (an even number of cards)")
                return up
            regroup, cut, back = random_bit_xor(len(ps) // 2)
            up = self.perm(regroup.embed(ps, n), up, line, label + " [regroup]")
            self.shuffle(cut.embed(ps, n).perms, "xor", up, line, label)
            return self.perm(back.embed(ps, n), up, line, label + " [regroup back]")
        if isinstance(stmt, st.Reveal):
            ps = self.positions(stmt, stmt.positions)
            if ps is None:
                return up
            zero = tuple(sorted(p - 1 for p in ps))
            if up & set(zero):
                self.fail(line, "reveal of a card that is already face-up")
            self.emit(REVEAL, zero, line, label)
            return up | set(zero)
        if isinstance(stmt, st.Conceal):
            ps = self.positions(stmt, stmt.positions)
            if ps is None:
                return up
            zero = tuple(sorted(p - 1 for p in ps))
            if set(zero) - up:
                self.fail(line, "conceal of a card that is face-down")
            self.emit(CONCEAL, zero, line, label)
            return up - set(zero)
        if isinstance(stmt, st.OUTPUTS):
            ps = self.positions(stmt, stmt.positions)
            if ps is None:
                return up
            zero = tuple(p - 1 for p in ps)
            if stmt.visible and set(zero) - up:
                self.fail(line, "public output reads face-down cards")
            if not stmt.visible and set(zero) & up:
                self.fail(line, "hidden output includes face-up cards")
            if isinstance(stmt, (st.OutputCommitted, st.OutputBit)) and len(zero) != 2:
                self.fail(line, "a commitment output names exactly two positions")
            if isinstance(stmt, st.OutputCyclic) and len(stmt.pattern) != len(zero):
                self.fail(line, "cyclic pattern length differs from position count")
            if isinstance(stmt, st.OutputIndex) and len(stmt.table) != len(zero):
                self.fail(line, "index table length differs from position count")
            self.emit(OUTPUT, (stmt, zero), line, label)
            return up
        self.fail(line, f"unsupported statement {stmt!r}")
        return up

    def branch(self, group: st.BranchGroup, revealed: tuple[int, ...], up: frozenset):
        width = len(revealed)
        exact: dict[str, int] = {}
        wild: list[tuple[str, int]] = []
        at = self.emit(BRANCH, None, group.line, "branch")
        seen: list[str] = []
        jumps, ends = [], []
        for arm in group.arms:
            if len(arm.pattern) != width or set(arm.pattern) - set("CH*"):
                self.fail(arm.line, f"pattern {arm.pattern!r} does not fit a {width}-card reveal")
                continue
            if any(patterns_overlap(arm.pattern, other) for other in seen):
                self.fail(arm.line, f"pattern {arm.pattern!r} overlaps an earlier branch")
                continue
            seen.append(arm.pattern)
            start = len(self.code)
            if "*" in arm.pattern:
                wild.append((arm.pattern, start))
            else:
                exact[arm.pattern] = start
            arm_up, done = self.body(arm.body, up)
            if not done:
                jumps.append(self.emit(JUMP, None, arm.line, "end branch"))
                ends.append((arm.line, arm_up))
        end = len(self.code)
        for j in jumps:
            self.code[j] = self.code[j]._replace(arg=end)
        self.code[at] = self.code[at]._replace(arg=(revealed, exact, tuple(wild)))
        if not ends:
            return up, True
        first = ends[0][1]
        for line, arm_up in ends[1:]:
            if arm_up != first:
                self.fail(line, "branches leave different cards face-up")
        return first, False


@dataclass(frozen=True)
class Program:
    code: tuple[Instr, ...]
    size: int


def compile_body(body, size: int) -> Program:
    comp = _Compiler(size)
    _, done = comp.body(body, frozenset())
    if not done:
        comp.fail(0, "some path reaches the end without an output statement")
        comp.emit(HALT, None, 0, "halt")
    if comp.problems:
        raise CompileError(comp.problems)
    return Program(tuple(comp.code), size)


# ---------------------------------------------------------------- protocol


@dataclass(frozen=True)
class Protocol:
    """A card protocol: input layout, statement tree and the function it computes."""

    name: str
    params: tuple[tuple[str, Any], ...]
    arity: int
    modulus: int
    layout: tuple
    body: tuple
    function: FunctionSpec
    description: str = field(default="", compare=False)

    @property
    def card_count(self) -> int:
        return sum(item.width for item in self.layout)

    @cached_property
    def program(self) -> Program:
        return compile_body(self.body, self.card_count)

    @property
    def outputs_visible(self) -> bool:
        kinds = {ins.arg[0].visible for ins in self.program.code if ins.op == OUTPUT}
        if len(kinds) != 1:
            raise ProtocolError("protocol mixes public and hidden outputs")
        return kinds.pop()

    def params_json(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in self.params}

    def domain(self):
        return itertools.product(range(self.modulus), repeat=self.arity)

    def check_input(self, inputs: Sequence[int]) -> tuple[int, ...]:
        inputs = tuple(int(x) for x in inputs)
        if len(inputs) != self.arity:
            raise DomainError(f"{self.name} takes {self.arity} inputs, got {len(inputs)}")
        for x in inputs:
            if not 0 <= x < self.modulus:
                raise DomainError(f"input {x} outside 0..{self.modulus - 1}")
        return inputs

    def initial_deck(self, inputs: Sequence[int]) -> CardSequence:
        inputs = self.check_input(inputs)
        cards: list[Card] = []
        for item in self.layout:
            if isinstance(item, st.CommitInput):
                v = inputs[item.input - 1]
                if item.bit is not None:
                    v = (v >> item.bit) & 1
                elif v > 1:
                    raise DomainError(f"input {item.input} is committed as a bit but is {v}")
                cards.extend(encode_bit(v).cards)
            elif isinstance(item, st.EncodeInput):
                cards.extend(encode_int(inputs[item.input - 1], item.modulus, item.scheme).cards)
            else:
                cards.append(Card(item.suit))
        return CardSequence(cards)


def evaluate_output(stmt, positions: tuple[int, ...], deck: Sequence[Card]) -> int:
    """Value produced by an output statement on ``deck`` (0-based positions)."""
    cards = [deck[p] for p in positions]
    suits = "".join(c.suit.value for c in cards)
    if isinstance(stmt, st.OutputCyclic):
        doubled = stmt.pattern + stmt.pattern
        return int(len(suits) == len(stmt.pattern) and suits in doubled)
    if isinstance(stmt, st.OutputIndex):
        hits = [i for i, s in enumerate(suits) if s == stmt.suit.value]
        if len(hits) != 1:
            raise ProtocolError(f"expected exactly one {stmt.suit.value} among {suits}")
        return stmt.table[hits[0]]
    if isinstance(stmt, (st.OutputBit, st.OutputCommitted)):
        if suits not in ("CH", "HC"):
            raise ProtocolError(f"{suits} at output positions is not a commitment")
        return 0 if suits == "CH" else 1
    if isinstance(stmt, st.OutputEncoded):
        try:
            return decode_int(cards, stmt.scheme)
        except DomainError as exc:
            raise ProtocolError(str(exc)) from None
    raise ProtocolError(f"unknown output {stmt!r}")
