"""Abstract syntax shared by built-in protocols and ``.cardp`` scripts.

Every statement renders back to the script surface through ``to_text``.
Positions are 1-based; ``None`` means "the whole deck".  Source line numbers
ride along for diagnostics but never take part in equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .deck import Permutation, Scheme, Suit, format_positions

Positions = Optional[tuple[int, ...]]


def _opt(positions: Positions) -> str:
    return "" if positions is None else " " + format_positions(positions)


# ---------------------------------------------------------------- layout


@dataclass(frozen=True)
class CommitInput:
    """Commitment of an input bit; ``bit`` selects a binary digit of a Z/kZ input."""

    input: int
    bit: Optional[int] = None

    def to_text(self) -> str:
        return f"commit {self.input}" + ("" if self.bit is None else f".{self.bit}")

    @property
    def width(self) -> int:
        return 2


@dataclass(frozen=True)
class EncodeInput:
    input: int
    scheme: Scheme
    modulus: int

    def to_text(self) -> str:
        return f"encode {self.input} {self.scheme.value}"

    @property
    def width(self) -> int:
        return self.modulus


@dataclass(frozen=True)
class FreeCard:
    suit: Suit

    def to_text(self) -> str:
        return f"card {self.suit.value}"

    @property
    def width(self) -> int:
        return 1


LayoutItem = Union[CommitInput, EncodeInput, FreeCard]


# ---------------------------------------------------------------- actions


@dataclass(frozen=True)
class Perm:
    perm: Permutation
    line: int = field(default=0, compare=False)

    def to_text(self) -> str:
        return f"perm {self.perm}"


@dataclass(frozen=True)
class Shuffle:
    perms: tuple[Permutation, ...]
    line: int = field(default=0, compare=False)

    def to_text(self) -> str:
        return "shuffle {" + ", ".join(str(p) for p in self.perms) + "}"


@dataclass(frozen=True)
class Shift:
    amount: int
    left: bool = True
    positions: Positions = None
    line: int = field(default=0, compare=False)

    def to_text(self) -> str:
        return f"{'lshift' if self.left else 'rshift'} {self.amount}{_opt(self.positions)}"


@dataclass(frozen=True)
class RandomCut:
    positions: Positions = None
    line: int = field(default=0, compare=False)

    def to_text(self) -> str:
        return "rcut" + _opt(self.positions)


@dataclass(frozen=True)
class SectionCut:
    sections: int
    positions: Positions = None
    line: int = field(default=0, compare=False)

    def to_text(self) -> str:
        return f"ksec {self.sections}{_opt(self.positions)}"


@dataclass(frozen=True)
class XorAll:
    """Random bit XOR over the adjacent commitments at ``positions``."""

    positions: Positions = None
    line: int = field(default=0, compare=False)

    def to_text(self) -> str:
        return "xorall" + _opt(self.positions)


@dataclass(frozen=True)
class PartialCut:
    positions: tuple[int, ...]
    line: int = field(default=0, compare=False)

    def to_text(self) -> str:
        # pcut keeps listed order, so never fold into ranges
        return "pcut " + ",".join(map(str, self.positions))


@dataclass(frozen=True)
class Reveal:
    positions: tuple[int, ...]
    line: int = field(default=0, compare=False)

    def to_text(self) -> str:
        return "reveal " + format_positions(self.positions)


@dataclass(frozen=True)
class Conceal:
    positions: tuple[int, ...]
    line: int = field(default=0, compare=False)

    def to_text(self) -> str:
        return "conceal " + format_positions(self.positions)


@dataclass(frozen=True)
class Arm:
    pattern: str
    body: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BranchGroup:
    """Consecutive ``branch`` blocks keyed on the most recent reveal."""

    arms: tuple[Arm, ...]
    line: int = field(default=0, compare=False)

    def to_lines(self, indent: int) -> list[str]:
        pad = "  " * indent
        lines = []
        for arm in self.arms:
            if not arm.body:
                lines.append(f"{pad}branch {arm.pattern} {{ }}")
                continue
            lines.append(f"{pad}branch {arm.pattern} {{")
            lines.extend(render_body(arm.body, indent + 1))
            lines.append(pad + "}")
        return lines


# ---------------------------------------------------------------- outputs


@dataclass(frozen=True)
class OutputCyclic:
    """Public 1 iff the face-up cards read as a rotation of ``pattern``, else 0."""

    pattern: str
    positions: tuple[int, ...]
    line: int = field(default=0, compare=False)
    visible = True

    def to_text(self) -> str:
        return f"output public cyclic {self.pattern} {format_positions(self.positions)}"


@dataclass(frozen=True)
class OutputIndex:
    """Public ``table[t]`` where ``t`` is the index of the lone ``suit`` card."""

    suit: Suit
    positions: tuple[int, ...]
    table: tuple[int, ...]
    line: int = field(default=0, compare=False)
    visible = True

    def to_text(self) -> str:
        table = ",".join(map(str, self.table))
        return f"output public index {self.suit.value} {format_positions(self.positions)} -> {table}"


@dataclass(frozen=True)
class OutputBit:
    positions: tuple[int, ...]
    line: int = field(default=0, compare=False)
    visible = True

    def to_text(self) -> str:
        return "output public bit " + " ".join(map(str, self.positions))


@dataclass(frozen=True)
class OutputCommitted:
    positions: tuple[int, ...]
    line: int = field(default=0, compare=False)
    visible = False

    def to_text(self) -> str:
        return "output committed " + " ".join(map(str, self.positions))


@dataclass(frozen=True)
class OutputEncoded:
    scheme: Scheme
    positions: tuple[int, ...]
    line: int = field(default=0, compare=False)
    visible = False

    def to_text(self) -> str:
        return f"output encoded {self.scheme.value} {format_positions(self.positions)}"


OUTPUTS = (OutputCyclic, OutputIndex, OutputBit, OutputCommitted, OutputEncoded)


def render_body(body, indent: int = 0) -> list[str]:
    pad = "  " * indent
    lines = []
    for stmt in body:
        if isinstance(stmt, BranchGroup):
            lines.extend(stmt.to_lines(indent))
        else:
            lines.append(pad + stmt.to_text())
    return lines
