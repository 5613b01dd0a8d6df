"""Cards, card sequences, permutations and the deterministic deck actions.

Positions are 1-based on every public function of this module, matching the
usual way card protocols are written down.  ``Permutation`` keeps a 0-based
image table internally.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple, Sequence

from .errors import DomainError


class Suit(str, Enum):
    CLUB = "C"
    HEART = "H"

    @property
    def other(self) -> "Suit":
        return Suit.HEART if self is Suit.CLUB else Suit.CLUB


class Scheme(str, Enum):
    """Integer encoding scheme, named after the suit of the single odd card."""

    CLUB = "C"
    HEART = "H"

    @property
    def odd(self) -> Suit:
        return Suit(self.value)


class Card(NamedTuple):
    suit: Suit
    face_up: bool = False

    def flipped(self) -> "Card":
        return Card(self.suit, not self.face_up)

    def render(self, peek: bool = False) -> str:
        if self.face_up:
            return self.suit.value
        return self.suit.value.lower() if peek else "?"


class CardSequence(tuple):
    """An immutable row of cards.  Subclasses ``tuple`` so it hashes cheaply."""

    def __new__(cls, cards: Iterable[Card] = ()):
        cards = tuple(cards)
        if not cards:
            raise DomainError("a card sequence holds at least one card")
        return super().__new__(cls, cards)

    @classmethod
    def face_down(cls, suits: str) -> "CardSequence":
        """Build a face-down row from a suit string such as ``"CHC"``."""
        return cls(Card(Suit(s)) for s in suits)

    @property
    def suits(self) -> str:
        return "".join(c.suit.value for c in self)

    def suit_counts(self) -> tuple[int, int]:
        """(club count, heart count)."""
        clubs = sum(1 for c in self if c.suit is Suit.CLUB)
        return clubs, len(self) - clubs

    def render(self, peek: bool = False) -> str:
        return "".join(c.render(peek) for c in self)

    def __repr__(self) -> str:
        return f"CardSequence({self.render(peek=True)!r})"


class Observation(NamedTuple):
    """Suits seen when cards are turned face-up, in ascending position order."""

    positions: tuple[int, ...]
    suits: str

    def __str__(self) -> str:
        return f"{format_positions(self.positions)}={self.suits}"


def format_positions(positions: Iterable[int]) -> str:
    """Render positions compactly, folding ascending runs of three or more into ``a..b``."""
    parts, i, ps = [], 0, list(positions)
    while i < len(ps):
        j = i
        while j + 1 < len(ps) and ps[j + 1] == ps[j] + 1:
            j += 1
        if j - i >= 2:
            parts.append(f"{ps[i]}..{ps[j]}")
            i = j + 1
        else:
            parts.append(str(ps[i]))
            i += 1
    return ",".join(parts)


_CYCLE_RE = re.compile(r"\(([^()]*)\)")


@dataclass(frozen=True)
class Permutation:
    """A rearrangement of ``size`` positions.

    ``images[i]`` is the 0-based position the card at position ``i`` moves to.
    A cycle ``(i j k)`` sends the card at ``i`` to ``j``, ``j`` to ``k`` and
    ``k`` back to ``i``.
    """

    images: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.images) != list(range(len(self.images))):
            raise DomainError(f"not a bijection: {self.images}")

    @property
    def size(self) -> int:
        return len(self.images)

    @classmethod
    def identity(cls, size: int) -> "Permutation":
        return cls(tuple(range(size)))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]], size: int) -> "Permutation":
        images = list(range(size))
        seen: set[int] = set()
        for cycle in cycles:
            for p in cycle:
                if not 1 <= p <= size:
                    raise DomainError(f"position {p} outside 1..{size}")
                if p in seen:
                    raise DomainError(f"position {p} appears in more than one cycle")
                seen.add(p)
            for a, b in zip(cycle, tuple(cycle[1:]) + tuple(cycle[:1])):
                images[a - 1] = b - 1
        return cls(tuple(images))

    @classmethod
    def parse(cls, text: str, size: int) -> "Permutation":
        """Parse cycle notation such as ``(1 6 4)(2 5)`` or ``id``."""
        text = text.strip()
        if text == "id":
            return cls.identity(size)
        if not text or _CYCLE_RE.sub("", text).strip():
            raise DomainError(f"malformed cycle notation: {text!r}")
        cycles = []
        for body in _CYCLE_RE.findall(text):
            parts = body.replace(",", " ").split()
            if not parts:
                raise DomainError(f"empty cycle in {text!r}")
            try:
                cycles.append(tuple(int(p) for p in parts))
            except ValueError:
                raise DomainError(f"non-integer position in {text!r}") from None
        return cls.from_cycles(cycles, size)

    @classmethod
    def rotation(cls, positions: Sequence[int], r: int, size: int) -> "Permutation":
        """Left-rotate the cards at ``positions`` (1-based, in listed order) by ``r``."""
        images = list(range(size))
        m = len(positions)
        for i, p in enumerate(positions):
            images[p - 1] = positions[(i - r) % m] - 1
        return cls(tuple(images))

    def cycles(self) -> list[tuple[int, ...]]:
        """Nontrivial cycles, 1-based, each starting at its smallest element."""
        out, seen = [], set()
        for start in range(self.size):
            if start in seen or self.images[start] == start:
                continue
            cycle, i = [], start
            while i not in seen:
                seen.add(i)
                cycle.append(i + 1)
                i = self.images[i]
            out.append(tuple(cycle))
        return out

    def __str__(self) -> str:
        cycles = self.cycles()
        if not cycles:
            return "id"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cycles)

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images))

    def then(self, other: "Permutation") -> "Permutation":
        """Apply ``self`` first and ``other`` second."""
        if other.size != self.size:
            raise DomainError("permutation sizes differ")
        return Permutation(tuple(other.images[j] for j in self.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def __pow__(self, r: int) -> "Permutation":
        result = Permutation.identity(self.size)
        base = self if r >= 0 else self.inverse()
        for _ in range(abs(r)):
            result = result.then(base)
        return result

    def embed(self, positions: Sequence[int], size: int) -> "Permutation":
        """Lift a permutation of ``len(positions)`` local slots onto a larger deck."""
        if len(positions) != self.size:
            raise DomainError("embedding needs one position per slot")
        images = list(range(size))
        for i, p in enumerate(positions):
            images[p - 1] = positions[self.images[i]] - 1
        return Permutation(tuple(images))


def apply_perm(seq: Sequence[Card], sigma: Permutation) -> CardSequence:
    if sigma.size != len(seq):
        raise DomainError(f"permutation on {sigma.size} positions applied to {len(seq)} cards")
    out = [None] * len(seq)
    for i, j in enumerate(sigma.images):
        out[j] = seq[i]
    return CardSequence(out)


def left_shift(seq: Sequence[Card], r: int) -> CardSequence:
    k = len(seq)
    return apply_perm(seq, Permutation.rotation(range(1, k + 1), r % k, k))


def right_shift(seq: Sequence[Card], r: int) -> CardSequence:
    k = len(seq)
    return apply_perm(seq, Permutation.rotation(range(1, k + 1), -r % k, k))


def turn_over(seq: Sequence[Card], positions: Iterable[int]) -> tuple[CardSequence, Observation]:
    """Flip the cards at ``positions``; report the suits of cards now face-up."""
    positions = sorted(set(positions))
    cards = list(seq)
    for p in positions:
        if not 1 <= p <= len(cards):
            raise DomainError(f"position {p} outside 1..{len(cards)}")
        cards[p - 1] = cards[p - 1].flipped()
    shown = tuple(p for p in positions if cards[p - 1].face_up)
    obs = Observation(shown, "".join(cards[p - 1].suit.value for p in shown))
    return CardSequence(cards), obs


@dataclass(frozen=True)
class Commitment:
    """Two face-down cards; club-heart is 0 and heart-club is 1."""

    cards: CardSequence

    def __post_init__(self):
        if len(self.cards) != 2 or self.cards[0].suit is self.cards[1].suit:
            raise DomainError(f"not a commitment: {self.cards!r}")

    @property
    def value(self) -> int:
        return 0 if self.cards[0].suit is Suit.CLUB else 1


def encode_bit(b: int) -> Commitment:
    if b not in (0, 1):
        raise DomainError(f"bit must be 0 or 1, got {b!r}")
    return Commitment(CardSequence.face_down("CH" if b == 0 else "HC"))


def decode_bit(cards) -> int:
    if isinstance(cards, Commitment):
        return cards.value
    return Commitment(CardSequence(cards)).value


@dataclass(frozen=True)
class IntEncoding:
    """``value`` in Z/kZ as ``modulus`` cards with one odd card at index ``value``."""

    scheme: Scheme
    modulus: int
    value: int

    def __post_init__(self):
        if self.modulus < 2:
            raise DomainError("modulus must be at least 2")
        if not 0 <= self.value < self.modulus:
            raise DomainError(f"{self.value} is not in Z/{self.modulus}Z")

    @property
    def cards(self) -> CardSequence:
        odd = self.scheme.odd
        return CardSequence(
            Card(odd if i == self.value else odd.other) for i in range(self.modulus)
        )


def encode_int(a: int, k: int, scheme: Scheme) -> IntEncoding:
    return IntEncoding(Scheme(scheme), k, a)


def decode_int(cards: Sequence[Card], scheme: Scheme) -> int:
    odd = Scheme(scheme).odd
    hits = [i for i, c in enumerate(cards) if c.suit is odd]
    if len(cards) < 2 or len(hits) != 1:
        suits = "".join(c.suit.value for c in cards)
        raise DomainError(f"{suits!r} is not a {Scheme(scheme).name.lower()}-scheme encoding")
    return hits[0]
